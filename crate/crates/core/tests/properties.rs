use std::sync::OnceLock;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use so3tengen::equivar::tp_couple;
use so3tengen::invgen::{canonical_key, enumerate_candidates, GeneratorNetwork, Signature};
use so3tengen::network::{contract_network_with, ContractionOrder};
use so3tengen::so3::{self, irrep_matrix, multiplicity, random_rotation, Rotation};
use so3tengen::tensor::{delta, epsilon};
use so3tengen::{contract_network, Bindings, NodeKind, Tensor, TensorNetwork};

const SIGNATURES: [&str; 4] = ["cart:2,cart:1", "cart:1,cart:1,cart:1", "sph:2,cart:1", "cart:2,cart:2"];

fn pool(i: usize) -> &'static (Signature, Vec<GeneratorNetwork>) {
    static POOLS: OnceLock<Vec<(Signature, Vec<GeneratorNetwork>)>> = OnceLock::new();
    &POOLS.get_or_init(|| {
        SIGNATURES
            .iter()
            .map(|s| {
                let sig: Signature = s.parse().unwrap();
                let gens = enumerate_candidates(&sig, sig.len(), 1, 3, 1).unwrap();
                (sig, gens)
            })
            .collect()
    })[i]
}

fn node_tensor(kind: &NodeKind, bind: &Bindings) -> Tensor {
    match kind {
        NodeKind::Input { slot, .. } => bind.get(*slot).unwrap().clone(),
        NodeKind::Delta => delta(),
        NodeKind::Epsilon => epsilon(),
        NodeKind::Projector { l } => so3::projector(*l).unwrap().tensor().clone(),
        NodeKind::SumProjector { types } => so3::sum_projector(types).unwrap().as_ref().clone(),
    }
}

/// Sums the product of node entries over every assignment of edge indices.
fn naive_contract(net: &TensorNetwork, bind: &Bindings) -> Tensor {
    let tensors: Vec<Tensor> = net.nodes.iter().map(|k| node_tensor(k, bind)).collect();
    // label per (node, leg): edge variables first, then open variables
    let mut label: Vec<Vec<usize>> = tensors.iter().map(|t| vec![usize::MAX; t.rank()]).collect();
    let mut extents = Vec::new();
    for &((a, la), (b, lb)) in &net.edges {
        label[a][la] = extents.len();
        label[b][lb] = extents.len();
        extents.push(tensors[a].shape()[la]);
    }
    let n_edge = extents.len();
    for &(a, la) in &net.open {
        label[a][la] = extents.len();
        extents.push(tensors[a].shape()[la]);
    }
    let out_shape: Vec<usize> = extents[n_edge..].to_vec();
    let mut out = Tensor::zeros(out_shape);
    let total: usize = extents.iter().product();
    let mut idx = vec![0usize; extents.len()];
    for _ in 0..total {
        let mut prod = 1.0;
        for (t, labels) in tensors.iter().zip(&label) {
            let at: Vec<usize> = labels.iter().map(|&v| idx[v]).collect();
            prod *= t.get(&at);
            if prod == 0.0 {
                break;
            }
        }
        let o = &idx[n_edge..];
        let cur = out.get(o);
        out.set(o, cur + prod);
        for k in (0..idx.len()).rev() {
            idx[k] += 1;
            if idx[k] < extents[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    out
}

fn close(a: &Tensor, b: &Tensor, tol: f64) -> bool {
    a.shape() == b.shape() && a.sub(b).unwrap().max_abs() <= tol * (1.0 + a.max_abs())
}

fn relabel(net: &TensorNetwork, seed: u64) -> TensorNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..net.nodes.len()).collect();
    perm.shuffle(&mut rng);
    let mut nodes = vec![NodeKind::Delta; net.nodes.len()];
    for (old, &new) in perm.iter().enumerate() {
        nodes[new] = net.nodes[old].clone();
    }
    let mut edges: Vec<_> = net
        .edges
        .iter()
        .map(|&((a, la), (b, lb))| if rng.gen_bool(0.5) { ((perm[b], lb), (perm[a], la)) } else { ((perm[a], la), (perm[b], lb)) })
        .collect();
    edges.shuffle(&mut rng);
    TensorNetwork { nodes, edges, open: net.open.iter().map(|&(a, l)| (perm[a], l)).collect() }
}

use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn contraction_order_does_not_matter(sig_i in 0usize..4, pick in any::<usize>(), seed in any::<u64>()) {
        let (sig, gens) = pool(sig_i);
        let g = &gens[pick % gens.len()];
        let bind = sig.random_bindings(&mut ChaCha8Rng::seed_from_u64(seed));
        let a = contract_network(&g.net, &bind).unwrap();
        let b = contract_network_with(&g.net, &bind, ContractionOrder::Random(seed)).unwrap();
        prop_assert!(close(&a, &b, 1e-10));
    }

    #[test]
    fn contraction_matches_naive_sum(sig_i in 0usize..4, pick in any::<usize>(), seed in any::<u64>()) {
        let (sig, gens) = pool(sig_i);
        let g = &gens[pick % gens.len()];
        prop_assume!(g.net.edges.len() <= 8);
        let bind = sig.random_bindings(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(close(&contract_network(&g.net, &bind).unwrap(), &naive_contract(&g.net, &bind), 1e-10));
    }

    #[test]
    fn open_networks_match_naive_sum(sig_i in 0usize..4, pick in any::<usize>(), node in any::<usize>(), seed in any::<u64>()) {
        let (sig, gens) = pool(sig_i);
        let g = &gens[pick % gens.len()];
        let open = g.net.remove_node(node % g.net.nodes.len()).unwrap();
        prop_assume!(open.edges.len() + open.open.len() <= 8);
        let bind = sig.random_bindings(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(close(&contract_network(&open, &bind).unwrap(), &naive_contract(&open, &bind), 1e-10));
    }

    #[test]
    fn removing_an_input_and_pairing_it_back(sig_i in 0usize..4, pick in any::<usize>(), which in any::<usize>(), seed in any::<u64>()) {
        let (sig, gens) = pool(sig_i);
        let g = &gens[pick % gens.len()];
        let inputs: Vec<usize> = (0..g.net.nodes.len())
            .filter(|&i| matches!(g.net.nodes[i], NodeKind::Input { .. }))
            .collect();
        let k = inputs[which % inputs.len()];
        let NodeKind::Input { slot, .. } = g.net.nodes[k] else { unreachable!() };
        let bind = sig.random_bindings(&mut ChaCha8Rng::seed_from_u64(seed));
        let full = contract_network(&g.net, &bind).unwrap().as_scalar().unwrap();
        let grad = contract_network(&g.net.remove_node(k).unwrap(), &bind).unwrap();
        let paired = grad.dot(bind.get(slot).unwrap()).unwrap();
        prop_assert!((paired - full).abs() <= 1e-10 * (1.0 + full.abs()));
    }

    #[test]
    fn canonical_key_ignores_labelling(sig_i in 0usize..4, pick in any::<usize>(), seed in any::<u64>()) {
        let (_, gens) = pool(sig_i);
        let g = &gens[pick % gens.len()];
        prop_assert_eq!(canonical_key(&g.net), canonical_key(&relabel(&g.net, seed)));
    }

    #[test]
    fn generators_are_invariant(sig_i in 0usize..4, pick in any::<usize>(), seed in any::<u64>()) {
        let (sig, gens) = pool(sig_i);
        let g = &gens[pick % gens.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bind = sig.random_bindings(&mut rng);
        let r = Rotation::random(&mut rng);
        let a = contract_network(&g.net, &bind).unwrap().as_scalar().unwrap();
        let b = contract_network(&g.net, &sig.act(&r, &bind).unwrap()).unwrap().as_scalar().unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
    }

    #[test]
    fn tensor_product_is_equivariant(la in 0usize..4, lb in 0usize..4, lc in 0usize..7, seed in any::<u64>()) {
        prop_assume!(so3::triangle(la, lb, lc));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Tensor::from_fn(vec![2 * la + 1], |_| rng.gen_range(-1.0..1.0));
        let b = Tensor::from_fn(vec![2 * lb + 1], |_| rng.gen_range(-1.0..1.0));
        let r = random_rotation(seed);
        let (c, ok) = tp_couple(&a, la, &b, lb, lc).unwrap();
        prop_assert!(ok);
        let ra = irrep_matrix(&r, la).unwrap().apply(&a).unwrap();
        let rb = irrep_matrix(&r, lb).unwrap().apply(&b).unwrap();
        let (rc, _) = tp_couple(&ra, la, &rb, lb, lc).unwrap();
        let want = irrep_matrix(&r, lc).unwrap().apply(&c).unwrap();
        prop_assert!(rc.sub(&want).unwrap().norm() <= 1e-9 * (1.0 + c.norm()));
    }

    #[test]
    fn permutations_compose(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = Tensor::from_fn(vec![2, 3, 4], |_| rng.gen_range(-1.0..1.0));
        let mut p: Vec<usize> = (0..3).collect();
        p.shuffle(&mut rng);
        let mut inv = vec![0; 3];
        for (k, &x) in p.iter().enumerate() {
            inv[x] = k;
        }
        prop_assert_eq!(t.permute(&p).unwrap().permute(&inv).unwrap(), t);
    }
}

#[test]
fn multiplicities_sum_to_the_full_dimension() {
    for l in 1..=8u32 {
        let total: u64 = (0..=l).map(|s| (2 * u64::from(s) + 1) * multiplicity(l, s).unwrap()).sum();
        assert_eq!(total, 3u64.pow(l));
    }
}

#[test]
fn naive_oracle_sanity() {
    // x . y through an explicit delta
    let mut net = TensorNetwork::new();
    let x = net.add_node(NodeKind::Input { slot: 0, copy: 0 });
    let y = net.add_node(NodeKind::Input { slot: 1, copy: 0 });
    let d = net.add_node(NodeKind::Delta);
    net.connect((x, 0), (d, 0));
    net.connect((d, 1), (y, 0));
    let bind = Bindings::new().with(0, Tensor::vector(&[1.0, 2.0, 3.0])).with(1, Tensor::vector(&[4.0, 5.0, 6.0]));
    assert_eq!(naive_contract(&net, &bind).as_scalar(), Some(32.0));
    assert_eq!(contract_network(&net, &bind).unwrap().as_scalar(), Some(32.0));
}
