//! Equivariant maps from invariant generators: append an output slot, keep
//! the generators that use it exactly once, and delete that node. The open
//! legs left behind carry the output.
//!
//! Also the tensor-product coupling of two spherical vectors through a
//! Clebsch-Gordan tensor, with a check that the projector triangle network
//! reproduces the same coupling.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::invgen::{
    enumerate_candidates, independent_columns, probe_bindings, probe_columns, Signature, SlotSpec, DEFAULT_PROBES,
    DEFAULT_SEED, DEFAULT_TOL,
};
use crate::network::{contract_network, Bindings, NodeKind, TensorNetwork};
use crate::so3::{self, Rotation};
use crate::tensor::{contract, Tensor};

/// One basis map: an open network plus the closed generator it came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivariantNetwork {
    #[serde(flatten)]
    pub net: TensorNetwork,
    /// Copy counts of the input slots.
    pub degree: Vec<usize>,
    pub uses_epsilon: bool,
    pub source: TensorNetwork,
    /// Slot index of the output in `source`.
    pub output_slot: usize,
}

impl EquivariantNetwork {
    /// The node of `source` that was removed.
    pub fn output_node(&self) -> usize {
        self.source
            .nodes
            .iter()
            .position(|k| matches!(k, NodeKind::Input { slot, .. } if *slot == self.output_slot))
            .expect("source contains its output slot")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivariantBasis {
    pub signature: Signature,
    pub out_rep: SlotSpec,
    pub max_degree: usize,
    pub seed: u64,
    #[serde(rename = "generators")]
    pub elements: Vec<EquivariantNetwork>,
}

impl EquivariantBasis {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Basis of equivariant maps `sig_in -> out_rep` with at most `max_degree`
/// input copies, deduplicated as maps on random probes.
pub fn equivariant_basis(sig_in: &Signature, out_rep: &SlotSpec, max_degree: usize) -> Result<EquivariantBasis> {
    equivariant_basis_seeded(sig_in, out_rep, max_degree, DEFAULT_SEED)
}

pub fn equivariant_basis_seeded(
    sig_in: &Signature,
    out_rep: &SlotSpec,
    max_degree: usize,
    seed: u64,
) -> Result<EquivariantBasis> {
    let output_slot = sig_in.len();
    let full = Signature::new(sig_in.slots.iter().cloned().chain([out_rep.clone()]).collect())?;
    let candidates = enumerate_candidates(&full, sig_in.len(), 0, max_degree, 1)?;
    let mut elements = Vec::with_capacity(candidates.len());
    for g in candidates {
        let out_node = g
            .net
            .nodes
            .iter()
            .position(|k| matches!(k, NodeKind::Input { slot, .. } if *slot == output_slot))
            .expect("output slot appears once");
        let mut degree = g.degree;
        degree.pop();
        elements.push(EquivariantNetwork {
            net: g.net.remove_node(out_node)?,
            degree,
            uses_epsilon: g.uses_epsilon,
            source: g.net,
            output_slot,
        });
    }
    let probes = probe_bindings(sig_in, DEFAULT_PROBES.max(2 * elements.len()), seed);
    let nets: Vec<_> = elements.iter().map(|e| &e.net).collect();
    let keep = independent_columns(&probe_columns(&nets, &probes)?, DEFAULT_TOL);
    let elements = keep.into_iter().map(|j| elements[j].clone()).collect();
    Ok(EquivariantBasis { signature: sig_in.clone(), out_rep: out_rep.clone(), max_degree, seed, elements })
}

/// Output of one basis map; axes follow the removed node's leg order.
pub fn evaluate_basis_element(e: &EquivariantNetwork, bind: &Bindings) -> Result<Tensor> {
    contract_network(&e.net, bind)
}

/// `sum_j coeffs[j] * values[j]`.
pub fn combine(values: &[Tensor], coeffs: &[f64]) -> Result<Tensor> {
    if values.len() != coeffs.len() {
        return Err(Error::ShapeMismatch(format!("{} values but {} coefficients", values.len(), coeffs.len())));
    }
    let first = values.first().ok_or_else(|| Error::ShapeMismatch("nothing to combine".into()))?;
    let mut out = Tensor::zeros(first.shape().to_vec());
    for (v, &c) in values.iter().zip(coeffs) {
        out.axpy(c, v)?;
    }
    Ok(out)
}

/// Full contraction of an output value with a dual variable.
pub fn pair_down(value: &Tensor, y: &Tensor) -> Result<f64> {
    if value.shape() != y.shape() {
        return Err(Error::ShapeMismatch(format!("pairing {:?} with {:?}", value.shape(), y.shape())));
    }
    value.dot(y)
}

/// Largest relative equivariance violation `|t(g.x) - g.t(x)| / (1 + |t(x)|)`
/// per basis element over `rotations` random rotations.
pub fn equivariance_violations(basis: &EquivariantBasis, rotations: usize, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trials: Vec<(Rotation, Bindings, Bindings)> = (0..rotations)
        .map(|_| {
            let r = Rotation::random(&mut rng);
            let x = basis.signature.random_bindings(&mut rng);
            let gx = basis.signature.act(&r, &x)?;
            Ok((r, x, gx))
        })
        .collect::<Result<_>>()?;
    basis
        .elements
        .par_iter()
        .map(|e| {
            let mut worst: f64 = 0.0;
            for (r, x, gx) in &trials {
                let t = evaluate_basis_element(e, x)?;
                let lhs = evaluate_basis_element(e, gx)?;
                let rhs = basis.out_rep.act(r, &t)?;
                worst = worst.max(lhs.sub(&rhs)?.norm() / (1.0 + t.norm()));
            }
            Ok(worst)
        })
        .collect()
}

/// `c_t = sum_{rs} C_{rst} a_r b_s`. The flag is false, and the output zero,
/// when `(la, lb, lc)` violates the triangle inequality.
pub fn tp_couple(a: &Tensor, la: usize, b: &Tensor, lb: usize, lc: usize) -> Result<(Tensor, bool)> {
    if a.shape() != [2 * la + 1] || b.shape() != [2 * lb + 1] {
        return Err(Error::ShapeMismatch(format!(
            "coupling types ({la},{lb}) got shapes {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let c = so3::cg(la, lb, lc)?;
    if !c.valid {
        return Ok((Tensor::zeros(vec![2 * lc + 1]), false));
    }
    let ab = contract(a, &c.c, &[(0, 0)])?;
    Ok((contract(b, &ab, &[(0, 0)])?, true))
}

/// The three-projector triangle network coupling `la (x) lb -> lc`, with open
/// legs `(a, b, c)`. Odd `la + lb + lc` routes one leg of each projector
/// through an Epsilon node.
pub fn triangle_network(la: usize, lb: usize, lc: usize) -> Result<TensorNetwork> {
    let odd = (la + lb + lc) % 2 == 1;
    let shift = usize::from(odd);
    let (ea, eb, ec) = (la.checked_sub(shift), lb.checked_sub(shift), lc.checked_sub(shift));
    let (Some(ea), Some(eb), Some(ec)) = (ea, eb, ec) else {
        return Err(Error::InvalidType(format!("no epsilon triangle for ({la},{lb},{lc})")));
    };
    let half = |x: usize, y: usize, z: usize| (x + y).checked_sub(z).map(|d| d / 2);
    let (Some(lab), Some(lbc), Some(lca)) = (half(ea, eb, ec), half(eb, ec, ea), half(ec, ea, eb)) else {
        return Err(Error::InvalidType(format!("({la},{lb},{lc}) violates the triangle inequality")));
    };
    let mut net = TensorNetwork::new();
    let pa = net.add_node(NodeKind::Projector { l: la });
    let pb = net.add_node(NodeKind::Projector { l: lb });
    let pc = net.add_node(NodeKind::Projector { l: lc });
    let mut next = [1usize; 3];
    let mut take = |p: usize| {
        next[p] += 1;
        (p, next[p] - 1)
    };
    for _ in 0..lab {
        let (x, y) = (take(pa), take(pb));
        net.connect(x, y);
    }
    for _ in 0..lbc {
        let (x, y) = (take(pb), take(pc));
        net.connect(x, y);
    }
    for _ in 0..lca {
        let (x, y) = (take(pc), take(pa));
        net.connect(x, y);
    }
    if odd {
        let e = net.add_node(NodeKind::Epsilon);
        for (k, p) in [pa, pb, pc].into_iter().enumerate() {
            let leg = take(p);
            net.connect(leg, (e, k));
        }
    }
    net.open = vec![(pa, 0), (pb, 0), (pc, 0)];
    Ok(net)
}

/// Proportionality factor between the triangle network and the CG tensor.
pub fn tp_network_equals_cg(la: usize, lb: usize, lc: usize) -> Result<f64> {
    let c_net = contract_network(&triangle_network(la, lb, lc)?, &Bindings::new())?;
    let c = so3::cg(la, lb, lc)?;
    let kappa = c_net.dot(&c.c)? / c.c.dot(&c.c)?;
    let mut resid = c_net.clone();
    resid.axpy(-kappa, &c.c)?;
    let residual = resid.norm();
    if kappa.abs() < 1e-12 || residual > 1e-9 * c_net.norm() {
        return Err(Error::ProportionalityFailure { kappa, residual });
    }
    Ok(kappa)
}

/// Human-readable listing of a network's nodes, edges and open legs.
pub fn formula_sketch(net: &TensorNetwork) -> String {
    let mut s = String::new();
    for (i, k) in net.nodes.iter().enumerate() {
        let name = match k {
            NodeKind::Input { slot, copy } => format!("x{slot}#{copy}"),
            NodeKind::Delta => "delta".into(),
            NodeKind::Epsilon => "eps".into(),
            NodeKind::Projector { l } => format!("P{l}"),
            NodeKind::SumProjector { types } => {
                format!("P[{}]", types.iter().map(|t| t.to_string()).collect::<Vec<_>>().join("+"))
            }
        };
        let _ = write!(s, "{}n{i}={name}", if i == 0 { "" } else { " " });
    }
    s.push_str(" |");
    for ((a, la), (b, lb)) in &net.edges {
        let _ = write!(s, " n{a}.{la}-n{b}.{lb}");
    }
    if !net.open.is_empty() {
        s.push_str(" | open");
        for (n, l) in &net.open {
            let _ = write!(s, " n{n}.{l}");
        }
    }
    s
}
