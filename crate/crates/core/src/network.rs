//! Tensor networks: typed nodes, leg-to-leg edges and an ordered list of open
//! legs, plus the contraction engine.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::so3;
use crate::tensor::{self, contract, Tensor};

/// A leg of a node: `(node index, leg index)`.
pub type Endpoint = (usize, usize);

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    /// One copy of an input slot.
    Input { slot: usize, copy: usize },
    Delta,
    Epsilon,
    /// `P_l`: leg 0 has extent 2l+1, legs 1..=l have extent 3.
    Projector { l: usize },
    /// Projector onto a direct sum of irreducible types; leg 0 carries the
    /// concatenated components, the remaining legs have extent 3.
    SumProjector { types: Vec<usize> },
}

impl NodeKind {
    /// Number of legs for every kind except `Input`, whose arity comes from
    /// the slot declaration.
    pub fn fixed_arity(&self) -> Option<usize> {
        match self {
            NodeKind::Input { .. } => None,
            NodeKind::Delta => Some(2),
            NodeKind::Epsilon => Some(3),
            NodeKind::Projector { l } => Some(l + 1),
            NodeKind::SumProjector { types } => Some(so3::sum_projector_rank(types) + 1),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct NodeRecord {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    slot: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    copy: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    l: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    sum: Option<Vec<usize>>,
}

impl Serialize for NodeKind {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut rec = NodeRecord { kind: String::new(), slot: None, copy: None, l: None, sum: None };
        match self {
            NodeKind::Input { slot, copy } => {
                rec.kind = "input".into();
                rec.slot = Some(*slot);
                rec.copy = Some(*copy);
            }
            NodeKind::Delta => rec.kind = "delta".into(),
            NodeKind::Epsilon => rec.kind = "epsilon".into(),
            NodeKind::Projector { l } => {
                rec.kind = "projector".into();
                rec.l = Some(*l);
            }
            NodeKind::SumProjector { types } => {
                rec.kind = "projector".into();
                rec.sum = Some(types.clone());
            }
        }
        rec.serialize(s)
    }
}

impl<'de> Deserialize<'de> for NodeKind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let rec = NodeRecord::deserialize(d)?;
        match rec.kind.as_str() {
            "input" => match (rec.slot, rec.copy) {
                (Some(slot), Some(copy)) => Ok(NodeKind::Input { slot, copy }),
                _ => Err(D::Error::custom("input node needs slot and copy")),
            },
            "delta" => Ok(NodeKind::Delta),
            "epsilon" => Ok(NodeKind::Epsilon),
            "projector" => match (rec.l, rec.sum) {
                (Some(l), None) => Ok(NodeKind::Projector { l }),
                (None, Some(types)) if !types.is_empty() => Ok(NodeKind::SumProjector { types }),
                _ => Err(D::Error::custom("projector node needs exactly one of l or sum")),
            },
            other => Err(D::Error::custom(format!("unknown node kind {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TensorNetwork {
    pub nodes: Vec<NodeKind>,
    pub edges: Vec<(Endpoint, Endpoint)>,
    pub open: Vec<Endpoint>,
}

/// Input tensors keyed by slot index. Every copy of a slot sees the same tensor.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Bindings(BTreeMap<usize, Tensor>);

impl Bindings {
    pub fn new() -> Self {
        Bindings(BTreeMap::new())
    }

    pub fn with(mut self, slot: usize, t: Tensor) -> Self {
        self.0.insert(slot, t);
        self
    }

    pub fn insert(&mut self, slot: usize, t: Tensor) {
        self.0.insert(slot, t);
    }

    pub fn get(&self, slot: usize) -> Option<&Tensor> {
        self.0.get(&slot)
    }

    pub fn remove(&mut self, slot: usize) -> Option<Tensor> {
        self.0.remove(&slot)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Tensor)> {
        self.0.iter().map(|(k, v)| (*k, v))
    }
}

impl FromIterator<(usize, Tensor)> for Bindings {
    fn from_iter<I: IntoIterator<Item = (usize, Tensor)>>(iter: I) -> Self {
        Bindings(iter.into_iter().collect())
    }
}

/// How `contract_network` picks the next pair of tensors to merge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ContractionOrder {
    /// Smallest intermediate first; ties go to the lowest node indices.
    Greedy,
    /// Uniformly random connected pair, for cross-checking.
    Random(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Label {
    Edge(usize),
    Open(usize),
}

impl TensorNetwork {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, kind: NodeKind) -> usize {
        self.nodes.push(kind);
        self.nodes.len() - 1
    }

    pub fn connect(&mut self, a: Endpoint, b: Endpoint) {
        self.edges.push((a, b));
    }

    pub fn is_closed(&self) -> bool {
        self.open.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// True when the node graph (edges only) is connected.
    pub fn is_connected(&self) -> bool {
        if self.nodes.is_empty() {
            return true;
        }
        let mut parent: Vec<usize> = (0..self.nodes.len()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &((a, _), (b, _)) in &self.edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra] = rb;
        }
        let root = find(&mut parent, 0);
        (0..self.nodes.len()).all(|n| find(&mut parent, n) == root)
    }

    /// Number of copies of `slot` among the nodes.
    pub fn slot_count(&self, slot: usize) -> usize {
        self.nodes
            .iter()
            .filter(|k| matches!(k, NodeKind::Input { slot: s, .. } if *s == slot))
            .count()
    }

    pub fn count_kind(&self, pred: impl Fn(&NodeKind) -> bool) -> usize {
        self.nodes.iter().filter(|k| pred(k)).count()
    }

    /// Checks that every leg is used exactly once given per-node arities.
    pub fn check_legs(&self, arity: &[usize]) -> Result<()> {
        let mut used: Vec<Vec<bool>> = arity.iter().map(|&a| vec![false; a]).collect();
        let mut mark = |(n, l): Endpoint| -> Result<()> {
            let slot = used
                .get_mut(n)
                .ok_or(Error::InvalidNode { index: n, len: arity.len() })?
                .get_mut(l)
                .ok_or_else(|| Error::InvalidNetwork(format!("leg {l} of node {n} does not exist")))?;
            if std::mem::replace(slot, true) {
                return Err(Error::InvalidNetwork(format!("leg ({n},{l}) used twice")));
            }
            Ok(())
        };
        for &(a, b) in &self.edges {
            mark(a)?;
            mark(b)?;
        }
        for &e in &self.open {
            mark(e)?;
        }
        for (n, legs) in used.iter().enumerate() {
            if let Some(l) = legs.iter().position(|u| !u) {
                return Err(Error::InvalidNetwork(format!("leg ({n},{l}) is dangling")));
            }
        }
        Ok(())
    }

    /// Network derivative with respect to one node: the node is deleted and
    /// each of its legs becomes an open leg, appended in the node's own leg
    /// order. A self-edge on the removed node turns into a Delta node whose
    /// two legs are open.
    pub fn remove_node(&self, index: usize) -> Result<TensorNetwork> {
        if index >= self.nodes.len() {
            return Err(Error::InvalidNode { index, len: self.nodes.len() });
        }
        let shift = |n: usize| if n > index { n - 1 } else { n };
        let mut out = TensorNetwork {
            nodes: self
                .nodes
                .iter()
                .enumerate()
                .filter(|&(n, _)| n != index)
                .map(|(_, k)| k.clone())
                .collect(),
            edges: Vec::new(),
            open: Vec::new(),
        };
        // Per removed leg: what it was attached to.
        enum Partner {
            Other(Endpoint),
            SelfLeg(usize),
            OpenAt(usize),
        }
        let mut partners: BTreeMap<usize, Partner> = BTreeMap::new();
        for &(a, b) in &self.edges {
            match (a.0 == index, b.0 == index) {
                (false, false) => out.edges.push(((shift(a.0), a.1), (shift(b.0), b.1))),
                (true, false) => {
                    partners.insert(a.1, Partner::Other(b));
                }
                (false, true) => {
                    partners.insert(b.1, Partner::Other(a));
                }
                (true, true) => {
                    partners.insert(a.1, Partner::SelfLeg(b.1));
                    partners.insert(b.1, Partner::SelfLeg(a.1));
                }
            }
        }
        let mut open: Vec<Option<Endpoint>> = Vec::new();
        for (pos, &e) in self.open.iter().enumerate() {
            if e.0 == index {
                partners.insert(e.1, Partner::OpenAt(pos));
                open.push(None);
            } else {
                open.push(Some((shift(e.0), e.1)));
            }
        }
        let mut self_deltas: BTreeMap<usize, usize> = BTreeMap::new();
        let mut appended = Vec::new();
        for (&leg, partner) in &partners {
            match *partner {
                Partner::Other((n, l)) => appended.push((shift(n), l)),
                Partner::SelfLeg(other) => {
                    if let Some(&d) = self_deltas.get(&other) {
                        appended.push((d, 1));
                    } else {
                        let d = out.add_node(NodeKind::Delta);
                        self_deltas.insert(leg, d);
                        appended.push((d, 0));
                    }
                }
                Partner::OpenAt(pos) => {
                    let d = out.add_node(NodeKind::Delta);
                    open[pos] = Some((d, 0));
                    appended.push((d, 1));
                }
            }
        }
        out.open = open.into_iter().map(|e| e.expect("filled above")).collect();
        out.open.extend(appended);
        Ok(out)
    }
}

fn node_tensor(kind: &NodeKind, bind: &Bindings) -> Result<Tensor> {
    Ok(match kind {
        NodeKind::Input { slot, .. } => bind.get(*slot).ok_or(Error::MissingBinding(*slot))?.clone(),
        NodeKind::Delta => tensor::delta(),
        NodeKind::Epsilon => tensor::epsilon(),
        NodeKind::Projector { l } => so3::projector(*l)?.tensor().clone(),
        NodeKind::SumProjector { types } => so3::sum_projector(types)?.as_ref().clone(),
    })
}

/// Contracts a network with the greedy order.
pub fn contract_network(net: &TensorNetwork, bind: &Bindings) -> Result<Tensor> {
    contract_network_with(net, bind, ContractionOrder::Greedy)
}

pub fn contract_network_with(
    net: &TensorNetwork,
    bind: &Bindings,
    order: ContractionOrder,
) -> Result<Tensor> {
    let n = net.nodes.len();
    if n == 0 {
        return if net.open.is_empty() {
            Ok(Tensor::scalar(1.0))
        } else {
            Err(Error::InvalidNetwork("open legs on an empty network".into()))
        };
    }
    let tensors: Vec<Tensor> = net.nodes.iter().map(|k| node_tensor(k, bind)).collect::<Result<_>>()?;
    for (kind, t) in net.nodes.iter().zip(&tensors) {
        if let Some(a) = kind.fixed_arity() {
            debug_assert_eq!(a, t.rank());
        }
    }
    let arity: Vec<usize> = tensors.iter().map(|t| t.rank()).collect();
    net.check_legs(&arity)?;

    let mut labels: Vec<Vec<Option<Label>>> = arity.iter().map(|&a| vec![None; a]).collect();
    for (e, &(a, b)) in net.edges.iter().enumerate() {
        let (ea, eb) = (tensors[a.0].shape()[a.1], tensors[b.0].shape()[b.1]);
        if ea != eb {
            return Err(Error::ShapeMismatch(format!(
                "edge {a:?}-{b:?} joins extents {ea} and {eb}"
            )));
        }
        labels[a.0][a.1] = Some(Label::Edge(e));
        labels[b.0][b.1] = Some(Label::Edge(e));
    }
    for (k, &(node, leg)) in net.open.iter().enumerate() {
        labels[node][leg] = Some(Label::Open(k));
    }

    let mut active: Vec<Option<(Tensor, Vec<Label>)>> = Vec::with_capacity(n);
    for (t, ls) in tensors.into_iter().zip(labels) {
        let mut t = t;
        let mut ls: Vec<Label> = ls.into_iter().map(|l| l.expect("checked by check_legs")).collect();
        // self-edges become traces
        while let Some((i, j)) = find_repeated(&ls) {
            t = t.trace(i, j)?;
            ls.remove(j);
            ls.remove(i);
        }
        active.push(Some((t, ls)));
    }

    let mut rng = match order {
        ContractionOrder::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        ContractionOrder::Greedy => None,
    };

    loop {
        let live: Vec<usize> = (0..n).filter(|&i| active[i].is_some()).collect();
        if live.len() == 1 {
            break;
        }
        let mut candidates: Vec<(usize, usize, usize)> = Vec::new();
        for (x, &i) in live.iter().enumerate() {
            for &j in &live[x + 1..] {
                let (ti, li) = active[i].as_ref().unwrap();
                let (tj, lj) = active[j].as_ref().unwrap();
                if li.iter().any(|l| matches!(l, Label::Edge(_)) && lj.contains(l)) {
                    let size = result_size(ti, li, tj, lj);
                    candidates.push((size, i, j));
                }
            }
        }
        let (i, j) = if candidates.is_empty() {
            // disconnected components: outer product of the two smallest
            let mut by_size: Vec<(usize, usize)> =
                live.iter().map(|&i| (active[i].as_ref().unwrap().0.len(), i)).collect();
            by_size.sort();
            let (a, b) = (by_size[0].1, by_size[1].1);
            (a.min(b), a.max(b))
        } else if let Some(rng) = rng.as_mut() {
            let &(_, i, j) = candidates.choose(rng).unwrap();
            (i, j)
        } else {
            let &(_, i, j) = candidates.iter().min().unwrap();
            (i, j)
        };
        let (tj, lj) = active[j].take().unwrap();
        let (ti, li) = active[i].take().unwrap();
        let mut pairs = Vec::new();
        for (ai, l) in li.iter().enumerate() {
            if let Some(bj) = lj.iter().position(|m| m == l) {
                pairs.push((ai, bj));
            }
        }
        let merged = contract(&ti, &tj, &pairs)?;
        let mut ls: Vec<Label> =
            li.iter().enumerate().filter(|(a, _)| !pairs.iter().any(|p| p.0 == *a)).map(|(_, l)| *l).collect();
        ls.extend(lj.iter().enumerate().filter(|(b, _)| !pairs.iter().any(|p| p.1 == *b)).map(|(_, l)| *l));
        active[i] = Some((merged, ls));
    }

    let (t, ls) = active.into_iter().flatten().next().unwrap();
    let perm: Vec<usize> = (0..net.open.len())
        .map(|k| ls.iter().position(|l| *l == Label::Open(k)).expect("open label survives"))
        .collect();
    t.permute(&perm)
}

fn find_repeated(ls: &[Label]) -> Option<(usize, usize)> {
    for i in 0..ls.len() {
        for j in i + 1..ls.len() {
            if ls[i] == ls[j] {
                return Some((i, j));
            }
        }
    }
    None
}

fn result_size(ti: &Tensor, li: &[Label], tj: &Tensor, lj: &[Label]) -> usize {
    let a: usize = li.iter().zip(ti.shape()).filter(|(l, _)| !lj.contains(l)).map(|(_, e)| e).product();
    let b: usize = lj.iter().zip(tj.shape()).filter(|(l, _)| !li.contains(l)).map(|(_, e)| e).product();
    a * b
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dot_network() -> TensorNetwork {
        let mut net = TensorNetwork::new();
        let x = net.add_node(NodeKind::Input { slot: 0, copy: 0 });
        let y = net.add_node(NodeKind::Input { slot: 1, copy: 0 });
        net.connect((x, 0), (y, 0));
        net
    }

    fn triple_product() -> TensorNetwork {
        let mut net = TensorNetwork::new();
        let e = net.add_node(NodeKind::Epsilon);
        for s in 0..3 {
            let x = net.add_node(NodeKind::Input { slot: s, copy: 0 });
            net.connect((e, s), (x, 0));
        }
        net
    }

    fn unit(i: usize) -> Tensor {
        Tensor::from_fn(vec![3], |k| if k[0] == i { 1.0 } else { 0.0 })
    }

    #[test]
    fn dot_through_delta_of_orthogonal_vectors() {
        let mut net = TensorNetwork::new();
        let x = net.add_node(NodeKind::Input { slot: 0, copy: 0 });
        let d = net.add_node(NodeKind::Delta);
        let y = net.add_node(NodeKind::Input { slot: 1, copy: 0 });
        net.connect((x, 0), (d, 0));
        net.connect((d, 1), (y, 0));
        let b = Bindings::new().with(0, unit(0)).with(1, unit(1));
        assert_eq!(contract_network(&net, &b).unwrap().as_scalar(), Some(0.0));
    }

    #[test]
    fn triple_product_of_basis_is_one() {
        let b = Bindings::new().with(0, unit(0)).with(1, unit(1)).with(2, unit(2));
        assert_eq!(contract_network(&triple_product(), &b).unwrap().as_scalar(), Some(1.0));
    }

    #[test]
    fn delta_loop_is_three() {
        let mut net = TensorNetwork::new();
        let a = net.add_node(NodeKind::Delta);
        let b = net.add_node(NodeKind::Delta);
        net.connect((a, 0), (b, 0));
        net.connect((a, 1), (b, 1));
        assert_eq!(contract_network(&net, &Bindings::new()).unwrap().as_scalar(), Some(3.0));
    }

    #[test]
    fn missing_binding_and_bad_extent() {
        let b = Bindings::new().with(0, unit(0));
        assert!(matches!(contract_network(&dot_network(), &b), Err(Error::MissingBinding(1))));
        let b = b.with(1, Tensor::vector(&[1.0, 2.0]));
        assert!(matches!(contract_network(&dot_network(), &b), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn remove_node_gives_gradient() {
        let net = dot_network();
        let grad = net.remove_node(1).unwrap();
        assert_eq!(grad.open, vec![(0, 0)]);
        let x = Tensor::vector(&[1.0, 2.0, 3.0]);
        let out = contract_network(&grad, &Bindings::new().with(0, x.clone())).unwrap();
        assert_eq!(out, x);
        assert!(matches!(net.remove_node(5), Err(Error::InvalidNode { .. })));
    }

    #[test]
    fn remove_self_traced_node_gives_identity() {
        let mut net = TensorNetwork::new();
        let y = net.add_node(NodeKind::Input { slot: 0, copy: 0 });
        net.connect((y, 0), (y, 1));
        let grad = net.remove_node(0).unwrap();
        assert_eq!(grad.nodes, vec![NodeKind::Delta]);
        assert_eq!(contract_network(&grad, &Bindings::new()).unwrap(), tensor::delta());
    }

    #[test]
    fn json_schema_shape() {
        let mut net = triple_product();
        net.nodes.push(NodeKind::Projector { l: 2 });
        net.nodes.push(NodeKind::SumProjector { types: vec![1, 2] });
        let s = net.to_json().unwrap();
        assert!(s.starts_with(r#"{"nodes":[{"kind":"epsilon"},{"kind":"input","slot":0,"copy":0}"#));
        assert!(s.contains(r#"{"kind":"projector","l":2}"#));
        assert!(s.contains(r#"{"kind":"projector","sum":[1,2]}"#));
        assert!(s.contains(r#""edges":[[[0,0],[1,0]]"#));
        assert!(s.ends_with(r#""open":[]}"#));
        assert_eq!(TensorNetwork::from_json(&s).unwrap(), net);
        assert!(TensorNetwork::from_json(r#"{"nodes":[{"kind":"bogus"}],"edges":[],"open":[]}"#).is_err());
    }

    #[test]
    fn dangling_leg_is_rejected() {
        let mut net = dot_network();
        net.edges.clear();
        net.open.push((0, 0));
        let b = Bindings::new().with(0, unit(0)).with(1, unit(1));
        assert!(matches!(contract_network(&net, &b), Err(Error::InvalidNetwork(_))));
    }
}
