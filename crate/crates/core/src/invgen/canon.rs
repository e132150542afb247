//! Canonical form of a tensor network up to node relabelling.
//!
//! Nodes are coloured by kind, colours are refined by neighbourhood until
//! stable, and remaining ties are broken by individualising each candidate in
//! turn; the lexicographically smallest encoding over all leaves is the key.
//! Legs on which a node's tensor is symmetric (Delta, the extent-3 legs of
//! `P_l`) share one class. Epsilon legs share a class too: permuting them only
//! flips the sign, which does not change the spanned function.

use std::collections::BTreeMap;

use crate::network::{NodeKind, TensorNetwork};

fn kind_label(kind: &NodeKind) -> String {
    match kind {
        NodeKind::Input { slot, .. } => format!("i{slot}"),
        NodeKind::Delta => "d".into(),
        NodeKind::Epsilon => "e".into(),
        NodeKind::Projector { l } => format!("p{l}"),
        NodeKind::SumProjector { types } => {
            let parts: Vec<String> = types.iter().map(|t| t.to_string()).collect();
            format!("s{}", parts.join("+"))
        }
    }
}

fn leg_class(kind: &NodeKind, leg: usize) -> usize {
    match kind {
        NodeKind::Delta | NodeKind::Epsilon => 0,
        NodeKind::Projector { .. } => leg.min(1),
        NodeKind::Input { .. } | NodeKind::SumProjector { .. } => leg,
    }
}

struct Graph {
    labels: Vec<String>,
    /// `(neighbour, own leg class, neighbour leg class)`
    adj: Vec<Vec<(usize, usize, usize)>>,
    /// `(node, leg class, position)` for open legs
    open: Vec<(usize, usize, usize)>,
    edges: Vec<((usize, usize), (usize, usize))>,
}

impl Graph {
    fn new(net: &TensorNetwork) -> Self {
        let n = net.nodes.len();
        let mut adj = vec![Vec::new(); n];
        let mut edges = Vec::with_capacity(net.edges.len());
        for &((a, la), (b, lb)) in &net.edges {
            let ca = leg_class(&net.nodes[a], la);
            let cb = leg_class(&net.nodes[b], lb);
            adj[a].push((b, ca, cb));
            adj[b].push((a, cb, ca));
            edges.push(((a, ca), (b, cb)));
        }
        let open = net
            .open
            .iter()
            .enumerate()
            .map(|(pos, &(node, leg))| (node, leg_class(&net.nodes[node], leg), pos))
            .collect();
        Graph { labels: net.nodes.iter().map(kind_label).collect(), adj, open, edges }
    }

    fn initial_colors(&self) -> Vec<usize> {
        // open legs are ordered, so they take part in the initial colour
        let sigs: Vec<(String, Vec<(usize, usize)>)> = (0..self.labels.len())
            .map(|v| {
                let mut o: Vec<(usize, usize)> =
                    self.open.iter().filter(|e| e.0 == v).map(|e| (e.2, e.1)).collect();
                o.sort();
                (self.labels[v].clone(), o)
            })
            .collect();
        rank(&sigs)
    }

    /// Refines until the number of colour classes stops growing.
    fn refine(&self, mut colors: Vec<usize>) -> Vec<usize> {
        loop {
            let classes = count_classes(&colors);
            let sigs: Vec<(usize, Vec<(usize, usize, usize)>)> = (0..colors.len())
                .map(|v| {
                    let mut nb: Vec<(usize, usize, usize)> =
                        self.adj[v].iter().map(|&(u, c_own, c_nb)| (c_own, c_nb, colors[u])).collect();
                    nb.sort();
                    (colors[v], nb)
                })
                .collect();
            let next = rank(&sigs);
            if count_classes(&next) == classes {
                return next;
            }
            colors = next;
        }
    }

    fn encode(&self, colors: &[usize]) -> Vec<u8> {
        // discrete colouring: position of node v is its colour rank
        let mut order: Vec<usize> = (0..colors.len()).collect();
        order.sort_by_key(|&v| colors[v]);
        let mut pos = vec![0; colors.len()];
        for (p, &v) in order.iter().enumerate() {
            pos[v] = p;
        }
        let mut edges: Vec<((usize, usize), (usize, usize))> = self
            .edges
            .iter()
            .map(|&((a, ca), (b, cb))| {
                let (x, y) = ((pos[a], ca), (pos[b], cb));
                if x <= y { (x, y) } else { (y, x) }
            })
            .collect();
        edges.sort();
        let mut out = String::new();
        for &v in &order {
            out.push_str(&self.labels[v]);
            out.push(',');
        }
        out.push('|');
        for ((a, ca), (b, cb)) in edges {
            out.push_str(&format!("{a}.{ca}-{b}.{cb};"));
        }
        out.push('|');
        for &(node, class, p) in &self.open {
            out.push_str(&format!("{p}:{}.{class};", pos[node]));
        }
        out.into_bytes()
    }

    fn search(&self, colors: Vec<usize>, best: &mut Option<Vec<u8>>) {
        let colors = self.refine(colors);
        let mut cells: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (v, &c) in colors.iter().enumerate() {
            cells.entry(c).or_default().push(v);
        }
        let target = cells.iter().filter(|(_, vs)| vs.len() > 1).min_by_key(|(c, vs)| (vs.len(), **c));
        let Some((&cell_color, members)) = target else {
            let code = self.encode(&colors);
            if best.as_ref().is_none_or(|b| code < *b) {
                *best = Some(code);
            }
            return;
        };
        for &v in members {
            // individualise v: it keeps the cell colour, the rest move up
            let next: Vec<usize> = colors
                .iter()
                .enumerate()
                .map(|(u, &c)| if c > cell_color || (c == cell_color && u != v) { c * 2 + 1 } else { c * 2 })
                .collect();
            self.search(next, best);
        }
    }
}

fn count_classes(colors: &[usize]) -> usize {
    let mut c = colors.to_vec();
    c.sort_unstable();
    c.dedup();
    c.len()
}

/// Replaces each signature by its rank among the distinct signatures.
fn rank<T: Ord + Clone>(sigs: &[T]) -> Vec<usize> {
    let mut sorted: Vec<T> = sigs.to_vec();
    sorted.sort();
    sorted.dedup();
    sigs.iter().map(|s| sorted.binary_search(s).unwrap()).collect()
}

/// Byte string identical for relabelled copies of the same network.
pub fn canonical_key(net: &TensorNetwork) -> Vec<u8> {
    let g = Graph::new(net);
    if net.nodes.is_empty() {
        return g.encode(&[]);
    }
    let mut best = None;
    g.search(g.initial_colors(), &mut best);
    best.expect("search visits at least one leaf")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dot(slot_a: usize, slot_b: usize, swap: bool) -> TensorNetwork {
        let mut net = TensorNetwork::new();
        let (first, second) = if swap { (slot_b, slot_a) } else { (slot_a, slot_b) };
        let a = net.add_node(NodeKind::Input { slot: first, copy: 0 });
        let b = net.add_node(NodeKind::Input { slot: second, copy: 0 });
        net.connect((a, 0), (b, 0));
        net
    }

    fn triple(order: [usize; 3], legs: [usize; 3]) -> TensorNetwork {
        let mut net = TensorNetwork::new();
        let nodes: Vec<usize> =
            order.iter().map(|&s| net.add_node(NodeKind::Input { slot: s, copy: 0 })).collect();
        let e = net.add_node(NodeKind::Epsilon);
        for (k, &n) in nodes.iter().enumerate() {
            net.connect((n, 0), (e, legs[k]));
        }
        net
    }

    #[test]
    fn relabelled_copies_match() {
        assert_eq!(canonical_key(&dot(0, 1, false)), canonical_key(&dot(0, 1, true)));
        assert_ne!(canonical_key(&dot(0, 0, false)), canonical_key(&dot(0, 1, false)));
    }

    #[test]
    fn triple_product_relabelled() {
        // same graph: node list permuted, epsilon legs cyclically shifted
        let a = triple([0, 1, 2], [0, 1, 2]);
        let b = triple([2, 0, 1], [1, 2, 0]);
        assert_eq!(canonical_key(&a), canonical_key(&b));
    }

    #[test]
    fn transposes_are_distinguished() {
        // Tr(AB) vs Tr(AB^T) differ in which leg of B is used
        let mk = |flip: bool| {
            let mut net = TensorNetwork::new();
            let a = net.add_node(NodeKind::Input { slot: 0, copy: 0 });
            let b = net.add_node(NodeKind::Input { slot: 1, copy: 0 });
            net.connect((a, 1), (b, if flip { 1 } else { 0 }));
            net.connect((b, if flip { 0 } else { 1 }), (a, 0));
            net
        };
        assert_ne!(canonical_key(&mk(false)), canonical_key(&mk(true)));
    }

    #[test]
    fn copies_of_the_same_slot_are_interchangeable() {
        // Tr(A A^T) written with the copies in either role
        let mk = |swap: bool| {
            let mut net = TensorNetwork::new();
            let a0 = net.add_node(NodeKind::Input { slot: 0, copy: 0 });
            let a1 = net.add_node(NodeKind::Input { slot: 0, copy: 1 });
            let (p, q) = if swap { (a1, a0) } else { (a0, a1) };
            net.connect((p, 0), (q, 0));
            net.connect((p, 1), (q, 1));
            net
        };
        assert_eq!(canonical_key(&mk(false)), canonical_key(&mk(true)));
    }
}
