//! Enumeration of connected closed networks: pick a multiset of input
//! copies, wrap spherical and direct-sum copies by their projector, then pair
//! up all extent-3 legs in every possible way.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::canon::canonical_key;
use super::{GeneratorNetwork, Signature, SlotSpec};
use crate::error::{Error, Result};
use crate::network::{Endpoint, NodeKind, TensorNetwork};

/// Largest number of perfect matchings visited in one enumeration.
pub const MATCHING_CAP: u128 = 2_000_000;

fn double_factorial_odd(n: usize) -> u128 {
    // (n-1)!! perfect matchings of n legs
    (1..n).step_by(2).map(|k| k as u128).product()
}

/// Every degree vector with `lo <= sum <= hi`, ordered by total then
/// lexicographically.
fn degree_vectors(slots: usize, lo: usize, hi: usize) -> Vec<Vec<usize>> {
    fn rec(slots: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == slots {
            out.push(cur.clone());
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(slots, left - k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(slots, hi, &mut Vec::new(), &mut out);
    out.retain(|d| (lo..=hi).contains(&d.iter().sum()));
    out.sort_by_key(|d| (d.iter().sum::<usize>(), std::cmp::Reverse(d.clone())));
    out
}

/// Nodes for one copy multiset, with the free extent-3 legs in a fixed order.
fn skeleton(sig: &Signature, degree: &[usize], with_epsilon: bool) -> (TensorNetwork, Vec<Endpoint>) {
    let mut net = TensorNetwork::new();
    let mut legs = Vec::new();
    for (slot, (spec, &n)) in sig.slots.iter().zip(degree).enumerate() {
        for copy in 0..n {
            let x = net.add_node(NodeKind::Input { slot, copy });
            match spec {
                SlotSpec::Cartesian(r) => legs.extend((0..*r).map(|k| (x, k))),
                SlotSpec::Spherical(l) => {
                    let p = net.add_node(NodeKind::Projector { l: *l });
                    net.connect((x, 0), (p, 0));
                    legs.extend((1..=*l).map(|k| (p, k)));
                }
                SlotSpec::Sum(types) => {
                    let p = net.add_node(NodeKind::SumProjector { types: types.clone() });
                    net.connect((x, 0), (p, 0));
                    legs.extend((1..=spec.cartesian_legs()).map(|k| (p, k)));
                }
            }
        }
    }
    if with_epsilon {
        let e = net.add_node(NodeKind::Epsilon);
        legs.extend((0..3).map(|k| (e, k)));
    }
    (net, legs)
}

fn for_each_matching(n: usize, f: &mut impl FnMut(&[(usize, usize)])) {
    fn rec(used: &mut [bool], cur: &mut Vec<(usize, usize)>, f: &mut impl FnMut(&[(usize, usize)])) {
        let Some(first) = used.iter().position(|u| !u) else {
            f(cur);
            return;
        };
        used[first] = true;
        for j in first + 1..used.len() {
            if !used[j] {
                used[j] = true;
                cur.push((first, j));
                rec(used, cur, f);
                cur.pop();
                used[j] = false;
            }
        }
        used[first] = false;
    }
    rec(&mut vec![false; n], &mut Vec::new(), f);
}

/// Canonically distinct connected closed networks for `sig`.
///
/// Copy counts of the first `free` slots range over totals in
/// `min_degree..=max_degree`; every later slot appears exactly once. An
/// Epsilon node is added exactly when the extent-3 leg count is odd, and
/// multisets needing one are skipped when `epsilon_budget` is 0. The result is
/// ordered by total degree, then degree vector, then canonical key.
pub fn enumerate_candidates(
    sig: &Signature,
    free: usize,
    min_degree: usize,
    max_degree: usize,
    epsilon_budget: u8,
) -> Result<Vec<GeneratorNetwork>> {
    let mut plans = Vec::new();
    let mut total: u128 = 0;
    for mut degree in degree_vectors(free, min_degree, max_degree) {
        degree.resize(sig.len(), 1);
        let legs: usize = sig.slots.iter().zip(&degree).map(|(s, &n)| s.cartesian_legs() * n).sum();
        let odd = legs % 2 == 1;
        if odd && epsilon_budget == 0 {
            continue;
        }
        total += double_factorial_odd(legs + if odd { 3 } else { 0 });
        if total > MATCHING_CAP {
            return Err(Error::EnumerationTooLarge { count: total, cap: MATCHING_CAP });
        }
        plans.push((degree, odd));
    }
    let per_plan: Vec<Vec<GeneratorNetwork>> = plans
        .into_par_iter()
        .map(|(degree, odd)| {
            let (base, legs) = skeleton(sig, &degree, odd);
            let mut found: BTreeMap<Vec<u8>, TensorNetwork> = BTreeMap::new();
            for_each_matching(legs.len(), &mut |m| {
                let mut net = base.clone();
                for &(a, b) in m {
                    net.connect(legs[a], legs[b]);
                }
                if net.is_connected() {
                    found.entry(canonical_key(&net)).or_insert(net);
                }
            });
            found
                .into_values()
                .map(|net| GeneratorNetwork { net, degree: degree.clone(), uses_epsilon: odd })
                .collect()
        })
        .collect();
    Ok(per_plan.into_iter().flatten().collect())
}
