//! Generators of the invariant polynomials of a list of inputs: closed
//! connected tensor networks built from input copies, Delta edges and at most
//! one Epsilon node.

mod canon;
mod dedup;
mod enumerate;
mod signature;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use canon::canonical_key;
pub use dedup::{dedup_numeric, independent_columns, probe_bindings, DEFAULT_TOL};
pub(crate) use dedup::probe_columns;
pub use enumerate::{enumerate_candidates, MATCHING_CAP};
pub use signature::{Signature, SlotSpec, MAX_RANK, MAX_TYPE};

use crate::error::{Error, Result};
use crate::network::{contract_network, Bindings, NodeKind, TensorNetwork};
use crate::so3;
use crate::tensor::{contract, levi_civita, Tensor};

/// Seed for probe bindings when the caller does not choose one.
pub const DEFAULT_SEED: u64 = 0x5eed;
/// Probe count used by enumeration before the `2 * len` floor applies.
pub const DEFAULT_PROBES: usize = 64;

/// A closed connected network with its per-slot copy counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorNetwork {
    #[serde(flatten)]
    pub net: TensorNetwork,
    pub degree: Vec<usize>,
    pub uses_epsilon: bool,
}

impl GeneratorNetwork {
    pub fn total_degree(&self) -> usize {
        self.degree.iter().sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSet {
    pub signature: Signature,
    pub max_degree: usize,
    pub seed: u64,
    pub generators: Vec<GeneratorNetwork>,
}

impl GeneratorSet {
    /// Number of retained generators at each total degree.
    pub fn count_per_degree(&self) -> BTreeMap<usize, usize> {
        let mut out = BTreeMap::new();
        for g in &self.generators {
            *out.entry(g.total_degree()).or_insert(0) += 1;
        }
        out
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Enumerates, canonicalises and numerically deduplicates the generators of
/// total degree `1..=max_degree`, with probes drawn from [`DEFAULT_SEED`].
pub fn enumerate_networks(sig: &Signature, max_degree: usize, epsilon_budget: u8) -> Result<GeneratorSet> {
    enumerate_networks_seeded(sig, max_degree, epsilon_budget, DEFAULT_SEED)
}

pub fn enumerate_networks_seeded(
    sig: &Signature,
    max_degree: usize,
    epsilon_budget: u8,
    seed: u64,
) -> Result<GeneratorSet> {
    if max_degree == 0 {
        return Err(Error::Parse("max degree must be at least 1".into()));
    }
    if epsilon_budget > 1 {
        return Err(Error::Parse(format!("epsilon budget {epsilon_budget} is not 0 or 1")));
    }
    let candidates = enumerate_candidates(sig, sig.len(), 1, max_degree, epsilon_budget)?;
    let generators = dedup_numeric(candidates, sig, DEFAULT_PROBES, DEFAULT_TOL, seed)?;
    Ok(GeneratorSet { signature: sig.clone(), max_degree, seed, generators })
}

/// Value of a closed generator on the given inputs.
pub fn evaluate_generator(g: &GeneratorNetwork, bind: &Bindings) -> Result<f64> {
    let t = contract_network(&g.net, bind)?;
    t.as_scalar().ok_or_else(|| Error::ShapeMismatch(format!("generator evaluated to shape {:?}", t.shape())))
}

/// `P_l^T x`: the type-`l` vector as an `l`-axis Cartesian tensor.
pub fn wrap_spherical(x: &Tensor, l: usize) -> Result<Tensor> {
    if x.shape() != [2 * l + 1] {
        return Err(Error::ShapeMismatch(format!("type {l} needs shape [{}], got {:?}", 2 * l + 1, x.shape())));
    }
    contract(x, so3::projector(l)?.tensor(), &[(0, 0)])
}

/// Checks the expansion of a product of two Levi-Civita symbols into
/// Kronecker deltas on all 729 index tuples, in integer arithmetic.
pub fn epsilon_pair_reduce_check() -> bool {
    let d = |a: usize, b: usize| i64::from(a == b);
    let mut ok = true;
    for idx in 0..729usize {
        let [i, j, k, l, m, n] = std::array::from_fn(|p| (idx / 3usize.pow(5 - p as u32)) % 3);
        let lhs = levi_civita(i, j, k) * levi_civita(l, m, n);
        let rhs = d(i, l) * (d(j, m) * d(k, n) - d(j, n) * d(k, m)) - d(i, m) * (d(j, l) * d(k, n) - d(j, n) * d(k, l))
            + d(i, n) * (d(j, l) * d(k, m) - d(j, m) * d(k, l));
        ok &= lhs == rhs;
    }
    ok
}

/// Largest relative invariance violation `|f(g.x) - f(x)| / (1 + |f(x)|)`
/// per generator, over `rotations` random rotations with a fresh random input
/// for each. A generator that is not closed is compared entrywise, so a
/// damaged network shows up as a violation rather than an error.
pub fn invariance_violations(set: &GeneratorSet, rotations: usize, seed: u64) -> Result<Vec<f64>> {
    use rand::SeedableRng;
    use rayon::prelude::*;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let trials: Vec<(Bindings, Bindings)> = (0..rotations)
        .map(|_| {
            let r = so3::Rotation::random(&mut rng);
            let x = set.signature.random_bindings(&mut rng);
            let gx = set.signature.act(&r, &x)?;
            Ok((x, gx))
        })
        .collect::<Result<_>>()?;
    set.generators
        .par_iter()
        .map(|g| {
            let mut worst: f64 = 0.0;
            for (x, gx) in &trials {
                let a = contract_network(&g.net, x)?;
                let b = contract_network(&g.net, gx)?;
                worst = worst.max(b.sub(&a)?.norm() / (1.0 + a.norm()));
            }
            Ok(worst)
        })
        .collect()
}

/// Number of legs each node exposes, given the signature.
pub fn node_arities(sig: &Signature, net: &TensorNetwork) -> Result<Vec<usize>> {
    net.nodes
        .iter()
        .map(|k| match k {
            NodeKind::Input { slot, .. } => match sig.slots.get(*slot) {
                Some(SlotSpec::Cartesian(r)) => Ok(*r),
                Some(_) => Ok(1),
                None => Err(Error::InvalidNetwork(format!("input slot {slot} is not in the signature"))),
            },
            other => Ok(other.fixed_arity().expect("non-input kinds have fixed arity")),
        })
        .collect()
}
