//! Linear-independence filtering of generators by evaluation on random probes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{GeneratorNetwork, Signature};
use crate::error::Result;
use crate::network::{contract_network, Bindings};

/// Default relative threshold for dropping a dependent column.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Indices of a maximal linearly independent prefix-greedy subset of
/// `columns`: a column is kept when its residual after projecting out the
/// kept ones exceeds `tol` times the largest column norm. Earlier columns win.
pub fn independent_columns(columns: &[Vec<f64>], tol: f64) -> Vec<usize> {
    let scale = columns.iter().map(|c| norm(c)).fold(0.0, f64::max);
    if scale == 0.0 {
        return Vec::new();
    }
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut kept = Vec::new();
    for (j, col) in columns.iter().enumerate() {
        let mut v = col.clone();
        // two passes of modified Gram-Schmidt keep the residual honest
        for _ in 0..2 {
            for q in &basis {
                let d: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(q).for_each(|(x, y)| *x -= d * y);
            }
        }
        let n = norm(&v);
        if n > tol * scale {
            v.iter_mut().for_each(|x| *x /= n);
            basis.push(v);
            kept.push(j);
        }
    }
    kept
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Random probe bindings for a signature, reproducible from `seed`.
pub fn probe_bindings(sig: &Signature, count: usize, seed: u64) -> Vec<Bindings> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| sig.random_bindings(&mut rng)).collect()
}

/// Flattened network outputs over the probes, one column per network.
pub(crate) fn probe_columns(nets: &[&crate::network::TensorNetwork], probes: &[Bindings]) -> Result<Vec<Vec<f64>>> {
    let rows: Vec<Vec<Vec<f64>>> = probes
        .par_iter()
        .map(|b| nets.iter().map(|n| contract_network(n, b).map(|t| t.into_data())).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    Ok((0..nets.len()).map(|j| rows.iter().flat_map(|r| r[j].iter().copied()).collect()).collect())
}

/// Keeps the generators whose values on `probes` random bindings are linearly
/// independent. The first-listed generator wins among dependent ones.
pub fn dedup_numeric(
    gens: Vec<GeneratorNetwork>,
    sig: &Signature,
    probes: usize,
    tol: f64,
    seed: u64,
) -> Result<Vec<GeneratorNetwork>> {
    let probes = probe_bindings(sig, probes.max(2 * gens.len()), seed);
    let nets: Vec<_> = gens.iter().map(|g| &g.net).collect();
    let keep = independent_columns(&probe_columns(&nets, &probes)?, tol);
    let mut out = Vec::with_capacity(keep.len());
    let mut keep = keep.into_iter().peekable();
    for (j, g) in gens.into_iter().enumerate() {
        if keep.peek() == Some(&j) {
            keep.next();
            out.push(g);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn independent_columns_drops_multiples_and_zeros() {
        let cols = vec![vec![1.0, 0.0, 1.0], vec![2.0, 0.0, 2.0], vec![0.0; 3], vec![0.0, 1.0, 0.0]];
        assert_eq!(independent_columns(&cols, 1e-8), vec![0, 3]);
        assert!(independent_columns(&[vec![0.0; 2]], 1e-8).is_empty());
    }
}
