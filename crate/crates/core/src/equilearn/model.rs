use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::material::{conjugate, equivariant_features, feature_invariants, sample_deformation, Mat3, IDENTITY};
use super::mlp::{Activation, Cache, Mlp};
use crate::error::{Error, Result};
use crate::so3::Rotation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Plain network from the 9 entries of `F - I` to the 9 entries of `P`.
    Mlp,
    /// Coefficients of `I, F, F^T`.
    Equi3,
    /// Coefficients of all seven matrix features.
    Equi7,
}

impl Variant {
    pub fn input_dim(self) -> usize {
        match self {
            Variant::Mlp => 9,
            _ => 5,
        }
    }

    pub fn output_dim(self) -> usize {
        match self {
            Variant::Mlp => 9,
            Variant::Equi3 => 3,
            Variant::Equi7 => 7,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Mlp => "mlp",
            Variant::Equi3 => "equi3",
            Variant::Equi7 => "equi7",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mlp" => Ok(Variant::Mlp),
            "equi3" => Ok(Variant::Equi3),
            "equi7" => Ok(Variant::Equi7),
            other => Err(Error::Parse(format!("unknown variant {other:?} (expected mlp, equi3 or equi7)"))),
        }
    }
}

/// Network inputs for one deformation: `F - I` for the plain model, the five
/// trace invariants shifted by their value at `F = I` for the others.
pub fn model_inputs(variant: Variant, f: &Mat3) -> Vec<f64> {
    match variant {
        Variant::Mlp => f.iter().zip(&IDENTITY).map(|(a, b)| a - b).collect(),
        _ => feature_invariants(f).iter().map(|x| x - 3.0).collect(),
    }
}

/// `sum_i h_i E_i(F)` over the first `h.len()` matrix features.
pub fn combine_features(h: &[f64], f: &Mat3) -> Mat3 {
    let e = equivariant_features(f);
    std::array::from_fn(|k| h.iter().zip(&e).map(|(c, m)| c * m[k]).sum())
}

/// Prediction of one stress tensor.
pub fn model_forward(variant: Variant, params: &Mlp, f: &Mat3) -> Result<Mat3> {
    let out = params.apply(&model_inputs(variant, f))?;
    if out.len() != variant.output_dim() {
        return Err(Error::ShapeMismatch(format!("{variant} needs {} outputs, net has {}", variant.output_dim(), out.len())));
    }
    Ok(match variant {
        Variant::Mlp => std::array::from_fn(|k| out[k]),
        _ => combine_features(&out, f),
    })
}

/// A dataset with inputs and features precomputed for one variant.
pub struct Prepared {
    pub variant: Variant,
    pub x: Array2<f64>,
    pub target: Array2<f64>,
    features: Vec<[Mat3; 7]>,
}

impl Prepared {
    pub fn new(variant: Variant, fs: &[Mat3], ps: &[Mat3]) -> Self {
        let n = fs.len();
        let x = Array2::from_shape_vec((n, variant.input_dim()), fs.iter().flat_map(|f| model_inputs(variant, f)).collect())
            .expect("input rows");
        let target = Array2::from_shape_vec((n, 9), ps.iter().flat_map(|p| p.iter().copied()).collect()).expect("targets");
        let features = match variant {
            Variant::Mlp => Vec::new(),
            _ => fs.iter().map(equivariant_features).collect(),
        };
        Prepared { variant, x, target, features }
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn assemble(&self, h: &Array2<f64>) -> Array2<f64> {
        match self.variant {
            Variant::Mlp => h.clone(),
            _ => Array2::from_shape_fn((self.len(), 9), |(n, k)| {
                h.row(n).iter().zip(&self.features[n]).map(|(c, m)| c * m[k]).sum()
            }),
        }
    }

    pub fn predict(&self, net: &Mlp) -> Result<Array2<f64>> {
        Ok(self.assemble(&net.forward(self.x.view())?.0))
    }

    /// Mean squared error over all samples and the 9 entries.
    pub fn mse(&self, net: &Mlp) -> Result<f64> {
        let d = self.predict(net)? - &self.target;
        Ok(d.mapv(|v| v * v).mean().unwrap_or(0.0))
    }

    /// Loss and its parameter gradient on the rows in `rows` (all when `None`).
    pub fn loss_and_grad(&self, net: &Mlp, rows: Option<&[usize]>) -> Result<(f64, Vec<f64>)> {
        let sub;
        let (x, target, idx): (ArrayView2<f64>, ArrayView2<f64>, Vec<usize>) = match rows {
            None => (self.x.view(), self.target.view(), (0..self.len()).collect()),
            Some(r) => {
                sub = (self.x.select(ndarray::Axis(0), r), self.target.select(ndarray::Axis(0), r));
                (sub.0.view(), sub.1.view(), r.to_vec())
            }
        };
        let (h, cache): (Array2<f64>, Cache) = net.forward(x)?;
        let n = x.nrows();
        let pred = match self.variant {
            Variant::Mlp => h.clone(),
            _ => Array2::from_shape_fn((n, 9), |(a, k)| {
                h.row(a).iter().zip(&self.features[idx[a]]).map(|(c, m)| c * m[k]).sum()
            }),
        };
        let diff = &pred - &target;
        let scale = 1.0 / (9 * n) as f64;
        let loss = diff.mapv(|v| v * v).sum() * scale;
        let dpred = diff.mapv(|v| 2.0 * v * scale);
        let upstream = match self.variant {
            Variant::Mlp => dpred,
            _ => Array2::from_shape_fn((n, h.ncols()), |(a, c)| {
                let e = &self.features[idx[a]][c];
                (0..9).map(|k| dpred[(a, k)] * e[k]).sum()
            }),
        };
        Ok((loss, net.gradients(&cache, upstream.view())))
    }
}

/// Fresh network for a variant: hidden layers of the given widths, tanh.
pub fn new_network(variant: Variant, hidden: &[usize], seed: u64) -> Mlp {
    let mut sizes = vec![variant.input_dim()];
    sizes.extend_from_slice(hidden);
    sizes.push(variant.output_dim());
    Mlp::init(&sizes, Activation::Tanh, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Largest relative violation `|P(R F R^T) - R P(F) R^T| / |P(F)|` over
/// `probes` random deformations and rotations.
pub fn model_equivariance_violation(variant: Variant, net: &Mlp, probes: usize, amplitude: f64, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..probes {
        let f = sample_deformation(&mut rng, amplitude);
        let r = Rotation::random(&mut rng).flat();
        let p = model_forward(variant, net, &f)?;
        let lhs = model_forward(variant, net, &conjugate(&r, &f))?;
        let rhs = conjugate(&r, &p);
        let num: f64 = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let den: f64 = p.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-12);
        worst = worst.max(num / den);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::super::material::{det, neo_hookean};
    use super::*;

    #[test]
    fn exact_coefficients_reproduce_neo_hookean() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (mu, lambda) = (0.9, 1.4);
        for _ in 0..10 {
            let f = sample_deformation(&mut rng, 0.3);
            let h = [lambda * det(&f).ln() - mu, 0.0, 0.0, 0.0, mu, 0.0, 0.0];
            let p = combine_features(&h, &f);
            let want = neo_hookean(&f, mu, lambda).unwrap();
            assert!(p.iter().zip(&want).all(|(a, b)| (a - b).abs() < 1e-12));
        }
    }

    #[test]
    fn zero_network_predicts_zero() {
        let f = sample_deformation(&mut ChaCha8Rng::seed_from_u64(1), 0.3);
        for v in [Variant::Equi3, Variant::Equi7] {
            let net = Mlp::zeros(&[5, 4, v.output_dim()], Activation::Tanh);
            assert_eq!(model_forward(v, &net, &f).unwrap(), [0.0; 9]);
        }
    }

    #[test]
    fn equivariant_variants_at_random_parameters() {
        for v in [Variant::Equi3, Variant::Equi7] {
            let net = new_network(v, &[16, 16], 3);
            assert!(model_equivariance_violation(v, &net, 20, 0.3, 5).unwrap() <= 1e-6);
        }
        let net = new_network(Variant::Mlp, &[16, 16], 3);
        assert!(model_equivariance_violation(Variant::Mlp, &net, 20, 0.3, 5).unwrap() > 1e-2);
    }

    #[test]
    fn model_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let fs: Vec<Mat3> = (0..10).map(|_| sample_deformation(&mut rng, 0.3)).collect();
        let ps: Vec<Mat3> = fs.iter().map(|f| neo_hookean(f, 1.0, 1.0).unwrap()).collect();
        for v in [Variant::Mlp, Variant::Equi3, Variant::Equi7] {
            let data = Prepared::new(v, &fs, &ps);
            let net = new_network(v, &[6, 6], 9);
            let (_, g) = data.loss_and_grad(&net, None).unwrap();
            let h = 1e-6;
            for j in (0..net.params.len()).step_by(7) {
                let (mut a, mut b) = (net.clone(), net.clone());
                a.params[j] += h;
                b.params[j] -= h;
                let fd = (data.mse(&a).unwrap() - data.mse(&b).unwrap()) / (2.0 * h);
                assert!((fd - g[j]).abs() <= 1e-4 * fd.abs().max(1e-6), "{v} param {j}: {fd} vs {}", g[j]);
            }
        }
    }

    #[test]
    fn variant_parsing() {
        assert_eq!("equi7".parse::<Variant>().unwrap(), Variant::Equi7);
        assert_eq!(Variant::Mlp.to_string(), "mlp");
        assert!("equi5".parse::<Variant>().is_err());
    }
}
