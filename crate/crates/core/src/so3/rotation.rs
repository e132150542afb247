use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// A proper rotation in its defining 3x3 representation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation {
    m: [[f64; 3]; 3],
}

impl Rotation {
    pub fn identity() -> Self {
        Rotation { m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] }
    }

    /// Accepts a matrix that is special orthogonal to within `1e-12`.
    pub fn from_matrix(m: [[f64; 3]; 3]) -> Result<Self> {
        let r = Rotation { m };
        let orth = r.orthogonality_error();
        let det = r.det();
        if orth > 1e-12 || (det - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidType(format!(
                "not a rotation: |R^T R - I| = {orth:e}, det = {det}"
            )));
        }
        Ok(r)
    }

    /// Unit quaternion `(w, x, y, z)` to matrix.
    pub fn from_quaternion(q: [f64; 4]) -> Self {
        let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        let [w, x, y, z] = q.map(|v| v / n);
        Rotation {
            m: [
                [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
                [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
                [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
            ],
        }
    }

    /// Haar-distributed rotation from a uniformly random unit quaternion
    /// (Shoemake's subgroup algorithm).
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let u1: f64 = rng.gen();
        let u2: f64 = rng.gen();
        let u3: f64 = rng.gen();
        let tau = std::f64::consts::TAU;
        let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
        Self::from_quaternion([
            a * (tau * u2).sin(),
            a * (tau * u2).cos(),
            b * (tau * u3).sin(),
            b * (tau * u3).cos(),
        ])
    }

    pub fn matrix(&self) -> [[f64; 3]; 3] {
        self.m
    }

    /// Row-major 9-vector.
    pub fn flat(&self) -> [f64; 9] {
        let mut out = [0.0; 9];
        for i in 0..3 {
            out[i * 3..i * 3 + 3].copy_from_slice(&self.m[i]);
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.m[j][i];
            }
        }
        Rotation { m }
    }

    /// `self * other`.
    pub fn compose(&self, other: &Rotation) -> Self {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| self.m[i][k] * other.m[k][j]).sum();
            }
        }
        Rotation { m }
    }

    pub fn det(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// `max |(R^T R - I)_ij|`.
    pub fn orthogonality_error(&self) -> f64 {
        let rtr = self.transpose().compose(self);
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((rtr.m[i][j] - target).abs());
            }
        }
        worst
    }
}

/// Deterministic Haar rotation for a seed.
pub fn random_rotation(seed: u64) -> Rotation {
    Rotation::random(&mut ChaCha8Rng::seed_from_u64(seed))
}

/// Applies `R` to every axis of a Cartesian tensor.
pub fn rotate_cartesian(r: &Rotation, t: &Tensor) -> Result<Tensor> {
    if let Some(e) = t.shape().iter().find(|&&e| e != 3) {
        return Err(Error::ShapeMismatch(format!(
            "Cartesian tensors need extent-3 axes, found {e}"
        )));
    }
    let m = r.flat();
    let mut out = t.clone();
    for axis in 0..t.rank() {
        out = out.apply_on_axis(axis, &m)?;
    }
    Ok(out)
}
