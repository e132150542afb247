//! Projectors `P_l` from the `l`-fold vector tensor power onto type `l`, and
//! the real irreducible representation matrices they induce.
//!
//! Coefficients are first built in the complex `|m>` basis and then moved to
//! a real basis on every axis. The real components of type `l` are indexed by
//! `k = 0..2l`, with `m = k - l`; negative `m` holds the sine-type combination
//! `(|m| - (-1)^m |-m|)/(i sqrt 2)` of `|m|`, positive `m` the cosine-type
//! `(|m> + (-1)^m |-m>)/sqrt 2`. Extent-3 axes use the same convention for
//! `l = 1`, which makes `P_1` the identity: Cartesian components are the real
//! type-1 components.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::rotation::{rotate_cartesian, Rotation};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Highest type for which dense projectors are built.
pub const MAX_PROJECTOR_TYPE: usize = 8;

#[derive(Clone, Debug)]
pub struct Projector {
    l: usize,
    p: Tensor,
}

impl Projector {
    pub fn l(&self) -> usize {
        self.l
    }

    /// Shape `[2l+1, 3, .., 3]`.
    pub fn tensor(&self) -> &Tensor {
        &self.p
    }

    /// `max |P P^T - I|`, contracting all extent-3 axes.
    pub fn isometry_residual(&self) -> f64 {
        let n = 2 * self.l + 1;
        let cols = self.p.len() / n;
        let d = self.p.data();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let s: f64 = (0..cols).map(|c| d[i * cols + c] * d[j * cols + c]).sum();
                worst = worst.max((s - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        worst
    }
}

/// Orthogonal `(2l+1) x (2l+1)` matrix of type `l` for some rotation.
#[derive(Clone, Debug, PartialEq)]
pub struct IrrepMatrix {
    pub l: usize,
    /// Row-major.
    pub d: Vec<f64>,
}

impl IrrepMatrix {
    pub fn dim(&self) -> usize {
        2 * self.l + 1
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.dim() + j]
    }

    pub fn apply(&self, v: &Tensor) -> Result<Tensor> {
        if v.shape() != [self.dim()] {
            return Err(Error::ShapeMismatch(format!(
                "type-{} matrix cannot act on shape {:?}",
                self.l,
                v.shape()
            )));
        }
        v.apply_on_axis(0, &self.d)
    }

    pub fn mul(&self, other: &IrrepMatrix) -> IrrepMatrix {
        let n = self.dim();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.d[i * n + k];
                for j in 0..n {
                    d[i * n + j] += a * other.d[k * n + j];
                }
            }
        }
        IrrepMatrix { l: self.l, d }
    }

    /// `max |D^T D - I|`.
    pub fn orthogonality_error(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let s: f64 = (0..n).map(|k| self.d[k * n + i] * self.d[k * n + j]).sum();
                worst = worst.max((s - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        worst
    }
}

/// Lowering operator of type `l` in the `|m>` basis ordered `m = l, .., -l`.
pub fn lowering_op(l: usize) -> Vec<f64> {
    let n = 2 * l + 1;
    let mut out = vec![0.0; n * n];
    let lf = l as f64;
    for i in 0..n - 1 {
        let m = lf - i as f64;
        out[(i + 1) * n + i] = ((lf + m) * (lf - m + 1.0)).sqrt();
    }
    out
}

/// Row `k` holds the real component `k` as a combination of complex
/// components indexed by `j = m + l`.
fn complex_to_real(l: usize) -> Vec<Complex64> {
    let n = 2 * l + 1;
    let mut u = vec![Complex64::new(0.0, 0.0); n * n];
    let h = std::f64::consts::FRAC_1_SQRT_2;
    u[l * n + l] = Complex64::new(1.0, 0.0);
    for m in 1..=l {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        let (pos, neg) = (l + m, l - m);
        u[(l + m) * n + pos] = Complex64::new(h, 0.0);
        u[(l + m) * n + neg] = Complex64::new(sign * h, 0.0);
        u[(l - m) * n + pos] = Complex64::new(0.0, h);
        u[(l - m) * n + neg] = Complex64::new(0.0, -sign * h);
    }
    u
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|v| v as f64).product()
}

/// Projector coefficients in the complex basis: axis 0 indexed by `m + l`,
/// each extent-3 axis by `s + 1` with `s` in `{-1, 0, 1}`.
pub(crate) fn complex_projector(l: usize) -> Tensor {
    let mut shape = vec![2 * l + 1];
    shape.extend(std::iter::repeat(3).take(l));
    let two_l = factorial(2 * l);
    Tensor::from_fn(shape, |idx| {
        let m = idx[0] as i64 - l as i64;
        let s: Vec<i64> = idx[1..].iter().map(|&a| a as i64 - 1).collect();
        if s.iter().sum::<i64>() != m {
            return 0.0;
        }
        let minus = s.iter().filter(|&&v| v == -1).count() as i32;
        let lm = (l as i64 - m) as usize;
        let lp = (l as i64 + m) as usize;
        (factorial(lm) * factorial(lp) * 2f64.powi(lm as i32) / two_l).sqrt() / 2f64.powi(minus)
    })
}

fn apply_complex(re: &Tensor, im: &Tensor, axis: usize, m: &[Complex64]) -> Result<(Tensor, Tensor)> {
    let a: Vec<f64> = m.iter().map(|c| c.re).collect();
    let b: Vec<f64> = m.iter().map(|c| c.im).collect();
    let (ar, ai) = (re.apply_on_axis(axis, &a)?, im.apply_on_axis(axis, &a)?);
    let (br, bi) = (re.apply_on_axis(axis, &b)?, im.apply_on_axis(axis, &b)?);
    let mut imag = ai;
    imag.axpy(1.0, &br)?;
    Ok((ar.sub(&bi)?, imag))
}

fn build_projector(l: usize) -> Result<Projector> {
    let pc = complex_projector(l);
    let mut re = pc;
    let mut im = Tensor::zeros(re.shape().to_vec());
    let ul = complex_to_real(l);
    (re, im) = apply_complex(&re, &im, 0, &ul)?;
    // Extent-3 axes carry covariant indices: w_complex = U_1^dagger w_real,
    // so the coefficient tensor picks up conj(U_1) on each of them.
    let u1_conj: Vec<Complex64> = complex_to_real(1).iter().map(|c| c.conj()).collect();
    for axis in 1..=l {
        (re, im) = apply_complex(&re, &im, axis, &u1_conj)?;
    }
    let residual = im.max_abs();
    if residual > 1e-10 {
        return Err(Error::BasisConvention(residual));
    }
    // snap round-off on integer entries so that P_1 is exactly the identity
    let data = re
        .data()
        .iter()
        .map(|&v| if (v - v.round()).abs() < 1e-14 { v.round() } else { v })
        .collect();
    Ok(Projector { l, p: Tensor::new(re.shape().to_vec(), data)? })
}

/// Cached projector `P_l`.
pub fn projector(l: usize) -> Result<Arc<Projector>> {
    if l > MAX_PROJECTOR_TYPE {
        return Err(Error::InvalidType(format!(
            "projector type {l} exceeds the cap of {MAX_PROJECTOR_TYPE}"
        )));
    }
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Projector>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(p) = cache.lock().unwrap().get(&l) {
        return Ok(p.clone());
    }
    let p = Arc::new(build_projector(l)?);
    cache.lock().unwrap().insert(l, p.clone());
    Ok(p)
}

/// `D^l(R) = P_l R^{(x)l} P_l^T`.
pub fn irrep_matrix(r: &Rotation, l: usize) -> Result<IrrepMatrix> {
    let p = projector(l)?;
    let n = 2 * l + 1;
    let cols = p.tensor().len() / n;
    // rotating every extent-3 axis of P rotates each row as a rank-l tensor
    let mut rotated = p.tensor().clone();
    let m = r.flat();
    for axis in 1..=l {
        rotated = rotated.apply_on_axis(axis, &m)?;
    }
    let (pd, rd) = (p.tensor().data(), rotated.data());
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            d[i * n + j] = (0..cols).map(|c| pd[i * cols + c] * rd[j * cols + c]).sum();
        }
    }
    Ok(IrrepMatrix { l, d })
}

/// Applies `D^{reps[i]}(R)` to axis `i` of `t`.
pub fn act_on_axes(r: &Rotation, t: &Tensor, reps: &[usize]) -> Result<Tensor> {
    if reps.len() != t.rank() {
        return Err(Error::ShapeMismatch(format!(
            "{} representation types for a rank-{} tensor",
            reps.len(),
            t.rank()
        )));
    }
    let mut out = t.clone();
    for (axis, &l) in reps.iter().enumerate() {
        if t.shape()[axis] != 2 * l + 1 {
            return Err(Error::ShapeMismatch(format!(
                "axis {axis} has extent {} but type {l} needs {}",
                t.shape()[axis],
                2 * l + 1
            )));
        }
        if l == 1 {
            out = out.apply_on_axis(axis, &r.flat())?;
        } else if l > 0 {
            out = out.apply_on_axis(axis, &irrep_matrix(r, l)?.d)?;
        }
    }
    Ok(out)
}

/// Checks `prod_i D^{l_i}(g)` leaves `t` unchanged for 50 seeded random
/// rotations, within `tol` (max-abs).
pub fn is_symmetric_tensor(t: &Tensor, reps: &[usize], tol: f64) -> Result<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    for _ in 0..50 {
        let r = Rotation::random(&mut rng);
        let moved = act_on_axes(&r, t, reps)?;
        if moved.sub(t)?.max_abs() > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Each row of `P_l` rotated as a rank-`l` Cartesian tensor, i.e. `P_l (R^{(x)l})^T`.
pub fn rotate_rows(r: &Rotation, p: &Projector) -> Result<Tensor> {
    let n = 2 * p.l() + 1;
    let cols = p.tensor().len() / n;
    let mut out = Vec::with_capacity(p.tensor().len());
    let row_shape = vec![3; p.l()];
    for i in 0..n {
        let row = Tensor::new(row_shape.clone(), p.tensor().data()[i * cols..(i + 1) * cols].to_vec())?;
        out.extend(rotate_cartesian(r, &row)?.into_data());
    }
    Tensor::new(p.tensor().shape().to_vec(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::rotation::random_rotation;
    use crate::tensor::{delta, epsilon};

    #[test]
    fn lowering_op_small_cases() {
        let r2 = 2f64.sqrt();
        assert_eq!(lowering_op(1), vec![0.0, 0.0, 0.0, r2, 0.0, 0.0, 0.0, r2, 0.0]);
        assert_eq!(lowering_op(0), vec![0.0]);
    }

    #[test]
    fn lowering_op_is_nilpotent() {
        for l in 0..=4 {
            let n = 2 * l + 1;
            let base = lowering_op(l);
            let mut pow = base.clone();
            for _ in 1..n {
                let mut next = vec![0.0; n * n];
                for i in 0..n {
                    for k in 0..n {
                        for j in 0..n {
                            next[i * n + j] += pow[i * n + k] * base[k * n + j];
                        }
                    }
                }
                pow = next;
            }
            assert!(pow.iter().all(|v| v.abs() < 1e-12), "l={l}");
        }
    }

    /// Independent route to the complex projector: lower the highest-weight
    /// state |1,..,1> with the total lowering operator and normalise.
    #[test]
    fn complex_projector_matches_repeated_lowering() {
        for l in 1..=4usize {
            let pc = complex_projector(l);
            let cols = 3usize.pow(l as u32);
            // single-leg lowering in the s+1 indexing: L-|s> = c |s-1>
            let lower_leg = |s: usize| -> Option<(usize, f64)> {
                if s == 0 { None } else { Some((s - 1, 2f64.sqrt())) }
            };
            let mut state = vec![0.0; cols];
            state[cols - 1] = 1.0; // all legs at s = +1
            for k in 0..=(2 * l) {
                let m_index = 2 * l - k;
                let norm = state.iter().map(|v| v * v).sum::<f64>().sqrt();
                let row: Vec<f64> = state.iter().map(|v| v / norm).collect();
                let expect = &pc.data()[m_index * cols..(m_index + 1) * cols];
                for (a, b) in row.iter().zip(expect) {
                    assert!((a - b).abs() < 1e-12, "l={l} m_index={m_index}");
                }
                let mut next = vec![0.0; cols];
                for (flat, &amp) in state.iter().enumerate() {
                    if amp == 0.0 {
                        continue;
                    }
                    let digits: Vec<usize> =
                        (0..l).map(|p| (flat / 3usize.pow((l - 1 - p) as u32)) % 3).collect();
                    for p in 0..l {
                        if let Some((s, c)) = lower_leg(digits[p]) {
                            let mut d = digits.clone();
                            d[p] = s;
                            let f = d.iter().fold(0, |acc, &x| acc * 3 + x);
                            next[f] += c * amp;
                        }
                    }
                }
                state = next;
            }
        }
    }

    #[test]
    fn p1_is_identity() {
        assert_eq!(projector(1).unwrap().tensor(), &delta());
        let p0 = projector(0).unwrap();
        assert_eq!(p0.tensor().data(), &[1.0]);
    }

    #[test]
    fn projectors_are_isometries() {
        for l in 0..=6 {
            assert!(projector(l).unwrap().isometry_residual() < 1e-10, "l={l}");
        }
    }

    #[test]
    fn irrep_matrices() {
        let r = random_rotation(11);
        let d1 = irrep_matrix(&r, 1).unwrap();
        for (a, b) in d1.d.iter().zip(r.flat()) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(irrep_matrix(&r, 0).unwrap().d, vec![1.0]);
        let (r1, r2) = (random_rotation(1), random_rotation(2));
        for l in 0..=4 {
            let lhs = irrep_matrix(&r1.compose(&r2), l).unwrap();
            let rhs = irrep_matrix(&r1, l).unwrap().mul(&irrep_matrix(&r2, l).unwrap());
            let err = lhs.d.iter().zip(&rhs.d).fold(0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(err < 1e-9, "l={l} err={err}");
            assert!(lhs.orthogonality_error() < 1e-10);
        }
    }

    #[test]
    fn symmetric_tensor_predicate() {
        assert!(is_symmetric_tensor(&delta(), &[1, 1], 1e-10).unwrap());
        assert!(is_symmetric_tensor(&epsilon(), &[1, 1, 1], 1e-10).unwrap());
        let generic = Tensor::from_fn(vec![3, 3], |i| (i[0] * 3 + i[1]) as f64 * 0.1 + 0.05);
        assert!(!is_symmetric_tensor(&generic, &[1, 1], 1e-10).unwrap());
        assert!(is_symmetric_tensor(&delta(), &[2], 1e-10).is_err());
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(projector(9), Err(Error::InvalidType(_))));
    }
}
