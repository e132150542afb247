//! Dense real tensors in row-major layout.
//!
//! Extents in this crate are tiny (3, or 2l+1 for small l), so everything is
//! stored densely and contracted by reshaping to a matrix product.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

fn row_major_strides(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * shape[k + 1];
    }
    strides
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.iter().any(|&e| e == 0) {
            return Err(Error::ShapeMismatch(format!("zero extent in {shape:?}")));
        }
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "shape {shape:?} needs {len} entries, got {}",
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Tensor { shape, data: vec![0.0; len] }
    }

    pub fn scalar(value: f64) -> Self {
        Tensor { shape: Vec::new(), data: vec![value] }
    }

    pub fn vector(values: &[f64]) -> Self {
        Tensor { shape: vec![values.len()], data: values.to_vec() }
    }

    /// Builds a 3x3 tensor from nested rows.
    pub fn matrix3(rows: [[f64; 3]; 3]) -> Self {
        Tensor { shape: vec![3, 3], data: rows.iter().flatten().copied().collect() }
    }

    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let len: usize = shape.iter().product();
        let mut data = Vec::with_capacity(len);
        let mut index = vec![0usize; shape.len()];
        for _ in 0..len {
            data.push(f(&index));
            increment(&mut index, &shape);
        }
        Tensor { shape, data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    fn offset(&self, index: &[usize]) -> usize {
        assert_eq!(index.len(), self.rank(), "index rank mismatch");
        let mut off = 0;
        for (k, (&i, &e)) in index.iter().zip(&self.shape).enumerate() {
            assert!(i < e, "index {i} out of range on axis {k} (extent {e})");
            off = off * e + i;
        }
        off
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: f64) {
        let off = self.offset(index);
        self.data[off] = value;
    }

    /// Value of a rank-0 tensor (or the single entry of a one-element tensor).
    pub fn as_scalar(&self) -> Option<f64> {
        (self.data.len() == 1).then(|| self.data[0])
    }

    pub fn reshape(self, shape: Vec<usize>) -> Result<Self> {
        Tensor::new(shape, self.data)
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn scale(&self, s: f64) -> Self {
        Tensor { shape: self.shape.clone(), data: self.data.iter().map(|x| x * s).collect() }
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &Tensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch(format!(
                "cannot add {:?} to {:?}",
                other.shape, self.shape
            )));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn sub(&self, other: &Tensor) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    /// Full contraction `sum_i a_i b_i`.
    pub fn dot(&self, other: &Tensor) -> Result<f64> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch(format!(
                "cannot pair {:?} with {:?}",
                self.shape, other.shape
            )));
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    /// Axis permutation: axis `k` of the result is axis `perm[k]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        let rank = self.rank();
        let mut seen = vec![false; rank];
        let valid = perm.len() == rank
            && perm.iter().all(|&p| p < rank && !std::mem::replace(&mut seen[p], true));
        if !valid {
            return Err(Error::InvalidPermutation { perm: perm.to_vec(), rank });
        }
        if perm.iter().enumerate().all(|(k, &p)| k == p) {
            return Ok(self.clone());
        }
        let strides = row_major_strides(&self.shape);
        let shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        let src_strides: Vec<usize> = perm.iter().map(|&p| strides[p]).collect();
        let mut data = Vec::with_capacity(self.data.len());
        let mut index = vec![0usize; rank];
        for _ in 0..self.data.len() {
            let off: usize = index.iter().zip(&src_strides).map(|(i, s)| i * s).sum();
            data.push(self.data[off]);
            increment(&mut index, &shape);
        }
        Ok(Tensor { shape, data })
    }

    /// Sums over the diagonal of two distinct axes, removing both.
    pub fn trace(&self, a: usize, b: usize) -> Result<Self> {
        let rank = self.rank();
        if a == b || a >= rank || b >= rank {
            return Err(Error::ShapeMismatch(format!("cannot trace axes {a},{b} of rank {rank}")));
        }
        if self.shape[a] != self.shape[b] {
            return Err(Error::ShapeMismatch(format!(
                "traced axes have extents {} and {}",
                self.shape[a], self.shape[b]
            )));
        }
        let mut perm: Vec<usize> = (0..rank).filter(|&k| k != a && k != b).collect();
        perm.push(a);
        perm.push(b);
        let moved = self.permute(&perm)?;
        let n = self.shape[a];
        let rest: Vec<usize> = moved.shape[..rank - 2].to_vec();
        let outer: usize = rest.iter().product();
        let data = (0..outer)
            .map(|o| (0..n).map(|i| moved.data[o * n * n + i * n + i]).sum())
            .collect();
        Ok(Tensor { shape: rest, data })
    }

    /// Tensor product; axes of `self` come first.
    pub fn outer(&self, other: &Tensor) -> Self {
        let mut shape = self.shape.clone();
        shape.extend_from_slice(&other.shape);
        let mut data = Vec::with_capacity(self.data.len() * other.data.len());
        for a in &self.data {
            data.extend(other.data.iter().map(|b| a * b));
        }
        Tensor { shape, data }
    }

    /// Applies a square matrix (row-major, `n x n`) to one axis:
    /// `out[.., i, ..] = sum_j m[i][j] t[.., j, ..]`.
    pub fn apply_on_axis(&self, axis: usize, m: &[f64]) -> Result<Self> {
        let n = *self
            .shape
            .get(axis)
            .ok_or_else(|| Error::ShapeMismatch(format!("axis {axis} out of range")))?;
        if m.len() != n * n {
            return Err(Error::ShapeMismatch(format!(
                "matrix with {} entries cannot act on an axis of extent {n}",
                m.len()
            )));
        }
        let inner: usize = self.shape[axis + 1..].iter().product();
        let outer: usize = self.shape[..axis].iter().product();
        let mut data = vec![0.0; self.data.len()];
        for o in 0..outer {
            let base = o * n * inner;
            for i in 0..n {
                let dst = &mut data[base + i * inner..base + (i + 1) * inner];
                for j in 0..n {
                    let c = m[i * n + j];
                    if c == 0.0 {
                        continue;
                    }
                    let src = &self.data[base + j * inner..base + (j + 1) * inner];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += c * s;
                    }
                }
            }
        }
        Ok(Tensor { shape: self.shape.clone(), data })
    }
}

/// Row-major odometer increment.
pub(crate) fn increment(index: &mut [usize], shape: &[usize]) {
    for k in (0..index.len()).rev() {
        index[k] += 1;
        if index[k] < shape[k] {
            return;
        }
        index[k] = 0;
    }
}

/// The 3x3 identity.
pub fn delta() -> Tensor {
    Tensor::from_fn(vec![3, 3], |i| if i[0] == i[1] { 1.0 } else { 0.0 })
}

/// Levi-Civita symbol on three 3-dimensional axes.
pub fn epsilon() -> Tensor {
    Tensor::from_fn(vec![3, 3, 3], |i| levi_civita(i[0], i[1], i[2]) as f64)
}

pub fn levi_civita(i: usize, j: usize, k: usize) -> i64 {
    if i == j || j == k || i == k {
        0
    } else if (i, j, k) == (0, 1, 2) || (i, j, k) == (1, 2, 0) || (i, j, k) == (2, 0, 1) {
        1
    } else {
        -1
    }
}

/// Contracts `a` with `b` over the listed axis pairs. Remaining axes of `a`
/// come first, then those of `b`, each in their original order.
pub fn contract(a: &Tensor, b: &Tensor, pairs: &[(usize, usize)]) -> Result<Tensor> {
    let mut used_a = vec![false; a.rank()];
    let mut used_b = vec![false; b.rank()];
    for &(i, j) in pairs {
        if i >= a.rank() || j >= b.rank() {
            return Err(Error::ShapeMismatch(format!(
                "pair ({i},{j}) out of range for ranks {} and {}",
                a.rank(),
                b.rank()
            )));
        }
        if std::mem::replace(&mut used_a[i], true) || std::mem::replace(&mut used_b[j], true) {
            return Err(Error::ShapeMismatch(format!("axis paired twice in {pairs:?}")));
        }
        if a.shape[i] != b.shape[j] {
            return Err(Error::ShapeMismatch(format!(
                "paired axes ({i},{j}) have extents {} and {}",
                a.shape[i], b.shape[j]
            )));
        }
    }
    let free_a: Vec<usize> = (0..a.rank()).filter(|&k| !used_a[k]).collect();
    let free_b: Vec<usize> = (0..b.rank()).filter(|&k| !used_b[k]).collect();

    let perm_a: Vec<usize> = free_a.iter().copied().chain(pairs.iter().map(|p| p.0)).collect();
    let perm_b: Vec<usize> = pairs.iter().map(|p| p.1).chain(free_b.iter().copied()).collect();
    let at = a.permute(&perm_a)?;
    let bt = b.permute(&perm_b)?;

    let m: usize = free_a.iter().map(|&k| a.shape[k]).product();
    let n: usize = free_b.iter().map(|&k| b.shape[k]).product();
    let kdim: usize = pairs.iter().map(|p| a.shape[p.0]).product();

    let mut data = vec![0.0; m * n];
    for i in 0..m {
        let row = &mut data[i * n..(i + 1) * n];
        for k in 0..kdim {
            let aik = at.data[i * kdim + k];
            if aik == 0.0 {
                continue;
            }
            let brow = &bt.data[k * n..(k + 1) * n];
            for (r, bv) in row.iter_mut().zip(brow) {
                *r += aik * bv;
            }
        }
    }
    let shape = free_a
        .iter()
        .map(|&k| a.shape[k])
        .chain(free_b.iter().map(|&k| b.shape[k]))
        .collect();
    Ok(Tensor { shape, data })
}
