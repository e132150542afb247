//! Clebsch-Gordan tensors and the change of basis that splits the vector
//! tensor power into irreducible blocks.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::multiplicity::multiplicity;
use super::projector::irrep_matrix;
use super::rotation::Rotation;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Highest tensor power for which `O_l` is built densely.
pub const MAX_CHANGE_OF_BASIS: usize = 6;

/// Real CG tensor of shape `[2la+1, 2lb+1, 2lc+1]`, normalised so that its
/// full self-contraction equals `2lc+1`. `valid` is false (and the tensor is
/// zero) when the triangle inequality fails.
#[derive(Clone, Debug)]
pub struct CgTensor {
    pub la: usize,
    pub lb: usize,
    pub lc: usize,
    pub valid: bool,
    pub c: Tensor,
}

pub fn triangle(la: usize, lb: usize, lc: usize) -> bool {
    la.abs_diff(lb) <= lc && lc <= la + lb
}

fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    DMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Orthonormal basis of the tensors with axis types `reps` that are
/// invariant under the simultaneous action of every rotation. Computed as
/// the null space of `sum_k (A_k - I)^T (A_k - I)` over a few seeded random
/// rotations `A_k`.
pub fn invariant_tensors(reps: &[usize]) -> Result<Vec<Tensor>> {
    let shape: Vec<usize> = reps.iter().map(|l| 2 * l + 1).collect();
    let n: usize = shape.iter().product();
    let mut rng = ChaCha8Rng::seed_from_u64(0xc6_0001);
    let mut gram = DMatrix::<f64>::zeros(n, n);
    for _ in 0..3 {
        let r = Rotation::random(&mut rng);
        let mut a = DMatrix::<f64>::identity(1, 1);
        for &l in reps {
            let d = irrep_matrix(&r, l)?;
            let k = d.dim();
            a = kron(&a, &DMatrix::from_row_slice(k, k, &d.d));
        }
        let b = a - DMatrix::<f64>::identity(n, n);
        gram += b.transpose() * &b;
    }
    let eig = SymmetricEigen::new(gram);
    let scale = eig.eigenvalues.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut out = Vec::new();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    for i in order {
        if eig.eigenvalues[i] > 1e-9 * scale {
            break;
        }
        let v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
        out.push(Tensor::new(shape.clone(), v)?);
    }
    Ok(out)
}

fn fix_sign(t: &mut Tensor) {
    if let Some(first) = t.data().iter().find(|v| v.abs() > 1e-9).copied() {
        if first < 0.0 {
            for v in t.data_mut() {
                *v = -*v;
            }
        }
    }
}

fn build_cg(la: usize, lb: usize, lc: usize) -> Result<CgTensor> {
    let shape = vec![2 * la + 1, 2 * lb + 1, 2 * lc + 1];
    if !triangle(la, lb, lc) {
        return Ok(CgTensor { la, lb, lc, valid: false, c: Tensor::zeros(shape) });
    }
    let mut space = invariant_tensors(&[la, lb, lc])?;
    if space.len() != 1 {
        return Err(Error::InvalidType(format!(
            "coupling ({la},{lb})->{lc} has a {}-dimensional invariant space",
            space.len()
        )));
    }
    let mut c = space.pop().unwrap();
    let norm = c.norm();
    c = c.scale(((2 * lc + 1) as f64).sqrt() / norm);
    for v in c.data_mut() {
        if v.abs() < 1e-14 {
            *v = 0.0;
        }
    }
    fix_sign(&mut c);
    Ok(CgTensor { la, lb, lc, valid: true, c })
}

/// Cached real CG tensor coupling `la (x) lb -> lc`.
pub fn cg(la: usize, lb: usize, lc: usize) -> Result<Arc<CgTensor>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize, usize), Arc<CgTensor>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(c) = cache.lock().unwrap().get(&(la, lb, lc)) {
        return Ok(c.clone());
    }
    let c = Arc::new(build_cg(la, lb, lc)?);
    cache.lock().unwrap().insert((la, lb, lc), c.clone());
    Ok(c)
}

/// Square orthogonal matrix (row-major) with its row blocks labelled by type.
#[derive(Clone, Debug)]
pub struct BlockMatrix {
    pub size: usize,
    /// Row-major `size x size`.
    pub m: Vec<f64>,
    /// `(type, first row)` for every irreducible row block, in row order.
    pub blocks: Vec<(usize, usize)>,
}

impl BlockMatrix {
    /// `max |M M^T - I|`; rows and columns are both orthonormal for a square
    /// orthogonal matrix.
    pub fn orthogonality_error(&self) -> f64 {
        let n = self.size;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let s: f64 = (0..n).map(|k| self.m[i * n + k] * self.m[j * n + k]).sum();
                worst = worst.max((s - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        worst
    }

    /// Number of row blocks of the given type.
    pub fn count_type(&self, l: usize) -> usize {
        self.blocks.iter().filter(|b| b.0 == l).count()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.m[i * self.size..(i + 1) * self.size]
    }
}

/// Orthogonal map `(l) (x) (1) -> (l+1) + (l) + (l-1)`. Input index is
/// `r * 3 + s`; output rows are grouped in that type order. For `l = 0`
/// only the `(1)` block exists.
pub fn coupling_q(l: usize) -> Result<BlockMatrix> {
    let size = 3 * (2 * l + 1);
    let mut m = Vec::with_capacity(size * size);
    let mut blocks = Vec::new();
    let targets: Vec<usize> = if l == 0 { vec![1] } else { vec![l + 1, l, l - 1] };
    for lc in targets {
        blocks.push((lc, m.len() / size));
        let c = cg(l, 1, lc)?;
        let nc = 2 * lc + 1;
        for t in 0..nc {
            for rs in 0..size {
                m.push(c.c.data()[rs * nc + t]);
            }
        }
    }
    debug_assert_eq!(m.len(), size * size);
    Ok(BlockMatrix { size, m, blocks })
}

fn build_change_of_basis(l: usize) -> Result<BlockMatrix> {
    // (1)^{(x)1} is already irreducible
    let mut cur = BlockMatrix {
        size: 3,
        m: vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
        blocks: vec![(1, 0)],
    };
    for _ in 1..l {
        let old = cur.size;
        let size = old * 3;
        let mut rows: Vec<(usize, Vec<f64>)> = Vec::with_capacity(size);
        for &(t, r0) in &cur.blocks {
            let q = coupling_q(t)?;
            let d = 2 * t + 1;
            for &(lc, q0) in &q.blocks {
                for qi in q0..q0 + 2 * lc + 1 {
                    let qrow = q.row(qi);
                    let mut row = vec![0.0; size];
                    for a in 0..old {
                        for s in 0..3 {
                            let mut v = 0.0;
                            for r in 0..d {
                                v += qrow[r * 3 + s] * cur.m[(r0 + r) * old + a];
                            }
                            row[a * 3 + s] = v;
                        }
                    }
                    rows.push((lc, row));
                }
            }
        }
        // regroup by type, highest first, keeping the relative order
        let mut order: Vec<usize> = (0..rows.len()).collect();
        order.sort_by(|&i, &j| rows[j].0.cmp(&rows[i].0).then(i.cmp(&j)));
        let mut m = Vec::with_capacity(size * size);
        let mut blocks = Vec::new();
        let mut row_types = Vec::with_capacity(size);
        for &i in &order {
            row_types.push(rows[i].0);
            m.extend_from_slice(&rows[i].1);
        }
        let mut i = 0;
        while i < size {
            let t = row_types[i];
            blocks.push((t, i));
            i += 2 * t + 1;
        }
        cur = BlockMatrix { size, m, blocks };
    }
    Ok(cur)
}

/// Orthogonal change of basis `(1)^{(x)l} -> sum_s (s)^{d_{l,s}}`, rows grouped
/// by type from `l` down to 0.
pub fn change_of_basis_o(l: usize) -> Result<Arc<BlockMatrix>> {
    if l == 0 || l > MAX_CHANGE_OF_BASIS {
        return Err(Error::InvalidType(format!(
            "change of basis is built for tensor powers 1..={MAX_CHANGE_OF_BASIS}, not {l}"
        )));
    }
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<BlockMatrix>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(o) = cache.lock().unwrap().get(&l) {
        return Ok(o.clone());
    }
    let o = Arc::new(build_change_of_basis(l)?);
    cache.lock().unwrap().insert(l, o.clone());
    Ok(o)
}

/// Smallest tensor power that contains every requested type with enough
/// multiplicity.
pub fn sum_projector_rank(types: &[usize]) -> usize {
    let top = types.iter().copied().max().unwrap_or(0);
    if types.iter().all(|&t| t == 0) && types.len() == 1 {
        return 0;
    }
    let mut r = top.max(1);
    loop {
        let fits = types.iter().all(|&t| {
            let need = types.iter().filter(|&&u| u == t).count() as u64;
            multiplicity(r as u32, t as u32).map(|d| d >= need).unwrap_or(false)
        });
        if fits {
            return r;
        }
        r += 1;
    }
}

/// Projector onto a direct sum of types: rows are picked from the matching
/// irreducible blocks of `O_r`, one block per listed type. Shape
/// `[sum (2 l_i + 1), 3, .., 3]`.
pub fn sum_projector(types: &[usize]) -> Result<Arc<Tensor>> {
    if types.is_empty() {
        return Err(Error::InvalidType("empty direct sum".into()));
    }
    static CACHE: OnceLock<Mutex<HashMap<Vec<usize>, Arc<Tensor>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(p) = cache.lock().unwrap().get(types) {
        return Ok(p.clone());
    }
    let r = sum_projector_rank(types);
    let dim: usize = types.iter().map(|l| 2 * l + 1).sum();
    let mut shape = vec![dim];
    shape.extend(std::iter::repeat(3).take(r));
    let tensor = if r == 0 {
        Tensor::new(shape, vec![1.0])?
    } else {
        let o = change_of_basis_o(r)?;
        let mut used = vec![false; o.blocks.len()];
        let mut data = Vec::with_capacity(dim * o.size);
        for &t in types {
            let b = (0..o.blocks.len())
                .find(|&b| !used[b] && o.blocks[b].0 == t)
                .ok_or_else(|| Error::InvalidType(format!("type {t} missing from (1)^{r}")))?;
            used[b] = true;
            let start = o.blocks[b].1;
            for i in start..start + 2 * t + 1 {
                data.extend_from_slice(o.row(i));
            }
        }
        Tensor::new(shape, data)?
    };
    let p = Arc::new(tensor);
    cache.lock().unwrap().insert(types.to_vec(), p.clone());
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::projector::act_on_axes;
    use crate::so3::rotation::random_rotation;
    use crate::tensor::{delta, epsilon};

    fn proportional(a: &Tensor, b: &Tensor) -> f64 {
        let k = a.dot(b).unwrap() / b.dot(b).unwrap();
        a.sub(&b.scale(k)).unwrap().norm() / a.norm()
    }

    #[test]
    fn cg_low_orders() {
        let c110 = cg(1, 1, 0).unwrap();
        let pairing = delta().reshape(vec![3, 3, 1]).unwrap();
        assert!(proportional(&c110.c, &pairing) < 1e-10);
        let c111 = cg(1, 1, 1).unwrap();
        assert!(proportional(&c111.c, &epsilon()) < 1e-10);
        let c112 = cg(1, 1, 2).unwrap();
        assert!((c112.c.dot(&c112.c).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn cg_triangle_violation_is_flagged() {
        let c = cg(1, 1, 3).unwrap();
        assert!(!c.valid);
        assert_eq!(c.c.max_abs(), 0.0);
    }

    #[test]
    fn cg_is_an_intertwiner() {
        for (la, lb, lc) in [(1, 1, 2), (2, 1, 2), (2, 2, 2), (1, 2, 3), (2, 2, 4)] {
            let c = cg(la, lb, lc).unwrap();
            for seed in 0..5 {
                let r = random_rotation(100 + seed);
                let moved = act_on_axes(&r, &c.c, &[la, lb, lc]).unwrap();
                assert!(moved.sub(&c.c).unwrap().max_abs() < 1e-9, "({la},{lb},{lc})");
            }
        }
    }

    #[test]
    fn invariant_space_is_one_dimensional_on_the_triangle() {
        for (la, lb, lc) in [(0, 0, 0), (1, 1, 0), (1, 1, 1), (1, 2, 2), (2, 2, 3), (3, 2, 1)] {
            assert_eq!(invariant_tensors(&[la, lb, lc]).unwrap().len(), 1);
        }
        assert_eq!(invariant_tensors(&[1, 1, 3]).unwrap().len(), 0);
        // rank-4 vector invariants: three delta pairings
        assert_eq!(invariant_tensors(&[1, 1, 1, 1]).unwrap().len(), 3);
    }

    #[test]
    fn q_blocks() {
        for l in 1..=4 {
            let q = coupling_q(l).unwrap();
            assert_eq!(q.size, 3 * (2 * l + 1));
            assert!(q.orthogonality_error() < 1e-10);
            assert_eq!(q.blocks.iter().map(|b| b.0).collect::<Vec<_>>(), vec![l + 1, l, l - 1]);
        }
        // the type-0 row of Q_1 is the normalised trace
        let q = coupling_q(1).unwrap();
        let trace_row = q.row(8);
        let d = 1.0 / 3f64.sqrt();
        let expect = [d, 0.0, 0.0, 0.0, d, 0.0, 0.0, 0.0, d];
        let sign = trace_row[0].signum();
        for (a, b) in trace_row.iter().zip(expect) {
            assert!((a - sign * b).abs() < 1e-10);
        }
    }

    #[test]
    fn change_of_basis_groups() {
        let o2 = change_of_basis_o(2).unwrap();
        assert_eq!(o2.blocks, vec![(2, 0), (1, 5), (0, 8)]);
        let o3 = change_of_basis_o(3).unwrap();
        assert_eq!(o3.count_type(2), 2);
        assert_eq!(o3.count_type(1), 3);
        for l in 1..=4 {
            assert!(change_of_basis_o(l).unwrap().orthogonality_error() < 1e-9);
        }
    }

    #[test]
    fn sum_projector_rows_transform_blockwise() {
        let types = [1, 2, 0];
        let p = sum_projector(&types).unwrap();
        assert_eq!(sum_projector_rank(&types), 2);
        assert_eq!(p.shape(), &[9, 3, 3]);
        let r = random_rotation(5);
        // rotating the extent-3 axes of a row gives P (R^T)^{(x)2} = D(R)^T P
        let mut rot = (*p).clone();
        for axis in 1..3 {
            rot = rot.apply_on_axis(axis, &r.flat()).unwrap();
        }
        let mut block_t = vec![0.0; 81];
        let mut off = 0;
        for &t in &types {
            let d = irrep_matrix(&r, t).unwrap();
            let n = d.dim();
            for i in 0..n {
                for j in 0..n {
                    block_t[(off + j) * 9 + off + i] = d.get(i, j);
                }
            }
            off += n;
        }
        let expect = p.apply_on_axis(0, &block_t).unwrap();
        assert!(rot.sub(&expect).unwrap().max_abs() < 1e-9);
    }

    #[test]
    fn sum_projector_rank_accounts_for_multiplicity() {
        assert_eq!(sum_projector_rank(&[0]), 0);
        assert_eq!(sum_projector_rank(&[2, 2]), 3);
        assert_eq!(sum_projector_rank(&[1, 3, 0]), 3);
        assert_eq!(sum_projector_rank(&[0, 0]), 4);
    }
}
