//! 3x3 matrices as row-major `[f64; 9]`, the two constitutive laws and the
//! deformation sampler.

use rand::Rng;

use crate::error::{Error, Result};

pub type Mat3 = [f64; 9];

pub const IDENTITY: Mat3 = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];

pub fn matmul(a: &Mat3, b: &Mat3) -> Mat3 {
    std::array::from_fn(|k| {
        let (i, j) = (k / 3, k % 3);
        (0..3).map(|m| a[3 * i + m] * b[3 * m + j]).sum()
    })
}

pub fn transpose(a: &Mat3) -> Mat3 {
    std::array::from_fn(|k| a[3 * (k % 3) + k / 3])
}

pub fn trace(a: &Mat3) -> f64 {
    a[0] + a[4] + a[8]
}

pub fn det(a: &Mat3) -> f64 {
    a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) + a[2] * (a[3] * a[7] - a[4] * a[6])
}

/// `R A R^T`.
pub fn conjugate(r: &Mat3, a: &Mat3) -> Mat3 {
    matmul(&matmul(r, a), &transpose(r))
}

/// `mu (F + F^T - 2I) + lambda (tr F - 3) I`.
pub fn linear_law(f: &Mat3, mu: f64, lambda: f64) -> Mat3 {
    let tr = trace(f) - 3.0;
    std::array::from_fn(|k| mu * (f[k] + f[3 * (k % 3) + k / 3] - 2.0 * IDENTITY[k]) + lambda * tr * IDENTITY[k])
}

/// `mu (F F^T - I) + lambda log(det F) I`.
pub fn neo_hookean(f: &Mat3, mu: f64, lambda: f64) -> Result<Mat3> {
    let d = det(f);
    if d <= 0.0 {
        return Err(Error::NonPhysicalDeformation(d));
    }
    let ff = matmul(f, &transpose(f));
    let ld = d.ln();
    Ok(std::array::from_fn(|k| mu * (ff[k] - IDENTITY[k]) + lambda * ld * IDENTITY[k]))
}

/// Smallest accepted determinant of a sampled deformation.
pub const DET_FLOOR: f64 = 0.1;

/// `I + a N` with `N` uniform in `[-1, 1]`, redrawn until `det > 0.1`.
pub fn sample_deformation<R: Rng + ?Sized>(rng: &mut R, amplitude: f64) -> Mat3 {
    loop {
        let f: Mat3 = std::array::from_fn(|k| IDENTITY[k] + amplitude * rng.gen_range(-1.0..=1.0));
        if det(&f) > DET_FLOOR {
            return f;
        }
    }
}

/// `(tr F, tr F F^T, tr F^2, tr F^3, tr F^2 F^T)`.
pub fn feature_invariants(f: &Mat3) -> [f64; 5] {
    let ft = transpose(f);
    let f2 = matmul(f, f);
    [trace(f), trace(&matmul(f, &ft)), trace(&f2), trace(&matmul(&f2, f)), trace(&matmul(&f2, &ft))]
}

/// `I, F, F^T, F F, F F^T, F^T F, F^T F^T`.
pub fn equivariant_features(f: &Mat3) -> [Mat3; 7] {
    let ft = transpose(f);
    [IDENTITY, *f, ft, matmul(f, f), matmul(f, &ft), matmul(&ft, f), matmul(&ft, &ft)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::random_rotation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scaled(c: f64) -> Mat3 {
        IDENTITY.map(|x| c * x)
    }

    fn close(a: &Mat3, b: &Mat3, tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn linear_law_cases() {
        assert_eq!(linear_law(&IDENTITY, 1.0, 1.0), [0.0; 9]);
        assert!(close(&linear_law(&scaled(2.0), 1.0, 1.0), &scaled(5.0), 1e-15));
        let s = [1.1, 0.2, 0.3, 0.2, 0.9, -0.1, 0.3, -0.1, 1.0];
        let p = linear_law(&s, 0.7, 1.3);
        assert!(close(&p, &transpose(&p), 1e-15));
    }

    #[test]
    fn neo_hookean_cases() {
        assert!(close(&neo_hookean(&IDENTITY, 1.0, 1.0).unwrap(), &[0.0; 9], 1e-15));
        let (mu, lambda, c) = (0.8, 1.7, 1.3_f64);
        let want = scaled(mu * (c * c - 1.0) + 3.0 * lambda * c.ln());
        assert!(close(&neo_hookean(&scaled(c), mu, lambda).unwrap(), &want, 1e-13));
        let flip = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0];
        assert!(matches!(neo_hookean(&flip, 1.0, 1.0), Err(Error::NonPhysicalDeformation(_))));
    }

    #[test]
    fn neo_hookean_is_equivariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for seed in 0..20 {
            let r = random_rotation(seed).flat();
            let f = sample_deformation(&mut rng, 0.3);
            let lhs = neo_hookean(&conjugate(&r, &f), 1.0, 1.0).unwrap();
            let rhs = conjugate(&r, &neo_hookean(&f, 1.0, 1.0).unwrap());
            assert!(close(&lhs, &rhs, 1e-10));
        }
    }

    #[test]
    fn sampler_is_deterministic_and_physical() {
        let a = sample_deformation(&mut ChaCha8Rng::seed_from_u64(7), 0.3);
        let b = sample_deformation(&mut ChaCha8Rng::seed_from_u64(7), 0.3);
        assert_eq!(a, b);
        assert!(det(&a) > DET_FLOOR);
        let tiny = sample_deformation(&mut ChaCha8Rng::seed_from_u64(7), 1e-9);
        assert!(close(&tiny, &IDENTITY, 1e-8));
    }

    #[test]
    fn features() {
        assert_eq!(feature_invariants(&IDENTITY), [3.0; 5]);
        let d = [1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 3.0];
        assert_eq!(feature_invariants(&d), [6.0, 14.0, 14.0, 36.0, 36.0]);
        assert!(equivariant_features(&IDENTITY).iter().all(|m| *m == IDENTITY));
        let s = [1.1, 0.2, 0.3, 0.2, 0.9, -0.1, 0.3, -0.1, 1.0];
        let e = equivariant_features(&s);
        assert!(close(&e[3], &e[4], 1e-15) && close(&e[3], &e[5], 1e-15) && close(&e[3], &e[6], 1e-15));
    }

    #[test]
    fn features_under_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = sample_deformation(&mut rng, 0.3);
        let r = random_rotation(11).flat();
        let g = conjugate(&r, &f);
        let (a, b) = (feature_invariants(&f), feature_invariants(&g));
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-10));
        for (ef, eg) in equivariant_features(&f).iter().zip(&equivariant_features(&g)) {
            assert!(close(&conjugate(&r, ef), eg, 1e-10));
        }
    }
}
