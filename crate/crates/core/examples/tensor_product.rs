//! Couples two spherical vectors through a Clebsch-Gordan tensor and compares
//! it with the projector triangle network.

use so3tengen::equivar::{tp_couple, tp_network_equals_cg};
use so3tengen::so3::{irrep_matrix, random_rotation};
use so3tengen::Tensor;

fn main() -> so3tengen::Result<()> {
    for (la, lb, lc) in [(1, 1, 0), (1, 1, 1), (1, 1, 2), (2, 2, 2), (1, 2, 3)] {
        let kappa = tp_network_equals_cg(la, lb, lc)?;
        println!("({la},{lb},{lc}): triangle network = {kappa:+.6} x CG");
    }

    let a = Tensor::vector(&[0.2, -0.5, 1.0, 0.3, 0.7]);
    let b = Tensor::vector(&[1.0, 0.4, -0.6]);
    let (c, valid) = tp_couple(&a, 2, &b, 1, 2)?;
    let r = random_rotation(5);
    let (rc, _) = tp_couple(&irrep_matrix(&r, 2)?.apply(&a)?, 2, &irrep_matrix(&r, 1)?.apply(&b)?, 1, 2)?;
    let err = rc.sub(&irrep_matrix(&r, 2)?.apply(&c)?)?.norm();
    println!("2 (x) 1 -> 2: {:?} (valid {valid}), equivariance error {err:.1e}", c.data());

    let (_, valid) = tp_couple(&a, 2, &b, 1, 4)?;
    println!("2 (x) 1 -> 4 is flagged invalid: {}", !valid);
    Ok(())
}
