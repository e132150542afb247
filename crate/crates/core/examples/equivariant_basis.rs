//! Builds equivariant bases by deleting the output node from generators, and
//! evaluates them on small inputs.

use so3tengen::equivar::{equivariance_violations, equivariant_basis, evaluate_basis_element, formula_sketch};
use so3tengen::invgen::{Signature, SlotSpec};
use so3tengen::{Bindings, Tensor};

fn show(sig: &str, out: SlotSpec, degree: usize, bind: &Bindings) -> so3tengen::Result<()> {
    let sig: Signature = sig.parse()?;
    let basis = equivariant_basis(&sig, &out, degree)?;
    let worst = equivariance_violations(&basis, 100, 2)?.into_iter().fold(0.0, f64::max);
    println!("{sig} -> {out}, degree <= {degree}: {} elements (equivariance error {worst:.1e})", basis.len());
    for e in &basis.elements {
        let v = evaluate_basis_element(e, bind)?;
        println!("  {:?} = {:?}", formula_sketch(&e.net), v.data());
    }
    Ok(())
}

fn main() -> so3tengen::Result<()> {
    let u = Tensor::vector(&[1.0, 0.0, 0.0]);
    let v = Tensor::vector(&[0.0, 1.0, 0.0]);
    show("cart:1,cart:1", SlotSpec::Cartesian(1), 2, &Bindings::new().with(0, u).with(1, v))?;

    let a = Tensor::matrix3([[1.0, 2.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 3.0]]);
    show("cart:2", SlotSpec::Cartesian(1), 1, &Bindings::new().with(0, a.clone()))?;
    show("cart:2", SlotSpec::Cartesian(2), 2, &Bindings::new().with(0, a))?;
    Ok(())
}
