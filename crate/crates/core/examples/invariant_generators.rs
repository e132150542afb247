//! Enumerates invariant generators for a signature and checks them under
//! random rotations.
//!
//! cargo run --release --example invariant_generators -- "cart:1,cart:1,cart:1" 3

use so3tengen::equivar::formula_sketch;
use so3tengen::invgen::{enumerate_networks, invariance_violations, Signature};

fn main() -> so3tengen::Result<()> {
    let mut args = std::env::args().skip(1);
    let sig: Signature = args.next().as_deref().unwrap_or("cart:1,cart:1,cart:1").parse()?;
    let degree: usize = args.next().map(|d| d.parse().expect("degree")).unwrap_or(3);

    let set = enumerate_networks(&sig, degree, 1)?;
    println!("signature {sig}, degree <= {degree}");
    for (d, n) in set.count_per_degree() {
        println!("  degree {d}: {n}");
    }
    for g in &set.generators {
        let eps = if g.uses_epsilon { " (epsilon)" } else { "" };
        println!("  {:?}{eps}: {}", g.degree, formula_sketch(&g.net));
    }
    let worst = invariance_violations(&set, 200, 1)?.into_iter().fold(0.0, f64::max);
    println!("worst relative invariance error over 200 rotations: {worst:.2e}");
    Ok(())
}
