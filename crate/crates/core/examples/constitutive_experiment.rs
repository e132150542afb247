//! Trains the plain and equivariant stress models on neo-Hookean data and
//! prints test MSE per training size.
//!
//! cargo run --release --example constitutive_experiment -- [sizes] [runs] [steps]
//! e.g. `-- 100,1000 1` for a quick look.

use so3tengen::equilearn::{run_experiment, TrainConfig, Variant};

fn main() -> so3tengen::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut base = TrainConfig::default();
    if let Some(s) = args.next() {
        base.train_sizes = s.split(',').map(|x| x.parse().expect("size")).collect();
    }
    if let Some(r) = args.next() {
        base.runs = r.parse().expect("runs");
    }
    if let Some(n) = args.next() {
        base.steps = Some(n.parse().expect("steps"));
    }
    let mut cpu = 0.0;
    for variant in [Variant::Mlp, Variant::Equi3, Variant::Equi7] {
        let m = run_experiment(&TrainConfig { variant, ..base.clone() })?;
        for a in &m.aggregate {
            println!("{:>5}  N={:<6} test mse {:.3e} (std {:.1e})", a.variant, a.train_size, a.mse_mean, a.mse_std);
        }
        cpu += m.total_run_seconds();
    }
    println!("summed single-run time: {cpu:.1} s");
    Ok(())
}
