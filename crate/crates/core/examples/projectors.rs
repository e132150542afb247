//! Multiplicities of the tensor powers of the vector representation, and the
//! real projectors onto their top irreducible component.

use so3tengen::so3::{
    change_of_basis_o, decomposition, irrep_matrix, is_symmetric_tensor, projector, random_rotation,
};

fn main() -> so3tengen::Result<()> {
    println!("multiplicities d(l, s), s = 0..=l:");
    for l in 1..=6 {
        let d = decomposition(l)?;
        let dim: u64 = d.iter().enumerate().map(|(s, n)| (2 * s as u64 + 1) * n).sum();
        println!("  l={l}: {d:?}  (dimension {dim} = 3^{l})");
    }

    println!("projectors P_l:");
    for l in 0..=4 {
        let p = projector(l)?;
        let reps: Vec<usize> = std::iter::once(l).chain(std::iter::repeat_n(1, l)).collect();
        println!(
            "  l={l}: shape {:?}, isometry residual {:.1e}, intertwiner {}",
            p.tensor().shape(),
            p.isometry_residual(),
            is_symmetric_tensor(p.tensor(), &reps, 1e-8)?
        );
    }

    let r = random_rotation(3);
    let d2 = irrep_matrix(&r, 2)?;
    println!("D^2(R) orthogonality error: {:.1e}", d2.orthogonality_error());

    let o3 = change_of_basis_o(3)?;
    let blocks: Vec<usize> = o3.blocks.iter().map(|b| b.0).collect();
    println!("O_3 row blocks by type: {blocks:?}");
    Ok(())
}
