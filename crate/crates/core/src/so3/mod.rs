//! SO(3) actions, irreducible representation matrices, projectors and
//! Clebsch-Gordan coupling.

mod coupling;
mod multiplicity;
mod projector;
mod rotation;

pub use coupling::{
    cg, change_of_basis_o, coupling_q, invariant_tensors, sum_projector, sum_projector_rank, triangle,
    BlockMatrix, CgTensor, MAX_CHANGE_OF_BASIS,
};
pub use multiplicity::{decomposition, multiplicity};
pub use projector::{
    act_on_axes, irrep_matrix, is_symmetric_tensor, lowering_op, projector, rotate_rows, IrrepMatrix,
    Projector, MAX_PROJECTOR_TYPE,
};
pub use rotation::{random_rotation, rotate_cartesian, Rotation};
