//! Invariant and equivariant operations under 3D rotations, built from
//! tensor-network generators.
//!
//! The crate is organised bottom-up:
//!
//! - [`tensor`] and [`network`]: dense tensors, tensor networks and their
//!   contraction.
//! - [`so3`]: rotations, irreducible representations, projectors and
//!   Clebsch-Gordan tensors.
//! - [`invgen`]: enumeration of closed generator networks for an input
//!   signature.
//! - [`equivar`]: equivariant bases by removing the output node, and the
//!   spherical tensor product.
//! - [`equilearn`]: the constitutive-law regression experiment.
//! - [`cli`]: the command implementations behind the `so3tengen` binary.

pub mod cli;
pub mod equilearn;
pub mod equivar;
pub mod error;
pub mod invgen;
pub mod network;
pub mod so3;
pub mod tensor;

pub use error::{Error, Result};
pub use network::{contract_network, Bindings, NodeKind, TensorNetwork};
pub use tensor::Tensor;
