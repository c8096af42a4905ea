//! Code constructions: rotated surface-code memory circuits and bivariate
//! bicycle codes.

pub mod bb;
pub mod circuit;
pub mod gf2;
pub mod surface;

pub use bb::{build_bb_code, build_bb_phenom, BbCode, BbError, BbPhenom};
pub use circuit::{Circuit, CircuitError, Op, Parity};
pub use gf2::BitMatrix;
pub use surface::{build_rotated_memory, RotatedLayout};
