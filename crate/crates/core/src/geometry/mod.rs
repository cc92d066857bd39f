//! Shared numerical substrate: complex and quaternionic vectors, the ambient
//! Kähler model trait, finite differences and frame orthonormalization.

mod ambient;
pub mod fd;
pub mod linalg;

pub use ambient::{
    c_get, c_set, check_calabi_yau_normalization, check_model_invariants, complex_det,
    flat_complex_structure, flat_metric, flat_volume, max_abs_diff, unitary_frame, AmbientModel,
    ComplexVector, InvariantReport, QuaternionicPoint, ScaledVolume,
};
pub use fd::{fd_directional_derivative, fd_scalar, fd_step};
pub use linalg::{gram_orthonormalize, RANK_TOL};
