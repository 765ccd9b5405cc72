//! State-space geometry of pure spin states, open-curve geometric phases and
//! the brachistophase problem.
//!
//! States live in CP^n, embedded in the hermitian matrices as rank-one
//! projectors. The metric on hermitian matrices is `G(X, Y) = Tr(XY)/2`.

pub mod brachistophase;
pub mod curves;
pub mod error;
pub mod fd;
pub mod geometry;
pub mod linalg;
pub mod majorana;
pub mod phase;
pub mod presets;
pub mod series;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, HermitianOp, ProjectorState, PureState, SpectralDecomposition, SuperOp, C64};
