//! Quantization of Grassmann-valued classical mechanics and the
//! pseudo-hermitian analysis of the resulting finite-dimensional systems.
//!
//! The crate is organized bottom-up: [`grassmann`] does exact symbolic
//! arithmetic, [`canon`] handles complex-orthogonal changes of generators,
//! [`quantize`] maps elements to matrices, [`pseudoherm`] builds metrics,
//! and [`twospin`] holds the coupled-spin model.

pub mod canon;
pub mod grassmann;
pub mod io;
pub mod linalg;
pub mod pseudoherm;
pub mod quantize;
pub mod twospin;
pub mod verify;

pub use canon::{ComplexOrthogonal, FieldVector};
pub use grassmann::{AlgebraSpec, Generator, GrassmannElement, Monomial};
pub use linalg::{CMatrix, CVector};
pub use pseudoherm::{Diagnosis, Metric};
pub use quantize::Realization;
pub use twospin::{GilbertParams, RegimeReport, TwoSpinParams};
