//! Adaptive-precision evaluation, quadrature, differentiation and dense kernels.

pub mod diff;
pub mod linalg;
pub mod precision;
pub mod quadrature;

pub use diff::{t_derivative, t_jet, Jet};
pub use precision::{adaptive_eval, adaptive_eval_traced, Certified, Level, PrecisionPolicy, Refine};
pub use quadrature::{de_integrate, de_quadrature, locate_window, Window};
