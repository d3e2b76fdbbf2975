//! Small scalar solvers shared by the analytic modules.

mod lambert;
mod quadrature;
mod roots;

pub use lambert::lambert_w0;
pub use quadrature::adaptive_simpson;
pub use roots::{bisect, golden_section_max, Bracket};
