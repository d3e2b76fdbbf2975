//! Symmetric K-user scheme and its design space.

pub mod design;
pub mod inner;

pub use design::*;
pub use inner::*;
