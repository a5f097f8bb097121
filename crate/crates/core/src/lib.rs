//! Linear cocycles over subshifts of finite type.

pub mod error;
pub mod linalg;
pub mod shift;
pub mod cocycle;
pub mod oseledets;
pub mod rotation;
pub mod shadowing;
pub mod suspension;
pub mod experiments;

pub use error::{Error, Result};
pub use linalg::{Constraint, Matrix};
