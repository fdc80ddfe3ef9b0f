mod error;
pub mod divisor;
pub mod dynamics;
pub mod galerkin;
pub mod legendre;
pub mod normal_form;
pub mod poly;
pub mod quartic;
pub mod rational;
pub mod verify;

pub use error::{Error, Result};
