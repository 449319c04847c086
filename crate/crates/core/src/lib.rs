pub mod cli;
pub mod config;
pub mod dd;
pub mod decay;
pub mod eigenfunctions;
pub mod error;
pub mod io;
pub mod lattice;
pub mod propagator;
pub mod quadrature;
pub mod specfun;
pub mod spectral;
pub mod tridiag;

#[cfg(test)]
pub(crate) mod testing;

pub use error::{Error, Result};
