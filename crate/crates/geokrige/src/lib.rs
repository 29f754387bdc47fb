//! IO, parallel drivers, and the command-line front end for the
//! location-error Gaussian process toolkit in `geokrige-core`.

pub mod cli;
pub mod io;
pub mod sweep;
