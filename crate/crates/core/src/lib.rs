//! Gaussian process interpolation when observation locations carry measurement
//! error.
//!
//! An observed surface `y(s) = x(s + u)` differs from the latent Gaussian
//! process `x` by an unobserved displacement `u` of each nominal location `s`.
//! Plugging the noisy-location data into ordinary Kriging equations ("KILE",
//! Kriging ignoring location errors) degrades both point predictions and
//! interval coverage. This crate implements the full adjusted toolkit:
//!
//! * [`kernels`] — base covariances and the location-error *induced*
//!   covariances `k` and `k*` (closed form for squared-exponential kernels
//!   with Gaussian errors, Monte Carlo otherwise);
//! * [`kriging`] — KALE ("adjusting for location error") and KILE predictions,
//!   their exact mean squared errors, and exact interval prediction through
//!   the mixture CDF of the prediction error;
//! * [`estimation`] — maximum pseudo-likelihood fitting of the covariance
//!   parameters with Godambe (sandwich) information matrices;
//! * [`sampler`] — Hamiltonian Monte Carlo over the latent displacements
//!   (and optionally unknown covariance parameters) for minimum-MSE
//!   prediction, with an inflated-nugget importance-sampling fallback;
//! * [`simstudy`] — a reproducible simulation harness scoring KALE, KILE and
//!   HMC by Rao-Blackwellized adjusted RMSE and interval coverage;
//! * [`geo`] — great-circle exponential kernels and a longitude/latitude
//!   location-error model for interpolating gridded anomaly data.
//!
//! The crate is `no_std`-compatible (`alloc` required); disable the default
//! `std` feature to use it in such environments. All stochastic routines are
//! deterministic given a seed, independent of threading, via counter-based
//! stream splitting ([`rng`]).

#![cfg_attr(not(feature = "std"), no_std)]
#![warn(missing_docs)]

extern crate alloc;

pub mod error;
pub mod estimation;
pub mod geo;
pub mod kernels;
pub mod kriging;
pub mod linalg;
pub mod math;
pub mod opt;
pub mod posterior;
pub mod rng;
pub mod sampler;
pub mod simstudy;

pub use error::{Error, Result};
