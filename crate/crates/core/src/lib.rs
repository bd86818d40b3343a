//! Semi-analytic simulation of approximate transformation-optics cloaking
//! for acoustic and electromagnetic waves in radially layered media.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod config;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod helmholtz;
pub mod maxwell;
pub mod radial;
pub mod resonance;
pub mod specfun;
pub mod timesynth;

pub use error::{CloakError, Result};
