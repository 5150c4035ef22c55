//! Sampled grid pairwise likelihood (SG-PL) for spatial error regression on
//! large, irregularly spaced point data.
//!
//! The pipeline overlays a planar hexagonal grid ([`hexgrid`]), picks
//! spatially isolated cells and one observation pair per cell
//! ([`pairsampler`]), and fits the pairwise likelihood by closed-form
//! fixed-point iteration ([`plcore`]). [`dgp`] simulates spatial error model
//! data, [`oracle`] holds reference estimators, and [`harness`] runs
//! Monte-Carlo experiments and real-data fits.

// `!(x > 0.0)` guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dgp;
pub mod error;
pub mod harness;
pub mod hexgrid;
pub mod oracle;
pub mod pairsampler;
pub mod plcore;
pub mod points;

pub use error::{Result, SgplError};
