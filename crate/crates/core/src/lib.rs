//! Simulation engine for scheduling potential transmitters in a
//! device-to-device caching network.
//!
//! A snapshot consists of two independent Poisson point processes on a
//! rectangular window: potential transmitters, each holding a cache of files,
//! and receivers, each requesting one file. Four medium-access policies decide
//! which transmitters are switched on:
//!
//! - `random`: independent activation with probability `p_A`;
//! - `matern`: Matérn type-II hard-core thinning on iid uniform marks;
//! - `bidding_matern`: Matérn type-II thinning on accumulated receiver bids;
//! - `bid_ordering`: the `⌊p_A·N⌋` highest bids network-wide.
//!
//! Receivers then associate with the nearest active transmitter that holds the
//! requested file, and the per-user spectral efficiency is measured under
//! Rayleigh fading.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bidding;
pub mod channel;
pub mod cli;
pub mod content;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod quad;
pub mod scheduling;

pub use error::{Error, Result};
