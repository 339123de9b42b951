//! Delay-and-sum ultrasound beamforming for uniform linear arrays.
//!
//! The beamformer is a sparse matrix mapping stacked channel data to image
//! pixels. Around it sit transmit geometry, I/Q demodulation, a
//! directivity-based receive f-number, speed-of-sound estimation from phase
//! coherence along diffraction hyperbolas, a point-scatterer simulator and
//! image-quality metrics.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aperture;
pub mod beamformer;
pub mod cache;
pub mod dataset;
pub mod error;
pub mod geometry;
pub mod optimize;
pub mod quality;
pub mod signal;
pub mod simulator;
pub mod soundspeed;
pub mod sparse;

pub use error::{DasError, Result};
