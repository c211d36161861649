//! Statistical wideband channel simulator for terahertz ultra-massive MIMO
//! links built from arrays of subarrays.
//!
//! Core numerics are generic over `f32`/`f64` through [`num::Real`]; the
//! config, file and command layers work in `f64`. Aliases for the common
//! `f64` types are re-exported at the crate root.

// `!(x > 0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod absorption;
pub mod arrays;
pub mod channel;
pub mod config;
pub mod error;
pub mod geometry;
pub mod io;
pub mod misalignment;
pub mod multipath;
pub mod num;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod timevariant;

pub use error::{Error, Result};

pub type ArrayGeometry = geometry::ArrayGeometry<f64>;
pub type Direction = geometry::Direction<f64>;
pub type Vec3 = geometry::Vec3<f64>;
pub type SteeringContext = arrays::SteeringContext<f64>;
pub type AntennaPattern = arrays::AntennaPattern<f64>;
pub type AbsorptionModel = absorption::AbsorptionModel<f64>;
pub type MediumProfile = absorption::MediumProfile<f64>;
pub type SvParameters = multipath::SvParameters<f64>;
pub type MultipathRealization = multipath::MultipathRealization<f64>;
pub type FrequencyGrid = channel::FrequencyGrid<f64>;
pub type ChannelTensor = channel::ChannelTensor<f64>;
pub type ChannelOptions = channel::ChannelOptions<f64>;
pub type Link = channel::Link<f64>;
pub type DopplerModel = timevariant::DopplerModel<f64>;
pub type MisalignmentParams = misalignment::MisalignmentParams<f64>;
