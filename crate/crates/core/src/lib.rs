//! Polar codes with subcode ensemble decoding.
//!
//! The crate covers code construction, affine pre-transformations, SC and
//! SC-list decoding, ensemble decoding over a set of subcodes, greedy
//! ensemble design from decoding failures, and a BI-AWGN simulation harness.

pub mod channel;
pub mod config;
pub mod construction;
pub mod crc;
pub mod decode;
pub mod design;
pub mod error;
pub mod io;
pub mod polar;
pub mod pretransform;
pub mod rng;
pub mod sced;

pub use construction::{construct_info_set, esn0_from_ebn0, Construction};
pub use crc::CrcPoly;
pub use error::{Error, Result};
pub use polar::{encode, polar_transform, Bit, CodeSpec, Codeword, PaddedWord};
pub use pretransform::{
    apply, crc_to_pretransform, membership, sample_ptc, validate, PreTransform, Role, SubcodeSpec, TargetRule,
};
