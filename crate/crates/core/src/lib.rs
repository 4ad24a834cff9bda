#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Random-coding exponents, trace inequalities and finite-blocklength
//! simulation for classical-quantum channels.

pub mod channel;
pub mod cli;
pub mod coding;
pub mod error;
pub mod exponent;
pub mod inequality;
pub mod random;
pub mod rate;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
