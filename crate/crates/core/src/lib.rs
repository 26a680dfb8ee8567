//! Exact entropy profiles of definable sets over finite fields and of linear
//! congruences, with the information-inequality algebra around them.

pub mod arith;
pub mod census;
pub mod cli;
pub mod error;
pub mod exactlog;
pub mod extend;
pub mod gf;
pub mod lincong;

pub use error::{Error, Result};
pub use exactlog::LogValue;
pub mod polymatroid;
pub mod ringlang;
