//! Oblivious communication games, their classical bounds and quantum
//! strategies, together with the Bell-scenario correspondence.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod bellmap;
pub mod bounds;
pub mod cglmp;
pub mod cli;
pub mod error;
pub mod expdata;
pub mod games;
pub mod lp;
pub mod optimizer;
pub mod qmath;

pub use error::{Error, Result};
