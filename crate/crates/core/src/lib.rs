//! Numerical model of an economy whose output is mapped into satisfaction
//! across a space of human needs, with an optimal-control planner and a
//! suite of checks that certify the model's structural claims.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod economy;
pub mod error;
pub mod needspace;
pub mod scenario_io;
pub mod theorems;

pub use error::{EmtError, Result};
