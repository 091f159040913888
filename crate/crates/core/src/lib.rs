//! Mirror descent, accelerated mirror descent and their continuous-time
//! flows, each instrumented with a Lyapunov certificate that can be audited
//! step by step.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod amd;
pub mod consistency;
pub mod diagnostics;
pub mod error;
pub mod flows;
pub mod md;
pub mod problems;
pub mod trace;

pub use error::{Error, Result};
pub use trace::{LyapunovTrace, RunRecord, TraceKind};

pub type Vector = nalgebra::DVector<f64>;
pub type Matrix = nalgebra::DMatrix<f64>;
