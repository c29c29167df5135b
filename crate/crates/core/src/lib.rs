//! Trace-driven out-of-order superscalar timing simulation and design-space
//! exploration for embedded kernels.
//!
//! The crate has three layers:
//! - trace generation: six deterministic benchmark kernels ([`kernels`])
//!   emitting an abstract instruction trace ([`trace`]);
//! - timing simulation: a two-level cache hierarchy ([`cachesim`]) with an
//!   analytical size→latency/area model ([`camodel`]) under a cycle-stepped
//!   out-of-order core ([`cpu`]);
//! - exploration: parameter sweeps, performance-penalty curves, and
//!   best/optimum extraction ([`dse`]), driven from a JSON run configuration
//!   ([`config`]) by the `uarch-dse` binary ([`cli`]).

pub mod camodel;
pub mod cachesim;
pub mod cli;
pub mod config;
pub mod cpu;
pub mod dse;
pub mod kernels;
pub mod trace;

#[doc(hidden)]
pub mod test_util;
