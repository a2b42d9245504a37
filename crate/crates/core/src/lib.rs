//! Multi-machine transient simulation with synthetic PMU streams, and a
//! decentralized observer stack that reconstructs generator states from them.
//!
//! * [`model`]: flux-decay generator, AVR/PSS and PMU measurement map.
//! * [`network`]: Kron-reduced network coupling and fault switching.
//! * [`simulator`]: fixed-step RK4 integration, events and PMU noise.
//! * [`algebraic`]: instantaneous load-angle and EMF reconstruction.
//! * [`drem`]: DREM identification of the mechanical parameters.
//! * [`iii`]: I&I speed observer, known-parameter and adaptive.
//! * [`metrics`]: sMAPE and exponential-decay fitting.
//! * [`config`]: scenario files.
//! * [`runner`]: configuration-driven runs writing CSVs and reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebraic;
pub mod config;
pub mod drem;
pub mod error;
pub mod iii;
pub mod integrate;
pub mod metrics;
pub mod model;
pub mod network;
pub mod output;
pub mod pipeline;
pub mod presets;
pub mod runner;
pub mod simulator;

pub use error::{Error, Result};
