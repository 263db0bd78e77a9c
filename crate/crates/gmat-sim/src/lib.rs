//! Monte-Carlo sweep harness for delayed-CSIT broadcast precoding schemes.
//!
//! A sweep samples independent channel episodes, computes each scheme's
//! precoders strictly from delayed CSIT, normalizes every scheme to the same
//! order-2 power budget, scores the per-slot sum rate at each SNR grid
//! point, and accumulates means with standard errors. Runs are reproducible:
//! the per-realization generators are derived from the config seed, and the
//! parallel reduction is order-independent.

pub mod config;
pub mod csv;
pub mod sweep;

pub use config::{parse_config, Scheme, SweepConfig, TauMode};
pub use csv::{emit_csv, emit_plot_data};
pub use sweep::{run_sweep, RateCurve, SweepOutput};
