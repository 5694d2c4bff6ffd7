//! Small-target motion detection with a time-delay feedback loop.
//!
//! The detector is a four-layer spatiotemporal filter bank (retina, lamina,
//! medulla, lobula) whose lobula output is delayed and fed back onto the
//! medulla channels, suppressing responses to slowly moving features. The
//! crate also ships a synthetic moving-target sequence generator and the
//! evaluation harness (ROC, tuning and sensitivity sweeps) used to
//! characterize it.

pub mod error;
pub mod eval;
pub mod frame;
pub mod io;
pub mod kernels;
pub mod params;
pub mod pipeline;
pub mod synth;

pub use error::{Error, Result};
pub use frame::Frame;
pub use params::ModelParams;
