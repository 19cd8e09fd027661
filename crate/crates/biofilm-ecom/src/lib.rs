//! Deterministic 1-D simulator of electrochemical (potassium-wave)
//! signaling in a growing bacterial biofilm.
//!
//! The model couples extracellular glutamate/potassium diffusion with
//! boundary-layer exchange, Hodgkin-Huxley-style membrane dynamics per
//! node, glutamate metabolism, potassium acclimation, and biofilm
//! elongation driven by the growth propensity. Stimulation (constant
//! glutamate supply, potassium impulse trains, rectangular pulse trains)
//! enters at x = 0; probes, space-time snapshots and signal metrics come
//! out the other end.

pub mod config;
pub mod error;
pub mod grid;
pub mod integrator;
pub mod model;
pub mod observe;
pub mod output;
pub mod signals;

pub use config::{load_config, preset, ExperimentConfig};
pub use error::{Error, Result};
pub use integrator::{run, StepControl};
pub use model::{BiofilmState, Field, NodeState, Parameters};
pub use observe::{Probe, Trajectory};
pub use signals::InputSignal;
