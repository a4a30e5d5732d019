//! Simulation and optimization of intelligence-oriented integrated sensing
//! and communication (IO-ISAC) for multi-view target recognition.
//!
//! A set of edge devices each sense a moving target with a multi-antenna radar
//! and upload features to a multi-antenna server, which fuses the per-device
//! decisions by majority vote. The crate models the channels, zero-forcing
//! transceivers, power allocation and the accuracy/latency bounds, and
//! searches the activation vector for good accuracy-latency trade-offs.

pub mod bench;
pub mod channel;
pub mod error;
pub mod fusion;
pub mod jpads;
pub mod latency;
pub mod oracle;
pub mod palloc;
pub mod phy;
pub mod scenario;

pub use channel::{gen_channels, ChannelSet};
pub use error::{Error, Result};
pub use jpads::{evaluate, fast_jpads, optimal_jpads, EvalPoint, FastJpadsParams, ParetoFront};
pub use palloc::{solve_p2, P2Solution, PowerAllocation};
pub use scenario::{default_fig2a, load_scenario, Activation, FusionParams, ScenarioConfig};
