//! Particle method for the one-dimensional Vlasov-Poisson system
//!
//! ```text
//! f_t + v f_x - E f_v = 0,    E_x = b(x) - \int f dv
//! ```
//!
//! where the mobile negative charges relax against a fixed positive background and the
//! initial density equals the background outside a bounded region, so the solution has no
//! compact spatial support. The truncated domain grows every step by the largest particle
//! speed, and the region that particles started outside the truncation could have reached is
//! tracked so that diagnostics are reported only where they are trustworthy.

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod harness;
pub mod model;
pub mod output;
pub mod particles;
pub mod validity;

pub use config::{RunConfig, ScenarioKind};
pub use diagnostics::{DecayFit, DiagnosticsSeries, StepRecord};
pub use error::{Error, Result};
pub use grid::{FieldGrid, FieldInterpolant};
pub use harness::{run_convergence_study, run_simulation, ConvergenceTable, RunOutput, Simulation};
pub use model::{Scenario, SimConfig};
pub use particles::{ForceSign, ParticleSet};
pub use validity::{Validity, ValidityTracker};
