//! Simulated users and a closed-loop harness for the self-calibrating engine.

pub mod cases;
pub mod scenario;
pub mod user;

pub use cases::{generate_case, CaseKind};
pub use scenario::{run_scenario, run_with_session, DigitOutcome, ScenarioReport, ScenarioSetup, DEFAULT_STEP_BUDGET};
pub use user::{HalfPlane, PointSampler, Shape, SimulatedUser, UserKind};
pub mod config;
pub use config::{build_run, parse_pin, parse_seed_range, SimConfig};
