//! Naive T-cell repertoire aging simulated two ways: a deterministic
//! stock-flow model integrated with RK4 and a stochastic agent model on the
//! same rates, plus validation against age-binned TREC measurements.

pub mod abs;
pub mod actives;
pub mod error;
mod grid;
pub mod model;
pub mod scenario;
pub mod sd;
pub mod trajectory;
pub mod validation;

pub use abs::{run_abs, step_abs, AbsConfig, AbsRun, AgentPopulation, EnsembleStats};
pub use actives::ActivesTable;
pub use error::{Error, Result};
pub use grid::TimeGrid;
pub use model::{ModelParams, ProliferationBasis, StateVector};
pub use scenario::{Scenario, ScenarioId};
pub use sd::{rk4_step, run_sd, SdConfig};
pub use trajectory::{Sample, Trajectory};
pub use validation::{
    compare_engines, dataset_to_percentage, qualitative_checks, sse, Engine, FitReport, TrecDataset,
};
