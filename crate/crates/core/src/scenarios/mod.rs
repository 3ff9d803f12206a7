//! Built-in scenarios, run configuration and the end-to-end pipeline that
//! writes decay tables and JSON reports.

mod ahlfors;
mod config;
mod registry;
mod run;

pub use ahlfors::{ahlfors_ratios, AhlforsRow};
pub use config::{parse_config, parse_config_str, OutputFormat, RunConfig, MIN_QUAD_ORDER, MIN_SAMPLES};
pub use registry::{builtin_scenarios, find_scenario, Expectation, MeasureSpec, ScenarioSpec, TransversalSpec};
pub use run::{
    check_expectation, decay_region, loglog_slope, run, run_report, Assertion, FitSection, RunReport, RunStatus,
    LELONG_RADII, STOKES_ORDER,
};

use thiserror::Error;

use crate::cohomology::CohomologyError;
use crate::cycle::CycleError;
use crate::density::DensityError;
use crate::lamination::LaminationError;
use crate::numerics::NumericsError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("unknown scenario '{0}' (see `lab scenario list`)")]
    UnknownScenario(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error(transparent)]
    Cycle(#[from] CycleError),
    #[error(transparent)]
    Lamination(#[from] LaminationError),
    #[error(transparent)]
    Cohomology(#[from] CohomologyError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}
