//! Solution backends for the wave-elliptic system and the monitors that
//! compare runs against the well-posedness statements.

pub mod config;
pub mod data;
pub mod diagnostics;
pub mod exponents;
pub mod monitors;
pub mod picard;
pub mod stepper;

pub use config::{Backend, DuhamelRule, GridConfig, PicardConfig, RunConfig, StepperConfig};
pub use data::{DataSpec, InitialData};
pub use diagnostics::{strichartz_exponent, DiagnosticsRecord, DiagnosticsRow};
pub use exponents::{critical_exponents, validate_regularity, validate_space_time, TheoremMode};
pub use monitors::{
    continuous_dependence, cross_validate, scaling_exponent, theorem_monitors, CrossValidationReport, DependenceReport,
    ScalingReport, TheoremReport,
    SMALL_DATA_ENERGY_FACTOR,
};
pub use stepper::{Source, Stepper, StepperRun, StepperSettings, StepperState, IMPLICIT_MAX_ITERATIONS};
pub use picard::{Iterate, MapOutput, PicardMap, PicardRun, PicardSettings};
