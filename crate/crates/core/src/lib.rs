//! Event-history estimation via hazard-driven ODE systems: counting
//! processes from subject records, cumulative hazard increments, plugin
//! state and covariance integration, two-sample tests, and power simulation.

pub mod events;
pub mod hazard;
pub mod ode;
pub mod params;
pub mod simulation;
pub mod testing;
#[doc(hidden)]
pub mod testkit;

pub use events::{
    build_counting_system, split_by_group, CountingSystem, EventRecord, State, Transition,
    TransitionClass, TransitionSchema,
};
pub use hazard::{attach_lebesgue, additive_hazard, nelson_aalen, HazardPath, RankPolicy};
pub use ode::{solve_plugin, solve_variance, ParameterDefinition, PluginPath};
pub use params::{estimate, ParameterKind, ParameterSpec};
pub use simulation::{
    apply_censoring, calibrate_kappa, estimate_power, power_curve, sample_event_times,
    HazardScenario, PiecewiseLinearHazard, PowerCurve, PowerPoint, ScenarioFamily,
    ScenarioShape, TestSelector,
};
pub use testing::{greenwood_survival_test, logrank_test, plugin_test, TestResult};
