//! Ready-made parameter systems: survival probability, restricted mean
//! survival, cumulative incidence, mean event frequency, and illness-death
//! prevalence, each as a coefficient matrix plus exact jacobians, together
//! with the transition-class wiring that feeds them from event data.

use crate::events::{
    build_counting_system, BuildError, EventRecord, TransitionClass, TransitionSchema,
};
use crate::hazard::{attach_lebesgue, nelson_aalen, HazardError, HazardPath};
use crate::ode::{solve_variance, ParameterDefinition, PluginPath, SolveError};
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;
use thiserror::Error;

/// Survival probability S with dS = -S dA. States: (S).
pub fn survival_definition() -> ParameterDefinition {
    ParameterDefinition {
        p: 1,
        q: 1,
        x0: DVector::from_element(1, 1.0),
        labels: vec!["survival".into()],
        lebesgue_mask: vec![false],
        coefficient: Arc::new(|x: &DVector<f64>| DMatrix::from_row_slice(1, 1, &[-x[0]])),
        jacobians: vec![Arc::new(|_: &DVector<f64>| {
            DMatrix::from_row_slice(1, 1, &[-1.0])
        })],
        sample_box: vec![(0.0, 1.0)],
    }
}

/// Restricted mean survival: states (S, R), components (event hazard, time),
/// dS = -S dA, dR = S dt.
pub fn rmst_definition() -> ParameterDefinition {
    ParameterDefinition {
        p: 2,
        q: 2,
        x0: DVector::from_column_slice(&[1.0, 0.0]),
        labels: vec!["survival".into(), "rmst".into()],
        lebesgue_mask: vec![false, true],
        coefficient: Arc::new(|x: &DVector<f64>| {
            DMatrix::from_row_slice(2, 2, &[-x[0], 0.0, 0.0, x[0]])
        }),
        jacobians: vec![
            Arc::new(|_: &DVector<f64>| DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 0.0])),
            Arc::new(|_: &DVector<f64>| DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0])),
        ],
        sample_box: vec![(0.0, 1.0), (0.0, 10.0)],
    }
}

/// Cumulative incidence of one cause: states (S, C), components (all-cause
/// hazard, cause hazard), dS = -S dA_total, dC = S dA_cause.
pub fn cumulative_incidence_definition() -> ParameterDefinition {
    ParameterDefinition {
        p: 2,
        q: 2,
        x0: DVector::from_column_slice(&[1.0, 0.0]),
        labels: vec!["overall survival".into(), "cumulative incidence".into()],
        lebesgue_mask: vec![false, false],
        coefficient: Arc::new(|x: &DVector<f64>| {
            DMatrix::from_row_slice(2, 2, &[-x[0], 0.0, 0.0, x[0]])
        }),
        jacobians: vec![
            Arc::new(|_: &DVector<f64>| DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 0.0])),
            Arc::new(|_: &DVector<f64>| DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0])),
        ],
        sample_box: vec![(0.0, 1.0), (0.0, 1.0)],
    }
}

/// Mean number of recurrent events per subject: states (S, K), components
/// (death hazard, event hazard), dS = -S dA_death, dK = S dA_event.
pub fn mean_frequency_definition() -> ParameterDefinition {
    ParameterDefinition {
        p: 2,
        q: 2,
        x0: DVector::from_column_slice(&[1.0, 0.0]),
        labels: vec!["survival".into(), "mean frequency".into()],
        lebesgue_mask: vec![false, false],
        coefficient: Arc::new(|x: &DVector<f64>| {
            DMatrix::from_row_slice(2, 2, &[-x[0], 0.0, 0.0, x[0]])
        }),
        jacobians: vec![
            Arc::new(|_: &DVector<f64>| DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 0.0])),
            Arc::new(|_: &DVector<f64>| DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0])),
        ],
        sample_box: vec![(0.0, 1.0), (0.0, 10.0)],
    }
}

/// Illness-death occupancies: states (P0 healthy, P1 ill), components
/// (illness, death while healthy, death while ill):
/// dP0 = -P0 (dA01 + dA02), dP1 = P0 dA01 - P1 dA12.
pub fn prevalence_definition() -> ParameterDefinition {
    ParameterDefinition {
        p: 2,
        q: 3,
        x0: DVector::from_column_slice(&[1.0, 0.0]),
        labels: vec!["healthy occupancy".into(), "prevalence".into()],
        lebesgue_mask: vec![false, false, false],
        coefficient: Arc::new(|x: &DVector<f64>| {
            DMatrix::from_row_slice(2, 3, &[-x[0], -x[0], 0.0, x[0], 0.0, -x[1]])
        }),
        jacobians: vec![
            Arc::new(|_: &DVector<f64>| DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 1.0, 0.0])),
            Arc::new(|_: &DVector<f64>| DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 0.0])),
            Arc::new(|_: &DVector<f64>| DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, -1.0])),
        ],
        sample_box: vec![(0.0, 1.0), (0.0, 1.0)],
    }
}

/// How a hazard component is fed: summed increments of transition classes,
/// or the deterministic time scale.
#[derive(Clone, Debug, PartialEq)]
pub enum ComponentSource {
    Classes(Vec<usize>),
    Time,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParameterKind {
    Survival,
    Rmst,
    CumulativeIncidence,
    MeanFrequency,
    Prevalence,
    RecurrenceFreeRmst,
}

impl ParameterKind {
    pub fn label(&self) -> &'static str {
        match self {
            ParameterKind::Survival => "survival",
            ParameterKind::Rmst => "rmst",
            ParameterKind::CumulativeIncidence => "cumulative-incidence",
            ParameterKind::MeanFrequency => "mean-frequency",
            ParameterKind::Prevalence => "prevalence",
            ParameterKind::RecurrenceFreeRmst => "recurrence-free-rmst",
        }
    }
}

/// A parameter definition bound to event data: the transition schema the
/// records must satisfy and the class wiring of each hazard component.
/// `estimand` indexes the state coordinate reported and tested.
#[derive(Clone, Debug)]
pub struct ParameterSpec {
    pub kind: ParameterKind,
    pub definition: ParameterDefinition,
    pub estimand: usize,
    pub schema: TransitionSchema,
    pub components: Vec<ComponentSource>,
}

/// Single event type: survival probability.
pub fn survival_spec() -> ParameterSpec {
    ParameterSpec {
        kind: ParameterKind::Survival,
        definition: survival_definition(),
        estimand: 0,
        schema: TransitionSchema::survival(),
        components: vec![ComponentSource::Classes(vec![0])],
    }
}

/// Single event type: restricted mean survival time.
pub fn rmst_spec() -> ParameterSpec {
    ParameterSpec {
        kind: ParameterKind::Rmst,
        definition: rmst_definition(),
        estimand: 1,
        schema: TransitionSchema::survival(),
        components: vec![ComponentSource::Classes(vec![0]), ComponentSource::Time],
    }
}

/// First-event competing risks: cumulative incidence of `cause` (1-based)
/// among `n_causes`. The all-cause component sums every cause class.
pub fn cuminc_spec(cause: usize, n_causes: usize) -> ParameterSpec {
    assert!(cause >= 1 && cause <= n_causes, "cause out of range");
    ParameterSpec {
        kind: ParameterKind::CumulativeIncidence,
        definition: cumulative_incidence_definition(),
        estimand: 1,
        schema: TransitionSchema::competing_risks(n_causes),
        components: vec![
            ComponentSource::Classes((0..n_causes).collect()),
            ComponentSource::Classes(vec![cause - 1]),
        ],
    }
}

/// Recurrent events with a terminal event: survival-weighted mean frequency.
pub fn mean_frequency_spec() -> ParameterSpec {
    ParameterSpec {
        kind: ParameterKind::MeanFrequency,
        definition: mean_frequency_definition(),
        estimand: 1,
        schema: TransitionSchema::recurrent_with_death(),
        components: vec![
            ComponentSource::Classes(vec![0]),
            ComponentSource::Classes(vec![1]),
        ],
    }
}

/// Irreversible illness-death occupancy of the ill state.
pub fn prevalence_spec() -> ParameterSpec {
    ParameterSpec {
        kind: ParameterKind::Prevalence,
        definition: prevalence_definition(),
        estimand: 1,
        schema: TransitionSchema::illness_death(),
        components: vec![
            ComponentSource::Classes(vec![0]),
            ComponentSource::Classes(vec![1]),
            ComponentSource::Classes(vec![2]),
        ],
    }
}

/// Schema for illness-death records analyzed with marginal death hazards:
/// the three single transitions plus a pooled all-deaths class counted over
/// everyone alive (states 0 and 1).
pub fn illness_death_marginal_schema() -> TransitionSchema {
    TransitionSchema::new(vec![
        TransitionClass::single(0, 1),
        TransitionClass::single(0, 2),
        TransitionClass::single(1, 2),
        TransitionClass::pooled(&[(0, 2), (1, 2)]),
    ])
}

const ID_RECURRENCE: usize = 0;
const ID_DEATH_POOLED: usize = 3;
const ID_DEATH_AFTER: usize = 2;

/// The five-parameter analysis suite for two-endpoint (recurrence, death)
/// records. Death enters every system as a marginal all-deaths hazard over
/// everyone alive; recurrence is counted over the recurrence-free, and
/// post-recurrence mortality over the recurred. This matches the standard
/// published analyses of such registry extracts.
pub fn illness_death_marginal_suite() -> Vec<ParameterSpec> {
    vec![
        illness_death_marginal_spec(ParameterKind::Survival),
        illness_death_marginal_spec(ParameterKind::Rmst),
        illness_death_marginal_spec(ParameterKind::CumulativeIncidence),
        illness_death_marginal_spec(ParameterKind::Prevalence),
        illness_death_marginal_spec(ParameterKind::RecurrenceFreeRmst),
    ]
}

pub fn illness_death_marginal_spec(kind: ParameterKind) -> ParameterSpec {
    let schema = illness_death_marginal_schema();
    match kind {
        ParameterKind::Survival => ParameterSpec {
            kind,
            definition: survival_definition(),
            estimand: 0,
            schema,
            components: vec![ComponentSource::Classes(vec![ID_DEATH_POOLED])],
        },
        ParameterKind::Rmst => ParameterSpec {
            kind,
            definition: rmst_definition(),
            estimand: 1,
            schema,
            components: vec![
                ComponentSource::Classes(vec![ID_DEATH_POOLED]),
                ComponentSource::Time,
            ],
        },
        ParameterKind::CumulativeIncidence => ParameterSpec {
            kind,
            definition: cumulative_incidence_definition(),
            estimand: 1,
            schema,
            components: vec![
                ComponentSource::Classes(vec![ID_RECURRENCE, ID_DEATH_POOLED]),
                ComponentSource::Classes(vec![ID_RECURRENCE]),
            ],
        },
        ParameterKind::Prevalence => ParameterSpec {
            kind,
            definition: prevalence_definition(),
            estimand: 1,
            schema,
            components: vec![
                ComponentSource::Classes(vec![ID_RECURRENCE]),
                ComponentSource::Classes(vec![ID_DEATH_POOLED]),
                ComponentSource::Classes(vec![ID_DEATH_AFTER]),
            ],
        },
        ParameterKind::RecurrenceFreeRmst => ParameterSpec {
            kind,
            definition: rmst_definition(),
            estimand: 1,
            schema,
            components: vec![
                ComponentSource::Classes(vec![ID_RECURRENCE, ID_DEATH_POOLED]),
                ComponentSource::Time,
            ],
        },
        ParameterKind::MeanFrequency => {
            panic!("mean frequency is not part of the two-endpoint suite")
        }
    }
}

#[derive(Debug, Error)]
pub enum EstimateError {
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Hazard(#[from] HazardError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Assemble the hazard path a spec needs from raw records: counting system
/// under the spec schema, class-wired increments, time components attached
/// where the definition expects them.
pub fn hazard_for(spec: &ParameterSpec, records: &[EventRecord]) -> Result<HazardPath, EstimateError> {
    let cs = build_counting_system(records, &spec.schema)?;
    let counting_map: Vec<Vec<usize>> = spec
        .components
        .iter()
        .filter_map(|c| match c {
            ComponentSource::Classes(v) => Some(v.clone()),
            ComponentSource::Time => None,
        })
        .collect();
    let positions: Vec<usize> = spec
        .components
        .iter()
        .enumerate()
        .filter_map(|(i, c)| match c {
            ComponentSource::Time => Some(i),
            ComponentSource::Classes(_) => None,
        })
        .collect();
    let base = nelson_aalen(&cs, &counting_map)?;
    let hz = if positions.is_empty() {
        base
    } else {
        attach_lebesgue(&base, &positions)?
    };
    Ok(hz)
}

/// One-group estimate: build the hazard path for `spec` and integrate state
/// and covariance up to `t0`.
pub fn estimate(
    spec: &ParameterSpec,
    records: &[EventRecord],
    t0: f64,
) -> Result<PluginPath, EstimateError> {
    let hz = hazard_for(spec, records)?;
    Ok(solve_variance(&spec.definition, &hz, t0)?)
}
