//! TOML configuration and its translation into library objects. Every
//! value has a flag override; precedence is flag, then file, then default.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use survode::events::TransitionSchema;
use survode::params::{
    cuminc_spec, illness_death_marginal_spec, illness_death_marginal_suite, mean_frequency_spec,
    prevalence_spec, rmst_spec, survival_spec, ParameterKind, ParameterSpec,
};
use survode::simulation::{ScenarioFamily, ScenarioShape, TestSelector};

use crate::ingest::StatusMap;
use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub power: PowerSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub id_column: Option<String>,
    pub group_column: Option<String>,
    pub time_column: Option<String>,
    pub status_column: Option<String>,
    /// survival | competing-risks | illness-death | recurrent | two-endpoint
    pub schema: Option<String>,
    /// number of causes for the competing-risks schema
    pub causes: Option<usize>,
    pub covariate_columns: Option<Vec<String>>,
    /// status code -> [from, to]; code 0 is always censoring
    pub status_map: Option<BTreeMap<String, [u8; 2]>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    pub parameter: Option<String>,
    pub t0: Option<f64>,
    pub times: Option<Vec<f64>>,
    /// confidence level for intervals (default 0.95)
    pub level: Option<f64>,
    /// 1-based cause for cumulative incidence
    pub cause: Option<usize>,
    /// plugin | logrank | greenwood
    pub test: Option<String>,
    /// covariate value for additive-hazard adjustment
    pub z0: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    /// constant | crossing | deviating
    pub shape: Option<String>,
    /// single-event | competing-risks | recurrent-events | illness-death
    pub family: Option<String>,
    pub horizon: Option<f64>,
    pub baseline_level: Option<f64>,
    pub group2_level: Option<f64>,
    pub group2_slope: Option<f64>,
    pub changepoint: Option<f64>,
    pub competing_hazard: Option<f64>,
    pub censor_fraction: Option<f64>,
    pub kappa: Option<f64>,
    pub n_per_group: Option<usize>,
    pub t0: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerSection {
    pub kappas: Option<Vec<f64>>,
    pub replications: Option<usize>,
    /// significance level of the tests (default 0.05)
    pub level: Option<f64>,
    pub test: Option<String>,
}

pub fn load_config(path: Option<&Path>) -> Result<FileConfig, CliError> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    toml::from_str(&text).map_err(|e| CliError::Config {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// The transition layout the data file is read under.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchemaChoice {
    Survival,
    CompetingRisks(usize),
    IllnessDeath,
    RecurrentWithDeath,
    /// recurrence + death rows analyzed with marginal death hazards
    TwoEndpoint,
}

impl SchemaChoice {
    pub fn parse(name: &str, causes: Option<usize>) -> Result<Self, CliError> {
        match name {
            "survival" => Ok(SchemaChoice::Survival),
            "competing-risks" => {
                let k = causes.unwrap_or(2);
                if k < 2 {
                    return Err(CliError::usage(format!(
                        "competing-risks schema needs at least 2 causes, got {k}"
                    )));
                }
                Ok(SchemaChoice::CompetingRisks(k))
            }
            "illness-death" => Ok(SchemaChoice::IllnessDeath),
            "recurrent" => Ok(SchemaChoice::RecurrentWithDeath),
            "two-endpoint" => Ok(SchemaChoice::TwoEndpoint),
            other => Err(CliError::usage(format!(
                "unknown schema '{other}' (expected survival, competing-risks, illness-death, \
                 recurrent, or two-endpoint)"
            ))),
        }
    }

    pub fn schema(&self) -> TransitionSchema {
        match self {
            SchemaChoice::Survival => TransitionSchema::survival(),
            SchemaChoice::CompetingRisks(k) => TransitionSchema::competing_risks(*k),
            SchemaChoice::IllnessDeath => TransitionSchema::illness_death(),
            SchemaChoice::RecurrentWithDeath => TransitionSchema::recurrent_with_death(),
            SchemaChoice::TwoEndpoint => survode::params::illness_death_marginal_schema(),
        }
    }

    /// Status codes understood when the config supplies no explicit map.
    pub fn default_status_map(&self) -> StatusMap {
        match self {
            SchemaChoice::Survival => vec![(1, (0, 1))],
            SchemaChoice::CompetingRisks(k) => {
                (1..=*k as u32).map(|j| (j, (0, j as u8))).collect()
            }
            SchemaChoice::IllnessDeath | SchemaChoice::TwoEndpoint => {
                vec![(1, (0, 1)), (2, (0, 2)), (3, (1, 2))]
            }
            SchemaChoice::RecurrentWithDeath => vec![(1, (0, 0)), (2, (0, 1))],
        }
    }
}

/// Which parameters an estimate or test run covers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParameterChoice {
    One(ParameterKind),
    All,
}

impl ParameterChoice {
    pub fn parse(name: &str) -> Result<Self, CliError> {
        Ok(match name {
            "all" => ParameterChoice::All,
            "survival" => ParameterChoice::One(ParameterKind::Survival),
            "rmst" => ParameterChoice::One(ParameterKind::Rmst),
            "cumulative-incidence" => ParameterChoice::One(ParameterKind::CumulativeIncidence),
            "mean-frequency" => ParameterChoice::One(ParameterKind::MeanFrequency),
            "prevalence" => ParameterChoice::One(ParameterKind::Prevalence),
            "recurrence-free-rmst" => ParameterChoice::One(ParameterKind::RecurrenceFreeRmst),
            other => {
                return Err(CliError::usage(format!(
                    "unknown parameter '{other}' (expected survival, rmst, \
                     cumulative-incidence, mean-frequency, prevalence, recurrence-free-rmst, \
                     or all)"
                )))
            }
        })
    }
}

/// Resolve the parameter specs a run covers under the given schema.
pub fn specs_for(
    schema: SchemaChoice,
    parameter: ParameterChoice,
    cause: Option<usize>,
) -> Result<Vec<ParameterSpec>, CliError> {
    let unsupported = |kind: ParameterKind| {
        CliError::usage(format!(
            "parameter '{}' is not defined for the configured schema",
            kind.label()
        ))
    };
    match schema {
        SchemaChoice::Survival => match parameter {
            ParameterChoice::All => Ok(vec![survival_spec(), rmst_spec()]),
            ParameterChoice::One(ParameterKind::Survival) => Ok(vec![survival_spec()]),
            ParameterChoice::One(ParameterKind::Rmst) => Ok(vec![rmst_spec()]),
            ParameterChoice::One(kind) => Err(unsupported(kind)),
        },
        SchemaChoice::CompetingRisks(k) => match parameter {
            ParameterChoice::All => Ok((1..=k).map(|j| cuminc_spec(j, k)).collect()),
            ParameterChoice::One(ParameterKind::CumulativeIncidence) => {
                let cause = cause.unwrap_or(1);
                if cause < 1 || cause > k {
                    return Err(CliError::usage(format!(
                        "cause {cause} out of range for {k} competing causes"
                    )));
                }
                Ok(vec![cuminc_spec(cause, k)])
            }
            ParameterChoice::One(kind) => Err(unsupported(kind)),
        },
        SchemaChoice::IllnessDeath => match parameter {
            ParameterChoice::All | ParameterChoice::One(ParameterKind::Prevalence) => {
                Ok(vec![prevalence_spec()])
            }
            ParameterChoice::One(kind) => Err(unsupported(kind)),
        },
        SchemaChoice::RecurrentWithDeath => match parameter {
            ParameterChoice::All | ParameterChoice::One(ParameterKind::MeanFrequency) => {
                Ok(vec![mean_frequency_spec()])
            }
            ParameterChoice::One(kind) => Err(unsupported(kind)),
        },
        SchemaChoice::TwoEndpoint => match parameter {
            ParameterChoice::All => Ok(illness_death_marginal_suite()),
            ParameterChoice::One(ParameterKind::MeanFrequency) => {
                Err(unsupported(ParameterKind::MeanFrequency))
            }
            ParameterChoice::One(kind) => Ok(vec![illness_death_marginal_spec(kind)]),
        },
    }
}

pub fn parse_shape(name: &str) -> Result<ScenarioShape, CliError> {
    match name {
        "constant" => Ok(ScenarioShape::Constant),
        "crossing" => Ok(ScenarioShape::Crossing),
        "deviating" => Ok(ScenarioShape::Deviating),
        other => Err(CliError::usage(format!(
            "unknown scenario shape '{other}' (expected constant, crossing, or deviating)"
        ))),
    }
}

pub fn parse_family(name: &str) -> Result<ScenarioFamily, CliError> {
    match name {
        "single-event" => Ok(ScenarioFamily::SingleEvent),
        "competing-risks" => Ok(ScenarioFamily::CompetingRisks),
        "recurrent-events" => Ok(ScenarioFamily::RecurrentEvents),
        "illness-death" => Ok(ScenarioFamily::IllnessDeath),
        other => Err(CliError::usage(format!(
            "unknown scenario family '{other}' (expected single-event, competing-risks, \
             recurrent-events, or illness-death)"
        ))),
    }
}

pub fn parse_test(name: &str) -> Result<TestSelector, CliError> {
    match name {
        "plugin" => Ok(TestSelector::Plugin),
        "logrank" => Ok(TestSelector::LogRank),
        "greenwood" => Ok(TestSelector::Greenwood),
        other => Err(CliError::usage(format!(
            "unknown test '{other}' (expected plugin, logrank, or greenwood)"
        ))),
    }
}

/// Translate a config status map (string keys from TOML) into numeric codes.
pub fn resolve_status_map(
    section: &DataSection,
    schema: SchemaChoice,
) -> Result<StatusMap, CliError> {
    let Some(map) = &section.status_map else {
        return Ok(schema.default_status_map());
    };
    let mut out = Vec::with_capacity(map.len());
    for (key, [from, to]) in map {
        let code: u32 = key.parse().map_err(|_| {
            CliError::usage(format!("status_map key '{key}' is not a nonnegative integer"))
        })?;
        if code == 0 {
            return Err(CliError::usage(
                "status code 0 is reserved for censoring and cannot be remapped",
            ));
        }
        out.push((code, (*from, *to)));
    }
    Ok(out)
}
