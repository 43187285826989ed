//! Subcommand orchestration: merge file configuration with flag overrides,
//! drive the estimation library, and emit delimited tables plus human
//! summaries. Machine output keeps full float precision (shortest
//! round-trip form); summaries round to two decimals.

use std::path::{Path, PathBuf};

use survode::events::{build_counting_system, EventRecord, Transition};
use survode::hazard::{additive_hazard, attach_lebesgue, RankPolicy};
use survode::ode::{solve_variance, PluginPath};
use survode::params::{
    self, cuminc_spec, illness_death_marginal_spec, mean_frequency_spec, prevalence_spec,
    rmst_spec, survival_spec, ComponentSource, ParameterKind, ParameterSpec,
};
use survode::simulation::{
    apply_censoring, calibrate_kappa, default_family, power_curve, sample_event_times, Group,
    HazardScenario, ScenarioFamily, ScenarioShape, TestSelector,
};
use survode::testing::{
    greenwood_survival_test, logrank_test, normal_two_sided_z, plugin_test, TestResult,
};

use crate::config::{
    self, parse_family, parse_shape, parse_test, resolve_status_map, FileConfig, ParameterChoice,
    SchemaChoice,
};
use crate::ingest::{ingest_csv, IngestOptions, StatusMap};
use crate::CliError;

pub struct EstimateArgs {
    pub input: PathBuf,
    pub output: Option<PathBuf>,
    pub param: Option<String>,
    pub schema: Option<String>,
    pub t0: Option<f64>,
    pub level: Option<f64>,
    pub cause: Option<usize>,
    pub z0: Option<Vec<f64>>,
}

pub struct TestArgs {
    pub input: PathBuf,
    pub output: Option<PathBuf>,
    pub param: Option<String>,
    pub schema: Option<String>,
    pub t0: Option<f64>,
    pub times: Option<Vec<f64>>,
    pub level: Option<f64>,
    pub cause: Option<usize>,
    pub test: Option<String>,
    pub z0: Option<Vec<f64>>,
}

pub struct SimulateArgs {
    pub output: Option<PathBuf>,
    pub param: Option<String>,
    pub shape: Option<String>,
    pub family: Option<String>,
    pub horizon: Option<f64>,
    pub kappa: Option<f64>,
    pub t0: Option<f64>,
    pub n: Option<usize>,
    pub censor: Option<f64>,
    pub seed: u64,
}

pub struct PowerArgs {
    pub output: Option<PathBuf>,
    pub param: Option<String>,
    pub shape: Option<String>,
    pub family: Option<String>,
    pub horizon: Option<f64>,
    pub kappas: Option<Vec<f64>>,
    pub t0: Option<f64>,
    pub n: Option<usize>,
    pub replications: Option<usize>,
    pub level: Option<f64>,
    pub test: Option<String>,
    pub censor: Option<f64>,
    pub seed: u64,
}

struct DataSetup {
    schema_choice: SchemaChoice,
    ingest_opts: IngestOptions,
}

fn data_setup(cfg: &FileConfig, schema_flag: Option<&str>) -> Result<DataSetup, CliError> {
    let schema_name = schema_flag
        .map(str::to_string)
        .or_else(|| cfg.data.schema.clone())
        .unwrap_or_else(|| "survival".into());
    let schema_choice = SchemaChoice::parse(&schema_name, cfg.data.causes)?;
    let status_map = resolve_status_map(&cfg.data, schema_choice)?;
    let d = &cfg.data;
    let column = |v: &Option<String>, default: &str| {
        v.clone().unwrap_or_else(|| default.to_string())
    };
    Ok(DataSetup {
        schema_choice,
        ingest_opts: IngestOptions {
            id_column: column(&d.id_column, "id"),
            group_column: column(&d.group_column, "group"),
            time_column: column(&d.time_column, "time"),
            status_column: column(&d.status_column, "status"),
            covariate_columns: d.covariate_columns.clone().unwrap_or_default(),
            status_map,
        },
    })
}

fn require_t0(t0: Option<f64>) -> Result<f64, CliError> {
    let t0 = t0.ok_or_else(|| CliError::usage("t0 is required (--t0 or [analysis] t0)"))?;
    if !t0.is_finite() || t0 <= 0.0 {
        return Err(CliError::usage(format!(
            "t0 must be positive and finite, got {t0}"
        )));
    }
    Ok(t0)
}

fn check_level(level: f64, what: &str) -> Result<f64, CliError> {
    if !(level > 0.0 && level < 1.0) {
        return Err(CliError::usage(format!(
            "{what} must lie strictly between 0 and 1, got {level}"
        )));
    }
    Ok(level)
}

fn check_censor(fraction: f64) -> Result<f64, CliError> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(CliError::usage(format!(
            "censoring fraction must lie in [0, 1), got {fraction}"
        )));
    }
    Ok(fraction)
}

fn check_z0(z0: &Option<Vec<f64>>, opts: &IngestOptions) -> Result<(), CliError> {
    let Some(z) = z0 else { return Ok(()) };
    if opts.covariate_columns.is_empty() {
        return Err(CliError::usage(
            "z0 given but no covariate columns configured ([data] covariate_columns)",
        ));
    }
    if z.len() != opts.covariate_columns.len() {
        return Err(CliError::usage(format!(
            "z0 has {} entries but {} covariate columns are configured",
            z.len(),
            opts.covariate_columns.len()
        )));
    }
    Ok(())
}

/// One-group plugin path, covariate-adjusted when `z0` is present.
fn fit(
    spec: &ParameterSpec,
    records: &[EventRecord],
    z0: Option<&[f64]>,
    t0: f64,
) -> Result<PluginPath, CliError> {
    let Some(z0) = z0 else {
        return Ok(params::estimate(spec, records, t0)?);
    };
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
    let covariates: Vec<Vec<f64>> = records.iter().map(|r| r.covariates.clone()).collect();
    let base = additive_hazard(&cs, &counting_map, &covariates, z0, RankPolicy::Skip)?;
    let hz = if positions.is_empty() {
        base
    } else {
        attach_lebesgue(&base, &positions)?
    };
    Ok(solve_variance(&spec.definition, &hz, t0)?)
}

/// Display names of the state coordinates, in order.
fn component_labels(kind: ParameterKind) -> &'static [&'static str] {
    match kind {
        ParameterKind::Survival => &["survival"],
        ParameterKind::Rmst => &["survival", "rmst"],
        ParameterKind::CumulativeIncidence => &["event-free", "incidence"],
        ParameterKind::MeanFrequency => &["survival", "mean-frequency"],
        ParameterKind::Prevalence => &["event-free", "prevalence"],
        ParameterKind::RecurrenceFreeRmst => &["recurrence-free", "rmst"],
    }
}

pub fn estimate(cfg: &FileConfig, args: &EstimateArgs) -> Result<(), CliError> {
    let setup = data_setup(cfg, args.schema.as_deref())?;
    let param = args
        .param
        .as_deref()
        .or(cfg.analysis.parameter.as_deref())
        .unwrap_or("all");
    let choice = ParameterChoice::parse(param)?;
    let cause = args.cause.or(cfg.analysis.cause);
    let specs = config::specs_for(setup.schema_choice, choice, cause)?;
    let t0 = require_t0(args.t0.or(cfg.analysis.t0))?;
    let level = check_level(
        args.level.or(cfg.analysis.level).unwrap_or(0.95),
        "confidence level",
    )?;
    let z0 = args.z0.clone().or_else(|| cfg.analysis.z0.clone());
    check_z0(&z0, &setup.ingest_opts)?;

    let log = ingest_csv(&args.input, &setup.ingest_opts)?;
    let zq = normal_two_sided_z(level);
    let with_group = log.groups.len() > 1;
    let with_param = specs.len() > 1;

    let mut table = CsvTable::new();
    let mut header: Vec<&str> = Vec::new();
    if with_group {
        header.push("group");
    }
    if with_param {
        header.push("parameter");
    }
    header.extend(["time", "component", "estimate", "lower", "upper"]);
    table.row(&header)?;

    for (gname, records) in &log.groups {
        for spec in &specs {
            let path = fit(spec, records, z0.as_deref(), t0)?;
            let labels = component_labels(spec.kind);
            let mut emit = |time: f64, i: usize, est: f64, se: f64| -> Result<(), CliError> {
                let mut row: Vec<String> = Vec::with_capacity(header.len());
                if with_group {
                    row.push(gname.clone());
                }
                if with_param {
                    row.push(spec.kind.label().to_string());
                }
                row.push(format!("{time}"));
                row.push(labels[i].to_string());
                row.push(format!("{est}"));
                row.push(format!("{}", est - zq * se));
                row.push(format!("{}", est + zq * se));
                table.row(&row)
            };
            for i in 0..path.x0.len() {
                emit(0.0, i, path.x0[i], 0.0)?;
            }
            for (k, &time) in path.grid.iter().enumerate() {
                for i in 0..path.x0.len() {
                    let est = path.x[k][i];
                    let se = (path.v[k][(i, i)] / path.n as f64).sqrt();
                    emit(time, i, est, se)?;
                }
            }
        }
    }
    write_sink(args.output.as_deref(), &table.finish()?)
}

pub fn test(cfg: &FileConfig, args: &TestArgs) -> Result<(), CliError> {
    let setup = data_setup(cfg, args.schema.as_deref())?;
    let param = args
        .param
        .as_deref()
        .or(cfg.analysis.parameter.as_deref())
        .unwrap_or("all");
    let choice = ParameterChoice::parse(param)?;
    let cause = args.cause.or(cfg.analysis.cause);
    let specs = config::specs_for(setup.schema_choice, choice, cause)?;
    let level = check_level(
        args.level.or(cfg.analysis.level).unwrap_or(0.95),
        "confidence level",
    )?;
    let times: Vec<f64> = match args.times.clone().or_else(|| cfg.analysis.times.clone()) {
        Some(ts) if !ts.is_empty() => {
            for &t in &ts {
                require_t0(Some(t))?;
            }
            ts
        }
        Some(_) => return Err(CliError::usage("empty times list")),
        None => vec![require_t0(args.t0.or(cfg.analysis.t0))?],
    };
    let selector_name = args
        .test
        .as_deref()
        .or(cfg.analysis.test.as_deref())
        .unwrap_or("plugin");
    let selector = parse_test(selector_name)?;
    let z0 = args.z0.clone().or_else(|| cfg.analysis.z0.clone());
    check_z0(&z0, &setup.ingest_opts)?;
    if z0.is_some() && selector != TestSelector::Plugin {
        return Err(CliError::usage(
            "covariate adjustment (z0) works with the plugin test only",
        ));
    }
    if selector != TestSelector::Plugin {
        for spec in &specs {
            if spec.kind != ParameterKind::Survival {
                return Err(CliError::usage(format!(
                    "test '{selector_name}' compares survival only; parameter '{}' needs \
                     --test plugin",
                    spec.kind.label()
                )));
            }
        }
    }

    let log = ingest_csv(&args.input, &setup.ingest_opts)?;
    if log.groups.len() != 2 {
        return Err(CliError::Run {
            module: "testing",
            message: format!(
                "two-sample tests need exactly 2 groups, found {}",
                log.groups.len()
            ),
        });
    }
    let (g1name, g1) = &log.groups[0];
    let (g2name, g2) = &log.groups[1];

    let mut table = CsvTable::new();
    table.row([
        "parameter",
        "t0",
        "method",
        "level",
        "statistic",
        "df",
        "p_value",
        "group1",
        "estimate1",
        "std_error1",
        "lower1",
        "upper1",
        "group2",
        "estimate2",
        "std_error2",
        "lower2",
        "upper2",
    ])?;
    let mut summary_lines: Vec<String> = Vec::new();

    for &t0 in &times {
        for spec in &specs {
            let res: TestResult = match selector {
                TestSelector::Plugin => {
                    let p1 = fit(spec, g1, z0.as_deref(), t0)?;
                    let p2 = fit(spec, g2, z0.as_deref(), t0)?;
                    plugin_test(&p1, &p2, t0, &[spec.estimand], level)?
                }
                TestSelector::LogRank => {
                    let class = rank_class(spec)?;
                    let cs1 = build_counting_system(g1, &spec.schema)?;
                    let cs2 = build_counting_system(g2, &spec.schema)?;
                    logrank_test(&cs1, &cs2, class, Some(t0))?
                }
                TestSelector::Greenwood => {
                    let class = rank_class(spec)?;
                    let cs1 = build_counting_system(g1, &spec.schema)?;
                    let cs2 = build_counting_system(g2, &spec.schema)?;
                    greenwood_survival_test(&cs1, &cs2, class, t0, level)?
                }
            };

            let mut row: Vec<String> = vec![
                spec.kind.label().to_string(),
                format!("{t0}"),
                res.method.to_string(),
                format!("{}", res.level),
                format!("{}", res.statistic),
                format!("{}", res.df),
                format!("{}", res.p_value),
            ];
            for (gi, gname) in [(0usize, g1name), (1, g2name)] {
                row.push(gname.clone());
                match res.groups.get(gi).and_then(|v| v.first()) {
                    Some(s) => {
                        row.push(format!("{}", s.estimate));
                        row.push(format!("{}", s.std_error));
                        row.push(format!("{}", s.lower));
                        row.push(format!("{}", s.upper));
                    }
                    None => row.extend(std::iter::repeat_n(String::new(), 4)),
                }
            }
            table.row(&row)?;

            let label = spec.kind.label();
            summary_lines.push(match res.groups.len() {
                2 => {
                    let a = &res.groups[0][0];
                    let b = &res.groups[1][0];
                    format!(
                        "{label} at t={t0}: {g1name} {:.2} ({:.2}, {:.2}) vs {g2name} {:.2} \
                         ({:.2}, {:.2}), p = {:.2}",
                        a.estimate, a.lower, a.upper, b.estimate, b.lower, b.upper, res.p_value
                    )
                }
                _ => format!(
                    "{label} {} up to t={t0}: statistic {:.2} on {} df, p = {:.2}",
                    res.method, res.statistic, res.df, res.p_value
                ),
            });
        }
    }

    emit_with_summary(args.output.as_deref(), &table.finish()?, &summary_lines)
}

/// Transition class a rank-based comparator counts, from the parameter's
/// first hazard component.
fn rank_class(spec: &ParameterSpec) -> Result<usize, CliError> {
    match spec.components.first() {
        Some(ComponentSource::Classes(v)) if v.len() == 1 => Ok(v[0]),
        _ => Err(CliError::usage(
            "rank tests need a parameter driven by a single transition class",
        )),
    }
}

/// Parameter tested in a power study, matched to its scenario family.
fn spec_for_kind(kind: ParameterKind) -> ParameterSpec {
    match kind {
        ParameterKind::Survival => survival_spec(),
        ParameterKind::Rmst => rmst_spec(),
        ParameterKind::CumulativeIncidence => cuminc_spec(1, 2),
        ParameterKind::MeanFrequency => mean_frequency_spec(),
        ParameterKind::Prevalence => prevalence_spec(),
        ParameterKind::RecurrenceFreeRmst => illness_death_marginal_spec(kind),
    }
}

fn scenario_kind(cfg: &FileConfig, param_flag: Option<&str>) -> Result<ParameterKind, CliError> {
    let name = param_flag
        .or(cfg.analysis.parameter.as_deref())
        .unwrap_or("survival");
    match ParameterChoice::parse(name)? {
        ParameterChoice::One(kind) => Ok(kind),
        ParameterChoice::All => Err(CliError::usage(
            "scenario calibration needs one parameter, not 'all'",
        )),
    }
}

/// Scenario template from config plus flag overrides. When a parameter kind
/// is in play (calibration or power), an explicitly chosen family must be
/// the one whose generated transitions that parameter reads.
fn build_scenario(
    cfg: &FileConfig,
    shape_flag: Option<&str>,
    family_flag: Option<&str>,
    horizon_flag: Option<f64>,
    kind: Option<ParameterKind>,
) -> Result<(HazardScenario, ScenarioFamily), CliError> {
    let sc = &cfg.scenario;
    let shape = parse_shape(shape_flag.or(sc.shape.as_deref()).unwrap_or("constant"))?;
    let family = match (family_flag.or(sc.family.as_deref()), kind) {
        (Some(name), k) => {
            let fam = parse_family(name)?;
            if let Some(kind) = k {
                if fam != default_family(kind) {
                    return Err(CliError::usage(format!(
                        "scenario family '{name}' does not generate the transitions parameter \
                         '{}' reads",
                        kind.label()
                    )));
                }
            }
            fam
        }
        (None, Some(kind)) => default_family(kind),
        (None, None) => ScenarioFamily::SingleEvent,
    };
    let horizon = horizon_flag.or(sc.horizon).unwrap_or(3.0);
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(CliError::usage(format!(
            "scenario horizon must be positive, got {horizon}"
        )));
    }
    let mut tpl = HazardScenario::template(shape, family, horizon);
    if let Some(v) = sc.baseline_level {
        tpl.group1.level = v;
        if shape == ScenarioShape::Constant {
            tpl.group2.level = v;
        }
    }
    if let Some(v) = sc.group2_level {
        tpl.group2.level = v;
    }
    if let Some(v) = sc.group2_slope {
        tpl.group2.slope = v;
    }
    if let Some(v) = sc.changepoint {
        tpl.group2.changepoint = v;
    }
    if let Some(v) = sc.competing_hazard {
        tpl.competing_hazard = v;
    }
    Ok((tpl, family))
}

/// Status codes written by `simulate` for each scenario family; these are
/// the same defaults `ingest_csv` assumes for the matching schema, so a
/// simulated file re-ingests without extra configuration.
pub fn family_status_map(family: ScenarioFamily) -> StatusMap {
    let choice = match family {
        ScenarioFamily::SingleEvent => SchemaChoice::Survival,
        ScenarioFamily::CompetingRisks => SchemaChoice::CompetingRisks(2),
        ScenarioFamily::RecurrentEvents => SchemaChoice::RecurrentWithDeath,
        ScenarioFamily::IllnessDeath => SchemaChoice::IllnessDeath,
    };
    choice.default_status_map()
}

/// Draw both arms of a scenario and apply artificial censoring. Groups are
/// labeled "1" and "2"; seeds are derived so each stage has its own stream.
pub fn generate(
    scenario: &HazardScenario,
    n_per_group: usize,
    censor_fraction: f64,
    seed: u64,
) -> Result<Vec<(String, Vec<EventRecord>)>, CliError> {
    let g1 = sample_event_times(scenario, Group::One, n_per_group, seed)?;
    let g2 = sample_event_times(scenario, Group::Two, n_per_group, seed.wrapping_add(1))?;
    let g1 = apply_censoring(&g1, censor_fraction, seed.wrapping_add(2))?;
    let g2 = apply_censoring(&g2, censor_fraction, seed.wrapping_add(3))?;
    Ok(vec![("1".to_string(), g1), ("2".to_string(), g2)])
}

/// Long-format CSV for a set of grouped records: one row per transition,
/// one status-0 row per censoring, subject rows in time order.
pub fn event_csv(
    groups: &[(String, Vec<EventRecord>)],
    status_map: &StatusMap,
) -> Result<String, CliError> {
    let code_of = |tr: &Transition| -> Result<u32, CliError> {
        status_map
            .iter()
            .find(|(_, ft)| *ft == (tr.from, tr.to))
            .map(|(code, _)| *code)
            .ok_or_else(|| CliError::Run {
                module: "simulation",
                message: format!(
                    "generated transition {} -> {} has no status code",
                    tr.from, tr.to
                ),
            })
    };
    let mut table = CsvTable::new();
    table.row(["id", "group", "time", "status"])?;
    for (gname, records) in groups {
        for rec in records {
            for tr in &rec.transitions {
                let code = code_of(tr)?;
                table.row(&[
                    rec.subject_id.clone(),
                    gname.clone(),
                    format!("{}", tr.time),
                    format!("{code}"),
                ])?;
            }
            if let Some(c) = rec.censor_time {
                table.row(&[
                    rec.subject_id.clone(),
                    gname.clone(),
                    format!("{c}"),
                    "0".to_string(),
                ])?;
            }
        }
    }
    table.finish()
}

pub fn simulate(cfg: &FileConfig, args: &SimulateArgs) -> Result<(), CliError> {
    let kind = match args.kappa.or(cfg.scenario.kappa) {
        Some(_) => Some(scenario_kind(cfg, args.param.as_deref())?),
        None => None,
    };
    let (tpl, family) = build_scenario(
        cfg,
        args.shape.as_deref(),
        args.family.as_deref(),
        args.horizon,
        kind,
    )?;
    let scenario = match args.kappa.or(cfg.scenario.kappa) {
        Some(kappa) => {
            let t0 = require_t0(args.t0.or(cfg.scenario.t0).or(cfg.analysis.t0))?;
            calibrate_kappa(&tpl, kind.expect("kind is set when kappa is"), t0, kappa)?
        }
        None => tpl,
    };
    let n = args.n.or(cfg.scenario.n_per_group).unwrap_or(100);
    if n == 0 {
        return Err(CliError::usage("n_per_group must be positive"));
    }
    let censor = check_censor(args.censor.or(cfg.scenario.censor_fraction).unwrap_or(0.1))?;
    let groups = generate(&scenario, n, censor, args.seed)?;
    let csv = event_csv(&groups, &family_status_map(family))?;
    write_sink(args.output.as_deref(), &csv)
}

pub fn power(cfg: &FileConfig, args: &PowerArgs) -> Result<(), CliError> {
    let kind = scenario_kind(cfg, args.param.as_deref())?;
    let (tpl, _) = build_scenario(
        cfg,
        args.shape.as_deref(),
        args.family.as_deref(),
        args.horizon,
        Some(kind),
    )?;
    let spec = spec_for_kind(kind);
    let t0 = require_t0(args.t0.or(cfg.scenario.t0).or(cfg.analysis.t0))?;
    let kappas = args
        .kappas
        .clone()
        .or_else(|| cfg.power.kappas.clone())
        .unwrap_or_else(|| vec![0.0]);
    if kappas.is_empty() || kappas.iter().any(|k| !k.is_finite()) {
        return Err(CliError::usage("kappas must be a nonempty list of finite values"));
    }
    let n = args.n.or(cfg.scenario.n_per_group).unwrap_or(100);
    if n == 0 {
        return Err(CliError::usage("n_per_group must be positive"));
    }
    let m = args.replications.or(cfg.power.replications).unwrap_or(400);
    if m == 0 {
        return Err(CliError::usage("replications must be positive"));
    }
    let level = check_level(args.level.or(cfg.power.level).unwrap_or(0.05), "test level")?;
    let selector = parse_test(
        args.test
            .as_deref()
            .or(cfg.power.test.as_deref())
            .unwrap_or("plugin"),
    )?;
    let censor = check_censor(args.censor.or(cfg.scenario.censor_fraction).unwrap_or(0.1))?;

    let curve = power_curve(
        &tpl, &spec, selector, t0, &kappas, n, m, level, censor, args.seed,
    )?;

    let mut table = CsvTable::new();
    table.row([
        "kappa",
        "rejection_rate",
        "mc_std_error",
        "replications",
        "failures",
        "flagged",
    ])?;
    let mut summary_lines = Vec::with_capacity(curve.points.len());
    for p in &curve.points {
        table.row(&[
            format!("{}", p.kappa),
            format!("{}", p.rejection_rate),
            format!("{}", p.mc_std_error),
            format!("{}", p.replications),
            format!("{}", p.failures),
            format!("{}", p.flagged),
        ])?;
        summary_lines.push(format!(
            "kappa {:.3}: rejection {:.4} (se {:.4}, m {}, failures {}){}",
            p.kappa,
            p.rejection_rate,
            p.mc_std_error,
            p.replications,
            p.failures,
            if p.flagged { " [flagged]" } else { "" }
        ));
    }
    emit_with_summary(args.output.as_deref(), &table.finish()?, &summary_lines)
}

struct CsvTable {
    w: csv::Writer<Vec<u8>>,
}

impl CsvTable {
    fn new() -> Self {
        CsvTable {
            w: csv::Writer::from_writer(Vec::new()),
        }
    }

    fn row<I, S>(&mut self, fields: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.w.write_record(fields).map_err(|e| CliError::Run {
            module: "output",
            message: e.to_string(),
        })
    }

    fn finish(self) -> Result<String, CliError> {
        let bytes = self.w.into_inner().map_err(|e| CliError::Run {
            module: "output",
            message: e.to_string(),
        })?;
        Ok(String::from_utf8(bytes).expect("csv output is utf8"))
    }
}

fn write_sink(path: Option<&Path>, content: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, content).map_err(|source| CliError::Io {
            path: p.display().to_string(),
            source,
        }),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// Machine table to the output file with the summary on stdout; with no
/// output file the summary comes first, then the table, both on stdout.
fn emit_with_summary(
    path: Option<&Path>,
    table: &str,
    summary_lines: &[String],
) -> Result<(), CliError> {
    for line in summary_lines {
        println!("{line}");
    }
    match path {
        Some(_) => write_sink(path, table),
        None => {
            println!();
            print!("{table}");
            Ok(())
        }
    }
}
