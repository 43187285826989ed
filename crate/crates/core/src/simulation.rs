//! Two-group scenario generation with piecewise-linear hazards, hazard
//! calibration to a target parameter difference at t0, artificial
//! censoring, and Monte Carlo power estimation for the plugin tests and
//! their rank-based comparators.

use crate::events::{build_counting_system, EventRecord, Transition};
use crate::ode::solve_variance;
use crate::params::{self, ParameterKind, ParameterSpec};
use crate::testing::{greenwood_survival_test, logrank_test, plugin_test};
use rand::seq::index::sample as index_sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

/// Hazard rate a + b(t - t*)+ for t >= 0, nonnegative over the horizon of
/// the scenario it belongs to. Cumulative hazard and its inverse are closed
/// form, so event times come from plain inverse-transform sampling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PiecewiseLinearHazard {
    pub level: f64,
    pub slope: f64,
    pub changepoint: f64,
}

impl PiecewiseLinearHazard {
    pub fn constant(level: f64) -> Self {
        PiecewiseLinearHazard {
            level,
            slope: 0.0,
            changepoint: 0.0,
        }
    }

    pub fn rate(&self, t: f64) -> f64 {
        self.level + self.slope * (t - self.changepoint).max(0.0)
    }

    pub fn cumulative(&self, t: f64) -> f64 {
        let u = (t - self.changepoint).max(0.0);
        self.level * t + 0.5 * self.slope * u * u
    }

    /// First time the cumulative hazard reaches `target`; infinity when the
    /// rate dies out before accumulating that much.
    pub fn invert(&self, target: f64) -> f64 {
        if target <= 0.0 {
            return 0.0;
        }
        let a = self.level;
        let b = self.slope;
        let c = self.changepoint;
        let at_change = a * c;
        if target <= at_change {
            // a > 0 here since target > 0
            return target / a;
        }
        let rem = target - at_change;
        let disc = a * a + 2.0 * b * rem;
        if disc < 0.0 {
            return f64::INFINITY;
        }
        let denom = a + disc.sqrt();
        if denom <= 0.0 {
            return f64::INFINITY;
        }
        // stable first root of (b/2)u^2 + a u = rem
        c + 2.0 * rem / denom
    }

    fn exp_draw<R: Rng>(rng: &mut R) -> f64 {
        -(1.0 - rng.gen::<f64>()).ln()
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        self.invert(Self::exp_draw(rng))
    }

    /// Next event strictly after `t`, conditional on none by `t`.
    pub fn sample_after<R: Rng>(&self, t: f64, rng: &mut R) -> f64 {
        self.invert(self.cumulative(t) + Self::exp_draw(rng))
    }

    fn valid_on(&self, horizon: f64) -> bool {
        self.level.is_finite()
            && self.slope.is_finite()
            && self.changepoint.is_finite()
            && self.changepoint >= 0.0
            && self.level >= 0.0
            // linear pieces: endpoint checks suffice
            && self.rate(horizon) >= 0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScenarioShape {
    Constant,
    Crossing,
    Deviating,
}

/// What event structure the scenario generates. The auxiliary transitions
/// (competing cause, terminal death, post-illness death) all run at the
/// scenario's constant `competing_hazard`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScenarioFamily {
    SingleEvent,
    CompetingRisks,
    RecurrentEvents,
    IllnessDeath,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Group {
    One,
    Two,
}

impl Group {
    fn label(self) -> &'static str {
        match self {
            Group::One => "1",
            Group::Two => "2",
        }
    }
}

#[derive(Clone, Debug)]
pub struct HazardScenario {
    pub shape: ScenarioShape,
    pub family: ScenarioFamily,
    pub group1: PiecewiseLinearHazard,
    pub group2: PiecewiseLinearHazard,
    pub competing_hazard: f64,
    pub horizon: f64,
}

/// Group-1 event probability by t = 1.5 is about 0.35 at this level.
pub const BASELINE_LEVEL: f64 = 0.287;
/// Starting level of the crossing-shape group-2 hazard.
pub const CROSSING_START_LEVEL: f64 = 0.45;
/// Hazards in the deviating shape separate after this time.
pub const DEVIATION_CHANGEPOINT: f64 = 0.75;
/// Constant rate of every auxiliary transition.
pub const DEFAULT_COMPETING_HAZARD: f64 = 0.4;

impl HazardScenario {
    /// Scenario skeleton with the documented default coefficients; the
    /// group-2 free coefficient is meant to be set by `calibrate_kappa`.
    pub fn template(shape: ScenarioShape, family: ScenarioFamily, horizon: f64) -> Self {
        let group1 = PiecewiseLinearHazard::constant(BASELINE_LEVEL);
        let group2 = match shape {
            ScenarioShape::Constant => PiecewiseLinearHazard::constant(BASELINE_LEVEL),
            ScenarioShape::Crossing => PiecewiseLinearHazard {
                level: CROSSING_START_LEVEL,
                slope: 0.0,
                changepoint: 0.0,
            },
            ScenarioShape::Deviating => PiecewiseLinearHazard {
                level: BASELINE_LEVEL,
                slope: 0.0,
                changepoint: DEVIATION_CHANGEPOINT,
            },
        };
        HazardScenario {
            shape,
            family,
            group1,
            group2,
            competing_hazard: DEFAULT_COMPETING_HAZARD,
            horizon,
        }
    }

    pub fn group(&self, which: Group) -> &PiecewiseLinearHazard {
        match which {
            Group::One => &self.group1,
            Group::Two => &self.group2,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(SimError::BadScenario {
                reason: format!("horizon {} not positive", self.horizon),
            });
        }
        if !(self.competing_hazard >= 0.0) {
            return Err(SimError::BadScenario {
                reason: format!("competing hazard {} negative", self.competing_hazard),
            });
        }
        for (name, h) in [("group1", &self.group1), ("group2", &self.group2)] {
            if !h.valid_on(self.horizon) {
                return Err(SimError::BadScenario {
                    reason: format!(
                        "{name} hazard (level {}, slope {}, changepoint {}) negative on [0, {}]",
                        h.level, h.slope, h.changepoint, self.horizon
                    ),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {reason}")]
    BadScenario { reason: String },
    #[error("censoring fraction {fraction} outside [0,1)")]
    BadFraction { fraction: f64 },
    #[error(
        "target difference {kappa} outside the achievable range [{lo:.6}, {hi:.6}] \
         for the free coefficient bracket"
    )]
    NoBracket { kappa: f64, lo: f64, hi: f64 },
    #[error("parameter kind {0:?} has no generator in this scenario family")]
    UnsupportedKind(ParameterKind),
    #[error("no replications requested")]
    NoReplications,
}

fn sample_records<R: Rng>(
    scenario: &HazardScenario,
    group: Group,
    n: usize,
    rng: &mut R,
) -> Vec<EventRecord> {
    let h = scenario.group(group);
    let aux = PiecewiseLinearHazard::constant(scenario.competing_hazard);
    let horizon = scenario.horizon;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let id = format!("g{}-{}", group.label(), i);
        let mut rec = EventRecord::new(id, group.label());
        match scenario.family {
            ScenarioFamily::SingleEvent => {
                let t = h.sample(rng);
                if t <= horizon {
                    rec.transitions.push(Transition {
                        time: t,
                        from: 0,
                        to: 1,
                    });
                } else {
                    rec.censor_time = Some(horizon);
                }
            }
            ScenarioFamily::CompetingRisks => {
                let t_main = h.sample(rng);
                let t_comp = aux.sample(rng);
                let t = t_main.min(t_comp);
                if t <= horizon {
                    let to = if t_main <= t_comp { 1 } else { 2 };
                    rec.transitions.push(Transition { time: t, from: 0, to });
                } else {
                    rec.censor_time = Some(horizon);
                }
            }
            ScenarioFamily::RecurrentEvents => {
                let t_death = aux.sample(rng);
                let stop = t_death.min(horizon);
                let mut t = 0.0;
                loop {
                    t = h.sample_after(t, rng);
                    if t >= stop {
                        break;
                    }
                    rec.transitions.push(Transition {
                        time: t,
                        from: 0,
                        to: 0,
                    });
                }
                if t_death <= horizon {
                    rec.transitions.push(Transition {
                        time: t_death,
                        from: 0,
                        to: 1,
                    });
                } else {
                    rec.censor_time = Some(horizon);
                }
            }
            ScenarioFamily::IllnessDeath => {
                let t_ill = h.sample(rng);
                let t_death = aux.sample(rng);
                if t_death <= t_ill {
                    if t_death <= horizon {
                        rec.transitions.push(Transition {
                            time: t_death,
                            from: 0,
                            to: 2,
                        });
                    } else {
                        rec.censor_time = Some(horizon);
                    }
                } else if t_ill <= horizon {
                    rec.transitions.push(Transition {
                        time: t_ill,
                        from: 0,
                        to: 1,
                    });
                    // constant post-illness rate: memoryless residual
                    let t2 = t_ill + aux.sample(rng);
                    if t2 <= horizon {
                        rec.transitions.push(Transition {
                            time: t2,
                            from: 1,
                            to: 2,
                        });
                    } else {
                        rec.censor_time = Some(horizon);
                    }
                } else {
                    rec.censor_time = Some(horizon);
                }
            }
        }
        out.push(rec);
    }
    out
}

/// Generate `n` subject records for one scenario arm.
pub fn sample_event_times(
    scenario: &HazardScenario,
    group: Group,
    n: usize,
    seed: u64,
) -> Result<Vec<EventRecord>, SimError> {
    scenario.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sample_records(scenario, group, n, &mut rng))
}

fn censor_records<R: Rng>(
    records: &mut [EventRecord],
    fraction: f64,
    rng: &mut R,
) {
    let k = (fraction * records.len() as f64).floor() as usize;
    if k == 0 {
        return;
    }
    let chosen = index_sample(rng, records.len(), k);
    for idx in chosen.iter() {
        let rec = &mut records[idx];
        let end = rec.end_time().expect("records always carry an end");
        // (0, end]: zero would make an empty observation window
        let u = (1.0 - rng.gen::<f64>()) * end;
        rec.transitions.retain(|tr| tr.time < u);
        rec.censor_time = Some(u);
    }
}

/// Censor a uniformly chosen floor(fraction * n) subset of subjects at a
/// uniform time on (0, own end time).
pub fn apply_censoring(
    records: &[EventRecord],
    fraction: f64,
    seed: u64,
) -> Result<Vec<EventRecord>, SimError> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(SimError::BadFraction { fraction });
    }
    let mut out = records.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    censor_records(&mut out, fraction, &mut rng);
    Ok(out)
}

pub const CALIBRATION_MESH: usize = 10_000;
pub const CALIBRATION_TOL: f64 = 1e-8;

/// True parameter value at `t0` for one arm, integrated from the exact
/// scenario hazards on a fine deterministic mesh. This is the calibration
/// oracle: independent of the estimation engine by construction.
pub fn true_value(
    kind: ParameterKind,
    main: &PiecewiseLinearHazard,
    aux: f64,
    t0: f64,
    steps: usize,
) -> f64 {
    let dt = t0 / steps as f64;
    match kind {
        ParameterKind::Survival => {
            let mut s = 1.0;
            for k in 0..steps {
                s -= s * main.rate(k as f64 * dt) * dt;
            }
            s
        }
        ParameterKind::Rmst => {
            let mut s = 1.0;
            let mut r = 0.0;
            for k in 0..steps {
                r += s * dt;
                s -= s * main.rate(k as f64 * dt) * dt;
            }
            r
        }
        ParameterKind::CumulativeIncidence => {
            let mut s = 1.0;
            let mut c = 0.0;
            for k in 0..steps {
                let t = k as f64 * dt;
                c += s * main.rate(t) * dt;
                s -= s * (main.rate(t) + aux) * dt;
            }
            c
        }
        ParameterKind::MeanFrequency => {
            let mut s = 1.0;
            let mut m = 0.0;
            for k in 0..steps {
                let t = k as f64 * dt;
                m += s * main.rate(t) * dt;
                s -= s * aux * dt;
            }
            m
        }
        ParameterKind::Prevalence => {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for k in 0..steps {
                let t = k as f64 * dt;
                let flow = p0 * main.rate(t) * dt;
                p0 -= p0 * (main.rate(t) + aux) * dt;
                p1 += flow - p1 * aux * dt;
            }
            p1
        }
        ParameterKind::RecurrenceFreeRmst => {
            let mut s = 1.0;
            let mut r = 0.0;
            for k in 0..steps {
                let t = k as f64 * dt;
                r += s * dt;
                s -= s * (main.rate(t) + aux) * dt;
            }
            r
        }
    }
}

fn scenario_with_free(template: &HazardScenario, value: f64) -> HazardScenario {
    let mut s = template.clone();
    match s.shape {
        ScenarioShape::Constant => s.group2.level = value,
        ScenarioShape::Crossing | ScenarioShape::Deviating => s.group2.slope = value,
    }
    s
}

fn free_bracket(template: &HazardScenario) -> (f64, f64) {
    match template.shape {
        ScenarioShape::Constant => (0.0, 5.0),
        ScenarioShape::Crossing | ScenarioShape::Deviating => {
            // slope keeping the rate nonnegative at the horizon
            let span = template.horizon - template.group2.changepoint;
            let min_slope = if span > 0.0 {
                -template.group2.level / span
            } else {
                -5.0
            };
            (min_slope, 5.0)
        }
    }
}

/// Set the group-2 free coefficient (level for the constant shape, slope
/// otherwise) so the true parameter difference X1(t0) - X2(t0) equals
/// `kappa`, by bisection against the mesh oracle.
pub fn calibrate_kappa(
    template: &HazardScenario,
    kind: ParameterKind,
    t0: f64,
    kappa: f64,
) -> Result<HazardScenario, SimError> {
    template.validate()?;
    let aux = template.competing_hazard;
    let x1 = true_value(kind, &template.group1, aux, t0, CALIBRATION_MESH);
    let diff = |coef: f64| {
        let s = scenario_with_free(template, coef);
        x1 - true_value(kind, &s.group2, aux, t0, CALIBRATION_MESH)
    };
    let (mut lo, mut hi) = free_bracket(template);
    let (f_lo, f_hi) = (diff(lo), diff(hi));
    let (mut lo_val, mut hi_val) = (f_lo, f_hi);
    if (f_lo - kappa) * (f_hi - kappa) > 0.0 {
        if lo_val > hi_val {
            std::mem::swap(&mut lo_val, &mut hi_val);
        }
        return Err(SimError::NoBracket {
            kappa,
            lo: lo_val,
            hi: hi_val,
        });
    }
    let increasing = f_hi > f_lo;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f = diff(mid);
        if (f - kappa).abs() <= CALIBRATION_TOL {
            let s = scenario_with_free(template, mid);
            s.validate()?;
            return Ok(s);
        }
        if (f < kappa) == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = scenario_with_free(template, 0.5 * (lo + hi));
    s.validate()?;
    Ok(s)
}

/// Which two-sample test a power run exercises.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TestSelector {
    Plugin,
    LogRank,
    Greenwood,
}

/// Transition class the rank comparators track, per parameter kind.
fn comparator_class(kind: ParameterKind) -> usize {
    match kind {
        ParameterKind::Survival | ParameterKind::Rmst => 0,
        ParameterKind::CumulativeIncidence => 0,
        ParameterKind::MeanFrequency => 1,
        ParameterKind::Prevalence | ParameterKind::RecurrenceFreeRmst => 0,
    }
}

pub fn default_family(kind: ParameterKind) -> ScenarioFamily {
    match kind {
        ParameterKind::Survival | ParameterKind::Rmst => ScenarioFamily::SingleEvent,
        ParameterKind::CumulativeIncidence => ScenarioFamily::CompetingRisks,
        ParameterKind::MeanFrequency => ScenarioFamily::RecurrentEvents,
        ParameterKind::Prevalence | ParameterKind::RecurrenceFreeRmst => {
            ScenarioFamily::IllnessDeath
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PowerPoint {
    pub kappa: f64,
    pub rejection_rate: f64,
    pub mc_std_error: f64,
    pub replications: usize,
    pub failures: usize,
    pub flagged: bool,
}

#[derive(Clone, Debug)]
pub struct PowerCurve {
    pub points: Vec<PowerPoint>,
    pub n_per_group: usize,
    pub level: f64,
}

/// One Monte Carlo power estimate: `m` replications of a two-arm trial of
/// `n_per_group` subjects each, 10% artificial censoring unless overridden,
/// testing at significance `level`. Replication r draws from stream r of the
/// master seed, so parallel and serial runs agree bit for bit.
#[allow(clippy::too_many_arguments)]
pub fn estimate_power(
    scenario: &HazardScenario,
    spec: &ParameterSpec,
    test: TestSelector,
    t0: f64,
    n_per_group: usize,
    m: usize,
    level: f64,
    censor_fraction: f64,
    seed: u64,
) -> Result<PowerPoint, SimError> {
    scenario.validate()?;
    if m == 0 {
        return Err(SimError::NoReplications);
    }
    if !(0.0..1.0).contains(&censor_fraction) {
        return Err(SimError::BadFraction {
            fraction: censor_fraction,
        });
    }

    let outcomes: Vec<Option<bool>> = (0..m)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(rep as u64 + 1);
            let mut g1 = sample_records(scenario, Group::One, n_per_group, &mut rng);
            let mut g2 = sample_records(scenario, Group::Two, n_per_group, &mut rng);
            censor_records(&mut g1, censor_fraction, &mut rng);
            censor_records(&mut g2, censor_fraction, &mut rng);
            run_test(spec, test, &g1, &g2, t0, level)
        })
        .collect();

    let failures = outcomes.iter().filter(|o| o.is_none()).count();
    let effective = m - failures;
    let rejections = outcomes.iter().filter(|o| **o == Some(true)).count();
    let rate = if effective > 0 {
        rejections as f64 / effective as f64
    } else {
        f64::NAN
    };
    let se = if effective > 0 {
        (rate * (1.0 - rate) / effective as f64).sqrt()
    } else {
        f64::NAN
    };
    Ok(PowerPoint {
        kappa: f64::NAN, // set by power_curve; standalone runs don't know it
        rejection_rate: rate,
        mc_std_error: se,
        replications: m,
        failures,
        flagged: failures * 100 > m,
    })
}

fn run_test(
    spec: &ParameterSpec,
    test: TestSelector,
    g1: &[EventRecord],
    g2: &[EventRecord],
    t0: f64,
    level: f64,
) -> Option<bool> {
    match test {
        TestSelector::Plugin => {
            let hz1 = params::hazard_for(spec, g1).ok()?;
            let hz2 = params::hazard_for(spec, g2).ok()?;
            let p1 = solve_variance(&spec.definition, &hz1, t0).ok()?;
            let p2 = solve_variance(&spec.definition, &hz2, t0).ok()?;
            let res = plugin_test(&p1, &p2, t0, &[spec.estimand], 0.95).ok()?;
            Some(res.p_value < level)
        }
        TestSelector::LogRank => {
            let cs1 = build_counting_system(g1, &spec.schema).ok()?;
            let cs2 = build_counting_system(g2, &spec.schema).ok()?;
            let res = logrank_test(&cs1, &cs2, comparator_class(spec.kind), None).ok()?;
            Some(res.p_value < level)
        }
        TestSelector::Greenwood => {
            let cs1 = build_counting_system(g1, &spec.schema).ok()?;
            let cs2 = build_counting_system(g2, &spec.schema).ok()?;
            let res =
                greenwood_survival_test(&cs1, &cs2, comparator_class(spec.kind), t0, 0.95)
                    .ok()?;
            Some(res.p_value < level)
        }
    }
}

/// Calibrate and run one power point per target difference in `kappas`.
#[allow(clippy::too_many_arguments)]
pub fn power_curve(
    template: &HazardScenario,
    spec: &ParameterSpec,
    test: TestSelector,
    t0: f64,
    kappas: &[f64],
    n_per_group: usize,
    m: usize,
    level: f64,
    censor_fraction: f64,
    seed: u64,
) -> Result<PowerCurve, SimError> {
    let mut points = Vec::with_capacity(kappas.len());
    for (i, &kappa) in kappas.iter().enumerate() {
        let scenario = calibrate_kappa(template, spec.kind, t0, kappa)?;
        let sub_seed = seed.wrapping_add((i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut point = estimate_power(
            &scenario,
            spec,
            test,
            t0,
            n_per_group,
            m,
            level,
            censor_fraction,
            sub_seed,
        )?;
        point.kappa = kappa;
        points.push(point);
    }
    Ok(PowerCurve {
        points,
        n_per_group,
        level,
    })
}
