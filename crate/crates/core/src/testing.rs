//! Two-sample inference: Wald tests built from plugin covariance paths,
//! the classic log-rank comparator, and a Greenwood-variance survival test.

use crate::events::CountingSystem;
use crate::ode::{PluginPath, SolveError};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Upper tail of the chi-square distribution with `df` degrees of freedom.
/// Series / continued-fraction evaluation of the regularized incomplete
/// gamma function, absolute error below 1e-10 over the tested range.
pub fn chi2_sf(x: f64, df: usize) -> f64 {
    if df == 0 || x.is_nan() || x <= 0.0 {
        return 1.0;
    }
    if x == f64::INFINITY {
        return 0.0;
    }
    let a = df as f64 / 2.0;
    let xh = x / 2.0;
    if xh < a + 1.0 {
        1.0 - gamma_series_p(a, xh)
    } else {
        gamma_cf_q(a, xh)
    }
}

fn ln_gamma(x: f64) -> f64 {
    // Lanczos, g = 5, the usual six coefficients
    const COEFFS: [f64; 6] = [
        76.18009172947146,
        -86.50532032941677,
        24.01409824083091,
        -1.231739572450155,
        0.1208650973866179e-2,
        -0.5395239384953e-5,
    ];
    let tmp = x + 5.5;
    let tmp = tmp - (x + 0.5) * tmp.ln();
    let mut ser = 1.000000000190015;
    for (j, &c) in COEFFS.iter().enumerate() {
        ser += c / (x + 1.0 + j as f64);
    }
    -tmp + (2.5066282746310005 * ser / x).ln()
}

fn gamma_series_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let mut sum = 1.0 / a;
    let mut term = sum;
    for n in 1..500 {
        term *= x / (a + n as f64);
        sum += term;
        if term.abs() < sum.abs() * 1e-16 {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_cf_q(a: f64, x: f64) -> f64 {
    const FPMIN: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 3e-16 {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Two-sided normal critical value for a confidence `level` in (0, 1),
/// obtained by inverting the df=1 chi-square tail.
pub fn normal_two_sided_z(level: f64) -> f64 {
    assert!(level > 0.0 && level < 1.0, "level must be in (0,1)");
    let alpha = 1.0 - level;
    let mut lo = 0.0_f64;
    let mut hi = 40.0_f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chi2_sf(mid * mid, 1) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Clone, Debug)]
pub struct GroupSummary {
    pub estimate: f64,
    pub std_error: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug)]
pub struct TestResult {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// evaluation time of the comparison (infinite for an unrestricted
    /// rank test)
    pub t0: f64,
    pub method: &'static str,
    pub level: f64,
    /// per group, per tested coordinate
    pub groups: Vec<Vec<GroupSummary>>,
}

#[derive(Debug, Error)]
pub enum TestError {
    #[error(transparent)]
    Evaluate(#[from] SolveError),
    #[error("no coordinates selected for testing")]
    EmptyIndices,
    #[error("coordinate {index} out of range for a {p}-state parameter")]
    IndexOutOfRange { index: usize, p: usize },
    #[error(
        "pooled covariance is numerically singular (reciprocal condition {rcond:.3e}); \
         test fewer coordinates or a later evaluation time"
    )]
    DegenerateCovariance { rcond: f64 },
    #[error("rank statistic has zero variance")]
    ZeroVariance,
    #[error("confidence level {level} outside (0,1)")]
    BadLevel { level: f64 },
    #[error("no events to compare")]
    NoEvents,
}

/// Reciprocal condition numbers below this make the pooled covariance
/// untrustworthy and the test refuses to invert it.
pub const RCOND_FLOOR: f64 = 1e-12;

/// Wald test of equality of the selected state coordinates at `t0`, using
/// the plugin covariance from each group. The degrees of freedom equal the
/// number of tested coordinates; a pooled covariance with reciprocal
/// condition below `RCOND_FLOOR` is an error rather than a silently
/// reduced-rank statistic.
pub fn plugin_test(
    path1: &PluginPath,
    path2: &PluginPath,
    t0: f64,
    indices: &[usize],
    level: f64,
) -> Result<TestResult, TestError> {
    if indices.is_empty() {
        return Err(TestError::EmptyIndices);
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(TestError::BadLevel { level });
    }
    let (x1, v1) = path1.at(t0)?;
    let (x2, v2) = path2.at(t0)?;
    let p = x1.len();
    for &i in indices {
        if i >= p {
            return Err(TestError::IndexOutOfRange { index: i, p });
        }
    }

    let m = indices.len();
    let mut d = DVector::zeros(m);
    let mut pooled = DMatrix::zeros(m, m);
    for (r, &i) in indices.iter().enumerate() {
        d[r] = x1[i] - x2[i];
        for (c, &j) in indices.iter().enumerate() {
            pooled[(r, c)] =
                v1[(i, j)] / path1.n as f64 + v2[(i, j)] / path2.n as f64;
        }
    }

    let svd = pooled.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let rcond = if smax > 0.0 { smin / smax } else { 0.0 };
    if !(rcond >= RCOND_FLOOR) {
        return Err(TestError::DegenerateCovariance { rcond });
    }
    let u = svd.u.as_ref().expect("svd with u");
    let mut statistic = 0.0;
    for (k, &s) in svd.singular_values.iter().enumerate() {
        let proj = u.column(k).dot(&d);
        statistic += proj * proj / s;
    }
    let p_value = chi2_sf(statistic, m);

    let z = normal_two_sided_z(level);
    let summarize = |x: &DVector<f64>, v: &DMatrix<f64>, n: usize| {
        indices
            .iter()
            .map(|&i| {
                let se = (v[(i, i)] / n as f64).max(0.0).sqrt();
                GroupSummary {
                    estimate: x[i],
                    std_error: se,
                    lower: x[i] - z * se,
                    upper: x[i] + z * se,
                }
            })
            .collect::<Vec<_>>()
    };

    Ok(TestResult {
        statistic,
        df: m,
        p_value,
        t0,
        method: "plugin",
        level,
        groups: vec![
            summarize(&x1, &v1, path1.n),
            summarize(&x2, &v2, path2.n),
        ],
    })
}

fn pooled_event_times(
    cs1: &CountingSystem,
    cs2: &CountingSystem,
    class: usize,
    horizon: Option<f64>,
) -> Vec<f64> {
    let mut times: Vec<f64> = cs1
        .jump_grid
        .iter()
        .enumerate()
        .filter(|&(k, _)| cs1.dn[k][class] > 0)
        .map(|(_, &t)| t)
        .chain(
            cs2.jump_grid
                .iter()
                .enumerate()
                .filter(|&(k, _)| cs2.dn[k][class] > 0)
                .map(|(_, &t)| t),
        )
        .filter(|&t| horizon.map_or(true, |h| t <= h))
        .collect();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup();
    times
}

/// Two-sample log-rank test for one transition class, hypergeometric
/// variance, ties handled by the usual correction. `horizon` restricts the
/// comparison to events at or before that time.
pub fn logrank_test(
    cs1: &CountingSystem,
    cs2: &CountingSystem,
    class: usize,
    horizon: Option<f64>,
) -> Result<TestResult, TestError> {
    let times = pooled_event_times(cs1, cs2, class, horizon);
    if times.is_empty() {
        return Err(TestError::NoEvents);
    }
    let mut observed_minus_expected = 0.0;
    let mut variance = 0.0;
    for &t in &times {
        let d1 = cs1.dn_at(class, t) as f64;
        let d2 = cs2.dn_at(class, t) as f64;
        let y1 = cs1.y_at(class, t) as f64;
        let y2 = cs2.y_at(class, t) as f64;
        let y = y1 + y2;
        let d = d1 + d2;
        if y <= 0.0 || d <= 0.0 {
            continue;
        }
        observed_minus_expected += d1 - d * y1 / y;
        if y > 1.0 {
            variance += d * (y1 / y) * (y2 / y) * (y - d) / (y - 1.0);
        }
    }
    if variance <= 0.0 {
        return Err(TestError::ZeroVariance);
    }
    let statistic = observed_minus_expected * observed_minus_expected / variance;
    Ok(TestResult {
        statistic,
        df: 1,
        p_value: chi2_sf(statistic, 1),
        t0: horizon.unwrap_or(f64::INFINITY),
        method: "logrank",
        level: 0.95,
        groups: Vec::new(),
    })
}

/// Kaplan-Meier estimate at `t0` with Greenwood variance, for one class.
pub fn km_greenwood(cs: &CountingSystem, class: usize, t0: f64) -> (f64, f64) {
    let mut s = 1.0_f64;
    let mut gsum = 0.0_f64;
    for (k, &t) in cs.jump_grid.iter().enumerate() {
        if t > t0 {
            break;
        }
        let d = cs.dn[k][class] as f64;
        if d == 0.0 {
            continue;
        }
        let y = cs.y[k][class] as f64;
        s *= 1.0 - d / y;
        if y > d {
            gsum += d / (y * (y - d));
        } else {
            gsum = f64::INFINITY;
        }
    }
    (s, s * s * gsum)
}

/// Two-sample comparison of Kaplan-Meier survival at `t0` using Greenwood
/// standard errors, squared to a df=1 chi-square statistic.
pub fn greenwood_survival_test(
    cs1: &CountingSystem,
    cs2: &CountingSystem,
    class: usize,
    t0: f64,
    level: f64,
) -> Result<TestResult, TestError> {
    if !(level > 0.0 && level < 1.0) {
        return Err(TestError::BadLevel { level });
    }
    let (s1, var1) = km_greenwood(cs1, class, t0);
    let (s2, var2) = km_greenwood(cs2, class, t0);
    let pooled = var1 + var2;
    if !(pooled > 0.0) || !pooled.is_finite() {
        return Err(TestError::ZeroVariance);
    }
    let diff = s1 - s2;
    let statistic = diff * diff / pooled;
    let z = normal_two_sided_z(level);
    let summary = |s: f64, var: f64| {
        let se = var.sqrt();
        vec![GroupSummary {
            estimate: s,
            std_error: se,
            lower: s - z * se,
            upper: s + z * se,
        }]
    };
    Ok(TestResult {
        statistic,
        df: 1,
        p_value: chi2_sf(statistic, 1),
        t0,
        method: "greenwood",
        level,
        groups: vec![summary(s1, var1), summary(s2, var2)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::{build_counting_system, EventRecord, Transition, TransitionSchema};
    use crate::ode::solve_variance;
    use crate::params;

    fn death(id: &str, g: &str, t: f64) -> EventRecord {
        EventRecord::new(id, g).with_transitions(vec![Transition {
            time: t,
            from: 0,
            to: 1,
        }])
    }

    #[test]
    fn chi2_sf_reference_values() {
        // frozen against 30-digit evaluation of the regularized upper gamma
        let cases: [(f64, usize, f64); 14] = [
            (0.5, 1, 0.47950012218695346),
            (1.0, 1, 0.3173105078629141),
            (3.841458820694124, 1, 0.050000000000000057),
            (6.6348966010212145, 1, 0.010000000000000004),
            (1.3862943611198906, 2, 0.5),
            (5.991464547107979, 2, 0.050000000000000074),
            (0.2, 3, 0.9775892977616494),
            (7.814727903251179, 3, 0.050000000000000018),
            (2.7, 4, 0.60921461251784501),
            (15.0, 6, 0.020256715056664405),
            (30.0, 10, 0.00085664121077530039),
            (1e-8, 1, 0.99992021154405269),
            (80.0, 1, 3.7440973842028988e-19),
            (200.0, 8, 6.3898877022382161e-39),
        ];
        for (x, df, want) in cases {
            let got = chi2_sf(x, df);
            let err = if want > 1e-15 {
                (got - want).abs().min((got / want - 1.0).abs())
            } else {
                (got / want - 1.0).abs()
            };
            assert!(err < 1e-10, "chi2_sf({x}, {df}) = {got}, want {want}");
        }
    }

    #[test]
    fn chi2_sf_edge_cases() {
        assert_eq!(chi2_sf(0.0, 1), 1.0);
        assert_eq!(chi2_sf(-3.0, 2), 1.0);
        assert_eq!(chi2_sf(1.0, 0), 1.0);
        assert_eq!(chi2_sf(f64::INFINITY, 2), 0.0);
        assert_eq!(chi2_sf(f64::NAN, 2), 1.0);
    }

    #[test]
    fn chi2_sf_agrees_with_statrs() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        for df in [1usize, 2, 3, 5, 8, 20] {
            let dist = ChiSquared::new(df as f64).unwrap();
            let mut x = 0.05;
            while x < 60.0 {
                let want = dist.sf(x);
                let got = chi2_sf(x, df);
                assert!(
                    (got - want).abs() < 1e-10,
                    "df={df} x={x}: {got} vs {want}"
                );
                x += 0.73;
            }
        }
    }

    #[test]
    fn normal_quantiles_from_chi2_inverse() {
        assert!((normal_two_sided_z(0.95) - 1.9599639845400542).abs() < 1e-9);
        assert!((normal_two_sided_z(0.99) - 2.5758293035489008).abs() < 1e-9);
        assert!((normal_two_sided_z(0.90) - 1.6448536269514727).abs() < 1e-9);
    }

    #[test]
    fn logrank_one_against_one() {
        let g1 = vec![death("a", "1", 1.0)];
        let g2 = vec![death("b", "2", 2.0)];
        let schema = TransitionSchema::survival();
        let cs1 = build_counting_system(&g1, &schema).unwrap();
        let cs2 = build_counting_system(&g2, &schema).unwrap();
        let res = logrank_test(&cs1, &cs2, 0, None).unwrap();
        assert!((res.statistic - 1.0).abs() < 1e-12);
        assert_eq!(res.df, 1);
    }

    #[test]
    fn greenwood_variance_two_subjects_one_death() {
        let recs = vec![
            death("a", "1", 1.0),
            EventRecord::new("b", "1").censored_at(2.0),
        ];
        let cs = build_counting_system(&recs, &TransitionSchema::survival()).unwrap();
        let (s, var) = km_greenwood(&cs, 0, 1.5);
        assert!((s - 0.5).abs() < 1e-15);
        assert!((var - 0.125).abs() < 1e-15);
    }

    #[test]
    fn plugin_test_identical_groups_is_null() {
        let make = |g: &str| {
            vec![
                death("a", g, 1.0),
                death("b", g, 2.0),
                EventRecord::new(format!("c{g}"), g).censored_at(3.0),
            ]
        };
        let spec = params::survival_spec();
        let p1 = params::estimate(&spec, &make("1"), 2.5).unwrap();
        let p2 = params::estimate(&spec, &make("2"), 2.5).unwrap();
        let res = plugin_test(&p1, &p2, 2.5, &[0], 0.95).unwrap();
        assert!(res.statistic.abs() < 1e-20);
        assert!((res.p_value - 1.0).abs() < 1e-10);
        assert_eq!(res.df, 1);
        // summaries carry the common estimate
        assert!((res.groups[0][0].estimate - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(res.groups.len(), 2);
    }

    #[test]
    fn plugin_test_symmetric_under_group_swap() {
        let g1 = vec![
            death("a", "1", 0.5),
            death("b", "1", 1.5),
            EventRecord::new("c", "1").censored_at(3.0),
        ];
        let g2 = vec![
            death("d", "2", 2.0),
            EventRecord::new("e", "2").censored_at(3.0),
            EventRecord::new("f", "2").censored_at(3.0),
        ];
        let spec = params::survival_spec();
        let p1 = params::estimate(&spec, &g1, 2.5).unwrap();
        let p2 = params::estimate(&spec, &g2, 2.5).unwrap();
        let ab = plugin_test(&p1, &p2, 2.5, &[0], 0.95).unwrap();
        let ba = plugin_test(&p2, &p1, 2.5, &[0], 0.95).unwrap();
        assert!((ab.statistic - ba.statistic).abs() < 1e-12);
        assert!((ab.p_value - ba.p_value).abs() < 1e-12);
        assert!(ab.statistic > 0.0);
    }

    #[test]
    fn plugin_test_wald_interval_from_covariance() {
        // single death among two at t=1: S = 1/2, scaled var = 1/2,
        // se = sqrt(0.5/2) = 0.5, CI = 0.5 +- 1.96*0.5
        let g1 = vec![
            death("a", "1", 1.0),
            EventRecord::new("b", "1").censored_at(2.0),
        ];
        let g2 = vec![
            death("c", "2", 1.0),
            EventRecord::new("d", "2").censored_at(2.0),
        ];
        let spec = params::survival_spec();
        let p1 = params::estimate(&spec, &g1, 1.0).unwrap();
        let p2 = params::estimate(&spec, &g2, 1.0).unwrap();
        let res = plugin_test(&p1, &p2, 1.0, &[0], 0.95).unwrap();
        let s = &res.groups[0][0];
        assert!((s.estimate - 0.5).abs() < 1e-12);
        assert!((s.std_error - 0.5).abs() < 1e-12);
        assert!((s.lower - (0.5 - 1.9599639845400542 * 0.5)).abs() < 1e-9);
        assert!((s.upper - (0.5 + 1.9599639845400542 * 0.5)).abs() < 1e-9);
    }

    #[test]
    fn plugin_test_rejects_bad_inputs() {
        let g = vec![death("a", "1", 1.0)];
        let spec = params::survival_spec();
        let p = params::estimate(&spec, &g, 1.0).unwrap();
        assert!(matches!(
            plugin_test(&p, &p, 1.0, &[], 0.95),
            Err(TestError::EmptyIndices)
        ));
        assert!(matches!(
            plugin_test(&p, &p, 1.0, &[4], 0.95),
            Err(TestError::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            plugin_test(&p, &p, 1.0, &[0], 1.5),
            Err(TestError::BadLevel { .. })
        ));
        // beyond the solved horizon
        assert!(matches!(
            plugin_test(&p, &p, 2.0, &[0], 0.95),
            Err(TestError::Evaluate(_))
        ));
    }

    #[test]
    fn joint_test_uses_full_covariance_rank() {
        // rmst parameter: test (S, R) jointly, expect df = 2
        let g1 = vec![
            death("a", "1", 0.4),
            death("b", "1", 1.1),
            death("c", "1", 1.9),
            EventRecord::new("d", "1").censored_at(2.5),
        ];
        let g2 = vec![
            death("e", "2", 1.3),
            death("f", "2", 2.2),
            EventRecord::new("g", "2").censored_at(2.5),
            EventRecord::new("h", "2").censored_at(2.5),
        ];
        let spec = params::rmst_spec();
        let hz1 = params::hazard_for(&spec, &g1).unwrap();
        let hz2 = params::hazard_for(&spec, &g2).unwrap();
        let p1 = solve_variance(&spec.definition, &hz1, 2.4).unwrap();
        let p2 = solve_variance(&spec.definition, &hz2, 2.4).unwrap();
        let res = plugin_test(&p1, &p2, 2.4, &[0, 1], 0.95).unwrap();
        assert_eq!(res.df, 2);
        assert!(res.statistic > 0.0);
        assert!(res.p_value > 0.0 && res.p_value < 1.0);
    }

    #[test]
    fn greenwood_test_runs_on_two_groups() {
        let g1 = vec![
            death("a", "1", 0.5),
            death("b", "1", 1.5),
            EventRecord::new("c", "1").censored_at(3.0),
        ];
        let g2 = vec![
            death("d", "2", 2.0),
            EventRecord::new("e", "2").censored_at(3.0),
            EventRecord::new("f", "2").censored_at(3.0),
        ];
        let schema = TransitionSchema::survival();
        let cs1 = build_counting_system(&g1, &schema).unwrap();
        let cs2 = build_counting_system(&g2, &schema).unwrap();
        let res = greenwood_survival_test(&cs1, &cs2, 0, 2.5, 0.95).unwrap();
        assert_eq!(res.df, 1);
        assert!(res.statistic > 0.0);
        let s1 = &res.groups[0][0];
        assert!((s1.estimate - 1.0 / 3.0).abs() < 1e-12);
    }
}
