//! Cumulative hazard increments on the event grid: Nelson-Aalen style
//! counting estimators, additive (least squares) covariate-adjusted fits,
//! and attachment of deterministic time components.

use crate::events::CountingSystem;
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Increment paths for a q-component integrator: per grid time, the vector
/// of hazard increments dA and the optional-variation matrix dB. Components
/// flagged in `lebesgue_mask` integrate dt instead of a counting process;
/// their dA entries here are zero (the solver supplies the time increments)
/// and their dB rows and columns are zero.
///
/// Invariant: dB[k] equals the outer product of dA[k] with the Lebesgue
/// entries zeroed out.
#[derive(Clone, Debug)]
pub struct HazardPath {
    pub jump_grid: Vec<f64>,
    pub d_a: Vec<Vec<f64>>,
    pub d_b: Vec<DMatrix<f64>>,
    pub lebesgue_mask: Vec<bool>,
    pub n: usize,
    pub diagnostics: FitDiagnostics,
}

#[derive(Clone, Debug, Default)]
pub struct FitDiagnostics {
    /// Event ticks dropped because the regression design lost rank.
    pub skipped_increments: usize,
    /// Components that ever received a negative increment (kept, not clamped).
    pub negative_components: Vec<usize>,
    /// Set when the evaluation covariate lies outside the observed range.
    pub extrapolated: bool,
}

impl HazardPath {
    pub fn n_components(&self) -> usize {
        self.lebesgue_mask.len()
    }

    /// dA at row k with Lebesgue entries zeroed: the counting part that
    /// drives the optional variation.
    pub fn counting_increments(&self, k: usize) -> Vec<f64> {
        self.d_a[k]
            .iter()
            .zip(&self.lebesgue_mask)
            .map(|(&a, &leb)| if leb { 0.0 } else { a })
            .collect()
    }

    /// Max absolute deviation of dB from the outer product of the masked dA,
    /// over all rows. Zero up to float noise by construction.
    pub fn optional_variation_defect(&self) -> f64 {
        let q = self.n_components();
        let mut worst = 0.0_f64;
        for k in 0..self.jump_grid.len() {
            let c = self.counting_increments(k);
            for i in 0..q {
                for j in 0..q {
                    let want = c[i] * c[j];
                    worst = worst.max((self.d_b[k][(i, j)] - want).abs());
                }
            }
        }
        worst
    }
}

#[derive(Debug, Error)]
pub enum HazardError {
    #[error("component map references class {class} but the counting system has {available}")]
    BadClassIndex { class: usize, available: usize },
    #[error("class {class} jumps at t={time} with an empty risk set")]
    NoRiskSet { class: usize, time: f64 },
    #[error("covariate rows malformed: expected {expected} values, subject {subject} has {found}")]
    CovariateShape {
        subject: usize,
        expected: usize,
        found: usize,
    },
    #[error("regression design rank-deficient at t={time}")]
    RankDeficient { time: f64 },
    #[error("lebesgue positions invalid for {q} components: {position}")]
    BadLebesguePosition { q: usize, position: usize },
}

/// How a covariate fit reacts when the design matrix loses rank at a tick.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RankPolicy {
    /// Drop that tick's increment and count it in the diagnostics.
    Skip,
    /// Fail the whole fit.
    Error,
}

fn check_component_map(
    component_map: &[Vec<usize>],
    n_classes: usize,
) -> Result<(), HazardError> {
    for comp in component_map {
        for &c in comp {
            if c >= n_classes {
                return Err(HazardError::BadClassIndex {
                    class: c,
                    available: n_classes,
                });
            }
        }
    }
    Ok(())
}

fn outer_masked(d_a: &[f64], mask: &[bool]) -> DMatrix<f64> {
    let q = d_a.len();
    let mut m = DMatrix::zeros(q, q);
    for i in 0..q {
        if mask[i] {
            continue;
        }
        for j in 0..q {
            if mask[j] {
                continue;
            }
            m[(i, j)] = d_a[i] * d_a[j];
        }
    }
    m
}

/// Nelson-Aalen increments. Each output component sums the increments of its
/// listed transition classes, each over that class's own risk set. The grid
/// keeps the counting-system times where at least one mapped class jumps.
pub fn nelson_aalen(
    cs: &CountingSystem,
    component_map: &[Vec<usize>],
) -> Result<HazardPath, HazardError> {
    check_component_map(component_map, cs.n_classes())?;
    let q = component_map.len();
    let mask = vec![false; q];

    let mut jump_grid = Vec::new();
    let mut d_a = Vec::new();
    let mut d_b = Vec::new();
    for (k, &t) in cs.jump_grid.iter().enumerate() {
        let mut row = vec![0.0; q];
        let mut any = false;
        for (j, comp) in component_map.iter().enumerate() {
            for &c in comp {
                let dn = cs.dn[k][c];
                if dn == 0 {
                    continue;
                }
                let y = cs.y[k][c];
                if y == 0 {
                    return Err(HazardError::NoRiskSet { class: c, time: t });
                }
                row[j] += dn as f64 / y as f64;
                any = true;
            }
        }
        if any {
            d_b.push(outer_masked(&row, &mask));
            d_a.push(row);
            jump_grid.push(t);
        }
    }

    Ok(HazardPath {
        jump_grid,
        d_a,
        d_b,
        lebesgue_mask: mask,
        n: cs.n,
        diagnostics: FitDiagnostics::default(),
    })
}

/// Additive hazard fit evaluated at covariate value `z0`. At each event tick
/// of each mapped class, the class increment is the least squares projection
/// of subject event indicators on (1, z_i) over that class's risk set, read
/// off at (1, z0). With no covariates this reduces to `nelson_aalen` exactly,
/// increment by increment.
pub fn additive_hazard(
    cs: &CountingSystem,
    component_map: &[Vec<usize>],
    covariates: &[Vec<f64>],
    z0: &[f64],
    policy: RankPolicy,
) -> Result<HazardPath, HazardError> {
    check_component_map(component_map, cs.n_classes())?;
    let q = component_map.len();
    let c_dim = z0.len();
    if covariates.len() != cs.n {
        return Err(HazardError::CovariateShape {
            subject: covariates.len(),
            expected: cs.n,
            found: covariates.len(),
        });
    }
    for (i, row) in covariates.iter().enumerate() {
        if row.len() != c_dim {
            return Err(HazardError::CovariateShape {
                subject: i,
                expected: c_dim,
                found: row.len(),
            });
        }
    }

    let mut diagnostics = FitDiagnostics::default();
    if c_dim > 0 {
        for j in 0..c_dim {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for row in covariates {
                lo = lo.min(row[j]);
                hi = hi.max(row[j]);
            }
            if z0[j] < lo || z0[j] > hi {
                diagnostics.extrapolated = true;
            }
        }
    }

    // subjects with a class-c event at time t, looked up per tick
    let events = cs.events();

    let mask = vec![false; q];
    let mut jump_grid = Vec::new();
    let mut d_a: Vec<Vec<f64>> = Vec::new();
    let mut d_b = Vec::new();
    let mut negative = vec![false; q];

    for (k, &t) in cs.jump_grid.iter().enumerate() {
        let mut row = vec![0.0; q];
        let mut any = false;
        for (j, comp) in component_map.iter().enumerate() {
            for &c in comp {
                let dn = cs.dn[k][c];
                if dn == 0 {
                    continue;
                }
                let y = cs.y[k][c];
                if y == 0 {
                    return Err(HazardError::NoRiskSet { class: c, time: t });
                }
                any = true;
                if c_dim == 0 {
                    // same arithmetic as nelson_aalen, bit for bit
                    row[j] += dn as f64 / y as f64;
                    continue;
                }
                let risk = cs.risk_set_at(c, t);
                let rows = risk.len();
                let mut design = DMatrix::zeros(rows, 1 + c_dim);
                let mut resp = DVector::zeros(rows);
                for (r, &subj) in risk.iter().enumerate() {
                    design[(r, 0)] = 1.0;
                    for m in 0..c_dim {
                        design[(r, 1 + m)] = covariates[subj][m];
                    }
                }
                for &(et, ec, es) in events {
                    if et == t && ec == c {
                        if let Some(r) = risk.iter().position(|&s| s == es) {
                            resp[r] = 1.0;
                        }
                    }
                }
                let svd = design.svd(true, true);
                let smax = svd.singular_values.max();
                let rank = svd
                    .singular_values
                    .iter()
                    .filter(|&&s| s > 1e-12 * smax)
                    .count();
                if rank < 1 + c_dim {
                    match policy {
                        RankPolicy::Skip => {
                            diagnostics.skipped_increments += 1;
                            continue;
                        }
                        RankPolicy::Error => {
                            return Err(HazardError::RankDeficient { time: t });
                        }
                    }
                }
                let beta = svd
                    .solve(&resp, 1e-12 * smax)
                    .expect("svd computed with both factors");
                let mut inc = beta[0];
                for m in 0..c_dim {
                    inc += beta[1 + m] * z0[m];
                }
                if inc < 0.0 {
                    negative[j] = true;
                }
                row[j] += inc;
            }
        }
        if any {
            d_b.push(outer_masked(&row, &mask));
            d_a.push(row);
            jump_grid.push(t);
        }
    }

    diagnostics.negative_components = negative
        .iter()
        .enumerate()
        .filter_map(|(j, &neg)| if neg { Some(j) } else { None })
        .collect();

    Ok(HazardPath {
        jump_grid,
        d_a,
        d_b,
        lebesgue_mask: mask,
        n: cs.n,
        diagnostics,
    })
}

/// Insert deterministic time components into `path`. `positions` index the
/// resulting component vector; each named slot integrates dt and carries no
/// optional variation.
pub fn attach_lebesgue(path: &HazardPath, positions: &[usize]) -> Result<HazardPath, HazardError> {
    let q_old = path.n_components();
    let q_new = q_old + positions.len();
    for &p in positions {
        if p >= q_new {
            return Err(HazardError::BadLebesguePosition { q: q_new, position: p });
        }
    }
    let mut is_new = vec![false; q_new];
    for &p in positions {
        if is_new[p] {
            return Err(HazardError::BadLebesguePosition { q: q_new, position: p });
        }
        is_new[p] = true;
    }
    // old component index for each retained slot
    let old_slot: Vec<Option<usize>> = {
        let mut next = 0usize;
        is_new
            .iter()
            .map(|&newly| {
                if newly {
                    None
                } else {
                    let s = next;
                    next += 1;
                    Some(s)
                }
            })
            .collect()
    };

    let mut mask = vec![false; q_new];
    for (slot, old) in old_slot.iter().enumerate() {
        mask[slot] = match old {
            Some(o) => path.lebesgue_mask[*o],
            None => true,
        };
    }

    let mut d_a = Vec::with_capacity(path.d_a.len());
    let mut d_b = Vec::with_capacity(path.d_b.len());
    for k in 0..path.jump_grid.len() {
        let mut row = vec![0.0; q_new];
        for (slot, old) in old_slot.iter().enumerate() {
            if let Some(o) = old {
                row[slot] = path.d_a[k][*o];
            }
        }
        d_b.push(outer_masked(&row, &mask));
        d_a.push(row);
    }

    Ok(HazardPath {
        jump_grid: path.jump_grid.clone(),
        d_a,
        d_b,
        lebesgue_mask: mask,
        n: path.n,
        diagnostics: path.diagnostics.clone(),
    })
}
