//! Plugin estimator stepping: integrate X' = F(X) dA along estimated hazard
//! increments, together with the forward covariance recursion driven by the
//! same increments and their optional variation.

use crate::hazard::HazardPath;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

pub type CoefficientFn = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// Defines one target parameter as an initial value problem. `coefficient`
/// maps the current state to the p x q matrix multiplying the hazard
/// increment vector; `jacobians[j]` is the p x p derivative of column j with
/// respect to the state. `lebesgue_mask` must agree with the hazard path the
/// definition is solved against. `sample_box` bounds the admissible states
/// used when the jacobians are checked against finite differences.
#[derive(Clone)]
pub struct ParameterDefinition {
    pub p: usize,
    pub q: usize,
    pub x0: DVector<f64>,
    pub labels: Vec<String>,
    pub lebesgue_mask: Vec<bool>,
    pub coefficient: CoefficientFn,
    pub jacobians: Vec<CoefficientFn>,
    pub sample_box: Vec<(f64, f64)>,
}

impl fmt::Debug for ParameterDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParameterDefinition")
            .field("p", &self.p)
            .field("q", &self.q)
            .field("labels", &self.labels)
            .field("lebesgue_mask", &self.lebesgue_mask)
            .finish()
    }
}

/// Solved trajectory on the event grid. `x[k]` and `v[k]` are the values at
/// `grid[k]`, right-continuous between grid points. `v` tracks n times the
/// covariance of the state estimate; divide by `n` for the covariance
/// itself. The final grid point is the requested horizon.
#[derive(Clone, Debug)]
pub struct PluginPath {
    pub grid: Vec<f64>,
    pub x: Vec<DVector<f64>>,
    pub v: Vec<DMatrix<f64>>,
    pub x0: DVector<f64>,
    pub n: usize,
    pub horizon: f64,
}

impl PluginPath {
    /// State and scaled covariance at time `t` (right-continuous lookup).
    pub fn at(&self, t: f64) -> Result<(DVector<f64>, DMatrix<f64>), SolveError> {
        if t < 0.0 || t > self.horizon {
            return Err(SolveError::OutsideHorizon {
                t,
                horizon: self.horizon,
            });
        }
        let idx = self.grid.partition_point(|&g| g <= t);
        if idx == 0 {
            let p = self.x0.len();
            return Ok((self.x0.clone(), DMatrix::zeros(p, p)));
        }
        Ok((self.x[idx - 1].clone(), self.v[idx - 1].clone()))
    }

    /// Covariance of the state estimate at `t` (the stored v divided by n).
    pub fn covariance_at(&self, t: f64) -> Result<DMatrix<f64>, SolveError> {
        let (_, v) = self.at(t)?;
        Ok(v / self.n as f64)
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("horizon {t0} must be positive")]
    BadHorizon { t0: f64 },
    #[error("definition expects {expected} components, hazard path carries {found}")]
    ComponentMismatch { expected: usize, found: usize },
    #[error("lebesgue masks disagree between definition and hazard path")]
    MaskMismatch,
    #[error("state became nonfinite at t={time}")]
    NonFiniteState { time: f64 },
    #[error("t={t} outside the solved horizon {horizon}")]
    OutsideHorizon { t: f64, horizon: f64 },
}

fn check_compatible(def: &ParameterDefinition, hz: &HazardPath) -> Result<(), SolveError> {
    if def.q != hz.n_components() {
        return Err(SolveError::ComponentMismatch {
            expected: def.q,
            found: hz.n_components(),
        });
    }
    if def.lebesgue_mask != hz.lebesgue_mask {
        return Err(SolveError::MaskMismatch);
    }
    Ok(())
}

fn solve(
    def: &ParameterDefinition,
    hz: &HazardPath,
    t0: f64,
    with_v: bool,
) -> Result<PluginPath, SolveError> {
    if !(t0 > 0.0) || !t0.is_finite() {
        return Err(SolveError::BadHorizon { t0 });
    }
    check_compatible(def, hz)?;

    let p = def.p;
    let q = def.q;
    let n = hz.n;

    // evaluation grid: hazard jumps up to the horizon, then the horizon
    let cut = hz.jump_grid.partition_point(|&t| t <= t0);
    let mut grid: Vec<f64> = hz.jump_grid[..cut].to_vec();
    let needs_tail = grid.last().map_or(true, |&last| last < t0);
    if needs_tail {
        grid.push(t0);
    }

    let mut x = def.x0.clone();
    let mut v = DMatrix::zeros(p, p);
    let mut xs = Vec::with_capacity(grid.len());
    let mut vs = Vec::with_capacity(grid.len());
    let zero_w = DMatrix::zeros(q, q);

    let mut prev_t = 0.0_f64;
    for (step, &t) in grid.iter().enumerate() {
        let dt = t - prev_t;
        let jump_row = if step < cut { Some(step) } else { None };

        let mut da = DVector::zeros(q);
        for j in 0..q {
            da[j] = if def.lebesgue_mask[j] {
                dt
            } else {
                jump_row.map_or(0.0, |k| hz.d_a[k][j])
            };
        }
        let dw = jump_row.map_or(&zero_w, |k| &hz.d_b[k]);

        let coeff = (def.coefficient)(&x);
        if with_v {
            let mut drift = DMatrix::zeros(p, p);
            for j in 0..q {
                if da[j] == 0.0 {
                    continue;
                }
                let g = (def.jacobians[j])(&x);
                drift += (&g * &v + &v * g.transpose()) * da[j];
            }
            let noise = n as f64 * &coeff * dw * coeff.transpose();
            v += drift + noise;
            // keep the recursion exactly symmetric
            v = (&v + v.transpose()) * 0.5;
        }
        x += coeff * da;

        if x.iter().any(|e| !e.is_finite()) || (with_v && v.iter().any(|e| !e.is_finite())) {
            return Err(SolveError::NonFiniteState { time: t });
        }
        xs.push(x.clone());
        vs.push(v.clone());
        prev_t = t;
    }

    Ok(PluginPath {
        grid,
        x: xs,
        v: vs,
        x0: def.x0.clone(),
        n,
        horizon: t0,
    })
}

/// Integrate the state equation only; the returned path carries zero v.
pub fn solve_plugin(
    def: &ParameterDefinition,
    hz: &HazardPath,
    t0: f64,
) -> Result<PluginPath, SolveError> {
    solve(def, hz, t0, false)
}

/// Integrate state and covariance recursions together.
pub fn solve_variance(
    def: &ParameterDefinition,
    hz: &HazardPath,
    t0: f64,
) -> Result<PluginPath, SolveError> {
    solve(def, hz, t0, true)
}

pub const JACOBIAN_FD_STEP: f64 = 1e-5;
pub const JACOBIAN_TOL: f64 = 1e-6;
pub const JACOBIAN_SAMPLE_POINTS: usize = 100;

#[derive(Debug, Error)]
#[error(
    "jacobian {component} disagrees with central differences at state {state:?}: \
     entry ({row},{col}) off by {deviation:.3e}"
)]
pub struct JacobianDefect {
    pub component: usize,
    pub state: Vec<f64>,
    pub row: usize,
    pub col: usize,
    pub deviation: f64,
}

/// Compare each supplied jacobian against central finite differences of the
/// coefficient columns at states drawn uniformly from the sample box.
/// Returns the worst deviation seen, or the first offending entry.
pub fn check_jacobians<R: Rng>(
    def: &ParameterDefinition,
    rng: &mut R,
) -> Result<f64, JacobianDefect> {
    let mut worst = 0.0_f64;
    for _ in 0..JACOBIAN_SAMPLE_POINTS {
        let state = DVector::from_iterator(
            def.p,
            def.sample_box.iter().map(|&(lo, hi)| rng.gen_range(lo..=hi)),
        );
        for b in 0..def.p {
            let mut up = state.clone();
            let mut dn = state.clone();
            up[b] += JACOBIAN_FD_STEP;
            dn[b] -= JACOBIAN_FD_STEP;
            let f_up = (def.coefficient)(&up);
            let f_dn = (def.coefficient)(&dn);
            for j in 0..def.q {
                let jac = (def.jacobians[j])(&state);
                for a in 0..def.p {
                    let fd = (f_up[(a, j)] - f_dn[(a, j)]) / (2.0 * JACOBIAN_FD_STEP);
                    let dev = (jac[(a, b)] - fd).abs();
                    if dev > JACOBIAN_TOL {
                        return Err(JacobianDefect {
                            component: j,
                            state: state.iter().copied().collect(),
                            row: a,
                            col: b,
                            deviation: dev,
                        });
                    }
                    worst = worst.max(dev);
                }
            }
        }
    }
    Ok(worst)
}
