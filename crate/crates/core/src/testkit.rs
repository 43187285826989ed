//! Independent reference implementations used only by tests: classical
//! product-limit and occupancy estimators computed straight from counting
//! data, plus literal transcriptions of the per-parameter scalar variance
//! recursions. These deliberately avoid the generic solver so that tests
//! can compare two routes to the same number.

use crate::events::{CountingSystem, State};

/// Kaplan-Meier survival at `t0` from raw (time, is_event) pairs. No
/// counting-system machinery: sort, walk unique event times, multiply.
pub fn km_survival(data: &[(f64, bool)], t0: f64) -> f64 {
    let mut times: Vec<f64> = data.iter().map(|&(t, _)| t).collect();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut event_times: Vec<f64> = data
        .iter()
        .filter(|&&(t, e)| e && t <= t0)
        .map(|&(t, _)| t)
        .collect();
    event_times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    event_times.dedup();
    let mut s = 1.0;
    for &t in &event_times {
        let d = data.iter().filter(|&&(u, e)| e && u == t).count() as f64;
        let y = data.iter().filter(|&&(u, _)| u >= t).count() as f64;
        s *= 1.0 - d / y;
    }
    s
}

/// State occupancy at `t0` by the product of (I + dQ) over event times,
/// where dQ collects the per-class Nelson-Aalen increments routed by the
/// class's (from, to) pair. Row `initial` of the product is the occupancy
/// vector started from that state.
pub fn occupancy_product(
    cs: &CountingSystem,
    class_moves: &[(State, State)],
    n_states: usize,
    initial: State,
    t0: f64,
) -> Vec<f64> {
    assert_eq!(class_moves.len(), cs.n_classes());
    let mut p = vec![0.0; n_states];
    p[initial as usize] = 1.0;
    for (k, &t) in cs.jump_grid.iter().enumerate() {
        if t > t0 {
            break;
        }
        let mut dq = vec![vec![0.0; n_states]; n_states];
        for (c, &(from, to)) in class_moves.iter().enumerate() {
            let dn = cs.dn[k][c] as f64;
            if dn == 0.0 {
                continue;
            }
            let y = cs.y[k][c] as f64;
            let da = dn / y;
            dq[from as usize][to as usize] += da;
            dq[from as usize][from as usize] -= da;
        }
        let prev = p.clone();
        for j in 0..n_states {
            let mut flow = 0.0;
            for i in 0..n_states {
                flow += prev[i] * dq[i][j];
            }
            p[j] = prev[j] + flow;
        }
    }
    p
}

fn pooled_increment(cs: &CountingSystem, k: usize, classes: &[usize]) -> (f64, f64, f64) {
    // classes sharing one risk set: total jumps, common Y, hazard increment
    let dn: f64 = classes.iter().map(|&c| cs.dn[k][c] as f64).sum();
    if dn == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let y = classes
        .iter()
        .find(|&&c| cs.dn[k][c] > 0)
        .map(|&c| cs.y[k][c] as f64)
        .unwrap();
    (dn, y, dn / y)
}

/// Survival variance recursion: V -= 2 V dA, plus n (S/Y)^2 per event.
/// `classes` are the exit transitions out of the initial state.
pub fn survival_variance_recursion(cs: &CountingSystem, classes: &[usize], t0: f64) -> f64 {
    let n = cs.n as f64;
    let mut s = 1.0;
    let mut v = 0.0;
    for (k, &t) in cs.jump_grid.iter().enumerate() {
        if t > t0 {
            break;
        }
        let (dn, y, da) = pooled_increment(cs, k, classes);
        if dn == 0.0 {
            continue;
        }
        v += -2.0 * v * da + n * (s / y).powi(2) * dn;
        s -= s * da;
    }
    v
}

/// Restricted-mean variance recursion over the event grid, with a final
/// partial step to `t0`. Returns (rmst, variance).
pub fn rmst_variance_recursion(cs: &CountingSystem, classes: &[usize], t0: f64) -> (f64, f64) {
    let n = cs.n as f64;
    let mut s = 1.0;
    let mut r = 0.0;
    let mut v_s = 0.0;
    let mut v_rs = 0.0;
    let mut v_r = 0.0;
    let mut last = 0.0;
    for (k, &t) in cs.jump_grid.iter().enumerate() {
        if t > t0 {
            break;
        }
        let (dn, y, da) = pooled_increment(cs, k, classes);
        if dn == 0.0 {
            continue;
        }
        let dt = t - last;
        let (s0, v_s0, v_rs0) = (s, v_s, v_rs);
        v_r += 2.0 * v_rs0 * dt;
        v_rs += -v_rs0 * da + v_s0 * dt;
        v_s += -2.0 * v_s0 * da + n * (s0 / y).powi(2) * dn;
        r += s0 * dt;
        s -= s0 * da;
        last = t;
    }
    if t0 > last {
        let dt = t0 - last;
        v_r += 2.0 * v_rs * dt;
        r += s * dt;
    }
    (r, v_r)
}

/// Cumulative-incidence variance recursion. The displayed equation for the
/// incidence variance is driven by the survival cross-covariance, so the
/// closure tracks (V_C, V_SC, V_S). `cause` indexes into `all`, the exit
/// transitions out of the initial state.
pub fn cif_variance_recursion(
    cs: &CountingSystem,
    all: &[usize],
    cause: usize,
    t0: f64,
) -> (f64, f64) {
    let n = cs.n as f64;
    let mut s = 1.0;
    let mut c_inc = 0.0;
    let mut v_s = 0.0;
    let mut v_sc = 0.0;
    let mut v_c = 0.0;
    for (k, &t) in cs.jump_grid.iter().enumerate() {
        if t > t0 {
            break;
        }
        let (dn_all, y, da_all) = pooled_increment(cs, k, all);
        if dn_all == 0.0 {
            continue;
        }
        let dn_j = cs.dn[k][cause] as f64;
        let da_j = dn_j / y;
        let (s0, v_s0, v_sc0) = (s, v_s, v_sc);
        v_c += 2.0 * v_sc0 * da_j + n * (s0 / y).powi(2) * dn_j;
        v_sc += -v_sc0 * da_all + v_s0 * da_j - n * (s0 / y).powi(2) * dn_j;
        v_s += -2.0 * v_s0 * da_all + n * (s0 / y).powi(2) * dn_all;
        c_inc += s0 * da_j;
        s -= s0 * da_all;
    }
    (c_inc, v_c)
}

/// Mean-frequency variance recursion tracking (V_K, V_KS, V_S); the
/// K-variance line takes its drift from the cross term against survival.
pub fn mean_frequency_variance_recursion(
    cs: &CountingSystem,
    event_class: usize,
    death_class: usize,
    t0: f64,
) -> (f64, f64) {
    let n = cs.n as f64;
    let mut s = 1.0;
    let mut freq = 0.0;
    let mut v_s = 0.0;
    let mut v_ks = 0.0;
    let mut v_k = 0.0;
    for (k, &t) in cs.jump_grid.iter().enumerate() {
        if t > t0 {
            break;
        }
        let dn_e = cs.dn[k][event_class] as f64;
        let dn_d = cs.dn[k][death_class] as f64;
        if dn_e == 0.0 && dn_d == 0.0 {
            continue;
        }
        let y = if dn_e > 0.0 {
            cs.y[k][event_class] as f64
        } else {
            cs.y[k][death_class] as f64
        };
        let da_e = dn_e / y;
        let da_d = dn_d / y;
        let (s0, v_s0, v_ks0) = (s, v_s, v_ks);
        v_k += 2.0 * v_ks0 * da_e + n * (s0 / y).powi(2) * dn_e;
        v_ks += -v_ks0 * da_d + v_s0 * da_e;
        v_s += -2.0 * v_s0 * da_d + n * (s0 / y).powi(2) * dn_d;
        freq += s0 * da_e;
        s -= s0 * da_d;
    }
    (freq, v_k)
}

/// Illness-death prevalence variance recursion, classes ordered
/// (0->1, 0->2, 1->2); tracks (V_P1, V_P0P1, V_P0). Returns (p1, V_P1).
pub fn prevalence_variance_recursion(cs: &CountingSystem, t0: f64) -> (f64, f64) {
    assert_eq!(cs.n_classes(), 3);
    let n = cs.n as f64;
    let mut p0 = 1.0;
    let mut p1 = 0.0;
    let mut v00 = 0.0;
    let mut v01 = 0.0;
    let mut v11 = 0.0;
    for (k, &t) in cs.jump_grid.iter().enumerate() {
        if t > t0 {
            break;
        }
        let dn01 = cs.dn[k][0] as f64;
        let dn02 = cs.dn[k][1] as f64;
        let dn12 = cs.dn[k][2] as f64;
        if dn01 == 0.0 && dn02 == 0.0 && dn12 == 0.0 {
            continue;
        }
        let y0 = if dn01 > 0.0 {
            cs.y[k][0] as f64
        } else {
            cs.y[k][1] as f64
        };
        let y1 = cs.y[k][2] as f64;
        let da01 = if dn01 > 0.0 { dn01 / y0 } else { 0.0 };
        let da02 = if dn02 > 0.0 { dn02 / y0 } else { 0.0 };
        let da12 = if dn12 > 0.0 { dn12 / y1 } else { 0.0 };
        let noise0 = if dn01 > 0.0 {
            n * (p0 / y0).powi(2) * dn01
        } else {
            0.0
        };
        let (p0_0, p1_0, v00_0, v01_0, v11_0) = (p0, p1, v00, v01, v11);
        v11 += 2.0 * v01_0 * da01 - 2.0 * v11_0 * da12
            + noise0
            + if dn12 > 0.0 {
                n * (p1_0 / y1).powi(2) * dn12
            } else {
                0.0
            };
        v01 += (v00_0 - v01_0) * da01 - v01_0 * da02 - v01_0 * da12 - noise0;
        v00 += -2.0 * v00_0 * (da01 + da02)
            + if dn01 + dn02 > 0.0 {
                n * (p0_0 / y0).powi(2) * (dn01 + dn02)
            } else {
                0.0
            };
        p0 -= p0_0 * (da01 + da02);
        p1 += p0_0 * da01 - p1_0 * da12;
    }
    (p1, v11)
}

/// Asymptotic Kolmogorov distribution tail: P(sup |D| > lambda).
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64).powi(2) * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
