//! Integration of the indifference condition that pins down the rate at
//! which players stop and take `R` during randomized stopping.
//!
//! The state is `(rho, F_L)`. `F_H` is algebraic:
//! `F_H = (1-beta)(1 - e^{-at}) + e^{-at} rho`. `F_L' = e^{-bt} rho'`.

use alloc::vec::Vec;

use crate::model::{belief_at, odds_at, ModelParams};
use crate::numerics::{derivative_at, Controls};
use crate::{Error, Result};

/// Dense solution of the stopping-rate ODE.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StrategyPath {
    pub t: Vec<f64>,
    pub rho: Vec<f64>,
    pub f_h: Vec<f64>,
    pub f_l: Vec<f64>,
    pub t_hat: f64,
    pub t_bar: f64,
    pub beta: f64,
    pub n: u32,
    pub p0: f64,
}

impl StrategyPath {
    /// `rho(t)`: zero before the start, `1 - beta` after the end, linear
    /// between nodes.
    pub fn rho_at(&self, t: f64) -> f64 {
        if t <= self.t_hat {
            0.0
        } else if t >= self.t_bar {
            1.0 - self.beta
        } else {
            crate::numerics::interp(&self.t, &self.rho, t)
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Which algebraic form of the indifference condition to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateForm {
    /// `N` symmetric rivals, each facing `(N-1)(1-F)^{N-2}` marginal exposure.
    Generalized,
    /// The two-player rearrangement, kept separately as a cross-check.
    TwoPlayer,
}

struct Rate<'a> {
    params: &'a ModelParams,
    p0: f64,
    beta: f64,
    n: u32,
    form: RateForm,
}

impl Rate<'_> {
    fn eval(&self, t: f64, rho: f64, f_l: f64) -> f64 {
        match self.form {
            RateForm::Generalized => self.generalized(t, rho, f_l),
            RateForm::TwoPlayer => self.two_player(t, rho, f_l),
        }
    }

    fn generalized(&self, t: f64, rho: f64, f_l: f64) -> f64 {
        let m = self.params;
        let (a, b, c) = (m.a, m.b, m.c);
        let ea = libm::exp(-a * t);
        let eb = libm::exp(-b * t);
        let l = odds_at(self.p0, t, m);
        let f_h = (1.0 - self.beta) * (1.0 - ea) + ea * rho;
        let k = self.n as i32 - 1;
        let exp_h = k as f64 * powi(1.0 - f_h, k - 1);
        let exp_l = k as f64 * powi(1.0 - f_l, k - 1);
        let beaten = 1.0 - powi(1.0 - f_l, k);
        let num = b * (-m.ul) + b * m.dbl * beaten - c * (1.0 + l) - l * exp_h * m.dbh * a * ea * (1.0 - self.beta - rho);
        let den = exp_l * m.dbl * eb + l * exp_h * m.dbh * ea;
        num / den
    }

    fn two_player(&self, t: f64, rho: f64, f_l: f64) -> f64 {
        let m = self.params;
        let l = odds_at(self.p0, t, m);
        let num = m.b * (-m.ul) - m.c - l * m.c - l * m.dbh * m.a * libm::exp(-m.a * t) * (1.0 - self.beta - rho)
            + m.b * m.dbl * f_l;
        let den = l * m.dbh * libm::exp(-m.a * t) + m.dbl * libm::exp(-m.b * t);
        num / den
    }

    fn rk4(&self, t: f64, y: (f64, f64), h: f64) -> (f64, f64) {
        let eb = |s: f64| libm::exp(-self.params.b * s);
        let f = |s: f64, r: f64, fl: f64| {
            let d = self.eval(s, r, fl);
            (d, eb(s) * d)
        };
        let k1 = f(t, y.0, y.1);
        let k2 = f(t + 0.5 * h, y.0 + 0.5 * h * k1.0, y.1 + 0.5 * h * k1.1);
        let k3 = f(t + 0.5 * h, y.0 + 0.5 * h * k2.0, y.1 + 0.5 * h * k2.1);
        let k4 = f(t + h, y.0 + h * k3.0, y.1 + h * k3.1);
        (
            y.0 + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
            y.1 + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
        )
    }
}

fn powi(x: f64, k: i32) -> f64 {
    let mut r = 1.0;
    for _ in 0..k.max(0) {
        r *= x;
    }
    r
}

/// Stopping rate at the randomization start `t_hat`, where `rho = F_L = 0`.
pub fn initial_slope(p0: f64, beta: f64, nv: u32, t_hat: f64, params: &ModelParams) -> f64 {
    Rate { params, p0, beta, n: nv, form: RateForm::Generalized }.eval(t_hat, 0.0, 0.0)
}

/// Largest change of `rho` allowed in one step. Late starts face very steep
/// rates (the denominators carry `e^{-at}`), so the base step is shortened
/// to keep each step's increment below this bound.
const MAX_RHO_STEP: f64 = 1e-4;

pub fn solve_master_ode(
    p0: f64,
    beta: f64,
    t_hat: f64,
    nv: u32,
    params: &ModelParams,
    ctl: &Controls,
) -> Result<StrategyPath> {
    solve_with_form(p0, beta, t_hat, nv, params, ctl, RateForm::Generalized)
}

#[allow(clippy::too_many_arguments)]
pub fn solve_with_form(
    p0: f64,
    beta: f64,
    t_hat: f64,
    nv: u32,
    params: &ModelParams,
    ctl: &Controls,
    form: RateForm,
) -> Result<StrategyPath> {
    if nv < 2 {
        return Err(Error::InvalidParams(alloc::format!("N >= 2 required (N = {nv})")));
    }
    if nv > 2 && beta != 0.0 {
        return Err(Error::InvalidParams(alloc::format!("mixed start only defined for two players (N = {nv})")));
    }
    if form == RateForm::TwoPlayer && nv != 2 {
        return Err(Error::InvalidParams(alloc::format!("two-player form used with N = {nv}")));
    }
    if !(beta < 1.0) {
        return Err(Error::NoRandomization { slope: 0.0 });
    }
    let rate = Rate { params, p0, beta, n: nv, form };
    let target = 1.0 - beta;
    let s0 = rate.eval(t_hat, 0.0, 0.0);
    if !(s0 > 0.0) {
        return Err(Error::NoRandomization { slope: s0 });
    }

    let mut ts = Vec::new();
    let mut rhos = Vec::new();
    let mut fls = Vec::new();
    let mut hs: Vec<f64> = Vec::new();
    let (mut t, mut y) = (t_hat, (0.0, 0.0));
    ts.push(t);
    rhos.push(0.0);
    fls.push(0.0);
    loop {
        let r = rate.eval(t, y.0, y.1);
        if !(r > 0.0) {
            return Err(Error::MonotonicityBreak { t, rho: y.0, slope: r });
        }
        if t > ctl.horizon {
            return Err(Error::NoCrossing { what: "terminal stopping time", horizon: ctl.horizon });
        }
        let h = ctl.ode_step.min(MAX_RHO_STEP / r);
        let y1 = rate.rk4(t, y, h);
        if y1.0 >= target {
            // locate the end inside this step
            let (mut lo, mut hi) = (0.0, h);
            for _ in 0..ctl.max_iter {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if rate.rk4(t, y, mid).0 >= target {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let mut s = hi;
            // a sliver of a step spoils finite differences at the end node:
            // merge it into the previous step instead
            if let Some(&h_prev) = hs.last() {
                if s < 0.1 * h_prev && ts.len() >= 2 {
                    ts.pop();
                    rhos.pop();
                    fls.pop();
                    hs.pop();
                    t = *ts.last().unwrap();
                    y = (*rhos.last().unwrap(), *fls.last().unwrap());
                    s += h_prev;
                }
            }
            let y_end = rate.rk4(t, y, s);
            let t_bar = t + s;
            ts.push(t_bar);
            // the stored value is the integrator's, so finite differences
            // at the end node stay consistent; it sits within rounding of
            // the target because the end is bisected to machine precision
            rhos.push(y_end.0);
            fls.push(y_end.1);
            break;
        }
        if y1.0 < y.0 {
            return Err(Error::MonotonicityBreak { t: t + h, rho: y1.0, slope: rate.eval(t + h, y1.0, y1.1) });
        }
        t += h;
        y = y1;
        ts.push(t);
        rhos.push(y.0);
        fls.push(y.1);
        hs.push(h);
    }

    let a = params.a;
    let f_h = ts
        .iter()
        .zip(&rhos)
        .map(|(&t, &r)| {
            let ea = libm::exp(-a * t);
            (1.0 - beta) * (1.0 - ea) + ea * r
        })
        .collect();
    let t_bar = *ts.last().unwrap();
    Ok(StrategyPath { t: ts, rho: rhos, f_h, f_l: fls, t_hat, t_bar, beta, n: nv, p0 })
}

/// Pointwise residual of the indifference condition at every node, with
/// `F_H'` and `F_L'` from three-point finite differences.
pub fn residual_profile(path: &StrategyPath, params: &ModelParams) -> Vec<f64> {
    let n = path.t.len();
    if n < 3 {
        return Vec::new();
    }
    let k = path.n as i32 - 1;
    (0..n)
        .map(|i| {
            let t = path.t[i];
            let p = belief_at(path.p0, t, params);
            let dfh = derivative_at(&path.t, &path.f_h, i);
            let dfl = derivative_at(&path.t, &path.f_l, i);
            let f_h = path.f_h[i];
            let f_l = path.f_l[i];
            let exp_h = k as f64 * powi(1.0 - f_h, k - 1);
            let exp_l = k as f64 * powi(1.0 - f_l, k - 1);
            let lhs = params.c + p * dfh * exp_h * params.dbh + (1.0 - p) * dfl * exp_l * params.dbl;
            let rhs = (1.0 - p) * params.b * (-params.ul + params.dbl * (1.0 - powi(1.0 - f_l, k)));
            (lhs - rhs).abs()
        })
        .collect()
}

/// Largest absolute residual of the indifference condition along the path.
pub fn indifference_residual(path: &StrategyPath, params: &ModelParams) -> f64 {
    residual_profile(path, params).into_iter().fold(0.0, f64::max)
}

/// Coefficients `(g0, g1, g2, g3)` of the second-order form
/// `z'' + g1 z' + g2 z = g3` with `z = int_0^t e^{-bs} rho(s) ds`.
pub fn z_coefficients(t: f64, p0: f64, params: &ModelParams) -> [f64; 4] {
    let (a, b, c) = (params.a, params.b, params.c);
    let l0 = crate::model::odds(p0);
    let grow = libm::exp(2.0 * (b - a) * t);
    let d = l0 * params.dbh * grow + params.dbl;
    let g0 = 1.0 / d;
    let g1 = b - (b * params.dbl + l0 * params.dbh * a * grow) * g0;
    let g2 = -b * b * params.dbl * g0;
    let g3 = (b * (-params.ul) - c - c * l0 * libm::exp((b - a) * t) - l0 * params.dbh * a * libm::exp((b - 2.0 * a) * t)) * g0;
    [g0, g1, g2, g3]
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ZCheck {
    pub max_residual: f64,
    pub z0: f64,
    pub dz0: f64,
}

/// Independent check of a two-player path started at zero: rebuild `z` by
/// trapezoid quadrature and evaluate the second-order equation by finite
/// differences.
pub fn z_transform_check(path: &StrategyPath, params: &ModelParams) -> Result<ZCheck> {
    if path.n != 2 || path.beta != 0.0 || path.t_hat != 0.0 {
        return Err(Error::InvalidParams(alloc::format!(
            "second-order form needs two players, beta = 0 and a start at 0 (N = {}, beta = {}, start = {})",
            path.n, path.beta, path.t_hat
        )));
    }
    let n = path.t.len();
    let b = params.b;
    let zp: Vec<f64> = path.t.iter().zip(&path.rho).map(|(&t, &r)| libm::exp(-b * t) * r).collect();
    let mut z = Vec::with_capacity(n);
    z.push(0.0);
    for i in 1..n {
        let h = path.t[i] - path.t[i - 1];
        z.push(z[i - 1] + 0.5 * h * (zp[i] + zp[i - 1]));
    }
    let mut max_residual: f64 = 0.0;
    for i in 0..n {
        let zpp = derivative_at(&path.t, &zp, i);
        let [_, g1, g2, g3] = z_coefficients(path.t[i], path.p0, params);
        max_residual = max_residual.max((zpp + g1 * zp[i] + g2 * z[i] - g3).abs());
    }
    Ok(ZCheck { max_residual, z0: z[0], dz0: zp[0] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutoffs::{p_tilde, t_r};
    use crate::model::fixtures::*;

    fn ctl() -> Controls {
        Controls::default()
    }

    #[test]
    fn initial_slope_examples() {
        let m = baseline();
        assert!((initial_slope(0.5, 0.0, 2, 0.0, &m) - 0.33 / 1.4).abs() < 1e-15);
        let pt = p_tilde(&m).unwrap();
        assert!(initial_slope(pt, 0.0, 2, 0.0, &m).abs() < 1e-15);
        assert!(initial_slope(0.7, 0.0, 2, 0.0, &m) < 0.0);
    }

    #[test]
    fn slope_sign_flips_at_p_tilde() {
        for m in [baseline(), small_gaps()] {
            let pt = p_tilde(&m).unwrap();
            assert!(initial_slope(pt - 1e-6, 0.0, 2, 0.0, &m) > 0.0);
            assert!(initial_slope(pt + 1e-6, 0.0, 2, 0.0, &m) < 0.0);
        }
    }

    #[test]
    fn baseline_path_from_zero() {
        let m = baseline();
        let path = solve_master_ode(0.5, 0.0, 0.0, 2, &m, &ctl()).unwrap();
        assert!((path.t_bar - 1.335).abs() < 0.01, "{}", path.t_bar);
        assert!((*path.rho.last().unwrap() - 1.0).abs() < 1e-14);
        assert!(path.rho.windows(2).all(|w| w[1] > w[0]));
        assert!(path.f_l.windows(2).all(|w| w[1] >= w[0]));
        assert!((path.f_h.last().unwrap() - 1.0).abs() < 1e-8);
        for (t, fl) in path.t.iter().zip(&path.f_l) {
            assert!(*fl <= 1.0 - libm::exp(-m.b * t) + 1e-15);
        }
        let r = indifference_residual(&path, &m);
        assert!(r < 1e-8, "{r}");
    }

    #[test]
    fn delayed_and_mixed_starts() {
        let m = small_gaps();
        let tr = t_r(0.6, &m, &ctl()).unwrap();
        for frac in [0.0, 0.3, 0.6, 0.9] {
            let path = solve_master_ode(0.6, 0.0, frac * tr, 2, &m, &ctl()).unwrap();
            assert!(path.rho.windows(2).all(|w| w[1] > w[0]));
            assert!(indifference_residual(&path, &m) < 1e-6);
            assert_eq!(path.rho[0], 0.0);
            assert_eq!(path.f_l[0], 0.0);
        }
        let path = solve_master_ode(0.3, 0.4, 2.0, 2, &m, &ctl()).unwrap();
        assert!((*path.rho.last().unwrap() - 0.6).abs() < 1e-14);
        assert!(indifference_residual(&path, &m) < 1e-6);
    }

    #[test]
    fn near_p_tilde_the_path_is_short() {
        let m = baseline();
        let pt = p_tilde(&m).unwrap();
        let path = solve_master_ode(pt - 1e-9, 0.0, 0.0, 2, &m, &ctl()).unwrap();
        assert!(path.t_bar > 2.0 && path.t_bar < 2.5, "{}", path.t_bar);
        assert!(path.rho.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn degenerate_inputs() {
        let m = baseline();
        assert!(matches!(solve_master_ode(0.5, 1.0, 0.0, 2, &m, &ctl()), Err(Error::NoRandomization { .. })));
        assert!(matches!(solve_master_ode(0.7, 0.0, 0.0, 2, &m, &ctl()), Err(Error::NoRandomization { .. })));
    }

    #[test]
    fn corrupted_and_frozen_paths_are_detected() {
        let m = baseline();
        let mut path = solve_master_ode(0.5, 0.0, 0.0, 2, &m, &ctl()).unwrap();
        let a = m.a;
        for i in 0..path.t.len() {
            path.rho[i] *= 1.01;
            let ea = libm::exp(-a * path.t[i]);
            path.f_h[i] = 1.0 - ea + ea * path.rho[i];
            path.f_l[i] *= 1.01;
        }
        assert!(indifference_residual(&path, &m) > 1e-3);

        let ts: Vec<f64> = (0..=100).map(|i| i as f64 * 0.01).collect();
        let frozen = StrategyPath {
            f_h: ts.iter().map(|&t| 1.0 - libm::exp(-a * t)).collect(),
            rho: alloc::vec![0.0; ts.len()],
            f_l: alloc::vec![0.0; ts.len()],
            t: ts.clone(),
            t_hat: 0.0,
            t_bar: 1.0,
            beta: 0.0,
            n: 2,
            p0: 0.5,
        };
        let prof = residual_profile(&frozen, &m);
        for (i, &t) in ts.iter().enumerate() {
            let p = belief_at(0.5, t, &m);
            let expect = (m.c + p * a * libm::exp(-a * t) * m.dbh - (1.0 - p) * m.b).abs();
            assert!((prof[i] - expect).abs() < 1e-4);
            assert!(prof[i] > 0.0);
        }
    }

    #[test]
    fn generalized_form_reduces_to_two_players() {
        let m = small_gaps();
        for (p0, beta, t_hat) in [(0.6, 0.0, 0.0), (0.7, 0.0, 3.0), (0.3, 0.2, 1.0)] {
            let g = solve_with_form(p0, beta, t_hat, 2, &m, &ctl(), RateForm::Generalized).unwrap();
            let two = solve_with_form(p0, beta, t_hat, 2, &m, &ctl(), RateForm::TwoPlayer).unwrap();
            assert_eq!(g.t.len(), two.t.len());
            for i in 0..g.t.len() {
                assert!((g.t[i] - two.t[i]).abs() < 1e-9);
                assert!((g.rho[i] - two.rho[i]).abs() < 1e-9);
                assert!((g.f_l[i] - two.f_l[i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn n_player_paths_satisfy_their_condition() {
        let m = baseline();
        let p3 = crate::cutoffs::n_player_cutoff(3, &m).unwrap();
        let path = solve_master_ode(0.5 * p3, 0.0, 0.0, 3, &m, &ctl()).unwrap();
        assert!(indifference_residual(&path, &m) < 1e-6);
        assert!(initial_slope(p3 + 1e-6, 0.0, 3, 0.0, &m) < 0.0);
        assert!(initial_slope(p3 - 1e-6, 0.0, 3, 0.0, &m) > 0.0);
    }

    #[test]
    fn second_order_form_agrees() {
        let m = baseline();
        let path = solve_master_ode(0.5, 0.0, 0.0, 2, &m, &ctl()).unwrap();
        let z = z_transform_check(&path, &m).unwrap();
        assert!(z.max_residual < 1e-4, "{}", z.max_residual);
        assert_eq!(z.z0, 0.0);
        assert_eq!(z.dz0, 0.0);
        // by hand at t = 0, L0 = 1: D = 1.4
        let [g0, g1, g2, g3] = z_coefficients(0.0, 0.5, &m);
        assert!((g0 - 1.0 / 1.4).abs() < 1e-15);
        assert!((g1 - (0.8 - (0.8 * 0.7 + 0.7 * 0.6) / 1.4)).abs() < 1e-15);
        assert!((g2 + 0.64 * 0.7 / 1.4).abs() < 1e-15);
        assert!((g3 - (0.8 - 0.025 - 0.025 - 0.42) / 1.4).abs() < 1e-15);
        // the path is not a solution of a perturbed equation
        let mut bad = path.clone();
        bad.p0 = 0.45;
        assert!(z_transform_check(&bad, &m).unwrap().max_residual > 1e-3);
    }

    #[test]
    fn delayed_start_exposure_identity() {
        // with the first prize reset to what is left after pre-start
        // breakthroughs, the H exposure is dbar_H e^{-a T}
        let m = baseline();
        for t_hat in [0.0, 1.0, 5.0, 12.0] {
            let eta = m.uh - (1.0 - libm::exp(-m.a * t_hat)) * m.dbh;
            assert!((eta - (m.uh - m.dbh) - m.dbh * libm::exp(-m.a * t_hat)).abs() < 1e-15);
        }
    }

    #[test]
    fn cheaper_information_speeds_up_the_start() {
        let m = baseline();
        let mut prev = 0.0;
        for c in [1e-2, 1e-4, 1e-6, 1e-8] {
            let s = initial_slope(0.5, 0.0, 2, 0.0, &m.with_cost(c).unwrap());
            assert!(s > prev);
            prev = s;
        }
    }
}
