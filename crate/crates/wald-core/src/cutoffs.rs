//! Prior cutoffs and auxiliary times of the equilibrium characterization.

use alloc::format;

use crate::model::{odds, odds_at, prob_from_odds, ModelParams};
use crate::numerics::{bisect_or_err, crossing_or_err, first_crossing, Controls};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StaticCutoffs {
    /// Prior at which immediate `R` without a clash pays `u_S`.
    pub p_l: f64,
    /// Prior at which a simultaneous `R` pays `u_S`.
    pub p_m: f64,
    /// Prior above which randomized stopping cannot start at once.
    pub p_tilde: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RandomizationWindow {
    pub t_l: f64,
    pub t_r: f64,
}

pub(crate) fn net_breakdown_gain(params: &ModelParams) -> f64 {
    params.b * (-params.ul) - params.c
}

fn p_tilde_checked(params: &ModelParams) -> Result<f64> {
    let num = net_breakdown_gain(params);
    if num <= 0.0 {
        return Err(Error::Undefined {
            what: "p_tilde",
            reason: format!("c = {} >= b(u_S - u_L) = {}", params.c, params.b * (-params.ul)),
        });
    }
    Ok(prob_from_odds(num / (params.a * params.dbh + params.c)))
}

/// `p^L`, `p^M` and `p~`.
pub fn static_cutoffs(params: &ModelParams) -> Result<StaticCutoffs> {
    params.require_gentle("static cutoffs")?;
    let p_tilde = p_tilde_checked(params)?;
    Ok(StaticCutoffs {
        p_l: prob_from_odds(-params.ul / params.uh),
        p_m: prob_from_odds(-(params.ul - params.dul) / (params.uh - params.duh)),
        p_tilde,
    })
}

/// `p~` alone; also meaningful when a late `R` in state H loses to `S`.
pub fn p_tilde(params: &ModelParams) -> Result<f64> {
    p_tilde_checked(params)
}

/// Rival's time-zero `R` probability that leaves a player indifferent
/// between `R` and `S` at time zero (clashes pay the simultaneous penalty).
pub fn immediate_mix_prob(p0: f64, params: &ModelParams) -> Result<f64> {
    params.require_gentle("immediate mixing")?;
    let sc = static_cutoffs(params)?;
    if !(p0 >= sc.p_l && p0 <= sc.p_m) {
        return Err(Error::OutOfRange { what: "immediate mixing", p0, lo: sc.p_l, hi: sc.p_m });
    }
    let l0 = odds(p0);
    let q = (l0 * params.uh + params.ul) / (l0 * params.duh + params.dul);
    Ok(q.clamp(0.0, 1.0))
}

/// Latest start of randomized stopping: first `t` with
/// `L_t (c + (1-beta) a e^{-at} dbar_H) >= b(-u_L) - c`.
pub fn t_r(p0: f64, params: &ModelParams, ctl: &Controls) -> Result<f64> {
    t_r_beta(p0, 0.0, params, ctl)
}

pub(crate) fn t_r_gap(t: f64, p0: f64, beta: f64, params: &ModelParams) -> f64 {
    let (a, c) = (params.a, params.c);
    odds_at(p0, t, params) * (c + (1.0 - beta) * a * libm::exp(-a * t) * params.dbh) - net_breakdown_gain(params)
}

pub fn t_r_beta(p0: f64, beta: f64, params: &ModelParams, ctl: &Controls) -> Result<f64> {
    let gain = net_breakdown_gain(params);
    if gain <= 0.0 {
        return Err(Error::Undefined { what: "T_r", reason: format!("b(-u_L) - c = {gain} <= 0") });
    }
    if beta == 0.0 {
        let pt = p_tilde_checked(params)?;
        if p0 > pt {
            return Err(Error::Infeasible {
                what: "T_r",
                reason: format!("no positive window: p0 = {p0} > p_tilde = {pt}"),
            });
        }
    }
    // at p0 = p_tilde the gap vanishes at t = 0 up to rounding; the scan
    // would otherwise run on to a later crossing
    if t_r_gap(0.0, p0, beta, params).abs() <= 1e-12 * gain {
        return Ok(0.0);
    }
    crossing_or_err(|t| t_r_gap(t, p0, beta, params), "T_r", ctl)
}

/// Earliest time at which `R` against an opponent still in the learning
/// phase is worth `u_S`; zero when `p0 >= p^L`.
pub fn t_l(p0: f64, params: &ModelParams, ctl: &Controls) -> Result<f64> {
    t_l_beta(p0, 0.0, params, ctl)
}

pub fn t_l_beta(p0: f64, beta: f64, params: &ModelParams, ctl: &Controls) -> Result<f64> {
    let p_l = prob_from_odds(-params.ul / params.uh);
    if p0 >= p_l {
        return Ok(0.0);
    }
    let w = 1.0 - beta;
    let den = |t: f64| params.uh - w * (1.0 - libm::exp(-params.a * t)) * params.dbh;
    let t = crossing_or_err(|t| odds_at(p0, t, params) * den(t) + params.ul, "T_l", ctl)?;
    // the denominator decreases in t; a sign change before t means a pole
    if den(t) <= 0.0 {
        return Err(Error::Infeasible {
            what: "T_l",
            reason: format!("denominator u_H - (1-e^(-at)) dbar_H is {} before the crossing", den(t)),
        });
    }
    Ok(t)
}

/// Constant of the learning-phase value `W` fixed by value matching at
/// `t_end` to a terminal payoff worth `x_h` (state H) and `x_l` (state L),
/// with the rival exposing mass `w` to breakthroughs.
///
/// Matched to `R` this is the constant used for `p*(T)` and the mixed
/// learning condition. Matched to `S` it gives the intense-competition value.
pub fn matching_constant(t_end: f64, p0: f64, w: f64, x_h: f64, x_l: f64, params: &ModelParams) -> f64 {
    let (a, b, c) = (params.a, params.b, params.c);
    let e = libm::exp(-a * t_end);
    let l_t = odds_at(p0, t_end, params);
    e * (x_h - (params.uh - w * params.dbh) - 0.5 * w * params.dbh * e + c / a) + e * (x_l + c / b) / l_t
}

/// Matching constant when the learning phase ends with `R` at `t_end`.
pub fn j2(t_end: f64, p0: f64, beta: f64, params: &ModelParams) -> f64 {
    let w = 1.0 - beta;
    let x_h = params.uh - w * (1.0 - libm::exp(-params.a * t_end)) * params.dbh;
    matching_constant(t_end, p0, w, x_h, params.ul, params)
}

fn threshold_odds(t_end: f64, p0: f64, beta: f64, params: &ModelParams) -> Result<f64> {
    let den = params.uh - 0.5 * params.dbh + 0.5 * beta * params.dbh - params.c / params.a + j2(t_end, p0, beta, params);
    if den <= 0.0 {
        return Err(Error::Undefined { what: "p*(T)", reason: format!("denominator {den} <= 0") });
    }
    Ok((params.c / params.b) / den)
}

/// Prior at which learning until `t_end` and then randomizing is worth
/// exactly `u_S` at time zero.
pub fn p_star_of_t(t_end: f64, p0: f64, params: &ModelParams) -> Result<f64> {
    Ok(prob_from_odds(threshold_odds(t_end, p0, 0.0, params)?))
}

/// Same threshold with the rival putting mass `beta` on immediate `S`.
pub fn l_beta_of_t(t_end: f64, p0: f64, beta: f64, params: &ModelParams) -> Result<f64> {
    threshold_odds(t_end, p0, beta, params)
}

/// `p*(T_r(p0))`, the lowest prior compatible with learning up to the latest
/// randomization start.
pub fn underline_p_star(p0: f64, params: &ModelParams, ctl: &Controls) -> Result<f64> {
    let t = t_r(p0, params, ctl)?;
    p_star_of_t(t, p0, params)
}

/// Fixed point `p* = p*(T_r(p*))` by bisection over `(eps, p^L)`.
pub fn fixed_point_pstar(params: &ModelParams, ctl: &Controls) -> Result<f64> {
    params.require_gentle("p*")?;
    let sc = static_cutoffs(params)?;
    let hi = sc.p_l.min(sc.p_tilde) - 1e-9;
    let lo = 1e-9;
    let f = |p: f64| match underline_p_star(p, params, ctl) {
        Ok(q) => p - q,
        Err(_) => f64::NAN,
    };
    bisect_or_err(f, lo, hi, "fixed point p*", ctl)
}

/// Weight `beta` on immediate `S` that leaves a player indifferent between
/// `S` and learning at prior `p0` (between `p_und` and `p*`).
pub fn beta_mixed_learning(p0: f64, params: &ModelParams, ctl: &Controls) -> Result<f64> {
    params.require_gentle("mixed learning")?;
    let l0 = odds(p0);
    let resid = |beta: f64| -> f64 {
        let t = match t_r_beta(p0, beta, params, ctl) {
            Ok(t) => t,
            Err(_) => return f64::NAN,
        };
        match l_beta_of_t(t, p0, beta, params) {
            Ok(l) => l0 - l,
            Err(_) => f64::NAN,
        }
    };
    bisect_or_err(resid, 1e-12, 1.0 - 1e-12, "mixed-learning weight", ctl)
}

/// Residual `L_0 - underline-L^beta(T_r^beta)` of the mixed-learning condition.
pub fn beta_residual(p0: f64, beta: f64, params: &ModelParams, ctl: &Controls) -> Result<f64> {
    let t = t_r_beta(p0, beta, params, ctl)?;
    Ok(odds(p0) - l_beta_of_t(t, p0, beta, params)?)
}

/// Cutoff above which `nv` players cannot start randomizing at once.
pub fn n_player_cutoff(nv: u32, params: &ModelParams) -> Result<f64> {
    if nv < 2 {
        return Err(Error::InvalidParams(format!("N >= 2 required (N = {nv})")));
    }
    let num = net_breakdown_gain(params);
    if num <= 0.0 {
        return Err(Error::Undefined { what: "p_tilde_N", reason: format!("b(-u_L) - c = {num} <= 0") });
    }
    Ok(prob_from_odds(num / ((nv - 1) as f64 * params.dbh * params.a + params.c)))
}

/// Time at which a breakthrough stops being worth acting on when the rival
/// is learning: `u_H - (1 - e^{-aT}) dbar_H = u_S`.
pub fn t_ps(params: &ModelParams) -> Result<f64> {
    params.require_intense("T_PS")?;
    Ok(libm::log(params.dbh / -(params.uh - params.dbh)) / params.a)
}

/// Constant of the intense-competition learning value, matched to `u_S` at
/// `t_end`.
pub fn psi_safe(t_end: f64, p0: f64, params: &ModelParams) -> f64 {
    matching_constant(t_end, p0, 1.0, 0.0, 0.0, params)
}

/// The `R`-matched constant along `[0, T_PS]`, used to probe monotonicity.
pub fn psi(t: f64, p0: f64, params: &ModelParams) -> f64 {
    j2(t, p0, 0.0, params)
}

fn p_nr_map(p0: f64, t: f64, params: &ModelParams) -> f64 {
    let den = params.uh - 0.5 * params.dbh - params.c / params.a + psi_safe(t, p0, params);
    if den <= 0.0 {
        return 1.0;
    }
    prob_from_odds((params.c / params.b) / den)
}

/// Prior at which learning until `T_PS` and then taking `S` is worth `u_S`.
pub fn p_nr(params: &ModelParams, ctl: &Controls) -> Result<f64> {
    let t = t_ps(params)?;
    bisect_or_err(|p| p - p_nr_map(p, t, params), 1e-9, 1.0 - 1e-9, "p_NR", ctl)
}

/// Residual `p - map(p)` of the `p^NR` fixed point.
pub fn p_nr_residual(p: f64, params: &ModelParams) -> Result<f64> {
    let t = t_ps(params)?;
    Ok(p - p_nr_map(p, t, params))
}

/// Window `[T_l, T_r]` of randomization starts for two players.
pub fn window(p0: f64, params: &ModelParams, ctl: &Controls) -> Result<RandomizationWindow> {
    Ok(RandomizationWindow { t_l: t_l(p0, params, ctl)?, t_r: t_r(p0, params, ctl)? })
}

/// Earliest `T` with `p*(T) <= p0`, i.e. the first randomization start for
/// which learning beforehand is worth at least `u_S`.
pub fn t_worthwhile(p0: f64, params: &ModelParams, ctl: &Controls) -> Result<f64> {
    let g = |t: f64| match threshold_odds(t, p0, 0.0, params) {
        Ok(l) => odds(p0) - l,
        Err(_) => -1.0,
    };
    first_crossing(g, 0.0, ctl.scan_step, ctl.horizon, ctl.bisect_tol, ctl.max_iter)
        .ok_or(Error::NoCrossing { what: "worthwhile start", horizon: ctl.horizon })
}
