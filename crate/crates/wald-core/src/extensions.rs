//! Intense competition, observable actions, and the N-player pieces.

use alloc::format;
use alloc::vec::Vec;

use crate::cutoffs::{n_player_cutoff, net_breakdown_gain, p_nr, p_tilde, psi, psi_safe, t_ps};
use crate::equilibrium::{learning_value_rel, EquilibriumProfile, ProfileConstants, Regime};
use crate::model::{drift_belief, odds, prob_from_odds, ModelParams};
use crate::numerics::Controls;
use crate::ode::{indifference_residual, solve_master_ode, StrategyPath};
use crate::strategy::{Action, MixedStrategy};
use crate::{Error, Result};

/// Value of learning at `t` when both players learn until `T_PS` and then
/// take `S`; `u_S` after `T_PS`.
pub fn competition_value(t: f64, p0: f64, params: &ModelParams) -> Result<f64> {
    let end = t_ps(params)?;
    if t > end {
        return Ok(params.us);
    }
    Ok(params.us + learning_value_rel(t, p0, 1.0, psi_safe(end, p0, params), params))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CompetitionSolution {
    pub t_ps: f64,
    pub p_nr: f64,
    pub p_tilde: f64,
    pub t: Vec<f64>,
    pub w_l: Vec<f64>,
    /// `R` payoff against a rival still learning.
    pub u_r: Vec<f64>,
    pub psi: Vec<f64>,
}

/// Learning value, immediate-`R` payoff and `psi` on `[0, T_PS]`.
pub fn competition_solution(p0: f64, params: &ModelParams, ctl: &Controls, points: usize) -> Result<CompetitionSolution> {
    let end = t_ps(params)?;
    let n = points.max(2);
    let t: Vec<f64> = (0..n).map(|i| end * i as f64 / (n - 1) as f64).collect();
    let mut w_l = Vec::with_capacity(n);
    let mut u_r = Vec::with_capacity(n);
    for &s in &t {
        w_l.push(competition_value(s, p0, params)?);
        let f_h = 1.0 - libm::exp(-params.a * s);
        u_r.push(crate::model::r_payoff(crate::model::belief_at(p0, s, params), f_h, 0.0, params));
    }
    let psi = t.iter().map(|&s| psi(s, p0, params)).collect();
    Ok(CompetitionSolution { t_ps: end, p_nr: p_nr(params, ctl)?, p_tilde: p_tilde(params)?, t, w_l, u_r, psi })
}

/// Symmetric pure profile: learn until `T_PS`, then take `S`.
pub fn competition_equilibrium(p0: f64, params: &ModelParams) -> Result<EquilibriumProfile> {
    let end = t_ps(params)?;
    let lo = p_nr(params, &Controls::default())?;
    let hi = p_tilde(params)?;
    if !(p0 > lo && p0 < hi) {
        return Err(Error::OutOfRange { what: "learning until T_PS", p0, lo, hi });
    }
    Ok(EquilibriumProfile {
        regime: Regime::LearnUntilSafe,
        prior: p0,
        strategy: MixedStrategy::stop_at(end, Action::S),
        constants: ProfileConstants { t_hat: Some(end), t_bar: Some(end), ..Default::default() },
    })
}

/// Belief when neither a signal nor a rival action has been seen: the
/// likelihood ratio grows at twice the private rate.
pub fn observable_belief(p0: f64, t: f64, params: &ModelParams) -> f64 {
    drift_belief(p0, 2.0 * (params.b - params.a) * t)
}

fn require_equal_gaps(params: &ModelParams) -> Result<()> {
    if params.dbh != params.dbl {
        return Err(Error::InvalidParams(format!(
            "observable-action hazard needs dbar_H = dbar_L (got {} and {})",
            params.dbh, params.dbl
        )));
    }
    Ok(())
}

/// Rate at which each player takes `R` while no action has been observed.
pub fn mrss_hazard(t: f64, p0: f64, params: &ModelParams) -> Result<f64> {
    require_equal_gaps(params)?;
    let p = observable_belief(p0, t, params);
    let l = odds(p);
    let m = params;
    let num = net_breakdown_gain(m) - l * (m.a * (p * (m.dbh - m.dbl) + m.dbl) + m.c);
    Ok(num / (l * m.dbh + m.dbl))
}

/// Time at which the hazard reaches zero: `L_t (a dbar_H + c) = b(-u_L) - c`.
pub fn mrss_boundary(p0: f64, params: &ModelParams) -> Result<f64> {
    require_equal_gaps(params)?;
    let target = net_breakdown_gain(params) / (params.a * params.dbh + params.c);
    Ok(libm::log(target / odds(p0)) / (2.0 * (params.b - params.a)))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MrssReport {
    pub t: Vec<f64>,
    pub hazard: Vec<f64>,
    pub belief: Vec<f64>,
    /// Hazard zero; mass still waiting then takes `R` at once.
    pub t_star: f64,
    pub prior_in_range: bool,
    pub hazard_positive: bool,
}

/// Hazard and observable belief on `[0, t*]` with feasibility flags.
pub fn mrss_report(p0: f64, params: &ModelParams, points: usize) -> Result<MrssReport> {
    params.require_gentle("mimicking random stopping")?;
    let t_star = mrss_boundary(p0, params)?;
    let sc = crate::cutoffs::static_cutoffs(params)?;
    let end = t_star.max(0.0);
    let n = points.max(2);
    let t: Vec<f64> = (0..n).map(|i| end * i as f64 / (n - 1) as f64).collect();
    let hazard = t.iter().map(|&s| mrss_hazard(s, p0, params)).collect::<Result<Vec<_>>>()?;
    let belief = t.iter().map(|&s| observable_belief(p0, s, params)).collect();
    let hazard_positive = hazard[..n - 1].iter().all(|&h| h > 0.0);
    Ok(MrssReport { t, hazard, belief, t_star, prior_in_range: sc.p_l < p0 && p0 < sc.p_tilde, hazard_positive })
}

/// Belief of a player who sees the rival take `R` at `t` without having
/// seen anything before: odds scale by `(a + h) / h`.
pub fn belief_after_rival_r(p0: f64, t: f64, params: &ModelParams) -> Result<f64> {
    let h = mrss_hazard(t, p0, params)?;
    let l = odds(observable_belief(p0, t, params));
    if h <= 0.0 {
        return Ok(1.0);
    }
    Ok(prob_from_odds(l * (params.a + h) / h))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NPlayerSummary {
    pub n: u32,
    /// `p~_k` for `k = 2..=n`.
    pub cutoffs: Vec<(u32, f64)>,
    pub path: Option<StrategyPath>,
    pub residual: Option<f64>,
}

/// Cutoffs for `2..=n` players and, when `p0` is given, the symmetric path
/// started at time zero.
pub fn nplayer(n: u32, p0: Option<f64>, params: &ModelParams, ctl: &Controls) -> Result<NPlayerSummary> {
    let cutoffs = (2..=n).map(|k| n_player_cutoff(k, params).map(|p| (k, p))).collect::<Result<Vec<_>>>()?;
    let (path, residual) = match p0 {
        Some(p0) => {
            let path = solve_master_ode(p0, 0.0, 0.0, n, params, ctl)?;
            let r = indifference_residual(&path, params);
            (Some(path), Some(r))
        }
        None => (None, None),
    };
    Ok(NPlayerSummary { n, cutoffs, path, residual })
}
