//! Regime classification and construction of symmetric equilibrium profiles.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::cutoffs::{
    beta_mixed_learning, fixed_point_pstar, j2, l_beta_of_t, static_cutoffs, t_l, t_r, t_r_beta, t_worthwhile,
};
use crate::model::{belief_at, odds, ModelParams};
use crate::numerics::{bisect, Controls};
use crate::ode::{initial_slope, solve_master_ode, StrategyPath};
use crate::single_dm::dm_cutoffs;
use crate::strategy::MixedStrategy;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Regime {
    ImmediateS,
    MixedLearning,
    RandomStopping,
    ImmediateMix,
    ImmediateR,
    /// Learn until a fixed time, then take `S` (intense competition).
    LearnUntilSafe,
}

impl Regime {
    pub const ALL: [Regime; 6] = [
        Regime::ImmediateS,
        Regime::MixedLearning,
        Regime::RandomStopping,
        Regime::ImmediateMix,
        Regime::ImmediateR,
        Regime::LearnUntilSafe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Regime::ImmediateS => "immediate-s",
            Regime::MixedLearning => "mixed-learning",
            Regime::RandomStopping => "random-stopping",
            Regime::ImmediateMix => "immediate-mix",
            Regime::ImmediateR => "immediate-r",
            Regime::LearnUntilSafe => "learn-until-safe",
        }
    }

    pub fn parse(s: &str) -> Option<Regime> {
        Self::ALL.into_iter().find(|r| r.name() == s)
    }
}

impl core::fmt::Display for Regime {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

/// Every regime whose prior condition holds, with the cutoffs used.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Classification {
    pub prior: f64,
    pub regimes: Vec<Regime>,
    pub p_und: f64,
    /// `None` when the fixed point could not be bracketed.
    pub p_star: Option<f64>,
    pub p_l: f64,
    pub p_m: f64,
    pub p_tilde: f64,
    pub warning: Option<String>,
    /// Closest cutoff to the prior, by name.
    pub nearest: (String, f64),
}

pub fn classify(p0: f64, params: &ModelParams, ctl: &Controls) -> Result<Classification> {
    params.require_gentle("classification")?;
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(Error::InvalidParams(format!("prior {p0} must lie in (0, 1)")));
    }
    let dm = dm_cutoffs(params)?;
    let sc = static_cutoffs(params)?;
    let p_star = fixed_point_pstar(params, ctl).ok();
    let p_und = dm.p_und;

    let mut regimes = Vec::new();
    if p0 <= p_und {
        regimes.push(Regime::ImmediateS);
    }
    if let Some(ps) = p_star {
        if p_und < p0 && p0 < ps {
            regimes.push(Regime::MixedLearning);
        }
        if ps <= p0 && p0 < sc.p_tilde {
            regimes.push(Regime::RandomStopping);
        }
    }
    if sc.p_l < p0 && p0 < sc.p_m {
        regimes.push(Regime::ImmediateMix);
    }
    if p0 >= sc.p_m {
        regimes.push(Regime::ImmediateR);
    }

    let warning = (params.b >= 2.0 * params.a)
        .then(|| format!("b = {} >= 2a = {}: stopping rates need not increase", params.b, 2.0 * params.a));
    let mut named = alloc::vec![("p_und", p_und), ("p_L", sc.p_l), ("p_M", sc.p_m), ("p_tilde", sc.p_tilde)];
    if let Some(ps) = p_star {
        named.push(("p_star", ps));
    }
    let nearest = named
        .into_iter()
        .min_by(|x, y| (x.1 - p0).abs().total_cmp(&(y.1 - p0).abs()))
        .map(|(n, v)| (String::from(n), v))
        .unwrap();
    Ok(Classification {
        prior: p0,
        regimes,
        p_und,
        p_star,
        p_l: sc.p_l,
        p_m: sc.p_m,
        p_tilde: sc.p_tilde,
        warning,
        nearest,
    })
}

/// Admissible randomization starts. `lower` is the larger of `t_l` and the
/// first start worth `u_S` at time zero; `upper` is the latest start whose
/// path stays increasing (at most `t_r`).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StartWindow {
    pub t_l: f64,
    pub t_worthwhile: f64,
    pub t_r: f64,
    pub lower: f64,
    pub upper: f64,
}

impl StartWindow {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProfileConstants {
    pub q: Option<f64>,
    /// Weight on immediate `S` used by the path.
    pub beta: Option<f64>,
    /// Weight solved with the start at `T_r^beta`, before moving the start
    /// inside the feasible range.
    pub beta_at_latest_start: Option<f64>,
    pub t_hat: Option<f64>,
    pub t_bar: Option<f64>,
    pub window: Option<StartWindow>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EquilibriumProfile {
    pub regime: Regime,
    pub prior: f64,
    pub strategy: MixedStrategy,
    pub constants: ProfileConstants,
}

/// Latest start in `[good, t_r]` for which the path solves.
fn feasible_upper(p0: f64, beta: f64, good: f64, t_r: f64, params: &ModelParams, ctl: &Controls) -> f64 {
    let ok = |t: f64| solve_master_ode(p0, beta, t, 2, params, ctl).is_ok();
    if ok(t_r) {
        return t_r;
    }
    let (mut lo, mut hi) = (good, t_r);
    while hi - lo > 1e-7 * t_r.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Window of randomization starts for two players at `p0`.
pub fn start_window(p0: f64, params: &ModelParams, ctl: &Controls) -> Result<StartWindow> {
    let tl = t_l(p0, params, ctl)?;
    let tw = t_worthwhile(p0, params, ctl)?;
    let tr = t_r(p0, params, ctl)?;
    let lower = tl.max(tw);
    if lower > tr {
        return Err(Error::Infeasible {
            what: "randomization window",
            reason: format!("earliest start {lower} exceeds T_r = {tr}"),
        });
    }
    if solve_master_ode(p0, 0.0, lower, 2, params, ctl).is_err() {
        return Err(Error::Infeasible {
            what: "randomization window",
            reason: format!("no increasing path from the earliest start {lower}"),
        });
    }
    let upper = feasible_upper(p0, 0.0, lower, tr, params, ctl);
    Ok(StartWindow { t_l: tl, t_worthwhile: tw, t_r: tr, lower, upper })
}

fn not_applicable(regime: Regime, p0: f64, cls: &Classification) -> Error {
    Error::NotApplicable {
        regime: regime.name(),
        p0,
        reason: format!(
            "conditions hold only for {:?} (p_und {}, p_star {:?}, p_L {}, p_M {}, p_tilde {})",
            cls.regimes.iter().map(|r| r.name()).collect::<Vec<_>>(),
            cls.p_und,
            cls.p_star,
            cls.p_l,
            cls.p_m,
            cls.p_tilde
        ),
    }
}

/// Builds the symmetric profile of `regime` at `p0`. `t_hat` fixes the
/// randomization start for the path-based regimes (default: midpoint of the
/// window for random stopping, the latest feasible start for mixed learning).
pub fn build_equilibrium(
    regime: Regime,
    p0: f64,
    t_hat: Option<f64>,
    params: &ModelParams,
    ctl: &Controls,
) -> Result<EquilibriumProfile> {
    if params.players() != 2 {
        return Err(Error::InvalidParams(format!("profiles are built for two players (N = {})", params.players())));
    }
    if regime == Regime::LearnUntilSafe {
        return crate::extensions::competition_equilibrium(p0, params);
    }
    if regime == Regime::RandomStopping {
        let s = initial_slope(p0, 0.0, 2, t_hat.unwrap_or(0.0), params);
        if !(s > 0.0) {
            return Err(Error::NoRandomization { slope: s });
        }
    }
    let cls = classify(p0, params, ctl)?;
    if !cls.regimes.contains(&regime) {
        return Err(not_applicable(regime, p0, &cls));
    }
    let mut constants = ProfileConstants::default();
    let strategy = match regime {
        Regime::ImmediateS => MixedStrategy::immediate_s(),
        Regime::ImmediateR => MixedStrategy::immediate_r(),
        Regime::ImmediateMix => {
            let q = crate::cutoffs::immediate_mix_prob(p0, params)?;
            constants.q = Some(q);
            MixedStrategy::immediate_mix(q)
        }
        Regime::RandomStopping => {
            let w = start_window(p0, params, ctl)?;
            let th = match t_hat {
                Some(th) => {
                    if th < w.lower - 1e-9 || th > w.t_r {
                        return Err(Error::Infeasible {
                            what: "randomization start",
                            reason: format!("T_hat = {th} outside [{}, {}]", w.lower, w.t_r),
                        });
                    }
                    th
                }
                None => w.midpoint(),
            };
            let path = solve_master_ode(p0, 0.0, th, 2, params, ctl)?;
            constants.t_hat = Some(th);
            constants.t_bar = Some(path.t_bar);
            constants.beta = Some(0.0);
            constants.window = Some(w);
            MixedStrategy::with_path(path)
        }
        Regime::MixedLearning => {
            let (beta0, beta, path) = mixed_learning_path(p0, t_hat, params, ctl)?;
            constants.beta_at_latest_start = Some(beta0);
            constants.beta = Some(beta);
            constants.t_hat = Some(path.t_hat);
            constants.t_bar = Some(path.t_bar);
            MixedStrategy::with_path(path)
        }
        Regime::LearnUntilSafe => unreachable!(),
    };
    Ok(EquilibriumProfile { regime, prior: p0, strategy, constants })
}

/// Weight on immediate `S` for which learning until `t_hat` and then
/// randomizing is worth exactly `u_S`.
pub fn beta_at_start(p0: f64, t_hat: f64, params: &ModelParams, ctl: &Controls) -> Result<f64> {
    let l0 = odds(p0);
    let f = |beta: f64| match l_beta_of_t(t_hat, p0, beta, params) {
        Ok(l) => l0 - l,
        Err(_) => f64::NAN,
    };
    bisect(f, 1e-12, 1.0 - 1e-12, 1e-15, ctl.max_iter).map_err(|e| Error::NotFound {
        what: "weight on immediate S at the given start",
        lo: e.lo,
        hi: e.hi,
        lo_value: e.f_lo,
        hi_value: e.f_hi,
    })
}

fn mixed_learning_path(
    p0: f64,
    t_hat: Option<f64>,
    params: &ModelParams,
    ctl: &Controls,
) -> Result<(f64, f64, StrategyPath)> {
    let beta0 = beta_mixed_learning(p0, params, ctl)?;
    let t0 = t_r_beta(p0, beta0, params, ctl)?;
    let starts: Vec<f64> = match t_hat {
        Some(th) => alloc::vec![th],
        None => [1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 0.1, 0.2].iter().map(|d| t0 * (1.0 - d)).collect(),
    };
    let mut last = None;
    for th in starts {
        let attempt = beta_at_start(p0, th, params, ctl).and_then(|beta| {
            if th > t_r_beta(p0, beta, params, ctl)? {
                return Err(Error::Infeasible { what: "mixed learning start", reason: format!("T_hat = {th} beyond T_r") });
            }
            Ok((beta, solve_master_ode(p0, beta, th, 2, params, ctl)?))
        });
        match attempt {
            Ok((beta, path)) => return Ok((beta0, beta, path)),
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap())
}

/// Value of learning at `t` (no signal yet) when the rival learns until
/// `t_end` with weight `w` still active and a constant fixed by value
/// matching, relative to `u_S`.
pub(crate) fn learning_value_rel(t: f64, p0: f64, w: f64, constant: f64, params: &ModelParams) -> f64 {
    let (a, b, c) = (params.a, params.b, params.c);
    let p = belief_at(p0, t, params);
    p * ((params.uh - w * params.dbh) - c / a + 0.5 * w * params.dbh * libm::exp(-a * t)) - (1.0 - p) * c / b
        + p * libm::exp(a * t) * constant
}

/// Continuation value at `t <= t_hat` of learning until `t_hat` and then
/// randomizing, when the rival puts mass `beta` on immediate `S`.
pub fn w_value(t: f64, t_hat: f64, beta: f64, p0: f64, params: &ModelParams) -> f64 {
    params.us + learning_value_rel(t, p0, 1.0 - beta, j2(t_hat, p0, beta, params), params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutoffs::{p_star_of_t, p_tilde};
    use crate::model::fixtures::*;
    use crate::model::r_payoff;

    fn ctl() -> Controls {
        Controls::default()
    }

    #[test]
    fn classify_examples() {
        // p_M = 0.55 with small gaps, so the immediate-R condition holds as well
        let q = classify(0.6, &small_gaps(), &ctl()).unwrap();
        assert_eq!(q.regimes, alloc::vec![Regime::RandomStopping, Regime::ImmediateR]);
        assert!(q.warning.is_none());
        let f = classify(0.01, &baseline(), &ctl()).unwrap();
        assert_eq!(f.regimes, alloc::vec![Regime::ImmediateS]);
        let f = classify(0.9, &baseline(), &ctl()).unwrap();
        assert_eq!(f.regimes, alloc::vec![Regime::ImmediateR]);
        // with the baseline payoffs the ordering puts p_tilde below p_M: mixing at 0.7 only
        let f = classify(0.7, &baseline(), &ctl()).unwrap();
        assert_eq!(f.regimes, alloc::vec![Regime::ImmediateMix]);
        let f = classify(0.6, &baseline(), &ctl()).unwrap();
        assert_eq!(f.regimes, alloc::vec![Regime::RandomStopping, Regime::ImmediateMix]);
    }

    #[test]
    fn classify_warns_when_breakdowns_are_fast() {
        let m = crate::RawParams { b: 1.3, ..crate::RawParams::baseline() }.validate().unwrap();
        let c = classify(0.5, &m, &ctl()).unwrap();
        assert!(c.warning.is_some());
    }

    #[test]
    fn regime_names_round_trip() {
        for r in Regime::ALL {
            assert_eq!(Regime::parse(r.name()), Some(r));
        }
        assert_eq!(Regime::parse("nope"), None);
    }

    #[test]
    fn pure_and_mixed_time_zero_profiles() {
        let m = baseline();
        let p = build_equilibrium(Regime::ImmediateS, 0.01, None, &m, &ctl()).unwrap();
        assert_eq!(p.strategy, MixedStrategy::immediate_s());
        let p = build_equilibrium(Regime::ImmediateMix, 2.0 / 3.0, None, &m, &ctl()).unwrap();
        assert!((p.strategy.atom_r0 - 2.0 / 3.0).abs() < 1e-12);
        assert!((p.strategy.atom_s0 - 1.0 / 3.0).abs() < 1e-12);
        // indifference at time zero with clashing mass penalized
        let q = p.strategy.atom_r0;
        let p0 = 2.0 / 3.0;
        let u = p0 * (m.uh - q * m.duh) + (1.0 - p0) * (m.ul - q * m.dul);
        assert!(u.abs() < 1e-12);
        let e = build_equilibrium(Regime::ImmediateR, 0.4, None, &m, &ctl()).unwrap_err();
        assert_eq!(e.kind(), "NotApplicable");
    }

    #[test]
    fn random_stopping_profile_is_atomless() {
        let m = small_gaps();
        let p = build_equilibrium(Regime::RandomStopping, 0.6, None, &m, &ctl()).unwrap();
        assert_eq!((p.strategy.atom_r0, p.strategy.atom_s0), (0.0, 0.0));
        let w = p.constants.window.unwrap();
        assert!(w.lower <= w.upper && w.upper <= w.t_r);
        assert!((p.constants.t_hat.unwrap() - w.midpoint()).abs() < 1e-15);
        let path = p.strategy.path.as_ref().unwrap();
        assert!(path.rho.windows(2).all(|x| x[1] >= x[0]));
        // no jumps: consecutive increments are small
        assert!(path.rho.windows(2).all(|x| x[1] - x[0] < 1e-3));
    }

    #[test]
    fn random_stopping_above_p_tilde_has_no_randomization() {
        let m = baseline();
        let e = build_equilibrium(Regime::RandomStopping, 0.7, Some(0.0), &m, &ctl()).unwrap_err();
        assert_eq!(e.kind(), "NoRandomization");
    }

    #[test]
    fn window_collapses_near_p_tilde() {
        let m = baseline();
        let pt = p_tilde(&m).unwrap();
        // the gap is zero at t = 0 exactly at p_tilde
        assert_eq!(t_r(pt, &m, &ctl()).unwrap(), 0.0);
        let w = start_window(pt - 1e-6, &m, &ctl()).unwrap();
        assert_eq!(w.lower, 0.0);
    }

    #[test]
    fn mixed_learning_makes_immediate_s_indifferent() {
        let m = baseline();
        let cls = classify(0.04, &m, &ctl()).unwrap();
        assert!(cls.regimes.contains(&Regime::MixedLearning), "{cls:?}");
        let p = build_equilibrium(Regime::MixedLearning, 0.04, None, &m, &ctl()).unwrap();
        let beta = p.constants.beta.unwrap();
        let th = p.constants.t_hat.unwrap();
        assert!(beta > 0.0 && beta < 1.0);
        assert!((p.strategy.atom_s0 - beta).abs() < 1e-15);
        let w0 = w_value(0.0, th, beta, 0.04, &m);
        assert!(w0.abs() < 1e-8, "{w0}");
        let b0 = p.constants.beta_at_latest_start.unwrap();
        assert!((b0 - beta).abs() < 0.05, "{b0} {beta}");
    }

    #[test]
    fn w_value_matches_at_both_ends() {
        let m = baseline();
        for (p0, th, beta) in [(0.55, 3.0, 0.0), (0.3, 10.0, 0.0), (0.2, 5.0, 0.3)] {
            let w = 1.0 - beta;
            let f_h = w * (1.0 - libm::exp(-m.a * th));
            let u = r_payoff(belief_at(p0, th, &m), f_h, 0.0, &m);
            assert!((w_value(th, th, beta, p0, &m) - u).abs() < 1e-10);
        }
        let th = 4.0;
        let p = bisect(|p| p - p_star_of_t(th, p, &m).unwrap_or(-1.0), 0.1, 0.6, 1e-15, 200).unwrap();
        assert!(w_value(0.0, th, 0.0, p, &m).abs() < 1e-10);
    }
}
