//! The lone decision maker: free-boundary cutoffs, the learning-region value
//! function and viscosity-style residual checks.

use alloc::vec::Vec;

use crate::model::{odds, prob_from_odds, ModelParams};
use crate::numerics::bisect;
use crate::{Error, Result};

/// Payoffs of a single stopping problem, relative to the safe payoff.
///
/// `from_params` gives the first-prize problem. `second_prize` gives the
/// problem of a player who has watched the rival take `R` and can only earn
/// the second prize.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DmProblem {
    pub uh: f64,
    pub ul: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub us: f64,
}

impl DmProblem {
    pub fn from_params(params: &ModelParams) -> Self {
        DmProblem { uh: params.uh, ul: params.ul, a: params.a, b: params.b, c: params.c, us: params.us }
    }

    pub fn second_prize(params: &ModelParams) -> Self {
        DmProblem {
            uh: params.uh - params.dbh,
            ul: params.ul - params.dbl,
            ..Self::from_params(params)
        }
    }

    /// Cost above which learning is never worthwhile.
    pub fn c_bar(&self) -> f64 {
        self.b * (-self.ul) * self.uh / (self.uh - self.ul)
    }

    /// Belief at which `R` and `S` pay the same.
    pub fn p_hat(&self) -> f64 {
        prob_from_odds(-self.ul / self.uh)
    }

    fn r_rel(&self, p: f64) -> f64 {
        p * self.uh + (1.0 - p) * self.ul
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DmSolution {
    pub p_bar: f64,
    pub p_und: f64,
    #[cfg_attr(feature = "serde", serde(rename = "K"))]
    pub k: f64,
    pub c_bar: f64,
    pub l_bar: f64,
    pub l_und: f64,
    pub problem: DmProblem,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum DmPolicy {
    TakeS,
    Learn,
    TakeR,
}

pub fn dm_cutoffs(params: &ModelParams) -> Result<DmSolution> {
    solve_problem(&DmProblem::from_params(params))
}

pub fn solve_problem(pr: &DmProblem) -> Result<DmSolution> {
    let c_bar = pr.c_bar();
    if !(pr.uh > 0.0 && pr.ul < 0.0) || pr.c >= c_bar {
        return Err(Error::NoLearningRegion { c_bar });
    }
    let cb = pr.c / pr.b;
    let expo = pr.b / (pr.b - pr.a);
    let l_bar = (-pr.ul - cb) / cb;
    let k = cb * (pr.b / pr.a - 1.0) * libm::pow(l_bar, 1.0 - expo);
    let g = |l: f64| (pr.uh - pr.c / pr.a) * l + k * libm::pow(l, expo) - cb;
    let l_und = bisect(g, 1e-12, l_bar, 1e-12, 400).map_err(|nb| Error::NotFound {
        what: "lower learning boundary",
        lo: nb.lo,
        hi: nb.hi,
        lo_value: nb.f_lo,
        hi_value: nb.f_hi,
    })?;
    Ok(DmSolution {
        p_bar: prob_from_odds(l_bar),
        p_und: prob_from_odds(l_und),
        k,
        c_bar,
        l_bar,
        l_und,
        problem: *pr,
    })
}

impl DmSolution {
    fn expo(&self) -> f64 {
        self.problem.b / (self.problem.b - self.problem.a)
    }

    /// Learning-region value divided by `1 - p`, as a function of the odds.
    fn f_of_odds(&self, l: f64) -> f64 {
        let pr = &self.problem;
        l * (pr.uh - pr.c / pr.a) - pr.c / pr.b + self.k * libm::pow(l, self.expo())
    }

    fn f_prime(&self, l: f64) -> f64 {
        let pr = &self.problem;
        let e = self.expo();
        pr.uh - pr.c / pr.a + e * self.k * libm::pow(l, e - 1.0)
    }

    /// `V^L(p)` relative to the safe payoff; defined for `p < 1`.
    pub(crate) fn learning_value_rel(&self, p: f64) -> f64 {
        (1.0 - p) * self.f_of_odds(odds(p))
    }

    /// Derivative of `V^L` in `p`.
    pub fn learning_slope(&self, p: f64) -> f64 {
        let l = odds(p);
        -self.f_of_odds(l) + self.f_prime(l) / (1.0 - p)
    }

    pub(crate) fn value_rel(&self, p: f64) -> f64 {
        if p <= self.p_und {
            0.0
        } else if p >= self.p_bar {
            self.problem.r_rel(p)
        } else {
            self.learning_value_rel(p)
        }
    }

    /// Flow residual of the single-DM HJB at `(p, V, V')`, relative payoffs.
    pub fn hjb(&self, p: f64, v: f64, dv: f64) -> f64 {
        let pr = &self.problem;
        p * pr.a * (pr.uh - v) + (1.0 - p) * pr.b * (0.0 - v) + dv * (pr.b - pr.a) * p * (1.0 - p) - pr.c
    }
}

/// Value of the lone decision maker at belief `p`: the learning branch inside
/// `(p_und, p_bar)`, the better immediate action outside. The kink at `p_und`
/// is kept as is.
pub fn dm_value(p: f64, sol: &DmSolution) -> f64 {
    sol.problem.us + sol.value_rel(p)
}

pub fn dm_policy(p: f64, sol: &DmSolution) -> DmPolicy {
    if p <= sol.p_und {
        DmPolicy::TakeS
    } else if p >= sol.p_bar {
        DmPolicy::TakeR
    } else {
        DmPolicy::Learn
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DmResiduals {
    /// `|V^L(p_bar) - U_R(p_bar)|`
    pub value_upper: f64,
    /// `|V^L'(p_bar) - U_R'(p_bar)|`
    pub slope_upper: f64,
    /// `|V^L(p_und) - u_S|`
    pub value_lower: f64,
    /// Largest HJB residual on the stopping grids; must be `<= 0`.
    pub stopping_hjb_max: f64,
    /// Smallest second difference of `V^L` on the learning region.
    pub convexity_min: f64,
    /// Smallest `V^L - max(U_R, u_S)` on the learning region.
    pub dominance_min: f64,
    /// Largest `max(H, U - V)` over test slopes at the lower kink; must be `<= 0`.
    pub kink_max: f64,
}

impl DmResiduals {
    pub fn passes(&self, tol: f64) -> bool {
        self.value_upper < tol
            && self.slope_upper < tol
            && self.value_lower < tol
            && self.stopping_hjb_max <= 1e-12
            && self.convexity_min >= -1e-8
            && self.dominance_min >= -1e-12
            && self.kink_max <= 1e-10
    }
}

pub fn smooth_pasting_residuals(sol: &DmSolution) -> DmResiduals {
    let pr = &sol.problem;
    let value_upper = (sol.learning_value_rel(sol.p_bar) - pr.r_rel(sol.p_bar)).abs();
    let slope_upper = (sol.learning_slope(sol.p_bar) - (pr.uh - pr.ul)).abs();
    let value_lower = sol.learning_value_rel(sol.p_und).abs();

    let n = 100;
    let mut stopping_hjb_max = f64::NEG_INFINITY;
    for i in 1..=n {
        // below p_und: V = u_S, V' = 0
        let p = sol.p_und * i as f64 / n as f64;
        stopping_hjb_max = stopping_hjb_max.max(sol.hjb(p, 0.0, 0.0));
        // above p_bar: V = U_R, V' = uh - ul
        let p = sol.p_bar + (1.0 - sol.p_bar) * (i - 1) as f64 / n as f64;
        stopping_hjb_max = stopping_hjb_max.max(sol.hjb(p, pr.r_rel(p), pr.uh - pr.ul));
    }

    let m = 400;
    let h = (sol.p_bar - sol.p_und) / m as f64;
    let grid: Vec<f64> = (0..=m).map(|i| sol.p_und + h * i as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&p| sol.learning_value_rel(p)).collect();
    let mut convexity_min = f64::INFINITY;
    for i in 1..m {
        convexity_min = convexity_min.min(vals[i - 1] - 2.0 * vals[i] + vals[i + 1]);
    }
    let mut dominance_min = f64::INFINITY;
    for (p, v) in grid.iter().zip(&vals) {
        dominance_min = dominance_min.min(v - pr.r_rel(*p).max(0.0));
    }

    let top = sol.learning_slope(sol.p_und);
    let mut kink_max = f64::NEG_INFINITY;
    for i in 0..100 {
        let s = top * i as f64 / 99.0;
        let u_minus_v = pr.r_rel(sol.p_und).max(0.0) - 0.0;
        kink_max = kink_max.max(sol.hjb(sol.p_und, 0.0, s).max(u_minus_v));
    }

    DmResiduals {
        value_upper,
        slope_upper,
        value_lower,
        stopping_hjb_max,
        convexity_min,
        dominance_min,
        kink_max,
    }
}
