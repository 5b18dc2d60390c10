//! Primitives: parameters and their validation, beliefs, survival
//! probabilities and the payoff of taking `R`.
//!
//! Payoffs are stored relative to the safe payoff internally (`uh`, `ul`),
//! which shifts every terminal payoff by the same constant and leaves all
//! incentives unchanged. Public payoff-valued functions add `u_s` back.

use alloc::format;
use alloc::string::String;

use crate::{Error, Result};

/// Unvalidated parameter record.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RawParams {
    /// First-prize payoff of `R` in state H.
    pub u_h: f64,
    /// First-prize payoff of `R` in state L.
    pub u_l: f64,
    /// Penalty for taking `R` second.
    pub dbar_h: f64,
    pub dbar_l: f64,
    /// Penalty for taking `R` at the same instant as the rival.
    pub dund_h: f64,
    pub dund_l: f64,
    /// Rate of H-revealing signals.
    pub a: f64,
    /// Rate of L-revealing signals.
    pub b: f64,
    /// Flow cost of information.
    pub c: f64,
    pub u_s: f64,
    pub n: u32,
}

impl RawParams {
    /// Baseline parameters: symmetric payoffs, equal gaps.
    pub fn baseline() -> Self {
        RawParams {
            u_h: 1.0,
            u_l: -1.0,
            dbar_h: 0.7,
            dbar_l: 0.7,
            dund_h: 0.5,
            dund_l: 0.5,
            a: 0.6,
            b: 0.8,
            c: 0.025,
            u_s: 0.0,
            n: 2,
        }
    }

    pub fn validate(&self) -> Result<ModelParams> {
        validate_params(self)
    }
}

/// Which payoff ordering holds for the second `R` taker in state H.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Competition {
    /// `u_l < u_s < u_h - dbar_h`: a late `R` in state H still beats `S`.
    Gentle,
    /// `u_l < u_h - dbar_h < u_s`: a late `R` in state H loses to `S`.
    Intense,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    raw: RawParams,
    competition: Competition,
    pub(crate) uh: f64,
    pub(crate) ul: f64,
    pub(crate) dbh: f64,
    pub(crate) dbl: f64,
    pub(crate) duh: f64,
    pub(crate) dul: f64,
    pub(crate) a: f64,
    pub(crate) b: f64,
    pub(crate) c: f64,
    pub(crate) us: f64,
}

fn invalid(msg: String) -> Error {
    Error::InvalidParams(msg)
}

pub fn validate_params(raw: &RawParams) -> Result<ModelParams> {
    let fields = [
        ("u_H", raw.u_h),
        ("u_L", raw.u_l),
        ("dbar_H", raw.dbar_h),
        ("dbar_L", raw.dbar_l),
        ("dund_H", raw.dund_h),
        ("dund_L", raw.dund_l),
        ("a", raw.a),
        ("b", raw.b),
        ("c", raw.c),
        ("u_S", raw.u_s),
    ];
    for (name, v) in fields {
        if !v.is_finite() {
            return Err(invalid(format!("{name} is not finite")));
        }
    }
    if !(raw.a > 0.0) {
        return Err(invalid(format!("rates: a > 0 required (a = {})", raw.a)));
    }
    if !(raw.b > raw.a) {
        return Err(invalid(format!("rates: b > a required (a = {}, b = {})", raw.a, raw.b)));
    }
    if !(raw.c > 0.0) {
        return Err(invalid(format!("cost: c > 0 required (c = {})", raw.c)));
    }
    if raw.n < 2 {
        return Err(invalid(format!("players: N >= 2 required (N = {})", raw.n)));
    }
    if !(raw.dund_h > 0.0 && raw.dund_l > 0.0 && raw.dbar_h > raw.dund_h && raw.dbar_l > raw.dund_l) {
        return Err(invalid(format!(
            "Assumption 1 violated: dbar > dund > 0 required in both states (dbar = {}/{}, dund = {}/{})",
            raw.dbar_h, raw.dbar_l, raw.dund_h, raw.dund_l
        )));
    }
    let late_h = raw.u_h - raw.dbar_h;
    let gentle = raw.u_l < raw.u_s && raw.u_s < late_h;
    let intense = raw.u_l < late_h && late_h < raw.u_s && raw.u_h > raw.u_s;
    let competition = match (gentle, intense) {
        (true, false) => Competition::Gentle,
        (false, true) => Competition::Intense,
        _ => {
            return Err(invalid(format!(
                "payoff ordering: neither u_L < u_S < u_H - dbar_H nor u_L < u_H - dbar_H < u_S < u_H holds \
                 (u_L = {}, u_H - dbar_H = {}, u_S = {})",
                raw.u_l, late_h, raw.u_s
            )))
        }
    };
    Ok(ModelParams {
        raw: *raw,
        competition,
        uh: raw.u_h - raw.u_s,
        ul: raw.u_l - raw.u_s,
        dbh: raw.dbar_h,
        dbl: raw.dbar_l,
        duh: raw.dund_h,
        dul: raw.dund_l,
        a: raw.a,
        b: raw.b,
        c: raw.c,
        us: raw.u_s,
    })
}

impl ModelParams {
    pub fn raw(&self) -> &RawParams {
        &self.raw
    }
    pub fn competition(&self) -> Competition {
        self.competition
    }
    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn u_s(&self) -> f64 {
        self.us
    }
    pub fn players(&self) -> u32 {
        self.raw.n
    }

    /// Copy with a different flow cost, revalidated.
    pub fn with_cost(&self, c: f64) -> Result<ModelParams> {
        RawParams { c, ..self.raw }.validate()
    }

    pub(crate) fn require_gentle(&self, what: &str) -> Result<()> {
        match self.competition {
            Competition::Gentle => Ok(()),
            Competition::Intense => Err(Error::RegimeMismatch(format!(
                "{what} needs u_L < u_S < u_H - dbar_H"
            ))),
        }
    }

    pub(crate) fn require_intense(&self, what: &str) -> Result<()> {
        match self.competition {
            Competition::Intense => Ok(()),
            Competition::Gentle => Err(Error::RegimeMismatch(format!(
                "{what} needs u_L < u_H - dbar_H < u_S"
            ))),
        }
    }
}

/// Probability of state H together with its likelihood ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Belief {
    pub p: f64,
}

impl Belief {
    pub fn new(p: f64) -> Self {
        Belief { p }
    }
    /// `p / (1 - p)`, infinite at `p = 1`.
    pub fn odds(&self) -> f64 {
        odds(self.p)
    }
}

pub fn odds(p: f64) -> f64 {
    if p >= 1.0 {
        f64::INFINITY
    } else {
        p / (1.0 - p)
    }
}

pub fn prob_from_odds(l: f64) -> f64 {
    if l.is_infinite() {
        1.0
    } else {
        l / (1.0 + l)
    }
}

/// Belief after `t` units of time with no revealing signal, moving at
/// log-odds rate `drift`.
pub(crate) fn drift_belief(p0: f64, drift_t: f64) -> f64 {
    if p0 <= 0.0 {
        return 0.0;
    }
    if p0 >= 1.0 {
        return 1.0;
    }
    let z = libm::log(p0) - libm::log1p(-p0) + drift_t;
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// Posterior `p_t` given no revealing signal by `t`; the likelihood ratio
/// grows as `L_0 e^{(b-a)t}`.
pub fn belief_at(p0: f64, t: f64, params: &ModelParams) -> f64 {
    drift_belief(p0, (params.b - params.a) * t)
}

/// Likelihood ratio `L_t = L_0 e^{(b-a)t}`.
pub fn odds_at(p0: f64, t: f64, params: &ModelParams) -> f64 {
    odds(p0) * libm::exp((params.b - params.a) * t)
}

/// Probability that no revealing signal arrives by `t`.
pub fn no_signal_prob(p0: f64, t: f64, params: &ModelParams) -> f64 {
    p0 * libm::exp(-params.a * t) + (1.0 - p0) * libm::exp(-params.b * t)
}

/// Expected payoff of `R` at belief `p` when the rival has taken `R` with
/// probability `f_h` (`f_l`) in state H (L) and has no atom at this instant.
pub fn r_payoff(p: f64, f_h: f64, f_l: f64, params: &ModelParams) -> f64 {
    params.us + r_payoff_rel(p, f_h, f_l, params)
}

pub(crate) fn r_payoff_rel(p: f64, f_h: f64, f_l: f64, params: &ModelParams) -> f64 {
    p * (params.uh - f_h * params.dbh) + (1.0 - p) * (params.ul - f_l * params.dbl)
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn validation_tags_the_payoff_ordering() {
        assert_eq!(baseline().competition(), Competition::Gentle);
        assert_eq!(intense().competition(), Competition::Intense);
        let bad = RawParams { dbar_h: 0.4, dbar_l: 0.4, ..RawParams::baseline() };
        let err = bad.validate().unwrap_err();
        assert!(matches!(&err, Error::InvalidParams(m) if m.contains("Assumption 1 violated")));
        let bad = RawParams { b: 0.5, ..RawParams::baseline() };
        assert!(matches!(bad.validate(), Err(Error::InvalidParams(m)) if m.contains("b > a")));
        let bad = RawParams { c: -0.1, ..RawParams::baseline() };
        assert!(matches!(bad.validate(), Err(Error::InvalidParams(m)) if m.contains("c > 0")));
        // late R exactly at the safe payoff: neither ordering
        let bad = RawParams { u_h: 0.7, ..RawParams::baseline() };
        assert!(matches!(bad.validate(), Err(Error::InvalidParams(m)) if m.contains("payoff ordering")));
    }

    #[test]
    fn belief_examples() {
        let m = baseline();
        assert_eq!(belief_at(0.5, 0.0, &m), 0.5);
        assert!((belief_at(0.5, 5.0, &m) - 0.731_058_578_630_004_9).abs() < 1e-14);
        assert_eq!(belief_at(1.0, 7.0, &m), 1.0);
        assert_eq!(belief_at(0.0, 7.0, &m), 0.0);
        assert_eq!(Belief::new(1.0).odds(), f64::INFINITY);
    }

    #[test]
    fn survival_examples() {
        let m = baseline();
        assert_eq!(no_signal_prob(0.5, 0.0, &m), 1.0);
        assert!((no_signal_prob(0.5, 1.0, &m) - 0.499_070_300_105_624).abs() < 1e-14);
        assert_eq!(no_signal_prob(1.0, 3.0, &m), libm::exp(-0.6 * 3.0));
    }

    #[test]
    fn r_payoff_examples() {
        let m = baseline();
        assert_eq!(r_payoff(0.75, 0.0, 0.0, &m), 0.5);
        assert_eq!(r_payoff(0.5, 0.0, 0.0, &m), 0.0);
        let p = 0.3;
        let expect = p * (1.0 - 0.7) + (1.0 - p) * (-1.0 - 0.7);
        assert!((r_payoff(p, 1.0, 1.0, &m) - expect).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn belief_solves_its_ode(p0 in 0.01f64..0.99, t in 0.0f64..20.0) {
            let m = baseline();
            let h = 1e-5;
            let d = (belief_at(p0, t + h, &m) - belief_at(p0, t - h.min(t), &m)) / (h + h.min(t));
            let p = belief_at(p0, t, &m);
            prop_assert!((d - 0.2 * p * (1.0 - p)).abs() < 1e-6);
        }

        #[test]
        fn belief_is_monotone(p0 in 0.0f64..1.0, dp in 0.0f64..0.1, t in 0.0f64..30.0, dt in 0.0f64..5.0) {
            let m = baseline();
            let p1 = (p0 + dp).min(1.0);
            prop_assert!(belief_at(p1, t, &m) >= belief_at(p0, t, &m));
            prop_assert!(belief_at(p0, t + dt, &m) >= belief_at(p0, t, &m));
        }

        #[test]
        fn survival_is_closed_form_and_nonincreasing(p0 in 0.0f64..1.0, t in 0.0f64..30.0, dt in 0.0f64..5.0) {
            let m = baseline();
            let pi = no_signal_prob(p0, t, &m);
            prop_assert_eq!(pi, p0 * libm::exp(-0.6 * t) + (1.0 - p0) * libm::exp(-0.8 * t));
            prop_assert!(no_signal_prob(p0, t + dt, &m) <= pi);
            prop_assert!(pi > 0.0 && pi <= 1.0);
        }

        #[test]
        fn r_payoff_affine_and_decreasing(p in 0.0f64..1.0, fh in 0.0f64..1.0, fl in 0.0f64..1.0, d in 0.0f64..0.5) {
            let m = baseline();
            let v = r_payoff(p, fh, fl, &m);
            prop_assert!(r_payoff(p, (fh + d).min(1.0), fl, &m) <= v);
            prop_assert!(r_payoff(p, fh, (fl + d).min(1.0), &m) <= v);
            let mid = r_payoff(0.5 * p + 0.25, fh, fl, &m);
            let avg = 0.5 * (r_payoff(p, fh, fl, &m) + r_payoff(0.5, fh, fl, &m));
            prop_assert!((mid - avg).abs() < 1e-12);
        }
    }
}
