//! Two-period version of the game, solved by exact enumeration.
//!
//! At time 0 a player takes `R`, takes `S`, or pays `c` for a signal that
//! reveals H with probability `a` and L with probability `b`. At time 1
//! everyone still undecided must act. Two `R` actions in the same period
//! clash and both pay the simultaneous penalty.

use alloc::format;
use alloc::vec::Vec;

use crate::model::{odds, prob_from_odds, ModelParams};
use crate::numerics::bisect;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Opponent {
    S0,
    R0,
    Learn,
}

impl Opponent {
    pub const ALL: [Opponent; 3] = [Opponent::S0, Opponent::R0, Opponent::Learn];

    pub fn name(self) -> &'static str {
        match self {
            Opponent::S0 => "S0",
            Opponent::R0 => "R0",
            Opponent::Learn => "Learn",
        }
    }
}

/// Payoffs and signal probabilities of the two-period game, relative to
/// `u_S`. The cost may be set to zero here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPeriodGame {
    pub first: [f64; 2],
    pub second: [f64; 2],
    pub clash: [f64; 2],
    pub reveal: [f64; 2],
    pub c: f64,
    pub u_s: f64,
}

const H: usize = 0;
const L: usize = 1;

impl TwoPeriodGame {
    pub fn from_params(m: &ModelParams) -> Result<Self> {
        if !(m.a < 1.0 && m.b < 1.0) {
            return Err(Error::InvalidParams(format!(
                "two-period signal probabilities must be below one (a = {}, b = {})",
                m.a, m.b
            )));
        }
        Ok(TwoPeriodGame {
            first: [m.uh, m.ul],
            second: [m.uh - m.dbh, m.ul - m.dbl],
            clash: [m.uh - m.duh, m.ul - m.dul],
            reveal: [m.a, m.b],
            c: m.c,
            u_s: m.us,
        })
    }

    /// Belief after a signal that did not reveal the state.
    pub fn posterior(&self, p0: f64) -> f64 {
        prob_from_odds((1.0 - self.reveal[H]) / (1.0 - self.reveal[L]) * odds(p0))
    }

    /// Payoff of `R` at time 1 for a player without a signal when the rival
    /// learned and, lacking a signal, takes `R` with probability `mix`.
    fn late_r_vs_learner(&self, p0: f64, mix: f64) -> f64 {
        let prior = [p0, 1.0 - p0];
        let (mut num, mut den) = (0.0, 0.0);
        for w in [H, L] {
            let mass = prior[w] * (1.0 - self.reveal[w]);
            let rival_r = if w == H { self.reveal[w] } else { 0.0 } + (1.0 - self.reveal[w]) * mix;
            num += mass * (self.first[w] - rival_r * (self.first[w] - self.clash[w]));
            den += mass;
        }
        num / den
    }

    /// Symmetric `R` probability of two learners after no signal.
    pub fn learner_mix(&self, p0: f64) -> f64 {
        let vr = self.late_r_vs_learner(p0, 1.0);
        let vs = self.late_r_vs_learner(p0, 0.0);
        if vr >= 0.0 {
            1.0
        } else if vs <= 0.0 {
            0.0
        } else {
            vs / (vs - vr)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TwoPeriodPayoffs {
    pub p0: f64,
    pub pay_r0: f64,
    pub pay_s0: f64,
    pub pay_learn: f64,
    /// Total probability of the enumerated learning branches.
    pub branch_mass: f64,
    /// Rival learner's `R` probability after no signal.
    pub rival_mix: Option<f64>,
}

pub fn two_period_payoffs(p0: f64, opp: Opponent, game: &TwoPeriodGame) -> TwoPeriodPayoffs {
    let prior = [p0, 1.0 - p0];
    let g = game;
    let rival_mix = (opp == Opponent::Learn).then(|| g.learner_mix(p0));
    let mix = rival_mix.unwrap_or(0.0);

    let pay_r0: f64 = [H, L]
        .iter()
        .map(|&w| {
            prior[w]
                * match opp {
                    Opponent::R0 => g.clash[w],
                    Opponent::S0 | Opponent::Learn => g.first[w],
                }
        })
        .sum();

    // R payoff at time 1 in state w given what the rival saw
    let late_r = |w: usize, rival_signal: bool| match opp {
        Opponent::S0 => g.first[w],
        Opponent::R0 => g.second[w],
        Opponent::Learn => {
            let rival_r = if rival_signal { if w == H { 1.0 } else { 0.0 } } else { mix };
            g.first[w] - rival_r * (g.first[w] - g.clash[w])
        }
    };

    let mut pay_learn = -g.c;
    let mut branch_mass = 0.0;
    let mut none_value = 0.0;
    for w in [H, L] {
        for own_signal in [true, false] {
            let p_own = if own_signal { g.reveal[w] } else { 1.0 - g.reveal[w] };
            let rival: Vec<(bool, f64)> = if opp == Opponent::Learn {
                alloc::vec![(true, g.reveal[w]), (false, 1.0 - g.reveal[w])]
            } else {
                alloc::vec![(false, 1.0)]
            };
            for (rival_signal, p_rival) in rival {
                let mass = prior[w] * p_own * p_rival;
                branch_mass += mass;
                let r = late_r(w, rival_signal);
                if own_signal {
                    // the state is known: R in H, S in L
                    pay_learn += mass * if w == H { r.max(0.0) } else { 0.0 };
                } else {
                    none_value += mass * r;
                }
            }
        }
    }
    // without a signal the learner picks the better action at the posterior
    pay_learn += none_value.max(0.0);

    TwoPeriodPayoffs {
        p0,
        pay_r0: g.u_s + pay_r0,
        pay_s0: g.u_s,
        pay_learn: g.u_s + pay_learn,
        branch_mass,
        rival_mix,
    }
}

/// Priors at which acquiring the signal beats both immediate actions.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LearningInterval {
    /// `None` when learning is never strictly best on the grid.
    pub bounds: Option<(f64, f64)>,
}

impl LearningInterval {
    pub fn width(&self) -> f64 {
        self.bounds.map_or(0.0, |(lo, hi)| hi - lo)
    }

    /// Whether `other` lies inside `self` (an empty interval lies anywhere).
    pub fn contains(&self, other: &LearningInterval) -> bool {
        match (self.bounds, other.bounds) {
            (_, None) => true,
            (None, Some(_)) => false,
            (Some((a, b)), Some((c, d))) => a <= c && d <= b,
        }
    }
}

fn learn_gap(p: f64, opp: Opponent, game: &TwoPeriodGame) -> f64 {
    let x = two_period_payoffs(p, opp, game);
    x.pay_learn - x.pay_r0.max(x.pay_s0)
}

/// Learning interval found on a uniform prior grid of `n` interior points
/// and refined by bisection at both ends.
pub fn two_period_regions(opp: Opponent, game: &TwoPeriodGame, n: usize) -> LearningInterval {
    let grid: Vec<f64> = (1..=n).map(|i| i as f64 / (n + 1) as f64).collect();
    let inside: Vec<usize> = (0..n).filter(|&i| learn_gap(grid[i], opp, game) > 0.0).collect();
    let (Some(&first), Some(&last)) = (inside.first(), inside.last()) else {
        return LearningInterval { bounds: None };
    };
    let step = 1.0 / (n + 1) as f64;
    let f = |p: f64| learn_gap(p, opp, game);
    let lo = bisect(f, grid[first] - step, grid[first], 1e-15, 200).unwrap_or(grid[first]);
    let hi = bisect(f, grid[last], grid[last] + step, 1e-15, 200).unwrap_or(grid[last]);
    LearningInterval { bounds: Some((lo, hi)) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;

    fn game() -> TwoPeriodGame {
        TwoPeriodGame::from_params(&baseline()).unwrap()
    }

    #[test]
    fn examples_at_one_half() {
        let g = game();
        let s0 = two_period_payoffs(0.5, Opponent::S0, &g);
        assert!(s0.pay_r0.abs() < 1e-15);
        assert!((s0.pay_learn - 0.375).abs() < 1e-12);
        let r0 = two_period_payoffs(0.5, Opponent::R0, &g);
        assert!((r0.pay_r0 + 0.5).abs() < 1e-15);
        assert!((r0.pay_learn - 0.065).abs() < 1e-12);
        let l = two_period_payoffs(0.5, Opponent::Learn, &g);
        assert!(l.pay_r0.abs() < 1e-15);
        assert!((l.pay_learn - 0.137).abs() < 1e-12);
        assert!((g.posterior(0.5) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn branches_sum_to_one() {
        let g = game();
        for opp in Opponent::ALL {
            for p in [0.01, 0.3, 0.77, 0.99] {
                assert!((two_period_payoffs(p, opp, &g).branch_mass - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn intervals_match_reference() {
        let g = game();
        let expect = [
            (Opponent::S0, 0.041_666_666_666_666_666, 0.96875),
            (Opponent::R0, 0.138_888_888_888_888_88, 0.834_558_823_529_411_8),
            (Opponent::Learn, 0.059_523_809_523_809_52, 0.589_843_75),
        ];
        for (opp, lo, hi) in expect {
            let (a, b) = two_period_regions(opp, &g, 2000).bounds.unwrap();
            assert!((a - lo).abs() < 1e-10 && (b - hi).abs() < 1e-10, "{opp:?}: {a} {b}");
        }
    }

    #[test]
    fn free_information_against_a_passive_rival_dominates() {
        let g = TwoPeriodGame { c: 0.0, ..game() };
        for i in 1..100 {
            let x = two_period_payoffs(i as f64 / 100.0, Opponent::S0, &g);
            assert!(x.pay_learn >= x.pay_r0.max(x.pay_s0) - 1e-15);
        }
    }

    #[test]
    fn expensive_signal_is_never_bought() {
        let g = TwoPeriodGame { c: 0.5, ..game() };
        for opp in Opponent::ALL {
            assert_eq!(two_period_regions(opp, &g, 500).bounds, None);
        }
    }

    #[test]
    fn learn_payoff_is_piecewise_linear() {
        // fixed rival behaviour: second differences vanish away from the kink
        let g = game();
        let f = |p: f64| two_period_payoffs(p, Opponent::R0, &g).pay_learn;
        let h = 1e-3;
        let mut kinks = 0;
        for i in 2..998 {
            let p = i as f64 / 1000.0;
            if (f(p + h) - 2.0 * f(p) + f(p - h)).abs() > 1e-12 {
                kinks += 1;
            }
        }
        assert!(kinks <= 2);
    }
}
