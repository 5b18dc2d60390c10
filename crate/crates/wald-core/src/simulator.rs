//! Monte Carlo play of the continuous-time game between two mixed
//! strategies.
//!
//! Replication `k` draws the state and tie-breaking coins from stream
//! `3k`, player one from `3k + 1` and player two from `3k + 2`, all under the
//! same seed, so the report does not depend on execution order.

use alloc::format;
use alloc::vec::Vec;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::equilibrium::EquilibriumProfile;
use crate::model::ModelParams;
use crate::numerics::pairwise_sum;
use crate::strategy::{Action, MixedStrategy};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum State {
    H,
    L,
}

/// What ended a player's learning.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum StopCause {
    Plan,
    Breakthrough,
    Breakdown,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Stop {
    pub t: f64,
    pub action: Action,
    pub cause: StopCause,
}

/// Uniform on `[0, 1)` with 53 random bits.
fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn exponential(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    -libm::log(1.0 - uniform(rng)) / rate
}

/// Planned stop for a uniform draw `u`: atoms at zero first, then interior
/// atoms and the path in time order. Unplanned mass never stops.
fn planned_stop(s: &MixedStrategy, u: f64) -> (f64, Action) {
    if u < s.atom_r0 {
        return (0.0, Action::R);
    }
    if u < s.atom_r0 + s.atom_s0 {
        return (0.0, Action::S);
    }
    let v = u - s.atom_r0 - s.atom_s0;
    let path_mass = |t: f64| s.path.as_ref().map_or(0.0, |p| p.rho_at(t));
    let mut atoms: Vec<_> = s.interior_atoms.iter().collect();
    atoms.sort_by(|x, y| x.t.total_cmp(&y.t));
    let mut before = 0.0;
    for x in atoms {
        let reached = before + path_mass(x.t);
        if v < reached {
            return (invert_path(s, v - before), Action::R);
        }
        if v < reached + x.mass {
            return (x.t, x.action);
        }
        before += x.mass;
    }
    if v < before + path_mass(f64::INFINITY) {
        return (invert_path(s, v - before), Action::R);
    }
    (f64::INFINITY, Action::S)
}

/// Time at which the path's cumulative mass first exceeds `v`, linear
/// between nodes.
fn invert_path(s: &MixedStrategy, v: f64) -> f64 {
    let Some(p) = &s.path else { return f64::INFINITY };
    let k = p.rho.partition_point(|&r| r <= v);
    if k == 0 {
        return p.t_hat;
    }
    if k == p.rho.len() {
        return p.t_bar;
    }
    let (r0, r1) = (p.rho[k - 1], p.rho[k]);
    p.t[k - 1] + (v - r0) / (r1 - r0) * (p.t[k] - p.t[k - 1])
}

/// One player's realized stop: the earlier of the first revealing signal
/// and the planned stop.
pub fn sample_path(s: &MixedStrategy, state: State, rng: &mut ChaCha8Rng, params: &ModelParams) -> Stop {
    let u = uniform(rng);
    let (plan_t, plan_action) = planned_stop(s, u);
    let (rate, signal_action, cause) = match state {
        State::H => (params.a, Action::R, StopCause::Breakthrough),
        State::L => (params.b, Action::S, StopCause::Breakdown),
    };
    let signal = exponential(rng, rate);
    if signal < plan_t {
        Stop { t: signal, action: signal_action, cause }
    } else {
        Stop { t: plan_t, action: plan_action, cause: StopCause::Plan }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimOptions {
    pub reps: u64,
    pub seed: u64,
    /// Times at which empirical CDFs are reported.
    pub grid: Vec<f64>,
}

impl SimOptions {
    /// Uniform reporting grid `0, step, ..., <= t_end`.
    pub fn with_grid(reps: u64, seed: u64, step: f64, t_end: f64) -> Self {
        let n = libm::floor(t_end / step + 1e-9) as usize;
        SimOptions { reps, seed, grid: (0..=n).map(|i| i as f64 * step).collect() }
    }
}

/// Empirical stopping CDFs of one player, per state.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EmpiricalCdf {
    pub f_h: Vec<f64>,
    pub f_l: Vec<f64>,
    pub g_l: Vec<f64>,
    pub n_h: u64,
    pub n_l: u64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimulationReport {
    pub reps: u64,
    pub seed: u64,
    pub mean_payoff: [f64; 2],
    pub std_err: [f64; 2],
    pub mean_stop_time: [f64; 2],
    pub mean_cost: [f64; 2],
    pub grid: Vec<f64>,
    pub cdf: [EmpiricalCdf; 2],
    /// Share of replications in which each player took `R` strictly first.
    pub first_mover: [f64; 2],
    /// Share of replications with both players taking `R` at time zero.
    pub tie_zero: f64,
    /// Floating-point coincidences at positive times, broken by a coin.
    pub coin_ties: u64,
    /// Among planned `R` stops, the share that came first, by state
    /// (H, L), pooled over players.
    pub planned_r_won: [f64; 2],
    pub planned_r_count: [u64; 2],
}

#[derive(Clone, Copy)]
struct Outcome {
    state: State,
    stops: [Stop; 2],
    payoffs: [f64; 2],
    /// Index of the strict first `R` taker.
    first: Option<usize>,
    tie_zero: bool,
    coin_tie: bool,
}

fn prizes(state: State, params: &ModelParams) -> (f64, f64, f64) {
    let m = params;
    let (u, dbar, dund) = match state {
        State::H => (m.uh, m.dbh, m.duh),
        State::L => (m.ul, m.dbl, m.dul),
    };
    (m.us + u, m.us + u - dbar, m.us + u - dund)
}

fn play(strategies: [&MixedStrategy; 2], p0: f64, params: &ModelParams, base: &ChaCha8Rng, rep: u64) -> Outcome {
    let stream = |k: u64| {
        let mut r = base.clone();
        r.set_stream(rep * 3 + k);
        r
    };
    let mut nature = stream(0);
    let state = if uniform(&mut nature) < p0 { State::H } else { State::L };
    let stops = [
        sample_path(strategies[0], state, &mut stream(1), params),
        sample_path(strategies[1], state, &mut stream(2), params),
    ];
    let (first, second, clash) = prizes(state, params);
    let took_r = |i: usize| stops[i].action == Action::R;
    let mut winner = None;
    let mut tie_zero = false;
    let mut coin_tie = false;
    let mut gross = [params.us; 2];
    match (took_r(0), took_r(1)) {
        (true, false) => {
            gross[0] = first;
            winner = Some(0);
        }
        (false, true) => {
            gross[1] = first;
            winner = Some(1);
        }
        (true, true) => {
            let (t0, t1) = (stops[0].t, stops[1].t);
            let w = if t0 == t1 {
                if t0 == 0.0 {
                    tie_zero = true;
                    None
                } else {
                    coin_tie = true;
                    Some(if uniform(&mut nature) < 0.5 { 0 } else { 1 })
                }
            } else {
                Some(if t0 < t1 { 0 } else { 1 })
            };
            match w {
                None => gross = [clash, clash],
                Some(i) => {
                    gross[i] = first;
                    gross[1 - i] = second;
                }
            }
            winner = w;
        }
        (false, false) => {}
    }
    let payoffs = [gross[0] - params.c * stops[0].t, gross[1] - params.c * stops[1].t];
    Outcome { state, stops, payoffs, first: winner, tie_zero, coin_tie }
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1.0);
    (mean, libm::sqrt(var / n))
}

fn share_by(sorted: &[f64], grid: &[f64], n: u64) -> Vec<f64> {
    grid.iter()
        .map(|&t| if n == 0 { 0.0 } else { sorted.partition_point(|&x| x <= t) as f64 / n as f64 })
        .collect()
}

/// Plays `reps` independent rounds between `strategies[0]` and
/// `strategies[1]` at prior `p0`.
pub fn simulate(
    strategies: [&MixedStrategy; 2],
    p0: f64,
    params: &ModelParams,
    opts: &SimOptions,
) -> Result<SimulationReport> {
    if opts.reps == 0 {
        return Err(Error::InvalidParams("simulation needs at least one replication".into()));
    }
    if !(0.0..=1.0).contains(&p0) {
        return Err(Error::InvalidParams(format!("prior must lie in [0, 1] (p0 = {p0})")));
    }
    for s in strategies {
        s.validate()?;
    }
    let base = ChaCha8Rng::seed_from_u64(opts.seed);
    let outcomes: Vec<Outcome> = (0..opts.reps).map(|k| play(strategies, p0, params, &base, k)).collect();
    let n = opts.reps as f64;

    let mut mean_payoff = [0.0; 2];
    let mut std_err = [0.0; 2];
    let mut mean_stop_time = [0.0; 2];
    let mut mean_cost = [0.0; 2];
    let mut first_mover = [0.0; 2];
    let mut cdf = [None, None];
    for i in 0..2 {
        let pay: Vec<f64> = outcomes.iter().map(|o| o.payoffs[i]).collect();
        (mean_payoff[i], std_err[i]) = mean_and_se(&pay);
        let times: Vec<f64> = outcomes.iter().map(|o| o.stops[i].t).collect();
        mean_stop_time[i] = pairwise_sum(&times) / n;
        let costs: Vec<f64> = times.iter().map(|t| params.c * t).collect();
        mean_cost[i] = pairwise_sum(&costs) / n;
        first_mover[i] = outcomes.iter().filter(|o| o.first == Some(i)).count() as f64 / n;

        let pick = |state: State, action: Action| {
            let mut v: Vec<f64> = outcomes
                .iter()
                .filter(|o| o.state == state && o.stops[i].action == action)
                .map(|o| o.stops[i].t)
                .collect();
            v.sort_by(f64::total_cmp);
            v
        };
        let n_h = outcomes.iter().filter(|o| o.state == State::H).count() as u64;
        let n_l = opts.reps - n_h;
        cdf[i] = Some(EmpiricalCdf {
            f_h: share_by(&pick(State::H, Action::R), &opts.grid, n_h),
            f_l: share_by(&pick(State::L, Action::R), &opts.grid, n_l),
            g_l: share_by(&pick(State::L, Action::S), &opts.grid, n_l),
            n_h,
            n_l,
        });
    }

    let mut won = [0u64; 2];
    let mut planned = [0u64; 2];
    for o in &outcomes {
        let w = match o.state {
            State::H => 0,
            State::L => 1,
        };
        for i in 0..2 {
            let st = o.stops[i];
            if st.cause == StopCause::Plan && st.action == Action::R && st.t > 0.0 {
                planned[w] += 1;
                if o.first == Some(i) {
                    won[w] += 1;
                }
            }
        }
    }
    let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let [c0, c1] = cdf;
    Ok(SimulationReport {
        reps: opts.reps,
        seed: opts.seed,
        mean_payoff,
        std_err,
        mean_stop_time,
        mean_cost,
        grid: opts.grid.clone(),
        cdf: [c0.unwrap(), c1.unwrap()],
        first_mover,
        tie_zero: outcomes.iter().filter(|o| o.tie_zero).count() as f64 / n,
        coin_ties: outcomes.iter().filter(|o| o.coin_tie).count() as u64,
        planned_r_won: [ratio(won[0], planned[0]), ratio(won[1], planned[1])],
        planned_r_count: planned,
    })
}

/// Both players follow the profile's strategy.
pub fn simulate_profile(profile: &EquilibriumProfile, params: &ModelParams, opts: &SimOptions) -> Result<SimulationReport> {
    let s = &profile.strategy;
    simulate([s, s], profile.prior, params, opts)
}
