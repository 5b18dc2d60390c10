//! Best-reply checks against a fixed rival strategy: the payoff of every
//! deterministic stop time, computed from the rival's induced stopping
//! distributions.

use alloc::vec::Vec;

use crate::equilibrium::EquilibriumProfile;
use crate::model::{belief_at, no_signal_prob, ModelParams};
use crate::numerics::{derivative_at, interp, Controls};
use crate::strategy::{Action, MixedStrategy};

/// Rival's probability of having taken `R` (`f_*`) or `S` (`g_*`) by `t`,
/// per state. A time carrying an interior atom appears twice: the first copy
/// holds the left limit.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InducedStopDistribution {
    pub t: Vec<f64>,
    pub f_h: Vec<f64>,
    pub f_l: Vec<f64>,
    pub g_h: Vec<f64>,
    pub g_l: Vec<f64>,
    pub atom_r0: f64,
    pub atom_s0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Point {
    f_h: f64,
    f_l: f64,
    g_h: f64,
    g_l: f64,
}

fn atom_at(s: &MixedStrategy, t: f64, action: Action) -> f64 {
    s.interior_atoms.iter().filter(|x| x.t == t && x.action == action).map(|x| x.mass).sum()
}

/// Evaluates the rival's distributions at `t`; `left` drops interior atoms
/// sitting exactly at `t`.
fn point(s: &MixedStrategy, t: f64, left: bool, params: &ModelParams) -> Point {
    let (a, b) = (params.a, params.b);
    let (ea, eb) = (libm::exp(-a * t), libm::exp(-b * t));
    let (mut rho, mut sigma) = (s.rho(t), s.sigma(t));
    let mut f_l = s.atom_r0;
    let mut g_h = s.atom_s0;
    // breakthroughs pre-empt the plan while no S has been planned
    let mut exposed = (1.0 - s.atom_s0) * (1.0 - ea);
    if let Some(p) = &s.path {
        if t > p.t_hat {
            f_l += if t >= p.t_bar { *p.f_l.last().unwrap() } else { interp(&p.t, &p.f_l, t) };
        }
    }
    for x in &s.interior_atoms {
        if x.t > t || (left && x.t == t) {
            continue;
        }
        match x.action {
            Action::R => f_l += x.mass * libm::exp(-b * x.t),
            Action::S => {
                g_h += x.mass * libm::exp(-a * x.t);
                exposed -= x.mass * (libm::exp(-a * x.t) - ea);
            }
        }
    }
    if left && t > 0.0 {
        rho -= atom_at(s, t, Action::R);
        sigma -= atom_at(s, t, Action::S);
    }
    let f_h = ea * rho + exposed;
    let g_l = 1.0 - eb * (1.0 - rho - sigma) - f_l;
    Point { f_h, f_l, g_h, g_l }
}

/// Grid for sweeps and distributions: uniform `step` up to `t_end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepGrid {
    pub step: f64,
    pub t_end: f64,
}

/// Room left after the rival's last event for deviations that keep learning.
pub const SWEEP_MARGIN: f64 = 40.0;

impl SweepGrid {
    pub fn for_strategy(s: &MixedStrategy, ctl: &Controls) -> Self {
        SweepGrid { step: ctl.verify_step, t_end: s.last_event() + SWEEP_MARGIN }
    }
}

/// Distributions induced by `s` on the union of a uniform grid, the path
/// nodes and the event times.
pub fn induced_distribution(s: &MixedStrategy, params: &ModelParams, grid: &SweepGrid) -> InducedStopDistribution {
    let n = libm::ceil(grid.t_end / grid.step) as usize;
    let mut ts: Vec<f64> = (0..=n).map(|i| i as f64 * grid.step).collect();
    if let Some(p) = &s.path {
        ts.extend(p.t.iter().copied());
    }
    let events = s.event_times();
    ts.extend(events.iter().copied());
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|x, y| *x - *y < 1e-12 && !events.contains(x));
    let mut d = InducedStopDistribution {
        t: Vec::with_capacity(ts.len()),
        f_h: Vec::with_capacity(ts.len()),
        f_l: Vec::with_capacity(ts.len()),
        g_h: Vec::with_capacity(ts.len()),
        g_l: Vec::with_capacity(ts.len()),
        atom_r0: s.atom_r0,
        atom_s0: s.atom_s0,
    };
    let mut push = |t: f64, q: Point| {
        d.t.push(t);
        d.f_h.push(q.f_h);
        d.f_l.push(q.f_l);
        d.g_h.push(q.g_h);
        d.g_l.push(q.g_l);
    };
    for &t in &ts {
        if t > 0.0 && s.interior_atoms.iter().any(|x| x.t == t) {
            push(t, point(s, t, true, params));
        }
        push(t, point(s, t, false, params));
    }
    d
}

/// Payoff of stopping at `T` with the chosen action, precomputed on the
/// distribution grid.
#[derive(Debug, Clone)]
pub struct StopValue<'a> {
    dist: &'a InducedStopDistribution,
    params: &'a ModelParams,
    p0: f64,
    flow: Vec<f64>,
    cum: Vec<f64>,
}

/// Terminal action for a deterministic stop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FinalAction {
    R,
    S,
    Best,
}

impl<'a> StopValue<'a> {
    pub fn new(dist: &'a InducedStopDistribution, p0: f64, params: &'a ModelParams) -> Self {
        let flow: Vec<f64> = dist.t.iter().zip(&dist.f_h).map(|(&t, &fh)| flow_at(t, fh, p0, params)).collect();
        let mut cum = Vec::with_capacity(flow.len());
        cum.push(0.0);
        for i in 1..flow.len() {
            cum.push(cum[i - 1] + 0.5 * (dist.t[i] - dist.t[i - 1]) * (flow[i] + flow[i - 1]));
        }
        StopValue { dist, params, p0, flow, cum }
    }

    /// Flow payoff accumulated up to `t` (relative to `u_S`).
    pub fn accumulated(&self, t: f64) -> f64 {
        self.locate(t).2
    }

    /// `(left values, right values, accumulated flow)` at `t`.
    fn locate(&self, t: f64) -> (Point, Point, f64) {
        let d = self.dist;
        let at = |i: usize| Point { f_h: d.f_h[i], f_l: d.f_l[i], g_h: d.g_h[i], g_l: d.g_l[i] };
        if t <= 0.0 {
            return (Point { f_h: 0.0, f_l: 0.0, g_h: 0.0, g_l: 0.0 }, at(0), 0.0);
        }
        let last = d.t.len() - 1;
        if t >= d.t[last] {
            let l = if last > 0 && d.t[last - 1] == d.t[last] { last - 1 } else { last };
            return (at(l), at(last), self.cum[last]);
        }
        let k = d.t.partition_point(|&s| s <= t) - 1;
        if d.t[k] == t {
            let l = if k > 0 && d.t[k - 1] == t { k - 1 } else { k };
            return (at(l), at(k), self.cum[k]);
        }
        let w = (t - d.t[k]) / (d.t[k + 1] - d.t[k]);
        let mix = |x: &[f64]| x[k] + w * (x[k + 1] - x[k]);
        let q = Point { f_h: mix(&d.f_h), f_l: mix(&d.f_l), g_h: mix(&d.g_h), g_l: mix(&d.g_l) };
        let phi = flow_at(t, q.f_h, self.p0, self.params);
        (q, q, self.cum[k] + 0.5 * (t - d.t[k]) * (self.flow[k] + phi))
    }

    /// Payoff of `R` at `t` given no signal, relative to `u_S`; an atom of
    /// the rival exactly at `t` is a clash.
    fn r_at(&self, t: f64, left: Point, right: Point) -> f64 {
        let m = self.params;
        let p = belief_at(self.p0, t, m);
        let jump_h = right.f_h - left.f_h;
        let jump_l = right.f_l - left.f_l;
        p * (m.uh - left.f_h * m.dbh - jump_h * m.duh) + (1.0 - p) * (m.ul - left.f_l * m.dbl - jump_l * m.dul)
    }

    /// `Ṽ(T)` and the action taken at `T`.
    pub fn value(&self, t: f64, action: FinalAction) -> (f64, Action) {
        let (left, right, acc) = self.locate(t);
        let ur = self.r_at(t, left, right);
        let (u, act) = match action {
            FinalAction::R => (ur, Action::R),
            FinalAction::S => (0.0, Action::S),
            FinalAction::Best => {
                if ur >= 0.0 {
                    (ur, Action::R)
                } else {
                    (0.0, Action::S)
                }
            }
        };
        let pi = no_signal_prob(self.p0, t.max(0.0), self.params);
        (self.params.us + acc + pi * u, act)
    }

    /// Value of playing `s` against the rival. Mass the plan leaves
    /// unassigned is treated as stopping with `S` at the end of the grid.
    pub fn strategy_value(&self, s: &MixedStrategy) -> f64 {
        let v = |t: f64, a: Action| {
            let fa = match a {
                Action::R => FinalAction::R,
                Action::S => FinalAction::S,
            };
            self.value(t, fa).0
        };
        let mut total = s.atom_r0 * v(0.0, Action::R) + s.atom_s0 * v(0.0, Action::S);
        for x in &s.interior_atoms {
            total += x.mass * v(x.t, x.action);
        }
        if let Some(p) = &s.path {
            let vals: Vec<f64> = p.t.iter().map(|&t| v(t, Action::R)).collect();
            for i in 1..p.t.len() {
                total += (p.rho[i] - p.rho[i - 1]) * 0.5 * (vals[i] + vals[i - 1]);
            }
            // whatever the integrator left short of the target
            total += (1.0 - p.beta - p.rho.last().unwrap()) * vals.last().unwrap();
        }
        let rest = 1.0 - s.total_mass();
        if rest > 0.0 {
            total += rest * v(*self.dist.t.last().unwrap(), Action::S);
        }
        total
    }
}

/// Flow at `t` along the no-signal history, relative to `u_S`: a
/// breakthrough triggers the better of `R` (second if the rival took `R`
/// first) and `S`; a breakdown triggers `S`.
fn flow_at(t: f64, f_h: f64, p0: f64, m: &ModelParams) -> f64 {
    let prize = (m.uh - f_h * m.dbh).max(0.0);
    p0 * libm::exp(-m.a * t) * m.a * prize - m.c * no_signal_prob(p0, t, m)
}

/// `Ṽ(T)` for a single stop time.
pub fn stop_value(t: f64, action: FinalAction, dist: &InducedStopDistribution, p0: f64, params: &ModelParams) -> f64 {
    StopValue::new(dist, p0, params).value(t, action).0
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BestResponseReport {
    pub t: Vec<f64>,
    pub value: Vec<f64>,
    pub action: Vec<Action>,
    pub max_value: f64,
    pub argmax: f64,
    pub argmax_action: Action,
    /// Grid times within `ARGMAX_TOL` of the maximum.
    pub argmax_set: Vec<f64>,
    pub candidate_value: f64,
    /// Smallest payoff over the points the candidate mixes over.
    pub support_min: f64,
    pub deviation_gain: f64,
    pub eps: f64,
    pub certified: bool,
}

pub const ARGMAX_TOL: f64 = 1e-9;

/// Payoff of every deterministic stop on the grid (better action at the
/// stop) against `opponent`, compared with the value of copying it.
pub fn best_response_sweep(
    opponent: &MixedStrategy,
    p0: f64,
    params: &ModelParams,
    grid: &SweepGrid,
    eps: f64,
) -> BestResponseReport {
    let dist = induced_distribution(opponent, params, grid);
    let sv = StopValue::new(&dist, p0, params);
    let mut t: Vec<f64> = dist.t.clone();
    t.dedup();
    let (value, action): (Vec<f64>, Vec<Action>) = t.iter().map(|&s| sv.value(s, FinalAction::Best)).unzip();
    let mut best = 0;
    for i in 1..value.len() {
        if value[i] > value[best] {
            best = i;
        }
    }
    let max_value = value[best];
    let argmax_set = t.iter().zip(&value).filter(|(_, &v)| v >= max_value - ARGMAX_TOL).map(|(&s, _)| s).collect();
    let candidate_value = sv.strategy_value(opponent);
    let support_min = support_values(opponent, &sv).into_iter().fold(f64::INFINITY, f64::min);
    let deviation_gain = max_value - candidate_value;
    let certified = deviation_gain <= eps && max_value - support_min <= eps;
    BestResponseReport {
        argmax: t[best],
        argmax_action: action[best],
        t,
        value,
        action,
        max_value,
        argmax_set,
        candidate_value,
        support_min,
        deviation_gain,
        eps,
        certified,
    }
}

fn support_values(s: &MixedStrategy, sv: &StopValue<'_>) -> Vec<f64> {
    let mut out = Vec::new();
    if s.atom_r0 > 0.0 {
        out.push(sv.value(0.0, FinalAction::R).0);
    }
    if s.atom_s0 > 0.0 {
        out.push(sv.value(0.0, FinalAction::S).0);
    }
    for x in &s.interior_atoms {
        let fa = if x.action == Action::R { FinalAction::R } else { FinalAction::S };
        out.push(sv.value(x.t, fa).0);
    }
    if let Some(p) = &s.path {
        out.extend(p.t.iter().map(|&t| sv.value(t, FinalAction::R).0));
    }
    out
}

/// Best-reply certificate of a symmetric profile.
pub fn check_equilibrium(
    profile: &EquilibriumProfile,
    eps: f64,
    params: &ModelParams,
    ctl: &Controls,
) -> BestResponseReport {
    let grid = SweepGrid::for_strategy(&profile.strategy, ctl);
    best_response_sweep(&profile.strategy, profile.prior, params, &grid, eps)
}

/// Below this no-signal probability the conditional value is dominated by
/// cancellation and the residual is not evaluated.
const MIN_SURVIVAL: f64 = 1e-8;

/// `max{A + B - c, U - V}` with `A = p a (X_H - V) + (1-p) b (0 - V)` the
/// expected jump from a signal and `B = V'` the drift along the no-signal
/// history; zero wherever the value function is smooth.
pub fn hjb_expression(p: f64, x_h: f64, v: f64, dv: f64, u: f64, params: &ModelParams) -> f64 {
    let a_term = p * params.a * (x_h - v) + (1.0 - p) * params.b * (-v);
    (a_term + dv - params.c).max(u - v)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HjbReport {
    pub t: Vec<f64>,
    /// Absolute residual; `NaN` at excluded nodes.
    pub residual: Vec<f64>,
    /// Whether the node lies where continuing is strictly better than stopping.
    pub learning: Vec<bool>,
    pub max_learning: f64,
    pub max_stopping: f64,
    pub excluded: usize,
}

/// Residual of the optimality condition along the continuation value
/// `V(t) = (sup_{T >= t} Ṽ(T) - I(t)) / π_t`, `I` the flow accumulated by
/// `t`. Nodes within `exclusion` of a kink of the rival's plan (and the last
/// two nodes, and nodes where a signal has almost surely arrived) are
/// excluded.
pub fn hjb_residual(profile: &EquilibriumProfile, params: &ModelParams, ctl: &Controls, exclusion: f64) -> HjbReport {
    let grid = SweepGrid::for_strategy(&profile.strategy, ctl);
    let dist = induced_distribution(&profile.strategy, params, &grid);
    let p0 = profile.prior;
    let sv = StopValue::new(&dist, p0, params);
    let mut t = dist.t.clone();
    t.dedup();
    let n = t.len();
    let vals: Vec<(f64, Action)> = t.iter().map(|&s| sv.value(s, FinalAction::Best)).collect();
    let mut sup = alloc::vec![0.0; n];
    let mut run = f64::NEG_INFINITY;
    for i in (0..n).rev() {
        run = run.max(vals[i].0 - params.us);
        sup[i] = run;
    }
    let v: Vec<f64> = (0..n).map(|i| (sup[i] - sv.accumulated(t[i])) / no_signal_prob(p0, t[i], params)).collect();
    let kinks = profile.strategy.event_times();
    let mut residual = alloc::vec![f64::NAN; n];
    let mut learning = alloc::vec![false; n];
    let (mut max_learning, mut max_stopping, mut excluded) = (0.0f64, 0.0f64, 0);
    for i in 1..n.saturating_sub(2) {
        if kinks.iter().any(|&k| (t[i] - k).abs() <= exclusion) {
            excluded += 1;
            continue;
        }
        let pi = no_signal_prob(p0, t[i], params);
        if pi < MIN_SURVIVAL {
            excluded += 1;
            continue;
        }
        let u = (vals[i].0 - params.us - sv.accumulated(t[i])) / pi;
        let (left, _, _) = sv.locate(t[i]);
        let p = belief_at(p0, t[i], params);
        let x_h = (params.uh - left.f_h * params.dbh).max(0.0);
        let dv = derivative_at(&t, &v, i);
        let r = hjb_expression(p, x_h, v[i], dv, u, params).abs();
        residual[i] = r;
        learning[i] = v[i] - u > 1e-9;
        if learning[i] {
            max_learning = max_learning.max(r);
        } else {
            max_stopping = max_stopping.max(r);
        }
    }
    HjbReport { t, residual, learning, max_learning, max_stopping, excluded }
}
