//! Root finding, scanning and quadrature helpers.

use crate::{Error, Result};

/// Solver controls shared by every numerical routine.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Controls {
    /// Base step of the equilibrium ODE integrator.
    pub ode_step: f64,
    /// Step of the forward scan used to bracket first crossings.
    pub scan_step: f64,
    /// Absolute tolerance of every bisection.
    pub bisect_tol: f64,
    /// Longest time any scan or integration may run.
    pub horizon: f64,
    /// Uniform refinement step of the verifier's quadrature grid.
    pub verify_step: f64,
    pub max_iter: usize,
}

impl Default for Controls {
    fn default() -> Self {
        Controls {
            ode_step: 1e-4,
            scan_step: 1e-3,
            bisect_tol: 1e-10,
            horizon: 200.0,
            verify_step: 1e-3,
            max_iter: 200,
        }
    }
}

/// Outcome of a bracketed bisection that found no sign change.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoBracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
}

/// Bisection on `[lo, hi]`; requires `f(lo)` and `f(hi)` of opposite sign
/// (a zero at either end is returned directly).
pub fn bisect<F>(mut f: F, lo: f64, hi: f64, tol: f64, max_iter: usize) -> core::result::Result<f64, NoBracket>
where
    F: FnMut(f64) -> f64,
{
    let (mut lo, mut hi) = (lo, hi);
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if !(f_lo.is_finite() && f_hi.is_finite()) || (f_lo > 0.0) == (f_hi > 0.0) {
        return Err(NoBracket { lo, hi, f_lo, f_hi });
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol {
            return Ok(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Smallest `t >= t0` with `g(t) >= 0`: forward scan at `step`, then
/// bisection on the bracketing cell. `None` when no crossing occurs before
/// `horizon`.
pub fn first_crossing<G>(mut g: G, t0: f64, step: f64, horizon: f64, tol: f64, max_iter: usize) -> Option<f64>
where
    G: FnMut(f64) -> f64,
{
    if g(t0) >= 0.0 {
        return Some(t0);
    }
    let mut k: u64 = 0;
    loop {
        let lo = t0 + k as f64 * step;
        if lo >= horizon {
            return None;
        }
        let hi = (t0 + (k + 1) as f64 * step).min(horizon);
        if g(hi) >= 0.0 {
            let (mut lo, mut hi) = (lo, hi);
            for _ in 0..max_iter {
                if hi - lo <= tol {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                if g(mid) >= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Some(hi);
        }
        k += 1;
    }
}

pub(crate) fn crossing_or_err<G>(g: G, what: &'static str, ctl: &Controls) -> Result<f64>
where
    G: FnMut(f64) -> f64,
{
    first_crossing(g, 0.0, ctl.scan_step, ctl.horizon, ctl.bisect_tol, ctl.max_iter)
        .ok_or(Error::NoCrossing { what, horizon: ctl.horizon })
}

pub(crate) fn bisect_or_err<F>(f: F, lo: f64, hi: f64, what: &'static str, ctl: &Controls) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    bisect(f, lo, hi, ctl.bisect_tol, ctl.max_iter).map_err(|nb| Error::NotFound {
        what,
        lo: nb.lo,
        hi: nb.hi,
        lo_value: nb.f_lo,
        hi_value: nb.f_hi,
    })
}

/// Sum with pairwise splitting, so the result does not depend on how the
/// terms were produced as long as their order is fixed.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Index `i` with `xs[i] <= x < xs[i + 1]`, clamped to `[0, len - 2]`.
pub(crate) fn bracket_index(xs: &[f64], x: f64) -> usize {
    let n = xs.len();
    if n < 2 || x <= xs[0] {
        return 0;
    }
    if x >= xs[n - 1] {
        return n - 2;
    }
    match xs.binary_search_by(|v| v.partial_cmp(&x).unwrap_or(core::cmp::Ordering::Less)) {
        Ok(i) => i.min(n - 2),
        Err(i) => i - 1,
    }
}

/// Piecewise-linear interpolation of `ys` over ascending `xs`, flat outside.
pub fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if n == 0 {
        return 0.0;
    }
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let i = bracket_index(xs, x);
    let (x0, x1) = (xs[i], xs[i + 1]);
    if x1 <= x0 {
        return ys[i + 1];
    }
    let w = (x - x0) / (x1 - x0);
    ys[i] + w * (ys[i + 1] - ys[i])
}

/// First derivative at node `i` from the three-point formula on a
/// nonuniform grid (one-sided at the ends).
pub fn derivative_at(xs: &[f64], ys: &[f64], i: usize) -> f64 {
    let n = xs.len();
    debug_assert!(n >= 3);
    let (a, b, c) = if i == 0 {
        (0, 1, 2)
    } else if i == n - 1 {
        (n - 3, n - 2, n - 1)
    } else {
        (i - 1, i, i + 1)
    };
    let (x0, x1, x2) = (xs[a], xs[b], xs[c]);
    let (y0, y1, y2) = (ys[a], ys[b], ys[c]);
    let x = xs[i];
    // derivative of the Lagrange interpolant through the three nodes
    let l0 = ((x - x1) + (x - x2)) / ((x0 - x1) * (x0 - x2));
    let l1 = ((x - x0) + (x - x2)) / ((x1 - x0) * (x1 - x2));
    let l2 = ((x - x0) + (x - x1)) / ((x2 - x0) * (x2 - x1));
    y0 * l0 + y1 * l1 + y2 * l2
}

/// Second derivative at an interior node from the three-point formula.
pub fn second_derivative_at(xs: &[f64], ys: &[f64], i: usize) -> f64 {
    let n = xs.len();
    let i = i.clamp(1, n - 2);
    let (x0, x1, x2) = (xs[i - 1], xs[i], xs[i + 1]);
    let (y0, y1, y2) = (ys[i - 1], ys[i], ys[i + 1]);
    2.0 * (y0 / ((x0 - x1) * (x0 - x2)) + y1 / ((x1 - x0) * (x1 - x2)) + y2 / ((x2 - x0) * (x2 - x1)))
}
