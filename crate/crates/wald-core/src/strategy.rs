//! Mixed stopping strategies: atoms at time zero, an optional continuous
//! randomization path, and (for deviation experiments) interior atoms.

use alloc::format;
use alloc::vec::Vec;

use crate::ode::StrategyPath;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Action {
    R,
    S,
}

/// Planned stop at `t > 0` with probability `mass`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InteriorAtom {
    pub t: f64,
    pub mass: f64,
    pub action: Action,
}

/// Unconditional plan `(rho, sigma)`: `rho(t)` is the probability of having
/// planned to stop with `R` by `t`, `sigma(t)` the same for `S`. A revealing
/// signal overrides the plan. Mass left after the path and the atoms stops
/// with `R` when the path ends (or never, if there is no path).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MixedStrategy {
    pub atom_r0: f64,
    pub atom_s0: f64,
    pub path: Option<StrategyPath>,
    pub interior_atoms: Vec<InteriorAtom>,
}

impl MixedStrategy {
    pub fn immediate_s() -> Self {
        Self::atoms(0.0, 1.0)
    }

    pub fn immediate_r() -> Self {
        Self::atoms(1.0, 0.0)
    }

    /// `R` with probability `q` at time zero, `S` otherwise.
    pub fn immediate_mix(q: f64) -> Self {
        Self::atoms(q, 1.0 - q)
    }

    fn atoms(r: f64, s: f64) -> Self {
        MixedStrategy { atom_r0: r, atom_s0: s, path: None, interior_atoms: Vec::new() }
    }

    /// Immediate `S` with probability `path.beta`, the path otherwise.
    pub fn with_path(path: StrategyPath) -> Self {
        MixedStrategy { atom_r0: 0.0, atom_s0: path.beta, path: Some(path), interior_atoms: Vec::new() }
    }

    /// Learn until `t`, then take `action` (a pure stop time).
    pub fn stop_at(t: f64, action: Action) -> Self {
        if t <= 0.0 {
            return match action {
                Action::R => Self::immediate_r(),
                Action::S => Self::immediate_s(),
            };
        }
        MixedStrategy {
            atom_r0: 0.0,
            atom_s0: 0.0,
            path: None,
            interior_atoms: alloc::vec![InteriorAtom { t, mass: 1.0, action }],
        }
    }

    /// Planned `R` mass by `t` (right-continuous).
    pub fn rho(&self, t: f64) -> f64 {
        let path = self.path.as_ref().map_or(0.0, |p| p.rho_at(t));
        self.atom_r0 + path + self.interior_mass(t, Action::R)
    }

    /// Planned `S` mass by `t` (right-continuous).
    pub fn sigma(&self, t: f64) -> f64 {
        self.atom_s0 + self.interior_mass(t, Action::S)
    }

    fn interior_mass(&self, t: f64, action: Action) -> f64 {
        self.interior_atoms.iter().filter(|x| x.action == action && x.t <= t).map(|x| x.mass).sum()
    }

    /// Total planned mass, including the whole path.
    pub fn total_mass(&self) -> f64 {
        let path = self.path.as_ref().map_or(0.0, |p| 1.0 - p.beta);
        self.atom_r0 + self.atom_s0 + path + self.interior_atoms.iter().map(|x| x.mass).sum::<f64>()
    }

    /// Time after which nothing is left to plan.
    pub fn last_event(&self) -> f64 {
        let path = self.path.as_ref().map_or(0.0, |p| p.t_bar);
        self.interior_atoms.iter().map(|x| x.t).fold(path, f64::max)
    }

    /// Times where the plan has a kink or a jump.
    pub fn event_times(&self) -> Vec<f64> {
        let mut v = Vec::new();
        if self.atom_r0 + self.atom_s0 > 0.0 {
            v.push(0.0);
        }
        if let Some(p) = &self.path {
            v.push(p.t_hat);
            v.push(p.t_bar);
        }
        v.extend(self.interior_atoms.iter().map(|x| x.t));
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// Checks masses are probabilities, the plan never exceeds one, and the
    /// path is nondecreasing.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: f64| !(0.0..=1.0).contains(&m);
        if bad(self.atom_r0) || bad(self.atom_s0) {
            return Err(Error::InvalidParams(format!(
                "time-zero atoms must be probabilities (R {}, S {})",
                self.atom_r0, self.atom_s0
            )));
        }
        for x in &self.interior_atoms {
            if !(x.t > 0.0) || bad(x.mass) {
                return Err(Error::InvalidParams(format!("bad interior atom at t = {} with mass {}", x.t, x.mass)));
            }
        }
        if let Some(p) = &self.path {
            if p.t.len() < 2 || p.rho.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::InvalidParams("path must be nondecreasing with at least two nodes".into()));
            }
        }
        let total = self.total_mass();
        if total > 1.0 + 1e-9 {
            return Err(Error::InvalidParams(format!("planned mass {total} exceeds one")));
        }
        Ok(())
    }
}
