use proptest::prelude::*;

use wald_core::cutoffs::{n_player_cutoff, static_cutoffs};
use wald_core::extensions::mrss_hazard;
use wald_core::model::{belief_at, no_signal_prob, r_payoff};
use wald_core::ode::{initial_slope, solve_master_ode};
use wald_core::simulator::{simulate, SimOptions};
use wald_core::single_dm::{dm_cutoffs, dm_value};
use wald_core::strategy::{Action, MixedStrategy};
use wald_core::two_period::{two_period_payoffs, Opponent, TwoPeriodGame};
use wald_core::verifier::{induced_distribution, SweepGrid};
use wald_core::{Controls, ModelParams, RawParams};

/// Valid parameters with a late `R` in state H still beating `S`.
fn gentle() -> impl Strategy<Value = ModelParams> {
    (0.2f64..2.0, 0.05f64..0.4, 0.05f64..0.4, 0.1f64..1.0, 0.05f64..1.0, 0.001f64..0.9)
        .prop_map(|(neg_ul, dund, extra, a, db, cost_share)| {
            let dbar = (dund + extra).min(0.95);
            let b = a + db;
            RawParams {
                u_h: 1.0,
                u_l: -neg_ul,
                dbar_h: dbar,
                dbar_l: dbar,
                dund_h: dund,
                dund_l: dund,
                a,
                b,
                c: cost_share * b * neg_ul * 0.9,
                u_s: 0.0,
                n: 2,
            }
        })
        .prop_filter_map("valid", |r| r.validate().ok())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn belief_is_monotone_and_fixes_the_ends(m in gentle(), p in 0.0f64..1.0, dp in 0.0f64..0.5, t in 0.0f64..10.0, dt in 0.0f64..5.0) {
        let q = (p + dp).min(1.0);
        prop_assert!(belief_at(q, t, &m) >= belief_at(p, t, &m));
        prop_assert!(belief_at(p, t + dt, &m) >= belief_at(p, t, &m));
        prop_assert_eq!(belief_at(0.0, t, &m), 0.0);
        prop_assert_eq!(belief_at(1.0, t, &m), 1.0);
    }

    #[test]
    fn survival_is_the_mixture_of_exponentials(m in gentle(), p in 0.0f64..1.0, t in 0.0f64..20.0, dt in 0.0f64..5.0) {
        let r = m.raw();
        let want = p * (-r.a * t).exp() + (1.0 - p) * (-r.b * t).exp();
        prop_assert!((no_signal_prob(p, t, &m) - want).abs() <= 1e-15);
        prop_assert!(no_signal_prob(p, t + dt, &m) <= no_signal_prob(p, t, &m));
    }

    #[test]
    fn r_payoff_is_affine_and_falls_with_rival_exposure(m in gentle(), p in 0.0f64..1.0, fh in 0.0f64..1.0, fl in 0.0f64..1.0, d in 0.0f64..0.5) {
        let at = |x: f64| r_payoff(x, fh, fl, &m);
        let mid = at(0.5 * p);
        prop_assert!((mid - 0.5 * (at(0.0) + at(p))).abs() < 1e-12);
        prop_assert!(r_payoff(p, (fh + d).min(1.0), fl, &m) <= at(p));
        prop_assert!(r_payoff(p, fh, (fl + d).min(1.0), &m) <= at(p));
    }

    #[test]
    fn learning_value_dominates_immediate_actions(m in gentle(), x in 0.0f64..1.0) {
        let s = dm_cutoffs(&m);
        prop_assume!(s.is_ok());
        let s = s.unwrap();
        let p = s.p_und + x * (s.p_bar - s.p_und);
        let r = m.raw();
        let u_r = p * r.u_h + (1.0 - p) * r.u_l;
        prop_assert!(dm_value(p, &s) >= u_r.max(r.u_s) - 1e-12);
    }

    #[test]
    fn cheaper_information_widens_learning(m in gentle(), f in 0.2f64..0.95) {
        let s = dm_cutoffs(&m);
        prop_assume!(s.is_ok());
        let s = s.unwrap();
        let cheaper = dm_cutoffs(&m.with_cost(m.c() * f).unwrap()).unwrap();
        prop_assert!(cheaper.p_und < s.p_und);
        prop_assert!(cheaper.p_bar > s.p_bar);
    }

    #[test]
    fn leader_cutoff_lies_below_mixing_cutoff(m in gentle()) {
        if let Ok(sc) = static_cutoffs(&m) {
            prop_assert!(sc.p_l < sc.p_m);
        }
    }

    #[test]
    fn more_players_lower_the_cutoff(m in gentle(), n in 2u32..200) {
        if let (Ok(x), Ok(y)) = (n_player_cutoff(n, &m), n_player_cutoff(n + 1, &m)) {
            prop_assert!(y < x);
        }
    }

    #[test]
    fn initial_rate_is_positive_exactly_below_p_tilde(m in gentle(), x in 0.001f64..0.999) {
        let pt = static_cutoffs(&m).unwrap().p_tilde;
        let s = initial_slope(x, 0.0, 2, 0.0, &m);
        prop_assert_eq!(s > 0.0, x < pt, "p0 {} p_tilde {} rate {}", x, pt, s);
    }

    #[test]
    fn observable_hazard_starts_at_the_private_rate(m in gentle(), x in 0.01f64..0.99) {
        let sc = static_cutoffs(&m).unwrap();
        let p0 = sc.p_l + x * (sc.p_tilde - sc.p_l);
        prop_assume!(p0 > sc.p_l && p0 < sc.p_tilde);
        let h = mrss_hazard(0.0, p0, &m).unwrap();
        let rate = initial_slope(p0, 0.0, 2, 0.0, &m);
        prop_assert!((h - rate).abs() <= 1e-12 * rate.abs().max(1.0), "{} vs {}", h, rate);
    }

    #[test]
    fn induced_distribution_is_monotone_and_substochastic(m in gentle(), q in 0.0f64..1.0, t in 0.1f64..5.0, r_first in proptest::bool::ANY) {
        let mut s = MixedStrategy::immediate_mix(0.3 * q);
        s.atom_s0 = 0.3 * (1.0 - q);
        s.interior_atoms.push(wald_core::strategy::InteriorAtom { t, mass: 0.7, action: if r_first { Action::R } else { Action::S } });
        let d = induced_distribution(&s, &m, &SweepGrid { step: 0.05, t_end: t + 5.0 });
        for v in [&d.f_h, &d.f_l, &d.g_h, &d.g_l] {
            prop_assert!(v.windows(2).all(|w| w[1] >= w[0] - 1e-15));
        }
        for i in 0..d.t.len() {
            prop_assert!(d.f_h[i] + d.g_h[i] <= 1.0 + 1e-12);
            prop_assert!(d.f_l[i] + d.g_l[i] <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn two_period_branches_are_a_distribution(m in gentle(), p in 0.001f64..0.999) {
        prop_assume!(m.a() < 1.0 && m.b() < 1.0);
        let g = TwoPeriodGame::from_params(&m).unwrap();
        for o in Opponent::ALL {
            let x = two_period_payoffs(p, o, &g);
            prop_assert!((x.branch_mass - 1.0).abs() < 1e-12);
            if let Some(mix) = x.rival_mix {
                prop_assert!((0.0..=1.0).contains(&mix));
            }
        }
        let free = TwoPeriodGame { c: 0.0, ..g };
        let x = two_period_payoffs(p, Opponent::S0, &free);
        prop_assert!(x.pay_learn >= x.pay_r0.max(x.pay_s0) - 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn random_stopping_path_is_a_valid_plan(m in gentle(), x in 0.05f64..0.95) {
        let pt = static_cutoffs(&m).unwrap().p_tilde;
        let p0 = x * pt;
        let path = solve_master_ode(p0, 0.0, 0.0, 2, &m, &Controls::default());
        // some parameter sets have no equilibrium path; the solver says so
        prop_assume!(path.is_ok());
        let path = path.unwrap();
        prop_assert!(path.rho.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!((path.rho.last().unwrap() - 1.0).abs() < 1e-8);
        prop_assert!((path.f_h.last().unwrap() - 1.0).abs() < 1e-8);
        // R in state L needs the plan to fire before a breakdown
        for (rho, fl) in path.rho.iter().zip(&path.f_l) {
            prop_assert!(*fl <= rho + 1e-12);
        }
    }

    #[test]
    fn simulation_is_reproducible_and_costs_add_up(m in gentle(), seed in 0u64..u64::MAX, q in 0.0f64..1.0, t in 0.1f64..3.0) {
        let a = MixedStrategy::immediate_mix(q);
        let b = MixedStrategy::stop_at(t, Action::R);
        let opts = SimOptions::with_grid(2000, seed, 0.5, 4.0);
        let r1 = simulate([&a, &b], 0.5, &m, &opts).unwrap();
        let r2 = simulate([&a, &b], 0.5, &m, &opts).unwrap();
        prop_assert_eq!(&r1, &r2);
        for i in 0..2 {
            prop_assert!((r1.mean_cost[i] - m.c() * r1.mean_stop_time[i]).abs() < 1e-12);
        }
        prop_assert_eq!(r1.coin_ties, 0);
    }
}

fn baseline() -> ModelParams {
    RawParams::baseline().validate().unwrap()
}

fn breakdown_bound_violation(p0: f64, m: &ModelParams) -> f64 {
    let path = solve_master_ode(p0, 0.0, 0.0, 2, m, &Controls::default()).unwrap();
    path.t
        .iter()
        .zip(&path.f_l)
        .map(|(t, fl)| fl - (1.0 - (-m.b() * t).exp()))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// On the baseline the bound holds only for priors close to the
/// randomization cutoff; lower priors ramp the plan up too fast.
#[test]
fn breakdown_bound_holds_only_near_cutoff_on_baseline() {
    let m = baseline();
    let pt = static_cutoffs(&m).unwrap().p_tilde;
    assert!(breakdown_bound_violation(0.9 * pt, &m) <= 1e-12);
    assert!(breakdown_bound_violation(0.5 * pt, &m) > 0.1);
}

/// The bound by the breakdown probability is not general: near zero
/// F_L grows like the initial rate, which can exceed `b`.
#[test]
fn breakdown_bound_fails_when_initial_rate_exceeds_b() {
    let m = RawParams {
        u_h: 1.0,
        u_l: -1.6,
        dbar_h: 0.1,
        dbar_l: 0.1,
        dund_h: 0.05,
        dund_l: 0.05,
        a: 0.1,
        b: 0.15,
        c: 2e-4,
        u_s: 0.0,
        n: 2,
    }
    .validate()
    .unwrap();
    let p0 = 0.05 * static_cutoffs(&m).unwrap().p_tilde;
    assert!(initial_slope(p0, 0.0, 2, 0.0, &m) > m.b());
    assert!(breakdown_bound_violation(p0, &m) > 0.0);
}
