//! Command implementations. Each returns a JSON result, a one-line summary
//! and the artifacts to write.

use serde_json::{json, Value};
use wald_core::cutoffs::{fixed_point_pstar, static_cutoffs};
use wald_core::equilibrium::{build_equilibrium, classify, start_window, EquilibriumProfile};
use wald_core::extensions::{competition_equilibrium, competition_solution, mrss_report, nplayer};
use wald_core::simulator::{simulate_profile, SimOptions};
use wald_core::single_dm::{dm_cutoffs, dm_policy, dm_value, smooth_pasting_residuals};
use wald_core::two_period::{two_period_payoffs, two_period_regions, Opponent, TwoPeriodGame};
use wald_core::verifier::{check_equilibrium, hjb_residual, induced_distribution, StopValue, SweepGrid};
use wald_core::ModelParams;

use crate::config::{ConfigError, RunConfig};
use crate::output::{csv, Artifacts};

pub const COMMANDS: &[&str] =
    &["single-dm", "cutoffs", "classify", "solve", "verify", "simulate", "sweep", "two-period", "extensions"];

#[derive(Debug, Clone, PartialEq)]
pub struct CmdError {
    pub kind: String,
    pub message: String,
}

impl From<wald_core::Error> for CmdError {
    fn from(e: wald_core::Error) -> Self {
        CmdError { kind: e.kind().into(), message: e.to_string() }
    }
}

impl From<ConfigError> for CmdError {
    fn from(e: ConfigError) -> Self {
        CmdError { kind: "ConfigError".into(), message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> CmdError {
    CmdError { kind: "Usage".into(), message: message.into() }
}

/// Command-specific options not carried by the config file.
#[derive(Debug, Clone, Default)]
pub struct Extra {
    /// `extensions`: competition, mrss or nplayer.
    pub kind: Option<String>,
    /// `two-period`: restrict to one opponent.
    pub opponent: Option<Opponent>,
    /// `sweep`: the key, its values and the command run at each value.
    pub sweep_key: Option<String>,
    pub sweep_values: Vec<String>,
    pub sweep_command: Option<String>,
}

pub struct Outcome {
    pub result: Value,
    pub summary: String,
    pub artifacts: Artifacts,
}

fn outcome(result: Value, summary: String) -> Outcome {
    Outcome { result, summary, artifacts: Artifacts::default() }
}

pub fn dispatch(command: &str, cfg: &RunConfig, extra: &Extra) -> Result<Outcome, CmdError> {
    let m = cfg.validate()?;
    match command {
        "single-dm" => single_dm(cfg, &m),
        "cutoffs" => cutoffs(cfg, &m),
        "classify" => classify_cmd(cfg, &m),
        "solve" => solve(cfg, &m),
        "verify" => verify(cfg, &m),
        "simulate" => simulate(cfg, &m),
        "sweep" => sweep(cfg, extra),
        "two-period" => two_period(cfg, &m, extra),
        "extensions" => extensions(cfg, &m, extra),
        _ => Err(CmdError {
            kind: "UnknownCommand".into(),
            message: format!("unknown command {command:?}; expected one of {}", COMMANDS.join(", ")),
        }),
    }
}

fn single_dm(cfg: &RunConfig, m: &ModelParams) -> Result<Outcome, CmdError> {
    let sol = dm_cutoffs(m)?;
    let v = dm_value(cfg.p0, &sol);
    let res = smooth_pasting_residuals(&sol);
    let p: Vec<f64> = (0..=200).map(|i| i as f64 / 200.0).collect();
    let vals: Vec<f64> = p.iter().map(|&x| dm_value(x, &sol)).collect();
    let mut out = outcome(
        json!({
            "p_und": sol.p_und, "p_bar": sol.p_bar, "c_bar": sol.c_bar, "K": sol.k,
            "value": v, "policy": dm_policy(cfg.p0, &sol), "residuals": res,
        }),
        format!("single-dm: p_und={} p_bar={} V({})={}", sol.p_und, sol.p_bar, cfg.p0, v),
    );
    out.artifacts.add("single_dm_value.csv", csv(&["p", "V"], &[&p, &vals]));
    Ok(out)
}

fn cutoffs(cfg: &RunConfig, m: &ModelParams) -> Result<Outcome, CmdError> {
    let sc = static_cutoffs(m)?;
    let dm = dm_cutoffs(m)?;
    let ctl = &cfg.controls;
    let p_star = fixed_point_pstar(m, ctl).ok();
    let window = start_window(cfg.p0, m, ctl).ok();
    Ok(outcome(
        json!({
            "p_L": sc.p_l, "p_M": sc.p_m, "p_tilde": sc.p_tilde,
            "c_bar": dm.c_bar, "p_bar": dm.p_bar, "p_und": dm.p_und,
            "p_star": p_star, "window": window,
        }),
        format!("cutoffs: p_L={} p_M={} p_tilde={} p_und={} p_bar={}", sc.p_l, sc.p_m, sc.p_tilde, dm.p_und, dm.p_bar),
    ))
}

fn classify_cmd(cfg: &RunConfig, m: &ModelParams) -> Result<Outcome, CmdError> {
    let c = classify(cfg.p0, m, &cfg.controls)?;
    let names: Vec<&str> = c.regimes.iter().map(|r| r.name()).collect();
    let summary = format!("classify: p0={} regimes=[{}]", cfg.p0, names.join(", "));
    Ok(outcome(serde_json::to_value(&c).expect("serializable"), summary))
}

fn profile(cfg: &RunConfig, m: &ModelParams) -> Result<EquilibriumProfile, CmdError> {
    let regime = match cfg.regime {
        Some(r) => r,
        None => *classify(cfg.p0, m, &cfg.controls)?
            .regimes
            .first()
            .ok_or_else(|| usage(format!("no regime applies at p0 = {}; set `regime`", cfg.p0)))?,
    };
    Ok(build_equilibrium(regime, cfg.p0, cfg.t_hat, m, &cfg.controls)?)
}

fn profile_json(p: &EquilibriumProfile) -> Value {
    let s = &p.strategy;
    json!({
        "regime": p.regime,
        "prior": p.prior,
        "atom_r0": s.atom_r0,
        "atom_s0": s.atom_s0,
        "interior_atoms": s.interior_atoms,
        "path_nodes": s.path.as_ref().map(|x| x.len()),
        "constants": p.constants,
    })
}

fn path_csv(p: &EquilibriumProfile, out: &mut Artifacts) {
    if let Some(path) = &p.strategy.path {
        out.add("strategy_path.csv", csv(&["t", "rho", "F_H", "F_L"], &[&path.t, &path.rho, &path.f_h, &path.f_l]));
    }
}

fn solve(cfg: &RunConfig, m: &ModelParams) -> Result<Outcome, CmdError> {
    let p = profile(cfg, m)?;
    let c = &p.constants;
    let summary = format!("solve: regime={} p0={} t_hat={} t_bar={}", p.regime, p.prior, opt(c.t_hat), opt(c.t_bar));
    let mut out = outcome(profile_json(&p), summary);
    path_csv(&p, &mut out.artifacts);
    Ok(out)
}

/// Exclusion radius around kinks for the optimality residual.
const HJB_EXCLUSION: f64 = 0.05;

fn verify(cfg: &RunConfig, m: &ModelParams) -> Result<Outcome, CmdError> {
    let p = profile(cfg, m)?;
    let r = check_equilibrium(&p, cfg.eps, m, &cfg.controls);
    let h = hjb_residual(&p, m, &cfg.controls, HJB_EXCLUSION);
    let summary = format!(
        "verify: regime={} certified={} deviation_gain={:e} eps={:e}",
        p.regime, r.certified, r.deviation_gain, r.eps
    );
    let mut out = outcome(
        json!({
            "profile": profile_json(&p),
            "certified": r.certified,
            "deviation_gain": r.deviation_gain,
            "eps": r.eps,
            "candidate_value": r.candidate_value,
            "support_min": r.support_min,
            "max_value": r.max_value,
            "argmax": r.argmax,
            "argmax_action": r.argmax_action,
            "hjb_max_learning": h.max_learning,
            "hjb_max_stopping": h.max_stopping,
        }),
        summary,
    );
    out.artifacts.add("value_curve.csv", csv(&["T", "V"], &[&r.t, &r.value]));
    path_csv(&p, &mut out.artifacts);
    Ok(out)
}

fn simulate(cfg: &RunConfig, m: &ModelParams) -> Result<Outcome, CmdError> {
    let p = profile(cfg, m)?;
    let t_end = p.strategy.last_event() + 10.0;
    let opts = SimOptions::with_grid(cfg.reps, cfg.seed, cfg.report_step, t_end);
    let rep = simulate_profile(&p, m, &opts)?;
    let grid = SweepGrid::for_strategy(&p.strategy, &cfg.controls);
    let dist = induced_distribution(&p.strategy, m, &grid);
    let analytic = StopValue::new(&dist, p.prior, m).strategy_value(&p.strategy);
    let summary = format!(
        "simulate: regime={} reps={} seed={} mean={} se={} analytic={}",
        p.regime, rep.reps, rep.seed, rep.mean_payoff[0], rep.std_err[0], analytic
    );
    let mut out = outcome(json!({ "regime": p.regime, "analytic_value": analytic, "report": rep }), summary);
    let c = &rep.cdf[0];
    out.artifacts.add("simulation_cdf.csv", csv(&["t", "F_H_emp", "F_L_emp"], &[&rep.grid, &c.f_h, &c.f_l]));
    Ok(out)
}

fn sweep(cfg: &RunConfig, extra: &Extra) -> Result<Outcome, CmdError> {
    let key = extra.sweep_key.as_deref().ok_or_else(|| usage("sweep needs --key"))?;
    let inner = extra.sweep_command.as_deref().unwrap_or("classify");
    if inner == "sweep" || !COMMANDS.contains(&inner) {
        return Err(usage(format!("cannot sweep command {inner:?}")));
    }
    if extra.sweep_values.is_empty() {
        return Err(usage("sweep needs at least one value"));
    }
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    for v in &extra.sweep_values {
        let mut c = cfg.clone();
        c.set(key, v)?;
        let row = match dispatch(inner, &c, extra) {
            Ok(o) => {
                lines.push(o.summary);
                json!({ "key": key, "value": v, "result": o.result })
            }
            Err(e) => {
                lines.push(format!("{inner}: error {}", e.kind));
                json!({ "key": key, "value": v, "error": e.kind, "message": e.message })
            }
        };
        rows.push(row);
    }
    let summary = format!("sweep {key} over {} values: {}", rows.len(), lines.join(" | "));
    Ok(outcome(json!({ "command": inner, "rows": rows }), summary))
}

fn two_period(cfg: &RunConfig, m: &ModelParams, extra: &Extra) -> Result<Outcome, CmdError> {
    let g = TwoPeriodGame::from_params(m)?;
    let opponents: Vec<Opponent> = match extra.opponent {
        Some(o) => vec![o],
        None => Opponent::ALL.to_vec(),
    };
    let mut rows = Vec::new();
    let mut out = outcome(Value::Null, String::new());
    let mut parts = Vec::new();
    let grid: Vec<f64> = (1..1000).map(|i| i as f64 / 1000.0).collect();
    for o in &opponents {
        let at = two_period_payoffs(cfg.p0, *o, &g);
        let region = two_period_regions(*o, &g, 2000);
        let bounds = region.bounds.map_or("none".to_string(), |(lo, hi)| format!("[{lo}, {hi}]"));
        parts.push(format!("{}={bounds}", o.name()));
        rows.push(json!({ "opponent": o, "payoffs": at, "learning_interval": region.bounds, "width": region.width() }));
        let pays: Vec<_> = grid.iter().map(|&p| two_period_payoffs(p, *o, &g)).collect();
        let col = |f: fn(&wald_core::two_period::TwoPeriodPayoffs) -> f64| pays.iter().map(f).collect::<Vec<f64>>();
        let (r, s, l) = (col(|x| x.pay_r0), col(|x| x.pay_s0), col(|x| x.pay_learn));
        out.artifacts.add(
            format!("two_period_{}.csv", o.name()),
            csv(&["p0", "pay_R0", "pay_S0", "pay_learn"], &[&grid, &r, &s, &l]),
        );
    }
    out.result = json!({ "opponents": rows });
    out.summary = format!("two-period: learning intervals {}", parts.join(" "));
    Ok(out)
}

fn extensions(cfg: &RunConfig, m: &ModelParams, extra: &Extra) -> Result<Outcome, CmdError> {
    let kind = extra.kind.as_deref().unwrap_or("nplayer");
    let ctl = &cfg.controls;
    match kind {
        "competition" => {
            let sol = competition_solution(cfg.p0, m, ctl, 201)?;
            let eq = competition_equilibrium(cfg.p0, m).map(|p| profile_json(&p));
            let summary = format!("competition: T_ps={} p_nr={} p_tilde={}", sol.t_ps, sol.p_nr, sol.p_tilde);
            let mut out = outcome(
                json!({
                    "t_ps": sol.t_ps, "p_nr": sol.p_nr, "p_tilde": sol.p_tilde,
                    "profile": eq.as_ref().ok(), "profile_error": eq.as_ref().err().map(|e| e.kind()),
                }),
                summary,
            );
            out.artifacts
                .add("competition.csv", csv(&["t", "W_L", "U_R", "psi"], &[&sol.t, &sol.w_l, &sol.u_r, &sol.psi]));
            Ok(out)
        }
        "mrss" => {
            let s = mrss_report(cfg.p0, m, 201)?;
            let summary = format!(
                "mrss: t_star={} hazard(0)={} prior_in_range={} hazard_positive={}",
                s.t_star, s.hazard[0], s.prior_in_range, s.hazard_positive
            );
            let mut out = outcome(
                json!({
                    "t_star": s.t_star, "hazard_at_zero": s.hazard[0],
                    "prior_in_range": s.prior_in_range, "hazard_positive": s.hazard_positive,
                }),
                summary,
            );
            out.artifacts.add("mrss.csv", csv(&["t", "hazard", "belief"], &[&s.t, &s.hazard, &s.belief]));
            Ok(out)
        }
        "nplayer" => {
            let s = nplayer(m.players(), Some(cfg.p0), m, ctl)?;
            let summary = format!("nplayer: N={} p_tilde_N={} residual={}", s.n, opt(s.cutoffs.last().map(|c| c.1)), opt(s.residual));
            let mut out = outcome(
                json!({
                    "n": s.n, "cutoffs": s.cutoffs, "residual": s.residual,
                    "t_bar": s.path.as_ref().map(|p| p.t_bar),
                }),
                summary,
            );
            if let Some(path) = &s.path {
                out.artifacts
                    .add("nplayer_path.csv", csv(&["t", "rho", "F_H", "F_L"], &[&path.t, &path.rho, &path.f_h, &path.f_l]));
            }
            Ok(out)
        }
        _ => Err(usage(format!("unknown extension {kind:?}; expected competition, mrss or nplayer"))),
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or("none".to_string(), |v| v.to_string())
}
