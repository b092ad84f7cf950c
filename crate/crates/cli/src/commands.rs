use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use cw_core::analysis::{
    blowup_time_bounds, classify_blowup_set, convergence_study, g_lambda, peak_ratio_diagnostics,
    t_star_star, BlowupReport, ConvergenceError, PeakDiagnostics, TimeBounds,
};
use cw_core::config::{ConfigError, RunConfig};
use cw_core::io::{self, num};
use cw_core::{
    run as simulate, InitialData, ParamError, Regime, RunHistory64, RunOptions, RunOutcome64,
    RunStatus, SimParams64,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Solver(String),
    #[error("{0}")]
    Check(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Check(_) => 4,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<ParamError> for CliError {
    fn from(e: ParamError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub struct Context {
    pub config: Option<PathBuf>,
    pub overrides: Vec<String>,
    pub output_dir: PathBuf,
}

impl Context {
    fn load(&self) -> Result<RunConfig<f64>, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        for pair in &self.overrides {
            cfg.apply_override(pair)?;
        }
        cfg.params.validate().into_result()?;
        Ok(cfg)
    }

    fn out(&self, name: &str) -> Result<PathBuf, CliError> {
        fs::create_dir_all(&self.output_dir)
            .map_err(|e| CliError::Io(format!("{}: {e}", self.output_dir.display())))?;
        Ok(self.output_dir.join(name))
    }
}

#[derive(Serialize)]
struct RunReport<'a> {
    params: &'a SimParams64,
    regime: Regime,
    initial: &'static str,
    outcome: &'a RunOutcome64,
}

fn run_config(
    cfg: &RunConfig<f64>,
    options: RunOptions,
) -> Result<(RunOutcome64, RunHistory64), CliError> {
    let initial = cfg.initial_data()?;
    let (outcome, history) = simulate(&cfg.params, &initial, options)?;
    Ok((outcome, history))
}

fn write_run(
    ctx: &Context,
    cfg: &RunConfig<f64>,
    outcome: &RunOutcome64,
    history: &RunHistory64,
) -> Result<(), CliError> {
    io::write_file(&ctx.out("history.csv")?, |w| {
        io::write_history(w, history, &cfg.params)
    })?;
    let report = RunReport {
        params: &cfg.params,
        regime: cfg.params.regime(),
        initial: match cfg.initial {
            cw_core::config::InitialSpec::Sine => "sine",
            cw_core::config::InitialSpec::File(_) => "file",
        },
        outcome,
    };
    io::write_json(&ctx.out("outcome.json")?, &report)?;
    Ok(())
}

fn solver_failure(outcome: &RunOutcome64) -> Result<(), CliError> {
    match (&outcome.status, &outcome.error) {
        (RunStatus::SolverError, Some(e)) => Err(CliError::Solver(format!(
            "solver error at step {}: {e}",
            outcome.n_final
        ))),
        (RunStatus::SolverError, None) => Err(CliError::Solver("solver error".into())),
        _ => Ok(()),
    }
}

pub fn run(ctx: &Context, snapshot_every: usize) -> Result<(), CliError> {
    let cfg = ctx.load()?;
    let (outcome, history) = run_config(&cfg, RunOptions { snapshot_every })?;
    write_run(ctx, &cfg, &outcome, &history)?;
    if snapshot_every > 0 {
        let dir = ctx.out("snapshots")?;
        if dir.exists() {
            fs::remove_dir_all(&dir)?;
        }
        fs::create_dir_all(&dir)?;
        for s in &history.snapshots {
            let path = dir.join(format!("step_{:06}.csv", s.n));
            io::write_file(&path, |w| io::write_snapshot(w, s, &cfg.params))?;
        }
    }
    solver_failure(&outcome)?;
    println!(
        "{:?} after {} steps, T_num_partial={:e}, sup norm {:e}",
        outcome.status, outcome.n_final, outcome.t_num_partial, outcome.final_sup_norm
    );
    Ok(())
}

pub fn classify(ctx: &Context) -> Result<(), CliError> {
    let cfg = ctx.load()?;
    let (outcome, history) = run_config(&cfg, RunOptions::default())?;
    write_run(ctx, &cfg, &outcome, &history)?;
    solver_failure(&outcome)?;
    let report =
        classify_blowup_set(&history, &cfg.params).map_err(|e| CliError::Solver(e.to_string()))?;
    io::write_json(&ctx.out("blowup_report.json")?, &report)?;
    for o in &report.offsets {
        println!("offset {:+}: {:?}", o.offset, o.verdict);
    }
    Ok(())
}

/// Maps `f` over `items` on scoped threads, keeping the input order.
fn par_map<I: Sync, R: Send>(items: &[I], f: impl Fn(&I) -> R + Sync) -> Vec<R> {
    std::thread::scope(|s| {
        let handles: Vec<_> = items.iter().map(|it| s.spawn(|| f(it))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    })
}

fn sine_run(params: &SimParams64) -> Result<(RunOutcome64, RunHistory64), String> {
    let (outcome, history) = simulate(
        params,
        &InitialData::sine(params.lambda),
        RunOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    if let Some(e) = &outcome.error {
        return Err(format!("solver error at step {}: {e}", outcome.n_final));
    }
    Ok((outcome, history))
}

pub const TIME_TABLE_COLUMNS: [&str; 7] = [
    "lambda",
    "g_lambda",
    "T_num",
    "tail",
    "T_star_star",
    "sandwich_ok",
    "status",
];

pub fn time_table(ctx: &Context, lambdas: &[f64]) -> Result<(), CliError> {
    let cfg = ctx.load()?;
    let base = cfg.params;
    let rows = par_map(lambdas, |&lambda| {
        let params = SimParams64 { lambda, ..base };
        let g = g_lambda(base.p, lambda);
        let tss = t_star_star(base.p, base.q, base.tau, lambda)
            .map(num)
            .unwrap_or_default();
        let result = params
            .validate()
            .into_result()
            .map_err(|e| e.to_string())
            .and_then(|_| sine_run(&params))
            .and_then(|(o, _)| blowup_time_bounds(&o, &params).map_err(|e| e.to_string()));
        match result {
            Ok(b) => vec![
                num(lambda),
                num(g),
                num(b.t_num),
                num(b.tail),
                tss,
                b.sandwich_ok.to_string(),
                "BlewUp".into(),
            ],
            Err(e) => vec![
                num(lambda),
                num(g),
                String::new(),
                String::new(),
                tss,
                "false".into(),
                e,
            ],
        }
    });
    let path = ctx.out("time_table.csv")?;
    io::write_file(&path, |w| {
        io::write_table(w, &io::params_comment(&base), &TIME_TABLE_COLUMNS, &rows)
    })?;
    println!("{} rows written to {}", rows.len(), path.display());
    Ok(())
}

pub fn converge(ctx: &Context, levels: &[f64], t_check: Option<f64>) -> Result<(), CliError> {
    let cfg = ctx.load()?;
    let report = convergence_study(&cfg.params, t_check, levels).map_err(|e| match e {
        ConvergenceError::Run { .. } | ConvergenceError::BeyondBlowup { .. } => {
            CliError::Solver(e.to_string())
        }
        _ => CliError::Config(e.to_string()),
    })?;
    #[derive(Serialize)]
    struct Out<'a, R> {
        params: &'a SimParams64,
        #[serde(flatten)]
        report: R,
    }
    io::write_json(
        &ctx.out("convergence.json")?,
        &Out {
            params: &cfg.params,
            report: &report,
        },
    )?;
    println!(
        "fitted order {:.4}, expected {:.4}",
        report.fitted_order, report.expected_order
    );
    Ok(())
}

#[derive(Serialize)]
struct CheckLine {
    name: &'static str,
    passed: bool,
    detail: String,
}

/// Either the analysis result or why it could not be produced.
#[derive(Serialize)]
#[serde(untagged)]
enum Analysis<T> {
    Done(T),
    Skipped { error: String },
}

impl<T> From<Result<T, String>> for Analysis<T> {
    fn from(r: Result<T, String>) -> Self {
        match r {
            Ok(v) => Analysis::Done(v),
            Err(error) => Analysis::Skipped { error },
        }
    }
}

#[derive(Serialize)]
struct Diagnostics<'a> {
    params: &'a SimParams64,
    outcome: &'a RunOutcome64,
    peak_ratios: PeakDiagnostics<f64>,
    blowup_set: Analysis<BlowupReport<f64>>,
    time_bounds: Analysis<TimeBounds<f64>>,
    checks: Vec<CheckLine>,
    passed: bool,
}

pub fn diagnostics(ctx: &Context) -> Result<(), CliError> {
    let cfg = ctx.load()?;
    let (outcome, history) = run_config(&cfg, RunOptions::default())?;
    solver_failure(&outcome)?;
    let peak = peak_ratio_diagnostics(&history, &cfg.params);
    let set = classify_blowup_set(&history, &cfg.params).map_err(|e| e.to_string());
    let bounds = blowup_time_bounds(&outcome, &cfg.params).map_err(|e| e.to_string());

    let mut checks = vec![CheckLine {
        name: "blew_up",
        passed: outcome.status == RunStatus::BlewUp,
        detail: format!("{:?} after {} steps", outcome.status, outcome.n_final),
    }];
    if peak.applicable {
        checks.push(CheckLine {
            name: "peak_ratios",
            passed: peak.passes(),
            detail: format!(
                "growth_ok={} ratio_a_ok={} a_strictly_decreasing={}",
                peak.growth_ok, peak.ratio_a_ok, peak.a_strictly_decreasing
            ),
        });
    }
    if let Ok(Some(m)) = set.as_ref().map(|r| r.matches_theory) {
        checks.push(CheckLine {
            name: "blowup_set",
            passed: m,
            detail: format!("theory {:?}", set.as_ref().map(|r| r.theory).ok()),
        });
    }
    if let Ok(b) = &bounds {
        checks.push(CheckLine {
            name: "time_lower_bound",
            passed: b.lower_ok,
            detail: format!("g={:e} <= T_num+tail={:e}", b.g, b.t_num + b.tail),
        });
        if let (Some(ok), Some(t)) = (b.upper_ok, b.t_star_star) {
            checks.push(CheckLine {
                name: "time_upper_bound",
                passed: ok,
                detail: format!("T_num+tail={:e} <= T**={t:e}", b.t_num + b.tail),
            });
        }
    }
    let passed = checks.iter().all(|c| c.passed);
    for c in &checks {
        println!(
            "{} {}: {}",
            if c.passed { "ok    " } else { "FAILED" },
            c.name,
            c.detail
        );
    }
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name)
        .collect();
    io::write_json(
        &ctx.out("diagnostics.json")?,
        &Diagnostics {
            params: &cfg.params,
            outcome: &outcome,
            peak_ratios: peak,
            blowup_set: set.into(),
            time_bounds: bounds.into(),
            checks,
            passed,
        },
    )?;
    if passed {
        Ok(())
    } else {
        Err(CliError::Check(format!(
            "failed checks: {}",
            failed.join(", ")
        )))
    }
}

pub const FIGURE_COLUMNS: [&str; 7] = [
    "n",
    "t",
    "u_m",
    "u_m_minus_1",
    "u_m_plus_1",
    "u_m_minus_2",
    "u_m_plus_2",
];
pub const FIGURE4_COLUMNS: [&str; 4] = ["lambda", "g_lambda", "T_num", "T_num_tail"];

fn series_rows(history: &RunHistory64) -> Vec<Vec<String>> {
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    history
        .records
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                num(r.t),
                num(r.u_m),
                num(r.u_m_minus_1),
                num(r.u_m_plus_1),
                opt(r.u_m_minus_2),
                opt(r.u_m_plus_2),
            ]
        })
        .collect()
}

fn write_series(
    path: &Path,
    label: &str,
    params: &SimParams64,
    history: &RunHistory64,
) -> Result<(), CliError> {
    let comment = format!("{label}; {}", io::params_comment(params));
    io::write_file(path, |w| {
        io::write_table(w, &comment, &FIGURE_COLUMNS, &series_rows(history))
    })?;
    Ok(())
}

/// Parameters of figures 1-3: exponents fixed by the scenario, the rest from the config.
pub fn figure_params(base: &SimParams64) -> (SimParams64, SimParams64) {
    let fig1 = SimParams64 {
        p: 4.0,
        q: 1.3,
        ..*base
    };
    let fig1 = fig1.with_h(fig1.fixed_grid_h());
    let fig23 = SimParams64 {
        p: 2.0,
        q: 1.0,
        h: 0.5,
        ..*base
    };
    (fig1, fig23)
}

pub fn figures(ctx: &Context, lambdas: &[f64]) -> Result<(), CliError> {
    let cfg = ctx.load()?;
    let (fig1, fig23) = figure_params(&cfg.params);
    for p in [&fig1, &fig23] {
        p.validate().into_result()?;
    }
    let runs = par_map(&[fig1, fig23], sine_run);
    let mut runs = runs.into_iter();
    let (_, h1) = runs.next().unwrap().map_err(CliError::Solver)?;
    let (_, h23) = runs.next().unwrap().map_err(CliError::Solver)?;
    write_series(
        &ctx.out("fig1.csv")?,
        "figure 1: p=4 q=1.3, u at m and m-1",
        &fig1,
        &h1,
    )?;
    write_series(
        &ctx.out("fig2.csv")?,
        "figure 2: p=2 q=1, u at m and m-1",
        &fig23,
        &h23,
    )?;
    write_series(
        &ctx.out("fig3.csv")?,
        "figure 3: p=2 q=1, u at m and m-2",
        &fig23,
        &h23,
    )?;

    let fig4 = SimParams64 {
        p: 3.0,
        q: 1.0,
        ..cfg.params
    };
    let rows = par_map(lambdas, |&lambda| {
        let params = SimParams64 { lambda, ..fig4 };
        let g = num(g_lambda(fig4.p, lambda));
        match sine_run(&params) {
            Ok((o, _)) if o.status == RunStatus::BlewUp => vec![
                num(lambda),
                g,
                num(o.t_num_partial),
                o.t_num_tail.map(num).unwrap_or_default(),
            ],
            _ => vec![num(lambda), g, String::new(), String::new()],
        }
    });
    let comment = format!(
        "figure 4: g(lambda) against T_num; {}",
        io::params_comment(&fig4)
    );
    io::write_file(&ctx.out("fig4.csv")?, |w| {
        io::write_table(w, &comment, &FIGURE4_COLUMNS, &rows)
    })?;
    println!(
        "fig1.csv .. fig4.csv written to {}",
        ctx.output_dir.display()
    );
    Ok(())
}
