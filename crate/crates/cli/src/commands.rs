//! One function per command. Each writes its artifacts into `out` and
//! returns an error whose exit code classifies the failure.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use eas_core::diagnostics::{
    box_sensitivity, fit_decay, record, BoxComparison, BoxStudy, DecaySeries, FitResult, GridSpec, SeriesMeta,
};
use eas_core::fit::EnvelopeOptions;
use eas_core::grid::make_grid;
use eas_core::linear::green::green_entries;
use eas_core::linear::quadrature::logspace;
use eas_core::linear::{
    classify_regime, green_decay_check, lower_bound_audit, pointwise_bound_audit, rate_table, Channel, ExponentCheck,
    LowerBoundReport, NormKind, PointwiseOptions, RadialData, RateTable,
};
use eas_core::scenario::{make_initial, ScenarioKind};
use eas_core::timestepper::{propagate_linear, run, RunLabel};

use crate::config::{Command, RunConfig};
use crate::error::CliError;
use crate::output::{prepare_dir, write_json, write_text};

pub const SERIES_FILE: &str = "series.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// Progress messages go to stderr unless `quiet`.
#[derive(Debug, Clone, Copy)]
pub struct Reporter {
    pub quiet: bool,
}

impl Reporter {
    fn say(&self, msg: &str) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }

    /// Printed even when quiet.
    fn warn(&self, msg: &str) {
        eprintln!("warning: {msg}");
    }
}

#[derive(Debug, Serialize)]
struct RunSummary {
    status: &'static str,
    partial: bool,
    error: Option<String>,
    series_file: &'static str,
    records: usize,
    steps: usize,
    max_tail_fraction: f64,
    under_resolved: bool,
    rates: Option<RateTable>,
    fits: Vec<FitOutcome>,
}

/// A fit or the reason it could not be made.
#[derive(Debug, Serialize)]
#[serde(untagged)]
enum FitOutcome {
    Fit(FitResult),
    Skipped { quantity: String, reason: String },
}

fn fits(series: &DecaySeries, quantities: &[String], window: [f64; 2]) -> Vec<FitOutcome> {
    quantities
        .iter()
        .map(|q| match fit_decay(series, q, window) {
            Ok(f) => FitOutcome::Fit(f),
            Err(e) => FitOutcome::Skipped {
                quantity: q.clone(),
                reason: e.to_string(),
            },
        })
        .collect()
}

fn summary(cfg: &RunConfig, series: &DecaySeries, window: [f64; 2], error: Option<String>) -> RunSummary {
    let p = &series.meta().params;
    RunSummary {
        status: if error.is_some() { "failed" } else { "ok" },
        partial: error.is_some(),
        error,
        series_file: SERIES_FILE,
        records: series.records().len(),
        steps: series.meta().steps,
        max_tail_fraction: series.meta().max_tail_fraction,
        under_resolved: series.meta().under_resolved,
        rates: rate_table(p.dimension as u32, p.alpha).ok(),
        fits: fits(series, &cfg.fit.quantities, window),
    }
}

pub fn execute(cfg: &RunConfig, out: &Path, rep: Reporter) -> Result<(), CliError> {
    prepare_dir(out)?;
    match cfg.command {
        Command::Simulate => simulate(cfg, out, rep),
        Command::LinearDecay => linear_decay(cfg, out, rep),
        Command::GreenAudit => green_audit(cfg, out, rep),
        Command::LowerBound => lower_bound(cfg, out, rep),
        Command::Rates => rates(cfg, out, rep),
        Command::Sweep => sweep(cfg, out, rep),
        Command::BoxSensitivity => box_study(cfg, out, rep),
    }
}

fn label(cfg: &RunConfig) -> RunLabel {
    RunLabel {
        scenario: cfg.scenario.kind.name().to_string(),
        seed: cfg.scenario.seed,
        config_hash: cfg.hash(),
    }
}

fn simulate(cfg: &RunConfig, out: &Path, rep: Reporter) -> Result<(), CliError> {
    let p = cfg.params()?;
    let grid = make_grid(p.dimension, cfg.grid.points, cfg.grid.length)?;
    let init = make_initial(&cfg.scenario_spec(), &grid, &p)?;
    rep.say(&format!(
        "simulate: {}^{} grid, L = {}, dt = {}, t_end = {}",
        cfg.grid.points, p.dimension, cfg.grid.length, cfg.stepper.dt, cfg.t_end
    ));
    let window = cfg.window();
    match run(
        &init,
        &cfg.stepper_config(),
        &p,
        &cfg.energy(&p),
        cfg.t_end,
        &label(cfg),
    ) {
        Ok(series) => {
            write_text(&out.join(SERIES_FILE), &series.to_csv())?;
            write_json(
                &out.join(SUMMARY_FILE),
                "run-summary",
                cfg,
                summary(cfg, &series, window, None),
            )?;
            rep.say(&format!(
                "simulate: {} records written to {}",
                series.records().len(),
                out.display()
            ));
            if series.meta().under_resolved {
                rep.warn(&format!(
                    "under-resolved: tail energy fraction reached {:.1e}; refine the grid before trusting fits",
                    series.meta().max_tail_fraction
                ));
            }
            Ok(())
        }
        Err(failure) => {
            let err = CliError::from(failure.error.clone());
            if let Some(partial) = &failure.partial {
                write_text(&out.join(SERIES_FILE), &partial.to_csv())?;
                let s = summary(cfg, partial, window, Some(failure.error.to_string()));
                write_json(&out.join(SUMMARY_FILE), "run-summary", cfg, s)?;
                rep.say(&format!("simulate: partial series up to t = {}", failure.last_good.t));
            }
            Err(err)
        }
    }
}

#[derive(Debug, Serialize)]
struct LinearSummary {
    #[serde(flatten)]
    run: RunSummary,
    /// Whole-space exponents of the Green's channels for Gaussian data.
    quadrature_checks: Vec<ExponentCheck>,
    pass: bool,
}

/// The Green-propagated solution of the scenario data, recorded at
/// log-spaced times, plus whole-space quadrature exponents.
fn linear_decay(cfg: &RunConfig, out: &Path, rep: Reporter) -> Result<(), CliError> {
    let p = cfg.params()?;
    let grid = make_grid(p.dimension, cfg.grid.points, cfg.grid.length)?;
    let init = make_initial(&cfg.scenario_spec(), &grid, &p)?;
    let energy = cfg.energy(&p);
    let mut times = vec![0.0];
    times.extend(logspace(cfg.t_end / 1000.0, cfg.t_end, cfg.linear.series_points));
    rep.say(&format!(
        "linear-decay: {} record times up to t = {}",
        times.len(),
        cfg.t_end
    ));
    let records = times
        .par_iter()
        .map(|&t| {
            let mut s = propagate_linear(&init, t, &p)?;
            s.t = t;
            record(&s, &p, &energy)
        })
        .collect::<eas_core::Result<Vec<_>>>()?;
    let meta = SeriesMeta {
        params: p,
        grid: GridSpec::of(&grid),
        stepper: cfg.stepper_config(),
        energy,
        label: label(cfg),
        steps: 0,
        max_tail_fraction: 0.0,
        under_resolved: false,
    };
    let series = DecaySeries::new(meta, records)?;
    write_text(&out.join(SERIES_FILE), &series.to_csv())?;

    let l = &cfg.linear;
    let qtimes = logspace(l.t_min, l.t_max, l.t_points);
    let data = RadialData::gaussian();
    let checks = [Channel::G11, Channel::G21]
        .iter()
        .map(|&c| green_decay_check(&p, &data, c, NormKind::L2, 0.0, &qtimes))
        .collect::<eas_core::Result<Vec<_>>>()?;
    let pass = checks.iter().all(|c| c.pass);
    let body = LinearSummary {
        run: summary(cfg, &series, cfg.window(), None),
        quadrature_checks: checks,
        pass,
    };
    write_json(&out.join(SUMMARY_FILE), "linear-decay-summary", cfg, body)?;
    if pass {
        Ok(())
    } else {
        Err(CliError::AuditFail(
            "a Green's channel exponent is outside tolerance".into(),
        ))
    }
}

fn green_audit(cfg: &RunConfig, out: &Path, rep: Reporter) -> Result<(), CliError> {
    let p = cfg.params()?;
    let l = &cfg.linear;
    let times = logspace(l.t_min.min(1e-3), l.t_max.max(1e3), l.xi_points);
    let xis = logspace(l.xi_min, l.xi_max, l.xi_points);
    rep.say(&format!("green-audit: {} x {} grid", times.len(), xis.len()));
    let report = pointwise_bound_audit(&p, &times, &xis, PointwiseOptions::default())?;

    let mut grid = String::from("t,xi,regime,g11,g12,g21,g22\n");
    for &t in &times {
        for &xi in &xis {
            let g = green_entries(t, xi, &p);
            grid.push_str(&format!(
                "{t:.17e},{xi:.17e},{:?},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                classify_regime(xi, &p),
                g[0][0],
                g[0][1],
                g[1][0],
                g[1][1]
            ));
        }
    }
    write_text(&out.join("green_grid.csv"), &grid)?;
    let pass = report.pass;
    write_json(&out.join("audit.json"), "green-audit", cfg, &report)?;
    rep.say(&format!("green-audit: {}", if pass { "PASS" } else { "FAIL" }));
    if pass {
        Ok(())
    } else {
        Err(CliError::AuditFail("pointwise envelope audit failed".into()))
    }
}

fn lower_bound(cfg: &RunConfig, out: &Path, rep: Reporter) -> Result<(), CliError> {
    let p = cfg.params()?;
    let data = match cfg.scenario.kind {
        ScenarioKind::LowerBound => RadialData::gaussian(),
        // |ξ|e^{-|ξ|²/2} vanishes at the origin, the Fourier picture of zero mass.
        ScenarioKind::ZeroMean => RadialData::gaussian_moment(1.0),
        ScenarioKind::RandomPhase => {
            return Err(CliError::Config(
                "scenario.kind = random-phase has no radial profile; use lower-bound or zero-mean".into(),
            ))
        }
    };
    let times = logspace(1.0, cfg.linear.t_max, 4 * cfg.linear.t_points);
    rep.say(&format!(
        "lower-bound: {} times on [1, {}]",
        times.len(),
        cfg.linear.t_max
    ));
    let report: LowerBoundReport = lower_bound_audit(&p, &data, &times, EnvelopeOptions::default())?;
    let pass = report.pass;
    write_json(&out.join("audit.json"), "lower-bound-audit", cfg, &report)?;
    if pass {
        Ok(())
    } else {
        Err(CliError::AuditFail("scaled norms lost their positive floor".into()))
    }
}

#[derive(Debug, Serialize)]
struct RatesBody {
    dimension: u32,
    rates_file: &'static str,
    table: Vec<RateTable>,
}

fn rates(cfg: &RunConfig, out: &Path, rep: Reporter) -> Result<(), CliError> {
    let n = cfg.model.dimension as u32;
    let k = cfg.rates.points;
    let table = (1..=k)
        .map(|i| rate_table(n, 2.0 * i as f64 / (k + 1) as f64))
        .collect::<eas_core::Result<Vec<_>>>()?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.17e}"));
    let mut csv = String::from("alpha,r1,r2,incompressible,incompressible_valid,linf,gradient\n");
    for r in &table {
        csv.push_str(&format!(
            "{:.17e},{:.17e},{:.17e},{:.17e},{},{},{}\n",
            r.alpha,
            r.r1,
            r.r2,
            r.incompressible,
            r.incompressible_valid,
            opt(r.linf),
            opt(r.gradient)
        ));
    }
    write_text(&out.join("rates.csv"), &csv)?;
    rep.say(&format!("rates: {k} values of alpha for N = {n}"));
    write_json(
        &out.join(SUMMARY_FILE),
        "rates",
        cfg,
        RatesBody {
            dimension: n,
            rates_file: "rates.csv",
            table,
        },
    )
}

#[derive(Debug, Serialize)]
struct SweepEntry {
    dir: String,
    alpha: f64,
    amplitude: f64,
    seed: u64,
    status: String,
    exit_code: u8,
}

#[derive(Debug, Serialize)]
struct SweepBody {
    runs: Vec<SweepEntry>,
}

/// Runs `simulate` over the Cartesian product of the sweep lists, each in its own directory.
fn sweep(cfg: &RunConfig, out: &Path, rep: Reporter) -> Result<(), CliError> {
    let or = |v: &[f64], base: f64| if v.is_empty() { vec![base] } else { v.to_vec() };
    let alphas = or(&cfg.sweep.alpha, cfg.model.alpha);
    let amps = or(&cfg.sweep.amplitude, cfg.scenario.amplitude);
    let seeds = if cfg.sweep.seeds.is_empty() {
        vec![cfg.scenario.seed]
    } else {
        cfg.sweep.seeds.clone()
    };
    let mut jobs = Vec::new();
    for &alpha in &alphas {
        for &amplitude in &amps {
            for &seed in &seeds {
                let mut c = cfg.clone();
                c.command = Command::Simulate;
                c.model.alpha = alpha;
                c.scenario.amplitude = amplitude;
                c.scenario.seed = seed;
                c.sweep = Default::default();
                jobs.push(c);
            }
        }
    }
    rep.say(&format!("sweep: {} runs", jobs.len()));
    let quiet = Reporter { quiet: true };
    let runs: Vec<SweepEntry> = jobs
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let dir = format!("run_{i:03}");
            let result = c.validate().and_then(|_| execute(c, &out.join(&dir), quiet));
            let (status, exit_code) = match &result {
                Ok(()) => ("ok".to_string(), 0),
                Err(e) => (e.to_string(), e.exit_code()),
            };
            SweepEntry {
                dir,
                alpha: c.model.alpha,
                amplitude: c.scenario.amplitude,
                seed: c.scenario.seed,
                status,
                exit_code,
            }
        })
        .collect();
    let worst = runs.iter().map(|r| r.exit_code).max().unwrap_or(0);
    let failed = runs.iter().filter(|r| r.exit_code != 0).count();
    write_json(&out.join(SUMMARY_FILE), "sweep", cfg, SweepBody { runs })?;
    match worst {
        0 => Ok(()),
        2 => Err(CliError::Config(format!(
            "{failed} sweep runs rejected their configuration"
        ))),
        3 => Err(CliError::Numerical(format!("{failed} sweep runs failed numerically"))),
        4 => Err(CliError::AuditFail(format!("{failed} sweep runs failed an audit"))),
        _ => Err(CliError::Io(format!("{failed} sweep runs failed"))),
    }
}

#[derive(Debug, Serialize)]
struct BoxBody {
    lengths: Vec<f64>,
    points_per_axis: Vec<usize>,
    comparisons: Vec<BoxComparison>,
    t_box: f64,
    /// `[fit.window[0] or t_end/10, t_box]`.
    window: [f64; 2],
    series_files: Vec<String>,
    /// Fits on the second-largest box over the validated window.
    fits: Vec<FitOutcome>,
}

fn box_study(cfg: &RunConfig, out: &Path, rep: Reporter) -> Result<(), CliError> {
    let p = cfg.params()?;
    let study = BoxStudy {
        params: p,
        scenario: cfg.scenario_spec(),
        stepper: cfg.stepper_config(),
        energy: cfg.energy(&p),
        spacing: cfg.grid.length / cfg.grid.points as f64,
        t_end: cfg.t_end,
        quantities: cfg.fit.quantities.clone(),
        tolerance: cfg.box_study.tolerance,
    };
    rep.say(&format!("box-sensitivity: lengths {:?}", cfg.box_study.lengths));
    let report = box_sensitivity(&study, &cfg.box_study.lengths)?;
    let mut files = Vec::new();
    for (l, s) in report.lengths.iter().zip(&report.series) {
        let name = format!("series_L{l}.csv");
        write_text(&out.join(&name), &s.to_csv())?;
        files.push(name);
    }
    let start = cfg.fit.window.map_or(cfg.t_end / 10.0, |w| w[0]);
    let window = [start, report.t_box];
    let reference = &report.series[report.series.len() - 2];
    let body = BoxBody {
        fits: fits(reference, &cfg.fit.quantities, window),
        lengths: report.lengths.clone(),
        points_per_axis: report.points_per_axis.clone(),
        comparisons: report.comparisons.clone(),
        t_box: report.t_box,
        window,
        series_files: files,
    };
    write_json(&out.join(SUMMARY_FILE), "box-sensitivity", cfg, body)?;
    rep.say(&format!("box-sensitivity: t_box = {}", report.t_box));
    Ok(())
}
