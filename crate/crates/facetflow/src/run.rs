//! Batch runs: orchestrates a mode, writes field CSVs and `summary.json`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{load_config, Mode, RunConfig};
use crate::diagnostics::{
    apriori_report, degiorgi_iterate, gradient_bound_monitor, inequality_fuzz, DeGiorgiParams,
    EstimateReport, FuzzSummary, MonitorReport,
};
use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField, VectorField};
use crate::io::dump_field;
use crate::scheme::{
    continuation_solve, evolve, extract_h, solve_stationary, LevelDiagnostics, StageReport,
};

pub const EXIT_CONVERGED: i32 = 0;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_IO: i32 = 4;

pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Clone, Debug, Default, Serialize)]
pub struct StepSummary {
    pub step: usize,
    pub tau_final: f64,
    pub surface_energy: f64,
    pub grad_u_sup: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DeGiorgiCase {
    pub name: String,
    pub params: DeGiorgiParams,
    pub expected: String,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifySummary {
    pub fuzz: FuzzSummary,
    pub degiorgi: Vec<DeGiorgiCase>,
    pub violations: usize,
}

/// Everything a run reports. Field order is the serialized key order;
/// `timings` is the only nondeterministic part.
#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub version: String,
    pub mode: Option<Mode>,
    pub status: String,
    pub exit_code: i32,
    pub failure_stage: Option<String>,
    pub errors: Vec<String>,
    pub config: Option<RunConfig>,
    pub outputs: Vec<String>,
    pub stages: Vec<StageReport>,
    pub levels: Vec<LevelDiagnostics>,
    pub estimates: Vec<EstimateReport>,
    pub monitor: Option<MonitorReport>,
    pub trajectory: Vec<StepSummary>,
    pub verify: Option<VerifySummary>,
    /// Seconds per stage.
    pub timings: BTreeMap<String, f64>,
}

impl RunSummary {
    fn new(config: Option<&RunConfig>) -> Self {
        Self {
            version: format!("facetflow {}", env!("CARGO_PKG_VERSION")),
            mode: config.map(|c| c.mode),
            status: "running".into(),
            exit_code: EXIT_CONVERGED,
            failure_stage: None,
            errors: Vec::new(),
            config: config.cloned(),
            outputs: Vec::new(),
            stages: Vec::new(),
            levels: Vec::new(),
            estimates: Vec::new(),
            monitor: None,
            trajectory: Vec::new(),
            verify: None,
            timings: BTreeMap::new(),
        }
    }

    fn fail(&mut self, stage: &str, code: i32, err: &Error) {
        self.failure_stage = Some(stage.to_string());
        self.exit_code = code;
        match err {
            Error::Config(v) => self.errors.extend(v.iter().cloned()),
            e => self.errors.push(e.to_string()),
        }
    }

    fn not_converged(&mut self, stage: &str) {
        if self.exit_code == EXIT_CONVERGED {
            self.exit_code = EXIT_NOT_CONVERGED;
            self.failure_stage = Some(stage.to_string());
            self.errors.push(format!("{stage} did not converge"));
        }
    }

    fn finish_status(&mut self) {
        self.status = match self.exit_code {
            EXIT_CONVERGED => "converged",
            EXIT_NOT_CONVERGED => "not_converged",
            EXIT_CONFIG => "config_error",
            _ => "io_error",
        }
        .into();
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes") + "\n"
    }

    /// JSON with `timings` emptied, for byte comparisons between runs.
    pub fn to_json_without_timings(&self) -> String {
        let mut s = self.clone();
        s.timings.clear();
        s.to_json()
    }
}

/// Exit code for an error raised outside the solvers.
fn input_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) | Error::FieldFormat { .. } => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

/// Exit code for an error raised by a solver stage.
fn solver_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) => EXIT_IO,
        Error::InvalidParams(_) | Error::Config(_) => EXIT_CONFIG,
        _ => EXIT_NOT_CONVERGED,
    }
}

struct Timer<'a> {
    timings: &'a mut BTreeMap<String, f64>,
}

impl Timer<'_> {
    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        *self.timings.entry(stage.to_string()).or_default() += t.elapsed().as_secs_f64();
        out
    }
}

struct Writer<'a> {
    dir: &'a Path,
    outputs: Vec<String>,
}

impl Writer<'_> {
    fn field(&mut self, name: &str, field: &ScalarField) -> Result<()> {
        dump_field(field, &self.dir.join(name))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    fn vector(&mut self, x_name: &str, y_name: &str, h: &VectorField) -> Result<()> {
        self.field(x_name, &h.component(|v| v.x))?;
        self.field(y_name, &h.component(|v| v.y))
    }
}

/// Runs `config`, writes its outputs under `config.out` and returns the
/// summary; `summary.exit_code` is the process exit code.
pub fn run(config: &RunConfig) -> RunSummary {
    let mut summary = RunSummary::new(Some(config));
    if let Err(e) = fs::create_dir_all(&config.out) {
        summary.fail("output", EXIT_IO, &e.into());
        summary.finish_status();
        return summary;
    }
    let mut writer = Writer {
        dir: &config.out,
        outputs: Vec::new(),
    };
    let mut timings = BTreeMap::new();
    let result = {
        let mut timer = Timer {
            timings: &mut timings,
        };
        match config.mode {
            Mode::Stationary => run_stationary(config, &mut summary, &mut writer, &mut timer),
            Mode::Continuation => run_continuation(config, &mut summary, &mut writer, &mut timer),
            Mode::Evolve => run_evolve(config, &mut summary, &mut writer, &mut timer),
            Mode::Verify => {
                run_verify(config, &mut summary, &mut timer);
                Ok(())
            }
        }
    };
    if let Err((stage, code, e)) = result {
        summary.fail(&stage, code, &e);
    }
    summary.outputs = writer.outputs;
    summary.timings = timings;
    summary.finish_status();
    if let Err(e) = fs::write(config.out.join(SUMMARY_FILE), summary.to_json()) {
        summary.fail("summary", EXIT_IO, &e.into());
        summary.finish_status();
    }
    summary
}

type StageResult = std::result::Result<(), (String, i32, Error)>;

fn at<T>(stage: &str, code: fn(&Error) -> i32, r: Result<T>) -> std::result::Result<T, (String, i32, Error)> {
    r.map_err(|e| (stage.to_string(), code(&e), e))
}

fn build_grid(config: &RunConfig) -> std::result::Result<Grid, (String, i32, Error)> {
    let spec = config
        .grid
        .ok_or_else(|| Error::Config(vec![format!("mode {} requires [grid]", config.mode)]));
    at("load", input_code, spec.and_then(|g| g.build()))
}

fn realize(
    config: &RunConfig,
    which: &str,
    grid: Grid,
) -> std::result::Result<Option<ScalarField>, (String, i32, Error)> {
    let spec = match which {
        "f" => &config.f,
        "u0" => &config.u0,
        _ => &config.f_ext,
    };
    match spec {
        None => Ok(None),
        Some(s) => at(&format!("load.{which}"), input_code, s.realize(grid)).map(Some),
    }
}

fn required(
    config: &RunConfig,
    which: &str,
    field: Option<ScalarField>,
) -> std::result::Result<ScalarField, (String, i32, Error)> {
    field.ok_or_else(|| {
        (
            "load".to_string(),
            EXIT_CONFIG,
            Error::Config(vec![format!("mode {} requires [data.{which}]", config.mode)]),
        )
    })
}

fn run_stationary(
    config: &RunConfig,
    summary: &mut RunSummary,
    writer: &mut Writer,
    timer: &mut Timer,
) -> StageResult {
    let grid = build_grid(config)?;
    let f = timer.time("load", || realize(config, "f", grid))?;
    let f = required(config, "f", f)?;
    let params = config.model;
    let out = timer.time("solve", || solve_stationary(&f, &params, &config.picard));
    let out = at("stationary", solver_code, out)?;
    summary.stages = out.reports.clone();
    let h = extract_h(&out.u, params.tau);
    let est = timer.time("diagnostics", || apriori_report(&out.u, &out.v, Some(&h), &f, &params));
    summary.estimates.push(at("diagnostics", solver_code, est)?);
    timer.time("write", || -> StageResult {
        at("write", input_code, writer.field("u.csv", &out.u))?;
        at("write", input_code, writer.field("v.csv", &out.v))?;
        at("write", input_code, writer.vector("h_x.csv", "h_y.csv", &h))
    })?;
    if !out.converged {
        summary.not_converged("stationary");
    }
    Ok(())
}

fn run_continuation(
    config: &RunConfig,
    summary: &mut RunSummary,
    writer: &mut Writer,
    timer: &mut Timer,
) -> StageResult {
    let grid = build_grid(config)?;
    let f = timer.time("load", || realize(config, "f", grid))?;
    let f = required(config, "f", f)?;
    let params = config.model;
    let sol = timer.time("solve", || {
        continuation_solve(&f, &params, &config.schedule, &config.picard)
    });
    let sol = at("continuation", solver_code, sol)?;
    summary.stages = sol.reports.clone();
    summary.levels = sol.levels.clone();
    let pairs: Vec<(f64, f64)> = sol.levels.iter().map(|l| (l.tau, l.grad_u_sup)).collect();
    summary.monitor = Some(gradient_bound_monitor(&pairs, params.p));
    let pt = params.with_tau(sol.tau_final);
    let est = timer.time("diagnostics", || apriori_report(&sol.u, &sol.v, Some(&sol.h), &f, &pt));
    summary.estimates.push(at("diagnostics", solver_code, est)?);
    timer.time("write", || -> StageResult {
        at("write", input_code, writer.field("u.csv", &sol.u))?;
        at("write", input_code, writer.field("v.csv", &sol.v))?;
        at("write", input_code, writer.vector("h_x.csv", "h_y.csv", &sol.h))
    })?;
    if !sol.converged {
        let tau = sol.levels.last().map_or(pt.tau, |l| l.tau);
        summary.not_converged(&format!("continuation.level(tau={tau:e})"));
    }
    Ok(())
}

fn run_evolve(
    config: &RunConfig,
    summary: &mut RunSummary,
    writer: &mut Writer,
    timer: &mut Timer,
) -> StageResult {
    let grid = build_grid(config)?;
    let u0 = timer.time("load", || realize(config, "u0", grid))?;
    let u0 = required(config, "u0", u0)?;
    let f_ext = timer.time("load", || realize(config, "f_ext", grid))?;
    let nsteps = match config.nsteps {
        Some(n) if n >= 1 => n,
        _ => {
            return Err((
                "load".into(),
                EXIT_CONFIG,
                Error::Config(vec!["evolve.nsteps must be >= 1".into()]),
            ))
        }
    };
    let params = config.model;
    let traj = timer.time("solve", || {
        evolve(
            &u0,
            f_ext.as_ref(),
            &params,
            params.delta,
            nsteps,
            &config.schedule,
            &config.picard,
        )
    });
    let traj = at("evolve", solver_code, traj)?;
    let step_params = crate::model::ModelParams {
        a: 1.0 / params.delta,
        ..params
    };
    let mut u_prev = u0;
    for s in &traj.steps {
        let sol = &s.solution;
        summary.stages.extend(sol.reports.iter().cloned().map(|mut r| {
            r.stage = format!("step{}.{}", s.step, r.stage);
            r
        }));
        summary.trajectory.push(StepSummary {
            step: s.step,
            tau_final: sol.tau_final,
            surface_energy: s.surface_energy,
            grad_u_sup: s.grad_u_sup,
            converged: sol.converged,
        });
        let mut f = u_prev.map(|x| x / params.delta);
        if let Some(fe) = &f_ext {
            f = at("diagnostics", solver_code, f.zip_map(fe, |a, b| a + b))?;
        }
        let pt = step_params.with_tau(sol.tau_final);
        let est = timer.time("diagnostics", || apriori_report(&sol.u, &sol.v, Some(&sol.h), &f, &pt));
        summary.estimates.push(at("diagnostics", solver_code, est)?);
        let k = s.step;
        timer.time("write", || -> StageResult {
            at("write", input_code, writer.field(&format!("u_step{k}.csv"), &sol.u))?;
            at("write", input_code, writer.field(&format!("v_step{k}.csv"), &sol.v))?;
            at(
                "write",
                input_code,
                writer.vector(&format!("h_step{k}_x.csv"), &format!("h_step{k}_y.csv"), &sol.h),
            )
        })?;
        if !sol.converged {
            summary.not_converged(&format!("evolve.step{k}"));
        }
        u_prev = sol.u.clone();
    }
    if let Some(last) = traj.steps.last() {
        summary.levels = last.solution.levels.clone();
    }
    Ok(())
}

/// Random De Giorgi instances started strictly below the threshold; each
/// must converge.
const DEGIORGI_RANDOM_CASES: usize = 200;

fn degiorgi_suite(seed: u64) -> Vec<DeGiorgiCase> {
    let mut cases = Vec::new();
    let closed = DeGiorgiParams {
        c: 1.0,
        b: 2.0,
        alpha: 1.0,
        y0: 0.5,
        n_max: 40,
    };
    let passed = degiorgi_iterate(&closed).is_ok_and(|o| {
        o.sequence.len() == 41
            && o.sequence
                .iter()
                .enumerate()
                .all(|(n, &y)| y == 2f64.powi(-(n as i32) - 1))
    });
    cases.push(DeGiorgiCase {
        name: "closed_form".into(),
        params: closed,
        expected: "y_n = 2^-(n+1) exactly".into(),
        passed,
    });
    let above = DeGiorgiParams { y0: 1.0, ..closed };
    cases.push(DeGiorgiCase {
        name: "divergence".into(),
        params: above,
        expected: "divergence detected".into(),
        passed: degiorgi_iterate(&above).is_ok_and(|o| o.diverged && !o.converged),
    });
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..DEGIORGI_RANDOM_CASES {
        let mut dg = DeGiorgiParams {
            c: rng.gen_range(0.5..4.0),
            b: rng.gen_range(1.1..4.0),
            alpha: rng.gen_range(0.25..2.0),
            y0: 0.0,
            n_max: 200,
        };
        dg.y0 = dg.threshold() * rng.gen_range(0.0..0.999);
        cases.push(DeGiorgiCase {
            name: format!("below_threshold_{i}"),
            params: dg,
            expected: "converges".into(),
            passed: degiorgi_iterate(&dg).is_ok_and(|o| o.threshold_pass && o.converged),
        });
    }
    cases
}

fn run_verify(config: &RunConfig, summary: &mut RunSummary, timer: &mut Timer) {
    let fuzz = timer.time("inequality_fuzz", || {
        inequality_fuzz(&config.model, config.verify.samples, config.verify.seed)
    });
    let degiorgi = timer.time("degiorgi", || degiorgi_suite(config.verify.seed));
    let violations = fuzz.checks.iter().map(|c| c.failures).sum::<usize>()
        + degiorgi.iter().filter(|c| !c.passed).count();
    summary.verify = Some(VerifySummary {
        fuzz,
        degiorgi,
        violations,
    });
    if violations > 0 {
        summary.exit_code = EXIT_NOT_CONVERGED;
        summary.failure_stage = Some("verify".into());
        summary.errors.push(format!("{violations} verification violations"));
    }
}

/// Command-line entry: loads the configuration, applies overrides, runs.
///
/// A configuration that cannot be loaded still yields a summary, written to
/// `out` when one was given.
pub fn run_cli(mode: Mode, config_path: &Path, out: Option<PathBuf>, seed: Option<u64>) -> RunSummary {
    match load_config(config_path, Some(mode)) {
        Ok(mut cfg) => {
            if let Some(o) = out {
                cfg.out = o;
            } else if cfg.out.is_relative() {
                let base = config_path.parent().unwrap_or(Path::new("."));
                cfg.out = base.join(&cfg.out);
            }
            if let Some(s) = seed {
                cfg.seed = s;
                cfg.verify.seed = s;
            }
            run(&cfg)
        }
        Err(e) => {
            let mut summary = RunSummary::new(None);
            summary.mode = Some(mode);
            summary.fail("config", input_code(&e), &e);
            summary.finish_status();
            if let Some(dir) = out {
                let _ = fs::create_dir_all(&dir)
                    .and_then(|_| fs::write(dir.join(SUMMARY_FILE), summary.to_json()));
            }
            summary
        }
    }
}
