//! Run configuration in TOML.
//!
//! ```toml
//! [run]
//! mode = "continuation"
//! seed = 7
//! out = "out/bump"
//!
//! [grid]
//! nx = 64
//! ny = 64
//!
//! [model]
//! p = 1.5
//!
//! [data.f]
//! preset = "gaussian-bump"
//! params = { amplitude = 1.0 }
//! ```
//!
//! Every section and key is checked; the parser reports all problems at once.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField, DEFAULT_MAX_CELLS};
use crate::io::load_field;
use crate::model::ModelParams;
use crate::presets::Preset;
use crate::scheme::{PicardOptions, TauSchedule};
use crate::vsolver::Preconditioner;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Stationary,
    Continuation,
    Evolve,
    Verify,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Stationary => "stationary",
            Mode::Continuation => "continuation",
            Mode::Evolve => "evolve",
            Mode::Verify => "verify",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "stationary" => Ok(Mode::Stationary),
            "continuation" => Ok(Mode::Continuation),
            "evolve" => Ok(Mode::Evolve),
            "verify" => Ok(Mode::Verify),
            other => Err(format!(
                "unknown mode {other:?} (expected stationary, continuation, evolve or verify)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataSpec {
    Constant(f64),
    Preset {
        name: Preset,
        params: BTreeMap<String, f64>,
    },
    /// Resolved against the configuration's base directory.
    File(PathBuf),
}

impl DataSpec {
    pub fn realize(&self, grid: Grid) -> Result<ScalarField> {
        match self {
            DataSpec::Constant(c) => Ok(ScalarField::constant(grid, *c)),
            DataSpec::Preset { name, params } => name.sample(grid, params),
            DataSpec::File(path) => load_field(path, grid),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.nx, self.ny, self.lx, self.ly)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifySpec {
    pub samples: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub seed: u64,
    pub out: PathBuf,
    pub grid: Option<GridSpec>,
    pub model: ModelParams,
    pub schedule: TauSchedule,
    pub picard: PicardOptions,
    pub f: Option<DataSpec>,
    pub u0: Option<DataSpec>,
    pub f_ext: Option<DataSpec>,
    pub nsteps: Option<usize>,
    pub verify: VerifySpec,
}

/// Parses a configuration whose `[run] mode` is set; paths are relative to
/// the working directory.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_with(text, None, Path::new("."))
}

/// Reads a configuration file; data paths resolve against its directory.
pub fn load_config(path: &Path, mode: Option<Mode>) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config_with(&text, mode, base)
}

/// `mode`, when given, must agree with `[run] mode` if that is present.
pub fn parse_config_with(text: &str, mode: Option<Mode>, base: &Path) -> Result<RunConfig> {
    let table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(vec![format!("malformed TOML: {}", e.message())]))?;
    let mut v = Validator::default();
    let cfg = v.config(&table, mode, base);
    match cfg {
        Some(cfg) if v.errors.is_empty() => Ok(cfg),
        _ => Err(Error::Config(v.errors)),
    }
}

#[derive(Default)]
struct Validator {
    errors: Vec<String>,
}

const SECTIONS: &[&str] = &[
    "run", "grid", "model", "schedule", "picard", "usolve", "vsolve", "data", "evolve", "verify",
];

impl Validator {
    fn err(&mut self, msg: impl Into<String>) {
        self.errors.push(msg.into());
    }

    fn section<'a>(&mut self, root: &'a Table, name: &str, keys: &[&str]) -> Option<&'a Table> {
        match root.get(name) {
            None => None,
            Some(Value::Table(t)) => {
                self.unknown(t, name, keys);
                Some(t)
            }
            Some(_) => {
                self.err(format!("[{name}] must be a table"));
                None
            }
        }
    }

    fn unknown(&mut self, t: &Table, name: &str, keys: &[&str]) {
        for k in t.keys() {
            if !keys.contains(&k.as_str()) {
                self.err(format!("unknown key {name}.{k}"));
            }
        }
    }

    fn float(&mut self, t: Option<&Table>, sec: &str, key: &str) -> Option<f64> {
        match t?.get(key)? {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            _ => {
                self.err(format!("{sec}.{key} must be a number"));
                None
            }
        }
    }

    fn uint(&mut self, t: Option<&Table>, sec: &str, key: &str) -> Option<usize> {
        match t?.get(key)? {
            Value::Integer(i) if *i >= 0 => Some(*i as usize),
            _ => {
                self.err(format!("{sec}.{key} must be a non-negative integer"));
                None
            }
        }
    }

    fn boolean(&mut self, t: Option<&Table>, sec: &str, key: &str) -> Option<bool> {
        match t?.get(key)? {
            Value::Boolean(b) => Some(*b),
            _ => {
                self.err(format!("{sec}.{key} must be true or false"));
                None
            }
        }
    }

    fn string<'a>(&mut self, t: Option<&'a Table>, sec: &str, key: &str) -> Option<&'a str> {
        match t?.get(key)? {
            Value::String(s) => Some(s),
            _ => {
                self.err(format!("{sec}.{key} must be a string"));
                None
            }
        }
    }

    fn config(&mut self, root: &Table, cli_mode: Option<Mode>, base: &Path) -> Option<RunConfig> {
        for k in root.keys() {
            if !SECTIONS.contains(&k.as_str()) {
                self.err(format!("unknown section [{k}]"));
            }
        }
        let run = self.section(root, "run", &["mode", "seed", "out"]);
        let file_mode = match self.string(run, "run", "mode") {
            Some(s) => match s.parse::<Mode>() {
                Ok(m) => Some(m),
                Err(e) => {
                    self.err(format!("run.mode: {e}"));
                    None
                }
            },
            None => None,
        };
        let mode = match (cli_mode, file_mode) {
            (Some(c), Some(f)) if c != f => {
                self.err(format!("run.mode = {f} conflicts with the requested mode {c}"));
                Some(c)
            }
            (Some(c), _) => Some(c),
            (None, Some(f)) => Some(f),
            (None, None) => {
                if !self.errors.iter().any(|e| e.starts_with("run.mode")) {
                    self.err("missing run.mode");
                }
                None
            }
        };
        let seed = self.uint(run, "run", "seed").unwrap_or(0) as u64;
        let out = self
            .string(run, "run", "out")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("out"));

        let grid = self.grid(root, mode);
        let model = self.model(root);
        let schedule = self.schedule(root);
        let picard = self.picard(root);
        let data = self.section(root, "data", &["f", "u0", "f_ext"]);
        let f = self.data(data, "f", base);
        let u0 = self.data(data, "u0", base);
        let f_ext = self.data(data, "f_ext", base);
        let evolve = self.section(root, "evolve", &["nsteps"]);
        let nsteps = self.uint(evolve, "evolve", "nsteps");
        let verify_t = self.section(root, "verify", &["samples", "seed"]);
        let verify = VerifySpec {
            samples: self.uint(verify_t, "verify", "samples").unwrap_or(100_000),
            seed: self
                .uint(verify_t, "verify", "seed")
                .map(|s| s as u64)
                .unwrap_or(seed),
        };
        if verify.samples == 0 {
            self.err("verify.samples must be >= 1");
        }

        let mode = mode?;
        let needs = |what: &str| format!("mode {mode} requires {what}");
        match mode {
            Mode::Stationary | Mode::Continuation => {
                if f.is_none() && data.and_then(|d| d.get("f")).is_none() {
                    self.err(needs("[data.f]"));
                }
            }
            Mode::Evolve => {
                if u0.is_none() && data.and_then(|d| d.get("u0")).is_none() {
                    self.err(needs("[data.u0]"));
                }
                match nsteps {
                    None if evolve.and_then(|e| e.get("nsteps")).is_none() => {
                        self.err(needs("evolve.nsteps"))
                    }
                    Some(0) => self.err("evolve.nsteps must be >= 1"),
                    _ => {}
                }
            }
            Mode::Verify => {}
        }
        if mode != Mode::Verify && grid.is_none() && root.get("grid").is_none() {
            self.err(needs("[grid] with nx and ny"));
        }
        Some(RunConfig {
            mode,
            seed,
            out,
            grid,
            model: model?,
            schedule: schedule?,
            picard: picard?,
            f,
            u0,
            f_ext,
            nsteps,
            verify,
        })
    }

    fn grid(&mut self, root: &Table, mode: Option<Mode>) -> Option<GridSpec> {
        let t = self.section(root, "grid", &["nx", "ny", "lx", "ly", "max_cells"]);
        t?;
        let nx = self.uint(t, "grid", "nx");
        let ny = self.uint(t, "grid", "ny");
        let lx = self.float(t, "grid", "lx").unwrap_or(1.0);
        let ly = self.float(t, "grid", "ly").unwrap_or(1.0);
        let cap = self.uint(t, "grid", "max_cells").unwrap_or(DEFAULT_MAX_CELLS);
        let m = mode.map_or("this".into(), |m| m.to_string());
        if t.is_some_and(|t| !t.contains_key("nx")) {
            self.err(format!("mode {m} requires grid.nx"));
        }
        if t.is_some_and(|t| !t.contains_key("ny")) {
            self.err(format!("mode {m} requires grid.ny"));
        }
        let (nx, ny) = (nx?, ny?);
        let v = Grid::violations(nx, ny, lx, ly, cap);
        if !v.is_empty() {
            self.errors.extend(v);
            return None;
        }
        Some(GridSpec { nx, ny, lx, ly })
    }

    fn model(&mut self, root: &Table) -> Option<ModelParams> {
        let t = self.section(
            root,
            "model",
            &["p", "beta", "q", "a", "tau", "delta", "relaxed_p"],
        );
        let d = ModelParams::default();
        let m = ModelParams {
            p: self.float(t, "model", "p").unwrap_or(d.p),
            beta: self.float(t, "model", "beta").unwrap_or(d.beta),
            q: self.float(t, "model", "q").unwrap_or(d.q),
            a: self.float(t, "model", "a").unwrap_or(d.a),
            tau: self.float(t, "model", "tau").unwrap_or(d.tau),
            delta: self.float(t, "model", "delta").unwrap_or(d.delta),
            relaxed_p: self.boolean(t, "model", "relaxed_p").unwrap_or(d.relaxed_p),
        };
        self.errors.extend(m.violations());
        Some(m)
    }

    fn schedule(&mut self, root: &Table) -> Option<TauSchedule> {
        let t = self.section(root, "schedule", &["tau0", "ratio", "tau_min"]);
        let d = TauSchedule::default();
        let s = TauSchedule {
            tau0: self.float(t, "schedule", "tau0").unwrap_or(d.tau0),
            ratio: self.float(t, "schedule", "ratio").unwrap_or(d.ratio),
            tau_min: self.float(t, "schedule", "tau_min").unwrap_or(d.tau_min),
        };
        self.errors.extend(s.violations());
        Some(s)
    }

    fn picard(&mut self, root: &Table) -> Option<PicardOptions> {
        let d = PicardOptions::default();
        let t = self.section(root, "picard", &["damping", "tol_fp", "max_picard"]);
        let u = self.section(
            root,
            "usolve",
            &["tol_residual", "max_newton", "armijo_c", "armijo_shrink"],
        );
        let vs = self.section(root, "vsolve", &["tol", "max_cg", "preconditioner"]);
        let preconditioner = match self.string(vs, "vsolve", "preconditioner") {
            None => d.vsolve.preconditioner,
            Some("diagonal") => Preconditioner::Diagonal,
            Some("none") => Preconditioner::None,
            Some(other) => {
                self.err(format!(
                    "vsolve.preconditioner = {other:?}: expected \"diagonal\" or \"none\""
                ));
                d.vsolve.preconditioner
            }
        };
        let mut o = d;
        o.damping = self.float(t, "picard", "damping").unwrap_or(d.damping);
        o.tol_fp = self.float(t, "picard", "tol_fp").unwrap_or(d.tol_fp);
        o.max_picard = self.uint(t, "picard", "max_picard").unwrap_or(d.max_picard);
        o.usolve.tol_residual = self
            .float(u, "usolve", "tol_residual")
            .unwrap_or(d.usolve.tol_residual);
        o.usolve.max_newton = self.uint(u, "usolve", "max_newton").unwrap_or(d.usolve.max_newton);
        o.usolve.armijo_c = self.float(u, "usolve", "armijo_c").unwrap_or(d.usolve.armijo_c);
        o.usolve.armijo_shrink = self
            .float(u, "usolve", "armijo_shrink")
            .unwrap_or(d.usolve.armijo_shrink);
        o.vsolve.tol = self.float(vs, "vsolve", "tol").unwrap_or(d.vsolve.tol);
        o.vsolve.max_cg = self.uint(vs, "vsolve", "max_cg").or(d.vsolve.max_cg);
        o.vsolve.preconditioner = preconditioner;
        self.errors.extend(o.violations());
        Some(o)
    }

    fn data(&mut self, data: Option<&Table>, key: &str, base: &Path) -> Option<DataSpec> {
        let name = format!("data.{key}");
        let t = match data?.get(key)? {
            Value::Table(t) => t,
            _ => {
                self.err(format!("[{name}] must be a table"));
                return None;
            }
        };
        self.unknown(t, &name, &["constant", "preset", "params", "file"]);
        let kinds = ["constant", "preset", "file"]
            .iter()
            .filter(|k| t.contains_key(**k))
            .count();
        if kinds != 1 {
            self.err(format!(
                "[{name}] needs exactly one of constant, preset or file"
            ));
            return None;
        }
        if t.contains_key("params") && !t.contains_key("preset") {
            self.err(format!("{name}.params is only valid with a preset"));
        }
        if let Some(c) = self.float(Some(t), &name, "constant") {
            if !c.is_finite() {
                self.err(format!("{name}.constant must be finite"));
            }
            return Some(DataSpec::Constant(c));
        }
        if let Some(p) = self.string(Some(t), &name, "preset") {
            let preset = match Preset::parse(p) {
                Ok(p) => p,
                Err(e) => {
                    self.err(format!("{name}.preset: {e}"));
                    return None;
                }
            };
            let mut params = BTreeMap::new();
            match t.get("params") {
                None => {}
                Some(Value::Table(pt)) => {
                    for k in pt.keys() {
                        match self.float(Some(pt), &format!("{name}.params"), k) {
                            Some(x) if preset.defaults().iter().any(|(n, _)| n == k) => {
                                params.insert(k.clone(), x);
                            }
                            Some(_) => self.err(format!(
                                "unknown key {name}.params.{k} for preset {}",
                                preset.name()
                            )),
                            None => {}
                        }
                    }
                }
                Some(_) => self.err(format!("{name}.params must be a table")),
            }
            return Some(DataSpec::Preset {
                name: preset,
                params,
            });
        }
        if let Some(f) = self.string(Some(t), &name, "file") {
            let path = base.join(f);
            if !path.is_file() {
                self.err(format!("{name}.file {} does not exist", path.display()));
            }
            return Some(DataSpec::File(path));
        }
        None
    }
}
