//! Run configuration.
//!
//! Plain text, one `key = value` per line; `#` starts a comment and blank
//! lines are ignored. Keys are case-sensitive and unknown keys are an error.
//! Values given with `--set key=value` override the file, and command-line
//! flags such as `--kernel` override both.
//!
//! ```text
//! kernel                = linear | quintic | family:<g(s)> | expr:<b(x)>
//! degree                = <int>                 basis degree N (default 6)
//! delta                 = auto | <real>         neighbourhood radius, auto = |gap|/16
//! initial               = zero | gap-eigvec | random(<seed>) | product-gaussian(<s1>,<s2>,<s3>)
//! initial_norm          = auto | <real>         norm for gap-eigvec/random, auto = delta
//! t_end                 = <real>                horizon (default 15)
//! grid_dt               = <real>                uniform output spacing (default 0.25)
//! grid_geometric_start  = <real>                first geometric output time (default 0.01, 0 = none)
//! grid_ratio            = <real>                geometric ratio (default 1.25)
//! dt                    = <real>                initial integrator step (default 0.1)
//! tol                   = <real>                step-halving tolerance on theta (default 1e-8)
//! nonlinear             = true | false
//! picard_window         = <real>                (default 1)
//! picard_steps_per_unit = <int>                 (default 128)
//! picard_tol            = <real>                (default 1e-13)
//! picard_max_iter       = <int>                 (default 60)
//! l1_order              = auto | <int>          first Gauss–Hermite order, auto = degree + 4
//! compare_degree        = none | <int>          rerun the theorem case at this degree
//! seed                  = <int>                 RNG seed (default 1)
//! trials                = <int>                 random trials for verification (default 500)
//! samples               = <int>                 Monte-Carlo samples per entry (default 1000000)
//! oracle_entries        = <int>                 entries of each kind for the oracle (default 20)
//! out_dir               = <path>                output directory (default maxwell-out)
//! ```

use std::fmt::Write;
use std::str::FromStr;

use maxwell_core::dynamics::InitialCondition;
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub kernel: String,
    pub degree: usize,
    pub delta: Option<f64>,
    pub initial: String,
    pub initial_norm: Option<f64>,
    pub t_end: f64,
    pub grid_dt: f64,
    pub grid_geometric_start: f64,
    pub grid_ratio: f64,
    pub dt: f64,
    pub tol: f64,
    pub nonlinear: bool,
    pub picard_window: f64,
    pub picard_steps_per_unit: usize,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    pub l1_order: Option<usize>,
    pub compare_degree: Option<usize>,
    pub seed: u64,
    pub trials: usize,
    pub samples: usize,
    pub oracle_entries: usize,
    pub out_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            kernel: "linear".into(),
            degree: 6,
            delta: None,
            initial: "gap-eigvec".into(),
            initial_norm: None,
            t_end: 15.0,
            grid_dt: 0.25,
            grid_geometric_start: 0.01,
            grid_ratio: 1.25,
            dt: 0.1,
            tol: 1e-8,
            nonlinear: true,
            picard_window: 1.0,
            picard_steps_per_unit: 128,
            picard_tol: 1e-13,
            picard_max_iter: 60,
            l1_order: None,
            compare_degree: None,
            seed: 1,
            trials: 500,
            samples: 1_000_000,
            oracle_entries: 20,
            out_dir: "maxwell-out".into(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("invalid value '{value}' for key '{key}'"))
}

fn parse_auto<T: FromStr>(key: &str, value: &str, auto: &str) -> Result<Option<T>, String> {
    if value == auto {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn show<T: ToString>(v: &Option<T>, auto: &str) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_else(|| auto.to_string())
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let (key, value) = (key.trim(), value.trim());
        match key {
            "kernel" => self.kernel = value.to_string(),
            "degree" => self.degree = parse(key, value)?,
            "delta" => self.delta = parse_auto(key, value, "auto")?,
            "initial" => {
                InitialCondition::parse(value).map_err(|e| e.to_string())?;
                self.initial = value.to_string();
            }
            "initial_norm" => self.initial_norm = parse_auto(key, value, "auto")?,
            "t_end" => self.t_end = parse(key, value)?,
            "grid_dt" => self.grid_dt = parse(key, value)?,
            "grid_geometric_start" => self.grid_geometric_start = parse(key, value)?,
            "grid_ratio" => self.grid_ratio = parse(key, value)?,
            "dt" => self.dt = parse(key, value)?,
            "tol" => self.tol = parse(key, value)?,
            "nonlinear" => self.nonlinear = parse(key, value)?,
            "picard_window" => self.picard_window = parse(key, value)?,
            "picard_steps_per_unit" => self.picard_steps_per_unit = parse(key, value)?,
            "picard_tol" => self.picard_tol = parse(key, value)?,
            "picard_max_iter" => self.picard_max_iter = parse(key, value)?,
            "l1_order" => self.l1_order = parse_auto(key, value, "auto")?,
            "compare_degree" => self.compare_degree = parse_auto(key, value, "none")?,
            "seed" => self.seed = parse(key, value)?,
            "trials" => self.trials = parse(key, value)?,
            "samples" => self.samples = parse(key, value)?,
            "oracle_entries" => self.oracle_entries = parse(key, value)?,
            "out_dir" => self.out_dir = value.to_string(),
            _ => return Err(format!("unknown config key '{key}'")),
        }
        Ok(())
    }

    /// Applies a `key=value` assignment.
    pub fn assign(&mut self, assignment: &str) -> Result<(), String> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| format!("expected key=value, got '{assignment}'"))?;
        self.set(k, v)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), String> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            self.assign(line).map_err(|e| format!("line {}: {e}", n + 1))?;
        }
        Ok(())
    }

    /// Canonical text form; feeding it back reproduces the config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("kernel", self.kernel.clone());
        kv("degree", self.degree.to_string());
        kv("delta", show(&self.delta, "auto"));
        kv("initial", self.initial.clone());
        kv("initial_norm", show(&self.initial_norm, "auto"));
        kv("t_end", self.t_end.to_string());
        kv("grid_dt", self.grid_dt.to_string());
        kv("grid_geometric_start", self.grid_geometric_start.to_string());
        kv("grid_ratio", self.grid_ratio.to_string());
        kv("dt", self.dt.to_string());
        kv("tol", self.tol.to_string());
        kv("nonlinear", self.nonlinear.to_string());
        kv("picard_window", self.picard_window.to_string());
        kv("picard_steps_per_unit", self.picard_steps_per_unit.to_string());
        kv("picard_tol", self.picard_tol.to_string());
        kv("picard_max_iter", self.picard_max_iter.to_string());
        kv("l1_order", show(&self.l1_order, "auto"));
        kv("compare_degree", show(&self.compare_degree, "none"));
        kv("seed", self.seed.to_string());
        kv("trials", self.trials.to_string());
        kv("samples", self.samples.to_string());
        kv("oracle_entries", self.oracle_entries.to_string());
        kv("out_dir", self.out_dir.clone());
        s
    }
}
