//! Flat key=value run configuration: language-neutral, diff-friendly, and
//! lossless through serialization (floats are written with 17 significant
//! digits).

use std::fmt::Write as _;
use std::path::Path;

use isoland_core::grid::Grading;

/// Scheme selector as spelled in config files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    Divergence,
    NonDivergence,
}

impl SchemeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SchemeKind::Divergence => "divergence",
            SchemeKind::NonDivergence => "nondivergence",
        }
    }
}

/// Initial-data selector.
#[derive(Debug, Clone, PartialEq)]
pub enum Initial {
    Gaussian(f64),
    Bump(f64),
    TwoBumps,
    File(String),
    Zero,
}

impl Initial {
    fn to_text(&self) -> String {
        match self {
            Initial::Gaussian(s) => format!("gaussian {}", fmt_f64(*s)),
            Initial::Bump(r) => format!("bump {}", fmt_f64(*r)),
            Initial::TwoBumps => "two_bumps".into(),
            Initial::File(p) => format!("file {p}"),
            Initial::Zero => "zero".into(),
        }
    }
}

/// Full run configuration with defaults suitable for the d = 3 desk scale.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub d: usize,
    pub gamma: f64,
    pub alpha: f64,
    pub scheme: SchemeKind,
    pub r_max: f64,
    pub n_cells: usize,
    /// Geometric cell-width ratio; 1.0 means uniform.
    pub grid_stretch: f64,
    pub dt: f64,
    pub t_end: f64,
    pub monitor_every: usize,
    pub snapshot_count: usize,
    pub p_list: Vec<f64>,
    pub initial: Initial,
    pub seed: u64,
    pub output_dir: String,
    /// Negativity clamp tolerance.
    pub tol_neg: f64,
    /// Per-interval Lp monotonicity tolerance.
    pub tol_mono: f64,
    /// Eigen ladder of Gaussian widths.
    pub sigma_ladder: Vec<f64>,
    /// Moser diagnostic parameters.
    pub moser_p0: f64,
    pub moser_r: f64,
    /// 0 means "use the trajectory end time".
    pub moser_t: f64,
    pub moser_n_max: usize,
    /// Verification suite sizes.
    pub suite_functions: usize,
    pub suite_cubes: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            d: 3,
            gamma: -2.0,
            alpha: 1.0,
            scheme: SchemeKind::Divergence,
            r_max: 12.0,
            n_cells: 512,
            grid_stretch: 1.0,
            dt: 1e-4,
            t_end: 0.1,
            monitor_every: 10,
            snapshot_count: 64,
            p_list: vec![1.0, 2.0],
            initial: Initial::Gaussian(1.0),
            seed: 0,
            output_dir: "out".into(),
            tol_neg: 1e-9,
            tol_mono: 1e-8,
            sigma_ladder: vec![1.0, 0.3, 0.1, 0.03, 0.01],
            moser_p0: 2.0,
            moser_r: 2.0,
            moser_t: 0.0,
            moser_n_max: 4,
            suite_functions: 100,
            suite_cubes: 200,
        }
    }
}

/// Format an f64 so that parsing it back is lossless.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(key: &str, v: &str) -> Result<f64, String> {
    v.parse::<f64>()
        .map_err(|_| format!("config field {key}: cannot parse `{v}` as a real number"))
}

fn parse_usize(key: &str, v: &str) -> Result<usize, String> {
    v.parse::<usize>()
        .map_err(|_| format!("config field {key}: cannot parse `{v}` as an integer"))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, String> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',')
        .map(|s| parse_f64(key, s.trim()))
        .collect()
}

impl RunConfig {
    /// Parse the flat key=value format (# starts a comment).
    pub fn parse(text: &str) -> Result<RunConfig, String> {
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key=value, got `{line}`", lineno + 1))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "d" => cfg.d = parse_usize(key, value)?,
                "gamma" => cfg.gamma = parse_f64(key, value)?,
                "alpha" => cfg.alpha = parse_f64(key, value)?,
                "scheme" => {
                    cfg.scheme = match value {
                        "divergence" => SchemeKind::Divergence,
                        "nondivergence" => SchemeKind::NonDivergence,
                        other => {
                            return Err(format!(
                                "config field scheme: `{other}` is not divergence|nondivergence"
                            ))
                        }
                    }
                }
                "r_max" => cfg.r_max = parse_f64(key, value)?,
                "n_cells" => cfg.n_cells = parse_usize(key, value)?,
                "grid_stretch" => cfg.grid_stretch = parse_f64(key, value)?,
                "dt" => cfg.dt = parse_f64(key, value)?,
                "t_end" => cfg.t_end = parse_f64(key, value)?,
                "monitor_every" => cfg.monitor_every = parse_usize(key, value)?,
                "snapshot_count" => cfg.snapshot_count = parse_usize(key, value)?,
                "p_list" => cfg.p_list = parse_list(key, value)?,
                "initial" => {
                    let mut it = value.split_whitespace();
                    let kind = it.next().unwrap_or("");
                    cfg.initial = match kind {
                        "gaussian" => Initial::Gaussian(parse_f64(
                            "initial",
                            it.next().ok_or("config field initial: gaussian needs a width")?,
                        )?),
                        "bump" => Initial::Bump(parse_f64(
                            "initial",
                            it.next().ok_or("config field initial: bump needs a radius")?,
                        )?),
                        "two_bumps" => Initial::TwoBumps,
                        "zero" => Initial::Zero,
                        "file" => Initial::File(
                            it.next()
                                .ok_or("config field initial: file needs a path")?
                                .to_string(),
                        ),
                        other => {
                            return Err(format!(
                                "config field initial: unknown kind `{other}`"
                            ))
                        }
                    };
                }
                "seed" => {
                    cfg.seed = value
                        .parse::<u64>()
                        .map_err(|_| format!("config field seed: cannot parse `{value}`"))?
                }
                "output_dir" => cfg.output_dir = value.to_string(),
                "tol_neg" => cfg.tol_neg = parse_f64(key, value)?,
                "tol_mono" => cfg.tol_mono = parse_f64(key, value)?,
                "sigma_ladder" => cfg.sigma_ladder = parse_list(key, value)?,
                "moser_p0" => cfg.moser_p0 = parse_f64(key, value)?,
                "moser_r" => cfg.moser_r = parse_f64(key, value)?,
                "moser_t" => cfg.moser_t = parse_f64(key, value)?,
                "moser_n_max" => cfg.moser_n_max = parse_usize(key, value)?,
                "suite_functions" => cfg.suite_functions = parse_usize(key, value)?,
                "suite_cubes" => cfg.suite_cubes = parse_usize(key, value)?,
                other => return Err(format!("unknown config field `{other}`")),
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        RunConfig::parse(&text)
    }

    /// Serialize; `RunConfig::parse(cfg.to_text())` reproduces `cfg`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let list = |v: &[f64]| {
            v.iter()
                .map(|&x| fmt_f64(x))
                .collect::<Vec<_>>()
                .join(",")
        };
        let _ = writeln!(s, "d = {}", self.d);
        let _ = writeln!(s, "gamma = {}", fmt_f64(self.gamma));
        let _ = writeln!(s, "alpha = {}", fmt_f64(self.alpha));
        let _ = writeln!(s, "scheme = {}", self.scheme.as_str());
        let _ = writeln!(s, "r_max = {}", fmt_f64(self.r_max));
        let _ = writeln!(s, "n_cells = {}", self.n_cells);
        let _ = writeln!(s, "grid_stretch = {}", fmt_f64(self.grid_stretch));
        let _ = writeln!(s, "dt = {}", fmt_f64(self.dt));
        let _ = writeln!(s, "t_end = {}", fmt_f64(self.t_end));
        let _ = writeln!(s, "monitor_every = {}", self.monitor_every);
        let _ = writeln!(s, "snapshot_count = {}", self.snapshot_count);
        let _ = writeln!(s, "p_list = {}", list(&self.p_list));
        let _ = writeln!(s, "initial = {}", self.initial.to_text());
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "output_dir = {}", self.output_dir);
        let _ = writeln!(s, "tol_neg = {}", fmt_f64(self.tol_neg));
        let _ = writeln!(s, "tol_mono = {}", fmt_f64(self.tol_mono));
        let _ = writeln!(s, "sigma_ladder = {}", list(&self.sigma_ladder));
        let _ = writeln!(s, "moser_p0 = {}", fmt_f64(self.moser_p0));
        let _ = writeln!(s, "moser_r = {}", fmt_f64(self.moser_r));
        let _ = writeln!(s, "moser_t = {}", fmt_f64(self.moser_t));
        let _ = writeln!(s, "moser_n_max = {}", self.moser_n_max);
        let _ = writeln!(s, "suite_functions = {}", self.suite_functions);
        let _ = writeln!(s, "suite_cubes = {}", self.suite_cubes);
        s
    }

    pub fn grading(&self) -> Grading {
        if self.grid_stretch == 1.0 {
            Grading::Uniform
        } else {
            Grading::Geometric(self.grid_stretch)
        }
    }

    /// Field-naming validation of the physically constrained entries.
    pub fn validate(&self) -> Result<(), String> {
        if self.d < 3 {
            return Err(format!("config field d = {} must be >= 3", self.d));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(format!("config field dt = {} must be positive", self.dt));
        }
        if !(self.t_end > 0.0) {
            return Err(format!(
                "config field t_end = {} must be positive",
                self.t_end
            ));
        }
        if !(self.r_max > 0.0) {
            return Err(format!(
                "config field r_max = {} must be positive",
                self.r_max
            ));
        }
        if self.n_cells < 16 {
            return Err(format!(
                "config field n_cells = {} must be >= 16",
                self.n_cells
            ));
        }
        if !(self.grid_stretch > 0.0) {
            return Err(format!(
                "config field grid_stretch = {} must be positive",
                self.grid_stretch
            ));
        }
        if self.monitor_every == 0 {
            return Err("config field monitor_every must be >= 1".into());
        }
        if self.snapshot_count < 2 {
            return Err(format!(
                "config field snapshot_count = {} must be >= 2",
                self.snapshot_count
            ));
        }
        let dd = self.d as f64;
        if !(-dd..=-2.0).contains(&self.gamma) {
            return Err(format!(
                "config field gamma = {} outside [-{dd}, -2]",
                self.gamma
            ));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(format!(
                "config field alpha = {} outside [0, 1]",
                self.alpha
            ));
        }
        Ok(())
    }
}
