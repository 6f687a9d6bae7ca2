//! Physical and numerical constants of a run, presets, and the flat
//! `key = value` configuration format.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Initial datum of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitKind {
    /// Truncated Gaussian in `(x, theta)` centred at `(0, 1)`.
    #[default]
    Gaussian,
    /// Unit mass in the cell at `x = 0`, `theta = theta_min`.
    Dirac,
}

impl InitKind {
    pub fn as_str(self) -> &'static str {
        match self {
            InitKind::Gaussian => "gaussian",
            InitKind::Dirac => "dirac",
        }
    }
}

impl FromStr for InitKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "gaussian" => Ok(InitKind::Gaussian),
            "dirac" => Ok(InitKind::Dirac),
            other => Err(format!("unknown init kind `{other}` (expected gaussian|dirac)")),
        }
    }
}

/// Boundary condition applied at `x = x_max`. The left boundary is always
/// a reflecting (Neumann) one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RightBoundary {
    #[default]
    Dirichlet,
    /// Reflecting on both ends; used for spatially homogeneous test runs.
    Neumann,
}

impl RightBoundary {
    pub fn as_str(self) -> &'static str {
        match self {
            RightBoundary::Dirichlet => "dirichlet",
            RightBoundary::Neumann => "neumann",
        }
    }
}

impl FromStr for RightBoundary {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "dirichlet" => Ok(RightBoundary::Dirichlet),
            "neumann" => Ok(RightBoundary::Neumann),
            other => Err(format!(
                "unknown boundary `{other}` (expected dirichlet|neumann)"
            )),
        }
    }
}

/// Constants of the rescaled model and of its discretization.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    /// Growth rate at low density.
    pub r: f64,
    /// Carrying capacity.
    pub k: f64,
    /// Segregational variance.
    pub lambda2: f64,
    pub dt: f64,
    pub dx: f64,
    pub dtheta: f64,
    pub x_max: f64,
    pub theta_max: f64,
    pub theta_min: f64,
    pub t_end: f64,
    /// Density level whose closest mesh point defines the front.
    pub front_threshold: f64,
    /// Snapshot times. Times beyond `t_end` are ignored.
    pub output_times: Vec<f64>,
    /// Spacing of the front diagnostics written to `front.csv`.
    pub diagnostic_dt: f64,
    pub right_boundary: RightBoundary,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            r: 1.0,
            k: 1.0,
            lambda2: 0.5,
            dt: 0.02,
            dx: 4.0,
            dtheta: 2.0 / 3.0,
            x_max: 3000.0,
            theta_max: 201.0,
            theta_min: 1.0,
            t_end: 200.0,
            front_threshold: 0.01,
            output_times: (1..=10).map(|i| 20.0 * i as f64).collect(),
            diagnostic_dt: 1.0,
            right_boundary: RightBoundary::Dirichlet,
        }
    }
}

/// Named parameter sets reproducing the published runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Paper,
    Dirac,
    LowR,
    HighLambda,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::Paper,
        Preset::Dirac,
        Preset::LowR,
        Preset::HighLambda,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Paper => "paper",
            Preset::Dirac => "dirac",
            Preset::LowR => "low-r",
            Preset::HighLambda => "high-lambda",
        }
    }

    pub fn build(self) -> (Params, InitKind) {
        let mut params = Params::default();
        let mut init = InitKind::Gaussian;
        match self {
            Preset::Paper => {}
            Preset::Dirac => init = InitKind::Dirac,
            Preset::LowR => params.r = 0.1,
            Preset::HighLambda => params.lambda2 = 1.0,
        }
        (params, init)
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                format!("unknown preset `{s}` (expected paper|dirac|low-r|high-lambda)")
            })
    }
}

impl Params {
    /// Largest time step allowed by the explicit diffusion bound.
    pub fn cfl_limit(&self) -> f64 {
        self.dx * self.dx / (2.0 * self.theta_max)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda2.sqrt()
    }

    /// Number of Euler steps needed to reach `t`, rounded to the nearest step.
    pub fn steps_for(&self, t: f64) -> u64 {
        (t / self.dt).round().max(0.0) as u64
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("r", self.r),
            ("K", self.k),
            ("lambda2", self.lambda2),
            ("dt", self.dt),
            ("dx", self.dx),
            ("dtheta", self.dtheta),
            ("x_max", self.x_max),
            ("theta_max", self.theta_max),
            ("theta_min", self.theta_min),
            ("front_threshold", self.front_threshold),
            ("diagnostic_dt", self.diagnostic_dt),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Config(format!(
                    "{name} must be finite and strictly positive, got {value}"
                )));
            }
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::Config(format!(
                "t_end must be finite and non-negative, got {}",
                self.t_end
            )));
        }
        if self.theta_max <= self.theta_min {
            return Err(Error::Config(format!(
                "theta_max ({}) must exceed theta_min ({})",
                self.theta_max, self.theta_min
            )));
        }
        if self.dx > self.x_max * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "dx ({}) larger than x_max ({})",
                self.dx, self.x_max
            )));
        }
        if self.dtheta > (self.theta_max - self.theta_min) * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "dtheta ({}) larger than the trait range",
                self.dtheta
            )));
        }
        let limit = self.cfl_limit();
        if self.dt > limit {
            return Err(Error::Config(format!(
                "CFL violation: dt = {} exceeds dx^2 / (2 theta_max) = {}",
                self.dt, limit
            )));
        }
        if self.output_times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::Config(
                "output_times must be finite and non-negative".into(),
            ));
        }
        if self.output_times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "output_times must be strictly increasing".into(),
            ));
        }
        Ok(())
    }

    /// Serializes to the config format. `parse_config_str` of the result
    /// yields an identical `Params`.
    pub fn to_config_string(&self, init: InitKind) -> String {
        let mut s = String::new();
        let times: Vec<String> = self.output_times.iter().map(|t| format!("{t:?}")).collect();
        let _ = writeln!(s, "r = {:?}", self.r);
        let _ = writeln!(s, "K = {:?}", self.k);
        let _ = writeln!(s, "lambda2 = {:?}", self.lambda2);
        let _ = writeln!(s, "dt = {:?}", self.dt);
        let _ = writeln!(s, "dx = {:?}", self.dx);
        let _ = writeln!(s, "dtheta = {:?}", self.dtheta);
        let _ = writeln!(s, "x_max = {:?}", self.x_max);
        let _ = writeln!(s, "theta_max = {:?}", self.theta_max);
        let _ = writeln!(s, "theta_min = {:?}", self.theta_min);
        let _ = writeln!(s, "t_end = {:?}", self.t_end);
        let _ = writeln!(s, "front_threshold = {:?}", self.front_threshold);
        let _ = writeln!(s, "output_times = {}", times.join(", "));
        let _ = writeln!(s, "diagnostic_dt = {:?}", self.diagnostic_dt);
        let _ = writeln!(s, "right_boundary = {}", self.right_boundary.as_str());
        let _ = writeln!(s, "init = {}", init.as_str());
        s
    }

    /// Sets a single key. Used by both the file parser and CLI overrides.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<Option<InitKind>, String> {
        let num = |v: &str| -> std::result::Result<f64, String> {
            parse_number(v).ok_or_else(|| format!("cannot parse `{v}` as a number for `{key}`"))
        };
        match key {
            "r" => self.r = num(value)?,
            "K" | "k" => self.k = num(value)?,
            "lambda2" => self.lambda2 = num(value)?,
            "dt" => self.dt = num(value)?,
            "dx" => self.dx = num(value)?,
            "dtheta" => self.dtheta = num(value)?,
            "x_max" => self.x_max = num(value)?,
            "theta_max" => self.theta_max = num(value)?,
            "theta_min" => self.theta_min = num(value)?,
            "t_end" => self.t_end = num(value)?,
            "front_threshold" => self.front_threshold = num(value)?,
            "diagnostic_dt" => self.diagnostic_dt = num(value)?,
            "output_times" => {
                self.output_times = value
                    .split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .map(num)
                    .collect::<std::result::Result<_, _>>()?;
            }
            "right_boundary" => self.right_boundary = value.parse()?,
            "init" => return Ok(Some(value.parse()?)),
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(None)
    }
}

/// Accepts plain floats and simple fractions such as `2/3`.
fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n: f64 = num.trim().parse().ok()?;
        let d: f64 = den.trim().parse().ok()?;
        return Some(n / d);
    }
    s.parse().ok()
}

/// Parses config text on top of `base`. Unknown keys, malformed lines and
/// invalid values are reported with their line number; the result is
/// validated (including the CFL bound).
pub fn parse_config_str(
    text: &str,
    context: &str,
    base: (Params, InitKind),
) -> Result<(Params, InitKind)> {
    let (mut params, mut init) = base;
    let mut seen: Vec<String> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let line_err = |message: String| Error::ConfigLine {
            context: context.to_string(),
            line: line_no,
            message,
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| line_err(format!("expected `key = value`, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if seen.iter().any(|k| k == key) {
            return Err(line_err(format!("duplicate key `{key}`")));
        }
        seen.push(key.to_string());
        if let Some(kind) = params.set(key, value).map_err(line_err)? {
            init = kind;
        }
    }
    params.validate()?;
    Ok((params, init))
}

pub fn parse_config_file(path: &Path, base: (Params, InitKind)) -> Result<(Params, InitKind)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text, &path.display().to_string(), base)
}
