//! Experiment configuration: a flat TOML file and command-line flags, merged
//! and resolved against per-experiment defaults.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use cvtele_core::{Complex64, InputState, QuadratureGrid, TeleportParams};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const DEFAULT_Q: f64 = 0.5;
pub const DEFAULT_TRUNCATION: usize = cvtele_core::DEFAULT_TRUNCATION;
pub const DEFAULT_EQUIVALENCE_TRUNCATION: usize = 40;
pub const DEFAULT_SAMPLES: usize = 100_000;
pub const DEFAULT_SWEEP: GainSweep = GainSweep {
    start: 0.0,
    stop: 1.5,
    steps: 31,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum Experiment {
    GainSweep,
    VacuumIntensity,
    SinglePhoton,
    Equivalence,
    Sample,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::GainSweep => "gain-sweep",
            Experiment::VacuumIntensity => "vacuum-intensity",
            Experiment::SinglePhoton => "single-photon",
            Experiment::Equivalence => "equivalence",
            Experiment::Sample => "sample",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// `start:stop:steps`, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct GainSweep {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl GainSweep {
    pub fn gains(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.stop
                } else {
                    self.start + step * i as f64
                }
            })
            .collect()
    }
}

impl FromStr for GainSweep {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || CliError::Config(format!("gain sweep `{s}` is not start:stop:steps"));
        let [start, stop, steps] = parts.as_slice() else {
            return Err(bad());
        };
        let sweep = GainSweep {
            start: start.trim().parse().map_err(|_| bad())?,
            stop: stop.trim().parse().map_err(|_| bad())?,
            steps: steps.trim().parse().map_err(|_| bad())?,
        };
        if sweep.steps == 0 || !sweep.start.is_finite() || !sweep.stop.is_finite() {
            return Err(bad());
        }
        Ok(sweep)
    }
}

impl fmt::Display for GainSweep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}:{:?}:{}", self.start, self.stop, self.steps)
    }
}

impl TryFrom<String> for GainSweep {
    type Error = CliError;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<GainSweep> for String {
    fn from(s: GainSweep) -> String {
        s.to_string()
    }
}

/// `vacuum`, `coherent:RE,IM`, `fock:N`, `amplitudes:RE,IM;RE,IM;...` or `file:PATH`.
///
/// A file holds one amplitude per line as `re im`; blank lines and lines
/// starting with `#` are skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum InputDescriptor {
    Vacuum,
    Coherent(Complex64),
    Fock(usize),
    Amplitudes(Vec<Complex64>),
    File(PathBuf),
}

fn parse_complex(s: &str) -> Option<Complex64> {
    let (re, im) = s.split_once(',')?;
    let z = Complex64::new(re.trim().parse().ok()?, im.trim().parse().ok()?);
    z.is_finite().then_some(z)
}

impl InputDescriptor {
    /// Reads any file and returns the equivalent inline descriptor.
    pub fn inline(&self) -> Result<Self> {
        let InputDescriptor::File(path) = self else {
            return Ok(self.clone());
        };
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        let mut amps = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || {
                CliError::Config(format!(
                    "{}:{}: expected `re im`",
                    path.display(),
                    lineno + 1
                ))
            };
            let mut fields = line.split_whitespace();
            let re: f64 = fields.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let im: f64 = match fields.next() {
                Some(v) => v.parse().map_err(|_| bad())?,
                None => 0.0,
            };
            if fields.next().is_some() || !re.is_finite() || !im.is_finite() {
                return Err(bad());
            }
            amps.push(Complex64::new(re, im));
        }
        if amps.is_empty() {
            return Err(CliError::Config(format!(
                "{}: no amplitudes",
                path.display()
            )));
        }
        Ok(InputDescriptor::Amplitudes(amps))
    }

    pub fn to_state(&self) -> Result<InputState> {
        Ok(match self.inline()? {
            InputDescriptor::Vacuum => InputState::Vacuum,
            InputDescriptor::Coherent(alpha) => InputState::Coherent(alpha),
            InputDescriptor::Fock(n) => InputState::Fock(n),
            InputDescriptor::Amplitudes(a) => InputState::Amplitudes(a),
            InputDescriptor::File(_) => unreachable!("inlined above"),
        })
    }
}

impl FromStr for InputDescriptor {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || CliError::Config(format!("unrecognized input `{s}`"));
        let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
        match kind.trim() {
            "vacuum" if arg.is_empty() => Ok(InputDescriptor::Vacuum),
            "coherent" => parse_complex(arg)
                .map(InputDescriptor::Coherent)
                .ok_or_else(bad),
            "fock" => arg
                .trim()
                .parse()
                .map(InputDescriptor::Fock)
                .map_err(|_| bad()),
            "amplitudes" => arg
                .split(';')
                .map(parse_complex)
                .collect::<Option<Vec<_>>>()
                .filter(|a| !a.is_empty())
                .map(InputDescriptor::Amplitudes)
                .ok_or_else(bad),
            "file" if !arg.is_empty() => Ok(InputDescriptor::File(PathBuf::from(arg))),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for InputDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputDescriptor::Vacuum => write!(f, "vacuum"),
            InputDescriptor::Coherent(a) => write!(f, "coherent:{:?},{:?}", a.re, a.im),
            InputDescriptor::Fock(n) => write!(f, "fock:{n}"),
            InputDescriptor::Amplitudes(amps) => {
                write!(f, "amplitudes:")?;
                for (i, a) in amps.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{:?},{:?}", a.re, a.im)?;
                }
                Ok(())
            }
            InputDescriptor::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl TryFrom<String> for InputDescriptor {
    type Error = CliError;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<InputDescriptor> for String {
    fn from(d: InputDescriptor) -> String {
        d.to_string()
    }
}

/// Settings as given in a config file or on the command line. Everything is
/// optional; [`ExperimentConfig::resolve`] fills in the defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    /// Entanglement coefficient, 0 <= q < 1.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    /// Single feedback gain.
    #[arg(long, conflicts_with = "gain_sweep")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gain: Option<f64>,
    /// Gain sweep as start:stop:steps.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gain_sweep: Option<GainSweep>,
    /// Fock-space truncation.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation: Option<usize>,
    /// Half-width of the square outcome grid.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_radius: Option<f64>,
    /// Grid points per axis.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    /// Number of samples drawn by `sample`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// vacuum | coherent:RE,IM | fock:N | amplitudes:RE,IM;... | file:PATH
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<InputDescriptor>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<OutputFormat>,
}

impl ConfigOverrides {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// Values set in `top` win over values in `self`.
    pub fn overlay(self, top: ConfigOverrides) -> Self {
        // A gain on one layer replaces a sweep on the other and vice versa.
        let gains_from_top = top.gain.is_some() || top.gain_sweep.is_some();
        ConfigOverrides {
            q: top.q.or(self.q),
            gain: if gains_from_top { top.gain } else { self.gain },
            gain_sweep: if gains_from_top {
                top.gain_sweep
            } else {
                self.gain_sweep
            },
            truncation: top.truncation.or(self.truncation),
            grid_radius: top.grid_radius.or(self.grid_radius),
            grid_points: top.grid_points.or(self.grid_points),
            samples: top.samples.or(self.samples),
            seed: top.seed.or(self.seed),
            input: top.input.or(self.input),
            output: top.output.or(self.output),
            format: top.format.or(self.format),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gains {
    Single(f64),
    Sweep(GainSweep),
}

impl Gains {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Gains::Single(g) => vec![*g],
            Gains::Sweep(s) => s.gains(),
        }
    }
}

/// A fully resolved and validated experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub q: f64,
    pub gains: Gains,
    pub truncation: usize,
    pub grid_radius: f64,
    pub grid_points: usize,
    pub samples: usize,
    pub seed: u64,
    /// Always inline; file inputs are read during resolution.
    pub input: InputDescriptor,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
}

impl ExperimentConfig {
    pub fn resolve(experiment: Experiment, o: ConfigOverrides) -> Result<Self> {
        let q = o.q.unwrap_or(DEFAULT_Q);
        let gains = match (o.gain, o.gain_sweep) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config("give either gain or gain_sweep".into()))
            }
            (Some(g), None) => Gains::Single(g),
            (None, Some(s)) => Gains::Sweep(s),
            (None, None) => match experiment {
                Experiment::SinglePhoton => Gains::Single(q),
                Experiment::Sample => Gains::Single(1.0),
                _ => Gains::Sweep(DEFAULT_SWEEP),
            },
        };
        let default_input = match experiment {
            Experiment::GainSweep | Experiment::Sample => {
                InputDescriptor::Coherent(Complex64::new(1.0, 0.0))
            }
            Experiment::SinglePhoton => InputDescriptor::Fock(1),
            Experiment::VacuumIntensity | Experiment::Equivalence => InputDescriptor::Vacuum,
        };
        let default_truncation = match experiment {
            Experiment::Equivalence => DEFAULT_EQUIVALENCE_TRUNCATION,
            _ => DEFAULT_TRUNCATION,
        };
        let cfg = ExperimentConfig {
            experiment,
            q,
            gains,
            truncation: o.truncation.unwrap_or(default_truncation),
            grid_radius: o
                .grid_radius
                .unwrap_or(cvtele_core::quadrature::DEFAULT_GRID_RADIUS),
            grid_points: o
                .grid_points
                .unwrap_or(cvtele_core::quadrature::DEFAULT_GRID_POINTS),
            samples: o.samples.unwrap_or(DEFAULT_SAMPLES),
            seed: o.seed.unwrap_or(0),
            input: o.input.unwrap_or(default_input).inline()?,
            output: o.output,
            format: o.format.unwrap_or_default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let config = |msg: String| Err(CliError::Config(msg));
        for g in self.gains.values() {
            if let Err(e) = TeleportParams::new(self.q, g, self.truncation) {
                return config(e.to_string());
            }
        }
        if self.truncation < 2 {
            return config("truncation must be at least 2".into());
        }
        if let Err(e) = self.grid() {
            return config(e.to_string());
        }
        if self.samples == 0 {
            return config("samples must be at least 1".into());
        }
        if i64::try_from(self.seed).is_err() {
            return config("seed must not exceed 9223372036854775807".into());
        }
        if let Err(e) = self.input_state()?.to_vector(self.truncation) {
            return config(format!("input `{}`: {e}", self.input));
        }
        Ok(())
    }

    pub fn grid(&self) -> cvtele_core::Result<QuadratureGrid> {
        QuadratureGrid::new(self.grid_radius, self.grid_points)
    }

    pub fn input_state(&self) -> Result<InputState> {
        self.input.to_state()
    }

    /// The settings that reproduce this run, output path excluded.
    pub fn echo(&self) -> ConfigOverrides {
        let (gain, gain_sweep) = match (self.experiment, self.gains) {
            (Experiment::Equivalence | Experiment::Sample, _) => (None, None),
            (_, Gains::Single(g)) => (Some(g), None),
            (_, Gains::Sweep(s)) => (None, Some(s)),
        };
        ConfigOverrides {
            q: Some(self.q),
            gain,
            gain_sweep,
            truncation: Some(self.truncation),
            grid_radius: Some(self.grid_radius),
            grid_points: Some(self.grid_points),
            samples: Some(self.samples),
            seed: Some(self.seed),
            input: Some(self.input.clone()),
            output: None,
            format: Some(self.format),
        }
    }
}
