//! The experiment runners behind each subcommand.

use cvtele_core::{
    apply_transfer, average_channel, average_channel_sweep, compensated_measurement_operator,
    compensated_output, equivalence_residual, sample_beta, BSParams, Complex64, FockVector,
    MeasurementOutcome, TeleportParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::config::{Experiment, ExperimentConfig, Gains};
use crate::error::{CliError, Result};
use crate::table::ResultTable;

/// Tolerance on probabilities obtained by grid quadrature.
pub const QUADRATURE_TOLERANCE: f64 = 2e-3;
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-8;
pub const HERMITICITY_TOLERANCE: f64 = 1e-8;
pub const NEGATIVE_CONTROL_MIN: f64 = 1e-2;
pub const EQUIVALENCE_CASES: usize = 50;
pub const HERMITICITY_BLOCK: usize = 10;

/// A result table plus the numerical checks it failed, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub table: ResultTable,
    pub failures: Vec<String>,
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunReport> {
    match cfg.experiment {
        Experiment::GainSweep => run_gain_sweep(cfg),
        Experiment::VacuumIntensity => run_vacuum_intensity(cfg),
        Experiment::SinglePhoton => run_single_photon(cfg),
        Experiment::Equivalence => run_equivalence_suite(cfg),
        Experiment::Sample => run_sample(cfg),
    }
}

fn new_table(cfg: &ExperimentConfig, columns: &[&str]) -> Result<ResultTable> {
    let mut table = ResultTable::new(columns.iter().copied());
    table.set_meta("experiment", cfg.experiment.name());
    table.set_meta("version", env!("CARGO_PKG_VERSION"));
    table.set_meta("seed", cfg.seed);
    let echo = toml::Value::try_from(cfg.echo()).map_err(|e| CliError::Config(e.to_string()))?;
    let toml::Value::Table(echo) = echo else {
        unreachable!("a struct serializes to a table")
    };
    for (key, value) in echo {
        table.set_meta(format!("config.{key}"), value);
    }
    Ok(table)
}

/// Rebuilds the settings of a run from the `config.*` metadata of its table.
pub fn config_from_metadata(table: &ResultTable) -> Result<ExperimentConfig> {
    let mut doc = String::new();
    for (key, value) in &table.metadata {
        if let Some(field) = key.strip_prefix("config.") {
            doc.push_str(&format!("{field} = {value}\n"));
        }
    }
    let experiment = match table.metadata.get("experiment").map(String::as_str) {
        Some("gain-sweep") => Experiment::GainSweep,
        Some("vacuum-intensity") => Experiment::VacuumIntensity,
        Some("single-photon") => Experiment::SinglePhoton,
        Some("equivalence") => Experiment::Equivalence,
        Some("sample") => Experiment::Sample,
        other => return Err(CliError::Table(format!("unknown experiment {other:?}"))),
    };
    ExperimentConfig::resolve(experiment, crate::config::ConfigOverrides::from_toml(&doc)?)
}

fn check_probability(failures: &mut Vec<String>, what: &str, total: f64) {
    if (total - 1.0).abs() > QUADRATURE_TOLERANCE {
        failures.push(format!(
            "{what}: total probability {total:.6} deviates from 1"
        ));
    }
}

pub fn run_gain_sweep(cfg: &ExperimentConfig) -> Result<RunReport> {
    let psi = cfg.input_state()?.to_vector(cfg.truncation)?;
    let gains = cfg.gains.values();
    let averages = average_channel_sweep(cfg.q, cfg.truncation, &gains, &psi, &cfg.grid()?, false)?;
    let mut table = new_table(cfg, &["g", "average_fidelity", "mean_output_photons"])?;
    let mut failures = Vec::new();
    for avg in &averages {
        let g = avg.params.g();
        table.push_row(vec![g, avg.fidelity, avg.mean_photon_number()])?;
        let mass: f64 = avg.photon_distribution.iter().sum();
        check_probability(&mut failures, &format!("g = {g}: output trace"), mass);
    }
    if let Some(avg) = averages.first() {
        check_probability(&mut failures, "outcome density", avg.probability);
        table.set_meta("total_probability", format!("{:.16e}", avg.probability));
        table.set_meta("boundary_mass", format!("{:.16e}", avg.boundary_mass));
    }
    Ok(RunReport { table, failures })
}

/// `(g - q)^2 / (1 - q^2)`, the mean photon number of the averaged output for a vacuum input.
pub fn vacuum_intensity_oracle(q: f64, g: f64) -> f64 {
    (g - q) * (g - q) / (1.0 - q * q)
}

pub fn run_vacuum_intensity(cfg: &ExperimentConfig) -> Result<RunReport> {
    let input = cfg.input_state()?;
    if !input.is_vacuum() {
        return Err(CliError::Config(format!(
            "vacuum-intensity needs a vacuum input, got `{}`",
            cfg.input
        )));
    }
    let psi = input.to_vector(cfg.truncation)?;
    let gains = cfg.gains.values();
    let averages = average_channel_sweep(cfg.q, cfg.truncation, &gains, &psi, &cfg.grid()?, false)?;
    let mut table = new_table(cfg, &["g", "mean_output_photons"])?;
    let mut failures = Vec::new();
    let mut best: Option<(f64, f64)> = None;
    for avg in &averages {
        let g = avg.params.g();
        let mean = avg.mean_photon_number();
        table.push_row(vec![g, mean])?;
        let expected = vacuum_intensity_oracle(cfg.q, g);
        if (mean - expected).abs() > QUADRATURE_TOLERANCE {
            failures.push(format!(
                "g = {g}: mean photons {mean:.6}, expected {expected:.6}"
            ));
        }
        if best.is_none_or(|(_, m)| mean < m) {
            best = Some((g, mean));
        }
    }
    if let Some((g_min, m_min)) = best {
        table.set_meta("argmin_g", g_min);
        table.set_meta("min_mean_output_photons", format!("{m_min:.16e}"));
        let lo = gains.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = gains.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let step = match cfg.gains {
            Gains::Sweep(s) if s.steps > 1 => (hi - lo) / (s.steps - 1) as f64,
            _ => 0.0,
        };
        if (lo..=hi).contains(&cfg.q) && (g_min - cfg.q).abs() > step + 1e-12 {
            failures.push(format!(
                "intensity minimum at g = {g_min}, expected g = {}",
                cfg.q
            ));
        }
    }
    Ok(RunReport { table, failures })
}

pub fn run_single_photon(cfg: &ExperimentConfig) -> Result<RunReport> {
    let Gains::Single(g) = cfg.gains else {
        return Err(CliError::Config("single-photon takes a single gain".into()));
    };
    let psi = cfg.input_state()?.to_vector(cfg.truncation)?;
    let params = TeleportParams::new(cfg.q, g, cfg.truncation)?;
    let avg = average_channel(&params, &psi, &cfg.grid()?, false)?;
    let mut table = new_table(cfg, &["n", "probability"])?;
    let mut failures = Vec::new();
    for (n, p) in avg.photon_distribution.iter().enumerate() {
        table.push_row(vec![n as f64, *p])?;
        if !(0.0..=1.0 + QUADRATURE_TOLERANCE).contains(p) {
            failures.push(format!("P({n}) = {p} outside [0, 1]"));
        }
    }
    check_probability(
        &mut failures,
        "photon distribution",
        avg.photon_distribution.iter().sum(),
    );
    table.set_meta("gain", g);
    Ok(RunReport { table, failures })
}

/// One randomized case of the equivalence suite.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceCase {
    pub id: usize,
    pub q: f64,
    pub g: f64,
    pub beta: MeasurementOutcome,
    pub psi: FockVector,
}

/// 50 cases cycling through q in {0.3, 0.5, 0.8} and g in {q, 1, 1.3}, with
/// random inputs supported on at most 8 photons and outcomes with |beta| <= 2.
/// Every fourth input is a uniform superposition of the first few Fock states.
pub fn equivalence_cases(seed: u64, truncation: usize) -> Result<Vec<EquivalenceCase>> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let support_max = 8.min(truncation);
    (0..EQUIVALENCE_CASES)
        .map(|id| {
            let q = [0.3, 0.5, 0.8][id % 3];
            let g = [q, 1.0, 1.3][(id / 3) % 3];
            let support = rng.random_range(1..=support_max);
            let mut amps = vec![Complex64::new(0.0, 0.0); truncation];
            for a in amps.iter_mut().take(support) {
                *a = if id % 4 == 3 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                };
            }
            let psi = FockVector::from_amplitudes(amps)?.normalized()?;
            let r = 2.0 * rng.random::<f64>().sqrt();
            let phi = rng.random_range(0.0..std::f64::consts::TAU);
            let beta = MeasurementOutcome::try_from(Complex64::from_polar(r, phi))?;
            Ok(EquivalenceCase {
                id,
                q,
                g,
                beta,
                psi,
            })
        })
        .collect()
}

/// Largest deviation from hermiticity of the unit-gain compensated operator
/// (feedback `1 - q`) on the leading block, over a few settings.
pub fn unit_gain_hermiticity(truncation: usize) -> Result<f64> {
    let mut worst = 0.0_f64;
    for q in [0.3, 0.5, 0.8] {
        for beta in [
            MeasurementOutcome::new(0.7, -0.2),
            MeasurementOutcome::new(-1.1, 0.4),
        ] {
            let op =
                compensated_measurement_operator(&BSParams::new(q, 1.0 - q, truncation)?, beta)?;
            worst = worst.max(op.hermiticity_deviation(HERMITICITY_BLOCK));
        }
    }
    Ok(worst)
}

/// Residual when the feedback is set to `g` instead of `g - q` (q = 0.5, g = 1).
pub fn negative_control_residual(truncation: usize) -> Result<f64> {
    let third = Complex64::new(1.0 / 3.0_f64.sqrt(), 0.0);
    let mut amps = vec![Complex64::new(0.0, 0.0); truncation];
    amps[..3].fill(third);
    let psi = FockVector::from_amplitudes(amps)?;
    let beta = MeasurementOutcome::new(0.7, -0.2);
    let wrong = compensated_output(&BSParams::new(0.5, 1.0, truncation)?, beta, &psi)?;
    let teleported = apply_transfer(&TeleportParams::new(0.5, 1.0, truncation)?, beta, &psi)?;
    Ok(wrong.distance(&teleported)?)
}

pub fn run_equivalence_suite(cfg: &ExperimentConfig) -> Result<RunReport> {
    if cfg.truncation < 2 * HERMITICITY_BLOCK {
        return Err(CliError::Config(format!(
            "equivalence needs truncation >= {}",
            2 * HERMITICITY_BLOCK
        )));
    }
    let mut table = new_table(cfg, &["case", "q", "g", "beta_abs", "residual"])?;
    let mut failures = Vec::new();
    let mut worst = 0.0_f64;
    for case in equivalence_cases(cfg.seed, cfg.truncation)? {
        let r = equivalence_residual(case.q, case.g, case.beta, &case.psi)?;
        worst = worst.max(r);
        if r.is_nan() || r >= EQUIVALENCE_TOLERANCE {
            failures.push(format!("case {}: residual {r:.3e}", case.id));
        }
        table.push_row(vec![
            case.id as f64,
            case.q,
            case.g,
            case.beta.beta().norm(),
            r,
        ])?;
    }
    let herm = unit_gain_hermiticity(cfg.truncation)?;
    if herm.is_nan() || herm >= HERMITICITY_TOLERANCE {
        failures.push(format!(
            "unit-gain operator hermiticity deviation {herm:.3e}"
        ));
    }
    let control = negative_control_residual(cfg.truncation)?;
    if control.is_nan() || control <= NEGATIVE_CONTROL_MIN {
        failures.push(format!("negative control residual {control:.3e} too small"));
    }
    table.set_meta("max_residual", format!("{worst:.16e}"));
    table.set_meta("hermiticity_deviation", format!("{herm:.16e}"));
    table.set_meta("negative_control_residual", format!("{control:.16e}"));
    Ok(RunReport { table, failures })
}

pub fn run_sample(cfg: &ExperimentConfig) -> Result<RunReport> {
    let g = cfg.gains.values()[0];
    let params = TeleportParams::new(cfg.q, g, cfg.truncation)?;
    let samples = sample_beta(
        &params,
        &cfg.input_state()?,
        cfg.samples,
        cfg.seed,
        &cfg.grid()?,
    )?;
    let mut table = new_table(cfg, &["re", "im"])?;
    for b in &samples.betas {
        table.push_row(vec![b.re, b.im])?;
    }
    Ok(RunReport {
        table,
        failures: Vec::new(),
    })
}
