//! The feedback-compensated beam splitter.
//!
//! The signal passes a beam splitter of reflectivity `R = 1 - q^2` whose
//! second input port is in the vacuum. The reflected beam is measured by
//! eight-port homodyne detection, i.e. projected onto the non-orthogonal
//! states `sqrt((1-q^2)/pi) |sqrt(1-q^2) beta>`, and the transmitted beam is
//! displaced by `f beta`.
//!
//! Port convention: a coherent input `|alpha>|0>` leaves as
//! `|q alpha>|sqrt(1-q^2) alpha>` (transmitted, reflected), with no extra
//! phase. The unitary conserves total photon number, so it is assembled
//! sector by sector; each sector of total photon number `M` is exponentiated
//! in full (`M + 1` states) before truncation, which makes every retained
//! matrix element exact.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{check_dims, coherent_state, displace, fock_state, FockOperator, FockVector};
use crate::teleport::{
    apply_transfer, prefactor, validate_q, MeasurementOutcome, TeleportParams, TwoModeVector,
};

/// Transmission amplitude, feedback gain and truncation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BSParams {
    q: f64,
    f: f64,
    truncation: usize,
}

impl BSParams {
    pub fn new(q: f64, f: f64, truncation: usize) -> Result<Self> {
        validate_q(q)?;
        if !f.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "feedback gain must be finite, got {f}"
            )));
        }
        if truncation == 0 {
            return Err(Error::InvalidParameter(
                "truncation must be at least 1".into(),
            ));
        }
        Ok(Self { q, f, truncation })
    }

    /// The beam splitter matching teleportation at gain `g`: `f = g - q`.
    pub fn equivalent_to(params: &TeleportParams) -> Self {
        Self {
            q: params.q(),
            f: params.g() - params.q(),
            truncation: params.truncation(),
        }
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn f(&self) -> f64 {
        self.f
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn reflectivity(&self) -> f64 {
        1.0 - self.q * self.q
    }
}

/// Two-mode beam-splitter unitary, stored as one real block per total photon number.
#[derive(Debug, Clone)]
pub struct BeamSplitter {
    q: f64,
    truncation: usize,
    /// `sectors[m][(k_out, k_in)]`, with `k` the transmitted-port photon number
    /// and `m - k` the reflected-port photon number.
    sectors: Vec<DMatrix<f64>>,
}

impl BeamSplitter {
    pub fn new(q: f64, truncation: usize) -> Result<Self> {
        validate_q(q)?;
        if truncation == 0 {
            return Err(Error::InvalidParameter(
                "truncation must be at least 1".into(),
            ));
        }
        let theta = q.acos();
        let sectors = (0..2 * truncation - 1)
            .map(|m| sector_unitary(m, theta))
            .collect();
        Ok(Self {
            q,
            truncation,
            sectors,
        })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    /// `<out_t, out_r| U |in_t, in_r>`.
    pub fn element(&self, out_t: usize, out_r: usize, in_t: usize, in_r: usize) -> f64 {
        let m = out_t + out_r;
        if m != in_t + in_r || out_t.max(out_r).max(in_t).max(in_r) >= self.truncation {
            return 0.0;
        }
        self.sectors[m][(out_t, in_t)]
    }

    /// `U |v>`, with components outside the truncation discarded.
    pub fn apply(&self, v: &TwoModeVector) -> Result<TwoModeVector> {
        check_dims(self.truncation, v.truncation())?;
        let n = self.truncation;
        let mut out = Array2::zeros((n, n));
        for (m, block) in self.sectors.iter().enumerate() {
            let (lo, hi) = sector_range(m, n);
            for k_in in lo..=hi {
                let amp = v.get(k_in, m - k_in);
                if amp == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for k_out in lo..=hi {
                    out[[k_out, m - k_out]] += amp * block[(k_out, k_in)];
                }
            }
        }
        TwoModeVector::from_amplitudes(out)
    }

    /// Dense `N^2 x N^2` matrix, indexed by `transmitted * N + reflected`.
    pub fn to_dense(&self) -> Array2<f64> {
        let n = self.truncation;
        let mut dense = Array2::zeros((n * n, n * n));
        for (m, block) in self.sectors.iter().enumerate() {
            let (lo, hi) = sector_range(m, n);
            for k_out in lo..=hi {
                for k_in in lo..=hi {
                    dense[[k_out * n + (m - k_out), k_in * n + (m - k_in)]] = block[(k_out, k_in)];
                }
            }
        }
        dense
    }

    /// `U (psi (x) |0>)`.
    pub fn evolve(&self, psi: &FockVector) -> Result<TwoModeVector> {
        check_dims(self.truncation, psi.truncation())?;
        let vacuum = fock_state(0, self.truncation)?;
        self.apply(&TwoModeVector::product(psi, &vacuum)?)
    }
}

/// Transmitted-port photon numbers present in sector `m` under truncation `n`.
fn sector_range(m: usize, n: usize) -> (usize, usize) {
    (m.saturating_sub(n - 1), m.min(n - 1))
}

/// `exp(theta (b^dagger a - a^dagger b))` on the `m + 1` states of total photon number `m`.
fn sector_unitary(m: usize, theta: f64) -> DMatrix<f64> {
    let mut generator = DMatrix::<f64>::zeros(m + 1, m + 1);
    for k in 0..=m {
        let reflected = m - k;
        if k > 0 {
            // b^dagger a |k, m-k> = sqrt(k (m-k+1)) |k-1, m-k+1>
            generator[(k - 1, k)] += theta * ((k * (reflected + 1)) as f64).sqrt();
        }
        if reflected > 0 {
            // a^dagger b |k, m-k> = sqrt((k+1)(m-k)) |k+1, m-k-1>
            generator[(k + 1, k)] -= theta * (((k + 1) * reflected) as f64).sqrt();
        }
    }
    generator.exp()
}

type CacheKey = (u64, usize);

fn cache() -> &'static Mutex<HashMap<CacheKey, Arc<BeamSplitter>>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Arc<BeamSplitter>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// The beam-splitter unitary for `(q, truncation)`, built once per process.
pub fn beamsplitter_unitary(q: f64, truncation: usize) -> Result<Arc<BeamSplitter>> {
    validate_q(q)?;
    let key = (q.to_bits(), truncation);
    // Held across construction so concurrent callers never build twice.
    let mut guard = cache().lock().unwrap_or_else(|e| e.into_inner());
    if let Some(bs) = guard.get(&key) {
        return Ok(Arc::clone(bs));
    }
    let bs = Arc::new(BeamSplitter::new(q, truncation)?);
    guard.insert(key, Arc::clone(&bs));
    Ok(bs)
}

/// `sqrt((1-q^2)/pi) |sqrt(1-q^2) beta>`, the measurement vector for outcome `beta`.
pub fn povm_projection_state(
    beta: MeasurementOutcome,
    q: f64,
    truncation: usize,
) -> Result<FockVector> {
    validate_q(q)?;
    if truncation == 0 {
        return Err(Error::InvalidParameter(
            "truncation must be at least 1".into(),
        ));
    }
    let r = (1.0 - q * q).sqrt();
    Ok(coherent_state(r * beta.beta(), truncation).scaled(Complex64::new(prefactor(q), 0.0)))
}

/// Contracts the reflected port of `state` against `projection`: `<P|_r state`.
fn contract_reflected(state: &TwoModeVector, projection: &FockVector) -> FockVector {
    let bra = projection.amplitudes().mapv(|z| z.conj());
    let out = state.amplitudes().dot(&bra);
    FockVector::from_amplitudes(out.to_vec()).expect("finite amplitudes")
}

/// A beam-splitter measurement prepared for one input: the evolved two-mode
/// state is computed once and contracted per outcome.
#[derive(Debug, Clone)]
pub struct PreparedMeasurement {
    q: f64,
    evolved: TwoModeVector,
}

impl PreparedMeasurement {
    pub fn new(q: f64, psi: &FockVector) -> Result<Self> {
        let bs = beamsplitter_unitary(q, psi.truncation())?;
        Ok(Self {
            q,
            evolved: bs.evolve(psi)?,
        })
    }

    pub fn evolved(&self) -> &TwoModeVector {
        &self.evolved
    }

    /// Transmitted state conditioned on outcome `beta`, unnormalized.
    pub fn transmitted(&self, beta: MeasurementOutcome) -> Result<FockVector> {
        let projection = povm_projection_state(beta, self.q, self.evolved.truncation())?;
        Ok(contract_reflected(&self.evolved, &projection))
    }

    /// Transmitted state displaced by `f beta`.
    pub fn compensated(&self, f: f64, beta: MeasurementOutcome) -> Result<FockVector> {
        Ok(displace(f * beta.beta(), &self.transmitted(beta)?))
    }
}

/// State of the transmitted beam after the reflected beam gave outcome `beta`.
pub fn transmitted_state(q: f64, beta: MeasurementOutcome, psi: &FockVector) -> Result<FockVector> {
    PreparedMeasurement::new(q, psi)?.transmitted(beta)
}

/// Transmitted state displaced by the feedback `f beta`.
pub fn compensated_output(
    params: &BSParams,
    beta: MeasurementOutcome,
    psi: &FockVector,
) -> Result<FockVector> {
    check_dims(params.truncation, psi.truncation())?;
    PreparedMeasurement::new(params.q, psi)?.compensated(params.f, beta)
}

/// The map `psi -> compensated_output(psi)` as a matrix.
pub fn compensated_measurement_operator(
    params: &BSParams,
    beta: MeasurementOutcome,
) -> Result<FockOperator> {
    let n = params.truncation;
    let mut matrix = Array2::zeros((n, n));
    for col in 0..n {
        let out = compensated_output(params, beta, &fock_state(col, n)?)?;
        matrix.column_mut(col).assign(out.amplitudes());
    }
    FockOperator::from_matrix(matrix)
}

/// Euclidean distance between the compensated beam-splitter output with
/// feedback `g - q` and the teleported output at gain `g`. Scalar
/// prefactors and phases are compared, not only the normalized states.
pub fn equivalence_residual(
    q: f64,
    g: f64,
    beta: MeasurementOutcome,
    psi: &FockVector,
) -> Result<f64> {
    let teleport = TeleportParams::new(q, g, psi.truncation())?;
    let bs = BSParams::equivalent_to(&teleport);
    let via_beamsplitter = compensated_output(&bs, beta, psi)?;
    let via_teleport = apply_transfer(&teleport, beta, psi)?;
    via_beamsplitter.distance(&via_teleport)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn vacuum_is_preserved() {
        let bs = BeamSplitter::new(0.6, 6).unwrap();
        let out = bs.evolve(&fock_state(0, 6).unwrap()).unwrap();
        assert!((out.get(0, 0) - c(1.0, 0.0)).norm() < 1e-15);
        assert!((out.norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn coherent_input_splits_into_product_coherent() {
        let n = 40;
        let bs = BeamSplitter::new(0.6, n).unwrap();
        let out = bs.evolve(&coherent_state(c(1.0, 0.0), n)).unwrap();
        let expected = TwoModeVector::product(
            &coherent_state(c(0.6, 0.0), n),
            &coherent_state(c(0.8, 0.0), n),
        )
        .unwrap();
        assert!(out.distance(&expected).unwrap() < 1e-8);

        let alpha = c(-0.7, 1.1);
        let q = 0.3_f64;
        let r = (1.0 - q * q).sqrt();
        let out = BeamSplitter::new(q, n)
            .unwrap()
            .evolve(&coherent_state(alpha, n))
            .unwrap();
        let expected =
            TwoModeVector::product(&coherent_state(q * alpha, n), &coherent_state(r * alpha, n))
                .unwrap();
        assert!(out.distance(&expected).unwrap() < 1e-8);
    }

    #[test]
    fn unitary_on_interior_block() {
        let n = 12;
        let dense = BeamSplitter::new(0.45, n).unwrap().to_dense();
        let gram = dense.t().dot(&dense);
        for a in 0..n * n {
            for b in 0..n * n {
                let (ta, ra) = (a / n, a % n);
                let (tb, rb) = (b / n, b % n);
                if ta + ra < n / 2 && tb + rb < n / 2 {
                    let want = if a == b { 1.0 } else { 0.0 };
                    assert!((gram[[a, b]] - want).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn total_photon_number_conserved() {
        let n = 10;
        let dense = BeamSplitter::new(0.7, n).unwrap().to_dense();
        for ((row, col), value) in dense.indexed_iter() {
            if row / n + row % n != col / n + col % n {
                assert!(value.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cache_returns_same_instance() {
        let a = beamsplitter_unitary(0.55, 9).unwrap();
        let b = beamsplitter_unitary(0.55, 9).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert!(beamsplitter_unitary(1.0, 9).is_err());
    }

    #[test]
    fn projection_state_examples() {
        let q = 0.5;
        let p = povm_projection_state(MeasurementOutcome::new(0.0, 0.0), q, 10).unwrap();
        assert!((p.get(0) - c(prefactor(q), 0.0)).norm() < 1e-15);
        for beta in [
            MeasurementOutcome::new(0.3, 1.0),
            MeasurementOutcome::new(-2.0, 0.5),
        ] {
            let p = povm_projection_state(beta, q, 60).unwrap();
            assert!((p.norm_sqr() - (1.0 - q * q) / PI).abs() < 1e-12);
        }
    }

    /// Closed form of the transmitted state for a coherent input.
    fn transmitted_closed_form(q: f64, beta: Complex64, alpha: Complex64, n: usize) -> FockVector {
        let r2 = 1.0 - q * q;
        let envelope = (-r2 * (alpha - beta).norm_sqr() / 2.0).exp();
        let phase = (r2 * (alpha * beta.conj() - beta * alpha.conj()) / 2.0).exp();
        coherent_state(q * alpha, n).scaled(phase * prefactor(q) * envelope)
    }

    #[test]
    fn transmitted_matches_closed_form() {
        let (q, n) = (0.5, 40);
        let alpha = c(1.0, 0.0);
        let beta = MeasurementOutcome::new(0.5, 0.0);
        let got = transmitted_state(q, beta, &coherent_state(alpha, n)).unwrap();
        let want = transmitted_closed_form(q, beta.beta(), alpha, n);
        assert!(got.max_abs_diff(&want).unwrap() < 1e-8);
    }

    #[test]
    fn transmitted_amplitude_peaks_at_input() {
        let (q, n) = (0.5, 30);
        let alpha = c(0.8, -0.4);
        let psi = coherent_state(alpha, n);
        let at_peak = transmitted_state(q, MeasurementOutcome::try_from(alpha).unwrap(), &psi)
            .unwrap()
            .norm();
        for offset in [c(0.1, 0.0), c(0.0, -0.2), c(-0.5, 0.5)] {
            let beta = MeasurementOutcome::try_from(alpha + offset).unwrap();
            assert!(transmitted_state(q, beta, &psi).unwrap().norm() < at_peak);
        }
    }

    #[test]
    fn zero_feedback_is_bare_transmission() {
        let params = BSParams::new(0.5, 0.0, 20).unwrap();
        let psi = coherent_state(c(0.4, 0.4), 20);
        let beta = MeasurementOutcome::new(0.2, -0.3);
        let a = compensated_output(&params, beta, &psi).unwrap();
        let b = transmitted_state(0.5, beta, &psi).unwrap();
        assert!(a.max_abs_diff(&b).unwrap() < 1e-15);
    }

    #[test]
    fn unit_gain_feedback_restores_amplitude() {
        let q = 0.5;
        let n = 40;
        let alpha = c(1.1, 0.3);
        let params = BSParams::new(q, 1.0 - q, n).unwrap();
        let out = compensated_output(
            &params,
            MeasurementOutcome::try_from(alpha).unwrap(),
            &coherent_state(alpha, n),
        )
        .unwrap()
        .normalized()
        .unwrap();
        let fidelity = crate::fock::fidelity_pure(&coherent_state(alpha, n), &out).unwrap();
        assert!((fidelity - 1.0).abs() < 1e-10);
    }

    #[test]
    fn equivalence_examples() {
        let n = 40;
        let psi = coherent_state(c(1.0, 0.0), n);
        let r = equivalence_residual(0.5, 1.0, MeasurementOutcome::new(0.7, -0.2), &psi).unwrap();
        assert!(r < 1e-8, "{r}");

        let mut amps = vec![c(0.0, 0.0); n];
        amps[..3].fill(c(1.0, 0.0));
        let psi = FockVector::from_amplitudes(amps)
            .unwrap()
            .normalized()
            .unwrap();
        let r = equivalence_residual(0.7, 0.7, MeasurementOutcome::new(0.0, 1.0), &psi).unwrap();
        assert!(r < 1e-8, "{r}");
    }

    #[test]
    fn unit_gain_operator_is_hermitian() {
        let q = 0.5;
        let params = BSParams::new(q, 1.0 - q, 30).unwrap();
        for beta in [
            MeasurementOutcome::new(0.4, 0.3),
            MeasurementOutcome::new(-1.2, 0.8),
        ] {
            let op = compensated_measurement_operator(&params, beta).unwrap();
            assert!(op.hermiticity_deviation(10) < 1e-8);
        }
        // Away from unit gain the operator is not Hermitian.
        let params = BSParams::new(q, 0.2, 30).unwrap();
        let op =
            compensated_measurement_operator(&params, MeasurementOutcome::new(0.4, 0.3)).unwrap();
        assert!(op.hermiticity_deviation(10) > 1e-3);
    }

    #[test]
    fn parameter_validation() {
        assert!(BSParams::new(1.0, 0.0, 5).is_err());
        assert!(BSParams::new(0.5, f64::NAN, 5).is_err());
        assert!(BSParams::new(0.5, -0.3, 5).is_ok());
        assert!((BSParams::new(0.6, 0.0, 5).unwrap().reflectivity() - 0.64).abs() < 1e-15);
    }
}
