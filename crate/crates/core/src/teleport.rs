//! The teleportation channel.
//!
//! An input in mode A is measured jointly with reference mode R of a
//! two-mode squeezed resource `sqrt(1-q^2) sum_n q^n |n;n>`. The outcome
//! `beta` conditions output mode B, which is then displaced by `g beta`. The
//! whole map is the transfer operator
//!
//! `T_g(beta) = sqrt((1-q^2)/pi) D(g beta) (sum_n q^n |n><n|) D(-beta)`,
//!
//! whose output is left unnormalized: its squared norm is the outcome density
//! `P(beta)` with respect to `d^2 beta`.

use std::f64::consts::PI;

use ndarray::{Array2, Array3};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{
    coherent_state, displace, displacement_operator, inner, DensityMatrix, FockOperator, FockVector,
};
use crate::quadrature::QuadratureGrid;

/// Boundary-ring probability mass above which averaged quantities log a warning.
pub const BOUNDARY_MASS_TOLERANCE: f64 = 1e-6;

/// Entanglement coefficient, gain and truncation of one teleportation setup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TeleportParams {
    q: f64,
    g: f64,
    truncation: usize,
}

impl TeleportParams {
    pub fn new(q: f64, g: f64, truncation: usize) -> Result<Self> {
        validate_q(q)?;
        if !(g.is_finite() && g >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gain must be >= 0, got {g}"
            )));
        }
        if truncation == 0 {
            return Err(Error::InvalidParameter(
                "truncation must be at least 1".into(),
            ));
        }
        Ok(Self { q, g, truncation })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn with_gain(&self, g: f64) -> Result<Self> {
        Self::new(self.q, g, self.truncation)
    }

    /// `sqrt((1-q^2)/pi)`.
    pub fn prefactor(&self) -> f64 {
        prefactor(self.q)
    }
}

pub(crate) fn validate_q(q: f64) -> Result<()> {
    if q.is_finite() && (0.0..1.0).contains(&q) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "entanglement coefficient must lie in [0, 1), got {q}"
        )))
    }
}

pub(crate) fn prefactor(q: f64) -> f64 {
    ((1.0 - q * q) / PI).sqrt()
}

/// Joint measurement result `beta = x_- + i y_+`, in coherent-amplitude units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementOutcome(Complex64);

impl MeasurementOutcome {
    /// Panics on non-finite components; use `try_from` for untrusted input.
    pub fn new(x_minus: f64, y_plus: f64) -> Self {
        Self::try_from(Complex64::new(x_minus, y_plus)).expect("finite measurement outcome")
    }

    pub fn beta(&self) -> Complex64 {
        self.0
    }
}

impl TryFrom<Complex64> for MeasurementOutcome {
    type Error = Error;

    fn try_from(beta: Complex64) -> Result<Self> {
        if beta.is_finite() {
            Ok(Self(beta))
        } else {
            Err(Error::InvalidParameter(format!(
                "outcome {beta} is not finite"
            )))
        }
    }
}

impl From<MeasurementOutcome> for Complex64 {
    fn from(o: MeasurementOutcome) -> Self {
        o.0
    }
}

/// Amplitudes over photon-number pairs `(n_first, n_second)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeVector {
    amplitudes: Array2<Complex64>,
}

impl TwoModeVector {
    pub fn from_amplitudes(amplitudes: Array2<Complex64>) -> Result<Self> {
        let (a, b) = amplitudes.dim();
        if a != b {
            return Err(Error::DimensionMismatch {
                expected: a,
                found: b,
            });
        }
        if a == 0 {
            return Err(Error::InvalidParameter(
                "truncation must be at least 1".into(),
            ));
        }
        Ok(Self { amplitudes })
    }

    /// `u (x) v`.
    pub fn product(first: &FockVector, second: &FockVector) -> Result<Self> {
        crate::fock::check_dims(first.truncation(), second.truncation())?;
        let n = first.truncation();
        Ok(Self {
            amplitudes: Array2::from_shape_fn((n, n), |(i, j)| first.get(i) * second.get(j)),
        })
    }

    pub fn truncation(&self) -> usize {
        self.amplitudes.nrows()
    }

    pub fn amplitudes(&self) -> &Array2<Complex64> {
        &self.amplitudes
    }

    pub fn get(&self, first: usize, second: usize) -> Complex64 {
        self.amplitudes[[first, second]]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Euclidean norm of `self - other`.
    pub fn distance(&self, other: &TwoModeVector) -> Result<f64> {
        crate::fock::check_dims(self.truncation(), other.truncation())?;
        Ok(self
            .amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }
}

/// The entangled resource `sqrt(1-q^2) sum_n q^n |n;n>`.
pub fn epr_state(q: f64, truncation: usize) -> Result<TwoModeVector> {
    validate_q(q)?;
    if truncation == 0 {
        return Err(Error::InvalidParameter(
            "truncation must be at least 1".into(),
        ));
    }
    let norm = (1.0 - q * q).sqrt();
    let mut amplitudes = Array2::zeros((truncation, truncation));
    for n in 0..truncation {
        amplitudes[[n, n]] = Complex64::new(norm * q.powi(n as i32), 0.0);
    }
    Ok(TwoModeVector { amplitudes })
}

/// `pi^{-1/2} sum_n D_first(beta) |n;n>`, the joint eigenstate selected by outcome `beta`.
pub fn bell_eigenstate(beta: MeasurementOutcome, truncation: usize) -> TwoModeVector {
    let d = displacement_operator(beta.beta(), truncation);
    let scale = 1.0 / PI.sqrt();
    TwoModeVector {
        amplitudes: d.into_matrix().mapv(|z| z * scale),
    }
}

/// Dense `T_g(beta)`.
pub fn transfer_operator(params: &TeleportParams, beta: MeasurementOutcome) -> FockOperator {
    let n = params.truncation;
    let scale = params.prefactor();
    let diag: Vec<Complex64> = (0..n)
        .map(|k| Complex64::new(scale * params.q.powi(k as i32), 0.0))
        .collect();
    let middle = FockOperator::diagonal(&diag).expect("square diagonal");
    displacement_operator(params.g * beta.beta(), n)
        .compose(&middle)
        .and_then(|m| m.compose(&displacement_operator(-beta.beta(), n)))
        .expect("matching truncations")
}

/// The conditional state of the output mode before the gain displacement:
/// `sqrt((1-q^2)/pi) sum_n q^n |n><n| D(-beta) |psi>`.
pub fn conditional_state(
    params: &TeleportParams,
    beta: MeasurementOutcome,
    psi: &FockVector,
) -> Result<FockVector> {
    crate::fock::check_dims(params.truncation, psi.truncation())?;
    let shifted = displace(-beta.beta(), psi);
    let scale = params.prefactor();
    let mut weight = scale;
    let mut amplitudes = shifted.into_amplitudes();
    for a in amplitudes.iter_mut() {
        *a *= weight;
        weight *= params.q;
    }
    Ok(FockVector::from_array(amplitudes))
}

/// `T_g(beta) |psi>`, evaluated as displace, damp, displace.
pub fn apply_transfer(
    params: &TeleportParams,
    beta: MeasurementOutcome,
    psi: &FockVector,
) -> Result<FockVector> {
    let conditional = conditional_state(params, beta, psi)?;
    Ok(displace(params.g * beta.beta(), &conditional))
}

/// Outcome density `P(beta)` for a normalized input.
///
/// Evaluated on the conditional state before the gain displacement, which is
/// unitary and leaves the norm unchanged.
pub fn p_density(
    params: &TeleportParams,
    beta: impl Into<Complex64>,
    psi: &FockVector,
) -> Result<f64> {
    let beta = MeasurementOutcome::try_from(beta.into())?;
    Ok(conditional_state(params, beta, psi)?.norm_sqr())
}

/// `T_g(beta) |alpha> = coefficient * |amplitude>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentOutput {
    pub coefficient: Complex64,
    pub amplitude: Complex64,
}

impl CoherentOutput {
    pub fn to_vector(&self, truncation: usize) -> FockVector {
        coherent_state(self.amplitude, truncation).scaled(self.coefficient)
    }
}

/// Closed form of the channel acting on a coherent state.
pub fn coherent_closed_form(
    params: &TeleportParams,
    beta: MeasurementOutcome,
    alpha: Complex64,
) -> CoherentOutput {
    let (q, g) = (params.q, params.g);
    let beta = beta.beta();
    let envelope = (-(1.0 - q * q) * (alpha - beta).norm_sqr() / 2.0).exp();
    // alpha beta* - beta alpha* is purely imaginary.
    let cross = alpha * beta.conj() - beta * alpha.conj();
    let phase = ((1.0 - g * q) * cross / 2.0).exp();
    CoherentOutput {
        coefficient: phase * (params.prefactor() * envelope),
        amplitude: q * alpha + (g - q) * beta,
    }
}

/// Closed form of the channel acting on `|1>`:
/// `sqrt((1-q^2)/pi) e^{-(1-q^2)|beta|^2/2} D((g-q) beta) ((1-q^2) beta* |0> + q |1>)`.
pub fn one_photon_closed_form(
    params: &TeleportParams,
    beta: MeasurementOutcome,
) -> Result<FockVector> {
    let n = params.truncation;
    if n < 2 {
        return Err(Error::OutOfRange {
            n: 1,
            truncation: n,
        });
    }
    let (q, g) = (params.q, params.g);
    let beta = beta.beta();
    let envelope = params.prefactor() * (-(1.0 - q * q) * beta.norm_sqr() / 2.0).exp();
    let mut seed = vec![Complex64::new(0.0, 0.0); n];
    seed[0] = (1.0 - q * q) * beta.conj() * envelope;
    seed[1] = Complex64::new(q * envelope, 0.0);
    let seed = FockVector::from_amplitudes(seed)?;
    Ok(displace((g - q) * beta, &seed))
}

/// Brute-force conditional state: builds `|psi>_A (x) |q>_{RB}` over three
/// modes and contracts A and R against the joint eigenstate for `beta`.
///
/// Costs `O(N^3)` time and memory; intended as an independent check.
pub fn conditional_state_bruteforce(
    q: f64,
    beta: MeasurementOutcome,
    psi: &FockVector,
    truncation: usize,
) -> Result<FockVector> {
    crate::fock::check_dims(truncation, psi.truncation())?;
    let resource = epr_state(q, truncation)?;
    let bell = bell_eigenstate(beta, truncation);
    let n = truncation;

    let joint = Array3::from_shape_fn((n, n, n), |(a, r, b)| psi.get(a) * resource.get(r, b));
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for a in 0..n {
        for r in 0..n {
            let bra = bell.get(a, r).conj();
            if bra == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (b, slot) in out.iter_mut().enumerate() {
                *slot += bra * joint[[a, r, b]];
            }
        }
    }
    FockVector::from_amplitudes(out)
}

/// Outcome-averaged figures of one channel configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelAverage {
    pub params: TeleportParams,
    /// `integral P(beta) d^2 beta`.
    pub probability: f64,
    /// `integral |<psi|T|psi>|^2 d^2 beta`.
    pub fidelity: f64,
    /// Diagonal of the averaged output density matrix.
    pub photon_distribution: Vec<f64>,
    /// `integral T|psi><psi|T^dagger d^2 beta`, when requested.
    pub density: Option<DensityMatrix>,
    /// Probability mass captured by the outermost ring of grid cells.
    pub boundary_mass: f64,
}

impl ChannelAverage {
    /// `sum_n n rho_nn` of the averaged output.
    pub fn mean_photon_number(&self) -> f64 {
        self.photon_distribution
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }
}

#[derive(Clone)]
struct GainAccumulator {
    fidelity: f64,
    photons: Vec<f64>,
    density: Option<Array2<Complex64>>,
}

#[derive(Clone)]
struct Accumulator {
    probability: f64,
    boundary_mass: f64,
    per_gain: Vec<GainAccumulator>,
}

/// Averages the channel output over all outcomes on `grid` in a single pass.
pub fn average_channel(
    params: &TeleportParams,
    psi: &FockVector,
    grid: &QuadratureGrid,
    with_density: bool,
) -> Result<ChannelAverage> {
    let mut out = average_channel_sweep(
        params.q,
        params.truncation,
        &[params.g],
        psi,
        grid,
        with_density,
    )?;
    Ok(out.remove(0))
}

/// Averages the channel output for several gains at once. The conditional
/// state before the gain displacement is shared across gains.
pub fn average_channel_sweep(
    q: f64,
    truncation: usize,
    gains: &[f64],
    psi: &FockVector,
    grid: &QuadratureGrid,
    with_density: bool,
) -> Result<Vec<ChannelAverage>> {
    let all_params = gains
        .iter()
        .map(|&g| TeleportParams::new(q, g, truncation))
        .collect::<Result<Vec<_>>>()?;
    let Some(base) = all_params.first().copied() else {
        return Ok(Vec::new());
    };
    crate::fock::check_dims(truncation, psi.truncation())?;
    if (psi.norm_sqr() - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidParameter(
            "input state must be normalized".into(),
        ));
    }
    let n = truncation;
    let zero = || Accumulator {
        probability: 0.0,
        boundary_mass: 0.0,
        per_gain: vec![
            GainAccumulator {
                fidelity: 0.0,
                photons: vec![0.0; n],
                density: with_density.then(|| Array2::zeros((n, n))),
            };
            gains.len()
        ],
    };
    let acc = grid.reduce(
        zero,
        |acc, index, node| {
            let beta = MeasurementOutcome::try_from(node.beta)?;
            let conditional = conditional_state(&base, beta, psi)?;
            let density = conditional.norm_sqr();
            if !density.is_finite() {
                return Err(Error::NonFinite(node.beta));
            }
            acc.probability += node.weight * density;
            if grid.is_boundary(index) {
                acc.boundary_mass += node.weight * density;
            }
            for (slot, &g) in acc.per_gain.iter_mut().zip(gains) {
                let out = displace(g * node.beta, &conditional);
                let overlap = inner(psi, &out)?.norm_sqr();
                if !overlap.is_finite() {
                    return Err(Error::NonFinite(node.beta));
                }
                slot.fidelity += node.weight * overlap;
                let v = out.amplitudes();
                for (p, a) in slot.photons.iter_mut().zip(v.iter()) {
                    *p += node.weight * a.norm_sqr();
                }
                if let Some(rho) = slot.density.as_mut() {
                    for i in 0..n {
                        let vi = v[i] * node.weight;
                        if vi == Complex64::new(0.0, 0.0) {
                            continue;
                        }
                        for j in 0..n {
                            rho[[i, j]] += vi * v[j].conj();
                        }
                    }
                }
            }
            Ok(())
        },
        |total, row| {
            total.probability += row.probability;
            total.boundary_mass += row.boundary_mass;
            for (t, r) in total.per_gain.iter_mut().zip(row.per_gain) {
                t.fidelity += r.fidelity;
                for (a, b) in t.photons.iter_mut().zip(&r.photons) {
                    *a += b;
                }
                if let (Some(a), Some(b)) = (t.density.as_mut(), r.density) {
                    *a += &b;
                }
            }
        },
    )?;
    if acc.boundary_mass > BOUNDARY_MASS_TOLERANCE {
        log::warn!(
            "grid of radius {} truncates the outcome density: boundary mass {:.3e}",
            grid.radius(),
            acc.boundary_mass
        );
    }
    Ok(all_params
        .into_iter()
        .zip(acc.per_gain)
        .map(|(params, slot)| ChannelAverage {
            params,
            probability: acc.probability,
            fidelity: slot.fidelity.clamp(0.0, 1.0),
            photon_distribution: slot.photons,
            density: slot.density.map(DensityMatrix::from_matrix_unchecked),
            boundary_mass: acc.boundary_mass,
        })
        .collect())
}

/// Outcome-averaged fidelity `integral |<psi|T_g(beta)|psi>|^2 d^2 beta`.
pub fn average_fidelity(
    params: &TeleportParams,
    psi: &FockVector,
    grid: &QuadratureGrid,
) -> Result<f64> {
    Ok(average_channel(params, psi, grid, false)?.fidelity)
}

/// Output density matrix averaged over all outcomes.
pub fn average_output_density(
    params: &TeleportParams,
    psi: &FockVector,
    grid: &QuadratureGrid,
) -> Result<DensityMatrix> {
    Ok(average_channel(params, psi, grid, true)?
        .density
        .expect("density requested"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::fock_state;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn params(q: f64, g: f64, n: usize) -> TeleportParams {
        TeleportParams::new(q, g, n).unwrap()
    }

    #[test]
    fn parameter_validation() {
        assert!(TeleportParams::new(1.0, 1.0, 10).is_err());
        assert!(TeleportParams::new(-0.1, 1.0, 10).is_err());
        assert!(TeleportParams::new(0.5, -1.0, 10).is_err());
        assert!(TeleportParams::new(0.5, 1.0, 0).is_err());
        assert!(TeleportParams::new(0.0, 0.0, 1).is_ok());
        assert!(MeasurementOutcome::try_from(c(f64::INFINITY, 0.0)).is_err());
    }

    #[test]
    fn epr_examples() {
        let v = epr_state(0.0, 5).unwrap();
        assert_eq!(v.get(0, 0), c(1.0, 0.0));
        assert_eq!(v.norm_sqr(), 1.0);

        let v = epr_state(0.5, 40).unwrap();
        // geometric series: (1-q^2) sum_{n<40} q^{2n} = 1 - q^80
        assert!((v.norm_sqr() - (1.0 - 0.5_f64.powi(80))).abs() < 1e-15);
        assert!((v.norm_sqr() - 1.0).abs() < 1e-12);
        assert!((v.get(2, 2).re - 0.75_f64.sqrt() * 0.25).abs() < 1e-15);
        assert!((v.get(2, 2).re - 0.2165).abs() < 1e-4);
        assert_eq!(v.get(1, 2), c(0.0, 0.0));
        assert!(epr_state(1.0, 4).is_err());
    }

    #[test]
    fn bell_eigenstate_examples() {
        let b = bell_eigenstate(MeasurementOutcome::new(0.0, 0.0), 3);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 / PI.sqrt() } else { 0.0 };
                assert!((b.get(i, j) - c(want, 0.0)).norm() < 1e-15);
            }
        }
        let b = bell_eigenstate(MeasurementOutcome::new(1.0, 0.0), 8);
        let d = displacement_operator(c(1.0, 0.0), 8);
        for n in 0..8 {
            let column = d.apply(&fock_state(n, 8).unwrap()).unwrap();
            for m in 0..8 {
                assert!((b.get(m, n) - column.get(m) / PI.sqrt()).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_entanglement_zero_gain_collapses_to_vacuum() {
        let p = params(0.0, 0.0, 30);
        let beta = MeasurementOutcome::new(0.4, -0.7);
        let alpha = c(0.9, 0.3);
        let psi = coherent_state(alpha, 30);
        let out = transfer_operator(&p, beta).apply(&psi).unwrap();
        let amp =
            inner(&fock_state(0, 30).unwrap(), &displace(-beta.beta(), &psi)).unwrap() / PI.sqrt();
        assert!((out.get(0) - amp).norm() < 1e-14);
        assert!((1..30).all(|n| out.get(n).norm() < 1e-14));
    }

    #[test]
    fn transfer_matches_coherent_closed_form() {
        let p = params(0.5, 1.0, 60);
        let beta = MeasurementOutcome::new(0.5, 0.3);
        let alpha = c(1.0, 0.0);
        let t = transfer_operator(&p, beta);
        let out = t.apply(&coherent_state(alpha, 60)).unwrap();
        let closed = coherent_closed_form(&p, beta, alpha).to_vector(60);
        assert!(out.max_abs_diff(&closed).unwrap() < 1e-8);
    }

    #[test]
    fn apply_transfer_matches_matrix_route() {
        let p = params(0.7, 1.0, 60);
        let beta = MeasurementOutcome::new(1.0, -0.4);
        let psi = FockVector::from_amplitudes(
            (0..60)
                .map(|n| {
                    if n < 12 {
                        c((n as f64 * 1.3).sin(), (n as f64 * 0.7).cos())
                    } else {
                        c(0.0, 0.0)
                    }
                })
                .collect::<Vec<_>>(),
        )
        .unwrap()
        .normalized()
        .unwrap();
        let fast = apply_transfer(&p, beta, &psi).unwrap();
        let slow = transfer_operator(&p, beta).apply(&psi).unwrap();
        assert!(fast.max_abs_diff(&slow).unwrap() < 1e-10);
    }

    #[test]
    fn vacuum_at_matched_gain_stays_vacuum() {
        for q in [0.3, 0.5, 0.8] {
            let p = params(q, q, 60);
            for beta in [
                MeasurementOutcome::new(1.3, -0.2),
                MeasurementOutcome::new(-2.0, 1.0),
            ] {
                let out = apply_transfer(&p, beta, &fock_state(0, 60).unwrap()).unwrap();
                assert!(out.get(0).norm() > 1e-3);
                assert!((1..60).all(|n| out.get(n).norm() < 1e-10));
            }
        }
    }

    #[test]
    fn one_photon_route_agreement() {
        let p = params(0.5, 0.8, 60);
        let beta = MeasurementOutcome::new(0.6, 0.0);
        let routed = apply_transfer(&p, beta, &fock_state(1, 60).unwrap()).unwrap();
        let closed = one_photon_closed_form(&p, beta).unwrap();
        assert!(routed.max_abs_diff(&closed).unwrap() < 1e-8);

        let p = params(0.6, 1.0, 60);
        let beta = MeasurementOutcome::new(0.5, 0.5);
        let routed = apply_transfer(&p, beta, &fock_state(1, 60).unwrap()).unwrap();
        let closed = one_photon_closed_form(&p, beta).unwrap();
        assert!(routed.max_abs_diff(&closed).unwrap() < 1e-8);
    }

    #[test]
    fn one_photon_closed_form_limits() {
        let p = params(0.6, 1.0, 10);
        let out = one_photon_closed_form(&p, MeasurementOutcome::new(0.0, 0.0)).unwrap();
        assert!(out.get(0).norm() < 1e-15);
        assert!((out.get(1) - c(0.6 * p.prefactor(), 0.0)).norm() < 1e-15);
        assert!((2..10).all(|n| out.get(n).norm() == 0.0));

        let p = params(0.6, 0.6, 10);
        let out = one_photon_closed_form(&p, MeasurementOutcome::new(1.1, -0.4)).unwrap();
        assert!((2..10).all(|n| out.get(n).norm() < 1e-15));
        assert!(
            one_photon_closed_form(&params(0.6, 0.6, 1), MeasurementOutcome::new(0.0, 0.0))
                .is_err()
        );
    }

    #[test]
    fn closed_form_matched_gain_is_beta_independent() {
        let p = params(0.5, 0.5, 20);
        let alpha = c(0.7, -0.3);
        for beta in [
            MeasurementOutcome::new(0.0, 0.0),
            MeasurementOutcome::new(2.0, 1.0),
        ] {
            let out = coherent_closed_form(&p, beta, alpha);
            assert!((out.amplitude - 0.5 * alpha).norm() < 1e-15);
        }
    }

    #[test]
    fn closed_form_exact_match_outcome() {
        for q in [0.0, 0.4, 0.9] {
            let p = params(q, 1.0, 20);
            let alpha = c(1.2, -0.6);
            let out = coherent_closed_form(&p, MeasurementOutcome::try_from(alpha).unwrap(), alpha);
            assert!((out.coefficient.norm() - prefactor(q)).abs() < 1e-15);
            assert!((out.amplitude - alpha).norm() < 1e-15);
        }
    }

    #[test]
    fn closed_form_zero_outcome_matches_routed() {
        let p = params(0.5, 1.0, 60);
        let beta = MeasurementOutcome::new(0.0, 0.0);
        let alpha = c(1.0, 0.0);
        let out = coherent_closed_form(&p, beta, alpha);
        let expected = (0.75 / PI).sqrt() * (-0.375_f64).exp();
        assert!((out.coefficient.norm() - expected).abs() < 1e-15);
        let routed = apply_transfer(&p, beta, &coherent_state(alpha, 60)).unwrap();
        assert!(routed.max_abs_diff(&out.to_vector(60)).unwrap() < 1e-10);
    }

    #[test]
    fn density_examples() {
        let p = params(0.5, 1.0, 60);
        let psi = coherent_state(c(1.0, 0.0), 60);
        let d = p_density(&p, c(1.0, 0.0), &psi).unwrap();
        assert!((d - 0.75 / PI).abs() < 1e-12);
        assert!((d - 0.2387).abs() < 1e-4);

        let p = params(0.0, 0.0, 30);
        let vac = fock_state(0, 30).unwrap();
        assert!((p_density(&p, c(0.0, 0.0), &vac).unwrap() - 1.0 / PI).abs() < 1e-15);
        let b = c(0.8, -1.1);
        let want = (-b.norm_sqr()).exp() / PI;
        assert!((p_density(&p, b, &vac).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn bruteforce_examples() {
        let n = 25;
        let beta = MeasurementOutcome::new(0.0, 0.0);
        let out = conditional_state_bruteforce(0.5, beta, &fock_state(0, n).unwrap(), n).unwrap();
        assert!((out.get(0) - c(prefactor(0.5), 0.0)).norm() < 1e-14);
        assert!((1..n).all(|k| out.get(k).norm() < 1e-15));

        // Unentangled resource: vacuum scaled by <0|D(-beta)|psi>/sqrt(pi).
        let beta = MeasurementOutcome::new(0.3, 0.9);
        let psi = coherent_state(c(-0.4, 0.2), n);
        let out = conditional_state_bruteforce(0.0, beta, &psi, n).unwrap();
        let amp = displace(-beta.beta(), &psi).get(0) / PI.sqrt();
        assert!((out.get(0) - amp).norm() < 1e-14);
        assert!((1..n).all(|k| out.get(k).norm() < 1e-15));
    }

    #[test]
    fn bruteforce_matches_diagonal_route() {
        let n = 25;
        let q = 0.5;
        let beta = MeasurementOutcome::new(0.3, -0.2);
        let mut amps = vec![c(0.0, 0.0); n];
        amps[0] = c(0.5_f64.sqrt(), 0.0);
        amps[2] = c(0.0, 0.5_f64.sqrt());
        let psi = FockVector::from_amplitudes(amps).unwrap();
        let brute = conditional_state_bruteforce(q, beta, &psi, n).unwrap();
        // sqrt((1-q^2)/pi) diag(q^n) D(-beta) psi, written out longhand.
        let shifted = displacement_operator(-beta.beta(), n).apply(&psi).unwrap();
        let expected = FockVector::from_amplitudes(
            (0..n)
                .map(|k| shifted.get(k) * prefactor(q) * q.powi(k as i32))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        assert!(brute.max_abs_diff(&expected).unwrap() < 1e-6);
    }

    #[test]
    fn bruteforce_then_gain_matches_transfer() {
        let n = 25;
        let p = params(0.5, 1.0, n);
        let beta = MeasurementOutcome::new(0.0, 0.7);
        let psi = FockVector::from_amplitudes(
            [c(1.0, 0.0), c(1.0, 0.0)]
                .into_iter()
                .chain(std::iter::repeat_n(c(0.0, 0.0), n - 2))
                .collect::<Vec<_>>(),
        )
        .unwrap()
        .normalized()
        .unwrap();
        let brute = conditional_state_bruteforce(p.q(), beta, &psi, n).unwrap();
        let routed = displace(p.g() * beta.beta(), &brute);
        let direct = apply_transfer(&p, beta, &psi).unwrap();
        assert!(routed.max_abs_diff(&direct).unwrap() < 1e-6);
    }

    #[test]
    fn dimension_mismatch_reported() {
        let p = params(0.5, 1.0, 10);
        let psi = fock_state(0, 9).unwrap();
        assert!(matches!(
            apply_transfer(&p, MeasurementOutcome::new(0.0, 0.0), &psi),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
