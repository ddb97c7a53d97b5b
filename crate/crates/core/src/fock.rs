//! Single-mode states and operators in a truncated photon-number basis.
//!
//! A [`FockVector`] holds amplitudes for photon numbers `0..N`; it is allowed
//! to be unnormalized, since conditional states carry their outcome
//! probability in their squared norm. A [`FockOperator`] is a dense `N x N`
//! matrix with rows indexing output photon numbers.
//!
//! Displacement matrix elements are evaluated analytically through a
//! normalized associated-Laguerre recurrence, so every stored element equals
//! the corresponding element of the infinite-dimensional unitary up to
//! rounding. Truncation only ever removes rows and columns.

use std::fmt;

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Amplitudes over photon numbers `0..N`.
#[derive(Clone, PartialEq)]
pub struct FockVector {
    amplitudes: Array1<Complex64>,
}

impl FockVector {
    /// Wraps an amplitude list. The truncation is its length, which must be positive.
    pub fn from_amplitudes(amplitudes: impl Into<Vec<Complex64>>) -> Result<Self> {
        let amplitudes = amplitudes.into();
        if amplitudes.is_empty() {
            return Err(Error::InvalidParameter(
                "truncation must be at least 1".into(),
            ));
        }
        if amplitudes.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidParameter("amplitudes must be finite".into()));
        }
        Ok(Self {
            amplitudes: Array1::from(amplitudes),
        })
    }

    pub(crate) fn from_array(amplitudes: Array1<Complex64>) -> Self {
        debug_assert!(!amplitudes.is_empty());
        Self { amplitudes }
    }

    pub fn zeros(truncation: usize) -> Self {
        assert!(truncation > 0, "truncation must be at least 1");
        Self::from_array(Array1::zeros(truncation))
    }

    pub fn truncation(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &Array1<Complex64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Array1<Complex64> {
        self.amplitudes
    }

    pub fn get(&self, n: usize) -> Complex64 {
        self.amplitudes.get(n).copied().unwrap_or(ZERO)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Unit-norm copy of this vector.
    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm();
        if norm == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(self.scaled(Complex64::new(1.0 / norm, 0.0)))
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self::from_array(self.amplitudes.mapv(|a| a * factor))
    }

    /// Euclidean norm of `self - other`.
    pub fn distance(&self, other: &FockVector) -> Result<f64> {
        check_dims(self.truncation(), other.truncation())?;
        Ok(self
            .amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    /// Largest modulus of `self - other` over all photon numbers.
    pub fn max_abs_diff(&self, other: &FockVector) -> Result<f64> {
        check_dims(self.truncation(), other.truncation())?;
        Ok(self
            .amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Photon-number distribution `|v_n|^2 / |v|^2`.
    pub fn photon_distribution(&self) -> Result<Vec<f64>> {
        let total = self.norm_sqr();
        if total == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(self
            .amplitudes
            .iter()
            .map(|a| a.norm_sqr() / total)
            .collect())
    }
}

impl fmt::Debug for FockVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FockVector")
            .field("truncation", &self.truncation())
            .field("amplitudes", &self.amplitudes.as_slice().unwrap_or(&[]))
            .finish()
    }
}

/// Dense operator on a single truncated mode; rows index output photon numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    matrix: Array2<Complex64>,
}

impl FockOperator {
    pub fn from_matrix(matrix: Array2<Complex64>) -> Result<Self> {
        let (rows, cols) = matrix.dim();
        if rows != cols {
            return Err(Error::DimensionMismatch {
                expected: rows,
                found: cols,
            });
        }
        if rows == 0 {
            return Err(Error::InvalidParameter(
                "truncation must be at least 1".into(),
            ));
        }
        Ok(Self { matrix })
    }

    pub fn identity(truncation: usize) -> Self {
        assert!(truncation > 0, "truncation must be at least 1");
        Self {
            matrix: Array2::eye(truncation),
        }
    }

    /// Diagonal operator `sum_n d_n |n><n|`.
    pub fn diagonal(entries: &[Complex64]) -> Result<Self> {
        Self::from_matrix(Array2::from_diag(&Array1::from(entries.to_vec())))
    }

    pub fn truncation(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Array2<Complex64> {
        self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[[row, col]]
    }

    pub fn apply(&self, v: &FockVector) -> Result<FockVector> {
        check_dims(self.truncation(), v.truncation())?;
        Ok(FockVector::from_array(self.matrix.dot(&v.amplitudes)))
    }

    /// Operator product `self * rhs`.
    pub fn compose(&self, rhs: &FockOperator) -> Result<FockOperator> {
        check_dims(self.truncation(), rhs.truncation())?;
        Ok(FockOperator {
            matrix: self.matrix.dot(&rhs.matrix),
        })
    }

    pub fn adjoint(&self) -> FockOperator {
        FockOperator {
            matrix: self.matrix.t().mapv(|z| z.conj()),
        }
    }

    /// Largest entry modulus of `A - A^dagger` over the leading `block x block` corner.
    pub fn hermiticity_deviation(&self, block: usize) -> f64 {
        let block = block.min(self.truncation());
        let mut worst = 0.0_f64;
        for i in 0..block {
            for j in 0..block {
                worst = worst.max((self.matrix[[i, j]] - self.matrix[[j, i]].conj()).norm());
            }
        }
        worst
    }
}

/// A single-mode density matrix, typically an outcome-averaged channel output.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: Array2<Complex64>,
}

impl DensityMatrix {
    pub fn from_matrix(matrix: Array2<Complex64>) -> Result<Self> {
        Ok(Self {
            matrix: FockOperator::from_matrix(matrix)?.matrix,
        })
    }

    pub(crate) fn from_matrix_unchecked(matrix: Array2<Complex64>) -> Self {
        Self { matrix }
    }

    /// `|psi><psi|`.
    pub fn pure(psi: &FockVector) -> Self {
        let v = psi.amplitudes();
        let n = v.len();
        Self {
            matrix: Array2::from_shape_fn((n, n), |(i, j)| v[i] * v[j].conj()),
        }
    }

    pub fn truncation(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[[row, col]]
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diag().iter().map(|z| z.re).sum()
    }

    /// Diagonal entries `rho_nn`, not renormalized.
    pub fn photon_distribution(&self) -> Vec<f64> {
        self.matrix.diag().iter().map(|z| z.re).collect()
    }

    /// `sum_n n rho_nn`, not renormalized by the trace.
    pub fn mean_photon_number(&self) -> f64 {
        self.matrix
            .diag()
            .iter()
            .enumerate()
            .map(|(n, z)| n as f64 * z.re)
            .sum()
    }

    /// `<psi|rho|psi>`.
    pub fn expectation(&self, psi: &FockVector) -> Result<f64> {
        check_dims(self.truncation(), psi.truncation())?;
        let v = psi.amplitudes();
        Ok(v.mapv(|z| z.conj()).dot(&self.matrix.dot(v)).re)
    }

    /// Largest entry modulus of `rho - rho^dagger`.
    pub fn hermiticity_deviation(&self) -> f64 {
        FockOperator::from_matrix(self.matrix.clone())
            .map(|op| op.hermiticity_deviation(self.truncation()))
            .unwrap_or(f64::INFINITY)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let n = self.truncation();
        let h = nalgebra::DMatrix::from_fn(n, n, |i, j| {
            0.5 * (self.matrix[[i, j]] + self.matrix[[j, i]].conj())
        });
        let mut values: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        values.sort_by(f64::total_cmp);
        values
    }

    /// Largest entry modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> Result<f64> {
        check_dims(self.truncation(), other.truncation())?;
        Ok(self
            .matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}

/// The number state `|n>`.
pub fn fock_state(n: usize, truncation: usize) -> Result<FockVector> {
    if n >= truncation {
        return Err(Error::OutOfRange { n, truncation });
    }
    let mut v = FockVector::zeros(truncation);
    v.amplitudes[n] = ONE;
    Ok(v)
}

/// The coherent state `|alpha>` restricted to photon numbers below `truncation`.
///
/// The squared norm falls short of one by the Poisson tail beyond `truncation - 1`.
pub fn coherent_state(alpha: Complex64, truncation: usize) -> FockVector {
    assert!(truncation > 0, "truncation must be at least 1");
    let mut v = FockVector::zeros(truncation);
    let r = alpha.norm();
    if r == 0.0 {
        v.amplitudes[0] = ONE;
        return v;
    }
    let ln_r = r.ln();
    let theta = alpha.arg();
    let mut ln_fact = 0.0;
    for n in 0..truncation {
        if n > 0 {
            ln_fact += (n as f64).ln();
        }
        let modulus = (-0.5 * r * r + n as f64 * ln_r - 0.5 * ln_fact).exp();
        v.amplitudes[n] = Complex64::from_polar(modulus, n as f64 * theta);
    }
    v
}

/// Matrix of the displacement operator `D(alpha)` in the truncated basis.
pub fn displacement_operator(alpha: Complex64, truncation: usize) -> FockOperator {
    assert!(truncation > 0, "truncation must be at least 1");
    let phases = rotation_phases(alpha.arg(), truncation);
    let mut matrix = Array2::zeros((truncation, truncation));
    for_each_real_diagonal(alpha.norm(), truncation, |k, diagonal| {
        // <n+k|D(alpha)|n> = e^{ik theta} f_n, <n|D(alpha)|n+k> = (-1)^k e^{-ik theta} f_n
        let lower = phases[k];
        let upper = if k % 2 == 0 {
            lower.conj()
        } else {
            -lower.conj()
        };
        for (n, &f) in diagonal.iter().enumerate() {
            matrix[[n + k, n]] = lower * f;
            if k > 0 {
                matrix[[n, n + k]] = upper * f;
            }
        }
    });
    FockOperator { matrix }
}

/// `D(alpha) v` without allocating the displacement matrix.
///
/// Uses `D(alpha) = R(theta) D(|alpha|) R(-theta)` with `R(theta) = e^{i theta n}`,
/// so the inner loop only multiplies by real matrix elements.
pub fn displace(alpha: Complex64, v: &FockVector) -> FockVector {
    let dim = v.truncation();
    let phases = rotation_phases(alpha.arg(), dim);
    let rotated: Vec<Complex64> = v
        .amplitudes
        .iter()
        .zip(&phases)
        .map(|(a, p)| a * p.conj())
        .collect();
    let mut out = vec![ZERO; dim];
    for_each_real_diagonal(alpha.norm(), dim, |k, diagonal| {
        if k == 0 {
            for ((o, &f), w) in out.iter_mut().zip(diagonal).zip(&rotated) {
                *o += w * f;
            }
            return;
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        for (n, &f) in diagonal.iter().enumerate() {
            out[n + k] += rotated[n] * f;
            out[n] += rotated[n + k] * (sign * f);
        }
    });
    for (o, p) in out.iter_mut().zip(&phases) {
        *o *= p;
    }
    FockVector::from_array(Array1::from(out))
}

/// `e^{i n theta}` for `n < dim`.
fn rotation_phases(theta: f64, dim: usize) -> Vec<Complex64> {
    (0..dim)
        .map(|n| Complex64::from_polar(1.0, n as f64 * theta))
        .collect()
}

/// `<u|v>`.
pub fn inner(u: &FockVector, v: &FockVector) -> Result<Complex64> {
    check_dims(u.truncation(), v.truncation())?;
    Ok(u.amplitudes
        .iter()
        .zip(v.amplitudes.iter())
        .map(|(a, b)| a.conj() * b)
        .sum())
}

/// `|<u|v>|^2 / <v|v>` for a normalized `u` and an arbitrary nonzero `v`.
pub fn fidelity_pure(u: &FockVector, v: &FockVector) -> Result<f64> {
    let norm_sqr = v.norm_sqr();
    if norm_sqr == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((inner(u, v)?.norm_sqr() / norm_sqr).clamp(0.0, 1.0))
}

pub fn mean_photon_number(v: &FockVector) -> Result<f64> {
    let total = v.norm_sqr();
    if total == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let weighted: f64 = v
        .amplitudes
        .iter()
        .enumerate()
        .map(|(n, a)| n as f64 * a.norm_sqr())
        .sum();
    Ok(weighted / total)
}

pub(crate) fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Visits each diagonal `k = row - col >= 0` of the real displacement `D(r)`,
/// passing `f_n = <n+k|D(r)|n>` for `n < dim - k`. The mirrored upper
/// element is `<n|D(r)|n+k> = (-1)^k f_n`.
///
/// With `x = r^2`, `f_n = sqrt(n!/(n+k)!) r^k e^{-x/2} L_n^{(k)}(x)` obeys
///
/// `sqrt((n+1)(n+k+1)) f_{n+1} = (2n+1+k-x) f_n - sqrt(n(n+k)) f_{n-1}`,
///
/// started from `f_0 = r^k e^{-x/2} / sqrt(k!)` evaluated in log space.
fn for_each_real_diagonal(r: f64, dim: usize, mut visit: impl FnMut(usize, &[f64])) {
    let mut diagonal = vec![0.0; dim];
    if r == 0.0 {
        diagonal.fill(1.0);
        visit(0, &diagonal);
        return;
    }
    let x = r * r;
    let ln_r = r.ln();
    let sqrt: Vec<f64> = (0..=2 * dim).map(|i| (i as f64).sqrt()).collect();
    let inv_sqrt: Vec<f64> = sqrt.iter().map(|s| 1.0 / s).collect();

    let mut ln_k_fact = 0.0;
    for k in 0..dim {
        if k > 0 {
            ln_k_fact += (k as f64).ln();
        }
        let len = dim - k;
        let mut f_prev = 0.0;
        let mut f = (k as f64 * ln_r - 0.5 * x - 0.5 * ln_k_fact).exp();
        for n in 0..len {
            diagonal[n] = f;
            let f_next = ((2 * n + 1 + k) as f64 - x) * f - sqrt[n] * sqrt[n + k] * f_prev;
            f_prev = f;
            f = f_next * inv_sqrt[n + 1] * inv_sqrt[n + k + 1];
        }
        visit(k, &diagonal[..len]);
    }
}
