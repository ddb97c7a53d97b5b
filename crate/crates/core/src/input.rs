//! Input-state descriptors shared by the channel drivers and the sampler.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{coherent_state, fock_state, FockVector};

/// A single-mode input state, described independently of the truncation.
#[derive(Debug, Clone, PartialEq)]
pub enum InputState {
    Vacuum,
    Coherent(Complex64),
    Fock(usize),
    /// Explicit amplitudes for photon numbers `0, 1, ...`; normalized on resolution.
    Amplitudes(Vec<Complex64>),
}

impl InputState {
    /// Normalized vector for this state at the given truncation.
    pub fn to_vector(&self, truncation: usize) -> Result<FockVector> {
        if truncation == 0 {
            return Err(Error::InvalidParameter(
                "truncation must be at least 1".into(),
            ));
        }
        match self {
            InputState::Vacuum => fock_state(0, truncation),
            InputState::Fock(n) => fock_state(*n, truncation),
            InputState::Coherent(alpha) => {
                if !alpha.is_finite() {
                    return Err(Error::InvalidParameter(
                        "coherent amplitude must be finite".into(),
                    ));
                }
                coherent_state(*alpha, truncation).normalized()
            }
            InputState::Amplitudes(amps) => {
                if amps.len() > truncation {
                    // Trailing zeros are harmless; anything else would be silently dropped.
                    if amps[truncation..]
                        .iter()
                        .any(|a| *a != Complex64::new(0.0, 0.0))
                    {
                        return Err(Error::DimensionMismatch {
                            expected: truncation,
                            found: amps.len(),
                        });
                    }
                }
                let mut padded = vec![Complex64::new(0.0, 0.0); truncation];
                for (slot, a) in padded.iter_mut().zip(amps) {
                    *slot = *a;
                }
                FockVector::from_amplitudes(padded)?.normalized()
            }
        }
    }

    /// The coherent amplitude when the state is exactly coherent (the vacuum included).
    pub fn coherent_amplitude(&self) -> Option<Complex64> {
        match self {
            InputState::Vacuum | InputState::Fock(0) => Some(Complex64::new(0.0, 0.0)),
            InputState::Coherent(alpha) => Some(*alpha),
            _ => None,
        }
    }

    pub fn is_vacuum(&self) -> bool {
        self.coherent_amplitude() == Some(Complex64::new(0.0, 0.0))
    }
}
