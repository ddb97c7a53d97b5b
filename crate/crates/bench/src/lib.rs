//! Fixtures shared by the benchmarks.

use cvtele_core::{coherent_state, Complex64, FockVector, MeasurementOutcome, TeleportParams};

pub const TRUNCATIONS: [usize; 3] = [25, 40, 60];

/// A normalized coherent input with amplitude `1 + 0.5i`.
pub fn coherent_input(truncation: usize) -> FockVector {
    coherent_state(Complex64::new(1.0, 0.5), truncation)
        .normalized()
        .expect("nonzero coherent state")
}

pub fn unit_gain(truncation: usize) -> TeleportParams {
    TeleportParams::new(0.5, 1.0, truncation).expect("valid parameters")
}

pub fn outcome() -> MeasurementOutcome {
    MeasurementOutcome::new(0.7, -0.2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_valid() {
        for n in TRUNCATIONS {
            assert!((coherent_input(n).norm_sqr() - 1.0).abs() < 1e-12);
            assert_eq!(unit_gain(n).truncation(), n);
        }
    }
}
