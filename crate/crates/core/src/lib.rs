//! Continuous-variable quantum teleportation in a truncated photon-number basis.
//!
//! The crate provides two independent constructions of the same channel:
//!
//! * [`teleport`]: the transfer operator `T_g(beta)` obtained by measuring an
//!   input together with one half of a two-mode squeezed resource and
//!   displacing the other half by `g beta`;
//! * [`beamsplitter`]: a beam splitter of reflectivity `1 - q^2`, eight-port
//!   homodyne detection of the reflected beam, and a feedback displacement
//!   `f beta` of the transmitted beam.
//!
//! For `g = f + q` the two agree amplitude for amplitude, phases included.
//! [`quadrature`] integrates over the outcome plane and samples outcomes.

pub mod beamsplitter;
pub mod error;
pub mod fock;
pub mod input;
pub mod quadrature;
pub mod teleport;

pub use beamsplitter::{
    beamsplitter_unitary, compensated_measurement_operator, compensated_output,
    equivalence_residual, povm_projection_state, transmitted_state, BSParams, BeamSplitter,
};
pub use error::{Error, Result};
pub use fock::{
    coherent_state, displace, displacement_operator, fidelity_pure, fock_state, inner,
    mean_photon_number, DensityMatrix, FockOperator, FockVector,
};
pub use input::InputState;
pub use quadrature::{completeness_check, integrate_plane, sample_beta, QuadratureGrid, SampleSet};
pub use teleport::{
    apply_transfer, average_channel, average_channel_sweep, average_fidelity,
    average_output_density, bell_eigenstate, coherent_closed_form, conditional_state,
    conditional_state_bruteforce, epr_state, one_photon_closed_form, p_density, transfer_operator,
    ChannelAverage, CoherentOutput, MeasurementOutcome, TeleportParams, TwoModeVector,
};

pub use num_complex::Complex64;

/// Truncation used when none is given; adequate for amplitudes up to about 2.
pub const DEFAULT_TRUNCATION: usize = 60;
