//! Quantum kicked rotor at resonance as a platform for amplitude
//! amplification and amplitude estimation.
//!
//! The rotor lives on a truncated angular-momentum lattice; kicks are
//! diagonal in angle, free evolution is diagonal in momentum, and the two
//! bases are connected by a unitary FFT.

pub mod density;
pub mod error;
pub mod estimation;
pub mod floquet;
pub mod grover;
pub mod lattice;
pub mod noise;
pub mod robustness;
pub mod state;
pub mod stats;

pub use density::DensityMatrix;
pub use error::{QkrError, Result};
pub use estimation::{estimate_amplitude, EstimationResult, SpinRotorState};
pub use floquet::{
    apply_free, apply_kick, apply_u, eval_potential, floquet_step, prepare_initial, Direction,
    Evolution, FloquetConfig, InitScheme, KickPotential, SchemeKind,
};
pub use grover::{
    amplify, apply_oracle, apply_zero_reflection, average_runtime, grover_iteration,
    optimal_iterations, runtime_scaling, success_probability, AmplifyResult, GroverOperator,
    OracleSpec, ScalingFamily,
};
pub use lattice::{MomentumLattice, TruncationGuard};
pub use noise::NoiseModel;
pub use state::{Representation, RotorState};
