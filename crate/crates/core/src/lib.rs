//! Joint 1-bit precoding and discrete beyond-diagonal IRS phase design for
//! line-of-sight THz MISO downlinks.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the scalar to `f64`, which the experiment harness uses.

// Guards are written as `!(x > 0)` so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod eig;
pub mod error;
pub mod objective;
pub mod optimizer;
pub mod phase;
pub mod precoder;
pub mod quantizer;
pub mod scalar;

pub use channel::{
    make_channels, path_loss, sample_geometry, spatial_frequency, steering_vector, ChannelPair, ChannelParams, Scenario,
};
pub use eig::{hermitian_eig, HermitianEigen};
pub use error::{Error, Result};
pub use objective::{
    effective_channel, noise_power, snr, spectral_efficiency, LinkObjective, PhaseObjective, PrecoderObjective,
};
pub use optimizer::{initialize, run_joint, JointConfig, OptimizerConfig, RunRecord, Variant};
pub use phase::{
    best_rotation, build_difference_matrix, cophased_target, design_bd_phase, dirs_baseline, greedy_phase_refine,
    normalize_channels, safeguarded_phase_update, PhaseDesignState, PhaseDesignerConfig,
};
pub use precoder::{cg_direction, line_search, numerical_gradient, solve_p1, PrecoderState, SolverConfig};
pub use quantizer::{dbm_to_watts, power_scale, project_to_xi, project_to_zeta, xi_set, QuantSpec, ScaledCodeword};
pub use scalar::{Cplx, Real};

pub type C64 = Cplx<f64>;
pub type C32 = Cplx<f32>;
pub type ChannelParams64 = ChannelParams<f64>;
pub type ChannelPair64 = ChannelPair<f64>;
pub type LinkObjective64 = LinkObjective<f64>;
pub type QuantSpec64 = QuantSpec<f64>;
pub type ScaledCodeword64 = ScaledCodeword<f64>;
pub type JointConfig64 = JointConfig<f64>;
pub type RunRecord64 = RunRecord<f64>;
pub type ChannelPair32 = ChannelPair<f32>;
pub type LinkObjective32 = LinkObjective<f32>;
pub type RunRecord32 = RunRecord<f32>;
