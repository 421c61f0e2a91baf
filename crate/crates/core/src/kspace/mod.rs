//! Radial undersampling machinery: coil compression, golden-angle
//! trajectories, gridding NUFFT with a direct-DFT oracle, coil combination and
//! training-pair assembly.

pub mod compress;
pub mod nufft;
pub mod oracle;
pub mod pair;
pub mod trajectory;

pub use compress::{svd_coil_compress, CoilCompression};
pub use nufft::NufftPlan;
pub use oracle::dft_oracle;
pub use pair::{
    adjoint_radial, make_training_pair, rss_combine, sample_radial, RadialKspace, TrainingPair,
};
pub use trajectory::{density_compensation, golden_angle_trajectory, DcfWeights, Trajectory};

/// A k-space location `(kx, ky)` in cycles per field of view.
pub type KPoint = [f64; 2];
