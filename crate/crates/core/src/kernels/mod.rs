//! Discrete spatial and temporal kernels shared by every pipeline stage.

mod spatial;
mod temporal;

pub use spatial::{
    auto_radius, conv2_same, gaussian_2d, gaussian_kernel_2d, inhibition_kernel, InhibitionKernel,
    InhibitionParams, SpatialKernel,
};
pub use temporal::{
    bandpass_kernel, gamma_density, gamma_kernel, gamma_tail_mass, temporal_apply, GammaSpec,
    TemporalHistory, TemporalKernel, DEFAULT_TAIL_EPS,
};
