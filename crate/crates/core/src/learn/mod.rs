//! Gradient-based learning of transform orders and spectral filters.

mod adam;
mod cascade;
mod denoise;

pub use adam::{adam_step, AdamState};
pub use cascade::{learn_orders, Backend, CascadeConfig, CascadeRun, OrderLearner, OrderRecord};
pub use denoise::{
    add_gaussian_noise, denoise, DenoiseConfig, DenoiseRecord, DenoiseResult, Denoiser, FilterDiag,
};
