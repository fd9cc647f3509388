//! Exact and fast fractional transforms.

mod cache;
mod eigen;
mod operator;
mod sinc;

pub use cache::{
    build_power_cache, build_power_cache_with_budget, cache_bytes, ensure_cache_fits, PowerCache,
    DEFAULT_MEMORY_BUDGET,
};
pub use eigen::{eigendecompose_unitary, eigenphases, UnitaryEigen, EIGEN_RESIDUAL_TOL};
pub use operator::{
    apply_forward, apply_inverse, exact_gfrft, exact_gfrft_grad, fgfrft_grad, fgfrft_matrix,
    fgfrft_matrix_and_grad, fgfrft_matrix_order, FracOperator,
};
pub use sinc::{sinc, sinc_coeffs, sinc_prime, SincCoeffs, SERIES_CUTOFF};
