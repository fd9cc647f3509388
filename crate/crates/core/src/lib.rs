//! Fast graph fractional Fourier transform.
//!
//! Fractional powers `F^α` of a unitary graph Fourier matrix are approximated by
//! the truncated series `Σ_{|n|≤L} sinc(α−n) F^n`. With the integer powers
//! `F^1..F^L` cached, rebuilding the operator for a new order costs `O(L·N²)`
//! instead of an `O(N³)` eigendecomposition-based reconstruction, and the
//! derivative with respect to `α` comes from the same cache in closed form.
//!
//! Modules:
//! - [`graph`]: lattices, k-NN graphs, shift operators, GFT and random unitary matrices
//! - [`transform`]: eigenphases, sinc coefficients, the power cache and both operators
//! - [`metrics`]: matrix errors, PSNR, SSIM
//! - [`learn`]: Adam, cascaded order learning and joint order/filter denoising
//! - [`bench`]: accuracy sweeps, timing and order-learning experiments

pub use faer::c64;

pub mod bench;
pub mod error;
pub mod graph;
pub mod learn;
pub mod linalg;
pub mod metrics;
pub mod signal;
pub mod transform;

pub use error::{Error, Result};
pub use graph::{
    build_grid_graph, build_knn_graph, gft_from_shift, phase_margin, random_unitary,
    shift_operator, synthetic_unitary, GftMatrix, Graph, Normalization, Provenance, ShiftOperator,
};
pub use linalg::CMat;
pub use signal::GraphSignal;
pub use transform::{
    apply_forward, apply_inverse, build_power_cache, eigendecompose_unitary, exact_gfrft,
    exact_gfrft_grad, fgfrft_grad, fgfrft_matrix, sinc_coeffs, FracOperator, PowerCache,
    SincCoeffs, UnitaryEigen,
};
