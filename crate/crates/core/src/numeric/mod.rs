//! Dense linear algebra, eigensolvers and discrete Fourier transforms shared by
//! every other module.

mod dft;
mod eigen;
pub(crate) mod extended;
mod matrix;
mod real;
pub mod stats;

pub use dft::{
    amplitude_scale, dft2, dft2_radial, dft_amplitudes, dft_amplitudes_at, dft_bins,
    dft_half_spectrum, ComplexSpectrum,
};
pub use eigen::{
    spectral_norm, spectral_norm_exact, sym_eigen, SymEigen, DEFAULT_POWER_ITERATIONS,
};
pub use matrix::{dot, gemm, norm2, Matrix, Op};
pub use real::Real;
