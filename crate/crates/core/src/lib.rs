//! Fourier analysis of ReLU networks: exact piecewise-linear structure,
//! polytope transforms, spectral training diagnostics and kernel baselines.
//!
//! Everything numeric is generic over [`numeric::Real`] (`f32` or `f64`);
//! the aliases below fix the scalar for the common cases.

pub mod cpwl;
pub mod error;
pub mod kernelknn;
pub mod numeric;
pub mod polytope;
pub mod relunet;
pub mod spectra;
pub mod targets;

pub use error::{Error, Result};
pub use numeric::Real;

macro_rules! scalar_aliases {
    ($t:ty; $($alias:ident = $path:ident :: $ty:ident),* $(,)?) => {
        $(pub type $alias = $path::$ty<$t>;)*
    };
}

scalar_aliases!(f64;
    Matrix = numeric::Matrix,
    SymEigen = numeric::SymEigen,
    ReluNet = relunet::ReluNet,
    Layer = relunet::Layer,
    Gradients = relunet::Gradients,
    AdamConfig = relunet::AdamConfig,
    AdamState = relunet::AdamState,
    TrainConfig = relunet::TrainConfig,
    TrainOutcome = relunet::TrainOutcome,
    SinusoidTarget = targets::SinusoidTarget,
    LabelledDataset = targets::LabelledDataset,
    SpectrumTrace = spectra::SpectrumTrace,
    RobustnessProfile = spectra::RobustnessProfile,
    LinearRegion1D = cpwl::LinearRegion1D,
    LipschitzReport = cpwl::LipschitzReport,
    Polytope2D = polytope::Polytope2D,
    FacePath = polytope::FacePath,
    KernelEigenbasis = kernelknn::KernelEigenbasis,
);

scalar_aliases!(f32;
    Matrix32 = numeric::Matrix,
    SymEigen32 = numeric::SymEigen,
    ReluNet32 = relunet::ReluNet,
    Layer32 = relunet::Layer,
    Gradients32 = relunet::Gradients,
    AdamConfig32 = relunet::AdamConfig,
    AdamState32 = relunet::AdamState,
    TrainConfig32 = relunet::TrainConfig,
    TrainOutcome32 = relunet::TrainOutcome,
    SinusoidTarget32 = targets::SinusoidTarget,
    LabelledDataset32 = targets::LabelledDataset,
    SpectrumTrace32 = spectra::SpectrumTrace,
    RobustnessProfile32 = spectra::RobustnessProfile,
    LinearRegion1D32 = cpwl::LinearRegion1D,
    LipschitzReport32 = cpwl::LipschitzReport,
    Polytope2D32 = polytope::Polytope2D,
    FacePath32 = polytope::FacePath,
    KernelEigenbasis32 = kernelknn::KernelEigenbasis,
);
