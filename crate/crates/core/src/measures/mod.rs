//! Measures on the unit interval: grid-supported measures, smooth cutoff
//! functions, boundary mollification, and the spectral-gap construction.

pub mod cutoff;
pub mod grid;
pub mod mollify;
pub mod spectral;

pub use cutoff::{BumpCdf, FourierBumpTable, SmoothBump, SmoothCutoff, WeightBump};
pub use grid::{frostman_ratio, sinc, GridMeasure, MeasureSpectrum, C64};
pub use mollify::{mollify, Mollified};
pub use spectral::{
    density_defect, epsilon_exponent, spectral_gap_measure, weight_fit_constant,
    SpectralDiagnostics, SpectralGapParams, SpectralOutcome,
};
