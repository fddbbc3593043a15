//! Frequencies, the shifted-symmetric-difference density series and a
//! heuristic diffraction proxy.

mod density;
mod diffraction;
mod frequency;
mod window;

pub use density::{
    default_alphas, density_symdiff_series, max_shift_level, rate_fit, window_scale_for,
    DensitySeries, RateFit, NON_VANISHING_FLOOR,
};
pub use diffraction::{diffraction_estimate, DiffractionConfig, DiffractionEstimate, Peak};
pub use frequency::{
    cluster_frequency, random_translates, supertile_frequency, FrequencyEstimate, ScaleEstimate,
};
pub use window::{ColorField, VanHoveSequence, Window};
