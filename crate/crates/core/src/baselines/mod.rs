//! Linear comparison methods.

mod cca;
mod classifier;
mod rrr;
mod saturation;

pub use cca::{canonical_correlations, fit_linear_cca, Cca, CCA_RIDGE_EPS};
pub use classifier::{fit_linear_classifier, ClassifierConfig, LinearClassifier};
pub use rrr::{fit_rrr, RrrFit, RrrModel, RIDGE_EPS};
pub use saturation::{rrr_curve, saturation_dim, SaturationCurve, SATURATION_FRACTION};
