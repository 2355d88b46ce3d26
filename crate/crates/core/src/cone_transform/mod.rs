//! The logarithmic Laplace transform of a polyhedral cone and the quantities
//! built on it.

pub mod constants;
pub mod convolution;
pub mod floating;
pub mod laplace;
pub mod legendre;
pub mod mahler;
pub mod section;

pub use constants::{kappa_conv, kappa_float, kappa_mahler, ln_kappa_iso, simplex_mahler};
pub use convolution::{convolution_upper_check, self_convolution, ConvolutionSandwich};
pub use floating::{cap_volume, floating_contains, floating_oracle, FloatingOracle};
pub use laplace::{laplace_eval, laplace_eval3, laplace_value, LaplaceEval};
pub use legendre::{legendre, legendre_from, legendre_full, LegendreFull, LegendreResult};
pub use mahler::{
    j_functional, j_gradient, mahler_at, mahler_santalo, product_identity_check,
    projective_stationarity, santalo_direct, santalo_via_cone, theorem11_gap, tilde_polarity_check,
    Classification, JValue, ProductIdentity, SantaloResult, Stationarity, TildePolarity,
    NEWTON_TOL, SANTALO_DIAGNOSTIC,
};
pub use section::{section, section_moments, SectionBody, SectionMoments};
