//! Spectral geometry of rotationally symmetric quantum layers in `R^4`.
//!
//! A layer of half-width `a` is built around a hypersurface of revolution
//! whose meridian is reconstructed from a prescribed curvature profile
//! `k_s(s)`. The crate validates the geometric admissibility of the layer,
//! computes its curvature invariants and volume-growth/parabolicity
//! diagnostics, evaluates a variational certificate for a ground state of
//! the Dirichlet Laplacian below the essential-spectrum threshold
//! `(pi/2a)^2`, and cross-checks the certificate against a direct
//! finite-difference eigensolver on the truncated meridian strip.





pub mod certifier;
pub mod invariants;
pub mod layer;
pub mod meridian;
pub mod numerics;
pub(crate) mod par;

/// 2-volume of the unit sphere in `R^3`.
pub const W2: f64 = 4.0 * std::f64::consts::PI;

/// Volume of the unit ball in `R^3`.
pub const V3_UNIT: f64 = 4.0 * std::f64::consts::PI / 3.0;

/// Lowest transverse Dirichlet mode of a straight slab of half-width `a`;
/// eigenvalues below it belong to the discrete spectrum.
pub fn transverse_threshold(a: f64) -> f64 {
    let k1 = std::f64::consts::FRAC_PI_2 / a;
    k1 * k1
}
