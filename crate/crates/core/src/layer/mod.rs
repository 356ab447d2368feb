//! The quantum layer built over the hypersurface: metric weights, the
//! uniform metric bounds C-, C+, and validation of the admissibility
//! assumptions (injectivity, half-width margin, asymptotic flatness).

pub mod intersect;

use crate::meridian::{
    asymptotic_flatness, rho_m, CurvaturePair, FlatnessReport, MeridianCurve, Verdict,
};
use intersect::{Point, Segment};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LayerError {
    #[error("half-width must be positive, got {0}")]
    InvalidHalfWidth(f64),
    #[error("layer dimension must be >= 3, got {0}")]
    InvalidDimension(u32),
    #[error("half-width {a} violates admissibility: requires a < rho_m = {rho_m}")]
    HalfWidthTooLarge { a: f64, rho_m: f64 },
    #[error("volume weight not positive at (s, u) = ({s}, {u})")]
    NonPositiveWeight { s: f64, u: f64 },
    #[error("(s, u) = ({s}, {u}) outside the open layer")]
    OutsideLayer { s: f64, u: f64 },
}

/// A meridian curve together with the layer half-width `a` and the ambient
/// dimension `m` (the hypersurface has dimension m-1, default m = 4).
#[derive(Debug, Clone)]
pub struct LayerSpec {
    pub curve: MeridianCurve,
    pub pair: CurvaturePair,
    pub half_width: f64,
    pub dimension: u32,
    /// Cached radius interpolant; evaluators on the hot path must not
    /// rebuild the spline.
    radius: crate::numerics::SampledFunction,
}

impl LayerSpec {
    /// Construction checks only structural sanity; admissibility of the
    /// half-width is reported by [`validate`] so that inadmissible layers
    /// can still be examined.
    pub fn new(
        curve: MeridianCurve,
        pair: CurvaturePair,
        half_width: f64,
        dimension: u32,
    ) -> Result<Self, LayerError> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(LayerError::InvalidHalfWidth(half_width));
        }
        if dimension < 3 {
            return Err(LayerError::InvalidDimension(dimension));
        }
        let radius = curve.radius();
        Ok(Self {
            curve,
            pair,
            half_width,
            dimension,
            radius,
        })
    }

    pub fn radius_fn(&self) -> &crate::numerics::SampledFunction {
        &self.radius
    }

    pub fn rho_m(&self) -> f64 {
        rho_m(&self.pair)
    }

    /// Hard check for operations that require the half-width margin.
    pub fn require_half_width_margin(&self) -> Result<(), LayerError> {
        let rho = self.rho_m();
        if self.half_width < rho {
            Ok(())
        } else {
            Err(LayerError::HalfWidthTooLarge {
                a: self.half_width,
                rho_m: rho,
            })
        }
    }

    /// Volume weight w(s, u) = (1 - u k_s)(1 - u k_theta)^{m-2} r^{m-2}.
    pub fn volume_weight(&self, s: f64, u: f64) -> Result<f64, LayerError> {
        let (lo, hi) = self.pair.k_s.range();
        if s < lo || s > hi || u.abs() > self.half_width {
            return Err(LayerError::OutsideLayer { s, u });
        }
        let ks = self.pair.k_s.eval(s).expect("range checked");
        let kt = self.pair.k_theta.eval(s).expect("range checked");
        let r = self.radius.eval(s).expect("range checked");
        let w = weingarten_det(ks, kt, u, self.dimension)
            * r.powi(self.dimension as i32 - 2);
        if s > 0.0 && !(w > 0.0) {
            return Err(LayerError::NonPositiveWeight { s, u });
        }
        Ok(w)
    }
}

/// det(1 - uA) = (1 - u k_s)(1 - u k_theta)^{m-2}.
pub fn weingarten_det(k_s: f64, k_theta: f64, u: f64, m: u32) -> f64 {
    (1.0 - u * k_s) * (1.0 - u * k_theta).powi(m as i32 - 2)
}

/// Uniform bounds C+- = (1 +- a/rho_m)^2 squeezing the layer metric
/// against the product metric; requires the half-width margin.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MetricBounds {
    pub lower: f64,
    pub upper: f64,
}

pub fn metric_bounds(layer: &LayerSpec) -> Result<MetricBounds, LayerError> {
    layer.require_half_width_margin()?;
    let ratio = layer.half_width / layer.rho_m(); // 0 for the flat layer
    let lower = (1.0 - ratio).powi(2);
    let upper = (1.0 + ratio).powi(2);
    Ok(MetricBounds { lower, upper })
}

#[derive(Debug, Clone, Serialize)]
pub struct IntersectionReport {
    pub verdict: Verdict,
    /// Crossing point in the (radial, height) half-plane, on failure.
    pub witness: Option<Point>,
    /// Minimum radial coordinate of the offset boundaries; injectivity
    /// needs it positive.
    pub axis_clearance: f64,
    /// Number of sample nodes per offset boundary; the certificate is
    /// valid at this resolution only.
    pub resolution: usize,
}

/// Build the offset boundary polylines u = +-a in the meridian half-plane:
/// (s, u) -> (r - u z', z + u r').
pub fn offset_polylines(layer: &LayerSpec, resolution: usize) -> (Vec<Point>, Vec<Point>) {
    let n = layer.curve.n_nodes();
    let take_every = (n / resolution.max(2)).max(1);
    let a = layer.half_width;
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    let r = layer.curve.r_values();
    let z = layer.curve.z_values();
    let rp = layer.curve.r_prime_values();
    let zp = layer.curve.z_prime_values();
    let mut idx: Vec<usize> = (0..n).step_by(take_every).collect();
    if *idx.last().unwrap() != n - 1 {
        idx.push(n - 1);
    }
    for &i in &idx {
        upper.push((r[i] - a * zp[i], z[i] + a * rp[i]));
        lower.push((r[i] + a * zp[i], z[i] - a * rp[i]));
    }
    (upper, lower)
}

/// Injectivity certificate for the layer map at finite resolution.
///
/// By rotational symmetry the layer map is injective iff the planar offset
/// map (s, u) -> (r - u z', z + u r') is injective with positive first
/// coordinate. Its Jacobian is 1 - u k_s > 0 under the half-width margin,
/// so it suffices that the strip boundary (both offsets plus the end
/// fibres) is a simple curve: local injectivity plus a simple boundary
/// image gives global injectivity on the simply connected strip.
pub fn self_intersection_certificate(layer: &LayerSpec, resolution: usize) -> IntersectionReport {
    let min_resolution = 16;
    if resolution < min_resolution || layer.curve.n_nodes() < min_resolution {
        return IntersectionReport {
            verdict: Verdict::Inconclusive,
            witness: None,
            axis_clearance: f64::NAN,
            resolution,
        };
    }
    let (upper, lower) = offset_polylines(layer, resolution);
    // The pole fibre sits on the axis with radial coordinate exactly 0;
    // only an interior excursion to r - u z' <= 0 wraps the map around
    // the axis, so the clearance scan skips the s = 0 head of each chain.
    let interior_clearance = upper[1..]
        .iter()
        .chain(lower[1..].iter())
        .map(|p| p.0)
        .fold(f64::INFINITY, f64::min);
    if interior_clearance <= 0.0 {
        let witness = upper[1..]
            .iter()
            .chain(lower[1..].iter())
            .find(|p| p.0 <= 0.0)
            .copied();
        return IntersectionReport {
            verdict: Verdict::Fail,
            witness,
            axis_clearance: interior_clearance,
            resolution,
        };
    }
    let mut segments = Vec::new();
    let push_chain = |pts: &[Point], chain: usize, segments: &mut Vec<Segment>| {
        for (i, w) in pts.windows(2).enumerate() {
            segments.push(Segment {
                a: w[0],
                b: w[1],
                chain,
                index: i,
            });
        }
    };
    push_chain(&upper, 0, &mut segments);
    push_chain(&lower, 1, &mut segments);
    // End fibres: the pole fibre joins the two chain heads through the
    // axis; the truncation fibre joins the tails.
    segments.push(Segment {
        a: *upper.first().unwrap(),
        b: *lower.first().unwrap(),
        chain: 2,
        index: 0,
    });
    segments.push(Segment {
        a: *upper.last().unwrap(),
        b: *lower.last().unwrap(),
        chain: 3,
        index: 0,
    });
    // Chain endpoints legitimately meet the end fibres; shrink the fibres
    // by a hair so shared endpoints do not read as crossings.
    let shrink = |s: &mut Segment| {
        let (dx, dy) = (s.b.0 - s.a.0, s.b.1 - s.a.1);
        s.a = (s.a.0 + 1e-9 * dx, s.a.1 + 1e-9 * dy);
        s.b = (s.b.0 - 1e-9 * dx, s.b.1 - 1e-9 * dy);
    };
    let n_seg = segments.len();
    shrink(&mut segments[n_seg - 1]);
    shrink(&mut segments[n_seg - 2]);

    match intersect::find_crossing(&segments) {
        Some((p, _, _)) => IntersectionReport {
            verdict: Verdict::Fail,
            witness: Some(p),
            axis_clearance: interior_clearance,
            resolution,
        },
        None => IntersectionReport {
            verdict: Verdict::Pass,
            witness: None,
            axis_clearance: interior_clearance,
            resolution,
        },
    }
}

/// Aggregate admissibility report: A1 injectivity, A2 half-width margin,
/// A3 asymptotic flatness.
#[derive(Debug, Clone, Serialize)]
pub struct AdmissibilityReport {
    pub a1: IntersectionReport,
    pub a2_pass: bool,
    pub rho_m: f64,
    pub half_width: f64,
    pub a3: FlatnessReport,
    pub metric: Option<MetricBounds>,
    pub admissible: bool,
}

/// Default knobs for [`validate`].
#[derive(Debug, Clone, Copy)]
pub struct ValidateOptions {
    pub intersection_resolution: usize,
    pub flatness_tol: f64,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            intersection_resolution: 2000,
            flatness_tol: 1e-3,
        }
    }
}

pub fn validate(layer: &LayerSpec, opts: ValidateOptions) -> AdmissibilityReport {
    let a1 = self_intersection_certificate(layer, opts.intersection_resolution);
    let rho = layer.rho_m();
    // Strict inequality: a = rho_m already fails.
    let a2_pass = layer.half_width < rho;
    let s_max = layer.curve.s_max();
    let a3 = asymptotic_flatness(&layer.pair, (s_max / 2.0, s_max), opts.flatness_tol);
    let metric = metric_bounds(layer).ok();
    let admissible = a1.verdict == Verdict::Pass && a2_pass && a3.verdict == Verdict::Pass;
    AdmissibilityReport {
        a1,
        a2_pass,
        rho_m: rho,
        half_width: layer.half_width,
        a3,
        metric,
        admissible,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meridian::{build_meridian, principal_curvatures, CurvatureProfile};
    use crate::numerics::{integrate, Interpolation, SampledFunction};
    use approx::assert_abs_diff_eq;

    fn bump_layer(beta: f64, width: f64, a_factor: f64, s_max: f64, h: f64) -> LayerSpec {
        let profile = CurvatureProfile::gaussian_bump(beta, width).unwrap();
        let curve = build_meridian(&profile, s_max, h).unwrap();
        let pair = principal_curvatures(&curve, &profile).unwrap();
        let a = a_factor * rho_m(&pair);
        LayerSpec::new(curve, pair, a, 4).unwrap()
    }

    fn flat_layer(a: f64, s_max: f64) -> LayerSpec {
        let curve = build_meridian(&CurvatureProfile::Flat, s_max, 0.02).unwrap();
        let pair = principal_curvatures(&curve, &CurvatureProfile::Flat).unwrap();
        LayerSpec::new(curve, pair, a, 4).unwrap()
    }

    #[test]
    fn weingarten_det_values() {
        assert_eq!(weingarten_det(0.5, 0.2, 0.0, 4), 1.0);
        assert_abs_diff_eq!(
            weingarten_det(0.5, 0.2, 0.5, 4),
            0.75 * 0.81,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(weingarten_det(0.5, 0.2, 2.0, 4), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn metric_bounds_values() {
        // a = 0.5, rho_m = 2 -> (0.5625, 1.5625).
        let nodes: Vec<f64> = (0..=100).map(|i| i as f64 * 0.1).collect();
        let ks: Vec<f64> = nodes.iter().map(|&s| 0.5 * (-(s * s)).exp()).collect();
        let kt: Vec<f64> = nodes.iter().map(|&s| 0.2 * (-(s * s)).exp()).collect();
        let pair = CurvaturePair {
            k_s: SampledFunction::new(nodes.clone(), ks, Interpolation::Cubic).unwrap(),
            k_theta: SampledFunction::new(nodes, kt, Interpolation::Cubic).unwrap(),
            sup_k_s: 0.5,
            sup_k_theta: 0.2,
        };
        let curve = build_meridian(&CurvatureProfile::Flat, 10.0, 0.1).unwrap();
        let layer = LayerSpec::new(curve, pair, 0.5, 4).unwrap();
        let b = metric_bounds(&layer).unwrap();
        assert_abs_diff_eq!(b.lower, 0.5625, epsilon = 1e-14);
        assert_abs_diff_eq!(b.upper, 1.5625, epsilon = 1e-14);

        // a -> 0 gives (1, 1).
        let flat = flat_layer(1.0, 10.0);
        let b = metric_bounds(&flat).unwrap();
        assert_eq!((b.lower, b.upper), (1.0, 1.0));
    }

    #[test]
    fn flat_volume_weight_is_s_squared() {
        let layer = flat_layer(1.0, 10.0);
        for &s in &[0.5, 1.0, 3.0, 7.5] {
            assert_abs_diff_eq!(
                layer.volume_weight(s, 0.3).unwrap(),
                s * s,
                epsilon = 1e-10 * s * s
            );
        }
    }

    #[test]
    fn weight_patch_integral_matches_fine_quadrature() {
        let layer = bump_layer(0.5, 1.0, 0.4, 20.0, 0.01);
        let a = layer.half_width;
        // int_{1}^{2} int_{-a/2}^{a/2} w ds du via nested adaptive
        // quadrature against a brute-force fine midpoint grid.
        let inner = |u: f64| {
            integrate(|s| layer.volume_weight(s, u).unwrap(), 1.0, 2.0, 1e-11)
                .unwrap()
                .value
        };
        let patch = integrate(inner, -a / 2.0, a / 2.0, 1e-10).unwrap().value;
        let (nu, ns) = (2000, 2000);
        let (du, ds) = (a / nu as f64, 1.0 / ns as f64);
        let mut brute = 0.0;
        for i in 0..nu {
            let u = -a / 2.0 + (i as f64 + 0.5) * du;
            for j in 0..ns {
                let s = 1.0 + (j as f64 + 0.5) * ds;
                brute += layer.volume_weight(s, u).unwrap() * du * ds;
            }
        }
        assert!(
            (patch - brute).abs() < 1e-8 * patch.abs().max(1.0),
            "patch {patch} vs brute {brute}"
        );
    }

    #[test]
    fn weight_u_symmetry_only_when_flat() {
        let layer = bump_layer(0.5, 1.0, 0.4, 10.0, 0.01);
        let (s, u) = (0.7, 0.3 * layer.half_width);
        let w_plus = layer.volume_weight(s, u).unwrap();
        let w_minus = layer.volume_weight(s, -u).unwrap();
        assert!((w_plus - w_minus).abs() > 1e-6);
        let flat = flat_layer(1.0, 10.0);
        assert_abs_diff_eq!(
            flat.volume_weight(s, u).unwrap(),
            flat.volume_weight(s, -u).unwrap(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn flat_layer_passes_validation() {
        let layer = flat_layer(1.0, 50.0);
        let report = validate(&layer, ValidateOptions::default());
        assert!(report.admissible, "{report:?}");
        assert_eq!(report.a1.verdict, Verdict::Pass);
    }

    #[test]
    fn half_width_at_rho_m_fails_a2() {
        let profile = CurvatureProfile::gaussian_bump(0.5, 1.0).unwrap();
        let curve = build_meridian(&profile, 30.0, 0.01).unwrap();
        let pair = principal_curvatures(&curve, &profile).unwrap();
        let rho = rho_m(&pair);
        let layer = LayerSpec::new(curve, pair, rho, 4).unwrap();
        let report = validate(&layer, ValidateOptions::default());
        assert!(!report.a2_pass);
        assert!(!report.admissible);
        assert!(layer.require_half_width_margin().is_err());
    }

    #[test]
    fn admissible_bump_pipeline() {
        let layer = bump_layer(0.3, 1.0, 0.4, 60.0, 0.01);
        let report = validate(&layer, ValidateOptions::default());
        assert!(report.admissible, "{report:?}");
        let b = report.metric.unwrap();
        assert!(b.lower > 0.0 && b.lower <= 1.0 && b.upper >= 1.0 && b.upper < 4.0);
    }

    /// Z-folded profile: two opposed curvature bursts at s ~ 4.5 and 6.5
    /// drive the turning angle past pi and back, keeping r > 0. The fold
    /// radius is ~ 1/4.7, so offsets wider than that must cross.
    fn hairpin_layer(a: f64) -> LayerSpec {
        let nodes: Vec<f64> = (0..=2600).map(|i| i as f64 * 0.005).collect();
        let values: Vec<f64> = nodes
            .iter()
            .map(|&s| {
                4.655 * (-((s - 4.5) / 0.4).powi(2)).exp()
                    - 4.372 * (-((s - 6.5) / 0.4).powi(2)).exp()
            })
            .collect();
        let profile = CurvatureProfile::Table(
            SampledFunction::new(nodes, values, Interpolation::Cubic).unwrap(),
        );
        let curve = build_meridian(&profile, 12.0, 0.005).unwrap();
        let pair = principal_curvatures(&curve, &profile).unwrap();
        LayerSpec::new(curve, pair, a, 4).unwrap()
    }

    #[test]
    fn folded_curve_wide_layer_fails_then_thin_passes() {
        let wide = hairpin_layer(0.45);
        // Turning angle really does cross pi somewhere.
        assert!(wide
            .curve
            .turning_angle_values()
            .iter()
            .any(|&b| b > std::f64::consts::PI));
        let rep = self_intersection_certificate(&wide, 2000);
        assert_eq!(rep.verdict, Verdict::Fail, "{rep:?}");
        assert!(rep.witness.is_some());

        // Brute-force all-pairs oracle over the same offset polylines.
        let (upper, lower) = offset_polylines(&wide, 2000);
        let mut segs = Vec::new();
        for (chain, pts) in [(0usize, &upper), (1, &lower)] {
            for (i, w) in pts.windows(2).enumerate() {
                segs.push(Segment {
                    a: w[0],
                    b: w[1],
                    chain,
                    index: i,
                });
            }
        }
        let mut brute_hit = false;
        'outer: for i in 0..segs.len() {
            for j in i + 1..segs.len() {
                let (s, t) = (&segs[i], &segs[j]);
                if s.chain == t.chain && s.index.abs_diff(t.index) <= 1 {
                    continue;
                }
                if intersect::segments_intersect(s, t).is_some() {
                    brute_hit = true;
                    break 'outer;
                }
            }
        }
        assert!(brute_hit, "oracle disagrees with the certificate");

        let thin = hairpin_layer(0.02);
        let rep = self_intersection_certificate(&thin, 2000);
        assert_eq!(rep.verdict, Verdict::Pass, "{rep:?}");
    }

    #[test]
    fn coarse_resolution_is_inconclusive() {
        let layer = flat_layer(1.0, 20.0);
        let rep = self_intersection_certificate(&layer, 4);
        assert_eq!(rep.verdict, Verdict::Inconclusive);
    }
}
