use super::SampledFunction;
use serde::Serialize;

/// Model for the behaviour of an integrand beyond the sampled window.
#[derive(Debug, Clone, Serialize)]
pub enum TailModel {
    /// `|f(t)| ~ edge_value (edge_abscissa / t)^exponent`: slope from a
    /// log-log least-squares fit on `window`, amplitude anchored at the
    /// last usable sample; `residual` is the RMS misfit of log|f|. The
    /// anchored form stays representable for arbitrarily steep decay.
    PowerLaw {
        edge_abscissa: f64,
        edge_value: f64,
        exponent: f64,
        window: (f64, f64),
        residual: f64,
    },
    /// A caller-supplied analytic bound on the remaining integral from the
    /// window edge to infinity.
    AnalyticBound { integral_bound: f64 },
}

impl TailModel {
    /// Convergent-tail verdict: a fitted decay faster than 1/t, or any
    /// finite analytic bound.
    pub fn is_convergent(&self) -> bool {
        match self {
            TailModel::PowerLaw { exponent, .. } => *exponent > 1.0,
            TailModel::AnalyticBound { integral_bound } => integral_bound.is_finite(),
        }
    }

    /// Estimate of `int_T^inf f` for T at or beyond the anchor point.
    pub fn tail_from(&self, t_edge: f64) -> Option<f64> {
        match self {
            TailModel::PowerLaw {
                edge_abscissa,
                edge_value,
                exponent,
                ..
            } => {
                if !(*exponent > 1.0) {
                    return None;
                }
                if *edge_value == 0.0 || exponent.is_infinite() {
                    return Some(0.0);
                }
                // edge_value * edge^p * t^(1-p) / (p-1), evaluated through
                // the ratio (edge/t)^(p-1) <= 1 to avoid overflow.
                let ratio = (edge_abscissa / t_edge).powf(exponent - 1.0);
                Some(edge_value * edge_abscissa * ratio / (exponent - 1.0))
            }
            TailModel::AnalyticBound { integral_bound } => Some(*integral_bound),
        }
    }
}

/// Fit a power-law tail `c / t^p` to `|f|` over the last decade of the
/// sampled range. Samples below the round-off floor of the computation
/// (relative to the function's peak) carry no information and are treated
/// as zero; if the whole window sits under the floor the tail is zero.
pub fn fit_power_law_tail(f: &SampledFunction) -> TailModel {
    // eps^2-scale products bottom out near 1e-32 of the peak; anything
    // under this floor is numerical residue, not signal.
    const REL_FLOOR: f64 = 1e-28;
    let floor = (f.max_abs() * REL_FLOOR).max(1e-300);
    let (lo, hi) = f.range();
    let window_lo = (hi / 10.0).max(lo);
    let pts: Vec<(f64, f64)> = f
        .nodes()
        .iter()
        .zip(f.values())
        .filter(|(&t, &v)| t >= window_lo && t > 0.0 && v.abs() > floor)
        .map(|(&t, &v)| (t.ln(), v.abs().ln()))
        .collect();
    if pts.len() < 4 {
        // Nothing measurable in the window: tail already at round-off.
        return TailModel::PowerLaw {
            edge_abscissa: hi,
            edge_value: 0.0,
            exponent: f64::INFINITY,
            window: (window_lo, hi),
            residual: 0.0,
        };
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let residual = (pts
        .iter()
        .map(|&(x, y)| {
            let d = y - (intercept + slope * x);
            d * d
        })
        .sum::<f64>()
        / n)
        .sqrt();
    // Slope from the fit, amplitude anchored at the window edge so the
    // extrapolation is continuous with the last sample.
    let exponent = -slope;
    let edge = *pts.last().unwrap();
    TailModel::PowerLaw {
        edge_abscissa: edge.0.exp(),
        edge_value: edge.1.exp(),
        exponent,
        window: (window_lo, hi),
        residual,
    }
}

/// Classification of an improper integral over `[T, inf)` held as a finite
/// sampled part plus a modelled tail.
#[derive(Debug, Clone, Serialize)]
pub enum ImproperIntegral {
    Convergent {
        finite_part: f64,
        tail: f64,
        total: f64,
        /// Tail estimate inflated by the fit residual; the quadrature error
        /// of the finite part is negligible next to it.
        error_bound: f64,
    },
    Divergent {
        fitted_exponent: f64,
    },
}

impl ImproperIntegral {
    pub fn total(&self) -> Option<f64> {
        match self {
            ImproperIntegral::Convergent { total, .. } => Some(*total),
            ImproperIntegral::Divergent { .. } => None,
        }
    }
}

/// Finite-part quadrature of the sampled integrand plus the modelled tail.
///
/// A divergent model yields a classification, not an error.
pub fn tail_integral(f: &SampledFunction, model: &TailModel) -> ImproperIntegral {
    if !model.is_convergent() {
        let fitted_exponent = match model {
            TailModel::PowerLaw { exponent, .. } => *exponent,
            TailModel::AnalyticBound { .. } => f64::NAN,
        };
        return ImproperIntegral::Divergent { fitted_exponent };
    }
    let (_, hi) = f.range();
    let finite_part = f.integral();
    let tail = model.tail_from(hi).expect("convergent model");
    let error_bound = match model {
        TailModel::PowerLaw { residual, .. } => {
            // exp(residual) bounds the multiplicative misfit of the fit.
            tail.abs() * (residual.exp() - 1.0).max(0.0) + tail.abs() * 0.5
        }
        TailModel::AnalyticBound { .. } => tail.abs(),
    };
    ImproperIntegral::Convergent {
        finite_part,
        tail,
        total: finite_part + tail,
        error_bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Interpolation;

    fn sampled(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> SampledFunction {
        let nodes: Vec<f64> = (0..=n)
            .map(|i| lo + (hi - lo) * i as f64 / n as f64)
            .collect();
        let values = nodes.iter().map(|&t| f(t)).collect();
        SampledFunction::new(nodes, values, Interpolation::Cubic).unwrap()
    }

    #[test]
    fn inverse_square_tail() {
        // f = 1/(4 pi t^2) on [1, inf): exact integral 1/(4 pi).
        let w2 = 4.0 * std::f64::consts::PI;
        let f = sampled(|t| 1.0 / (w2 * t * t), 1.0, 200.0, 4000);
        let model = fit_power_law_tail(&f);
        match &model {
            TailModel::PowerLaw { exponent, .. } => {
                assert!((exponent - 2.0).abs() < 1e-3, "fitted p = {exponent}")
            }
            _ => unreachable!(),
        }
        match tail_integral(&f, &model) {
            ImproperIntegral::Convergent { total, .. } => {
                let exact = 1.0 / w2;
                assert!((total - exact).abs() < 1e-4 * exact);
            }
            other => panic!("expected convergent, got {other:?}"),
        }
    }

    #[test]
    fn harmonic_tail_is_divergent() {
        let f = sampled(|t| 1.0 / t, 1.0, 100.0, 1000);
        let model = fit_power_law_tail(&f);
        assert!(!model.is_convergent());
        assert!(matches!(
            tail_integral(&f, &model),
            ImproperIntegral::Divergent { .. }
        ));
    }

    #[test]
    fn brute_force_window_agreement() {
        // Admissible-profile surrogate r(t) ~ t: compare against a huge-T
        // brute-force quadrature.
        let w2 = 4.0 * std::f64::consts::PI;
        let r = |t: f64| t - 0.3 * (1.0 - (-t).exp());
        let f = sampled(|t| 1.0 / (w2 * r(t) * r(t)), 1.0, 500.0, 8000);
        let model = fit_power_law_tail(&f);
        let total = tail_integral(&f, &model).total().unwrap();
        let brute = crate::numerics::integrate(
            |t| 1.0 / (w2 * r(t) * r(t)),
            1.0,
            1.0e6,
            1e-12,
        )
        .unwrap()
        .value;
        assert!(
            (total - brute).abs() < 1e-6,
            "window {total} vs brute {brute}"
        );
    }
}
