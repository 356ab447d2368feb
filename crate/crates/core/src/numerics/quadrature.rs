use super::NumericsError;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

// 15-point Gauss-Legendre rule on [-1, 1]; exact through degree 29.
// Positive abscissae and weights; the rule is symmetric.
const GL15_X: [f64; 8] = [
    0.0,
    0.201194093997434522300628303394596,
    0.394151347077563369897207370981045,
    0.570972172608538847537226737253911,
    0.724417731360170047416186054613938,
    0.848206583410427216200648320774217,
    0.937273392400705904307758947710209,
    0.987992518020485428489565718586613,
];
const GL15_W: [f64; 8] = [
    0.202578241925561272880620199967519,
    0.198431485327111576456118326443839,
    0.186161000015562211026800561866423,
    0.166269205816993933553200860481209,
    0.139570677926154314447804794511028,
    0.107159220467171935011869546685869,
    0.070366047488108124709267416450667,
    0.030753241996117268354628393577204,
];

/// One 15-point Gauss-Legendre panel.
fn gl15<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> f64 {
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut acc = GL15_W[0] * f(mid);
    for k in 1..8 {
        let dx = half * GL15_X[k];
        acc += GL15_W[k] * (f(mid + dx) + f(mid - dx));
    }
    acc * half
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub rel_tol: f64,
    /// Absolute floor added to the relative target, for integrals near zero.
    pub abs_floor: f64,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_floor: 1e-14,
            max_panels: 20_000,
        }
    }
}

/// Converged quadrature value with its error estimate.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    pub error_bound: f64,
    pub panels: usize,
}

struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(Ordering::Equal)
    }
}

fn make_panel<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Panel {
    let whole = gl15(f, lo, hi);
    let mid = 0.5 * (lo + hi);
    let refined = gl15(f, lo, mid) + gl15(f, mid, hi);
    Panel {
        lo,
        hi,
        value: refined,
        error: (refined - whole).abs(),
    }
}

/// Adaptive composite Gauss-Legendre integration of `f` over `[lo, hi]`.
///
/// Bisects the worst panel until the summed panel error estimate drops
/// below `rel_tol * |value| + abs_floor`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    rel_tol: f64,
) -> Result<Quadrature, NumericsError> {
    integrate_with(
        f,
        lo,
        hi,
        QuadOptions {
            rel_tol,
            ..QuadOptions::default()
        },
    )
}

pub fn integrate_with<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    opts: QuadOptions,
) -> Result<Quadrature, NumericsError> {
    if !(lo < hi) {
        return Err(NumericsError::Domain(format!(
            "integration interval [{lo}, {hi}] is empty"
        )));
    }
    if !(opts.rel_tol > 0.0) {
        return Err(NumericsError::Domain("tolerance must be positive".into()));
    }
    let mut heap = BinaryHeap::new();
    let first = make_panel(&f, lo, hi);
    if !first.value.is_finite() {
        return Err(NumericsError::Domain(format!(
            "integrand not finite on [{lo}, {hi}]"
        )));
    }
    let mut total = first.value;
    let mut total_err = first.error;
    heap.push(first);
    while total_err > opts.rel_tol * total.abs() + opts.abs_floor {
        if heap.len() >= opts.max_panels {
            return Err(NumericsError::NonConvergence {
                best: total,
                error_bound: total_err,
            });
        }
        let worst = heap.pop().expect("heap non-empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // Interval exhausted at machine precision; accept what we have.
            total_err -= worst.error;
            heap.push(Panel { error: 0.0, ..worst });
            continue;
        }
        let left = make_panel(&f, worst.lo, mid);
        let right = make_panel(&f, mid, worst.hi);
        if !(left.value.is_finite() && right.value.is_finite()) {
            return Err(NumericsError::Domain(format!(
                "integrand not finite inside [{}, {}]",
                worst.lo, worst.hi
            )));
        }
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    Ok(Quadrature {
        value: total,
        error_bound: total_err,
        panels: heap.len(),
    })
}
