use super::NumericsError;

/// Interpolation rule attached to a [`SampledFunction`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    Linear,
    Cubic,
}

/// A real function held as values on a strictly increasing grid.
///
/// Evaluation is restricted to the node range; the cubic variant is a
/// natural cubic spline with precomputed second derivatives.
#[derive(Debug, Clone)]
pub struct SampledFunction {
    nodes: Vec<f64>,
    values: Vec<f64>,
    interp: Interpolation,
    /// Second derivatives at the nodes (natural spline); empty for linear.
    second: Vec<f64>,
    /// Grid step when the nodes are uniform, for O(1) segment lookup.
    uniform_step: Option<f64>,
}

impl SampledFunction {
    pub fn new(
        nodes: Vec<f64>,
        values: Vec<f64>,
        interp: Interpolation,
    ) -> Result<Self, NumericsError> {
        if nodes.len() < 2 || nodes.len() != values.len() {
            return Err(NumericsError::InvalidGrid(format!(
                "need >= 2 nodes and matching values, got {} nodes / {} values",
                nodes.len(),
                values.len()
            )));
        }
        for w in nodes.windows(2) {
            if !(w[1] > w[0]) {
                return Err(NumericsError::InvalidGrid(format!(
                    "nodes not strictly increasing near {}",
                    w[0]
                )));
            }
        }
        if nodes.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(NumericsError::InvalidGrid(
                "non-finite node or value".into(),
            ));
        }
        let uniform_step = uniform_step(&nodes);
        let second = match interp {
            Interpolation::Linear => Vec::new(),
            Interpolation::Cubic => natural_spline_second_derivs(&nodes, &values),
        };
        Ok(Self {
            nodes,
            values,
            interp,
            second,
            uniform_step,
        })
    }

    /// Values on a uniform grid starting at `start` with spacing `step`.
    pub fn from_uniform(
        start: f64,
        step: f64,
        values: Vec<f64>,
        interp: Interpolation,
    ) -> Result<Self, NumericsError> {
        if !(step > 0.0) {
            return Err(NumericsError::InvalidGrid(format!("step {step} <= 0")));
        }
        let nodes = (0..values.len()).map(|i| start + i as f64 * step).collect();
        Self::new(nodes, values, interp)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interp
    }

    pub fn range(&self) -> (f64, f64) {
        (self.nodes[0], *self.nodes.last().unwrap())
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.nodes.len();
        if let Some(h) = self.uniform_step {
            let k = ((x - self.nodes[0]) / h).floor() as isize;
            return k.clamp(0, n as isize - 2) as usize;
        }
        match self
            .nodes
            .binary_search_by(|v| v.partial_cmp(&x).unwrap())
        {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64, NumericsError> {
        let (lo, hi) = self.range();
        // Tolerate round-off at the endpoints, nothing more.
        let slack = 1e-12 * (1.0 + hi.abs().max(lo.abs()));
        if x < lo - slack || x > hi + slack {
            return Err(NumericsError::OutOfRange { x, lo, hi });
        }
        let x = x.clamp(lo, hi);
        let i = self.segment(x);
        let (x0, x1) = (self.nodes[i], self.nodes[i + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        match self.interp {
            Interpolation::Linear => Ok(self.values[i] * (1.0 - t) + self.values[i + 1] * t),
            Interpolation::Cubic => {
                let (a, b) = (1.0 - t, t);
                let (y0, y1) = (self.values[i], self.values[i + 1]);
                let (m0, m1) = (self.second[i], self.second[i + 1]);
                Ok(a * y0
                    + b * y1
                    + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0)
            }
        }
    }

    /// Integral of the interpolant over the full node range.
    pub fn integral(&self) -> f64 {
        let (lo, hi) = self.range();
        self.integral_range(lo, hi)
    }

    /// Integral of the interpolant over `[lo, hi]` (clamped to the range).
    pub fn integral_range(&self, lo: f64, hi: f64) -> f64 {
        let (rlo, rhi) = self.range();
        let lo = lo.clamp(rlo, rhi);
        let hi = hi.clamp(rlo, rhi);
        if hi <= lo {
            return 0.0;
        }
        let (i0, i1) = (self.segment(lo), self.segment(hi));
        let mut acc = 0.0;
        for i in i0..=i1 {
            let a = lo.max(self.nodes[i]);
            let b = hi.min(self.nodes[i + 1]);
            if b > a {
                acc += self.segment_integral(i, a, b);
            }
        }
        acc
    }

    fn segment_integral(&self, i: usize, a: f64, b: f64) -> f64 {
        let (x0, x1) = (self.nodes[i], self.nodes[i + 1]);
        let h = x1 - x0;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        match self.interp {
            Interpolation::Linear => {
                let ya = y0 + (y1 - y0) * (a - x0) / h;
                let yb = y0 + (y1 - y0) * (b - x0) / h;
                0.5 * (ya + yb) * (b - a)
            }
            Interpolation::Cubic => {
                let (m0, m1) = (self.second[i], self.second[i + 1]);
                // Antiderivative of the spline segment in t = (x-x0)/h.
                let prim = |x: f64| {
                    let t = (x - x0) / h;
                    let u = 1.0 - t;
                    h * (-y0 * u * u / 2.0 + y1 * t * t / 2.0
                        + (h * h / 6.0)
                            * (-m0 * (u.powi(4) / 4.0 - u * u / 2.0)
                                + m1 * (t.powi(4) / 4.0 - t * t / 2.0)))
                };
                prim(b) - prim(a)
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn uniform_step(nodes: &[f64]) -> Option<f64> {
    let h = nodes[1] - nodes[0];
    let tol = 1e-9 * h.abs();
    nodes
        .windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= tol)
        .then_some(h)
}

/// Cubic spline second derivatives with not-a-knot end conditions
/// (Thomas algorithm on the interior rows, end rows folded in).
fn natural_spline_second_derivs(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    let mut diag = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut lower = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        lower[i] = h0;
        diag[i] = 2.0 * (h0 + h1);
        upper[i] = h1;
        rhs[i] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
    }
    if n >= 4 {
        // Fold m0 = (1 + h0/h1) m1 - (h0/h1) m2 into row 1, and the
        // mirrored relation into row n-2.
        let h0 = x[1] - x[0];
        let h1 = x[2] - x[1];
        diag[1] += h0 * (1.0 + h0 / h1);
        upper[1] -= h0 * h0 / h1;
        let hm = x[n - 1] - x[n - 2];
        let hp = x[n - 2] - x[n - 3];
        diag[n - 2] += hm * (1.0 + hm / hp);
        lower[n - 2] -= hm * hm / hp;
    }
    for i in 2..n - 1 {
        let w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    for i in (1..n - 1).rev() {
        m[i] = (rhs[i] - upper[i] * m[i + 1]) / diag[i];
    }
    if n >= 4 {
        let h0 = x[1] - x[0];
        let h1 = x[2] - x[1];
        m[0] = (1.0 + h0 / h1) * m[1] - (h0 / h1) * m[2];
        let hm = x[n - 1] - x[n - 2];
        let hp = x[n - 2] - x[n - 3];
        m[n - 1] = (1.0 + hm / hp) * m[n - 2] - (hm / hp) * m[n - 3];
    }
    m
}
