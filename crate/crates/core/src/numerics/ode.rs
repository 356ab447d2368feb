use super::{Interpolation, NumericsError, SampledFunction};

/// Solution of an initial value problem sampled on the output grid.
#[derive(Debug, Clone)]
pub struct IvpSolution {
    grid: Vec<f64>,
    /// `components[c][i]` is component `c` at `grid[i]`.
    components: Vec<Vec<f64>>,
}

impl IvpSolution {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn component_values(&self, c: usize) -> &[f64] {
        &self.components[c]
    }

    pub fn component(&self, c: usize) -> Result<SampledFunction, NumericsError> {
        SampledFunction::new(
            self.grid.clone(),
            self.components[c].clone(),
            Interpolation::Cubic,
        )
    }
}

/// Classic fixed-step RK4 for `y' = rhs(t, y)`, sampled on `grid`.
///
/// Each grid interval is covered by `substeps` equal RK4 steps, so halving
/// the effective step reduces the global error by ~16x. State blow-up
/// (NaN/inf) aborts with the last valid node.
pub fn solve_ivp<F>(
    rhs: F,
    y0: &[f64],
    grid: &[f64],
    substeps: usize,
) -> Result<IvpSolution, NumericsError>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    if grid.len() < 2 {
        return Err(NumericsError::InvalidGrid("need at least 2 nodes".into()));
    }
    for w in grid.windows(2) {
        if !(w[1] > w[0]) {
            return Err(NumericsError::InvalidGrid(
                "output grid not strictly increasing".into(),
            ));
        }
    }
    let substeps = substeps.max(1);
    let dim = y0.len();
    let mut components = vec![Vec::with_capacity(grid.len()); dim];
    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];

    let record = |components: &mut Vec<Vec<f64>>, y: &[f64]| {
        for (c, comp) in components.iter_mut().enumerate() {
            comp.push(y[c]);
        }
    };
    record(&mut components, &y);

    for i in 0..grid.len() - 1 {
        let h = (grid[i + 1] - grid[i]) / substeps as f64;
        for k in 0..substeps {
            let t = grid[i] + k as f64 * h;
            rhs(t, &y, &mut k1);
            for c in 0..dim {
                tmp[c] = y[c] + 0.5 * h * k1[c];
            }
            rhs(t + 0.5 * h, &tmp, &mut k2);
            for c in 0..dim {
                tmp[c] = y[c] + 0.5 * h * k2[c];
            }
            rhs(t + 0.5 * h, &tmp, &mut k3);
            for c in 0..dim {
                tmp[c] = y[c] + h * k3[c];
            }
            rhs(t + h, &tmp, &mut k4);
            for c in 0..dim {
                y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
            }
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(NumericsError::IntegrationBlowup {
                index: i,
                abscissa: grid[i],
            });
        }
        record(&mut components, &y);
    }
    Ok(IvpSolution {
        grid: grid.to_vec(),
        components,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::integrate;

    fn uniform_grid(s_max: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|i| s_max * i as f64 / n as f64).collect()
    }

    #[test]
    fn linear_motion_is_exact() {
        // r'' = 0 as a first-order system; r(0)=0, r'(0)=1 -> r(s)=s.
        let grid = uniform_grid(5.0, 50);
        let sol = solve_ivp(
            |_t, y, dy| {
                dy[0] = y[1];
                dy[1] = 0.0;
            },
            &[0.0, 1.0],
            &grid,
            1,
        )
        .unwrap();
        for (i, &s) in grid.iter().enumerate() {
            assert!((sol.component_values(0)[i] - s).abs() < 1e-14);
        }
    }

    #[test]
    fn oscillator_fourth_order() {
        // y'' + y = 0, y(0)=0, y'(0)=1 -> sin; Richardson ratio in [14, 18].
        let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0];
        };
        let err = |n: usize| {
            let grid = uniform_grid(10.0, n);
            let sol = solve_ivp(rhs, &[0.0, 1.0], &grid, 1).unwrap();
            grid.iter()
                .enumerate()
                .map(|(i, &t)| (sol.component_values(0)[i] - t.sin()).abs())
                .fold(0.0_f64, f64::max)
        };
        let (e1, e2) = (err(200), err(400));
        let ratio = e1 / e2;
        assert!(
            (14.0..=18.0).contains(&ratio),
            "Richardson ratio {ratio} outside [14, 18]"
        );
    }

    #[test]
    fn gaussian_turning_angle_matches_quadrature_oracle() {
        // b' = beta exp(-s^2), b(0) = 0; oracle is the antiderivative
        // beta * sqrt(pi)/2 * erf(s) evaluated by independent quadrature.
        let beta = 0.7;
        let grid = uniform_grid(4.0, 400);
        let sol = solve_ivp(
            |t: f64, _y: &[f64], dy: &mut [f64]| dy[0] = beta * (-t * t).exp(),
            &[0.0],
            &grid,
            1,
        )
        .unwrap();
        for &s in &[0.5, 1.0, 2.0, 4.0] {
            let oracle = beta
                * integrate(|t: f64| (-t * t).exp(), 0.0, s, 1e-13)
                    .unwrap()
                    .value;
            let i = grid.iter().position(|&g| (g - s).abs() < 1e-12).unwrap();
            assert!(
                (sol.component_values(0)[i] - oracle).abs() < 1e-10,
                "s = {s}"
            );
        }
    }

    #[test]
    fn blowup_reports_last_valid_node() {
        // y' = y^2, y(0) = 1 blows up at t = 1.
        let grid = uniform_grid(2.0, 64);
        let res = solve_ivp(
            |_t, y: &[f64], dy: &mut [f64]| dy[0] = y[0] * y[0],
            &[1.0],
            &grid,
            4,
        );
        match res {
            Err(NumericsError::IntegrationBlowup { abscissa, .. }) => {
                assert!(abscissa < 1.2, "blowup flagged near t=1, got {abscissa}");
            }
            other => panic!("expected blowup, got {other:?}"),
        }
    }
}
