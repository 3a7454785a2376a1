//! Synchronous operating point of the lossless grid.

use crate::error::{Error, Result};
use crate::grid::GridNetwork;
use crate::linalg::{self, Matrix};
use crate::spectral::laplacian_matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    /// Bus angles in rad with zero mean.
    pub angles: Vec<f64>,
    /// Largest nodal power mismatch.
    pub residual_norm: f64,
    pub stable: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub max_iterations: usize,
    /// Iteration stops once the mismatch falls below this value.
    pub tolerance: f64,
    /// Largest mismatch still reported as success after `max_iterations`.
    pub acceptance: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            tolerance: 1e-12,
            acceptance: 1e-8,
        }
    }
}

/// Nodal mismatch `P_i - Σ_j b_ij sin(θ_i - θ_j)`.
pub fn mismatch(grid: &GridNetwork, angles: &[f64]) -> Vec<f64> {
    let mut r: Vec<f64> = grid.buses().iter().map(|b| b.power).collect();
    for e in grid.edges() {
        let flow = e.susceptance * (angles[e.a] - angles[e.b]).sin();
        r[e.a] -= flow;
        r[e.b] += flow;
    }
    r
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn solve_steady_state(grid: &GridNetwork, initial_guess: Option<&[f64]>) -> Result<OperatingPoint> {
    solve_steady_state_with(grid, initial_guess, &NewtonOptions::default())
}

/// Newton iteration on the power-flow equations with the first angle held fixed.
pub fn solve_steady_state_with(
    grid: &GridNetwork,
    initial_guess: Option<&[f64]>,
    options: &NewtonOptions,
) -> Result<OperatingPoint> {
    let n = grid.len();
    let mut theta = match initial_guess {
        Some(g) if g.len() != n => {
            return Err(Error::DimensionMismatch(format!(
                "initial guess has {} entries for {n} buses",
                g.len()
            )))
        }
        Some(g) => {
            let shift = g[0];
            g.iter().map(|x| x - shift).collect()
        }
        None => vec![0.0; n],
    };

    let scale = grid.buses().iter().fold(1.0f64, |m, b| m.max(b.power.abs()));
    let target = options.tolerance * scale;
    let mut residual = mismatch(grid, &theta);
    let mut iterations = 0;

    while max_abs(&residual) > target && iterations < options.max_iterations && n > 1 {
        iterations += 1;
        // The Jacobian of the mismatch is -L(θ); solve L Δ = F on the reduced system.
        let l = laplacian_matrix(grid, &theta);
        let reduced = Matrix::from_fn(n - 1, n - 1, |i, j| l[(i + 1, j + 1)]);
        let step = linalg::solve(&reduced, &residual[1..]).map_err(|_| Error::NoConvergence {
            iterations,
            residual: max_abs(&residual),
        })?;

        let merit = norm2(&residual[1..]);
        let mut alpha = 1.0;
        let mut trial = theta.clone();
        loop {
            for k in 1..n {
                trial[k] = theta[k] + alpha * step[k - 1];
            }
            let r = mismatch(grid, &trial);
            if norm2(&r[1..]) <= (1.0 - 1e-4 * alpha) * merit || alpha < 1.0 / 1024.0 {
                residual = r;
                break;
            }
            alpha *= 0.5;
        }
        std::mem::swap(&mut theta, &mut trial);
        if !theta.iter().all(|x| x.is_finite()) {
            return Err(Error::NoConvergence {
                iterations,
                residual: f64::NAN,
            });
        }
    }

    let residual_norm = max_abs(&residual);
    if residual_norm > options.acceptance.max(target) {
        return Err(Error::NoConvergence {
            iterations,
            residual: residual_norm,
        });
    }

    let mean = linalg::compensated_sum(theta.iter().copied()) / n as f64;
    for x in &mut theta {
        *x -= mean;
    }
    let residual_norm = max_abs(&mismatch(grid, &theta));
    let mut point = OperatingPoint {
        angles: theta,
        residual_norm,
        stable: false,
        iterations,
    };
    point.stable = check_stability(grid, &point);
    Ok(point)
}

/// True when the weighted Laplacian at `point` is positive semidefinite with a one-dimensional kernel.
pub fn check_stability(grid: &GridNetwork, point: &OperatingPoint) -> bool {
    let l = laplacian_matrix(grid, &point.angles);
    let Ok(values) = linalg::symmetric_eigenvalues(&l) else {
        return false;
    };
    let lambda_max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if lambda_max == 0.0 {
        return values.len() == 1;
    }
    let tol = 1e-9 * lambda_max;
    let nonnegative = values.iter().all(|&v| v >= -tol);
    let kernel = values.iter().filter(|v| v.abs() < tol).count();
    nonnegative && kernel == 1
}
