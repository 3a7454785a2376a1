//! Exact propagation of the decoupled eigenmode equations
//! `γ⁻¹ c̈ + ċ + λ c = f` (or `ċ + λ c = f` without inertia) under forcing that
//! is linear within each step.

use super::{
    check_noise_length, check_noise_step, interpolate, resolve_forcing, substeps, ModalObserver,
    SimulationConfig,
};
use crate::error::{Error, Result};
use crate::grid::{DynamicParams, GridNetwork};
use crate::linalg::{expm, Matrix};
use crate::spectral::SpectralData;
use crate::stochastic::NoisePath;

/// Coefficients of the non-zero modes; column `α - 1` holds mode `α` (zero-based, `α ≥ 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct ModalTrajectory {
    /// Seconds since the start of the recorded window.
    pub times: Vec<f64>,
    pub coefficients: Matrix,
    pub derivatives: Matrix,
}

impl ModalTrajectory {
    pub fn horizon(&self) -> f64 {
        match (self.times.first(), self.times.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// `Σ_{α≥2} c_α u_α` at record `k`, i.e. the normalized angles `D^{1/2} δθ` without the zero mode.
    pub fn reconstruct(&self, spectral: &SpectralData, k: usize) -> Vec<f64> {
        let n = spectral.len();
        let mut phi = vec![0.0; n];
        for a in 1..n {
            let c = self.coefficients[(k, a - 1)];
            for (i, p) in phi.iter_mut().enumerate() {
                *p += c * spectral.component(a, i);
            }
        }
        phi
    }
}

struct Recorder {
    times: Vec<f64>,
    c: Vec<Vec<f64>>,
    cdot: Vec<Vec<f64>>,
}

impl ModalObserver for Recorder {
    fn record(&mut self, time: f64, coefficients: &[f64], derivatives: &[f64]) {
        self.times.push(time);
        self.c.push(coefficients.to_vec());
        self.cdot.push(derivatives.to_vec());
    }
}

pub fn simulate_modal(
    grid: &GridNetwork,
    spectral: &SpectralData,
    params: &DynamicParams,
    noise: &NoisePath,
    config: &SimulationConfig,
) -> Result<ModalTrajectory> {
    let mut rec = Recorder {
        times: Vec::new(),
        c: Vec::new(),
        cdot: Vec::new(),
    };
    simulate_modal_with(grid, spectral, params, noise, config, &mut rec)?;
    let modes = spectral.len() - 1;
    let to_matrix = |rows: Vec<Vec<f64>>| {
        if rows.is_empty() {
            Ok(Matrix::zeros(0, modes))
        } else {
            Matrix::from_rows(&rows)
        }
    };
    Ok(ModalTrajectory {
        times: rec.times,
        coefficients: to_matrix(rec.c)?,
        derivatives: to_matrix(rec.cdot)?,
    })
}

/// One-step propagator of a single mode.
#[derive(Debug, Clone, Copy)]
struct Propagator {
    lambda: f64,
    phi: [f64; 4],
    /// Response to the forcing value at the start of the step.
    g0: [f64; 2],
    /// Response to the forcing value at the end of the step.
    g1: [f64; 2],
}

fn propagator(lambda: f64, inverse_gamma: f64, h: f64) -> Propagator {
    if inverse_gamma > 0.0 {
        let gamma = 1.0 / inverse_gamma;
        // Augmented generator for y' = A y + b (u0 + u1 s/h): expm gives Φ, ∫Φb and ∫Φb s/h.
        let mut m = Matrix::zeros(4, 4);
        m[(0, 1)] = h;
        m[(1, 0)] = -lambda * gamma * h;
        m[(1, 1)] = -gamma * h;
        m[(1, 2)] = gamma * h;
        m[(2, 3)] = 1.0;
        let e = expm(&m);
        let p1 = [e[(0, 2)], e[(1, 2)]];
        let p2 = [e[(0, 3)], e[(1, 3)]];
        Propagator {
            lambda,
            phi: [e[(0, 0)], e[(0, 1)], e[(1, 0)], e[(1, 1)]],
            g0: [p1[0] - p2[0], p1[1] - p2[1]],
            g1: p2,
        }
    } else {
        let mut m = Matrix::zeros(3, 3);
        m[(0, 0)] = -lambda * h;
        m[(0, 1)] = h;
        m[(1, 2)] = 1.0;
        let e = expm(&m);
        Propagator {
            lambda,
            phi: [e[(0, 0)], 0.0, 0.0, 0.0],
            g0: [e[(0, 1)] - e[(0, 2)], 0.0],
            g1: [e[(0, 2)], 0.0],
        }
    }
}

/// Integrates every non-zero mode and streams the results to `observer`.
pub fn simulate_modal_with(
    grid: &GridNetwork,
    spectral: &SpectralData,
    params: &DynamicParams,
    noise: &NoisePath,
    config: &SimulationConfig,
    observer: &mut dyn ModalObserver,
) -> Result<()> {
    let inverse_gamma = params.inverse_gamma().ok_or(Error::HeterogeneousRatio)?;
    let n = grid.len();
    if spectral.len() != n || params.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "grid has {n} buses, spectrum {}, parameters {}",
            spectral.len(),
            params.len()
        )));
    }
    if spectral.damping() != params.damping() {
        return Err(Error::DimensionMismatch(
            "spectrum was normalized with a different damping vector".into(),
        ));
    }
    let schedule = config.schedule()?;
    check_noise_step(noise, config.dt)?;
    check_noise_length(noise, &schedule)?;
    let q = substeps(noise, config.dt)?;
    let forcing = resolve_forcing(grid, noise)?;

    let modes = n - 1;
    let props: Vec<Propagator> = (1..n)
        .map(|a| propagator(spectral.eigenvalues[a], inverse_gamma, config.dt))
        .collect();
    // weights[a * rows + r]: projection of forcing row r onto mode a + 1.
    let rows = forcing.len();
    let weights: Vec<f64> = (1..n)
        .flat_map(|a| forcing.iter().map(move |f| spectral.forcing_weight(a, f.node)))
        .collect();

    let project = |k: usize, out: &mut [f64], values: &mut [f64]| {
        for (v, f) in values.iter_mut().zip(&forcing) {
            *v = interpolate(f.samples, k, q, 0.0);
        }
        for (a, o) in out.iter_mut().enumerate() {
            let w = &weights[a * rows..(a + 1) * rows];
            *o = w.iter().zip(values.iter()).map(|(w, v)| w * v).sum();
        }
    };

    let second_order = inverse_gamma > 0.0;
    let mut c = vec![0.0; modes];
    let mut v = vec![0.0; modes];
    let mut f_now = vec![0.0; modes];
    let mut f_next = vec![0.0; modes];
    let mut values = vec![0.0; rows];
    let mut cdot = vec![0.0; modes];
    project(0, &mut f_now, &mut values);

    let mut emit = |k: usize, c: &[f64], v: &[f64], f: &[f64]| -> Result<()> {
        if !c.iter().all(|x| x.is_finite()) {
            return Err(Error::Diverged {
                time: schedule.time(k),
            });
        }
        if second_order {
            cdot.copy_from_slice(v);
        } else {
            for a in 0..modes {
                cdot[a] = f[a] - props[a].lambda * c[a];
            }
        }
        observer.record((k - schedule.burn) as f64 * config.dt, c, &cdot);
        Ok(())
    };

    for k in 0..schedule.total {
        if schedule.records(k) {
            emit(k, &c, &v, &f_now)?;
        }
        project(k + 1, &mut f_next, &mut values);
        if second_order {
            for a in 0..modes {
                let p = &props[a];
                let (c0, v0) = (c[a], v[a]);
                c[a] = p.phi[0] * c0 + p.phi[1] * v0 + p.g0[0] * f_now[a] + p.g1[0] * f_next[a];
                v[a] = p.phi[2] * c0 + p.phi[3] * v0 + p.g0[1] * f_now[a] + p.g1[1] * f_next[a];
            }
        } else {
            for a in 0..modes {
                let p = &props[a];
                c[a] = p.phi[0] * c[a] + p.g0[0] * f_now[a] + p.g1[0] * f_next[a];
            }
        }
        std::mem::swap(&mut f_now, &mut f_next);
    }
    emit(schedule.total, &c, &v, &f_now)
}
