//! Fixed-step RK4 on the mixed first/second-order network equations.
//!
//! State layout: all angles first, then the frequencies of inertial nodes.
//! Inertialess nodes obey `d_i θ̇_i = P_i + δP_i - flows_i` directly.

use super::{
    check_network_step, check_noise_length, interpolate, resolve_forcing, substeps, Forcing, Model,
    NetworkObserver, SimulationConfig, SimulationWarning,
};
use crate::equilibrium::OperatingPoint;
use crate::error::{Error, Result};
use crate::grid::{DynamicParams, GridNetwork};
use crate::linalg::Matrix;
use crate::stochastic::NoisePath;

/// Recorded network states; row `k` of `angles`/`frequencies` belongs to `times[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Seconds since the start of the recorded window.
    pub times: Vec<f64>,
    pub angles: Matrix,
    pub frequencies: Matrix,
    pub warnings: Vec<SimulationWarning>,
}

impl Trajectory {
    pub fn horizon(&self) -> f64 {
        match (self.times.first(), self.times.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }
}

struct Recorder {
    n: usize,
    times: Vec<f64>,
    angles: Vec<f64>,
    frequencies: Vec<f64>,
}

impl NetworkObserver for Recorder {
    fn record(&mut self, time: f64, angles: &[f64], frequencies: &[f64]) {
        self.times.push(time);
        self.angles.extend_from_slice(angles);
        self.frequencies.extend_from_slice(frequencies);
    }
}

impl Recorder {
    fn finish(self, warnings: Vec<SimulationWarning>) -> Result<Trajectory> {
        let k = self.times.len();
        let rows = |data: Vec<f64>| -> Result<Matrix> {
            let rows: Vec<Vec<f64>> = data.chunks(self.n).map(<[f64]>::to_vec).collect();
            if rows.is_empty() {
                Ok(Matrix::zeros(0, self.n))
            } else {
                Matrix::from_rows(&rows)
            }
        };
        let angles = rows(self.angles)?;
        let frequencies = rows(self.frequencies)?;
        debug_assert_eq!(angles.rows(), k);
        Ok(Trajectory {
            times: self.times,
            angles,
            frequencies,
            warnings,
        })
    }
}

pub fn simulate_nonlinear(
    grid: &GridNetwork,
    params: &DynamicParams,
    point: &OperatingPoint,
    noise: &NoisePath,
    config: &SimulationConfig,
) -> Result<Trajectory> {
    record(grid, params, point, noise, &SimulationConfig { model: Model::Nonlinear, ..*config })
}

pub fn simulate_linear(
    grid: &GridNetwork,
    params: &DynamicParams,
    point: &OperatingPoint,
    noise: &NoisePath,
    config: &SimulationConfig,
) -> Result<Trajectory> {
    record(grid, params, point, noise, &SimulationConfig { model: Model::Linear, ..*config })
}

fn record(
    grid: &GridNetwork,
    params: &DynamicParams,
    point: &OperatingPoint,
    noise: &NoisePath,
    config: &SimulationConfig,
) -> Result<Trajectory> {
    let mut recorder = Recorder {
        n: grid.len(),
        times: Vec::new(),
        angles: Vec::new(),
        frequencies: Vec::new(),
    };
    let warnings = simulate_network_with(grid, params, point, noise, config, &mut recorder)?;
    recorder.finish(warnings)
}

struct System<'a> {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
    sine: bool,
    base: Vec<f64>,
    slot: Vec<Option<usize>>,
    inv_m: Vec<f64>,
    damping: Vec<f64>,
    inv_d: Vec<f64>,
    forcing: Vec<Forcing<'a>>,
    q: usize,
}

impl System<'_> {
    fn eval(&self, k: usize, frac: f64, y: &[f64], dy: &mut [f64], net: &mut [f64]) {
        let n = self.n;
        net.copy_from_slice(&self.base);
        for f in &self.forcing {
            net[f.node] += interpolate(f.samples, k, self.q, frac);
        }
        if self.sine {
            for &(a, b, w) in &self.edges {
                let flow = w * (y[a] - y[b]).sin();
                net[a] -= flow;
                net[b] += flow;
            }
        } else {
            for &(a, b, w) in &self.edges {
                let flow = w * (y[a] - y[b]);
                net[a] -= flow;
                net[b] += flow;
            }
        }
        for i in 0..n {
            match self.slot[i] {
                Some(s) => {
                    let omega = y[n + s];
                    dy[i] = omega;
                    dy[n + s] = (net[i] - self.damping[i] * omega) * self.inv_m[i];
                }
                None => dy[i] = net[i] * self.inv_d[i],
            }
        }
    }
}

/// Runs the network integrator selected by `config.model` and streams recorded states to `observer`.
pub fn simulate_network_with(
    grid: &GridNetwork,
    params: &DynamicParams,
    point: &OperatingPoint,
    noise: &NoisePath,
    config: &SimulationConfig,
    observer: &mut dyn NetworkObserver,
) -> Result<Vec<SimulationWarning>> {
    let n = grid.len();
    if params.len() != n || point.angles.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "grid has {n} buses, parameters {}, operating point {}",
            params.len(),
            point.angles.len()
        )));
    }
    let sine = match config.model {
        Model::Nonlinear => true,
        Model::Linear => false,
        Model::Modal => {
            return Err(Error::InvalidParameters(
                "the modal model is integrated by simulate_modal".into(),
            ))
        }
    };
    let schedule = config.schedule()?;
    check_network_step(grid, params, point, noise, config.dt)?;
    check_noise_length(noise, &schedule)?;
    let q = substeps(noise, config.dt)?;

    let theta0 = &point.angles;
    let edges: Vec<(usize, usize, f64)> = grid
        .edges()
        .iter()
        .map(|e| {
            let w = if sine {
                e.susceptance
            } else {
                e.susceptance * (theta0[e.a] - theta0[e.b]).cos()
            };
            (e.a, e.b, w)
        })
        .collect();
    let mut slot = vec![None; n];
    let mut inertial = 0;
    for (i, s) in slot.iter_mut().enumerate() {
        if params.is_inertial(i) {
            *s = Some(inertial);
            inertial += 1;
        }
    }
    let system = System {
        n,
        edges,
        sine,
        base: if sine { grid.powers() } else { vec![0.0; n] },
        slot,
        inv_m: params.inertia().iter().map(|m| if *m > 0.0 { 1.0 / m } else { 0.0 }).collect(),
        damping: params.damping().to_vec(),
        inv_d: params.damping().iter().map(|d| 1.0 / d).collect(),
        forcing: resolve_forcing(grid, noise)?,
        q,
    };

    let dim = n + inertial;
    let mut y = vec![0.0; dim];
    if sine {
        y[..n].copy_from_slice(theta0);
    }
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]);
    let mut tmp = vec![0.0; dim];
    let mut net = vec![0.0; n];
    let h = config.dt;
    let mut warnings = Vec::new();
    let mut absolute = vec![0.0; n];

    let mut observe = |k: usize, y: &[f64], dy: &[f64], warnings: &mut Vec<SimulationWarning>| -> Result<()> {
        let t = (k - schedule.burn) as f64 * h;
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::Diverged {
                time: k as f64 * h,
            });
        }
        if warnings.is_empty() {
            for i in 0..n {
                absolute[i] = if sine { y[i] } else { theta0[i] + y[i] };
            }
            if let Some(w) = guard(grid, &absolute, config.angle_guard, t) {
                log::warn!("{w:?}");
                warnings.push(w);
            }
        }
        observer.record(t, &y[..n], &dy[..n]);
        Ok(())
    };

    for k in 0..schedule.total {
        system.eval(k, 0.0, &y, &mut k1, &mut net);
        if schedule.records(k) {
            observe(k, &y, &k1, &mut warnings)?;
        } else if k % 4096 == 0 && !y.iter().all(|v| v.is_finite()) {
            return Err(Error::Diverged { time: k as f64 * h });
        }
        for j in 0..dim {
            tmp[j] = y[j] + 0.5 * h * k1[j];
        }
        system.eval(k, 0.5, &tmp, &mut k2, &mut net);
        for j in 0..dim {
            tmp[j] = y[j] + 0.5 * h * k2[j];
        }
        system.eval(k, 0.5, &tmp, &mut k3, &mut net);
        for j in 0..dim {
            tmp[j] = y[j] + h * k3[j];
        }
        system.eval(k, 1.0, &tmp, &mut k4, &mut net);
        for j in 0..dim {
            y[j] += h / 6.0 * (k1[j] + 2.0 * (k2[j] + k3[j]) + k4[j]);
        }
    }
    system.eval(schedule.total, 0.0, &y, &mut k1, &mut net);
    observe(schedule.total, &y, &k1, &mut warnings)?;
    Ok(warnings)
}

fn guard(grid: &GridNetwork, angles: &[f64], limit: f64, time: f64) -> Option<SimulationWarning> {
    let buses = grid.buses();
    grid.edges().iter().find_map(|e| {
        let angle = angles[e.a] - angles[e.b];
        (angle.abs() > limit).then(|| SimulationWarning::LeftLinearRegion {
            time,
            from: buses[e.a].id,
            to: buses[e.b].id,
            angle,
        })
    })
}
