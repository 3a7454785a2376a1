//! Time integration of the swing equations driven by a sampled disturbance.
//!
//! Three routes are provided:
//! * [`simulate_nonlinear`]: fixed-step RK4 on the full sine coupling;
//! * [`simulate_linear`]: the same integrator on the Laplacian linearization;
//! * [`simulate_modal`]: exact propagation of the decoupled eigenmode equations
//!   of the homogeneous-ratio case, assuming piecewise-linear forcing.
//!
//! The disturbance is linearly interpolated between its samples. Simulations
//! start at the operating point with zero frequency and run for
//! `burn_in + t_end`; only the final `t_end` seconds are recorded.

mod closed_form;
mod modal;
mod network;

use std::f64::consts::FRAC_PI_2;

pub use closed_form::{closed_form_coefficients, closed_form_response};
pub use modal::{simulate_modal, simulate_modal_with, ModalTrajectory};
pub use network::{simulate_linear, simulate_network_with, simulate_nonlinear, Trajectory};

use crate::equilibrium::OperatingPoint;
use crate::error::{Error, Result};
use crate::grid::{BusId, DynamicParams, GridNetwork};
use crate::spectral::laplacian_matrix;
use crate::stochastic::{step_count, NoisePath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    Nonlinear,
    Linear,
    Modal,
}

impl Model {
    pub fn as_str(self) -> &'static str {
        match self {
            Model::Nonlinear => "nonlinear",
            Model::Linear => "linear",
            Model::Modal => "modal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    /// Length of the recorded window, seconds.
    pub t_end: f64,
    /// Integrator step, seconds.
    pub dt: f64,
    /// Record every `record_stride`-th step.
    pub record_stride: usize,
    pub model: Model,
    /// Unrecorded lead-in before the window starts, seconds.
    pub burn_in: f64,
    /// Largest line angle difference before a warning is raised, rad.
    pub angle_guard: f64,
}

impl SimulationConfig {
    pub fn new(t_end: f64, dt: f64, model: Model) -> Self {
        Self {
            t_end,
            dt,
            record_stride: 1,
            model,
            burn_in: 0.0,
            angle_guard: FRAC_PI_2,
        }
    }

    pub fn with_burn_in(mut self, burn_in: f64) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    /// Integer step counts `(burn_in, total)`; the window is rounded up to whole strides.
    pub(crate) fn schedule(&self) -> Result<Schedule> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameters(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::InvalidParameters(format!("horizon must be > 0, got {}", self.t_end)));
        }
        if !(self.burn_in.is_finite() && self.burn_in >= 0.0) {
            return Err(Error::InvalidParameters(format!("burn-in must be >= 0, got {}", self.burn_in)));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidParameters("record stride must be >= 1".into()));
        }
        let burn = if self.burn_in == 0.0 { 0 } else { step_count(self.burn_in, self.dt) };
        let window = step_count(self.t_end, self.dt).div_ceil(self.record_stride) * self.record_stride;
        Ok(Schedule {
            burn,
            total: burn + window,
            stride: self.record_stride,
            dt: self.dt,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Schedule {
    pub burn: usize,
    pub total: usize,
    pub stride: usize,
    pub dt: f64,
}

impl Schedule {
    pub fn records(&self, k: usize) -> bool {
        k >= self.burn && (k - self.burn).is_multiple_of(self.stride)
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimulationWarning {
    /// A line angle difference exceeded the guard.
    LeftLinearRegion {
        time: f64,
        from: BusId,
        to: BusId,
        angle: f64,
    },
}

/// Receives network states at recorded times.
pub trait NetworkObserver {
    /// `angles` are absolute (nonlinear) or deviations (linear); `frequencies` cover every node.
    fn record(&mut self, time: f64, angles: &[f64], frequencies: &[f64]);
}

/// Receives modal states at recorded times.
pub trait ModalObserver {
    /// Coefficients and derivatives of the non-zero modes.
    fn record(&mut self, time: f64, coefficients: &[f64], derivatives: &[f64]);
}

/// Largest step the RK4 network integrator accepts for these parameters.
///
/// Inertial nodes must resolve their local swing period and damping time;
/// inertialess nodes must stay inside the RK4 stability region of their
/// relaxation rate `L_ii / d_i`. Both bounds use Gershgorin estimates of the
/// Laplacian at the operating point.
pub fn max_network_step(
    grid: &GridNetwork,
    params: &DynamicParams,
    point: &OperatingPoint,
) -> (f64, &'static str) {
    let l = laplacian_matrix(grid, &point.angles);
    let mut limit = f64::INFINITY;
    let mut reason = "unbounded";
    for i in 0..grid.len() {
        let (m, d, k) = (params.inertia()[i], params.damping()[i], l[(i, i)].abs());
        let candidates: [(f64, &'static str); 2] = if m > 0.0 {
            [
                (0.2 * (m / (2.0 * k)).sqrt(), "inertial oscillation"),
                (m / d, "inertial damping"),
            ]
        } else {
            [(d / k, "inertialess relaxation"), (f64::INFINITY, "")]
        };
        for (c, r) in candidates {
            if c < limit {
                limit = c;
                reason = r;
            }
        }
    }
    (limit, reason)
}

pub(crate) fn check_network_step(
    grid: &GridNetwork,
    params: &DynamicParams,
    point: &OperatingPoint,
    noise: &NoisePath,
    dt: f64,
) -> Result<()> {
    check_noise_step(noise, dt)?;
    let (limit, reason) = max_network_step(grid, params, point);
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::StepSize { dt, limit, reason });
    }
    Ok(())
}

pub(crate) fn check_noise_step(noise: &NoisePath, dt: f64) -> Result<()> {
    let limit = noise.tau0() / 10.0;
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::StepSize {
            dt,
            limit,
            reason: "noise correlation",
        });
    }
    Ok(())
}

/// Number of integrator steps per noise sample interval.
pub(crate) fn substeps(noise: &NoisePath, dt: f64) -> Result<usize> {
    let ratio = noise.dt() / dt;
    let q = ratio.round();
    if q < 1.0 || (ratio - q).abs() > 1e-9 * q {
        return Err(Error::InvalidParameters(format!(
            "noise step {} s must be an integer multiple of the integrator step {dt} s",
            noise.dt()
        )));
    }
    Ok(q as usize)
}

pub(crate) fn check_noise_length(noise: &NoisePath, schedule: &Schedule) -> Result<()> {
    let needed = schedule.time(schedule.total);
    if noise.duration() < needed * (1.0 - 1e-12) {
        return Err(Error::PathTooShort {
            available: noise.duration(),
            required: needed,
        });
    }
    Ok(())
}

/// Disturbance samples of one bus resolved to its grid index.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Forcing<'a> {
    pub node: usize,
    pub samples: &'a [f64],
}

pub(crate) fn resolve_forcing<'a>(grid: &GridNetwork, noise: &'a NoisePath) -> Result<Vec<Forcing<'a>>> {
    noise
        .rows()
        .iter()
        .map(|r| {
            Ok(Forcing {
                node: grid.require_index(r.bus)?,
                samples: &r.values,
            })
        })
        .collect()
}

/// Piecewise-linear interpolation of a sample row at step `k` of `q` substeps per sample,
/// plus a fractional offset `frac` in [0, 1] of one integrator step.
#[inline]
pub(crate) fn interpolate(samples: &[f64], k: usize, q: usize, frac: f64) -> f64 {
    let j = k / q;
    let r = (k % q) as f64 + frac;
    if j + 1 >= samples.len() {
        return samples[samples.len() - 1];
    }
    let w = r / q as f64;
    samples[j] + w * (samples[j + 1] - samples[j])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_between_samples() {
        let s = [0.0, 1.0, 3.0];
        assert_eq!(interpolate(&s, 0, 2, 0.0), 0.0);
        assert_eq!(interpolate(&s, 1, 2, 0.0), 0.5);
        assert_eq!(interpolate(&s, 1, 2, 0.5), 0.75);
        assert_eq!(interpolate(&s, 2, 2, 0.0), 1.0);
        assert_eq!(interpolate(&s, 3, 2, 1.0), 3.0);
        assert_eq!(interpolate(&s, 4, 2, 0.0), 3.0);
    }

    #[test]
    fn schedule_rounds_window_to_stride() {
        let c = SimulationConfig::new(1.0, 0.1, Model::Linear).with_stride(3).with_burn_in(0.5);
        let s = c.schedule().unwrap();
        assert_eq!(s.burn, 5);
        assert_eq!(s.total, 17);
        assert!(s.records(5) && s.records(8) && !s.records(6) && !s.records(2));
    }
}
