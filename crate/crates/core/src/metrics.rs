//! Primary control effort: time integrals over trajectories and ensemble-averaged closed forms.

use crate::dynamics::{ModalObserver, ModalTrajectory, NetworkObserver, Trajectory};
use crate::error::{Error, Result};
use crate::grid::{BusId, DynamicParams, GridNetwork};
use crate::linalg::compensated_sum;
use crate::spectral::{Regime, SpectralData};
use crate::stochastic::{AmplitudeRule, NoiseSpec};

/// `Σ_i d_i (ω_i - ω̄)²` with the damping-weighted mean `ω̄ = Σ d_i ω_i / Σ d_i`.
pub fn effort_density(damping: &[f64], total_damping: f64, omega: &[f64]) -> f64 {
    let mean = damping.iter().zip(omega).map(|(d, w)| d * w).sum::<f64>() / total_damping;
    damping
        .iter()
        .zip(omega)
        .map(|(d, w)| d * (w - mean) * (w - mean))
        .sum()
}

/// Trapezoidal time average of the effort density over a recorded network trajectory.
pub fn control_effort(traj: &Trajectory, params: &DynamicParams) -> Result<f64> {
    if traj.frequencies.cols() != params.len() {
        return Err(Error::DimensionMismatch(format!(
            "trajectory has {} nodes, parameters {}",
            traj.frequencies.cols(),
            params.len()
        )));
    }
    let total = params.total_damping();
    let density: Vec<f64> = (0..traj.times.len())
        .map(|k| effort_density(params.damping(), total, traj.frequencies.row(k)))
        .collect();
    time_average(&traj.times, &density)
}

/// Trapezoidal time average of `Σ_{α≥2} ċ_α²`.
pub fn control_effort_modal(modal: &ModalTrajectory) -> Result<f64> {
    let density: Vec<f64> = (0..modal.times.len())
        .map(|k| modal.derivatives.row(k).iter().map(|v| v * v).sum())
        .collect();
    time_average(&modal.times, &density)
}

fn time_average(times: &[f64], values: &[f64]) -> Result<f64> {
    if times.len() != values.len() || times.len() < 2 {
        return Err(Error::DimensionMismatch(format!(
            "need at least two matching samples, got {} times and {} values",
            times.len(),
            values.len()
        )));
    }
    let span = times[times.len() - 1] - times[0];
    if !(span > 0.0) {
        return Err(Error::InvalidParameters("trajectory spans no time".into()));
    }
    let integral = compensated_sum(
        times
            .windows(2)
            .zip(values.windows(2))
            .map(|(t, v)| 0.5 * (v[0] + v[1]) * (t[1] - t[0])),
    );
    Ok(integral / span)
}

/// Streaming version of [`control_effort`] and [`control_effort_modal`].
///
/// Accumulates the trapezoidal integral as states arrive and snapshots the
/// running average at each checkpoint (seconds since the window start).
#[derive(Debug, Clone)]
pub struct EffortAccumulator {
    damping: Vec<f64>,
    total_damping: f64,
    checkpoints: Vec<f64>,
    results: Vec<f64>,
    start: Option<f64>,
    last: Option<(f64, f64)>,
    integral: f64,
}

impl EffortAccumulator {
    /// Accumulator for network trajectories; `checkpoints` must be ascending.
    pub fn network(params: &DynamicParams, checkpoints: Vec<f64>) -> Self {
        Self::with_damping(params.damping().to_vec(), checkpoints)
    }

    /// Accumulator for modal trajectories.
    pub fn modal(checkpoints: Vec<f64>) -> Self {
        Self::with_damping(Vec::new(), checkpoints)
    }

    fn with_damping(damping: Vec<f64>, checkpoints: Vec<f64>) -> Self {
        let total_damping = compensated_sum(damping.iter().copied());
        Self {
            damping,
            total_damping,
            checkpoints,
            results: Vec::new(),
            start: None,
            last: None,
            integral: 0.0,
        }
    }

    fn push(&mut self, time: f64, density: f64) {
        let start = *self.start.get_or_insert(time);
        if let Some((t0, g0)) = self.last {
            self.integral += 0.5 * (g0 + density) * (time - t0);
        }
        self.last = Some((time, density));
        while let Some(&c) = self.checkpoints.get(self.results.len()) {
            let elapsed = time - start;
            if elapsed + 1e-9 * c.max(1e-300) < c {
                break;
            }
            self.results.push(if elapsed > 0.0 { self.integral / elapsed } else { 0.0 });
        }
    }

    /// Running average over the whole window received so far.
    pub fn value(&self) -> Option<f64> {
        match (self.start, self.last) {
            (Some(s), Some((t, _))) if t > s => Some(self.integral / (t - s)),
            _ => None,
        }
    }

    /// Averages at the checkpoints reached so far.
    pub fn checkpoint_values(&self) -> &[f64] {
        &self.results
    }
}

impl NetworkObserver for EffortAccumulator {
    fn record(&mut self, time: f64, _angles: &[f64], frequencies: &[f64]) {
        let g = effort_density(&self.damping, self.total_damping, frequencies);
        self.push(time, g);
    }
}

impl ModalObserver for EffortAccumulator {
    fn record(&mut self, time: f64, _coefficients: &[f64], derivatives: &[f64]) {
        let g = derivatives.iter().map(|v| v * v).sum();
        self.push(time, g);
    }
}

/// Per-mode weights `Σ_{i∈N} δP_{0i}² u_{α,i}² / d_i` for `α ≥ 2`, in mode order.
fn modal_weights(grid: &GridNetwork, spectral: &SpectralData, noise: &NoiseSpec) -> Result<Vec<f64>> {
    let targets = noise.resolve(grid)?;
    if spectral.len() != grid.len() {
        return Err(Error::DimensionMismatch(format!(
            "spectrum has {} modes for {} buses",
            spectral.len(),
            grid.len()
        )));
    }
    Ok((1..spectral.len())
        .map(|a| {
            targets
                .iter()
                .map(|&(i, amp)| {
                    let w = spectral.forcing_weight(a, i);
                    amp * amp * w * w
                })
                .sum()
        })
        .collect())
}

/// Stationary ensemble average of the effort for exponentially correlated noise
/// under a homogeneous inertia-to-damping ratio (inertialess grids allowed).
pub fn analytic_general(
    grid: &GridNetwork,
    spectral: &SpectralData,
    params: &DynamicParams,
    noise: &NoiseSpec,
) -> Result<f64> {
    let inverse_gamma = params.inverse_gamma().ok_or(Error::HeterogeneousRatio)?;
    let tau0 = noise.tau0();
    let weights = modal_weights(grid, spectral, noise)?;
    Ok(compensated_sum(weights.iter().enumerate().map(|(k, w)| {
        let lambda = spectral.eigenvalues[k + 1];
        w / (lambda * tau0 + 1.0 + inverse_gamma / tau0)
    })))
}

/// Short correlation-time limit of the effort.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShortLimit {
    Finite(f64),
    /// The limit is infinite because this disturbed bus has no inertia.
    Diverges { bus: BusId },
}

impl ShortLimit {
    pub fn value(self) -> Option<f64> {
        match self {
            ShortLimit::Finite(v) => Some(v),
            ShortLimit::Diverges { .. } => None,
        }
    }
}

/// `τ0 Σ_{i∈N} δP_{0i}² (1/m_i - 1/Σ_j m_j)`.
pub fn analytic_short(grid: &GridNetwork, params: &DynamicParams, noise: &NoiseSpec) -> Result<ShortLimit> {
    let targets = noise.resolve(grid)?;
    let total = compensated_sum(params.inertia().iter().copied());
    let mut terms = Vec::with_capacity(targets.len());
    for &(i, amp) in &targets {
        let m = params.inertia()[i];
        if m == 0.0 {
            return Ok(ShortLimit::Diverges {
                bus: grid.buses()[i].id,
            });
        }
        terms.push(amp * amp * (1.0 / m - 1.0 / total));
    }
    Ok(ShortLimit::Finite(noise.tau0() * compensated_sum(terms)))
}

/// `τ0⁻¹ Σ_{α≥2} Σ_{i∈N} δP_{0i}² u_{α,i}² / (d_i λ_α)`; contains no inertia.
pub fn analytic_long(grid: &GridNetwork, spectral: &SpectralData, noise: &NoiseSpec) -> Result<f64> {
    let weights = modal_weights(grid, spectral, noise)?;
    let sum = compensated_sum(
        weights
            .iter()
            .enumerate()
            .map(|(k, w)| w / spectral.eigenvalues[k + 1]),
    );
    Ok(sum / noise.tau0())
}

/// Numerical and analytic effort values for one disturbance scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub numeric: Option<EnsembleSummary>,
    pub horizon: f64,
    pub analytic_general: Option<f64>,
    pub analytic_short: ShortLimit,
    pub analytic_long: f64,
    pub regime: Regime,
}

/// Mean and spread of an ensemble of effort values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSummary {
    pub mean: f64,
    /// Sample standard deviation; `None` for a single member.
    pub std: Option<f64>,
    pub count: usize,
}

impl EnsembleSummary {
    pub fn from_values(values: &[f64]) -> Self {
        let count = values.len();
        let mean = compensated_sum(values.iter().copied()) / count as f64;
        let std = (count >= 2).then(|| {
            let ss = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean)));
            (ss / (count - 1) as f64).sqrt()
        });
        Self { mean, std, count }
    }

    /// Standard error of the mean.
    pub fn standard_error(&self) -> Option<f64> {
        self.std.map(|s| s / (self.count as f64).sqrt())
    }
}

/// Single-bus long-correlation effort for every bus, largest first.
pub fn rank_nodes(
    grid: &GridNetwork,
    spectral: &SpectralData,
    tau0: f64,
    amplitude_rule: &AmplitudeRule,
) -> Result<Vec<(BusId, f64)>> {
    let mut ranking = grid
        .buses()
        .iter()
        .map(|bus| {
            let amp = amplitude_rule.amplitude(grid, bus.id)?;
            let spec = NoiseSpec::new(vec![bus.id], vec![amp], tau0, 0)?;
            Ok((bus.id, analytic_long(grid, spectral, &spec)?))
        })
        .collect::<Result<Vec<_>>>()?;
    ranking.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(ranking)
}
