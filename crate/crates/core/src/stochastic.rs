//! Exponentially correlated Gaussian power fluctuations.
//!
//! Each disturbed bus draws from its own ChaCha8 stream seeded by
//! `derive_seed(seed, bus_id)`. Paths use the exact Ornstein–Uhlenbeck update
//! `x_{k+1} = ρ x_k + σ sqrt(1 - ρ²) ξ_k` with `ρ = exp(-dt/τ0)` and a
//! stationary first sample, so the statistics do not depend on `dt`.

use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::grid::{BusId, GridNetwork};
use crate::linalg::Matrix;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent child seed for `stream` from a parent seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    mix64(seed ^ mix64(stream.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    nodes: Vec<BusId>,
    amplitudes: Vec<f64>,
    tau0: f64,
    seed: u64,
}

impl NoiseSpec {
    pub fn new(nodes: Vec<BusId>, amplitudes: Vec<f64>, tau0: f64, seed: u64) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidNoise("no disturbed nodes".into()));
        }
        if nodes.len() != amplitudes.len() {
            return Err(Error::InvalidNoise(format!(
                "{} nodes but {} amplitudes",
                nodes.len(),
                amplitudes.len()
            )));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = nodes.iter().find(|id| !seen.insert(**id)) {
            return Err(Error::InvalidNoise(format!("bus {dup} listed twice")));
        }
        if let Some(a) = amplitudes.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
            return Err(Error::InvalidNoise(format!("amplitude must be >= 0, got {a}")));
        }
        if !(tau0.is_finite() && tau0 > 0.0) {
            return Err(Error::InvalidNoise(format!("tau0 must be > 0, got {tau0}")));
        }
        Ok(Self {
            nodes,
            amplitudes,
            tau0,
            seed,
        })
    }

    pub fn nodes(&self) -> &[BusId] {
        &self.nodes
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn tau0(&self) -> f64 {
        self.tau0
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    pub fn with_tau0(&self, tau0: f64) -> Result<Self> {
        Self::new(self.nodes.clone(), self.amplitudes.clone(), tau0, self.seed)
    }

    /// Pairs of (bus index, amplitude) resolved against `grid`.
    pub fn resolve(&self, grid: &GridNetwork) -> Result<Vec<(usize, f64)>> {
        self.nodes
            .iter()
            .zip(&self.amplitudes)
            .map(|(id, a)| Ok((grid.require_index(*id)?, *a)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRow {
    pub bus: BusId,
    pub values: Vec<f64>,
}

/// Sampled disturbance on the grid `t_k = k dt`, `k = 0..=steps`.
///
/// Only disturbed buses are stored; every other bus is identically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    dt: f64,
    steps: usize,
    tau0: f64,
    rows: Vec<NoiseRow>,
}

impl NoisePath {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of intervals; there are `steps + 1` samples.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn tau0(&self) -> f64 {
        self.tau0
    }

    pub fn duration(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| k as f64 * self.dt).collect()
    }

    pub fn rows(&self) -> &[NoiseRow] {
        &self.rows
    }

    pub fn row(&self, bus: BusId) -> Option<&[f64]> {
        self.rows.iter().find(|r| r.bus == bus).map(|r| r.values.as_slice())
    }

    pub fn value(&self, bus: BusId, k: usize) -> f64 {
        self.row(bus).map_or(0.0, |r| r[k])
    }

    /// Dense `n × (steps + 1)` matrix in grid bus order.
    pub fn to_matrix(&self, grid: &GridNetwork) -> Result<Matrix> {
        let mut m = Matrix::zeros(grid.len(), self.steps + 1);
        for row in &self.rows {
            let i = grid.require_index(row.bus)?;
            for (k, v) in row.values.iter().enumerate() {
                m[(i, k)] = *v;
            }
        }
        Ok(m)
    }

    /// Builds a path from explicit samples; used for deterministic forcing in tests and tools.
    pub fn from_samples(dt: f64, tau0: f64, rows: Vec<NoiseRow>) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidNoise(format!("dt must be > 0, got {dt}")));
        }
        let len = rows.first().map_or(1, |r| r.values.len());
        if len == 0 || rows.iter().any(|r| r.values.len() != len) {
            return Err(Error::InvalidNoise("rows must share a non-zero length".into()));
        }
        Ok(Self {
            dt,
            steps: len - 1,
            tau0,
            rows,
        })
    }
}

/// Samples a stationary Ornstein–Uhlenbeck path for every disturbed node.
pub fn generate_noise(spec: &NoiseSpec, t_end: f64, dt: f64) -> Result<NoisePath> {
    if dt > spec.tau0 / 10.0 * (1.0 + 1e-12) {
        return Err(Error::InvalidNoise(format!(
            "dt = {dt} s does not resolve tau0 = {} s (need dt <= tau0/10)",
            spec.tau0
        )));
    }
    generate_unchecked(spec, t_end, dt)
}

pub(crate) fn generate_unchecked(spec: &NoiseSpec, t_end: f64, dt: f64) -> Result<NoisePath> {
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::InvalidNoise(format!("horizon must be > 0, got {t_end}")));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidNoise(format!("dt must be > 0, got {dt}")));
    }
    let steps = step_count(t_end, dt);
    let rho = (-dt / spec.tau0).exp();
    let kick = (-(-2.0 * dt / spec.tau0).exp_m1()).sqrt();
    let rows = spec
        .nodes
        .iter()
        .zip(&spec.amplitudes)
        .map(|(&bus, &sigma)| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, u64::from(bus.0)));
            let mut x: f64 = StandardNormal.sample(&mut rng);
            let mut values = Vec::with_capacity(steps + 1);
            values.push(sigma * x);
            for _ in 0..steps {
                let xi: f64 = StandardNormal.sample(&mut rng);
                x = rho * x + kick * xi;
                values.push(sigma * x);
            }
            NoiseRow { bus, values }
        })
        .collect();
    Ok(NoisePath {
        dt,
        steps,
        tau0: spec.tau0,
        rows,
    })
}

/// Number of `dt` intervals needed to cover `t_end`, tolerant to rounding.
pub fn step_count(t_end: f64, dt: f64) -> usize {
    let ratio = t_end / dt;
    let nearest = ratio.round();
    if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as usize
    } else {
        ratio.ceil() as usize
    }
}

/// Time-averaged correlator `C(kΔt) = (N-k)^{-1} Σ_j x_j x_{j+k}` for lags up to `max_lag`.
pub fn estimate_autocorrelation(path: &NoisePath, node: BusId, max_lag: f64) -> Result<Vec<(f64, f64)>> {
    let required = 10.0 * max_lag;
    if path.duration() < required || !(max_lag >= 0.0) {
        return Err(Error::PathTooShort {
            available: path.duration(),
            required,
        });
    }
    let zeros;
    let x = match path.row(node) {
        Some(r) => r,
        None => {
            zeros = vec![0.0; path.steps + 1];
            &zeros
        }
    };
    let max_k = (max_lag / path.dt + 1e-9).floor() as usize;
    let n = x.len();
    Ok((0..=max_k)
        .map(|k| {
            let c = crate::linalg::compensated_sum((0..n - k).map(|j| x[j] * x[j + k])) / (n - k) as f64;
            (k as f64 * path.dt, c)
        })
        .collect())
}

/// How per-node disturbance amplitudes are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AmplitudeRule {
    /// The same amplitude at every node.
    Uniform(f64),
    /// `max(fraction·|P_i|, floor)` in file power units.
    FractionOfPower { fraction: f64, floor: f64 },
}

impl AmplitudeRule {
    /// 1% of each bus's power, with a floor of 1% of the mean absolute power.
    pub fn default_for(grid: &GridNetwork) -> Self {
        let mean = grid.buses().iter().map(|b| b.power.abs()).sum::<f64>() / grid.len() as f64;
        AmplitudeRule::FractionOfPower {
            fraction: 0.01,
            floor: 0.01 * mean,
        }
    }

    pub fn amplitude(&self, grid: &GridNetwork, bus: BusId) -> Result<f64> {
        let i = grid.require_index(bus)?;
        Ok(match *self {
            AmplitudeRule::Uniform(a) => a,
            AmplitudeRule::FractionOfPower { fraction, floor } => {
                (fraction * grid.buses()[i].power.abs()).max(floor)
            }
        })
    }

    pub fn amplitudes(&self, grid: &GridNetwork, buses: &[BusId]) -> Result<Vec<f64>> {
        buses.iter().map(|b| self.amplitude(grid, *b)).collect()
    }
}
