//! Monte Carlo ensembles of the control effort.
//!
//! Member `k` draws its disturbance with seed `derive_seed(template_seed, k)`,
//! so results do not depend on scheduling. Members run on the rayon pool when
//! [`Execution::Parallel`] is selected and the `parallel` feature is enabled.

use crate::dynamics::{simulate_modal_with, simulate_network_with, Model, SimulationConfig};
use crate::equilibrium::OperatingPoint;
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::grid::{DynamicParams, GridNetwork};
use crate::metrics::{EffortAccumulator, EnsembleSummary};
use crate::spectral::SpectralData;
use crate::stochastic::{derive_seed, generate_noise, NoiseSpec};

/// Everything a simulation needs besides the disturbance.
#[derive(Debug, Clone, Copy)]
pub struct Scenario<'a> {
    pub grid: &'a GridNetwork,
    pub params: &'a DynamicParams,
    pub point: &'a OperatingPoint,
    /// Required by the modal model.
    pub spectral: Option<&'a SpectralData>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeedPolicy {
    /// Member `k` uses `derive_seed(seed, k)`.
    #[default]
    Independent,
    /// Every member reuses the template seed.
    Identical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleOptions {
    pub seeds: SeedPolicy,
    pub execution: Execution,
    /// Window lengths (seconds) at which the running effort is also reported.
    pub checkpoints: Vec<f64>,
    /// Integrator steps per noise sample.
    pub noise_substeps: usize,
}

impl Default for EnsembleOptions {
    fn default() -> Self {
        Self {
            seeds: SeedPolicy::Independent,
            execution: Execution::Parallel,
            checkpoints: Vec::new(),
            noise_substeps: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    pub horizon: f64,
    pub summary: EnsembleSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub mean: f64,
    /// Sample standard deviation; `None` for a single member.
    pub std: Option<f64>,
    pub count: usize,
    /// Effort of each member, in member order.
    pub values: Vec<f64>,
    /// Statistics of the running effort at each checkpoint.
    pub per_t_series: Vec<SeriesPoint>,
    /// Members that raised a simulation warning.
    pub warned_members: usize,
}

impl EnsembleStats {
    pub fn summary(&self) -> EnsembleSummary {
        EnsembleSummary {
            mean: self.mean,
            std: self.std,
            count: self.count,
        }
    }

    pub fn standard_error(&self) -> Option<f64> {
        self.summary().standard_error()
    }
}

/// Outcome of one simulated member.
#[derive(Debug, Clone, PartialEq)]
pub struct MemberEffort {
    pub effort: f64,
    pub checkpoints: Vec<f64>,
    pub warned: bool,
}

pub fn member_seed(template_seed: u64, index: usize) -> u64 {
    derive_seed(template_seed, index as u64)
}

/// Simulates one disturbance realization and returns its effort.
pub fn simulate_effort(
    scenario: &Scenario<'_>,
    noise_spec: &NoiseSpec,
    config: &SimulationConfig,
    checkpoints: &[f64],
    noise_substeps: usize,
) -> Result<MemberEffort> {
    let schedule = config.schedule()?;
    let noise_dt = config.dt * noise_substeps.max(1) as f64;
    let span = schedule.time(schedule.total);
    let noise = generate_noise(noise_spec, span.max(noise_dt), noise_dt)?;
    let (effort, values, warned) = match config.model {
        Model::Modal => {
            let spectral = scenario.spectral.ok_or_else(|| {
                Error::InvalidParameters("the modal model needs spectral data".into())
            })?;
            let mut acc = EffortAccumulator::modal(checkpoints.to_vec());
            simulate_modal_with(scenario.grid, spectral, scenario.params, &noise, config, &mut acc)?;
            (acc.value(), acc.checkpoint_values().to_vec(), false)
        }
        Model::Linear | Model::Nonlinear => {
            let mut acc = EffortAccumulator::network(scenario.params, checkpoints.to_vec());
            let warnings = simulate_network_with(
                scenario.grid,
                scenario.params,
                scenario.point,
                &noise,
                config,
                &mut acc,
            )?;
            (acc.value(), acc.checkpoint_values().to_vec(), !warnings.is_empty())
        }
    };
    let effort = effort.ok_or_else(|| Error::InvalidParameters("empty observation window".into()))?;
    Ok(MemberEffort {
        effort,
        checkpoints: values,
        warned,
    })
}

/// Runs `count` members and reduces their efforts to ensemble statistics.
pub fn ensemble_run(
    scenario: &Scenario<'_>,
    template: &NoiseSpec,
    count: usize,
    config: &SimulationConfig,
    options: &EnsembleOptions,
) -> Result<EnsembleStats> {
    if count == 0 {
        return Err(Error::InvalidParameters("ensemble needs at least one member".into()));
    }
    if options.checkpoints.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameters("checkpoints must be strictly increasing".into()));
    }
    if options.checkpoints.last().is_some_and(|&c| c > config.t_end * (1.0 + 1e-9)) {
        return Err(Error::InvalidParameters("checkpoint beyond the horizon".into()));
    }
    let outcomes = map_indexed(options.execution, count, |k| {
        let seed = match options.seeds {
            SeedPolicy::Independent => member_seed(template.seed(), k),
            SeedPolicy::Identical => template.seed(),
        };
        simulate_effort(
            scenario,
            &template.with_seed(seed),
            config,
            &options.checkpoints,
            options.noise_substeps,
        )
    });
    let members = outcomes
        .into_iter()
        .enumerate()
        .map(|(index, r)| {
            r.map_err(|e| Error::Member {
                index,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let values: Vec<f64> = members.iter().map(|m| m.effort).collect();
    let summary = EnsembleSummary::from_values(&values);
    let per_t_series = options
        .checkpoints
        .iter()
        .enumerate()
        .map(|(j, &horizon)| {
            let at: Vec<f64> = members.iter().map(|m| m.checkpoints[j]).collect();
            SeriesPoint {
                horizon,
                summary: EnsembleSummary::from_values(&at),
            }
        })
        .collect();
    Ok(EnsembleStats {
        mean: summary.mean,
        std: summary.std,
        count,
        values,
        per_t_series,
        warned_members: members.iter().filter(|m| m.warned).count(),
    })
}
