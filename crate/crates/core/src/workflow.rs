//! End-to-end comparison of simulated and analytic control effort, shared by
//! the command-line tool and the acceptance suite.

use crate::dynamics::{max_network_step, Model, SimulationConfig};
use crate::ensemble::{ensemble_run, EnsembleOptions, EnsembleStats, Scenario};
use crate::equilibrium::{solve_steady_state, OperatingPoint};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::grid::{assign_parameters, BusId, DynamicParams, GridNetwork, ParameterOptions, ParameterScheme};
use crate::metrics::{analytic_general, analytic_long, analytic_short, ShortLimit};
use crate::spectral::{analyze, time_scales, Regime, SpectralData};
use crate::stochastic::{derive_seed, AmplitudeRule, NoiseSpec};

/// `count` buses spread evenly over the bus list (all buses if `count >= n`).
pub fn sample_buses(grid: &GridNetwork, count: usize) -> Vec<BusId> {
    let n = grid.len();
    let ids = grid.bus_ids();
    if count >= n {
        return ids;
    }
    if count == 1 {
        return vec![ids[0]];
    }
    (0..count)
        .map(|j| {
            let idx = ((j * (n - 1)) as f64 / (count - 1) as f64).round() as usize;
            ids[idx]
        })
        .collect()
}

/// Unrecorded lead-in long enough for every mode to forget the zero initial state:
/// five times the slowest of the swing damping time `2 m_i/d_i` and `1/λ_2`.
pub fn default_burn_in(params: &DynamicParams, spectral: &SpectralData) -> f64 {
    let swing = params
        .inertia()
        .iter()
        .zip(params.damping())
        .fold(0.0f64, |acc, (m, d)| acc.max(2.0 * m / d));
    let network = spectral.eigenvalues.get(1).map_or(0.0, |l| 1.0 / l);
    5.0 * swing.max(network)
}

/// Integrator step for a model: resolves the noise (`τ0/20`) and the fastest system dynamics.
pub fn auto_step(
    model: Model,
    grid: &GridNetwork,
    params: &DynamicParams,
    point: &OperatingPoint,
    spectral: &SpectralData,
    tau0: f64,
) -> Result<f64> {
    let noise_limit = tau0 / 20.0;
    let system_limit = match model {
        Model::Modal => {
            let inverse_gamma = params.inverse_gamma().ok_or(Error::HeterogeneousRatio)?;
            let lambda_max = spectral.lambda_max();
            if inverse_gamma > 0.0 {
                let gamma = 1.0 / inverse_gamma;
                0.2 / (lambda_max * gamma).sqrt().max(gamma)
            } else {
                0.03 / lambda_max
            }
        }
        Model::Linear | Model::Nonlinear => max_network_step(grid, params, point).0,
    };
    Ok(noise_limit.min(system_limit))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRequest {
    pub scheme: ParameterScheme,
    pub parameter_options: ParameterOptions,
    pub amplitude: AmplitudeRule,
    pub tau0_list: Vec<f64>,
    pub buses: Vec<BusId>,
    pub members: usize,
    pub seed: u64,
    /// Window length as a multiple of `τ0`, used when `horizon` is unset.
    pub horizon_factor: f64,
    pub horizon: Option<f64>,
    /// `None` picks the modal model when the ratio is homogeneous, linear otherwise.
    pub model: Option<Model>,
    pub dt: Option<f64>,
    pub burn_in: Option<f64>,
    pub record_stride: usize,
    pub execution: Execution,
}

impl CompareRequest {
    pub fn new(scheme: ParameterScheme, tau0_list: Vec<f64>, buses: Vec<BusId>, amplitude: AmplitudeRule) -> Self {
        Self {
            scheme,
            parameter_options: ParameterOptions::default(),
            amplitude,
            tau0_list,
            buses,
            members: 10,
            seed: 0,
            horizon_factor: 100.0,
            horizon: None,
            model: None,
            dt: None,
            burn_in: None,
            record_stride: 1,
            execution: Execution::Parallel,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub tau0: f64,
    pub bus: BusId,
    pub amplitude: f64,
    pub model: Model,
    pub dt: f64,
    pub burn_in: f64,
    pub horizon: f64,
    pub stats: EnsembleStats,
    pub analytic_general: Option<f64>,
    pub analytic_short: ShortLimit,
    pub analytic_long: f64,
    pub regime: Regime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub params: DynamicParams,
    pub point: OperatingPoint,
    pub spectral: SpectralData,
    pub rows: Vec<CompareRow>,
    pub warnings: Vec<String>,
}

/// Seed of the ensemble for τ0 number `tau_index` disturbed at `bus`.
pub fn scenario_seed(seed: u64, tau_index: usize, bus: BusId) -> u64 {
    derive_seed(derive_seed(seed, tau_index as u64), u64::from(bus.0))
}

/// Runs one single-bus ensemble per (τ0, bus) pair and evaluates the closed forms alongside.
pub fn run_compare(grid: &GridNetwork, request: &CompareRequest) -> Result<CompareReport> {
    let params = assign_parameters(grid, request.scheme, &request.parameter_options)?;
    let point = solve_steady_state(grid, None)?;
    let spectral = analyze(grid, &point, &params)?;
    run_compare_with(grid, &params, &point, &spectral, request)
}

/// As [`run_compare`] with precomputed parameters, operating point and spectrum.
pub fn run_compare_with(
    grid: &GridNetwork,
    params: &DynamicParams,
    point: &OperatingPoint,
    spectral: &SpectralData,
    request: &CompareRequest,
) -> Result<CompareReport> {
    if request.tau0_list.is_empty() || request.buses.is_empty() {
        return Err(Error::InvalidParameters("need at least one tau0 and one bus".into()));
    }
    if request.members == 0 {
        return Err(Error::InvalidParameters("need at least one member".into()));
    }
    let model = request.model.unwrap_or(if params.inverse_gamma().is_some() {
        Model::Modal
    } else {
        Model::Linear
    });
    let burn_in = request.burn_in.unwrap_or_else(|| default_burn_in(params, spectral));
    let mut warnings = Vec::new();
    if request.members < 2 {
        warnings.push("fewer than two members: ensemble spread is undefined".to_string());
    }
    if !point.stable {
        warnings.push("operating point is not linearly stable".to_string());
    }

    let mut rows = Vec::with_capacity(request.tau0_list.len() * request.buses.len());
    for (j, &tau0) in request.tau0_list.iter().enumerate() {
        let horizon = request.horizon.unwrap_or(request.horizon_factor * tau0);
        if horizon < 50.0 * tau0 {
            warnings.push(format!(
                "tau0 = {tau0}: horizon {horizon} s is shorter than 50 tau0; expect finite-horizon bias"
            ));
        }
        let dt = match request.dt {
            Some(dt) => dt,
            None => auto_step(model, grid, params, point, spectral, tau0)?,
        };
        let config = SimulationConfig {
            record_stride: request.record_stride,
            burn_in,
            ..SimulationConfig::new(horizon, dt, model)
        };
        let report = time_scales(spectral, params, tau0);
        for &bus in &request.buses {
            let amplitude = request.amplitude.amplitude(grid, bus)?;
            let spec = NoiseSpec::new(vec![bus], vec![amplitude], tau0, scenario_seed(request.seed, j, bus))?;
            let scenario = Scenario {
                grid,
                params,
                point,
                spectral: Some(spectral),
            };
            let options = EnsembleOptions {
                execution: request.execution,
                ..EnsembleOptions::default()
            };
            let stats = ensemble_run(&scenario, &spec, request.members, &config, &options)?;
            if stats.warned_members > 0 {
                warnings.push(format!(
                    "tau0 = {tau0}, bus {bus}: {} members left the linear-stability region",
                    stats.warned_members
                ));
            }
            let general = match analytic_general(grid, spectral, params, &spec) {
                Ok(v) => Some(v),
                Err(Error::HeterogeneousRatio) => None,
                Err(e) => return Err(e),
            };
            rows.push(CompareRow {
                tau0,
                bus,
                amplitude,
                model,
                dt,
                burn_in,
                horizon,
                stats,
                analytic_general: general,
                analytic_short: analytic_short(grid, params, &spec)?,
                analytic_long: analytic_long(grid, spectral, &spec)?,
                regime: report.regime,
            });
        }
    }
    Ok(CompareReport {
        params: params.clone(),
        point: point.clone(),
        spectral: spectral.clone(),
        rows,
        warnings,
    })
}
