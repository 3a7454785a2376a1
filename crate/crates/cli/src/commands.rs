use std::path::Path;

use anyhow::{Context, Result};
use swingbench::dynamics::{simulate_linear, simulate_modal, simulate_nonlinear, Model, SimulationConfig};
use swingbench::equilibrium::{solve_steady_state, OperatingPoint};
use swingbench::metrics::{control_effort, control_effort_modal, rank_nodes, ShortLimit};
use swingbench::spectral::{analyze, time_scales, SpectralData};
use swingbench::stochastic::{generate_noise, AmplitudeRule, NoiseSpec};
use swingbench::workflow::{auto_step, run_compare, sample_buses, CompareRequest};
use swingbench::{
    assign_parameters, load_grid, BusId, BusKind, DynamicParams, GridNetwork, ParameterOptions, ParameterScheme,
};

use crate::args::{AmplitudeArgs, Cli, Command, ParamArgs, SchemeArg};
use crate::output::{num, opt_num, write_table, Header};
use crate::ConfigError;

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Validate { grid } => validate(grid),
        Command::Steadystate { grid, out } => steadystate(grid, out.as_deref()),
        Command::Spectrum {
            grid,
            params,
            modes,
            tau0,
            out,
        } => spectrum(grid, params, *modes, *tau0, out.as_deref()),
        Command::Noise {
            tau0,
            nodes,
            amp,
            seed,
            horizon,
            dt,
            out,
        } => noise(*tau0, nodes, amp, *seed, *horizon, *dt, out.as_deref()),
        Command::Simulate { .. } => simulate(&cli.command),
        Command::Compare { .. } => compare(&cli.command),
        Command::Rank {
            grid,
            params,
            tau0,
            amp,
            out,
        } => rank(grid, params, *tau0, *amp, out.as_deref()),
    }
}

fn config_error(message: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(ConfigError(message.into()))
}

fn read_grid(path: &Path) -> Result<GridNetwork> {
    load_grid(path).with_context(|| format!("loading {}", path.display()))
}

fn parameters(grid: &GridNetwork, args: &ParamArgs) -> Result<DynamicParams> {
    let scheme = scheme_of(args);
    let options = ParameterOptions {
        alpha: args.alpha,
        damping_floor: Some(args.damping_floor),
    };
    Ok(assign_parameters(grid, scheme, &options)?)
}

fn scheme_of(args: &ParamArgs) -> ParameterScheme {
    match args.scheme {
        SchemeArg::Homogeneous => ParameterScheme::HomogeneousRatio { gamma: args.gamma },
        SchemeArg::Realistic => ParameterScheme::Realistic,
    }
}

fn describe_params(header: &mut Header, grid: &Path, args: &ParamArgs) {
    header.push("grid", grid.display());
    let scheme = match args.scheme {
        SchemeArg::Homogeneous => format!("homogeneous gamma={}", num(args.gamma)),
        SchemeArg::Realistic => "realistic".to_string(),
    };
    header.push("scheme", scheme);
    header.push("alpha", num(args.alpha));
    header.push("damping_floor", num(args.damping_floor));
}

fn describe_time_scales(header: &mut Header, spectral: &SpectralData, params: &DynamicParams, tau0: Option<f64>) {
    let report = time_scales(spectral, params, tau0.unwrap_or(1.0));
    header.push("relaxation_time_s", num(report.relaxation_time));
    header.push("slowest_network_time_s", opt_num(report.network_times.first().copied()));
    header.push("fastest_network_time_s", opt_num(report.network_times.last().copied()));
    if let Some(t) = tau0 {
        header.push(&format!("regime_at_tau0_{}", num(t)), report.regime.as_str());
    }
}

fn amplitude_rule(grid: &GridNetwork, args: &AmplitudeArgs) -> AmplitudeRule {
    match args.amp {
        Some(a) => AmplitudeRule::Uniform(a),
        None => {
            let mean = grid.buses().iter().map(|b| b.power.abs()).sum::<f64>() / grid.len() as f64;
            AmplitudeRule::FractionOfPower {
                fraction: args.amp_fraction,
                floor: args.amp_floor * mean,
            }
        }
    }
}

fn describe_amplitude(header: &mut Header, rule: &AmplitudeRule) {
    match rule {
        AmplitudeRule::Uniform(a) => header.push("amplitude", format!("uniform {}", num(*a))),
        AmplitudeRule::FractionOfPower { fraction, floor } => header.push(
            "amplitude",
            format!("max({} |P_i|, {})", num(*fraction), num(*floor)),
        ),
    }
}

fn validate(path: &Path) -> Result<()> {
    let grid = read_grid(path)?;
    let generation: f64 = grid.buses().iter().map(|b| b.power.max(0.0)).sum();
    let imbalance: f64 = grid.buses().iter().map(|b| b.power).sum();
    let units = match grid.units() {
        swingbench::UnitSystem::PerUnit { base_mva } => format!("per_unit (base {base_mva} MVA)"),
        swingbench::UnitSystem::Megawatt => "mw".to_string(),
    };
    let zero = grid.buses().iter().filter(|b| b.power == 0.0).count();
    println!("grid: {}", path.display());
    println!("buses: {} ({} generators, {} loads, {} zero-power)", grid.len(), grid.generator_count(), grid.len() - grid.generator_count(), zero);
    println!("lines: {}", grid.lines().len());
    println!("units: {units}");
    println!("base_frequency_hz: {}", grid.base_frequency_hz());
    println!("total_generation: {}", num(generation));
    println!("power_imbalance: {}", num(imbalance));
    println!("connected: true");
    println!("status: ok");
    Ok(())
}

fn steadystate(path: &Path, out: Option<&Path>) -> Result<()> {
    let grid = read_grid(path)?;
    let point = solve_steady_state(&grid, None)?;
    let residuals = swingbench::equilibrium::mismatch(&grid, &point.angles);
    let mut header = Header::new("steadystate");
    header.push("grid", path.display());
    header.push("iterations", point.iterations);
    header.push("residual_norm", num(point.residual_norm));
    header.push("stable", point.stable);
    let rows = grid
        .buses()
        .iter()
        .zip(&point.angles)
        .zip(&residuals)
        .map(|((b, a), r)| vec![b.id.to_string(), num(*a), num(*r)]);
    write_table(out, &header, &cols(&["bus", "angle", "residual"]), rows)
}

fn cols(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn spectrum(path: &Path, args: &ParamArgs, modes: usize, tau0: Option<f64>, out: Option<&Path>) -> Result<()> {
    let grid = read_grid(path)?;
    let params = parameters(&grid, args)?;
    let point = solve_steady_state(&grid, None)?;
    let spectral = analyze(&grid, &point, &params)?;
    let mut header = Header::new("spectrum");
    describe_params(&mut header, path, args);
    describe_time_scales(&mut header, &spectral, &params, tau0);
    let n = spectral.len();
    let k = modes.min(n);
    let mut columns = cols(&["mode", "eigenvalue", "mode_time", "gamma_re", "gamma_im"]);
    columns.extend(grid.bus_ids().iter().map(|id| format!("u_{id}")));
    if k == 0 {
        columns.truncate(5);
    }
    let rows = (0..n).map(|a| {
        let lambda = spectral.eigenvalues[a];
        let time = if a == 0 { String::new() } else { num(1.0 / lambda) };
        let (gr, gi) = match &spectral.gammas {
            Some(g) => (num(g[a].re), num(g[a].im)),
            None => (String::new(), String::new()),
        };
        let mut row = vec![(a + 1).to_string(), num(lambda), time, gr, gi];
        if k > 0 {
            row.extend((0..n).map(|i| if a < k { num(spectral.component(a, i)) } else { String::new() }));
        }
        row
    });
    write_table(out, &header, &columns, rows)
}

fn expand_amplitudes(nodes: &[u32], amp: &[f64]) -> Result<Vec<f64>> {
    match amp.len() {
        1 => Ok(vec![amp[0]; nodes.len()]),
        n if n == nodes.len() => Ok(amp.to_vec()),
        n => Err(config_error(format!("{n} amplitudes given for {} nodes", nodes.len()))),
    }
}

fn noise(tau0: f64, nodes: &[u32], amp: &[f64], seed: u64, horizon: f64, dt: f64, out: Option<&Path>) -> Result<()> {
    let amplitudes = expand_amplitudes(nodes, amp)?;
    let ids: Vec<BusId> = nodes.iter().map(|&n| BusId(n)).collect();
    let spec = NoiseSpec::new(ids, amplitudes, tau0, seed)?;
    let path = generate_noise(&spec, horizon, dt)?;
    let mut header = Header::new("noise");
    header.push("tau0", num(tau0));
    header.push("seed", seed);
    header.push("T", num(horizon));
    header.push("dt", num(dt));
    let times = path.times();
    let rows = times.iter().enumerate().flat_map(|(k, t)| {
        path.rows()
            .iter()
            .map(move |r| vec![num(*t), r.bus.to_string(), num(r.values[k])])
    });
    write_table(out, &header, &cols(&["time", "bus", "value"]), rows)
}

fn simulate(command: &Command) -> Result<()> {
    let Command::Simulate {
        grid: path,
        params: param_args,
        model,
        tau0,
        horizon,
        dt,
        seed,
        record_stride,
        burn_in,
        nodes,
        amplitude,
        out,
    } = command
    else {
        unreachable!()
    };
    let grid = read_grid(path)?;
    let params = parameters(&grid, param_args)?;
    let point = solve_steady_state(&grid, None)?;
    let spectral = analyze(&grid, &point, &params)?;
    let model = Model::from(*model);
    let dt = match dt {
        Some(dt) => *dt,
        None => auto_step(model, &grid, &params, &point, &spectral, *tau0)?,
    };
    let ids: Vec<BusId> = if nodes.is_empty() {
        grid.bus_ids()
    } else {
        nodes.iter().map(|&n| BusId(n)).collect()
    };
    let rule = amplitude_rule(&grid, amplitude);
    let spec = NoiseSpec::new(ids.clone(), rule.amplitudes(&grid, &ids)?, *tau0, *seed)?;
    let config = SimulationConfig {
        record_stride: *record_stride,
        burn_in: *burn_in,
        ..SimulationConfig::new(*horizon, dt, model)
    };
    let span = *burn_in + *horizon * 1.0001 + dt * *record_stride as f64;
    let noise = generate_noise(&spec, span, dt)?;

    let mut header = Header::new("simulate");
    describe_params(&mut header, path, param_args);
    describe_amplitude(&mut header, &rule);
    header.push("model", model.as_str());
    header.push("tau0", num(*tau0));
    header.push("T", num(*horizon));
    header.push("dt", num(dt));
    header.push("burn_in", num(*burn_in));
    header.push("record_stride", record_stride);
    header.push("seed", seed);
    header.push("disturbed", ids.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(","));
    describe_time_scales(&mut header, &spectral, &params, Some(*tau0));

    let ids = grid.bus_ids();
    let n = grid.len();
    let (times, angles, freqs, effort) = match model {
        Model::Modal => {
            let traj = simulate_modal(&grid, &spectral, &params, &noise, &config)?;
            let effort = control_effort_modal(&traj)?;
            let sqrt_d: Vec<f64> = params.damping().iter().map(|d| d.sqrt()).collect();
            let mut angles = Vec::with_capacity(traj.times.len());
            let mut freqs = Vec::with_capacity(traj.times.len());
            for k in 0..traj.times.len() {
                let mut a = vec![0.0; n];
                let mut f = vec![0.0; n];
                for m in 1..n {
                    let (c, cd) = (traj.coefficients[(k, m - 1)], traj.derivatives[(k, m - 1)]);
                    for i in 0..n {
                        let u = spectral.component(m, i) / sqrt_d[i];
                        a[i] += c * u;
                        f[i] += cd * u;
                    }
                }
                angles.push(a);
                freqs.push(f);
            }
            (traj.times, angles, freqs, effort)
        }
        Model::Linear | Model::Nonlinear => {
            let traj = if model == Model::Linear {
                simulate_linear(&grid, &params, &point, &noise, &config)?
            } else {
                simulate_nonlinear(&grid, &params, &point, &noise, &config)?
            };
            for w in &traj.warnings {
                eprintln!("warning: {w:?}");
            }
            let effort = control_effort(&traj, &params)?;
            let k = traj.times.len();
            let angles = (0..k).map(|r| traj.angles.row(r).to_vec()).collect();
            let freqs = (0..k).map(|r| traj.frequencies.row(r).to_vec()).collect();
            (traj.times, angles, freqs, effort)
        }
    };
    header.push("control_effort", num(effort));
    let rows = times.iter().enumerate().flat_map(|(k, t)| {
        let (a, f) = (&angles[k], &freqs[k]);
        ids.iter()
            .enumerate()
            .map(move |(i, id)| vec![num(*t), id.to_string(), num(a[i]), num(f[i])])
    });
    write_table(out.as_deref(), &header, &cols(&["time", "bus", "angle", "frequency"]), rows)
}

fn parse_buses(grid: &GridNetwork, spec: Option<&str>) -> Result<Vec<BusId>> {
    match spec {
        None => Ok(sample_buses(grid, 20)),
        Some("all") => Ok(grid.bus_ids()),
        Some(list) => list
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<u32>()
                    .map(BusId)
                    .map_err(|_| config_error(format!("invalid bus id {s:?}")))
            })
            .collect(),
    }
}

fn compare(command: &Command) -> Result<()> {
    let Command::Compare {
        grid: path,
        params: param_args,
        tau0_list,
        members,
        seed,
        buses,
        horizon,
        horizon_factor,
        model,
        dt,
        burn_in,
        record_stride,
        amplitude,
        out,
    } = command
    else {
        unreachable!()
    };
    if *members == 0 {
        return Err(config_error("--members must be >= 1"));
    }
    let grid = read_grid(path)?;
    let buses = parse_buses(&grid, buses.as_deref())?;
    let rule = amplitude_rule(&grid, amplitude);
    let mut request = CompareRequest::new(scheme_of(param_args), tau0_list.clone(), buses, rule);
    request.parameter_options = ParameterOptions {
        alpha: param_args.alpha,
        damping_floor: Some(param_args.damping_floor),
    };
    request.members = *members;
    request.seed = *seed;
    request.horizon = *horizon;
    request.horizon_factor = *horizon_factor;
    request.model = model.map(Model::from);
    request.dt = *dt;
    request.burn_in = *burn_in;
    request.record_stride = *record_stride;
    let report = run_compare(&grid, &request)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }

    let mut header = Header::new("compare");
    describe_params(&mut header, path, param_args);
    describe_amplitude(&mut header, &rule);
    header.push("members", members);
    header.push("seed", seed);
    header.push("tau0_list", tau0_list.iter().map(|t| num(*t)).collect::<Vec<_>>().join(","));
    describe_time_scales(&mut header, &report.spectral, &report.params, None);
    for w in &report.warnings {
        header.push("warning", w);
    }
    let kinds: Vec<BusKind> = grid.buses().iter().map(|b| b.kind).collect();
    let rows = report.rows.iter().map(|r| {
        let kind = match kinds[grid.index_of(r.bus).unwrap_or(0)] {
            BusKind::Generator => "generator",
            BusKind::Load => "load",
        };
        let short = match r.analytic_short {
            ShortLimit::Finite(v) => num(v),
            ShortLimit::Diverges { .. } => "diverges".to_string(),
        };
        vec![
            num(r.tau0),
            r.bus.to_string(),
            kind.to_string(),
            num(r.amplitude),
            r.model.as_str().to_string(),
            num(r.dt),
            num(r.horizon),
            r.stats.count.to_string(),
            num(r.stats.mean),
            opt_num(r.stats.std),
            opt_num(r.stats.standard_error()),
            opt_num(r.analytic_general),
            short,
            num(r.analytic_long),
            r.regime.as_str().to_string(),
        ]
    });
    let columns = cols(&[
        "tau0",
        "bus",
        "kind",
        "amplitude",
        "model",
        "dt",
        "T",
        "members",
        "numeric_mean",
        "numeric_std",
        "numeric_sem",
        "analytic_general",
        "analytic_short",
        "analytic_long",
        "regime",
    ]);
    write_table(out.as_deref(), &header, &columns, rows)
}

fn rank(path: &Path, args: &ParamArgs, tau0: f64, amp: f64, out: Option<&Path>) -> Result<()> {
    let grid = read_grid(path)?;
    let params = parameters(&grid, args)?;
    let point: OperatingPoint = solve_steady_state(&grid, None)?;
    let spectral = analyze(&grid, &point, &params)?;
    let ranking = rank_nodes(&grid, &spectral, tau0, &AmplitudeRule::Uniform(amp))?;
    let mut header = Header::new("rank");
    describe_params(&mut header, path, args);
    header.push("tau0", num(tau0));
    header.push("amplitude", num(amp));
    describe_time_scales(&mut header, &spectral, &params, Some(tau0));
    let rows = ranking
        .iter()
        .enumerate()
        .map(|(k, (id, v))| vec![(k + 1).to_string(), id.to_string(), num(*v)]);
    write_table(out, &header, &cols(&["rank", "bus", "analytic_long"]), rows)
}
