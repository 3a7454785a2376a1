use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "swingbench", version, about = "Power-grid response to correlated power fluctuations")]
pub struct Cli {
    /// Worker threads for ensemble members (default: available parallelism).
    #[arg(long, global = true, env = "SWINGBENCH_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a grid file and print a summary.
    Validate {
        grid: PathBuf,
    },
    /// Solve for the synchronous operating point.
    Steadystate {
        grid: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Eigenvalues and mode times of the damping-normalized Laplacian.
    Spectrum {
        grid: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
        /// Include eigenvector components for the k lowest modes.
        #[arg(long, default_value_t = 0)]
        modes: usize,
        /// Correlation time used for the regime report.
        #[arg(long)]
        tau0: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample an exponentially correlated disturbance path.
    Noise {
        #[arg(long)]
        tau0: f64,
        /// Comma-separated bus ids.
        #[arg(long, value_delimiter = ',', required = true)]
        nodes: Vec<u32>,
        /// One amplitude for all nodes or one per node.
        #[arg(long, value_delimiter = ',', required = true)]
        amp: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "T")]
        horizon: f64,
        #[arg(long)]
        dt: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate one disturbance realization.
    Simulate {
        grid: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum, default_value_t = ModelArg::Linear)]
        model: ModelArg,
        #[arg(long)]
        tau0: f64,
        #[arg(long = "T")]
        horizon: f64,
        /// Integrator step; defaults to the automatic choice for the model.
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        record_stride: usize,
        /// Unrecorded lead-in in seconds (default 0).
        #[arg(long, default_value_t = 0.0)]
        burn_in: f64,
        /// Disturbed bus ids (default: all buses).
        #[arg(long, value_delimiter = ',')]
        nodes: Vec<u32>,
        #[command(flatten)]
        amplitude: AmplitudeArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Ensemble-mean effort against the closed forms, per tau0 and disturbed bus.
    Compare {
        grid: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        tau0_list: Vec<f64>,
        #[arg(long, default_value_t = 10)]
        members: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Disturbed buses: comma-separated ids or "all" (default: 20 evenly spaced buses).
        #[arg(long)]
        buses: Option<String>,
        /// Window length in seconds; defaults to horizon-factor * tau0.
        #[arg(long = "T")]
        horizon: Option<f64>,
        #[arg(long, default_value_t = 100.0)]
        horizon_factor: f64,
        #[arg(long, value_enum)]
        model: Option<ModelArg>,
        #[arg(long)]
        dt: Option<f64>,
        /// Unrecorded lead-in in seconds; defaults to five slowest relaxation times.
        #[arg(long)]
        burn_in: Option<f64>,
        #[arg(long, default_value_t = 1)]
        record_stride: usize,
        #[command(flatten)]
        amplitude: AmplitudeArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank buses by long-correlation effort of a single-bus disturbance.
    Rank {
        grid: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        tau0: f64,
        /// Uniform disturbance amplitude.
        #[arg(long, default_value_t = 1.0)]
        amp: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Homogeneous,
    Realistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Nonlinear,
    Linear,
    Modal,
}

impl From<ModelArg> for swingbench::dynamics::Model {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Nonlinear => Self::Nonlinear,
            ModelArg::Linear => Self::Linear,
            ModelArg::Modal => Self::Modal,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ParamArgs {
    #[arg(long, value_enum, default_value_t = SchemeArg::Homogeneous)]
    pub scheme: SchemeArg,
    /// Damping-to-inertia ratio for the homogeneous scheme, 1/s.
    #[arg(long, default_value_t = 0.4)]
    pub gamma: f64,
    /// Damping per rated MW: d = alpha |P| / omega0.
    #[arg(long, default_value_t = 1.5)]
    pub alpha: f64,
    /// Damping of zero-power buses, MW s/rad.
    #[arg(long, default_value_t = 0.01)]
    pub damping_floor: f64,
}

#[derive(Debug, Clone, Args)]
pub struct AmplitudeArgs {
    /// Uniform disturbance amplitude; overrides the power-proportional rule.
    #[arg(long)]
    pub amp: Option<f64>,
    /// Amplitude as a fraction of |P_i|.
    #[arg(long, default_value_t = 0.01)]
    pub amp_fraction: f64,
    /// Smallest amplitude, as a fraction of the mean |P_i|.
    #[arg(long, default_value_t = 0.01)]
    pub amp_floor: f64,
}
