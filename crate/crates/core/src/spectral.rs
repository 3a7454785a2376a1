//! Weighted Laplacian at an operating point, its damping-normalized spectrum,
//! and the characteristic time scales of the grid.

use num_complex::Complex64;

use crate::equilibrium::OperatingPoint;
use crate::error::{Error, Result};
use crate::grid::{DynamicParams, GridNetwork};
use crate::linalg::{self, Matrix};

/// Relative threshold below which an eigenvalue counts as zero.
pub const KERNEL_TOLERANCE: f64 = 1e-9;

/// `L_ij = -b_ij cos(θ_i - θ_j)`, `L_ii = Σ_k b_ik cos(θ_i - θ_k)`.
pub fn laplacian_matrix(grid: &GridNetwork, angles: &[f64]) -> Matrix {
    let n = grid.len();
    let mut l = Matrix::zeros(n, n);
    for e in grid.edges() {
        let w = e.susceptance * (angles[e.a] - angles[e.b]).cos();
        l[(e.a, e.b)] -= w;
        l[(e.b, e.a)] -= w;
        l[(e.a, e.a)] += w;
        l[(e.b, e.b)] += w;
    }
    l
}

/// Edge weights `b_ij cos(θ_i - θ_j)` in the order of [`GridNetwork::edges`].
pub fn edge_weights(grid: &GridNetwork, angles: &[f64]) -> Vec<f64> {
    grid.edges()
        .iter()
        .map(|e| e.susceptance * (angles[e.a] - angles[e.b]).cos())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedLaplacian {
    matrix: Matrix,
    angles: Vec<f64>,
}

impl WeightedLaplacian {
    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    /// Angles of the operating point the matrix was built at.
    pub fn angles(&self) -> &[f64] {
        &self.angles
    }
}

pub fn build_laplacian(grid: &GridNetwork, point: &OperatingPoint) -> WeightedLaplacian {
    WeightedLaplacian {
        matrix: laplacian_matrix(grid, &point.angles),
        angles: point.angles.clone(),
    }
}

/// `D^{-1/2} L D^{-1/2}`.
pub fn normalize_laplacian(l: &WeightedLaplacian, params: &DynamicParams) -> Result<Matrix> {
    normalize_matrix(l.matrix(), params.damping())
}

fn normalize_matrix(l: &Matrix, damping: &[f64]) -> Result<Matrix> {
    if l.rows() != damping.len() || !l.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} Laplacian with {} damping values",
            l.rows(),
            l.cols(),
            damping.len()
        )));
    }
    if let Some((i, d)) = damping.iter().enumerate().find(|(_, d)| !(**d > 0.0)) {
        return Err(Error::InvalidParameters(format!("damping at node {i} must be > 0, got {d}")));
    }
    let s: Vec<f64> = damping.iter().map(|d| 1.0 / d.sqrt()).collect();
    Ok(Matrix::from_fn(l.rows(), l.cols(), |i, j| s[i] * l[(i, j)] * s[j]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    /// Ascending eigenvalues of the normalized Laplacian.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns.
    pub eigenvectors: Matrix,
    /// `√d_i / √Σ d_j`.
    pub zero_mode: Vec<f64>,
    /// `Γ_α = sqrt(γ² - 4 λ_α γ)` when the ratio is homogeneous.
    pub gammas: Option<Vec<Complex64>>,
    damping: Vec<f64>,
}

impl SpectralData {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Damping vector the spectrum was normalized with.
    pub fn damping(&self) -> &[f64] {
        &self.damping
    }

    /// Component `i` of eigenvector `alpha` (both zero-based).
    pub fn component(&self, alpha: usize, i: usize) -> f64 {
        self.eigenvectors[(i, alpha)]
    }

    /// Weight of a unit power injection at node `i` in the forcing of mode `alpha`: `u_{α,i} / √d_i`.
    pub fn forcing_weight(&self, alpha: usize, i: usize) -> f64 {
        self.component(alpha, i) / self.damping[i].sqrt()
    }
}

/// Full eigendecomposition of a normalized Laplacian.
///
/// Each eigenvector is signed so that its largest-magnitude component is positive.
pub fn decompose(ld: &Matrix, params: &DynamicParams) -> Result<SpectralData> {
    let n = ld.rows();
    if n != params.len() {
        return Err(Error::DimensionMismatch(format!(
            "{n}x{n} matrix with {} parameter entries",
            params.len()
        )));
    }
    let (eigenvalues, mut vectors) = linalg::symmetric_eigen(ld)?;
    for j in 0..n {
        let mut pivot = 0;
        for i in 1..n {
            if vectors[(i, j)].abs() > vectors[(pivot, j)].abs() {
                pivot = i;
            }
        }
        if vectors[(pivot, j)] < 0.0 {
            for i in 0..n {
                vectors[(i, j)] = -vectors[(i, j)];
            }
        }
    }

    let lambda_max = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = KERNEL_TOLERANCE * lambda_max;
    if let Some(&neg) = eigenvalues.iter().find(|&&v| v < -tol) {
        return Err(Error::Indefinite { eigenvalue: neg });
    }
    let kernel = eigenvalues.iter().filter(|v| v.abs() <= tol).count();
    if kernel > 1 && n > 1 {
        return Err(Error::DegenerateKernel { count: kernel });
    }

    let damping = params.damping().to_vec();
    let total: f64 = linalg::compensated_sum(damping.iter().copied());
    let zero_mode = damping.iter().map(|d| (d / total).sqrt()).collect();
    let gammas = params.gamma().map(|g| {
        eigenvalues
            .iter()
            .map(|&lambda| Complex64::new(g * g - 4.0 * lambda * g, 0.0).sqrt())
            .collect()
    });

    Ok(SpectralData {
        eigenvalues,
        eigenvectors: vectors,
        zero_mode,
        gammas,
        damping,
    })
}

/// Builds, normalizes and decomposes the Laplacian at `point`.
pub fn analyze(grid: &GridNetwork, point: &OperatingPoint, params: &DynamicParams) -> Result<SpectralData> {
    let l = build_laplacian(grid, point);
    let ld = normalize_laplacian(&l, params)?;
    decompose(&ld, params)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    NoiseFast,
    NoiseSlow,
    Intermediate,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::NoiseFast => "noise_fast",
            Regime::NoiseSlow => "noise_slow",
            Regime::Intermediate => "intermediate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeScaleReport {
    /// `1/λ_α` for every non-zero mode, seconds.
    pub network_times: Vec<f64>,
    /// `⟨m⟩/⟨d⟩`, seconds.
    pub relaxation_time: f64,
    pub tau0: f64,
    pub regime: Regime,
}

impl TimeScaleReport {
    /// Longest positive system time scale.
    pub fn slowest(&self) -> f64 {
        self.network_times
            .iter()
            .copied()
            .fold(self.relaxation_time, f64::max)
    }

    /// Shortest positive system time scale.
    pub fn fastest(&self) -> f64 {
        let mut t = self.network_times.iter().copied().fold(f64::INFINITY, f64::min);
        if self.relaxation_time > 0.0 {
            t = t.min(self.relaxation_time);
        }
        t
    }
}

pub fn time_scales(spectral: &SpectralData, params: &DynamicParams, tau0: f64) -> TimeScaleReport {
    let network_times = spectral.eigenvalues.iter().skip(1).map(|l| 1.0 / l).collect();
    let n = params.len() as f64;
    let mean_m = linalg::compensated_sum(params.inertia().iter().copied()) / n;
    let mean_d = linalg::compensated_sum(params.damping().iter().copied()) / n;
    let mut report = TimeScaleReport {
        network_times,
        relaxation_time: mean_m / mean_d,
        tau0,
        regime: Regime::Intermediate,
    };
    report.regime = if tau0 > 10.0 * report.slowest() {
        Regime::NoiseSlow
    } else if tau0 < 0.1 * report.fastest() {
        Regime::NoiseFast
    } else {
        Regime::Intermediate
    };
    report
}
