//! Direct quadrature of the integral solution of the homogeneous-ratio modal equations:
//!
//! `c_α(t) = γ e^{-(γ+Γ_α)t/2} ∫_0^t e^{Γ_α t'} ∫_0^{t'} e^{(γ-Γ_α)t''/2} f_α(t'') dt'' dt'`
//!
//! with complex `Γ_α` for underdamped modes. The exponentials grow like
//! `e^{γ t}`, so this is meant as a reference for moderate `γ t`.

use num_complex::Complex64;

use super::{interpolate, resolve_forcing, substeps};
use crate::error::{Error, Result};
use crate::grid::{DynamicParams, GridNetwork};
use crate::spectral::SpectralData;
use crate::stochastic::{step_count, NoisePath};

/// Modal coefficients `c_α(t)` for every mode, zero mode included.
///
/// Quadrature uses the trapezoidal rule on a uniform grid of spacing `quad_dt`,
/// which must evenly divide the noise sampling step.
pub fn closed_form_coefficients(
    grid: &GridNetwork,
    spectral: &SpectralData,
    params: &DynamicParams,
    noise: &NoisePath,
    t: f64,
    quad_dt: f64,
) -> Result<Vec<f64>> {
    let gamma = params.gamma().ok_or(Error::HeterogeneousRatio)?;
    let gammas = spectral.gammas.as_ref().ok_or(Error::HeterogeneousRatio)?;
    if !(quad_dt > 0.0) || quad_dt > noise.dt() * (1.0 + 1e-12) {
        return Err(Error::InvalidParameters(format!(
            "quadrature step {quad_dt} s is coarser than the noise step {} s",
            noise.dt()
        )));
    }
    let q = substeps(noise, quad_dt)?;
    if !(t >= 0.0) || t > noise.duration() * (1.0 + 1e-12) {
        return Err(Error::PathTooShort {
            available: noise.duration(),
            required: t,
        });
    }
    let m = if t == 0.0 { 0 } else { step_count(t, quad_dt) };
    if (m as f64 * quad_dt - t).abs() > 1e-9 * t {
        return Err(Error::InvalidParameters(format!(
            "evaluation time {t} s is not on the quadrature grid of step {quad_dt} s"
        )));
    }
    let h = quad_dt;
    let forcing = resolve_forcing(grid, noise)?;
    let samples: Vec<Vec<f64>> = forcing
        .iter()
        .map(|f| (0..=m).map(|j| interpolate(f.samples, j, q, 0.0)).collect())
        .collect();

    let n = spectral.len();
    let mut out = Vec::with_capacity(n);
    for a in 0..n {
        let g = gammas[a];
        let inner_rate = (Complex64::from(gamma) - g) * 0.5;
        let f: Vec<f64> = (0..=m)
            .map(|j| {
                forcing
                    .iter()
                    .zip(&samples)
                    .map(|(fr, s)| spectral.forcing_weight(a, fr.node) * s[j])
                    .sum()
            })
            .collect();
        let mut inner = Complex64::new(0.0, 0.0);
        let mut outer = Complex64::new(0.0, 0.0);
        let mut prev_inner_integrand = f[0] * Complex64::new(1.0, 0.0);
        let mut prev_outer_integrand = Complex64::new(0.0, 0.0);
        for j in 1..=m {
            let s = j as f64 * h;
            let integrand = (inner_rate * s).exp() * f[j];
            inner += (prev_inner_integrand + integrand) * (0.5 * h);
            prev_inner_integrand = integrand;
            let outer_integrand = (g * s).exp() * inner;
            outer += (prev_outer_integrand + outer_integrand) * (0.5 * h);
            prev_outer_integrand = outer_integrand;
        }
        let prefactor = ((Complex64::from(-gamma) - g) * (0.5 * t)).exp() * gamma;
        out.push((prefactor * outer).re);
    }
    Ok(out)
}

/// Normalized angle response `δφ_i(t) = Σ_α c_α(t) u_{α,i}`.
pub fn closed_form_response(
    grid: &GridNetwork,
    spectral: &SpectralData,
    params: &DynamicParams,
    noise: &NoisePath,
    t: f64,
    quad_dt: f64,
) -> Result<Vec<f64>> {
    let c = closed_form_coefficients(grid, spectral, params, noise, t, quad_dt)?;
    let n = spectral.len();
    Ok((0..n)
        .map(|i| (0..n).map(|a| c[a] * spectral.component(a, i)).sum())
        .collect())
}
