//! Limit-shape statistics of the random partitions induced by the cycle
//! distribution: asymptotic per-length fractions, the cumulative shape
//! curves for finite and macroscopic elements, and expected infinite-cycle
//! counts, with empirical counterparts built from sampler output.
//!
//! The number of length-k elements per particle converges to
//! `rho_k / (k rho)`, i.e.
//!
//! ```text
//! r_k / N -> z^k / (k^(d/2+1) rho lambda^d)        rho lambda^d <= zeta(d/2)
//!            1   / (k^(d/2+1) rho lambda^d)        rho lambda^d  > zeta(d/2)
//! ```
//!
//! where `z` solves `Li_{d/2}(z) = rho lambda^d`. Both branches are
//! normalized by `rho lambda^d`, which is what the total-mass identity
//! `sum_k k (r_k / N) = min(1, rho_c / rho)` requires and what the exact
//! sampler reproduces; they agree at the critical point.

use crate::error::{Error, Result};
use crate::ideal::PartitionSample;
use crate::special::{invert_polylog, polylog, riemann_zeta, Tolerance};
use serde::Serialize;

/// Scaling of an empirical shape curve.
#[derive(Clone, Copy, Debug, Serialize)]
pub enum ShapeScaling {
    /// Count cycles of length >= t, divided by N.
    Finite,
    /// Count cycles of length >= a t, the scale `a = N rho_0^{N,L} / rho`;
    /// the limiting curve is `(ln 1/t)_+`.
    Macroscopic { scale: f64 },
}

/// A shape curve sampled on a grid; values are nonincreasing in t.
#[derive(Clone, Debug, Serialize)]
pub struct ShapeCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// standard error of each averaged point
    pub std_errors: Vec<f64>,
    pub scaling: ShapeScaling,
}

/// 40 log-spaced grid points in [0.02, 2], the default window.
pub fn default_grid() -> Vec<f64> {
    log_grid(0.02, 2.0, 40)
}

pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2 && lo > 0.0 && hi > lo);
    let step = (hi / lo).ln() / (count - 1) as f64;
    (0..count).map(|i| lo * (step * i as f64).exp()).collect()
}

/// Limiting `r_k / N`, the per-particle number of length-k elements.
pub fn limit_cycle_fraction(
    k: usize,
    dim: usize,
    rho_lambda_d: f64,
    tol: Tolerance,
) -> Result<f64> {
    if k == 0 || dim < 3 {
        return Err(Error::domain(
            "limit_cycle_fraction needs k >= 1 and d >= 3",
        ));
    }
    let s = dim as f64 / 2.0;
    let zeta = riemann_zeta(s, tol)?;
    let kf = k as f64;
    let denom = kf.powf(s + 1.0) * rho_lambda_d;
    if rho_lambda_d > zeta {
        Ok(1.0 / denom)
    } else {
        let z = invert_polylog(s, rho_lambda_d, tol)?;
        Ok(z.powi(k as i32) / denom)
    }
}

/// Closed-form finite-element shape `sum_{k >= t} (r_k / N)`.
pub fn finite_shape(t: f64, dim: usize, rho_lambda_d: f64, tol: Tolerance) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::domain("finite_shape needs t > 0"));
    }
    let k0 = t.ceil().max(1.0) as usize;
    let s = dim as f64 / 2.0;
    let zeta = riemann_zeta(s, tol)?;
    let z = if rho_lambda_d > zeta {
        1.0
    } else {
        invert_polylog(s, rho_lambda_d, tol)?
    };
    // tail of sum_k z^k / k^(s+1) from k0, via the full series minus the head
    let full = polylog(s + 1.0, z, tol)?;
    let mut head = 0.0;
    for k in 1..k0 {
        head += z.powi(k as i32) / (k as f64).powf(s + 1.0);
    }
    Ok((full - head) / rho_lambda_d)
}

/// The macroscopic-element limit curve `(ln 1/t)_+`.
pub fn macroscopic_shape(t: f64) -> f64 {
    if t >= 1.0 {
        0.0
    } else {
        (1.0 / t).ln()
    }
}

/// Expected number of cycles containing at least the fraction `x` of all
/// particles: `ln(rho_0 / (x rho))` for `x < rho_0 / rho`, zero beyond.
pub fn infinite_cycle_count(x: f64, rho0: f64, rho: f64) -> f64 {
    if !(x > 0.0) || rho0 <= 0.0 {
        return 0.0;
    }
    let frac = rho0 / rho;
    if x >= frac {
        0.0
    } else {
        (frac / x).ln()
    }
}

/// Averages the sampled partitions into an empirical shape curve on `grid`.
///
/// `Finite` counts `(1/N) #{cycles >= t}`; `Macroscopic` counts cycles of
/// length at least `scale * t` without any prefactor, matching the curve
/// `(ln 1/t)_+`.
pub fn empirical_shape(
    samples: &[PartitionSample],
    scaling: ShapeScaling,
    grid: &[f64],
) -> Result<ShapeCurve> {
    if samples.is_empty() || grid.is_empty() {
        return Err(Error::domain(
            "empirical_shape needs samples and a nonempty grid",
        ));
    }
    let mut sums = vec![0.0; grid.len()];
    let mut squares = vec![0.0; grid.len()];
    for sample in samples {
        for (i, &t) in grid.iter().enumerate() {
            let (threshold, norm) = match scaling {
                ShapeScaling::Finite => (t, sample.total as f64),
                ShapeScaling::Macroscopic { scale } => (scale * t, 1.0),
            };
            // lengths are sorted descending
            let count = sample
                .lengths
                .partition_point(|&len| (len as f64) >= threshold);
            let v = count as f64 / norm;
            sums[i] += v;
            squares[i] += v * v;
        }
    }
    let m = samples.len() as f64;
    let values: Vec<f64> = sums.iter().map(|s| s / m).collect();
    let std_errors: Vec<f64> = values
        .iter()
        .zip(&squares)
        .map(|(&mean, &sq)| {
            if samples.len() < 2 {
                0.0
            } else {
                let var = (sq / m - mean * mean).max(0.0) * m / (m - 1.0);
                (var / m).sqrt()
            }
        })
        .collect();
    Ok(ShapeCurve {
        grid: grid.to_vec(),
        values,
        std_errors,
        scaling,
    })
}
