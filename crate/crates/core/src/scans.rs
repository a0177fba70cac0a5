//! Configuration-driven finite-size-scaling scans: condensate fraction with
//! extrapolation, tail-mass thresholds, macroscopic-cycle mass, slowly
//! growing cutoffs, the density-matrix profile and sampler-based shape
//! comparisons. Grid points run in parallel; outputs are sorted by particle
//! number before they are written, so reruns are bit-identical for a fixed
//! config.

use crate::error::{Error, Result};
use crate::ideal::{critical_density, CanonicalEnsemble, CycleDensityTable, SystemSpec};
use crate::numeric::fit_line;
use crate::shape::{
    empirical_shape, finite_shape, infinite_cycle_count, log_grid, macroscopic_shape, ShapeScaling,
};
use crate::special::Tolerance;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Parameters shared by every scan.
#[derive(Clone, Debug, Serialize)]
pub struct ScanConfig {
    pub dim: usize,
    pub lambda: f64,
    /// reduced density `rho lambda^d`
    pub rho_lambda_d: f64,
    /// increasing particle numbers
    pub n_grid: Vec<usize>,
    /// prefactor of the `N^(2/d)` length threshold
    pub threshold_c: f64,
    /// macroscopic fraction cut
    pub epsilon: f64,
    /// exponent of the slow cutoff `K_N = floor(N^x)`
    pub slow_exponent: f64,
    /// exponent of the comparison threshold `N^gamma`
    pub gamma: f64,
    pub seed: u64,
    pub rel_eps: f64,
}

impl ScanConfig {
    pub fn new(dim: usize, lambda: f64, rho_lambda_d: f64, n_grid: Vec<usize>) -> Result<Self> {
        if n_grid.is_empty() || n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(
                "the N grid must be increasing and nonempty".into(),
            ));
        }
        Ok(ScanConfig {
            dim,
            lambda,
            rho_lambda_d,
            n_grid,
            threshold_c: 1.0,
            epsilon: 0.1,
            slow_exponent: 0.9,
            gamma: 0.5,
            seed: 1,
            rel_eps: 1e-12,
        })
    }

    pub fn tolerance(&self) -> Tolerance {
        Tolerance {
            rel_eps: self.rel_eps,
        }
    }

    fn system(&self, n: usize) -> Result<SystemSpec> {
        SystemSpec::from_reduced_density(self.dim, self.lambda, self.rho_lambda_d, n)
    }

    fn require_bec_dimension(&self) -> Result<()> {
        if self.dim < 3 {
            return Err(Error::Config("condensation scans need d >= 3".into()));
        }
        Ok(())
    }

    /// Densities for every grid point, largest last.
    fn tables(&self) -> Result<Vec<CycleDensityTable>> {
        let tol = self.tolerance();
        let mut tables: Vec<(usize, CycleDensityTable)> = self
            .n_grid
            .par_iter()
            .map(|&n| {
                let sys = self.system(n)?;
                Ok((n, CanonicalEnsemble::new(sys, tol)?.cycle_densities()))
            })
            .collect::<Result<Vec<_>>>()?;
        tables.sort_by_key(|(n, _)| *n);
        Ok(tables.into_iter().map(|(_, t)| t).collect())
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CondensateRow {
    pub particles: usize,
    pub box_side: f64,
    pub condensate_fraction: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CondensateScan {
    pub rows: Vec<CondensateRow>,
    /// intercept of the `a + b N^(-1/d)` fit over the four largest sizes
    pub extrapolated: f64,
    pub fit_slope: f64,
    /// limiting fraction `max(0, 1 - zeta(d/2) / (rho lambda^d))`
    pub reference: f64,
}

/// Condensate fraction per grid point with the finite-size extrapolation.
pub fn scan_condensate(cfg: &ScanConfig) -> Result<CondensateScan> {
    cfg.require_bec_dimension()?;
    let rows: Vec<CondensateRow> = cfg
        .tables()?
        .iter()
        .map(|t| CondensateRow {
            particles: t.system.particles,
            box_side: t.system.box_side,
            condensate_fraction: t.condensate_density() / t.system.density(),
        })
        .collect();
    let take = rows.len().min(4);
    let fit_rows = &rows[rows.len() - take..];
    let xs: Vec<f64> = fit_rows
        .iter()
        .map(|r| (r.particles as f64).powf(-1.0 / cfg.dim as f64))
        .collect();
    let ys: Vec<f64> = fit_rows.iter().map(|r| r.condensate_fraction).collect();
    let (a, b) = fit_line(&xs, &ys);
    let rho_c_over_rho =
        critical_density(cfg.dim, cfg.lambda) * cfg.lambda.powi(cfg.dim as i32) / cfg.rho_lambda_d;
    Ok(CondensateScan {
        rows,
        extrapolated: a,
        fit_slope: b,
        reference: (1.0 - rho_c_over_rho).max(0.0),
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TailRow {
    pub particles: usize,
    /// length threshold `c N^(2/d)`
    pub power_threshold: usize,
    /// density fraction above it
    pub above_power: f64,
    /// comparison threshold `N^gamma`
    pub gamma_threshold: usize,
    pub above_gamma: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TailScan {
    pub rows: Vec<TailRow>,
}

/// Mass above the condensation length scale `c N^(2/d)` and above the
/// slower-growing comparison `N^gamma`.
pub fn scan_tail_threshold(cfg: &ScanConfig) -> Result<TailScan> {
    cfg.require_bec_dimension()?;
    let rows = cfg
        .tables()?
        .iter()
        .map(|t| {
            let n = t.system.particles;
            let rho = t.system.density();
            let cut = (cfg.threshold_c * (n as f64).powf(2.0 / cfg.dim as f64)).floor() as usize;
            let gcut = (n as f64).powf(cfg.gamma).floor() as usize;
            TailRow {
                particles: n,
                power_threshold: cut,
                above_power: t.band_density(cut + 1, n) / rho,
                gamma_threshold: gcut,
                above_gamma: t.band_density(gcut + 1, n) / rho,
            }
        })
        .collect();
    Ok(TailScan { rows })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MacroRow {
    pub particles: usize,
    pub epsilon: f64,
    /// density fraction in cycles longer than `epsilon N`
    pub above_fraction: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MacroScan {
    pub rows: Vec<MacroRow>,
    /// `(rho_0 / rho - epsilon)_+` in the limit
    pub reference: f64,
}

/// Mass of cycles longer than `epsilon N` against the macroscopic-share law.
pub fn scan_macroscopic(cfg: &ScanConfig) -> Result<MacroScan> {
    cfg.require_bec_dimension()?;
    let rows: Vec<MacroRow> = cfg
        .tables()?
        .iter()
        .map(|t| {
            let n = t.system.particles;
            let cut = (cfg.epsilon * n as f64).floor() as usize;
            MacroRow {
                particles: n,
                epsilon: cfg.epsilon,
                above_fraction: t.band_density(cut + 1, n) / t.system.density(),
            }
        })
        .collect();
    let rho_c_over_rho =
        critical_density(cfg.dim, cfg.lambda) * cfg.lambda.powi(cfg.dim as i32) / cfg.rho_lambda_d;
    let condensate = (1.0 - rho_c_over_rho).max(0.0);
    Ok(MacroScan {
        rows,
        reference: (condensate - cfg.epsilon).max(0.0),
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SlowRow {
    pub particles: usize,
    pub power_cutoff: usize,
    /// density below `floor(N^x)`, in units of the total density
    pub below_power: f64,
    pub log_cutoff: usize,
    /// density below `floor(N / ln N)`
    pub below_log: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SlowScan {
    pub rows: Vec<SlowRow>,
    /// limiting finite-cycle share `min(1, rho_c / rho)`
    pub reference: f64,
}

/// Mass below slowly diverging cutoffs; the limit is the finite-cycle share.
pub fn scan_slow_cycles(cfg: &ScanConfig) -> Result<SlowScan> {
    let rows = cfg
        .tables()?
        .iter()
        .map(|t| {
            let n = t.system.particles;
            let rho = t.system.density();
            let kp = (n as f64).powf(cfg.slow_exponent).floor() as usize;
            let kl = (n as f64 / (n as f64).ln()).floor() as usize;
            SlowRow {
                particles: n,
                power_cutoff: kp,
                below_power: t.band_density(1, kp) / rho,
                log_cutoff: kl,
                below_log: t.band_density(1, kl) / rho,
            }
        })
        .collect();
    let reference = if cfg.dim < 3 {
        1.0
    } else {
        (critical_density(cfg.dim, cfg.lambda) * cfg.lambda.powi(cfg.dim as i32) / cfg.rho_lambda_d)
            .min(1.0)
    };
    Ok(SlowScan { rows, reference })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct OdlroRow {
    pub particles: usize,
    pub x: f64,
    pub sigma1: f64,
    /// sandwich bounds with the finite-cycle cut at `c N^(2/d)`
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OdlroScan {
    pub rows: Vec<OdlroRow>,
    /// kernel value at `|x| = L/2` for the largest size, over the density
    pub plateau_fraction: f64,
    /// finite-size condensate fraction of the largest size
    pub condensate_fraction: f64,
}

/// Density-matrix kernel profile along an axis with the finite-cycle
/// sandwich bounds.
pub fn odlro_profile(cfg: &ScanConfig, x_points: usize) -> Result<OdlroScan> {
    cfg.require_bec_dimension()?;
    let tol = cfg.tolerance();
    let tables = cfg.tables()?;
    let mut rows = Vec::new();
    let mut plateau = 0.0;
    let mut condensate = 0.0;
    for t in &tables {
        let n = t.system.particles;
        let l = t.system.box_side;
        let rho = t.system.density();
        let lambda = t.system.thermal_wavelength;
        let cut =
            ((cfg.threshold_c * (n as f64).powf(2.0 / cfg.dim as f64)).floor() as usize).min(n);
        let finite_mass = t.band_density(1, cut);
        for i in 0..x_points {
            let x = l / 2.0 * i as f64 / (x_points - 1) as f64;
            let mut xv = vec![0.0; cfg.dim];
            xv[0] = x;
            let sigma1 = crate::ideal::sigma1_kernel(t, &xv, tol)?;
            let lower = rho - finite_mass;
            let mut gauss = 0.0;
            for k in 1..=cut {
                gauss += t.rho[k - 1] * (-PI * x * x / (k as f64 * lambda * lambda)).exp();
            }
            let upper = lower + gauss;
            rows.push(OdlroRow {
                particles: n,
                x,
                sigma1,
                lower,
                upper,
            });
            if i == x_points - 1 {
                plateau = sigma1 / rho;
                condensate = t.condensate_density() / rho;
            }
        }
    }
    Ok(OdlroScan {
        rows,
        plateau_fraction: plateau,
        condensate_fraction: condensate,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ShapeRow {
    pub t: f64,
    pub empirical: f64,
    pub std_error: f64,
    pub closed: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ShapeScan {
    pub particles: usize,
    pub samples: usize,
    /// finite-element curve on its grid
    pub finite: Vec<ShapeRow>,
    /// macroscopic curve (present above the critical density)
    pub macroscopic: Vec<ShapeRow>,
    /// empirical count of cycles above the fraction `x = epsilon`, its
    /// standard error and the predicted count
    pub count_at_cut: f64,
    pub count_se: f64,
    pub count_reference: f64,
}

/// Sampler-based shape comparison at the largest grid size.
pub fn scan_shape(cfg: &ScanConfig, samples: usize) -> Result<ShapeScan> {
    cfg.require_bec_dimension()?;
    let tol = cfg.tolerance();
    let n = *cfg.n_grid.last().unwrap();
    let sys = cfg.system(n)?;
    let ens = CanonicalEnsemble::new(sys, tol)?;
    let table = ens.cycle_densities();
    let rho = sys.density();
    let rho0_frac = table.condensate_density() / rho;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let draws: Vec<_> = (0..samples).map(|_| ens.sample_cycles(&mut rng)).collect();

    let finite_grid = log_grid(1.0, 20.0, 16);
    let fin = empirical_shape(&draws, ShapeScaling::Finite, &finite_grid)?;
    let finite: Vec<ShapeRow> = finite_grid
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            Ok(ShapeRow {
                t,
                empirical: fin.values[i],
                std_error: fin.std_errors[i],
                closed: finite_shape(t, cfg.dim, cfg.rho_lambda_d, tol)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let zeta = critical_density(cfg.dim, cfg.lambda) * cfg.lambda.powi(cfg.dim as i32);
    let supercritical = cfg.rho_lambda_d > zeta;
    let macroscopic = if supercritical {
        let scale = n as f64 * rho0_frac;
        let grid = log_grid(0.1, 1.0, 12);
        let mac = empirical_shape(&draws, ShapeScaling::Macroscopic { scale }, &grid)?;
        grid.iter()
            .enumerate()
            .map(|(i, &t)| ShapeRow {
                t,
                empirical: mac.values[i],
                std_error: mac.std_errors[i],
                closed: macroscopic_shape(t),
            })
            .collect()
    } else {
        Vec::new()
    };

    // count of cycles holding at least the fraction epsilon of all particles
    let cut = cfg.epsilon * n as f64;
    let counts: Vec<f64> = draws
        .iter()
        .map(|s| s.lengths.iter().filter(|&&l| l as f64 >= cut).count() as f64)
        .collect();
    let mean = counts.iter().sum::<f64>() / samples as f64;
    let var = counts.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / (samples as f64 - 1.0);
    let reference = infinite_cycle_count(cfg.epsilon, rho0_frac * rho, rho);
    Ok(ShapeScan {
        particles: n,
        samples,
        finite,
        macroscopic,
        count_at_cut: mean,
        count_se: (var / samples as f64).sqrt(),
        count_reference: reference,
    })
}

/// Cross-module consistency: the condensate density from the table equals
/// the sum of `rho_n` times the point-mass condensate integrand. Returns the
/// relative difference of the two routes.
pub fn condensate_route_difference(cfg: &ScanConfig, n: usize) -> Result<f64> {
    let tol = cfg.tolerance();
    let sys = cfg.system(n)?;
    let ens = CanonicalEnsemble::new(sys, tol)?;
    let table = ens.cycle_densities();
    let direct = table.condensate_density();
    let zero = vec![vec![0.0; cfg.dim]];
    let mut via_integrand = 0.0;
    for k in 1..=n {
        let w = crate::mc::condensate_integrand(cfg.dim, k, cfg.lambda, sys.box_side, &zero, tol)?;
        via_integrand += table.rho[k - 1] * w;
    }
    Ok((via_integrand - direct).abs() / direct)
}
