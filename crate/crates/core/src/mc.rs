//! Monte Carlo verification of the random-walk picture of interacting
//! cycles: step sampling from the potential's Fourier profile, empirical vs
//! closed-form moments of the in-cycle and cross-cycle walk averages, the
//! energy-entropy exponent formulas, the epsilon threshold, Chebyshev
//! concentration and the condensate integrand.
//!
//! Steps are i.i.d. zero-mean vectors with density `uhat(.) / |uhat|_1`;
//! the interaction length is defined by
//! `1 / lambda_u^2 = int uhat(x) x^2 dx / |uhat|_1`, so the full vector
//! second moment of a step is `1 / lambda_u^2`. For a pattern instantiated
//! at cycle length `n`,
//!
//! ```text
//! Y0 = -(1/n) sum_k sum_{dist} dist * (steps at distance dist ending at k)
//! E|Y0|^2 = (1/(n^2 lambda_u^2)) sum_k sum_dist dist^2 alpha
//! ```
//!
//! and the cross-cycle part eliminates one step through the zero-sum
//! constraint, leaving independent vectors with coefficients
//! `j - 1 + t - t_ref`.

use crate::error::{Error, Result};
use crate::numeric::{batch_mean_se, fit_line, ln_binomial, ln_factorial, split_seed};
use crate::patterns::CouplingPattern;
use crate::special::Tolerance;
use crate::theta::denominator_sum;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Radial Fourier profile of the pair potential, nonnegative with compact
/// support.
#[derive(Clone, Debug)]
pub enum RadialProfile {
    /// Indicator of the ball of the given radius.
    Indicator { radius: f64 },
    /// Piecewise-linear table on an increasing radial grid; zero beyond.
    Tabulated { radii: Vec<f64>, values: Vec<f64> },
}

impl RadialProfile {
    fn support_radius(&self) -> f64 {
        match self {
            RadialProfile::Indicator { radius } => *radius,
            RadialProfile::Tabulated { radii, .. } => *radii.last().unwrap(),
        }
    }

    fn value(&self, r: f64) -> f64 {
        match self {
            RadialProfile::Indicator { radius } => {
                if r <= *radius {
                    1.0
                } else {
                    0.0
                }
            }
            RadialProfile::Tabulated { radii, values } => {
                if r > *radii.last().unwrap() {
                    return 0.0;
                }
                if r <= radii[0] {
                    // constant extension below the first knot
                    return values[0];
                }
                let i = radii
                    .partition_point(|&x| x < r)
                    .min(radii.len() - 1)
                    .max(1);
                let (r0, r1) = (radii[i - 1], radii[i]);
                let (v0, v1) = (values[i - 1], values[i]);
                if r1 == r0 {
                    v0
                } else {
                    v0 + (v1 - v0) * (r - r0) / (r1 - r0)
                }
            }
        }
    }

    fn max_value(&self) -> f64 {
        match self {
            RadialProfile::Indicator { .. } => 1.0,
            RadialProfile::Tabulated { values, .. } => values.iter().cloned().fold(0.0, f64::max),
        }
    }
}

/// Pair potential in Fourier form with its derived scalars.
#[derive(Clone, Debug)]
pub struct PairPotential {
    pub profile: RadialProfile,
    pub dim: usize,
    pub beta: f64,
    /// `int uhat = u(0)`.
    pub norm1: f64,
    /// `lambda_u` with `1/lambda_u^2 = int uhat x^2 / norm1`.
    pub interaction_length: f64,
    max_value: f64,
    support_radius: f64,
}

impl PairPotential {
    pub fn new(profile: RadialProfile, dim: usize, beta: f64) -> Result<Self> {
        if !(1..=4).contains(&dim) || !(beta > 0.0) {
            return Err(Error::domain("potential needs 1 <= d <= 4 and beta > 0"));
        }
        if let RadialProfile::Tabulated { radii, values } = &profile {
            if radii.len() != values.len() || radii.len() < 2 {
                return Err(Error::domain(
                    "tabulated profile needs matching grids, len >= 2",
                ));
            }
            if radii.windows(2).any(|w| w[1] <= w[0]) || values.iter().any(|&v| v < 0.0) {
                return Err(Error::domain(
                    "tabulated radii must increase and values must be nonnegative",
                ));
            }
        }
        let i0 = radial_integral(&profile, dim, 0);
        let i2 = radial_integral(&profile, dim, 2);
        if !(i0 > 0.0) {
            return Err(Error::domain("potential profile has zero mass"));
        }
        let surface = sphere_surface(dim);
        Ok(PairPotential {
            support_radius: profile.support_radius(),
            max_value: profile.max_value(),
            norm1: surface * i0,
            interaction_length: (i0 / i2).sqrt(),
            profile,
            dim,
            beta,
        })
    }

    pub fn indicator(dim: usize, radius: f64, beta: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::domain("indicator radius must be positive"));
        }
        Self::new(RadialProfile::Indicator { radius }, dim, beta)
    }

    /// `beta |uhat|_1`, the coupling that enters every exponent formula.
    pub fn beta_norm(&self) -> f64 {
        self.beta * self.norm1
    }

    /// One step from the density `uhat / |uhat|_1` by rejection from the
    /// support box with the tabulated envelope.
    pub fn sample_step<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64; 4]) {
        let rc = self.support_radius;
        loop {
            let mut r2 = 0.0;
            for slot in out.iter_mut().take(self.dim) {
                let c = rc * (2.0 * rng.random::<f64>() - 1.0);
                *slot = c;
                r2 += c * c;
            }
            if r2 > rc * rc {
                continue;
            }
            let v = self.profile.value(r2.sqrt());
            if v > 0.0 && rng.random::<f64>() * self.max_value < v {
                return;
            }
        }
    }
}

/// Surface of the unit sphere in d dimensions.
fn sphere_surface(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        4 => 2.0 * PI * PI,
        _ => unreachable!("dimension validated at construction"),
    }
}

const GL8_NODES: [f64; 4] = [
    0.1834346424956498,
    0.525532409916329,
    0.7966664774136267,
    0.9602898564975363,
];
const GL8_WEIGHTS: [f64; 4] = [
    0.362683783378362,
    0.3137066458778873,
    0.2223810344533745,
    0.1012285362903763,
];

/// `int_0^Rc uhat(r) r^(d-1+power) dr` by per-interval Gauss-Legendre.
fn radial_integral(profile: &RadialProfile, dim: usize, power: i32) -> f64 {
    let exponent = (dim as i32 - 1 + power) as f64;
    let intervals: Vec<(f64, f64)> = match profile {
        RadialProfile::Indicator { radius } => {
            let k = 64;
            (0..k)
                .map(|i| {
                    (
                        radius * i as f64 / k as f64,
                        radius * (i + 1) as f64 / k as f64,
                    )
                })
                .collect()
        }
        RadialProfile::Tabulated { radii, .. } => {
            let mut v: Vec<(f64, f64)> = radii.windows(2).map(|w| (w[0], w[1])).collect();
            if radii[0] > 0.0 {
                v.insert(0, (0.0, radii[0]));
            }
            v
        }
    };
    let mut total = 0.0;
    for (a, b) in intervals {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (n, w) in GL8_NODES.iter().zip(&GL8_WEIGHTS) {
            for sgn in [-1.0, 1.0] {
                let r = mid + sgn * half * n;
                total += w * half * profile.value(r) * r.powf(exponent);
            }
        }
    }
    total
}

/// Monte Carlo run parameters. Moment comparisons assume at least ~30
/// batches and 10^3 total samples for the batch-mean error bars to hold.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct McRun {
    pub cycle_length: usize,
    pub batches: usize,
    pub samples_per_batch: usize,
    pub seed: u64,
}

impl McRun {
    pub fn total_samples(&self) -> usize {
        self.batches * self.samples_per_batch
    }
}

/// A pattern instantiated at a concrete cycle length: flattened step
/// coefficients with the inter-cycle times fixed once per run.
pub struct PatternInstance {
    pub description: String,
    pub cycle_length: usize,
    /// distance coefficient per in-cycle step draw
    intra_coefs: Vec<f64>,
    /// `j - 1 + t - t_ref` per cross-cycle draw, reference eliminated
    inter_coefs: Vec<f64>,
    /// `j - 1 + t` per cross-cycle entry including the reference, for the
    /// moment formulas written before elimination
    inter_raw: Vec<f64>,
    pub intra_norm: u64,
    pub inter_norm: u64,
    pub max_intra_dist: usize,
    pub max_inter_j: usize,
}

impl PatternInstance {
    /// Instantiates `pattern` at cycle length `n` with `outside` available
    /// partners; `seed` fixes the cross-cycle times.
    pub fn new(pattern: &dyn CouplingPattern, n: usize, outside: usize, seed: u64) -> Self {
        let mut intra_coefs = Vec::new();
        let mut intra_norm = 0u64;
        let mut max_dist = 0usize;
        for (dist, _k, mult) in pattern.intra_entries(n) {
            for _ in 0..mult {
                intra_coefs.push(dist as f64);
                intra_norm += dist as u64;
            }
            max_dist = max_dist.max(dist);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(split_seed(seed, 0x7134));
        let mut inter_raw = Vec::new();
        let mut inter_norm = 0u64;
        let mut max_j = 0usize;
        for (j, _partner, mult) in pattern.inter_entries(n, outside) {
            for _ in 0..mult {
                let t: f64 = rng.random();
                inter_raw.push((j - 1) as f64 + t);
                inter_norm += j as u64;
            }
            max_j = max_j.max(j);
        }
        let inter_coefs: Vec<f64> = if inter_raw.is_empty() {
            Vec::new()
        } else {
            let t_ref = inter_raw[0];
            inter_raw.iter().skip(1).map(|&c| c - t_ref).collect()
        };
        PatternInstance {
            description: pattern.describe(),
            cycle_length: n,
            intra_coefs,
            inter_coefs,
            inter_raw,
            intra_norm,
            inter_norm,
            max_intra_dist: max_dist,
            max_inter_j: max_j,
        }
    }

    /// Closed form `E|Y0|^2 = sum dist^2 / (n^2 lambda_u^2)`.
    pub fn y0_second_moment(&self, potential: &PairPotential) -> f64 {
        let n = self.cycle_length as f64;
        let s: f64 = self.intra_coefs.iter().map(|c| c * c).sum();
        s / (n * n * potential.interaction_length.powi(2))
    }

    /// Closed form `E|Y+|^2 = sum (j - 1 + t - t_ref)^2 / (n^2 lambda_u^2)`
    /// (the reference entry contributes zero).
    pub fn yplus_second_moment(&self, potential: &PairPotential) -> f64 {
        let n = self.cycle_length as f64;
        let s: f64 = self.inter_coefs.iter().map(|c| c * c).sum();
        s / (n * n * potential.interaction_length.powi(2))
    }

    /// Expected averaged square of the block profile,
    /// `(1/(n lambda_u^2)) [ sum dist + sum |j - 1 + t - t_ref| ]`,
    /// together with the norm approximation `|alpha_n| / (n lambda_u^2)`.
    pub fn expected_square(&self, potential: &PairPotential) -> (f64, f64) {
        let n = self.cycle_length as f64;
        let lu2 = potential.interaction_length.powi(2);
        let intra: f64 = self.intra_coefs.iter().sum();
        let t_ref = self.inter_raw.first().copied().unwrap_or(0.0);
        let inter: f64 = self.inter_raw.iter().map(|&c| (c - t_ref).abs()).sum();
        let exact = (intra + inter) / (n * lu2);
        let norm_approx = (self.intra_norm + self.inter_norm) as f64 / (n * lu2);
        (exact, norm_approx)
    }

    /// Closed-form variance
    /// `(1/(n lambda_u^2)) [ sum dist (1 - dist/n) + sum |c| (1 - |c|/n) ]`.
    pub fn variance_closed_form(&self, potential: &PairPotential) -> f64 {
        let n = self.cycle_length as f64;
        let lu2 = potential.interaction_length.powi(2);
        let intra: f64 = self.intra_coefs.iter().map(|&d| d * (1.0 - d / n)).sum();
        let t_ref = self.inter_raw.first().copied().unwrap_or(0.0);
        let inter: f64 = self
            .inter_raw
            .iter()
            .map(|&c| {
                let a = (c - t_ref).abs();
                a * (1.0 - a / n)
            })
            .sum();
        (intra + inter) / (n * lu2)
    }

    /// Standard-deviation bound
    /// `sqrt(E) <= sqrt(j0 |alpha0| + j0+ |alpha+|) / (n lambda_u)`.
    pub fn concentration_bound(&self, potential: &PairPotential) -> f64 {
        let n = self.cycle_length as f64;
        let inside = self.max_intra_dist as f64 * self.intra_norm as f64
            + self.max_inter_j as f64 * self.inter_norm as f64;
        inside.sqrt() / (n * potential.interaction_length)
    }

    pub fn has_inter(&self) -> bool {
        !self.inter_raw.is_empty()
    }

    /// One draw of `Y0 + Y+` into `out`; returns nothing but leaves the
    /// sampled average in place. The cross part eliminates the reference
    /// step exactly, so the reconstructed zero-sum constraint vanishes
    /// bitwise.
    fn draw_mean<R: Rng + ?Sized>(
        &self,
        potential: &PairPotential,
        rng: &mut R,
        out: &mut [f64; 4],
    ) {
        let dim = potential.dim;
        let n = self.cycle_length as f64;
        let mut step = [0.0; 4];
        out.fill(0.0);
        for &c in &self.intra_coefs {
            potential.sample_step(rng, &mut step);
            for i in 0..dim {
                out[i] -= c * step[i];
            }
        }
        for &c in &self.inter_coefs {
            potential.sample_step(rng, &mut step);
            for i in 0..dim {
                out[i] += c * step[i];
            }
        }
        for v in out.iter_mut().take(dim) {
            *v /= n;
        }
    }
}

/// An empirical moment with its batch-mean error bar and closed form.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MomentReport {
    pub empirical: f64,
    pub standard_error: f64,
    pub closed_form: f64,
    pub z_score: f64,
}

fn moment_report(batch_means: &[f64], closed: f64) -> MomentReport {
    let (mean, se) = batch_mean_se(batch_means);
    MomentReport {
        empirical: mean,
        standard_error: se,
        closed_form: closed,
        z_score: if se > 0.0 { (mean - closed) / se } else { 0.0 },
    }
}

/// Empirical second moment of the in-cycle walk average `Y0` against its
/// closed form.
pub fn simulate_y0(
    run: &McRun,
    instance: &PatternInstance,
    potential: &PairPotential,
) -> MomentReport {
    let dim = potential.dim;
    let n = instance.cycle_length as f64;
    let batch_means: Vec<f64> = (0..run.batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(split_seed(run.seed, b as u64));
            let mut acc = 0.0;
            let mut y = [0.0; 4];
            let mut step = [0.0; 4];
            for _ in 0..run.samples_per_batch {
                y.fill(0.0);
                for &c in &instance.intra_coefs {
                    potential.sample_step(&mut rng, &mut step);
                    for i in 0..dim {
                        y[i] -= c * step[i];
                    }
                }
                acc += y[..dim].iter().map(|v| v * v).sum::<f64>() / (n * n);
            }
            acc / run.samples_per_batch as f64
        })
        .collect();
    moment_report(&batch_means, instance.y0_second_moment(potential))
}

/// Result of the cross-cycle simulation: the moment comparison and the worst
/// reconstructed constraint violation (exactly zero by the elimination).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct YplusReport {
    pub moment: MomentReport,
    pub max_constraint_violation: f64,
}

/// Empirical second moment of the cross-cycle average `Y+` with the zero-sum
/// constraint enforced by eliminating the reference step.
pub fn simulate_yplus(
    run: &McRun,
    instance: &PatternInstance,
    potential: &PairPotential,
) -> Result<YplusReport> {
    if !instance.has_inter() {
        return Ok(YplusReport {
            moment: MomentReport {
                empirical: 0.0,
                standard_error: 0.0,
                closed_form: 0.0,
                z_score: 0.0,
            },
            max_constraint_violation: 0.0,
        });
    }
    let dim = potential.dim;
    let n = instance.cycle_length as f64;
    let results: Vec<(f64, f64)> = (0..run.batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(split_seed(run.seed, 0x9000 + b as u64));
            let mut acc = 0.0;
            let mut worst = 0.0_f64;
            let mut y = [0.0; 4];
            let mut step = [0.0; 4];
            let mut total = [0.0; 4];
            for _ in 0..run.samples_per_batch {
                y.fill(0.0);
                total.fill(0.0);
                for &c in &instance.inter_coefs {
                    potential.sample_step(&mut rng, &mut step);
                    for i in 0..dim {
                        y[i] += c * step[i];
                        total[i] += step[i];
                    }
                }
                // the eliminated reference step is minus the sum of the rest;
                // reconstruct the constraint and record the violation
                let mut violation = 0.0_f64;
                for i in 0..dim {
                    let reference = -total[i];
                    violation = violation.max((total[i] + reference).abs());
                }
                worst = worst.max(violation);
                acc += y[..dim].iter().map(|v| v * v).sum::<f64>() / (n * n);
            }
            (acc / run.samples_per_batch as f64, worst)
        })
        .collect();
    let batch_means: Vec<f64> = results.iter().map(|r| r.0).collect();
    let worst = results.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(YplusReport {
        moment: moment_report(&batch_means, instance.yplus_second_moment(potential)),
        max_constraint_violation: worst,
    })
}

/// Chebyshev concentration outcome.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ConcentrationReport {
    pub frequency: f64,
    pub chebyshev_bound: f64,
    pub rms_empirical: f64,
    pub rms_closed: f64,
    pub rms_bound: f64,
}

/// Fraction of samples with `|mean| < A sqrt(E|mean|^2)` against the bound
/// `1 - 1/A^2`, plus the empirical and closed root-mean-squares.
pub fn concentration_check(
    run: &McRun,
    instance: &PatternInstance,
    potential: &PairPotential,
    a_cheb: f64,
) -> Result<ConcentrationReport> {
    if !(a_cheb > 1.0) {
        return Err(Error::domain("Chebyshev factor must exceed 1"));
    }
    let dim = potential.dim;
    let closed = instance.y0_second_moment(potential) + instance.yplus_second_moment(potential);
    let radius = a_cheb * closed.sqrt();
    let results: Vec<(f64, f64)> = (0..run.batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(split_seed(run.seed, 0x4000 + b as u64));
            let mut inside = 0usize;
            let mut sq = 0.0;
            let mut y = [0.0; 4];
            for _ in 0..run.samples_per_batch {
                instance.draw_mean(potential, &mut rng, &mut y);
                let norm2: f64 = y[..dim].iter().map(|v| v * v).sum();
                sq += norm2;
                if norm2.sqrt() < radius {
                    inside += 1;
                }
            }
            (
                inside as f64 / run.samples_per_batch as f64,
                sq / run.samples_per_batch as f64,
            )
        })
        .collect();
    let frequency = results.iter().map(|r| r.0).sum::<f64>() / results.len() as f64;
    let mean_sq = results.iter().map(|r| r.1).sum::<f64>() / results.len() as f64;
    Ok(ConcentrationReport {
        frequency,
        chebyshev_bound: 1.0 - 1.0 / (a_cheb * a_cheb),
        rms_empirical: mean_sq.sqrt(),
        rms_closed: closed.sqrt(),
        rms_bound: instance.concentration_bound(potential),
    })
}

/// Fits `ln rms(n)` vs `ln n` over a grid of cycle lengths built from the
/// same pattern; returns `(slope, rms values)`.
pub fn concentration_decay_fit(
    pattern: &dyn CouplingPattern,
    lengths: &[usize],
    potential: &PairPotential,
    run: &McRun,
) -> (f64, Vec<f64>) {
    let dim = potential.dim;
    let rms: Vec<f64> = lengths
        .iter()
        .map(|&n| {
            let instance = PatternInstance::new(pattern, n, 0, run.seed);
            let means: Vec<f64> = (0..run.batches)
                .into_par_iter()
                .map(|b| {
                    let mut rng =
                        ChaCha8Rng::seed_from_u64(split_seed(run.seed, (n as u64) << 8 | b as u64));
                    let mut sq = 0.0;
                    let mut y = [0.0; 4];
                    for _ in 0..run.samples_per_batch {
                        instance.draw_mean(potential, &mut rng, &mut y);
                        sq += y[..dim].iter().map(|v| v * v).sum::<f64>();
                    }
                    sq / run.samples_per_batch as f64
                })
                .collect();
            (means.iter().sum::<f64>() / means.len() as f64).sqrt()
        })
        .collect();
    let xs: Vec<f64> = lengths.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = rms.iter().map(|&r| r.ln()).collect();
    let (_, slope) = fit_line(&xs, &ys);
    (slope, rms)
}

/// The exponent bookkeeping for a rectangular family: `a` entries on each of
/// `i` positions coupled at distances `1..=j`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ExponentReport {
    /// exact `ln` of the combinatorial weight
    pub weight_log: f64,
    /// entropy `ln C(n - j, i)`
    pub entropy: f64,
    /// interaction norm `a i j (j + 1) / 2`
    pub norm0: f64,
    /// averaged exponent (decaying-pattern case)
    pub e_av: f64,
    /// Markov-bound exponent at the given confidence factor
    pub e_random_bound: f64,
}

/// Evaluates the weight, entropy and exponent formulas exactly
/// (log-binomials via log-factorials; no asymptotic shortcuts).
pub fn exponent_suite(
    a: u32,
    j: usize,
    i: usize,
    n: usize,
    potential: &PairPotential,
    lambda_beta: f64,
    a_markov: f64,
) -> Result<ExponentReport> {
    if a < 1 || j < 1 || i < 1 {
        return Err(Error::domain("exponent_suite needs a, j, i >= 1"));
    }
    if i + j > n {
        return Err(Error::domain(format!(
            "combinatorially impossible: i = {i} positions do not fit in n - j = {}",
            n as i64 - j as i64
        )));
    }
    let beta_u = potential.beta_norm();
    if !(beta_u > 0.0) {
        return Err(Error::domain("need beta |uhat|_1 > 0"));
    }
    let entropy = ln_binomial((n - j) as u64, i as u64);
    let weight_log = (i * j) as f64 * (a as f64 * beta_u.ln() - ln_factorial(a as u64)) + entropy;
    let norm0 = a as f64 * (i * j * (j + 1)) as f64 / 2.0;
    let bracket = 2.0 / (j as f64 + 1.0)
        * ((beta_u / a as f64).ln() + 1.0 - (2.0 * PI * a as f64).ln() / (2.0 * a as f64));
    let energy_rate = PI * (lambda_beta / potential.interaction_length).powi(2);
    let e_av = -norm0 * (energy_rate - bracket) + entropy;
    let e_random_bound = norm0 * (-a_markov * energy_rate + bracket) + entropy;
    Ok(ExponentReport {
        weight_log,
        entropy,
        norm0,
        e_av,
        e_random_bound,
    })
}

/// `eps (1 - eps)^((1 - eps)/eps)`, the entropy weight; monotone increasing
/// on (0, 1) with `eps/e <= value <= eps`.
pub fn epsilon_weight(eps: f64) -> f64 {
    assert!(eps > 0.0 && eps < 1.0, "epsilon must lie in (0, 1)");
    (eps.ln() + (1.0 - eps) / eps * (-eps).ln_1p()).exp()
}

/// The sparse-coupling exponent at density `eps`:
/// `eps n [ ln(1/weight-rate) - A pi (lambda_beta/lambda_u)^2
///          + ln(e beta |uhat|_1 / sqrt(2 pi)) ]`.
pub fn energy_entropy_exponent(
    eps: f64,
    n: usize,
    potential: &PairPotential,
    lambda_beta: f64,
    a_markov: f64,
) -> f64 {
    let entropy_rate = -(epsilon_weight(eps) / eps).ln() - eps.ln();
    let energy = a_markov * PI * (lambda_beta / potential.interaction_length).powi(2);
    let coupling = (std::f64::consts::E * potential.beta_norm() / (2.0 * PI).sqrt()).ln();
    eps * (entropy_rate - energy + coupling) * n as f64
}

/// Bracketing of the positivity threshold.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EpsilonThreshold {
    pub lower: f64,
    pub upper: f64,
    pub star: f64,
}

/// Solves `eps (1-eps)^((1-eps)/eps) = exp(-A pi (lambda_beta/lambda_u)^2)`
/// by bisection in `ln eps`; the root is bracketed by the target and `e`
/// times the target.
pub fn epsilon_threshold(
    lambda_beta: f64,
    lambda_u: f64,
    a_markov: f64,
) -> Result<EpsilonThreshold> {
    if !(a_markov > 1.0) {
        return Err(Error::domain("threshold needs A > 1"));
    }
    if !(lambda_beta > 0.0) || !(lambda_u > 0.0) {
        return Err(Error::domain("lengths must be positive"));
    }
    let ln_target = -a_markov * PI * (lambda_beta / lambda_u).powi(2);
    let lower = ln_target.exp();
    let upper = (ln_target + 1.0).exp().min(1.0);
    // f is increasing; bisect ln f(e^y) = ln_target on [ln lower, ln upper)
    let mut lo = ln_target;
    let mut hi = (ln_target + 1.0).min(-1e-12);
    let ln_f = |y: f64| {
        let eps = y.exp();
        y + (1.0 - eps) / eps * (-eps).ln_1p()
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ln_f(mid) < ln_target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 * hi.abs().max(1.0) {
            break;
        }
    }
    Ok(EpsilonThreshold {
        lower,
        upper,
        star: (0.5 * (lo + hi)).exp(),
    })
}

/// Mean over sampled walk averages `y` of the condensate integrand
/// `1 / sum_z exp(-pi s z . (z + 2 L y))` with `s = n lambda^2 / L^2`.
/// With the point mass at zero this reduces to `1 / q_n`.
pub fn condensate_integrand(
    dim: usize,
    n: usize,
    lambda_beta: f64,
    box_side: f64,
    samples: &[Vec<f64>],
    tol: Tolerance,
) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::domain(
            "condensate_integrand needs at least one sample",
        ));
    }
    let s = n as f64 * lambda_beta * lambda_beta / (box_side * box_side);
    let mut acc = 0.0;
    for y in samples {
        if y.len() != dim {
            return Err(Error::domain("sample dimension mismatch"));
        }
        let w: Vec<f64> = y.iter().map(|&c| box_side * c).collect();
        let den = denominator_sum(dim, s, &w, tol)?;
        acc += 1.0 / den;
    }
    Ok(acc / samples.len() as f64)
}

/// Draws `count` walk averages `Y0` of the instance, for feeding the
/// condensate integrand.
pub fn sample_walk_means(
    instance: &PatternInstance,
    potential: &PairPotential,
    count: usize,
    seed: u64,
) -> Vec<Vec<f64>> {
    let dim = potential.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(split_seed(seed, 0xabcd));
    let mut out = Vec::with_capacity(count);
    let mut y = [0.0; 4];
    for _ in 0..count {
        instance.draw_mean(potential, &mut rng, &mut y);
        out.push(y[..dim].to_vec());
    }
    out
}
