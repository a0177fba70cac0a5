//! Riemann zeta at real arguments s > 1, the polylogarithm Li_s(z) on
//! z in [0, 1], and the inverse of Li_s in z at fixed s.
//!
//! zeta(s) is computed from a partial sum with an Euler-Maclaurin tail:
//!
//! ```text
//! zeta(s) = sum_{n<M} n^-s + M^(1-s)/(s-1) + M^-s/2
//!           + sum_k B_{2k}/(2k)! * s(s+1)...(s+2k-2) * M^(-s-2k+1)
//! ```
//!
//! with the remainder bounded by the first omitted correction term. The
//! polylogarithm uses the direct series with the geometric tail bound
//! `z^(M+1) / ((1-z) (M+1)^s)`, growing M adaptively.

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// Relative-error target for the scalar special functions and lattice sums.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub rel_eps: f64,
}

impl Tolerance {
    pub fn new(rel_eps: f64) -> Result<Self> {
        if rel_eps > 0.0 && rel_eps < 1e-3 {
            Ok(Tolerance { rel_eps })
        } else {
            Err(Error::InvalidTolerance(rel_eps))
        }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { rel_eps: 1e-12 }
    }
}

/// B_{2k} / (2k)! for k = 1..=7.
const BERNOULLI_OVER_FACT: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
    1.0 / 74724249600.0,
];

/// Riemann zeta for real s > 1.
pub fn riemann_zeta(s: f64, tol: Tolerance) -> Result<f64> {
    if !(s > 1.0) {
        return Err(Error::domain(format!(
            "riemann_zeta requires s > 1, got {s}"
        )));
    }
    let mut m: usize = 16;
    loop {
        let (value, bound) = zeta_euler_maclaurin(s, m);
        if bound <= tol.rel_eps * value || m >= 1 << 22 {
            return Ok(value);
        }
        m *= 2;
    }
}

/// Partial sum to `m - 1` plus the Euler-Maclaurin tail starting at `m`.
/// Returns `(value, remainder_bound)`.
fn zeta_euler_maclaurin(s: f64, m: usize) -> (f64, f64) {
    let mut acc = CompensatedSum::new();
    for n in 1..m {
        acc.add((n as f64).powf(-s));
    }
    let mf = m as f64;
    acc.add(mf.powf(1.0 - s) / (s - 1.0));
    acc.add(0.5 * mf.powf(-s));
    // Correction terms: B_{2k}/(2k)! * rising(s, 2k-1) * m^(-s-2k+1).
    let mut rising = s; // s(s+1)...(s+2k-2), starts at k=1 with just s
    let mut power = mf.powf(-s - 1.0);
    let mut last_term = 0.0;
    for (k, &b) in BERNOULLI_OVER_FACT.iter().enumerate() {
        let term = b * rising * power;
        acc.add(term);
        last_term = term.abs();
        // advance rising factorial and power for the next k
        let two_k = 2.0 * (k as f64 + 1.0);
        rising *= (s + two_k - 1.0) * (s + two_k);
        power /= mf * mf;
        if last_term < 1e-18 * acc.total().abs() {
            break;
        }
    }
    (acc.total(), 2.0 * last_term)
}

/// Polylogarithm Li_s(z) = sum_{n>=1} z^n / n^s for z in [0, 1], s > 1.
pub fn polylog(s: f64, z: f64, tol: Tolerance) -> Result<f64> {
    if !(s > 1.0) {
        return Err(Error::domain(format!("polylog requires s > 1, got {s}")));
    }
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::domain(format!(
            "polylog requires z in [0, 1], got {z}"
        )));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    if z == 1.0 {
        return riemann_zeta(s, tol);
    }
    // Predicted truncation: tail <= z^(M+1) / ((1-z) M^s) <= tol * z needs
    // roughly M >= ln(tol (1-z)) / ln z. Refuse early when that is hopeless.
    let predicted = ((tol.rel_eps * (1.0 - z) * z).ln() / z.ln()).ceil();
    if !predicted.is_finite() || predicted > 5e7 {
        return Err(Error::domain(format!(
            "polylog series impractical for s = {s}, z = {z} at this tolerance"
        )));
    }
    let mut acc = CompensatedSum::new();
    let mut zn = 1.0;
    let mut n: u64 = 0;
    loop {
        for _ in 0..64 {
            n += 1;
            zn *= z;
            acc.add(zn / (n as f64).powf(s));
        }
        // Tail bound: sum_{m>n} z^m / m^s <= z^(n+1) / ((1-z) (n+1)^s).
        let tail = zn * z / ((1.0 - z) * ((n + 1) as f64).powf(s));
        let total = acc.total();
        if tail <= tol.rel_eps * total {
            return Ok(total);
        }
    }
}

/// Solves Li_s(z) = target for z in [0, 1] by bisection.
///
/// Targets above zeta(s) saturate: the caller must use the super-critical
/// branch z = 1 instead.
pub fn invert_polylog(s: f64, target: f64, tol: Tolerance) -> Result<f64> {
    if target < 0.0 {
        return Err(Error::domain(format!(
            "invert_polylog target must be >= 0, got {target}"
        )));
    }
    if target == 0.0 {
        return Ok(0.0);
    }
    let limit = riemann_zeta(s, tol)?;
    if target > limit * (1.0 + 16.0 * tol.rel_eps) {
        return Err(Error::Saturated { s, target, limit });
    }
    if target >= limit {
        return Ok(1.0);
    }
    // Terminate on the function value, not the interval: near z = 1 the
    // derivative Li_{s-1}(z)/z is steep and would amplify an interval-based
    // stop into a visible target error.
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    let mut best = 0.5;
    let inner = Tolerance {
        rel_eps: (tol.rel_eps * 0.1).max(1e-15),
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = polylog(s, mid, inner)?;
        best = mid;
        if (v - target).abs() <= 0.5 * tol.rel_eps * target.max(1e-300) {
            break;
        }
        if v < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best)
}
