//! Shifted Gaussian lattice sums over Z^d in both Poisson-dual forms, with
//! certified truncation, plus the periodized heat kernel they normalize and
//! its three asymptotic regimes.
//!
//! The two representations of the basic sum are
//!
//! ```text
//! theta(s, w) = sum_{z in Z^d} exp(-pi s (z + w)^2)
//!             = s^(-d/2) sum_{k in Z^d} exp(-pi k^2 / s) cos(2 pi k . w)
//! ```
//!
//! Every sum factorizes over dimensions, so each evaluation is a product of
//! one-dimensional sums truncated at a radius R carrying the Gaussian tail
//! bound `2 exp(-pi s (R + 1/2)^2) / (1 - exp(-pi s (2R + 1)))`.

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::special::Tolerance;
use serde::Serialize;
use std::f64::consts::PI;

/// Arguments of a lattice sum: dimension, scale `s` (plays n lambda^2 / L^2)
/// and the shift vector.
#[derive(Clone, Debug)]
pub struct ThetaArgs {
    pub dim: usize,
    pub scale: f64,
    pub shift: Vec<f64>,
}

impl ThetaArgs {
    pub fn new(dim: usize, scale: f64, shift: Vec<f64>) -> Result<Self> {
        if !(1..=4).contains(&dim) {
            return Err(Error::domain(format!("dimension must be 1..=4, got {dim}")));
        }
        if !(scale > 0.0) {
            return Err(Error::domain(format!(
                "scale must be positive, got {scale}"
            )));
        }
        if shift.len() != dim {
            return Err(Error::domain(format!(
                "shift length {} does not match dimension {dim}",
                shift.len()
            )));
        }
        Ok(ThetaArgs { dim, scale, shift })
    }

    pub fn centered(dim: usize, scale: f64) -> Result<Self> {
        Self::new(dim, scale, vec![0.0; dim])
    }
}

/// Truncation certificate: the lattice cutoff used per coordinate and a bound
/// on the neglected mass, relative to `max(|value|, 1)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TruncationCert {
    pub radius: i64,
    pub tail_bound: f64,
}

/// Fractional part mapped to (-1/2, 1/2]; ties at 1/2 keep the positive sign.
pub fn frac_part(w: f64) -> f64 {
    let f = w - w.round();
    if f == -0.5 {
        0.5
    } else {
        f
    }
}

/// 1-d Gaussian tail bound: `sum_{|z| > r} exp(-pi s (z + w)^2)` for |w| <= 1/2.
fn gauss_tail_1d(s: f64, r: i64) -> f64 {
    let rf = r as f64;
    let denom = 1.0 - (-PI * s * (2.0 * rf + 1.0)).exp();
    2.0 * (-PI * s * (rf + 0.5) * (rf + 0.5)).exp() / denom.max(f64::MIN_POSITIVE)
}

/// Smallest radius whose 1-d tail bound is below `target`.
fn radius_for(s: f64, target: f64) -> i64 {
    let mut r = 1i64;
    while gauss_tail_1d(s, r) > target && r < 100_000 {
        r += 1;
    }
    r
}

struct DimSum {
    value: f64,
    abs_sum: f64,
    tail: f64,
    radius: i64,
}

/// `sum_{|z| <= r} exp(-pi s (z + w)^2)` with |w| <= 1/2 after reduction.
fn one_dim_direct(s: f64, shift: f64, tail_target: f64) -> DimSum {
    let w = frac_part(shift);
    let r = radius_for(s, tail_target);
    let mut acc = CompensatedSum::new();
    for z in -r..=r {
        acc.add((-PI * s * (z as f64 + w) * (z as f64 + w)).exp());
    }
    let value = acc.total();
    DimSum {
        value,
        abs_sum: value,
        tail: gauss_tail_1d(s, r),
        radius: r,
    }
}

/// `sum_k exp(-pi k^2 / s) cos(2 pi k w)` (the dual-side 1-d factor).
fn one_dim_dual(s: f64, shift: f64, tail_target: f64) -> DimSum {
    let inv = 1.0 / s;
    let r = radius_for(inv, tail_target);
    let mut acc = CompensatedSum::new();
    let mut abs = CompensatedSum::new();
    acc.add(1.0);
    abs.add(1.0);
    for k in 1..=r {
        let g = (-PI * inv * (k * k) as f64).exp();
        let t = 2.0 * g * (2.0 * PI * k as f64 * shift).cos();
        acc.add(t);
        abs.add(2.0 * g);
    }
    DimSum {
        value: acc.total(),
        abs_sum: abs.total(),
        tail: gauss_tail_1d(inv, r),
        radius: r,
    }
}

fn product_cert(dims: &[DimSum], value: f64, prefactor: f64) -> TruncationCert {
    let mut err = 0.0;
    let mut radius = 1;
    for (i, d) in dims.iter().enumerate() {
        let mut others = prefactor;
        for (j, o) in dims.iter().enumerate() {
            if i != j {
                others *= o.abs_sum;
            }
        }
        let roundoff = 4.0 * f64::EPSILON * d.abs_sum;
        err += (d.tail + roundoff) * others;
        radius = radius.max(d.radius);
    }
    TruncationCert {
        radius,
        tail_bound: err / value.abs().max(1.0),
    }
}

/// Direct-representation lattice sum `sum_z exp(-pi s (z + w)^2)`.
pub fn theta_direct(args: &ThetaArgs, tol: Tolerance) -> Result<(f64, TruncationCert)> {
    let args = validated(args)?;
    // Per-dimension relative tail target; each 1-d value is at least its z=0
    // term exp(-pi s w^2) >= exp(-pi s / 4), and all terms are positive.
    let mut dims = Vec::with_capacity(args.dim);
    for i in 0..args.dim {
        let w = frac_part(args.shift[i]);
        let floor = (-PI * args.scale * w * w).exp();
        dims.push(one_dim_direct(
            args.scale,
            w,
            tol.rel_eps / (2.0 * args.dim as f64) * floor,
        ));
    }
    let value = dims.iter().map(|d| d.value).product::<f64>();
    Ok((value, product_cert(&dims, value, 1.0)))
}

/// Dual-representation lattice sum
/// `s^(-d/2) sum_k exp(-pi k^2 / s) cos(2 pi k . w)`.
///
/// For large `s` with a generic shift the dual series cancels almost
/// completely, so the certificate (and any duality comparison) is relative to
/// `max(|value|, 1)` rather than to the value itself.
pub fn theta_dual(args: &ThetaArgs, tol: Tolerance) -> Result<(f64, TruncationCert)> {
    let args = validated(args)?;
    let pref = args.scale.powf(-(args.dim as f64) / 2.0);
    let mut dims = Vec::with_capacity(args.dim);
    for i in 0..args.dim {
        dims.push(one_dim_dual(
            args.scale,
            args.shift[i],
            tol.rel_eps / (4.0 * args.dim as f64),
        ));
    }
    let value = pref * dims.iter().map(|d| d.value).product::<f64>();
    Ok((value, product_cert(&dims, value, pref)))
}

/// Whichever representation converges faster: direct for `s >= 1`, dual below.
pub fn theta_value(dim: usize, scale: f64, shift: &[f64], tol: Tolerance) -> Result<f64> {
    let args = ThetaArgs::new(dim, scale, shift.to_vec())?;
    if scale >= 1.0 {
        Ok(theta_direct(&args, tol)?.0)
    } else {
        Ok(theta_dual(&args, tol)?.0)
    }
}

/// `sum_{z != 0} exp(-pi s z^2)`, computed without the cancellation of
/// `theta - 1` when the total is close to one.
pub fn theta_excess(dim: usize, scale: f64, tol: Tolerance) -> Result<f64> {
    if !(scale > 0.0) {
        return Err(Error::domain(format!(
            "scale must be positive, got {scale}"
        )));
    }
    if scale >= 1.0 {
        // 1-d excess e = 2 sum_{m>=1} exp(-pi s m^2); total (1+e)^d - 1
        // expanded binomially to stay exact for tiny e.
        let target = tol.rel_eps / (2.0 * dim as f64);
        let r = radius_for(scale, target * (-PI * scale).exp().max(1e-300));
        let mut acc = CompensatedSum::new();
        for m in 1..=r {
            acc.add(2.0 * (-PI * scale * (m * m) as f64).exp());
        }
        let e = acc.total();
        let mut excess = 0.0;
        let mut binom = 1.0;
        let mut ek = 1.0;
        for k in 1..=dim {
            binom *= (dim - k + 1) as f64 / k as f64;
            ek *= e;
            excess += binom * ek;
        }
        Ok(excess)
    } else {
        let args = ThetaArgs::centered(dim, scale)?;
        Ok(theta_dual(&args, tol)?.0 - 1.0)
    }
}

/// `sum_z exp(-pi s z . (z + 2 w))`, the denominator of the condensate
/// integrand. Evaluated by direct summation of its own terms (per dimension,
/// window centered near `-w`), so that the complete-the-square identity
/// `denominator = theta_direct(s, w) * exp(pi s w^2)` remains an independent
/// cross-check. Returns the logarithm-safe value (`inf` on honest overflow).
pub fn denominator_sum(dim: usize, scale: f64, shift: &[f64], tol: Tolerance) -> Result<f64> {
    if !(scale > 0.0) {
        return Err(Error::domain(format!(
            "scale must be positive, got {scale}"
        )));
    }
    if shift.len() != dim {
        return Err(Error::domain(
            "shift length does not match dimension".to_string(),
        ));
    }
    let mut total_ln = 0.0;
    for &w in shift {
        let center = (-w).round() as i64;
        let delta = frac_part(center as f64 + w);
        let r = radius_for(
            scale,
            tol.rel_eps / (2.0 * dim as f64) * (-PI * scale * delta * delta).exp(),
        );
        // max exponent over the window, for a safe log-domain accumulation
        let mut exps = Vec::with_capacity((2 * r + 1) as usize);
        let mut m = f64::NEG_INFINITY;
        for z in (center - r)..=(center + r) {
            let zf = z as f64;
            let e = -PI * scale * zf * (zf + 2.0 * w);
            exps.push(e);
            m = m.max(e);
        }
        let mut acc = CompensatedSum::new();
        for e in exps {
            acc.add((e - m).exp());
        }
        total_ln += m + acc.total().ln();
    }
    Ok(total_ln.exp())
}

/// The three asymptotic domains of `n lambda^2 / L^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Regime {
    Small,
    Critical(f64),
    Large,
}

/// Boundaries of the critical window in the ratio `n lambda^2 / L^2`.
#[derive(Clone, Copy, Debug)]
pub struct RegimeThresholds {
    pub lo: f64,
    pub hi: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        RegimeThresholds { lo: 0.1, hi: 10.0 }
    }
}

pub fn classify_regime(n: usize, lambda: f64, box_side: f64, thr: RegimeThresholds) -> Regime {
    let s = n as f64 * lambda * lambda / (box_side * box_side);
    if s < thr.lo {
        Regime::Small
    } else if s > thr.hi {
        Regime::Large
    } else {
        Regime::Critical(s)
    }
}

/// One-dimensional complex Gaussian sum
/// `sum_{|z - c| <= R} exp(-pi a (z + b)^2) * exp(i (mu z + phi))`
/// where `c = -round(b)`. Returns (re, im, abs_sum, tail, radius).
fn one_dim_phased(
    a: f64,
    b: f64,
    mu: f64,
    phi: f64,
    tail_target: f64,
) -> (f64, f64, f64, f64, i64) {
    let center = (-b).round() as i64;
    let delta = frac_part(center as f64 + b);
    let r = radius_for(a, tail_target * (-PI * a * delta * delta).exp().max(1e-300));
    let mut re = CompensatedSum::new();
    let mut im = CompensatedSum::new();
    let mut abs = CompensatedSum::new();
    for z in (center - r)..=(center + r) {
        let zf = z as f64;
        let g = (-PI * a * (zf + b) * (zf + b)).exp();
        let phase = mu * zf + phi;
        re.add(g * phase.cos());
        im.add(g * phase.sin());
        abs.add(g);
    }
    (re.total(), im.total(), abs.total(), gauss_tail_1d(a, r), r)
}

/// The periodized heat-kernel factor
///
/// ```text
/// f_n(x; w) = L^-d sum_z exp(-pi n lambda^2 (z + w)^2 / L^2) cos(2 pi z . x / L)
///           = lambda_n^-d sum_z exp(-pi (x + L z)^2 / (n lambda^2))
///                          cos(2 pi w . (x + L z) / L)
/// ```
///
/// with `lambda_n = sqrt(n) lambda`. Both representations are evaluated and
/// must agree within `tol` of the common magnitude scale; the first one is
/// returned.
pub fn torus_heat_kernel(
    n: usize,
    lambda: f64,
    box_side: f64,
    x: &[f64],
    w: &[f64],
    tol: Tolerance,
) -> Result<f64> {
    if n == 0 || !(lambda > 0.0) || !(box_side > 0.0) {
        return Err(Error::domain(
            "torus_heat_kernel requires n >= 1 and positive lengths",
        ));
    }
    let dim = x.len();
    if w.len() != dim || !(1..=4).contains(&dim) {
        return Err(Error::domain("vector lengths must match and lie in 1..=4"));
    }
    let s = n as f64 * lambda * lambda / (box_side * box_side);
    let per_dim_target = tol.rel_eps / (4.0 * dim as f64);

    // First line: scale s, shift w, phase from x.
    let (mut re1, mut im1, mut mag1) = (1.0, 0.0, 1.0);
    for i in 0..dim {
        let (r, im, abs, _, _) =
            one_dim_phased(s, w[i], 2.0 * PI * x[i] / box_side, 0.0, per_dim_target);
        let (nre, nim) = (re1 * r - im1 * im, re1 * im + im1 * r);
        re1 = nre;
        im1 = nim;
        mag1 *= abs;
    }
    let ld = box_side.powi(dim as i32);
    let line1 = re1 / ld;
    let scale1 = mag1 / ld;

    // Second line: scale L^2/(n lambda^2), shift x/L, phase from w.
    let a2 = 1.0 / s;
    let lam_n = (n as f64).sqrt() * lambda;
    let (mut re2, mut im2, mut mag2) = (1.0, 0.0, 1.0);
    for i in 0..dim {
        let (r, im, abs, _, _) = one_dim_phased(
            a2,
            x[i] / box_side,
            2.0 * PI * w[i],
            2.0 * PI * w[i] * x[i] / box_side,
            per_dim_target,
        );
        let (nre, nim) = (re2 * r - im2 * im, re2 * im + im2 * r);
        re2 = nre;
        im2 = nim;
        mag2 *= abs;
    }
    let pref2 = lam_n.powi(-(dim as i32));
    let line2 = re2 * pref2;
    let scale2 = mag2 * pref2;

    let scale = scale1.max(scale2).max(f64::MIN_POSITIVE);
    if (line1 - line2).abs() > 2.0 * tol.rel_eps.max(1e-13) * scale {
        return Err(Error::domain(format!(
            "heat-kernel representations disagree: {line1} vs {line2}"
        )));
    }
    Ok(line1)
}

/// Leading asymptotic form of the periodized heat kernel in each regime:
///
/// * small `s`:     `lambda_n^-d exp(-pi x^2 / (n lambda^2)) cos(2 pi w.x / L)`
/// * large `s`:     `L^-d exp(-pi s {w}^2) (1 + sum_{max|z_i|=1}
///                   exp(-pi s z.(z + 2{w}))) cos(2 pi w.x / L)`
/// * critical `c`:  `L^-d sum_z exp(-pi c (z + {w})^2) cos(2 pi w.x / L)`
///
/// where `{w}` is the componentwise fractional part in (-1/2, 1/2].
pub fn torus_heat_kernel_asymptotic(
    regime: Regime,
    n: usize,
    lambda: f64,
    box_side: f64,
    x: &[f64],
    w: &[f64],
) -> f64 {
    let dim = x.len();
    let s = n as f64 * lambda * lambda / (box_side * box_side);
    let dot: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum();
    let cos_factor = (2.0 * PI * dot / box_side).cos();
    let wf: Vec<f64> = w.iter().map(|&c| frac_part(c)).collect();
    match regime {
        Regime::Small => {
            let lam_n = (n as f64).sqrt() * lambda;
            let x2: f64 = x.iter().map(|c| c * c).sum();
            lam_n.powi(-(dim as i32)) * (-PI * x2 / (n as f64 * lambda * lambda)).exp() * cos_factor
        }
        Regime::Large => {
            let wf2: f64 = wf.iter().map(|c| c * c).sum();
            let mut shell = 0.0;
            let mut z = vec![-1i64; dim];
            loop {
                if z.iter().any(|&c| c.abs() == 1) {
                    let e: f64 = z
                        .iter()
                        .zip(&wf)
                        .map(|(&zi, &wi)| {
                            let zf = zi as f64;
                            zf * (zf + 2.0 * wi)
                        })
                        .sum();
                    shell += (-PI * s * e).exp();
                }
                // advance odometer over {-1, 0, 1}^d
                let mut i = 0;
                loop {
                    if i == dim {
                        break;
                    }
                    z[i] += 1;
                    if z[i] <= 1 {
                        break;
                    }
                    z[i] = -1;
                    i += 1;
                }
                if i == dim {
                    break;
                }
            }
            box_side.powi(-(dim as i32)) * (-PI * s * wf2).exp() * (1.0 + shell) * cos_factor
        }
        Regime::Critical(c) => {
            let theta = theta_value(dim, c, &wf, Tolerance::default()).unwrap_or(f64::NAN);
            box_side.powi(-(dim as i32)) * theta * cos_factor
        }
    }
}

fn validated(args: &ThetaArgs) -> Result<&ThetaArgs> {
    if !(args.scale > 0.0) {
        return Err(Error::domain(format!(
            "scale must be positive, got {}",
            args.scale
        )));
    }
    if args.shift.len() != args.dim || !(1..=4).contains(&args.dim) {
        return Err(Error::domain("bad theta arguments".to_string()));
    }
    Ok(args)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;

    const TOL: Tolerance = Tolerance { rel_eps: 1e-12 };

    fn brute_force_1d(s: f64, w: f64, r: i64) -> f64 {
        let mut acc = 0.0;
        for z in -r..=r {
            acc += (-PI * s * (z as f64 + w) * (z as f64 + w)).exp();
        }
        acc
    }

    #[test]
    fn frac_part_ties_keep_half() {
        assert_eq!(frac_part(0.5), 0.5);
        assert_eq!(frac_part(-0.5), 0.5);
        assert_eq!(frac_part(1.5), 0.5);
        assert!((frac_part(1.3) - 0.3).abs() < 1e-15);
        assert!((frac_part(-1.3) + 0.3).abs() < 1e-15);
    }

    #[test]
    fn direct_large_s_is_one_plus_two_gaussians() {
        let args = ThetaArgs::new(1, 20.0, vec![0.0]).unwrap();
        let (v, cert) = theta_direct(&args, TOL).unwrap();
        let lead = 1.0 + 2.0 * (-PI * 20.0).exp();
        assert!((v - lead).abs() < 1e-15 * v);
        assert!(cert.tail_bound <= TOL.rel_eps);
        assert!(cert.radius >= 1);
    }

    #[test]
    fn direct_half_shift_matches_brute_force() {
        let args = ThetaArgs::new(1, 1.0, vec![0.5]).unwrap();
        let (v, _) = theta_direct(&args, TOL).unwrap();
        let oracle = brute_force_1d(1.0, 0.5, 50);
        assert!((v - oracle).abs() < 1e-14, "{v} vs {oracle}");
    }

    #[test]
    fn dual_small_s_leading_term() {
        let args = ThetaArgs::new(1, 1e-3, vec![0.0]).unwrap();
        let (v, _) = theta_dual(&args, TOL).unwrap();
        let lead = (1e-3f64).powf(-0.5);
        assert!((v - lead).abs() < 1e-10 * lead);

        let args3 = ThetaArgs::new(3, 0.01, vec![0.0; 3]).unwrap();
        let (v3, _) = theta_dual(&args3, TOL).unwrap();
        assert!((v3 - 1000.0).abs() < 1e-10 * 1000.0);
    }

    #[test]
    fn duality_at_unit_scale_d3() {
        let args = ThetaArgs::new(3, 1.0, vec![0.0; 3]).unwrap();
        let (dir, _) = theta_direct(&args, TOL).unwrap();
        let (dual, _) = theta_dual(&args, TOL).unwrap();
        assert!(dir > 1.0);
        assert!((dir - dual).abs() < 1e-10 * dir);
    }

    #[test]
    fn duality_over_scale_grid_with_random_shifts() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for d in 1..=3usize {
            for &s in &[1e-2, 1e-1, 1.0, 10.0, 100.0] {
                for _ in 0..10 {
                    let w: Vec<f64> = (0..d).map(|_| rng.random::<f64>() - 0.5).collect();
                    let args = ThetaArgs::new(d, s, w).unwrap();
                    let (dir, _) = theta_direct(&args, TOL).unwrap();
                    let (dual, _) = theta_dual(&args, TOL).unwrap();
                    assert!(
                        (dir - dual).abs() <= 2e-12 * dir.abs().max(1.0),
                        "d={d} s={s}: {dir} vs {dual}"
                    );
                }
            }
        }
    }

    #[test]
    fn direct_lower_bounds() {
        for d in 1..=3usize {
            for &s in &[0.03, 0.3, 1.0, 3.0, 30.0] {
                let args = ThetaArgs::centered(d, s).unwrap();
                let (v, _) = theta_direct(&args, TOL).unwrap();
                assert!(v >= 1.0_f64.max(s.powf(-(d as f64) / 2.0)) * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn excess_matches_difference() {
        for &s in &[0.4, 1.3, 5.0] {
            let e = theta_excess(3, s, TOL).unwrap();
            let args = ThetaArgs::centered(3, s).unwrap();
            let (v, _) = theta_direct(&args, TOL).unwrap();
            assert!(
                (e - (v - 1.0)).abs() < 1e-12 * v,
                "s={s}: {e} vs {}",
                v - 1.0
            );
            assert!(e > 0.0);
        }
        // cancellation-free even when theta - 1 underflows badly
        let e = theta_excess(3, 30.0, TOL).unwrap();
        let lead = 6.0 * (-PI * 30.0).exp();
        assert!((e - lead).abs() < 1e-6 * lead);
    }

    #[test]
    fn heat_kernel_reduces_to_theta_at_origin() {
        let (n, lambda, l) = (4, 1.0, 7.0);
        let f = torus_heat_kernel(n, lambda, l, &[0.0; 3], &[0.0; 3], TOL).unwrap();
        let s = n as f64 * lambda * lambda / (l * l);
        let args = ThetaArgs::centered(3, s).unwrap();
        let (q, _) = theta_direct(&args, TOL).unwrap();
        assert!((f - q / l.powi(3)).abs() < 1e-13 * f);
    }

    #[test]
    fn heat_kernel_matches_brute_force_with_shift() {
        // d=1, n=2, lambda=1, L=5, x=1, w=0.3 against a |z| <= 60 direct sum
        let (n, lambda, l) = (2usize, 1.0, 5.0);
        let (x, w) = (1.0, 0.3);
        let s = n as f64 * lambda * lambda / (l * l);
        let mut oracle = 0.0;
        for z in -60i64..=60 {
            let zf = z as f64;
            oracle += (-PI * s * (zf + w) * (zf + w)).exp() * (2.0 * PI * zf * x / l).cos();
        }
        oracle /= l;
        let f = torus_heat_kernel(n, lambda, l, &[x], &[w], TOL).unwrap();
        assert!((f - oracle).abs() < 1e-13, "{f} vs {oracle}");
    }

    #[test]
    fn heat_kernel_large_n_approaches_flat_profile() {
        // In the large regime the kernel loses its x dependence:
        // f_n(x; 0) -> L^-d (1 + shell corrections).
        let (lambda, l) = (1.0, 5.0);
        let x = [1.0, 0.5, 0.0];
        let f = torus_heat_kernel(2000, lambda, l, &x, &[0.0; 3], TOL).unwrap();
        let s = 2000.0 / 25.0;
        let lead = (1.0 + 6.0 * (-PI * s).exp()) / l.powi(3);
        assert!((f - lead).abs() < 1e-12 * lead);
    }

    #[test]
    fn first_term_strictly_below_full_sum() {
        // L^d f_n(0; w) > exp(-pi n lambda^2 w^2 / L^2), strictly.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let d = rng.random_range(1..=3);
            let n = rng.random_range(1..=200);
            let l = 2.0 + 8.0 * rng.random::<f64>();
            let w: Vec<f64> = (0..d).map(|_| rng.random::<f64>() - 0.5).collect();
            let f = torus_heat_kernel(n, 1.0, l, &vec![0.0; d], &w, TOL).unwrap();
            let s = n as f64 / (l * l);
            let w2: f64 = w.iter().map(|c| c * c).sum();
            assert!(l.powi(d as i32) * f > (-PI * s * w2).exp());
        }
    }

    #[test]
    fn denominator_examples_and_identity() {
        // w = 0: the z = 0 term alone contributes 1.
        let v = denominator_sum(3, 2.0, &[0.0; 3], TOL).unwrap();
        assert!(v >= 1.0);

        // complete-the-square identity against the independent theta route
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..40 {
            let d = rng.random_range(1..=3);
            let s = 10f64.powf(rng.random_range(-1.5..1.5));
            let w: Vec<f64> = (0..d).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
            let den = denominator_sum(d, s, &w, TOL).unwrap();
            let args = ThetaArgs::new(d, s, w.clone()).unwrap();
            let (th, _) = theta_direct(&args, TOL).unwrap();
            let w2: f64 = w.iter().map(|c| c * c).sum();
            let expect = th * (PI * s * w2).exp();
            assert!((den - expect).abs() < 1e-12 * expect, "{den} vs {expect}");
        }

        // d=3, s=1, w=(0.1,0,0) against a brute-force window
        let w = [0.1, 0.0, 0.0];
        let den = denominator_sum(3, 1.0, &w, TOL).unwrap();
        let mut oracle = 0.0;
        for zx in -20i64..=20 {
            for zy in -20i64..=20 {
                for zz in -20i64..=20 {
                    let (a, b, c) = (zx as f64, zy as f64, zz as f64);
                    let e = a * (a + 0.2) + b * b + c * c;
                    oracle += (-PI * e).exp();
                }
            }
        }
        assert!((den - oracle).abs() < 1e-12 * oracle);
    }

    #[test]
    fn regime_classification() {
        let thr = RegimeThresholds::default();
        assert_eq!(classify_regime(1, 1.0, 100.0, thr), Regime::Small);
        assert_eq!(classify_regime(100, 1.0, 10.0, thr), Regime::Critical(1.0));
        // n = N at fixed density rho = N / L^3 makes the ratio grow like N^(1/3)
        let n = 64_000usize;
        let rho = 1.0;
        let l = (n as f64 / rho).powf(1.0 / 3.0);
        assert_eq!(classify_regime(n, 1.0, l, thr), Regime::Large);
    }

    #[test]
    fn asymptotic_small_regime_error_shrinks() {
        // Fixed n and x; growing L drives s -> 0 and the relative error of the
        // small-regime form must decrease monotonically.
        let n = 3usize;
        let x = [0.7];
        let mut last = f64::INFINITY;
        // Grid chosen so the neglected image terms stay above the f64 floor.
        for &l in &[2.5, 3.0, 3.6, 4.3, 5.2] {
            let exact = torus_heat_kernel(n, 1.0, l, &x, &[0.0], TOL).unwrap();
            let approx = torus_heat_kernel_asymptotic(Regime::Small, n, 1.0, l, &x, &[0.0]);
            let err = ((approx - exact) / exact).abs();
            assert!(err < last, "error did not shrink: {err} vs {last}");
            last = err;
        }
    }

    #[test]
    fn asymptotic_large_and_critical_match_definitions() {
        let (n, lambda, l) = (900usize, 1.0, 3.0);
        let w = [0.3, -0.2, 0.1];
        let x = [0.0; 3];
        let s = n as f64 / (l * l);
        let approx = torus_heat_kernel_asymptotic(Regime::Large, n, lambda, l, &x, &w);
        let exact = torus_heat_kernel(n, lambda, l, &x, &w, TOL).unwrap();
        assert!(
            (approx - exact).abs() < 1e-8 * exact.abs().max(l.powi(-3) * (-PI * s * 0.14).exp())
        );

        // critical form with w = 0 and x = 0 is L^-d * theta(c)
        let c = 1.7;
        let v =
            torus_heat_kernel_asymptotic(Regime::Critical(c), 1, 1.0, 1.0, &[0.0; 2], &[0.0; 2]);
        let args = ThetaArgs::centered(2, c).unwrap();
        let (th, _) = theta_direct(&args, TOL).unwrap();
        assert!((v - th).abs() < 1e-12 * th);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn poisson_duality_property(
            d in 1usize..=3,
            log_s in -2.0f64..2.0,
            seed in any::<u64>(),
        ) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let s = 10f64.powf(log_s);
            let w: Vec<f64> = (0..d).map(|_| rng.random::<f64>() - 0.5).collect();
            let args = ThetaArgs::new(d, s, w).unwrap();
            let (dir, _) = theta_direct(&args, TOL).unwrap();
            let (dual, _) = theta_dual(&args, TOL).unwrap();
            prop_assert!((dir - dual).abs() <= 2e-12 * dir.abs().max(1.0));
        }

        // the kernel evaluator itself cross-checks its two representations
        // and errors on disagreement; drive it over a random domain
        #[test]
        fn heat_kernel_representations_agree(
            d in 1usize..=3,
            n in 1usize..400,
            seed in any::<u64>(),
        ) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let l = 1.5 + 8.0 * rng.random::<f64>();
            let x: Vec<f64> = (0..d).map(|_| l * (rng.random::<f64>() - 0.5)).collect();
            let w: Vec<f64> = (0..d).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
            let f = torus_heat_kernel(n, 1.0, l, &x, &w, TOL);
            prop_assert!(f.is_ok(), "representations disagreed: {f:?}");
        }
    }
}
