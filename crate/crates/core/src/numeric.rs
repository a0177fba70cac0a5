//! Low-level numeric helpers: sign-free log-space values, compensated
//! summation, stable log-sum-exp, log-factorials and tiny least-squares fits.

use serde::Serialize;
use std::sync::OnceLock;

/// A strictly positive real stored by its natural logarithm.
///
/// Canonical partition functions grow like `exp(c L^d)`, far beyond the f64
/// range, so every quantity of that kind is carried as a `LogValue` and only
/// ratios or log-differences are ever exponentiated.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize)]
pub struct LogValue {
    ln: f64,
}

impl LogValue {
    pub const ONE: LogValue = LogValue { ln: 0.0 };

    pub fn from_ln(ln: f64) -> Self {
        LogValue { ln }
    }

    /// Wraps a strictly positive real. Panics on non-positive input.
    pub fn from_value(v: f64) -> Self {
        assert!(
            v > 0.0,
            "LogValue requires a strictly positive real, got {v}"
        );
        LogValue { ln: v.ln() }
    }

    pub fn ln(self) -> f64 {
        self.ln
    }

    /// The represented value; may overflow to `inf` when `ln > 709`.
    pub fn value(self) -> f64 {
        self.ln.exp()
    }

    pub fn times(self, other: LogValue) -> LogValue {
        LogValue {
            ln: self.ln + other.ln,
        }
    }

    /// `self / other` as a plain f64; safe whenever the ratio is moderate.
    pub fn ratio_to(self, other: LogValue) -> f64 {
        (self.ln - other.ln).exp()
    }
}

/// Neumaier-compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `ln(sum of exp(terms))` with the terms shifted by their maximum and
/// accumulated smallest-first under compensation. The slice is reordered.
pub fn log_sum_exp_sorted(terms: &mut [f64]) -> f64 {
    if terms.is_empty() {
        return f64::NEG_INFINITY;
    }
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    terms.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let mut acc = CompensatedSum::new();
    for &t in terms.iter() {
        acc.add((t - m).exp());
    }
    m + acc.total().ln()
}

const LN_FACT_TABLE_LEN: usize = 256;

fn ln_fact_table() -> &'static [f64; LN_FACT_TABLE_LEN] {
    static TABLE: OnceLock<[f64; LN_FACT_TABLE_LEN]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [0.0_f64; LN_FACT_TABLE_LEN];
        let mut acc = CompensatedSum::new();
        for n in 1..LN_FACT_TABLE_LEN {
            acc.add((n as f64).ln());
            t[n] = acc.total();
        }
        t
    })
}

/// `ln(n!)`, exact table below 256 and a Stirling series beyond
/// (absolute error < 1e-14 there).
pub fn ln_factorial(n: u64) -> f64 {
    if (n as usize) < LN_FACT_TABLE_LEN {
        return ln_fact_table()[n as usize];
    }
    let x = n as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    x * x.ln() - x
        + 0.5 * (2.0 * std::f64::consts::PI * x).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
}

/// `ln C(n, k)`; panics if `k > n`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    assert!(k <= n, "ln_binomial called with k = {k} > n = {n}");
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Ordinary least squares line `y = a + b x`; returns `(a, b)`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "fit_line needs at least two points");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let b = sxy / sxx;
    (my - b * mx, b)
}

/// SplitMix64 step, used to derive independent stream seeds.
pub fn split_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9e3779b97f4a7c15u64.wrapping_mul(stream.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Mean and standard error of a set of batch means.
pub fn batch_mean_se(batch_means: &[f64]) -> (f64, f64) {
    let b = batch_means.len() as f64;
    assert!(b >= 2.0, "need at least two batches");
    let mean = batch_means.iter().sum::<f64>() / b;
    let var = batch_means
        .iter()
        .map(|m| (m - mean) * (m - mean))
        .sum::<f64>()
        / (b - 1.0);
    (mean, (var / b).sqrt())
}
