//! Interaction-multiplicity patterns behind a common trait, registered by
//! name and selected at runtime from config or CLI strings.
//!
//! A pattern prescribes the multiplicities `alpha` of a growing family of
//! configurations: `intra(dist, k)` couples the particles at index distance
//! `dist` ending at position `k` inside the distinguished cycle, and
//! `inter(j, partner)` couples in-cycle particle `j` to the `partner`-th
//! particle outside. The Monte Carlo engine instantiates a pattern at a
//! concrete cycle length `n`, so patterns may depend on `n` only through
//! these two calls.
//!
//! Built-in pattern names (see [`PatternRegistry::with_builtins`]):
//!
//! * `intracycle:a=1,j0=2`   — `alpha = a` at distances `1..=j0`, every `k`;
//! * `powerlaw:a=1,theta=0.25` — `alpha = a` at distances up to `k^theta`;
//! * `lacunary:a=1,j0=1,gaps=primes|squares` — like `intracycle` but only at
//!   positions `k` in a sparse set;
//! * `interblock:a=1,j0=2,partners=5` — `alpha = a` from in-cycle indices
//!   `1..=j0` to the first `partners` outside particles, no in-cycle pairs;
//! * `boundary:k0=2` — `alpha = 1` on pairs whose distance is within `k0` of
//!   the cycle length (the variance-collapsing edge case);
//! * `rational:pairs=1-2x1;3-7x2` — an explicit finite list of in-cycle
//!   pairs `j-k` with multiplicity.

use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::fmt;

/// An interchangeable interaction pattern.
pub trait CouplingPattern: Send + Sync {
    /// Multiplicity on the in-cycle pair at distance `dist` ending at `k`
    /// (`2 <= k <= n`, `1 <= dist < k`).
    fn intra(&self, dist: usize, k: usize) -> u32;

    /// Largest distance that can be nonzero at position `k`.
    fn max_intra_dist(&self, k: usize) -> usize;

    /// Multiplicity coupling in-cycle index `j` (1-based) to outside
    /// particle `partner` (1-based).
    fn inter(&self, j: usize, partner: usize) -> u32;

    /// Bounding box `(max_j, max_partner)` of the nonzero inter entries.
    fn inter_extent(&self) -> (usize, usize);

    /// Display name with parameters, e.g. `intracycle:a=1,j0=2`.
    fn describe(&self) -> String;

    /// All nonzero in-cycle entries at cycle length `n` as
    /// `(dist, k, multiplicity)`.
    fn intra_entries(&self, n: usize) -> Vec<(usize, usize, u32)> {
        let mut out = Vec::new();
        for k in 2..=n {
            let lim = self.max_intra_dist(k).min(k - 1);
            for dist in 1..=lim {
                let a = self.intra(dist, k);
                if a > 0 {
                    out.push((dist, k, a));
                }
            }
        }
        out
    }

    /// All nonzero inter entries given `outside` available partners, as
    /// `(j, partner, multiplicity)`.
    fn inter_entries(&self, n: usize, outside: usize) -> Vec<(usize, usize, u32)> {
        let (mj, mp) = self.inter_extent();
        let mut out = Vec::new();
        for j in 1..=mj.min(n) {
            for p in 1..=mp.min(outside) {
                let a = self.inter(j, p);
                if a > 0 {
                    out.push((j, p, a));
                }
            }
        }
        out
    }

    /// `sum over in-cycle entries of dist * alpha` at length `n`.
    fn intra_norm(&self, n: usize) -> u64 {
        self.intra_entries(n)
            .iter()
            .map(|&(d, _, a)| d as u64 * a as u64)
            .sum()
    }
}

impl fmt::Debug for dyn CouplingPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.describe())
    }
}

/// `alpha = a` at every distance up to `j0`, for every position.
pub struct Intracycle {
    pub a: u32,
    pub j0: usize,
}

impl Intracycle {
    pub fn new(a: u32, j0: usize) -> Result<Self> {
        if a < 1 || j0 < 1 {
            return Err(Error::Pattern("intracycle needs a >= 1 and j0 >= 1".into()));
        }
        Ok(Intracycle { a, j0 })
    }
}

impl CouplingPattern for Intracycle {
    fn intra(&self, dist: usize, _k: usize) -> u32 {
        if dist <= self.j0 {
            self.a
        } else {
            0
        }
    }

    fn max_intra_dist(&self, _k: usize) -> usize {
        self.j0
    }

    fn inter(&self, _j: usize, _p: usize) -> u32 {
        0
    }

    fn inter_extent(&self) -> (usize, usize) {
        (0, 0)
    }

    fn describe(&self) -> String {
        format!("intracycle:a={},j0={}", self.a, self.j0)
    }

    // closed form: a * sum_{k=2..n} sum_{d <= min(k-1, j0)} d
    fn intra_norm(&self, n: usize) -> u64 {
        let (a, j0) = (self.a as u64, self.j0 as u64);
        let mut total = 0u64;
        for k in 2..=n as u64 {
            let m = j0.min(k - 1);
            total += a * m * (m + 1) / 2;
        }
        total
    }
}

/// `alpha = a` at distances up to `k^theta`.
pub struct PowerLaw {
    pub a: u32,
    pub theta: f64,
}

impl PowerLaw {
    pub fn new(a: u32, theta: f64) -> Result<Self> {
        if a < 1 || !(0.0 < theta && theta < 1.0) {
            return Err(Error::Pattern(
                "powerlaw needs a >= 1 and theta in (0, 1)".into(),
            ));
        }
        Ok(PowerLaw { a, theta })
    }

    fn cut(&self, k: usize) -> usize {
        (k as f64).powf(self.theta).floor() as usize
    }
}

impl CouplingPattern for PowerLaw {
    fn intra(&self, dist: usize, k: usize) -> u32 {
        if dist <= self.cut(k) {
            self.a
        } else {
            0
        }
    }

    fn max_intra_dist(&self, k: usize) -> usize {
        self.cut(k)
    }

    fn inter(&self, _j: usize, _p: usize) -> u32 {
        0
    }

    fn inter_extent(&self) -> (usize, usize) {
        (0, 0)
    }

    fn describe(&self) -> String {
        format!("powerlaw:a={},theta={}", self.a, self.theta)
    }
}

/// Sparse position sets for [`Lacunary`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GapFunction {
    Primes,
    Squares,
}

impl GapFunction {
    fn contains(self, k: usize) -> bool {
        match self {
            GapFunction::Primes => is_prime(k),
            GapFunction::Squares => {
                let r = (k as f64).sqrt().round() as usize;
                r * r == k
            }
        }
    }

    fn name(self) -> &'static str {
        match self {
            GapFunction::Primes => "primes",
            GapFunction::Squares => "squares",
        }
    }
}

fn is_prime(k: usize) -> bool {
    if k < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= k {
        if k.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Like [`Intracycle`] but only at positions `k` in a sparse set.
pub struct Lacunary {
    pub a: u32,
    pub j0: usize,
    pub gaps: GapFunction,
}

impl Lacunary {
    pub fn new(a: u32, j0: usize, gaps: GapFunction) -> Result<Self> {
        if a < 1 || j0 < 1 {
            return Err(Error::Pattern("lacunary needs a >= 1 and j0 >= 1".into()));
        }
        Ok(Lacunary { a, j0, gaps })
    }
}

impl CouplingPattern for Lacunary {
    fn intra(&self, dist: usize, k: usize) -> u32 {
        if dist <= self.j0 && self.gaps.contains(k) {
            self.a
        } else {
            0
        }
    }

    fn max_intra_dist(&self, k: usize) -> usize {
        if self.gaps.contains(k) {
            self.j0
        } else {
            0
        }
    }

    fn inter(&self, _j: usize, _p: usize) -> u32 {
        0
    }

    fn inter_extent(&self) -> (usize, usize) {
        (0, 0)
    }

    fn describe(&self) -> String {
        format!(
            "lacunary:a={},j0={},gaps={}",
            self.a,
            self.j0,
            self.gaps.name()
        )
    }
}

/// Inter-cycle block: `alpha = a` from in-cycle indices `1..=j0` to the first
/// `partners` outside particles; no in-cycle pairs.
pub struct InterBlock {
    pub a: u32,
    pub j0: usize,
    pub partners: usize,
}

impl InterBlock {
    pub fn new(a: u32, j0: usize, partners: usize) -> Result<Self> {
        if a < 1 || j0 < 1 || partners < 1 {
            return Err(Error::Pattern(
                "interblock needs a, j0, partners >= 1".into(),
            ));
        }
        Ok(InterBlock { a, j0, partners })
    }
}

impl CouplingPattern for InterBlock {
    fn intra(&self, _dist: usize, _k: usize) -> u32 {
        0
    }

    fn max_intra_dist(&self, _k: usize) -> usize {
        0
    }

    fn inter(&self, j: usize, p: usize) -> u32 {
        if j <= self.j0 && p <= self.partners {
            self.a
        } else {
            0
        }
    }

    fn inter_extent(&self) -> (usize, usize) {
        (self.j0, self.partners)
    }

    fn describe(&self) -> String {
        format!(
            "interblock:a={},j0={},partners={}",
            self.a, self.j0, self.partners
        )
    }
}

/// `alpha = 1` on in-cycle pairs whose distance is within `k0` of the cycle
/// length: the family whose variance collapses while the moments stay O(1).
pub struct Boundary {
    pub k0: usize,
}

impl Boundary {
    pub fn new(k0: usize) -> Result<Self> {
        if k0 < 1 {
            return Err(Error::Pattern("boundary needs k0 >= 1".into()));
        }
        Ok(Boundary { k0 })
    }
}

impl CouplingPattern for Boundary {
    fn intra(&self, _dist: usize, _k: usize) -> u32 {
        // distance cut depends on n; resolved in intra_entries
        0
    }

    fn max_intra_dist(&self, _k: usize) -> usize {
        0
    }

    fn inter(&self, _j: usize, _p: usize) -> u32 {
        0
    }

    fn inter_extent(&self) -> (usize, usize) {
        (0, 0)
    }

    fn describe(&self) -> String {
        format!("boundary:k0={}", self.k0)
    }

    fn intra_entries(&self, n: usize) -> Vec<(usize, usize, u32)> {
        // pairs with n - k0 <= dist < k <= n
        let mut out = Vec::new();
        if n <= self.k0 {
            return out;
        }
        for k in (n - self.k0 + 1)..=n {
            for dist in (n - self.k0)..k {
                if dist >= 1 {
                    out.push((dist, k, 1));
                }
            }
        }
        out
    }

    fn intra_norm(&self, n: usize) -> u64 {
        self.intra_entries(n)
            .iter()
            .map(|&(d, _, a)| d as u64 * a as u64)
            .sum()
    }
}

/// Explicit finite list of in-cycle pairs with multiplicities.
pub struct Rational {
    /// `(j, k, alpha)` with `j < k`, in-cycle indices.
    pub pairs: Vec<(usize, usize, u32)>,
}

impl Rational {
    pub fn new(pairs: Vec<(usize, usize, u32)>) -> Result<Self> {
        for &(j, k, a) in &pairs {
            if j == 0 || k <= j || a == 0 {
                return Err(Error::Pattern(format!("bad rational pair ({j}, {k}, {a})")));
            }
        }
        Ok(Rational { pairs })
    }
}

impl CouplingPattern for Rational {
    fn intra(&self, dist: usize, k: usize) -> u32 {
        self.pairs
            .iter()
            .filter(|&&(j, kk, _)| kk == k && kk - j == dist)
            .map(|&(_, _, a)| a)
            .sum()
    }

    fn max_intra_dist(&self, k: usize) -> usize {
        self.pairs
            .iter()
            .filter(|&&(_, kk, _)| kk == k)
            .map(|&(j, kk, _)| kk - j)
            .max()
            .unwrap_or(0)
    }

    fn inter(&self, _j: usize, _p: usize) -> u32 {
        0
    }

    fn inter_extent(&self) -> (usize, usize) {
        (0, 0)
    }

    fn describe(&self) -> String {
        let body: Vec<String> = self
            .pairs
            .iter()
            .map(|&(j, k, a)| format!("{j}-{k}x{a}"))
            .collect();
        format!("rational:pairs={}", body.join(";"))
    }

    fn intra_entries(&self, n: usize) -> Vec<(usize, usize, u32)> {
        self.pairs
            .iter()
            .filter(|&&(_, k, _)| k <= n)
            .map(|&(j, k, a)| (k - j, k, a))
            .collect()
    }
}

type Factory = fn(&BTreeMap<String, String>) -> Result<Box<dyn CouplingPattern>>;

/// Name-indexed registry of pattern factories.
pub struct PatternRegistry {
    factories: BTreeMap<&'static str, Factory>,
}

impl PatternRegistry {
    pub fn empty() -> Self {
        PatternRegistry {
            factories: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register("intracycle", |p| {
            Ok(Box::new(Intracycle::new(
                int_param(p, "a", 1)? as u32,
                int_param(p, "j0", 1)?,
            )?))
        });
        r.register("powerlaw", |p| {
            Ok(Box::new(PowerLaw::new(
                int_param(p, "a", 1)? as u32,
                float_param(p, "theta", 0.25)?,
            )?))
        });
        r.register("lacunary", |p| {
            let gaps = match p.get("gaps").map(String::as_str) {
                None | Some("primes") => GapFunction::Primes,
                Some("squares") => GapFunction::Squares,
                Some(other) => {
                    return Err(Error::Pattern(format!("unknown gap function `{other}`")))
                }
            };
            Ok(Box::new(Lacunary::new(
                int_param(p, "a", 1)? as u32,
                int_param(p, "j0", 1)?,
                gaps,
            )?))
        });
        r.register("interblock", |p| {
            Ok(Box::new(InterBlock::new(
                int_param(p, "a", 1)? as u32,
                int_param(p, "j0", 1)?,
                int_param(p, "partners", 1)?,
            )?))
        });
        r.register("boundary", |p| {
            Ok(Box::new(Boundary::new(int_param(p, "k0", 1)?)?))
        });
        r.register("rational", |p| {
            let spec = p
                .get("pairs")
                .ok_or_else(|| Error::Pattern("rational needs pairs=j-kxA;...".into()))?;
            let mut pairs = Vec::new();
            for item in spec.split(';').filter(|s| !s.is_empty()) {
                let (jk, a) = item
                    .split_once('x')
                    .ok_or_else(|| Error::Pattern(format!("bad pair `{item}`")))?;
                let (j, k) = jk
                    .split_once('-')
                    .ok_or_else(|| Error::Pattern(format!("bad pair `{item}`")))?;
                pairs.push((
                    j.parse()
                        .map_err(|_| Error::Pattern(format!("bad index in `{item}`")))?,
                    k.parse()
                        .map_err(|_| Error::Pattern(format!("bad index in `{item}`")))?,
                    a.parse()
                        .map_err(|_| Error::Pattern(format!("bad alpha in `{item}`")))?,
                ));
            }
            Ok(Box::new(Rational::new(pairs)?))
        });
        r
    }

    pub fn register(&mut self, name: &'static str, factory: Factory) {
        self.factories.insert(name, factory);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.factories.keys().copied().collect()
    }

    /// Parses `name:key=value,key=value` and builds the pattern.
    pub fn parse(&self, spec: &str) -> Result<Box<dyn CouplingPattern>> {
        let (name, rest) = match spec.split_once(':') {
            Some((n, r)) => (n, r),
            None => (spec, ""),
        };
        let factory = self.factories.get(name).ok_or_else(|| {
            Error::Pattern(format!(
                "unknown pattern `{name}`; available: {}",
                self.names().join(", ")
            ))
        })?;
        let mut params = BTreeMap::new();
        for kv in rest.split(',').filter(|s| !s.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Pattern(format!("expected key=value, got `{kv}`")))?;
            params.insert(k.trim().to_string(), v.trim().to_string());
        }
        factory(&params)
    }
}

impl Default for PatternRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

fn int_param(p: &BTreeMap<String, String>, key: &str, default: usize) -> Result<usize> {
    match p.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| Error::Pattern(format!("bad integer for `{key}`: {v}"))),
    }
}

fn float_param(p: &BTreeMap<String, String>, key: &str, default: f64) -> Result<f64> {
    match p.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| Error::Pattern(format!("bad float for `{key}`: {v}"))),
    }
}
