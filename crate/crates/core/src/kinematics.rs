//! Exact algebra of interaction profiles on a finite cycle configuration.
//!
//! A configuration splits the particles `1..=N` into consecutive blocks
//! (permutation cycles) `C_0, ..., C_p` of lengths `n_0, ..., n_p`. Each
//! ordered pair `j < k` may carry `alpha` interaction entries, every entry
//! holding a time `t in [0, 1)` and a step vector. The piecewise-constant
//! profile `Z_q(t)` collects, for particle `q` in block `C_l`, four groups of
//! entries (in-block pairs reaching `q` from below or above, and pairs leaving
//! the block upward), with the time indicator deciding which side of the
//! breakpoint contributes:
//!
//! ```text
//! Z_q(t) = - sum_{j<q, q<=k<=N_l} 1{t_e >= t} x_e
//!          + sum_{q<=j<=N_l, k>N_l} 1{t_e >= t} x_e
//!          - sum_{j<=q, q<k<=N_l} 1{t_e <  t} x_e
//!          + sum_{q<j<=N_l, k>N_l} 1{t_e <  t} x_e .
//! ```
//!
//! The block averages `mean_l = (1/n_l) sum_{q in C_l} int_0^1 Z_q dt` admit
//! closed forms linear in the times; the averaged square over block 0 admits
//! a closed quadratic form whose coefficients depend only on the relative
//! order of the pair indices (the A tables below). Both are checked against
//! direct piecewise integration, which stays the independent oracle.

use crate::error::{Error, Result};

/// Cycle lengths `(n_0, ..., n_p)` with their running boundaries.
#[derive(Clone, Debug)]
pub struct CycleStructure {
    lengths: Vec<usize>,
    boundaries: Vec<usize>,
}

impl CycleStructure {
    pub fn new(lengths: Vec<usize>) -> Result<Self> {
        if lengths.is_empty() || lengths.iter().any(|&n| n == 0) {
            return Err(Error::Assignment(
                "cycle lengths must be positive and non-empty".into(),
            ));
        }
        let mut boundaries = Vec::with_capacity(lengths.len());
        let mut acc = 0;
        for &n in &lengths {
            acc += n;
            boundaries.push(acc);
        }
        Ok(CycleStructure {
            lengths,
            boundaries,
        })
    }

    pub fn total(&self) -> usize {
        *self.boundaries.last().unwrap()
    }

    pub fn cycles(&self) -> usize {
        self.lengths.len()
    }

    pub fn length(&self, l: usize) -> usize {
        self.lengths[l]
    }

    /// Particles of block `l` as an inclusive 1-based range.
    pub fn block(&self, l: usize) -> (usize, usize) {
        let lo = if l == 0 {
            1
        } else {
            self.boundaries[l - 1] + 1
        };
        (lo, self.boundaries[l])
    }

    /// Index of the block containing particle `q` (1-based).
    pub fn block_of(&self, q: usize) -> usize {
        self.boundaries.partition_point(|&b| b < q)
    }
}

/// One interaction entry: pair `j < k` (1-based particles), a time and a step.
#[derive(Clone, Debug)]
pub struct StepEntry {
    pub j: usize,
    pub k: usize,
    pub time: f64,
    pub step: Vec<f64>,
}

/// A full configuration: structure plus the sparse entry list. The
/// multiplicity `alpha^k_j` is the number of entries stored for `(j, k)`.
#[derive(Clone, Debug)]
pub struct AlphaAssignment {
    pub structure: CycleStructure,
    pub dim: usize,
    entries: Vec<StepEntry>,
}

impl AlphaAssignment {
    pub fn new(structure: CycleStructure, dim: usize) -> Self {
        AlphaAssignment {
            structure,
            dim,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, j: usize, k: usize, time: f64, step: Vec<f64>) -> Result<()> {
        let n = self.structure.total();
        if !(1 <= j && j < k && k <= n) {
            return Err(Error::Assignment(format!(
                "need 1 <= j < k <= {n}, got ({j}, {k})"
            )));
        }
        if !(0.0..1.0).contains(&time) {
            return Err(Error::Assignment(format!(
                "time must lie in [0, 1), got {time}"
            )));
        }
        if step.len() != self.dim || step.iter().any(|c| !c.is_finite()) {
            return Err(Error::Assignment(
                "step vector has wrong length or is not finite".into(),
            ));
        }
        self.entries.push(StepEntry { j, k, time, step });
        Ok(())
    }

    pub fn entries(&self) -> &[StepEntry] {
        &self.entries
    }

    /// The profile `Z_q(t)` of particle `q` at time `t`.
    pub fn z_profile(&self, q: usize, t: f64) -> Vec<f64> {
        let l = self.structure.block_of(q);
        let (_, hi) = self.structure.block(l);
        let mut out = vec![0.0; self.dim];
        for e in &self.entries {
            let early = e.time >= t;
            let sign = if e.k <= hi {
                // in-block pair (k inside C_l)
                let hit = if early {
                    e.j < q && q <= e.k
                } else {
                    e.j <= q && q < e.k
                };
                if hit {
                    -1.0
                } else {
                    0.0
                }
            } else if e.j <= hi {
                // pair leaving C_l upward
                let hit = if early { q <= e.j } else { q < e.j };
                if hit {
                    1.0
                } else {
                    0.0
                }
            } else {
                0.0
            };
            if sign != 0.0 {
                for (o, s) in out.iter_mut().zip(&e.step) {
                    *o += sign * s;
                }
            }
        }
        out
    }

    /// `Z^l_1`, the profile of the first particle of block `l` at `t = 0`.
    pub fn block_constraint(&self, l: usize) -> Vec<f64> {
        let (lo, _) = self.structure.block(l);
        self.z_profile(lo, 0.0)
    }

    /// Sorted distinct breakpoints, always containing 0 and 1.
    fn breakpoints(&self) -> Vec<f64> {
        let mut ts: Vec<f64> = self.entries.iter().map(|e| e.time).collect();
        ts.push(0.0);
        ts.push(1.0);
        ts.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        ts.dedup();
        ts
    }

    /// Block average `(1/n_l) sum_{q in C_l} int_0^1 Z_q(t) dt` by piecewise
    /// integration over the breakpoint segments. This is the oracle route.
    pub fn cycle_mean_direct(&self, l: usize) -> Vec<f64> {
        let (lo, hi) = self.structure.block(l);
        let ts = self.breakpoints();
        let mut acc = vec![0.0; self.dim];
        for q in lo..=hi {
            for seg in ts.windows(2) {
                let (a, b) = (seg[0], seg[1]);
                let z = self.z_profile(q, 0.5 * (a + b));
                for (s, c) in acc.iter_mut().zip(&z) {
                    *s += c * (b - a);
                }
            }
        }
        let nl = (hi - lo + 1) as f64;
        acc.iter_mut().for_each(|c| *c /= nl);
        acc
    }

    /// Closed form of the same block average, linear in the stored times:
    ///
    /// ```text
    /// n_l mean_l = - sum_{pairs inside C_l} (k - j) x
    ///              - sum_{j in earlier blocks, k in C_l} (k - N_{l-1} - 1 + t) x
    ///              + sum_{j in C_l, k in later blocks} (j - N_{l-1} - 1 + t) x
    /// ```
    pub fn cycle_mean_closed(&self, l: usize) -> Vec<f64> {
        let (lo, hi) = self.structure.block(l);
        let base = lo - 1; // N_{l-1}
        let mut acc = vec![0.0; self.dim];
        for e in &self.entries {
            let j_in = e.j >= lo && e.j <= hi;
            let k_in = e.k >= lo && e.k <= hi;
            let coef = if j_in && k_in {
                -((e.k - e.j) as f64)
            } else if k_in && e.j < lo {
                -((e.k - base - 1) as f64 + e.time)
            } else if j_in && e.k > hi {
                (e.j - base - 1) as f64 + e.time
            } else {
                0.0
            };
            if coef != 0.0 {
                for (s, c) in acc.iter_mut().zip(&e.step) {
                    *s += coef * c;
                }
            }
        }
        let nl = (hi - lo + 1) as f64;
        acc.iter_mut().for_each(|c| *c /= nl);
        acc
    }

    /// `(1/n_0) sum_{q in C_0} int_0^1 |Z_q(t)|^2 dt` by piecewise
    /// integration; the oracle for the closed quadratic form.
    pub fn second_moment_direct(&self) -> f64 {
        let (lo, hi) = self.structure.block(0);
        let ts = self.breakpoints();
        let mut acc = 0.0;
        for q in lo..=hi {
            for seg in ts.windows(2) {
                let (a, b) = (seg[0], seg[1]);
                let z = self.z_profile(q, 0.5 * (a + b));
                let sq: f64 = z.iter().map(|c| c * c).sum();
                acc += sq * (b - a);
            }
        }
        acc / (hi - lo + 1) as f64
    }

    /// Closed form of the averaged square over block 0 via the A coefficient
    /// tables. Entries are split into in-block pairs (`j < k <= n_0`) and
    /// outgoing pairs (`j <= n_0 < k`); pairs not touching block 0 do not
    /// enter `Z_q` for `q <= n_0`.
    ///
    /// Coincidences between *distinct* pairs sharing a particle index are not
    /// covered by the tables and yield an error; two entries on the *same*
    /// pair are handled exactly (`k - j - |t - t'|` in-block, the min rule
    /// for outgoing pairs).
    pub fn second_moment_closed(&self) -> Result<f64> {
        let (_, hi) = self.structure.block(0);
        let n0 = hi;
        let mut intra: Vec<&StepEntry> = Vec::new();
        let mut cross: Vec<&StepEntry> = Vec::new();
        for e in &self.entries {
            if e.k <= n0 {
                intra.push(e);
            } else if e.j <= n0 {
                cross.push(e);
            }
        }
        // Distinct in-block pairs must not share any particle index, and no
        // outgoing pair may attach to a particle of an in-block pair.
        for (a, ea) in intra.iter().enumerate() {
            for eb in intra.iter().skip(a + 1) {
                let same_pair = ea.j == eb.j && ea.k == eb.k;
                if !same_pair && (ea.j == eb.j || ea.j == eb.k || ea.k == eb.j || ea.k == eb.k) {
                    return Err(Error::Assignment(format!(
                        "A tables need distinct indices: pairs ({},{}) and ({},{})",
                        ea.j, ea.k, eb.j, eb.k
                    )));
                }
            }
            for ec in &cross {
                if ec.j == ea.j || ec.j == ea.k {
                    return Err(Error::Assignment(format!(
                        "A tables need distinct indices: pair ({},{}) vs outgoing j = {}",
                        ea.j, ea.k, ec.j
                    )));
                }
            }
        }

        let mut total = 0.0;
        // in-block x in-block
        for (a, ea) in intra.iter().enumerate() {
            for (b, eb) in intra.iter().enumerate() {
                let coef = if a == b {
                    (ea.k - ea.j) as f64
                } else if ea.j == eb.j && ea.k == eb.k {
                    (ea.k - ea.j) as f64 - (ea.time - eb.time).abs()
                } else {
                    a_intra_intra(ea, eb)
                };
                if coef != 0.0 {
                    total += coef * dot(&ea.step, &eb.step);
                }
            }
        }
        // outgoing x outgoing: min(j - 1 + t, j' - 1 + t'), exact for every
        // index coincidence.
        for ea in &cross {
            for eb in &cross {
                let ca = (ea.j - 1) as f64 + ea.time;
                let cb = (eb.j - 1) as f64 + eb.time;
                total += ca.min(cb) * dot(&ea.step, &eb.step);
            }
        }
        // in-block x outgoing, counted twice with opposite orientations.
        for ea in &intra {
            for eb in &cross {
                let coef = a_intra_cross(ea, eb);
                if coef != 0.0 {
                    total += -2.0 * coef * dot(&ea.step, &eb.step);
                }
            }
        }
        Ok(total / n0 as f64)
    }

    /// Interaction norms `(norm0, norm_plus, total)`: in-block entries are
    /// weighted by their index distance `k - j`, outgoing entries by the
    /// in-block index `j`.
    pub fn alpha_norms(&self) -> (u64, u64, u64) {
        let (_, hi) = self.structure.block(0);
        let mut norm0 = 0u64;
        let mut plus = 0u64;
        for e in &self.entries {
            if e.k <= hi {
                norm0 += (e.k - e.j) as u64;
            } else if e.j <= hi {
                plus += e.j as u64;
            }
        }
        (norm0, plus, norm0 + plus)
    }

    /// Multigraph on the cycles: one edge per inter-block entry.
    fn cycle_graph(&self) -> Vec<(usize, usize)> {
        self.entries
            .iter()
            .filter_map(|e| {
                let a = self.structure.block_of(e.j);
                let b = self.structure.block_of(e.k);
                (a != b).then_some((a.min(b), a.max(b)))
            })
            .collect()
    }

    /// Admissibility of the inter-cycle multigraph: every maximal connected
    /// component that is not an isolated vertex must be bridgeless (every
    /// edge on a cycle; parallel edges count as a 2-cycle). A bridge would
    /// force its step sum to vanish alone, which nonzero vectors cannot do.
    pub fn merger_check(&self) -> bool {
        let edges = self.cycle_graph();
        !has_bridge(self.structure.cycles(), &edges)
    }

    /// Rank over the rationals of the linear system `{Z^l_1 = 0}` in the
    /// inter-cycle step entries, per spatial component (the component systems
    /// are identical). Entry `(j in C_a, k in C_b)` appears with +1 in row
    /// `a` and -1 in row `b`, which is the incidence matrix of the graph.
    pub fn constraint_rank(&self) -> usize {
        let p1 = self.structure.cycles();
        let cols: Vec<(usize, usize)> = self
            .entries
            .iter()
            .filter_map(|e| {
                let a = self.structure.block_of(e.j);
                let b = self.structure.block_of(e.k);
                (a != b).then_some((a, b))
            })
            .collect();
        if cols.is_empty() {
            return 0;
        }
        let mut m: Vec<Vec<i64>> = vec![vec![0; cols.len()]; p1];
        for (c, &(a, b)) in cols.iter().enumerate() {
            m[a][c] += 1;
            m[b][c] -= 1;
        }
        integer_rank(m)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A coefficient for two in-block pairs with four distinct indices; the five
/// relative orders of `{j, k}` vs `{j', k'}`.
fn a_intra_intra(e: &StepEntry, f: &StepEntry) -> f64 {
    let (j, k, jp, kp) = (e.j, e.k, f.j, f.k);
    if kp < j || k < jp {
        0.0
    } else if jp < j && k < kp {
        (k - j) as f64
    } else if j < jp && kp < k {
        (kp - jp) as f64
    } else if j < jp && k < kp {
        (k - jp) as f64 + e.time - f.time
    } else {
        // jp < j && kp < k
        (kp - j) as f64 + f.time - e.time
    }
}

/// A coefficient between an in-block pair `(j, k)` and an outgoing pair with
/// in-block index `j'`; exact also at the coincidences `j' = j`, `j' = k`.
fn a_intra_cross(e: &StepEntry, f: &StepEntry) -> f64 {
    let (j, k, jp) = (e.j, e.k, f.j);
    if k < jp {
        (k - j) as f64
    } else if j < jp && jp < k {
        (jp - j) as f64 + f.time - e.time
    } else if jp < j {
        0.0
    } else if jp == j {
        (f.time - e.time).max(0.0)
    } else {
        // jp == k
        (k - j) as f64 - (e.time - f.time).max(0.0)
    }
}

/// Bridge detection in a multigraph given as an edge list.
fn has_bridge(vertices: usize, edges: &[(usize, usize)]) -> bool {
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); vertices];
    for (id, &(a, b)) in edges.iter().enumerate() {
        adj[a].push((b, id));
        adj[b].push((a, id));
    }
    let mut disc = vec![usize::MAX; vertices];
    let mut low = vec![0usize; vertices];
    let mut timer = 0usize;
    let mut found = false;
    // iterative DFS with explicit parent-edge ids so parallel edges survive
    for root in 0..vertices {
        if disc[root] != usize::MAX || adj[root].is_empty() {
            continue;
        }
        let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        while let Some(frame) = stack.last_mut() {
            let (v, pe, idx) = (frame.0, frame.1, frame.2);
            if idx < adj[v].len() {
                frame.2 += 1;
                let (to, id) = adj[v][idx];
                if id == pe {
                    continue;
                }
                if disc[to] == usize::MAX {
                    disc[to] = timer;
                    low[to] = timer;
                    timer += 1;
                    stack.push((to, id, 0));
                } else {
                    low[v] = low[v].min(disc[to]);
                }
            } else {
                stack.pop();
                if let Some(parent_frame) = stack.last() {
                    let parent = parent_frame.0;
                    low[parent] = low[parent].min(low[v]);
                    if low[v] > disc[parent] {
                        found = true;
                    }
                }
            }
        }
    }
    found
}

/// Rank of an integer matrix by fraction-free Gaussian elimination in i128.
fn integer_rank(m: Vec<Vec<i64>>) -> usize {
    let rows = m.len();
    if rows == 0 {
        return 0;
    }
    let cols = m[0].len();
    let mut w: Vec<Vec<i128>> = m
        .into_iter()
        .map(|r| r.into_iter().map(|x| x as i128).collect())
        .collect();
    let mut rank = 0;
    let mut col = 0;
    while rank < rows && col < cols {
        let pivot = (rank..rows).find(|&r| w[r][col] != 0);
        let Some(p) = pivot else {
            col += 1;
            continue;
        };
        w.swap(rank, p);
        for r in (rank + 1)..rows {
            if w[r][col] != 0 {
                let (a, b) = (w[rank][col], w[r][col]);
                let g = gcd(a.unsigned_abs(), b.unsigned_abs()) as i128;
                let (fa, fb) = (a / g, b / g);
                for c in col..cols {
                    w[r][c] = w[r][c] * fa - w[rank][c] * fb;
                }
            }
        }
        rank += 1;
        col += 1;
    }
    rank
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.max(1)
}

/// Whether the solution set of `{Z^l_1 = 0}` forces the selected inter-cycle
/// entry to vanish: true iff the coordinate functional of that entry lies in
/// the row space of the incidence system.
pub fn entry_forced_zero(assignment: &AlphaAssignment, entry_index: usize) -> bool {
    let s = &assignment.structure;
    let cols: Vec<usize> = assignment
        .entries
        .iter()
        .enumerate()
        .filter_map(|(i, e)| (s.block_of(e.j) != s.block_of(e.k)).then_some(i))
        .collect();
    let Some(pos) = cols.iter().position(|&i| i == entry_index) else {
        return false;
    };
    let p1 = s.cycles();
    let mut m: Vec<Vec<i64>> = vec![vec![0; cols.len()]; p1];
    for (c, &i) in cols.iter().enumerate() {
        let e = &assignment.entries[i];
        m[s.block_of(e.j)][c] += 1;
        m[s.block_of(e.k)][c] -= 1;
    }
    let base = integer_rank(m.clone());
    let mut probe = vec![0i64; cols.len()];
    probe[pos] = 1;
    m.push(probe);
    integer_rank(m) == base
}
