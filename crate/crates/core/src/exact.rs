//! Exhaustive small-instance matrices and oracles.
//!
//! Rewiring outcomes are enumerated exactly: every Bernoulli subset `R` of
//! `K` with weight `α^|R| (1 − α)^{|K| − |R|}`, then either every matching of
//! the freed half-edges or every partner set together with every bijection
//! between the two sides.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dynamics::{near_set, DynamicsSpec, EdgeSelector};
use crate::error::{Error, Result};
use crate::graph::{enumerate_configurations, enumerate_matchings, Configuration, HalfEdgeSpace};
use crate::walk::tv_to_uniform;
use crate::HalfEdge;

/// Largest state count for which dense matrices are built.
pub const DENSE_STATE_CAP: usize = 4096;
/// Largest flag-augmented state count for the `τ` oracle.
pub const FLAG_STATE_CAP: usize = 1_000_000;

/// Row-major square matrix of transition probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidParameter("matrix is not square".into()));
        }
        Ok(Self {
            dim,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] += v;
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.dim];
        for i in 0..self.dim {
            for (s, v) in sums.iter_mut().zip(self.row(i)) {
                *s += v;
            }
        }
        sums
    }

    /// One whitespace-separated row per line.
    pub fn to_dense_text(&self) -> alloc::string::String {
        use core::fmt::Write;
        let mut out = alloc::string::String::new();
        for i in 0..self.dim {
            for (j, v) in self.row(i).iter().enumerate() {
                if j > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{v:e}");
            }
            out.push('\n');
        }
        out
    }

    /// `v · M`.
    pub fn left_multiply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, &w) in v.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (o, m) in out.iter_mut().zip(self.row(i)) {
                *o += w * m;
            }
        }
        out
    }
}

/// All configurations on a space, sorted for lookup.
#[derive(Debug, Clone)]
pub struct ConfigIndex {
    configs: Vec<Configuration>,
}

impl ConfigIndex {
    pub fn new(space: &HalfEdgeSpace) -> Result<Self> {
        let mut configs: Vec<Configuration> = enumerate_configurations(space)?.collect();
        configs.sort_unstable();
        Ok(Self { configs })
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn configs(&self) -> &[Configuration] {
        &self.configs
    }

    pub fn index_of(&self, cfg: &Configuration) -> usize {
        self.configs
            .binary_search(cfg)
            .expect("configuration belongs to the enumerated space")
    }
}

/// One outcome of a rewiring step.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub cfg: Configuration,
    pub prob: f64,
    /// Half-edges of the rewired edges, as a bit mask.
    pub rewired: u64,
}

fn edge_list(
    space: &HalfEdgeSpace,
    cfg: &Configuration,
    x: HalfEdge,
    sel: EdgeSelector,
) -> Vec<(HalfEdge, HalfEdge)> {
    match sel {
        EdgeSelector::All => cfg.edges().collect(),
        EdgeSelector::Local => near_set(space, cfg, x, 1),
        EdgeSelector::Near { r } => near_set(space, cfg, x, r),
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product::<f64>().max(1.0)
}

/// Calls `f` with every `k`-subset of `0..n` in lexicographic order.
fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    if k > n {
        return;
    }
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] < n - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
            if i == 0 {
                return;
            }
        }
    }
}

/// Calls `f` with every permutation of `0..n` (Heap's algorithm).
fn for_each_permutation(n: usize, mut f: impl FnMut(&[usize])) {
    let mut a: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    f(&a);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            f(&a);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Every outcome of one rewiring of `cfg` with the walker at `x`.
///
/// Outcomes with equal configuration and rewired set are merged.
pub fn rewire_outcomes(
    space: &HalfEdgeSpace,
    cfg: &Configuration,
    x: HalfEdge,
    spec: &DynamicsSpec,
) -> Result<Vec<Outcome>> {
    spec.validate()?;
    if space.len() > 64 {
        return Err(Error::CapExceeded {
            what: "|H|",
            value: space.len(),
            cap: 64,
        });
    }
    let alpha = spec.alpha;
    let k_edges = edge_list(space, cfg, x, spec.mechanism.k_selector());
    let l_edges = edge_list(space, cfg, x, spec.mechanism.l_selector());
    if k_edges.len() > 20 {
        return Err(Error::CapExceeded {
            what: "|K|",
            value: k_edges.len(),
            cap: 20,
        });
    }
    let mut out: Vec<Outcome> = Vec::new();
    let mut push = |cfg: Configuration, prob: f64, rewired: u64| {
        if prob == 0.0 {
            return;
        }
        if let Some(o) = out
            .iter_mut()
            .find(|o| o.rewired == rewired && o.cfg == cfg)
        {
            o.prob += prob;
        } else {
            out.push(Outcome { cfg, prob, rewired });
        }
    };
    let kn = k_edges.len();
    for mask in 0u32..(1u32 << kn) {
        let k = mask.count_ones() as usize;
        let w = libm::pow(alpha, k as f64) * libm::pow(1.0 - alpha, (kn - k) as f64);
        if w == 0.0 {
            continue;
        }
        if k == 0 {
            push(cfg.clone(), w, 0);
            continue;
        }
        let r: Vec<(HalfEdge, HalfEdge)> = (0..kn)
            .filter(|&i| mask >> i & 1 == 1)
            .map(|i| k_edges[i])
            .collect();
        let rewired = r.iter().fold(0u64, |m, &(a, b)| m | 1 << a | 1 << b);
        let rest: Vec<(HalfEdge, HalfEdge)> =
            l_edges.iter().copied().filter(|e| !r.contains(e)).collect();
        if k >= rest.len() {
            let mut half: Vec<HalfEdge> = Vec::new();
            for &(a, b) in r.iter().chain(&rest) {
                half.push(a);
                half.push(b);
            }
            half.sort_unstable();
            let count = crate::graph::matching_count(half.len()) as f64;
            for m in enumerate_matchings(half.len(), usize::MAX)? {
                let mut next = cfg.clone();
                for (i, j) in m.edges() {
                    next.set_partner(half[i], half[j]);
                    next.set_partner(half[j], half[i]);
                }
                push(next, w / count, rewired);
            }
        } else {
            let sets = binomial(rest.len(), k);
            let perms = factorial(2 * k);
            let a_side: Vec<HalfEdge> = r.iter().flat_map(|&(a, b)| [a, b]).collect();
            for_each_subset(rest.len(), k, |chosen| {
                let b_side: Vec<HalfEdge> = chosen
                    .iter()
                    .flat_map(|&i| [rest[i].0, rest[i].1])
                    .collect();
                for_each_permutation(2 * k, |pi| {
                    let mut next = cfg.clone();
                    for (i, &a) in a_side.iter().enumerate() {
                        let b = b_side[pi[i]];
                        next.set_partner(a, b);
                        next.set_partner(b, a);
                    }
                    push(next, w / (sets * perms), rewired);
                });
            });
        }
    }
    Ok(out)
}

/// Outcome with its configuration replaced by an index.
#[derive(Debug, Clone, Copy, PartialEq)]
struct IndexedOutcome {
    cfg: usize,
    prob: f64,
    rewired: u64,
}

/// Cached outcomes for every `(ξ, x)`.
struct OutcomeTable {
    index: ConfigIndex,
    len: usize,
    rows: Vec<Vec<IndexedOutcome>>,
}

impl OutcomeTable {
    fn new(space: &HalfEdgeSpace, spec: &DynamicsSpec) -> Result<Self> {
        let index = ConfigIndex::new(space)?;
        let len = space.len();
        let mut rows = Vec::with_capacity(index.len() * len);
        for cfg in index.configs() {
            for x in 0..len {
                let outs = rewire_outcomes(space, cfg, x, spec)?;
                rows.push(
                    outs.into_iter()
                        .map(|o| IndexedOutcome {
                            cfg: index.index_of(&o.cfg),
                            prob: o.prob,
                            rewired: o.rewired,
                        })
                        .collect(),
                );
            }
        }
        Ok(Self { index, len, rows })
    }

    fn get(&self, cfg: usize, x: HalfEdge) -> &[IndexedOutcome] {
        &self.rows[cfg * self.len + x]
    }
}

fn check_dense(states: usize) -> Result<()> {
    if states > DENSE_STATE_CAP {
        return Err(Error::CapExceeded {
            what: "dense state count",
            value: states,
            cap: DENSE_STATE_CAP,
        });
    }
    Ok(())
}

/// `Q_x(ξ, η)` over all configurations, for a walker frozen at `x`.
pub fn graph_transition_matrix(
    space: &HalfEdgeSpace,
    x: HalfEdge,
    spec: &DynamicsSpec,
) -> Result<(ConfigIndex, DenseMatrix)> {
    let index = ConfigIndex::new(space)?;
    check_dense(index.len())?;
    if x >= space.len() {
        return Err(Error::InvalidParameter(
            "walker half-edge out of range".into(),
        ));
    }
    let mut m = DenseMatrix::zeros(index.len());
    for (i, cfg) in index.configs().iter().enumerate() {
        for o in rewire_outcomes(space, cfg, x, spec)? {
            m.add(i, index.index_of(&o.cfg), o.prob);
        }
    }
    Ok((index, m))
}

/// Enumerated joint states `(x, ξ)`, indexed as `ξ_index · |H| + x`.
#[derive(Debug, Clone)]
pub struct JointStateSpace {
    pub configs: ConfigIndex,
    pub len: usize,
}

impl JointStateSpace {
    pub fn state_count(&self) -> usize {
        self.configs.len() * self.len
    }

    pub fn index(&self, x: HalfEdge, cfg: usize) -> usize {
        cfg * self.len + x
    }

    /// `(x, ξ_index)` of a state.
    pub fn state(&self, i: usize) -> (HalfEdge, usize) {
        (i % self.len, i / self.len)
    }
}

/// `P((y, η) → (z, ζ)) = Q_y(η, ζ) P_ζ(y, z)`.
pub fn joint_transition_matrix(
    space: &HalfEdgeSpace,
    spec: &DynamicsSpec,
) -> Result<(JointStateSpace, DenseMatrix)> {
    let states = crate::graph::matching_count(space.len()) * space.len();
    if space.len() > crate::graph::ENUMERATION_CAP {
        return Err(Error::CapExceeded {
            what: "|H|",
            value: space.len(),
            cap: crate::graph::ENUMERATION_CAP,
        });
    }
    check_dense(states)?;
    let table = OutcomeTable::new(space, spec)?;
    let js = JointStateSpace {
        configs: table.index.clone(),
        len: space.len(),
    };
    let mut m = DenseMatrix::zeros(js.state_count());
    for ci in 0..js.configs.len() {
        for y in 0..space.len() {
            let from = js.index(y, ci);
            for o in table.get(ci, y) {
                let zeta = &js.configs.configs()[o.cfg];
                let g = zeta.partner(y);
                let share = o.prob / space.forward_degree(g) as f64;
                for z in space.siblings(g) {
                    m.add(from, js.index(z, o.cfg), share);
                }
            }
        }
    }
    Ok((js, m))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StochasticityReport {
    pub max_row_deviation: f64,
    pub worst_row: usize,
    pub max_column_deviation: f64,
    pub worst_column: usize,
    pub min_entry: f64,
    pub row_stochastic: bool,
    pub column_stochastic: bool,
    pub pass: bool,
}

pub fn verify_double_stochastic(m: &DenseMatrix, tol: f64) -> StochasticityReport {
    let worst = |sums: Vec<f64>| {
        sums.iter()
            .enumerate()
            .map(|(i, s)| (libm::fabs(s - 1.0), i))
            .fold((0.0, 0), |a, b| if b.0 > a.0 { b } else { a })
    };
    let (row_dev, worst_row) = worst(m.row_sums());
    let (col_dev, worst_column) = worst(m.column_sums());
    let min_entry = m.data.iter().copied().fold(f64::INFINITY, f64::min);
    let row_ok = row_dev <= tol && min_entry >= 0.0;
    let col_ok = col_dev <= tol;
    StochasticityReport {
        max_row_deviation: row_dev,
        worst_row,
        max_column_deviation: col_dev,
        worst_column,
        min_entry,
        row_stochastic: row_ok,
        column_stochastic: col_ok,
        pass: row_ok && col_ok,
    }
}

/// `max_j |(u M)_j − u_j|` for the uniform vector `u`.
pub fn uniform_stationarity_deviation(m: &DenseMatrix) -> f64 {
    let u = vec![1.0 / m.dim() as f64; m.dim()];
    m.left_multiply(&u)
        .iter()
        .map(|v| libm::fabs(v - u[0]))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IrreducibilityReport {
    /// States reachable from state 0.
    pub reachable: usize,
    /// States that reach state 0.
    pub coreachable: usize,
    pub irreducible: bool,
    /// Period of the class of state 0.
    pub period: u64,
    pub aperiodic: bool,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Strong connectivity of the positive-entry digraph, and the period of the
/// class of state 0 from breadth-first levels: the gcd of
/// `level(u) + 1 − level(v)` over edges `u → v` inside the class.
pub fn verify_irreducible_aperiodic(m: &DenseMatrix) -> IrreducibilityReport {
    let n = m.dim();
    let succ: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| m.get(i, j) > 0.0).collect())
        .collect();
    let mut pred: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, s) in succ.iter().enumerate() {
        for &j in s {
            pred[j].push(i);
        }
    }
    let bfs = |adj: &Vec<Vec<usize>>| {
        let mut level = vec![u64::MAX; n];
        if n == 0 {
            return level;
        }
        level[0] = 0;
        let mut queue = alloc::collections::VecDeque::from([0usize]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if level[v] == u64::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        level
    };
    let fwd = bfs(&succ);
    let back = bfs(&pred);
    let in_class = |i: usize| fwd[i] != u64::MAX && back[i] != u64::MAX;
    let reachable = fwd.iter().filter(|&&l| l != u64::MAX).count();
    let coreachable = back.iter().filter(|&&l| l != u64::MAX).count();
    let mut period = 0;
    for u in (0..n).filter(|&u| in_class(u)) {
        for &v in &succ[u] {
            if in_class(v) {
                let d = (fwd[u] + 1).abs_diff(fwd[v]);
                period = gcd(period, d);
            }
        }
    }
    IrreducibilityReport {
        reachable,
        coreachable,
        irreducible: reachable == n && coreachable == n,
        period,
        aperiodic: period == 1,
    }
}

/// Exact `P(τ > t)` for `t = 0..=t_max` from uniform `(x, ξ)`.
///
/// The state is `(ξ, x, flags)` with one cumulative flag per half-edge; mass
/// is absorbed when the walker's half-edge is flagged after a rewiring.
pub fn exact_tau_tail_small(
    space: &HalfEdgeSpace,
    spec: &DynamicsSpec,
    t_max: u64,
) -> Result<Vec<f64>> {
    let len = space.len();
    if len > crate::graph::ENUMERATION_CAP {
        return Err(Error::CapExceeded {
            what: "|H|",
            value: len,
            cap: crate::graph::ENUMERATION_CAP,
        });
    }
    let confs = crate::graph::matching_count(len);
    let states = confs
        .checked_mul(len)
        .and_then(|s| s.checked_mul(1usize << len))
        .unwrap_or(usize::MAX);
    if states > FLAG_STATE_CAP {
        return Err(Error::CapExceeded {
            what: "flag-augmented state count",
            value: states,
            cap: FLAG_STATE_CAP,
        });
    }
    let table = OutcomeTable::new(space, spec)?;
    let flag_count = 1usize << len;
    let at = |c: usize, x: usize, f: usize| (c * len + x) * flag_count + f;
    let mut cur = vec![0.0; states];
    let p0 = 1.0 / (confs * len) as f64;
    for c in 0..confs {
        for x in 0..len {
            cur[at(c, x, 0)] = p0;
        }
    }
    let mut next = vec![0.0; states];
    let mut tail = Vec::with_capacity(t_max as usize + 1);
    tail.push(1.0);
    for _ in 0..t_max {
        next.iter_mut().for_each(|v| *v = 0.0);
        for c in 0..confs {
            for x in 0..len {
                for f in 0..flag_count {
                    let p = cur[at(c, x, f)];
                    if p == 0.0 {
                        continue;
                    }
                    for o in table.get(c, x) {
                        let flags = f | o.rewired as usize;
                        if flags >> x & 1 == 1 {
                            continue;
                        }
                        let zeta = &table.index.configs()[o.cfg];
                        let g = zeta.partner(x);
                        let share = p * o.prob / space.forward_degree(g) as f64;
                        for z in space.siblings(g) {
                            next[at(o.cfg, z, flags)] += share;
                        }
                    }
                }
            }
        }
        core::mem::swap(&mut cur, &mut next);
        tail.push(cur.iter().sum());
    }
    Ok(tail)
}

/// Exact `D_dyn(t)` for `t = 0..=t_max` from `(x0, cfg0)`.
pub fn exact_dynamic_tv_small(
    space: &HalfEdgeSpace,
    spec: &DynamicsSpec,
    x0: HalfEdge,
    cfg0: &Configuration,
    t_max: u64,
) -> Result<Vec<f64>> {
    let len = space.len();
    if len > crate::graph::ENUMERATION_CAP {
        return Err(Error::CapExceeded {
            what: "|H|",
            value: len,
            cap: crate::graph::ENUMERATION_CAP,
        });
    }
    if x0 >= len || cfg0.len() != len {
        return Err(Error::InvalidParameter(
            "start does not match the space".into(),
        ));
    }
    let table = OutcomeTable::new(space, spec)?;
    let confs = table.index.len();
    let mut cur = vec![0.0; confs * len];
    cur[table.index.index_of(cfg0) * len + x0] = 1.0;
    let mut next = vec![0.0; confs * len];
    let marginal = |v: &[f64]| {
        let mut m = vec![0.0; len];
        for (i, &p) in v.iter().enumerate() {
            m[i % len] += p;
        }
        tv_to_uniform(&m)
    };
    let mut out = Vec::with_capacity(t_max as usize + 1);
    out.push(marginal(&cur));
    for _ in 0..t_max {
        next.iter_mut().for_each(|v| *v = 0.0);
        for c in 0..confs {
            for y in 0..len {
                let p = cur[c * len + y];
                if p == 0.0 {
                    continue;
                }
                for o in table.get(c, y) {
                    let zeta = &table.index.configs()[o.cfg];
                    let g = zeta.partner(y);
                    let share = p * o.prob / space.forward_degree(g) as f64;
                    for z in space.siblings(g) {
                        next[o.cfg * len + z] += share;
                    }
                }
            }
        }
        core::mem::swap(&mut cur, &mut next);
        out.push(marginal(&cur));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Mechanism;

    #[test]
    fn subsets_and_permutations_count() {
        let mut n = 0;
        for_each_subset(6, 3, |_| n += 1);
        assert_eq!(n, 20);
        let mut seen = alloc::collections::BTreeSet::new();
        for_each_permutation(4, |p| {
            seen.insert(p.to_vec());
        });
        assert_eq!(seen.len(), 24);
        let mut n = 0;
        for_each_subset(3, 0, |s| {
            assert!(s.is_empty());
            n += 1
        });
        assert_eq!(n, 1);
    }

    #[test]
    fn alpha_zero_is_identity() {
        let s = HalfEdgeSpace::new(&[3, 3]).unwrap();
        for mech in [
            Mechanism::Local,
            Mechanism::Near { r: 2 },
            Mechanism::Global,
        ] {
            let spec = DynamicsSpec::new(mech, 0.0).unwrap();
            let (idx, m) = graph_transition_matrix(&s, 0, &spec).unwrap();
            assert_eq!(m, DenseMatrix::identity(idx.len()));
        }
    }

    #[test]
    fn local_off_diagonal_entries() {
        let s = HalfEdgeSpace::new(&[3, 3]).unwrap();
        let alpha = 0.3;
        let spec = DynamicsSpec::local(alpha).unwrap();
        for x in 0..6 {
            let (idx, m) = graph_transition_matrix(&s, x, &spec).unwrap();
            for i in 0..idx.len() {
                assert!((m.get(i, i) - (1.0 - alpha)).abs() < 1e-15);
                for j in 0..idx.len() {
                    let v = m.get(i, j);
                    if i != j && v != 0.0 {
                        assert!((v - alpha / 4.0).abs() < 1e-15);
                        let (a, b) = (&idx.configs()[i], &idx.configs()[j]);
                        // the walker's edge is replaced and exactly two edges differ
                        assert_ne!(a.partner(x), b.partner(x));
                        let differ = (0..6).filter(|&h| a.partner(h) != b.partner(h)).count();
                        assert_eq!(differ, 4);
                    }
                }
            }
        }
    }

    #[test]
    fn perturbed_matrix_fails_at_located_column() {
        let mut m = DenseMatrix::identity(3);
        assert!(verify_double_stochastic(&m, 0.0).pass);
        m.set(0, 0, 0.8);
        m.set(0, 2, 0.2);
        m.set(1, 1, 0.9);
        m.set(1, 2, 0.1);
        let r = verify_double_stochastic(&m, 1e-12);
        assert!(r.row_stochastic);
        assert!(!r.column_stochastic);
        assert_eq!(r.worst_column, 2);
    }

    #[test]
    fn two_cycle_has_period_two() {
        let m = DenseMatrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let r = verify_irreducible_aperiodic(&m);
        assert!(r.irreducible);
        assert_eq!(r.period, 2);
        let m = DenseMatrix::from_rows(vec![vec![0.5, 0.5], vec![1.0, 0.0]]).unwrap();
        assert!(verify_irreducible_aperiodic(&m).aperiodic);
        assert!(!verify_irreducible_aperiodic(&DenseMatrix::identity(2)).irreducible);
    }

    #[test]
    fn tau_oracle_trivial_cases() {
        let s = HalfEdgeSpace::new(&[3, 3]).unwrap();
        let zero = exact_tau_tail_small(&s, &DynamicsSpec::local(0.0).unwrap(), 4).unwrap();
        assert!(zero.iter().all(|&p| (p - 1.0).abs() < 1e-12));
        let one = exact_tau_tail_small(&s, &DynamicsSpec::global(1.0).unwrap(), 3).unwrap();
        assert_eq!(one[0], 1.0);
        assert!(one[1].abs() < 1e-15);
    }

    #[test]
    fn tv_oracle_alpha_zero_is_static() {
        let s = HalfEdgeSpace::new(&[3, 3, 2]).unwrap();
        let cfg = Configuration::from_pairing(vec![3, 4, 6, 0, 1, 7, 2, 5]).unwrap();
        let spec = DynamicsSpec::local(0.0).unwrap();
        let exact = exact_dynamic_tv_small(&s, &spec, 0, &cfg, 6).unwrap();
        let stat = crate::walk::static_tv_curve(&s, &cfg, 0, 6);
        for (a, b) in exact.iter().zip(&stat) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!((exact[0] - (1.0 - 1.0 / 8.0)).abs() < 1e-15);
    }
}
