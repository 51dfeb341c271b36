//! Rewiring engines and the joint (walk, graph) chain.
//!
//! Every engine is generic over a [`PairingStore`], so the same code drives a
//! fully materialized [`Configuration`], a journaled copy that can be rolled
//! back between replicas, and a lazily revealed uniform configuration used for
//! annealed Monte Carlo on large graphs.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Configuration, HalfEdgeSpace};
use crate::HalfEdge;

/// Which edges a rewiring set contains, relative to the walker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EdgeSelector {
    /// The edge the walker sits on.
    Local,
    /// Edges the walker can reach within `r - 1` frozen steps.
    Near { r: usize },
    /// Every edge.
    All,
}

impl EdgeSelector {
    fn contains(self, other: EdgeSelector) -> bool {
        use EdgeSelector::*;
        match (self, other) {
            (All, _) => true,
            (_, All) => false,
            (Near { r: a }, Near { r: b }) => b <= a,
            (Near { .. }, Local) | (Local, Local) => true,
            (Local, Near { r }) => r == 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Mechanism {
    Local,
    Near {
        r: usize,
    },
    Global,
    /// Rewire Bernoulli edges of `k`, re-pairing inside `l`.
    Custom {
        k: EdgeSelector,
        l: EdgeSelector,
    },
}

impl Mechanism {
    pub fn k_selector(self) -> EdgeSelector {
        match self {
            Mechanism::Local => EdgeSelector::Local,
            Mechanism::Near { r } => EdgeSelector::Near { r },
            Mechanism::Global => EdgeSelector::All,
            Mechanism::Custom { k, .. } => k,
        }
    }

    pub fn l_selector(self) -> EdgeSelector {
        match self {
            Mechanism::Custom { l, .. } => l,
            _ => EdgeSelector::All,
        }
    }

    /// Short label used in output tables.
    pub fn label(self) -> &'static str {
        match self {
            Mechanism::Local => "local",
            Mechanism::Near { .. } => "near",
            Mechanism::Global => "global",
            Mechanism::Custom { .. } => "custom",
        }
    }

    pub fn radius(self) -> Option<usize> {
        match self {
            Mechanism::Near { r } => Some(r),
            _ => None,
        }
    }
}

/// Rewiring mechanism plus the per-edge rewiring probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicsSpec {
    #[serde(flatten)]
    pub mechanism: Mechanism,
    pub alpha: f64,
}

impl DynamicsSpec {
    pub fn new(mechanism: Mechanism, alpha: f64) -> Result<Self> {
        let spec = Self { mechanism, alpha };
        spec.validate()?;
        Ok(spec)
    }

    pub fn local(alpha: f64) -> Result<Self> {
        Self::new(Mechanism::Local, alpha)
    }

    pub fn near(r: usize, alpha: f64) -> Result<Self> {
        Self::new(Mechanism::Near { r }, alpha)
    }

    pub fn global(alpha: f64) -> Result<Self> {
        Self::new(Mechanism::Global, alpha)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!(
                "alpha = {} not in [0, 1]",
                self.alpha
            )));
        }
        for sel in [self.mechanism.k_selector(), self.mechanism.l_selector()] {
            if let EdgeSelector::Near { r: 0 } = sel {
                return Err(Error::InvalidParameter(
                    "near radius must be at least 1".into(),
                ));
            }
        }
        let (k, l) = (self.mechanism.k_selector(), self.mechanism.l_selector());
        if !l.contains(k) {
            return Err(Error::Unsupported(format!(
                "rewiring set {k:?} is not contained in re-pairing set {l:?}"
            )));
        }
        Ok(())
    }

    /// True when the rewiring law does not depend on the walker.
    pub fn is_walk_independent(&self) -> bool {
        self.mechanism.k_selector() == EdgeSelector::All
    }
}

/// Re-pairing branch taken by a rewiring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// Every half-edge of `R ∪ L` re-paired uniformly.
    ResampleUnion,
    /// `|R|` partner edges drawn from `L \ R` and paired across.
    DrawPartners,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewireRecord {
    pub t: u64,
    /// Rewired edges of the configuration before the step.
    pub edges: Vec<(HalfEdge, HalfEdge)>,
    pub branch: Branch,
}

/// A set of edges given by explicit half-edge pairs, or every edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EdgeSet {
    All,
    Edges(Vec<(HalfEdge, HalfEdge)>),
}

/// Read/write access to a pairing that may be revealed on demand.
pub trait PairingStore {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Partner of `h`, revealing it if needed.
    fn partner<R: Rng + ?Sized>(&mut self, h: HalfEdge, rng: &mut R) -> HalfEdge;

    /// Pairs two already revealed half-edges.
    fn pair(&mut self, a: HalfEdge, b: HalfEdge);

    /// Reveals every partner.
    fn materialize<R: Rng + ?Sized>(&mut self, rng: &mut R);
}

impl PairingStore for Configuration {
    fn len(&self) -> usize {
        Configuration::len(self)
    }

    #[inline]
    fn partner<R: Rng + ?Sized>(&mut self, h: HalfEdge, _rng: &mut R) -> HalfEdge {
        Configuration::partner(self, h)
    }

    #[inline]
    fn pair(&mut self, a: HalfEdge, b: HalfEdge) {
        self.set_partner(a, b);
        self.set_partner(b, a);
    }

    fn materialize<R: Rng + ?Sized>(&mut self, _rng: &mut R) {}
}

/// A configuration whose modifications can be undone.
#[derive(Debug, Clone)]
pub struct JournaledConfig {
    cfg: Configuration,
    journal: Vec<(u32, u32)>,
}

impl JournaledConfig {
    pub fn new(cfg: Configuration) -> Self {
        Self {
            cfg,
            journal: Vec::new(),
        }
    }

    pub fn current(&self) -> &Configuration {
        &self.cfg
    }

    /// Restores the configuration passed to [`JournaledConfig::new`].
    pub fn reset(&mut self) {
        while let Some((h, p)) = self.journal.pop() {
            self.cfg.set_partner(h as usize, p as usize);
        }
    }
}

impl PairingStore for JournaledConfig {
    fn len(&self) -> usize {
        self.cfg.len()
    }

    #[inline]
    fn partner<R: Rng + ?Sized>(&mut self, h: HalfEdge, _rng: &mut R) -> HalfEdge {
        self.cfg.partner(h)
    }

    fn pair(&mut self, a: HalfEdge, b: HalfEdge) {
        self.journal.push((a as u32, self.cfg.partner(a) as u32));
        self.journal.push((b as u32, self.cfg.partner(b) as u32));
        self.cfg.set_partner(a, b);
        self.cfg.set_partner(b, a);
    }

    fn materialize<R: Rng + ?Sized>(&mut self, _rng: &mut R) {}
}

const UNREVEALED: u32 = u32::MAX;

/// A uniform configuration revealed one pair at a time.
///
/// Given everything revealed so far, the unrevealed half-edges are uniformly
/// matched among themselves, so revealing on demand yields exactly the uniform
/// configuration law. Rewiring only touches revealed half-edges, which keeps
/// that property along a trajectory.
#[derive(Debug, Clone)]
pub struct LazyConfig {
    partner: Vec<u32>,
    pool: Vec<u32>,
    pos: Vec<u32>,
    revealed: Vec<u32>,
    pool_log: Vec<(u32, u32)>,
}

impl LazyConfig {
    pub fn new(len: usize) -> Self {
        Self {
            partner: vec![UNREVEALED; len],
            pool: (0..len as u32).collect(),
            pos: (0..len as u32).collect(),
            revealed: Vec::new(),
            pool_log: Vec::new(),
        }
    }

    pub fn revealed_count(&self) -> usize {
        self.revealed.len()
    }

    /// Forgets every revealed pair, restoring the exact initial state.
    pub fn reset(&mut self) {
        for &h in &self.revealed {
            self.partner[h as usize] = UNREVEALED;
        }
        self.revealed.clear();
        while let Some((idx, e)) = self.pool_log.pop() {
            let idx = idx as usize;
            if idx < self.pool.len() {
                let moved = self.pool[idx];
                self.pool.push(moved);
                self.pos[moved as usize] = (self.pool.len() - 1) as u32;
                self.pool[idx] = e;
            } else {
                self.pool.push(e);
            }
            self.pos[e as usize] = idx as u32;
        }
    }

    fn take(&mut self, idx: usize) -> u32 {
        let e = self.pool[idx];
        let last = self.pool.pop().expect("pool is nonempty");
        if idx < self.pool.len() {
            self.pool[idx] = last;
            self.pos[last as usize] = idx as u32;
        }
        self.pool_log.push((idx as u32, e));
        e
    }

    fn reveal<R: Rng + ?Sized>(&mut self, h: u32, rng: &mut R) -> u32 {
        self.take(self.pos[h as usize] as usize);
        let j = rng.random_range(0..self.pool.len());
        let g = self.take(j);
        self.partner[h as usize] = g;
        self.partner[g as usize] = h;
        self.revealed.push(h);
        self.revealed.push(g);
        g
    }

    /// The full configuration, if every pair has been revealed.
    pub fn to_configuration(&self) -> Option<Configuration> {
        if self.partner.contains(&UNREVEALED) {
            return None;
        }
        Some(Configuration::from_raw(self.partner.clone()))
    }
}

impl PairingStore for LazyConfig {
    fn len(&self) -> usize {
        self.partner.len()
    }

    #[inline]
    fn partner<R: Rng + ?Sized>(&mut self, h: HalfEdge, rng: &mut R) -> HalfEdge {
        let p = self.partner[h];
        if p != UNREVEALED {
            p as usize
        } else {
            self.reveal(h as u32, rng) as usize
        }
    }

    fn pair(&mut self, a: HalfEdge, b: HalfEdge) {
        debug_assert!(self.partner[a] != UNREVEALED && self.partner[b] != UNREVEALED);
        self.partner[a] = b as u32;
        self.partner[b] = a as u32;
    }

    fn materialize<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        while let Some(&h) = self.pool.last() {
            self.reveal(h, rng);
        }
    }
}

/// Epoch-stamped membership marks over half-edges.
#[derive(Debug, Clone, Default)]
struct Marks {
    stamp: Vec<u32>,
    epoch: u32,
}

impl Marks {
    fn clear(&mut self, len: usize) {
        if self.stamp.len() != len {
            self.stamp = vec![0; len];
            self.epoch = 0;
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
    }

    #[inline]
    fn get(&self, h: usize) -> bool {
        self.stamp[h] == self.epoch
    }

    /// Marks `h`; returns false if it was already marked.
    #[inline]
    fn insert(&mut self, h: usize) -> bool {
        let fresh = self.stamp[h] != self.epoch;
        self.stamp[h] = self.epoch;
        fresh
    }
}

/// Reusable buffers for the rewiring engines.
#[derive(Debug, Clone, Default)]
pub struct Scratch {
    edge_marks: Marks,
    seen: Marks,
    k_edges: Vec<(HalfEdge, HalfEdge)>,
    r_edges: Vec<(HalfEdge, HalfEdge)>,
    partners: Vec<(HalfEdge, HalfEdge)>,
    pool: Vec<(HalfEdge, HalfEdge)>,
    half: Vec<HalfEdge>,
    frontier: Vec<HalfEdge>,
    next: Vec<HalfEdge>,
}

/// The edge `{h, cfg(h)}` as an ordered pair.
pub fn local_set(cfg: &Configuration, h: HalfEdge) -> (HalfEdge, HalfEdge) {
    let g = cfg.partner(h);
    (h.min(g), h.max(g))
}

/// Edges `{k, cfg(k)}` over positions `k` the walk can occupy `0..r` frozen
/// steps after `h`, sorted.
pub fn near_set(
    space: &HalfEdgeSpace,
    cfg: &Configuration,
    h: HalfEdge,
    r: usize,
) -> Vec<(HalfEdge, HalfEdge)> {
    let mut store = cfg.clone();
    let mut scratch = Scratch::default();
    // the store is fully revealed, so no randomness is drawn
    let mut rng = crate::rng::stream_rng(0, 0);
    near_edges(space, &mut store, h, r, &mut rng, &mut scratch);
    let mut out = scratch.k_edges;
    out.sort_unstable();
    out
}

/// Fills `scratch.k_edges` with the near set of `h`.
fn near_edges<S: PairingStore + ?Sized, R: Rng + ?Sized>(
    space: &HalfEdgeSpace,
    store: &mut S,
    h: HalfEdge,
    r: usize,
    rng: &mut R,
    sc: &mut Scratch,
) {
    let len = store.len();
    sc.seen.clear(len);
    sc.edge_marks.clear(len);
    sc.k_edges.clear();
    sc.frontier.clear();
    sc.frontier.push(h);
    sc.seen.insert(h);
    for depth in 0..r {
        sc.next.clear();
        for i in 0..sc.frontier.len() {
            let k = sc.frontier[i];
            let g = store.partner(k, rng);
            let rep = k.min(g);
            if sc.edge_marks.insert(rep) {
                sc.k_edges.push((rep, k.max(g)));
            }
            if depth + 1 < r {
                for y in space.siblings(g) {
                    if sc.seen.insert(y) {
                        sc.next.push(y);
                    }
                }
            }
        }
        core::mem::swap(&mut sc.frontier, &mut sc.next);
        if sc.frontier.is_empty() {
            break;
        }
    }
}

fn uniform_edge<S: PairingStore + ?Sized, R: Rng + ?Sized>(
    store: &mut S,
    rng: &mut R,
) -> (HalfEdge, HalfEdge) {
    let h = rng.random_range(0..store.len());
    let g = store.partner(h, rng);
    (h.min(g), h.max(g))
}

/// Appends `k` distinct uniform edges not in `sc.edge_marks` to `out`, marking them.
fn draw_unmarked_edges<S: PairingStore + ?Sized, R: Rng + ?Sized>(
    store: &mut S,
    k: usize,
    free: usize,
    rng: &mut R,
    marks: &mut Marks,
    pool: &mut Vec<(HalfEdge, HalfEdge)>,
    out: &mut Vec<(HalfEdge, HalfEdge)>,
) {
    let m = store.len() / 2;
    if 4 * (m - free + k) <= m {
        // acceptance stays above three quarters
        let mut got = 0;
        while got < k {
            let e = uniform_edge(store, rng);
            if marks.insert(e.0) {
                out.push(e);
                got += 1;
            }
        }
    } else {
        store.materialize(rng);
        pool.clear();
        for h in 0..store.len() {
            let g = store.partner(h, rng);
            if h < g && !marks.get(h) {
                pool.push((h, g));
            }
        }
        let (chosen, _) = pool.partial_shuffle(rng, k);
        for &e in chosen.iter() {
            marks.insert(e.0);
            out.push(e);
        }
    }
}

/// Executes one `(K)`-to-`(L)` rewiring; `K` must already be in
/// `sc.k_edges` unless `k_all`. Leaves `R_t` in `sc.r_edges`.
fn rewire_engine<S: PairingStore + ?Sized, R: Rng + ?Sized>(
    store: &mut S,
    k_all: bool,
    l: Option<&[(HalfEdge, HalfEdge)]>,
    alpha: f64,
    rng: &mut R,
    sc: &mut Scratch,
) -> Option<Branch> {
    sc.r_edges.clear();
    let len = store.len();
    let m = len / 2;
    sc.edge_marks.clear(len);
    if alpha <= 0.0 {
        return None;
    }
    if k_all {
        let k = if alpha >= 1.0 {
            m
        } else {
            Binomial::new(m as u64, alpha)
                .expect("alpha in (0, 1)")
                .sample(rng) as usize
        };
        draw_unmarked_edges(
            store,
            k,
            m,
            rng,
            &mut sc.edge_marks,
            &mut sc.pool,
            &mut sc.r_edges,
        );
    } else {
        for i in 0..sc.k_edges.len() {
            if alpha >= 1.0 || rng.random::<f64>() < alpha {
                let e = sc.k_edges[i];
                sc.edge_marks.insert(e.0);
                sc.r_edges.push(e);
            }
        }
    }
    let k = sc.r_edges.len();
    if k == 0 {
        return None;
    }
    let l_size = l.map_or(m, |e| e.len());
    if k >= l_size - k {
        sc.half.clear();
        match l {
            None => {
                store.materialize(rng);
                sc.half.extend(0..len);
            }
            Some(edges) => {
                for &(a, b) in edges {
                    sc.half.push(a);
                    sc.half.push(b);
                }
            }
        }
        sc.half.shuffle(rng);
        for pair in sc.half.chunks_exact(2) {
            store.pair(pair[0], pair[1]);
        }
        Some(Branch::ResampleUnion)
    } else {
        sc.partners.clear();
        match l {
            None => draw_unmarked_edges(
                store,
                k,
                m - k,
                rng,
                &mut sc.edge_marks,
                &mut sc.pool,
                &mut sc.partners,
            ),
            Some(edges) => {
                sc.pool.clear();
                sc.pool
                    .extend(edges.iter().copied().filter(|e| !sc.edge_marks.get(e.0)));
                let (chosen, _) = sc.pool.partial_shuffle(rng, k);
                sc.partners.extend_from_slice(chosen);
            }
        }
        sc.half.clear();
        for &(a, b) in &sc.partners {
            sc.half.push(a);
            sc.half.push(b);
        }
        sc.half.shuffle(rng);
        for (i, &(a, b)) in sc.r_edges.iter().enumerate() {
            store.pair(a, sc.half[2 * i]);
            store.pair(b, sc.half[2 * i + 1]);
        }
        Some(Branch::DrawPartners)
    }
}

/// Rewires `cfg` with explicit `K` and `L` (`K ⊆ L`, or `L` all edges).
pub fn rewire_step<R: Rng + ?Sized>(
    cfg: &Configuration,
    k: &EdgeSet,
    l: &EdgeSet,
    alpha: f64,
    rng: &mut R,
) -> Result<(Configuration, Option<RewireRecord>)> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!(
            "alpha = {alpha} not in [0, 1]"
        )));
    }
    let norm = |e: &[(HalfEdge, HalfEdge)]| -> Result<Vec<(HalfEdge, HalfEdge)>> {
        let mut v = Vec::with_capacity(e.len());
        for &(a, b) in e {
            if a >= cfg.len() || cfg.partner(a) != b {
                return Err(Error::InvalidParameter(format!(
                    "({a}, {b}) is not an edge of the configuration"
                )));
            }
            v.push((a.min(b), a.max(b)));
        }
        v.sort_unstable();
        v.dedup();
        Ok(v)
    };
    let k_edges = match k {
        EdgeSet::All => None,
        EdgeSet::Edges(e) => Some(norm(e)?),
    };
    let l_edges = match l {
        EdgeSet::All => None,
        EdgeSet::Edges(e) => Some(norm(e)?),
    };
    match (&k_edges, &l_edges) {
        (None, Some(_)) => {
            return Err(Error::Unsupported(
                "K = all edges requires L = all edges".into(),
            ))
        }
        (Some(ke), Some(le)) if ke.iter().any(|e| le.binary_search(e).is_err()) => {
            return Err(Error::Unsupported("K must be contained in L".into()))
        }
        _ => {}
    }
    let mut out = cfg.clone();
    let mut sc = Scratch::default();
    if let Some(ke) = &k_edges {
        sc.k_edges.clone_from(ke);
    }
    let branch = rewire_engine(
        &mut out,
        k_edges.is_none(),
        l_edges.as_deref(),
        alpha,
        rng,
        &mut sc,
    );
    let record = branch.map(|branch| RewireRecord {
        t: 0,
        edges: sc.r_edges.clone(),
        branch,
    });
    Ok((out, record))
}

/// Walker position, configuration, cumulative rewired flags, time and `τ`.
#[derive(Debug, Clone)]
pub struct JointState<S = Configuration> {
    pub x: HalfEdge,
    pub cfg: S,
    flags: Vec<bool>,
    flagged: Vec<u32>,
    t: u64,
    tau: Option<u64>,
    scratch: Scratch,
    l_buf: Vec<(HalfEdge, HalfEdge)>,
}

impl<S: PairingStore> JointState<S> {
    pub fn new(cfg: S, x: HalfEdge) -> Self {
        let len = cfg.len();
        assert!(x < len, "start half-edge out of range");
        Self {
            x,
            cfg,
            flags: vec![false; len],
            flagged: Vec::new(),
            t: 0,
            tau: None,
            scratch: Scratch::default(),
            l_buf: Vec::new(),
        }
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn tau(&self) -> Option<u64> {
        self.tau
    }

    /// Whether half-edge `h` lies on an edge rewired so far.
    pub fn is_flagged(&self, h: HalfEdge) -> bool {
        self.flags[h]
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    /// Restarts at `x` with cleared flags; the store is left as is.
    pub fn restart(&mut self, x: HalfEdge) {
        for &h in &self.flagged {
            self.flags[h as usize] = false;
        }
        self.flagged.clear();
        self.x = x;
        self.t = 0;
        self.tau = None;
    }

    /// Advances one step of the joint chain.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        space: &HalfEdgeSpace,
        spec: &DynamicsSpec,
        rng: &mut R,
    ) {
        self.step_inner(space, spec, rng);
    }

    /// As [`JointState::step`], also returning the rewiring that happened.
    pub fn step_recorded<R: Rng + ?Sized>(
        &mut self,
        space: &HalfEdgeSpace,
        spec: &DynamicsSpec,
        rng: &mut R,
    ) -> Option<RewireRecord> {
        self.step_inner(space, spec, rng)
            .map(|branch| RewireRecord {
                t: self.t,
                edges: self.scratch.r_edges.clone(),
                branch,
            })
    }

    fn fill_selector<R: Rng + ?Sized>(
        &mut self,
        space: &HalfEdgeSpace,
        sel: EdgeSelector,
        rng: &mut R,
    ) {
        match sel {
            EdgeSelector::All => self.scratch.k_edges.clear(),
            EdgeSelector::Local => {
                let g = self.cfg.partner(self.x, rng);
                self.scratch.k_edges.clear();
                self.scratch.k_edges.push((self.x.min(g), self.x.max(g)));
            }
            EdgeSelector::Near { r } => {
                near_edges(space, &mut self.cfg, self.x, r, rng, &mut self.scratch)
            }
        }
    }

    /// Performs only the rewiring part of a step: the configuration and the
    /// flags change, the walker and the clock do not.
    pub fn rewire_only<R: Rng + ?Sized>(
        &mut self,
        space: &HalfEdgeSpace,
        spec: &DynamicsSpec,
        rng: &mut R,
    ) -> Option<Branch> {
        if spec.alpha > 0.0 {
            let k_sel = spec.mechanism.k_selector();
            let l_sel = spec.mechanism.l_selector();
            let l_given = l_sel != EdgeSelector::All;
            if l_given {
                self.fill_selector(space, l_sel, rng);
                core::mem::swap(&mut self.l_buf, &mut self.scratch.k_edges);
            }
            self.fill_selector(space, k_sel, rng);
            let l = if l_given { Some(&self.l_buf[..]) } else { None };
            let branch = rewire_engine(
                &mut self.cfg,
                k_sel == EdgeSelector::All,
                l,
                spec.alpha,
                rng,
                &mut self.scratch,
            );
            for &(a, b) in &self.scratch.r_edges {
                for h in [a, b] {
                    if !self.flags[h] {
                        self.flags[h] = true;
                        self.flagged.push(h as u32);
                    }
                }
            }
            branch
        } else {
            None
        }
    }

    fn step_inner<R: Rng + ?Sized>(
        &mut self,
        space: &HalfEdgeSpace,
        spec: &DynamicsSpec,
        rng: &mut R,
    ) -> Option<Branch> {
        let branch = self.rewire_only(space, spec, rng);
        self.t += 1;
        if self.tau.is_none() && self.flags[self.x] {
            self.tau = Some(self.t);
        }
        let g = self.cfg.partner(self.x, rng);
        let k = space.forward_degree(g);
        self.x = if k == 1 {
            space.sibling(g, 0)
        } else {
            space.sibling(g, rng.random_range(0..k))
        };
        debug_assert_ne!(self.x, g, "walk backtracked");
        branch
    }
}

impl JointState<Configuration> {
    pub fn configuration(&self) -> &Configuration {
        &self.cfg
    }
}

/// Trajectory options for [`run_trajectory`].
#[derive(Debug, Clone, Copy, Default)]
pub struct TrajectoryOptions {
    pub stop_at_tau: bool,
    pub record_positions: bool,
    pub record_rewires: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    /// `X_0, X_1, …` when recorded.
    pub positions: Vec<HalfEdge>,
    /// `I_1, I_2, …` when positions are recorded.
    pub indicators: Vec<bool>,
    pub tau: Option<u64>,
    pub steps: u64,
    pub rewires: Vec<RewireRecord>,
    pub final_configuration: Vec<HalfEdge>,
}

/// Runs the joint chain from `(x0, cfg0)` for up to `t_max` steps.
pub fn run_trajectory<R: Rng + ?Sized>(
    space: &HalfEdgeSpace,
    cfg0: &Configuration,
    x0: HalfEdge,
    spec: &DynamicsSpec,
    t_max: u64,
    rng: &mut R,
    options: TrajectoryOptions,
) -> TrajectoryRecord {
    let mut state = JointState::new(cfg0.clone(), x0);
    let mut rec = TrajectoryRecord {
        positions: Vec::new(),
        indicators: Vec::new(),
        tau: None,
        steps: 0,
        rewires: Vec::new(),
        final_configuration: Vec::new(),
    };
    if options.record_positions {
        rec.positions.push(x0);
    }
    while state.t() < t_max {
        if options.stop_at_tau && state.tau().is_some() {
            break;
        }
        let before = state.x;
        if options.record_rewires {
            if let Some(r) = state.step_recorded(space, spec, rng) {
                rec.rewires.push(r);
            }
        } else {
            state.step(space, spec, rng);
        }
        if options.record_positions {
            rec.positions.push(state.x);
            rec.indicators.push(state.is_flagged(before));
        }
    }
    rec.tau = state.tau();
    rec.steps = state.t();
    rec.final_configuration = state.cfg.pairing().collect();
    rec
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::sample_uniform_configuration;
    use crate::rng::stream_rng;
    use crate::walk::nbrw_step;

    fn cycle4() -> (HalfEdgeSpace, Configuration) {
        let s = HalfEdgeSpace::new(&[2, 2, 2, 2]).unwrap();
        let c = Configuration::from_pairing(vec![7, 2, 1, 4, 3, 6, 5, 0]).unwrap();
        (s, c)
    }

    #[test]
    fn near_one_is_local() {
        let s = HalfEdgeSpace::new(&[3, 4, 3, 4, 2]).unwrap();
        let mut rng = stream_rng(3, 0);
        for _ in 0..50 {
            let c = sample_uniform_configuration(&s, &mut rng);
            for h in 0..s.len() {
                assert_eq!(near_set(&s, &c, h, 1), vec![local_set(&c, h)]);
            }
        }
    }

    #[test]
    fn near_two_on_cycle() {
        let (s, c) = cycle4();
        // from half-edge 1 the walk crosses {1,2} then sits on 3
        assert_eq!(near_set(&s, &c, 1, 2), vec![(1, 2), (3, 4)]);
    }

    #[test]
    fn near_set_matches_path_enumeration() {
        let s = HalfEdgeSpace::new(&[3, 3, 2, 2, 2]).unwrap();
        let mut rng = stream_rng(4, 0);
        for _ in 0..20 {
            let c = sample_uniform_configuration(&s, &mut rng);
            for h in 0..s.len() {
                for r in 1..6 {
                    // every walk path of length < r from h
                    let mut oracle = Vec::new();
                    let mut paths = vec![h];
                    for _ in 0..r {
                        let mut next = Vec::new();
                        for &k in &paths {
                            oracle.push(local_set(&c, k));
                            next.extend(s.siblings(c.partner(k)));
                        }
                        paths = next;
                    }
                    oracle.sort_unstable();
                    oracle.dedup();
                    assert_eq!(near_set(&s, &c, h, r), oracle);
                }
            }
        }
    }

    #[test]
    fn alpha_zero_leaves_configuration() {
        let s = HalfEdgeSpace::new(&[3; 6]).unwrap();
        let mut rng = stream_rng(1, 0);
        let c = sample_uniform_configuration(&s, &mut rng);
        let (out, rec) = rewire_step(&c, &EdgeSet::All, &EdgeSet::All, 0.0, &mut rng).unwrap();
        assert_eq!(out, c);
        assert!(rec.is_none());
    }

    #[test]
    fn local_partner_is_uniform_off_the_old_edge() {
        let s = HalfEdgeSpace::new(&[3, 3, 2]).unwrap();
        let c = Configuration::from_pairing(vec![3, 4, 6, 0, 1, 7, 2, 5]).unwrap();
        let x = 0;
        let mut counts = vec![0usize; s.len()];
        let mut rng = stream_rng(11, 0);
        let trials = 60_000;
        for _ in 0..trials {
            let k = EdgeSet::Edges(vec![local_set(&c, x)]);
            let (out, rec) = rewire_step(&c, &k, &EdgeSet::All, 1.0, &mut rng).unwrap();
            assert_eq!(rec.unwrap().branch, Branch::DrawPartners);
            counts[out.partner(x)] += 1;
        }
        assert_eq!(counts[x] + counts[c.partner(x)], 0);
        let p = 1.0 / (s.len() - 2) as f64;
        let sd = (p * (1.0 - p) / trials as f64).sqrt();
        for (h, &k) in counts.iter().enumerate() {
            if h != x && h != c.partner(x) {
                assert!((k as f64 / trials as f64 - p).abs() < 4.0 * sd, "h={h}");
            }
        }
    }

    #[test]
    fn global_rewired_count_is_binomial() {
        let s = HalfEdgeSpace::new(&[3; 8]).unwrap();
        let mut rng = stream_rng(12, 0);
        let c = sample_uniform_configuration(&s, &mut rng);
        let m = 12u64;
        let alpha = 0.2;
        let trials = 100_000;
        let mut hist = vec![0usize; m as usize + 1];
        for _ in 0..trials {
            let (_, rec) = rewire_step(&c, &EdgeSet::All, &EdgeSet::All, alpha, &mut rng).unwrap();
            hist[rec.map_or(0, |r| r.edges.len())] += 1;
        }
        let mut binom = 1.0f64;
        for (k, &count) in hist.iter().enumerate() {
            if k > 0 {
                binom *= (m as f64 - k as f64 + 1.0) / k as f64;
            }
            let p = binom * alpha.powi(k as i32) * (1.0 - alpha).powi((m - k as u64) as i32);
            let sd = (p * (1.0 - p) / trials as f64).sqrt();
            assert!(
                (count as f64 / trials as f64 - p).abs() <= 4.0 * sd + 1e-9,
                "k={k}"
            );
        }
    }

    #[test]
    fn branch_b_partners_are_disjoint_and_degrees_kept() {
        let s = HalfEdgeSpace::new(&[3, 4, 5, 2, 3, 3, 2, 2]).unwrap();
        let mut rng = stream_rng(13, 0);
        for _ in 0..2000 {
            let c = sample_uniform_configuration(&s, &mut rng);
            let (out, rec) = rewire_step(&c, &EdgeSet::All, &EdgeSet::All, 0.2, &mut rng).unwrap();
            out.validate().unwrap();
            if let Some(rec) = rec {
                for &(a, b) in &rec.edges {
                    assert_eq!(c.partner(a), b);
                }
                if rec.branch == Branch::DrawPartners {
                    let changed = (0..s.len())
                        .filter(|&h| out.partner(h) != c.partner(h))
                        .count();
                    assert!(changed <= 4 * rec.edges.len());
                }
            }
        }
    }

    #[test]
    fn global_alpha_one_flags_everything_at_once() {
        let s = HalfEdgeSpace::new(&[3; 10]).unwrap();
        let mut rng = stream_rng(14, 0);
        let c = sample_uniform_configuration(&s, &mut rng);
        let spec = DynamicsSpec::global(1.0).unwrap();
        for seed in 0..20 {
            let rec = run_trajectory(
                &s,
                &c,
                0,
                &spec,
                5,
                &mut stream_rng(seed, 0),
                TrajectoryOptions::default(),
            );
            assert_eq!(rec.tau, Some(1));
        }
    }

    #[test]
    fn alpha_zero_joint_path_is_static_path() {
        let s = HalfEdgeSpace::new(&[3, 4, 3, 2, 4]).unwrap();
        let c = sample_uniform_configuration(&s, &mut stream_rng(2, 0));
        for mech in [
            Mechanism::Local,
            Mechanism::Near { r: 3 },
            Mechanism::Global,
        ] {
            let spec = DynamicsSpec::new(mech, 0.0).unwrap();
            let opts = TrajectoryOptions {
                record_positions: true,
                ..Default::default()
            };
            let rec = run_trajectory(&s, &c, 1, &spec, 40, &mut stream_rng(5, 1), opts);
            let mut rng = stream_rng(5, 1);
            let mut y = 1;
            for t in 1..=40 {
                y = nbrw_step(&s, &c, y, &mut rng);
                assert_eq!(rec.positions[t], y);
            }
            assert_eq!(rec.tau, None);
        }
    }

    #[test]
    fn lazy_reset_restores_exact_state() {
        let mut lazy = LazyConfig::new(20);
        let mut rng = stream_rng(1, 0);
        let fresh = lazy.clone();
        for _ in 0..5 {
            lazy.partner(3, &mut rng);
            lazy.partner(7, &mut rng);
            lazy.materialize(&mut rng);
            assert!(lazy.to_configuration().unwrap().is_valid());
            lazy.reset();
            assert_eq!(lazy.partner, fresh.partner);
            assert_eq!(lazy.pool, fresh.pool);
            assert_eq!(lazy.pos, fresh.pos);
        }
    }

    #[test]
    fn lazy_reveal_is_uniform() {
        let mut lazy = LazyConfig::new(4);
        let mut rng = stream_rng(2, 0);
        let mut counts = [0usize; 4];
        let trials = 60_000;
        for _ in 0..trials {
            lazy.materialize(&mut rng);
            let c = lazy.to_configuration().unwrap();
            counts[c.partner(0)] += 1;
            lazy.reset();
        }
        for &k in &counts[1..] {
            assert!((k as f64 / trials as f64 - 1.0 / 3.0).abs() < 0.01);
        }
        assert_eq!(counts[0], 0);
    }

    #[test]
    fn journal_reset_restores_configuration() {
        let s = HalfEdgeSpace::new(&[3; 8]).unwrap();
        let c = sample_uniform_configuration(&s, &mut stream_rng(3, 0));
        let mut st = JointState::new(JournaledConfig::new(c.clone()), 0);
        let spec = DynamicsSpec::global(0.3).unwrap();
        let mut rng = stream_rng(3, 1);
        for _ in 0..30 {
            st.step(&s, &spec, &mut rng);
        }
        assert_ne!(st.cfg.current(), &c);
        st.cfg.reset();
        assert_eq!(st.cfg.current(), &c);
    }

    #[test]
    fn spec_validation() {
        assert!(DynamicsSpec::local(1.5).is_err());
        assert!(DynamicsSpec::near(0, 0.1).is_err());
        let bad = Mechanism::Custom {
            k: EdgeSelector::All,
            l: EdgeSelector::Near { r: 3 },
        };
        assert!(DynamicsSpec::new(bad, 0.1).is_err());
        let ok = Mechanism::Custom {
            k: EdgeSelector::Local,
            l: EdgeSelector::Near { r: 3 },
        };
        assert!(DynamicsSpec::new(ok, 0.1).is_ok());
    }
}
