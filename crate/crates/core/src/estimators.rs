//! Monte Carlo estimators, short-cut auditing and the static/dynamic link.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{DynamicsSpec, JointState, JournaledConfig, LazyConfig};
use crate::error::{Error, Result};
use crate::graph::{sample_uniform_configuration, Configuration, HalfEdgeSpace};
use crate::rng::{stream_rng, BOOTSTRAP_STREAM, SETUP_STREAM};
use crate::walk::{propagate_into, static_tv_curve, tv_to_uniform};
use crate::HalfEdge;

/// Two-sided 99% standard normal quantile.
pub const Z_99: f64 = 2.5758293035489004;

const CHUNK: u64 = 256;

/// Runs `f(ctx, replica)` for every replica, one context per chunk, and
/// returns the results in replica order whatever the thread count.
fn map_replicas<T, C, I, F>(replicas: u64, init: I, f: F) -> Vec<T>
where
    T: Send,
    I: Fn() -> C + Sync,
    F: Fn(&mut C, u64) -> T + Sync,
{
    let chunks = replicas.div_ceil(CHUNK);
    let run = |c: u64| -> Vec<T> {
        let mut ctx = init();
        (c * CHUNK..((c + 1) * CHUNK).min(replicas))
            .map(|i| f(&mut ctx, i))
            .collect()
    };
    #[cfg(feature = "parallel")]
    let parts: Vec<Vec<T>> = {
        use rayon::prelude::*;
        (0..chunks).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<Vec<T>> = (0..chunks).map(run).collect();
    parts.into_iter().flatten().collect()
}

/// Wilson score interval for `successes` out of `n` at normal quantile `z`.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z * libm::sqrt(p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)) / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Where replicas start.
#[derive(Debug, Clone, PartialEq)]
pub enum Start {
    /// Fresh uniform `(x, ξ)` per replica.
    Annealed,
    /// Every replica starts from the same `(x, ξ)`.
    Shared { x: HalfEdge, cfg: Configuration },
}

/// The shared start drawn from the setup stream of `seed`.
pub fn shared_start(space: &HalfEdgeSpace, seed: u64) -> (HalfEdge, Configuration) {
    let mut rng = stream_rng(seed, SETUP_STREAM);
    let x = rng.random_range(0..space.len());
    let cfg = sample_uniform_configuration(space, &mut rng);
    (x, cfg)
}

/// `τ` of each replica, `None` when it exceeds `t_max`.
///
/// Replica `i` uses stream `i` of `seed`; an annealed replica first draws its
/// start half-edge and then reveals its configuration lazily.
pub fn simulate_taus(
    space: &HalfEdgeSpace,
    spec: &DynamicsSpec,
    t_max: u64,
    replicas: u64,
    seed: u64,
    start: &Start,
) -> Result<Vec<Option<u64>>> {
    spec.validate()?;
    let len = space.len();
    Ok(match start {
        Start::Annealed => map_replicas(
            replicas,
            || JointState::new(LazyConfig::new(len), 0),
            |st, i| {
                let mut rng = stream_rng(seed, i);
                st.cfg.reset();
                st.restart(rng.random_range(0..len));
                run_until_tau(st, space, spec, t_max, &mut rng)
            },
        ),
        Start::Shared { x, cfg } => {
            check_start(space, *x, cfg)?;
            map_replicas(
                replicas,
                || JointState::new(JournaledConfig::new(cfg.clone()), *x),
                |st, i| {
                    let mut rng = stream_rng(seed, i);
                    st.cfg.reset();
                    st.restart(*x);
                    run_until_tau(st, space, spec, t_max, &mut rng)
                },
            )
        }
    })
}

fn check_start(space: &HalfEdgeSpace, x: HalfEdge, cfg: &Configuration) -> Result<()> {
    if cfg.len() != space.len() || x >= space.len() {
        return Err(Error::InvalidParameter(
            "start does not match the half-edge space".into(),
        ));
    }
    Ok(())
}

fn run_until_tau<S: crate::dynamics::PairingStore, R: Rng + ?Sized>(
    st: &mut JointState<S>,
    space: &HalfEdgeSpace,
    spec: &DynamicsSpec,
    t_max: u64,
    rng: &mut R,
) -> Option<u64> {
    while st.t() < t_max && st.tau().is_none() {
        st.step(space, spec, rng);
    }
    st.tau()
}

/// Empirical `P(τ > t)` with Wilson intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub t_grid: Vec<u64>,
    pub survivors: Vec<u64>,
    pub estimate: Vec<f64>,
    pub ci: Vec<(f64, f64)>,
    pub replicas: u64,
    pub seed: u64,
    pub z: f64,
}

impl TailEstimate {
    pub fn from_taus(t_grid: &[u64], taus: &[Option<u64>], seed: u64, z: f64) -> Self {
        let n = taus.len() as u64;
        let survivors: Vec<u64> = t_grid
            .iter()
            .map(|&t| taus.iter().filter(|tau| tau.is_none_or(|v| v > t)).count() as u64)
            .collect();
        let estimate = survivors
            .iter()
            .map(|&s| if n == 0 { 1.0 } else { s as f64 / n as f64 })
            .collect();
        let ci = survivors
            .iter()
            .map(|&s| wilson_interval(s, n, z))
            .collect();
        Self {
            t_grid: t_grid.to_vec(),
            survivors,
            estimate,
            ci,
            replicas: n,
            seed,
            z,
        }
    }

    /// Binomial standard error at grid index `i`.
    pub fn std_error(&self, i: usize) -> f64 {
        let p = self.estimate[i];
        libm::sqrt(p * (1.0 - p) / self.replicas as f64)
    }

    /// Point estimates nonincreasing along increasing `t`, up to CI slack.
    pub fn is_monotone(&self) -> bool {
        let mut idx: Vec<usize> = (0..self.t_grid.len()).collect();
        idx.sort_by_key(|&i| self.t_grid[i]);
        idx.windows(2)
            .all(|w| self.estimate[w[1]] <= self.ci[w[0]].1.max(self.estimate[w[0]]))
    }
}

/// Monte Carlo `P(τ > t)` over `t_grid` at the 99% Wilson level.
pub fn estimate_tau_tail(
    space: &HalfEdgeSpace,
    spec: &DynamicsSpec,
    t_grid: &[u64],
    replicas: u64,
    seed: u64,
    annealed: bool,
) -> Result<TailEstimate> {
    if replicas == 0 {
        return Err(Error::InvalidParameter(
            "replicas must be at least 1".into(),
        ));
    }
    let start = if annealed {
        Start::Annealed
    } else {
        let (x, cfg) = shared_start(space, seed);
        Start::Shared { x, cfg }
    };
    estimate_tau_tail_from(space, spec, t_grid, replicas, seed, &start)
}

pub fn estimate_tau_tail_from(
    space: &HalfEdgeSpace,
    spec: &DynamicsSpec,
    t_grid: &[u64],
    replicas: u64,
    seed: u64,
    start: &Start,
) -> Result<TailEstimate> {
    let t_max = t_grid.iter().copied().max().unwrap_or(0);
    let taus = simulate_taus(space, spec, t_max, replicas, seed, start)?;
    Ok(TailEstimate::from_taus(t_grid, &taus, seed, Z_99))
}

/// Plug-in estimate of `D_dyn(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvEstimate {
    pub t: u64,
    pub estimate: f64,
    /// `√(|H| / (2π M))`, the expected-bias scale of the plug-in estimator.
    pub bias_bound: f64,
    pub samples: u64,
}

pub fn plugin_bias_bound(len: usize, samples: u64) -> f64 {
    libm::sqrt(len as f64 / (2.0 * core::f64::consts::PI * samples as f64))
}

/// Plug-in `D_dyn(t)` from `samples` replicas started at `(x, cfg)`.
pub fn estimate_dynamic_tv_plugin(
    space: &HalfEdgeSpace,
    cfg: &Configuration,
    x: HalfEdge,
    spec: &DynamicsSpec,
    t: u64,
    samples: u64,
    seed: u64,
) -> Result<TvEstimate> {
    Ok(estimate_dynamic_tv_plugin_curve(space, cfg, x, spec, &[t], samples, seed)?[0])
}

/// As [`estimate_dynamic_tv_plugin`] for several times from the same replicas.
pub fn estimate_dynamic_tv_plugin_curve(
    space: &HalfEdgeSpace,
    cfg: &Configuration,
    x: HalfEdge,
    spec: &DynamicsSpec,
    t_grid: &[u64],
    samples: u64,
    seed: u64,
) -> Result<Vec<TvEstimate>> {
    spec.validate()?;
    check_start(space, x, cfg)?;
    let len = space.len();
    if samples < len as u64 {
        return Err(Error::TooFewSamples {
            required: len,
            given: samples as usize,
        });
    }
    let mut order: Vec<usize> = (0..t_grid.len()).collect();
    order.sort_by_key(|&i| t_grid[i]);
    let t_max = t_grid.iter().copied().max().unwrap_or(0);
    let positions = map_replicas(
        samples,
        || JointState::new(JournaledConfig::new(cfg.clone()), x),
        |st, i| {
            let mut rng = stream_rng(seed, i);
            st.cfg.reset();
            st.restart(x);
            let mut out = vec![0u32; t_grid.len()];
            let mut next = 0;
            loop {
                while next < order.len() && t_grid[order[next]] == st.t() {
                    out[order[next]] = st.x as u32;
                    next += 1;
                }
                if st.t() >= t_max {
                    break;
                }
                st.step(space, spec, &mut rng);
            }
            out
        },
    );
    let bias_bound = plugin_bias_bound(len, samples);
    Ok((0..t_grid.len())
        .map(|j| {
            let mut counts = vec![0u64; len];
            for p in &positions {
                counts[p[j] as usize] += 1;
            }
            let empirical: Vec<f64> = counts.iter().map(|&c| c as f64 / samples as f64).collect();
            TvEstimate {
                t: t_grid[j],
                estimate: tv_to_uniform(&empirical),
                bias_bound,
                samples,
            }
        })
        .collect())
}

/// `D_dyn(t)` averaged exactly over the walk for sampled graph trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryTv {
    pub t: u64,
    pub estimate: f64,
    /// Percentile bootstrap interval over graph trajectories.
    pub ci: (f64, f64),
    pub graph_replicas: u64,
}

/// Bootstrap resamples used by [`exact_dynamic_tv_walk_independent`].
pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// For walk-independent dynamics, propagates `δ_x` exactly through each
/// sampled graph trajectory and averages the distributions.
pub fn exact_dynamic_tv_walk_independent(
    space: &HalfEdgeSpace,
    cfg0: &Configuration,
    x: HalfEdge,
    spec: &DynamicsSpec,
    t_grid: &[u64],
    graph_replicas: u64,
    seed: u64,
) -> Result<Vec<TrajectoryTv>> {
    spec.validate()?;
    check_start(space, x, cfg0)?;
    if !spec.is_walk_independent() {
        return Err(Error::Unsupported(format!(
            "{} rewiring depends on the walker; use the plug-in estimator",
            spec.mechanism.label()
        )));
    }
    if graph_replicas == 0 {
        return Err(Error::InvalidParameter(
            "graph_replicas must be at least 1".into(),
        ));
    }
    let len = space.len();
    let t_max = t_grid.iter().copied().max().unwrap_or(0);
    let mut order: Vec<usize> = (0..t_grid.len()).collect();
    order.sort_by_key(|&i| t_grid[i]);
    // per trajectory, the walk's law at each grid time
    let dists: Vec<Vec<Vec<f64>>> = map_replicas(
        graph_replicas,
        || {
            (
                JointState::new(JournaledConfig::new(cfg0.clone()), x),
                vec![0.0; len],
                vec![0.0; len],
            )
        },
        |(st, cur, next), i| {
            let mut rng = stream_rng(seed, i);
            st.cfg.reset();
            st.restart(x);
            cur.iter_mut().for_each(|w| *w = 0.0);
            cur[x] = 1.0;
            let mut out = vec![Vec::new(); t_grid.len()];
            let mut k = 0;
            let mut t = 0;
            loop {
                while k < order.len() && t_grid[order[k]] == t {
                    out[order[k]] = cur.clone();
                    k += 1;
                }
                if t >= t_max {
                    break;
                }
                st.rewire_only(space, spec, &mut rng);
                propagate_into(space, st.cfg.current(), cur, next);
                core::mem::swap(cur, next);
                t += 1;
            }
            out
        },
    );
    let n = graph_replicas as usize;
    let mut boot_rng = stream_rng(seed, BOOTSTRAP_STREAM);
    let resamples: Vec<Vec<u32>> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| {
            let mut w = vec![0u32; n];
            for _ in 0..n {
                w[boot_rng.random_range(0..n)] += 1;
            }
            w
        })
        .collect();
    let alpha_tail = (1.0 - erf_level(Z_99)) / 2.0;
    Ok((0..t_grid.len())
        .map(|j| {
            let avg = weighted_mean(&dists, j, None, len);
            let estimate = tv_to_uniform(&avg);
            let mut boot: Vec<f64> = resamples
                .iter()
                .map(|w| tv_to_uniform(&weighted_mean(&dists, j, Some(w), len)))
                .collect();
            boot.sort_by(f64::total_cmp);
            let lo = quantile_sorted(&boot, alpha_tail);
            let hi = quantile_sorted(&boot, 1.0 - alpha_tail);
            TrajectoryTv {
                t: t_grid[j],
                estimate,
                ci: (lo.min(estimate), hi.max(estimate)),
                graph_replicas,
            }
        })
        .collect())
}

fn weighted_mean(dists: &[Vec<Vec<f64>>], j: usize, w: Option<&[u32]>, len: usize) -> Vec<f64> {
    let mut avg = vec![0.0; len];
    let mut total = 0.0;
    for (i, d) in dists.iter().enumerate() {
        let wi = w.map_or(1.0, |w| w[i] as f64);
        if wi == 0.0 {
            continue;
        }
        total += wi;
        for (a, b) in avg.iter_mut().zip(&d[j]) {
            *a += wi * b;
        }
    }
    avg.iter_mut().for_each(|a| *a /= total);
    avg
}

/// Two-sided coverage of a normal quantile, `erf(z/√2)`.
fn erf_level(z: f64) -> f64 {
    libm::erf(z / core::f64::consts::SQRT_2)
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = libm::ceil(pos) as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Outcome of a short-cut audit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum ShortcutAudit {
    /// The path revisits a vertex: it returns at time `l` to the vertex of time `k`.
    Skipped { first_repeat: (usize, usize) },
    Audited {
        t: usize,
        r: usize,
        /// Pairs `k < l` in `1..=t` with a short-cut.
        shortcuts: Vec<(usize, usize)>,
        chi: u64,
    },
}

impl ShortcutAudit {
    pub fn chi(&self) -> Option<u64> {
        match self {
            ShortcutAudit::Audited { chi, .. } => Some(*chi),
            ShortcutAudit::Skipped { .. } => None,
        }
    }

    /// `S_{kl}` (symmetric); `None` for a skipped audit.
    pub fn s(&self, k: usize, l: usize) -> Option<bool> {
        match self {
            ShortcutAudit::Audited { shortcuts, .. } => {
                let key = (k.min(l), k.max(l));
                Some(shortcuts.binary_search(&key).is_ok())
            }
            ShortcutAudit::Skipped { .. } => None,
        }
    }
}

/// `χ^r(t) = Σ_{i=1}^t Σ_{0<k<i} Σ_{i<l<=min(t, i+r)} S_{kl}`.
pub fn chi_from_shortcuts(t: usize, r: usize, s: impl Fn(usize, usize) -> bool) -> u64 {
    let mut chi = 0;
    for i in 1..=t {
        for k in 1..i {
            for l in (i + 1)..=t.min(i + r) {
                if s(k, l) {
                    chi += 1;
                }
            }
        }
    }
    chi
}

/// Audits the path `X_0, …, X_t` on `cfg` for short-cuts of length at most `r`.
///
/// `S_{kl} = 1` when the vertices of `X_k` and `X_l` are joined by a path of
/// at most `r` edges avoiding every edge `{X_s, cfg(X_s)}`, `s < t`.
pub fn shortcut_audit(
    space: &HalfEdgeSpace,
    cfg: &Configuration,
    path: &[HalfEdge],
    r: usize,
) -> Result<ShortcutAudit> {
    if path.is_empty() {
        return Err(Error::InvalidParameter("empty path".into()));
    }
    if cfg.len() != space.len() || path.iter().any(|&h| h >= space.len()) {
        return Err(Error::InvalidParameter(
            "path does not match the space".into(),
        ));
    }
    let t = path.len() - 1;
    let verts: Vec<usize> = path.iter().map(|&h| space.vertex_of(h)).collect();
    for l in 1..=t {
        for k in 0..l {
            if verts[k] == verts[l] {
                return Ok(ShortcutAudit::Skipped {
                    first_repeat: (k, l),
                });
            }
        }
    }
    let mut path_edges: Vec<HalfEdge> = path[..t].iter().map(|&h| h.min(cfg.partner(h))).collect();
    path_edges.sort_unstable();
    let on_path = |h: HalfEdge| path_edges.binary_search(&h.min(cfg.partner(h))).is_ok();

    let n = space.vertex_count();
    let mut dist = vec![usize::MAX; n];
    let mut touched = Vec::new();
    let mut frontier = Vec::new();
    let mut next = Vec::new();
    let mut time_of = vec![usize::MAX; n];
    for (s, &v) in verts.iter().enumerate() {
        time_of[v] = s;
    }
    let mut shortcuts = Vec::new();
    for (k, &src) in verts.iter().enumerate().skip(1) {
        for &v in &touched {
            dist[v] = usize::MAX;
        }
        touched.clear();
        frontier.clear();
        dist[src] = 0;
        touched.push(src);
        frontier.push(src);
        for d in 1..=r {
            next.clear();
            for &v in &frontier {
                for h in space.half_edges_of(v) {
                    if on_path(h) {
                        continue;
                    }
                    let w = space.vertex_of(cfg.partner(h));
                    if dist[w] == usize::MAX {
                        dist[w] = d;
                        touched.push(w);
                        next.push(w);
                    }
                }
            }
            core::mem::swap(&mut frontier, &mut next);
            if frontier.is_empty() {
                break;
            }
        }
        for &w in &touched {
            let l = time_of[w];
            if l != usize::MAX && l > k && l <= t {
                shortcuts.push((k, l));
            }
        }
    }
    shortcuts.sort_unstable();
    let chi = chi_from_shortcuts(t, r, |k, l| shortcuts.binary_search(&(k, l)).is_ok());
    Ok(ShortcutAudit::Audited {
        t,
        r,
        shortcuts,
        chi,
    })
}

/// One row of the static/dynamic link check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkRow {
    pub t: u64,
    pub d_dyn: f64,
    pub d_dyn_ci: (f64, f64),
    pub tail: f64,
    pub tail_ci: (f64, f64),
    pub d_stat: f64,
    pub product: f64,
    /// `D_dyn − P(τ > t) D_stat`.
    pub residual: f64,
}

/// Sample sizes for [`verify_link_theorem`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudgets {
    /// Graph trajectories for the exact-per-trajectory estimator.
    pub graph_replicas: u64,
    /// Samples for the plug-in estimator (walker-dependent dynamics).
    pub plugin_samples: u64,
    pub tail_replicas: u64,
}

/// Compares `D_dyn(t)` with `P(τ > t) D_stat(t)` from a shared `(x, ξ)`.
pub fn verify_link_theorem(
    space: &HalfEdgeSpace,
    cfg: &Configuration,
    x: HalfEdge,
    spec: &DynamicsSpec,
    t_grid: &[u64],
    budgets: LinkBudgets,
    seed: u64,
) -> Result<Vec<LinkRow>> {
    let t_max = t_grid.iter().copied().max().unwrap_or(0);
    let stat = static_tv_curve(space, cfg, x, t_max as usize);
    let start = Start::Shared {
        x,
        cfg: cfg.clone(),
    };
    let tail = estimate_tau_tail_from(space, spec, t_grid, budgets.tail_replicas, seed, &start)?;
    // the two estimators use disjoint seeds
    let dyn_seed = seed ^ 0x9e37_79b9_7f4a_7c15;
    let dynamic: Vec<(f64, (f64, f64))> = if spec.is_walk_independent() {
        exact_dynamic_tv_walk_independent(
            space,
            cfg,
            x,
            spec,
            t_grid,
            budgets.graph_replicas,
            dyn_seed,
        )?
        .into_iter()
        .map(|e| (e.estimate, e.ci))
        .collect()
    } else {
        estimate_dynamic_tv_plugin_curve(
            space,
            cfg,
            x,
            spec,
            t_grid,
            budgets.plugin_samples,
            dyn_seed,
        )?
        .into_iter()
        .map(|e| {
            (
                e.estimate,
                (
                    (e.estimate - e.bias_bound).max(0.0),
                    (e.estimate + e.bias_bound).min(1.0),
                ),
            )
        })
        .collect()
    };
    Ok(t_grid
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let d_stat = stat[t as usize];
            let product = tail.estimate[i] * d_stat;
            LinkRow {
                t,
                d_dyn: dynamic[i].0,
                d_dyn_ci: dynamic[i].1,
                tail: tail.estimate[i],
                tail_ci: tail.ci[i],
                d_stat,
                product,
                residual: dynamic[i].0 - product,
            }
        })
        .collect())
}
