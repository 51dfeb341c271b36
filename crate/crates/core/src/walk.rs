//! Non-backtracking walk on a frozen configuration.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{size_biased_nu, Configuration, HalfEdgeSpace};
use crate::HalfEdge;

/// Probability weights over half-edges.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfEdgeDistribution {
    weights: Vec<f64>,
}

impl HalfEdgeDistribution {
    pub fn uniform(len: usize) -> Self {
        Self {
            weights: vec![1.0 / len as f64; len],
        }
    }

    pub fn point_mass(len: usize, x: HalfEdge) -> Self {
        let mut weights = vec![0.0; len];
        weights[x] = 1.0;
        Self { weights }
    }

    /// Accepts nonnegative weights summing to one within `1e-12`.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::InvalidParameter("negative or NaN weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if libm::fabs(total - 1.0) > 1e-12 {
            return Err(Error::InvalidParameter(alloc::format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(Self { weights })
    }

    /// No normalization check; used for empirical histograms and averages.
    pub fn from_weights_unchecked(weights: Vec<f64>) -> Self {
        Self { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// `½ Σ |μ(x) − ν(x)|`, equal to `sup_A μ(A) − ν(A)`.
pub fn total_variation(mu: &[f64], nu: &[f64]) -> f64 {
    debug_assert_eq!(mu.len(), nu.len());
    0.5 * mu
        .iter()
        .zip(nu)
        .map(|(a, b)| libm::fabs(a - b))
        .sum::<f64>()
}

/// Total variation distance to the uniform law on `len` points.
pub fn tv_to_uniform(mu: &[f64]) -> f64 {
    let u = 1.0 / mu.len() as f64;
    0.5 * mu.iter().map(|a| libm::fabs(a - u)).sum::<f64>()
}

/// One walk step: a uniform sibling of `cfg(x)`.
#[inline]
pub fn nbrw_step<R: Rng + ?Sized>(
    space: &HalfEdgeSpace,
    cfg: &Configuration,
    x: HalfEdge,
    rng: &mut R,
) -> HalfEdge {
    let g = cfg.partner(x);
    let k = space.forward_degree(g);
    let y = if k == 1 {
        space.sibling(g, 0)
    } else {
        space.sibling(g, rng.random_range(0..k))
    };
    debug_assert_ne!(y, g, "walk backtracked");
    y
}

/// `dist · P_ξ`.
pub fn propagate_distribution(
    space: &HalfEdgeSpace,
    cfg: &Configuration,
    dist: &HalfEdgeDistribution,
) -> HalfEdgeDistribution {
    let mut out = vec![0.0; dist.len()];
    propagate_into(space, cfg, dist.weights(), &mut out);
    HalfEdgeDistribution { weights: out }
}

/// Writes `src · P_ξ` into `dst`.
pub fn propagate_into(space: &HalfEdgeSpace, cfg: &Configuration, src: &[f64], dst: &mut [f64]) {
    dst.iter_mut().for_each(|w| *w = 0.0);
    for (x, &w) in src.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let g = cfg.partner(x);
        let share = w / space.forward_degree(g) as f64;
        for y in space.siblings(g) {
            dst[y] += share;
        }
    }
}

/// `TV(P^t δ_x, U_H)` for `t = 0..=t_max`.
pub fn static_tv_curve(
    space: &HalfEdgeSpace,
    cfg: &Configuration,
    x: HalfEdge,
    t_max: usize,
) -> Vec<f64> {
    let mut curve = Vec::with_capacity(t_max + 1);
    let mut cur = vec![0.0; space.len()];
    cur[x] = 1.0;
    let mut next = vec![0.0; space.len()];
    curve.push(tv_to_uniform(&cur));
    for _ in 0..t_max {
        propagate_into(space, cfg, &cur, &mut next);
        core::mem::swap(&mut cur, &mut next);
        curve.push(tv_to_uniform(&cur));
    }
    curve
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixingTime {
    Mixed(usize),
    NotMixedBy { horizon: usize },
}

/// `⌈10 log|H| / log ν⌉`, or `10 |H|` when `ν <= 1`.
pub fn default_mixing_horizon(space: &HalfEdgeSpace) -> usize {
    let nu = size_biased_nu(space.degrees());
    if nu <= 1.0 {
        10 * space.len()
    } else {
        libm::ceil(10.0 * libm::log(space.len() as f64) / libm::log(nu)) as usize
    }
}

/// Smallest `t <= horizon` with static TV at most `epsilon`.
pub fn static_mixing_time(
    space: &HalfEdgeSpace,
    cfg: &Configuration,
    x: HalfEdge,
    epsilon: f64,
    horizon: Option<usize>,
) -> Result<MixingTime> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "epsilon {epsilon} not in (0, 1]"
        )));
    }
    let horizon = horizon.unwrap_or_else(|| default_mixing_horizon(space));
    let mut cur = vec![0.0; space.len()];
    cur[x] = 1.0;
    let mut next = vec![0.0; space.len()];
    for t in 0..=horizon {
        if tv_to_uniform(&cur) <= epsilon {
            return Ok(MixingTime::Mixed(t));
        }
        if t < horizon {
            propagate_into(space, cfg, &cur, &mut next);
            core::mem::swap(&mut cur, &mut next);
        }
    }
    Ok(MixingTime::NotMixedBy { horizon })
}

/// Jump probability of the modified walk at step `t` given earlier jump times.
pub trait JumpHazard {
    fn hazard(&self, t: u64, jumps: &[u64]) -> f64;
}

/// Jump with the same probability at every step.
#[derive(Debug, Clone, Copy)]
pub struct ConstantHazard(pub f64);

impl JumpHazard for ConstantHazard {
    fn hazard(&self, _t: u64, _jumps: &[u64]) -> f64 {
        self.0
    }
}

impl<F: Fn(u64, &[u64]) -> f64> JumpHazard for F {
    fn hazard(&self, t: u64, jumps: &[u64]) -> f64 {
        self(t, jumps)
    }
}

/// Hazard whose first-jump law has the survival function `tail`:
/// `1 − tail(t) / tail(t − 1)` before the first jump, zero afterwards.
#[derive(Debug, Clone, Copy)]
pub struct TailHazard<F>(pub F);

impl<F: Fn(u64) -> f64> JumpHazard for TailHazard<F> {
    fn hazard(&self, t: u64, jumps: &[u64]) -> f64 {
        if !jumps.is_empty() {
            return 0.0;
        }
        let prev = (self.0)(t.saturating_sub(1));
        if prev <= 0.0 {
            return 1.0;
        }
        (1.0 - (self.0)(t) / prev).clamp(0.0, 1.0)
    }
}

/// A sampled modified-walk path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModifiedWalkSample {
    /// `Y_0, …, Y_{t_max}`.
    pub trajectory: Vec<HalfEdge>,
    /// First jump time, if one happened by `t_max`.
    pub sigma: Option<u64>,
    pub jumps: Vec<u64>,
}

/// Static walk that at step `t` jumps to a uniform half-edge with probability
/// `hazard(t, jumps so far)` and otherwise takes a non-backtracking step.
pub fn modified_walk_sample<R: Rng + ?Sized, J: JumpHazard + ?Sized>(
    space: &HalfEdgeSpace,
    cfg: &Configuration,
    x: HalfEdge,
    hazard: &J,
    t_max: u64,
    rng: &mut R,
) -> ModifiedWalkSample {
    let mut trajectory = Vec::with_capacity(t_max as usize + 1);
    trajectory.push(x);
    let mut jumps = Vec::new();
    let mut y = x;
    for t in 1..=t_max {
        let p = hazard.hazard(t, &jumps).clamp(0.0, 1.0);
        let jump = p > 0.0 && (p >= 1.0 || rng.random::<f64>() < p);
        y = if jump {
            jumps.push(t);
            rng.random_range(0..space.len())
        } else {
            nbrw_step(space, cfg, y, rng)
        };
        trajectory.push(y);
    }
    ModifiedWalkSample {
        trajectory,
        sigma: jumps.first().copied(),
        jumps,
    }
}
