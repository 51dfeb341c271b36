//! Half-edge universe, configurations and degree statistics.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::HalfEdge;

/// Largest `|H|` accepted by [`enumerate_configurations`]: 11!! = 10395 matchings.
pub const ENUMERATION_CAP: usize = 12;

/// Immutable half-edge universe for a degree sequence.
///
/// Vertex `v` owns the contiguous block `offsets[v]..offsets[v + 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HalfEdgeSpace {
    degrees: Vec<usize>,
    offsets: Vec<usize>,
    vertex_of: Vec<u32>,
}

impl HalfEdgeSpace {
    /// Builds the space; every degree must be at least 2 and the sum even.
    pub fn new(degrees: &[usize]) -> Result<Self> {
        Self::with_min_degree(degrees, 2)
    }

    /// Like [`HalfEdgeSpace::new`] with a caller-chosen minimum degree.
    pub fn with_min_degree(degrees: &[usize], min_degree: usize) -> Result<Self> {
        if degrees.is_empty() {
            return Err(Error::InvalidParameter("empty degree sequence".into()));
        }
        if let Some((vertex, &degree)) = degrees.iter().enumerate().find(|(_, &d)| d < min_degree) {
            return Err(Error::DegreeTooSmall {
                vertex,
                degree,
                min: min_degree,
            });
        }
        let sum: usize = degrees.iter().sum();
        if !sum.is_multiple_of(2) {
            return Err(Error::OddDegreeSum { sum });
        }
        let mut offsets = Vec::with_capacity(degrees.len() + 1);
        let mut vertex_of = Vec::with_capacity(sum);
        let mut acc = 0;
        for (v, &d) in degrees.iter().enumerate() {
            offsets.push(acc);
            acc += d;
            vertex_of.extend(core::iter::repeat_n(v as u32, d));
        }
        offsets.push(acc);
        Ok(Self {
            degrees: degrees.to_vec(),
            offsets,
            vertex_of,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.degrees.len()
    }

    /// `|H|`.
    pub fn len(&self) -> usize {
        self.vertex_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertex_of.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.len() / 2
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    #[inline]
    pub fn vertex_of(&self, h: HalfEdge) -> usize {
        self.vertex_of[h] as usize
    }

    pub fn degree(&self, v: usize) -> usize {
        self.degrees[v]
    }

    /// Half-edges owned by `v`.
    #[inline]
    pub fn half_edges_of(&self, v: usize) -> core::ops::Range<HalfEdge> {
        self.offsets[v]..self.offsets[v + 1]
    }

    /// `deg_H(h) = deg(v(h)) - 1`.
    #[inline]
    pub fn forward_degree(&self, h: HalfEdge) -> usize {
        self.degrees[self.vertex_of(h)] - 1
    }

    /// Siblings of `h`: the other half-edges at `v(h)`.
    pub fn siblings(&self, h: HalfEdge) -> impl Iterator<Item = HalfEdge> + '_ {
        self.half_edges_of(self.vertex_of(h))
            .filter(move |&g| g != h)
    }

    /// The `i`-th sibling of `h`, for `i < deg_H(h)`.
    #[inline]
    pub fn sibling(&self, h: HalfEdge, i: usize) -> HalfEdge {
        let start = self.offsets[self.vertex_of(h)];
        let g = start + i;
        if g >= h {
            g + 1
        } else {
            g
        }
    }

    pub fn max_degree(&self) -> usize {
        self.degrees.iter().copied().max().unwrap_or(0)
    }

    pub fn min_degree(&self) -> usize {
        self.degrees.iter().copied().min().unwrap_or(0)
    }
}

/// A perfect matching of half-edges: a fixed-point-free involution.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration {
    pairing: Vec<u32>,
}

impl Configuration {
    /// Wraps a partner array after checking the involution invariants.
    pub fn from_pairing(pairing: Vec<usize>) -> Result<Self> {
        let cfg = Self {
            pairing: pairing.into_iter().map(|p| p as u32).collect(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub(crate) fn from_raw(pairing: Vec<u32>) -> Self {
        Self { pairing }
    }

    /// Pairs `order[0]` with `order[1]`, `order[2]` with `order[3]`, and so on.
    pub fn from_ordered_pairs(len: usize, order: &[HalfEdge]) -> Self {
        let mut pairing = vec![0u32; len];
        for pair in order.chunks_exact(2) {
            pairing[pair[0]] = pair[1] as u32;
            pairing[pair[1]] = pair[0] as u32;
        }
        Self { pairing }
    }

    pub fn len(&self) -> usize {
        self.pairing.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairing.is_empty()
    }

    /// Partner of `h`.
    #[inline]
    pub fn partner(&self, h: HalfEdge) -> HalfEdge {
        self.pairing[h] as usize
    }

    #[inline]
    pub(crate) fn set_partner(&mut self, h: HalfEdge, g: HalfEdge) {
        self.pairing[h] = g as u32;
    }

    pub fn pairing(&self) -> impl Iterator<Item = HalfEdge> + '_ {
        self.pairing.iter().map(|&p| p as usize)
    }

    /// Edges as `(min, max)` half-edge pairs in increasing order of `min`.
    pub fn edges(&self) -> impl Iterator<Item = (HalfEdge, HalfEdge)> + '_ {
        self.pairing
            .iter()
            .enumerate()
            .filter(|&(h, &p)| h < p as usize)
            .map(|(h, &p)| (h, p as usize))
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.pairing.len();
        for (h, &p) in self.pairing.iter().enumerate() {
            let p = p as usize;
            if p >= n {
                return Err(Error::InvalidConfiguration(format!(
                    "partner {p} of {h} out of range"
                )));
            }
            if p == h {
                return Err(Error::InvalidConfiguration(format!(
                    "{h} is paired with itself"
                )));
            }
            if self.pairing[p] as usize != h {
                return Err(Error::InvalidConfiguration(format!(
                    "pairing is not an involution at {h}"
                )));
            }
        }
        Ok(())
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_ok()
    }
}

/// Degree-sequence families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DegreeSequenceKind {
    Regular {
        degree: usize,
    },
    /// The first `ceil(fraction * n)` vertices get `d1`, the rest `d2`.
    TwoPoint {
        d1: usize,
        d2: usize,
        fraction: f64,
    },
    /// I.i.d. degrees with mass proportional to `k^-exponent` on `[min, max]`.
    TruncatedPowerLaw {
        exponent: f64,
        min: usize,
        max: usize,
    },
}

/// Output of [`make_degree_sequence`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeSequence {
    pub degrees: Vec<usize>,
    /// Set when the raw sum was odd and the last vertex was bumped by one.
    pub parity_adjusted: bool,
}

pub fn make_degree_sequence<R: Rng + ?Sized>(
    kind: DegreeSequenceKind,
    n: usize,
    rng: &mut R,
) -> Result<DegreeSequence> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need n >= 2, got {n}")));
    }
    let mut degrees = match kind {
        DegreeSequenceKind::Regular { degree } => {
            check_min_degree(degree)?;
            vec![degree; n]
        }
        DegreeSequenceKind::TwoPoint { d1, d2, fraction } => {
            check_min_degree(d1.min(d2))?;
            if !(0.0..=1.0).contains(&fraction) {
                return Err(Error::InvalidParameter(format!(
                    "fraction {fraction} not in [0, 1]"
                )));
            }
            let first = libm::ceil(fraction * n as f64) as usize;
            (0..n).map(|v| if v < first { d1 } else { d2 }).collect()
        }
        DegreeSequenceKind::TruncatedPowerLaw { exponent, min, max } => {
            check_min_degree(min)?;
            if max < min {
                return Err(Error::InvalidParameter(format!("max {max} < min {min}")));
            }
            let pmf = truncated_power_law_pmf(exponent, min, max);
            let mut cdf = Vec::with_capacity(pmf.len());
            let mut acc = 0.0;
            for &(_, p) in &pmf {
                acc += p;
                cdf.push(acc);
            }
            (0..n)
                .map(|_| {
                    let u: f64 = rng.random::<f64>() * acc;
                    let i = cdf.partition_point(|&c| c <= u).min(pmf.len() - 1);
                    pmf[i].0
                })
                .collect()
        }
    };
    let parity_adjusted = degrees.iter().sum::<usize>() % 2 == 1;
    if parity_adjusted {
        *degrees.last_mut().expect("n >= 2") += 1;
    }
    Ok(DegreeSequence {
        degrees,
        parity_adjusted,
    })
}

fn check_min_degree(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::DegreeTooSmall {
            vertex: 0,
            degree: d,
            min: 2,
        });
    }
    Ok(())
}

/// Normalized mass function of the truncated power law on `[min, max]`.
pub fn truncated_power_law_pmf(exponent: f64, min: usize, max: usize) -> Vec<(usize, f64)> {
    let weights: Vec<(usize, f64)> = (min..=max)
        .map(|k| (k, libm::pow(k as f64, -exponent)))
        .collect();
    let total: f64 = weights.iter().map(|w| w.1).sum();
    weights.into_iter().map(|(k, w)| (k, w / total)).collect()
}

/// Uniform configuration: shuffle every half-edge and pair consecutive entries.
pub fn sample_uniform_configuration<R: Rng + ?Sized>(
    space: &HalfEdgeSpace,
    rng: &mut R,
) -> Configuration {
    let mut order: Vec<HalfEdge> = (0..space.len()).collect();
    order.shuffle(rng);
    Configuration::from_ordered_pairs(space.len(), &order)
}

/// Every configuration on `len` half-edges, `(len - 1)!!` in total.
///
/// The `i`-th level of the odometer pairs the smallest unpaired half-edge with
/// the `digit[i]`-th remaining one.
#[derive(Debug, Clone)]
pub struct ConfigurationIter {
    len: usize,
    digits: Vec<usize>,
    done: bool,
}

impl Iterator for ConfigurationIter {
    type Item = Configuration;

    fn next(&mut self) -> Option<Configuration> {
        if self.done {
            return None;
        }
        let cfg = self.decode();
        // advance the mixed-radix counter, last level fastest
        let levels = self.digits.len();
        let mut i = levels;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            let radix = self.len - 2 * i - 1;
            self.digits[i] += 1;
            if self.digits[i] < radix {
                break;
            }
            self.digits[i] = 0;
        }
        Some(cfg)
    }
}

impl ConfigurationIter {
    fn decode(&self) -> Configuration {
        let mut free: Vec<HalfEdge> = (0..self.len).collect();
        let mut pairing = vec![0u32; self.len];
        for &d in &self.digits {
            let a = free.remove(0);
            let b = free.remove(d);
            pairing[a] = b as u32;
            pairing[b] = a as u32;
        }
        Configuration::from_raw(pairing)
    }
}

pub fn enumerate_configurations(space: &HalfEdgeSpace) -> Result<ConfigurationIter> {
    enumerate_matchings(space.len(), ENUMERATION_CAP)
}

/// Enumerates perfect matchings of `len` points with an explicit cap.
pub fn enumerate_matchings(len: usize, cap: usize) -> Result<ConfigurationIter> {
    if len > cap {
        return Err(Error::CapExceeded {
            what: "|H|",
            value: len,
            cap,
        });
    }
    if !len.is_multiple_of(2) {
        return Err(Error::OddDegreeSum { sum: len });
    }
    Ok(ConfigurationIter {
        len,
        digits: vec![0; len / 2],
        done: false,
    })
}

/// `(2k - 1)!!` for `len = 2k`.
pub fn matching_count(len: usize) -> usize {
    (1..len).step_by(2).product::<usize>().max(1)
}

/// Size-biased mean minus one of the empirical degree distribution.
pub fn size_biased_nu(degrees: &[usize]) -> f64 {
    let num: f64 = degrees
        .iter()
        .map(|&m| (m * (m.saturating_sub(1))) as f64)
        .sum();
    let den: f64 = degrees.iter().map(|&m| m as f64).sum();
    num / den
}

/// `c_n^stat`, the reciprocal of the mean of `log deg_H` over half-edges.
pub fn c_stat(space: &HalfEdgeSpace) -> Result<f64> {
    if let Some(v) = (0..space.vertex_count()).find(|&v| space.degree(v) < 3) {
        return Err(Error::DegreeTooSmall {
            vertex: v,
            degree: space.degree(v),
            min: 3,
        });
    }
    Ok(1.0 / mean_log_forward_degree(space))
}

fn mean_log_forward_degree(space: &HalfEdgeSpace) -> f64 {
    // vertex v contributes deg(v) identical terms
    let total: f64 = space
        .degrees()
        .iter()
        .map(|&d| d as f64 * libm::log((d - 1) as f64))
        .sum();
    total / space.len() as f64
}

/// Limiting degree distribution supplied by the caller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitDistribution {
    /// `(degree, probability)` pairs.
    pub pmf: Vec<(usize, f64)>,
}

impl LimitDistribution {
    pub fn point_mass(d: usize) -> Self {
        Self {
            pmf: vec![(d, 1.0)],
        }
    }

    pub fn prob(&self, m: usize) -> f64 {
        self.pmf.iter().filter(|e| e.0 == m).map(|e| e.1).sum()
    }

    pub fn moment(&self, k: i32) -> f64 {
        self.pmf
            .iter()
            .map(|&(m, p)| libm::pow(m as f64, k as f64) * p)
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegularityContext {
    Dynamic,
    StaticCutoff,
}

/// Finite-`n` evaluation of the degree regularity conditions.
///
/// Asymptotic statements are replaced by proxies: `|H| = Θ(n)` by mean degree
/// at most `ln n`; `d_max = n^{o(1)}` by `ln d_max / ln n <= 1/2`; the
/// `ω(·)` comparisons by a strict inequality at this `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub context: RegularityContext,
    pub n: usize,
    pub total_half_edges: usize,
    pub d_max: usize,
    pub d_min: usize,
    pub nu: f64,
    pub c_stat: Option<f64>,
    /// `ln n - |H|/n`.
    pub r1_margin: f64,
    pub r1: bool,
    /// `n / (ln n)^2 - d_max`.
    pub r2_margin: f64,
    pub r2: bool,
    pub r3: bool,
    /// `sup_m |p_n(m) - p(m)|`, when a limit was supplied.
    pub r1_star_distance: Option<f64>,
    pub r1_star: Option<bool>,
    pub r2_star_distance: Option<f64>,
    pub r2_star: Option<bool>,
    pub r3_star_distance: Option<f64>,
    pub r3_star: Option<bool>,
    pub nu_above_one: bool,
    /// `ln d_max / ln n`.
    pub r1_star_star_exponent: f64,
    pub r1_star_star: bool,
    pub lambda: [f64; 3],
    /// `λ2/λ1^3` and `λ2^{3/2}/(λ3 √λ1)` against their reference scales.
    pub r2_star_star_ratios: [f64; 2],
    pub r2_star_star_references: [f64; 2],
    pub r2_star_star: bool,
    /// `λ2 = 0`: the log forward degrees are constant and both ratios vanish.
    pub r2_star_star_degenerate: bool,
    pub r3_star_star: bool,
}

impl RegularityReport {
    /// Whether every item relevant to the report's context passes.
    pub fn passes(&self) -> bool {
        match self.context {
            RegularityContext::Dynamic => {
                self.r1
                    && self.r2
                    && self.r3
                    && self.r1_star.unwrap_or(true)
                    && self.r2_star.unwrap_or(true)
                    && self.r3_star.unwrap_or(true)
            }
            RegularityContext::StaticCutoff => {
                self.r1_star_star && self.r2_star_star && self.r3_star_star
            }
        }
    }
}

/// Default tolerance for distances between finite and limiting moments.
pub const LIMIT_TOLERANCE: f64 = 0.05;

pub fn check_regularity(
    space: &HalfEdgeSpace,
    limit: Option<&LimitDistribution>,
    context: RegularityContext,
) -> RegularityReport {
    check_regularity_with_tolerance(space, limit, context, LIMIT_TOLERANCE)
}

pub fn check_regularity_with_tolerance(
    space: &HalfEdgeSpace,
    limit: Option<&LimitDistribution>,
    context: RegularityContext,
    tolerance: f64,
) -> RegularityReport {
    let n = space.vertex_count();
    let nf = n as f64;
    let ln_n = libm::log(nf);
    let h = space.len();
    let d_max = space.max_degree();
    let d_min = space.min_degree();
    let r1_margin = ln_n - h as f64 / nf;
    let r2_margin = nf / (ln_n * ln_n) - d_max as f64;

    let (r1s, r2s, r3s) = match limit {
        Some(p) => {
            let mut counts: Vec<usize> = vec![0; d_max + 1];
            for &d in space.degrees() {
                counts[d] += 1;
            }
            let top = d_max.max(p.pmf.iter().map(|e| e.0).max().unwrap_or(0));
            let sup = (0..=top)
                .map(|m| {
                    let pn = counts.get(m).copied().unwrap_or(0) as f64 / nf;
                    libm::fabs(pn - p.prob(m))
                })
                .fold(0.0, f64::max);
            let m1 = h as f64 / nf;
            let m2 = space.degrees().iter().map(|&d| (d * d) as f64).sum::<f64>() / nf;
            let d1 = libm::fabs(m1 - p.moment(1)) / p.moment(1);
            let d2 = libm::fabs(m2 - p.moment(2)) / p.moment(2);
            (Some(sup), Some(d1), Some(d2))
        }
        None => (None, None, None),
    };

    let logs: Vec<(usize, f64)> = space
        .degrees()
        .iter()
        .map(|&d| {
            (
                d,
                if d >= 2 {
                    libm::log((d - 1) as f64)
                } else {
                    f64::NEG_INFINITY
                },
            )
        })
        .collect();
    let lambda1 = logs.iter().map(|&(d, l)| d as f64 * l).sum::<f64>() / h as f64;
    let central = |m: f64| {
        logs.iter()
            .map(|&(d, l)| d as f64 * libm::pow(libm::fabs(l - lambda1), m))
            .sum::<f64>()
            / h as f64
    };
    let lambda2 = central(2.0);
    let lambda3 = central(3.0);
    let ln_h = libm::log(h as f64);
    let ratio_a = lambda2 / (lambda1 * lambda1 * lambda1);
    let ratio_b = libm::pow(lambda2, 1.5) / (lambda3 * libm::sqrt(lambda1));
    let ref_a = libm::pow(libm::log(ln_h), 2.0) / ln_h;
    let ref_b = 1.0 / libm::sqrt(ln_h);
    let degenerate = lambda2 <= 1e-24 * lambda1 * lambda1;
    let r2ss = !degenerate && d_min >= 3 && ratio_a > ref_a && ratio_b > ref_b;

    let exponent = if n > 1 {
        libm::log(d_max as f64) / ln_n
    } else {
        f64::INFINITY
    };

    RegularityReport {
        context,
        n,
        total_half_edges: h,
        d_max,
        d_min,
        nu: size_biased_nu(space.degrees()),
        c_stat: c_stat(space).ok(),
        r1_margin,
        r1: r1_margin >= 0.0,
        r2_margin,
        r2: r2_margin > 0.0,
        r3: d_min >= 2,
        r1_star_distance: r1s,
        r1_star: r1s.map(|d| d <= tolerance),
        r2_star_distance: r2s,
        r2_star: r2s.map(|d| d <= tolerance),
        r3_star_distance: r3s,
        r3_star: r3s.map(|d| d <= tolerance),
        nu_above_one: size_biased_nu(space.degrees()) > 1.0,
        r1_star_star_exponent: exponent,
        r1_star_star: exponent <= 0.5,
        lambda: [lambda1, lambda2, lambda3],
        r2_star_star_ratios: [ratio_a, ratio_b],
        r2_star_star_references: [ref_a, ref_b],
        r2_star_star: r2ss,
        r2_star_star_degenerate: degenerate,
        r3_star_star: d_min >= 3,
    }
}
