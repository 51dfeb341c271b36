//! Closed-form tail limits, conditional tail formulas and mixing profiles.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dynamics::Mechanism;
use crate::error::{Error, Result};
use crate::walk::TailHazard;

/// The three rewiring families the limit theorems cover.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Local,
    Near,
    Global,
}

impl Family {
    pub fn of(mechanism: Mechanism) -> Option<Family> {
        match mechanism {
            Mechanism::Local => Some(Family::Local),
            Mechanism::Near { .. } => Some(Family::Near),
            Mechanism::Global => Some(Family::Global),
            Mechanism::Custom { .. } => None,
        }
    }
}

/// Limit of `α_n r_n²` for near-to-global rewiring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "limit", content = "value", rename_all = "kebab-case")]
pub enum NearScaling {
    Infinite,
    Beta(f64),
    Zero,
}

/// Limit of a scaling diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "limit", content = "value", rename_all = "kebab-case")]
pub enum Limit {
    Infinite,
    Finite(f64),
    Zero,
}

/// `lim P(τ > t)` on the time scale matching the mechanism.
pub fn predict_tau_tail_limit(family: Family, c: f64, near: Option<NearScaling>) -> Result<f64> {
    if !(c >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "c = {c} must be nonnegative"
        )));
    }
    let quadratic = libm::exp(-c * c / 2.0);
    Ok(match family {
        Family::Local => libm::exp(-c),
        Family::Global => quadratic,
        Family::Near => match near {
            None => {
                return Err(Error::InvalidParameter(
                    "near-to-global needs the limit of alpha r^2".into(),
                ))
            }
            Some(NearScaling::Infinite) => quadratic,
            Some(NearScaling::Zero) => libm::exp(-c),
            Some(NearScaling::Beta(beta)) => {
                if !(beta > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "beta = {beta} must be positive"
                    )));
                }
                near_crossover(beta, c)
            }
        },
    })
}

fn near_crossover(beta: f64, c: f64) -> f64 {
    if c <= 1.0 {
        libm::exp(-beta * c * c / 2.0)
    } else {
        libm::exp(-beta * (2.0 * c - 1.0) / 2.0)
    }
}

/// Exponent of `1 − α` in `P(τ > t | self-avoiding, no short-cuts)`.
///
/// Local `t`; global `t(t − 1)/2`; near
/// `(t − r)_+ r + ½[t − (t − r)_+][t − (t − r)_+ − 1]`.
pub fn conditional_exponent(family: Family, r: Option<usize>, t: u64) -> Result<u64> {
    Ok(match family {
        Family::Local => t,
        Family::Global => t * t.saturating_sub(1) / 2,
        Family::Near => {
            let r = near_radius(r)? as u64;
            let head = t.saturating_sub(r);
            let tail = t - head;
            head * r + tail * tail.saturating_sub(1) / 2
        }
    })
}

fn near_radius(r: Option<usize>) -> Result<usize> {
    match r {
        Some(r) if r >= 1 => Ok(r),
        Some(_) => Err(Error::InvalidParameter(
            "near radius must be at least 1".into(),
        )),
        None => Err(Error::InvalidParameter(
            "near-to-global needs a radius".into(),
        )),
    }
}

/// `P(τ > t | self-avoiding, no short-cuts)` from the displayed products.
pub fn exact_tau_tail_conditional(
    family: Family,
    alpha: f64,
    r: Option<usize>,
    t: u64,
) -> Result<f64> {
    check_alpha(alpha)?;
    let e = conditional_exponent(family, r, t)?;
    Ok(libm::pow(1.0 - alpha, e as f64))
}

/// Exponent under the inclusive flag test, where the edge crossed at step
/// `s` is exposed to the rewirings at times `1..=s`: `Σ_{s=1}^t min(r, s)`,
/// with `r = 1` for local and `r = ∞` for global.
pub fn flag_accounting_exponent(family: Family, r: Option<usize>, t: u64) -> Result<u64> {
    let r = match family {
        Family::Local => 1,
        Family::Global => u64::MAX,
        Family::Near => near_radius(r)? as u64,
    };
    Ok((1..=t).map(|s| s.min(r)).sum())
}

/// Tail matching the simulator's flag semantics on a self-avoiding path.
pub fn flag_accounting_tail(family: Family, alpha: f64, r: Option<usize>, t: u64) -> Result<f64> {
    check_alpha(alpha)?;
    let e = flag_accounting_exponent(family, r, t)?;
    Ok(libm::pow(1.0 - alpha, e as f64))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "alpha = {alpha} not in [0, 1]"
        )))
    }
}

/// Jump hazard whose first-jump law is the conditional tail.
pub fn conditional_hazard(
    family: Family,
    alpha: f64,
    r: Option<usize>,
) -> Result<TailHazard<impl Fn(u64) -> f64>> {
    check_alpha(alpha)?;
    conditional_exponent(family, r, 0)?;
    Ok(TailHazard(move |t: u64| {
        exact_tau_tail_conditional(family, alpha, r, t).unwrap_or(0.0)
    }))
}

/// Regimes of the dynamic mixing profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "kebab-case")]
pub enum Regime {
    Local1,
    Local2 { gamma: f64 },
    Local3,
    Near1a,
    Near1b { beta: f64 },
    Near1c,
    Near2b { beta: f64, gamma: f64 },
    Near2c { gamma: f64 },
    Near3c,
    Global1,
    Global2 { gamma: f64 },
    Global3,
}

/// How a profile's `c` is turned into a time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeMap {
    /// `⌊c/α⌋`
    InverseAlpha,
    /// `⌊c/√α⌋`
    InverseSqrtAlpha,
    /// `⌊c r⌋`
    Radius,
    /// `⌊c/(α r)⌋`
    InverseAlphaRadius,
    /// `⌊c log n⌋`
    LogN,
}

impl TimeMap {
    pub fn label(self) -> &'static str {
        match self {
            TimeMap::InverseAlpha => "c/alpha",
            TimeMap::InverseSqrtAlpha => "c/sqrt(alpha)",
            TimeMap::Radius => "c*r",
            TimeMap::InverseAlphaRadius => "c/(alpha*r)",
            TimeMap::LogN => "c*log(n)",
        }
    }

    pub fn time(self, c: f64, alpha: f64, r: Option<usize>, n: f64) -> Result<u64> {
        let need_alpha = || {
            if alpha > 0.0 {
                Ok(alpha)
            } else {
                Err(Error::InvalidParameter(format!(
                    "time map {} needs alpha > 0",
                    self.label()
                )))
            }
        };
        let x = match self {
            TimeMap::InverseAlpha => c / need_alpha()?,
            TimeMap::InverseSqrtAlpha => c / libm::sqrt(need_alpha()?),
            TimeMap::Radius => c * near_radius(r)? as f64,
            TimeMap::InverseAlphaRadius => c / (need_alpha()? * near_radius(r)? as f64),
            TimeMap::LogN => c * libm::log(n),
        };
        Ok(libm::floor(x) as u64)
    }
}

impl Regime {
    pub fn family(self) -> Family {
        use Regime::*;
        match self {
            Local1 | Local2 { .. } | Local3 => Family::Local,
            Near1a | Near1b { .. } | Near1c | Near2b { .. } | Near2c { .. } | Near3c => {
                Family::Near
            }
            Global1 | Global2 { .. } | Global3 => Family::Global,
        }
    }

    pub fn label(self) -> &'static str {
        use Regime::*;
        match self {
            Local1 | Global1 => "1",
            Local2 { .. } | Global2 { .. } => "2",
            Local3 | Global3 => "3",
            Near1a => "1a",
            Near1b { .. } => "1b",
            Near1c => "1c",
            Near2b { .. } => "2b",
            Near2c { .. } => "2c",
            Near3c => "3c",
        }
    }

    pub fn time_map(self) -> TimeMap {
        use Regime::*;
        match self {
            Local1 => TimeMap::InverseAlpha,
            Near1a | Global1 => TimeMap::InverseSqrtAlpha,
            Near1b { .. } => TimeMap::Radius,
            Near1c => TimeMap::InverseAlphaRadius,
            _ => TimeMap::LogN,
        }
    }

    /// Regime from the limits of the scaling diagnostics: `α log n` (local),
    /// `α r log n` and `α r²` (near), `α (log n)²` (global).
    pub fn from_limits(
        family: Family,
        primary: Limit,
        near_square: Option<Limit>,
    ) -> Result<Regime> {
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(Error::InvalidParameter(format!(
                    "{what} limit {v} must be in (0, inf)"
                )))
            }
        };
        Ok(match family {
            Family::Local => match primary {
                Limit::Infinite => Regime::Local1,
                Limit::Finite(g) => Regime::Local2 {
                    gamma: positive(g, "gamma")?,
                },
                Limit::Zero => Regime::Local3,
            },
            Family::Global => match primary {
                Limit::Infinite => Regime::Global1,
                Limit::Finite(g) => Regime::Global2 {
                    gamma: positive(g, "gamma")?,
                },
                Limit::Zero => Regime::Global3,
            },
            Family::Near => {
                let sq = near_square.ok_or_else(|| {
                    Error::InvalidParameter("near-to-global needs the limit of alpha r^2".into())
                })?;
                match (primary, sq) {
                    (Limit::Infinite, Limit::Infinite) => Regime::Near1a,
                    (Limit::Infinite, Limit::Finite(b)) => Regime::Near1b {
                        beta: positive(b, "beta")?,
                    },
                    (Limit::Infinite, Limit::Zero) => Regime::Near1c,
                    (Limit::Finite(g), Limit::Finite(b)) => Regime::Near2b {
                        beta: positive(b, "beta")?,
                        gamma: positive(g, "gamma")?,
                    },
                    (Limit::Finite(g), Limit::Zero) => Regime::Near2c {
                        gamma: positive(g, "gamma")?,
                    },
                    (Limit::Zero, Limit::Zero) => Regime::Near3c,
                    (Limit::Finite(_), Limit::Infinite) => {
                        return Err(Error::UnreachableRegime("near regime 2a".into()))
                    }
                    (Limit::Zero, Limit::Infinite) => {
                        return Err(Error::UnreachableRegime("near regime 3a".into()))
                    }
                    (Limit::Zero, Limit::Finite(_)) => {
                        return Err(Error::UnreachableRegime("near regime 3b".into()))
                    }
                }
            }
        })
    }
}

/// Limiting `D_dyn` at scaled time `c` for the given regime.
///
/// Cutoff regimes return 0 for `c >= c_star`; the value exactly at `c_star`
/// is not determined by the limit theorems.
pub fn predict_mixing_profile(regime: Regime, c: f64, c_star: f64) -> Result<f64> {
    if !(c >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "c = {c} must be nonnegative"
        )));
    }
    use Regime::*;
    let below = c < c_star;
    let cut = |v: f64| if below { v } else { 0.0 };
    Ok(match regime {
        Local1 | Near1c => libm::exp(-c),
        Near1a | Global1 => libm::exp(-c * c / 2.0),
        Near1b { beta } => {
            if c == 0.0 {
                1.0
            } else {
                near_crossover(beta, c)
            }
        }
        Local2 { gamma } | Near2c { gamma } => cut(libm::exp(-gamma * c)),
        Near2b { beta, gamma } => {
            if c <= beta / gamma {
                cut(libm::exp(-(gamma * c) * (gamma * c) / (2.0 * beta)))
            } else {
                cut(libm::exp(-(2.0 * gamma * c - beta) / 2.0))
            }
        }
        Global2 { gamma } => cut(libm::exp(-gamma * c * c / 2.0)),
        Local3 | Near3c | Global3 => cut(1.0),
    })
}

/// `(log n / log ν, 1 / log ν)`.
pub fn r_max_and_rho_max(n: f64, nu: f64) -> Result<(f64, f64)> {
    if !(nu > 1.0) {
        return Err(Error::InvalidParameter(format!("nu = {nu} must exceed 1")));
    }
    let rho = 1.0 / libm::log(nu);
    Ok((libm::log(n) * rho, rho))
}

/// Fitted behaviour of one diagnostic over the `n` grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticFit {
    /// Slope of `ln D` against `ln ln n`.
    pub slope: f64,
    /// Largest absolute residual of the fit.
    pub max_residual: f64,
    /// `D` at the largest `n`.
    pub last: f64,
    pub limit: Option<Limit>,
}

/// Slope magnitude below which a diagnostic is read as convergent.
pub const SLOPE_THRESHOLD: f64 = 0.1;
/// Largest residual tolerated before a diagnostic is called non-converging.
pub const RESIDUAL_THRESHOLD: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeClassification {
    pub family: Family,
    /// `None` when a diagnostic did not settle.
    pub regime: Option<Regime>,
    pub primary: DiagnosticFit,
    pub near_square: Option<DiagnosticFit>,
    pub time_map: Option<TimeMap>,
}

fn fit_diagnostic(ns: &[f64], values: &[f64]) -> DiagnosticFit {
    let xs: Vec<f64> = ns.iter().map(|&n| libm::log(libm::log(n))).collect();
    let ys: Vec<f64> = values.iter().map(|&v| libm::log(v)).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let max_residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| libm::fabs(y - (my + slope * (x - mx))))
        .fold(0.0, f64::max);
    let last = *values.last().expect("nonempty grid");
    let limit = if !slope.is_finite() || !(max_residual <= RESIDUAL_THRESHOLD) {
        None
    } else if slope > SLOPE_THRESHOLD {
        Some(Limit::Infinite)
    } else if slope < -SLOPE_THRESHOLD {
        Some(Limit::Zero)
    } else {
        Some(Limit::Finite(last))
    };
    DiagnosticFit {
        slope,
        max_residual,
        last,
        limit,
    }
}

/// Reads the scaling regime off closed-form `α_n` and `r_n` on an `n` grid.
///
/// Each diagnostic is fitted by least squares as `ln D ≈ a + s ln ln n`:
/// `s > 0.1` reads as `D → ∞`, `s < −0.1` as `D → 0`, otherwise `D` converges
/// to its value at the largest `n`. A fit whose residuals exceed
/// [`RESIDUAL_THRESHOLD`] leaves the regime unclassified.
pub fn classify_regime(
    family: Family,
    alpha: &dyn Fn(f64) -> f64,
    r: &dyn Fn(f64) -> f64,
    n_grid: &[f64],
) -> Result<RegimeClassification> {
    if n_grid.len() < 3 || n_grid.iter().any(|&n| !(n > core::f64::consts::E)) {
        return Err(Error::InvalidParameter(
            "need at least three grid points above e".into(),
        ));
    }
    let mut primary = Vec::with_capacity(n_grid.len());
    let mut square = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let a = alpha(n);
        let ln = libm::log(n);
        if !(a > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha({n}) = {a} must be positive"
            )));
        }
        match family {
            Family::Local => primary.push(a * ln),
            Family::Global => primary.push(a * ln * ln),
            Family::Near => {
                let rn = r(n);
                if !(rn >= 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "r({n}) = {rn} must be >= 1"
                    )));
                }
                primary.push(a * rn * ln);
                square.push(a * rn * rn);
            }
        }
    }
    let primary = fit_diagnostic(n_grid, &primary);
    let near_square = (family == Family::Near).then(|| fit_diagnostic(n_grid, &square));
    let regime = match (primary.limit, near_square.map(|f| f.limit)) {
        (Some(p), None) => Some(Regime::from_limits(family, p, None)?),
        (Some(p), Some(Some(q))) => Some(Regime::from_limits(family, p, Some(q))?),
        _ => None,
    };
    Ok(RegimeClassification {
        family,
        regime,
        primary,
        near_square,
        time_map: regime.map(Regime::time_map),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::JumpHazard;

    const E: f64 = core::f64::consts::E;

    #[test]
    fn tail_limits() {
        assert!((predict_tau_tail_limit(Family::Local, 1.0, None).unwrap() - 0.3679).abs() < 1e-4);
        assert!((predict_tau_tail_limit(Family::Global, 1.0, None).unwrap() - 0.6065).abs() < 1e-4);
        let b = Some(NearScaling::Beta(1.0));
        let v1 = predict_tau_tail_limit(Family::Near, 1.0, b).unwrap();
        assert!((v1 - libm::exp(-0.5)).abs() < 1e-15);
        let v2 = predict_tau_tail_limit(Family::Near, 2.0, b).unwrap();
        assert!((v2 - 0.2231).abs() < 1e-4);
        assert!(predict_tau_tail_limit(Family::Near, 1.0, None).is_err());
    }

    #[test]
    fn near_crossover_is_continuous() {
        for i in 1..200 {
            let beta = i as f64 * 0.05;
            let left = libm::exp(-beta / 2.0);
            let right = libm::exp(-beta * (2.0 * 1.0 - 1.0) / 2.0);
            assert!((left - right).abs() <= 1e-12);
            let just_above = near_crossover(beta, 1.0 + 1e-13);
            assert!((near_crossover(beta, 1.0) - just_above).abs() <= 1e-12);
        }
    }

    #[test]
    fn tail_limits_in_unit_interval() {
        for fam in [Family::Local, Family::Global] {
            assert_eq!(predict_tau_tail_limit(fam, 0.0, None).unwrap(), 1.0);
            for i in 1..50 {
                let v = predict_tau_tail_limit(fam, i as f64 * 0.2, None).unwrap();
                assert!(v > 0.0 && v <= 1.0);
            }
        }
    }

    #[test]
    fn conditional_examples() {
        let g = exact_tau_tail_conditional(Family::Global, 0.1, None, 3).unwrap();
        assert!((g - 0.729).abs() < 1e-12);
        let l = exact_tau_tail_conditional(Family::Local, 0.1, None, 2).unwrap();
        assert!((l - 0.81).abs() < 1e-12);
        let n = exact_tau_tail_conditional(Family::Near, 0.01, Some(5), 3).unwrap();
        assert!((n - 0.970299).abs() < 1e-12);
        assert_eq!(conditional_exponent(Family::Near, Some(5), 8).unwrap(), 25);
    }

    #[test]
    fn near_radius_one_exponent_is_t_minus_one() {
        assert_eq!(conditional_exponent(Family::Near, Some(1), 0).unwrap(), 0);
        for t in 1..100 {
            assert_eq!(
                conditional_exponent(Family::Near, Some(1), t).unwrap(),
                t - 1
            );
            assert_eq!(conditional_exponent(Family::Local, None, t).unwrap(), t);
        }
    }

    #[test]
    fn conditional_is_monotone() {
        for t in 0..40 {
            let mut prev = f64::INFINITY;
            for i in 0..=20 {
                let a = i as f64 * 0.05;
                for fam in [Family::Local, Family::Global] {
                    let _ = exact_tau_tail_conditional(fam, a, None, t).unwrap();
                }
                let v = exact_tau_tail_conditional(Family::Global, a, None, t).unwrap();
                assert!(v <= prev);
                prev = v;
            }
            let mut prev = f64::INFINITY;
            for r in 1..60 {
                let v = exact_tau_tail_conditional(Family::Near, 0.03, Some(r), t).unwrap();
                assert!(v <= prev + 1e-15);
                prev = v;
            }
        }
    }

    #[test]
    fn flag_accounting_sums() {
        for t in 0..50u64 {
            assert_eq!(flag_accounting_exponent(Family::Local, None, t).unwrap(), t);
            assert_eq!(
                flag_accounting_exponent(Family::Global, None, t).unwrap(),
                t * (t + 1) / 2
            );
            let brute: u64 = (1..=t).map(|s| s.min(4)).sum();
            assert_eq!(
                flag_accounting_exponent(Family::Near, Some(4), t).unwrap(),
                brute
            );
        }
    }

    #[test]
    fn profile_examples() {
        let cs = 1.0 / 2f64.ln();
        let r = Regime::Local2 { gamma: 1.0 };
        assert!((predict_mixing_profile(r, 0.5, cs).unwrap() - libm::exp(-0.5)).abs() < 1e-15);
        assert_eq!(predict_mixing_profile(r, 2.0, cs).unwrap(), 0.0);
        for c in [0.0, 0.3, 1.0, 1.4] {
            assert_eq!(predict_mixing_profile(Regime::Global3, c, cs).unwrap(), 1.0);
        }
        let beta = 0.7;
        let gamma = 0.7;
        let left = libm::exp(-(gamma * 1.0f64).powi(2) / (2.0 * beta));
        let right = libm::exp(-(2.0 * gamma * 1.0 - beta) / 2.0);
        assert!((left - right).abs() < 1e-12);
        assert!((left - libm::exp(-beta / 2.0)).abs() < 1e-12);
        let at = predict_mixing_profile(Regime::Near2b { beta, gamma }, 1.0, 10.0).unwrap();
        let after =
            predict_mixing_profile(Regime::Near2b { beta, gamma }, 1.0 + 1e-12, 10.0).unwrap();
        assert!((at - after).abs() < 1e-10);
    }

    #[test]
    fn unreachable_near_regimes() {
        for (p, q) in [
            (Limit::Finite(1.0), Limit::Infinite),
            (Limit::Zero, Limit::Infinite),
            (Limit::Zero, Limit::Finite(1.0)),
        ] {
            assert!(matches!(
                Regime::from_limits(Family::Near, p, Some(q)),
                Err(Error::UnreachableRegime(_))
            ));
        }
    }

    #[test]
    fn radius_examples() {
        let (r, _) = r_max_and_rho_max(1024.0, 2.0).unwrap();
        assert!((r - 10.0).abs() < 1e-12);
        let (_, rho) = r_max_and_rho_max(10.0, E).unwrap();
        assert!((rho - 1.0).abs() < 1e-15);
        assert!(r_max_and_rho_max(10.0, 1.0).is_err());
        // for a point mass c_* and ρ_max coincide
        let c_star = 1.0 / 2f64.ln();
        let (_, rho) = r_max_and_rho_max(10.0, 2.0).unwrap();
        assert_eq!(c_star, rho);
    }

    fn grid() -> Vec<f64> {
        (0..12).map(|i| libm::pow(10.0, 3.0 + i as f64)).collect()
    }

    #[test]
    fn classify_local_regimes() {
        let one = |_: f64| 1.0;
        let fast = classify_regime(
            Family::Local,
            &|n: f64| libm::pow(n.ln(), -0.5),
            &one,
            &grid(),
        )
        .unwrap();
        assert_eq!(fast.regime, Some(Regime::Local1));
        let slow = classify_regime(
            Family::Local,
            &|n: f64| libm::pow(n.ln(), -1.5),
            &one,
            &grid(),
        )
        .unwrap();
        assert_eq!(slow.regime, Some(Regime::Local3));
        let crit = classify_regime(Family::Local, &|n: f64| 2.0 / n.ln(), &one, &grid()).unwrap();
        match crit.regime {
            Some(Regime::Local2 { gamma }) => assert!((gamma - 2.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn classify_near_crossover() {
        let rho = 0.5;
        let beta = 1.0;
        let r = move |n: f64| libm::floor(rho * n.ln());
        let a = move |n: f64| beta / libm::pow(r(n), 2.0);
        let ns: Vec<f64> = (0..10)
            .map(|i| libm::pow(10.0, 20.0 + 10.0 * i as f64))
            .collect();
        let c = classify_regime(Family::Near, &a, &r, &ns).unwrap();
        match c.regime {
            Some(Regime::Near2b { beta: b, gamma }) => {
                assert!((b - beta).abs() < 1e-12);
                assert!((gamma - beta / rho).abs() < 0.05);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(c.time_map, Some(TimeMap::LogN));
    }

    #[test]
    fn oscillating_diagnostic_is_unclassified() {
        let a = |n: f64| libm::exp(2.0 * libm::sin(5.0 * n.ln().ln())) / n.ln();
        let c = classify_regime(Family::Local, &a, &|_| 1.0, &grid()).unwrap();
        assert_eq!(c.regime, None);
    }

    #[test]
    fn time_maps() {
        assert_eq!(
            TimeMap::InverseSqrtAlpha
                .time(1.0, 1e-4, None, 1e4)
                .unwrap(),
            100
        );
        assert_eq!(TimeMap::Radius.time(1.5, 0.0, Some(20), 1e4).unwrap(), 30);
        assert_eq!(
            TimeMap::InverseAlpha.time(1.0, 0.01, None, 1e4).unwrap(),
            100
        );
        assert_eq!(
            TimeMap::InverseAlphaRadius
                .time(1.0, 0.01, Some(5), 1e4)
                .unwrap(),
            20
        );
        assert_eq!(TimeMap::LogN.time(1.0, 0.0, None, 1e4).unwrap(), 9);
    }

    #[test]
    fn hazard_reproduces_conditional_tail() {
        let h = conditional_hazard(Family::Global, 0.05, None).unwrap();
        let mut surv = 1.0;
        for t in 1..20 {
            surv *= 1.0 - h.hazard(t, &[]);
            let want = exact_tau_tail_conditional(Family::Global, 0.05, None, t).unwrap();
            assert!((surv - want).abs() < 1e-12);
        }
    }
}
