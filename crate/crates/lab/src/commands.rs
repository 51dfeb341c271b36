//! The five experiment commands.

use std::path::{Path, PathBuf};
use std::time::Instant;

use nbrw_core::dynamics::{run_trajectory, DynamicsSpec, Mechanism, TrajectoryOptions};
use nbrw_core::estimators::{
    estimate_tau_tail, shared_start, shortcut_audit, verify_link_theorem, wilson_interval,
    LinkBudgets, ShortcutAudit, Z_99,
};
use nbrw_core::exact::{
    graph_transition_matrix, joint_transition_matrix, uniform_stationarity_deviation,
    verify_double_stochastic, verify_irreducible_aperiodic,
};
use nbrw_core::graph::{
    c_stat, make_degree_sequence, sample_uniform_configuration, DegreeSequenceKind,
};
use nbrw_core::rng::stream_rng;
use nbrw_core::theory::{
    exact_tau_tail_conditional, predict_mixing_profile, predict_tau_tail_limit, Family, Limit,
    NearScaling, Regime, TimeMap,
};
use nbrw_core::walk::{default_mixing_horizon, static_mixing_time, static_tv_curve, MixingTime};
use nbrw_core::HalfEdgeSpace;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{CommandKind, DegreeSpec, ExperimentConfig, GraphConfig, Mode, OutputFormat};
use crate::error::{LabError, Result};
use crate::io::{read_degrees, write_trajectory_jsonl};
use crate::table::{build_id, write_file, Metadata, ResultRow, ResultTable};

/// Stream of a seed used for sampled degree sequences.
pub const DEGREE_STREAM: u64 = u64::MAX - 2;

/// Everything a command produces.
#[derive(Debug, Clone)]
pub struct CommandOutput {
    pub command: CommandKind,
    pub table: Option<ResultTable>,
    pub report: Option<ExactReport>,
    /// Additional files, relative to the output directory.
    pub extra_files: Vec<(PathBuf, Vec<u8>)>,
}

impl CommandOutput {
    /// Whether a verification command's checks all passed.
    pub fn passed(&self) -> bool {
        self.report.as_ref().is_none_or(|r| r.pass)
    }
}

pub fn run(cfg: &ExperimentConfig, base_dir: &Path) -> Result<CommandOutput> {
    cfg.validate(base_dir)?;
    let start = Instant::now();
    let command = cfg.command()?;
    let mut extra_files = Vec::new();
    let (rows, report) = match command {
        CommandKind::TauTail => (tau_tail(cfg, base_dir)?, None),
        CommandKind::MixProfile => (mix_profile(cfg, base_dir)?, None),
        CommandKind::StaticMix => (static_mix(cfg, base_dir)?, None),
        CommandKind::ShortcutAudit => (shortcut_rows(cfg, base_dir, &mut extra_files)?, None),
        CommandKind::ExactVerify => (Vec::new(), Some(exact_verify(cfg, &mut extra_files)?)),
    };
    let wall_time_s = start.elapsed().as_secs_f64();
    let table = report.is_none().then(|| ResultTable {
        metadata: Metadata {
            command: command.name().to_string(),
            seed: cfg.seed,
            replicas: cfg.replicas,
            build: build_id().to_string(),
            wall_time_s,
            config: cfg.clone(),
        },
        rows,
    });
    let report = report.map(|mut r| {
        r.wall_time_s = wall_time_s;
        r
    });
    Ok(CommandOutput {
        command,
        table,
        report,
        extra_files,
    })
}

/// Writes the result files and the emitted config; returns the paths.
pub fn write_outputs(
    out: &CommandOutput,
    cfg: &ExperimentConfig,
    out_dir: &Path,
    format: OutputFormat,
) -> Result<Vec<PathBuf>> {
    let name = out.command.name();
    let mut written = vec![write_file(
        &out_dir.join(format!("{name}.config.toml")),
        cfg.emit().as_bytes(),
    )?];
    if let Some(table) = &out.table {
        if format.csv() {
            written.push(write_file(
                &out_dir.join(format!("{name}.csv")),
                &table.to_csv()?,
            )?);
        }
        if format.json() {
            written.push(write_file(
                &out_dir.join(format!("{name}.json")),
                &table.to_json()?,
            )?);
        }
    }
    if let Some(report) = &out.report {
        let bytes =
            serde_json::to_vec_pretty(report).map_err(|e| LabError::Output(e.to_string()))?;
        written.push(write_file(&out_dir.join(format!("{name}.json")), &bytes)?);
    }
    for (rel, bytes) in &out.extra_files {
        written.push(write_file(&out_dir.join(rel), bytes)?);
    }
    Ok(written)
}

/// Degree sequence for one grid point.
pub fn degrees_for(
    graph: &GraphConfig,
    n: usize,
    seed: u64,
    base_dir: &Path,
) -> Result<Vec<usize>> {
    let kind = match &graph.degrees {
        DegreeSpec::Explicit { degrees } => return Ok(degrees.clone()),
        DegreeSpec::File { path } => {
            let p = base_dir.join(path);
            let f = std::fs::File::open(&p).map_err(|e| LabError::io(&p, e))?;
            return read_degrees(std::io::BufReader::new(f));
        }
        DegreeSpec::Regular { degree } => DegreeSequenceKind::Regular { degree: *degree },
        DegreeSpec::TwoPoint { d1, d2, fraction } => DegreeSequenceKind::TwoPoint {
            d1: *d1,
            d2: *d2,
            fraction: *fraction,
        },
        DegreeSpec::PowerLaw { exponent, min, max } => DegreeSequenceKind::TruncatedPowerLaw {
            exponent: *exponent,
            min: *min,
            max: *max,
        },
    };
    let mut rng = stream_rng(seed, DEGREE_STREAM);
    Ok(make_degree_sequence(kind, n, &mut rng)?.degrees)
}

/// The half-edge spaces of the `n` grid, in grid order.
pub fn spaces(cfg: &ExperimentConfig, base_dir: &Path) -> Result<Vec<HalfEdgeSpace>> {
    let ns: Vec<usize> = if cfg.graph.degrees.fixed_size() {
        vec![0]
    } else {
        cfg.graph.n.clone()
    };
    ns.into_iter()
        .map(|n| {
            Ok(HalfEdgeSpace::new(&degrees_for(
                &cfg.graph, n, cfg.seed, base_dir,
            )?)?)
        })
        .collect()
}

/// `c` with `map.time(c) = t`, when the map is invertible at these parameters.
pub fn inverse_time(map: TimeMap, t: u64, alpha: f64, r: Option<usize>, n: f64) -> Option<f64> {
    let t = t as f64;
    match map {
        TimeMap::InverseAlpha => Some(t * alpha),
        TimeMap::InverseSqrtAlpha => Some(t * alpha.sqrt()),
        TimeMap::Radius => r.map(|r| t / r as f64),
        TimeMap::InverseAlphaRadius => r.map(|r| t * alpha * r as f64),
        TimeMap::LogN => Some(t / n.ln()),
    }
}

/// Grid points `(t, c)` for one graph size.
fn time_grid(cfg: &ExperimentConfig, map: TimeMap, n: f64) -> Result<Vec<(u64, Option<f64>)>> {
    let (alpha, r) = (cfg.dynamics.alpha, cfg.dynamics.r);
    if let Some(ts) = &cfg.grid.t {
        return Ok(ts
            .iter()
            .map(|&t| {
                (
                    t,
                    inverse_time(map, t, alpha, r, n).filter(|c| c.is_finite()),
                )
            })
            .collect());
    }
    let cs = cfg.grid.c.as_deref().unwrap_or_default();
    cs.iter()
        .map(|&c| Ok((map.time(c, alpha, r, n)?, Some(c))))
        .collect()
}

fn near_scaling(cfg: &ExperimentConfig) -> NearScaling {
    match cfg.theory.near_square.map(|l| l.limit()) {
        Some(Limit::Infinite) => NearScaling::Infinite,
        Some(Limit::Finite(b)) => NearScaling::Beta(b),
        Some(Limit::Zero) => NearScaling::Zero,
        None => {
            let r = cfg.dynamics.r.unwrap_or(1) as f64;
            let b = cfg.dynamics.alpha * r * r;
            if b > 0.0 {
                NearScaling::Beta(b)
            } else {
                NearScaling::Zero
            }
        }
    }
}

fn tail_time_map(family: Family, near: NearScaling) -> TimeMap {
    match (family, near) {
        (Family::Local, _) => TimeMap::InverseAlpha,
        (Family::Global, _) | (Family::Near, NearScaling::Infinite) => TimeMap::InverseSqrtAlpha,
        (Family::Near, NearScaling::Beta(_)) => TimeMap::Radius,
        (Family::Near, NearScaling::Zero) => TimeMap::InverseAlphaRadius,
    }
}

fn tau_tail(cfg: &ExperimentConfig, base_dir: &Path) -> Result<Vec<ResultRow>> {
    let spec = cfg.dynamics.spec()?;
    let mode = cfg.dynamics.mode;
    let family = mode.family();
    let near = (family == Family::Near).then(|| near_scaling(cfg));
    let map = cfg
        .grid
        .time_map
        .unwrap_or_else(|| tail_time_map(family, near.unwrap_or(NearScaling::Zero)));
    let mut rows = Vec::new();
    for space in spaces(cfg, base_dir)? {
        let n = space.vertex_count();
        let grid = time_grid(cfg, map, n as f64)?;
        let ts: Vec<u64> = grid.iter().map(|g| g.0).collect();
        let est = estimate_tau_tail(&space, &spec, &ts, cfg.replicas, cfg.seed, cfg.annealed)?;
        for (i, &(t, c)) in grid.iter().enumerate() {
            let theory = match c {
                Some(c) => Some(predict_tau_tail_limit(family, c, near)?),
                None => None,
            };
            let mut row =
                ResultRow::new("tau_tail", mode.label(), n, spec.alpha, cfg.dynamics.r, t)
                    .estimate(est.estimate[i])
                    .ci(est.ci[i])
                    .theory(theory)
                    .provenance(cfg.seed, cfg.replicas);
            row.c = c;
            row.time_map = Some(map.label().to_string());
            row.theory_alt = Some(exact_tau_tail_conditional(
                family,
                spec.alpha,
                cfg.dynamics.r,
                t,
            )?);
            rows.push(row);
        }
    }
    Ok(rows)
}

/// The regime named by the theory limits, or read off the finite-`n`
/// diagnostics for limits left unset.
pub fn regime_for(cfg: &ExperimentConfig, n: f64) -> Result<Regime> {
    let family = cfg.dynamics.mode.family();
    let a = cfg.dynamics.alpha;
    let ln = n.ln();
    let r = cfg.dynamics.r.unwrap_or(1) as f64;
    let finite = |v: f64| {
        if v > 0.0 {
            Limit::Finite(v)
        } else {
            Limit::Zero
        }
    };
    let primary = cfg.theory.primary.map(|l| l.limit()).unwrap_or_else(|| {
        finite(match family {
            Family::Local => a * ln,
            Family::Near => a * r * ln,
            Family::Global => a * ln * ln,
        })
    });
    let square = (family == Family::Near).then(|| {
        cfg.theory
            .near_square
            .map(|l| l.limit())
            .unwrap_or_else(|| finite(a * r * r))
    });
    Ok(Regime::from_limits(family, primary, square)?)
}

fn mix_profile(cfg: &ExperimentConfig, base_dir: &Path) -> Result<Vec<ResultRow>> {
    let spec = cfg.dynamics.spec()?;
    let mode = cfg.dynamics.mode;
    let family = mode.family();
    let budgets = LinkBudgets {
        graph_replicas: cfg.budgets.graph_replicas,
        plugin_samples: cfg.budgets.plugin_samples,
        tail_replicas: cfg.replicas,
    };
    let dyn_replicas = if spec.is_walk_independent() {
        budgets.graph_replicas
    } else {
        budgets.plugin_samples
    };
    let mut rows = Vec::new();
    for space in spaces(cfg, base_dir)? {
        let n = space.vertex_count();
        let regime = regime_for(cfg, n as f64)?;
        let map = cfg.grid.time_map.unwrap_or(regime.time_map());
        let c_star = c_stat(&space).ok();
        let grid = time_grid(cfg, map, n as f64)?;
        let ts: Vec<u64> = grid.iter().map(|g| g.0).collect();
        let (x, cfg0) = shared_start(&space, cfg.seed);
        let link = verify_link_theorem(&space, &cfg0, x, &spec, &ts, budgets, cfg.seed)?;
        for (row, &(t, c)) in link.iter().zip(&grid) {
            let profile = match (c, c_star) {
                (Some(c), Some(cs)) => Some(predict_mixing_profile(regime, c, cs)?),
                (Some(c), None) if regime.time_map() != TimeMap::LogN => {
                    Some(predict_mixing_profile(regime, c, f64::INFINITY)?)
                }
                _ => None,
            };
            let base = |q: &str| {
                let mut r = ResultRow::new(q, mode.label(), n, spec.alpha, cfg.dynamics.r, t);
                r.c = c;
                r.time_map = Some(map.label().to_string());
                r
            };
            rows.push(
                base("d_dyn")
                    .estimate(row.d_dyn)
                    .ci(row.d_dyn_ci)
                    .theory(profile)
                    .provenance(cfg.seed, dyn_replicas),
            );
            let mut tail = base("tau_tail")
                .estimate(row.tail)
                .ci(row.tail_ci)
                .provenance(cfg.seed, cfg.replicas);
            tail.theory_alt = Some(exact_tau_tail_conditional(
                family,
                spec.alpha,
                cfg.dynamics.r,
                t,
            )?);
            rows.push(tail);
            rows.push(base("d_stat").estimate(row.d_stat).provenance(cfg.seed, 1));
            rows.push(
                base("product")
                    .estimate(row.product)
                    .theory(profile)
                    .provenance(cfg.seed, cfg.replicas),
            );
            rows.push(
                base("link_residual")
                    .estimate(row.residual)
                    .provenance(cfg.seed, cfg.replicas),
            );
        }
    }
    Ok(rows)
}

fn static_mix(cfg: &ExperimentConfig, base_dir: &Path) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    let eps = cfg.static_mix.epsilon;
    for space in spaces(cfg, base_dir)? {
        let n = space.vertex_count();
        let c = c_stat(&space).map_err(|e| {
            LabError::Precondition(format!(
                "static mixing needs minimum degree 3 (forward degree at least 2): {e}"
            ))
        })?;
        let (x, cfg0) = shared_start(&space, cfg.seed);
        let horizon = cfg
            .static_mix
            .horizon
            .unwrap_or_else(|| default_mixing_horizon(&space));
        let ln = (n as f64).ln();
        let base =
            |q: &str, t: u64| ResultRow::new(q, "static", n, 0.0, None, t).provenance(cfg.seed, 1);
        rows.push(base("c_stat", 0).estimate(c));
        match static_mixing_time(&space, &cfg0, x, eps, Some(horizon))? {
            MixingTime::Mixed(t) => {
                rows.push(
                    base("mixing_time", t as u64)
                        .estimate(t as f64)
                        .theory(Some(c * ln)),
                );
                let mut ratio = base("mixing_time_ratio", t as u64)
                    .estimate(t as f64 / ln)
                    .theory(Some(c));
                ratio.c = Some(t as f64 / ln);
                rows.push(ratio);
            }
            MixingTime::NotMixedBy { horizon } => {
                rows.push(base("mixing_time", horizon as u64).theory(Some(c * ln)));
            }
        }
        if cfg.static_mix.curve {
            for (t, tv) in static_tv_curve(&space, &cfg0, x, horizon)
                .into_iter()
                .enumerate()
            {
                let mut row = base("d_stat", t as u64).estimate(tv);
                row.c = Some(t as f64 / ln);
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

/// One replica of the short-cut audit.
fn audit_replica(
    space: &HalfEdgeSpace,
    seed: u64,
    replica: u64,
    t: u64,
    r: usize,
) -> Result<(ShortcutAudit, nbrw_core::dynamics::TrajectoryRecord)> {
    let mut rng = stream_rng(seed, replica);
    let cfg = sample_uniform_configuration(space, &mut rng);
    let x = rng.random_range(0..space.len());
    let frozen = DynamicsSpec::new(Mechanism::Global, 0.0)?;
    let options = TrajectoryOptions {
        record_positions: true,
        ..Default::default()
    };
    let rec = run_trajectory(space, &cfg, x, &frozen, t, &mut rng, options);
    Ok((shortcut_audit(space, &cfg, &rec.positions, r)?, rec))
}

fn shortcut_rows(
    cfg: &ExperimentConfig,
    base_dir: &Path,
    extra: &mut Vec<(PathBuf, Vec<u8>)>,
) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    let mut dump = Vec::new();
    let ts = cfg.grid.t.clone().unwrap_or_default();
    for space in spaces(cfg, base_dir)? {
        let n = space.vertex_count();
        for &r in &cfg.audit.r {
            for &t in &ts {
                let results: Vec<_> = (0..cfg.replicas)
                    .into_par_iter()
                    .map(|i| audit_replica(&space, cfg.seed, i, t, r))
                    .collect::<Result<_>>()?;
                let base = |q: &str| {
                    ResultRow::new(q, "static", n, 0.0, Some(r), t)
                        .provenance(cfg.seed, cfg.replicas)
                };
                let mut positive = 0u64;
                let mut audited = 0u64;
                for (i, (audit, rec)) in results.iter().enumerate() {
                    let mut row = match audit.chi() {
                        Some(chi) => {
                            audited += 1;
                            positive += u64::from(chi > 0);
                            base("chi").estimate(chi as f64)
                        }
                        None => base("chi_skipped"),
                    };
                    row.c = Some(i as f64);
                    rows.push(row);
                    if cfg.output.trajectories {
                        write_trajectory_jsonl(&mut dump, i as u64, rec)
                            .map_err(|e| LabError::Output(e.to_string()))?;
                    }
                }
                let frac = if audited == 0 {
                    0.0
                } else {
                    positive as f64 / audited as f64
                };
                rows.push(
                    base("fraction_chi_positive")
                        .estimate(frac)
                        .ci(wilson_interval(positive, audited, Z_99)),
                );
                let skipped = cfg.replicas - audited;
                rows.push(
                    base("fraction_skipped")
                        .estimate(skipped as f64 / cfg.replicas as f64)
                        .ci(wilson_interval(skipped, cfg.replicas, Z_99)),
                );
            }
        }
    }
    if cfg.output.trajectories {
        extra.push((PathBuf::from("shortcut-audit.trajectories.jsonl"), dump));
    }
    Ok(rows)
}

/// One instance of the exact battery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactCase {
    pub degrees: Vec<usize>,
    pub mode: Mode,
    pub alpha: f64,
    pub r: Option<usize>,
    pub configurations: usize,
    pub states: usize,
    pub row_deviation: f64,
    pub worst_row: usize,
    pub column_deviation: f64,
    pub worst_column: usize,
    pub stationarity_deviation: f64,
    /// Largest column-sum deviation of the graph matrices `Q_x` over `x`.
    pub graph_column_deviation: f64,
    pub irreducible: bool,
    pub period: u64,
    pub row_pass: bool,
    pub column_pass: bool,
    pub stationary_pass: bool,
    pub irreducible_pass: bool,
    pub pass: bool,
    pub runtime_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactReport {
    pub tolerance: f64,
    pub pass: bool,
    pub failures: Vec<String>,
    pub cases: Vec<ExactCase>,
    pub build: String,
    pub wall_time_s: f64,
}

pub fn exact_case(
    degrees: &[usize],
    mode: Mode,
    alpha: f64,
    r: usize,
    tol: f64,
) -> Result<(ExactCase, nbrw_core::exact::DenseMatrix)> {
    let start = Instant::now();
    let space = HalfEdgeSpace::new(degrees)?;
    let mech = match mode {
        Mode::Local => Mechanism::Local,
        Mode::Near => Mechanism::Near { r },
        Mode::Global => Mechanism::Global,
    };
    let spec = DynamicsSpec::new(mech, alpha)?;
    let (js, m) = joint_transition_matrix(&space, &spec)?;
    let ds = verify_double_stochastic(&m, tol);
    let stat = uniform_stationarity_deviation(&m);
    let irr = verify_irreducible_aperiodic(&m);
    let mut graph_col = 0.0f64;
    for x in 0..space.len() {
        let (_, q) = graph_transition_matrix(&space, x, &spec)?;
        graph_col = graph_col.max(verify_double_stochastic(&q, tol).max_column_deviation);
    }
    let stationary_pass = stat <= tol;
    let irreducible_pass = irr.irreducible && irr.aperiodic;
    let case = ExactCase {
        degrees: degrees.to_vec(),
        mode,
        alpha,
        r: (mode == Mode::Near).then_some(r),
        configurations: js.configs.len(),
        states: js.state_count(),
        row_deviation: ds.max_row_deviation,
        worst_row: ds.worst_row,
        column_deviation: ds.max_column_deviation,
        worst_column: ds.worst_column,
        stationarity_deviation: stat,
        graph_column_deviation: graph_col,
        irreducible: irr.irreducible,
        period: irr.period,
        row_pass: ds.row_stochastic,
        column_pass: ds.column_stochastic,
        stationary_pass,
        irreducible_pass,
        pass: ds.pass && stationary_pass && irreducible_pass,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    Ok((case, m))
}

fn exact_verify(
    cfg: &ExperimentConfig,
    extra: &mut Vec<(PathBuf, Vec<u8>)>,
) -> Result<ExactReport> {
    let x = &cfg.exact;
    let mut cases = Vec::new();
    let mut failures = Vec::new();
    for degrees in &x.degrees {
        for &mode in &x.modes {
            for &alpha in &x.alphas {
                let (case, m) = exact_case(degrees, mode, alpha, x.r, x.tolerance)?;
                let label = format!("{}-{:?}-alpha{}", mode.label(), degrees, alpha)
                    .replace([' ', '[', ']'], "")
                    .replace(',', "_");
                if !case.pass {
                    let mut what = Vec::new();
                    if !case.row_pass {
                        what.push(format!("row deviation {:.3e}", case.row_deviation));
                    }
                    if !case.column_pass {
                        what.push(format!(
                            "column deviation {:.3e} at column {}",
                            case.column_deviation, case.worst_column
                        ));
                    }
                    if !case.stationary_pass {
                        what.push(format!(
                            "stationarity deviation {:.3e}",
                            case.stationarity_deviation
                        ));
                    }
                    if !case.irreducible_pass {
                        what.push(format!(
                            "irreducible = {}, period = {}",
                            case.irreducible, case.period
                        ));
                    }
                    failures.push(format!("{label}: {}", what.join("; ")));
                }
                if x.export_matrices {
                    extra.push((
                        PathBuf::from("matrices").join(format!("{label}.txt")),
                        m.to_dense_text().into_bytes(),
                    ));
                }
                cases.push(case);
            }
        }
    }
    Ok(ExactReport {
        tolerance: x.tolerance,
        pass: failures.is_empty(),
        failures,
        cases,
        build: build_id().to_string(),
        wall_time_s: 0.0,
    })
}
