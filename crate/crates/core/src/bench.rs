//! Agent comparison and pruning trade-off experiments.
//!
//! Instances are generated per cluster count from a base seed, so reruns
//! reproduce every column except the timing ones. Instances inside a cell
//! run one after another so that the per-instance wall times are not skewed
//! by sharing cores with other instances; the optimal solver parallelizes
//! internally.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::agents::{normalized_coverage, run_agent, AgentKind, PredictionSet};
use crate::channel::EnvParams;
use crate::error::{Error, Result};
use crate::instance::{generate, GeneratorConfig, Instance, DEFAULT_GRID_DIM, DEFAULT_USERS};
use crate::rng::derive_seed;
use crate::solver::{search_space, solve, SolveConfig};

pub const CSV_HEADER: &str = "agent,clusters,n_users,instances,mean_coverage,norm_coverage,mean_time_s,median_time_s";
pub const SWEEP_CSV_HEADER: &str = "set,k,instances,mean_candidates,mean_coverage,mean_time_s";

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub agents: Vec<AgentKind>,
    pub clusters: Vec<usize>,
    pub per_cell: usize,
    pub seed: u64,
    pub n_users: usize,
    pub grid_dim: usize,
    /// Solver settings of the reference optimum every row is normalized by.
    pub optimal: SolveConfig,
    /// External predictions per cluster count, ids = instance index in the cell.
    pub predictions: BTreeMap<usize, PredictionSet>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            agents: vec![AgentKind::Optimal(SolveConfig::default())],
            clusters: (0..=4).collect(),
            per_cell: 100,
            seed: 0,
            n_users: DEFAULT_USERS,
            grid_dim: DEFAULT_GRID_DIM,
            optimal: SolveConfig::default(),
            predictions: BTreeMap::new(),
        }
    }
}

/// One `(agent, cluster count)` cell. Metric fields are `None` for an
/// agent that could not run (missing predictions).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub agent: String,
    pub clusters: usize,
    pub n_users: usize,
    pub instances: usize,
    pub absent: bool,
    pub mean_coverage: Option<f64>,
    pub norm_coverage: Option<f64>,
    pub mean_time_s: Option<f64>,
    pub median_time_s: Option<f64>,
    /// Per-instance coverage, in instance order.
    #[serde(skip)]
    pub coverages: Vec<f64>,
    #[serde(skip)]
    pub times_s: Vec<f64>,
}

/// Seed of instance `index` of the cell with `clusters` clusters.
pub fn cell_instance_seed(base: u64, clusters: usize, index: usize) -> u64 {
    derive_seed(base, ((clusters as u64) << 32) | index as u64)
}

pub fn cell_instances(
    base_seed: u64,
    clusters: usize,
    count: usize,
    n_users: usize,
    grid_dim: usize,
    params: &EnvParams,
) -> Result<Vec<Instance>> {
    (0..count)
        .map(|i| {
            generate(&GeneratorConfig {
                n_users,
                n_clusters: clusters,
                seed: cell_instance_seed(base_seed, clusters, i),
                cluster_std_m: None,
                grid_dim,
                params: params.clone(),
            })
        })
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

fn metrics_row(agent: &str, clusters: usize, n_users: usize, cov: Vec<f64>, times: Vec<f64>, opt: &[f64]) -> BenchRow {
    BenchRow {
        agent: agent.to_string(),
        clusters,
        n_users,
        instances: cov.len(),
        absent: false,
        mean_coverage: Some(mean(&cov)),
        norm_coverage: normalized_coverage(&cov, opt).ok(),
        mean_time_s: Some(mean(&times)),
        median_time_s: Some(median(&times)),
        coverages: cov,
        times_s: times,
    }
}

/// Runs every agent on `per_cell` instances for each cluster count.
pub fn compare_agents(config: &BenchConfig, params: &EnvParams) -> Result<Vec<BenchRow>> {
    params.validate()?;
    let mut rows = Vec::new();
    if config.per_cell == 0 {
        return Ok(rows);
    }
    let empty = PredictionSet::default();
    for &c in &config.clusters {
        let instances = cell_instances(config.seed, c, config.per_cell, config.n_users, config.grid_dim, params)?;

        let mut opt_cov = Vec::with_capacity(instances.len());
        let mut opt_times = Vec::with_capacity(instances.len());
        for inst in &instances {
            let s = solve(inst, &config.optimal, params)?;
            opt_cov.push(s.coverage);
            opt_times.push(s.wall_time_s);
        }

        let preds = config.predictions.get(&c).unwrap_or(&empty);
        for kind in &config.agents {
            if let AgentKind::Optimal(solve_cfg) = kind {
                if *solve_cfg == config.optimal {
                    rows.push(metrics_row(
                        kind.name(),
                        c,
                        config.n_users,
                        opt_cov.clone(),
                        opt_times.clone(),
                        &opt_cov,
                    ));
                    continue;
                }
            }
            if kind.needs_predictions() && (0..instances.len()).any(|i| preds.get(i).is_none()) {
                rows.push(BenchRow {
                    agent: kind.name().to_string(),
                    clusters: c,
                    n_users: config.n_users,
                    instances: instances.len(),
                    absent: true,
                    mean_coverage: None,
                    norm_coverage: None,
                    mean_time_s: None,
                    median_time_s: None,
                    coverages: Vec::new(),
                    times_s: Vec::new(),
                });
                continue;
            }
            let mut cov = Vec::with_capacity(instances.len());
            let mut times = Vec::with_capacity(instances.len());
            for (i, inst) in instances.iter().enumerate() {
                let out = run_agent(kind, i, inst, preds, params).map_err(|e| Error::Instance {
                    index: i,
                    source: Box::new(e),
                })?;
                cov.push(out.evaluation.coverage);
                times.push(out.wall_time_s);
            }
            rows.push(metrics_row(kind.name(), c, config.n_users, cov, times, &opt_cov));
        }
    }
    Ok(rows)
}

fn fmt_opt(v: Option<f64>, prec: usize) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.prec$}"),
        _ => "NA".to_string(),
    }
}

pub fn rows_to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.agent,
            r.clusters,
            r.n_users,
            r.instances,
            fmt_opt(r.mean_coverage, 6),
            fmt_opt(r.norm_coverage, 6),
            fmt_opt(r.mean_time_s, 9),
            fmt_opt(r.median_time_s, 9),
        );
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes `results.csv` and `results.json` into `dir`.
pub fn write_results(rows: &[BenchRow], dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(&dir.join("results.csv"), &rows_to_csv(rows))?;
    let json = serde_json::to_string_pretty(rows).expect("rows serialize");
    write_file(&dir.join("results.json"), &json)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub set: String,
    /// 0 = no pruning.
    pub k: usize,
    pub instances: usize,
    pub mean_candidates: f64,
    pub mean_coverage: f64,
    pub mean_time_s: f64,
}

/// Mean coverage, candidate count and solve time per hull-cluster count
/// `k = 0..=k_max` (0 disables pruning) on uniform and on 2-cluster users.
pub fn hull_tradeoff_sweep(
    k_max: usize,
    per_set: usize,
    seed: u64,
    n_users: usize,
    params: &EnvParams,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    if per_set == 0 {
        return Ok(rows);
    }
    for (name, clusters) in [("random", 0usize), ("2-cluster", 2)] {
        let instances = cell_instances(seed, clusters, per_set, n_users, DEFAULT_GRID_DIM, params)?;
        for k in 0..=k_max {
            let cfg = SolveConfig {
                hull_clusters: k,
                ..SolveConfig::default()
            };
            let (mut cand, mut cov, mut time) = (0.0, 0.0, 0.0);
            for inst in &instances {
                cand += search_space(inst, &cfg).len() as f64;
                let s = solve(inst, &cfg, params)?;
                cov += s.coverage;
                time += s.wall_time_s;
            }
            let n = instances.len() as f64;
            rows.push(SweepRow {
                set: name.to_string(),
                k,
                instances: instances.len(),
                mean_candidates: cand / n,
                mean_coverage: cov / n,
                mean_time_s: time / n,
            });
        }
    }
    Ok(rows)
}

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{:.4},{:.6},{:.9}",
            r.set, r.k, r.instances, r.mean_candidates, r.mean_coverage, r.mean_time_s
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{label_instance, PredictionRecord};

    fn strip_timing(csv: &str) -> String {
        csv.lines()
            .map(|l| l.split(',').take(6).collect::<Vec<_>>().join(","))
            .collect::<Vec<_>>()
            .join("\n")
    }

    #[test]
    fn zero_instances_gives_empty_table() {
        let cfg = BenchConfig {
            per_cell: 0,
            ..BenchConfig::default()
        };
        let rows = compare_agents(&cfg, &EnvParams::default()).unwrap();
        assert!(rows.is_empty());
        assert_eq!(rows_to_csv(&rows), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn rerun_is_identical_except_timing() {
        let cfg = BenchConfig {
            agents: vec![
                AgentKind::Optimal(SolveConfig::default()),
                AgentKind::KMeansBaseline,
                AgentKind::RandomBaseline { seed: 3 },
            ],
            clusters: vec![0, 2],
            per_cell: 4,
            seed: 11,
            ..BenchConfig::default()
        };
        let params = EnvParams::default();
        let a = rows_to_csv(&compare_agents(&cfg, &params).unwrap());
        let b = rows_to_csv(&compare_agents(&cfg, &params).unwrap());
        assert_eq!(strip_timing(&a), strip_timing(&b));
        for line in a.lines().skip(1).filter(|l| l.starts_with("optimal")) {
            assert_eq!(line.split(',').nth(5).unwrap(), "1.000000");
        }
    }

    #[test]
    fn missing_predictions_mark_row_absent() {
        let cfg = BenchConfig {
            agents: vec![AgentKind::Optimal(SolveConfig::default()), AgentKind::Hybrid],
            clusters: vec![2],
            per_cell: 2,
            ..BenchConfig::default()
        };
        let rows = compare_agents(&cfg, &EnvParams::default()).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[1].absent);
        assert!(rows_to_csv(&rows).lines().nth(2).unwrap().ends_with("NA,NA,NA,NA"));
    }

    #[test]
    fn predictions_from_labels_give_unit_normalized_coverage() {
        let params = EnvParams::default();
        let instances = cell_instances(5, 2, 3, 50, 10, &params).unwrap();
        let preds = PredictionSet::new(instances.iter().enumerate().map(|(i, inst)| {
            PredictionRecord::from_label(i, &label_instance(inst, &SolveConfig::default(), &params).unwrap())
        }));
        let cfg = BenchConfig {
            agents: vec![AgentKind::Hybrid, AgentKind::FullExternal],
            clusters: vec![2],
            per_cell: 3,
            seed: 5,
            predictions: [(2, preds)].into_iter().collect(),
            ..BenchConfig::default()
        };
        let rows = compare_agents(&cfg, &params).unwrap();
        for r in &rows {
            assert_eq!(r.norm_coverage, Some(1.0), "{}", r.agent);
        }
    }

    #[test]
    fn sweep_rows_and_candidate_monotonicity() {
        let params = EnvParams::default();
        let rows = hull_tradeoff_sweep(3, 3, 1, 50, &params).unwrap();
        assert_eq!(rows.len(), 8);
        for set in ["random", "2-cluster"] {
            let r: Vec<&SweepRow> = rows.iter().filter(|r| r.set == set).collect();
            assert_eq!(r[0].mean_candidates, 100.0);
            assert!(r[1].mean_candidates <= r[0].mean_candidates);
            for row in &r[1..] {
                assert!(row.mean_coverage <= r[0].mean_coverage);
            }
        }
        let csv = sweep_to_csv(&rows);
        assert_eq!(csv.lines().count(), 9);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
