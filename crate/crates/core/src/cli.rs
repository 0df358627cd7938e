//! Command-line front end. Exit status: 0 success, 1 usage error, 2 data
//! error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::agents::{export_labeled_dataset, load_labeled, normalized_coverage, run_agent, AgentKind, PredictionSet};
use crate::bench::{
    cell_instances, compare_agents, hull_tradeoff_sweep, rows_to_csv, sweep_to_csv, write_results, BenchConfig,
};
use crate::channel::{EnvParams, GainModel};
use crate::error::{Error, Result};
use crate::instance::{self, generate, GeneratorConfig, Instance, DEFAULT_GRID_DIM};
use crate::solver::{solve, SolveConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "uavslice",
    version,
    about = "Joint 2-UAV placement and RAN-slice bandwidth allocation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate seeded instances as JSONL.
    Generate {
        #[arg(long, default_value_t = 50)]
        n_users: usize,
        #[arg(long, default_value_t = 2)]
        clusters: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_GRID_DIM)]
        grid_dim: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve every instance of a JSONL file exactly.
    Solve(SolveArgs),
    /// Solve instances and write a labeled training dataset.
    Label(SolveArgs),
    /// Score external predictions against the optimum.
    Eval {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long, value_enum)]
        agent: EvalAgent,
        #[arg(long, default_value_t = 1)]
        hull_clusters: usize,
        #[arg(long, value_enum, default_value_t = GainArg::Isotropic)]
        gain_model: GainArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare agents across cluster counts.
    Bench {
        /// Comma-separated: optimal,hybrid,full,kmeans,centroid,random
        #[arg(long, default_value = "optimal,kmeans,centroid,random")]
        agents: String,
        /// Range `a..b` (inclusive) or comma-separated list.
        #[arg(long, default_value = "0..4")]
        clusters: String,
        #[arg(long, default_value_t = 100)]
        per_cell: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        n_users: usize,
        #[arg(long, default_value_t = 1)]
        hull_clusters: usize,
        #[arg(long, default_value_t = 0)]
        threads: usize,
        #[arg(long, value_enum, default_value_t = GainArg::Isotropic)]
        gain_model: GainArg,
        /// Directory holding `predictions_c<clusters>.jsonl` files.
        #[arg(long)]
        predictions_dir: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Coverage and time against the number of hull clusters.
    SweepHulls {
        #[arg(long, default_value_t = 5)]
        k_max: usize,
        #[arg(long, default_value_t = 20)]
        per_set: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        n_users: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 1)]
    hull_clusters: usize,
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long, value_enum, default_value_t = GainArg::Isotropic)]
    gain_model: GainArg,
    /// Forbid both UAVs on the same grid point.
    #[arg(long)]
    no_colocated: bool,
    #[arg(long)]
    out: PathBuf,
}

impl SolveArgs {
    fn config(&self) -> SolveConfig {
        SolveConfig {
            hull_clusters: self.hull_clusters,
            threads: self.threads,
            allow_colocated: !self.no_colocated,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GainArg {
    Isotropic,
    /// Half-power cone, gain 1 inside and 0.01 outside.
    Cone,
}

impl GainArg {
    fn params(self) -> EnvParams {
        EnvParams {
            gain_model: match self {
                GainArg::Isotropic => GainModel::Isotropic,
                GainArg::Cone => GainModel::DEFAULT_CONE,
            },
            ..EnvParams::default()
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EvalAgent {
    Hybrid,
    Full,
}

/// One line of `solve` output.
#[derive(Debug, Serialize)]
struct SolutionRecord {
    id: usize,
    idx: [usize; 2],
    pos: [[f64; 2]; 2],
    bw: [[f64; 3]; 2],
    coverage: f64,
    satisfied: usize,
    candidates: usize,
    time_s: f64,
}

#[derive(Debug, Serialize)]
struct EvalInstance {
    id: usize,
    coverage: f64,
    optimal_coverage: f64,
    time_s: f64,
}

#[derive(Debug, Serialize)]
struct EvalSummary {
    agent: &'static str,
    instances: usize,
    mean_coverage: f64,
    optimal_mean_coverage: f64,
    norm_coverage: f64,
    mean_time_s: f64,
    per_instance: Vec<EvalInstance>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn parse_agents(s: &str, solve_cfg: SolveConfig, seed: u64) -> Result<Vec<AgentKind>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| match t {
            "optimal" => Ok(AgentKind::Optimal(solve_cfg)),
            "hybrid" => Ok(AgentKind::Hybrid),
            "full" => Ok(AgentKind::FullExternal),
            "kmeans" => Ok(AgentKind::KMeansBaseline),
            "centroid" => Ok(AgentKind::CentroidBaseline),
            "random" => Ok(AgentKind::RandomBaseline { seed }),
            other => Err(Error::InvalidParameter(format!("unknown agent '{other}'"))),
        })
        .collect()
}

fn parse_clusters(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidParameter(format!("bad cluster list '{s}'"));
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}

fn execute(cmd: Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Generate {
            n_users,
            clusters,
            count,
            seed,
            grid_dim,
            out: path,
        } => {
            let params = EnvParams::default();
            let instances: Vec<Instance> = (0..count)
                .map(|i| {
                    generate(&GeneratorConfig {
                        n_users,
                        n_clusters: clusters,
                        seed: seed.wrapping_add(i as u64),
                        cluster_std_m: None,
                        grid_dim,
                        params: params.clone(),
                    })
                })
                .collect::<Result<_>>()?;
            instance::save_jsonl(&instances, &path)?;
            let _ = writeln!(out, "wrote {} instances to {}", instances.len(), path.display());
        }
        Command::Solve(args) => {
            let params = args.gain_model.params();
            let instances = instance::load_jsonl(&args.input)?;
            let mut w = create(&args.out)?;
            let mut total = 0.0;
            for (id, inst) in instances.iter().enumerate() {
                let s = solve(inst, &args.config(), &params).map_err(|e| Error::Instance {
                    index: id,
                    source: Box::new(e),
                })?;
                total += s.coverage;
                let (i, j) = s.placement.indices();
                let rec = SolutionRecord {
                    id,
                    idx: [i, j],
                    pos: s.placement.points().map(Into::into),
                    bw: s.alloc.bw,
                    coverage: s.coverage,
                    satisfied: s.satisfied_count,
                    candidates: s.candidates_examined,
                    time_s: s.wall_time_s,
                };
                writeln!(w, "{}", serde_json::to_string(&rec).expect("serializes"))
                    .map_err(|e| Error::io(&args.out, e))?;
            }
            w.flush().map_err(|e| Error::io(&args.out, e))?;
            if !instances.is_empty() {
                let _ = writeln!(
                    out,
                    "solved {} instances, mean coverage {:.4}",
                    instances.len(),
                    total / instances.len() as f64
                );
            }
        }
        Command::Label(args) => {
            let params = args.gain_model.params();
            let instances = instance::load_jsonl(&args.input)?;
            export_labeled_dataset(&instances, &params, &args.config(), &args.out)?;
            let _ = writeln!(out, "labeled {} instances into {}", instances.len(), args.out.display());
        }
        Command::Eval {
            input,
            predictions,
            agent,
            hull_clusters,
            gain_model,
            out: path,
        } => {
            let params = gain_model.params();
            let preds = PredictionSet::load(&predictions)?;
            // labeled files carry their optimum; plain instance files are solved here
            let reference: Vec<(Instance, Option<f64>)> = match load_labeled(&input) {
                Ok(v) => v.into_iter().map(|(i, l)| (i, Some(l.coverage))).collect(),
                Err(_) => instance::load_jsonl(&input)?.into_iter().map(|i| (i, None)).collect(),
            };
            let kind = match agent {
                EvalAgent::Hybrid => AgentKind::Hybrid,
                EvalAgent::Full => AgentKind::FullExternal,
            };
            let solve_cfg = SolveConfig {
                hull_clusters,
                ..SolveConfig::default()
            };
            let mut per_instance = Vec::with_capacity(reference.len());
            for (id, (inst, opt)) in reference.iter().enumerate() {
                let wrap = |e: Error| Error::Instance {
                    index: id,
                    source: Box::new(e),
                };
                let optimal_coverage = match opt {
                    Some(c) => *c,
                    None => solve(inst, &solve_cfg, &params).map_err(wrap)?.coverage,
                };
                let o = run_agent(&kind, id, inst, &preds, &params).map_err(wrap)?;
                per_instance.push(EvalInstance {
                    id,
                    coverage: o.evaluation.coverage,
                    optimal_coverage,
                    time_s: o.wall_time_s,
                });
            }
            let cov: Vec<f64> = per_instance.iter().map(|e| e.coverage).collect();
            let opt: Vec<f64> = per_instance.iter().map(|e| e.optimal_coverage).collect();
            let n = cov.len().max(1) as f64;
            let summary = EvalSummary {
                agent: kind.name(),
                instances: cov.len(),
                mean_coverage: cov.iter().sum::<f64>() / n,
                optimal_mean_coverage: opt.iter().sum::<f64>() / n,
                norm_coverage: normalized_coverage(&cov, &opt).unwrap_or(f64::NAN),
                mean_time_s: per_instance.iter().map(|e| e.time_s).sum::<f64>() / n,
                per_instance,
            };
            let _ = writeln!(
                out,
                "{}: {} instances, mean coverage {:.4}, optimal {:.4}, normalized {:.4}",
                summary.agent,
                summary.instances,
                summary.mean_coverage,
                summary.optimal_mean_coverage,
                summary.norm_coverage
            );
            if let Some(path) = path {
                let json = serde_json::to_string_pretty(&summary).expect("serializes");
                std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
            }
        }
        Command::Bench {
            agents,
            clusters,
            per_cell,
            seed,
            n_users,
            hull_clusters,
            threads,
            gain_model,
            predictions_dir,
            out_dir,
        } => {
            let params = gain_model.params();
            let optimal = SolveConfig {
                hull_clusters,
                threads,
                allow_colocated: true,
            };
            let clusters = parse_clusters(&clusters)?;
            let agents = parse_agents(&agents, optimal, seed)?;
            std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
            let mut predictions = BTreeMap::new();
            for &c in &clusters {
                // instances for external predictors, ids = line numbers
                let insts = cell_instances(seed, c, per_cell, n_users, DEFAULT_GRID_DIM, &params)?;
                instance::save_jsonl(&insts, out_dir.join(format!("instances_c{c}.jsonl")))?;
                if let Some(dir) = &predictions_dir {
                    let p = dir.join(format!("predictions_c{c}.jsonl"));
                    if p.exists() {
                        predictions.insert(c, PredictionSet::load(&p)?);
                    }
                }
            }
            let cfg = BenchConfig {
                agents,
                clusters,
                per_cell,
                seed,
                n_users,
                grid_dim: DEFAULT_GRID_DIM,
                optimal,
                predictions,
            };
            let rows = compare_agents(&cfg, &params)?;
            write_results(&rows, &out_dir)?;
            let _ = write!(out, "{}", rows_to_csv(&rows));
        }
        Command::SweepHulls {
            k_max,
            per_set,
            seed,
            n_users,
            out: path,
        } => {
            let rows = hull_tradeoff_sweep(k_max, per_set, seed, n_users, &EnvParams::default())?;
            let csv = sweep_to_csv(&rows);
            std::fs::write(&path, &csv).map_err(|e| Error::io(&path, e))?;
            let _ = write!(out, "{csv}");
        }
    }
    Ok(())
}

/// Parses `args` (program name first) and runs the subcommand, writing
/// progress to `out` and errors to `err`. Returns the exit status.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_data_error() {
                EXIT_DATA
            } else {
                EXIT_USAGE
            }
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout(), &mut std::io::stderr())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cluster_lists() {
        assert_eq!(parse_clusters("0..4").unwrap(), vec![0, 1, 2, 3, 4]);
        assert_eq!(parse_clusters("2,3").unwrap(), vec![2, 3]);
        assert!(parse_clusters("4..1").is_err());
        assert!(parse_clusters("x").is_err());
    }

    #[test]
    fn agent_lists() {
        let a = parse_agents("optimal,hybrid,full", SolveConfig::default(), 0).unwrap();
        assert_eq!(a.len(), 3);
        assert!(parse_agents("optimal,magic", SolveConfig::default(), 0).is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(
            run_with(["uavslice", "generate", "--bogus"], &mut o, &mut e),
            EXIT_USAGE
        );
        assert!(String::from_utf8_lossy(&e).contains("Usage"));
        // --seed is mandatory
        assert_eq!(
            run_with(["uavslice", "generate", "--out", "/tmp/x"], &mut o, &mut e),
            EXIT_USAGE
        );
        assert_eq!(run_with(["uavslice", "--help"], &mut o, &mut e), EXIT_OK);
    }

    #[test]
    fn missing_input_is_data_error() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run_with(
            [
                "uavslice",
                "solve",
                "--in",
                "/nonexistent/in.jsonl",
                "--out",
                "/tmp/o.jsonl",
            ],
            &mut o,
            &mut e,
        );
        assert_eq!(code, EXIT_DATA);
        assert!(String::from_utf8_lossy(&e).contains("/nonexistent/in.jsonl"));
    }
}
