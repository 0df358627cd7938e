//! Agents map an instance to a placement and a bandwidth split.
//!
//! `Optimal` is the exact solver. `Hybrid` takes UAV positions from an
//! external predictor and computes the bandwidth split exactly;
//! `FullExternal` takes both positions and split from the predictor. The
//! baselines need no predictions.
//!
//! Predictions refer to instances by `id`, the 0-based line of the instance
//! in its JSONL file.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::channel::EnvParams;
use crate::error::{Error, Result};
use crate::evaluator::{evaluate, Allocation, Evaluation, Placement};
use crate::geometry::{centroid, kmeans, nearest_grid_index, Point};
use crate::instance::{read_jsonl, Instance, InstanceRecord};
use crate::rng::{derive_seed, SeededRng};
use crate::solver::{solve, solve_placement, SolveConfig};

/// Clamping tolerance applied to predicted bandwidth fractions.
pub const PREDICTION_BW_TOL: f64 = 1e-6;
/// Slack allowed for predicted positions just outside the area, in meters.
pub const PREDICTION_POS_TOL_M: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AgentKind {
    Optimal(SolveConfig),
    /// Predicted positions, optimal bandwidth.
    Hybrid,
    /// Predicted positions and bandwidth.
    FullExternal,
    /// UAVs at the grid points nearest the two k-means centers.
    KMeansBaseline,
    /// Both UAVs at the grid point nearest the user centroid.
    CentroidBaseline,
    /// Uniform random grid pair; the stream is seeded from `seed` and the
    /// instance seed.
    RandomBaseline {
        seed: u64,
    },
}

impl AgentKind {
    pub fn name(&self) -> &'static str {
        match self {
            AgentKind::Optimal(_) => "optimal",
            AgentKind::Hybrid => "hybrid",
            AgentKind::FullExternal => "full",
            AgentKind::KMeansBaseline => "kmeans",
            AgentKind::CentroidBaseline => "centroid",
            AgentKind::RandomBaseline { .. } => "random",
        }
    }

    pub fn needs_predictions(&self) -> bool {
        matches!(self, AgentKind::Hybrid | AgentKind::FullExternal)
    }
}

/// Output of an external predictor for one instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: usize,
    pub pos: [[f64; 2]; 2],
    pub bw: Option<[[f64; 3]; 2]>,
}

impl PredictionRecord {
    /// A prediction that reproduces an optimal label.
    pub fn from_label(id: usize, label: &OptLabel) -> Self {
        PredictionRecord {
            id,
            pos: label.pos,
            bw: Some(label.bw),
        }
    }

    fn check_positions(&self, instance: &Instance) -> Result<()> {
        let side = instance.area_side_m;
        for p in self.pos.iter().flatten() {
            if !(p.is_finite() && *p >= -PREDICTION_POS_TOL_M && *p <= side + PREDICTION_POS_TOL_M) {
                return Err(Error::InvalidParameter(format!(
                    "prediction {}: position {:?} outside [0, {side}]^2",
                    self.id, self.pos
                )));
            }
        }
        Ok(())
    }

    /// Predicted split with entries within the tolerance of `[0, 1]` clamped
    /// and each row rescaled onto the simplex.
    pub fn allocation(&self) -> Result<Option<Allocation>> {
        let Some(raw) = self.bw else {
            return Ok(None);
        };
        let mut bw = [[0.0; 3]; 2];
        for (b, row) in raw.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            let ok = row
                .iter()
                .all(|f| f.is_finite() && *f >= -PREDICTION_BW_TOL && *f <= 1.0 + PREDICTION_BW_TOL);
            if !ok || (sum - 1.0).abs() > PREDICTION_BW_TOL {
                return Err(Error::InvalidAllocation(format!(
                    "prediction {}: UAV {b} fractions {row:?} not on the simplex",
                    self.id
                )));
            }
            let clamped = row.map(|f| f.clamp(0.0, 1.0));
            let s: f64 = clamped.iter().sum();
            bw[b] = clamped.map(|f| f / s);
        }
        Allocation::new(bw).map(Some)
    }
}

/// Predictions keyed by instance id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PredictionSet {
    records: BTreeMap<usize, PredictionRecord>,
}

impl PredictionSet {
    pub fn new(records: impl IntoIterator<Item = PredictionRecord>) -> Self {
        PredictionSet {
            records: records.into_iter().map(|r| (r.id, r)).collect(),
        }
    }

    pub fn get(&self, id: usize) -> Option<&PredictionRecord> {
        self.records.get(&id)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut seen = std::collections::BTreeSet::new();
        let records = read_jsonl(path, |line| {
            let r: PredictionRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
            if !seen.insert(r.id) {
                return Err(format!("duplicate prediction id {}", r.id));
            }
            Ok(r)
        })?;
        Ok(PredictionSet::new(records))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_jsonl(path.as_ref(), self.records.values())
    }
}

fn write_jsonl<'a, T: Serialize + 'a>(path: &Path, items: impl IntoIterator<Item = &'a T>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        let line = serde_json::to_string(item).expect("record serializes");
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Clone, Debug, PartialEq)]
pub struct AgentOutcome {
    pub placement: Placement,
    pub alloc: Allocation,
    pub evaluation: Evaluation,
    pub wall_time_s: f64,
}

fn snap(instance: &Instance, p: [f64; 2]) -> usize {
    nearest_grid_index(instance.grid(), Point::from(p))
}

/// Snaps both predicted positions to the grid. When the snapped indices
/// come out in descending order the UAV roles swap, and so do the rows of a
/// predicted split.
fn snapped_placement(instance: &Instance, rec: &PredictionRecord) -> Result<(Placement, bool)> {
    rec.check_positions(instance)?;
    let i = snap(instance, rec.pos[0]);
    let j = snap(instance, rec.pos[1]);
    Ok((Placement::new(instance, i, j)?, i > j))
}

/// Runs one agent on the instance with id `id`. Wall time covers the whole
/// decision (search, snapping, bandwidth) but not loading.
pub fn run_agent(
    kind: &AgentKind,
    id: usize,
    instance: &Instance,
    predictions: &PredictionSet,
    params: &EnvParams,
) -> Result<AgentOutcome> {
    let start = Instant::now();
    let prediction = || predictions.get(id).ok_or(Error::MissingPrediction(id));
    let (placement, alloc) = match kind {
        AgentKind::Optimal(config) => {
            let s = solve(instance, config, params)?;
            (s.placement, s.alloc)
        }
        AgentKind::Hybrid => {
            let (placement, _) = snapped_placement(instance, prediction()?)?;
            let s = solve_placement(instance, placement, params, start)?;
            (s.placement, s.alloc)
        }
        AgentKind::FullExternal => {
            let rec = prediction()?;
            let (placement, swapped) = snapped_placement(instance, rec)?;
            let mut alloc = rec
                .allocation()?
                .ok_or_else(|| Error::InvalidParameter(format!("prediction {id} has no bandwidth split")))?;
            if swapped {
                alloc.bw.swap(0, 1);
            }
            (placement, alloc)
        }
        AgentKind::KMeansBaseline => {
            let points = instance.user_points();
            let placement = if points.len() >= 2 {
                let c = kmeans(&points, 2, derive_seed(instance.seed, 0x6167))?;
                let i = nearest_grid_index(instance.grid(), c[0].center);
                let j = nearest_grid_index(instance.grid(), c[1].center);
                Placement::new(instance, i, j)?
            } else {
                let i = nearest_grid_index(instance.grid(), points[0]);
                Placement::new(instance, i, i)?
            };
            let s = solve_placement(instance, placement, params, start)?;
            (s.placement, s.alloc)
        }
        AgentKind::CentroidBaseline => {
            let i = nearest_grid_index(instance.grid(), centroid(&instance.user_points()));
            let s = solve_placement(instance, Placement::new(instance, i, i)?, params, start)?;
            (s.placement, s.alloc)
        }
        AgentKind::RandomBaseline { seed } => {
            let mut rng = SeededRng::new(derive_seed(*seed, instance.seed));
            let n = instance.grid().len();
            let (i, j) = (rng.below(n), rng.below(n));
            let s = solve_placement(instance, Placement::new(instance, i, j)?, params, start)?;
            (s.placement, s.alloc)
        }
    };
    let wall_time_s = start.elapsed().as_secs_f64();
    let evaluation = evaluate(instance, &placement, &alloc, params)?;
    Ok(AgentOutcome {
        placement,
        alloc,
        evaluation,
        wall_time_s,
    })
}

/// Optimal solution attached to a labeled instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptLabel {
    pub pos: [[f64; 2]; 2],
    pub bw: [[f64; 3]; 2],
    pub coverage: f64,
    pub time_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledRecord {
    #[serde(flatten)]
    pub instance: InstanceRecord,
    pub opt: OptLabel,
}

pub fn label_instance(instance: &Instance, config: &SolveConfig, params: &EnvParams) -> Result<OptLabel> {
    let s = solve(instance, config, params)?;
    Ok(OptLabel {
        pos: s.placement.points().map(Into::into),
        bw: s.alloc.bw,
        coverage: s.coverage,
        time_s: s.wall_time_s,
    })
}

/// Solves every instance and writes one labeled record per line, in input
/// order.
pub fn export_labeled_dataset(
    instances: &[Instance],
    params: &EnvParams,
    config: &SolveConfig,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for (index, inst) in instances.iter().enumerate() {
        let wrap = |e: Error| Error::Instance {
            index,
            source: Box::new(e),
        };
        let record = LabeledRecord {
            instance: inst.to_record(),
            opt: label_instance(inst, config, params).map_err(wrap)?,
        };
        let line = serde_json::to_string(&record).expect("record serializes");
        writeln!(w, "{line}").map_err(|e| wrap(Error::io(path, e)))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_labeled(path: impl AsRef<Path>) -> Result<Vec<(Instance, OptLabel)>> {
    read_jsonl(path.as_ref(), |line| {
        let rec: LabeledRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
        let inst = Instance::from_record(rec.instance).map_err(|e| e.to_string())?;
        Ok((inst, rec.opt))
    })
}

/// Mean agent coverage over mean optimal coverage, on the same instances.
pub fn normalized_coverage(agent: &[f64], optimal: &[f64]) -> Result<f64> {
    if agent.len() != optimal.len() {
        return Err(Error::InvalidParameter(format!(
            "coverage lists differ in length ({} vs {})",
            agent.len(),
            optimal.len()
        )));
    }
    if agent.is_empty() {
        return Err(Error::InvalidParameter("no instances".into()));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let opt = mean(optimal);
    if opt <= 0.0 {
        return Err(Error::InvalidParameter("optimal mean coverage is zero".into()));
    }
    Ok(mean(agent) / opt)
}
