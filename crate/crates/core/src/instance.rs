//! Problem instances: users with service classes on a square area, plus the
//! grid of candidate UAV positions. Instances are stored one per line as
//! JSON:
//!
//! ```text
//! {"v":1,"seed":7,"n_clusters":2,"area_m":707.1,"grid_dim":10,"users":[{"x":1.0,"y":2.0,"cls":0},...]}
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{EnvParams, SliceClass};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::rng::SeededRng;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_GRID_DIM: usize = 10;
pub const DEFAULT_USERS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct User {
    pub x: f64,
    pub y: f64,
    #[serde(rename = "cls")]
    pub slice: SliceClass,
}

impl User {
    pub fn point(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// Users on `[0, area_side_m]^2` and a `grid_dim x grid_dim` candidate grid.
///
/// Grid point `r * grid_dim + c` sits at the center of cell `(c, r)`, i.e. at
/// `((c + 0.5) * s, (r + 0.5) * s)` with `s = area_side_m / grid_dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub users: Vec<User>,
    pub area_side_m: f64,
    pub grid_dim: usize,
    pub seed: u64,
    pub n_clusters: usize,
    grid: Vec<Point>,
}

impl Instance {
    pub fn new(users: Vec<User>, area_side_m: f64, grid_dim: usize, seed: u64, n_clusters: usize) -> Result<Self> {
        if !(area_side_m.is_finite() && area_side_m > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "area side must be positive, got {area_side_m}"
            )));
        }
        if grid_dim == 0 {
            return Err(Error::InvalidParameter("grid_dim must be >= 1".into()));
        }
        if users.is_empty() {
            return Err(Error::InvalidParameter("instance has no users".into()));
        }
        for (i, u) in users.iter().enumerate() {
            let inside = |v: f64| v.is_finite() && (0.0..=area_side_m).contains(&v);
            if !inside(u.x) || !inside(u.y) {
                return Err(Error::InvalidParameter(format!(
                    "user {i} at ({}, {}) outside [0, {area_side_m}]^2",
                    u.x, u.y
                )));
            }
        }
        let step = area_side_m / grid_dim as f64;
        let grid = (0..grid_dim * grid_dim)
            .map(|k| {
                let (r, c) = (k / grid_dim, k % grid_dim);
                Point::new((c as f64 + 0.5) * step, (r as f64 + 0.5) * step)
            })
            .collect();
        Ok(Instance {
            users,
            area_side_m,
            grid_dim,
            seed,
            n_clusters,
            grid,
        })
    }

    pub fn grid(&self) -> &[Point] {
        &self.grid
    }

    pub fn grid_point(&self, index: usize) -> Result<Point> {
        self.grid.get(index).copied().ok_or(Error::GridIndex {
            index,
            len: self.grid.len(),
        })
    }

    pub fn user_points(&self) -> Vec<Point> {
        self.users.iter().map(User::point).collect()
    }

    pub fn to_record(&self) -> InstanceRecord {
        InstanceRecord {
            v: SCHEMA_VERSION,
            seed: self.seed,
            n_clusters: self.n_clusters,
            area_m: self.area_side_m,
            grid_dim: self.grid_dim,
            users: self.users.clone(),
        }
    }

    pub fn from_record(rec: InstanceRecord) -> Result<Self> {
        if rec.v != SCHEMA_VERSION {
            return Err(Error::InvalidParameter(format!(
                "schema version {} not supported (expected {SCHEMA_VERSION})",
                rec.v
            )));
        }
        Instance::new(rec.users, rec.area_m, rec.grid_dim, rec.seed, rec.n_clusters)
    }
}

/// Serialized form of an [`Instance`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub v: u32,
    pub seed: u64,
    pub n_clusters: usize,
    pub area_m: f64,
    pub grid_dim: usize,
    pub users: Vec<User>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorConfig {
    pub n_users: usize,
    /// 0 places users uniformly.
    pub n_clusters: usize,
    pub seed: u64,
    /// Defaults to a tenth of the area side.
    pub cluster_std_m: Option<f64>,
    pub grid_dim: usize,
    pub params: EnvParams,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n_users: DEFAULT_USERS,
            n_clusters: 2,
            seed: 0,
            cluster_std_m: None,
            grid_dim: DEFAULT_GRID_DIM,
            params: EnvParams::default(),
        }
    }
}

/// Side of the square area holding `n_users` at the configured density.
pub fn area_side_m(n_users: usize, params: &EnvParams) -> f64 {
    (n_users as f64 / params.user_density_per_km2).sqrt() * 1000.0
}

/// Draws an instance. The stream is consumed in a fixed order: cluster
/// centers (x then y), then per user its position (uniform x, y or, when
/// clustered, a center index followed by Gaussian x, y offsets, redrawn until
/// inside the area) followed by one uniform for the slice class.
pub fn generate(config: &GeneratorConfig) -> Result<Instance> {
    config.params.validate()?;
    if config.n_users == 0 {
        return Err(Error::InvalidParameter("n_users must be >= 1".into()));
    }
    if config.n_clusters > config.n_users {
        return Err(Error::InvalidParameter(format!(
            "n_clusters ({}) exceeds n_users ({})",
            config.n_clusters, config.n_users
        )));
    }
    let side = area_side_m(config.n_users, &config.params);
    let std = config.cluster_std_m.unwrap_or(side / 10.0);
    if !(std.is_finite() && std > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "cluster std must be positive, got {std}"
        )));
    }

    let mut rng = SeededRng::new(config.seed);
    let centers: Vec<Point> = (0..config.n_clusters)
        .map(|_| {
            let x = rng.uniform() * side;
            let y = rng.uniform() * side;
            Point::new(x, y)
        })
        .collect();

    let probs = config.params.class_probs;
    let users = (0..config.n_users)
        .map(|_| {
            let p = if centers.is_empty() {
                let x = rng.uniform() * side;
                let y = rng.uniform() * side;
                Point::new(x, y)
            } else {
                let c = centers[rng.below(centers.len())];
                loop {
                    let x = c.x + std * rng.normal();
                    let y = c.y + std * rng.normal();
                    if (0.0..=side).contains(&x) && (0.0..=side).contains(&y) {
                        break Point::new(x, y);
                    }
                }
            };
            let u = rng.uniform();
            let slice = if u < probs[0] {
                SliceClass::Embb
            } else if u < probs[0] + probs[1] {
                SliceClass::Urllc
            } else {
                SliceClass::Mmtc
            };
            User { x: p.x, y: p.y, slice }
        })
        .collect();

    Instance::new(users, side, config.grid_dim, config.seed, config.n_clusters)
}

pub fn to_json_line(instance: &Instance) -> String {
    serde_json::to_string(&instance.to_record()).expect("instance record serializes")
}

pub fn save_jsonl(instances: &[Instance], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for inst in instances {
        writeln!(w, "{}", to_json_line(inst)).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads non-blank lines of a JSONL file, handing each to `parse` with its
/// 1-based line number. Parse failures are reported against that line.
pub(crate) fn read_jsonl<T>(
    path: &Path,
    mut parse: impl FnMut(&str) -> std::result::Result<T, String>,
) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse(&line).map_err(|m| Error::parse(path, i + 1, m))?);
    }
    Ok(out)
}

pub fn parse_instance_line(line: &str) -> std::result::Result<Instance, String> {
    let rec: InstanceRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    Instance::from_record(rec).map_err(|e| e.to_string())
}

pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Vec<Instance>> {
    read_jsonl(path.as_ref(), parse_instance_line)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n_users: usize, n_clusters: usize, seed: u64) -> GeneratorConfig {
        GeneratorConfig {
            n_users,
            n_clusters,
            seed,
            ..GeneratorConfig::default()
        }
    }

    #[test]
    fn area_for_fifty_users() {
        // sqrt(50 / 100) km = 707.10678... m
        let side = area_side_m(50, &EnvParams::default());
        assert!((side - 707.106_781_186_547_5).abs() < 1e-9);
    }

    #[test]
    fn grid_is_cell_centered() {
        let inst = generate(&cfg(50, 2, 1)).unwrap();
        let g = inst.grid();
        assert_eq!(g.len(), 100);
        let s = inst.area_side_m / 10.0;
        assert!((g[0].x - s / 2.0).abs() < 1e-12 && (g[0].y - s / 2.0).abs() < 1e-12);
        assert!((g[1].x - 1.5 * s).abs() < 1e-12 && (g[1].y - s / 2.0).abs() < 1e-12);
        assert!((g[10].y - 1.5 * s).abs() < 1e-12);
        for p in g {
            assert!(p.x > 0.0 && p.x < inst.area_side_m && p.y > 0.0 && p.y < inst.area_side_m);
        }
    }

    #[test]
    fn generated_users_inside_area() {
        for c in 0..=5 {
            for seed in 0..20 {
                let inst = generate(&cfg(60, c, seed)).unwrap();
                assert_eq!(inst.users.len(), 60);
                for u in &inst.users {
                    assert!((0.0..=inst.area_side_m).contains(&u.x));
                    assert!((0.0..=inst.area_side_m).contains(&u.y));
                }
            }
        }
    }

    #[test]
    fn uniform_class_frequencies() {
        let inst = generate(&cfg(10_000, 0, 2024)).unwrap();
        let n = inst.users.len() as f64;
        for (s, p) in SliceClass::ALL.iter().zip([0.2, 0.1, 0.7]) {
            let k = inst.users.iter().filter(|u| u.slice == *s).count() as f64;
            let sigma = (n * p * (1.0 - p)).sqrt();
            assert!((k - n * p).abs() <= 3.0 * sigma, "{s}: {k} vs {}", n * p);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = to_json_line(&generate(&cfg(50, 3, 77)).unwrap());
        let b = to_json_line(&generate(&cfg(50, 3, 77)).unwrap());
        assert_eq!(a, b);
        let c = to_json_line(&generate(&cfg(50, 3, 78)).unwrap());
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_more_clusters_than_users() {
        assert!(generate(&cfg(3, 4, 0)).is_err());
        assert!(generate(&cfg(0, 0, 0)).is_err());
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("i.jsonl");
        let insts: Vec<Instance> = (0..100)
            .map(|s| generate(&cfg(25 + s as usize % 76, s as usize % 6, s)).unwrap())
            .collect();
        save_jsonl(&insts, &path).unwrap();
        assert_eq!(load_jsonl(&path).unwrap(), insts);
    }

    #[test]
    fn empty_file_loads_empty() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.jsonl");
        std::fs::write(&path, "").unwrap();
        assert!(load_jsonl(&path).unwrap().is_empty());
    }

    #[test]
    fn bad_lines_report_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        let good = to_json_line(&generate(&cfg(5, 0, 1)).unwrap());
        let bad_cls = good.replacen("\"cls\":", "\"cls\":7,\"_\":", 1);
        std::fs::write(&path, format!("{good}\n{bad_cls}\n")).unwrap();
        match load_jsonl(&path) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("slice class"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }

        let bad_v = good.replacen("\"v\":1", "\"v\":2", 1);
        std::fs::write(&path, format!("{bad_v}\n")).unwrap();
        assert!(matches!(load_jsonl(&path), Err(Error::Parse { line: 1, .. })));

        std::fs::write(&path, format!("{good}\n\n{{not json\n")).unwrap();
        assert!(matches!(load_jsonl(&path), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn missing_file_names_path() {
        let err = load_jsonl("/nonexistent/x.jsonl").unwrap_err();
        assert!(err.to_string().contains("/nonexistent/x.jsonl"));
    }
}
