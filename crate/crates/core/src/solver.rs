//! Exact search over UAV placement pairs.
//!
//! For every unordered pair of candidate grid points the optimal bandwidth
//! split is computed with [`bwopt`](crate::bwopt); the pair with the most
//! satisfied users wins. Candidates are the full grid, or the grid points
//! inside the union of per-cluster convex hulls of the users.

use std::time::Instant;

use rayon::prelude::*;

use crate::bwopt::{optimize_requirements, requirements_from_links};
use crate::channel::{self, EnvParams};
use crate::error::{Error, Result};
use crate::evaluator::{evaluate, Allocation, LinkState, Placement};
use crate::geometry::candidate_positions;
use crate::instance::Instance;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolveConfig {
    /// 0 searches the whole grid; `k >= 1` restricts candidates to the
    /// union of the hulls of `k` user clusters.
    pub hull_clusters: usize,
    /// Worker threads; 0 uses the global rayon pool.
    pub threads: usize,
    /// Whether both UAVs may occupy the same grid point.
    pub allow_colocated: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            hull_clusters: 1,
            threads: 0,
            allow_colocated: true,
        }
    }
}

impl SolveConfig {
    pub fn exhaustive() -> Self {
        SolveConfig {
            hull_clusters: 0,
            ..SolveConfig::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub placement: Placement,
    pub alloc: Allocation,
    pub coverage: f64,
    pub satisfied_count: usize,
    /// Placement pairs evaluated.
    pub candidates_examined: usize,
    pub wall_time_s: f64,
}

impl Solution {
    /// Equality of everything except wall time.
    pub fn same_result(&self, other: &Solution) -> bool {
        self.placement == other.placement
            && self.alloc == other.alloc
            && self.coverage == other.coverage
            && self.satisfied_count == other.satisfied_count
            && self.candidates_examined == other.candidates_examined
    }
}

/// Received power and squared distance from every grid point to every user.
struct LinkTable {
    n_users: usize,
    power: Vec<f64>,
    dist2: Vec<f64>,
}

impl LinkTable {
    fn new(instance: &Instance, params: &EnvParams) -> Self {
        let users = instance.user_points();
        let mut power = Vec::with_capacity(instance.grid().len() * users.len());
        let mut dist2 = Vec::with_capacity(power.capacity());
        for g in instance.grid() {
            for u in &users {
                power.push(channel::received_power(*u, *g, params));
                dist2.push(u.dist2(*g));
            }
        }
        LinkTable {
            n_users: users.len(),
            power,
            dist2,
        }
    }

    /// Same association and SINR as [`crate::evaluator::link_state`] for the
    /// placement `(i, j)`, `i <= j`, read from the table.
    fn link_state(&self, instance: &Instance, i: usize, j: usize, params: &EnvParams) -> LinkState {
        let n = self.n_users;
        let (pa, pb) = (&self.power[i * n..(i + 1) * n], &self.power[j * n..(j + 1) * n]);
        let (da, db) = (&self.dist2[i * n..(i + 1) * n], &self.dist2[j * n..(j + 1) * n]);
        let mut association = Vec::with_capacity(n);
        let mut sinr = Vec::with_capacity(n);
        let mut slice_counts = [[0usize; 3]; 2];
        for (g, u) in instance.users.iter().enumerate() {
            let b = usize::from(db[g] < da[g]);
            association.push(b);
            slice_counts[b][u.slice.index()] += 1;
            sinr.push(channel::sinr_from_powers(&[pa[g], pb[g]], b, params));
        }
        LinkState {
            association,
            sinr,
            slice_counts,
        }
    }

    fn pair_count(&self, instance: &Instance, i: usize, j: usize, params: &EnvParams) -> usize {
        let links = self.link_state(instance, i, j, params);
        optimize_requirements(&requirements_from_links(instance, &links, params)).1
    }
}

/// Unordered candidate pairs in lexicographic order.
fn candidate_pairs(candidates: &[usize], allow_colocated: bool) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(candidates.len() * (candidates.len() + 1) / 2);
    for (x, &i) in candidates.iter().enumerate() {
        let start = if allow_colocated { x } else { x + 1 };
        for &j in &candidates[start..] {
            pairs.push((i, j));
        }
    }
    pairs
}

fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::ThreadPool(e.to_string()))?;
    Ok(pool.install(f))
}

/// Grid indices the search will consider for `config`.
pub fn search_space(instance: &Instance, config: &SolveConfig) -> Vec<usize> {
    if config.hull_clusters == 0 {
        (0..instance.grid().len()).collect()
    } else {
        candidate_positions(instance, config.hull_clusters)
    }
}

/// Best placement pair and bandwidth split. Among pairs with equal satisfied
/// counts the lexicographically smallest `(i, j)` wins, independent of the
/// thread count.
pub fn solve(instance: &Instance, config: &SolveConfig, params: &EnvParams) -> Result<Solution> {
    let start = Instant::now();
    params.validate()?;
    let candidates = search_space(instance, config);
    let mut pairs = candidate_pairs(&candidates, config.allow_colocated);
    if pairs.is_empty() {
        // a single candidate with co-location disabled
        pairs = candidate_pairs(&candidates, true);
    }
    let table = LinkTable::new(instance, params);

    let best = with_threads(config.threads, || {
        pairs
            .par_iter()
            .map(|&(i, j)| (table.pair_count(instance, i, j, params), i, j))
            .reduce_with(|x, y| {
                // larger count first, then smaller pair
                if y.0 > x.0 || (y.0 == x.0 && (y.1, y.2) < (x.1, x.2)) {
                    y
                } else {
                    x
                }
            })
    })?
    .expect("at least one candidate pair");

    let (_, i, j) = best;
    let placement = Placement::new(instance, i, j)?;
    let links = table.link_state(instance, i, j, params);
    let (alloc, count) = optimize_requirements(&requirements_from_links(instance, &links, params));
    Ok(Solution {
        placement,
        alloc,
        coverage: count as f64 / instance.users.len() as f64,
        satisfied_count: count,
        candidates_examined: pairs.len(),
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Optimal bandwidth for a given pair of grid indices.
pub fn solve_positions_fixed(instance: &Instance, i: usize, j: usize, params: &EnvParams) -> Result<Solution> {
    let start = Instant::now();
    let placement = Placement::new(instance, i, j)?;
    solve_placement(instance, placement, params, start)
}

pub(crate) fn solve_placement(
    instance: &Instance,
    placement: Placement,
    params: &EnvParams,
    start: Instant,
) -> Result<Solution> {
    let (alloc, count) = crate::bwopt::optimize_bandwidth(instance, &placement, params);
    let ev = evaluate(instance, &placement, &alloc, params)?;
    debug_assert_eq!(ev.satisfied_count(), count);
    Ok(Solution {
        placement,
        alloc,
        coverage: ev.coverage,
        satisfied_count: count,
        candidates_examined: 1,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}
