//! Optimal slice bandwidth split for a fixed placement.
//!
//! With the placement fixed, association and SINR are fixed, and user `g` of
//! slice `s` at UAV `b` is satisfied iff `bw[b][s] >= f_g` where
//! `f_g = demand_s * n_{s,b} / (B * log2(1 + SINR_g))`. Satisfying the `k`
//! cheapest users of a slice therefore costs exactly the `k`-th smallest
//! `f`, and each UAV is an independent problem: pick counts
//! `(k_em, k_ur, k_mm)` maximizing their sum subject to
//! `F_em(k_em) + F_ur(k_ur) + F_mm(k_mm) <= 1`.

use crate::channel::{self, EnvParams, SliceClass};
use crate::error::{Error, Result};
use crate::evaluator::{link_state, Allocation, LinkState, Placement};
use crate::instance::Instance;

/// Ascending required fractions, `fractions[uav][slice]`. Unreachable users
/// hold `+inf`.
#[derive(Clone, Debug, PartialEq)]
pub struct SliceRequirement {
    pub fractions: [[Vec<f64>; 3]; 2],
}

impl SliceRequirement {
    pub fn uav(&self, b: usize) -> &[Vec<f64>; 3] {
        &self.fractions[b]
    }
}

pub fn required_fractions(instance: &Instance, placement: &Placement, params: &EnvParams) -> SliceRequirement {
    requirements_from_links(instance, &link_state(instance, placement, params), params)
}

pub(crate) fn requirements_from_links(instance: &Instance, links: &LinkState, params: &EnvParams) -> SliceRequirement {
    let mut fractions: [[Vec<f64>; 3]; 2] = Default::default();
    for (g, u) in instance.users.iter().enumerate() {
        let b = links.association[g];
        let s = u.slice.index();
        let f = channel::required_fraction(links.sinr[g], params.demand(u.slice), links.slice_counts[b][s], params);
        fractions[b][s].push(f);
    }
    for row in fractions.iter_mut() {
        for v in row.iter_mut() {
            v.sort_by(f64::total_cmp);
        }
    }
    SliceRequirement { fractions }
}

/// Cost of serving the `k` cheapest users of a slice.
#[inline]
fn cost(f: &[f64], k: usize) -> f64 {
    if k == 0 {
        0.0
    } else {
        f[k - 1]
    }
}

/// Number of finite entries (the satisfiable prefix) of a sorted list.
fn finite_len(f: &[f64]) -> usize {
    f.partition_point(|x| x.is_finite())
}

/// Whether serving `k` users of each slice fits in one UAV's band.
#[inline]
pub fn fits(fr: &[Vec<f64>; 3], k: [usize; 3]) -> bool {
    cost(&fr[0], k[0]) + cost(&fr[1], k[1]) + cost(&fr[2], k[2]) <= 1.0
}

/// Maximal `k_em + k_ur + k_mm` with [`fits`]. For each `k_em` the best
/// `(k_ur, k_mm)` is found by a two-pointer sweep: raising `k_ur` can only
/// lower the largest feasible `k_mm`. Among optimal triples the
/// lexicographically smallest is returned.
pub fn best_counts(fr: &[Vec<f64>; 3]) -> [usize; 3] {
    let n = [finite_len(&fr[0]), finite_len(&fr[1]), finite_len(&fr[2])];
    let mut best = [0usize; 3];
    let mut best_sum = 0usize;
    for k_em in 0..=n[0] {
        if !fits(fr, [k_em, 0, 0]) {
            break;
        }
        let mut k_mm = n[2];
        for k_ur in 0..=n[1] {
            while k_mm > 0 && !fits(fr, [k_em, k_ur, k_mm]) {
                k_mm -= 1;
            }
            if !fits(fr, [k_em, k_ur, k_mm]) {
                break;
            }
            let sum = k_em + k_ur + k_mm;
            if sum > best_sum {
                best_sum = sum;
                best = [k_em, k_ur, k_mm];
            }
        }
    }
    best
}

/// Turns chosen counts into a band split: each slice gets its breakpoint
/// cost and the leftover goes to the slice with the most users left
/// unserved (ties: eMBB, then URLLC, then mMTC).
fn split_for_counts(fr: &[Vec<f64>; 3], k: [usize; 3]) -> [f64; 3] {
    let mut row = [cost(&fr[0], k[0]), cost(&fr[1], k[1]), cost(&fr[2], k[2])];
    let slack = 1.0 - (row[0] + row[1] + row[2]);
    let mut target = 0;
    for s in 1..3 {
        if fr[s].len() - k[s] > fr[target].len() - k[target] {
            target = s;
        }
    }
    row[target] += slack.max(0.0);
    row
}

fn satisfied_by(fr: &[Vec<f64>; 3], row: &[f64; 3]) -> usize {
    (0..3).map(|s| fr[s].partition_point(|f| *f <= row[s])).sum()
}

/// Best split for an already-computed requirement set. Returns the
/// allocation and the number of users it satisfies.
pub fn optimize_requirements(req: &SliceRequirement) -> (Allocation, usize) {
    let mut bw = [[0.0; 3]; 2];
    let mut total = 0;
    for (b, row) in bw.iter_mut().enumerate() {
        let fr = req.uav(b);
        let k = best_counts(fr);
        *row = split_for_counts(fr, k);
        let got = satisfied_by(fr, row);
        debug_assert!(got >= k.iter().sum::<usize>());
        total += got;
    }
    (Allocation { bw }, total)
}

/// Bandwidth split maximizing the number of satisfied users for a fixed
/// placement.
pub fn optimize_bandwidth(instance: &Instance, placement: &Placement, params: &EnvParams) -> (Allocation, usize) {
    optimize_requirements(&required_fractions(instance, placement, params))
}

/// Exhaustive search over the lattice `{0, r, 2r, ..., 1}^3 ∩ simplex` per
/// UAV. `resolution` must divide 1. Used as an independent check of
/// [`optimize_bandwidth`].
pub fn bandwidth_grid_oracle(
    instance: &Instance,
    placement: &Placement,
    params: &EnvParams,
    resolution: f64,
) -> Result<(Allocation, usize)> {
    let steps = lattice_steps(resolution)?;
    Ok(grid_search_requirements(
        &required_fractions(instance, placement, params),
        steps,
    ))
}

pub(crate) fn lattice_steps(resolution: f64) -> Result<usize> {
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "resolution {resolution} not in (0, 1]"
        )));
    }
    let steps = (1.0 / resolution).round();
    if ((steps * resolution) - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "resolution {resolution} does not divide 1"
        )));
    }
    Ok(steps as usize)
}

pub(crate) fn grid_search_requirements(req: &SliceRequirement, steps: usize) -> (Allocation, usize) {
    let m = steps as f64;
    let mut bw = [[0.0; 3]; 2];
    let mut total = 0;
    for (b, row) in bw.iter_mut().enumerate() {
        let fr = req.uav(b);
        // counts[s][t]: users of slice s satisfied at fraction t / steps
        let counts: Vec<Vec<usize>> = SliceClass::ALL
            .iter()
            .map(|s| {
                let f = &fr[s.index()];
                (0..=steps).map(|t| f.partition_point(|x| *x <= t as f64 / m)).collect()
            })
            .collect();
        let mut best = (0usize, [0usize, 0, steps]);
        let mut first = true;
        for a in 0..=steps {
            for c in 0..=steps - a {
                let d = steps - a - c;
                let n = counts[0][a] + counts[1][c] + counts[2][d];
                if first || n > best.0 {
                    best = (n, [a, c, d]);
                    first = false;
                }
            }
        }
        let [a, c, d] = best.1;
        *row = [a as f64 / m, c as f64 / m, d as f64 / m];
        total += best.0;
    }
    (Allocation { bw }, total)
}
