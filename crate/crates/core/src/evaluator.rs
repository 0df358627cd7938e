//! Scoring of a placement plus bandwidth split.
//!
//! Every user attaches to the horizontally nearest UAV. Each UAV divides the
//! band of a slice equally among the users of that slice attached to it, and
//! a user is satisfied when its Shannon rate on that share meets the slice
//! demand. Coverage is the satisfied fraction of all users.

use crate::channel::{self, EnvParams, SliceClass};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::instance::Instance;

/// Tolerance on the per-UAV simplex constraint of an [`Allocation`].
pub const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridPos {
    pub index: usize,
    pub point: Point,
}

/// Positions of the two UAVs, in canonical order (`a.index <= b.index`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Placement {
    a: GridPos,
    b: GridPos,
}

impl Placement {
    /// Builds a placement from grid indices, swapping them if needed so that
    /// the lower index comes first.
    pub fn new(instance: &Instance, i: usize, j: usize) -> Result<Self> {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        Ok(Placement {
            a: GridPos {
                index: i,
                point: instance.grid_point(i)?,
            },
            b: GridPos {
                index: j,
                point: instance.grid_point(j)?,
            },
        })
    }

    pub fn a(&self) -> GridPos {
        self.a
    }

    pub fn b(&self) -> GridPos {
        self.b
    }

    pub fn indices(&self) -> (usize, usize) {
        (self.a.index, self.b.index)
    }

    pub fn points(&self) -> [Point; 2] {
        [self.a.point, self.b.point]
    }
}

/// Bandwidth fractions `bw[uav][slice]`; each row lies on the unit simplex.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Allocation {
    pub bw: [[f64; 3]; 2],
}

impl Allocation {
    pub fn new(bw: [[f64; 3]; 2]) -> Result<Self> {
        let a = Allocation { bw };
        a.validate()?;
        Ok(a)
    }

    pub fn uniform() -> Self {
        let t = 1.0 / 3.0;
        Allocation {
            bw: [[t, t, 1.0 - 2.0 * t]; 2],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (b, row) in self.bw.iter().enumerate() {
            if row.iter().any(|f| !f.is_finite() || *f < 0.0) {
                return Err(Error::InvalidAllocation(format!(
                    "UAV {b}: fractions must be finite and non-negative, got {row:?}"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > SIMPLEX_TOL {
                return Err(Error::InvalidAllocation(format!(
                    "UAV {b}: fractions sum to {sum}, expected 1"
                )));
            }
        }
        Ok(())
    }

    pub fn fraction(&self, uav: usize, slice: SliceClass) -> f64 {
        self.bw[uav][slice.index()]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub satisfied: Vec<bool>,
    pub association: Vec<usize>,
    pub per_user_sinr: Vec<f64>,
    pub coverage: f64,
    /// `slice_counts[uav][slice]`: attached users per slice.
    pub slice_counts: [[usize; 3]; 2],
}

impl Evaluation {
    pub fn satisfied_count(&self) -> usize {
        self.satisfied.iter().filter(|s| **s).count()
    }
}

/// Association and SINR of every user for a fixed placement.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkState {
    pub association: Vec<usize>,
    pub sinr: Vec<f64>,
    pub slice_counts: [[usize; 3]; 2],
}

/// Nearest UAV by horizontal distance; exact ties go to UAV `a`, the one
/// with the lower grid index.
pub fn associate(instance: &Instance, placement: &Placement) -> Vec<usize> {
    let [pa, pb] = placement.points();
    instance
        .users
        .iter()
        .map(|u| usize::from(u.point().dist2(pb) < u.point().dist2(pa)))
        .collect()
}

pub fn link_state(instance: &Instance, placement: &Placement, params: &EnvParams) -> LinkState {
    let uavs = placement.points();
    let association = associate(instance, placement);
    let mut slice_counts = [[0usize; 3]; 2];
    let sinr = instance
        .users
        .iter()
        .zip(&association)
        .map(|(u, &b)| {
            slice_counts[b][u.slice.index()] += 1;
            channel::sinr(u.point(), b, &uavs, params)
        })
        .collect();
    LinkState {
        association,
        sinr,
        slice_counts,
    }
}

pub fn evaluate(
    instance: &Instance,
    placement: &Placement,
    alloc: &Allocation,
    params: &EnvParams,
) -> Result<Evaluation> {
    alloc.validate()?;
    let links = link_state(instance, placement, params);
    let satisfied: Vec<bool> = instance
        .users
        .iter()
        .enumerate()
        .map(|(g, u)| {
            let b = links.association[g];
            let n = links.slice_counts[b][u.slice.index()];
            let need = channel::required_fraction(links.sinr[g], params.demand(u.slice), n, params);
            alloc.fraction(b, u.slice) >= need
        })
        .collect();
    let count = satisfied.iter().filter(|s| **s).count();
    Ok(Evaluation {
        coverage: count as f64 / instance.users.len() as f64,
        satisfied,
        association: links.association,
        per_user_sinr: links.sinr,
        slice_counts: links.slice_counts,
    })
}
