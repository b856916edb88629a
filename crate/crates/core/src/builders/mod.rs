//! Bulk construction of all index variants.
//!
//! Every builder first partitions `(point, id)` pairs in place so that each
//! leaf becomes one contiguous run, then hands the runs to the leaf hook:
//! plain leaves keep arrival order, learned leaves are sorted and fitted.
//! The partitioning never depends on the learned flag.

mod kd;
mod quad;
mod str;

use std::fmt;
use std::ops::Range;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Mbr, Point};
use crate::index::{BuildTiming, IndexTree, Internals, Leaves, NodeRef, PlainLeaf};
use crate::leaf_model::{build_leaf_in_place, SearchStrategy};

pub const DEFAULT_MAX_DEPTH: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    RTree,
    KdTree,
    /// Quadtree in 2D, octree in 3D.
    QuadOctree,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::RTree, Family::KdTree, Family::QuadOctree];

    pub fn as_str(&self) -> &'static str {
        match self {
            Family::RTree => "rtree",
            Family::KdTree => "kdtree",
            Family::QuadOctree => "quadtree",
        }
    }

    /// Display name of a variant, e.g. `IF-RTree` or `Octree`.
    pub fn variant_name(&self, learned: bool, dims: usize) -> String {
        let base = match self {
            Family::RTree => "RTree",
            Family::KdTree => "KDTree",
            Family::QuadOctree if dims == 3 => "Octree",
            Family::QuadOctree => "QuadTree",
        };
        if learned {
            format!("IF-{base}")
        } else {
            base.to_string()
        }
    }

    pub(crate) fn code(self) -> u8 {
        self as u8
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rtree" | "r-tree" => Ok(Family::RTree),
            "kdtree" | "kd-tree" | "kd" => Ok(Family::KdTree),
            "quadtree" | "octree" | "quad" | "oct" => Ok(Family::QuadOctree),
            other => Err(Error::Config(format!("unknown index family `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildConfig {
    pub family: Family,
    /// Learned (IF-X) leaves instead of plain unsorted ones.
    pub learned: bool,
    pub leaf_capacity: usize,
    /// R-tree internal node capacity; `None` means the leaf capacity.
    pub internal_fanout: Option<usize>,
    pub strategy: SearchStrategy,
    /// Depth at which quad/oct nodes become leaves regardless of size.
    pub max_depth: usize,
    /// Construct leaves on the rayon pool.
    pub parallel: bool,
}

impl BuildConfig {
    pub fn new(family: Family, learned: bool, leaf_capacity: usize) -> Self {
        BuildConfig {
            family,
            learned,
            leaf_capacity,
            internal_fanout: None,
            strategy: SearchStrategy::Binary,
            max_depth: DEFAULT_MAX_DEPTH,
            parallel: false,
        }
    }

    pub fn with_fanout(mut self, fanout: usize) -> Self {
        self.internal_fanout = Some(fanout);
        self
    }

    pub fn with_strategy(mut self, strategy: SearchStrategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn with_max_depth(mut self, depth: usize) -> Self {
        self.max_depth = depth;
        self
    }

    pub fn with_parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    pub fn fanout(&self) -> usize {
        self.internal_fanout.unwrap_or(self.leaf_capacity)
    }

    pub fn variant_name(&self, dims: usize) -> String {
        self.family.variant_name(self.learned, dims)
    }

    pub fn validate(&self, dims: usize) -> Result<()> {
        if self.leaf_capacity == 0 {
            return Err(Error::Config("leaf capacity must be positive".into()));
        }
        if self.family == Family::RTree && self.fanout() < 2 {
            return Err(Error::Config("R-tree internal fanout must be at least 2".into()));
        }
        if self.family == Family::QuadOctree {
            if !(2..=3).contains(&dims) {
                return Err(Error::Config(format!(
                    "quadtree/octree needs 2 or 3 dimensions, got {dims}"
                )));
            }
            if self.max_depth == 0 {
                return Err(Error::Config("max depth must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Output of a partitioning pass: internal nodes plus the leaf runs they reference.
pub(crate) struct Partition<const D: usize> {
    pub internals: Internals<D>,
    pub root: NodeRef,
    /// Leaf `i` covers `leaf_runs[i]`; runs are ascending and tile the input.
    pub leaf_runs: Vec<Range<usize>>,
}

pub(crate) type Item<const D: usize> = (Point<D>, u32);

/// Builds an index with ids `0..points.len()`.
pub fn build<const D: usize>(points: &[Point<D>], cfg: &BuildConfig) -> Result<IndexTree<D>> {
    let ids: Vec<u32> = (0..points.len() as u32).collect();
    build_with_ids(points, &ids, cfg)
}

/// Builds an index whose records carry the given payload ids.
pub fn build_with_ids<const D: usize>(
    points: &[Point<D>],
    ids: &[u32],
    cfg: &BuildConfig,
) -> Result<IndexTree<D>> {
    cfg.validate(D)?;
    if points.is_empty() {
        return Err(Error::Empty("cannot index zero points"));
    }
    if points.len() != ids.len() {
        return Err(Error::Config(format!("{} points but {} ids", points.len(), ids.len())));
    }
    if points.len() >= (1usize << 31) {
        return Err(Error::Config("more than 2^31 records".into()));
    }

    let started = Instant::now();
    let bounds = Mbr::of_points(points)?;
    let mut items: Vec<Item<D>> = points.iter().copied().zip(ids.iter().copied()).collect();
    let partition = match cfg.family {
        Family::RTree => str::partition(&mut items, cfg.leaf_capacity, cfg.fanout()),
        Family::KdTree => kd::partition(&mut items, cfg.leaf_capacity),
        Family::QuadOctree => quad::partition(&mut items, &bounds, cfg.leaf_capacity, cfg.max_depth),
    };
    let (mut points, mut ids): (Vec<_>, Vec<_>) = items.into_iter().unzip();
    let partitioned = Instant::now();

    let leaves = build_leaves(&mut points, &mut ids, &partition.leaf_runs, cfg)?;
    let timing = BuildTiming { partition: partitioned - started, leaves: partitioned.elapsed() };

    Ok(IndexTree {
        config: *cfg,
        bounds,
        root: partition.root,
        internals: partition.internals,
        leaves,
        points,
        ids,
        timing,
    })
}

fn build_leaves<const D: usize>(
    points: &mut [Point<D>],
    ids: &mut [u32],
    runs: &[Range<usize>],
    cfg: &BuildConfig,
) -> Result<Leaves> {
    if !cfg.learned {
        let headers = runs
            .iter()
            .map(|r| PlainLeaf { count: r.len() as u32, offset: r.start as u32 })
            .collect();
        return Ok(Leaves::Plain(headers));
    }

    // carve the record arrays into one disjoint slice pair per leaf
    let mut chunks = Vec::with_capacity(runs.len());
    let (mut rest_p, mut rest_i) = (points, ids);
    let mut cursor = 0;
    for r in runs {
        debug_assert_eq!(r.start, cursor);
        let (p, tail_p) = rest_p.split_at_mut(r.len());
        let (i, tail_i) = rest_i.split_at_mut(r.len());
        chunks.push((r.start, p, i));
        rest_p = tail_p;
        rest_i = tail_i;
        cursor = r.end;
    }

    let strategy = cfg.strategy;
    let make = |(offset, p, i): (usize, &mut [Point<D>], &mut [u32])| {
        build_leaf_in_place(p, i, strategy).map(|mut h| {
            h.offset = offset as u32;
            h
        })
    };
    let headers: Result<Vec<_>> = if cfg.parallel {
        chunks.into_par_iter().map(make).collect()
    } else {
        chunks.into_iter().map(make).collect()
    };
    Ok(Leaves::Learned(headers?))
}

/// Moves every element satisfying `pred` to the front; returns how many there are.
pub(crate) fn partition_in_place<T, F: Fn(&T) -> bool>(items: &mut [T], pred: F) -> usize {
    let mut left = 0;
    for i in 0..items.len() {
        if pred(&items[i]) {
            items.swap(left, i);
            left += 1;
        }
    }
    left
}
