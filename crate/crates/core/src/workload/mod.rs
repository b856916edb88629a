//! Datasets and query workloads.

mod io;
mod knn;
mod synth;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::builders::{build, BuildConfig, Family};
use crate::error::{Error, Result};
use crate::geometry::{Mbr, Point, RangeQuery};

pub use io::{
    load_dataset, read_workload, write_container, write_csv, write_raw, write_workload, DataFormat,
    LoadOptions, Sampling,
};
pub use knn::{knn, knn_brute_force, Neighbor};
pub use synth::{generate, SyntheticKind};

/// Selectivities used by range-query benchmarks.
pub const SELECTIVITIES: [usize; 4] = [10, 100, 1_000, 10_000];

/// A named, in-memory point set.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<const D: usize> {
    pub name: String,
    pub points: Vec<Point<D>>,
    /// Where the points came from (file path, generator and seed, ...).
    pub source: String,
    /// Rows dropped at load time because a coordinate was not finite.
    pub rejected: usize,
}

impl<const D: usize> Dataset<D> {
    pub fn new(name: impl Into<String>, points: Vec<Point<D>>, source: impl Into<String>) -> Self {
        Dataset { name: name.into(), points, source: source.into(), rejected: 0 }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub const fn dims(&self) -> usize {
        D
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Queries<const D: usize> {
    Point(Vec<Point<D>>),
    Range(Vec<RangeQuery<D>>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryKind {
    Point,
    Range,
}

impl std::fmt::Display for QueryKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            QueryKind::Point => "point",
            QueryKind::Range => "range",
        })
    }
}

impl std::str::FromStr for QueryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "point" => Ok(QueryKind::Point),
            "range" => Ok(QueryKind::Range),
            other => Err(Error::Config(format!("unknown query kind `{other}`"))),
        }
    }
}

/// A replayable batch of queries.
#[derive(Clone, Debug, PartialEq)]
pub struct Workload<const D: usize> {
    pub queries: Queries<D>,
    /// Target result size for range workloads.
    pub selectivity: Option<usize>,
    pub seed: u64,
}

impl<const D: usize> Workload<D> {
    pub fn kind(&self) -> QueryKind {
        match self.queries {
            Queries::Point(_) => QueryKind::Point,
            Queries::Range(_) => QueryKind::Range,
        }
    }

    pub fn len(&self) -> usize {
        match &self.queries {
            Queries::Point(q) => q.len(),
            Queries::Range(q) => q.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn describe(&self) -> String {
        match self.selectivity {
            Some(s) => format!("{} x{} sigma={} seed={}", self.kind(), self.len(), s, self.seed),
            None => format!("{} x{} seed={}", self.kind(), self.len(), self.seed),
        }
    }
}

/// `n` points drawn uniformly with replacement from the dataset.
pub fn gen_point_queries<const D: usize>(ds: &Dataset<D>, n: usize, seed: u64) -> Result<Workload<D>> {
    if ds.is_empty() {
        return Err(Error::Empty("cannot sample queries from an empty dataset"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let queries = (0..n).map(|_| ds.points[rng.gen_range(0..ds.len())]).collect();
    Ok(Workload { queries: Queries::Point(queries), selectivity: None, seed })
}

/// `n` boxes, each the envelope of the `sigma` nearest neighbours of a
/// random dataset point.
pub fn gen_range_queries<const D: usize>(ds: &Dataset<D>, sigma: usize, n: usize, seed: u64) -> Result<Workload<D>> {
    if ds.is_empty() {
        return Err(Error::Empty("cannot sample queries from an empty dataset"));
    }
    if sigma == 0 || sigma > ds.len() {
        return Err(Error::Selectivity { sigma, len: ds.len() });
    }
    let tree = build(&ds.points, &BuildConfig::new(Family::KdTree, false, 32))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut neighbors = Vec::with_capacity(sigma);
    let mut queries = Vec::with_capacity(n);
    for _ in 0..n {
        let anchor = ds.points[rng.gen_range(0..ds.len())];
        knn::knn_into(&tree, &anchor, sigma, &mut neighbors);
        let mut envelope = Mbr::of_point(&ds.points[neighbors[0].id as usize]);
        for nb in &neighbors[1..] {
            envelope.expand_point(&ds.points[nb.id as usize]);
        }
        queries.push(RangeQuery::from(envelope));
    }
    Ok(Workload { queries: Queries::Range(queries), selectivity: Some(sigma), seed })
}
