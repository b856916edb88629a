//! Runtime-dimensioned wrapper used by the CLI and the C API.

use std::path::Path;

use crate::builders::{build_with_ids, BuildConfig};
use crate::error::{Error, Result};
use crate::geometry::{Mbr, Point, RangeQuery};
use crate::index::{Footprint, IndexTree};
use crate::query::QueryResult;
use crate::snapshot;

#[derive(Clone, Debug)]
pub enum AnyIndex {
    D2(IndexTree<2>),
    D3(IndexTree<3>),
}

macro_rules! with_tree {
    ($self:expr, $tree:ident => $body:expr) => {
        match $self {
            AnyIndex::D2($tree) => $body,
            AnyIndex::D3($tree) => $body,
        }
    };
}

fn chunk_points<const D: usize>(coords: &[f32]) -> Result<Vec<Point<D>>> {
    if coords.len() % D != 0 {
        return Err(Error::Config(format!("{} coordinates is not a multiple of {D}", coords.len())));
    }
    coords.chunks_exact(D).map(Point::from_slice).collect()
}

fn range_of<const D: usize>(lo: &[f32], hi: &[f32]) -> Result<RangeQuery<D>> {
    for side in [lo, hi] {
        if side.len() != D {
            return Err(Error::DimensionMismatch { expected: D, got: side.len() });
        }
    }
    Ok(RangeQuery::from(Mbr::new(lo.try_into().unwrap(), hi.try_into().unwrap())?))
}

impl AnyIndex {
    /// Builds from interleaved coordinates (`dims` values per point).
    /// Ids default to `0..n`.
    pub fn build(dims: usize, coords: &[f32], ids: Option<&[u32]>, cfg: &BuildConfig) -> Result<Self> {
        let n = coords.len() / dims.max(1);
        let default_ids: Vec<u32>;
        let ids = match ids {
            Some(ids) => ids,
            None => {
                default_ids = (0..n as u32).collect();
                &default_ids
            }
        };
        match dims {
            2 => Ok(AnyIndex::D2(build_with_ids(&chunk_points::<2>(coords)?, ids, cfg)?)),
            3 => Ok(AnyIndex::D3(build_with_ids(&chunk_points::<3>(coords)?, ids, cfg)?)),
            d => Err(Error::UnsupportedDims(d)),
        }
    }

    pub fn dims(&self) -> usize {
        with_tree!(self, t => t.dims())
    }

    pub fn len(&self) -> usize {
        with_tree!(self, t => t.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn config(&self) -> &BuildConfig {
        with_tree!(self, t => t.config())
    }

    pub fn footprint(&self) -> Footprint {
        with_tree!(self, t => t.footprint())
    }

    pub fn leaf_count(&self) -> usize {
        with_tree!(self, t => t.leaves().len())
    }

    pub fn node_count(&self) -> usize {
        with_tree!(self, t => t.internals().node_count())
    }

    pub fn build_timing(&self) -> crate::index::BuildTiming {
        with_tree!(self, t => t.build_timing())
    }

    pub fn point_query(&self, q: &[f32]) -> Result<QueryResult> {
        with_tree!(self, t => Ok(t.point_query(&Point::from_slice(q)?)))
    }

    pub fn range_query(&self, lo: &[f32], hi: &[f32]) -> Result<QueryResult> {
        match self {
            AnyIndex::D2(t) => Ok(t.range_query(&range_of(lo, hi)?)),
            AnyIndex::D3(t) => Ok(t.range_query(&range_of(lo, hi)?)),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        with_tree!(self, t => snapshot::save(t, path))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        snapshot::load_any(path)
    }
}

impl From<IndexTree<2>> for AnyIndex {
    fn from(t: IndexTree<2>) -> Self {
        AnyIndex::D2(t)
    }
}

impl From<IndexTree<3>> for AnyIndex {
    fn from(t: IndexTree<3>) -> Self {
        AnyIndex::D3(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::Family;

    #[test]
    fn runtime_dims() {
        let coords = [0.0, 0.0, 1.0, 1.0, 2.0, 2.0];
        let cfg = BuildConfig::new(Family::RTree, true, 4);
        let idx = AnyIndex::build(2, &coords, None, &cfg).unwrap();
        assert_eq!(idx.dims(), 2);
        assert_eq!(idx.point_query(&[1.0, 1.0]).unwrap().ids, vec![1]);
        assert!(idx.point_query(&[1.0, 1.0, 1.0]).is_err());
        assert_eq!(idx.range_query(&[0.0, 0.0], &[1.5, 1.5]).unwrap().ids, vec![0, 1]);
        assert!(idx.range_query(&[1.0, 0.0], &[0.0, 1.0]).is_err());
        let idx3 = AnyIndex::build(3, &coords, Some(&[7, 9]), &cfg).unwrap();
        assert_eq!(idx3.point_query(&[1.0, 2.0, 2.0]).unwrap().ids, vec![9]);
        assert!(matches!(AnyIndex::build(4, &[0.0; 8], None, &cfg), Err(Error::UnsupportedDims(4))));
        assert!(AnyIndex::build(2, &[0.0; 3], None, &cfg).is_err());
    }
}
