//! Spatial indexes with interpolation-friendly leaves.
//!
//! Four classic in-memory index structures (STR-packed R-tree, KD-tree,
//! quadtree and octree) can each be built with plain leaves or with learned
//! leaves. A learned leaf sorts its records on its most predictable dimension
//! and locates keys with a min/max linear interpolation plus a short local
//! search, which lets the tree use much larger leaves and far fewer internal
//! nodes.
//!
//! ```
//! use ifx_core::{build, BuildConfig, Family, Point, RangeQuery};
//!
//! let points: Vec<Point<2>> = (0..1000)
//!     .map(|i| Point::new([(i % 40) as f32, (i / 40) as f32]).unwrap())
//!     .collect();
//! let tree = build(&points, &BuildConfig::new(Family::RTree, true, 256)).unwrap();
//! assert_eq!(tree.point_query(&points[123]).ids, vec![123]);
//! let hits = tree.range_query(&RangeQuery::new([(0.0, 1.0), (0.0, 1.0)]).unwrap());
//! assert_eq!(hits.ids.len(), 4);
//! ```

pub mod any;
pub mod bench;
pub mod builders;
pub mod error;
pub mod geometry;
pub mod index;
pub mod leaf_model;
pub mod query;
pub mod snapshot;
pub mod stats;
pub mod workload;

pub use any::AnyIndex;
pub use builders::{build, build_with_ids, BuildConfig, Family};
pub use error::{Error, Result};
pub use geometry::{Mbr, Point, RangeQuery};
pub use index::{Footprint, IndexTree};
pub use leaf_model::{IfLeaf, LeafHeader, LinearModel, SearchStrategy};
pub use query::QueryResult;
pub use stats::{NoStats, Probe, QueryStats};
