//! The built index: internal-node arenas for one family plus a shared leaf store.
//!
//! Nodes reference each other by index into contiguous arenas, so the memory
//! held by internal nodes can be counted exactly.

use std::mem::size_of;
use std::time::Duration;

use crate::builders::BuildConfig;
use crate::geometry::{Mbr, Point};
use crate::leaf_model::{LeafHeader, LeafView};

const LEAF_BIT: u32 = 1 << 31;

/// Reference to a child: either an internal node or a leaf, by arena index.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
#[repr(transparent)]
pub struct NodeRef(u32);

impl NodeRef {
    pub(crate) fn leaf(index: usize) -> Self {
        debug_assert!(index < LEAF_BIT as usize);
        NodeRef(index as u32 | LEAF_BIT)
    }

    pub(crate) fn internal(index: usize) -> Self {
        debug_assert!(index < LEAF_BIT as usize);
        NodeRef(index as u32)
    }

    #[inline(always)]
    pub fn is_leaf(self) -> bool {
        self.0 & LEAF_BIT != 0
    }

    #[inline(always)]
    pub fn index(self) -> usize {
        (self.0 & !LEAF_BIT) as usize
    }

    pub(crate) fn raw(self) -> u32 {
        self.0
    }

    pub(crate) fn from_raw(raw: u32) -> Self {
        NodeRef(raw)
    }
}

impl std::fmt::Debug for NodeRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_leaf() {
            write!(f, "Leaf({})", self.index())
        } else {
            write!(f, "Node({})", self.index())
        }
    }
}

/// R-tree node: a run of `len` entries starting at `first` in the entry arrays.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(C)]
pub struct RNode {
    pub first: u32,
    pub len: u32,
}

/// R-tree internals. Entry `i` pairs `mbrs[i]` with `children[i]`.
#[derive(Clone, Debug, Default)]
pub struct RTreeNodes<const D: usize> {
    pub nodes: Vec<RNode>,
    pub mbrs: Vec<Mbr<D>>,
    pub children: Vec<NodeRef>,
}

/// KD-tree split: `coords[dim] <= split` goes left, the rest right.
#[derive(Clone, Copy, Debug, PartialEq)]
#[repr(C)]
pub struct KdNode {
    pub dim: u32,
    pub split: f32,
    pub left: NodeRef,
    pub right: NodeRef,
}

/// Quadtree/octree node. Present children are stored contiguously from
/// `first_child`; bit `o` of `mask` marks orthant `o` as present.
#[derive(Clone, Copy, Debug, PartialEq)]
#[repr(C)]
pub struct QuadNode<const D: usize> {
    pub region: Mbr<D>,
    pub first_child: u32,
    pub mask: u32,
}

impl<const D: usize> QuadNode<D> {
    #[inline(always)]
    pub fn midpoint(&self) -> [f32; D] {
        midpoint(&self.region)
    }

    #[inline(always)]
    pub fn child_slot(&self, orthant: usize) -> Option<usize> {
        if self.mask & (1 << orthant) == 0 {
            return None;
        }
        let before = (self.mask & ((1u32 << orthant) - 1)).count_ones();
        Some(self.first_child as usize + before as usize)
    }
}

/// Split point of a quad/oct region. Build and query must agree on it bit for bit.
#[inline(always)]
pub fn midpoint<const D: usize>(region: &Mbr<D>) -> [f32; D] {
    let mut mid = [0f32; D];
    for (k, m) in mid.iter_mut().enumerate() {
        *m = region.lo()[k] * 0.5 + region.hi()[k] * 0.5;
    }
    mid
}

/// Orthant of `p` relative to `mid`: bit `k` set iff `p[k] > mid[k]`.
#[inline(always)]
pub fn orthant<const D: usize>(p: &Point<D>, mid: &[f32; D]) -> usize {
    let mut o = 0;
    for k in 0..D {
        o |= ((p[k] > mid[k]) as usize) << k;
    }
    o
}

#[derive(Clone, Debug, Default)]
pub struct QuadNodes<const D: usize> {
    pub nodes: Vec<QuadNode<D>>,
    pub children: Vec<NodeRef>,
}

#[derive(Clone, Debug)]
pub enum Internals<const D: usize> {
    RTree(RTreeNodes<D>),
    Kd(Vec<KdNode>),
    Quad(QuadNodes<D>),
}

impl<const D: usize> Internals<D> {
    pub fn node_count(&self) -> usize {
        match self {
            Internals::RTree(r) => r.nodes.len(),
            Internals::Kd(k) => k.len(),
            Internals::Quad(q) => q.nodes.len(),
        }
    }

    pub fn bytes(&self) -> usize {
        match self {
            Internals::RTree(r) => {
                r.nodes.len() * size_of::<RNode>()
                    + r.mbrs.len() * size_of::<Mbr<D>>()
                    + r.children.len() * size_of::<NodeRef>()
            }
            Internals::Kd(k) => k.len() * size_of::<KdNode>(),
            Internals::Quad(q) => {
                q.nodes.len() * size_of::<QuadNode<D>>() + q.children.len() * size_of::<NodeRef>()
            }
        }
    }
}

/// Header of an unsorted leaf.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(C)]
pub struct PlainLeaf {
    pub count: u32,
    pub offset: u32,
}

#[derive(Clone, Debug)]
pub enum Leaves {
    Plain(Vec<PlainLeaf>),
    Learned(Vec<LeafHeader>),
}

impl Leaves {
    pub fn len(&self) -> usize {
        match self {
            Leaves::Plain(l) => l.len(),
            Leaves::Learned(l) => l.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(offset, count)` of leaf `i` in the record arrays.
    #[inline(always)]
    pub fn span(&self, i: usize) -> (usize, usize) {
        match self {
            Leaves::Plain(l) => (l[i].offset as usize, l[i].count as usize),
            Leaves::Learned(l) => (l[i].offset as usize, l[i].count as usize),
        }
    }

    pub fn header_bytes(&self) -> usize {
        match self {
            Leaves::Plain(l) => l.len() * size_of::<PlainLeaf>(),
            Leaves::Learned(l) => l.len() * size_of::<LeafHeader>(),
        }
    }
}

/// Bytes held by internal nodes and leaf headers; record storage is excluded.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Footprint {
    pub internal_bytes: usize,
    pub leaf_header_bytes: usize,
}

impl Footprint {
    pub fn total(&self) -> usize {
        self.internal_bytes + self.leaf_header_bytes
    }
}

/// Wall time spent in each build phase.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BuildTiming {
    pub partition: Duration,
    pub leaves: Duration,
}

impl BuildTiming {
    pub fn total(&self) -> Duration {
        self.partition + self.leaves
    }
}

/// An immutable spatial index over `D`-dimensional points.
#[derive(Clone, Debug)]
pub struct IndexTree<const D: usize> {
    pub(crate) config: BuildConfig,
    pub(crate) bounds: Mbr<D>,
    pub(crate) root: NodeRef,
    pub(crate) internals: Internals<D>,
    pub(crate) leaves: Leaves,
    pub(crate) points: Vec<Point<D>>,
    pub(crate) ids: Vec<u32>,
    pub(crate) timing: BuildTiming,
}

impl<const D: usize> IndexTree<D> {
    pub fn config(&self) -> &BuildConfig {
        &self.config
    }

    pub fn bounds(&self) -> &Mbr<D> {
        &self.bounds
    }

    pub fn root(&self) -> NodeRef {
        self.root
    }

    pub fn internals(&self) -> &Internals<D> {
        &self.internals
    }

    pub fn leaves(&self) -> &Leaves {
        &self.leaves
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

    pub fn build_timing(&self) -> BuildTiming {
        self.timing
    }

    pub fn footprint(&self) -> Footprint {
        Footprint {
            internal_bytes: self.internals.bytes(),
            leaf_header_bytes: self.leaves.header_bytes(),
        }
    }

    /// Records of leaf `i`, in stored order.
    pub fn leaf_records(&self, i: usize) -> (&[Point<D>], &[u32]) {
        let (offset, count) = self.leaves.span(i);
        (&self.points[offset..offset + count], &self.ids[offset..offset + count])
    }

    /// The learned view of leaf `i`, or `None` for plain leaves.
    pub fn leaf_view(&self, i: usize) -> Option<LeafView<'_, D>> {
        match &self.leaves {
            Leaves::Plain(_) => None,
            Leaves::Learned(headers) => {
                let (points, ids) = self.leaf_records(i);
                Some(LeafView::new(&headers[i], points, ids))
            }
        }
    }

    /// Every stored `(point, id)` in record-array order.
    pub fn records(&self) -> impl Iterator<Item = (&Point<D>, u32)> + '_ {
        self.points.iter().zip(self.ids.iter().copied())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_ref_tagging() {
        let l = NodeRef::leaf(17);
        let n = NodeRef::internal(17);
        assert!(l.is_leaf() && !n.is_leaf());
        assert_eq!(l.index(), 17);
        assert_eq!(n.index(), 17);
        assert_eq!(NodeRef::from_raw(l.raw()), l);
    }

    #[test]
    fn child_slots_skip_absent_orthants() {
        let node = QuadNode::<2> {
            region: Mbr::new([0.0, 0.0], [1.0, 1.0]).unwrap(),
            first_child: 10,
            mask: 0b1010,
        };
        assert_eq!(node.child_slot(0), None);
        assert_eq!(node.child_slot(1), Some(10));
        assert_eq!(node.child_slot(2), None);
        assert_eq!(node.child_slot(3), Some(11));
    }

    #[test]
    fn orthant_sends_midpoint_low() {
        let mid = [0.5f32, 0.5];
        assert_eq!(orthant(&Point::new([0.5, 0.5]).unwrap(), &mid), 0);
        assert_eq!(orthant(&Point::new([0.6, 0.5]).unwrap(), &mid), 1);
        assert_eq!(orthant(&Point::new([0.5, 0.6]).unwrap(), &mid), 2);
    }
}
