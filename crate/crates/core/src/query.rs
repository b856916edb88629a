//! Point and range queries over every index variant.

use crate::geometry::{Point, RangeQuery};
use crate::index::{orthant, IndexTree, Internals, KdNode, Leaves, NodeRef, QuadNodes, RTreeNodes};
use crate::leaf_model::LeafView;
use crate::stats::{Probe, QueryStats};

/// Matching payload ids (sorted, duplicate-free) and traversal counters.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct QueryResult {
    pub ids: Vec<u32>,
    pub stats: QueryStats,
}

impl<const D: usize> IndexTree<D> {
    pub fn point_query(&self, q: &Point<D>) -> QueryResult {
        let mut result = QueryResult::default();
        let mut ids = Vec::new();
        self.point_query_with(q, &mut result.stats, |id| ids.push(id));
        ids.sort_unstable();
        ids.dedup();
        result.ids = ids;
        result
    }

    pub fn range_query(&self, q: &RangeQuery<D>) -> QueryResult {
        let mut result = QueryResult::default();
        let mut ids = Vec::new();
        self.range_query_with(q, &mut result.stats, |id| ids.push(id));
        ids.sort_unstable();
        ids.dedup();
        result.ids = ids;
        result
    }

    /// Calls `emit` with the id of every record bitwise equal to `q`.
    #[inline]
    pub fn point_query_with<P: Probe, F: FnMut(u32)>(&self, q: &Point<D>, probe: &mut P, mut emit: F) {
        if !self.bounds.contains_point(q) {
            return;
        }
        match &self.internals {
            Internals::RTree(nodes) => self.rtree_point(nodes, self.root, q, probe, &mut emit),
            Internals::Kd(nodes) => self.kd_point(nodes, self.root, q, probe, &mut emit),
            Internals::Quad(nodes) => self.quad_point(nodes, self.root, q, probe, &mut emit),
        }
    }

    /// Calls `emit` with the id of every record inside the closed box `q`.
    #[inline]
    pub fn range_query_with<P: Probe, F: FnMut(u32)>(&self, q: &RangeQuery<D>, probe: &mut P, mut emit: F) {
        if !self.bounds.intersects(q.as_mbr()) {
            return;
        }
        match &self.internals {
            Internals::RTree(nodes) => self.rtree_range(nodes, self.root, q, probe, &mut emit),
            Internals::Kd(nodes) => self.kd_range(nodes, self.root, q, probe, &mut emit),
            Internals::Quad(nodes) => self.quad_range(nodes, self.root, q, probe, &mut emit),
        }
    }

    #[inline(always)]
    fn leaf_point<P: Probe, F: FnMut(u32)>(&self, leaf: usize, q: &Point<D>, probe: &mut P, emit: &mut F) {
        probe.leaf();
        match &self.leaves {
            Leaves::Plain(headers) => {
                let h = headers[leaf];
                let (start, end) = (h.offset as usize, (h.offset + h.count) as usize);
                for (p, &id) in self.points[start..end].iter().zip(&self.ids[start..end]) {
                    probe.scan();
                    if p.same_as(q) {
                        emit(id);
                    }
                }
            }
            Leaves::Learned(headers) => {
                let h = &headers[leaf];
                let (start, end) = (h.offset as usize, (h.offset + h.count) as usize);
                LeafView::new(h, &self.points[start..end], &self.ids[start..end])
                    .point_query(q, self.config.strategy, probe, emit);
            }
        }
    }

    #[inline(always)]
    fn leaf_range<P: Probe, F: FnMut(u32)>(&self, leaf: usize, q: &RangeQuery<D>, probe: &mut P, emit: &mut F) {
        probe.leaf();
        match &self.leaves {
            Leaves::Plain(headers) => {
                let h = headers[leaf];
                let (start, end) = (h.offset as usize, (h.offset + h.count) as usize);
                for (p, &id) in self.points[start..end].iter().zip(&self.ids[start..end]) {
                    probe.scan();
                    if q.contains(p) {
                        emit(id);
                    }
                }
            }
            Leaves::Learned(headers) => {
                let h = &headers[leaf];
                let (start, end) = (h.offset as usize, (h.offset + h.count) as usize);
                LeafView::new(h, &self.points[start..end], &self.ids[start..end])
                    .range_query(q, self.config.strategy, probe, emit);
            }
        }
    }

    fn rtree_point<P: Probe, F: FnMut(u32)>(&self, nodes: &RTreeNodes<D>, r: NodeRef, q: &Point<D>, probe: &mut P, emit: &mut F) {
        if r.is_leaf() {
            return self.leaf_point(r.index(), q, probe, emit);
        }
        probe.node();
        let node = nodes.nodes[r.index()];
        let span = node.first as usize..(node.first + node.len) as usize;
        for (mbr, &child) in nodes.mbrs[span.clone()].iter().zip(&nodes.children[span]) {
            if mbr.contains_point(q) {
                self.rtree_point(nodes, child, q, probe, emit);
            }
        }
    }

    fn rtree_range<P: Probe, F: FnMut(u32)>(&self, nodes: &RTreeNodes<D>, r: NodeRef, q: &RangeQuery<D>, probe: &mut P, emit: &mut F) {
        if r.is_leaf() {
            return self.leaf_range(r.index(), q, probe, emit);
        }
        probe.node();
        let node = nodes.nodes[r.index()];
        let span = node.first as usize..(node.first + node.len) as usize;
        for (mbr, &child) in nodes.mbrs[span.clone()].iter().zip(&nodes.children[span]) {
            if mbr.intersects(q.as_mbr()) {
                self.rtree_range(nodes, child, q, probe, emit);
            }
        }
    }

    fn kd_point<P: Probe, F: FnMut(u32)>(&self, nodes: &[KdNode], mut r: NodeRef, q: &Point<D>, probe: &mut P, emit: &mut F) {
        // ties were sent left at build time, so one path suffices
        while !r.is_leaf() {
            probe.node();
            let node = &nodes[r.index()];
            r = if q[node.dim as usize] <= node.split { node.left } else { node.right };
        }
        self.leaf_point(r.index(), q, probe, emit);
    }

    fn kd_range<P: Probe, F: FnMut(u32)>(&self, nodes: &[KdNode], r: NodeRef, q: &RangeQuery<D>, probe: &mut P, emit: &mut F) {
        if r.is_leaf() {
            return self.leaf_range(r.index(), q, probe, emit);
        }
        probe.node();
        let node = &nodes[r.index()];
        let dim = node.dim as usize;
        if q.lower(dim) <= node.split {
            self.kd_range(nodes, node.left, q, probe, emit);
        }
        if q.upper(dim) > node.split {
            self.kd_range(nodes, node.right, q, probe, emit);
        }
    }

    fn quad_point<P: Probe, F: FnMut(u32)>(&self, nodes: &QuadNodes<D>, mut r: NodeRef, q: &Point<D>, probe: &mut P, emit: &mut F) {
        while !r.is_leaf() {
            probe.node();
            let node = &nodes.nodes[r.index()];
            match node.child_slot(orthant(q, &node.midpoint())) {
                Some(slot) => r = nodes.children[slot],
                None => return,
            }
        }
        self.leaf_point(r.index(), q, probe, emit);
    }

    fn quad_range<P: Probe, F: FnMut(u32)>(&self, nodes: &QuadNodes<D>, r: NodeRef, q: &RangeQuery<D>, probe: &mut P, emit: &mut F) {
        if r.is_leaf() {
            return self.leaf_range(r.index(), q, probe, emit);
        }
        probe.node();
        let node = &nodes.nodes[r.index()];
        let mid = node.midpoint();
        // orthants the box reaches: lower half needs l <= mid, upper half u > mid
        let mut reach_low = 0usize;
        let mut reach_high = 0usize;
        for k in 0..D {
            reach_low |= ((q.lower(k) <= mid[k]) as usize) << k;
            reach_high |= ((q.upper(k) > mid[k]) as usize) << k;
        }
        let full = (1usize << D) - 1;
        for o in 0..=full {
            let wanted_high = o;
            let wanted_low = !o & full;
            if wanted_high & !reach_high != 0 || wanted_low & !reach_low != 0 {
                continue;
            }
            if let Some(slot) = node.child_slot(o) {
                self.quad_range(nodes, nodes.children[slot], q, probe, emit);
            }
        }
    }
}

pub fn point_query<const D: usize>(tree: &IndexTree<D>, q: &Point<D>) -> QueryResult {
    tree.point_query(q)
}

pub fn range_query<const D: usize>(tree: &IndexTree<D>, q: &RangeQuery<D>) -> QueryResult {
    tree.range_query(q)
}
