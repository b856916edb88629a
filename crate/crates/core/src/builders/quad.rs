//! Midpoint-split quadtree (2D) and octree (3D) construction.

use std::ops::Range;

use super::{Item, Partition};
use crate::geometry::Mbr;
use crate::index::{midpoint, orthant, Internals, NodeRef, QuadNode, QuadNodes};

pub(super) fn partition<const D: usize>(items: &mut [Item<D>], bounds: &Mbr<D>, cap: usize, max_depth: usize) -> Partition<D> {
    let mut builder = QuadBuilder { cap, max_depth, nodes: QuadNodes::default(), leaf_runs: Vec::new(), scratch: Vec::new() };
    let root = builder.split(items, 0, *bounds, 0);
    Partition { internals: Internals::Quad(builder.nodes), root, leaf_runs: builder.leaf_runs }
}

struct QuadBuilder<const D: usize> {
    cap: usize,
    max_depth: usize,
    nodes: QuadNodes<D>,
    leaf_runs: Vec<Range<usize>>,
    scratch: Vec<Item<D>>,
}

/// Region of orthant `o`: the lower half `[lo, mid]` or upper half `[mid, hi]` per dimension.
fn child_region<const D: usize>(region: &Mbr<D>, mid: &[f32; D], o: usize) -> Mbr<D> {
    let mut lo = *region.lo();
    let mut hi = *region.hi();
    for k in 0..D {
        if o & (1 << k) != 0 {
            lo[k] = mid[k];
        } else {
            hi[k] = mid[k];
        }
    }
    Mbr::new(lo, hi).expect("midpoint lies inside its region")
}

impl<const D: usize> QuadBuilder<D> {
    fn split(&mut self, items: &mut [Item<D>], offset: usize, region: Mbr<D>, depth: usize) -> NodeRef {
        let n = items.len();
        if n <= self.cap || depth >= self.max_depth {
            self.leaf_runs.push(offset..offset + n);
            return NodeRef::leaf(self.leaf_runs.len() - 1);
        }

        // counting sort by orthant
        let fan = 1usize << D;
        let mid = midpoint(&region);
        let mut counts = [0usize; 8];
        for it in items.iter() {
            counts[orthant(&it.0, &mid)] += 1;
        }
        let mut starts = [0usize; 9];
        for o in 0..fan {
            starts[o + 1] = starts[o] + counts[o];
        }
        self.scratch.clear();
        self.scratch.extend_from_slice(items);
        let mut cursor = starts;
        for it in self.scratch.iter() {
            let o = orthant(&it.0, &mid);
            items[cursor[o]] = *it;
            cursor[o] += 1;
        }

        let mask = (0..fan).filter(|&o| counts[o] > 0).fold(0u32, |m, o| m | 1 << o);
        let id = self.nodes.nodes.len();
        let first_child = self.nodes.children.len();
        self.nodes.nodes.push(QuadNode { region, first_child: first_child as u32, mask });
        self.nodes.children.extend(std::iter::repeat(NodeRef::leaf(0)).take(mask.count_ones() as usize));

        let mut slot = first_child;
        for o in (0..fan).filter(|&o| counts[o] > 0) {
            let child = self.split(&mut items[starts[o]..starts[o + 1]], offset + starts[o], child_region(&region, &mid, o), depth + 1);
            self.nodes.children[slot] = child;
            slot += 1;
        }
        NodeRef::internal(id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::{build, BuildConfig, Family};
    use crate::geometry::Point;
    use crate::index::IndexTree;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn quad_nodes<const D: usize>(tree: &IndexTree<D>) -> &QuadNodes<D> {
        let Internals::Quad(q) = tree.internals() else { unreachable!() };
        q
    }

    /// Every record lies in its leaf's region and every child region is an orthant of its parent.
    fn audit<const D: usize>(tree: &IndexTree<D>, r: NodeRef, region: Mbr<D>, seen: &mut Vec<u32>) {
        if r.is_leaf() {
            let (pts, ids) = tree.leaf_records(r.index());
            assert!(pts.iter().all(|p| region.contains_point(p)));
            seen.extend_from_slice(ids);
            return;
        }
        let q = quad_nodes(tree);
        let node = q.nodes[r.index()];
        assert_eq!(node.region, region);
        let mid = node.midpoint();
        for o in 0..(1 << D) {
            if let Some(slot) = node.child_slot(o) {
                let child = child_region(&region, &mid, o);
                assert!(region.contains_mbr(&child));
                if let Some(points) = q.children[slot].is_leaf().then(|| tree.leaf_records(q.children[slot].index()).0) {
                    assert!(points.iter().all(|p| orthant(p, &mid) == o));
                }
                audit(tree, q.children[slot], child, seen);
            }
        }
    }

    #[test]
    fn one_crowded_quadrant() {
        let mut pts: Vec<Point<2>> = (0..4).map(|i| Point::new([0.1 + i as f32 * 0.01, 0.1]).unwrap()).collect();
        pts.push(Point::new([1.0, 1.0]).unwrap());
        pts.push(Point::new([0.0, 0.0]).unwrap());
        let tree = build(&pts, &BuildConfig::new(Family::QuadOctree, false, 5)).unwrap();
        let q = quad_nodes(&tree);
        assert_eq!(q.nodes[0].mask, 0b1001);
        assert_eq!(q.children.len(), 2);
        assert_eq!(tree.leaves().len(), 2);
    }

    #[test]
    fn five_points_one_quadrant_capacity_four() {
        // all five in the lower-left quadrant of the unit box (corner points fix the region)
        let mut pts: Vec<Point<2>> = (0..5).map(|i| Point::new([0.05 * i as f32, 0.1]).unwrap()).collect();
        pts[0] = Point::new([0.0, 0.0]).unwrap();
        let mut with_corner = pts.clone();
        with_corner.push(Point::new([1.0, 1.0]).unwrap());
        let tree = build(&with_corner, &BuildConfig::new(Family::QuadOctree, false, 4)).unwrap();
        let q = quad_nodes(&tree);
        // root has two present children (lower-left crowd, upper-right corner): 2 empty quadrants omitted
        assert_eq!(q.nodes[0].mask.count_ones(), 2);
        // without the far corner the root region is the crowd's envelope, so it splits there
        let tree = build(&pts, &BuildConfig::new(Family::QuadOctree, false, 4)).unwrap();
        assert!(!tree.root().is_leaf());
        let mut seen = Vec::new();
        audit(&tree, tree.root(), *tree.bounds(), &mut seen);
        assert_eq!(seen.len(), 5);
    }

    #[test]
    fn duplicates_stop_at_max_depth() {
        let pts = vec![Point::new([2.0, 2.0]).unwrap(); 40];
        let tree = build(&pts, &BuildConfig::new(Family::QuadOctree, true, 4).with_max_depth(6)).unwrap();
        assert_eq!(tree.leaves().len(), 1);
        assert_eq!(quad_nodes(&tree).nodes.len(), 6);
        assert_eq!(tree.leaf_records(0).0.len(), 40);
        let tree = build(&pts, &BuildConfig::new(Family::QuadOctree, false, 4)).unwrap();
        assert_eq!(quad_nodes(&tree).nodes.len(), 32);
    }

    #[test]
    fn random_partition_audit() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let pts: Vec<Point<2>> = (0..10_000).map(|_| Point::new([rng.gen::<f32>().powi(3), rng.gen()]).unwrap()).collect();
        let tree = build(&pts, &BuildConfig::new(Family::QuadOctree, false, 32)).unwrap();
        let mut seen = Vec::new();
        audit(&tree, tree.root(), *tree.bounds(), &mut seen);
        seen.sort_unstable();
        assert_eq!(seen, (0..10_000).collect::<Vec<u32>>());

        let pts: Vec<Point<3>> = (0..10_000).map(|_| Point::new([rng.gen(), rng.gen::<f32>().powi(2), rng.gen()]).unwrap()).collect();
        let tree = build(&pts, &BuildConfig::new(Family::QuadOctree, true, 50)).unwrap();
        let mut seen = Vec::new();
        audit(&tree, tree.root(), *tree.bounds(), &mut seen);
        assert_eq!(seen.len(), 10_000);
        assert!((0..tree.leaves().len()).all(|i| tree.leaf_records(i).0.len() <= 50));
    }
}
