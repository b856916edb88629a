//! Sort-Tile-Recursive packing for the R-tree family.

use std::ops::Range;

use super::{Item, Partition};
use crate::geometry::Mbr;
use crate::index::{Internals, NodeRef, RNode, RTreeNodes};

/// Smallest `s` with `s^exp >= n`.
fn ceil_root(n: usize, exp: usize) -> usize {
    let mut s = (n as f64).powf(1.0 / exp as f64).ceil().max(1.0) as usize;
    while s > 1 && (s - 1).checked_pow(exp as u32).is_some_and(|v| v >= n) {
        s -= 1;
    }
    while s.checked_pow(exp as u32).is_some_and(|v| v < n) {
        s += 1;
    }
    s
}

/// Groups `items` into runs of at most `cap`, tiling one dimension per level:
/// sort on `dim`, cut into `ceil(P^(1/r))` slabs, recurse on the next dimension.
fn tile<T, K>(items: &mut [T], cap: usize, dim: usize, dims: usize, key: &K, offset: usize, out: &mut Vec<Range<usize>>)
where
    K: Fn(&T, usize) -> f32,
{
    let n = items.len();
    if n <= cap {
        out.push(offset..offset + n);
        return;
    }
    items.sort_unstable_by(|a, b| key(a, dim).total_cmp(&key(b, dim)));
    if dim + 1 >= dims {
        for start in (0..n).step_by(cap) {
            out.push(offset + start..offset + (start + cap).min(n));
        }
        return;
    }
    let pages = n.div_ceil(cap);
    let slabs = ceil_root(pages, dims - dim);
    let slab_len = cap * pages.div_ceil(slabs);
    for (j, slab) in items.chunks_mut(slab_len).enumerate() {
        tile(slab, cap, dim + 1, dims, key, offset + j * slab_len, out);
    }
}

pub(super) fn partition<const D: usize>(items: &mut [Item<D>], cap: usize, fanout: usize) -> Partition<D> {
    let mut leaf_runs = Vec::with_capacity(items.len().div_ceil(cap));
    tile(items, cap, 0, D, &|it: &Item<D>, k| it.0[k], 0, &mut leaf_runs);

    let mut level: Vec<(Mbr<D>, NodeRef)> = leaf_runs
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mbr = Mbr::of_points(items[r.clone()].iter().map(|it| &it.0)).expect("non-empty run");
            (mbr, NodeRef::leaf(i))
        })
        .collect();

    let mut nodes = RTreeNodes::<D>::default();
    while level.len() > 1 {
        let mut groups = Vec::new();
        tile(&mut level, fanout, 0, D, &|e: &(Mbr<D>, NodeRef), k| e.0.center(k), 0, &mut groups);
        let mut next = Vec::with_capacity(groups.len());
        for g in groups {
            let entries = &level[g];
            let first = nodes.mbrs.len() as u32;
            let mut envelope = entries[0].0;
            for (mbr, child) in entries {
                envelope.expand(mbr);
                nodes.mbrs.push(*mbr);
                nodes.children.push(*child);
            }
            let id = nodes.nodes.len();
            nodes.nodes.push(RNode { first, len: entries.len() as u32 });
            next.push((envelope, NodeRef::internal(id)));
        }
        level = next;
    }

    Partition { root: level[0].1, internals: Internals::RTree(nodes), leaf_runs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::{build, BuildConfig, Family};
    use crate::geometry::Point;
    use crate::index::{IndexTree, Internals};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Envelope of everything below `r`, computed from the records alone.
    fn subtree_envelope<const D: usize>(tree: &IndexTree<D>, r: NodeRef) -> Mbr<D> {
        let Internals::RTree(nodes) = tree.internals() else { unreachable!() };
        if r.is_leaf() {
            return Mbr::of_points(tree.leaf_records(r.index()).0).unwrap();
        }
        let n = nodes.nodes[r.index()];
        let mut kids = (n.first..n.first + n.len).map(|e| subtree_envelope(tree, nodes.children[e as usize]));
        let mut env = kids.next().unwrap();
        kids.for_each(|m| env.expand(&m));
        env
    }

    fn assert_tight<const D: usize>(tree: &IndexTree<D>) {
        let Internals::RTree(nodes) = tree.internals() else { unreachable!() };
        for (mbr, child) in nodes.mbrs.iter().zip(&nodes.children) {
            assert_eq!(*mbr, subtree_envelope(tree, *child));
        }
    }

    #[test]
    fn ceil_root_is_exact() {
        assert_eq!(ceil_root(4, 2), 2);
        assert_eq!(ceil_root(5, 2), 3);
        assert_eq!(ceil_root(27, 3), 3);
        assert_eq!(ceil_root(28, 3), 4);
        assert_eq!(ceil_root(1, 2), 1);
        assert_eq!(ceil_root(1_000_000, 2), 1000);
    }

    #[test]
    fn eight_point_grid() {
        let pts: Vec<Point<2>> = (0..8).map(|i| Point::new([(i % 4) as f32, (i / 4) as f32]).unwrap()).collect();
        let cfg = BuildConfig::new(Family::RTree, false, 2).with_fanout(4);
        let tree = build(&pts, &cfg).unwrap();
        assert_eq!(tree.leaves().len(), 4);
        let Internals::RTree(nodes) = tree.internals() else { unreachable!() };
        assert_eq!(nodes.nodes.len(), 1);
        assert_eq!(nodes.nodes[0].len, 4);
        assert!(!tree.root().is_leaf());
        for i in 0..4 {
            assert_eq!(tree.leaf_records(i).0.len(), 2);
        }
        assert_tight(&tree);
        // the default fanout equals the capacity and yields a deeper tree
        let deep = build(&pts, &BuildConfig::new(Family::RTree, false, 2)).unwrap();
        assert_eq!(deep.leaves().len(), 4);
        assert_tight(&deep);
    }

    #[test]
    fn small_input_is_a_single_leaf() {
        let pts: Vec<Point<3>> = (0..5).map(|i| Point::new([i as f32, 0.0, 1.0]).unwrap()).collect();
        for learned in [false, true] {
            let tree = build(&pts, &BuildConfig::new(Family::RTree, learned, 5)).unwrap();
            assert!(tree.root().is_leaf());
            assert_eq!(tree.leaves().len(), 1);
            assert_eq!(tree.internals().node_count(), 0);
        }
    }

    #[test]
    fn random_trees_are_tight_and_within_capacity() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for &(n, cap, fanout) in &[(10_000usize, 16usize, 16usize), (7_777, 100, 8), (3_001, 7, 3)] {
            let pts: Vec<Point<2>> = (0..n).map(|_| Point::new([rng.gen(), rng.gen::<f32>().powi(3)]).unwrap()).collect();
            let tree = build(&pts, &BuildConfig::new(Family::RTree, true, cap).with_fanout(fanout)).unwrap();
            assert_tight(&tree);
            assert!((0..tree.leaves().len()).all(|i| tree.leaf_records(i).0.len() <= cap));
            let Internals::RTree(nodes) = tree.internals() else { unreachable!() };
            assert!(nodes.nodes.iter().all(|n| n.len as usize <= fanout));
            assert!(tree.leaves().len() >= n.div_ceil(cap));
        }
        let pts: Vec<Point<3>> = (0..5000).map(|_| Point::new([rng.gen(), rng.gen(), rng.gen()]).unwrap()).collect();
        assert_tight(&build(&pts, &BuildConfig::new(Family::RTree, false, 9)).unwrap());
    }
}
