//! Median-split KD-tree construction.

use std::ops::Range;

use super::{partition_in_place, Item, Partition};
use crate::index::{Internals, KdNode, NodeRef};

pub(super) fn partition<const D: usize>(items: &mut [Item<D>], cap: usize) -> Partition<D> {
    let mut nodes = Vec::new();
    let mut leaf_runs = Vec::new();
    let root = split(items, 0, 0, cap, &mut nodes, &mut leaf_runs);
    Partition { internals: Internals::Kd(nodes), root, leaf_runs }
}

fn split<const D: usize>(
    items: &mut [Item<D>],
    offset: usize,
    level: usize,
    cap: usize,
    nodes: &mut Vec<KdNode>,
    leaf_runs: &mut Vec<Range<usize>>,
) -> NodeRef {
    let n = items.len();
    if n > cap {
        // a dimension whose lower median equals its maximum cannot separate
        // anything; fall through to the next one, and force a leaf if none can
        for attempt in 0..D {
            let dim = (level + attempt) % D;
            let median = (n - 1) / 2;
            items.select_nth_unstable_by(median, |a, b| a.0[dim].total_cmp(&b.0[dim]));
            let value = items[median].0[dim];
            let left_len = partition_in_place(items, |it| it.0[dim] <= value);
            if left_len == n {
                continue;
            }
            let id = nodes.len();
            nodes.push(KdNode { dim: dim as u32, split: value, left: NodeRef::leaf(0), right: NodeRef::leaf(0) });
            let (left_items, right_items) = items.split_at_mut(left_len);
            let left = split(left_items, offset, level + 1, cap, nodes, leaf_runs);
            let right = split(right_items, offset + left_len, level + 1, cap, nodes, leaf_runs);
            nodes[id].left = left;
            nodes[id].right = right;
            return NodeRef::internal(id);
        }
    }
    leaf_runs.push(offset..offset + n);
    NodeRef::leaf(leaf_runs.len() - 1)
}

#[cfg(test)]
mod tests {
    use crate::builders::{build, BuildConfig, Family};
    use crate::geometry::Point;
    use crate::index::{IndexTree, Internals, NodeRef};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Checks the split predicate for every record under every node and
    /// returns the ids reached.
    fn audit<const D: usize>(tree: &IndexTree<D>, r: NodeRef, path: &mut Vec<(usize, f32, bool)>, seen: &mut Vec<u32>) {
        let Internals::Kd(nodes) = tree.internals() else { unreachable!() };
        if r.is_leaf() {
            let (pts, ids) = tree.leaf_records(r.index());
            for p in pts {
                for &(dim, split, left) in path.iter() {
                    assert_eq!(p[dim] <= split, left, "{p:?} violates split {dim} {split}");
                }
            }
            seen.extend_from_slice(ids);
            return;
        }
        let node = nodes[r.index()];
        path.push((node.dim as usize, node.split, true));
        audit(tree, node.left, path, seen);
        path.last_mut().unwrap().2 = false;
        audit(tree, node.right, path, seen);
        path.pop();
    }

    #[test]
    fn collinear_points_split_once_at_lower_median() {
        let pts: Vec<Point<2>> = [4.0, 1.0, 3.0, 2.0].iter().map(|&x| Point::new([x, 0.0]).unwrap()).collect();
        let tree = build(&pts, &BuildConfig::new(Family::KdTree, false, 2)).unwrap();
        let Internals::Kd(nodes) = tree.internals() else { unreachable!() };
        assert_eq!(nodes.len(), 1);
        assert_eq!(nodes[0].dim, 0);
        assert_eq!(nodes[0].split, 2.0);
        assert_eq!(tree.leaves().len(), 2);
    }

    #[test]
    fn identical_points_force_a_leaf() {
        let pts = vec![Point::new([1.0, 1.0, 1.0]).unwrap(); 100];
        for learned in [false, true] {
            let tree = build(&pts, &BuildConfig::new(Family::KdTree, learned, 8)).unwrap();
            assert!(tree.root().is_leaf());
            assert_eq!(tree.leaf_records(0).0.len(), 100);
        }
    }

    #[test]
    fn one_constant_dimension_uses_the_other() {
        let pts: Vec<Point<2>> = (0..64).map(|i| Point::new([7.0, i as f32]).unwrap()).collect();
        let tree = build(&pts, &BuildConfig::new(Family::KdTree, false, 4)).unwrap();
        assert!((0..tree.leaves().len()).all(|i| tree.leaf_records(i).0.len() <= 4));
    }

    #[test]
    fn random_tree_audit() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let pts: Vec<Point<2>> = (0..10_000)
            .map(|_| Point::new([(rng.gen_range(0..500)) as f32, rng.gen::<f32>().powi(4)]).unwrap())
            .collect();
        for cap in [1, 2, 16, 300] {
            let tree = build(&pts, &BuildConfig::new(Family::KdTree, false, cap)).unwrap();
            let mut seen = Vec::new();
            audit(&tree, tree.root(), &mut Vec::new(), &mut seen);
            seen.sort_unstable();
            assert_eq!(seen, (0..10_000).collect::<Vec<u32>>());
            assert!((0..tree.leaves().len()).all(|i| tree.leaf_records(i).0.len() <= cap.max(1)));
        }
    }
}
