//! Exact k-nearest-neighbour search over a plain KD-tree.
//!
//! Used only to shape range-query workloads.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::geometry::Point;
use crate::index::{IndexTree, Internals, NodeRef};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub dist2: f64,
    pub id: u32,
}

// Ordered by (distance, id) so ties resolve the same way in every search.
impl Eq for Neighbor {}

impl Ord for Neighbor {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist2.total_cmp(&other.dist2).then(self.id.cmp(&other.id))
    }
}

impl PartialOrd for Neighbor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The `k` records closest to `q`, nearest first. `tree` must be a KD-tree.
pub fn knn<const D: usize>(tree: &IndexTree<D>, q: &Point<D>, k: usize) -> Vec<Neighbor> {
    let mut out = Vec::with_capacity(k);
    knn_into(tree, q, k, &mut out);
    out
}

pub(crate) fn knn_into<const D: usize>(tree: &IndexTree<D>, q: &Point<D>, k: usize, out: &mut Vec<Neighbor>) {
    let Internals::Kd(nodes) = tree.internals() else {
        panic!("knn requires a KD-tree");
    };
    let mut heap = BinaryHeap::with_capacity(k + 1);
    if k > 0 {
        visit(tree, nodes, tree.root(), q, k, &mut heap);
    }
    out.clear();
    out.extend(heap.into_sorted_vec());
}

fn offer(heap: &mut BinaryHeap<Neighbor>, k: usize, nb: Neighbor) {
    if heap.len() < k {
        heap.push(nb);
    } else if let Some(mut worst) = heap.peek_mut() {
        if nb < *worst {
            *worst = nb;
        }
    }
}

fn visit<const D: usize>(
    tree: &IndexTree<D>,
    nodes: &[crate::index::KdNode],
    r: NodeRef,
    q: &Point<D>,
    k: usize,
    heap: &mut BinaryHeap<Neighbor>,
) {
    if r.is_leaf() {
        let (points, ids) = tree.leaf_records(r.index());
        for (p, &id) in points.iter().zip(ids) {
            offer(heap, k, Neighbor { dist2: p.squared_distance(q), id });
        }
        return;
    }
    let node = &nodes[r.index()];
    let gap = q[node.dim as usize] as f64 - node.split as f64;
    let (near, far) = if gap <= 0.0 { (node.left, node.right) } else { (node.right, node.left) };
    visit(tree, nodes, near, q, k, heap);
    // `<=` keeps equal-distance candidates reachable for the id tie-break
    if heap.len() < k || gap * gap <= heap.peek().map_or(f64::INFINITY, |w| w.dist2) {
        visit(tree, nodes, far, q, k, heap);
    }
}

/// Reference answer by sorting every record by (distance, id).
pub fn knn_brute_force<const D: usize>(points: &[Point<D>], q: &Point<D>, k: usize) -> Vec<Neighbor> {
    let mut all: Vec<Neighbor> = points
        .iter()
        .enumerate()
        .map(|(i, p)| Neighbor { dist2: p.squared_distance(q), id: i as u32 })
        .collect();
    all.sort_unstable();
    all.truncate(k);
    all
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::{build, BuildConfig, Family};
    use crate::workload::{generate, SyntheticKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for (kind, n) in [(SyntheticKind::Uniform, 10_000), (SyntheticKind::Skewed, 8_000), (SyntheticKind::Clusters, 3_000)] {
            let pts = generate::<2>(kind, n, 5).unwrap();
            let tree = build(&pts, &BuildConfig::new(Family::KdTree, false, 32)).unwrap();
            for &k in &[1usize, 10, 100, 1000] {
                for _ in 0..10 {
                    let q = pts[rng.gen_range(0..n)];
                    assert_eq!(knn(&tree, &q, k), knn_brute_force(&pts, &q, k), "{kind:?} k={k}");
                }
            }
        }
        let pts = generate::<3>(SyntheticKind::Skewed, 5_000, 6).unwrap();
        let tree = build(&pts, &BuildConfig::new(Family::KdTree, false, 16)).unwrap();
        for _ in 0..20 {
            let q = Point::new([rng.gen(), rng.gen(), rng.gen()]).unwrap();
            assert_eq!(knn(&tree, &q, 50), knn_brute_force(&pts, &q, 50));
        }
    }

    #[test]
    fn ties_resolve_by_id() {
        let pts = vec![Point::new([1.0, 1.0]).unwrap(); 20];
        let tree = build(&pts, &BuildConfig::new(Family::KdTree, false, 4)).unwrap();
        let got: Vec<u32> = knn(&tree, &pts[0], 5).iter().map(|n| n.id).collect();
        assert_eq!(got, vec![0, 1, 2, 3, 4]);
    }
}
