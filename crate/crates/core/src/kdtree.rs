//! A static kd-tree for exact k-nearest-neighbour queries.
//!
//! Nodes split at the median of the dimension with the widest spread; leaves
//! hold at most [`LEAF_SIZE`] points. Results are ordered by squared Euclidean
//! distance, ties broken by the lower point index, so queries agree exactly
//! with a brute-force scan.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

pub const LEAF_SIZE: usize = 8;

#[derive(Debug)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { dim: usize, value: f64, left: usize, right: usize },
}

#[derive(Debug)]
pub struct KdTree {
    dim: usize,
    points: Vec<f64>,
    // permutation of point indices; leaves own contiguous ranges of it
    order: Vec<usize>,
    nodes: Vec<Node>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub dist2: f64,
}

impl Eq for Neighbor {}

impl PartialOrd for Neighbor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Neighbor {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist2
            .total_cmp(&other.dist2)
            .then(self.index.cmp(&other.index))
    }
}

impl KdTree {
    /// Builds a tree over `points`, all of length `dim`.
    pub fn build(points: &[Vec<f64>]) -> Self {
        let dim = points.first().map_or(0, Vec::len);
        assert!(points.iter().all(|p| p.len() == dim), "ragged points");
        let flat = points.iter().flatten().copied().collect();
        let mut tree = KdTree {
            dim,
            points: flat,
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
        };
        if !points.is_empty() {
            tree.build_node(0, points.len());
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    fn coord(&self, point: usize, d: usize) -> f64 {
        self.points[point * self.dim + d]
    }

    fn point(&self, point: usize) -> &[f64] {
        &self.points[point * self.dim..(point + 1) * self.dim]
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE || self.dim == 0 {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let (dim, spread) = (0..self.dim)
            .map(|d| {
                let (lo, hi) = self.order[start..end].iter().fold(
                    (f64::INFINITY, f64::NEG_INFINITY),
                    |(lo, hi), &p| {
                        let v = self.coord(p, d);
                        (lo.min(v), hi.max(v))
                    },
                );
                (d, hi - lo)
            })
            .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
        if spread <= 0.0 {
            // all points identical
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mid = start + (end - start) / 2;
        let mut slice = std::mem::take(&mut self.order);
        slice[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            self.coord(a, dim).total_cmp(&self.coord(b, dim))
        });
        self.order = slice;
        let value = self.coord(self.order[mid], dim);
        self.nodes.push(Node::Split { dim, value, left: 0, right: 0 });
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        self.nodes[id] = Node::Split { dim, value, left, right };
        id
    }

    /// The `k` nearest points to `query`, nearest first.
    pub fn nearest(&self, query: &[f64], k: usize) -> Vec<Neighbor> {
        assert_eq!(query.len(), self.dim, "query dimension mismatch");
        let k = k.min(self.len());
        if k == 0 {
            return Vec::new();
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.search(0, query, k, &mut heap);
        let mut out = heap.into_vec();
        out.sort();
        out
    }

    fn search(&self, node: usize, query: &[f64], k: usize, heap: &mut BinaryHeap<Neighbor>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &p in &self.order[start..end] {
                    let cand = Neighbor { index: p, dist2: dist2(self.point(p), query) };
                    if heap.len() < k {
                        heap.push(cand);
                    } else if cand < *heap.peek().expect("heap is full") {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            }
            Node::Split { dim, value, left, right } => {
                let diff = query[dim] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, query, k, heap);
                // `<=` keeps equal-distance candidates reachable for the index tie-break
                if heap.len() < k || diff * diff <= heap.peek().expect("heap is full").dist2 {
                    self.search(far, query, k, heap);
                }
            }
        }
    }
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::oracle::brute_force_knn;

    #[test]
    fn finds_itself_first() {
        let pts: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, (i % 7) as f64]).collect();
        let tree = KdTree::build(&pts);
        for (i, p) in pts.iter().enumerate() {
            let nn = tree.nearest(p, 1);
            assert_eq!(nn[0].index, i);
            assert_eq!(nn[0].dist2, 0.0);
        }
    }

    #[test]
    fn duplicate_points_tie_by_index() {
        let pts = vec![vec![1.0, 1.0]; 20];
        let tree = KdTree::build(&pts);
        let nn: Vec<usize> = tree.nearest(&[1.0, 1.0], 3).iter().map(|n| n.index).collect();
        assert_eq!(nn, vec![0, 1, 2]);
    }

    #[test]
    fn k_larger_than_tree() {
        let tree = KdTree::build(&[vec![0.0], vec![1.0]]);
        assert_eq!(tree.nearest(&[0.2], 5).len(), 2);
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            pts in prop::collection::vec(prop::collection::vec(-5i32..5, 3), 1..80),
            q in prop::collection::vec(-6i32..6, 3),
            k in 1usize..12,
        ) {
            // integer grid coordinates force many exact distance ties
            let pts: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().map(|&v| v as f64).collect()).collect();
            let q: Vec<f64> = q.iter().map(|&v| v as f64).collect();
            let tree = KdTree::build(&pts);
            let got: Vec<usize> = tree.nearest(&q, k).iter().map(|n| n.index).collect();
            prop_assert_eq!(got, brute_force_knn(&pts, &q, k));
        }
    }
}
