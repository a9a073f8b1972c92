//! Bucket kd-tree for exact nearest-neighbour and radius queries.
//!
//! Results are identical to exhaustive search, including tie-breaking:
//! among equidistant points the one with the lowest original index wins.
//! Subtrees whose minimum possible distance equals the current best are
//! therefore never pruned.

const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone, Copy)]
enum Node {
    Split { axis: usize, value: f64, left: u32, right: u32 },
    Leaf { start: u32, end: u32 },
}

#[derive(Debug, Clone)]
pub struct KdTree<const D: usize> {
    pts: Vec<[f64; D]>,
    original_idx: Vec<u32>,
    nodes: Vec<Node>,
}

impl<const D: usize> KdTree<D> {
    /// Build from points in their natural order; indices reported by
    /// queries refer to positions in `points`.
    pub fn build(points: &[[f64; D]]) -> Self {
        assert!(!points.is_empty(), "kd-tree needs at least one point");
        let mut entries: Vec<([f64; D], u32)> = points
            .iter()
            .enumerate()
            .map(|(i, p)| (*p, i as u32))
            .collect();
        let mut nodes = Vec::new();
        Self::build_node(&mut entries, 0, &mut nodes);
        let pts = entries.iter().map(|(p, _)| *p).collect();
        let original_idx = entries.iter().map(|(_, i)| *i).collect();
        KdTree { pts, original_idx, nodes }
    }

    fn build_node(entries: &mut [([f64; D], u32)], offset: usize, nodes: &mut Vec<Node>) -> u32 {
        let id = nodes.len() as u32;
        if entries.len() <= LEAF_SIZE {
            nodes.push(Node::Leaf {
                start: offset as u32,
                end: (offset + entries.len()) as u32,
            });
            return id;
        }
        // Split the axis with the widest extent at its median.
        let mut axis = 0;
        let mut best_spread = f64::NEG_INFINITY;
        for a in 0..D {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for (p, _) in entries.iter() {
                lo = lo.min(p[a]);
                hi = hi.max(p[a]);
            }
            if hi - lo > best_spread {
                best_spread = hi - lo;
                axis = a;
            }
        }
        let mid = entries.len() / 2;
        entries.select_nth_unstable_by(mid, |a, b| a.0[axis].total_cmp(&b.0[axis]));
        let value = entries[mid].0[axis];
        nodes.push(Node::Split { axis, value, left: 0, right: 0 });
        let (lo, hi) = entries.split_at_mut(mid);
        let left = Self::build_node(lo, offset, nodes);
        let right = Self::build_node(hi, offset + mid, nodes);
        if let Node::Split { left: l, right: r, .. } = &mut nodes[id as usize] {
            *l = left;
            *r = right;
        }
        id
    }

    fn dist2(a: &[f64; D], b: &[f64; D]) -> f64 {
        let mut s = 0.0;
        for i in 0..D {
            let d = a[i] - b[i];
            s += d * d;
        }
        s
    }

    /// Index (into the build slice) and squared distance of the nearest
    /// point; ties resolved to the lowest index.
    pub fn nearest(&self, query: &[f64; D]) -> (usize, f64) {
        let mut best = (u32::MAX, f64::INFINITY);
        self.nearest_rec(0, query, &mut best);
        (best.0 as usize, best.1)
    }

    fn nearest_rec(&self, node: u32, query: &[f64; D], best: &mut (u32, f64)) {
        match self.nodes[node as usize] {
            Node::Leaf { start, end } => {
                for i in start..end {
                    let d2 = Self::dist2(&self.pts[i as usize], query);
                    let idx = self.original_idx[i as usize];
                    if d2 < best.1 || (d2 == best.1 && idx < best.0) {
                        *best = (idx, d2);
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let delta = query[axis] - value;
                let (near, far) = if delta < 0.0 { (left, right) } else { (right, left) };
                self.nearest_rec(near, query, best);
                if delta * delta <= best.1 {
                    self.nearest_rec(far, query, best);
                }
            }
        }
    }

    /// All indices within `radius` (inclusive) of the query, in ascending
    /// index order.
    pub fn within_radius(&self, query: &[f64; D], radius: f64) -> Vec<usize> {
        let r2 = radius * radius;
        let mut out = Vec::new();
        self.radius_rec(0, query, r2, &mut out);
        out.sort_unstable();
        out
    }

    fn radius_rec(&self, node: u32, query: &[f64; D], r2: f64, out: &mut Vec<usize>) {
        match self.nodes[node as usize] {
            Node::Leaf { start, end } => {
                for i in start..end {
                    if Self::dist2(&self.pts[i as usize], query) <= r2 {
                        out.push(self.original_idx[i as usize] as usize);
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let delta = query[axis] - value;
                let (near, far) = if delta < 0.0 { (left, right) } else { (right, left) };
                self.radius_rec(near, query, r2, out);
                if delta * delta <= r2 {
                    self.radius_rec(far, query, r2, out);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_nearest(points: &[[f64; 2]], q: &[f64; 2]) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        for (i, p) in points.iter().enumerate() {
            let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
            if d2 < best.1 {
                best = (i, d2);
            }
        }
        best
    }

    #[test]
    fn nearest_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let pts: Vec<[f64; 2]> = (0..300)
                .map(|_| [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)])
                .collect();
            let tree = KdTree::build(&pts);
            for _ in 0..100 {
                let q = [rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0)];
                let (bi, bd) = brute_nearest(&pts, &q);
                let (ti, td) = tree.nearest(&q);
                assert_eq!(ti, bi);
                assert_eq!(td, bd);
            }
        }
    }

    #[test]
    fn ties_break_to_lowest_index() {
        // Lattice points force exact distance ties; queries at midpoints.
        let mut pts = Vec::new();
        for i in 0..10 {
            for j in 0..10 {
                pts.push([i as f64, j as f64]);
            }
        }
        pts.push([3.0, 3.0]); // duplicate of index 33
        let tree = KdTree::build(&pts);
        let (idx, d2) = tree.nearest(&[3.0, 3.0]);
        assert_eq!((idx, d2), (33, 0.0));
        // Midpoint between four lattice points: lowest index wins.
        let (idx, _) = tree.nearest(&[4.5, 7.5]);
        assert_eq!(idx, 47);
    }

    #[test]
    fn radius_query_matches_brute_force_inclusive() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let pts: Vec<[f64; 2]> = (0..500)
            .map(|_| [rng.random_range(0.0..4.0), rng.random_range(0.0..4.0)])
            .collect();
        let tree = KdTree::build(&pts);
        for _ in 0..200 {
            let q = [rng.random_range(0.0..4.0), rng.random_range(0.0..4.0)];
            let r = rng.random_range(0.05..1.0);
            let mut expected: Vec<usize> = pts
                .iter()
                .enumerate()
                .filter(|(_, p)| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) <= r * r)
                .map(|(i, _)| i)
                .collect();
            expected.sort_unstable();
            assert_eq!(tree.within_radius(&q, r), expected);
        }
        // Inclusive boundary.
        let tree = KdTree::build(&[[0.0, 0.0], [1.0, 0.0]]);
        assert_eq!(tree.within_radius(&[0.0, 0.0], 1.0), vec![0, 1]);
    }

    #[test]
    fn three_dimensional_queries() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let pts: Vec<[f64; 3]> = (0..400)
            .map(|_| {
                [
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-2.0..2.0),
                    rng.random_range(0.0..0.5),
                ]
            })
            .collect();
        let tree = KdTree::build(&pts);
        for _ in 0..100 {
            let q = [
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(0.0..0.5),
            ];
            let mut best = (usize::MAX, f64::INFINITY);
            for (i, p) in pts.iter().enumerate() {
                let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2);
                if d2 < best.1 {
                    best = (i, d2);
                }
            }
            assert_eq!(tree.nearest(&q), best);
        }
    }
}
