//! Exact k-nearest-neighbor search over 3D points.
//!
//! Plain median-split kd-tree on an index array. Queries are exact and fully
//! deterministic: candidates are ranked by `(squared distance, index)`, so
//! distance ties always resolve to the lower point index, matching a
//! brute-force scan sorted the same way.

use alloc::vec::Vec;

use crate::math;

const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone)]
struct Node {
    /// Split coordinate along `axis`; leaves use `axis == 3`.
    split: f64,
    axis: u8,
    /// Children for inner nodes, `start..end` range into `order` for leaves.
    left: u32,
    right: u32,
}

/// Static kd-tree over a borrowed-at-build point set (positions are copied in).
#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<[f64; 3]>,
    order: Vec<u32>,
    nodes: Vec<Node>,
    root: u32,
}

/// One nearest-neighbor hit: `(point index, Euclidean distance)`.
pub type Neighbor = (u32, f64);

impl KdTree {
    pub fn new(points: &[[f64; 3]]) -> KdTree {
        let mut order: Vec<u32> = (0..points.len() as u32).collect();
        let mut tree = KdTree {
            points: points.to_vec(),
            nodes: Vec::new(),
            order: Vec::new(),
            root: 0,
        };
        if !points.is_empty() {
            tree.root = tree.build(&mut order, 0);
        }
        tree.order = order;
        tree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn build(&mut self, span: &mut [u32], offset: usize) -> u32 {
        if span.len() <= LEAF_SIZE {
            let id = self.nodes.len() as u32;
            self.nodes.push(Node {
                split: 0.0,
                axis: 3,
                left: offset as u32,
                right: (offset + span.len()) as u32,
            });
            return id;
        }

        // Split along the widest axis: degenerate (planar/linear) clouds stay
        // balanced this way.
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in span.iter() {
            let p = self.points[i as usize];
            for a in 0..3 {
                lo[a] = math::fmin(lo[a], p[a]);
                hi[a] = math::fmax(hi[a], p[a]);
            }
        }
        let mut axis = 0;
        for a in 1..3 {
            if hi[a] - lo[a] > hi[axis] - lo[axis] {
                axis = a;
            }
        }

        let mid = span.len() / 2;
        let points = &self.points;
        span.select_nth_unstable_by(mid, |&x, &y| {
            let (px, py) = (points[x as usize][axis], points[y as usize][axis]);
            px.total_cmp(&py).then(x.cmp(&y))
        });
        let split = self.points[span[mid] as usize][axis];

        let id = self.nodes.len() as u32;
        self.nodes.push(Node {
            split,
            axis: axis as u8,
            left: 0,
            right: 0,
        });
        let (left_span, right_span) = span.split_at_mut(mid);
        let left = self.build(left_span, offset);
        let right = self.build(right_span, offset + mid);
        self.nodes[id as usize].left = left;
        self.nodes[id as usize].right = right;
        id
    }

    /// Exact `k` nearest neighbors of `query`, ascending by distance with
    /// ties broken by lower index. `k` is clamped to the point count.
    pub fn knn(&self, query: &[f64; 3], k: usize) -> Vec<Neighbor> {
        self.knn_filtered(query, k, u32::MAX)
    }

    /// As [`KdTree::knn`], but never returns `exclude` (pass `u32::MAX` for none).
    pub fn knn_excluding(&self, query: &[f64; 3], k: usize, exclude: u32) -> Vec<Neighbor> {
        self.knn_filtered(query, k, exclude)
    }

    fn knn_filtered(&self, query: &[f64; 3], k: usize, exclude: u32) -> Vec<Neighbor> {
        if self.is_empty() || k == 0 {
            return Vec::new();
        }
        let mut best: Heap = Heap::new(k);
        self.search(self.root, query, exclude, &mut best);
        best.into_sorted()
            .into_iter()
            .map(|(d2, i)| (i, math::sqrt(d2)))
            .collect()
    }

    fn search(&self, node: u32, query: &[f64; 3], exclude: u32, best: &mut Heap) {
        let n = &self.nodes[node as usize];
        if n.axis == 3 {
            for &i in &self.order[n.left as usize..n.right as usize] {
                if i == exclude {
                    continue;
                }
                let d2 = dist2(&self.points[i as usize], query);
                best.offer(d2, i);
            }
            return;
        }
        let axis = n.axis as usize;
        let delta = query[axis] - n.split;
        let (near, far) = if delta < 0.0 {
            (n.left, n.right)
        } else {
            (n.right, n.left)
        };
        self.search(near, query, exclude, best);
        if !best.full() || delta * delta <= best.worst_d2() {
            self.search(far, query, exclude, best);
        }
    }
}

/// Squared Euclidean distance; the exact expression brute-force oracles must
/// reproduce for bitwise-equal comparisons.
#[inline]
pub fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

/// Bounded max-heap over `(d2, index)` with lexicographic order.
struct Heap {
    k: usize,
    items: Vec<(f64, u32)>,
}

impl Heap {
    fn new(k: usize) -> Heap {
        Heap {
            k,
            items: Vec::with_capacity(k),
        }
    }

    fn full(&self) -> bool {
        self.items.len() == self.k
    }

    fn worst_d2(&self) -> f64 {
        self.items[0].0
    }

    fn offer(&mut self, d2: f64, idx: u32) {
        if self.items.len() < self.k {
            self.items.push((d2, idx));
            self.sift_up(self.items.len() - 1);
        } else if less(&(d2, idx), &self.items[0]) {
            self.items[0] = (d2, idx);
            self.sift_down(0);
        }
    }

    fn sift_up(&mut self, mut i: usize) {
        while i > 0 {
            let parent = (i - 1) / 2;
            if less(&self.items[parent], &self.items[i]) {
                self.items.swap(parent, i);
                i = parent;
            } else {
                break;
            }
        }
    }

    fn sift_down(&mut self, mut i: usize) {
        loop {
            let (l, r) = (2 * i + 1, 2 * i + 2);
            let mut largest = i;
            if l < self.items.len() && less(&self.items[largest], &self.items[l]) {
                largest = l;
            }
            if r < self.items.len() && less(&self.items[largest], &self.items[r]) {
                largest = r;
            }
            if largest == i {
                break;
            }
            self.items.swap(i, largest);
            i = largest;
        }
    }

    fn into_sorted(self) -> Vec<(f64, u32)> {
        let mut v = self.items;
        v.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        v
    }
}

#[inline]
fn less(a: &(f64, u32), b: &(f64, u32)) -> bool {
    match a.0.total_cmp(&b.0) {
        core::cmp::Ordering::Less => true,
        core::cmp::Ordering::Greater => false,
        core::cmp::Ordering::Equal => a.1 < b.1,
    }
}
