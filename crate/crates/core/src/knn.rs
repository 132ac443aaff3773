//! Exact k-nearest-neighbour search under Euclidean distance.
//!
//! Neighbourhoods always contain the query point itself, followed by the
//! `k - 1` closest other points ordered by `(squared distance, index)`.
//! Below [`TREE_THRESHOLD`] points a brute-force scan is used, above it a
//! kd-tree; both compute distances identically and return identical results.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub const TREE_THRESHOLD: usize = 4096;
const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SearchStrategy {
    #[default]
    Auto,
    BruteForce,
    KdTree,
}

#[derive(Clone, Copy, PartialEq)]
struct Candidate {
    dist: f64,
    index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Points {
    data: Vec<f64>,
    d: usize,
}

impl Points {
    fn new(m: &DMatrix<f64>) -> Self {
        let d = m.ncols();
        let mut data = Vec::with_capacity(m.nrows() * d);
        for i in 0..m.nrows() {
            data.extend(m.row(i).iter());
        }
        Self { data, d }
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    #[inline]
    fn sq_dist(&self, i: usize, j: usize) -> f64 {
        self.row(i)
            .iter()
            .zip(self.row(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

/// Bounded max-heap keeping the `cap` smallest candidates.
struct Best {
    heap: BinaryHeap<Candidate>,
    cap: usize,
}

impl Best {
    fn offer(&mut self, c: Candidate) {
        if self.heap.len() < self.cap {
            self.heap.push(c);
        } else if let Some(top) = self.heap.peek() {
            if c < *top {
                self.heap.pop();
                self.heap.push(c);
            }
        }
    }

    /// Distance beyond which no candidate can enter.
    fn bound(&self) -> f64 {
        if self.heap.len() < self.cap {
            f64::INFINITY
        } else {
            self.heap.peek().map_or(f64::INFINITY, |c| c.dist)
        }
    }

    fn finish(self, query: usize) -> Vec<usize> {
        let mut v = self.heap.into_sorted_vec();
        let mut out = Vec::with_capacity(v.len() + 1);
        out.push(query);
        out.extend(v.drain(..).map(|c| c.index));
        out
    }
}

enum Node {
    Leaf(Vec<usize>),
    Split {
        dim: usize,
        value: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

fn build(points: &Points, mut idx: Vec<usize>) -> Node {
    if idx.len() <= LEAF_SIZE {
        return Node::Leaf(idx);
    }
    let d = points.d;
    let mut best_dim = 0;
    let mut best_spread = -1.0;
    for c in 0..d {
        let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
            let v = points.row(i)[c];
            (lo.min(v), hi.max(v))
        });
        if hi - lo > best_spread {
            best_spread = hi - lo;
            best_dim = c;
        }
    }
    if best_spread <= 0.0 {
        return Node::Leaf(idx);
    }
    let mid = idx.len() / 2;
    idx.select_nth_unstable_by(mid, |&a, &b| {
        points.row(a)[best_dim].total_cmp(&points.row(b)[best_dim])
    });
    let value = points.row(idx[mid])[best_dim];
    let right = idx.split_off(mid);
    Node::Split {
        dim: best_dim,
        value,
        left: Box::new(build(points, idx)),
        right: Box::new(build(points, right)),
    }
}

fn search(node: &Node, points: &Points, query: usize, best: &mut Best) {
    match node {
        Node::Leaf(idx) => {
            for &j in idx {
                if j != query {
                    best.offer(Candidate {
                        dist: points.sq_dist(query, j),
                        index: j,
                    });
                }
            }
        }
        Node::Split {
            dim,
            value,
            left,
            right,
        } => {
            let q = points.row(query)[*dim];
            // points equal to `value` may sit on either side, so the near side
            // is only a visiting order; the plane distance bounds the far side
            let (near, far) = if q < *value { (left, right) } else { (right, left) };
            search(near, points, query, best);
            let diff = q - value;
            if diff * diff <= best.bound() {
                search(far, points, query, best);
            }
        }
    }
}

/// Neighbourhoods of size `k` (self first) for every row of `points`.
pub fn knn_neighborhoods(points: &DMatrix<f64>, k: usize) -> Result<Vec<Vec<usize>>> {
    knn_neighborhoods_with(points, k, SearchStrategy::Auto)
}

pub fn knn_neighborhoods_with(
    points: &DMatrix<f64>,
    k: usize,
    strategy: SearchStrategy,
) -> Result<Vec<Vec<usize>>> {
    let n = points.nrows();
    if k < 1 || k > n {
        return Err(Error::invalid(format!("k = {k} must lie in 1..={n}")));
    }
    let pts = Points::new(points);
    let use_tree = match strategy {
        SearchStrategy::Auto => n >= TREE_THRESHOLD,
        SearchStrategy::BruteForce => false,
        SearchStrategy::KdTree => true,
    };
    let fresh = || Best {
        heap: BinaryHeap::with_capacity(k),
        cap: k - 1,
    };
    let out = if use_tree {
        let tree = build(&pts, (0..n).collect());
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut best = fresh();
                if k > 1 {
                    search(&tree, &pts, i, &mut best);
                }
                best.finish(i)
            })
            .collect()
    } else {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut best = fresh();
                if k > 1 {
                    for j in (0..n).filter(|&j| j != i) {
                        best.offer(Candidate {
                            dist: pts.sq_dist(i, j),
                            index: j,
                        });
                    }
                }
                best.finish(i)
            })
            .collect()
    };
    Ok(out)
}
