//! Conversions between trees and leaf embeddings: exact and greedy
//! decoding, and a combinatorial tree embedding used as an encoder.

use std::cmp::Ordering;

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{dist_to_origin, lca_depth, max_norm, DiskPoint};
use crate::loss::Embedding;
use crate::scalar::{count, lit, Real};
use crate::trees::Dendrogram;

/// Largest norm spread accepted by [`greedy_decode`].
pub const NORMALIZED_TOL: f64 = 1e-6;

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
}

/// Merges leaf pairs in order of decreasing LCA depth, joining the two
/// subtrees that contain them whenever they differ.
///
/// Ties are broken by the pair `(i, j)` in lexicographic order.
pub fn exact_decode<T: Real>(z: &Embedding<T>) -> Result<Dendrogram> {
    let n = z.n();
    if n < 2 {
        return Err(Error::TooFewPoints { min: 2, got: n });
    }
    let p = z.points();
    let mut pairs: Vec<(T, usize, usize)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| (i + 1..n).map(move |j| (lca_depth(&p[i], &p[j]).depth, i, j)))
        .collect();
    pairs.par_sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(Ordering::Equal)
            .then((a.1, a.2).cmp(&(b.1, b.2)))
    });

    let mut uf = UnionFind::new(n);
    // current tree node standing for each union-find root
    let mut node_of: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n - 1);
    for &(_, i, j) in &pairs {
        let (ri, rj) = (uf.find(i), uf.find(j));
        if ri == rj {
            continue;
        }
        merges.push((node_of[ri], node_of[rj]));
        uf.parent[rj] = ri;
        node_of[ri] = n + merges.len() - 1;
        if merges.len() == n - 1 {
            break;
        }
    }
    Dendrogram::from_merges(n, &merges)
}

/// Top-down decoding by angular gaps for embeddings whose points share a
/// common norm.
///
/// The root splits the circle of sorted angles at its two largest gaps;
/// every arc below is split at its largest internal gap.
pub fn greedy_decode<T: Real>(z: &Embedding<T>) -> Result<Dendrogram> {
    let n = z.n();
    if n < 2 {
        return Err(Error::TooFewPoints { min: 2, got: n });
    }
    let spread = z.norm_spread();
    if spread > lit(NORMALIZED_TOL) {
        return Err(Error::NotNormalized {
            spread: spread.to_f64().unwrap_or(f64::NAN),
        });
    }
    let angles: Vec<T> = z.points().iter().map(DiskPoint::angle).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        angles[a]
            .partial_cmp(&angles[b])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let sorted: Vec<T> = order.iter().map(|&i| angles[i]).collect();

    // gap[k] separates sorted positions k and k + 1 (cyclically)
    let two_pi = T::PI() + T::PI();
    let gap = |k: usize| {
        if k + 1 < n {
            sorted[k + 1] - sorted[k]
        } else {
            sorted[0] + two_pi - sorted[n - 1]
        }
    };
    let mut by_size: Vec<usize> = (0..n).collect();
    by_size.sort_by(|&a, &b| {
        gap(b)
            .partial_cmp(&gap(a))
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let (c1, c2) = (by_size[0].min(by_size[1]), by_size[0].max(by_size[1]));
    // arcs: positions c1+1 ..= c2, and c2+1 .. wrapping to c1
    let first: Vec<usize> = (c1 + 1..=c2).collect();
    let second: Vec<usize> = (c2 + 1..n).chain(0..=c1).collect();

    let mut merges = Vec::with_capacity(n - 1);
    let a = split_arc(&first, &order, &sorted, two_pi, n, &mut merges);
    let b = split_arc(&second, &order, &sorted, two_pi, n, &mut merges);
    merges.push((a, b));
    Dendrogram::from_merges(n, &merges)
}

/// Builds the subtree over a contiguous arc of sorted positions and returns
/// its node id.
fn split_arc<T: Real>(
    arc: &[usize],
    order: &[usize],
    sorted: &[T],
    two_pi: T,
    n: usize,
    merges: &mut Vec<(usize, usize)>,
) -> usize {
    if arc.len() == 1 {
        return order[arc[0]];
    }
    let mut best = 0;
    let mut best_gap = T::neg_infinity();
    for k in 0..arc.len() - 1 {
        let (a, b) = (arc[k], arc[k + 1]);
        let mut g = sorted[b] - sorted[a];
        if b < a {
            g += two_pi;
        }
        if g > best_gap {
            best_gap = g;
            best = k;
        }
    }
    let left = split_arc(&arc[..=best], order, sorted, two_pi, n, merges);
    let right = split_arc(&arc[best + 1..], order, sorted, two_pi, n, merges);
    merges.push((left, right));
    n + merges.len() - 1
}

/// Positions of every tree node produced by [`sarkar_embed`].
#[derive(Debug, Clone)]
pub struct SarkarLayout<T> {
    /// One point per tree node, indexed like the dendrogram's nodes.
    pub nodes: Vec<DiskPoint<T>>,
    /// The leaf points.
    pub leaves: Embedding<T>,
}

/// Embeds a tree in the disk with every edge of hyperbolic length
/// `edge_length`.
///
/// The root sits at the origin with its children at opposite angles. Every
/// other internal node is moved to the origin by a disk isometry, its two
/// children are placed at angles `2pi/3` and `4pi/3` away from the image of
/// its parent, and the isometry is undone.
pub fn sarkar_embed<T: Real>(t: &Dendrogram, edge_length: T) -> Result<SarkarLayout<T>> {
    if !(edge_length > T::zero() && edge_length.is_finite()) {
        return Err(Error::InvalidArgument(
            "edge length must be positive".into(),
        ));
    }
    let n = t.n_leaves();
    let depths = t.depths();
    let max_depth = depths.iter().copied().max().unwrap_or(0);
    let limit = lit::<T>(2.0) * max_norm::<T>().atanh();
    let too_large = || Error::ScaleTooLarge {
        scale: edge_length.to_f64().unwrap_or(f64::NAN),
        max_scale: (limit / count::<T>(max_depth.max(1)))
            .to_f64()
            .unwrap_or(f64::NAN),
    };

    let r = (edge_length / lit(2.0)).tanh();
    let zero = Complex::new(T::zero(), T::zero());
    let mut pos = vec![zero; t.n_nodes()];
    let third = lit::<T>(2.0) * T::PI() / lit(3.0);
    // parents before children: internal ids decrease toward the leaves
    for node in (n..t.n_nodes()).rev() {
        let [a, b] = t.children(node).expect("internal node");
        let p = pos[node];
        match t.parent(node) {
            None => {
                pos[a] = Complex::new(r, T::zero());
                pos[b] = Complex::new(-r, T::zero());
            }
            Some(up) => {
                let parent_dir = mobius_to_origin(pos[up], p).arg();
                for (slot, child) in [a, b].into_iter().enumerate() {
                    let phi = parent_dir + third * count::<T>(slot + 1);
                    pos[child] = mobius_from_origin(Complex::from_polar(r, phi), p);
                }
            }
        }
    }
    let nodes = pos
        .iter()
        .map(|c| DiskPoint::new(c.re, c.im).map_err(|_| too_large()))
        .collect::<Result<Vec<_>>>()?;
    let leaves = Embedding::from_points(nodes[..n].to_vec())?;
    Ok(SarkarLayout { nodes, leaves })
}

/// Isometry sending `p` to the origin.
fn mobius_to_origin<T: Real>(z: Complex<T>, p: Complex<T>) -> Complex<T> {
    let one = Complex::new(T::one(), T::zero());
    (z - p) / (one - p.conj() * z)
}

/// Inverse of [`mobius_to_origin`].
fn mobius_from_origin<T: Real>(z: Complex<T>, p: Complex<T>) -> Complex<T> {
    let one = Complex::new(T::one(), T::zero());
    (z + p) / (one + p.conj() * z)
}

/// Tree distance (edge count) between two nodes.
pub fn tree_distance(t: &Dendrogram, a: usize, b: usize) -> usize {
    let depth = t.depths();
    let (mut x, mut y) = (a, b);
    while x != y {
        if x < y {
            x = t.parent(x).expect("non-root node");
        } else {
            y = t.parent(y).expect("non-root node");
        }
    }
    depth[a] + depth[b] - 2 * depth[x]
}

/// Hyperbolic depth of each node of a layout.
pub fn node_depths<T: Real>(layout: &SarkarLayout<T>) -> Vec<T> {
    layout.nodes.iter().map(dist_to_origin).collect()
}
