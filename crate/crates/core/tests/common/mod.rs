#![allow(dead_code)]

use hyphc::geometry::DiskPoint;
use hyphc::{Dendrogram, SimilarityMatrix};
use rand::Rng;

#[derive(Clone, Debug)]
pub enum Node {
    Leaf(usize),
    Join(Box<Node>, Box<Node>),
}

/// Every rooted binary tree on leaves `0..n` ((2n - 3)!! of them), built by
/// inserting leaf `k` above every node of every tree on `0..k`.
pub fn enumerate_trees(n: usize) -> Vec<Dendrogram> {
    assert!((2..=8).contains(&n));
    let mut trees = vec![Node::Join(Box::new(Node::Leaf(0)), Box::new(Node::Leaf(1)))];
    for k in 2..n {
        let mut next = Vec::new();
        for t in &trees {
            let slots = count_nodes(t);
            for s in 0..slots {
                next.push(insert_above(t, s, k, &mut 0));
            }
        }
        trees = next;
    }
    trees.iter().map(|t| to_dendrogram(t, n)).collect()
}

fn count_nodes(t: &Node) -> usize {
    match t {
        Node::Leaf(_) => 1,
        Node::Join(a, b) => 1 + count_nodes(a) + count_nodes(b),
    }
}

fn insert_above(t: &Node, slot: usize, leaf: usize, seen: &mut usize) -> Node {
    let here = *seen;
    *seen += 1;
    let rebuilt = match t {
        Node::Leaf(i) => Node::Leaf(*i),
        Node::Join(a, b) => {
            let a = insert_above(a, slot, leaf, seen);
            let b = insert_above(b, slot, leaf, seen);
            Node::Join(Box::new(a), Box::new(b))
        }
    };
    if here == slot {
        Node::Join(Box::new(rebuilt), Box::new(Node::Leaf(leaf)))
    } else {
        rebuilt
    }
}

pub fn to_dendrogram(t: &Node, n: usize) -> Dendrogram {
    fn walk(t: &Node, n: usize, merges: &mut Vec<(usize, usize)>) -> usize {
        match t {
            Node::Leaf(i) => *i,
            Node::Join(a, b) => {
                let a = walk(a, n, merges);
                let b = walk(b, n, merges);
                merges.push((a, b));
                n + merges.len() - 1
            }
        }
    }
    let mut merges = Vec::new();
    walk(t, n, &mut merges);
    Dendrogram::from_merges(n, &merges).unwrap()
}

pub fn double_factorial(k: usize) -> usize {
    (1..=k).rev().step_by(2).product()
}

pub fn random_similarity<R: Rng>(n: usize, rng: &mut R) -> SimilarityMatrix<f64> {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let w = rng.gen::<f64>();
            v[i * n + j] = w;
            v[j * n + i] = w;
        }
    }
    SimilarityMatrix::new(n, v).unwrap()
}

/// Shifted cosine similarity of a random point cloud.
pub fn random_cloud_similarity<R: Rng>(n: usize, dim: usize, rng: &mut R) -> SimilarityMatrix<f64> {
    let pts: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.gen::<f64>() - 0.5).collect())
        .collect();
    SimilarityMatrix::from_fn(n, |i, j| {
        if i == j {
            return 0.0;
        }
        let dot: f64 = pts[i].iter().zip(&pts[j]).map(|(a, b)| a * b).sum();
        let na: f64 = pts[i].iter().map(|a| a * a).sum::<f64>().sqrt();
        let nb: f64 = pts[j].iter().map(|a| a * a).sum::<f64>().sqrt();
        0.5 * (1.0 + dot / (na * nb))
    })
}

pub fn random_point<R: Rng>(rng: &mut R, max_r: f64) -> DiskPoint<f64> {
    let r = max_r * rng.gen::<f64>().sqrt();
    DiskPoint::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU)).unwrap()
}

/// Single-linkage tree from Kruskal's algorithm on the maximum spanning
/// tree: edges in decreasing similarity join components.
pub fn kruskal_tree(w: &SimilarityMatrix<f64>) -> Dendrogram {
    let n = w.n();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            edges.push((w.get(i, j), i, j));
        }
    }
    edges.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut comp: Vec<usize> = (0..n).collect();
    let mut node: Vec<usize> = (0..n).collect();
    let mut merges = Vec::new();
    for (_, i, j) in edges {
        let (ci, cj) = (comp[i], comp[j]);
        if ci == cj {
            continue;
        }
        merges.push((node[ci], node[cj]));
        for c in comp.iter_mut() {
            if *c == cj {
                *c = ci;
            }
        }
        node[ci] = n + merges.len() - 1;
    }
    Dendrogram::from_merges(n, &merges).unwrap()
}

/// Central differences of `f` at `x` with step `h`.
pub fn central_diff(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut p = x.to_vec();
    for k in 0..x.len() {
        p[k] = x[k] + h;
        let up = f(&p);
        p[k] = x[k] - h;
        let down = f(&p);
        p[k] = x[k];
        g[k] = (up - down) / (2.0 * h);
    }
    g
}

/// `|a - b| / max(|a|, |b|)` over whole vectors.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = na.max(nb);
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}
