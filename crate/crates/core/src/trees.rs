//! Rooted binary dendrograms, similarity matrices and the discrete costs
//! defined on them.
//!
//! Leaves are `0..n`. Internal node `n + k` is the `k`-th merge, and both of
//! its children have smaller ids, so the root is always `2n - 2` and
//! iterating internal nodes by id visits children before parents.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::{count, Weight};

const NO_PARENT: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dendrogram {
    n: usize,
    children: Vec<[usize; 2]>,
    parent: Vec<usize>,
}

impl Dendrogram {
    /// Builds a tree from a merge list. Entry `k` joins two existing nodes
    /// (leaves or earlier merges) into node `n + k`.
    pub fn from_merges(n: usize, merges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidTree(
                "a dendrogram needs at least one leaf".into(),
            ));
        }
        if merges.len() != n - 1 {
            return Err(Error::InvalidTree(format!(
                "{} leaves need {} merges, got {}",
                n,
                n - 1,
                merges.len()
            )));
        }
        let mut parent = vec![NO_PARENT; 2 * n - 1];
        let mut children = Vec::with_capacity(n - 1);
        for (k, &(a, b)) in merges.iter().enumerate() {
            let id = n + k;
            for c in [a, b] {
                if c >= id {
                    return Err(Error::InvalidTree(format!(
                        "merge {k} refers to node {c}, which does not exist yet"
                    )));
                }
                if parent[c] != NO_PARENT {
                    return Err(Error::InvalidTree(format!("node {c} is merged twice")));
                }
            }
            if a == b {
                return Err(Error::InvalidTree(format!(
                    "merge {k} joins node {a} with itself"
                )));
            }
            parent[a] = id;
            parent[b] = id;
            children.push([a, b]);
        }
        Ok(Self {
            n,
            children,
            parent,
        })
    }

    /// Builds a tree from arbitrary node ids given the root and a child map;
    /// ids are renumbered into merge order.
    fn from_child_map(n: usize, root: usize, kids: &HashMap<usize, [usize; 2]>) -> Result<Self> {
        let mut merges = Vec::with_capacity(n.saturating_sub(1));
        let mut new_id = HashMap::new();
        // iterative post-order
        let mut stack = vec![(root, false)];
        while let Some((node, expanded)) = stack.pop() {
            if node < n {
                new_id.insert(node, node);
                continue;
            }
            let [l, r] = *kids.get(&node).ok_or_else(|| {
                Error::InvalidTree(format!("internal node {node} has no children"))
            })?;
            if expanded {
                let a = new_id[&l];
                let b = new_id[&r];
                new_id.insert(node, n + merges.len());
                merges.push((a, b));
            } else {
                stack.push((node, true));
                stack.push((r, false));
                stack.push((l, false));
            }
        }
        Self::from_merges(n, &merges)
    }

    /// Uniformly random labeled rooted binary tree, built by inserting
    /// leaves one at a time onto a uniformly chosen edge (or above the root).
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        assert!(n >= 1, "a dendrogram needs at least one leaf");
        let mut parent: HashMap<usize, usize> = HashMap::new();
        let mut kids: HashMap<usize, [usize; 2]> = HashMap::new();
        let mut root = 0;
        let mut next_internal = n;
        let mut nodes = vec![0usize];
        for leaf in 1..n {
            let target = nodes[rng.gen_range(0..nodes.len())];
            let joint = next_internal;
            next_internal += 1;
            match parent.get(&target).copied() {
                Some(p) => {
                    let slot = kids.get_mut(&p).unwrap();
                    if slot[0] == target {
                        slot[0] = joint;
                    } else {
                        slot[1] = joint;
                    }
                    parent.insert(joint, p);
                }
                None => root = joint,
            }
            let pair = if rng.gen_bool(0.5) {
                [target, leaf]
            } else {
                [leaf, target]
            };
            kids.insert(joint, pair);
            parent.insert(target, joint);
            parent.insert(leaf, joint);
            nodes.push(leaf);
            nodes.push(joint);
        }
        Self::from_child_map(n, root, &kids).expect("insertion always yields a valid tree")
    }

    /// Left-deep tree `(((0,1),2),...)`.
    pub fn caterpillar(n: usize) -> Self {
        assert!(n >= 1, "a dendrogram needs at least one leaf");
        let merges: Vec<_> = (1..n)
            .map(|k| (if k == 1 { 0 } else { n + k - 2 }, k))
            .collect();
        Self::from_merges(n, &merges).unwrap()
    }

    pub fn n_leaves(&self) -> usize {
        self.n
    }

    pub fn n_nodes(&self) -> usize {
        2 * self.n - 1
    }

    pub fn root(&self) -> usize {
        2 * self.n - 2
    }

    pub fn is_leaf(&self, node: usize) -> bool {
        node < self.n
    }

    /// Children of an internal node.
    pub fn children(&self, node: usize) -> Option<[usize; 2]> {
        node.checked_sub(self.n)
            .and_then(|k| self.children.get(k))
            .copied()
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        match self.parent.get(node) {
            Some(&p) if p != NO_PARENT => Some(p),
            _ => None,
        }
    }

    pub fn to_merges(&self) -> Vec<(usize, usize)> {
        self.children.iter().map(|&[a, b]| (a, b)).collect()
    }

    /// Same tree with the children of every internal node swapped.
    pub fn mirror(&self) -> Self {
        let merges: Vec<_> = self.children.iter().map(|&[a, b]| (b, a)).collect();
        Self::from_merges(self.n, &merges).unwrap()
    }

    /// Relabels leaf `i` as `perm[i]`.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.n)?;
        let map = |c: usize| if c < self.n { perm[c] } else { c };
        let merges: Vec<_> = self
            .children
            .iter()
            .map(|&[a, b]| (map(a), map(b)))
            .collect();
        Self::from_merges(self.n, &merges)
    }

    /// Edge count from the root, per node.
    pub fn depths(&self) -> Vec<usize> {
        let mut depth = vec![0; self.n_nodes()];
        for k in (0..self.children.len()).rev() {
            let d = depth[self.n + k] + 1;
            for c in self.children[k] {
                depth[c] = d;
            }
        }
        depth
    }

    /// Number of leaves below each node.
    pub fn subtree_leaf_counts(&self) -> Vec<usize> {
        let mut counts = vec![1; self.n_nodes()];
        for (k, &[a, b]) in self.children.iter().enumerate() {
            counts[self.n + k] = counts[a] + counts[b];
        }
        counts
    }

    /// Leaves in left-to-right order, and for every node the half-open
    /// range of that order covering its subtree.
    pub fn leaf_order(&self) -> (Vec<usize>, Vec<(usize, usize)>) {
        let mut order = Vec::with_capacity(self.n);
        let mut span = vec![(0, 0); self.n_nodes()];
        let mut stack = vec![(self.root(), false)];
        while let Some((node, done)) = stack.pop() {
            if node < self.n {
                span[node] = (order.len(), order.len() + 1);
                order.push(node);
            } else if done {
                let [a, b] = self.children[node - self.n];
                span[node] = (span[a].0, span[b].1);
            } else {
                let [a, b] = self.children[node - self.n];
                stack.push((node, true));
                stack.push((b, false));
                stack.push((a, false));
            }
        }
        (order, span)
    }

    /// Leaves under `node`, in left-to-right order.
    pub fn leaves_under(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(v) = stack.pop() {
            match self.children(v) {
                Some([a, b]) => {
                    stack.push(b);
                    stack.push(a);
                }
                None => out.push(v),
            }
        }
        out
    }

    fn check_leaf(&self, i: usize) -> Result<()> {
        if i >= self.n {
            Err(Error::LeafOutOfRange {
                index: i,
                n: self.n,
            })
        } else {
            Ok(())
        }
    }

    /// Lowest common ancestor of two distinct leaves.
    pub fn lca(&self, i: usize, j: usize) -> Result<usize> {
        self.check_leaf(i)?;
        self.check_leaf(j)?;
        if i == j {
            return Err(Error::SameLeaf(i));
        }
        // Ancestors always have larger ids than their descendants.
        let (mut a, mut b) = (i, j);
        while a != b {
            if a < b {
                a = self.parent[a];
            } else {
                b = self.parent[b];
            }
        }
        Ok(a)
    }

    /// All pairwise LCAs, row-major `n x n` (diagonal holds the leaf itself).
    pub fn lca_table(&self) -> Vec<u32> {
        let n = self.n;
        let mut table = vec![0u32; n * n];
        for i in 0..n {
            table[i * n + i] = i as u32;
        }
        let (order, span) = self.leaf_order();
        for (k, &[a, b]) in self.children.iter().enumerate() {
            let node = (n + k) as u32;
            for &x in &order[span[a].0..span[a].1] {
                for &y in &order[span[b].0..span[b].1] {
                    table[x * n + y] = node;
                    table[y * n + x] = node;
                }
            }
        }
        table
    }

    /// Canonical form: pre-order listing with children ordered by their
    /// smallest leaf; `usize::MAX` marks an internal node.
    fn canonical(&self) -> Vec<usize> {
        let mut min_leaf: Vec<usize> = (0..self.n_nodes()).collect();
        for (k, &[a, b]) in self.children.iter().enumerate() {
            min_leaf[self.n + k] = min_leaf[a].min(min_leaf[b]);
        }
        let mut out = Vec::with_capacity(self.n_nodes());
        let mut stack = vec![self.root()];
        while let Some(v) = stack.pop() {
            match self.children(v) {
                Some([a, b]) => {
                    out.push(usize::MAX);
                    let (first, second) = if min_leaf[a] < min_leaf[b] {
                        (a, b)
                    } else {
                        (b, a)
                    };
                    stack.push(second);
                    stack.push(first);
                }
                None => out.push(v),
            }
        }
        out
    }

    /// Equality as rooted trees with labeled leaves, ignoring child order.
    pub fn isomorphic(&self, other: &Dendrogram) -> bool {
        self.n == other.n && self.canonical() == other.canonical()
    }

    /// Newick text; leaves are named by index unless `names` is given.
    pub fn to_newick(&self, names: Option<&[String]>) -> Result<String> {
        if let Some(names) = names {
            if names.len() != self.n {
                return Err(Error::SizeMismatch {
                    what: "leaf names",
                    got: names.len(),
                    expected: self.n,
                });
            }
        }
        let mut out = String::new();
        let mut stack = vec![Visit::Node(self.root())];
        while let Some(v) = stack.pop() {
            match v {
                Visit::Node(node) if node < self.n => match names {
                    Some(names) => out.push_str(&newick_label(&names[node])),
                    None => write!(out, "{node}").unwrap(),
                },
                Visit::Node(node) => {
                    let [a, b] = self.children[node - self.n];
                    out.push('(');
                    stack.push(Visit::Text(")"));
                    stack.push(Visit::Node(b));
                    stack.push(Visit::Text(","));
                    stack.push(Visit::Node(a));
                }
                Visit::Text(t) => out.push_str(t),
            }
        }
        out.push(';');
        Ok(out)
    }

    /// Parses a binary Newick tree. Without `names`, leaf labels must be the
    /// indices `0..n`. Branch lengths and internal labels are ignored.
    pub fn from_newick(text: &str, names: Option<&[String]>) -> Result<Self> {
        let mut parser = NewickParser {
            chars: text.trim().chars().collect(),
            pos: 0,
            leaves: Vec::new(),
            kids: HashMap::new(),
            next: 0,
        };
        let root = parser.subtree()?;
        parser.skip_ws();
        if parser.peek() != Some(';') {
            return Err(Error::Newick(format!(
                "expected ';' at offset {}",
                parser.pos
            )));
        }
        parser.pos += 1;
        parser.skip_ws();
        if parser.pos != parser.chars.len() {
            return Err(Error::Newick("trailing text after ';'".into()));
        }
        let n = parser.leaves.len();
        let index_of: HashMap<&str, usize> = match names {
            Some(names) => {
                if names.len() != n {
                    return Err(Error::SizeMismatch {
                        what: "leaf names",
                        got: names.len(),
                        expected: n,
                    });
                }
                names
                    .iter()
                    .enumerate()
                    .map(|(i, s)| (s.as_str(), i))
                    .collect()
            }
            None => HashMap::new(),
        };
        let mut seen = vec![false; n];
        let mut leaf_index = HashMap::new();
        for (tmp, label) in &parser.leaves {
            let idx = match names {
                Some(_) => *index_of
                    .get(label.as_str())
                    .ok_or_else(|| Error::Newick(format!("unknown leaf `{label}`")))?,
                None => label
                    .parse::<usize>()
                    .map_err(|_| Error::Newick(format!("leaf `{label}` is not an index")))?,
            };
            if idx >= n || seen[idx] {
                return Err(Error::Newick(format!(
                    "leaf `{label}` is out of range or repeated"
                )));
            }
            seen[idx] = true;
            leaf_index.insert(*tmp, idx);
        }
        // temporary ids: leaves get their index, internal nodes n + k
        let remap = |id: usize| leaf_index.get(&id).copied().unwrap_or(n + id);
        let kids: HashMap<usize, [usize; 2]> = parser
            .kids
            .iter()
            .map(|(&k, &[a, b])| (n + k, [remap(a), remap(b)]))
            .collect();
        let root = remap(root);
        Self::from_child_map(n, root, &kids)
    }
}

enum Visit {
    Node(usize),
    Text(&'static str),
}

fn newick_label(name: &str) -> String {
    if name.chars().any(|c| "()[]:;,' \t\n".contains(c)) {
        format!("'{}'", name.replace('\'', "''"))
    } else {
        name.to_string()
    }
}

struct NewickParser {
    chars: Vec<char>,
    pos: usize,
    leaves: Vec<(usize, String)>,
    kids: HashMap<usize, [usize; 2]>,
    next: usize,
}

impl NewickParser {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn fresh(&mut self) -> usize {
        self.next += 1;
        self.next - 1
    }

    fn label(&mut self) -> Result<String> {
        self.skip_ws();
        let mut s = String::new();
        if self.peek() == Some('\'') {
            self.pos += 1;
            loop {
                match self.peek() {
                    None => return Err(Error::Newick("unterminated quoted label".into())),
                    Some('\'') if self.chars.get(self.pos + 1) == Some(&'\'') => {
                        s.push('\'');
                        self.pos += 2;
                    }
                    Some('\'') => {
                        self.pos += 1;
                        break;
                    }
                    Some(c) => {
                        s.push(c);
                        self.pos += 1;
                    }
                }
            }
        } else {
            while let Some(c) = self.peek() {
                if "(),:;".contains(c) || c.is_whitespace() {
                    break;
                }
                s.push(c);
                self.pos += 1;
            }
        }
        self.skip_ws();
        if self.peek() == Some(':') {
            self.pos += 1;
            self.skip_ws();
            while self
                .peek()
                .is_some_and(|c| c.is_ascii_digit() || "+-.eE".contains(c))
            {
                self.pos += 1;
            }
        }
        Ok(s)
    }

    fn subtree(&mut self) -> Result<usize> {
        self.skip_ws();
        if self.peek() == Some('(') {
            self.pos += 1;
            let a = self.subtree()?;
            self.skip_ws();
            if self.peek() != Some(',') {
                return Err(Error::Newick(format!(
                    "expected ',' at offset {}",
                    self.pos
                )));
            }
            self.pos += 1;
            let b = self.subtree()?;
            self.skip_ws();
            match self.peek() {
                Some(')') => self.pos += 1,
                Some(',') => return Err(Error::Newick("only binary trees are supported".into())),
                _ => {
                    return Err(Error::Newick(format!(
                        "expected ')' at offset {}",
                        self.pos
                    )))
                }
            }
            self.label()?;
            let id = self.fresh();
            self.kids.insert(id, [a, b]);
            Ok(id)
        } else {
            let name = self.label()?;
            if name.is_empty() {
                return Err(Error::Newick(format!(
                    "empty leaf label at offset {}",
                    self.pos
                )));
            }
            let id = self.fresh();
            self.leaves.push((id, name));
            Ok(id)
        }
    }
}

fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::SizeMismatch {
            what: "permutation",
            got: perm.len(),
            expected: n,
        });
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidArgument("not a permutation".into()));
        }
    }
    Ok(())
}

/// Symmetric pairwise similarities. The diagonal is stored but ignored by
/// every cost.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix<W> {
    n: usize,
    w: Vec<W>,
}

impl<W: Weight> SimilarityMatrix<W> {
    /// Wraps a row-major matrix, which must be exactly symmetric.
    pub fn new(n: usize, w: Vec<W>) -> Result<Self> {
        if w.len() != n * n {
            return Err(Error::SizeMismatch {
                what: "similarity matrix",
                got: w.len(),
                expected: n * n,
            });
        }
        for i in 0..n {
            for j in 0..i {
                if w[i * n + j] != w[j * n + i] {
                    return Err(Error::InvalidArgument(format!(
                        "similarity matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { n, w })
    }

    /// Averages the matrix with its transpose.
    pub fn symmetrized(n: usize, mut w: Vec<W>) -> Result<Self> {
        if w.len() != n * n {
            return Err(Error::SizeMismatch {
                what: "similarity matrix",
                got: w.len(),
                expected: n * n,
            });
        }
        let two = W::one() + W::one();
        for i in 0..n {
            for j in 0..i {
                let avg = (w[i * n + j] + w[j * n + i]) / two;
                w[i * n + j] = avg;
                w[j * n + i] = avg;
            }
        }
        Ok(Self { n, w })
    }

    /// Builds the matrix from `f(i, j)` evaluated for `i < j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> W) -> Self {
        let mut w = vec![W::zero(); n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = f(i, j);
                w[i * n + j] = v;
                w[j * n + i] = v;
            }
        }
        Self { n, w }
    }

    pub fn constant(n: usize, value: W) -> Self {
        Self::from_fn(n, |_, _| value)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> W {
        self.w[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[W] {
        &self.w[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[W] {
        &self.w
    }

    /// `sum_{i<j} w_ij`.
    pub fn pair_sum(&self) -> W {
        let mut s = W::zero();
        for i in 0..self.n {
            for j in i + 1..self.n {
                s += self.get(i, j);
            }
        }
        s
    }

    pub fn scaled(&self, c: W) -> Self {
        Self {
            n: self.n,
            w: self.w.iter().map(|&v| v * c).collect(),
        }
    }

    /// Matrix whose entry `(perm[i], perm[j])` is `w_ij`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.n)?;
        let n = self.n;
        let mut w = vec![W::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                w[perm[i] * n + perm[j]] = self.get(i, j);
            }
        }
        Ok(Self { n, w })
    }

    pub fn map<V: Weight>(&self, f: impl Fn(W) -> V) -> SimilarityMatrix<V> {
        SimilarityMatrix {
            n: self.n,
            w: self.w.iter().map(|&v| f(v)).collect(),
        }
    }
}

fn check_sizes<W>(t: &Dendrogram, w: &SimilarityMatrix<W>) -> Result<()> {
    if t.n != w.n {
        return Err(Error::SizeMismatch {
            what: "similarity matrix",
            got: w.n,
            expected: t.n,
        });
    }
    Ok(())
}

/// Sums per-chunk partial results in chunk order, so the result does not
/// depend on the number of worker threads.
pub(crate) fn ordered_sum<W: Weight>(parts: Vec<W>) -> W {
    parts.into_iter().fold(W::zero(), |acc, v| acc + v)
}

/// Dasgupta cost over unordered pairs: `sum_{i<j} w_ij |leaves(lca(i, j))|`.
pub fn dasgupta_cost<W: Weight>(t: &Dendrogram, w: &SimilarityMatrix<W>) -> Result<W> {
    check_sizes(t, w)?;
    let n = t.n;
    let counts = t.subtree_leaf_counts();
    let (order, span) = t.leaf_order();
    let parts: Vec<W> = t
        .children
        .par_iter()
        .enumerate()
        .map(|(k, &[a, b])| {
            let mut cross = W::zero();
            for &x in &order[span[a].0..span[a].1] {
                for &y in &order[span[b].0..span[b].1] {
                    cross += w.get(x, y);
                }
            }
            cross * count::<W>(counts[n + k])
        })
        .collect();
    Ok(ordered_sum(parts))
}

/// Cost in the ordered-pair convention, i.e. twice [`dasgupta_cost`].
pub fn ordered_pair_cost<W: Weight>(t: &Dendrogram, w: &SimilarityMatrix<W>) -> Result<W> {
    let c = dasgupta_cost(t, w)?;
    Ok(c + c)
}

/// Triplet form of the Dasgupta cost:
/// `sum_{i<j<k} [w_ij + w_ik + w_jk - w_ijk(T)] + 2 sum_{i<j} w_ij`, where
/// `w_ijk(T)` is the similarity of the pair whose LCA is deepest.
pub fn dasgupta_cost_triplet<W: Weight>(t: &Dendrogram, w: &SimilarityMatrix<W>) -> Result<W> {
    check_sizes(t, w)?;
    let n = t.n;
    let lca = t.lca_table();
    let depth = t.depths();
    let parts: Vec<W> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut s = W::zero();
            for j in i + 1..n {
                let dij = depth[lca[i * n + j] as usize];
                for k in j + 1..n {
                    let dik = depth[lca[i * n + k] as usize];
                    let djk = depth[lca[j * n + k] as usize];
                    let (wij, wik, wjk) = (w.get(i, j), w.get(i, k), w.get(j, k));
                    // exactly one of the three LCAs is strictly deepest
                    let deepest = if dij > dik && dij > djk {
                        wij
                    } else if dik > djk {
                        wik
                    } else {
                        wjk
                    };
                    s += wij + wik + wjk - deepest;
                }
            }
            s
        })
        .collect();
    let pairs = w.pair_sum();
    Ok(ordered_sum(parts) + pairs + pairs)
}

/// How [`cost_bounds`] enumerates triplets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundSampling {
    Exact,
    /// `count` uniform triplets per repeat, scaled up to the full triplet
    /// count and averaged over `repeats` seeds starting at `seed`.
    Sampled {
        count: usize,
        seed: u64,
        repeats: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostBounds<W> {
    pub lower: W,
    pub upper: W,
}

fn triplet_bounds<W: Weight>(w: &SimilarityMatrix<W>, i: usize, j: usize, k: usize) -> (W, W) {
    let (a, b, c) = (w.get(i, j), w.get(i, k), w.get(j, k));
    let s = [a + b, a + c, b + c];
    let mut lo = s[0];
    let mut hi = s[0];
    for &v in &s[1..] {
        if v < lo {
            lo = v;
        }
        if v > hi {
            hi = v;
        }
    }
    (lo, hi)
}

/// Lower and upper bounds on the Dasgupta cost of any tree, in the same
/// unordered convention as [`dasgupta_cost`].
pub fn cost_bounds<W: Weight>(
    w: &SimilarityMatrix<W>,
    sampling: BoundSampling,
) -> Result<CostBounds<W>> {
    let n = w.n;
    if n < 3 {
        return Err(Error::TooFewPoints { min: 3, got: n });
    }
    let pairs = w.pair_sum();
    let (lower, upper) = match sampling {
        BoundSampling::Exact => {
            let parts: Vec<(W, W)> = (0..n)
                .into_par_iter()
                .map(|i| {
                    let (mut lo, mut hi) = (W::zero(), W::zero());
                    for j in i + 1..n {
                        for k in j + 1..n {
                            let (l, h) = triplet_bounds(w, i, j, k);
                            lo += l;
                            hi += h;
                        }
                    }
                    (lo, hi)
                })
                .collect();
            parts
                .into_iter()
                .fold((W::zero(), W::zero()), |(a, b), (l, h)| (a + l, b + h))
        }
        BoundSampling::Sampled {
            count: m,
            seed,
            repeats,
        } => {
            if m == 0 || repeats == 0 {
                return Err(Error::InvalidArgument(
                    "sampled bounds need a positive count and repeat number".into(),
                ));
            }
            let total = count::<W>(n) * count::<W>(n - 1) * count::<W>(n - 2) / count::<W>(6);
            let factor = total / count::<W>(m) / count::<W>(repeats);
            let (mut lo, mut hi) = (W::zero(), W::zero());
            for r in 0..repeats {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
                for _ in 0..m {
                    let (l, h) = {
                        let idx = sample(&mut rng, n, 3);
                        triplet_bounds(w, idx.index(0), idx.index(1), idx.index(2))
                    };
                    lo += l;
                    hi += h;
                }
            }
            (lo * factor, hi * factor)
        }
    };
    Ok(CostBounds {
        lower: lower + pairs + pairs,
        upper: upper + pairs + pairs,
    })
}

/// Average over same-class leaf pairs of the fraction of leaves under their
/// LCA that belong to the same class.
pub fn dendrogram_purity(t: &Dendrogram, labels: &[usize]) -> Result<f64> {
    let n = t.n;
    if labels.len() != n {
        return Err(Error::SizeMismatch {
            what: "labels",
            got: labels.len(),
            expected: n,
        });
    }
    let n_classes = labels.iter().max().map_or(0, |&m| m + 1);
    let mut class_counts = vec![vec![0u64; n_classes]; t.n_nodes()];
    for (leaf, &c) in labels.iter().enumerate() {
        class_counts[leaf][c] = 1;
    }
    let sizes = t.subtree_leaf_counts();
    let mut total = 0.0;
    let mut pairs = 0u64;
    for (k, &[a, b]) in t.children.iter().enumerate() {
        let node = n + k;
        let mut merged = vec![0u64; n_classes];
        for c in 0..n_classes {
            let (ca, cb) = (class_counts[a][c], class_counts[b][c]);
            merged[c] = ca + cb;
            let p = ca * cb;
            if p > 0 {
                pairs += p;
                total += p as f64 * merged[c] as f64 / sizes[node] as f64;
            }
        }
        class_counts[node] = merged;
    }
    if pairs == 0 {
        return Err(Error::NoSameClassPair);
    }
    Ok(total / pairs as f64)
}
