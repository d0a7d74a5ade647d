//! Discrete baselines: agglomerative linkage on similarities and bisecting
//! k-means by local search.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::{count, lit, Real};
use crate::trees::{Dendrogram, SimilarityMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Linkage {
    /// Merge the pair with the largest maximum cross similarity.
    Single,
    /// Largest mean cross similarity.
    Average,
    /// Largest minimum cross similarity.
    Complete,
    /// Smallest Ward variance increase on distances `sqrt(2 (1 - w))`.
    Ward,
}

impl Linkage {
    pub fn name(self) -> &'static str {
        match self {
            Linkage::Single => "sl",
            Linkage::Average => "al",
            Linkage::Complete => "cl",
            Linkage::Ward => "wl",
        }
    }
}

/// Greedy agglomerative clustering. Ties go to the pair with the smallest
/// `(cluster id, cluster id)`, where merged clusters get ids `n, n + 1, ...`.
pub fn linkage<T: Real>(w: &SimilarityMatrix<T>, method: Linkage) -> Result<Dendrogram> {
    let n = w.n();
    if n < 2 {
        return Err(Error::TooFewPoints { min: 2, got: n });
    }
    let two = lit::<T>(2.0);
    // Pairwise affinities between active clusters, indexed by slot. Ward
    // works on squared distances and minimizes; the others maximize.
    let mut s: Vec<T> = match method {
        Linkage::Ward => w
            .as_slice()
            .iter()
            .map(|&v| (two * (T::one() - v)).max(T::zero()))
            .collect(),
        _ => w.as_slice().to_vec(),
    };
    let better = |a: T, b: T| {
        if method == Linkage::Ward {
            a < b
        } else {
            a > b
        }
    };
    let mut id: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; n];
    let mut active: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n - 1);

    while active.len() > 1 {
        let mut best: Option<(T, (usize, usize), usize, usize)> = None;
        for (x, &a) in active.iter().enumerate() {
            for &b in &active[x + 1..] {
                let v = s[a * n + b];
                let key = (id[a].min(id[b]), id[a].max(id[b]));
                let take = match best {
                    None => true,
                    Some((bv, bk, _, _)) => better(v, bv) || (v == bv && key < bk),
                };
                if take {
                    best = Some((v, key, a, b));
                }
            }
        }
        let (dab, _, a, b) = best.expect("at least two active clusters");
        let (na, nb) = (count::<T>(size[a]), count::<T>(size[b]));
        for &k in &active {
            if k == a || k == b {
                continue;
            }
            let (sa, sb) = (s[a * n + k], s[b * n + k]);
            let v = match method {
                Linkage::Single => sa.max(sb),
                Linkage::Complete => sa.min(sb),
                Linkage::Average => (na * sa + nb * sb) / (na + nb),
                Linkage::Ward => {
                    let nk = count::<T>(size[k]);
                    ((na + nk) * sa + (nb + nk) * sb - nk * dab) / (na + nb + nk)
                }
            };
            s[a * n + k] = v;
            s[k * n + a] = v;
        }
        merges.push((id[a], id[b]));
        id[a] = n + merges.len() - 1;
        size[a] += size[b];
        active.retain(|&k| k != b);
    }
    Dendrogram::from_merges(n, &merges)
}

/// Default number of local-search restarts per split.
pub const DEFAULT_RESTARTS: usize = 5;

/// Size-normalized within-cluster similarity of a two-way split,
/// `S_0 / |C_0| + S_1 / |C_1|` with `S_c` the pair sum inside cluster `c`.
/// This is the 2-means objective written in terms of similarities.
fn split_score<T: Real>(w: &SimilarityMatrix<T>, side: &[bool], members: &[usize]) -> T {
    let mut within = [T::zero(); 2];
    let mut size = [0usize; 2];
    for (x, &p) in members.iter().enumerate() {
        let c = usize::from(side[x]);
        size[c] += 1;
        for (y, &q) in members.iter().enumerate().skip(x + 1) {
            if side[y] == side[x] {
                within[c] += w.get(p, q);
            }
        }
    }
    (0..2)
        .filter(|&c| size[c] > 0)
        .fold(T::zero(), |acc, c| acc + within[c] / count::<T>(size[c]))
}

/// Two-way split of `members` by local search from a random balanced start;
/// returns the side of every member and the split score.
fn local_search<T: Real>(
    w: &SimilarityMatrix<T>,
    members: &[usize],
    rng: &mut ChaCha8Rng,
) -> (Vec<bool>, T) {
    let m = members.len();
    let mut perm: Vec<usize> = (0..m).collect();
    perm.shuffle(rng);
    let mut side = vec![false; m];
    for &x in &perm[..m / 2] {
        side[x] = true;
    }
    let mut size = [m - m / 2, m / 2];
    let mut within = [T::zero(); 2];
    for x in 0..m {
        for y in x + 1..m {
            if side[x] == side[y] {
                within[usize::from(side[x])] += w.get(members[x], members[y]);
            }
        }
    }
    let score = |within: &[T; 2], size: &[usize; 2]| {
        within[0] / count::<T>(size[0]) + within[1] / count::<T>(size[1])
    };
    loop {
        let mut moved = false;
        for x in 0..m {
            let own = usize::from(side[x]);
            if size[own] == 1 {
                continue;
            }
            let mut to = [T::zero(); 2];
            for y in 0..m {
                if y != x {
                    to[usize::from(side[y])] += w.get(members[x], members[y]);
                }
            }
            let other = 1 - own;
            let mut next_within = within;
            next_within[own] -= to[own];
            next_within[other] += to[other];
            let mut next_size = size;
            next_size[own] -= 1;
            next_size[other] += 1;
            let (old, new) = (score(&within, &size), score(&next_within, &next_size));
            // strict improvement beyond rounding noise, so the search terminates
            if new - old > T::epsilon() * lit(64.0) * (old.abs() + T::one()) {
                side[x] = !side[x];
                within = next_within;
                size = next_size;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    let s = split_score(w, &side, members);
    (side, s)
}

/// Top-down clustering: every cluster is split in two by the best of
/// `restarts` local searches, down to singletons.
pub fn bisecting_kmeans<T: Real>(
    w: &SimilarityMatrix<T>,
    seed: u64,
    restarts: usize,
) -> Result<Dendrogram> {
    let n = w.n();
    if n < 2 {
        return Err(Error::TooFewPoints { min: 2, got: n });
    }
    if restarts == 0 {
        return Err(Error::InvalidArgument("restarts must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut merges = Vec::with_capacity(n - 1);
    let all: Vec<usize> = (0..n).collect();
    let root = split(w, &all, restarts, &mut rng, &mut merges);
    debug_assert_eq!(root, 2 * n - 2);
    Dendrogram::from_merges(n, &merges)
}

fn split<T: Real>(
    w: &SimilarityMatrix<T>,
    members: &[usize],
    restarts: usize,
    rng: &mut ChaCha8Rng,
    merges: &mut Vec<(usize, usize)>,
) -> usize {
    if members.len() == 1 {
        return members[0];
    }
    let mut best: Option<(Vec<bool>, T)> = None;
    for _ in 0..restarts {
        let (side, score) = local_search(w, members, rng);
        if best.as_ref().is_none_or(|(_, b)| score > *b) {
            best = Some((side, score));
        }
    }
    let (side, _) = best.expect("at least one restart");
    let left: Vec<usize> = members
        .iter()
        .zip(&side)
        .filter(|(_, &s)| !s)
        .map(|(&p, _)| p)
        .collect();
    let right: Vec<usize> = members
        .iter()
        .zip(&side)
        .filter(|(_, &s)| s)
        .map(|(&p, _)| p)
        .collect();
    let a = split(w, &left, restarts, rng, merges);
    let b = split(w, &right, restarts, rng, merges);
    merges.push((a, b));
    w.n() + merges.len() - 1
}
