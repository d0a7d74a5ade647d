//! The continuous relaxation of the triplet Dasgupta cost, triplet sampling
//! and the spread diagnostic.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{lca_depth, lca_depth_grad, max_norm, DiskPoint};
use crate::scalar::{lit, Real};
use crate::trees::SimilarityMatrix;

/// Leaf embedding: one disk point per leaf and the shared target norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding<T> {
    pub(crate) points: Vec<DiskPoint<T>>,
    pub(crate) scale: T,
}

impl<T: Real> Embedding<T> {
    pub fn new(points: Vec<DiskPoint<T>>, scale: T) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::TooFewPoints { min: 1, got: 0 });
        }
        if !(scale > T::zero() && scale <= max_norm::<T>()) {
            return Err(Error::InvalidArgument(format!(
                "scale {} must lie in (0, 1 - boundary margin]",
                scale.to_f64().unwrap_or(f64::NAN)
            )));
        }
        Ok(Self { points, scale })
    }

    /// Embedding whose nominal scale is the largest row norm.
    pub fn from_points(points: Vec<DiskPoint<T>>) -> Result<Self> {
        let scale = points.iter().map(DiskPoint::norm).fold(T::zero(), T::max);
        let scale = if scale > T::zero() { scale } else { lit(0.5) };
        Self::new(points, scale)
    }

    pub fn from_coords(coords: &[[T; 2]], scale: T) -> Result<Self> {
        let points = coords
            .iter()
            .map(|&[x, y]| DiskPoint::new(x, y))
            .collect::<Result<Vec<_>>>()?;
        Self::new(points, scale)
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[DiskPoint<T>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &DiskPoint<T> {
        &self.points[i]
    }

    pub fn scale(&self) -> T {
        self.scale
    }

    pub fn coords(&self) -> Vec<[T; 2]> {
        self.points.iter().map(DiskPoint::coords).collect()
    }

    /// Largest minus smallest row norm.
    pub fn norm_spread(&self) -> T {
        let (lo, hi) = self
            .points
            .iter()
            .map(DiskPoint::norm)
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), r| {
                (lo.min(r), hi.max(r))
            });
        hi - lo
    }

    /// LCA depths of all pairs, row-major `n x n` (zero diagonal).
    pub fn pair_depths(&self) -> Vec<T> {
        let n = self.n();
        let rows: Vec<Vec<T>> = (0..n)
            .into_par_iter()
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            T::zero()
                        } else {
                            lca_depth(&self.points[i], &self.points[j]).depth
                        }
                    })
                    .collect()
            })
            .collect();
        rows.concat()
    }
}

/// Softmax temperature; always positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Temperature<T>(T);

impl<T: Real> Temperature<T> {
    pub fn new(tau: T) -> Result<Self> {
        if tau > T::zero() && tau.is_finite() {
            Ok(Self(tau))
        } else {
            Err(Error::InvalidArgument(
                "temperature must be positive and finite".into(),
            ))
        }
    }

    pub fn tau(&self) -> T {
        self.0
    }
}

/// Default temperature.
pub const DEFAULT_TAU: f64 = 0.05;

/// Triplets `(i, j, k)` with `i < j` and `k` distinct from both.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripletBatch {
    triplets: Vec<[usize; 3]>,
}

impl TripletBatch {
    pub fn new(n: usize, triplets: Vec<[usize; 3]>) -> Result<Self> {
        for &[i, j, k] in &triplets {
            for idx in [i, j, k] {
                if idx >= n {
                    return Err(Error::LeafOutOfRange { index: idx, n });
                }
            }
            if i >= j || k == i || k == j {
                return Err(Error::InvalidArgument(format!(
                    "degenerate triplet ({i}, {j}, {k})"
                )));
            }
        }
        Ok(Self { triplets })
    }

    pub fn triplets(&self) -> &[[usize; 3]] {
        &self.triplets
    }

    pub fn len(&self) -> usize {
        self.triplets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }

    /// Consecutive sub-batches of at most `size` triplets.
    pub fn chunks(&self, size: usize) -> impl Iterator<Item = TripletBatch> + '_ {
        self.triplets.chunks(size.max(1)).map(|c| TripletBatch {
            triplets: c.to_vec(),
        })
    }

    pub fn shuffled<R: Rng + ?Sized>(&self, rng: &mut R) -> Self {
        use rand::seq::SliceRandom;
        let mut triplets = self.triplets.clone();
        triplets.shuffle(rng);
        Self { triplets }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TripletStrategy {
    /// Every unordered triplet once.
    All,
    /// Every unordered pair once, with a uniformly drawn third leaf.
    Quadratic { seed: u64 },
    /// `m` triplets from uniformly drawn pairs and third leaves.
    FixedCount { m: usize, seed: u64 },
}

pub fn sample_triplets(n: usize, strategy: TripletStrategy) -> Result<TripletBatch> {
    if n < 3 {
        return Err(Error::TooFewPoints { min: 3, got: n });
    }
    let third = |rng: &mut ChaCha8Rng, i: usize, j: usize| {
        // uniform over the n - 2 leaves other than i < j
        let mut k = rng.gen_range(0..n - 2);
        if k >= i {
            k += 1;
        }
        if k >= j {
            k += 1;
        }
        k
    };
    let triplets = match strategy {
        TripletStrategy::All => {
            let mut t = Vec::with_capacity(n * (n - 1) * (n - 2) / 6);
            for i in 0..n {
                for j in i + 1..n {
                    for k in j + 1..n {
                        t.push([i, j, k]);
                    }
                }
            }
            t
        }
        TripletStrategy::Quadratic { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut t = Vec::with_capacity(n * (n - 1) / 2);
            for i in 0..n {
                for j in i + 1..n {
                    t.push([i, j, third(&mut rng, i, j)]);
                }
            }
            t
        }
        TripletStrategy::FixedCount { m, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..m)
                .map(|_| {
                    let pair = sample(&mut rng, n, 2);
                    let (a, b) = (pair.index(0), pair.index(1));
                    let (i, j) = if a < b { (a, b) } else { (b, a) };
                    [i, j, third(&mut rng, i, j)]
                })
                .collect()
        }
    };
    Ok(TripletBatch { triplets })
}

/// `exp(a_i / tau) / sum_j exp(a_j / tau)`, evaluated after subtracting the
/// maximum.
pub fn scaled_softmax<T: Real>(a: [T; 3], tau: Temperature<T>) -> [T; 3] {
    let m = a[0].max(a[1]).max(a[2]);
    let e = a.map(|v| ((v - m) / tau.0).exp());
    let s = e[0] + e[1] + e[2];
    e.map(|v| v / s)
}

fn check_sizes<T: Real>(
    z: &Embedding<T>,
    w: &SimilarityMatrix<T>,
    batch: &TripletBatch,
) -> Result<()> {
    if z.n() != w.n() {
        return Err(Error::SizeMismatch {
            what: "similarity matrix",
            got: w.n(),
            expected: z.n(),
        });
    }
    if let Some(&[i, j, k]) = batch
        .triplets
        .iter()
        .find(|t| t.iter().any(|&v| v >= z.n()))
    {
        return Err(Error::LeafOutOfRange {
            index: i.max(j).max(k),
            n: z.n(),
        });
    }
    Ok(())
}

fn coincident<T: Real>(p: &[DiskPoint<T>], [i, j, k]: [usize; 3]) -> bool {
    p[i] == p[j] || p[i] == p[k] || p[j] == p[k]
}

/// Per-triplet term `w_ij + w_ik + w_jk - (w_ij, w_ik, w_jk) . softmax(depths)`.
fn triplet_term<T: Real>(
    z: &Embedding<T>,
    w: &SimilarityMatrix<T>,
    t: [usize; 3],
    tau: Temperature<T>,
) -> T {
    let [i, j, k] = t;
    let p = &z.points;
    let ws = [w.get(i, j), w.get(i, k), w.get(j, k)];
    let s = if coincident(p, t) {
        [lit::<T>(1.0) / lit(3.0); 3]
    } else {
        let d = [
            lca_depth(&p[i], &p[j]).depth,
            lca_depth(&p[i], &p[k]).depth,
            lca_depth(&p[j], &p[k]).depth,
        ];
        scaled_softmax(d, tau)
    };
    ws[0] + ws[1] + ws[2] - (ws[0] * s[0] + ws[1] * s[1] + ws[2] * s[2])
}

/// Relaxed cost summed over `batch`, plus `2 sum_{i<j} w_ij` when
/// `pair_term` is set.
pub fn hyphc_loss<T: Real>(
    z: &Embedding<T>,
    w: &SimilarityMatrix<T>,
    batch: &TripletBatch,
    tau: Temperature<T>,
    pair_term: bool,
) -> Result<T> {
    check_sizes(z, w, batch)?;
    let terms: Vec<T> = batch
        .triplets
        .par_iter()
        .map(|&t| triplet_term(z, w, t, tau))
        .collect();
    let mut total = terms.into_iter().fold(T::zero(), |a, b| a + b);
    if pair_term {
        let p = w.pair_sum();
        total = total + p + p;
    }
    Ok(total)
}

/// Loss value (without the pair term) and its Euclidean gradient with
/// respect to every leaf coordinate.
pub fn hyphc_loss_grad<T: Real>(
    z: &Embedding<T>,
    w: &SimilarityMatrix<T>,
    batch: &TripletBatch,
    tau: Temperature<T>,
) -> Result<(T, Vec<[T; 2]>)> {
    check_sizes(z, w, batch)?;
    let p = &z.points;
    let local: Vec<(T, [[T; 2]; 3])> = batch
        .triplets
        .par_iter()
        .map(|&t| {
            let [i, j, k] = t;
            let ws = [w.get(i, j), w.get(i, k), w.get(j, k)];
            if coincident(p, t) {
                let third = lit::<T>(1.0) / lit(3.0);
                let value = (ws[0] + ws[1] + ws[2]) * (T::one() - third);
                return (value, [[T::zero(); 2]; 3]);
            }
            let pairs = [(i, j), (i, k), (j, k)];
            let g = pairs.map(|(a, b)| lca_depth_grad(&p[a], &p[b]));
            let s = scaled_softmax([g[0].depth, g[1].depth, g[2].depth], tau);
            let ws_dot = ws[0] * s[0] + ws[1] * s[1] + ws[2] * s[2];
            let value = ws[0] + ws[1] + ws[2] - ws_dot;
            // d value / d depth_m = -(1/tau) s_m (w_m - w . s)
            let coef = [0, 1, 2].map(|m| -s[m] * (ws[m] - ws_dot) / tau.0);
            let mut out = [[T::zero(); 2]; 3];
            // slots: 0 -> i, 1 -> j, 2 -> k
            let slots = [(0, 1), (0, 2), (1, 2)];
            for m in 0..3 {
                let (a, b) = slots[m];
                for c in 0..2 {
                    out[a][c] += coef[m] * g[m].wrt_x[c];
                    out[b][c] += coef[m] * g[m].wrt_y[c];
                }
            }
            (value, out)
        })
        .collect();
    let mut grad = vec![[T::zero(); 2]; z.n()];
    let mut total = T::zero();
    for (&t, (value, g)) in batch.triplets.iter().zip(local) {
        total += value;
        for (slot, &leaf) in t.iter().enumerate() {
            grad[leaf][0] += g[slot][0];
            grad[leaf][1] += g[slot][1];
        }
    }
    Ok((total, grad))
}

/// Default margin for [`check_spread`].
pub const DEFAULT_SPREAD_MARGIN: f64 = 0.1;

/// Triplets whose three LCA depths span at most `margin`.
pub fn check_spread<T: Real>(z: &Embedding<T>, margin: T) -> Result<Vec<[usize; 3]>> {
    let n = z.n();
    if n < 3 {
        return Err(Error::TooFewPoints { min: 3, got: n });
    }
    let d = z.pair_depths();
    let rows: Vec<Vec<[usize; 3]>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut out = Vec::new();
            for j in i + 1..n {
                for k in j + 1..n {
                    let v = [d[i * n + j], d[i * n + k], d[j * n + k]];
                    let hi = v[0].max(v[1]).max(v[2]);
                    let lo = v[0].min(v[1]).min(v[2]);
                    if hi - lo <= margin {
                        out.push([i, j, k]);
                    }
                }
            }
            out
        })
        .collect();
    Ok(rows.concat())
}
