//! Riemannian Adam on the Poincaré disk with a learned common norm.
//!
//! Leaf points always share one norm, the embedding scale. The scale is
//! trained through an unconstrained logit mapped onto
//! `(SCALE_MIN, 1 - boundary margin)` by a sigmoid.

use log::{debug, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{max_norm, DiskPoint};
use crate::loss::{
    hyphc_loss_grad, sample_triplets, Embedding, Temperature, TripletBatch, TripletStrategy,
};
use crate::scalar::{lit, Real};
use crate::trees::SimilarityMatrix;

pub const SCALE_MIN: f64 = 0.1;
pub const DEFAULT_INIT_SCALE: f64 = 0.5;
pub const DEFAULT_LR: f64 = 5e-4;
pub const DEFAULT_EPOCHS: usize = 50;

/// Inverse metric factor `(1 - |x|^2)^2 / 4` applied to a Euclidean gradient.
pub fn riemannian_grad<T: Real>(x: &DiskPoint<T>, euclidean_grad: [T; 2]) -> [T; 2] {
    let c = T::one() - x.norm_sq();
    let f = c * c / lit(4.0);
    [f * euclidean_grad[0], f * euclidean_grad[1]]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig<T> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
}

impl<T: Real> Default for AdamConfig<T> {
    fn default() -> Self {
        Self {
            lr: lit(DEFAULT_LR),
            beta1: lit(0.9),
            beta2: lit(0.999),
            eps: lit(1e-8),
        }
    }
}

impl<T: Real> AdamConfig<T> {
    pub fn with_lr(lr: T) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        let unit = |b: T| b >= T::zero() && b < T::one();
        if !(self.lr > T::zero() && unit(self.beta1) && unit(self.beta2) && self.eps > T::zero()) {
            return Err(Error::InvalidArgument(
                "adam needs lr > 0, betas in [0, 1) and eps > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Adam moments for every leaf coordinate and for the scale logit.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState<T> {
    pub step: u64,
    pub m: Vec<[T; 2]>,
    pub v: Vec<[T; 2]>,
    pub scale_logit: T,
    pub scale_m: T,
    pub scale_v: T,
    pub config: AdamConfig<T>,
}

fn sigmoid<T: Real>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

fn scale_range<T: Real>() -> (T, T) {
    let lo = lit::<T>(SCALE_MIN);
    (lo, max_norm::<T>() - lo)
}

/// Scale encoded by a logit.
pub fn scale_from_logit<T: Real>(logit: T) -> T {
    let (lo, width) = scale_range::<T>();
    lo + width * sigmoid(logit)
}

/// Logit encoding `scale`, clamped into the open scale range.
pub fn logit_from_scale<T: Real>(scale: T) -> T {
    let (lo, width) = scale_range::<T>();
    let tiny = lit::<T>(1e-9);
    let f = ((scale - lo) / width).max(tiny).min(T::one() - tiny);
    (f / (T::one() - f)).ln()
}

impl<T: Real> OptimizerState<T> {
    pub fn new(z: &Embedding<T>, config: AdamConfig<T>) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            step: 0,
            m: vec![[T::zero(); 2]; z.n()],
            v: vec![[T::zero(); 2]; z.n()],
            scale_logit: logit_from_scale(z.scale()),
            scale_m: T::zero(),
            scale_v: T::zero(),
            config,
        })
    }
}

/// Random initial embedding: uniform angles, every norm `init_scale`.
pub fn init_embedding<T: Real>(n: usize, seed: u64, init_scale: T) -> Result<Embedding<T>> {
    if n == 0 {
        return Err(Error::TooFewPoints { min: 1, got: 0 });
    }
    if !(init_scale > T::zero() && init_scale < max_norm::<T>()) {
        return Err(Error::InvalidArgument(
            "init_scale must lie in (0, 1 - boundary margin)".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..n)
        .map(|_| {
            let a = lit::<T>(rng.gen_range(0.0..std::f64::consts::TAU));
            DiskPoint::from_polar(init_scale, a)
        })
        .collect::<Result<Vec<_>>>()?;
    Embedding::new(points, init_scale)
}

/// Rescales every row to norm `z.scale`. Rows of zero norm get a fresh
/// random angle; their indices are returned.
pub fn rescale_to_common_norm<T: Real, R: Rng + ?Sized>(
    z: &mut Embedding<T>,
    rng: &mut R,
) -> Vec<usize> {
    let scale = z.scale;
    let mut reinit = Vec::new();
    for (i, p) in z.points.iter_mut().enumerate() {
        let r = p.norm();
        *p = if r > T::zero() && r.is_finite() {
            let f = scale / r;
            DiskPoint::projected(p.x() * f, p.y() * f)
        } else {
            reinit.push(i);
            let a = lit::<T>(rng.gen_range(0.0..std::f64::consts::TAU));
            DiskPoint::projected(scale * a.cos(), scale * a.sin())
        };
    }
    if !reinit.is_empty() {
        warn!(
            "re-initialized {} zero-norm rows at random angles",
            reinit.len()
        );
    }
    reinit
}

/// One Adam update from the Euclidean gradient `grad` of the loss with
/// respect to the leaf coordinates.
///
/// Radial components move the shared scale; tangential components,
/// rescaled by the inverse metric, move the points. After the Euclidean
/// step the points are projected inside the disk and rescaled to the new
/// common norm. Returns the indices of rows that had to be re-initialized.
pub fn adam_step<T: Real, R: Rng + ?Sized>(
    state: &mut OptimizerState<T>,
    z: &mut Embedding<T>,
    grad: &[[T; 2]],
    rng: &mut R,
) -> Result<Vec<usize>> {
    let n = z.n();
    if grad.len() != n || state.m.len() != n {
        return Err(Error::SizeMismatch {
            what: "gradient",
            got: grad.len(),
            expected: n,
        });
    }
    if let Some(row) = grad
        .iter()
        .position(|g| !(g[0].is_finite() && g[1].is_finite()))
    {
        return Err(Error::NonFiniteGradient { row });
    }
    let AdamConfig {
        lr,
        beta1,
        beta2,
        eps,
    } = state.config;
    let one = T::one();
    state.step += 1;
    let t = i32::try_from(state.step).unwrap_or(i32::MAX);
    let bc1 = one - beta1.powi(t);
    let bc2 = one - beta2.powi(t);

    let mut d_scale = T::zero();
    // Adam on the points
    for i in 0..n {
        let p = z.points[i];
        let r = p.norm();
        let u = if r > T::zero() {
            [p.x() / r, p.y() / r]
        } else {
            [T::zero(); 2]
        };
        let g = grad[i];
        let radial = g[0] * u[0] + g[1] * u[1];
        d_scale += radial;
        let rg = riemannian_grad(&p, [g[0] - radial * u[0], g[1] - radial * u[1]]);
        let mut step = [T::zero(); 2];
        for c in 0..2 {
            state.m[i][c] = beta1 * state.m[i][c] + (one - beta1) * rg[c];
            state.v[i][c] = beta2 * state.v[i][c] + (one - beta2) * rg[c] * rg[c];
            let mh = state.m[i][c] / bc1;
            let vh = state.v[i][c] / bc2;
            step[c] = lr * mh / (vh.sqrt() + eps);
        }
        z.points[i] = DiskPoint::projected(p.x() - step[0], p.y() - step[1]);
    }
    // Adam on the scale logit
    let s = sigmoid(state.scale_logit);
    let (_, width) = scale_range::<T>();
    let g_logit = d_scale * width * s * (one - s);
    state.scale_m = beta1 * state.scale_m + (one - beta1) * g_logit;
    state.scale_v = beta2 * state.scale_v + (one - beta2) * g_logit * g_logit;
    let mh = state.scale_m / bc1;
    let vh = state.scale_v / bc2;
    state.scale_logit -= lr * mh / (vh.sqrt() + eps);
    z.scale = scale_from_logit(state.scale_logit);

    Ok(rescale_to_common_norm(z, rng))
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig<T> {
    pub epochs: usize,
    pub batch_size: usize,
    pub tau: Temperature<T>,
    /// Triplets drawn at the start of every epoch; sampling seeds are
    /// derived from `seed` and the epoch number.
    pub sampling: Sampling,
    pub seed: u64,
}

/// Per-epoch triplet sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    All,
    Quadratic,
    FixedCount(usize),
}

impl Sampling {
    fn strategy(self, seed: u64) -> TripletStrategy {
        match self {
            Sampling::All => TripletStrategy::All,
            Sampling::Quadratic => TripletStrategy::Quadratic { seed },
            Sampling::FixedCount(m) => TripletStrategy::FixedCount { m, seed },
        }
    }
}

/// What the trainer reports after every epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochReport<T> {
    pub epoch: usize,
    /// Sum of the mini-batch losses of this epoch (without the pair term).
    pub loss: T,
    pub scale: T,
    pub reinitialized: usize,
}

fn mix(seed: u64, salt: u64) -> u64 {
    // splitmix64 finalizer
    let mut x = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Runs `config.epochs` epochs of mini-batch Riemannian Adam, calling
/// `on_epoch` after each one.
pub fn train<T: Real>(
    z: &mut Embedding<T>,
    state: &mut OptimizerState<T>,
    w: &SimilarityMatrix<T>,
    config: &TrainConfig<T>,
    mut on_epoch: impl FnMut(&EpochReport<T>, &Embedding<T>, &OptimizerState<T>) -> Result<()>,
) -> Result<()> {
    if config.batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix(config.seed, 1));
    let start = state.step;
    for epoch in 0..config.epochs {
        let salt = start.wrapping_add(epoch as u64).wrapping_add(2);
        let triplets: TripletBatch =
            sample_triplets(z.n(), config.sampling.strategy(mix(config.seed, salt)))?
                .shuffled(&mut rng);
        let mut loss = T::zero();
        let mut reinitialized = 0;
        for batch in triplets.chunks(config.batch_size) {
            let (value, grad) = hyphc_loss_grad(z, w, &batch, config.tau)?;
            loss += value;
            reinitialized += adam_step(state, z, &grad, &mut rng)?.len();
        }
        let report = EpochReport {
            epoch,
            loss,
            scale: z.scale(),
            reinitialized,
        };
        debug!(
            "epoch {epoch}: loss {:.6e}, scale {:.4}",
            loss.to_f64().unwrap_or(f64::NAN),
            z.scale().to_f64().unwrap_or(f64::NAN)
        );
        on_epoch(&report, z, state)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn metric_factor() {
        let g = riemannian_grad(&DiskPoint::<f64>::origin(), [1.0, -2.0]);
        assert_eq!(g, [0.25, -0.5]);
        let g = riemannian_grad(&DiskPoint::from_polar(0.5, 1.0).unwrap(), [1.0, 0.0]);
        assert_relative_eq!(g[0], 0.140625, epsilon = 1e-15);
        let g = riemannian_grad(&DiskPoint::from_polar(1.0 - 2e-5, 1.0).unwrap(), [1.0, 0.0]);
        assert!(g[0] < 1e-9);
    }

    #[test]
    fn init_is_deterministic_and_on_circle() {
        let a = init_embedding::<f64>(50, 3, 0.5).unwrap();
        let b = init_embedding::<f64>(50, 3, 0.5).unwrap();
        assert_eq!(a, b);
        assert!(a.points().iter().all(|p| (p.norm() - 0.5).abs() < 1e-12));
        assert_ne!(a, init_embedding::<f64>(50, 4, 0.5).unwrap());
        assert_eq!(init_embedding::<f64>(1, 0, 0.3).unwrap().n(), 1);
        assert!(init_embedding::<f64>(5, 0, 1.0).is_err());
        assert!(init_embedding::<f64>(5, 0, 0.0).is_err());
    }

    #[test]
    fn logit_round_trip() {
        for s in [0.2, 0.5, 0.9, 0.99] {
            assert_relative_eq!(scale_from_logit(logit_from_scale(s)), s, epsilon = 1e-12);
        }
        assert!(scale_from_logit(50.0f64) <= max_norm::<f64>());
        assert!(scale_from_logit(-50.0f64) >= SCALE_MIN);
    }

    #[test]
    fn zero_gradient_keeps_embedding() {
        let mut z = init_embedding::<f64>(10, 1, 0.5).unwrap();
        let before = z.clone();
        let mut st = OptimizerState::new(&z, AdamConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        adam_step(&mut st, &mut z, &[[0.0; 2]; 10], &mut rng).unwrap();
        assert_eq!(st.step, 1);
        for (a, b) in z.points().iter().zip(before.points()) {
            assert_relative_eq!(a.x(), b.x(), epsilon = 1e-12);
            assert_relative_eq!(a.y(), b.y(), epsilon = 1e-12);
        }
        assert_relative_eq!(z.scale(), before.scale(), epsilon = 1e-9);
    }

    #[test]
    fn non_finite_gradient_aborts() {
        let mut z = init_embedding::<f64>(3, 1, 0.5).unwrap();
        let before = z.clone();
        let mut st = OptimizerState::new(&z, AdamConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = adam_step(
            &mut st,
            &mut z,
            &[[0.0; 2], [f64::NAN, 0.0], [0.0; 2]],
            &mut rng,
        );
        assert!(matches!(err, Err(Error::NonFiniteGradient { row: 1 })));
        assert_eq!(z, before);
        assert_eq!(st.step, 0);
    }

    #[test]
    fn rescale_preserves_angles_and_reinitializes_zeros() {
        let mut z = Embedding::from_coords(&[[0.1, 0.2], [0.0, 0.0], [-0.7, 0.1]], 0.4).unwrap();
        let angles: Vec<f64> = z.points().iter().map(|p| p.angle()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let re = rescale_to_common_norm(&mut z, &mut rng);
        assert_eq!(re, vec![1]);
        for (i, p) in z.points().iter().enumerate() {
            assert_relative_eq!(p.norm(), 0.4, epsilon = 1e-12);
            if i != 1 {
                assert_relative_eq!(p.angle(), angles[i], epsilon = 1e-15);
            }
        }
    }
}
