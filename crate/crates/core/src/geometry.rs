//! Poincaré-disk primitives: distances, Gromov products and the hyperbolic
//! lowest common ancestor (LCA) of two points.
//!
//! The LCA of `x` and `y` is the point of the geodesic segment between them
//! that is closest to the origin. Its distance to the origin (the LCA
//! *depth*) is the quantity the clustering objective is built on.
//!
//! The tolerance constants below are calibrated for `f64`. For other scalar
//! types they are rescaled by `sqrt(eps_T / eps_f64)` (see
//! [`precision_scale`]), so `f64` uses them verbatim while wider types can
//! resolve points much closer to the boundary.

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Distance to the unit circle that optimized points must keep (`f64`).
pub const BOUNDARY_EPS: f64 = 1e-5;
/// Below this `sin(angle)` the LCA falls back to its analytic limit (`f64`).
pub const ANGLE_EPS: f64 = 1e-9;
/// Points closer than this to the origin have LCA depth zero (`f64`).
pub const NORM_EPS: f64 = 1e-9;

/// `sqrt(eps_T / eps_f64)`: exactly one for `f64`.
pub fn precision_scale<T: Real>() -> T {
    (T::epsilon() / lit::<T>(f64::EPSILON)).sqrt()
}

/// Boundary margin at the working precision of `T`.
pub fn boundary_eps<T: Real>() -> T {
    lit::<T>(BOUNDARY_EPS) * precision_scale::<T>()
}

/// Largest norm an optimized point may have.
pub fn max_norm<T: Real>() -> T {
    T::one() - boundary_eps::<T>()
}

fn angle_eps<T: Real>() -> T {
    lit::<T>(ANGLE_EPS) * precision_scale::<T>()
}

fn norm_eps<T: Real>() -> T {
    lit::<T>(NORM_EPS) * precision_scale::<T>()
}

/// A point of the disk with norm at most [`max_norm`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskPoint<T> {
    coords: [T; 2],
}

impl<T: Real> DiskPoint<T> {
    pub fn new(x: T, y: T) -> Result<Self> {
        let p = Self { coords: [x, y] };
        let n = p.norm();
        if n.is_nan() || n > max_norm::<T>() {
            return Err(Error::OutsideDisk {
                norm: n.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(p)
    }

    pub fn origin() -> Self {
        Self {
            coords: [T::zero(); 2],
        }
    }

    /// Builds a point, pulling it back to norm [`max_norm`] if it lies
    /// further out.
    pub fn projected(x: T, y: T) -> Self {
        let p = Self { coords: [x, y] };
        let n = p.norm();
        let limit = max_norm::<T>();
        if n > limit {
            let s = limit / n;
            Self {
                coords: [x * s, y * s],
            }
        } else {
            p
        }
    }

    pub fn from_polar(radius: T, angle: T) -> Result<Self> {
        Self::new(radius * angle.cos(), radius * angle.sin())
    }

    #[inline]
    pub fn x(&self) -> T {
        self.coords[0]
    }

    #[inline]
    pub fn y(&self) -> T {
        self.coords[1]
    }

    #[inline]
    pub fn coords(&self) -> [T; 2] {
        self.coords
    }

    #[inline]
    pub fn norm_sq(&self) -> T {
        self.coords[0] * self.coords[0] + self.coords[1] * self.coords[1]
    }

    #[inline]
    pub fn norm(&self) -> T {
        self.coords[0].hypot(self.coords[1])
    }

    /// Polar angle in `(-pi, pi]`.
    #[inline]
    pub fn angle(&self) -> T {
        self.coords[1].atan2(self.coords[0])
    }

    pub fn rotated(&self, angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        let [x, y] = self.coords;
        Self {
            coords: [c * x - s * y, s * x + c * y],
        }
    }
}

#[inline]
fn cross<T: Real>(a: [T; 2], b: [T; 2]) -> T {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
fn dot<T: Real>(a: [T; 2], b: [T; 2]) -> T {
    a[0] * b[0] + a[1] * b[1]
}

/// Hyperbolic distance between two points of the disk.
pub fn dist<T: Real>(x: &DiskPoint<T>, y: &DiskPoint<T>) -> T {
    let dx = x.x() - y.x();
    let dy = x.y() - y.y();
    let num = dx * dx + dy * dy;
    let den = (T::one() - x.norm_sq()) * (T::one() - y.norm_sq());
    let two = lit::<T>(2.0);
    (T::one() + two * num / den).acosh()
}

/// Hyperbolic distance from the origin, `2 atanh(|x|)`.
pub fn dist_to_origin<T: Real>(x: &DiskPoint<T>) -> T {
    lit::<T>(2.0) * x.norm().atanh()
}

/// Gromov product `<x, y>_base`.
pub fn gromov_product<T: Real>(x: &DiskPoint<T>, y: &DiskPoint<T>, base: &DiskPoint<T>) -> T {
    lit::<T>(0.5) * (dist(x, base) + dist(base, y) - dist(x, y))
}

/// Outcome of an LCA computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LcaResult<T> {
    /// Angle from the first point to the LCA, measured toward the second.
    pub alpha: T,
    /// Hyperbolic distance from the origin to the LCA.
    pub depth: T,
    /// The projection of the origin fell outside the geodesic segment and
    /// the nearer endpoint was used instead.
    pub clamped: bool,
    /// One of the analytic limits was used (coincident directions,
    /// antipodal directions, or a point at the origin).
    pub degenerate: bool,
}

impl<T: Real> LcaResult<T> {
    fn interior(alpha: T, depth: T) -> Self {
        Self {
            alpha,
            depth,
            clamped: false,
            degenerate: false,
        }
    }

    fn clamped(alpha: T, depth: T) -> Self {
        Self {
            alpha,
            depth,
            clamped: true,
            degenerate: false,
        }
    }

    fn degenerate(depth: T) -> Self {
        Self {
            alpha: T::zero(),
            depth,
            clamped: false,
            degenerate: true,
        }
    }

    pub fn is_regular(&self) -> bool {
        !self.clamped && !self.degenerate
    }
}

enum LcaGeometry<T> {
    Regular {
        alpha: T,
        depth: T,
    },
    ClampedAtX,
    ClampedAtY {
        theta: T,
    },
    /// Both points share a direction; the LCA is the shallower point.
    Aligned,
    /// The geodesic passes through the origin.
    ThroughOrigin,
}

fn lca_geometry<T: Real>(x: &DiskPoint<T>, y: &DiskPoint<T>) -> LcaGeometry<T> {
    let one = T::one();
    let two = lit::<T>(2.0);
    let a = x.norm();
    let b = y.norm();
    if a < norm_eps() || b < norm_eps() {
        return LcaGeometry::ThroughOrigin;
    }
    let c = cross(x.coords(), y.coords());
    let d = dot(x.coords(), y.coords());
    let theta = c.abs().atan2(d);
    let (sin_t, cos_t) = theta.sin_cos();
    if sin_t < angle_eps() {
        return if d > T::zero() {
            LcaGeometry::Aligned
        } else {
            LcaGeometry::ThroughOrigin
        };
    }

    let ratio = a * (b * b + one) / (b * (a * a + one));
    let alpha = ((ratio - cos_t) / sin_t).atan();
    if alpha < T::zero() {
        return LcaGeometry::ClampedAtX;
    }
    if alpha > theta {
        return LcaGeometry::ClampedAtY { theta };
    }

    // Distance from the origin to the centre of the geodesic circle; the
    // circle radius is sqrt(center^2 - 1) because it meets the unit circle
    // at right angles.
    let center = (a * a + one) / (two * a * alpha.cos());
    let radius = (center * center - one).max(T::zero()).sqrt();
    // center - radius, written without cancellation.
    let lca_norm = one / (center + radius);
    LcaGeometry::Regular {
        alpha,
        depth: two * lca_norm.atanh(),
    }
}

/// Depth of the hyperbolic LCA of `x` and `y`.
pub fn lca_depth<T: Real>(x: &DiskPoint<T>, y: &DiskPoint<T>) -> LcaResult<T> {
    match lca_geometry(x, y) {
        LcaGeometry::Regular { alpha, depth } => LcaResult::interior(alpha, depth),
        LcaGeometry::ClampedAtX => LcaResult::clamped(T::zero(), dist_to_origin(x)),
        LcaGeometry::ClampedAtY { theta } => LcaResult::clamped(theta, dist_to_origin(y)),
        LcaGeometry::Aligned => LcaResult::degenerate(dist_to_origin(x).min(dist_to_origin(y))),
        LcaGeometry::ThroughOrigin => LcaResult::degenerate(T::zero()),
    }
}

/// Coordinates of the hyperbolic LCA of `x` and `y`.
pub fn lca_point<T: Real>(x: &DiskPoint<T>, y: &DiskPoint<T>) -> DiskPoint<T> {
    match lca_geometry(x, y) {
        LcaGeometry::Regular { alpha, depth } => {
            let sign = if cross(x.coords(), y.coords()) < T::zero() {
                -T::one()
            } else {
                T::one()
            };
            let norm = (depth / lit::<T>(2.0)).tanh();
            let phi = x.angle() + sign * alpha;
            DiskPoint {
                coords: [norm * phi.cos(), norm * phi.sin()],
            }
        }
        LcaGeometry::ClampedAtX => *x,
        LcaGeometry::ClampedAtY { .. } => *y,
        LcaGeometry::Aligned => {
            if x.norm() <= y.norm() {
                *x
            } else {
                *y
            }
        }
        LcaGeometry::ThroughOrigin => DiskPoint::origin(),
    }
}

/// LCA depth together with its gradient with respect to both points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LcaGradient<T> {
    pub depth: T,
    pub wrt_x: [T; 2],
    pub wrt_y: [T; 2],
    /// True when the configuration was clamped or degenerate; the gradients
    /// are then zero.
    pub degenerate: bool,
}

/// Analytic gradient of [`lca_depth`].
///
/// Uses the centre `c` of the geodesic circle, which solves
/// `<c, x> = (|x|^2 + 1) / 2` and `<c, y> = (|y|^2 + 1) / 2`. The depth is
/// `atanh(1 / |c|)`, so `d depth / d|c| = -1 / (|c|^2 - 1)`, and
/// differentiating the linear system gives `d depth / dx = l_x (x - c)`
/// where `(l_x, l_y)` are the coordinates of `d depth / dc` in the basis
/// `(x, y)`.
pub fn lca_depth_grad<T: Real>(x: &DiskPoint<T>, y: &DiskPoint<T>) -> LcaGradient<T> {
    let lca = lca_depth(x, y);
    if !lca.is_regular() {
        return LcaGradient {
            depth: lca.depth,
            wrt_x: [T::zero(); 2],
            wrt_y: [T::zero(); 2],
            degenerate: true,
        };
    }
    let one = T::one();
    let half = lit::<T>(0.5);
    let xs = x.coords();
    let ys = y.coords();
    let det = cross(xs, ys);
    let hx = half * (x.norm_sq() + one);
    let hy = half * (y.norm_sq() + one);
    let c = [
        (ys[1] * hx - xs[1] * hy) / det,
        (xs[0] * hy - ys[0] * hx) / det,
    ];
    let center_sq = dot(c, c);
    let center = center_sq.sqrt();
    let d_center = -one / (center_sq - one);
    let gc = [d_center * c[0] / center, d_center * c[1] / center];
    let lx = cross(gc, ys) / det;
    let ly = cross(xs, gc) / det;
    LcaGradient {
        depth: lca.depth,
        wrt_x: [lx * (xs[0] - c[0]), lx * (xs[1] - c[1])],
        wrt_y: [ly * (ys[0] - c[0]), ly * (ys[1] - c[1])],
        degenerate: false,
    }
}
