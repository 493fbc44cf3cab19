//! Level-set fields, axis-aligned box cells and sign classification.
//!
//! Points are stored as `[f64; 3]`; in two dimensions the third coordinate is
//! unused and kept at zero. Level-set values are positive inside the
//! computational domain and negative outside of it.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 3];

/// Relative zero tolerance, scaled by the background element size.
pub const ZERO_TOL_REL: f64 = 1e-12;

/// A scalar field whose positive part is the computational domain.
pub trait LevelSet: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn eval(&self, x: &Point) -> f64;
}

/// Exclusion of a (rotated) ellipse or ellipsoid centered at the origin.
///
/// The field is `(x̄₁/r₁)² + Σ (x̄ᵢ/r₂)² − 1` where `x̄` is the point rotated by
/// `φ` in the x₁–x₂ plane, so the exclusion itself is the negative region.
#[derive(Clone, Debug, PartialEq)]
pub struct Ellipsoid {
    pub r1: f64,
    pub r2: f64,
    pub phi_deg: f64,
    dim: usize,
    cos_phi: f64,
    sin_phi: f64,
}

impl Ellipsoid {
    pub fn new(r1: f64, r2: f64, phi_deg: f64, dim: usize) -> Result<Self> {
        if !(r1 > 0.0) || !(r2 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "ellipsoid radii must be positive (r1 = {r1}, r2 = {r2})"
            )));
        }
        check_dim(dim)?;
        let phi = phi_deg.to_radians();
        Ok(Ellipsoid { r1, r2, phi_deg, dim, cos_phi: phi.cos(), sin_phi: phi.sin() })
    }
}

impl LevelSet for Ellipsoid {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &Point) -> f64 {
        let xb1 = x[0] * self.cos_phi - x[1] * self.sin_phi;
        let xb2 = x[0] * self.sin_phi + x[1] * self.cos_phi;
        let mut v = (xb1 / self.r1).powi(2) + (xb2 / self.r2).powi(2);
        if self.dim == 3 {
            v += (x[2] / self.r2).powi(2);
        }
        v - 1.0
    }
}

/// Builds the ellipsoidal exclusion field used throughout the single-element studies.
pub fn make_ellipsoid_exclusion(r1: f64, r2: f64, phi_deg: f64, dim: usize) -> Result<Ellipsoid> {
    Ellipsoid::new(r1, r2, phi_deg, dim)
}

/// Affine field `n·x − c`; positive on the side the normal points to.
#[derive(Clone, Debug, PartialEq)]
pub struct Affine {
    pub normal: Point,
    pub offset: f64,
    pub dim: usize,
}

impl LevelSet for Affine {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &Point) -> f64 {
        let mut v = -self.offset;
        for i in 0..self.dim {
            v += self.normal[i] * x[i];
        }
        v
    }
}

/// Wraps an arbitrary closure as a level set.
#[derive(Clone)]
pub struct FnField {
    dim: usize,
    f: Arc<dyn Fn(&Point) -> f64 + Send + Sync>,
}

impl FnField {
    pub fn new(dim: usize, f: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        FnField { dim, f: Arc::new(f) }
    }
}

impl fmt::Debug for FnField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnField").field("dim", &self.dim).finish_non_exhaustive()
    }
}

impl LevelSet for FnField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &Point) -> f64 {
        (self.f)(x)
    }
}

/// Declarative geometry description, as accepted by experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometrySpec {
    Ellipsoid {
        r1: f64,
        r2: f64,
        #[serde(default)]
        phi_deg: f64,
        dim: usize,
    },
}

impl GeometrySpec {
    pub fn dim(&self) -> usize {
        match self {
            GeometrySpec::Ellipsoid { dim, .. } => *dim,
        }
    }

    pub fn build(&self) -> Result<Arc<dyn LevelSet>> {
        match *self {
            GeometrySpec::Ellipsoid { r1, r2, phi_deg, dim } => {
                Ok(Arc::new(make_ellipsoid_exclusion(r1, r2, phi_deg, dim)?))
            }
        }
    }
}

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 3 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("dimension must be 2 or 3, got {dim}")))
    }
}

/// Sign convention shared by classification and tessellation: values within
/// `eps` of zero count as positive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignRule {
    pub eps: f64,
}

impl SignRule {
    pub fn for_element(size: f64) -> Self {
        SignRule { eps: ZERO_TOL_REL * size }
    }

    #[inline]
    pub fn is_positive(&self, v: f64) -> bool {
        v >= -self.eps
    }
}

/// Axis-aligned cube sub-cell of the background element.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxCell {
    pub level: u32,
    pub origin: Point,
    pub size: f64,
    #[serde(skip)]
    pub dim: usize,
}

impl BoxCell {
    pub fn unit(dim: usize) -> Self {
        BoxCell { level: 0, origin: [0.0; 3], size: 1.0, dim }
    }

    pub fn n_corners(&self) -> usize {
        1 << self.dim
    }

    /// Corner `c` in lexicographic order (x₁ varies slowest).
    pub fn corner(&self, c: usize) -> Point {
        let mut p = self.origin;
        for (i, x) in p.iter_mut().enumerate().take(self.dim) {
            if (c >> (self.dim - 1 - i)) & 1 == 1 {
                *x += self.size;
            }
        }
        p
    }

    pub fn center(&self) -> Point {
        let mut p = self.origin;
        for x in p.iter_mut().take(self.dim) {
            *x += 0.5 * self.size;
        }
        p
    }

    pub fn volume(&self) -> f64 {
        self.size.powi(self.dim as i32)
    }

    /// The `2^d` bisection children, in lexicographic order of their origins.
    pub fn children(&self) -> Vec<BoxCell> {
        let half = 0.5 * self.size;
        (0..self.n_corners())
            .map(|c| {
                let mut origin = self.origin;
                for (i, x) in origin.iter_mut().enumerate().take(self.dim) {
                    if (c >> (self.dim - 1 - i)) & 1 == 1 {
                        *x += half;
                    }
                }
                BoxCell { level: self.level + 1, origin, size: half, dim: self.dim }
            })
            .collect()
    }

    pub fn contains(&self, x: &Point, tol: f64) -> bool {
        (0..self.dim).all(|i| x[i] >= self.origin[i] - tol && x[i] <= self.origin[i] + self.size + tol)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    Inside,
    Outside,
    Cut,
}

/// Level-set samples of a box cell: the corners in lexicographic order plus the center.
#[derive(Clone, Debug, PartialEq)]
pub struct SignPattern {
    pub values: Vec<f64>,
    pub center: f64,
    pub classification: Classification,
}

impl SignPattern {
    /// True when the corner values alone do not all share one sign.
    pub fn corners_mixed(&self, rule: SignRule) -> bool {
        let first = rule.is_positive(self.values[0]);
        self.values.iter().any(|&v| rule.is_positive(v) != first)
    }
}

/// Samples the field at the corners and the center of `cell`.
///
/// Inside iff every sample exceeds `eps`, outside iff every sample is below
/// `-eps`, cut otherwise.
pub fn classify_cell(field: &dyn LevelSet, cell: &BoxCell, rule: SignRule) -> Result<SignPattern> {
    let values: Vec<f64> = (0..cell.n_corners()).map(|c| field.eval(&cell.corner(c))).collect();
    let center = field.eval(&cell.center());
    if values.iter().chain(std::iter::once(&center)).any(|v| v.is_nan()) {
        return Err(Error::InvalidGeometry(format!(
            "level set returned NaN on cell at {:?}",
            &cell.origin[..cell.dim]
        )));
    }
    let samples = || values.iter().copied().chain(std::iter::once(center));
    let classification = if samples().all(|v| v > rule.eps) {
        Classification::Inside
    } else if samples().all(|v| v < -rule.eps) {
        Classification::Outside
    } else {
        Classification::Cut
    };
    Ok(SignPattern { values, center, classification })
}

pub(crate) fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn cross(a: &Point, b: &Point) -> Point {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn lerp(a: &Point, b: &Point, t: f64) -> Point {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])]
}

pub(crate) fn mean(points: &[Point]) -> Point {
    let n = points.len() as f64;
    let mut m = [0.0; 3];
    for p in points {
        for i in 0..3 {
            m[i] += p[i];
        }
    }
    m.map(|v| v / n)
}

/// Signed area of the planar triangle `(a, b, c)` in the x₁–x₂ plane.
pub(crate) fn signed_area_2d(a: &Point, b: &Point, c: &Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

pub(crate) fn triangle_area_3d(a: &Point, b: &Point, c: &Point) -> f64 {
    let n = cross(&sub(b, a), &sub(c, a));
    0.5 * dot(&n, &n).sqrt()
}

/// Signed volume of the tetrahedron `(a, b, c, d)`.
pub(crate) fn signed_volume_tet(a: &Point, b: &Point, c: &Point, d: &Point) -> f64 {
    dot(&sub(b, a), &cross(&sub(c, a), &sub(d, a))) / 6.0
}
