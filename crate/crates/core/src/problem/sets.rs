//! Projection-friendly convex sets with closed-form Euclidean projections.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{dist, dot, norm, norm_sq};

/// Relative slack under which a point counts as already inside a curved or
/// affine boundary; keeps `project` exactly idempotent despite rounding.
const MEMBERSHIP_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum SimpleSet {
    WholeSpace { dim: usize },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    /// `{x >= 0, sum x = scale}`
    Simplex { dim: usize, scale: f64 },
    /// `{x : normal . x <= offset}`
    Halfspace { normal: Vec<f64>, offset: f64 },
    Product(Vec<SimpleSet>),
}

impl SimpleSet {
    pub fn whole(dim: usize) -> Self {
        SimpleSet::WholeSpace { dim }
    }

    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let s = SimpleSet::Box { lo, hi };
        s.validate()?;
        Ok(s)
    }

    /// The same interval `[lo, hi]` in every coordinate.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::boxed(vec![lo; dim], vec![hi; dim])
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        let s = SimpleSet::Ball { center, radius };
        s.validate()?;
        Ok(s)
    }

    pub fn simplex(dim: usize, scale: f64) -> Result<Self> {
        let s = SimpleSet::Simplex { dim, scale };
        s.validate()?;
        Ok(s)
    }

    pub fn halfspace(normal: Vec<f64>, offset: f64) -> Result<Self> {
        let s = SimpleSet::Halfspace { normal, offset };
        s.validate()?;
        Ok(s)
    }

    pub fn product(parts: Vec<SimpleSet>) -> Result<Self> {
        let s = SimpleSet::Product(parts);
        s.validate()?;
        Ok(s)
    }

    /// Checks nonemptiness and well-formedness.
    pub fn validate(&self) -> Result<()> {
        match self {
            SimpleSet::WholeSpace { dim } => {
                if *dim == 0 {
                    return Err(Error::Config("whole space of dimension 0".into()));
                }
            }
            SimpleSet::Box { lo, hi } => {
                if lo.len() != hi.len() {
                    return Err(Error::dim("box bounds", lo.len(), hi.len()));
                }
                if lo.is_empty() {
                    return Err(Error::Config("box of dimension 0".into()));
                }
                for (j, (l, h)) in lo.iter().zip(hi).enumerate() {
                    if !(l <= h) {
                        return Err(Error::Config(format!(
                            "box coordinate {j}: lo {l} > hi {h} (empty set)"
                        )));
                    }
                }
            }
            SimpleSet::Ball { center, radius } => {
                if center.is_empty() {
                    return Err(Error::Config("ball of dimension 0".into()));
                }
                if !(*radius >= 0.0) || !radius.is_finite() {
                    return Err(Error::Config(format!("ball radius {radius} must be >= 0")));
                }
            }
            SimpleSet::Simplex { dim, scale } => {
                if *dim == 0 {
                    return Err(Error::Config("simplex of dimension 0".into()));
                }
                if !(*scale > 0.0) || !scale.is_finite() {
                    return Err(Error::Config(format!("simplex scale {scale} must be > 0")));
                }
            }
            SimpleSet::Halfspace { normal, offset } => {
                if normal.is_empty() {
                    return Err(Error::Config("halfspace of dimension 0".into()));
                }
                if norm_sq(normal) == 0.0 || !offset.is_finite() {
                    return Err(Error::Config("halfspace needs a nonzero normal".into()));
                }
            }
            SimpleSet::Product(parts) => {
                if parts.is_empty() {
                    return Err(Error::Config("empty cartesian product".into()));
                }
                for p in parts {
                    p.validate()?;
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            SimpleSet::WholeSpace { dim } | SimpleSet::Simplex { dim, .. } => *dim,
            SimpleSet::Box { lo, .. } => lo.len(),
            SimpleSet::Ball { center, .. } => center.len(),
            SimpleSet::Halfspace { normal, .. } => normal.len(),
            SimpleSet::Product(parts) => parts.iter().map(SimpleSet::dim).sum(),
        }
    }

    pub fn is_bounded(&self) -> bool {
        match self {
            SimpleSet::WholeSpace { .. } | SimpleSet::Halfspace { .. } => false,
            SimpleSet::Box { .. } | SimpleSet::Ball { .. } | SimpleSet::Simplex { .. } => true,
            SimpleSet::Product(parts) => parts.iter().all(SimpleSet::is_bounded),
        }
    }

    /// Euclidean projection of `x` onto the set.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::dim("projection", self.dim(), x.len()));
        }
        let mut out = x.to_vec();
        self.project_in_place(&mut out);
        Ok(out)
    }

    /// Projection without the dimension check; `x.len()` must equal `self.dim()`.
    pub fn project_in_place(&self, x: &mut [f64]) {
        match self {
            SimpleSet::WholeSpace { .. } => {}
            SimpleSet::Box { lo, hi } => {
                for ((xi, l), h) in x.iter_mut().zip(lo).zip(hi) {
                    *xi = xi.clamp(*l, *h);
                }
            }
            SimpleSet::Ball { center, radius } => {
                let d = dist(x, center);
                if d > radius * (1.0 + MEMBERSHIP_SLACK) {
                    let s = radius / d;
                    for (xi, ci) in x.iter_mut().zip(center) {
                        *xi = ci + (*xi - ci) * s;
                    }
                }
            }
            SimpleSet::Simplex { scale, .. } => project_simplex(x, *scale),
            SimpleSet::Halfspace { normal, offset } => {
                let excess = dot(normal, x) - offset;
                let slack = MEMBERSHIP_SLACK * (offset.abs() + norm(normal) * norm(x)).max(1.0);
                if excess > slack {
                    let s = excess / norm_sq(normal);
                    for (xi, ni) in x.iter_mut().zip(normal) {
                        *xi -= s * ni;
                    }
                }
            }
            SimpleSet::Product(parts) => {
                let mut start = 0;
                for p in parts {
                    let d = p.dim();
                    p.project_in_place(&mut x[start..start + d]);
                    start += d;
                }
            }
        }
    }

    pub fn distance(&self, x: &[f64]) -> Result<f64> {
        Ok(dist(x, &self.project(x)?))
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool> {
        Ok(self.distance(x)? <= tol)
    }

    /// A canonical point of the set.
    pub fn anchor(&self) -> Vec<f64> {
        match self {
            SimpleSet::WholeSpace { dim } => vec![0.0; *dim],
            SimpleSet::Box { lo, hi } => lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect(),
            SimpleSet::Ball { center, .. } => center.clone(),
            SimpleSet::Simplex { dim, scale } => vec![scale / *dim as f64; *dim],
            SimpleSet::Halfspace { .. } => {
                let mut x = vec![0.0; self.dim()];
                self.project_in_place(&mut x);
                x
            }
            SimpleSet::Product(parts) => parts.iter().flat_map(SimpleSet::anchor).collect(),
        }
    }

    /// Center and radius of a ball containing the set, when bounded.
    pub fn bounding_ball(&self) -> Option<(Vec<f64>, f64)> {
        match self {
            SimpleSet::WholeSpace { .. } | SimpleSet::Halfspace { .. } => None,
            SimpleSet::Box { lo, hi } => {
                let center = self.anchor();
                let r = 0.5 * dist(lo, hi);
                Some((center, r))
            }
            SimpleSet::Ball { center, radius } => Some((center.clone(), *radius)),
            SimpleSet::Simplex { dim, scale } => {
                let n = *dim as f64;
                Some((self.anchor(), scale * ((n - 1.0) / n).sqrt()))
            }
            SimpleSet::Product(parts) => {
                let mut center = Vec::with_capacity(self.dim());
                let mut r2 = 0.0;
                for p in parts {
                    let (c, r) = p.bounding_ball()?;
                    center.extend(c);
                    r2 += r * r;
                }
                Some((center, r2.sqrt()))
            }
        }
    }

    /// Random point of the set. Unbounded sets draw from a wide Gaussian around
    /// the anchor and project, so samples concentrate near but not only on the boundary.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            SimpleSet::WholeSpace { dim } => {
                (0..*dim).map(|_| 10.0 * gauss(rng)).collect()
            }
            SimpleSet::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(l, h)| if l == h { *l } else { rng.random_range(*l..=*h) })
                .collect(),
            SimpleSet::Ball { center, radius } => {
                let d = center.len();
                let dir: Vec<f64> = (0..d).map(|_| gauss(rng)).collect();
                let n = norm(&dir).max(f64::MIN_POSITIVE);
                let r = radius * rng.random::<f64>().powf(1.0 / d as f64);
                center.iter().zip(&dir).map(|(c, u)| c + r * u / n).collect()
            }
            SimpleSet::Simplex { dim, scale } => {
                let w: Vec<f64> = (0..*dim).map(|_| Exp1.sample(rng)).collect();
                let total: f64 = w.iter().sum();
                w.iter().map(|v| scale * v / total).collect()
            }
            SimpleSet::Halfspace { .. } => {
                let mut x: Vec<f64> = self
                    .anchor()
                    .iter()
                    .map(|a| a + 10.0 * gauss(rng))
                    .collect();
                self.project_in_place(&mut x);
                x
            }
            SimpleSet::Product(parts) => parts.iter().flat_map(|p| p.sample(rng)).collect(),
        }
    }
}

fn gauss<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Sorted-threshold projection onto `{x >= 0, sum x = scale}`.
fn project_simplex(x: &mut [f64], scale: f64) {
    let sum: f64 = x.iter().sum();
    if x.iter().all(|v| *v >= 0.0) && (sum - scale).abs() <= MEMBERSHIP_SLACK * scale {
        return;
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, v) in sorted.iter().enumerate() {
        cumulative += v;
        let candidate = (cumulative - scale) / (k + 1) as f64;
        if v - candidate > 0.0 {
            theta = candidate;
        }
    }
    for v in x.iter_mut() {
        *v = (*v - theta).max(0.0);
    }
}
