//! Convex function oracles: value, one subgradient, and an optional declared
//! Lipschitz constant.
//!
//! Piecewise functions resolve ties at kinks toward the lowest branch index, so a
//! given point always yields the same subgradient.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm};

/// A convex function on `R^dim` queried through first-order oracles.
pub trait ConvexFn: fmt::Debug + Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Any element of the subdifferential at `x`.
    fn subgradient(&self, x: &[f64]) -> Vec<f64>;

    /// Declared constant `L` with `|f(x) - f(y)| <= L |x - y|` on the region of interest.
    fn lipschitz_bound(&self) -> Option<f64> {
        None
    }

    /// True when the function is affine, so sublevel sets are halfspaces.
    fn is_affine(&self) -> bool {
        false
    }
}

pub type Oracle = Arc<dyn ConvexFn>;

/// `coef . x + offset`
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    coef: Vec<f64>,
    offset: f64,
}

impl Affine {
    pub fn new(coef: Vec<f64>, offset: f64) -> Self {
        Self { coef, offset }
    }

    pub fn coef(&self) -> &[f64] {
        &self.coef
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }
}

impl ConvexFn for Affine {
    fn dim(&self) -> usize {
        self.coef.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        dot(&self.coef, x) + self.offset
    }

    fn subgradient(&self, _x: &[f64]) -> Vec<f64> {
        self.coef.clone()
    }

    fn lipschitz_bound(&self) -> Option<f64> {
        Some(norm(&self.coef))
    }

    fn is_affine(&self) -> bool {
        true
    }
}

/// `0.5 x'Px + q'x + r` with `P` stored row-major.
///
/// Convexity requires `P` positive semidefinite. That is not enforced here; the
/// assumption validators catch a non-convex `P` by sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    dim: usize,
    hessian: Vec<f64>,
    linear: Vec<f64>,
    constant: f64,
    lipschitz: Option<f64>,
}

impl Quadratic {
    pub fn new(hessian: Vec<f64>, linear: Vec<f64>, constant: f64) -> Result<Self> {
        let dim = linear.len();
        if hessian.len() != dim * dim {
            return Err(Error::dim("quadratic hessian", dim * dim, hessian.len()));
        }
        for i in 0..dim {
            for j in 0..i {
                if (hessian[i * dim + j] - hessian[j * dim + i]).abs() > 1e-12 {
                    return Err(Error::Config(format!(
                        "quadratic hessian is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self {
            dim,
            hessian,
            linear,
            constant,
            lipschitz: None,
        })
    }

    /// `weight * |x - center|^2`
    pub fn squared_distance(center: &[f64], weight: f64) -> Self {
        let dim = center.len();
        let mut hessian = vec![0.0; dim * dim];
        for i in 0..dim {
            hessian[i * dim + i] = 2.0 * weight;
        }
        Self {
            dim,
            hessian,
            linear: center.iter().map(|c| -2.0 * weight * c).collect(),
            constant: weight * dot(center, center),
            lipschitz: None,
        }
    }

    /// `sum_j diag_j * x_j^2 + linear . x + constant`
    pub fn separable(diag: &[f64], linear: Vec<f64>, constant: f64) -> Result<Self> {
        let dim = diag.len();
        if linear.len() != dim {
            return Err(Error::dim("separable quadratic", dim, linear.len()));
        }
        let mut hessian = vec![0.0; dim * dim];
        for (i, d) in diag.iter().enumerate() {
            hessian[i * dim + i] = 2.0 * d;
        }
        Ok(Self {
            dim,
            hessian,
            linear,
            constant,
            lipschitz: None,
        })
    }

    pub fn with_lipschitz(mut self, bound: f64) -> Self {
        self.lipschitz = Some(bound);
        self
    }

    /// Largest gradient norm over a box, a valid Lipschitz constant there.
    ///
    /// The gradient is affine, so its norm is maximised at a vertex; this
    /// enumerates all `2^dim` vertices and is meant for small dimensions.
    pub fn gradient_bound_on_box(&self, lo: &[f64], hi: &[f64]) -> f64 {
        let dim = self.dim;
        let mut best = 0.0_f64;
        let mut corner = vec![0.0; dim];
        for mask in 0..(1usize << dim) {
            for j in 0..dim {
                corner[j] = if mask >> j & 1 == 1 { hi[j] } else { lo[j] };
            }
            best = best.max(norm(&self.subgradient(&corner)));
        }
        best
    }
}

impl ConvexFn for Quadratic {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        let n = self.dim;
        let mut quad = 0.0;
        for i in 0..n {
            let row = &self.hessian[i * n..(i + 1) * n];
            quad += x[i] * dot(row, x);
        }
        0.5 * quad + dot(&self.linear, x) + self.constant
    }

    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim;
        (0..n)
            .map(|i| dot(&self.hessian[i * n..(i + 1) * n], x) + self.linear[i])
            .collect()
    }

    fn lipschitz_bound(&self) -> Option<f64> {
        self.lipschitz
    }
}

/// `sum_j weight_j * |x_j - center_j|`
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedL1 {
    weights: Vec<f64>,
    center: Vec<f64>,
}

impl WeightedL1 {
    pub fn new(weights: Vec<f64>, center: Vec<f64>) -> Result<Self> {
        if weights.len() != center.len() {
            return Err(Error::dim("weighted l1", weights.len(), center.len()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0)) {
            return Err(Error::Config(format!("l1 weight {w} must be nonnegative")));
        }
        Ok(Self { weights, center })
    }
}

impl ConvexFn for WeightedL1 {
    fn dim(&self) -> usize {
        self.weights.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(x.iter().zip(&self.center))
            .map(|(w, (xi, ci))| w * (xi - ci).abs())
            .sum()
    }

    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        // |u| = max(u, -u): the tie at u = 0 goes to branch 0, i.e. +w.
        self.weights
            .iter()
            .zip(x.iter().zip(&self.center))
            .map(|(w, (xi, ci))| if xi - ci >= 0.0 { *w } else { -*w })
            .collect()
    }

    fn lipschitz_bound(&self) -> Option<f64> {
        Some(norm(&self.weights))
    }
}

/// Pointwise maximum of affine pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxAffine {
    pieces: Vec<Affine>,
}

impl MaxAffine {
    pub fn new(pieces: Vec<Affine>) -> Result<Self> {
        let Some(first) = pieces.first() else {
            return Err(Error::Config("max-of-affine needs at least one piece".into()));
        };
        let dim = first.dim();
        if let Some(p) = pieces.iter().find(|p| p.dim() != dim) {
            return Err(Error::dim("max-of-affine piece", dim, p.dim()));
        }
        Ok(Self { pieces })
    }

    /// Index of the active piece; ties go to the lowest index.
    pub fn active_piece(&self, x: &[f64]) -> usize {
        let mut best = 0;
        let mut best_val = self.pieces[0].value(x);
        for (k, p) in self.pieces.iter().enumerate().skip(1) {
            let v = p.value(x);
            if v > best_val {
                best = k;
                best_val = v;
            }
        }
        best
    }
}

impl ConvexFn for MaxAffine {
    fn dim(&self) -> usize {
        self.pieces[0].dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.value(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        self.pieces[self.active_piece(x)].coef.clone()
    }

    fn lipschitz_bound(&self) -> Option<f64> {
        self.pieces
            .iter()
            .map(|p| norm(&p.coef))
            .fold(None, |m, l| Some(m.map_or(l, |m: f64| m.max(l))))
    }
}

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// User-supplied oracle built from closures.
pub struct FnOracle {
    dim: usize,
    value: Box<ValueFn>,
    subgradient: Box<GradFn>,
    lipschitz: Option<f64>,
}

impl FnOracle {
    pub fn new(
        dim: usize,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        subgradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            value: Box::new(value),
            subgradient: Box::new(subgradient),
            lipschitz: None,
        }
    }

    pub fn with_lipschitz(mut self, bound: f64) -> Self {
        self.lipschitz = Some(bound);
        self
    }
}

impl fmt::Debug for FnOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnOracle")
            .field("dim", &self.dim)
            .field("lipschitz", &self.lipschitz)
            .finish_non_exhaustive()
    }
}

impl ConvexFn for FnOracle {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        (self.subgradient)(x)
    }

    fn lipschitz_bound(&self) -> Option<f64> {
        self.lipschitz
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_value_and_gradient() {
        let f = Affine::new(vec![1.0, -2.0], 0.5);
        assert_eq!(f.value(&[3.0, 1.0]), 1.5);
        assert_eq!(f.subgradient(&[0.0, 0.0]), vec![1.0, -2.0]);
        assert!((f.lipschitz_bound().unwrap() - 5f64.sqrt()).abs() < 1e-15);
        assert!(f.is_affine());
    }

    #[test]
    fn squared_distance_matches_closed_form() {
        let f = Quadratic::squared_distance(&[6.0], 1.0);
        assert_eq!(f.value(&[1.0]), 25.0);
        assert_eq!(f.subgradient(&[1.0]), vec![-10.0]);
        assert_eq!(f.gradient_bound_on_box(&[0.0], &[10.0]), 12.0);
    }

    #[test]
    fn asymmetric_hessian_rejected() {
        assert!(Quadratic::new(vec![1.0, 2.0, 0.0, 1.0], vec![0.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn l1_kink_takes_first_branch() {
        let f = WeightedL1::new(vec![2.0, 3.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(f.subgradient(&[1.0, 0.0]), vec![2.0, -3.0]);
        assert_eq!(f.value(&[1.0, 0.0]), 3.0);
        assert!(WeightedL1::new(vec![-1.0], vec![0.0]).is_err());
    }

    #[test]
    fn max_affine_tie_lowest_index() {
        let f = MaxAffine::new(vec![
            Affine::new(vec![1.0], 0.0),
            Affine::new(vec![-1.0], 0.0),
        ])
        .unwrap();
        assert_eq!(f.active_piece(&[0.0]), 0);
        assert_eq!(f.subgradient(&[0.0]), vec![1.0]);
        assert_eq!(f.subgradient(&[-0.5]), vec![-1.0]);
        assert_eq!(f.value(&[-0.5]), 0.5);
        assert_eq!(f.lipschitz_bound(), Some(1.0));
    }
}
