//! Linear algebra of so(n) ⋉ ℝⁿ.
//!
//! Conventions used by every other module:
//!
//! * `(x∧y)z = ⟨x,z⟩y − ⟨y,z⟩x`, i.e. the matrix `y xᵀ − x yᵀ`;
//! * `⟨ξ + x, η + y⟩ = −½ Tr(ξη) + x·y`.
//!
//! With these, `⟨ξx, y⟩ = ⟨ξ, x∧y⟩` and the family `e_i∧e_j` (i < j) is
//! orthonormal.

use crate::{Matrix, Vector};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LieError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("dimension {0} is too small (need n >= 2)")]
    TooSmall(usize),
    #[error("matrix is not {0}x{0}")]
    NotSquare(usize),
}

/// Antisymmetric matrix stored by its strict upper triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct Skew {
    n: usize,
    upper: Vec<f64>,
}

impl Skew {
    pub fn zeros(n: usize) -> Self {
        Skew {
            n,
            upper: vec![0.0; n * n.saturating_sub(1) / 2],
        }
    }

    fn index(n: usize, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < n);
        i * (2 * n - i - 1) / 2 + (j - i - 1)
    }

    /// Antisymmetric part of `m`.
    pub fn from_matrix(m: &Matrix) -> Result<Self, LieError> {
        let n = m.nrows();
        if m.ncols() != n {
            return Err(LieError::NotSquare(n));
        }
        let mut s = Skew::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                s.upper[Self::index(n, i, j)] = 0.5 * (m[(i, j)] - m[(j, i)]);
            }
        }
        Ok(s)
    }

    /// The basis element `e_i∧e_j` (zero-based).
    pub fn basis(n: usize, i: usize, j: usize) -> Self {
        let m = wedge(&unit(n, i), &unit(n, j));
        Skew::from_matrix(&m).expect("square")
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        use std::cmp::Ordering::*;
        match i.cmp(&j) {
            Less => self.upper[Self::index(self.n, i, j)],
            Greater => -self.upper[Self::index(self.n, j, i)],
            Equal => 0.0,
        }
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }
}

/// An element ξ + x of so(n) ⋉ ℝⁿ.
#[derive(Debug, Clone, PartialEq)]
pub struct LieElement {
    pub skew: Skew,
    pub vec: Vector,
}

impl LieElement {
    pub fn new(skew: Skew, vec: Vector) -> Result<Self, LieError> {
        if skew.dim() != vec.len() {
            return Err(LieError::DimensionMismatch(skew.dim(), vec.len()));
        }
        Ok(LieElement { skew, vec })
    }

    pub fn rotation(xi: &Matrix) -> Result<Self, LieError> {
        let n = xi.nrows();
        Ok(LieElement {
            skew: Skew::from_matrix(xi)?,
            vec: Vector::zeros(n),
        })
    }

    pub fn translation(x: &Vector) -> Self {
        LieElement {
            skew: Skew::zeros(x.len()),
            vec: x.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.vec.len()
    }
}

/// Standard basis vector e_i (zero-based).
pub fn unit(n: usize, i: usize) -> Vector {
    let mut v = Vector::zeros(n);
    v[i] = 1.0;
    v
}

/// `x∧y`, acting as `z ↦ ⟨x,z⟩y − ⟨y,z⟩x`.
///
/// # Panics
/// On length mismatch; see [`try_wedge`].
pub fn wedge(x: &Vector, y: &Vector) -> Matrix {
    try_wedge(x, y).expect("wedge: dimension mismatch")
}

pub fn try_wedge(x: &Vector, y: &Vector) -> Result<Matrix, LieError> {
    if x.len() != y.len() {
        return Err(LieError::DimensionMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(LieError::TooSmall(x.len()));
    }
    Ok(y * x.transpose() - x * y.transpose())
}

/// `⟨ξ, η⟩ = −½ Tr(ξη)` on so(n).
pub fn inner_so(xi: &Matrix, eta: &Matrix) -> f64 {
    -0.5 * xi.component_mul(&eta.transpose()).sum()
}

pub fn norm_so(xi: &Matrix) -> f64 {
    inner_so(xi, xi).max(0.0).sqrt()
}

/// Matrix commutator.
pub fn commutator(a: &Matrix, b: &Matrix) -> Matrix {
    a * b - b * a
}

pub fn bracket(a: &LieElement, b: &LieElement) -> Result<LieElement, LieError> {
    if a.dim() != b.dim() {
        return Err(LieError::DimensionMismatch(a.dim(), b.dim()));
    }
    let xi = a.skew.to_matrix();
    let eta = b.skew.to_matrix();
    Ok(LieElement {
        skew: Skew::from_matrix(&commutator(&xi, &eta))?,
        vec: &xi * &b.vec - &eta * &a.vec,
    })
}

pub fn inner(a: &LieElement, b: &LieElement) -> f64 {
    inner_so(&a.skew.to_matrix(), &b.skew.to_matrix()) + a.vec.dot(&b.vec)
}

/// `x⊥ = x − ⟨x,e₁⟩e₁`.
pub fn perp(x: &Vector) -> Vector {
    let mut y = x.clone();
    y[0] = 0.0;
    y
}

/// Splits ξ into its so(n−1) part and its e₁∧ℝ^{n−1} part.
pub fn split_so(xi: &Matrix) -> (Matrix, Matrix) {
    let n = xi.nrows();
    let e1 = unit(n, 0);
    let radial = wedge(&e1, &(xi * &e1));
    (xi - &radial, radial)
}

/// `Ω⁰ = ½(𝛀 − e₁∧𝛀e₁)`.
pub fn omega_zero(omega: &Matrix) -> Matrix {
    0.5 * split_so(omega).0
}

/// `Ω̃ = e₁∧𝛀e₁ + Ω⁰`.
pub fn omega_tilde(omega: &Matrix) -> Matrix {
    let (tangent, radial) = split_so(omega);
    radial + 0.5 * tangent
}

/// Embed an (n−1)-vector of normal components as an n-vector ⊥ e₁.
pub fn from_normal(z: &Vector) -> Vector {
    let mut v = Vector::zeros(z.len() + 1);
    v.rows_mut(1, z.len()).copy_from(z);
    v
}

/// Normal components (drop the e₁ entry).
pub fn to_normal(x: &Vector) -> Vector {
    x.rows(1, x.len() - 1).into_owned()
}

/// Matrix exponential of a skew matrix via scaling and squaring.
pub fn expm(a: &Matrix) -> Matrix {
    a.clone().exp()
}
