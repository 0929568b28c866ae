//! Product quadrature for the normalized Haar measure on SO(3) and SO(4).

use crate::par::{self, Execution};
use crate::Matrix;
use gauss_quad::legendre::GaussLegendre;
use rand::Rng;
use std::f64::consts::TAU;
use std::num::NonZeroUsize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HaarError {
    #[error("Haar quadrature is available for SO(3) and SO(4), not SO({0})")]
    Unsupported(usize),
    #[error("resolution {resolution} too coarse: normalization defect {defect:e}")]
    TooCoarse { resolution: usize, defect: f64 },
}

/// Nodes and weights with `Σ wᵢ = 1`.
#[derive(Debug, Clone)]
pub struct HaarRule {
    pub n: usize,
    pub nodes: Vec<Matrix>,
    pub weights: Vec<f64>,
}

fn legendre_unit(r: usize) -> Vec<(f64, f64)> {
    let gl = GaussLegendre::new(NonZeroUsize::new(r).expect("resolution >= 1"));
    gl.as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect()
}

fn rot(n: usize, i: usize, j: usize, a: f64) -> Matrix {
    let mut m = Matrix::identity(n, n);
    let (c, s) = (a.cos(), a.sin());
    m[(i, i)] = c;
    m[(j, j)] = c;
    m[(i, j)] = -s;
    m[(j, i)] = s;
    m
}

/// SO(3) in ZYZ Euler angles: trapezoid in α, γ, Gauss–Legendre in cos β.
pub fn so3_rule(resolution: usize) -> HaarRule {
    let r = resolution.max(1);
    let gl = legendre_unit(r);
    let mut nodes = Vec::with_capacity(r * r * r);
    let mut weights = Vec::with_capacity(r * r * r);
    for a in 0..r {
        let alpha = TAU * a as f64 / r as f64;
        let ra = rot(3, 0, 1, alpha);
        for &(s, wb) in &gl {
            let beta = (2.0 * s - 1.0).acos();
            let rab = &ra * rot(3, 2, 0, beta);
            for g in 0..r {
                let gamma = TAU * g as f64 / r as f64;
                nodes.push(&rab * rot(3, 0, 1, gamma));
                weights.push(wb / (r * r) as f64);
            }
        }
    }
    HaarRule { n: 3, nodes, weights }
}

/// Left and right multiplication by a unit quaternion, as 4×4 matrices.
fn quaternion_left(q: [f64; 4]) -> Matrix {
    let [a, b, c, d] = q;
    Matrix::from_row_slice(4, 4, &[a, -b, -c, -d, b, a, -d, c, c, d, a, -b, d, -c, b, a])
}

fn quaternion_right(q: [f64; 4]) -> Matrix {
    let [a, b, c, d] = q;
    Matrix::from_row_slice(4, 4, &[a, -b, -c, -d, b, a, d, -c, c, -d, a, b, d, c, -b, a])
}

/// S³ in Hopf coordinates `(cos η e^{iξ₁}, sin η e^{iξ₂})`; uniform in
/// `sin²η`, so Gauss–Legendre there and trapezoid in both angles.
fn sphere3_rule(r: usize) -> Vec<([f64; 4], f64)> {
    let gl = legendre_unit(r);
    let mut out = Vec::with_capacity(r * r * r);
    for &(s, ws) in &gl {
        let (ce, se) = ((1.0 - s).sqrt(), s.sqrt());
        for i in 0..r {
            let x1 = TAU * i as f64 / r as f64;
            for j in 0..r {
                let x2 = TAU * j as f64 / r as f64;
                out.push((
                    [ce * x1.cos(), ce * x1.sin(), se * x2.cos(), se * x2.sin()],
                    ws / (r * r) as f64,
                ));
            }
        }
    }
    out
}

/// SO(4) through its double cover `S³ × S³ → SO(4)`, `x ↦ p x q̄`.
pub fn so4_rule(resolution: usize) -> HaarRule {
    let s3 = sphere3_rule(resolution.max(1));
    let mut nodes = Vec::with_capacity(s3.len() * s3.len());
    let mut weights = Vec::with_capacity(s3.len() * s3.len());
    for (p, wp) in &s3 {
        let lp = quaternion_left(*p);
        for (q, wq) in &s3 {
            let [a, b, c, d] = *q;
            nodes.push(&lp * quaternion_right([a, -b, -c, -d]));
            weights.push(wp * wq);
        }
    }
    HaarRule { n: 4, nodes, weights }
}

impl HaarRule {
    pub fn new(n: usize, resolution: usize) -> Result<Self, HaarError> {
        let rule = match n {
            3 => so3_rule(resolution),
            4 => so4_rule(resolution),
            _ => return Err(HaarError::Unsupported(n)),
        };
        let defect = rule.normalization_defect();
        if defect > 1e-10 {
            return Err(HaarError::TooCoarse { resolution, defect });
        }
        Ok(rule)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Deviation from the exact Haar moments `E[1] = 1`, `E[wᵢⱼ] = 0`,
    /// `E[wᵢⱼ²] = 1/n` and `E[w₁₁w₂₂] = 0`.
    pub fn normalization_defect(&self) -> f64 {
        let n = self.n;
        let total: f64 = self.weights.iter().sum();
        let mut d = (total - 1.0).abs();
        for i in 0..n {
            for j in 0..n {
                let m1 = self.integrate(Execution::Sequential, |w| w[(i, j)]);
                let m2 = self.integrate(Execution::Sequential, |w| w[(i, j)] * w[(i, j)]);
                d = d.max(m1.abs()).max((m2 - 1.0 / n as f64).abs());
            }
        }
        d.max(self.integrate(Execution::Sequential, |w| w[(0, 0)] * w[(1, 1)]).abs())
    }

    pub fn integrate<F>(&self, exec: Execution, f: F) -> f64
    where
        F: Fn(&Matrix) -> f64 + Sync + Send,
    {
        par::sum_range(exec, self.len(), |i| self.weights[i] * f(&self.nodes[i]))
    }
}

/// `Y_{e₁∧eⱼ} f (w) = d/dt f(w exp(t e₁∧eⱼ))` by a five-point stencil.
pub fn fundamental_derivative<F: Fn(&Matrix) -> f64>(f: &F, w: &Matrix, j: usize) -> f64 {
    let n = w.nrows();
    let h = 1e-3;
    let at = |t: f64| f(&(w * rot(n, j, 0, t)));
    (at(-2.0 * h) - 8.0 * at(-h) + 8.0 * at(h) - at(2.0 * h)) / (12.0 * h)
}

/// `f(W) = Σ aᵢⱼ Wᵢⱼ + Σ bᵢⱼₖₗ Wᵢⱼ Wₖₗ` with uniform random coefficients.
///
/// Polynomials of degree 2 in the entries only see representations of
/// bounded weight, so Haar rules of moderate resolution integrate them and
/// their derivatives exactly.
pub fn random_quadratic<R: Rng>(n: usize, rng: &mut R) -> impl Fn(&Matrix) -> f64 + Sync + Send {
    let lin: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let quad: Vec<f64> = (0..n.pow(4)).map(|_| rng.random_range(-1.0..1.0)).collect();
    move |w: &Matrix| {
        let e = w.as_slice();
        let mut s: f64 = lin.iter().zip(e).map(|(a, b)| a * b).sum();
        for (i, a) in e.iter().enumerate() {
            for (j, b) in e.iter().enumerate() {
                s += quad[i * e.len() + j] * a * b;
            }
        }
        s
    }
}

/// `(‖f − f̄‖², ‖∇f·e₁‖², ratio)` under the normalized Haar measure.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct PoincareReport {
    pub variance: f64,
    pub horizontal_energy: f64,
    pub ratio: f64,
}

pub fn poincare_check<F>(rule: &HaarRule, exec: Execution, f: F) -> PoincareReport
where
    F: Fn(&Matrix) -> f64 + Sync + Send,
{
    let mean = rule.integrate(exec, &f);
    let variance = rule.integrate(exec, |w| (f(w) - mean).powi(2));
    let horizontal_energy = rule.integrate(exec, |w| {
        (1..rule.n).map(|j| fundamental_derivative(&f, w, j).powi(2)).sum()
    });
    let ratio = if horizontal_energy > 0.0 {
        variance / horizontal_energy
    } else if variance > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    PoincareReport {
        variance,
        horizontal_energy,
        ratio,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_are_rotations() {
        for rule in [so3_rule(4), so4_rule(3)] {
            for w in rule.nodes.iter().take(50) {
                let n = rule.n;
                assert!((w.transpose() * w - Matrix::identity(n, n)).norm() < 1e-12);
                assert!((w.determinant() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn coarse_rule_is_rejected() {
        assert!(matches!(HaarRule::new(3, 1), Err(HaarError::TooCoarse { .. })));
        assert!(matches!(HaarRule::new(5, 8), Err(HaarError::Unsupported(5))));
    }
}
