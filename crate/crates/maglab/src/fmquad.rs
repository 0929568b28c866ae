//! Weak operator identities on FM(T³) by torus × Haar product quadrature.
//!
//! On a flat torus the frame bundle is `Tⁿ × SO(n)` and the Liouville
//! measure is the product of the flat volume and Haar measure, so
//! `⟨Zf, h⟩ + ⟨f, Zh⟩` is a finite sum once both factors are discretized.

use crate::framebundle::{
    frame_omega, FmField, FmTangent, FrameError, FrameGenerator, FundamentalOf, MagneticStandard,
};
use crate::haar::{HaarError, HaarRule};
use crate::liealg::{omega_zero, unit, wedge};
use crate::manifold::MagneticSystem;
use crate::par::{self, Execution};
use crate::{Matrix, Vector};
use rand::Rng;
use serde::Serialize;
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FmQuadError {
    #[error("frame-bundle quadrature needs a flat periodic metric on T³ or T⁴; {0}")]
    Unsupported(String),
    #[error(transparent)]
    Haar(#[from] HaarError),
    #[error(transparent)]
    Frame(#[from] FrameError),
}

/// A smooth function on the ambient space of FM, `(p, W) ↦ f`.
pub trait FmFunction: Sync {
    fn eval(&self, p: &Vector, w: &Matrix) -> f64;
}

impl<F: Fn(&Vector, &Matrix) -> f64 + Sync> FmFunction for F {
    fn eval(&self, p: &Vector, w: &Matrix) -> f64 {
        self(p, w)
    }
}

/// `Σ cₖ cos(kₖ·p + φₖ) · P_k(W)` with `P_k` a monomial of degree ≤ 3
/// in the frame entries.
#[derive(Debug, Clone)]
pub struct TrigFrameFunction {
    terms: Vec<TrigFrameTerm>,
}

#[derive(Debug, Clone)]
struct TrigFrameTerm {
    coeff: f64,
    freq: Vec<f64>,
    phase: f64,
    entries: Vec<(usize, usize)>,
}

impl TrigFrameFunction {
    pub fn random<R: Rng>(n: usize, terms: usize, rng: &mut R) -> Self {
        let freqs: Vec<Vec<i32>> = (0..terms)
            .map(|_| (0..n).map(|_| rng.random_range(-1..=1)).collect())
            .collect();
        Self::random_with(n, &freqs, rng)
    }

    /// One term per frequency vector in `freqs`.
    pub fn random_with<R: Rng>(n: usize, freqs: &[Vec<i32>], rng: &mut R) -> Self {
        let terms = freqs
            .iter()
            .map(|k| TrigFrameTerm {
                coeff: rng.random_range(-1.0..1.0),
                freq: k.iter().map(|&x| x as f64).collect(),
                phase: rng.random_range(0.0..TAU),
                entries: (0..rng.random_range(1..=3))
                    .map(|_| (rng.random_range(0..n), rng.random_range(0..n)))
                    .collect(),
            })
            .collect();
        TrigFrameFunction { terms }
    }
}

impl FmFunction for TrigFrameFunction {
    fn eval(&self, p: &Vector, w: &Matrix) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let arg: f64 = t.freq.iter().zip(p.iter()).map(|(k, x)| k * x).sum::<f64>() + t.phase;
                let mono: f64 = t.entries.iter().map(|&ij| w[ij]).product();
                t.coeff * arg.cos() * mono
            })
            .sum()
    }
}

/// `Zf` at `(p, W)` by a five-point stencil along the tangent vector.
pub fn derivative(z: &FmTangent, f: &dyn FmFunction, p: &Vector, w: &Matrix) -> f64 {
    let h = 1e-3;
    let at = |s: f64| f.eval(&(p + &z.base * s), &(w + &z.frame * s));
    (at(-2.0 * h) - 8.0 * at(-h) + 8.0 * at(h) - at(2.0 * h)) / (12.0 * h)
}

/// Product rule on `Tⁿ × SO(n)` with total mass 1.
pub struct FmQuadrature<'a> {
    pub system: &'a MagneticSystem,
    pub torus: Vec<Vector>,
    pub haar: HaarRule,
    pub exec: Execution,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct WeakReport {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub scale: f64,
}

impl WeakReport {
    fn new(lhs: f64, rhs: f64, scale: f64) -> Self {
        WeakReport {
            lhs,
            rhs,
            residual: (lhs - rhs).abs(),
            scale,
        }
    }

    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.residual / self.scale
        } else {
            self.residual
        }
    }
}

/// Sign in front of `(n+3) Y_{Ω⁰}` on the right of the structure identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructureSign {
    Minus,
    Plus,
}

/// `Y_{Ω⁰}` as a field on FM.
pub fn omega_zero_field(system: &MagneticSystem) -> FundamentalOf<'_> {
    FundamentalOf {
        xi: Box::new(move |p, w| Ok(omega_zero(&frame_omega(system, p, w)?))),
    }
}

/// `Y_{e₁∧𝛀e₁}` as a field on FM.
pub fn radial_omega_field(system: &MagneticSystem) -> FundamentalOf<'_> {
    FundamentalOf {
        xi: Box::new(move |p, w| {
            let om = frame_omega(system, p, w)?;
            let e1 = unit(om.nrows(), 0);
            Ok(wedge(&e1, &(&om * &e1)))
        }),
    }
}

impl<'a> FmQuadrature<'a> {
    pub fn new(
        system: &'a MagneticSystem,
        torus_resolution: usize,
        haar_resolution: usize,
        exec: Execution,
    ) -> Result<Self, FmQuadError> {
        let n = system.dim();
        let period = system
            .metric
            .period
            .clone()
            .ok_or_else(|| FmQuadError::Unsupported(format!("{} is not periodic", system.name)))?;
        let haar = HaarRule::new(n, haar_resolution).map_err(|e| match e {
            HaarError::Unsupported(_) => FmQuadError::Unsupported(format!("dimension {n}")),
            e => e.into(),
        })?;
        let r = torus_resolution.max(1);
        let torus: Vec<Vector> = (0..r.pow(n as u32))
            .map(|mut idx| {
                Vector::from_fn(n, |i, _| {
                    let k = idx % r;
                    idx /= r;
                    period[i] * k as f64 / r as f64
                })
            })
            .collect();
        for p in torus.iter().take(8) {
            let g = system.metric.metric(p).map_err(FrameError::from)?;
            if (g - Matrix::identity(n, n)).amax() > 1e-14 {
                return Err(FmQuadError::Unsupported(format!("{} is not flat", system.name)));
            }
        }
        Ok(FmQuadrature {
            system,
            torus,
            haar,
            exec,
        })
    }

    pub fn len(&self) -> usize {
        self.torus.len() * self.haar.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sum of `g(p, W)` against the normalized product measure, summed
    /// separately for each output slot.
    fn integrate<const K: usize, G>(&self, g: G) -> Result<[f64; K], FrameError>
    where
        G: Fn(&Vector, &Matrix) -> Result<[f64; K], FrameError> + Sync + Send,
    {
        let m = self.haar.len();
        let scale = 1.0 / self.torus.len() as f64;
        let parts = par::map_range(self.exec, self.len(), |i| {
            let (t, k) = (i / m, i % m);
            g(&self.torus[t], &self.haar.nodes[k]).map(|v| v.map(|x| x * self.haar.weights[k] * scale))
        });
        let mut acc = [0.0; K];
        for v in parts {
            for (a, x) in acc.iter_mut().zip(v?) {
                *a += x;
            }
        }
        Ok(acc)
    }

    /// `⟨Zf, h⟩` against `−⟨f, Zh⟩`.
    pub fn skew_defect(
        &self,
        z: &dyn FmField,
        f: &dyn FmFunction,
        h: &dyn FmFunction,
    ) -> Result<WeakReport, FrameError> {
        let [a, b] = self.integrate(|p, w| {
            let zz = z.eval(p, w)?;
            Ok([
                derivative(&zz, f, p, w) * h.eval(p, w),
                f.eval(p, w) * derivative(&zz, h, p, w),
            ])
        })?;
        Ok(WeakReport::new(a, -b, a.abs() + b.abs()))
    }

    /// Weak form of `∇ᵥ*(e₁∧∇ʰσ) − (e₁∧∇ʰσ)*∇ᵥ = (n−1)X^σ ∓ (n+3)Y_{Ω⁰} − Y_{e₁∧𝛀e₁}`.
    pub fn structure_identity(
        &self,
        f: &dyn FmFunction,
        h: &dyn FmFunction,
        sign: StructureSign,
    ) -> Result<WeakReport, FrameError> {
        let system = self.system;
        let n = system.dim();
        let nf = n as f64;
        let generator = FrameGenerator { system };
        let oz = omega_zero_field(system);
        let radial = radial_omega_field(system);
        let c0 = match sign {
            StructureSign::Minus => -(nf + 3.0),
            StructureSign::Plus => nf + 3.0,
        };
        let e1 = unit(n, 0);
        let [lhs, rhs, scale] = self.integrate(|p, w| {
            let mut lhs = 0.0;
            let mut scale = 0.0;
            for j in 1..n {
                let b = MagneticStandard {
                    system,
                    x: unit(n, j),
                }
                .eval(p, w)?;
                let y = FmTangent {
                    base: Vector::zeros(n),
                    frame: w * wedge(&e1, &unit(n, j)),
                };
                let t1 = derivative(&b, f, p, w) * derivative(&y, h, p, w);
                let t2 = derivative(&y, f, p, w) * derivative(&b, h, p, w);
                lhs += t1 - t2;
                scale += t1.abs() + t2.abs();
            }
            let hv = h.eval(p, w);
            let xs = derivative(&generator.eval(p, w)?, f, p, w) * (nf - 1.0);
            let yo = derivative(&oz.eval(p, w)?, f, p, w) * c0;
            let yr = -derivative(&radial.eval(p, w)?, f, p, w);
            let rhs = (xs + yo + yr) * hv;
            scale += (xs.abs() + yo.abs() + yr.abs()) * hv.abs();
            Ok([lhs, rhs, scale])
        })?;
        Ok(WeakReport::new(lhs, rhs, scale))
    }
}
