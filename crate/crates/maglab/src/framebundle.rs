//! The oriented orthonormal frame bundle FM in chart coordinates.
//!
//! A point is a raw pair `(p, W)` with `Wᵀ g(p) W = I`. Vector fields are
//! evaluation maps defined on all pairs with `W` invertible, so that a
//! finite-difference Jacobian may step slightly off the constraint; for
//! fields tangent to FM the bracket does not depend on the extension.

use crate::liealg::{omega_tilde, unit};
use crate::magtensor::contorsion_with;
use crate::manifold::{ChartedMetric, MagneticSystem, ManifoldError};
use crate::tolerances::{BRACKET_STEP, FRAME_VALID};
use crate::{Matrix, Vector};
use rand::Rng;
use std::ops::{Add, Mul, Sub};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrameError {
    #[error("frame is not orthonormal (defect {0:e})")]
    NotOrthonormal(f64),
    #[error("frame is negatively oriented")]
    Orientation,
    #[error("bracket step {0:e} underflows")]
    StepUnderflow(f64),
    #[error("frame drifted off the bundle (defect {0:e})")]
    Drift(f64),
    #[error("frame matrix is ill-conditioned (condition {0:e})")]
    IllConditioned(f64),
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
}

/// A point of FM.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePoint {
    pub p: Vector,
    pub w: Matrix,
}

fn symmetric_inv_sqrt(s: &Matrix) -> Matrix {
    let eig = s.clone().symmetric_eigen();
    let d = eig.eigenvalues.map(|l| 1.0 / l.sqrt());
    &eig.eigenvectors * Matrix::from_diagonal(&d) * eig.eigenvectors.transpose()
}

/// `|WᵀgW − I|` in Frobenius norm.
pub fn orthonormality_defect(g: &Matrix, w: &Matrix) -> f64 {
    let n = w.nrows();
    (w.transpose() * g * w - Matrix::identity(n, n)).norm()
}

impl FramePoint {
    pub fn new(metric: &ChartedMetric, p: Vector, w: Matrix) -> Result<Self, FrameError> {
        let g = metric.metric(&p)?;
        let d = orthonormality_defect(&g, &w);
        if d > FRAME_VALID {
            return Err(FrameError::NotOrthonormal(d));
        }
        if w.determinant() <= 0.0 {
            return Err(FrameError::Orientation);
        }
        Ok(FramePoint { p, w })
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }

    /// Frame with first column `v/|v|`, completed by Gram–Schmidt.
    pub fn from_velocity(metric: &ChartedMetric, p: Vector, v: &Vector) -> Result<Self, FrameError> {
        let n = p.len();
        let g = metric.metric(&p)?;
        let mut cols: Vec<Vector> = vec![v.clone()];
        cols.extend((0..n).map(|i| unit(n, i)));
        let mut basis: Vec<Vector> = Vec::with_capacity(n);
        for c in cols {
            let mut u = c;
            for b in &basis {
                let proj = (&g * b).dot(&u);
                u -= b * proj;
            }
            let norm = (&g * &u).dot(&u).sqrt();
            if norm > 1e-8 {
                basis.push(u / norm);
            }
            if basis.len() == n {
                break;
            }
        }
        let mut w = Matrix::from_columns(&basis);
        if w.determinant() < 0.0 {
            let last = -w.column(n - 1);
            w.set_column(n - 1, &last);
        }
        FramePoint::new(metric, p, w)
    }

    /// Random frame at `p` from the Gaussian QR construction.
    pub fn random<R: Rng>(metric: &ChartedMetric, p: Vector, rng: &mut R) -> Result<Self, FrameError> {
        let n = p.len();
        let g = metric.metric(&p)?;
        let a = Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let q = a.qr().q();
        let l = g
            .cholesky()
            .ok_or_else(|| ManifoldError::SingularMetric(p.as_slice().to_vec()))?
            .l();
        let lt_inv = l.transpose().try_inverse().expect("cholesky factor invertible");
        let mut w = lt_inv * q;
        if w.determinant() < 0.0 {
            let last = -w.column(n - 1);
            w.set_column(n - 1, &last);
        }
        let w = &w * symmetric_inv_sqrt(&(w.transpose() * metric.metric(&p)? * &w));
        FramePoint::new(metric, p, w)
    }

    pub fn defect(&self, metric: &ChartedMetric) -> Result<f64, FrameError> {
        Ok(orthonormality_defect(&metric.metric(&self.p)?, &self.w))
    }

    /// Polar projection `W ← W (WᵀgW)^{−1/2}`.
    pub fn reproject(&mut self, metric: &ChartedMetric) -> Result<(), FrameError> {
        let g = metric.metric(&self.p)?;
        let s = self.w.transpose() * g * &self.w;
        self.w = &self.w * symmetric_inv_sqrt(&s);
        Ok(())
    }

    /// `W⁻¹ = Wᵀg`.
    pub fn inverse(&self, metric: &ChartedMetric) -> Result<Matrix, FrameError> {
        Ok(self.w.transpose() * metric.metric(&self.p)?)
    }

    /// Velocity `w₁`.
    pub fn velocity(&self) -> Vector {
        self.w.column(0).into_owned()
    }

    /// Right action by a rotation `R`.
    pub fn rotate(&self, r: &Matrix) -> FramePoint {
        FramePoint {
            p: self.p.clone(),
            w: &self.w * r,
        }
    }
}

/// Tangent vector to FM in chart coordinates `(δp, δW)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FmTangent {
    pub base: Vector,
    pub frame: Matrix,
}

impl FmTangent {
    pub fn zeros(n: usize) -> Self {
        FmTangent {
            base: Vector::zeros(n),
            frame: Matrix::zeros(n, n),
        }
    }

    pub fn norm(&self) -> f64 {
        (self.base.norm_squared() + self.frame.norm_squared()).sqrt()
    }

    /// First-order change of `WᵀgW` along the vector.
    pub fn constraint_rate(&self, metric: &ChartedMetric, p: &Vector, w: &Matrix) -> Result<f64, FrameError> {
        let jet = metric.jet(p)?;
        let mut dg = Matrix::zeros(p.len(), p.len());
        for k in 0..p.len() {
            dg += &jet.dg[k] * self.base[k];
        }
        let r = self.frame.transpose() * &jet.g * w + w.transpose() * dg * w + w.transpose() * &jet.g * &self.frame;
        Ok(r.norm())
    }
}

impl Add for FmTangent {
    type Output = FmTangent;
    fn add(self, o: FmTangent) -> FmTangent {
        FmTangent {
            base: self.base + o.base,
            frame: self.frame + o.frame,
        }
    }
}

impl Sub for FmTangent {
    type Output = FmTangent;
    fn sub(self, o: FmTangent) -> FmTangent {
        FmTangent {
            base: self.base - o.base,
            frame: self.frame - o.frame,
        }
    }
}

impl Mul<f64> for FmTangent {
    type Output = FmTangent;
    fn mul(self, s: f64) -> FmTangent {
        FmTangent {
            base: self.base * s,
            frame: self.frame * s,
        }
    }
}

/// A vector field on (an open neighbourhood of) FM.
pub trait FmField: Sync {
    fn eval(&self, p: &Vector, w: &Matrix) -> Result<FmTangent, FrameError>;

    fn at(&self, x: &FramePoint) -> Result<FmTangent, FrameError> {
        self.eval(&x.p, &x.w)
    }
}

/// Fundamental field `Y_ξ = (0, Wξ)`.
pub struct Fundamental {
    pub xi: Matrix,
}

impl FmField for Fundamental {
    fn eval(&self, p: &Vector, w: &Matrix) -> Result<FmTangent, FrameError> {
        Ok(FmTangent {
            base: Vector::zeros(p.len()),
            frame: w * &self.xi,
        })
    }
}

type FrameFn<'a> = dyn Fn(&Vector, &Matrix) -> Result<Matrix, FrameError> + Sync + 'a;

/// Fundamental field of a point-dependent `ξ(p, W)`.
pub struct FundamentalOf<'a> {
    pub xi: Box<FrameFn<'a>>,
}

impl FmField for FundamentalOf<'_> {
    fn eval(&self, p: &Vector, w: &Matrix) -> Result<FmTangent, FrameError> {
        let xi = (self.xi)(p, w)?;
        Ok(FmTangent {
            base: Vector::zeros(p.len()),
            frame: w * xi,
        })
    }
}

/// Horizontal standard field `B_x = (Wx, −Γ(Wx)W)`.
pub struct Standard<'a> {
    pub system: &'a MagneticSystem,
    pub x: Vector,
}

fn standard(system: &MagneticSystem, x: &Vector, p: &Vector, w: &Matrix) -> Result<FmTangent, FrameError> {
    let geo = system.metric.connection(p)?;
    let v = w * x;
    let frame = -(geo.gamma_dir(&v) * w);
    Ok(FmTangent { base: v, frame })
}

/// `𝛀 = W⁻¹ΩW` with a true inverse, valid off the constraint.
pub fn frame_omega(system: &MagneticSystem, p: &Vector, w: &Matrix) -> Result<Matrix, FrameError> {
    let om = system.lorentz(p)?;
    let wi = w
        .clone()
        .try_inverse()
        .ok_or(FrameError::IllConditioned(f64::INFINITY))?;
    Ok(wi * om * w)
}

impl FmField for Standard<'_> {
    fn eval(&self, p: &Vector, w: &Matrix) -> Result<FmTangent, FrameError> {
        standard(self.system, &self.x, p, w)
    }
}

/// Magnetic standard field `B^σ_x = B_x − Y_{T_x}`.
pub struct MagneticStandard<'a> {
    pub system: &'a MagneticSystem,
    pub x: Vector,
}

impl FmField for MagneticStandard<'_> {
    fn eval(&self, p: &Vector, w: &Matrix) -> Result<FmTangent, FrameError> {
        let mut t = standard(self.system, &self.x, p, w)?;
        let om = frame_omega(self.system, p, w)?;
        t.frame -= w * contorsion_with(&om, &self.x);
        Ok(t)
    }
}

/// Magnetic frame flow generator `X^σ = B_{e₁} + Y_{Ω̃}`.
pub struct FrameGenerator<'a> {
    pub system: &'a MagneticSystem,
}

impl FmField for FrameGenerator<'_> {
    fn eval(&self, p: &Vector, w: &Matrix) -> Result<FmTangent, FrameError> {
        let n = p.len();
        let mut t = standard(self.system, &unit(n, 0), p, w)?;
        let om = frame_omega(self.system, p, w)?;
        t.frame += w * omega_tilde(&om);
        Ok(t)
    }
}

/// Linear combination of fields with constant coefficients.
pub struct Combination<'a> {
    pub terms: Vec<(f64, Box<dyn FmField + 'a>)>,
}

impl FmField for Combination<'_> {
    fn eval(&self, p: &Vector, w: &Matrix) -> Result<FmTangent, FrameError> {
        let mut acc = FmTangent::zeros(p.len());
        for (c, f) in &self.terms {
            acc = acc + f.eval(p, w)? * *c;
        }
        Ok(acc)
    }
}

fn displaced(p: &Vector, w: &Matrix, t: &FmTangent, s: f64) -> (Vector, Matrix) {
    (p + &t.base * s, w + &t.frame * s)
}

/// Directional derivative `DV(w)[u]` by central differences.
pub fn fd_directional(
    v: &dyn FmField,
    p: &Vector,
    w: &Matrix,
    u: &FmTangent,
    h: f64,
) -> Result<FmTangent, FrameError> {
    let (p1, w1) = displaced(p, w, u, h);
    let (p0, w0) = displaced(p, w, u, -h);
    Ok((v.eval(&p1, &w1)? - v.eval(&p0, &w0)?) * (0.5 / h))
}

/// `[U, V](w) = DV·U − DU·V` with central-difference Jacobians of step `h`.
pub fn fd_bracket_with_step(
    system: &MagneticSystem,
    u: &dyn FmField,
    v: &dyn FmField,
    at: &FramePoint,
    h: f64,
) -> Result<FmTangent, FrameError> {
    if !(h > 1e-12) {
        return Err(FrameError::StepUnderflow(h));
    }
    let defect = at.defect(&system.metric)?;
    if defect > 1e-6 {
        return Err(FrameError::Drift(defect));
    }
    let uu = u.at(at)?;
    let vv = v.at(at)?;
    let dv_u = fd_directional(v, &at.p, &at.w, &uu, h)?;
    let du_v = fd_directional(u, &at.p, &at.w, &vv, h)?;
    Ok(dv_u - du_v)
}

/// Bracket oracle with the default step.
pub fn fd_bracket(
    system: &MagneticSystem,
    u: &dyn FmField,
    v: &dyn FmField,
    at: &FramePoint,
) -> Result<FmTangent, FrameError> {
    fd_bracket_with_step(system, u, v, at, BRACKET_STEP)
}

/// Coefficients of `Z = c·X^σ + B^σ_h + Y_ξ` with `h ⊥ e₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct FmDecomposition {
    pub c: f64,
    /// Normal components (length n − 1).
    pub h: Vector,
    pub xi: Matrix,
}

impl FmDecomposition {
    /// The full frame vector `c e₁ + h`.
    pub fn direction(&self) -> Vector {
        let mut x = crate::liealg::from_normal(&self.h);
        x[0] = self.c;
        x
    }
}

pub fn decompose_fm_vector(
    system: &MagneticSystem,
    at: &FramePoint,
    z: &FmTangent,
) -> Result<FmDecomposition, FrameError> {
    let sv = at.w.singular_values();
    let cond = sv.max() / sv.min();
    if !(cond < 1e8) {
        return Err(FrameError::IllConditioned(cond));
    }
    let wi = at.inverse(&system.metric)?;
    let x = &wi * &z.base;
    let b = MagneticStandard {
        system,
        x: x.clone(),
    }
    .at(at)?;
    let rem = &wi * (&z.frame - &b.frame);
    let xi = 0.5 * (&rem - rem.transpose());
    Ok(FmDecomposition {
        c: x[0],
        h: crate::liealg::to_normal(&x),
        xi,
    })
}

/// Rebuild the tangent vector from its decomposition.
pub fn compose_fm_vector(
    system: &MagneticSystem,
    at: &FramePoint,
    d: &FmDecomposition,
) -> Result<FmTangent, FrameError> {
    let b = MagneticStandard {
        system,
        x: d.direction(),
    }
    .at(at)?;
    let y = Fundamental { xi: d.xi.clone() }.at(at)?;
    Ok(b + y)
}

/// Uniform random chart point suitable for the system's domain.
pub fn random_point<R: Rng>(system: &MagneticSystem, rng: &mut R) -> Vector {
    let n = system.dim();
    match &system.metric.period {
        Some(per) => Vector::from_fn(n, |i, _| rng.random_range(0.0..per[i])),
        None => loop {
            let p = Vector::from_fn(n, |_, _| rng.random_range(-0.6..0.6));
            if p.norm() < 0.6 && system.metric.contains(&p) {
                break p;
            }
        },
    }
}

pub fn random_frame<R: Rng>(system: &MagneticSystem, rng: &mut R) -> Result<FramePoint, FrameError> {
    let p = random_point(system, rng);
    FramePoint::random(&system.metric, p, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::builtin;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_bad_frames() {
        let s = builtin("flat-t2").unwrap();
        let p = Vector::zeros(2);
        assert!(matches!(
            FramePoint::new(&s.metric, p.clone(), Matrix::identity(2, 2) * 2.0),
            Err(FrameError::NotOrthonormal(_))
        ));
        let flip = Matrix::from_diagonal(&Vector::from_vec(vec![1.0, -1.0]));
        assert_eq!(
            FramePoint::new(&s.metric, p, flip),
            Err(FrameError::Orientation)
        );
    }

    #[test]
    fn random_frames_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for name in ["conformal-t2", "sphere3", "hyperbolic3", "kahler-t4"] {
            let s = builtin(name).unwrap();
            let f = random_frame(&s, &mut rng).unwrap();
            assert!(f.defect(&s.metric).unwrap() < 1e-12);
        }
    }

    #[test]
    fn bracket_underflow() {
        let s = builtin("flat-t2").unwrap();
        let w = FramePoint::new(&s.metric, Vector::zeros(2), Matrix::identity(2, 2)).unwrap();
        let y = Fundamental {
            xi: Matrix::zeros(2, 2),
        };
        assert_eq!(
            fd_bracket_with_step(&s, &y, &y, &w, 1e-14),
            Err(FrameError::StepUnderflow(1e-14))
        );
    }
}
