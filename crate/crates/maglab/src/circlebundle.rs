//! Spectral calculus on the unit circle bundle of a conformal torus.
//!
//! Points of SM are `(x₁, x₂, θ)` with `v = e^{−φ}(cos θ, sin θ)`. Fields
//! live on a uniform periodic grid; derivatives are FFT-based and
//! integrals use the trapezoidal rule with the Liouville weight
//! `e^{2φ} dx dθ`, which is exact for band-limited integrands.

use crate::framebundle::FramePoint;
use crate::liealg::omega_zero;
use crate::magtensor::CurvatureSample;
use crate::manifold::{ConformalFactor, MagneticSystem};
use crate::par::{self, Execution};
use crate::{Matrix, Vector};
use rand::Rng;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;
use std::f64::consts::TAU;
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CircleError {
    #[error("system `{0}` is not a conformal surface with 2π-periodic chart")]
    NotSurface(String),
    #[error("grid mismatch: {0:?} vs {1:?}")]
    GridMismatch(Grid, Grid),
    #[error("grid sizes must be even and at least 4, got {0:?}")]
    BadGrid(Grid),
    #[error("band limit violated: spectral tail fraction {0:e}")]
    Aliasing(f64),
    #[error("field is not of pure fiber degree {degree} (leakage {leakage:e})")]
    NotPureDegree { degree: usize, leakage: f64 },
    #[error("degree {m} is below the range of the identity (n = 2 needs m ≥ 2)")]
    DegreeTooLow { m: usize },
    #[error("curvature evaluation failed: {0}")]
    Curvature(String),
}

/// Grid shape `N₁ × N₂ × N_θ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Grid {
    pub n1: usize,
    pub n2: usize,
    pub nt: usize,
}

impl Grid {
    pub fn cube(n: usize) -> Self {
        Grid { n1: n, n2: n, nt: n }
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2 * self.nt
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn dims(&self) -> [usize; 3] {
        [self.n1, self.n2, self.nt]
    }

    fn validate(&self) -> Result<(), CircleError> {
        if self.dims().iter().all(|&d| d >= 4 && d % 2 == 0) {
            Ok(())
        } else {
            Err(CircleError::BadGrid(*self))
        }
    }

    pub fn index(&self, i1: usize, i2: usize, k: usize) -> usize {
        (i1 * self.n2 + i2) * self.nt + k
    }

    /// `(x₁, x₂, θ)` of a flat index.
    pub fn coords(&self, idx: usize) -> (f64, f64, f64) {
        let k = idx % self.nt;
        let i2 = (idx / self.nt) % self.n2;
        let i1 = idx / (self.nt * self.n2);
        (
            TAU * i1 as f64 / self.n1 as f64,
            TAU * i2 as f64 / self.n2 as f64,
            TAU * k as f64 / self.nt as f64,
        )
    }

    fn cell(&self) -> f64 {
        TAU.powi(3) / self.len() as f64
    }
}

fn wavenumber(j: usize, len: usize) -> i64 {
    if j <= len / 2 {
        j as i64
    } else {
        j as i64 - len as i64
    }
}

fn transform_axis(data: &mut [Complex64], grid: Grid, axis: usize, inverse: bool, exec: Execution) {
    let dims = grid.dims();
    let len = dims[axis];
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(len)
    } else {
        planner.plan_fft_forward(len)
    };
    let strides = [dims[1] * dims[2], dims[2], 1];
    let stride = strides[axis];
    let (a, b) = match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let starts: Vec<usize> = (0..dims[a])
        .flat_map(|i| (0..dims[b]).map(move |j| i * strides[a] + j * strides[b]))
        .collect();
    let lines = {
        let src = &*data;
        par::map(exec, &starts, |&s| {
            let mut line: Vec<Complex64> = (0..len).map(|i| src[s + i * stride]).collect();
            fft.process(&mut line);
            line
        })
    };
    for (s, line) in starts.iter().zip(lines) {
        for (i, c) in line.into_iter().enumerate() {
            data[s + i * stride] = c;
        }
    }
}

/// Real scalar field on the SM grid.
#[derive(Debug, Clone)]
pub struct FiberField {
    grid: Grid,
    data: Vec<f64>,
    spectrum: OnceLock<Vec<Complex64>>,
}

impl FiberField {
    pub fn zeros(grid: Grid) -> Self {
        Self::from_vec(grid, vec![0.0; grid.len()])
    }

    pub fn from_vec(grid: Grid, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), grid.len(), "data length must match the grid");
        FiberField {
            grid,
            data,
            spectrum: OnceLock::new(),
        }
    }

    pub fn from_fn<F: Fn(f64, f64, f64) -> f64>(grid: Grid, f: F) -> Self {
        let data = (0..grid.len())
            .map(|i| {
                let (x1, x2, t) = grid.coords(i);
                f(x1, x2, t)
            })
            .collect();
        Self::from_vec(grid, data)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn zip_map(&self, o: &FiberField, f: impl Fn(f64, f64) -> f64) -> FiberField {
        assert_eq!(self.grid, o.grid, "grid mismatch");
        FiberField::from_vec(
            self.grid,
            self.data.iter().zip(&o.data).map(|(a, b)| f(*a, *b)).collect(),
        )
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> FiberField {
        FiberField::from_vec(self.grid, self.data.iter().map(|a| f(*a)).collect())
    }

    pub fn add(&self, o: &FiberField) -> FiberField {
        self.zip_map(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &FiberField) -> FiberField {
        self.zip_map(o, |a, b| a - b)
    }

    pub fn mul(&self, o: &FiberField) -> FiberField {
        self.zip_map(o, |a, b| a * b)
    }

    pub fn scale(&self, s: f64) -> FiberField {
        self.map(|a| a * s)
    }

    /// Unnormalized 3D DFT, cached.
    pub fn spectrum(&self) -> &[Complex64] {
        self.spectrum.get_or_init(|| {
            let mut c: Vec<Complex64> = self.data.iter().map(|&x| Complex64::new(x, 0.0)).collect();
            for axis in 0..3 {
                transform_axis(&mut c, self.grid, axis, false, Execution::default());
            }
            c
        })
    }

    /// Real field with the given unnormalized 3D spectrum.
    pub fn from_spectrum(grid: Grid, mut c: Vec<Complex64>) -> Self {
        for axis in 0..3 {
            transform_axis(&mut c, grid, axis, true, Execution::default());
        }
        let s = 1.0 / grid.len() as f64;
        FiberField::from_vec(grid, c.iter().map(|z| z.re * s).collect())
    }

    fn along_axis(&self, axis: usize, exec: Execution, mult: impl Fn(i64, usize) -> Complex64) -> FiberField {
        let len = self.grid.dims()[axis];
        let strides = [self.grid.n2 * self.grid.nt, self.grid.nt, 1];
        let mut c: Vec<Complex64> = self.data.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        transform_axis(&mut c, self.grid, axis, false, exec);
        for (i, z) in c.iter_mut().enumerate() {
            let j = (i / strides[axis]) % len;
            *z *= mult(wavenumber(j, len), len);
        }
        transform_axis(&mut c, self.grid, axis, true, exec);
        let s = 1.0 / len as f64;
        FiberField::from_vec(self.grid, c.iter().map(|z| z.re * s).collect())
    }

    /// Spectral `∂/∂x_axis` (axis 2 is θ). The Nyquist mode is dropped.
    pub fn derivative(&self, axis: usize, exec: Execution) -> FiberField {
        self.along_axis(axis, exec, |k, len| {
            if 2 * k.unsigned_abs() as usize == len {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, k as f64)
            }
        })
    }

    /// Fiber-Fourier modes `±m`.
    pub fn project_degree(&self, m: usize, exec: Execution) -> FiberField {
        self.along_axis(2, exec, |k, _| {
            if k.unsigned_abs() as usize == m {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Largest fiber degree carrying a coefficient above `tol` (relative).
    pub fn fiber_degrees(&self, tol: f64) -> Vec<usize> {
        let g = self.grid;
        let c = self.spectrum();
        let top = c.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        let mut out: Vec<usize> = (0..g.len())
            .filter(|&i| c[i].norm() > tol * top.max(f64::MIN_POSITIVE))
            .map(|i| wavenumber(i % g.nt, g.nt).unsigned_abs() as usize)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Energy fraction in modes with some `|k| > N/3`.
    pub fn tail_fraction(&self) -> f64 {
        let g = self.grid;
        let dims = g.dims();
        let c = self.spectrum();
        let (mut tail, mut total) = (0.0, 0.0);
        for (i, z) in c.iter().enumerate() {
            let k = [i / (g.n2 * g.nt), (i / g.nt) % g.n2, i % g.nt];
            let high = (0..3).any(|a| 3 * wavenumber(k[a], dims[a]).unsigned_abs() as usize > dims[a]);
            let e = z.norm_sqr();
            total += e;
            if high {
                tail += e;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            tail / total
        }
    }

    /// Errors with [`CircleError::Aliasing`] when the tail fraction exceeds `tol`.
    pub fn check_band_limit(&self, tol: f64) -> Result<(), CircleError> {
        let t = self.tail_fraction();
        if t > tol {
            Err(CircleError::Aliasing(t))
        } else {
            Ok(())
        }
    }
}

/// Random trigonometric polynomial with modes `|k₁|, |k₂| ≤ base_degree`
/// and fiber modes in `fiber`.
pub fn random_trig_field<R: Rng>(grid: Grid, base_degree: usize, fiber: &[usize], rng: &mut R) -> FiberField {
    let mut c = vec![Complex64::new(0.0, 0.0); grid.len()];
    let d = base_degree as i64;
    let idx = |k: i64, len: usize| k.rem_euclid(len as i64) as usize;
    for k1 in -d..=d {
        for k2 in -d..=d {
            for &m in fiber {
                let signs: &[i64] = if m == 0 { &[0] } else { &[-1, 1] };
                for s in signs {
                    let k3 = s * m as i64;
                    let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    let amp = 1.0 / (1.0 + (k1 * k1 + k2 * k2) as f64);
                    let i = grid.index(idx(k1, grid.n1), idx(k2, grid.n2), idx(k3, grid.nt));
                    c[i] += z * amp * grid.len() as f64;
                }
            }
        }
    }
    FiberField::from_spectrum(grid, c)
}

/// Base-point data of a conformal surface `g = e^{2φ} Id`, `σ = b vol_g`.
#[derive(Debug, Clone)]
struct SurfacePoint {
    e_neg: f64,
    weight: f64,
    dphi: [f64; 2],
    b: f64,
    db: [f64; 2],
    gauss: f64,
    /// `⟨Ω⁰e₂, e₂⟩` in the frame `(v, iv)`.
    omega_zero_normal: f64,
}

/// Spectral engine for the magnetic flow on SM of a 2π-periodic conformal
/// surface.
pub struct CircleBundle {
    pub system: MagneticSystem,
    pub grid: Grid,
    pub exec: Execution,
    base: Vec<SurfacePoint>,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl CircleBundle {
    pub fn new(system: &MagneticSystem, grid: Grid) -> Result<Self, CircleError> {
        Self::with_execution(system, grid, Execution::default())
    }

    pub fn with_execution(system: &MagneticSystem, grid: Grid, exec: Execution) -> Result<Self, CircleError> {
        grid.validate()?;
        let not_surface = || CircleError::NotSurface(system.name.clone());
        if system.dim() != 2 {
            return Err(not_surface());
        }
        match &system.metric.period {
            Some(p) if p.iter().all(|x| (x - TAU).abs() < 1e-12) => {}
            _ => return Err(not_surface()),
        }
        let factor = match system.metric.field.conformal_factor() {
            Some(f @ (ConformalFactor::Flat | ConformalFactor::Trig(_))) => f.clone(),
            _ => return Err(not_surface()),
        };
        let base = par::map_range(exec, grid.n1 * grid.n2, |i| {
            let x = [
                TAU * (i / grid.n2) as f64 / grid.n1 as f64,
                TAU * (i % grid.n2) as f64 / grid.n2 as f64,
            ];
            let phi = factor.value(&x);
            let dphi = factor.gradient(&x);
            let hess = factor.hessian(&x);
            let e2 = (2.0 * phi).exp();
            let s = system.sigma.components(2, &x)[(0, 1)];
            let ds = system.sigma.derivatives(2, &x);
            let b = s / e2;
            let db = [0, 1].map(|k| (ds[k][(0, 1)] - 2.0 * s * dphi[k]) / e2);
            let om = Matrix::from_row_slice(2, 2, &[0.0, -b, b, 0.0]);
            SurfacePoint {
                e_neg: (-phi).exp(),
                weight: e2,
                dphi: [dphi[0], dphi[1]],
                b,
                db,
                gauss: -(hess[(0, 0)] + hess[(1, 1)]) / e2,
                omega_zero_normal: omega_zero(&om)[(1, 1)],
            }
        });
        let cos = (0..grid.nt).map(|k| (TAU * k as f64 / grid.nt as f64).cos()).collect();
        let sin = (0..grid.nt).map(|k| (TAU * k as f64 / grid.nt as f64).sin()).collect();
        Ok(CircleBundle {
            system: system.clone(),
            grid,
            exec,
            base,
            cos,
            sin,
        })
    }

    fn check(&self, u: &FiberField) -> Result<(), CircleError> {
        if u.grid != self.grid {
            Err(CircleError::GridMismatch(u.grid, self.grid))
        } else {
            Ok(())
        }
    }

    fn pointwise(&self, f: impl Fn(&SurfacePoint, f64, f64, usize) -> f64 + Sync + Send) -> FiberField {
        let g = self.grid;
        let data = par::map_range(self.exec, g.len(), |i| {
            let k = i % g.nt;
            f(&self.base[i / g.nt], self.cos[k], self.sin[k], i)
        });
        FiberField::from_vec(g, data)
    }

    /// `∫ a b dΣ` with the Liouville weight.
    pub fn inner(&self, a: &FiberField, b: &FiberField) -> f64 {
        let g = self.grid;
        par::sum_range(self.exec, g.len(), |i| a.data[i] * b.data[i] * self.base[i / g.nt].weight) * g.cell()
    }

    pub fn norm_sq(&self, a: &FiberField) -> f64 {
        self.inner(a, a)
    }

    /// `V u = ∂_θ u`.
    pub fn vertical_derivative(&self, u: &FiberField) -> FiberField {
        u.derivative(2, self.exec)
    }

    /// Geodesic vector field `X u`.
    pub fn geodesic(&self, u: &FiberField) -> FiberField {
        let (d1, d2, dt) = (u.derivative(0, self.exec), u.derivative(1, self.exec), u.derivative(2, self.exec));
        self.pointwise(|p, c, s, i| {
            p.e_neg * (c * d1.data[i] + s * d2.data[i] + (-p.dphi[0] * s + p.dphi[1] * c) * dt.data[i])
        })
    }

    /// `(Ωv)^∨ u = b ∂_θ u`.
    pub fn lorentz_vertical(&self, u: &FiberField) -> FiberField {
        let dt = u.derivative(2, self.exec);
        self.pointwise(|p, _, _, i| p.b * dt.data[i])
    }

    /// `X^σ u = X u + (Ωv)^∨ u`.
    pub fn x_sigma(&self, u: &FiberField) -> Result<FiberField, CircleError> {
        self.check(u)?;
        Ok(self.geodesic(u).add(&self.lorentz_vertical(u)))
    }

    /// Horizontal derivative: the component of `∇_H u` along `iv`.
    pub fn horizontal(&self, u: &FiberField) -> FiberField {
        let (d1, d2, dt) = (u.derivative(0, self.exec), u.derivative(1, self.exec), u.derivative(2, self.exec));
        self.pointwise(|p, c, s, i| {
            p.e_neg * (-s * d1.data[i] + c * d2.data[i] - (p.dphi[0] * c + p.dphi[1] * s) * dt.data[i])
        })
    }

    /// `∇^σ_H u = ∇_H u − Ω⁰∇_V u`, as its `iv` component.
    pub fn magnetic_horizontal_gradient(&self, u: &FiberField) -> Result<FiberField, CircleError> {
        self.check(u)?;
        let h = self.horizontal(u);
        let dt = u.derivative(2, self.exec);
        Ok(self.pointwise(|p, _, _, i| h.data[i] - p.omega_zero_normal * dt.data[i]))
    }

    pub fn project_harmonic(&self, u: &FiberField, m: usize) -> FiberField {
        u.project_degree(m, self.exec)
    }

    /// Largest relative deviation of `u` from its degree-`m` projection.
    pub fn degree_leakage(&self, u: &FiberField, m: usize) -> f64 {
        let p = self.project_harmonic(u, m);
        u.sub(&p).max_abs() / u.max_abs().max(f64::MIN_POSITIVE)
    }

    fn require_degree(&self, u: &FiberField, m: usize) -> Result<(), CircleError> {
        self.check(u)?;
        let leakage = self.degree_leakage(u, m);
        if leakage > 1e-9 {
            return Err(CircleError::NotPureDegree { degree: m, leakage });
        }
        Ok(())
    }

    /// `(X₊u, X₋u, X₀u)` for `u ∈ H^m`.
    pub fn x_plus_minus(&self, u: &FiberField, m: usize) -> Result<(FiberField, FiberField, FiberField), CircleError> {
        self.require_degree(u, m)?;
        let xu = self.geodesic(u);
        let plus = self.project_harmonic(&xu, m + 1);
        let minus = if m == 0 {
            FiberField::zeros(self.grid)
        } else {
            self.project_harmonic(&xu, m - 1)
        };
        Ok((plus, minus, self.lorentz_vertical(u)))
    }

    /// `M^σ` on `iv` by the surface closed form `K − (iv)b + b²`.
    pub fn tangential_curvature_closed(&self) -> FiberField {
        self.pointwise(|p, c, s, _| p.gauss - p.e_neg * (-s * p.db[0] + c * p.db[1]) + p.b * p.b)
    }

    /// `M^σ` on `iv` from the frame-bundle contraction.
    pub fn tangential_curvature_frame(&self) -> Result<FiberField, CircleError> {
        let g = self.grid;
        let vals = par::map_range(self.exec, g.len(), |i| -> Result<f64, String> {
            let (x1, x2, t) = g.coords(i);
            let e = self.base[i / g.nt].e_neg;
            let (c, s) = (t.cos(), t.sin());
            let w = FramePoint {
                p: Vector::from_vec(vec![x1, x2]),
                w: Matrix::from_row_slice(2, 2, &[c, -s, s, c]) * e,
            };
            let cs = CurvatureSample::at_with(&self.system, &w, false).map_err(|e| e.to_string())?;
            let m = cs
                .tangential_curvature(&Vector::from_element(1, 1.0))
                .map_err(|e| e.to_string())?;
            Ok(m[0])
        });
        let data = vals.into_iter().collect::<Result<Vec<_>, _>>().map_err(CircleError::Curvature)?;
        Ok(FiberField::from_vec(g, data))
    }

    /// Every term of the magnetic Pestov identity
    /// `‖∇_V X^σu‖² = ‖X^σ∇_V u‖² + ‖X^σu‖² − ⟨M^σ∇_V u, ∇_V u⟩`.
    pub fn pestov_residual(&self, u: &FiberField) -> Result<PestovReport, CircleError> {
        self.check(u)?;
        u.check_band_limit(1e-20)?;
        let vu = self.vertical_derivative(u);
        let xu = self.x_sigma(u)?;
        let vxu = self.vertical_derivative(&xu);
        let xvu = self.x_sigma(&vu)?;
        let vu2 = vu.mul(&vu);
        let lhs = self.norm_sq(&vxu);
        let flow_vertical = self.norm_sq(&xvu);
        let flow = self.norm_sq(&xu);
        let m_closed = self.inner(&self.tangential_curvature_closed(), &vu2);
        let m_frame = self.inner(&self.tangential_curvature_frame()?, &vu2);
        let scale = lhs.abs() + flow_vertical.abs() + flow.abs() + m_closed.abs();
        Ok(PestovReport {
            grid: self.grid,
            system: self.system.name.clone(),
            vertical_of_flow: lhs,
            flow_of_vertical: flow_vertical,
            flow,
            curvature_closed: m_closed,
            curvature_frame: m_frame,
            residual_closed: lhs - flow_vertical - flow + m_closed,
            residual_frame: lhs - flow_vertical - flow + m_frame,
            scale,
        })
    }

    /// The four summands of `∇^σ_H u` for `u ∈ H^m`.
    pub fn gradient_decomposition(&self, u: &FiberField, m: usize) -> Result<GradientDecomposition, CircleError> {
        if m < 2 {
            return Err(CircleError::DegreeTooLow { m });
        }
        let (plus, minus, _) = self.x_plus_minus(u, m)?;
        let n = 2.0;
        let mf = m as f64;
        let raising = self.vertical_derivative(&plus).scale(1.0 / (mf + 1.0));
        let lowering = self.vertical_derivative(&minus).scale(-1.0 / (n + mf - 3.0));
        let field = self
            .vertical_derivative(&self.lorentz_vertical(u))
            .scale((n - 2.0) / (2.0 * mf * (n + mf - 2.0)));
        let total = self.magnetic_horizontal_gradient(u)?;
        let z = total.sub(&raising).sub(&lowering).sub(&field);
        Ok(GradientDecomposition {
            raising,
            lowering,
            field,
            z,
            total,
        })
    }

    /// Both sides of the localized Pestov identity for `u ∈ H^m`.
    pub fn localized_pestov_residual(&self, u: &FiberField, m: usize) -> Result<LocalizedReport, CircleError> {
        if m < 2 {
            return Err(CircleError::DegreeTooLow { m });
        }
        u.check_band_limit(1e-20)?;
        let (plus, minus, zero) = self.x_plus_minus(u, m)?;
        let dec = self.gradient_decomposition(u, m)?;
        let (n, mf) = (2.0, m as f64);
        let c_minus = (n + mf - 2.0) * (n + 2.0 * mf - 4.0) / (n + mf - 3.0);
        let c_plus = mf * (n + 2.0 * mf) / (mf + 1.0);
        let c_zero = 1.0 + (n - 2.0) * (n - 2.0) / (4.0 * mf * (n + mf - 2.0));
        let vu = self.vertical_derivative(u);
        let minus_term = c_minus * self.norm_sq(&minus);
        let plus_term = c_plus * self.norm_sq(&plus);
        let field_term = c_zero * self.norm_sq(&zero);
        let z_term = self.norm_sq(&dec.z);
        let curvature = self.inner(&self.tangential_curvature_closed(), &vu.mul(&vu));
        let lhs = minus_term - plus_term + field_term + z_term;
        Ok(LocalizedReport {
            grid: self.grid,
            system: self.system.name.clone(),
            degree: m,
            lowering: minus_term,
            raising: plus_term,
            field: field_term,
            z: z_term,
            curvature,
            residual: lhs - curvature,
            scale: minus_term.abs() + plus_term.abs() + field_term.abs() + curvature.abs(),
        })
    }
}

/// Terms of the magnetic Pestov identity; `curvature_*` use the two
/// independent routes to `M^σ`.
#[derive(Debug, Clone, Serialize)]
pub struct PestovReport {
    pub grid: Grid,
    pub system: String,
    pub vertical_of_flow: f64,
    pub flow_of_vertical: f64,
    pub flow: f64,
    pub curvature_closed: f64,
    pub curvature_frame: f64,
    pub residual_closed: f64,
    pub residual_frame: f64,
    pub scale: f64,
}

impl PestovReport {
    /// Larger of the two residuals divided by the sum of term magnitudes.
    pub fn relative(&self) -> f64 {
        self.residual_closed.abs().max(self.residual_frame.abs()) / self.scale.max(f64::MIN_POSITIVE)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalizedReport {
    pub grid: Grid,
    pub system: String,
    pub degree: usize,
    pub lowering: f64,
    pub raising: f64,
    pub field: f64,
    pub z: f64,
    pub curvature: f64,
    pub residual: f64,
    pub scale: f64,
}

impl LocalizedReport {
    pub fn relative(&self) -> f64 {
        self.residual.abs() / self.scale.max(f64::MIN_POSITIVE)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// `∇^σ_H u = raising + lowering + field + z`.
#[derive(Debug, Clone)]
pub struct GradientDecomposition {
    pub raising: FiberField,
    pub lowering: FiberField,
    pub field: FiberField,
    pub z: FiberField,
    pub total: FiberField,
}

impl GradientDecomposition {
    pub fn parts(&self) -> [&FiberField; 4] {
        [&self.raising, &self.lowering, &self.field, &self.z]
    }

    /// Largest `|⟨a, b⟩|` over distinct parts, divided by `‖total‖²`.
    pub fn orthogonality(&self, cb: &CircleBundle) -> f64 {
        let p = self.parts();
        let scale = cb.norm_sq(&self.total).max(f64::MIN_POSITIVE);
        let mut worst = 0.0f64;
        for i in 0..4 {
            for j in i + 1..4 {
                worst = worst.max(cb.inner(p[i], p[j]).abs() / scale);
            }
        }
        worst
    }
}
