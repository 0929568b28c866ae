//! Charted Riemannian metrics carrying a magnetic 2-form.
//!
//! A [`MagneticSystem`] is a single chart with a metric `g` and a 2-form
//! `σ`. The Lorentz endomorphism is defined by `g(Ωx, y) = σ(x, y)`,
//! which in components reads `Ω = g⁻¹σᵀ`.

use crate::tolerances::METRIC_FD_STEP;
use crate::{Matrix, Vector};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ManifoldError {
    #[error("metric is singular or not positive definite at {0:?}")]
    SingularMetric(Vec<f64>),
    #[error("point {0:?} lies outside the chart domain")]
    ChartExit(Vec<f64>),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("unknown builtin system `{0}`")]
    UnknownBuiltin(String),
}

/// One term `c·cos(k·x) + s·sin(k·x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigTerm {
    pub k: Vec<i32>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

/// Real trigonometric polynomial on ℝⁿ with integer frequencies.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrigPoly {
    pub terms: Vec<TrigTerm>,
}

impl TrigPoly {
    pub fn constant(dim: usize, c: f64) -> Self {
        TrigPoly {
            terms: vec![TrigTerm {
                k: vec![0; dim],
                cos: c,
                sin: 0.0,
            }],
        }
    }

    pub fn term(mut self, k: &[i32], cos: f64, sin: f64) -> Self {
        self.terms.push(TrigTerm {
            k: k.to_vec(),
            cos,
            sin,
        });
        self
    }

    fn phase(t: &TrigTerm, p: &[f64]) -> f64 {
        t.k.iter().zip(p).map(|(&k, &x)| k as f64 * x).sum()
    }

    pub fn value(&self, p: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let a = Self::phase(t, p);
                t.cos * a.cos() + t.sin * a.sin()
            })
            .sum()
    }

    pub fn gradient(&self, p: &[f64]) -> Vector {
        let mut g = Vector::zeros(p.len());
        for t in &self.terms {
            let a = Self::phase(t, p);
            let d = -t.cos * a.sin() + t.sin * a.cos();
            for (i, &k) in t.k.iter().enumerate() {
                g[i] += k as f64 * d;
            }
        }
        g
    }

    pub fn hessian(&self, p: &[f64]) -> Matrix {
        let n = p.len();
        let mut h = Matrix::zeros(n, n);
        for t in &self.terms {
            let a = Self::phase(t, p);
            let d2 = -(t.cos * a.cos() + t.sin * a.sin());
            for i in 0..n {
                for j in 0..n {
                    h[(i, j)] += (t.k[i] * t.k[j]) as f64 * d2;
                }
            }
        }
        h
    }

    /// Largest |k_i| over all terms and coordinates.
    pub fn max_degree(&self) -> u32 {
        self.terms
            .iter()
            .flat_map(|t| t.k.iter().map(|k| k.unsigned_abs()))
            .max()
            .unwrap_or(0)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|t| t.k.iter().all(|&k| k == 0))
    }
}

/// Conformal factor φ of a metric `g = e^{2φ} Id`.
#[derive(Debug, Clone, PartialEq)]
pub enum ConformalFactor {
    Flat,
    Trig(TrigPoly),
    /// Stereographic chart of the unit sphere: `φ = ln 2 − ln(1 + |x|²)`.
    Sphere,
    /// Poincaré ball: `φ = ln 2 − ln(1 − |x|²)`.
    Hyperbolic,
}

impl ConformalFactor {
    pub fn value(&self, p: &[f64]) -> f64 {
        let r2: f64 = p.iter().map(|x| x * x).sum();
        match self {
            ConformalFactor::Flat => 0.0,
            ConformalFactor::Trig(t) => t.value(p),
            ConformalFactor::Sphere => 2f64.ln() - (1.0 + r2).ln(),
            ConformalFactor::Hyperbolic => 2f64.ln() - (1.0 - r2).ln(),
        }
    }

    pub fn gradient(&self, p: &[f64]) -> Vector {
        let r2: f64 = p.iter().map(|x| x * x).sum();
        let x = Vector::from_column_slice(p);
        match self {
            ConformalFactor::Flat => Vector::zeros(p.len()),
            ConformalFactor::Trig(t) => t.gradient(p),
            ConformalFactor::Sphere => x * (-2.0 / (1.0 + r2)),
            ConformalFactor::Hyperbolic => x * (2.0 / (1.0 - r2)),
        }
    }

    pub fn hessian(&self, p: &[f64]) -> Matrix {
        let n = p.len();
        let r2: f64 = p.iter().map(|x| x * x).sum();
        let x = Vector::from_column_slice(p);
        let xx = &x * x.transpose();
        match self {
            ConformalFactor::Flat => Matrix::zeros(n, n),
            ConformalFactor::Trig(t) => t.hessian(p),
            ConformalFactor::Sphere => {
                let d = 1.0 + r2;
                Matrix::identity(n, n) * (-2.0 / d) + xx * (4.0 / (d * d))
            }
            ConformalFactor::Hyperbolic => {
                let d = 1.0 - r2;
                Matrix::identity(n, n) * (2.0 / d) + xx * (4.0 / (d * d))
            }
        }
    }

    fn contains(&self, p: &[f64]) -> bool {
        match self {
            ConformalFactor::Hyperbolic => p.iter().map(|x| x * x).sum::<f64>() < 1.0,
            _ => p.iter().all(|x| x.is_finite()),
        }
    }
}

/// Metric together with its first and second coordinate derivatives.
#[derive(Debug, Clone)]
pub struct MetricJet {
    pub g: Matrix,
    /// `dg[k] = ∂_k g`.
    pub dg: Vec<Matrix>,
    /// `d2g[k][l] = ∂_k ∂_l g`.
    pub d2g: Vec<Vec<Matrix>>,
}

/// Source of metric values on a chart.
pub trait MetricField: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn metric(&self, p: &[f64]) -> Matrix;
    /// Analytic jet, if the field provides one.
    fn analytic_jet(&self, _p: &[f64]) -> Option<MetricJet> {
        None
    }
    fn contains(&self, _p: &[f64]) -> bool {
        true
    }
    /// Conformal factor when the metric is `e^{2φ} Id`.
    fn conformal_factor(&self) -> Option<&ConformalFactor> {
        None
    }
}

/// `g = e^{2φ} Id` on ℝⁿ.
#[derive(Debug, Clone)]
pub struct ConformalMetric {
    pub dim: usize,
    pub factor: ConformalFactor,
}

impl MetricField for ConformalMetric {
    fn dim(&self) -> usize {
        self.dim
    }

    fn metric(&self, p: &[f64]) -> Matrix {
        Matrix::identity(self.dim, self.dim) * (2.0 * self.factor.value(p)).exp()
    }

    fn analytic_jet(&self, p: &[f64]) -> Option<MetricJet> {
        let n = self.dim;
        let e = (2.0 * self.factor.value(p)).exp();
        let d = self.factor.gradient(p);
        let h = self.factor.hessian(p);
        let id = Matrix::identity(n, n);
        let dg = (0..n).map(|k| &id * (2.0 * d[k] * e)).collect();
        let d2g = (0..n)
            .map(|k| {
                (0..n)
                    .map(|l| &id * ((2.0 * h[(k, l)] + 4.0 * d[k] * d[l]) * e))
                    .collect()
            })
            .collect();
        Some(MetricJet {
            g: id * e,
            dg,
            d2g,
        })
    }

    fn contains(&self, p: &[f64]) -> bool {
        self.factor.contains(p)
    }

    fn conformal_factor(&self) -> Option<&ConformalFactor> {
        Some(&self.factor)
    }
}

type MetricFn = dyn Fn(&[f64]) -> Matrix + Send + Sync;

/// Metric given by a closure; derivatives always by finite differences.
#[derive(Clone)]
pub struct ClosureMetric {
    pub dim: usize,
    pub f: Arc<MetricFn>,
}

impl fmt::Debug for ClosureMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ClosureMetric(dim = {})", self.dim)
    }
}

impl MetricField for ClosureMetric {
    fn dim(&self) -> usize {
        self.dim
    }
    fn metric(&self, p: &[f64]) -> Matrix {
        (self.f)(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DerivativeMode {
    Analytic,
    /// Richardson-extrapolated central differences with step `h`;
    /// second derivatives use step `10h`.
    FiniteDifference { h: f64 },
}

fn shifted(p: &[f64], k: usize, s: f64) -> Vec<f64> {
    let mut q = p.to_vec();
    q[k] += s;
    q
}

fn shifted2(p: &[f64], k: usize, s: f64, l: usize, t: f64) -> Vec<f64> {
    let mut q = p.to_vec();
    q[k] += s;
    q[l] += t;
    q
}

/// First partial derivative of a matrix field, fourth order.
pub fn fd_partial<F: Fn(&[f64]) -> Matrix>(f: &F, p: &[f64], k: usize, h: f64) -> Matrix {
    let d = |h: f64| (f(&shifted(p, k, h)) - f(&shifted(p, k, -h))) / (2.0 * h);
    (d(h / 2.0) * 4.0 - d(h)) / 3.0
}

/// Second partial derivative of a matrix field, fourth order.
pub fn fd_partial2<F: Fn(&[f64]) -> Matrix>(
    f: &F,
    p: &[f64],
    k: usize,
    l: usize,
    h: f64,
) -> Matrix {
    let d = |h: f64| {
        if k == l {
            (f(&shifted(p, k, h)) - f(p) * 2.0 + f(&shifted(p, k, -h))) / (h * h)
        } else {
            (f(&shifted2(p, k, h, l, h)) - f(&shifted2(p, k, h, l, -h))
                - f(&shifted2(p, k, -h, l, h))
                + f(&shifted2(p, k, -h, l, -h)))
                / (4.0 * h * h)
        }
    };
    (d(h / 2.0) * 4.0 - d(h)) / 3.0
}

/// A metric on a single chart, optionally periodic.
#[derive(Debug, Clone)]
pub struct ChartedMetric {
    pub field: Arc<dyn MetricField>,
    pub mode: DerivativeMode,
    pub period: Option<Vector>,
}

/// Pointwise Levi-Civita data.
#[derive(Debug, Clone)]
pub struct PointGeometry {
    pub g: Matrix,
    pub g_inv: Matrix,
    pub dg: Vec<Matrix>,
    /// `gamma[k][(i, j)] = Γ^k_{ij}`.
    pub gamma: Vec<Matrix>,
    /// `riemann[i * n + j][(l, k)] = R^l_{ijk}`, so `𝓡(∂_i, ∂_j) = riemann[i*n+j]`.
    pub riemann: Vec<Matrix>,
}

impl PointGeometry {
    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    /// `Γ(z)` with `Γ(z)^k_j = Γ^k_{ij} z^i`.
    pub fn gamma_dir(&self, z: &Vector) -> Matrix {
        let n = self.dim();
        Matrix::from_fn(n, n, |k, j| {
            (0..n).map(|i| self.gamma[k][(i, j)] * z[i]).sum()
        })
    }

    /// `Γ(x, y)^k = Γ^k_{ij} x^i y^j`.
    pub fn gamma_xy(&self, x: &Vector, y: &Vector) -> Vector {
        self.gamma_dir(x) * y
    }

    /// Endomorphism `𝓡(x, y)`.
    pub fn riemann_op(&self, x: &Vector, y: &Vector) -> Matrix {
        let n = self.dim();
        let mut r = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let c = x[i] * y[j];
                if c != 0.0 {
                    r += &self.riemann[i * n + j] * c;
                }
            }
        }
        r
    }

    pub fn inner(&self, x: &Vector, y: &Vector) -> f64 {
        (&self.g * y).dot(x)
    }
}

impl ChartedMetric {
    pub fn new(field: Arc<dyn MetricField>) -> Self {
        ChartedMetric {
            field,
            mode: DerivativeMode::Analytic,
            period: None,
        }
    }

    pub fn periodic(mut self, period: Vector) -> Self {
        self.period = Some(period);
        self
    }

    pub fn with_mode(mut self, mode: DerivativeMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn metric(&self, p: &Vector) -> Result<Matrix, ManifoldError> {
        self.check(p)?;
        Ok(self.field.metric(p.as_slice()))
    }

    fn check(&self, p: &Vector) -> Result<(), ManifoldError> {
        if p.len() != self.dim() {
            return Err(ManifoldError::Dimension {
                expected: self.dim(),
                got: p.len(),
            });
        }
        if !self.field.contains(p.as_slice()) {
            return Err(ManifoldError::ChartExit(p.as_slice().to_vec()));
        }
        Ok(())
    }

    pub fn contains(&self, p: &Vector) -> bool {
        self.check(p).is_ok()
    }

    pub fn jet(&self, p: &Vector) -> Result<MetricJet, ManifoldError> {
        self.check(p)?;
        let ps = p.as_slice();
        if let DerivativeMode::Analytic = self.mode {
            if let Some(j) = self.field.analytic_jet(ps) {
                return Ok(j);
            }
        }
        let h = match self.mode {
            DerivativeMode::FiniteDifference { h } => h,
            DerivativeMode::Analytic => METRIC_FD_STEP,
        };
        let n = self.dim();
        let f = |q: &[f64]| self.field.metric(q);
        let dg = (0..n).map(|k| fd_partial(&f, ps, k, h)).collect();
        let d2g = (0..n)
            .map(|k| (0..n).map(|l| fd_partial2(&f, ps, k, l, 10.0 * h)).collect())
            .collect();
        Ok(MetricJet {
            g: f(ps),
            dg,
            d2g,
        })
    }

    pub fn geometry(&self, p: &Vector) -> Result<PointGeometry, ManifoldError> {
        self.geometry_with(p, true)
    }

    /// Metric and Christoffel symbols only; `riemann` is left empty.
    pub fn connection(&self, p: &Vector) -> Result<PointGeometry, ManifoldError> {
        self.geometry_with(p, false)
    }

    fn geometry_with(&self, p: &Vector, curvature: bool) -> Result<PointGeometry, ManifoldError> {
        let jet = self.jet(p)?;
        let n = self.dim();
        let chol = jet
            .g
            .clone()
            .cholesky()
            .ok_or_else(|| ManifoldError::SingularMetric(p.as_slice().to_vec()))?;
        let g_inv = chol.inverse();
        // lowered[k][(i, j)] = ½(∂_i g_kj + ∂_j g_ki − ∂_k g_ij)
        let lowered = |dg: &[Matrix]| -> Vec<Matrix> {
            (0..n)
                .map(|k| {
                    Matrix::from_fn(n, n, |i, j| {
                        0.5 * (dg[i][(k, j)] + dg[j][(k, i)] - dg[k][(i, j)])
                    })
                })
                .collect()
        };
        let raise = |gi: &Matrix, low: &[Matrix]| -> Vec<Matrix> {
            (0..n)
                .map(|k| {
                    let mut m = Matrix::zeros(n, n);
                    for l in 0..n {
                        m += &low[l] * gi[(k, l)];
                    }
                    m
                })
                .collect()
        };
        let low = lowered(&jet.dg);
        let gamma = raise(&g_inv, &low);
        if !curvature {
            return Ok(PointGeometry {
                g: jet.g,
                g_inv,
                dg: jet.dg,
                gamma,
                riemann: Vec::new(),
            });
        }
        // ∂_m Γ^k_{ij} = ∂_m g^{kl} low_l + g^{kl} ∂_m low_l
        let dgamma: Vec<Vec<Matrix>> = (0..n)
            .map(|m| {
                let dginv = -(&g_inv * &jet.dg[m] * &g_inv);
                let dlow = lowered(&(0..n).map(|k| jet.d2g[m][k].clone()).collect::<Vec<_>>());
                let a = raise(&dginv, &low);
                let b = raise(&g_inv, &dlow);
                a.into_iter().zip(b).map(|(x, y)| x + y).collect()
            })
            .collect();
        let mut riemann = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                riemann.push(Matrix::from_fn(n, n, |l, k| {
                    let mut r = dgamma[i][l][(j, k)] - dgamma[j][l][(i, k)];
                    for m in 0..n {
                        r += gamma[l][(i, m)] * gamma[m][(j, k)]
                            - gamma[l][(j, m)] * gamma[m][(i, k)];
                    }
                    r
                }));
            }
        }
        Ok(PointGeometry {
            g: jet.g,
            g_inv,
            dg: jet.dg,
            gamma,
            riemann,
        })
    }

    pub fn christoffel(&self, p: &Vector) -> Result<Vec<Matrix>, ManifoldError> {
        Ok(self.geometry(p)?.gamma)
    }

    /// `𝓡(x, y)z`.
    pub fn riemann(
        &self,
        p: &Vector,
        x: &Vector,
        y: &Vector,
        z: &Vector,
    ) -> Result<Vector, ManifoldError> {
        Ok(self.geometry(p)?.riemann_op(x, y) * z)
    }

    /// Sectional curvature `g(𝓡(x,y)y, x) / |x∧y|²`.
    pub fn sectional(&self, p: &Vector, x: &Vector, y: &Vector) -> Result<f64, ManifoldError> {
        let geo = self.geometry(p)?;
        let num = geo.inner(&(geo.riemann_op(x, y) * y), x);
        let den = geo.inner(x, x) * geo.inner(y, y) - geo.inner(x, y).powi(2);
        Ok(num / den)
    }
}

/// One component `coeff(x)·(dx_i∧dx_j)` of a 2-form, `i < j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormTerm {
    pub i: usize,
    pub j: usize,
    pub coeff: TrigPoly,
}

type FormFn = dyn Fn(&[f64]) -> Matrix + Send + Sync;

/// Magnetic 2-form σ, given by its component matrix `σ_ij = σ(∂_i, ∂_j)`.
#[derive(Clone)]
pub enum TwoForm {
    Zero,
    Components(Vec<FormTerm>),
    /// `b·vol_g` on a surface with conformal metric `e^{2φ} Id`.
    AreaForm { b: TrigPoly, factor: ConformalFactor },
    /// Arbitrary component field; derivatives by finite differences.
    Custom(Arc<FormFn>),
}

impl fmt::Debug for TwoForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TwoForm::Zero => write!(f, "Zero"),
            TwoForm::Components(c) => f.debug_tuple("Components").field(c).finish(),
            TwoForm::AreaForm { b, factor } => f
                .debug_struct("AreaForm")
                .field("b", b)
                .field("factor", factor)
                .finish(),
            TwoForm::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl TwoForm {
    pub fn components(&self, n: usize, p: &[f64]) -> Matrix {
        let mut s = Matrix::zeros(n, n);
        match self {
            TwoForm::Zero => {}
            TwoForm::Components(terms) => {
                for t in terms {
                    let v = t.coeff.value(p);
                    s[(t.i, t.j)] += v;
                    s[(t.j, t.i)] -= v;
                }
            }
            TwoForm::AreaForm { b, factor } => {
                let v = b.value(p) * (2.0 * factor.value(p)).exp();
                s[(0, 1)] = v;
                s[(1, 0)] = -v;
            }
            TwoForm::Custom(f) => s = f(p),
        }
        s
    }

    /// `∂_k σ` for every k.
    pub fn derivatives(&self, n: usize, p: &[f64]) -> Vec<Matrix> {
        match self {
            TwoForm::Zero => vec![Matrix::zeros(n, n); n],
            TwoForm::Components(terms) => {
                let mut d = vec![Matrix::zeros(n, n); n];
                for t in terms {
                    let g = t.coeff.gradient(p);
                    for (k, dk) in d.iter_mut().enumerate() {
                        dk[(t.i, t.j)] += g[k];
                        dk[(t.j, t.i)] -= g[k];
                    }
                }
                d
            }
            TwoForm::AreaForm { b, factor } => {
                let e = (2.0 * factor.value(p)).exp();
                let gb = b.gradient(p);
                let gp = factor.gradient(p);
                let bv = b.value(p);
                (0..n)
                    .map(|k| {
                        let v = (gb[k] + 2.0 * bv * gp[k]) * e;
                        let mut m = Matrix::zeros(n, n);
                        m[(0, 1)] = v;
                        m[(1, 0)] = -v;
                        m
                    })
                    .collect()
            }
            TwoForm::Custom(f) => (0..n)
                .map(|k| fd_partial(&|q: &[f64]| f(q), p, k, METRIC_FD_STEP))
                .collect(),
        }
    }
}

/// Pointwise magnetic data in chart coordinates.
#[derive(Debug, Clone)]
pub struct FieldJet {
    pub geometry: PointGeometry,
    pub sigma: Matrix,
    pub omega: Matrix,
    /// `nabla_omega[k] = ∇_{∂_k} Ω`.
    pub nabla_omega: Vec<Matrix>,
    /// `dsigma[(i*n + j)*n + k] = dσ(∂_i, ∂_j, ∂_k)`.
    pub dsigma: Vec<f64>,
}

impl FieldJet {
    pub fn dim(&self) -> usize {
        self.omega.nrows()
    }

    /// `∇_z Ω`.
    pub fn nabla_omega_dir(&self, z: &Vector) -> Matrix {
        let n = self.dim();
        let mut m = Matrix::zeros(n, n);
        for k in 0..n {
            m += &self.nabla_omega[k] * z[k];
        }
        m
    }

    pub fn d_sigma(&self, x: &Vector, y: &Vector, z: &Vector) -> f64 {
        let n = self.dim();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    s += self.dsigma[(i * n + j) * n + k] * x[i] * y[j] * z[k];
                }
            }
        }
        s
    }
}

/// Metric plus magnetic 2-form.
#[derive(Debug, Clone)]
pub struct MagneticSystem {
    pub name: String,
    pub metric: ChartedMetric,
    pub sigma: TwoForm,
    /// Documentation flag: true when σ is known to be closed.
    pub closed_hint: bool,
}

impl MagneticSystem {
    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    pub fn sigma(&self, p: &Vector) -> Matrix {
        self.sigma.components(self.dim(), p.as_slice())
    }

    /// Lorentz endomorphism `Ω = g⁻¹σᵀ`.
    pub fn lorentz(&self, p: &Vector) -> Result<Matrix, ManifoldError> {
        let g = self.metric.metric(p)?;
        let chol = g
            .cholesky()
            .ok_or_else(|| ManifoldError::SingularMetric(p.as_slice().to_vec()))?;
        Ok(chol.solve(&self.sigma(p).transpose()))
    }

    pub fn field_jet(&self, p: &Vector) -> Result<FieldJet, ManifoldError> {
        let geometry = self.metric.geometry(p)?;
        self.field_jet_from(p, geometry)
    }

    /// Lorentz data and Christoffel symbols at `p`, without curvature.
    pub fn flow_data(&self, p: &Vector) -> Result<(PointGeometry, Matrix), ManifoldError> {
        let geometry = self.metric.connection(p)?;
        let omega = &geometry.g_inv * self.sigma(p).transpose();
        Ok((geometry, omega))
    }

    fn field_jet_from(&self, p: &Vector, geometry: PointGeometry) -> Result<FieldJet, ManifoldError> {
        let n = self.dim();
        let ps = p.as_slice();
        let sigma = self.sigma.components(n, ps);
        let dsig = self.sigma.derivatives(n, ps);
        let gi = &geometry.g_inv;
        let omega = gi * sigma.transpose();
        let nabla_omega = (0..n)
            .map(|k| {
                // ∂_k Ω = −g⁻¹(∂_k g)g⁻¹σᵀ + g⁻¹ ∂_k σᵀ
                let d_omega = -(gi * &geometry.dg[k] * &omega) + gi * dsig[k].transpose();
                let gk = geometry.gamma_dir(&crate::liealg::unit(n, k));
                d_omega + &gk * &omega - &omega * &gk
            })
            .collect();
        let mut dsigma = vec![0.0; n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    dsigma[(i * n + j) * n + k] =
                        dsig[i][(j, k)] + dsig[j][(k, i)] + dsig[k][(i, j)];
                }
            }
        }
        Ok(FieldJet {
            geometry,
            sigma,
            omega,
            nabla_omega,
            dsigma,
        })
    }

    /// `∇_z Ω = ∂_z Ω + [Γ(z), Ω]`.
    pub fn nabla_omega(&self, p: &Vector, z: &Vector) -> Result<Matrix, ManifoldError> {
        Ok(self.field_jet(p)?.nabla_omega_dir(z))
    }

    pub fn d_sigma(
        &self,
        p: &Vector,
        x: &Vector,
        y: &Vector,
        z: &Vector,
    ) -> Result<f64, ManifoldError> {
        Ok(self.field_jet(p)?.d_sigma(x, y, z))
    }

    pub fn is_periodic(&self) -> bool {
        self.metric.period.is_some()
    }
}

fn torus_period(n: usize) -> Vector {
    Vector::from_element(n, TAU)
}

fn conformal(n: usize, factor: ConformalFactor) -> ChartedMetric {
    ChartedMetric::new(Arc::new(ConformalMetric { dim: n, factor }))
}

/// Flat torus Tⁿ without magnetic field.
pub fn flat_torus(n: usize) -> MagneticSystem {
    MagneticSystem {
        name: format!("flat-t{n}"),
        metric: conformal(n, ConformalFactor::Flat).periodic(torus_period(n)),
        sigma: TwoForm::Zero,
        closed_hint: true,
    }
}

/// Flat T² with constant field `σ = b dx₁∧dx₂`.
pub fn constant_field_torus(b: f64) -> MagneticSystem {
    MagneticSystem {
        name: "larmor-t2".into(),
        metric: conformal(2, ConformalFactor::Flat).periodic(torus_period(2)),
        sigma: TwoForm::Components(vec![FormTerm {
            i: 0,
            j: 1,
            coeff: TrigPoly::constant(2, b),
        }]),
        closed_hint: true,
    }
}

/// T² with `g = e^{2φ} Id` and `σ = b·vol_g`.
pub fn conformal_torus(phi: TrigPoly, b: TrigPoly) -> MagneticSystem {
    let factor = ConformalFactor::Trig(phi);
    MagneticSystem {
        name: "conformal-t2".into(),
        metric: conformal(2, factor.clone()).periodic(torus_period(2)),
        sigma: TwoForm::AreaForm { b, factor },
        closed_hint: true,
    }
}

pub fn default_conformal_phi() -> TrigPoly {
    TrigPoly::default()
        .term(&[1, 0], 0.1, 0.0)
        .term(&[0, 1], 0.0, 0.05)
        .term(&[1, 1], 0.03, 0.02)
}

pub fn default_conformal_b() -> TrigPoly {
    TrigPoly::constant(2, 0.6)
        .term(&[1, 0], 0.0, 0.2)
        .term(&[1, -1], 0.1, 0.0)
}

/// Flat T³ with a non-closed field, `σ₁₂ = sin x₃ + …`.
pub fn nonclosed_t3() -> MagneticSystem {
    MagneticSystem {
        name: "nonclosed-t3".into(),
        metric: conformal(3, ConformalFactor::Flat).periodic(torus_period(3)),
        sigma: TwoForm::Components(vec![
            FormTerm {
                i: 0,
                j: 1,
                coeff: TrigPoly::constant(3, 0.2).term(&[0, 0, 1], 0.0, 1.0),
            },
            FormTerm {
                i: 1,
                j: 2,
                coeff: TrigPoly::default().term(&[1, 0, 0], 0.3, 0.0),
            },
            FormTerm {
                i: 0,
                j: 2,
                coeff: TrigPoly::default().term(&[1, 1, 0], 0.0, 0.25),
            },
        ]),
        closed_hint: false,
    }
}

/// Flat T⁴ with `Ω = cJ`, `σ = c(dx₁∧dx₂ + dx₃∧dx₄)`.
pub fn kahler_t4(c: f64) -> MagneticSystem {
    let term = |i, j| FormTerm {
        i,
        j,
        coeff: TrigPoly::constant(4, c),
    };
    MagneticSystem {
        name: "kahler-t4".into(),
        metric: conformal(4, ConformalFactor::Flat).periodic(torus_period(4)),
        sigma: TwoForm::Components(vec![term(0, 1), term(2, 3)]),
        closed_hint: true,
    }
}

/// Stereographic chart of the unit sphere Sⁿ.
pub fn round_sphere(n: usize) -> MagneticSystem {
    MagneticSystem {
        name: format!("sphere{n}"),
        metric: conformal(n, ConformalFactor::Sphere),
        sigma: TwoForm::Zero,
        closed_hint: true,
    }
}

/// Poincaré ball model of hyperbolic space.
pub fn hyperbolic(n: usize) -> MagneticSystem {
    MagneticSystem {
        name: format!("hyperbolic{n}"),
        metric: conformal(n, ConformalFactor::Hyperbolic),
        sigma: TwoForm::Zero,
        closed_hint: true,
    }
}

/// Poincaré ball with a weak field `σ = b(dx₁∧dx₂ + ½ x₁ dx₂∧dx₃)`, n ≥ 3.
pub fn hyperbolic_magnetic(n: usize, b: f64) -> MagneticSystem {
    assert!(n >= 3);
    let mut terms = vec![FormTerm {
        i: 0,
        j: 1,
        coeff: TrigPoly::constant(n, b),
    }];
    let mut k = vec![0; n];
    k[0] = 1;
    terms.push(FormTerm {
        i: 1,
        j: 2,
        coeff: TrigPoly {
            terms: vec![TrigTerm {
                k,
                cos: 0.0,
                sin: 0.5 * b,
            }],
        },
    });
    MagneticSystem {
        name: format!("hyperbolic{n}-magnetic"),
        metric: conformal(n, ConformalFactor::Hyperbolic),
        sigma: TwoForm::Components(terms),
        closed_hint: false,
    }
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: &[&str] = &[
    "flat-t2",
    "flat-t3",
    "flat-t4",
    "larmor-t2",
    "conformal-t2",
    "nonclosed-t3",
    "kahler-t4",
    "sphere2",
    "sphere3",
    "hyperbolic2",
    "hyperbolic3",
    "hyperbolic3-magnetic",
];

pub fn builtin(name: &str) -> Result<MagneticSystem, ManifoldError> {
    Ok(match name {
        "flat-t2" => flat_torus(2),
        "flat-t3" => flat_torus(3),
        "flat-t4" => flat_torus(4),
        "larmor-t2" => constant_field_torus(0.8),
        "conformal-t2" => conformal_torus(default_conformal_phi(), default_conformal_b()),
        "nonclosed-t3" => nonclosed_t3(),
        "kahler-t4" => kahler_t4(0.7),
        "sphere2" => round_sphere(2),
        "sphere3" => round_sphere(3),
        "hyperbolic2" => hyperbolic(2),
        "hyperbolic3" => hyperbolic(3),
        "hyperbolic3-magnetic" => hyperbolic_magnetic(3, 0.05),
        other => return Err(ManifoldError::UnknownBuiltin(other.to_string())),
    })
}
