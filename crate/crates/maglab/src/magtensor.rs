//! Closed-form tensors of the magnetic connection at a frame point.
//!
//! All quantities are frame components: `𝛀 = W⁻¹ΩW`, `B_x𝛀` is the frame
//! pullback of `∇_{Wx}Ω`, and `𝐑(x, y)` that of `𝓡(Wx, Wy)`.

use crate::framebundle::{FrameError, FramePoint};
use crate::liealg::{commutator, inner_so, omega_tilde, omega_zero, perp, unit, wedge};
use crate::manifold::MagneticSystem;
use crate::{Matrix, Vector};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MagTensorError {
    #[error("vector is not normal to e1 (component {0:e})")]
    NotNormal(f64),
    #[error("degenerate plane (|x∧y| = {0:e})")]
    DegeneratePlane(f64),
    #[error("invalid pinching constants K = {k}, delta = {delta}")]
    InvalidPinching { k: f64, delta: f64 },
    #[error(transparent)]
    Frame(#[from] FrameError),
}

/// `T_x = −⟨x,e₁⟩Ω⁰ + ½(𝛀e₁∧x − e₁∧𝛀x)` for a given skew `𝛀`.
pub fn contorsion_with(omega: &Matrix, x: &Vector) -> Matrix {
    let n = x.len();
    let e1 = unit(n, 0);
    let oe1 = omega * &e1;
    -x[0] * omega_zero(omega) + 0.5 * (wedge(&oe1, x) - wedge(&e1, &(omega * x)))
}

/// `τ(x, y) = −½[(x∧y)𝛀e₁]⊥ + ⟨𝛀x, y⟩e₁`.
pub fn torsion_with(omega: &Matrix, x: &Vector, y: &Vector) -> Vector {
    let n = x.len();
    let e1 = unit(n, 0);
    let mut t = perp(&(wedge(x, y) * (omega * &e1))) * -0.5;
    t[0] += (omega * x).dot(y);
    t
}

/// Frame-pulled tensors at one point of FM.
#[derive(Debug, Clone)]
pub struct CurvatureSample {
    pub frame: FramePoint,
    pub omega: Matrix,
    /// `nabla_omega[i] = B_{e_i}𝛀`.
    pub nabla_omega: Vec<Matrix>,
    /// `riemann[i * n + j] = 𝐑(e_i, e_j)`.
    pub riemann: Vec<Matrix>,
    /// `dsigma[(i*n + j)*n + k] = dσ(w_i, w_j, w_k)`.
    pub dsigma: Vec<f64>,
}

impl CurvatureSample {
    pub fn at(system: &MagneticSystem, frame: &FramePoint) -> Result<Self, MagTensorError> {
        Self::at_with(system, frame, true)
    }

    /// As [`CurvatureSample::at`]; `dsigma` is left empty unless requested.
    pub fn at_with(
        system: &MagneticSystem,
        frame: &FramePoint,
        with_dsigma: bool,
    ) -> Result<Self, MagTensorError> {
        let n = frame.dim();
        let jet = system.field_jet(&frame.p).map_err(FrameError::from)?;
        let w = &frame.w;
        let wi = w.transpose() * &jet.geometry.g;
        let omega = &wi * &jet.omega * w;
        let nabla_omega = (0..n)
            .map(|i| &wi * jet.nabla_omega_dir(&w.column(i).into_owned()) * w)
            .collect();
        let mut riemann = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let r = jet
                    .geometry
                    .riemann_op(&w.column(i).into_owned(), &w.column(j).into_owned());
                riemann.push(&wi * r * w);
            }
        }
        let mut dsigma = vec![0.0; if with_dsigma { n * n * n } else { 0 }];
        for i in 0..if with_dsigma { n } else { 0 } {
            for j in 0..n {
                for k in 0..n {
                    dsigma[(i * n + j) * n + k] = jet.d_sigma(
                        &w.column(i).into_owned(),
                        &w.column(j).into_owned(),
                        &w.column(k).into_owned(),
                    );
                }
            }
        }
        Ok(CurvatureSample {
            frame: frame.clone(),
            omega,
            nabla_omega,
            riemann,
            dsigma,
        })
    }

    pub fn dim(&self) -> usize {
        self.omega.nrows()
    }

    pub fn omega_tilde(&self) -> Matrix {
        omega_tilde(&self.omega)
    }

    pub fn omega_zero(&self) -> Matrix {
        omega_zero(&self.omega)
    }

    /// `B_x𝛀`.
    pub fn nabla(&self, x: &Vector) -> Matrix {
        let n = self.dim();
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            if x[i] != 0.0 {
                m += &self.nabla_omega[i] * x[i];
            }
        }
        m
    }

    /// Riemannian `𝐑(x, y)`.
    pub fn riemann(&self, x: &Vector, y: &Vector) -> Matrix {
        let n = self.dim();
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let c = x[i] * y[j];
                if c != 0.0 {
                    m += &self.riemann[i * n + j] * c;
                }
            }
        }
        m
    }

    pub fn contorsion(&self, x: &Vector) -> Matrix {
        contorsion_with(&self.omega, x)
    }

    pub fn torsion(&self, x: &Vector, y: &Vector) -> Vector {
        torsion_with(&self.omega, x, y)
    }

    /// `B_x T_y`, the contorsion formula applied to `B_x𝛀`.
    pub fn horizontal_contorsion(&self, x: &Vector, y: &Vector) -> Matrix {
        contorsion_with(&self.nabla(x), y)
    }

    /// `Y_ξ T_y`, the contorsion formula applied to `Y_ξ𝛀 = [𝛀, ξ]`.
    pub fn vertical_contorsion(&self, xi: &Matrix, y: &Vector) -> Matrix {
        contorsion_with(&commutator(&self.omega, xi), y)
    }

    /// Closed-form magnetic curvature `𝐑^σ(x, y)`.
    pub fn curvature(&self, x: &Vector, y: &Vector) -> Matrix {
        let n = self.dim();
        let om = &self.omega;
        let e1 = unit(n, 0);
        let om2 = om * om;
        let oe1 = om * &e1;
        let quartic = wedge(&perp(x), &perp(y)) * oe1.norm_squared()
            + wedge(&perp(&(&om2 * x)), y)
            + wedge(x, &perp(&(&om2 * y)))
            - wedge(&(om * x), &(om * y))
            - om * (2.0 * inner_so(om, &wedge(x, y)));
        self.riemann(x, y) + self.horizontal_contorsion(x, y) - self.horizontal_contorsion(y, x)
            + quartic * 0.25
    }

    /// `𝐑^σ(x, y)` assembled from the defining expansion
    /// `𝐑 + (B_xT_y − B_yT_x) − (Y_{T_x}T_y − Y_{T_y}T_x) − [T_x, T_y] + T_{τ(x,y)}`.
    pub fn curvature_by_definition(&self, x: &Vector, y: &Vector) -> Matrix {
        let tx = self.contorsion(x);
        let ty = self.contorsion(y);
        self.riemann(x, y) + self.horizontal_contorsion(x, y)
            - self.horizontal_contorsion(y, x)
            - (self.vertical_contorsion(&tx, y) - self.vertical_contorsion(&ty, x))
            - commutator(&tx, &ty)
            + self.contorsion(&self.torsion(x, y))
    }

    /// `⟨𝐑^σ(a, b)c, d⟩`.
    pub fn curvature4(&self, a: &Vector, b: &Vector, c: &Vector, d: &Vector) -> f64 {
        (self.curvature(a, b) * c).dot(d)
    }

    /// Tangential curvature `M^σ z` for normal components `z` (length n − 1).
    pub fn tangential_curvature(&self, z: &Vector) -> Result<Vector, MagTensorError> {
        let x = crate::liealg::from_normal(z);
        Ok(crate::liealg::to_normal(&self.tangential_full(&x)?))
    }

    /// `M^σ x` for a full n-vector `x ⊥ e₁`.
    pub fn tangential_full(&self, x: &Vector) -> Result<Vector, MagTensorError> {
        if x[0].abs() > 1e-10 {
            return Err(MagTensorError::NotNormal(x[0]));
        }
        let n = self.dim();
        let e1 = unit(n, 0);
        let om = &self.omega;
        let oe1 = om * &e1;
        let xdir = self.nabla(&e1);
        Ok(self.riemann(x, &e1) * &e1 - self.nabla(x) * &e1
            + perp(&(xdir * x)) * 0.5
            + &oe1 * (0.75 * oe1.dot(x))
            - perp(&(om * om * x)) * 0.25)
    }

    /// Magnetic sectional curvature of `span(x, y)`.
    pub fn sec_sigma(&self, x: &Vector, y: &Vector) -> Result<f64, MagTensorError> {
        let xy = wedge(x, y);
        let nrm2 = inner_so(&xy, &xy);
        if nrm2.sqrt() < 1e-8 {
            return Err(MagTensorError::DegeneratePlane(nrm2.sqrt()));
        }
        Ok(inner_so(&self.curvature(x, y), &wedge(y, x)) / nrm2)
    }

    /// `d𝛀(x, y, z) = ⟨(B_x𝛀)y, z⟩ + ⟨(B_y𝛀)z, x⟩ + ⟨(B_z𝛀)x, y⟩`.
    pub fn d_omega(&self, x: &Vector, y: &Vector, z: &Vector) -> f64 {
        (self.nabla(x) * y).dot(z) + (self.nabla(y) * z).dot(x) + (self.nabla(z) * x).dot(y)
    }

    /// Chart exterior derivative in frame components.
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

    /// Cyclic sum of `𝐑^σ(x, y)z` and its closed form.
    pub fn bianchi_pair(&self, x: &Vector, y: &Vector, z: &Vector) -> (Vector, Vector) {
        let lhs = self.curvature(x, y) * z + self.curvature(y, z) * x + self.curvature(z, x) * y;
        (lhs, self.bianchi_rhs(x, y, z, -1.0))
    }

    /// `dω(x,y,z)e₁ + 𝔖[¼⟨x∧z, e₁∧𝛀²e₁⟩y + s/2 (⟨(B_{e₁}𝛀)z, x⟩ − dω(x,e₁,z)) y^⊥]`.
    ///
    /// `s = −1` is the identity satisfied by [`CurvatureSample::curvature`];
    /// `s = +1` is kept for comparison.
    pub fn bianchi_rhs(&self, x: &Vector, y: &Vector, z: &Vector, s: f64) -> Vector {
        let n = self.dim();
        let e1 = unit(n, 0);
        let om = &self.omega;
        let e1_om2 = wedge(&e1, &(om * om * &e1));
        let xdir = self.nabla(&e1);
        let term = |x: &Vector, y: &Vector, z: &Vector| -> Vector {
            y * (0.25 * inner_so(&wedge(x, z), &e1_om2))
                + perp(y) * (0.5 * s * ((&xdir * z).dot(x) - self.d_omega(x, &e1, z)))
        };
        &e1 * self.d_omega(x, y, z) + term(x, y, z) + term(y, z, x) + term(z, x, y)
    }

    /// `R^σ₀(a,b,c,d) = ⟨𝐑^σ(a,b)c, d⟩ − K(1+δ)/2 ⟨G(a,b)c, d⟩`.
    pub fn pinched_decomposition(
        &self,
        k: f64,
        delta: f64,
        a: &Vector,
        b: &Vector,
        c: &Vector,
        d: &Vector,
    ) -> Result<f64, MagTensorError> {
        if !(k > 0.0) || !(delta > 0.0 && delta <= 1.0) {
            return Err(MagTensorError::InvalidPinching { k, delta });
        }
        Ok(self.curvature4(a, b, c, d) - 0.5 * k * (1.0 + delta) * constant_curvature(a, b, c, d))
    }

    /// Range of `sec^σ` over a plane mesh.
    pub fn sample_sections(&self, planes: &[(Vector, Vector)]) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (x, y) in planes {
            if let Ok(s) = self.sec_sigma(x, y) {
                lo = lo.min(s);
                hi = hi.max(s);
            }
        }
        (lo, hi)
    }
}

/// `⟨G(a,b)c, d⟩ = ⟨a,c⟩⟨b,d⟩ − ⟨b,c⟩⟨a,d⟩`.
pub fn constant_curvature(a: &Vector, b: &Vector, c: &Vector, d: &Vector) -> f64 {
    a.dot(c) * b.dot(d) - b.dot(c) * a.dot(d)
}

/// Deterministic mesh of oriented planes in ℝⁿ.
///
/// For n = 3 the planes are the orthogonal complements of a Fibonacci
/// lattice on the unit sphere; otherwise pairs are drawn from a fixed-seed
/// generator and orthonormalized.
pub fn plane_mesh(n: usize, count: usize) -> Vec<(Vector, Vector)> {
    use rand::{Rng, SeedableRng};
    match n {
        2 => vec![(unit(2, 0), unit(2, 1))],
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|i| {
                    let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let th = golden * i as f64;
                    let nu = Vector::from_vec(vec![r * th.cos(), r * th.sin(), z]);
                    let seed = if nu[0].abs() < 0.9 { unit(3, 0) } else { unit(3, 1) };
                    let a = (&seed - &nu * nu.dot(&seed)).normalize();
                    let b = nu.cross(&a);
                    (a, b)
                })
                .collect()
        }
        _ => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
            (0..count)
                .map(|_| {
                    let x = Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)).normalize();
                    let y = Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
                    let y = (&y - &x * x.dot(&y)).normalize();
                    (x, y)
                })
                .collect()
        }
    }
}

/// Pinching constants measured on a mesh: `−K ≤ sec^σ ≤ −Kδ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinchingEstimate {
    pub k: f64,
    pub delta: f64,
    pub min_sec: f64,
    pub max_sec: f64,
}

impl PinchingEstimate {
    /// `None` when the sampled curvature is not negative.
    pub fn from_range(min_sec: f64, max_sec: f64) -> Option<Self> {
        if max_sec >= 0.0 {
            return None;
        }
        Some(PinchingEstimate {
            k: -min_sec,
            delta: max_sec / min_sec,
            min_sec,
            max_sec,
        })
    }
}

/// `|R₀ − ⅓𝔖R₀|` at `(a, b, c, d)` with 𝔖 cyclic in the first three slots.
pub fn pinched_remainder_defect(
    sample: &CurvatureSample,
    k: f64,
    delta: f64,
    a: &Vector,
    b: &Vector,
    c: &Vector,
    d: &Vector,
) -> Result<f64, MagTensorError> {
    let r = |a, b, c| sample.pinched_decomposition(k, delta, a, b, c, d);
    let r0 = r(a, b, c)?;
    let s = r0 + r(b, c, a)? + r(c, a, b)?;
    Ok((r0 - s / 3.0).abs())
}
