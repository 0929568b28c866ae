//! Magnetic geodesics, the magnetic frame flow and magnetic Jacobi fields.
//!
//! All integrators are fixed-step classical RK4 on flat state vectors.
//! Jacobi data are stored in the moving frame of the magnetic frame flow,
//! where the magnetic covariant derivative of a normal field is the plain
//! time derivative of its frame components.

use crate::framebundle::{FmField, FrameError, FramePoint, FrameGenerator};
use crate::liealg::{from_normal, perp, to_normal, unit};
use crate::magtensor::{CurvatureSample, MagTensorError};
use crate::manifold::{MagneticSystem, ManifoldError};
use crate::tolerances::FRAME_REPROJECT;
use crate::{Matrix, Vector};
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("trajectory left the chart at t = {t}")]
    ChartExit { t: f64 },
    #[error("step rejected at t = {t} (speed drift {drift:e})")]
    StepRejected { t: f64, drift: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("sample {index} is not normal to the velocity ({component:e})")]
    NotNormal { index: usize, component: f64 },
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Tensor(#[from] MagTensorError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<ManifoldError> for DynamicsError {
    fn from(e: ManifoldError) -> Self {
        DynamicsError::Frame(FrameError::Manifold(e))
    }
}

type Rhs<'a> = dyn Fn(&Vector) -> Result<Vector, DynamicsError> + 'a;

fn rk4_step(f: &Rhs, y: &Vector, h: f64) -> Result<Vector, DynamicsError> {
    let k1 = f(y)?;
    let k2 = f(&(y + &k1 * (h / 2.0)))?;
    let k3 = f(&(y + &k2 * (h / 2.0)))?;
    let k4 = f(&(y + &k3 * h))?;
    Ok(y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

fn step_grid(t_end: f64, dt: f64) -> Result<(usize, f64), DynamicsError> {
    if !(dt > 0.0) || !t_end.is_finite() {
        return Err(DynamicsError::InvalidInput(format!(
            "need dt > 0 and finite T (dt = {dt}, T = {t_end})"
        )));
    }
    let steps = ((t_end.abs() / dt).ceil() as usize).max(1);
    Ok((steps, t_end / steps as f64))
}

fn chart_error(e: DynamicsError, t: f64) -> DynamicsError {
    match e {
        DynamicsError::Frame(FrameError::Manifold(ManifoldError::ChartExit(_))) => {
            DynamicsError::ChartExit { t }
        }
        other => other,
    }
}

/// Sampled curve `(p(t), v(t))` in chart coordinates.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub p: Vec<Vector>,
    pub v: Vec<Vector>,
}

fn speed(system: &MagneticSystem, p: &Vector, v: &Vector) -> Result<f64, DynamicsError> {
    let g = system.metric.metric(p)?;
    Ok((&g * v).dot(v).sqrt())
}

fn geodesic_rhs<'a>(system: &'a MagneticSystem) -> impl Fn(&Vector) -> Result<Vector, DynamicsError> + 'a {
    let n = system.dim();
    move |y: &Vector| {
        let p = y.rows(0, n).into_owned();
        let v = y.rows(n, n).into_owned();
        let (geo, omega) = system.flow_data(&p)?;
        let acc = -geo.gamma_xy(&v, &v) + omega * &v;
        let mut out = Vector::zeros(2 * n);
        out.rows_mut(0, n).copy_from(&v);
        out.rows_mut(n, n).copy_from(&acc);
        Ok(out)
    }
}

/// Magnetic geodesic `∇_{γ'}γ' = Ωγ'` from unit `v`, to time `t_end`.
///
/// A step whose speed change exceeds `1e−10` is retried as two half
/// steps, up to four times.
pub fn integrate_geodesic(
    system: &MagneticSystem,
    p: &Vector,
    v: &Vector,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory, DynamicsError> {
    let (steps, _) = step_grid(t_end, dt)?;
    geodesic_steps(system, p, v, t_end, steps)
}

fn geodesic_steps(
    system: &MagneticSystem,
    p: &Vector,
    v: &Vector,
    t_end: f64,
    steps: usize,
) -> Result<Trajectory, DynamicsError> {
    let n = system.dim();
    let s0 = speed(system, p, v)?;
    if (s0 - 1.0).abs() > 1e-8 {
        return Err(DynamicsError::InvalidInput(format!("|v|_g = {s0}, expected 1")));
    }
    let h = t_end / steps as f64;
    let f = geodesic_rhs(system);
    let mut y = Vector::zeros(2 * n);
    y.rows_mut(0, n).copy_from(p);
    y.rows_mut(n, n).copy_from(v);
    let mut out = Trajectory {
        t: vec![0.0],
        p: vec![p.clone()],
        v: vec![v.clone()],
    };
    for k in 0..steps {
        let t = k as f64 * h;
        y = adaptive_step(system, &f, &y, h, t, 0).map_err(|e| chart_error(e, t))?;
        out.t.push((k + 1) as f64 * h);
        out.p.push(y.rows(0, n).into_owned());
        out.v.push(y.rows(n, n).into_owned());
    }
    Ok(out)
}

fn adaptive_step(
    system: &MagneticSystem,
    f: &Rhs,
    y: &Vector,
    h: f64,
    t: f64,
    depth: u32,
) -> Result<Vector, DynamicsError> {
    let n = system.dim();
    let s = |y: &Vector| speed(system, &y.rows(0, n).into_owned(), &y.rows(n, n).into_owned());
    let before = s(y)?;
    let next = rk4_step(f, y, h)?;
    let drift = (s(&next)? - before).abs();
    if drift <= 1e-10 {
        return Ok(next);
    }
    if depth >= 4 {
        return Err(DynamicsError::StepRejected { t, drift });
    }
    let mid = adaptive_step(system, f, y, h / 2.0, t, depth + 1)?;
    adaptive_step(system, f, &mid, h / 2.0, t + h / 2.0, depth + 1)
}

/// Sampled frame-flow trajectory.
#[derive(Debug, Clone)]
pub struct FrameTrajectory {
    pub t: Vec<f64>,
    pub frames: Vec<FramePoint>,
}

fn pack_frame(w: &FramePoint, extra: usize) -> Vector {
    let n = w.dim();
    let mut y = Vector::zeros(n + n * n + extra);
    y.rows_mut(0, n).copy_from(&w.p);
    y.rows_mut(n, n * n).copy_from_slice(w.w.as_slice());
    y
}

fn unpack_frame(y: &Vector, n: usize) -> (Vector, Matrix) {
    let p = y.rows(0, n).into_owned();
    let w = Matrix::from_column_slice(n, n, y.rows(n, n * n).as_slice());
    (p, w)
}

fn frame_rhs(system: &MagneticSystem, y: &Vector, out: &mut Vector) -> Result<(Vector, Matrix), DynamicsError> {
    let n = system.dim();
    let (p, w) = unpack_frame(y, n);
    let d = FrameGenerator { system }.eval(&p, &w)?;
    out.rows_mut(0, n).copy_from(&d.base);
    out.rows_mut(n, n * n).copy_from_slice(d.frame.as_slice());
    Ok((p, w))
}

fn maybe_reproject(system: &MagneticSystem, y: &mut Vector) -> Result<FramePoint, DynamicsError> {
    let n = system.dim();
    let (p, w) = unpack_frame(y, n);
    let mut f = FramePoint { p, w };
    if f.defect(&system.metric)? > FRAME_REPROJECT {
        f.reproject(&system.metric)?;
        y.rows_mut(n, n * n).copy_from_slice(f.w.as_slice());
    }
    Ok(f)
}

/// Flow of `X^σ = B_{e₁} + Y_{Ω̃}` to time `t_end`.
pub fn integrate_frame_flow(
    system: &MagneticSystem,
    w: &FramePoint,
    t_end: f64,
    dt: f64,
) -> Result<FrameTrajectory, DynamicsError> {
    let n = system.dim();
    let (steps, h) = step_grid(t_end, dt)?;
    let f = |y: &Vector| -> Result<Vector, DynamicsError> {
        let mut out = Vector::zeros(y.len());
        frame_rhs(system, y, &mut out)?;
        Ok(out)
    };
    let mut y = pack_frame(w, 0);
    let mut out = FrameTrajectory {
        t: vec![0.0],
        frames: vec![w.clone()],
    };
    for k in 0..steps {
        let t = k as f64 * h;
        y = rk4_step(&f, &y, h).map_err(|e| chart_error(e, t))?;
        let fp = maybe_reproject(system, &mut y)?;
        debug_assert_eq!(fp.dim(), n);
        out.t.push((k + 1) as f64 * h);
        out.frames.push(fp);
    }
    Ok(out)
}

/// Fourth-order finite-difference derivative of uniformly spaced samples.
fn sample_derivative(c: &[Vector], h: f64) -> Vec<Vector> {
    let m = c.len();
    (0..m)
        .map(|i| {
            let w: [(isize, f64); 5] = if i >= 2 && i + 2 < m {
                [(-2, 1.0), (-1, -8.0), (0, 0.0), (1, 8.0), (2, -1.0)]
            } else if i < 2 {
                let o = -(i as isize);
                if i == 0 {
                    [(o, -25.0), (o + 1, 48.0), (o + 2, -36.0), (o + 3, 16.0), (o + 4, -3.0)]
                } else {
                    [(o, -3.0), (o + 1, -10.0), (o + 2, 18.0), (o + 3, -6.0), (o + 4, 1.0)]
                }
            } else if i + 1 == m {
                [(0, 25.0), (-1, -48.0), (-2, 36.0), (-3, -16.0), (-4, 3.0)]
            } else {
                [(1, 3.0), (0, 10.0), (-1, -18.0), (-2, 6.0), (-3, -1.0)]
            };
            let mut acc = Vector::zeros(c[0].len());
            for (off, wt) in w {
                acc += &c[(i as isize + off) as usize] * wt;
            }
            acc / (12.0 * h)
        })
        .collect()
}

/// `∇^σ_t s` of a normal field sampled along a frame trajectory.
///
/// `s[k]` are chart vectors at `traj.frames[k]`; the output is again a list
/// of chart vectors. Samples must be uniformly spaced and at least five.
pub fn magnetic_covariant_derivative(
    system: &MagneticSystem,
    traj: &FrameTrajectory,
    s: &[Vector],
) -> Result<Vec<Vector>, DynamicsError> {
    let m = traj.frames.len();
    if s.len() != m || m < 5 {
        return Err(DynamicsError::InvalidInput(format!(
            "need matching sample lists of length >= 5 ({} vs {m})",
            s.len()
        )));
    }
    let mut comps = Vec::with_capacity(m);
    for (k, (f, sk)) in traj.frames.iter().zip(s).enumerate() {
        let c = f.inverse(&system.metric)? * sk;
        if c[0].abs() > 1e-8 * (1.0 + c.norm()) {
            return Err(DynamicsError::NotNormal { index: k, component: c[0] });
        }
        comps.push(to_normal(&c));
    }
    let h = traj.t[1] - traj.t[0];
    Ok(sample_derivative(&comps, h)
        .into_iter()
        .zip(&traj.frames)
        .map(|(d, f)| &f.w * from_normal(&d))
        .collect())
}

/// Magnetic Jacobi data `(a, H, V)` in the moving frame.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiState {
    pub a: f64,
    pub h: Vector,
    pub v: Vector,
}

impl JacobiState {
    pub fn new(a: f64, h: Vector, v: Vector) -> Self {
        JacobiState { a, h, v }
    }

    pub fn distance(&self, o: &JacobiState) -> f64 {
        (self.a - o.a).abs().max((&self.h - &o.h).amax()).max((&self.v - &o.v).amax())
    }
}

#[derive(Debug, Clone)]
pub struct JacobiTrajectory {
    pub t: Vec<f64>,
    pub frames: Vec<FramePoint>,
    pub states: Vec<JacobiState>,
}

impl JacobiTrajectory {
    /// Largest entrywise gap to another trajectory on the same grid.
    pub fn max_distance(&self, o: &JacobiTrajectory) -> f64 {
        self.states
            .iter()
            .zip(&o.states)
            .map(|(a, b)| a.distance(b))
            .fold(0.0, f64::max)
    }

    /// CSV with columns `t, p_i, w_ij, a, h_j, v_j`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), DynamicsError> {
        let mut wr = csv::Writer::from_writer(out);
        let n = self.frames[0].dim();
        let mut header = vec!["t".to_string()];
        header.extend((0..n).map(|i| format!("p{i}")));
        for i in 0..n {
            for j in 0..n {
                header.push(format!("w{i}{j}"));
            }
        }
        header.push("a".into());
        header.extend((1..n).map(|j| format!("h{j}")));
        header.extend((1..n).map(|j| format!("v{j}")));
        wr.write_record(&header)?;
        for ((t, f), s) in self.t.iter().zip(&self.frames).zip(&self.states) {
            let mut row = vec![format!("{t:.12e}")];
            row.extend(f.p.iter().map(|x| format!("{x:.12e}")));
            for i in 0..n {
                for j in 0..n {
                    row.push(format!("{:.12e}", f.w[(i, j)]));
                }
            }
            row.push(format!("{:.12e}", s.a));
            row.extend(s.h.iter().map(|x| format!("{x:.12e}")));
            row.extend(s.v.iter().map(|x| format!("{x:.12e}")));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn stage_frame(y: &Vector, n: usize) -> FramePoint {
    let (p, w) = unpack_frame(y, n);
    FramePoint { p, w }
}

/// `a' = ⟨H, Ωv⟩`, `H' = V`, `V' = −M^σH` along the magnetic frame flow.
pub fn jacobi_propagate(
    system: &MagneticSystem,
    w0: &FramePoint,
    j0: &JacobiState,
    t_end: f64,
    dt: f64,
) -> Result<JacobiTrajectory, DynamicsError> {
    let n = system.dim();
    let m = n - 1;
    if j0.h.len() != m || j0.v.len() != m {
        return Err(DynamicsError::InvalidInput("H and V need n - 1 components".into()));
    }
    let base = n + n * n;
    let f = |y: &Vector| -> Result<Vector, DynamicsError> {
        let mut out = Vector::zeros(y.len());
        frame_rhs(system, y, &mut out)?;
        let c = CurvatureSample::at_with(system, &stage_frame(y, n), false)?;
        let h = y.rows(base + 1, m).into_owned();
        let v = y.rows(base + 1 + m, m).into_owned();
        let oe1 = to_normal(&(&c.omega * unit(n, 0)));
        out[base] = h.dot(&oe1);
        out.rows_mut(base + 1, m).copy_from(&v);
        out.rows_mut(base + 1 + m, m).copy_from(&-c.tangential_curvature(&h)?);
        Ok(out)
    };
    let mut y = pack_frame(w0, 1 + 2 * m);
    y[base] = j0.a;
    y.rows_mut(base + 1, m).copy_from(&j0.h);
    y.rows_mut(base + 1 + m, m).copy_from(&j0.v);
    let (steps, h) = step_grid(t_end, dt)?;
    let mut out = JacobiTrajectory {
        t: vec![0.0],
        frames: vec![w0.clone()],
        states: vec![j0.clone()],
    };
    for k in 0..steps {
        let t = k as f64 * h;
        y = rk4_step(&f, &y, h).map_err(|e| chart_error(e, t))?;
        out.frames.push(maybe_reproject(system, &mut y)?);
        out.t.push((k + 1) as f64 * h);
        out.states.push(JacobiState {
            a: y[base],
            h: y.rows(base + 1, m).into_owned(),
            v: y.rows(base + 1 + m, m).into_owned(),
        });
    }
    Ok(out)
}

/// Frame-bundle form: `a' = ⟨H, 𝛀e₁⟩`, `H' = Ve₁`, `V' = −𝐑^σ(H, e₁)`
/// with `H ∈ ℝⁿ`, `V ∈ so(n)`. Returned states are projected to SM data
/// `(a, H⊥, (Ve₁)⊥)`.
pub fn jacobi_propagate_frame(
    system: &MagneticSystem,
    w0: &FramePoint,
    a0: f64,
    h0: &Vector,
    v0: &Matrix,
    t_end: f64,
    dt: f64,
) -> Result<JacobiTrajectory, DynamicsError> {
    let n = system.dim();
    let base = n + n * n;
    let e1 = unit(n, 0);
    let f = |y: &Vector| -> Result<Vector, DynamicsError> {
        let mut out = Vector::zeros(y.len());
        frame_rhs(system, y, &mut out)?;
        let c = CurvatureSample::at_with(system, &stage_frame(y, n), false)?;
        let h = y.rows(base + 1, n).into_owned();
        let v = Matrix::from_column_slice(n, n, y.rows(base + 1 + n, n * n).as_slice());
        out[base] = h.dot(&(&c.omega * &e1));
        out.rows_mut(base + 1, n).copy_from(&(&v * &e1));
        out.rows_mut(base + 1 + n, n * n)
            .copy_from_slice((-c.curvature(&h, &e1)).as_slice());
        Ok(out)
    };
    let mut y = pack_frame(w0, 1 + n + n * n);
    y[base] = a0;
    y.rows_mut(base + 1, n).copy_from(h0);
    y.rows_mut(base + 1 + n, n * n).copy_from_slice(v0.as_slice());
    let project = |y: &Vector| {
        let h = y.rows(base + 1, n).into_owned();
        let v = Matrix::from_column_slice(n, n, y.rows(base + 1 + n, n * n).as_slice());
        JacobiState {
            a: y[base],
            h: to_normal(&h),
            v: to_normal(&(v * &e1)),
        }
    };
    let (steps, h) = step_grid(t_end, dt)?;
    let mut out = JacobiTrajectory {
        t: vec![0.0],
        frames: vec![w0.clone()],
        states: vec![project(&y)],
    };
    for k in 0..steps {
        let t = k as f64 * h;
        y = rk4_step(&f, &y, h).map_err(|e| chart_error(e, t))?;
        out.frames.push(maybe_reproject(system, &mut y)?);
        out.t.push((k + 1) as f64 * h);
        out.states.push(project(&y));
    }
    Ok(out)
}

/// Chart tangent vector to SM of the perturbation `aX^σ + H̃ + V^∨`.
pub fn sm_perturbation(
    system: &MagneticSystem,
    w: &FramePoint,
    j: &JacobiState,
) -> Result<(Vector, Vector), DynamicsError> {
    let n = system.dim();
    let (geo, omega) = system.flow_data(&w.p)?;
    let v = w.velocity();
    let om_frame = w.inverse(&system.metric)? * &omega * &w.w;
    let hbar = from_normal(&j.h);
    let hw = &w.w * &hbar;
    let dp = &v * j.a + &hw;
    let dv = (-geo.gamma_xy(&v, &v) + &omega * &v) * j.a - geo.gamma_dir(&hw) * &v
        + &w.w * perp(&(&om_frame * &hbar)) * 0.5
        + &w.w * from_normal(&j.v);
    debug_assert_eq!(dp.len(), n);
    Ok((dp, dv))
}

/// Inverse of [`sm_perturbation`] at frame `w`.
pub fn decompose_sm_vector(
    system: &MagneticSystem,
    w: &FramePoint,
    dp: &Vector,
    dv: &Vector,
) -> Result<JacobiState, DynamicsError> {
    let (geo, omega) = system.flow_data(&w.p)?;
    let wi = w.inverse(&system.metric)?;
    let v = w.velocity();
    let x = &wi * dp;
    let a = x[0];
    let hbar = perp(&x);
    let k = dv + geo.gamma_dir(dp) * &v;
    let om_frame = &wi * &omega * &w.w;
    let vbar = &wi * (k - &omega * &v * a) - perp(&(&om_frame * &hbar)) * 0.5;
    Ok(JacobiState {
        a,
        h: to_normal(&hbar),
        v: to_normal(&vbar),
    })
}

/// Chart-coordinate substeps per output step of [`jacobi_fd_oracle`].
pub const ORACLE_SUBSTEPS: usize = 8;

/// Variation oracle: differentiate the magnetic flow along `Z` by central
/// differences of two perturbed geodesics, then decompose in the frame.
///
/// The base frame flow and the perturbed geodesics run on a grid
/// [`ORACLE_SUBSTEPS`] times finer than `dt` and are sampled on the `dt` grid.
pub fn jacobi_fd_oracle(
    system: &MagneticSystem,
    w0: &FramePoint,
    z: &JacobiState,
    t_end: f64,
    dt: f64,
    eps: f64,
) -> Result<JacobiTrajectory, DynamicsError> {
    let (steps, _) = step_grid(t_end, dt)?;
    let fine = integrate_frame_flow(system, w0, t_end, t_end / (steps * ORACLE_SUBSTEPS) as f64)?;
    let base = FrameTrajectory {
        t: fine.t.iter().step_by(ORACLE_SUBSTEPS).copied().collect(),
        frames: fine.frames.iter().step_by(ORACLE_SUBSTEPS).cloned().collect(),
    };
    if base.t.len() != steps + 1 {
        return Err(DynamicsError::InvalidInput(format!("substep grid mismatch for dt = {dt}")));
    }
    let (dp, dv) = sm_perturbation(system, w0, z)?;
    let perturbed = |s: f64| -> Result<Trajectory, DynamicsError> {
        let p = &w0.p + &dp * s;
        let v = w0.velocity() + &dv * s;
        let v = &v / speed(system, &p, &v)?;
        let tr = geodesic_steps(system, &p, &v, t_end, steps * ORACLE_SUBSTEPS)?;
        Ok(Trajectory {
            t: tr.t.iter().step_by(ORACLE_SUBSTEPS).copied().collect(),
            p: tr.p.iter().step_by(ORACLE_SUBSTEPS).cloned().collect(),
            v: tr.v.iter().step_by(ORACLE_SUBSTEPS).cloned().collect(),
        })
    };
    let plus = perturbed(eps)?;
    let minus = perturbed(-eps)?;
    let mut states = Vec::with_capacity(base.t.len());
    for (k, f) in base.frames.iter().enumerate() {
        let dp = (&plus.p[k] - &minus.p[k]) / (2.0 * eps);
        let dv = (&plus.v[k] - &minus.v[k]) / (2.0 * eps);
        states.push(decompose_sm_vector(system, f, &dp, &dv)?);
    }
    Ok(JacobiTrajectory {
        t: base.t,
        frames: base.frames,
        states,
    })
}

/// Which degeneracy defines a conjugate time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConjugacyCriterion {
    /// Zeros of `det H` for the vertical-start basis.
    #[default]
    HorizontalBlock,
    /// Rank drop of the full `(a, H)` block, i.e. the transported vertical
    /// space meets the vertical space itself.
    Strict,
}

fn conjugate_rhs<'a>(
    system: &'a MagneticSystem,
) -> impl Fn(&Vector) -> Result<Vector, DynamicsError> + 'a {
    let n = system.dim();
    let m = n - 1;
    let base = n + n * n;
    move |y: &Vector| {
        let mut out = Vector::zeros(y.len());
        frame_rhs(system, y, &mut out)?;
        let c = CurvatureSample::at_with(system, &stage_frame(y, n), false)?;
        let oe1 = to_normal(&(&c.omega * unit(n, 0)));
        for col in 0..m {
            let off = base + col * (1 + 2 * m);
            let h = y.rows(off + 1, m).into_owned();
            let v = y.rows(off + 1 + m, m).into_owned();
            out[off] = h.dot(&oe1);
            out.rows_mut(off + 1, m).copy_from(&v);
            out.rows_mut(off + 1 + m, m).copy_from(&-c.tangential_curvature(&h)?);
        }
        Ok(out)
    }
}

fn degeneracy(y: &Vector, n: usize, criterion: ConjugacyCriterion) -> f64 {
    let m = n - 1;
    let base = n + n * n;
    let stride = 1 + 2 * m;
    let block = Matrix::from_fn(n, m, |r, col| y[base + col * stride + r]);
    let norms: f64 = (0..m)
        .map(|col| y.rows(base + col * stride, stride).norm())
        .product();
    let raw = match criterion {
        ConjugacyCriterion::HorizontalBlock => block.rows(1, m).into_owned().determinant(),
        ConjugacyCriterion::Strict => block.singular_values().min().powi(m as i32),
    };
    raw / norms
}

/// Conjugate times on `(0, t_end]` along the flow from `w0`.
///
/// The degeneracy measure is normalized by the norms of the Jacobi
/// columns. Sign changes are refined by bisection to `dt/128`; touching
/// zeros are located as local minima of its modulus and accepted below
/// `1e−6`.
pub fn conjugate_points_with(
    system: &MagneticSystem,
    w0: &FramePoint,
    t_end: f64,
    dt: f64,
    criterion: ConjugacyCriterion,
) -> Result<Vec<f64>, DynamicsError> {
    let n = system.dim();
    let m = n - 1;
    let f = conjugate_rhs(system);
    let mut y = pack_frame(w0, m * (1 + 2 * m));
    let base = n + n * n;
    for col in 0..m {
        y[base + col * (1 + 2 * m) + 1 + m + col] = 1.0;
    }
    let (steps, h) = step_grid(t_end, dt)?;
    let mut times: Vec<f64> = Vec::new();
    let push = |t: f64, times: &mut Vec<f64>| {
        if times.last().is_none_or(|&l| t - l > 2.0 * h) {
            times.push(t);
        }
    };
    // (sample time, value, state) for the last three samples
    let mut window: Vec<(f64, f64, Vector)> = Vec::new();
    let mut prev_d = 0.0f64;
    for k in 0..steps {
        let t = k as f64 * h;
        let prev_y = y.clone();
        y = rk4_step(&f, &y, h).map_err(|e| chart_error(e, t))?;
        maybe_reproject(system, &mut y)?;
        let d = degeneracy(&y, n, criterion);
        if k > 0 && prev_d != 0.0 && d != 0.0 && d.signum() != prev_d.signum() {
            let (mut lo, mut hi) = (0.0, h);
            for _ in 0..7 {
                let mid = 0.5 * (lo + hi);
                let ym = rk4_step(&f, &prev_y, mid)?;
                if degeneracy(&ym, n, criterion).signum() == prev_d.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            push(t + 0.5 * (lo + hi), &mut times);
        }
        window.push((t + h, d, y.clone()));
        if window.len() > 3 {
            window.remove(0);
        }
        if window.len() == 3 {
            let (d0, d1) = (window[0].1.abs(), window[1].1.abs());
            if d1 < d0 && d1 <= d.abs() && window[0].1.signum() == d.signum() {
                let (t0, _, ref y0) = window[0];
                let (tm, dm) = golden_minimum(&f, y0, 2.0 * h, n, criterion)?;
                if dm < 1e-6 {
                    push(t0 + tm, &mut times);
                }
            }
        }
        prev_d = d;
    }
    Ok(times)
}

fn golden_minimum(
    f: &Rhs,
    y0: &Vector,
    width: f64,
    n: usize,
    criterion: ConjugacyCriterion,
) -> Result<(f64, f64), DynamicsError> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let eval = |s: f64| -> Result<f64, DynamicsError> {
        Ok(degeneracy(&rk4_step(f, y0, s)?, n, criterion).abs())
    };
    let (mut a, mut b) = (0.0, width);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (eval(c)?, eval(d)?);
    for _ in 0..60 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = eval(d)?;
        }
    }
    let s = 0.5 * (a + b);
    Ok((s, eval(s)?))
}

/// Conjugate times by the horizontal-block criterion.
pub fn conjugate_points(
    system: &MagneticSystem,
    w0: &FramePoint,
    t_end: f64,
    dt: f64,
) -> Result<Vec<f64>, DynamicsError> {
    conjugate_points_with(system, w0, t_end, dt, ConjugacyCriterion::HorizontalBlock)
}
