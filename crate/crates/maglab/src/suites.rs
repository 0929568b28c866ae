//! Verification suites behind the command-line front-end.
//!
//! Each suite evaluates a batch of residuals against the budgets of a
//! [`RunConfig`] and returns one [`CheckRow`] per residual, a summary
//! [`SuiteReport`] and optional CSV tables.

use crate::circlebundle::{random_trig_field, CircleBundle, CircleError, Grid};
use crate::config::{ConfigError, RunConfig, Suite};
use crate::dynamics::{self, DynamicsError, JacobiState};
use crate::fmquad::{self, FmQuadError, FmQuadrature, StructureSign, TrigFrameFunction};
use crate::framebundle::{
    decompose_fm_vector, fd_bracket_with_step, frame_omega, random_frame, FmField, FrameError,
    FrameGenerator, FramePoint, Fundamental, FundamentalOf, MagneticStandard, Standard,
};
use crate::haar::{poincare_check, random_quadratic, HaarError, HaarRule};
use crate::liealg::{commutator, perp, unit};
use crate::magtensor::{pinched_remainder_defect, plane_mesh, CurvatureSample, MagTensorError, PinchingEstimate};
use crate::manifold::MagneticSystem;
use crate::reptheory::{self, DeltaStar, RepError};
use crate::tomoconst::{self, TomoError};
use crate::{Matrix, Vector};
use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("suite `{suite}` does not apply to system `{system}`: {reason}")]
    Unsupported {
        suite: Suite,
        system: String,
        reason: String,
    },
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Tensor(#[from] MagTensorError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Circle(#[from] CircleError),
    #[error(transparent)]
    Rep(#[from] RepError),
    #[error(transparent)]
    Tomo(#[from] TomoError),
    #[error(transparent)]
    Haar(#[from] HaarError),
    #[error(transparent)]
    FmQuad(#[from] FmQuadError),
}

/// One residual against its budget.
#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub suite: String,
    pub check: String,
    pub sample: usize,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Summary line of a suite run.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub system: String,
    pub checks: usize,
    pub checks_passed: usize,
    pub max_residual: f64,
    /// Largest `residual / tolerance`.
    pub worst_ratio: f64,
    pub passed: bool,
    pub runtime: f64,
}

/// Named CSV document.
#[derive(Debug, Clone)]
pub struct Table {
    pub file: String,
    pub csv: String,
}

#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub report: SuiteReport,
    pub checks: Vec<CheckRow>,
    pub tables: Vec<Table>,
}

impl SuiteOutcome {
    /// Check rows as CSV.
    pub fn checks_csv(&self) -> String {
        to_csv(&self.checks)
    }
}

fn to_csv<T: Serialize>(rows: &[T]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("rows serialize");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8")
}

struct Collector {
    suite: Suite,
    rows: Vec<CheckRow>,
}

impl Collector {
    fn new(suite: Suite) -> Self {
        Collector {
            suite,
            rows: Vec::new(),
        }
    }

    fn push(&mut self, check: &str, sample: usize, residual: f64, tolerance: f64) {
        self.rows.push(CheckRow {
            suite: self.suite.name().into(),
            check: check.into(),
            sample,
            residual,
            tolerance,
            passed: residual.is_finite() && residual <= tolerance,
        });
    }

    fn finish(self, system: &str, started: Instant, tables: Vec<Table>) -> SuiteOutcome {
        let passed = self.rows.iter().filter(|r| r.passed).count();
        let max_residual = self.rows.iter().map(|r| r.residual).fold(0.0, f64::max);
        let worst_ratio = self
            .rows
            .iter()
            .map(|r| if r.tolerance > 0.0 { r.residual / r.tolerance } else { r.residual })
            .fold(0.0, f64::max);
        SuiteOutcome {
            report: SuiteReport {
                suite: self.suite.name().into(),
                system: system.into(),
                checks: self.rows.len(),
                checks_passed: passed,
                max_residual,
                worst_ratio,
                passed: passed == self.rows.len(),
                runtime: started.elapsed().as_secs_f64(),
            },
            checks: self.rows,
            tables,
        }
    }
}

fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> Vector {
    Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

fn rand_skew(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let m = Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    &m - m.transpose()
}

fn rng_for(cfg: &RunConfig, suite: Suite) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(cfg.seed ^ ((suite as u64 + 1) << 32))
}

/// Run one suite on the configured system.
pub fn run(suite: Suite, cfg: &RunConfig) -> Result<SuiteOutcome, SuiteError> {
    let system = cfg.system.build()?;
    run_on(suite, &system, cfg)
}

/// Run one suite on an explicit system.
pub fn run_on(suite: Suite, system: &MagneticSystem, cfg: &RunConfig) -> Result<SuiteOutcome, SuiteError> {
    let started = Instant::now();
    let mut c = Collector::new(suite);
    let mut tables = Vec::new();
    match suite {
        Suite::Tensors => tensors(system, cfg, &mut c)?,
        Suite::Brackets => brackets(system, cfg, &mut c)?,
        Suite::Jacobi => jacobi(system, cfg, &mut c)?,
        Suite::Pestov => pestov(system, cfg, &mut c)?,
        Suite::Localized => localized(system, cfg, &mut c)?,
        Suite::Pinching => tables.push(pinching(cfg, &mut c)?),
        Suite::Tomo => tables.push(tomo(cfg, &mut c)?),
        Suite::Poincare => poincare(cfg, &mut c)?,
        Suite::Fmquad => fm_weak(system, cfg, &mut c)?,
    }
    let label = match suite {
        Suite::Pinching | Suite::Tomo | Suite::Poincare => "-",
        _ => system.name.as_str(),
    };
    Ok(c.finish(label, started, tables))
}

/// Run every configured suite in order.
pub fn run_all(cfg: &RunConfig) -> Result<Vec<SuiteOutcome>, SuiteError> {
    let system = cfg.system.build()?;
    cfg.suites.iter().map(|&s| run_on(s, &system, cfg)).collect()
}

fn tensors(s: &MagneticSystem, cfg: &RunConfig, c: &mut Collector) -> Result<(), SuiteError> {
    let tol = &cfg.tolerances;
    let mut rng = rng_for(cfg, Suite::Tensors);
    let n = s.dim();
    let e1 = unit(n, 0);
    let kahler = s.name.starts_with("kahler");
    let mesh = plane_mesh(n, cfg.grids.plane_mesh);
    for i in 0..cfg.grids.points {
        let w = random_frame(s, &mut rng)?;
        let cs = CurvatureSample::at(s, &w)?;
        let (x, y, z) = (rand_vec(&mut rng, n), rand_vec(&mut rng, n), rand_vec(&mut rng, n));

        let oracle = cs.contorsion(&x) * &y - cs.contorsion(&y) * &x;
        c.push("torsion", i, (cs.torsion(&x, &y) - oracle).amax(), tol.torsion);

        let r = cs.curvature(&x, &y);
        let d = (&r - cs.curvature_by_definition(&x, &y)).amax() / (1.0 + r.amax());
        c.push("curvature-expansion", i, d, tol.algebraic);

        let xp = perp(&x);
        let m = cs.tangential_full(&xp)?;
        let d = (&m - cs.curvature(&xp, &e1) * &e1).amax();
        c.push("tangential-contraction", i, d, tol.algebraic);

        let (lhs, rhs) = cs.bianchi_pair(&x, &y, &z);
        c.push("bianchi", i, (&lhs - &rhs).amax(), tol.bianchi);
        if kahler {
            c.push("bianchi-cyclic-sum", i, lhs.amax().max(rhs.amax()), tol.bianchi_kahler);
        }

        if n >= 3 {
            let (lo, hi) = cs.sample_sections(&mesh);
            if let Some(est) = PinchingEstimate::from_range(lo, hi) {
                let bound = 2.0 * est.k * (1.0 - est.delta) / 3.0;
                let mut excess = 0.0f64;
                for _ in 0..50 {
                    let v: Vec<Vector> = (0..4).map(|_| rand_vec(&mut rng, n).normalize()).collect();
                    let dft = pinched_remainder_defect(&cs, est.k, est.delta, &v[0], &v[1], &v[2], &v[3])?;
                    excess = excess.max(dft - bound);
                }
                c.push("pinched-remainder-bound", i, excess.max(0.0), tol.bianchi);
            }
        }
    }
    Ok(())
}

fn rel(a: &crate::framebundle::FmTangent, b: &crate::framebundle::FmTangent) -> f64 {
    (a.clone() - b.clone()).norm() / b.norm().max(1.0)
}

fn brackets(s: &MagneticSystem, cfg: &RunConfig, c: &mut Collector) -> Result<(), SuiteError> {
    let tol = &cfg.tolerances;
    let h = cfg.steps.bracket;
    let mut rng = rng_for(cfg, Suite::Brackets);
    let n = s.dim();
    for i in 0..cfg.grids.points {
        let w = random_frame(s, &mut rng)?;
        let (xi, eta) = (rand_skew(&mut rng, n), rand_skew(&mut rng, n));
        let (x, y) = (rand_vec(&mut rng, n), rand_vec(&mut rng, n));
        let cs = CurvatureSample::at(s, &w)?;

        let yxi = Fundamental { xi: xi.clone() };
        let yeta = Fundamental { xi: eta.clone() };
        let bx = Standard { system: s, x: x.clone() };
        let by = Standard { system: s, x: y.clone() };
        let r1 = fd_bracket_with_step(s, &yxi, &yeta, &w, h)?;
        let e1 = Fundamental { xi: commutator(&xi, &eta) }.at(&w)?;
        let r2 = fd_bracket_with_step(s, &yxi, &bx, &w, h)?;
        let e2 = Standard { system: s, x: &xi * &x }.at(&w)?;
        let r3 = fd_bracket_with_step(s, &bx, &by, &w, h)?;
        let e3 = Fundamental { xi: -cs.riemann(&x, &y) }.at(&w)?;
        let d = rel(&r1, &e1).max(rel(&r2, &e2)).max(rel(&r3, &e3));
        c.push("riemannian-structure", i, d, tol.structure);

        let mbx = MagneticStandard { system: s, x: x.clone() };
        let mby = MagneticStandard { system: s, x: y.clone() };
        let r = fd_bracket_with_step(s, &mbx, &mby, &w, h)? * -1.0;
        let dec = decompose_fm_vector(s, &w, &r)?;
        let tau = cs.torsion(&x, &y);
        let rs = cs.curvature(&x, &y);
        let scale = 1.0 + rs.norm() + tau.norm();
        let d = ((dec.direction() - tau).norm() + (dec.xi - rs).norm()) / scale;
        c.push("magnetic-curvature-oracle", i, d, tol.curvature_oracle);

        let gen = FrameGenerator { system: s };
        let mut worst = 0.0f64;
        for j in 1..n {
            let yj = Fundamental {
                xi: crate::liealg::wedge(&unit(n, 0), &unit(n, j)),
            };
            let br = fd_bracket_with_step(s, &gen, &yj, &w, h)? * -1.0;
            let b = MagneticStandard { system: s, x: unit(n, j) }.at(&w)?;
            worst = worst.max(rel(&br, &b));
        }
        c.push("magnetic-structure", i, worst, tol.structure);
    }
    Ok(())
}

fn jacobi(s: &MagneticSystem, cfg: &RunConfig, c: &mut Collector) -> Result<(), SuiteError> {
    let tol = &cfg.tolerances;
    let g = &cfg.grids;
    let mut rng = rng_for(cfg, Suite::Jacobi);
    let m = s.dim() - 1;
    for i in 0..g.points {
        let w = random_frame(s, &mut rng)?;
        let z = JacobiState::new(rng.random_range(-1.0..1.0), rand_vec(&mut rng, m), rand_vec(&mut rng, m));
        let a = dynamics::jacobi_propagate(s, &w, &z, g.jacobi_time, g.jacobi_dt)?;
        let b = dynamics::jacobi_fd_oracle(s, &w, &z, g.jacobi_time, g.jacobi_dt, cfg.steps.jacobi_fd)?;
        let scale = b
            .states
            .iter()
            .map(|j| j.h.amax().max(j.v.amax()).max(j.a.abs()))
            .fold(1.0, f64::max);
        c.push("variation-oracle", i, a.max_distance(&b) / scale, tol.jacobi);
    }
    if s.name == "larmor-t2" {
        let b = s.sigma(&Vector::zeros(2))[(0, 1)];
        let w = FramePoint::new(&s.metric, Vector::zeros(2), Matrix::identity(2, 2))?;
        let z = JacobiState::new(0.0, Vector::zeros(1), Vector::from_element(1, 1.0));
        let tr = dynamics::jacobi_propagate(s, &w, &z, g.jacobi_time, g.jacobi_dt)?;
        let err = tr
            .t
            .iter()
            .zip(&tr.states)
            .map(|(t, j)| (j.h[0] - (b * t).sin() / b).abs().max((j.v[0] - (b * t).cos()).abs()))
            .fold(0.0, f64::max);
        c.push("larmor-closed-form", 0, err, tol.jacobi);
        let horizon = 1.5 * std::f64::consts::PI / b.abs();
        let times = dynamics::conjugate_points(s, &w, horizon, g.jacobi_dt)?;
        let first = times.first().copied().unwrap_or(f64::INFINITY);
        c.push(
            "larmor-conjugate-time",
            0,
            (first - std::f64::consts::PI / b.abs()).abs(),
            tol.conjugate_time,
        );
    }
    Ok(())
}

fn circle_bundle(suite: Suite, s: &MagneticSystem, cfg: &RunConfig) -> Result<CircleBundle, SuiteError> {
    let grid = Grid::cube(cfg.grids.pestov);
    CircleBundle::with_execution(s, grid, cfg.exec()).map_err(|e| match e {
        CircleError::NotSurface(_) | CircleError::BadGrid(_) => SuiteError::Unsupported {
            suite,
            system: s.name.clone(),
            reason: e.to_string(),
        },
        e => e.into(),
    })
}

fn pestov(s: &MagneticSystem, cfg: &RunConfig, c: &mut Collector) -> Result<(), SuiteError> {
    let cb = circle_bundle(Suite::Pestov, s, cfg)?;
    let mut rng = rng_for(cfg, Suite::Pestov);
    let degrees: Vec<usize> = (0..=cfg.grids.fiber_degree).collect();
    let curv = cb
        .tangential_curvature_closed()
        .sub(&cb.tangential_curvature_frame()?)
        .max_abs();
    c.push("curvature-routes", 0, curv, cfg.tolerances.algebraic);
    for i in 0..cfg.grids.pestov_samples {
        let u = random_trig_field(cb.grid, cfg.grids.base_degree, &degrees, &mut rng);
        let r = cb.pestov_residual(&u)?;
        c.push("pestov", i, r.relative(), cfg.tolerances.pestov);
    }
    Ok(())
}

fn localized(s: &MagneticSystem, cfg: &RunConfig, c: &mut Collector) -> Result<(), SuiteError> {
    let cb = circle_bundle(Suite::Localized, s, cfg)?;
    let mut rng = rng_for(cfg, Suite::Localized);
    let tol = &cfg.tolerances;
    for &m in &cfg.grids.localized_degrees {
        let u = random_trig_field(cb.grid, cfg.grids.base_degree, &[m], &mut rng);
        let r = cb.localized_pestov_residual(&u, m)?;
        c.push(&format!("localized-m{m}"), m, r.relative(), tol.localized);
        let d = cb.gradient_decomposition(&u, m)?;
        c.push(&format!("orthogonality-m{m}"), m, d.orthogonality(&cb), tol.orthogonality);
    }
    Ok(())
}

/// `δ*(n)` for `n = 3..=max_n`: margin at the threshold, the exact value
/// at n = 7, 8, and vanishing thresholds for odd n ≠ 7.
fn pinching(cfg: &RunConfig, c: &mut Collector) -> Result<Table, SuiteError> {
    let tol = &cfg.tolerances;
    let mut rows = Vec::new();
    for n in 3..=cfg.grids.pinching_max_n.max(3) {
        let ds = reptheory::delta_star(n)?;
        let row = reptheory::pinching_row(n, ds.as_f64())?;
        if let (Some(d), Some(mg)) = (ds.as_f64(), row.margin) {
            if d > 0.0 {
                c.push("margin-at-threshold", n, mg.abs(), tol.margin);
            }
        }
        if n % 2 == 1 && n != 7 {
            let v = ds.as_f64().unwrap_or(f64::INFINITY);
            c.push("odd-threshold-zero", n, v.abs(), 0.0);
        }
        if n == 7 || n == 8 {
            let exact = ds == DeltaStar::Exact(Rational64::new(8, 11));
            c.push("exact-8/11", n, if exact { 0.0 } else { 1.0 }, 0.0);
        }
        rows.push(PinchingCsvRow {
            n: row.n,
            groups: row.groups.join(" "),
            nu_max: row.nu_max.unwrap_or_else(|| "none".into()),
            delta_star: row.delta_star,
            delta_star_value: row.delta_star_value,
            margin_at_threshold: row.margin,
        });
    }
    Ok(Table {
        file: "pinching_table.csv".into(),
        csv: to_csv(&rows),
    })
}

#[derive(Serialize)]
struct PinchingCsvRow {
    n: usize,
    groups: String,
    nu_max: String,
    delta_star: String,
    delta_star_value: Option<f64>,
    margin_at_threshold: Option<f64>,
}

fn tomo(cfg: &RunConfig, c: &mut Collector) -> Result<Table, SuiteError> {
    let g = &cfg.grids;
    let rows = tomoconst::sweep(g.tomo_max_m, g.tomo_max_n, cfg.exec());
    for (i, r) in rows.iter().enumerate() {
        c.push("closed-form", i, if r.closed_form_equal { 0.0 } else { 1.0 }, 0.0);
        c.push("signs", i, if r.signs_ok { 0.0 } else { 1.0 }, 0.0);
    }
    if g.tomo_max_m >= 2 {
        for n in 2..=g.tomo_max_n {
            let ok = tomoconst::coeffs(2, n)?.c == tomoconst::intro_specialization(n)?;
            c.push("m2-form", n as usize, if ok { 0.0 } else { 1.0 }, 0.0);
        }
    }
    let mut buf = Vec::new();
    tomoconst::write_csv(&rows, &mut buf)?;
    Ok(Table {
        file: "tomo_sweep.csv".into(),
        csv: String::from_utf8(buf).expect("utf-8"),
    })
}

fn poincare(cfg: &RunConfig, c: &mut Collector) -> Result<(), SuiteError> {
    let tol = cfg.tolerances.poincare;
    let rule = HaarRule::new(3, cfg.grids.haar)?;
    let exec = cfg.exec();
    c.push("normalization", 0, rule.normalization_defect(), 1e-12);
    let r = poincare_check(&rule, exec, |w: &Matrix| w[(2, 1)]);
    c.push("extremizer", 0, (r.ratio - 1.0).abs(), tol);
    let mut rng = rng_for(cfg, Suite::Poincare);
    for i in 0..cfg.grids.poincare_samples {
        let f = random_quadratic(3, &mut rng);
        let r = poincare_check(&rule, exec, f);
        c.push("random-ratio-excess", i, (r.ratio - 1.0).max(0.0), tol);
    }
    Ok(())
}

fn fm_pair(n: usize, rng: &mut ChaCha8Rng) -> (TrigFrameFunction, TrigFrameFunction) {
    let mut base: Vec<Vec<i32>> = vec![vec![0; n]];
    for i in 0..n {
        let mut k = vec![0; n];
        k[i] = 1;
        base.push(k);
    }
    let mut k = vec![0; n];
    k[0] = 1;
    k[1] = 1;
    base.push(k);
    let freqs: Vec<Vec<i32>> = base.iter().cycle().take(4 * base.len()).cloned().collect();
    (
        TrigFrameFunction::random_with(n, &freqs, rng),
        TrigFrameFunction::random_with(n, &freqs, rng),
    )
}

fn fm_weak(s: &MagneticSystem, cfg: &RunConfig, c: &mut Collector) -> Result<(), SuiteError> {
    let q = FmQuadrature::new(s, cfg.grids.fm_torus, cfg.grids.fm_haar, cfg.exec()).map_err(|e| match e {
        FmQuadError::Unsupported(reason) => SuiteError::Unsupported {
            suite: Suite::Fmquad,
            system: s.name.clone(),
            reason,
        },
        e => e.into(),
    })?;
    let tol = cfg.tolerances.fm_weak;
    let n = s.dim();
    let mut rng = rng_for(cfg, Suite::Fmquad);
    let (f, h) = fm_pair(n, &mut rng);
    let weak = |r: fmquad::WeakReport| r.residual / r.scale.max(1e-8);
    for j in 0..n {
        let b = MagneticStandard { system: s, x: unit(n, j) };
        c.push("skew-magnetic-standard", j, weak(q.skew_defect(&b, &f, &h)?), tol);
    }
    let full = FundamentalOf {
        xi: Box::new(|p, w| frame_omega(s, p, w)),
    };
    let fields: [(&str, Box<dyn FmField + '_>); 3] = [
        ("skew-omega-zero", Box::new(fmquad::omega_zero_field(s))),
        ("skew-lorentz", Box::new(full)),
        ("skew-generator", Box::new(FrameGenerator { system: s })),
    ];
    for (name, z) in fields.iter() {
        c.push(name, 0, weak(q.skew_defect(z.as_ref(), &f, &h)?), tol);
    }
    let r = q.structure_identity(&f, &h, StructureSign::Minus)?;
    c.push("structure-identity", 0, weak(r), tol);
    Ok(())
}
