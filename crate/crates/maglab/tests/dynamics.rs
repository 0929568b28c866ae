use maglab::dynamics::*;
use maglab::framebundle::{random_frame, FramePoint};
use maglab::liealg::unit;
use maglab::manifold::{builtin, constant_field_torus, BUILTIN_NAMES};
use maglab::{Matrix, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn rand_state(rng: &mut ChaCha8Rng, m: usize) -> JacobiState {
    JacobiState::new(
        rng.random_range(-1.0..1.0),
        Vector::from_fn(m, |_, _| rng.random_range(-1.0..1.0)),
        Vector::from_fn(m, |_, _| rng.random_range(-1.0..1.0)),
    )
}

#[test]
fn larmor_orbit_closes() {
    let b = 0.8;
    let s = constant_field_torus(b);
    let tr = integrate_geodesic(&s, &Vector::zeros(2), &unit(2, 0), 2.0 * PI / b, 1e-3).unwrap();
    assert!(tr.p.last().unwrap().norm() < 1e-9);
    let half = integrate_geodesic(&s, &Vector::zeros(2), &unit(2, 0), PI / b, 1e-3).unwrap();
    assert!((half.p.last().unwrap() - unit(2, 1) * (2.0 / b)).norm() < 1e-9);
}

#[test]
fn great_circle_on_sphere() {
    let s = builtin("sphere2").unwrap();
    let v = unit(2, 0) * 0.5;
    let tr = integrate_geodesic(&s, &Vector::zeros(2), &v, PI / 2.0, 1e-3).unwrap();
    assert!((tr.p.last().unwrap() - unit(2, 0)).norm() < 1e-9);
    let tr = integrate_geodesic(&s, &unit(2, 0), &unit(2, 1), 2.0 * PI, 1e-3).unwrap();
    assert!((&tr.p[tr.p.len() / 4] - unit(2, 1)).norm() < 1e-9);
    assert!((tr.p.last().unwrap() - unit(2, 0)).norm() < 1e-9);
}

#[test]
fn speed_is_conserved() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for name in ["conformal-t2", "nonclosed-t3", "kahler-t4"] {
        let s = builtin(name).unwrap();
        let w = random_frame(&s, &mut rng).unwrap();
        let tr = integrate_geodesic(&s, &w.p, &w.velocity(), 5.0, 1e-2).unwrap();
        for (p, v) in tr.p.iter().zip(&tr.v) {
            let g = s.metric.metric(p).unwrap();
            assert!(((&g * v).dot(v) - 1.0).abs() < 1e-8, "{name}");
        }
    }
}

#[test]
fn frame_flow_projects_to_geodesic() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let s = builtin("nonclosed-t3").unwrap();
    let w = random_frame(&s, &mut rng).unwrap();
    let ff = integrate_frame_flow(&s, &w, 3.0, 1e-2).unwrap();
    let g = integrate_geodesic(&s, &w.p, &w.velocity(), 3.0, 1e-2).unwrap();
    for (f, (p, v)) in ff.frames.iter().zip(g.p.iter().zip(&g.v)) {
        assert!((&f.p - p).norm() < 1e-8);
        assert!((f.velocity() - v).norm() < 1e-8);
        assert!(f.defect(&s.metric).unwrap() < 1e-8);
    }
}

#[test]
fn jacobi_matches_variation_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for name in BUILTIN_NAMES {
        let s = builtin(name).unwrap();
        let m = s.dim() - 1;
        let w = random_frame(&s, &mut rng).unwrap();
        let z = rand_state(&mut rng, m);
        let a = jacobi_propagate(&s, &w, &z, 5.0, 1e-2).unwrap();
        let b = jacobi_fd_oracle(&s, &w, &z, 5.0, 1e-2, 1e-5).unwrap();
        let scale = b.states.iter().map(|j| j.h.amax().max(j.v.amax()).max(j.a.abs())).fold(1.0, f64::max);
        let d = a.max_distance(&b) / scale;
        assert!(d < 1e-4, "{name}: {d:e}");
    }
}

#[test]
fn frame_form_agrees_with_sm_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for name in ["conformal-t2", "nonclosed-t3", "kahler-t4"] {
        let s = builtin(name).unwrap();
        let n = s.dim();
        let w = random_frame(&s, &mut rng).unwrap();
        let z = rand_state(&mut rng, n - 1);
        let h0 = maglab::liealg::from_normal(&z.h);
        let v0 = maglab::liealg::wedge(&unit(n, 0), &maglab::liealg::from_normal(&z.v));
        let a = jacobi_propagate(&s, &w, &z, 5.0, 1e-2).unwrap();
        let b = jacobi_propagate_frame(&s, &w, z.a, &h0, &v0, 5.0, 1e-2).unwrap();
        assert!(a.max_distance(&b) < 1e-8, "{name}: {:e}", a.max_distance(&b));
    }
}

#[test]
fn larmor_jacobi_closed_form() {
    let b = 0.8;
    let s = constant_field_torus(b);
    let w = FramePoint::new(&s.metric, Vector::zeros(2), Matrix::identity(2, 2)).unwrap();
    let z = JacobiState::new(0.0, Vector::zeros(1), Vector::from_element(1, 1.0));
    let tr = jacobi_propagate(&s, &w, &z, 5.0, 1e-2).unwrap();
    for (t, j) in tr.t.iter().zip(&tr.states) {
        assert!((j.h[0] - (b * t).sin() / b).abs() < 1e-8);
        assert!((j.v[0] - (b * t).cos()).abs() < 1e-8);
    }
}

#[test]
fn conjugate_times() {
    let b = 0.8;
    let s = constant_field_torus(b);
    let w = FramePoint::new(&s.metric, Vector::zeros(2), Matrix::identity(2, 2)).unwrap();
    let c = conjugate_points(&s, &w, 10.0, 1e-2).unwrap();
    assert!((c[0] - PI / b).abs() < 1e-4, "{c:?}");
    assert!((c[1] - 2.0 * PI / b).abs() < 1e-4, "{c:?}");
    let strict = conjugate_points_with(&s, &w, 10.0, 1e-2, ConjugacyCriterion::Strict).unwrap();
    assert!((strict[0] - 2.0 * PI / b).abs() < 1e-4, "{strict:?}");

    let sph = builtin("sphere3").unwrap();
    let w = FramePoint::from_velocity(&sph.metric, unit(3, 0), &unit(3, 1)).unwrap();
    let c = conjugate_points(&sph, &w, 4.0, 1e-2).unwrap();
    assert!((c[0] - PI).abs() < 1e-4, "{c:?}");
}

#[test]
fn csv_dump_has_header_and_rows() {
    let s = constant_field_torus(0.5);
    let w = FramePoint::new(&s.metric, Vector::zeros(2), Matrix::identity(2, 2)).unwrap();
    let z = JacobiState::new(0.1, Vector::from_element(1, 0.2), Vector::from_element(1, 0.3));
    let tr = jacobi_propagate(&s, &w, &z, 0.1, 1e-2).unwrap();
    let mut buf = Vec::new();
    tr.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "t,p0,p1,w00,w01,w10,w11,a,h1,v1");
    assert_eq!(lines.len(), tr.t.len() + 1);
}
