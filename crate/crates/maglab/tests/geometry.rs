use maglab::liealg::*;
use maglab::manifold::*;
use maglab::{Matrix, Vector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> Vector {
    Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

fn rand_skew(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let m = Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    &m - m.transpose()
}

fn rand_element(rng: &mut ChaCha8Rng, n: usize) -> LieElement {
    LieElement::new(Skew::from_matrix(&rand_skew(rng, n)).unwrap(), rand_vec(rng, n)).unwrap()
}

fn elem_diff(a: &LieElement, b: &LieElement) -> f64 {
    (a.skew.to_matrix() - b.skew.to_matrix()).amax() + (&a.vec - &b.vec).amax()
}

#[test]
fn wedge_conventions() {
    let (e1, e2) = (unit(3, 0), unit(3, 1));
    assert_eq!(wedge(&e1, &e1), Matrix::zeros(3, 3));
    assert_eq!((wedge(&e1, &e2) * &e1).dot(&e2), 1.0);
    assert!((inner_so(&wedge(&e1, &e2), &wedge(&e1, &e2)) - 1.0).abs() < 1e-15);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let (x, y, xi) = (rand_vec(&mut rng, 5), rand_vec(&mut rng, 5), rand_skew(&mut rng, 5));
        assert!(((&xi * &x).dot(&y) - inner_so(&xi, &wedge(&x, &y))).abs() < 1e-14);
    }
}

#[test]
fn bracket_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let xi = rand_skew(&mut rng, 4);
    let y = rand_vec(&mut rng, 4);
    let b = bracket(&LieElement::rotation(&xi).unwrap(), &LieElement::translation(&y)).unwrap();
    assert!(b.skew.to_matrix().amax() == 0.0);
    assert!((&b.vec - &xi * &y).amax() < 1e-15);
    let a = rand_element(&mut rng, 4);
    assert!(bracket(&a, &a).unwrap().skew.to_matrix().amax() < 1e-15);
    let x = rand_vec(&mut rng, 4);
    let lhs = commutator(&xi, &wedge(&x, &y));
    let rhs = wedge(&(&xi * &x), &y) + wedge(&x, &(&xi * &y));
    assert!((lhs - rhs).amax() < 1e-14);
    let t = LieElement::translation(&x);
    let s = LieElement::translation(&y);
    assert!((inner(&t, &s) - x.dot(&y)).abs() < 1e-15);
}

#[test]
fn jacobi_identity_and_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in 3..=6 {
        let mut worst = 0.0f64;
        let mut worst_inv = 0.0f64;
        for _ in 0..10_000 {
            let (a, b, c) = (rand_element(&mut rng, n), rand_element(&mut rng, n), rand_element(&mut rng, n));
            let t1 = bracket(&a, &bracket(&b, &c).unwrap()).unwrap();
            let t2 = bracket(&b, &bracket(&c, &a).unwrap()).unwrap();
            let t3 = bracket(&c, &bracket(&a, &b).unwrap()).unwrap();
            let sum = LieElement {
                skew: Skew::from_matrix(&(t1.skew.to_matrix() + t2.skew.to_matrix() + t3.skew.to_matrix()))
                    .unwrap(),
                vec: t1.vec + t2.vec + t3.vec,
            };
            worst = worst.max(elem_diff(&sum, &LieElement::translation(&Vector::zeros(n))));
            let z = LieElement::rotation(&rand_skew(&mut rng, n)).unwrap();
            let r = inner(&bracket(&z, &a).unwrap(), &b) + inner(&a, &bracket(&z, &b).unwrap());
            worst_inv = worst_inv.max(r.abs());
        }
        assert!(worst < 1e-12, "n={n}: {worst:e}");
        assert!(worst_inv < 1e-12, "n={n}: {worst_inv:e}");
    }
}

#[test]
fn split_is_orthogonal_idempotent() {
    let e = |i| unit(5, i);
    assert_eq!(split_so(&wedge(&e(1), &e(2))).1, Matrix::zeros(5, 5));
    assert_eq!(split_so(&wedge(&e(0), &e(1))).0, Matrix::zeros(5, 5));
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let xi = rand_skew(&mut rng, 5);
        let (t, r) = split_so(&xi);
        assert!(inner_so(&t, &r).abs() < 1e-14);
        assert!((&t + &r - &xi).amax() < 1e-14);
        assert!((split_so(&t).0 - &t).amax() < 1e-14 && split_so(&t).1.amax() < 1e-14);
        assert!((split_so(&r).1 - &r).amax() < 1e-14);
        let lift = 0.5 * wedge(&e(0), &(&xi * e(0))) + 0.5 * &xi;
        assert!((omega_tilde(&xi) - lift).amax() < 1e-14);
        assert!((omega_zero(&xi) - 0.5 * (&xi - wedge(&e(0), &(&xi * e(0))))).amax() < 1e-14);
    }
}

#[test]
fn metrics_are_spd_and_periodic() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for name in BUILTIN_NAMES {
        let s = builtin(name).unwrap();
        let n = s.dim();
        for _ in 0..50 {
            let p = maglab::framebundle::random_point(&s, &mut rng);
            let g = s.metric.metric(&p).unwrap();
            assert!((&g - g.transpose()).amax() < 1e-15);
            assert!(g.clone().symmetric_eigenvalues().min() > 0.0);
            let sig = s.sigma(&p);
            assert!((&sig + sig.transpose()).amax() == 0.0);
            let om = s.lorentz(&p).unwrap();
            let (x, y) = (rand_vec(&mut rng, n), rand_vec(&mut rng, n));
            assert!(((&g * (&om * &x)).dot(&y) - (&sig.transpose() * &x).dot(&y)).abs() < 1e-12 * (1.0 + g.amax()));
            assert!(((&g * (&om * &x)).dot(&y) + (&g * &x).dot(&(&om * &y))).abs() < 1e-12 * (1.0 + g.amax()));
            if let Some(per) = &s.metric.period {
                let q = &p + per.component_mul(&Vector::from_fn(n, |i, _| (i as f64) - 1.0));
                assert!((s.metric.metric(&q).unwrap() - &g).amax() < 1e-12);
            }
        }
    }
}

#[test]
fn conformal_christoffels_match_closed_form() {
    let phi = TrigPoly::constant(2, 0.0).term(&[1, 0], 0.1, 0.0);
    let s = conformal_torus(phi.clone(), TrigPoly::constant(2, 0.0));
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..50 {
        let p = maglab::framebundle::random_point(&s, &mut rng);
        let gam = s.metric.christoffel(&p).unwrap();
        let d = phi.gradient(p.as_slice());
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    let want = (k == i) as i32 as f64 * d[j] + (k == j) as i32 as f64 * d[i]
                        - (i == j) as i32 as f64 * d[k];
                    assert!((gam[k][(i, j)] - want).abs() < 1e-8);
                }
            }
        }
        // Gaussian curvature −e^{−2φ}Δφ
        let lap = phi.hessian(p.as_slice()).trace();
        let sec = s.metric.sectional(&p, &unit(2, 0), &unit(2, 1)).unwrap();
        assert!((sec + (-2.0 * phi.value(p.as_slice())).exp() * lap).abs() < 1e-10);
    }
}

#[test]
fn constant_curvature_charts() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (name, k) in [("sphere2", 1.0), ("sphere3", 1.0), ("hyperbolic2", -1.0), ("hyperbolic3", -1.0), ("flat-t4", 0.0)] {
        let s = builtin(name).unwrap();
        let n = s.dim();
        for _ in 0..30 {
            let p = maglab::framebundle::random_point(&s, &mut rng);
            let (x, y) = (rand_vec(&mut rng, n), rand_vec(&mut rng, n));
            assert!((s.metric.sectional(&p, &x, &y).unwrap() - k).abs() < 1e-6, "{name}");
        }
    }
}

#[test]
fn finite_difference_jets_track_analytic_ones() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for name in ["conformal-t2", "sphere3", "hyperbolic3"] {
        let s = builtin(name).unwrap();
        let fd = s.metric.clone().with_mode(DerivativeMode::FiniteDifference { h: 1e-4 });
        for _ in 0..10 {
            let p = maglab::framebundle::random_point(&s, &mut rng);
            let a = s.metric.geometry(&p).unwrap();
            let b = fd.geometry(&p).unwrap();
            for k in 0..s.dim() {
                assert!((&a.gamma[k] - &b.gamma[k]).amax() < 1e-8, "{name}");
            }
            for (ra, rb) in a.riemann.iter().zip(&b.riemann) {
                assert!((ra - rb).amax() < 1e-5, "{name}");
            }
        }
    }
}

#[test]
fn riemann_symmetries() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for name in ["conformal-t2", "sphere3", "hyperbolic3-magnetic"] {
        let s = builtin(name).unwrap();
        let n = s.dim();
        for _ in 0..20 {
            let p = maglab::framebundle::random_point(&s, &mut rng);
            let geo = s.metric.geometry(&p).unwrap();
            let v: Vec<Vector> = (0..4).map(|_| rand_vec(&mut rng, n)).collect();
            let r = |a: &Vector, b: &Vector, c: &Vector, d: &Vector| geo.inner(&(geo.riemann_op(a, b) * c), d);
            let cyc = geo.riemann_op(&v[0], &v[1]) * &v[2]
                + geo.riemann_op(&v[1], &v[2]) * &v[0]
                + geo.riemann_op(&v[2], &v[0]) * &v[1];
            assert!(cyc.amax() < 1e-8);
            assert!((r(&v[0], &v[1], &v[2], &v[3]) - r(&v[2], &v[3], &v[0], &v[1])).abs() < 1e-8);
        }
    }
}

#[test]
fn lorentz_derivative_and_exterior_derivative() {
    let mut s = builtin("flat-t2").unwrap();
    s.sigma = TwoForm::Components(vec![FormTerm {
        i: 0,
        j: 1,
        coeff: TrigPoly::constant(2, 0.0).term(&[1, 0], 0.0, 1.0),
    }]);
    let p = Vector::from_vec(vec![0.7, 2.0]);
    let d = s.nabla_omega(&p, &unit(2, 0)).unwrap();
    let j = wedge(&unit(2, 0), &unit(2, 1));
    assert!((d - j * 0.7f64.cos()).amax() < 1e-14);
    let x = Vector::from_vec(vec![0.3, -1.2]);
    let lin = s.nabla_omega(&p, &(&x * 2.5)).unwrap() - s.nabla_omega(&p, &x).unwrap() * 2.5;
    assert!(lin.amax() < 1e-12);

    let mut t3 = builtin("flat-t3").unwrap();
    t3.metric.period = None;
    t3.sigma = TwoForm::Custom(Arc::new(|q: &[f64]| {
        let mut m = Matrix::zeros(3, 3);
        m[(0, 1)] = q[2];
        m[(1, 0)] = -q[2];
        m
    }));
    let p = Vector::from_vec(vec![0.1, 0.2, 0.3]);
    let (e1, e2, e3) = (unit(3, 0), unit(3, 1), unit(3, 2));
    assert!((t3.d_sigma(&p, &e1, &e2, &e3).unwrap() - 1.0).abs() < 1e-8);
    assert!((t3.d_sigma(&p, &e2, &e1, &e3).unwrap() + 1.0).abs() < 1e-8);
    for name in ["kahler-t4", "larmor-t2", "conformal-t2"] {
        let s = builtin(name).unwrap();
        let n = s.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let p = maglab::framebundle::random_point(&s, &mut rng);
        let (a, b, c) = (rand_vec(&mut rng, n), rand_vec(&mut rng, n), rand_vec(&mut rng, n));
        assert!(s.d_sigma(&p, &a, &b, &c).unwrap().abs() < 1e-12, "{name}");
    }
}

proptest! {
    #[test]
    fn d_sigma_is_alternating(seed in 0u64..1000) {
        let s = builtin("nonclosed-t3").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = maglab::framebundle::random_point(&s, &mut rng);
        let (a, b, c) = (rand_vec(&mut rng, 3), rand_vec(&mut rng, 3), rand_vec(&mut rng, 3));
        let v = s.d_sigma(&p, &a, &b, &c).unwrap();
        prop_assert!((v + s.d_sigma(&p, &b, &a, &c).unwrap()).abs() < 1e-12);
        prop_assert!((v - s.d_sigma(&p, &b, &c, &a).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn wedge_is_antisymmetric_and_bilinear(seed in 0u64..1000, t in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, y, z) = (rand_vec(&mut rng, 4), rand_vec(&mut rng, 4), rand_vec(&mut rng, 4));
        prop_assert!((wedge(&x, &y) + wedge(&y, &x)).amax() < 1e-15);
        let lhs = wedge(&(&x + &z * t), &y);
        prop_assert!((lhs - wedge(&x, &y) - wedge(&z, &y) * t).amax() < 1e-13);
    }
}
