use maglab::par::Execution;
use maglab::tomoconst::*;
use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Signed, Zero};
use proptest::prelude::*;

type Q = Ratio<i128>;

fn big(x: Q) -> BigRational {
    BigRational::new(BigInt::from(*x.numer()), BigInt::from(*x.denom()))
}

fn q(a: i128, b: i128) -> BigRational {
    big(Q::new(a, b))
}

/// Completed-square form `K[(A·B)/(A − 1 + (n−1)/K) − B]`, in i128 rationals.
fn c_oracle(m: i128, n: i128) -> Q {
    let up = Q::new(1, n + m - 2);
    let a0 = Q::new(n - 2, m * (m + n - 2));
    let k = Q::from_integer(m * (m + n - 2));
    let a = (Q::from_integer(1) + up) * (Q::from_integer(1) + up);
    let b = (a0 + up) * (a0 + up);
    k * (a * b / (a - Q::from_integer(1) + Q::from_integer(n - 1) / k) - b)
}

#[test]
fn coefficient_values() {
    let t = coeffs(2, 3).unwrap();
    assert_eq!(t.a_minus, q(1, 2));
    assert_eq!(t.a_zero, q(1, 6));
    assert_eq!(t.a_plus, q(1, 3));
    for k in 1..10 {
        assert!(a_zero(k, 2).is_zero());
    }
    assert!(coeffs(1, 4).unwrap().c.is_zero());
    assert_eq!(coeffs(2, 2).unwrap().c, q(1, 2));
}

#[test]
fn closed_form_over_grid() {
    for m in 1..=40u32 {
        for n in 2..=40u32 {
            if m + n < 4 {
                continue;
            }
            let v = verify_c(m, n).unwrap();
            assert!(v.equal, "(m, n) = ({m}, {n})");
            assert_eq!(v.quadratic, big(c_oracle(m as i128, n as i128)));
        }
    }
}

#[test]
fn intro_form() {
    assert_eq!(intro_specialization(2).unwrap(), q(1, 2));
    assert_eq!(intro_specialization(4).unwrap(), q(4, 3));
    for n in 2..=100 {
        assert_eq!(intro_specialization(n).unwrap(), coeffs(2, n).unwrap().c);
    }
}

#[test]
fn signs_and_positivity() {
    for row in sweep(40, 40, Execution::Parallel) {
        assert!(row.signs_ok && row.closed_form_equal);
        let c = coeffs(row.m, row.n).unwrap().c;
        assert_eq!(c.is_zero(), row.m == 1);
        assert!(!c.is_negative());
        assert!(dropped_term_bound(row.m, row.n).unwrap());
    }
    for n in 3..=50 {
        assert!(coeffs(1, n).unwrap().c.is_zero());
    }
}

#[test]
fn halving_a_zero_breaks_the_identity() {
    // same quadratic with a₀ replaced by a₀/2
    let mut hits = 0;
    for m in 2..=10u32 {
        for n in 3..=10u32 {
            let (mi, ni) = (m as i128, n as i128);
            let up = Q::new(1, ni + mi - 2);
            let a0 = Q::new(ni - 2, 2 * mi * (mi + ni - 2));
            let k = Q::from_integer(mi * (mi + ni - 2));
            let l = Q::from_integer(1) + up;
            let alpha = k * (l * l - Q::from_integer(1)) + Q::from_integer(ni - 1);
            let beta = Q::from_integer(-2) * k * l * (up + a0);
            let gamma = k * (up + a0) * (up + a0);
            if big(beta * beta / (Q::from_integer(4) * alpha) - gamma) == c_closed(m, n) {
                hits += 1;
            }
        }
    }
    assert_eq!(hits, 0);
}

#[test]
fn sweep_is_execution_independent() {
    let a = sweep(12, 12, Execution::Sequential);
    let b = sweep(12, 12, Execution::Parallel);
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!((x.m, x.n, &x.c), (y.m, y.n, &y.c));
    }
}

#[test]
fn csv_table() {
    let rows = sweep(3, 4, Execution::Sequential);
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "m,n,alpha,beta,gamma,C,closed_form_equal,signs_ok");
    assert_eq!(lines.count(), rows.len());
    assert!(text.contains("2,2,"));
}

proptest! {
    #[test]
    fn c_matches_oracle(m in 1u32..200, n in 2u32..200) {
        prop_assume!(m + n >= 4);
        prop_assert_eq!(coeffs(m, n).unwrap().c, big(c_oracle(m as i128, n as i128)));
    }

    #[test]
    fn c_grows_in_m(m in 1u32..100, n in 2u32..100) {
        prop_assume!(m + n >= 4);
        prop_assert!(c_closed(m + 1, n) > c_closed(m, n));
    }
}
