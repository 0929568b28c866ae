//! Weights of so(n), Casimir scalars, and the pinching thresholds built
//! from first eigenvalues of homogeneous spaces SO(n−1)/K.
//!
//! Weights are written in the basis `e₁, …, e_m` (`m = ⌊n/2⌋`) that is
//! orthonormal for the metric dual to `⟨ξ, η⟩ = −½Tr(ξη)`; the Killing
//! form is `B = (n−2)⟨·,·⟩`.

use num_rational::Rational64;
use num_traits::{Signed, Zero};
use serde::Serialize;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RepError {
    #[error("so({0}) is not semisimple; need n ≥ 3")]
    TooSmall(usize),
    #[error("weight has {got} coordinates, so({n}) needs {want}")]
    Length { n: usize, got: usize, want: usize },
    #[error("weight {0:?} is not dominant")]
    NotDominant(Vec<Rational64>),
    #[error("weight {0:?} mixes integer and half-integer coordinates")]
    NotInLattice(Vec<Rational64>),
    #[error("group {group} is not in the list for n = {n}")]
    NotListed { group: String, n: usize },
}

pub type Weight = Vec<Rational64>;

fn rank(n: usize) -> Result<usize, RepError> {
    if n < 3 {
        Err(RepError::TooSmall(n))
    } else {
        Ok(n / 2)
    }
}

fn r(a: i64, b: i64) -> Rational64 {
    Rational64::new(a, b)
}

pub fn dot(a: &[Rational64], b: &[Rational64]) -> Rational64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn unit_sum(m: usize, k: usize, last_sign: i64, half: bool) -> Weight {
    let c = if half { r(1, 2) } else { r(1, 1) };
    (0..m)
        .map(|i| {
            if i + 1 < k {
                c
            } else if i + 1 == k {
                c * last_sign
            } else {
                Rational64::zero()
            }
        })
        .collect()
}

/// Fundamental weights `ϖ₁, …, ϖ_m`.
pub fn fundamental_weights(n: usize) -> Result<Vec<Weight>, RepError> {
    let m = rank(n)?;
    let mut out = Vec::with_capacity(m);
    if n % 2 == 0 {
        for i in 1..=m.saturating_sub(2) {
            out.push(unit_sum(m, i, 1, false));
        }
        out.push(unit_sum(m, m, -1, true));
        out.push(unit_sum(m, m, 1, true));
    } else {
        for i in 1..m {
            out.push(unit_sum(m, i, 1, false));
        }
        out.push(unit_sum(m, m, 1, true));
    }
    Ok(out)
}

/// Generators of the dominant, analytically integral monoid.
pub fn integral_basis(n: usize) -> Result<Vec<Weight>, RepError> {
    let f = fundamental_weights(n)?;
    let m = f.len();
    let double = |w: &Weight| w.iter().map(|x| x * 2).collect::<Weight>();
    let mut out: Vec<Weight> = Vec::with_capacity(m);
    if n % 2 == 0 {
        out.extend(f[..m - 2].iter().cloned());
        out.push(double(&f[m - 2]));
        out.push(f[m - 2].iter().zip(&f[m - 1]).map(|(a, b)| a + b).collect());
        out.push(double(&f[m - 1]));
    } else {
        out.extend(f[..m - 1].iter().cloned());
        out.push(double(&f[m - 1]));
    }
    Ok(out)
}

/// Positive roots: `eᵢ ± eⱼ` (i < j), plus `eᵢ` when n is odd.
pub fn positive_roots(n: usize) -> Result<Vec<Weight>, RepError> {
    let m = rank(n)?;
    let e = |i: usize| -> Weight { (0..m).map(|k| Rational64::from_integer((k == i) as i64)).collect() };
    let mut out = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            for s in [1, -1] {
                out.push(e(i).iter().zip(e(j)).map(|(a, b)| a + b * s).collect());
            }
        }
        if n % 2 == 1 {
            out.push(e(i));
        }
    }
    Ok(out)
}

/// Half sum of positive roots, `δᵢ = (n − 2i)/2` for `i = 1..=⌊n/2⌋`.
pub fn half_sum(n: usize) -> Result<Weight, RepError> {
    let m = rank(n)?;
    Ok((1..=m).map(|i| Rational64::new(n as i64 - 2 * i as i64, 2)).collect())
}

/// Dominance for so(n) and membership in the weight lattice.
pub fn check_dominant(n: usize, lambda: &[Rational64]) -> Result<(), RepError> {
    let m = rank(n)?;
    if lambda.len() != m {
        return Err(RepError::Length { n, got: lambda.len(), want: m });
    }
    let all_int = lambda.iter().all(|x| x.is_integer());
    let all_half = lambda.iter().all(|x| (x * 2).is_integer() && !x.is_integer());
    if !(all_int || all_half) {
        return Err(RepError::NotInLattice(lambda.to_vec()));
    }
    let ok = lambda.windows(2).take(m.saturating_sub(2)).all(|w| w[0] >= w[1])
        && if n % 2 == 0 {
            m < 2 || lambda[m - 2] >= lambda[m - 1].abs()
        } else {
            (m < 2 || lambda[m - 2] >= lambda[m - 1]) && lambda[m - 1] >= Rational64::zero()
        };
    if ok {
        Ok(())
    } else {
        Err(RepError::NotDominant(lambda.to_vec()))
    }
}

pub fn is_analytically_integral(lambda: &[Rational64]) -> bool {
    lambda.iter().all(|x| x.is_integer())
}

/// `⟨λ, λ + 2δₙ⟩`: the eigenvalue of `Δ^{SO(n)}` for `−½Tr`.
pub fn laplace_eigenvalue(n: usize, lambda: &[Rational64]) -> Result<Rational64, RepError> {
    check_dominant(n, lambda)?;
    let d = half_sum(n)?;
    let shifted: Weight = lambda.iter().zip(&d).map(|(l, d)| l + d * 2).collect();
    Ok(dot(lambda, &shifted))
}

/// Casimir scalar for the Killing form, `⟨λ, λ + 2δₙ⟩ / (n − 2)`.
pub fn casimir_scalar(n: usize, lambda: &[Rational64]) -> Result<Rational64, RepError> {
    Ok(laplace_eigenvalue(n, lambda)? / (n as i64 - 2))
}

/// Dominant analytically integral weights with `λ₁ ≤ bound`.
pub fn dominant_integral_weights(n: usize, bound: i64) -> Result<Vec<Weight>, RepError> {
    let m = rank(n)?;
    let mut out = Vec::new();
    let mut cur = vec![0i64; m];
    fn rec(n: usize, m: usize, i: usize, hi: i64, cur: &mut Vec<i64>, out: &mut Vec<Weight>) {
        if i == m {
            out.push(cur.iter().map(|&x| Rational64::from_integer(x)).collect());
            return;
        }
        let lo = if i + 1 == m && n % 2 == 0 { -hi } else { 0 };
        for v in lo..=hi {
            cur[i] = v;
            rec(n, m, i + 1, v.abs(), cur, out);
        }
    }
    rec(n, m, 0, bound, &mut cur, &mut out);
    Ok(out)
}

/// Radon–Hurwitz number: `ρ(n) = 2^b + 8a` for `n = 2^{4a+b}·odd`.
pub fn radon_hurwitz(n: u64) -> u64 {
    assert!(n > 0, "ρ(0) is undefined");
    let v = n.trailing_zeros() as u64;
    (1 << (v % 4)) + 8 * (v / 4)
}

/// Maximal subgroups `K ⊂ SO(n−1)` that can carry a non-ergodic flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Group {
    /// `SO(q) × SO(n−1−q)`.
    Grassmann { q: usize },
    U3,
    G2,
    /// `E₇/(ℤ/2)` inside SO(133).
    E7,
    /// `SO(n−2)` inside SO(n−1).
    Stabilizer,
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Group::Grassmann { q } => write!(f, "SO({q})xSO(n-1-{q})"),
            Group::U3 => write!(f, "U(3)"),
            Group::G2 => write!(f, "G2"),
            Group::E7 => write!(f, "E7/Z2"),
            Group::Stabilizer => write!(f, "SO(n-2)"),
        }
    }
}

/// The list 𝒢ₙ.
pub fn groups(n: usize) -> Vec<Group> {
    match n {
        0..=2 => vec![],
        7 => vec![Group::U3],
        8 => std::iter::once(Group::G2)
            .chain((1..=3).map(|q| Group::Grassmann { q }))
            .collect(),
        134 => vec![Group::E7, Group::Stabilizer],
        _ if n % 2 == 1 => vec![],
        _ => {
            let top = (radon_hurwitz(n as u64) as usize - 1).min((n - 2) / 2);
            (1..=top).map(|q| Group::Grassmann { q }).collect()
        }
    }
}

/// First nonzero eigenvalue of `SO(n−1)/K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Nu {
    Exact(Rational64),
    /// The value `ν(K₁) = n − 2` that bounds `ν(K_q)` from above.
    Bound(Rational64),
    Unknown,
}

impl Nu {
    pub fn value(&self) -> Option<Rational64> {
        match self {
            Nu::Exact(v) | Nu::Bound(v) => Some(*v),
            Nu::Unknown => None,
        }
    }
}

/// Eigenvalue of the round `S^{n−2} = SO(n−1)/SO(n−2)`, from the Casimir
/// of the standard representation of SO(n−1).
fn sphere_eigenvalue(n: usize) -> Result<Rational64, RepError> {
    let k = n - 1;
    let mut e1 = vec![Rational64::zero(); k / 2];
    e1[0] = Rational64::from_integer(1);
    laplace_eigenvalue(k, &e1)
}

pub fn nu(group: Group, n: usize) -> Result<Nu, RepError> {
    if !groups(n).contains(&group) {
        return Err(RepError::NotListed { group: group.to_string(), n });
    }
    Ok(match group {
        Group::Grassmann { q: 1 } | Group::Stabilizer => Nu::Exact(sphere_eigenvalue(n)?),
        Group::Grassmann { .. } => Nu::Bound(sphere_eigenvalue(n)?),
        Group::U3 | Group::G2 => Nu::Exact(Rational64::from_integer(16)),
        Group::E7 => Nu::Unknown,
    })
}

/// `χ(t) = 2√t / (3 + 2√t)`.
pub fn chi(t: f64) -> f64 {
    let s = t.sqrt();
    2.0 * s / (3.0 + 2.0 * s)
}

fn rational_sqrt(t: Rational64) -> Option<Rational64> {
    let isqrt = |x: i64| -> Option<i64> {
        let s = (x as f64).sqrt().round() as i64;
        (s * s == x).then_some(s)
    };
    if t.is_negative() {
        return None;
    }
    Some(Rational64::new(isqrt(*t.numer())?, isqrt(*t.denom())?))
}

/// `χ(t)` exactly when `√t` is rational.
pub fn chi_exact(t: Rational64) -> Option<Rational64> {
    let s = rational_sqrt(t)?;
    Some(s * 2 / (s * 2 + 3))
}

/// Largest ν over 𝒢ₙ; `None` if 𝒢ₙ is empty.
pub fn nu_max(n: usize) -> Result<Option<Nu>, RepError> {
    let mut best: Option<Nu> = None;
    for g in groups(n) {
        let v = nu(g, n)?;
        best = match (best, v) {
            (_, Nu::Unknown) | (Some(Nu::Unknown), _) => Some(Nu::Unknown),
            (None, v) => Some(v),
            (Some(b), v) => {
                if v.value() > b.value() {
                    Some(v)
                } else {
                    Some(b)
                }
            }
        };
    }
    Ok(best)
}

/// The threshold `δ*(n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaStar {
    Exact(Rational64),
    Value(f64),
    Unknown,
}

impl DeltaStar {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            DeltaStar::Exact(r) => Some(*r.numer() as f64 / *r.denom() as f64),
            DeltaStar::Value(v) => Some(*v),
            DeltaStar::Unknown => None,
        }
    }
}

impl fmt::Display for DeltaStar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeltaStar::Exact(r) => write!(f, "{r}"),
            DeltaStar::Value(v) => write!(f, "{v:.12}"),
            DeltaStar::Unknown => write!(f, "unknown"),
        }
    }
}

pub fn delta_star(n: usize) -> Result<DeltaStar, RepError> {
    Ok(match nu_max(n)? {
        None => DeltaStar::Exact(Rational64::zero()),
        Some(Nu::Unknown) => DeltaStar::Unknown,
        Some(v) => {
            let t = v.value().expect("known value");
            match chi_exact(t) {
                Some(c) => DeltaStar::Exact(c),
                None => DeltaStar::Value(chi(*t.numer() as f64 / *t.denom() as f64)),
            }
        }
    })
}

/// `3δ − 2(1 − δ)√ν_max`; positive exactly when `δ > δ*(n)`.
/// `None` when ν_max is unknown.
pub fn epsilon_margin(delta: f64, n: usize) -> Result<Option<f64>, RepError> {
    Ok(match nu_max(n)? {
        None => Some(3.0 * delta),
        Some(Nu::Unknown) => None,
        Some(v) => {
            let t = v.value().expect("known value");
            let s = (*t.numer() as f64 / *t.denom() as f64).sqrt();
            Some(3.0 * delta - 2.0 * (1.0 - delta) * s)
        }
    })
}

/// One row of the pinching table.
#[derive(Debug, Clone, Serialize)]
pub struct PinchingRow {
    pub n: usize,
    pub groups: Vec<String>,
    pub nu_max: Option<String>,
    pub delta_star: String,
    pub delta_star_value: Option<f64>,
    pub margin: Option<f64>,
}

pub fn pinching_row(n: usize, delta: Option<f64>) -> Result<PinchingRow, RepError> {
    let nm = nu_max(n)?;
    let ds = delta_star(n)?;
    Ok(PinchingRow {
        n,
        groups: groups(n).iter().map(|g| g.to_string()).collect(),
        nu_max: nm.map(|v| match v {
            Nu::Exact(r) => r.to_string(),
            Nu::Bound(r) => format!("{r} (bound)"),
            Nu::Unknown => "unknown".into(),
        }),
        delta_star: ds.to_string(),
        delta_star_value: ds.as_f64(),
        margin: match delta {
            Some(d) => epsilon_margin(d, n)?,
            None => None,
        },
    })
}
