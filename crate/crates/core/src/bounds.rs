//! A-priori bound systems for Newton and Steffensen/ASIS, the majorizing
//! quadratic `q(s) = (a/2)s² − s + 1`, and exact iterations on `q` used as
//! their oracle.
//!
//! The recurrences are evaluated in double-double arithmetic. At `a = 1/2`
//! the Steffensen system amplifies any departure from its invariant by about
//! 4 per step, so plain `f64` loses the invariant within a dozen steps.

use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::problem::KantorovichData;

/// Which bound system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundSystem {
    Newton,
    Steffensen,
}

impl std::str::FromStr for BoundSystem {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "newton" => Ok(BoundSystem::Newton),
            "steffensen" | "asis" => Ok(BoundSystem::Steffensen),
            other => Err(Error::InvalidParameter(format!("unknown bound system {other:?}"))),
        }
    }
}

/// Whether every denominator stayed positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "status")]
pub enum Positivity {
    Positive,
    /// The denominator computed from index `at` was not positive; arrays
    /// stop at index `at`.
    NotPositive { at: usize },
}

/// `a₀ = d₀ = 1`, `aₙ₊₁ = aₙ/(1 − a·aₙdₙ)`, `dₙ₊₁ = (a/2)aₙ₊₁dₙ²`, plus the
/// partial sums `rₙ = Σ_{k<n} dₖ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonBoundSequences {
    pub param: f64,
    pub a: Vec<f64>,
    pub d: Vec<f64>,
    pub r: Vec<f64>,
    pub positivity: Positivity,
}

/// `a₀ = c₀ = 1`, `r₀ = 0` and
///
/// ```text
/// bₙ   = aₙ/(1 − (a/2)aₙcₙ)
/// dₙ   = bₙcₙ
/// aₙ₊₁ = aₙ/(1 − a·aₙdₙ)
/// cₙ₊₁ = (a²/2)dₙ²(rₙ + cₙ/2)
/// rₙ₊₁ = rₙ + dₙ
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteffensenBoundSequences {
    pub param: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    pub r: Vec<f64>,
    pub positivity: Positivity,
}

fn check_param(a: f64) -> Result<()> {
    if a >= 0.0 && a.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("a = {a} must be finite and >= 0")))
    }
}

fn tf(v: f64) -> TwoFloat {
    TwoFloat::from(v)
}

fn lo(v: TwoFloat) -> f64 {
    f64::from(v)
}

/// Double-double quotient by long division. `TwoFloat / TwoFloat` in the
/// crate forms `1 − hi·(1/hi)` without an fma and so rounds to double.
fn div(x: TwoFloat, y: TwoFloat) -> TwoFloat {
    let q1 = x.hi() / y.hi();
    let r = x - y * q1;
    let q2 = r.hi() / y.hi();
    let r = r - y * q2;
    let q3 = r.hi() / y.hi();
    tf(q1) + q2 + q3
}

pub fn newton_sequences(a: f64, n: usize) -> Result<NewtonBoundSequences> {
    check_param(a)?;
    let one = tf(1.0);
    let (mut an, mut dn, mut rn) = (one, one, tf(0.0));
    let mut out = NewtonBoundSequences {
        param: a,
        a: vec![1.0],
        d: vec![1.0],
        r: vec![0.0],
        positivity: Positivity::Positive,
    };
    for k in 0..n {
        let den = one - an * dn * a;
        if den.hi() <= 0.0 {
            out.positivity = Positivity::NotPositive { at: k };
            break;
        }
        rn += dn;
        let next_a = div(an, den);
        dn = next_a * dn * dn * (a / 2.0);
        an = next_a;
        out.a.push(lo(an));
        out.d.push(lo(dn));
        out.r.push(lo(rn));
    }
    Ok(out)
}

pub fn steffensen_sequences(a: f64, n: usize) -> Result<SteffensenBoundSequences> {
    check_param(a)?;
    let one = tf(1.0);
    let (mut an, mut cn, mut rn) = (one, one, tf(0.0));
    let mut out = SteffensenBoundSequences {
        param: a,
        a: Vec::with_capacity(n + 1),
        b: Vec::with_capacity(n + 1),
        c: Vec::with_capacity(n + 1),
        d: Vec::with_capacity(n + 1),
        r: Vec::with_capacity(n + 1),
        positivity: Positivity::Positive,
    };
    for k in 0..=n {
        let den_b = one - an * cn * (a / 2.0);
        if den_b.hi() <= 0.0 {
            out.positivity = Positivity::NotPositive { at: k };
            break;
        }
        let bn = div(an, den_b);
        let dn = bn * cn;
        out.a.push(lo(an));
        out.b.push(lo(bn));
        out.c.push(lo(cn));
        out.d.push(lo(dn));
        out.r.push(lo(rn));
        if k == n {
            break;
        }
        let den_a = one - an * dn * a;
        if den_a.hi() <= 0.0 {
            out.positivity = Positivity::NotPositive { at: k };
            break;
        }
        an = div(an, den_a);
        cn = dn * dn * (rn + cn / 2.0) * (a * a / 2.0);
        rn += dn;
    }
    Ok(out)
}

impl NewtonBoundSequences {
    /// `(1/aₙ)² − 2a·dₙ/aₙ − (1 − 2a)` for every index.
    pub fn invariant_residuals(&self) -> Vec<f64> {
        let a = self.param;
        self.a
            .iter()
            .zip(&self.d)
            .map(|(&an, &dn)| (1.0 / an).powi(2) - 2.0 * a * dn / an - (1.0 - 2.0 * a))
            .collect()
    }
}

impl SteffensenBoundSequences {
    /// `(1/aₙ)² − 2a·cₙ − (1 − 2a)` for every index.
    pub fn invariant_residuals(&self) -> Vec<f64> {
        let a = self.param;
        self.a.iter().zip(&self.c).map(|(&an, &cn)| (1.0 / an).powi(2) - 2.0 * a * cn - (1.0 - 2.0 * a)).collect()
    }
}

/// `dₙ₊₁ = (a/2)dₙ²/√((a dₙ)² + 1 − 2a)`, the Newton rate without `aₙ`.
pub fn closed_form_rate(a: f64, d: f64) -> f64 {
    0.5 * a * d * d / ((a * d).powi(2) + (1.0 - 2.0 * a)).sqrt()
}

/// Exact scalar iteration on `q(s) = (a/2)s² − s + 1` from `s₀ = 0`.
///
/// `divided_difference[n]` is the operator inverted at step `n`: `q′(sₙ)`
/// for Newton, `q[sₙ, sₙ + q(sₙ)] = q′(sₙ) + (a/2)q(sₙ)` for Steffensen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialIteration {
    pub param: f64,
    pub s: Vec<f64>,
    pub q: Vec<f64>,
    pub q_prime: Vec<f64>,
    pub divided_difference: Vec<f64>,
    /// Distance `s* − sₙ` to the smaller root.
    pub u: Vec<f64>,
}

impl PolynomialIteration {
    /// `|sₙ₊₁ − sₙ| = |q(sₙ)/divided_difference[n]|`, one per completed step.
    pub fn steps(&self) -> Vec<f64> {
        self.u.windows(2).map(|w| (w[0] - w[1]).abs()).collect()
    }
}

/// Iterates in the root-centred variable `u = s* − s`, where
/// `q = (a/2)u² + δu` and `q′ = −(au + δ)` with `δ = √(1 − 2a)`. This avoids
/// the cancellation in `q` and `q′` near the double root at `a = 1/2`.
fn iterate_on_q(a: f64, n: usize, steffensen: bool) -> Result<PolynomialIteration> {
    check_param(a)?;
    if a > 0.5 {
        return Err(Error::HypothesesNotSatisfied { a });
    }
    let delta = (1.0 - 2.0 * a).sqrt();
    let s_star = 2.0 / (1.0 + delta);
    let mut u = s_star;
    let mut out = PolynomialIteration { param: a, s: vec![], q: vec![], q_prime: vec![], divided_difference: vec![], u: vec![] };
    for k in 0..=n {
        let q = u * (0.5 * a * u + delta);
        let qp = -(a * u + delta);
        let g = if steffensen { qp + 0.5 * a * q } else { qp };
        out.s.push(s_star - u);
        out.q.push(q);
        out.q_prime.push(qp);
        out.divided_difference.push(g);
        out.u.push(u);
        if k == n {
            break;
        }
        if g == 0.0 {
            // only at a = 1/2 with u = 0: the iteration has reached s* exactly
            u = 0.0;
            continue;
        }
        // u + q/g with the cancellation taken out analytically
        u = if steffensen { 0.5 * a * a * u * u * (0.5 * u - s_star) / g } else { -0.5 * a * u * u / qp };
    }
    Ok(out)
}

pub fn steffensen_on_adim_poly(a: f64, n: usize) -> Result<PolynomialIteration> {
    iterate_on_q(a, n, true)
}

pub fn newton_on_adim_poly(a: f64, n: usize) -> Result<PolynomialIteration> {
    iterate_on_q(a, n, false)
}

/// Roots `s* ≤ s**` of `q`; `s** = +∞` when `a = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MajorizingRoots {
    pub s_star: f64,
    pub s_star_star: f64,
}

pub fn majorizing_roots(a: f64) -> Result<MajorizingRoots> {
    check_param(a)?;
    if a > 0.5 {
        return Err(Error::HypothesesNotSatisfied { a });
    }
    let delta = (1.0 - 2.0 * a).sqrt();
    let s_star = 2.0 / (1.0 + delta);
    let s_star_star = if a == 0.0 { f64::INFINITY } else { (1.0 + delta) / a };
    Ok(MajorizingRoots { s_star, s_star_star })
}

/// Positive roots of `q(s) = (b/6)s³ + (a/2)s² − s + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CubicRoots {
    TwoSimple { small: f64, large: f64 },
    Double { root: f64 },
    /// Only for `a = b = 0`, where `q(s) = 1 − s`.
    OneSimple { root: f64 },
    None,
}

/// `|q(s_min)|` below this is a double root.
const DOUBLE_ROOT_TOL: f64 = 1e-12;

/// Classifies the positive roots of the adimensional cubic by the sign of
/// `q` at its positive critical point, then brackets each root and bisects.
pub fn cubic_positive_roots(a: f64, b: f64) -> Result<CubicRoots> {
    check_param(a)?;
    if !(b >= 0.0 && b.is_finite()) {
        return Err(Error::InvalidParameter(format!("b = {b} must be finite and >= 0")));
    }
    let q = |s: f64| ((b / 6.0 * s + a / 2.0) * s - 1.0) * s + 1.0;
    if a == 0.0 && b == 0.0 {
        return Ok(CubicRoots::OneSimple { root: 1.0 });
    }
    // q′(s) = (b/2)s² + as − 1 has exactly one positive zero
    let s_min = 2.0 / (a + (a * a + 2.0 * b).sqrt());
    let q_min = q(s_min);
    if q_min.abs() <= DOUBLE_ROOT_TOL {
        return Ok(CubicRoots::Double { root: s_min });
    }
    if q_min > 0.0 {
        return Ok(CubicRoots::None);
    }
    let small = bisect(&q, 0.0, s_min);
    let mut hi = 2.0 * s_min;
    while q(hi) <= 0.0 {
        hi *= 2.0;
    }
    let large = bisect(&q, s_min, hi);
    Ok(CubicRoots::TwoSimple { small, large })
}

/// Bisection on a bracket with a sign change.
fn bisect(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let f_lo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Dimensional envelopes from the bound sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelopes {
    pub system: BoundSystem,
    pub data: KantorovichData,
    pub s_star: f64,
    /// `dₙη ≥ ‖xₙ₊₁ − xₙ‖`.
    pub steps: Vec<f64>,
    /// `(s* − rₙ)η ≥ ‖x* − xₙ‖`.
    pub tails: Vec<f64>,
    /// `aₙB ≥ ‖F′(xₙ)⁻¹‖`.
    pub inverses: Vec<f64>,
}

pub fn error_envelopes(data: &KantorovichData, n: usize, system: BoundSystem) -> Result<Envelopes> {
    if !data.satisfies_hypotheses() {
        return Err(Error::HypothesesNotSatisfied { a: data.a });
    }
    let roots = majorizing_roots(data.a)?;
    let (a, d, r) = match system {
        BoundSystem::Newton => {
            let s = newton_sequences(data.a, n)?;
            (s.a, s.d, s.r)
        }
        BoundSystem::Steffensen => {
            let s = steffensen_sequences(data.a, n)?;
            (s.a, s.d, s.r)
        }
    };
    Ok(Envelopes {
        system,
        data: *data,
        s_star: roots.s_star,
        steps: d.iter().map(|d| d * data.eta).collect(),
        tails: r.iter().map(|r| (roots.s_star - r).max(0.0) * data.eta).collect(),
        inverses: a.iter().map(|a| a * data.b).collect(),
    })
}
