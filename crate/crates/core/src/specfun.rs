//! Exponential integrals on the cut plane.
//!
//! `E_{n+1}(z)` for integer `n ≥ 0` is evaluated on the principal branch with
//! the cut along `(-∞, 0]`. On the cut itself the two boundary values are
//! `PV E_{n+1}(-λ) ∓ iπ λⁿ/n!` (upper sign for the limit from above).
//!
//! Evaluation strategy:
//! * power series near the origin, and in a wedge around the negative real
//!   axis where the series terms do not cancel;
//! * modified Lentz continued fraction for `E₁` in the right half plane,
//!   followed by upward recurrence in `n`;
//! * the continued fraction for `E_{n+1}` directly in the remaining part of
//!   the left half plane.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::dd::CompensatedSum;
use crate::error::{domain, Error, Result};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Radius inside which the power series is always used.
pub const SERIES_RADIUS: f64 = 3.0;
/// Outside `SERIES_RADIUS` the series is still used while `|z| + Re z` stays
/// below this bound, which caps the cancellation factor near the negative axis.
const SERIES_WEDGE: f64 = 4.0;
/// Above this `x`, `Ei(x)` switches from its positive-term series to the
/// asymptotic expansion.
const EI_SERIES_MAX: f64 = 40.0;
/// `e^λ` overflows beyond this point.
const PV_LAMBDA_MAX: f64 = 700.0;

const CF_MAX_ITER: usize = 20_000;
const CF_EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Above,
    Below,
    None,
}

/// A point of the complex plane, optionally tagged with the side from which a
/// point on the branch cut is approached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutPlanePoint {
    pub z: Complex64,
    pub side: Side,
}

impl CutPlanePoint {
    pub fn new(z: Complex64) -> Self {
        CutPlanePoint { z, side: Side::None }
    }

    pub fn real(x: f64) -> Self {
        Self::new(Complex64::new(x, 0.0))
    }

    pub fn above(x: f64) -> Self {
        CutPlanePoint {
            z: Complex64::new(x, 0.0),
            side: Side::Above,
        }
    }

    pub fn below(x: f64) -> Self {
        CutPlanePoint {
            z: Complex64::new(x, 0.0),
            side: Side::Below,
        }
    }

    pub fn on_cut(&self) -> bool {
        self.z.im == 0.0 && self.z.re <= 0.0
    }
}

/// Principal value and δ-part of a function across its cut.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryValue {
    pub pv: f64,
    pub delta: f64,
}

impl BoundaryValue {
    /// Limit from above, `pv - iπ·delta`.
    pub fn from_above(&self) -> Complex64 {
        Complex64::new(self.pv, -PI * self.delta)
    }

    /// Limit from below, `pv + iπ·delta`.
    pub fn from_below(&self) -> Complex64 {
        Complex64::new(self.pv, PI * self.delta)
    }
}

/// `E_{n+1}(z)`; on the cut the requested boundary value.
pub fn generalized_expint(n: u32, point: CutPlanePoint) -> Result<Complex64> {
    let z = point.z;
    if !(z.re.is_finite() && z.im.is_finite()) {
        return domain(format!("non-finite argument {z}"));
    }
    if z == Complex64::new(0.0, 0.0) {
        if n == 0 {
            return domain("E_1 diverges logarithmically at z = 0");
        }
        return Ok(Complex64::new(1.0 / n as f64, 0.0));
    }
    if point.on_cut() {
        let bv = expint_boundary(n, -z.re)?;
        return match point.side {
            Side::Above => Ok(bv.from_above()),
            Side::Below => Ok(bv.from_below()),
            Side::None => domain(format!(
                "z = {z} lies on the branch cut; a side must be specified"
            )),
        };
    }
    Ok(expint_off_cut(n, z))
}

/// `E₁(z)` off the cut.
pub fn expint_e1(z: Complex64) -> Result<Complex64> {
    generalized_expint(0, CutPlanePoint::new(z))
}

/// Principal value and δ-part of `E_{n+1}` at the cut point `-λ`, `λ > 0`.
pub fn expint_boundary(n: u32, lambda: f64) -> Result<BoundaryValue> {
    if !(lambda > 0.0 && lambda <= PV_LAMBDA_MAX) {
        return domain(format!(
            "boundary value needs 0 < lambda <= {PV_LAMBDA_MAX}, got {lambda}"
        ));
    }
    Ok(BoundaryValue {
        pv: pv_expint_neg(n, lambda),
        delta: delta_part_e(n, lambda)?,
    })
}

/// δ-part coefficient `λⁿ/n!` of `E_{n+1}` at `-λ`.
pub fn delta_part_e(n: u32, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return domain(format!("delta part needs lambda > 0, got {lambda}"));
    }
    Ok(pow_over_factorial(lambda, n))
}

/// `ψ(k) = -γ + Σ_{j<k} 1/j` for integer `k ≥ 1`.
pub fn digamma_posint(k: i64) -> Result<f64> {
    if k < 1 {
        return domain(format!("digamma_posint needs k >= 1, got {k}"));
    }
    let harmonic = crate::dd::sum_f64((1..k).map(|j| 1.0 / j as f64));
    Ok(harmonic - EULER_GAMMA)
}

/// The exponential integral `Ei(x)` for `x > 0` (principal value).
pub fn expint_ei(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return domain(format!("Ei needs x > 0, got {x}"));
    }
    Ok(ei_positive(x))
}

fn ei_positive(x: f64) -> f64 {
    if x <= EI_SERIES_MAX {
        // all terms positive
        let mut term = 1.0;
        let mut acc = CompensatedSum::new();
        for k in 1..1000 {
            term *= x / k as f64;
            let t = term / k as f64;
            acc.add(Complex64::new(t, 0.0));
            if t < 1e-17 * acc.value().re.abs() {
                break;
            }
        }
        EULER_GAMMA + x.ln() + acc.value().re
    } else {
        // asymptotic e^x/x Σ k!/x^k, truncated before the smallest term
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..(x as usize) {
            let next = term * k as f64 / x;
            if next > term || next < 1e-18 {
                break;
            }
            term = next;
            sum += term;
        }
        x.exp() / x * sum
    }
}

fn pow_over_factorial(x: f64, n: u32) -> f64 {
    let mut v = 1.0;
    for k in 1..=n {
        v *= x / k as f64;
    }
    v
}

/// Real principal value `PV E_{n+1}(-λ)`.
///
/// On the negative axis the series terms for `k > n` share one sign, so the
/// series is accurate for every representable `λ`. (Upward recurrence from
/// `-Ei(λ)` is not: `e^λ` and `λ·PV E_k` cancel while `k < λ`.)
fn pv_expint_neg(n: u32, lambda: f64) -> f64 {
    let (log_coeff, rest) = series_parts(n, Complex64::new(-lambda, 0.0));
    rest.re - log_coeff.re * lambda.ln()
}

fn expint_off_cut(n: u32, z: Complex64) -> Complex64 {
    let r = z.norm();
    if r <= SERIES_RADIUS || (z.re < 0.0 && r + z.re <= SERIES_WEDGE) {
        return series_value(n, z);
    }
    if z.re > 0.0 {
        let mut e = continued_fraction(0, z);
        let ez = (-z).exp();
        for k in 1..=n {
            e = (ez - z * e) / k as f64;
        }
        e
    } else {
        continued_fraction(n, z)
    }
}

/// Power series split as `rest - log_coeff·log z`, where
/// `E_{n+1}(z) = (-z)^n/n! (ψ(n+1) - log z) - Σ_{k≠n} (-z)^k / ((k-n) k!)`.
///
/// Returns `(log_coeff, rest)` with `log_coeff = (-z)^n/n!`. On the negative
/// axis `log_coeff` is real and equals the δ-part, so the principal value is
/// `rest - log_coeff·ln λ`.
fn series_parts(n: u32, z: Complex64) -> (Complex64, Complex64) {
    let n_us = n as usize;
    let mz = -z;
    let mut term = Complex64::new(1.0, 0.0); // (-z)^k / k!
    let mut acc = CompensatedSum::new();
    let mut log_coeff = Complex64::new(0.0, 0.0);
    let r = z.norm();
    let mut k = 0usize;
    loop {
        if k == n_us {
            log_coeff = term;
        } else {
            acc.add(-term / (k as f64 - n as f64));
        }
        k += 1;
        term = term * mz / k as f64;
        if k > n_us && (k as f64) > r {
            let mag = acc.value().norm().max(log_coeff.norm());
            if term.norm() < 1e-18 * mag || term.norm() < TINY {
                break;
            }
        }
        if k > 100_000 {
            break;
        }
    }
    let psi = digamma_posint(n as i64 + 1).unwrap_or(f64::NAN);
    (log_coeff, acc.value() + log_coeff * psi)
}

fn series_value(n: u32, z: Complex64) -> Complex64 {
    let (log_coeff, rest) = series_parts(n, z);
    rest - log_coeff * z.ln()
}

/// Modified Lentz evaluation of `E_{n+1}(z)`.
fn continued_fraction(n: u32, z: Complex64) -> Complex64 {
    let p = n as f64 + 1.0;
    let mut b = z + p;
    let mut c = Complex64::new(1.0 / TINY, 0.0);
    let mut d = Complex64::new(1.0, 0.0) / b;
    let mut h = d;
    for i in 1..CF_MAX_ITER {
        let an = -(i as f64) * (p - 1.0 + i as f64);
        b += 2.0;
        d = Complex64::new(1.0, 0.0) / (d * an + b);
        c = b + c.inv() * an;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < CF_EPS {
            break;
        }
    }
    h * (-z).exp()
}

/// The digamma-form expansion
/// `E_{n+1}(z) = -(-z)^n/n! log z + e^{-z}/n! Σ_{k=1}^n (-z)^{k-1}(n-k)!
///              + e^{-z}(-z)^n/n! Σ_k z^k/k! ψ(k+1)`.
///
/// Mathematically identical to the evaluator's series but with an `e^{-z}`
/// prefactor that costs about `2|z|/ln 10` digits; kept for cross-checks on
/// small arguments.
pub fn expint_series_digamma(n: u32, z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 && z.re <= 0.0 {
        return domain("digamma-form series is evaluated off the cut only");
    }
    let nf = factorial(n);
    let mz = -z;
    let ez = (-z).exp();
    let mut finite = Complex64::new(0.0, 0.0);
    let mut pow = Complex64::new(1.0, 0.0); // (-z)^{k-1}
    for k in 1..=n {
        finite += pow * factorial(n - k);
        pow *= mz;
    }
    let mzn = mz.powu(n);
    let mut term = Complex64::new(1.0, 0.0);
    let mut acc = CompensatedSum::new();
    let mut psi = -EULER_GAMMA;
    let r = z.norm();
    for k in 0..10_000usize {
        acc.add(term * psi);
        term = term * z / (k as f64 + 1.0);
        psi += 1.0 / (k as f64 + 1.0);
        if (k as f64) > r && term.norm() * psi.abs() < 1e-18 * acc.value().norm() {
            break;
        }
    }
    Ok(-mzn / nf * z.ln() + ez / nf * finite + ez * mzn / nf * acc.value())
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// `e^{a} E₁(a)` for real `a > 0`.
pub fn scaled_e1(a: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("scaled_e1 needs a > 0, got {a}")));
    }
    if a > 700.0 {
        // continued fraction already carries the e^{-a} factor; undo it
        let z = Complex64::new(a, 0.0);
        let p = 1.0;
        let mut b = z + p;
        let mut c = Complex64::new(1.0 / TINY, 0.0);
        let mut d = Complex64::new(1.0, 0.0) / b;
        let mut h = d;
        for i in 1..CF_MAX_ITER {
            let an = -(i as f64) * i as f64;
            b += 2.0;
            d = Complex64::new(1.0, 0.0) / (d * an + b);
            c = b + c.inv() * an;
            let del = c * d;
            h *= del;
            if (del - 1.0).norm() < CF_EPS {
                break;
            }
        }
        return Ok(h.re);
    }
    Ok(a.exp() * expint_e1(Complex64::new(a, 0.0))?.re)
}

/// `e^w E₁(w)` off the cut, or its boundary value from the requested side.
///
/// For `|w| ≥ 40` the asymptotic series `Σ (-1)^k k!/w^{k+1}` is used; it is
/// accurate to about `e^{-|w|}` and never overflows. On the negative axis the
/// two boundary values differ by `2πi e^{w}`, which is below that accuracy.
pub fn scaled_expint_e1(point: CutPlanePoint) -> Result<Complex64> {
    let w = point.z;
    let r = w.norm();
    if r >= 40.0 {
        let mut term = w.inv();
        let mut sum = term;
        for k in 1..(r as usize) {
            let next = -term * k as f64 / w;
            if next.norm() >= term.norm() || next.norm() < 1e-18 * sum.norm() {
                break;
            }
            term = next;
            sum += term;
        }
        return Ok(sum);
    }
    Ok(w.exp() * generalized_expint(0, point)?)
}

/// `e^{-x} Ei(x)` for `x > 0`; finite for all `x`, unlike `Ei`.
pub fn scaled_ei(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("scaled_ei needs x > 0, got {x}")));
    }
    if x <= 40.0 {
        return Ok((-x).exp() * expint_ei(x)?);
    }
    // asymptotic Σ k!/x^{k+1}, truncated at its smallest term
    let mut term = 1.0 / x;
    let mut sum = term;
    for k in 1..(x as usize) {
        let next = term * k as f64 / x;
        if next >= term || next < 1e-18 * sum {
            break;
        }
        term = next;
        sum += term;
    }
    Ok(sum)
}
