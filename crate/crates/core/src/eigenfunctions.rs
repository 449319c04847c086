//! Generalized eigenfunctions `φ_λ`, resolvent vectors `ψ_z`, auxiliary
//! vectors `ξ_z = ψ_z - ψ_z(0)φ_z`, and their generating functions.
//!
//! `φ_λ` and `ξ_z` are polynomials in the spectral variable and are computed
//! by the three-term recursion of `L₀ - z`:
//!
//! * `φ(0) = 1`, `φ(1) = 1 - z`;
//! * `ξ(0) = 0`, `ξ(1) = -1` (from `(L₀ - z)ξ = χ₀`);
//! * `u(x+1) = ((2x+1-z)u(x) - x u(x-1)) / (x+1)`.
//!
//! `ψ_z` decays for `z ∉ [0, ∞)`, so it cannot come from forward recursion.
//! For small `x` it is the binomial transform of the moments
//! `a_k = e^{-z}E_{k+1}(-z)`, generated by `(k+1)a_{k+1} = z a_k + 1` and
//! summed in double-double; for larger `x` it is the spectral integral
//! `∫ e^{-λ}φ_λ(x)/(λ-z) dλ`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dd::{Dd, DdComplex};
use crate::error::{domain, Error, Result};
use crate::lattice::{apply_l0, LatticeVector};
use crate::quadrature::{graded_panels, PanelRule};
use crate::specfun::{expint_ei, scaled_expint_e1, CutPlanePoint, EULER_GAMMA};

/// Largest site evaluated by the binomial moment sum; beyond it the spectral
/// integral is used.
pub const PSI_SUM_MAX: usize = 30;

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);

/// A point `λ ≥ 0` of the continuous spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralPoint {
    lambda: f64,
}

impl SpectralPoint {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return domain(format!("spectral point needs lambda >= 0, got {lambda}"));
        }
        Ok(SpectralPoint { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// A spectral parameter, either off `[0, ∞)` or on it with principal-value
/// semantics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexEnergy {
    pub z: Complex64,
    pub on_spectrum: bool,
}

impl ComplexEnergy {
    pub fn off_spectrum(z: Complex64) -> Result<Self> {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return domain(format!("non-finite energy {z}"));
        }
        if z.im == 0.0 && z.re >= 0.0 {
            return domain(format!(
                "z = {z} lies on the spectrum; use a principal-value energy"
            ));
        }
        Ok(ComplexEnergy {
            z,
            on_spectrum: false,
        })
    }

    pub fn principal_value(lambda: f64) -> Result<Self> {
        let p = SpectralPoint::new(lambda)?;
        Ok(ComplexEnergy {
            z: Complex64::new(p.lambda(), 0.0),
            on_spectrum: true,
        })
    }

    /// Real energies below the spectrum are off it; `λ ≥ 0` gets PV semantics.
    pub fn real(x: f64) -> Result<Self> {
        if x < 0.0 {
            Self::off_spectrum(Complex64::new(x, 0.0))
        } else {
            Self::principal_value(x)
        }
    }
}

/// `φ_λ(0..=xmax)` for real `λ`.
pub fn phi_values(lambda: f64, xmax: usize) -> Vec<f64> {
    recursion_real(lambda, xmax, 1.0, 1.0 - lambda)
}

/// `ξ_λ(0..=xmax)` for real `λ` (equal to its principal value on the
/// spectrum).
pub fn xi_values(lambda: f64, xmax: usize) -> Vec<f64> {
    recursion_real(lambda, xmax, 0.0, -1.0)
}

/// `φ^L_λ = φ_λ + qξ_λ` at real `λ`.
pub fn phi_perturbed_values(lambda: f64, q: f64, xmax: usize) -> Vec<f64> {
    recursion_real(lambda, xmax, 1.0, 1.0 - lambda - q)
}

fn recursion_real(z: f64, xmax: usize, u0: f64, u1: f64) -> Vec<f64> {
    let mut u = Vec::with_capacity(xmax + 1);
    u.push(u0);
    if xmax == 0 {
        return u;
    }
    u.push(u1);
    for x in 1..xmax {
        let xf = x as f64;
        u.push(((2.0 * xf + 1.0 - z) * u[x] - xf * u[x - 1]) / (xf + 1.0));
    }
    u
}

fn recursion_complex(z: Complex64, xmax: usize, u0: Complex64, u1: Complex64) -> Vec<Complex64> {
    let mut u = Vec::with_capacity(xmax + 1);
    u.push(u0);
    if xmax == 0 {
        return u;
    }
    u.push(u1);
    for x in 1..xmax {
        let xf = x as f64;
        u.push(((-z + (2.0 * xf + 1.0)) * u[x] - u[x - 1] * xf) / (xf + 1.0));
    }
    u
}

/// `φ_λ(0..=xmax)` by recursion, for complex `λ`.
pub fn phi_recursion(lambda: Complex64, xmax: usize) -> LatticeVector {
    LatticeVector::truncated(recursion_complex(lambda, xmax, C1, C1 - lambda))
}

/// `φ_λ(x) = Σ_{k≤x} (-1)^k C(x,k) λ^k/k!` summed in double-double.
pub fn phi_series(lambda: Complex64, x: usize) -> Complex64 {
    let row = pascal_row(x);
    let lam = DdComplex::from(lambda);
    let mut pow = DdComplex::from(C1);
    let mut acc = DdComplex::ZERO;
    for (k, c) in row.iter().enumerate() {
        if k > 0 {
            pow = (pow * lam).div_f64(k as f64);
        }
        let term = pow.scale(*c);
        acc = if k % 2 == 0 { acc + term } else { acc - term };
    }
    acc.to_c64()
}

fn pascal_row(n: usize) -> Vec<Dd> {
    crate::dd::binomial_row(n)
}

/// `ξ_z(0..=xmax)`; for `z = λ ≥ 0` this is `PV ξ_λ = ξ_λ`.
pub fn xi_aux(z: ComplexEnergy, xmax: usize) -> LatticeVector {
    LatticeVector::truncated(recursion_complex(z.z, xmax, C0, -C1))
}

/// `ξ_z(x) = ∫ e^{-η} (φ_η(x) - φ_z(x))/(η - z) dη`.
///
/// The integrand is `e^{-η}` times a polynomial of degree `x-1`, so a
/// Gauss–Laguerre rule with enough nodes is exact.
pub fn xi_integral(z: Complex64, x: usize) -> Result<Complex64> {
    if x == 0 {
        return Ok(C0);
    }
    let (nodes, weights) = crate::tridiag::gauss_laguerre(x / 2 + 4)?;
    let phi_z = *recursion_complex(z, x, C1, C1 - z).last().unwrap();
    let mut acc = C0;
    for (eta, w) in nodes.iter().zip(&weights) {
        let d = Complex64::new(*eta, 0.0) - z;
        if d.norm() < 1e-8 * (1.0 + z.norm()) {
            // node on top of z: use the derivative of φ at the node instead
            let h = 1e-5 * (1.0 + eta.abs());
            let p = phi_values(eta + h, x)[x] - phi_values(eta - h, x)[x];
            acc += Complex64::new(w * p / (2.0 * h), 0.0);
            continue;
        }
        let phi_eta = phi_values(*eta, x)[x];
        acc += (Complex64::new(phi_eta, 0.0) - phi_z) / d * *w;
    }
    Ok(acc)
}

/// `f_z = e^{-z}E₁(-z)` for `z ∉ [0, ∞)`.
pub(crate) fn resolvent_f_off(z: Complex64) -> Result<Complex64> {
    scaled_expint_e1(CutPlanePoint::new(-z))
}

/// `PV f_λ = -e^{-λ}Ei(λ)` for `λ > 0`.
pub fn pv_resolvent_f(lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Threshold(format!(
            "f diverges logarithmically at the threshold (lambda = {lambda})"
        )));
    }
    Ok(-(-lambda).exp() * expint_ei(lambda)?)
}

/// The moments `a_k = Tψ_z(k) = e^{-z}E_{k+1}(-z)` for `k = 0..=kmax`,
/// generated from `a_0 = f_z` by `(k+1)a_{k+1} = z a_k + 1`.
pub fn resolvent_moments(z: Complex64, kmax: usize) -> Result<Vec<DdComplex>> {
    ComplexEnergy::off_spectrum(z)?;
    let zd = DdComplex::from(z);
    let one = DdComplex::from(C1);
    let mut a = Vec::with_capacity(kmax + 1);
    a.push(DdComplex::from(resolvent_f_off(z)?));
    for k in 0..kmax {
        a.push((zd * a[k] + one).div_f64(k as f64 + 1.0));
    }
    Ok(a)
}

/// `ψ_z(0..=xmax)` by the binomial moment sum.
///
/// An error `δ` in `a_0` changes the result by `δ·φ_z`, which solves the
/// homogeneous equation; the residual `(L₀ - z)ψ - χ₀` is unaffected.
pub fn psi_binomial(z: Complex64, xmax: usize) -> Result<Vec<Complex64>> {
    let a = resolvent_moments(z, xmax)?;
    let mut out = Vec::with_capacity(xmax + 1);
    let mut row = vec![Dd::ONE];
    for x in 0..=xmax {
        if x > 0 {
            let mut next = Vec::with_capacity(x + 1);
            next.push(Dd::ONE);
            for k in 1..x {
                next.push(row[k - 1] + row[k]);
            }
            next.push(Dd::ONE);
            row = next;
        }
        let mut acc = DdComplex::ZERO;
        for (k, c) in row.iter().enumerate() {
            let term = a[k].scale(*c);
            acc = if k % 2 == 0 { acc + term } else { acc - term };
        }
        out.push(acc.to_c64());
    }
    Ok(out)
}

/// Upper limit for spectral integrals over `e^{-λ}`-damped polynomials:
/// `|e^{-λ/2}φ_λ(x)| ≤ 1`, so the tail beyond `Λ` is below `2e^{-Λ/2}`.
const SPECTRAL_UPPER: f64 = 90.0;

/// `ψ_z(x) = ∫ e^{-λ}φ_λ(x)/(λ-z) dλ` for `x = x_lo..=x_hi`.
pub fn psi_spectral(z: Complex64, x_lo: usize, x_hi: usize) -> Result<Vec<Complex64>> {
    ComplexEnergy::off_spectrum(z)?;
    if x_lo > x_hi {
        return Err(Error::Grid(format!("empty site range {x_lo}..={x_hi}")));
    }
    let dist = if z.re >= 0.0 { z.im.abs() } else { z.norm() };
    let width = 0.5f64.min(0.5 * dist).max(0.02);
    let panels = graded_panels(1e-3, 1.0, 0.5, SPECTRAL_UPPER, width, x_hi as f64, 4)?;
    let rule = PanelRule::new(panels, 20)?;
    let partials: Vec<Vec<Complex64>> = rule
        .nodes
        .par_iter()
        .zip(rule.weights.par_iter())
        .map(|(&lam, &w)| {
            let phi = phi_values(lam, x_hi);
            let c = Complex64::new(w * (-lam).exp(), 0.0) / (Complex64::new(lam, 0.0) - z);
            (x_lo..=x_hi).map(|x| c * phi[x]).collect()
        })
        .collect();
    let mut out = vec![C0; x_hi - x_lo + 1];
    for p in &partials {
        for (o, v) in out.iter_mut().zip(p) {
            *o += v;
        }
    }
    Ok(out)
}

/// Comparison of the moment sum and the spectral integral on `x ∈ [25, 30]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverlapReport {
    pub max_rel: f64,
    /// Largest ratio of the difference to its predicted size
    /// `1e-8|ψ| + 8ε|f_z||φ_z(x)|`; the second term is the seed error of the
    /// moment recursion carried along the homogeneous solution.
    pub max_excess: f64,
}

impl OverlapReport {
    pub fn consistent(&self) -> bool {
        self.max_excess <= 1.0
    }
}

pub fn psi_overlap_check(z: Complex64) -> Result<OverlapReport> {
    let a = psi_binomial(z, PSI_SUM_MAX)?;
    let b = psi_spectral(z, 25, PSI_SUM_MAX)?;
    let phi = recursion_complex(z, PSI_SUM_MAX, C1, C1 - z);
    let f = a[0].norm();
    let mut rep = OverlapReport {
        max_rel: 0.0,
        max_excess: 0.0,
    };
    for x in 25..=PSI_SUM_MAX {
        let d = (a[x] - b[x - 25]).norm();
        let allowed = 1e-8 * b[x - 25].norm() + 8.0 * f64::EPSILON * f * phi[x].norm();
        rep.max_rel = rep.max_rel.max(d / b[x - 25].norm().max(1e-300));
        rep.max_excess = rep.max_excess.max(d / allowed);
    }
    Ok(rep)
}

/// `ψ_z(0..=xmax)` off the spectrum, or `PV ψ_λ = PV f_λ φ_λ + ξ_λ` on it.
pub fn psi_resolvent(z: ComplexEnergy, xmax: usize) -> Result<LatticeVector> {
    if z.on_spectrum {
        let lam = z.z.re;
        let f = pv_resolvent_f(lam)?;
        let phi = phi_values(lam, xmax);
        let xi = xi_values(lam, xmax);
        return Ok(LatticeVector::truncated(
            phi.iter()
                .zip(&xi)
                .map(|(p, x)| Complex64::new(f * p + x, 0.0))
                .collect(),
        ));
    }
    let mut values = psi_binomial(z.z, xmax.min(PSI_SUM_MAX))?;
    if xmax > PSI_SUM_MAX {
        values.extend(psi_spectral(z.z, PSI_SUM_MAX + 1, xmax)?);
    }
    Ok(LatticeVector::truncated(values))
}

/// `φ^L_λ(0..=xmax)` with `φ^L_λ(0) = 1`.
pub fn phi_perturbed(lambda: SpectralPoint, q: f64, xmax: usize) -> Result<LatticeVector> {
    if !(q > 0.0) {
        return domain(format!("coupling q must be positive, got {q}"));
    }
    Ok(LatticeVector::from_real(
        &phi_perturbed_values(lambda.lambda(), q, xmax),
        false,
    ))
}

/// `max_{x ≤ xmax} |((L₀ - z)ψ_z - χ₀)(x)|`.
pub fn resolvent_identity_residual(z: Complex64, xmax: usize) -> Result<f64> {
    let psi = psi_resolvent(ComplexEnergy::off_spectrum(z)?, xmax + 1)?;
    let l = apply_l0(&psi);
    Ok((0..=xmax)
        .map(|x| {
            let chi = if x == 0 { C1 } else { C0 };
            (l.get(x) - psi.get(x) * z - chi).norm()
        })
        .fold(0.0, f64::max))
}

/// `max_{x ≤ xmax} |(Lφ^L_λ - λφ^L_λ)(x)|`, on rows where the stencil sees
/// only computed values.
pub fn perturbed_eigen_residual(lambda: f64, q: f64, xmax: usize) -> Result<f64> {
    let phi = phi_perturbed(SpectralPoint::new(lambda)?, q, xmax + 1)?;
    let l = crate::lattice::apply_l(&phi, q)?;
    Ok((0..=xmax)
        .map(|x| (l.get(x) - phi.get(x) * lambda).norm())
        .fold(0.0, f64::max))
}

fn check_disc(s: Complex64) -> Result<()> {
    if !(s.norm() < 1.0) {
        return domain(format!("generating functions need |s| < 1, got |s| = {}", s.norm()));
    }
    Ok(())
}

fn s_hat(s: Complex64) -> Complex64 {
    s / (C1 - s)
}

/// `ζ(φ_λ, s) = Σ φ_λ(x) s^x = (1-s)^{-1} exp(-ŝλ)`, `ŝ = s/(1-s)`.
pub fn generating_phi(lambda: Complex64, s: Complex64) -> Result<Complex64> {
    Ok(generating_phi_reduced(lambda, s)? / (C1 - s))
}

/// `ζ̂(φ_λ, s) = (1-s)ζ(φ_λ, s) = exp(-ŝλ)`.
pub fn generating_phi_reduced(lambda: Complex64, s: Complex64) -> Result<Complex64> {
    check_disc(s)?;
    Ok((-s_hat(s) * lambda).exp())
}

/// `(e^w - 1)/w`, accurate near `w = 0`.
fn exprel(w: Complex64) -> Complex64 {
    if w.norm() < 0.5 {
        let mut term = C1;
        let mut sum = C1;
        for k in 2..30 {
            term = term * w / k as f64;
            sum += term;
            if term.norm() < 1e-18 {
                break;
            }
        }
        sum
    } else {
        (w.exp() - 1.0) / w
    }
}

/// `ζ(ξ_z, s) = (1-s)^{-1} ∫ e^{-η} K(η, z, s) dη` with
/// `K = (η - z)^{-1}[exp(-ŝη) - exp(-ŝz)]`, by composite Gauss–Legendre in η.
pub fn generating_xi_quadrature(z: Complex64, s: Complex64) -> Result<Complex64> {
    check_disc(s)?;
    let sh = s_hat(s);
    let decay = 1.0 + sh.re;
    let upper = 42.0f64.max(42.0 / decay) + z.re.max(0.0);
    let width = 1.0f64.min(2.0 / (1.0 + sh.im.abs()));
    let n_panels = (upper / width).ceil() as usize;
    let h = upper / n_panels as f64;
    let panels: Vec<(f64, f64)> = (0..n_panels).map(|i| (i as f64 * h, (i + 1) as f64 * h)).collect();
    let rule = PanelRule::new(panels, 20)?;
    let ez = (-sh * z).exp();
    let mut acc = C0;
    for (eta, w) in rule.nodes.iter().zip(&rule.weights) {
        let d = Complex64::new(*eta, 0.0) - z;
        // exp(-ŝη) - exp(-ŝz) = exp(-ŝz)·(exp(-ŝd) - 1)
        let k = ez * (-sh) * exprel(-sh * d);
        acc += k * (w * (-eta).exp());
    }
    Ok(acc / (C1 - s))
}

/// Closed form of `ζ̂(ξ_λ, s)` for real `λ ≥ 0`:
/// `e^{-aλ}[Ein(-aλ) - Ein(-λ) - ln a]` with `a = 1 + ŝ = (1-s)^{-1}`,
/// where `Ein(w) = E₁(w) + ln w + γ` is entire.
pub fn generating_xi_reduced(lambda: f64, s: Complex64) -> Result<Complex64> {
    check_disc(s)?;
    if !(lambda >= 0.0) {
        return domain(format!("closed form needs lambda >= 0, got {lambda}"));
    }
    let a = C1 / (C1 - s);
    let log_a = a.ln();
    if lambda == 0.0 {
        return Ok(-log_a);
    }
    let w = -a * lambda;
    let ea = w.exp();
    // e^{w} Ein(w) = e^{w}E₁(w) + e^{w}(ln w + γ), same side of the cut
    let side = if w.im == 0.0 { CutPlanePoint::above(w.re) } else { CutPlanePoint::new(w) };
    let log_w = if w.im == 0.0 {
        Complex64::new((-w.re).ln(), PI)
    } else {
        w.ln()
    };
    let ein_aw = scaled_expint_e1(side)? + ea * (log_w + EULER_GAMMA);
    let ein_l = ein_real_negative(-lambda)?;
    Ok(ein_aw - ea * (ein_l + log_a))
}

/// `Ein(-λ) = -Σ_k λ^k/(k·k!)`, real and finite for all `λ`.
fn ein_real_negative(w: f64) -> Result<f64> {
    let lam = -w;
    if lam <= 40.0 {
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..400 {
            term *= lam / k as f64;
            let t = term / k as f64;
            sum += t;
            if t < 1e-17 * sum {
                break;
            }
        }
        Ok(-sum)
    } else {
        // Ein(-λ) = -Ei(λ) + ln λ + γ
        Ok(-expint_ei(lam)? + lam.ln() + EULER_GAMMA)
    }
}

/// Contour parameters: radius `1 - 1/(x+κ)` and starting node count
/// `8(x+2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContourSpec {
    pub x: usize,
    pub kappa: f64,
    pub radius: f64,
    pub node_count: usize,
}

impl ContourSpec {
    pub fn new(x: usize, kappa: f64) -> Result<Self> {
        if !(kappa > 1.0) {
            return domain(format!("kappa must exceed 1, got {kappa}"));
        }
        Ok(ContourSpec {
            x,
            kappa,
            radius: 1.0 - 1.0 / (x as f64 + kappa),
            node_count: 8 * (x + 2),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContourResult {
    pub value: Complex64,
    pub nodes: usize,
    pub error_estimate: f64,
    /// `|u_M - u_{M/2}|` after each doubling.
    pub differences: Vec<f64>,
}

const CONTOUR_TOL: f64 = 1e-10;
const CONTOUR_MAX_DOUBLINGS: usize = 14;

/// `u(x) = ∮ (2πis)^{-1} s^{-x} ζ(s) ds` on `|s| = 1 - 1/(x+κ)` by the
/// trapezoidal rule, doubling nodes until successive values agree to 1e-10
/// (relative to `max(1, |u|)`).
pub fn contour_reconstruct<F>(zeta: F, x: usize, kappa: f64) -> Result<ContourResult>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let spec = ContourSpec::new(x, kappa)?;
    let r = spec.radius;
    let sample = |theta: f64| -> Result<Complex64> {
        let s = Complex64::from_polar(r, theta);
        Ok(zeta(s)? * Complex64::from_polar(r.powi(-(x as i32)), -(x as f64) * theta))
    };
    let mut m = spec.node_count;
    let sum: Result<Vec<Complex64>> = (0..m)
        .into_par_iter()
        .map(|j| sample(2.0 * PI * j as f64 / m as f64))
        .collect();
    let mut total: Complex64 = sum?.iter().sum();
    let mut value = total / m as f64;
    let mut differences = Vec::new();
    for _ in 0..CONTOUR_MAX_DOUBLINGS {
        // new nodes sit halfway between the old ones
        let extra: Result<Vec<Complex64>> = (0..m)
            .into_par_iter()
            .map(|j| sample(2.0 * PI * (j as f64 + 0.5) / m as f64))
            .collect();
        total += extra?.iter().sum::<Complex64>();
        m *= 2;
        let next = total / m as f64;
        let diff = (next - value).norm();
        differences.push(diff);
        value = next;
        if diff < CONTOUR_TOL * value.norm().max(1.0) {
            return Ok(ContourResult {
                value,
                nodes: m,
                error_estimate: diff,
                differences,
            });
        }
    }
    Err(Error::NotConverged(format!(
        "contour reconstruction at x = {x} did not settle after {m} nodes \
         (last change {:e})",
        differences.last().copied().unwrap_or(f64::NAN)
    )))
}

/// Central difference of order 1 or 2 with three levels of Richardson
/// extrapolation (steps h, h/2, h/4).
pub fn richardson_derivative<F: Fn(f64) -> f64>(f: &F, x: f64, order: usize, h: f64) -> f64 {
    let d = |h: f64| match order {
        0 => f(x),
        1 => (f(x + h) - f(x - h)) / (2.0 * h),
        _ => (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h),
    };
    if order == 0 {
        return f(x);
    }
    let (d1, d2, d3) = (d(h), d(h / 2.0), d(h / 4.0));
    let r1 = (4.0 * d2 - d1) / 3.0;
    let r2 = (4.0 * d3 - d2) / 3.0;
    (16.0 * r2 - r1) / 15.0
}

fn richardson_derivative_c<F: Fn(f64) -> Complex64>(f: &F, x: f64, order: usize, h: f64) -> Complex64 {
    let re = richardson_derivative(&|t| f(t).re, x, order, h);
    let im = richardson_derivative(&|t| f(t).im, x, order, h);
    Complex64::new(re, im)
}

/// One sampled point of an inequality check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundSample {
    pub lambda: f64,
    pub x: usize,
    pub x2: usize,
    pub theta: f64,
    pub order: usize,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub name: String,
    pub samples: usize,
    pub violations: usize,
    pub worst_ratio: f64,
    pub worst: Option<BoundSample>,
    pub first_violation: Option<BoundSample>,
}

impl BoundCheck {
    fn new(name: &str) -> Self {
        BoundCheck {
            name: name.to_string(),
            samples: 0,
            violations: 0,
            worst_ratio: 0.0,
            worst: None,
            first_violation: None,
        }
    }

    /// Records `lhs < rhs` (strict) or `lhs ≤ rhs` (with relative slack).
    fn record(&mut self, s: BoundSample, strict: bool) {
        self.samples += 1;
        let ratio = if s.rhs > 0.0 { s.lhs / s.rhs } else { f64::INFINITY };
        let bad = if strict {
            !(s.lhs < s.rhs)
        } else {
            !(s.lhs <= s.rhs * (1.0 + 1e-12))
        };
        if bad {
            self.violations += 1;
            if self.first_violation.is_none() {
                self.first_violation = Some(s);
            }
        }
        if ratio > self.worst_ratio || self.worst.is_none() {
            self.worst_ratio = ratio;
            self.worst = Some(s);
        }
    }

    fn merge(mut self, other: BoundCheck) -> BoundCheck {
        self.samples += other.samples;
        self.violations += other.violations;
        if self.first_violation.is_none() {
            self.first_violation = other.first_violation;
        }
        if other.worst_ratio > self.worst_ratio {
            self.worst_ratio = other.worst_ratio;
            self.worst = other.worst;
        }
        self
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Sampling grids for [`lemma_bound_suite`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaSuiteConfig {
    pub kappa: f64,
    pub theta_points: usize,
    pub lambdas: Vec<f64>,
    pub xs: Vec<usize>,
    pub orders: Vec<usize>,
    /// Largest `x` for the `|s^{-x}| < e` check.
    pub power_xmax: usize,
    /// Coarser grids for the derivative checks on `ζ̂(ξ_λ, s)`, which need
    /// special-function evaluations at every sample.
    pub xi_lambdas: Vec<f64>,
    pub xi_xs: Vec<usize>,
}

impl LemmaSuiteConfig {
    pub fn with_kappa(kappa: f64) -> Self {
        LemmaSuiteConfig {
            kappa,
            theta_points: 720,
            lambdas: (0..=50).map(|k| k as f64).collect(),
            xs: (0..=40).collect(),
            orders: vec![0, 1, 2],
            power_xmax: 200,
            xi_lambdas: (0..=10).map(|k| 5.0 * k as f64).collect(),
            xi_xs: vec![0, 1, 2, 3, 5, 8, 12, 20, 30, 40],
        }
    }
}

impl Default for LemmaSuiteConfig {
    fn default() -> Self {
        Self::with_kappa(4.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaReport {
    pub config: LemmaSuiteConfig,
    pub checks: Vec<BoundCheck>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(BoundCheck::passed)
    }

    pub fn check(&self, name: &str) -> Option<&BoundCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Constant in `|dⁿ_λ[w_λ^{1/2}φ_λ(x)]| < c·exp(-λ/(4(x+κ)))`.
pub fn phi_envelope_constant(n: usize, x: usize, kappa: f64) -> f64 {
    let xk = x as f64 + kappa;
    3f64.powi(n as i32 + 1) * xk.powi(n as i32 + 1)
}

/// Constant in `|dⁿ_λ[w_λ^{1/2}ξ_λ(x)]| < c·exp(-λ/(4(x+κ)))`.
pub fn xi_envelope_constant(n: usize, x: usize, kappa: f64) -> f64 {
    let xk = x as f64 + kappa;
    match n {
        0 => 6.0 * xk * xk,
        1 => 15.0 * xk * xk,
        _ => 21.0 * xk.powi(3),
    }
}

/// Constant in `|dⁿ_λ ζ̂(ξ_λ, s)| < ĉ·exp(-ε̂λ)`.
pub fn xi_generating_constant(n: usize, x: usize, kappa: f64) -> f64 {
    let xk = x as f64 + kappa;
    match n {
        0 => 2.0 * xk,
        1 => 4.0 * xk,
        _ => 4.0 * xk * xk,
    }
}

/// Samples the contour-radius and derivative inequalities.
///
/// With `ε = 1/(x+κ)`, `r = 1-ε`, `s = re^{iθ}`, `ŝ = s/(1-s)` and
/// `ε̂ = -1/2 + ε/4`:
/// * `|exp(-ŝλ)| ≤ exp(-ε̂λ)`;
/// * `|s^{-x}| < e`;
/// * `(ε₁+ε₂)^{-1} < (x₁+κ)(x₂+κ)/4`;
/// * `|dⁿ_λ exp(-ŝλ)| < (x+κ)ⁿ exp(-ε̂λ)` and the analogue for `ζ̂(ξ_λ, s)`;
/// * `|dⁿ_λ[e^{-λ/2}φ_λ(x)]|` and `|dⁿ_λ[e^{-λ/2}ξ_λ(x)]|` below their
///   envelopes, with derivatives by Richardson-extrapolated central
///   differences (`h = 1e-4·max(1, λ)`).
pub fn lemma_bound_suite(cfg: &LemmaSuiteConfig) -> Result<LemmaReport> {
    let kappa = cfg.kappa;
    if !(kappa > 1.0) {
        return domain(format!("kappa must exceed 1, got {kappa}"));
    }
    let thetas: Vec<f64> = (0..cfg.theta_points)
        .map(|j| 2.0 * PI * j as f64 / cfg.theta_points as f64)
        .collect();
    let eps = |x: usize| 1.0 / (x as f64 + kappa);
    let sample = |lambda, x, x2, theta, order, lhs, rhs| BoundSample {
        lambda,
        x,
        x2,
        theta,
        order,
        lhs,
        rhs,
    };

    // exp(-ŝλ) and its λ-derivatives
    let exp_checks: Vec<(BoundCheck, BoundCheck)> = cfg
        .xs
        .par_iter()
        .map(|&x| {
            let mut c_exp = BoundCheck::new("exp_shat");
            let mut c_der = BoundCheck::new("phi_generating_derivatives");
            let e = eps(x);
            let r = 1.0 - e;
            let e_hat = -0.5 + 0.25 * e;
            for &th in &thetas {
                let sh = s_hat(Complex64::from_polar(r, th));
                for &lam in &cfg.lambdas {
                    // compare exponents to avoid overflow
                    let lhs = (-sh.re * lam).exp();
                    let rhs = (-e_hat * lam).exp();
                    c_exp.record(sample(lam, x, x, th, 0, lhs, rhs), false);
                    for &n in &cfg.orders {
                        let lhs = sh.norm().powi(n as i32) * lhs;
                        let rhs = (x as f64 + kappa).powi(n as i32) * rhs;
                        // n = 0 is the exponential bound itself, which is
                        // attained at λ = 0
                        c_der.record(sample(lam, x, x, th, n, lhs, rhs), n > 0);
                    }
                }
            }
            (c_exp, c_der)
        })
        .collect();
    let (mut exp_check, mut gen_phi) = (BoundCheck::new("exp_shat"), BoundCheck::new("phi_generating_derivatives"));
    for (a, b) in exp_checks {
        exp_check = exp_check.merge(a);
        gen_phi = gen_phi.merge(b);
    }

    let mut power = BoundCheck::new("s_power");
    for x in 0..=cfg.power_xmax {
        let r = 1.0 - eps(x);
        power.record(
            sample(0.0, x, x, 0.0, 0, r.powi(-(x as i32)), std::f64::consts::E),
            true,
        );
    }

    let mut eps_sum = BoundCheck::new("epsilon_sum");
    for &x1 in &cfg.xs {
        for &x2 in &cfg.xs {
            let lhs = 1.0 / (eps(x1) + eps(x2));
            let rhs = 0.25 * (x1 as f64 + kappa) * (x2 as f64 + kappa);
            eps_sum.record(sample(0.0, x1, x2, 0.0, 0, lhs, rhs), true);
        }
    }

    // ζ̂(ξ_λ, s) and its λ-derivatives, from the closed form
    let xi_gen: Result<Vec<BoundCheck>> = cfg
        .xi_xs
        .par_iter()
        .map(|&x| {
            let mut c = BoundCheck::new("xi_generating_derivatives");
            let e = eps(x);
            let r = 1.0 - e;
            let e_hat = -0.5 + 0.25 * e;
            for &th in &thetas {
                let s = Complex64::from_polar(r, th);
                let f = |lam: f64| generating_xi_reduced(lam.max(0.0), s).unwrap_or(C0);
                for &lam in &cfg.xi_lambdas {
                    for &n in &cfg.orders {
                        let h = 1e-4 * lam.max(1.0);
                        let val = if n == 0 {
                            generating_xi_reduced(lam, s)?
                        } else if lam < 4.0 * h {
                            // one-sided near λ = 0: shift the stencil inward
                            let g = |t: f64| f(t + 4.0 * h);
                            let d0 = richardson_derivative_c(&g, 0.0, n, h);
                            let d1 = richardson_derivative_c(&g, -h, n, h);
                            d0 + (d0 - d1) * 4.0
                        } else {
                            richardson_derivative_c(&f, lam, n, h)
                        };
                        let rhs = xi_generating_constant(n, x, kappa) * (-e_hat * lam).exp();
                        c.record(sample(lam, x, x, th, n, val.norm(), rhs), true);
                    }
                }
            }
            Ok(c)
        })
        .collect();
    let gen_xi = xi_gen?
        .into_iter()
        .fold(BoundCheck::new("xi_generating_derivatives"), BoundCheck::merge);

    // envelopes of w^{1/2}φ and w^{1/2}ξ
    let env: Vec<(BoundCheck, BoundCheck)> = cfg
        .xs
        .par_iter()
        .map(|&x| {
            let mut cp = BoundCheck::new("phi_envelope");
            let mut cx = BoundCheck::new("xi_envelope");
            let fp = |lam: f64| (-0.5 * lam).exp() * phi_values(lam, x)[x];
            let fx = |lam: f64| (-0.5 * lam).exp() * xi_values(lam, x)[x];
            for &lam in &cfg.lambdas {
                let decay = (-0.25 * eps(x) * lam).exp();
                for &n in &cfg.orders {
                    let h = 1e-4 * lam.max(1.0);
                    let dp = richardson_derivative(&fp, lam, n, h).abs();
                    let dx = richardson_derivative(&fx, lam, n, h).abs();
                    cp.record(
                        sample(lam, x, x, 0.0, n, dp, phi_envelope_constant(n, x, kappa) * decay),
                        true,
                    );
                    cx.record(
                        sample(lam, x, x, 0.0, n, dx, xi_envelope_constant(n, x, kappa) * decay),
                        true,
                    );
                }
            }
            (cp, cx)
        })
        .collect();
    let (mut phi_env, mut xi_env) = (BoundCheck::new("phi_envelope"), BoundCheck::new("xi_envelope"));
    for (a, b) in env {
        phi_env = phi_env.merge(a);
        xi_env = xi_env.merge(b);
    }

    Ok(LemmaReport {
        config: cfg.clone(),
        checks: vec![exp_check, power, eps_sum, gen_phi, gen_xi, phi_env, xi_env],
    })
}

/// Runs the suite for each candidate `κ` and returns the smallest passing
/// value with the per-candidate outcome.
pub fn smallest_passing_kappa(
    candidates: &[f64],
    base: &LemmaSuiteConfig,
) -> Result<(Option<f64>, Vec<(f64, bool)>)> {
    let mut outcomes = Vec::new();
    for &k in candidates {
        let cfg = LemmaSuiteConfig {
            kappa: k,
            ..base.clone()
        };
        outcomes.push((k, lemma_bound_suite(&cfg)?.passed()));
    }
    let best = outcomes
        .iter()
        .filter(|(_, ok)| *ok)
        .map(|(k, _)| *k)
        .fold(None, |m: Option<f64>, k| Some(m.map_or(k, |m| m.min(k))));
    Ok((best, outcomes))
}

/// Values of `φ_λ`, `ξ_λ` and (optionally) `φ^L_λ` on a λ × x grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralTables {
    pub lambdas: Vec<f64>,
    pub xmax: usize,
    pub q: Option<f64>,
    pub phi: Vec<Vec<f64>>,
    pub xi: Vec<Vec<f64>>,
    pub phi_perturbed: Option<Vec<Vec<f64>>>,
}

impl SpectralTables {
    pub fn build(lambdas: &[f64], xmax: usize, q: Option<f64>) -> Result<Self> {
        for &l in lambdas {
            SpectralPoint::new(l)?;
        }
        let rows: Vec<(Vec<f64>, Vec<f64>)> = lambdas
            .par_iter()
            .map(|&l| (phi_values(l, xmax), xi_values(l, xmax)))
            .collect();
        let (phi, xi): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
        let phi_perturbed = q.map(|q| {
            phi.iter()
                .zip(&xi)
                .map(|(p, x)| p.iter().zip(x).map(|(a, b)| a + q * b).collect())
                .collect()
        });
        Ok(SpectralTables {
            lambdas: lambdas.to_vec(),
            xmax,
            q,
            phi,
            xi,
            phi_perturbed,
        })
    }

    /// CSV with columns `lambda,x,re,im` for one quantity
    /// (`phi`, `xi` or `phi_perturbed`).
    pub fn write_csv<W: std::io::Write>(&self, quantity: &str, out: &mut W) -> Result<()> {
        let table = match quantity {
            "phi" => &self.phi,
            "xi" => &self.xi,
            "phi_perturbed" => self
                .phi_perturbed
                .as_ref()
                .ok_or_else(|| Error::Invalid("tables were built without q".into()))?,
            other => return Err(Error::Invalid(format!("unknown table {other}"))),
        };
        crate::io::write_schema_line(out, &format!("spectral-table quantity={quantity}"))?;
        writeln!(out, "lambda,x,re,im")?;
        for (l, row) in self.lambdas.iter().zip(table) {
            for (x, v) in row.iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{},{}",
                    crate::io::fmt_f64(*l),
                    x,
                    crate::io::fmt_f64(*v),
                    crate::io::fmt_f64(0.0)
                )?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::apply_l;
    use crate::specfun::generalized_expint;
    use crate::testing::{adaptive_quad, close};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn phi_examples() {
        assert!(phi_values(0.0, 30).iter().all(|&v| v == 1.0));
        for &l in &[0.3, 2.0, 17.5] {
            assert_eq!(phi_values(l, 4)[1], 1.0 - l);
        }
        let v = phi_values(2.0, 2)[2];
        assert!((v - (-1.0)).abs() < 1e-13);
        assert!((phi_series(c(2.0, 0.0), 2) - c(-1.0, 0.0)).norm() < 1e-15);
        assert_eq!(phi_series(c(0.7, 0.0), 0), C1);
        assert!((phi_series(c(0.7, 0.0), 1) - c(0.3, 0.0)).norm() < 1e-16);
    }

    #[test]
    fn recursion_matches_series() {
        for k in 0..=40 {
            let lam = 0.5 * k as f64;
            let rec = phi_recursion(c(lam, 0.0), 40);
            for x in 0..=40 {
                let s = phi_series(c(lam, 0.0), x);
                let r = rec.get(x);
                assert!(
                    (s - r).norm() < 1e-11 * r.norm().max(1.0),
                    "lam={lam} x={x} {s} {r}"
                );
            }
        }
        // complex argument
        let z = c(3.0, -2.0);
        let rec = phi_recursion(z, 25);
        for x in 0..=25 {
            let s = phi_series(z, x);
            assert!((s - rec.get(x)).norm() < 1e-11 * s.norm().max(1.0));
        }
    }

    #[test]
    fn eigen_residual_on_interior_rows() {
        for k in 0..=20 {
            let lam = k as f64;
            let phi = phi_recursion(c(lam, 0.0), 101);
            let l = apply_l0(&phi);
            for x in 0..=100 {
                let res = (l.get(x) - phi.get(x) * lam).norm();
                let scale = phi.get(x).norm().max(1.0) * (4.0 * x as f64 + 2.0);
                assert!(res < 1e-10 * scale, "lam={lam} x={x} res={res:e}");
            }
        }
    }

    #[test]
    fn orthogonality_by_gauss_laguerre() {
        let (nodes, weights) = crate::tridiag::gauss_laguerre(24).unwrap();
        let tab: Vec<Vec<f64>> = nodes.iter().map(|&l| phi_values(l, 20)).collect();
        for x1 in 0..=20 {
            for x2 in 0..=20 {
                let s: f64 = (0..nodes.len()).map(|j| weights[j] * tab[j][x1] * tab[j][x2]).sum();
                let want = if x1 == x2 { 1.0 } else { 0.0 };
                assert!((s - want).abs() < 1e-9, "{x1} {x2} {s}");
            }
        }
    }

    #[test]
    fn moments_match_exponential_integrals() {
        for &z in &[c(-1.0, 0.0), c(-2.0, 0.0), c(1.0, 1.0), c(3.0, -2.0)] {
            let a = resolvent_moments(z, 15).unwrap();
            for (k, ak) in a.iter().enumerate() {
                let e = (-z).exp() * generalized_expint(k as u32, CutPlanePoint::new(-z)).unwrap();
                assert!((ak.to_c64() - e).norm() < 1e-12 * e.norm().max(1e-3), "z={z} k={k}");
            }
        }
    }

    #[test]
    fn resolvent_identity() {
        for &z in &[c(-1.0, 0.0), c(-2.0, 0.0), c(1.0, 1.0), c(3.0, -2.0)] {
            let r = resolvent_identity_residual(z, 29).unwrap();
            assert!(r < 1e-9, "z={z} residual {r:e}");
        }
    }

    #[test]
    fn psi_zero_is_f() {
        let psi = psi_resolvent(ComplexEnergy::off_spectrum(c(-1.0, 0.0)).unwrap(), 3).unwrap();
        let f = 1f64.exp() * generalized_expint(0, CutPlanePoint::real(1.0)).unwrap();
        assert!((psi.get(0) - f).norm() < 1e-15);
    }

    #[test]
    fn psi_matches_spectral_quadrature_oracle() {
        let z = -2.0;
        let psi = psi_resolvent(ComplexEnergy::real(z).unwrap(), 10).unwrap();
        for x in 0..=10 {
            let oracle = adaptive_quad(
                &|l: f64| (-l).exp() * phi_values(l, x)[x] / (l - z),
                0.0,
                120.0,
                1e-14,
            );
            assert!((psi.get(x).re - oracle).abs() < 1e-8, "x={x}");
        }
    }

    #[test]
    fn psi_sum_and_integral_agree_on_overlap() {
        for &z in &[c(-1.0, 0.0), c(-2.0, 0.0), c(1.0, 1.0), c(3.0, -2.0)] {
            let rep = psi_overlap_check(z).unwrap();
            assert!(rep.consistent(), "z={z} {rep:?}");
        }
    }

    #[test]
    fn psi_threshold_is_an_error() {
        assert!(ComplexEnergy::off_spectrum(C0).is_err());
        let e = ComplexEnergy::principal_value(0.0).unwrap();
        assert!(matches!(psi_resolvent(e, 3), Err(Error::Threshold(_))));
    }

    #[test]
    fn xi_forms_agree() {
        let z = c(-1.0, 0.0);
        let e = ComplexEnergy::off_spectrum(z).unwrap();
        let xi = xi_aux(e, 15);
        let psi = psi_resolvent(e, 15).unwrap();
        let phi = phi_recursion(z, 15);
        for x in 0..=15 {
            let diff = psi.get(x) - psi.get(0) * phi.get(x);
            let oracle = adaptive_quad(
                &|eta: f64| {
                    let d = eta + 1.0;
                    (-eta).exp() * (phi_values(eta, x)[x] - phi.get(x).re) / d
                },
                0.0,
                150.0,
                1e-13,
            );
            assert!((xi.get(x) - diff).norm() < 1e-8, "x={x}");
            assert!((xi.get(x).re - oracle).abs() < 1e-8, "x={x}");
            let gl = xi_integral(z, x).unwrap();
            assert!((gl - xi.get(x)).norm() < 1e-8 * xi.get(x).norm().max(1.0));
        }
        assert_eq!(xi.get(0), C0);
    }

    #[test]
    fn xi_at_threshold() {
        let xi = xi_aux(ComplexEnergy::principal_value(0.0).unwrap(), 12);
        let mut h = 0.0;
        for x in 1..=12 {
            h += 1.0 / x as f64;
            let oracle = adaptive_quad(
                &|eta: f64| if eta == 0.0 { -(x as f64) } else {
                    (-eta).exp() * (phi_values(eta, x)[x] - 1.0) / eta
                },
                0.0,
                150.0,
                1e-13,
            );
            assert!((xi.get(x).re + h).abs() < 1e-13, "x={x}");
            assert!((xi.get(x).re - oracle).abs() < 1e-9, "x={x}");
        }
    }

    #[test]
    fn perturbed_eigenfunction_properties() {
        for &l in &[0.1, 1.0, 10.0] {
            let v = phi_perturbed(SpectralPoint::new(l).unwrap(), 1.0, 81).unwrap();
            assert_eq!(v.get(0).re, 1.0);
            let lv = apply_l(&v, 1.0).unwrap();
            for x in 0..=80 {
                let res = (lv.get(x) - v.get(x) * l).norm();
                assert!(res < 1e-8 * v.get(x).norm().max(1.0), "l={l} x={x} {res:e}");
            }
        }
        // q → 0
        let a = phi_perturbed_values(2.0, 1e-14, 20);
        let b = phi_values(2.0, 20);
        for x in 0..=20 {
            assert!((a[x] - b[x]).abs() < 1e-12 * b[x].abs().max(1.0));
        }
    }

    #[test]
    fn generating_phi_examples() {
        assert_eq!(generating_phi(c(3.0, 0.0), C0).unwrap(), C1);
        let s = c(0.3, 0.4);
        let g = generating_phi(C0, s).unwrap();
        assert!((g - C1 / (C1 - s)).norm() < 1e-15);
        assert!(generating_phi(C1, c(0.6, 0.8)).is_err());
        // partial sums at λ = 1, s = 1/2
        let phi = phi_values(1.0, 80);
        let zeta = generating_phi(C1, c(0.5, 0.0)).unwrap().re;
        let mut partial = 0.0;
        for (x, p) in phi.iter().enumerate() {
            partial += p * 0.5f64.powi(x as i32);
            if x == 40 {
                assert!((partial - zeta).abs() < 1e-9);
            }
        }
        assert!((partial - zeta).abs() < 1e-15);
    }

    #[test]
    fn contour_reproduces_phi() {
        let r0 = contour_reconstruct(|s| generating_phi(c(2.5, 0.0), s), 0, 4.0).unwrap();
        assert!((r0.value - C1).norm() < 1e-10);
        let r = contour_reconstruct(|s| generating_phi(C1, s), 10, 4.0).unwrap();
        let want = phi_values(1.0, 10)[10];
        assert!((r.value.re - want).abs() < 1e-9, "{} {want}", r.value);
        // geometric decrease of successive differences
        let d = &r.differences;
        for w in d.windows(2) {
            if w[0] > 1e-13 {
                assert!(w[1] < w[0], "{d:?}");
            }
        }
    }

    #[test]
    fn generating_xi_closed_form_matches_quadrature() {
        for &lam in &[0.0, 0.5, 1.0, 2.0, 7.0] {
            for &(r, th) in &[(0.5, 0.3), (0.8, 2.0), (0.9, 3.14159), (0.75, -1.0), (0.9, 0.0)] {
                let s = Complex64::from_polar(r, th);
                let a = generating_xi_reduced(lam, s).unwrap();
                let b = generating_xi_quadrature(c(lam, 0.0), s).unwrap() * (C1 - s);
                assert!((a - b).norm() < 1e-10 * a.norm().max(1.0), "lam={lam} s={s} {a} {b}");
            }
        }
    }

    #[test]
    fn contour_reproduces_xi_from_double_integral() {
        for &lam in &[0.5, 1.0, 2.0] {
            let xi = xi_values(lam, 10);
            for x in 0..=10 {
                let r = contour_reconstruct(|s| generating_xi_quadrature(c(lam, 0.0), s), x, 4.0)
                    .unwrap();
                assert!((r.value.re - xi[x]).abs() < 1e-7, "lam={lam} x={x} {} {}", r.value, xi[x]);
                assert!(r.value.im.abs() < 1e-7);
            }
        }
    }

    #[test]
    fn lemma_examples() {
        // n = 0, x = 0: e^{-λ/2} < 3·4·e^{-λ/16}
        for k in 0..50 {
            let l = k as f64;
            assert!((-0.5 * l).exp() < phi_envelope_constant(0, 0, 4.0) * (-l / 16.0).exp());
        }
        for x in 0..=200 {
            let r: f64 = 1.0 - 1.0 / (x as f64 + 4.0);
            assert!(r.powi(-(x as i32)) < std::f64::consts::E);
        }
        assert!(1.0 / (0.25 + 0.25) < 0.25 * 4.0 * 4.0);
    }

    #[test]
    fn richardson_is_accurate() {
        let f = |x: f64| x.sin() * x.exp();
        let d1 = richardson_derivative(&f, 1.3, 1, 1e-2);
        let d2 = richardson_derivative(&f, 1.3, 2, 1e-2);
        let e = 1.3f64.exp();
        assert!((d1 - e * (1.3f64.sin() + 1.3f64.cos())).abs() < 1e-10);
        assert!((d2 - 2.0 * e * 1.3f64.cos()).abs() < 1e-8);
    }

    #[test]
    fn tables_csv_has_schema_line() {
        let t = SpectralTables::build(&[0.0, 1.0], 3, Some(1.0)).unwrap();
        let mut buf = Vec::new();
        t.write_csv("phi_perturbed", &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# schema"));
        assert_eq!(lines.next().unwrap(), "lambda,x,re,im");
        assert_eq!(text.lines().count(), 2 + 8);
        assert!(t.write_csv("nope", &mut Vec::new()).is_err());
    }

    proptest! {
        #[test]
        fn xi_vanishes_at_origin(re in -20.0f64..20.0, im in -20.0f64..20.0) {
            let z = c(re, im);
            let e = ComplexEnergy { z, on_spectrum: im == 0.0 && re >= 0.0 };
            prop_assert_eq!(xi_aux(e, 5).get(0), C0);
        }

        #[test]
        fn generating_phi_matches_partial_sums(lam in 0.0f64..5.0, r in 0.0f64..0.6, th in 0.0f64..6.28) {
            let s = Complex64::from_polar(r, th);
            let phi = phi_values(lam, 200);
            let mut acc = C0;
            let mut p = C1;
            for v in &phi {
                acc += p * *v;
                p *= s;
            }
            let g = generating_phi(c(lam, 0.0), s).unwrap();
            prop_assert!(close((acc - g).norm() + 1.0, 1.0, 1e-9));
        }
    }
}
