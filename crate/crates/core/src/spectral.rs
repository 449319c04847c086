//! Spectral weights of `L₀` and `L = L₀ - qP₀`, the g-factor, resolvent
//! functions and the bound state of `L`.
//!
//! With `s_λ = e^{-λ}Ei(λ) = -PV f_λ`, the continuum weight of `L` is
//! `w^L_λ = g_λ e^{-λ}` where `g_λ = [(1 + q s_λ)² + (πqe^{-λ})²]^{-1}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::eigenfunctions::{
    phi_perturbed_values, phi_values, pv_resolvent_f, resolvent_f_off, xi_values, ComplexEnergy,
};
use crate::error::{domain, Error, Result};
use crate::lattice::{truncated_matrix, LatticeVector, OperatorKind, OperatorSpec};
use crate::quadrature::{graded_panels, PanelRule};
use crate::specfun::{scaled_e1, scaled_ei};

/// `w_λ = e^{-λ}`.
pub fn weight_free(lambda: f64) -> f64 {
    (-lambda).exp()
}

/// `f_z` off the cut, or `PV f_λ` together with the δ-part `w_λ` on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolventValue {
    pub value: Complex64,
    /// Coefficient of `iπ` in the boundary values: `f_{λ±i0} = PV ± iπ·delta`.
    /// Zero off the cut.
    pub delta: f64,
}

pub fn resolvent_function_f(z: ComplexEnergy) -> Result<ResolventValue> {
    if z.z == Complex64::new(0.0, 0.0) {
        return Err(Error::Threshold("f_z diverges at z = 0".into()));
    }
    if z.on_spectrum {
        let lam = z.z.re;
        Ok(ResolventValue {
            value: Complex64::new(pv_resolvent_f(lam)?, 0.0),
            delta: weight_free(lam),
        })
    } else {
        Ok(ResolventValue {
            value: resolvent_f_off(z.z)?,
            delta: 0.0,
        })
    }
}

/// `f^L_z = (1 - q f_z)^{-1} f_z` off the cut.
pub fn resolvent_function_perturbed(z: ComplexEnergy, q: f64) -> Result<Complex64> {
    if z.on_spectrum {
        return domain("f^L on the spectrum: use pv_psi_perturbed for the principal value");
    }
    let f = resolvent_function_f(z)?.value;
    Ok(f / (1.0 - q * f))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GFactor {
    pub lambda: f64,
    pub q: f64,
    pub value: f64,
    pub pv_f: f64,
    pub delta_f: f64,
    /// `w^L_λ = g_λ e^{-λ}`.
    pub weight: f64,
    /// Set at `λ = 0`, where only the limit `g = 0` is returned.
    pub threshold: bool,
}

fn check_q(q: f64) -> Result<()> {
    if !(q > 0.0 && q.is_finite()) {
        return domain(format!("coupling q must be positive, got {q}"));
    }
    Ok(())
}

pub fn g_factor(lambda: f64, q: f64) -> Result<GFactor> {
    check_q(q)?;
    if lambda == 0.0 {
        return Ok(GFactor {
            lambda,
            q,
            value: 0.0,
            pv_f: f64::NEG_INFINITY,
            delta_f: 1.0,
            weight: 0.0,
            threshold: true,
        });
    }
    if !(lambda > 0.0) {
        return domain(format!("g-factor needs lambda >= 0, got {lambda}"));
    }
    let s = scaled_ei(lambda)?;
    let w = weight_free(lambda);
    let a = 1.0 + q * s;
    let b = PI * q * w;
    let g = 1.0 / (a * a + b * b);
    Ok(GFactor {
        lambda,
        q,
        value: g,
        pv_f: -s,
        delta_f: w,
        weight: g * w,
        threshold: false,
    })
}

/// `dg/dλ`, using `d(e^{-λ}Ei(λ))/dλ = 1/λ - e^{-λ}Ei(λ)`.
pub fn g_derivative(lambda: f64, q: f64) -> Result<f64> {
    let gf = g_factor(lambda, q)?;
    if gf.threshold {
        return Err(Error::Threshold("g' is unbounded at the threshold".into()));
    }
    let s = -gf.pv_f;
    let ds = 1.0 / lambda - s;
    let w = gf.delta_f;
    let d_denom = 2.0 * (1.0 + q * s) * q * ds - 2.0 * (PI * q * w).powi(2);
    Ok(-gf.value * gf.value * d_denom)
}

/// Sampled `sup g_λ` over a logarithmic grid in `[1e-12, 50]` (the constant
/// `ĝ₀(q)` is only known to be finite).
pub fn g_supremum(q: f64, samples: usize) -> Result<(f64, f64)> {
    check_q(q)?;
    let n = samples.max(2);
    let (lo, hi) = (1e-12f64.ln(), 50f64.ln());
    let mut best = (0.0, 0.0);
    for j in 0..n {
        let lam = (lo + (hi - lo) * j as f64 / (n - 1) as f64).exp();
        let g = g_factor(lam, q)?.value;
        if g > best.1 {
            best = (lam, g);
        }
    }
    Ok(best)
}

/// CSV `lambda,g,w_l,g_log2` for the given grid; `q = 0` gives the free
/// weight (`g ≡ 1`).
pub fn write_g_table<W: std::io::Write>(lambdas: &[f64], q: f64, out: &mut W) -> Result<()> {
    use crate::io::{fmt_f64, write_schema_line};
    if !(q >= 0.0 && q.is_finite()) {
        return domain(format!("coupling q must be non-negative, got {q}"));
    }
    write_schema_line(out, &format!("g-factor q={}", fmt_f64(q)))?;
    writeln!(out, "lambda,g,w_l,g_log2")?;
    for &l in lambdas {
        let (g, w) = if q == 0.0 {
            if !(l >= 0.0) {
                return domain(format!("g-factor needs lambda >= 0, got {l}"));
            }
            (1.0, weight_free(l))
        } else {
            let gf = g_factor(l, q)?;
            (gf.value, gf.weight)
        };
        let g_log2 = if l > 0.0 { g * l.ln().powi(2) } else { 0.0 };
        writeln!(out, "{},{},{},{}", fmt_f64(l), fmt_f64(g), fmt_f64(w), fmt_f64(g_log2))?;
    }
    Ok(())
}

/// Bound state of `L`: `λ₀ = -a` with `q e^a E₁(a) = 1`, eigenvector
/// `q ψ_{λ₀}` normalized in `ℓ²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundState {
    pub q: f64,
    pub lambda0: f64,
    /// `1 - q e^{-λ₀}E₁(-λ₀)` at the returned root.
    pub secular_residual: f64,
    /// `‖ψ_{λ₀}‖² = 1/a - 1/q`.
    pub psi_norm_sq: f64,
    pub vector: LatticeVector,
}

/// Bracket `[lo, hi]` for the root: right end doubled from 1, left end
/// squared from 1e-12 for couplings too weak for the default bracket.
fn bound_state_root(q: f64) -> Result<f64> {
    let h = |a: f64| -> Result<f64> { Ok(q * scaled_e1(a)? - 1.0) };
    let mut lo = 1e-12;
    while h(lo)? < 0.0 {
        lo *= lo;
        if lo < 1e-300 {
            return Err(Error::NotConverged(format!(
                "bound-state bracket underflows for q = {q}"
            )));
        }
    }
    let mut hi = 1.0;
    while h(hi)? > 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::NotConverged(format!("bound-state bracket failed for q = {q}")));
        }
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if h(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    // Newton polish; d/da[e^a E₁(a)] = e^a E₁(a) - 1/a
    let mut a = 0.5 * (lo + hi);
    for _ in 0..3 {
        let e = scaled_e1(a)?;
        let step = (q * e - 1.0) / (q * (e - 1.0 / a));
        let next = a - step;
        if !(next > lo * 0.5 && next < hi * 2.0) {
            break;
        }
        a = next;
        if step.abs() < 1e-16 * a {
            break;
        }
    }
    Ok(a)
}

/// Sites needed before `|ψ_{λ₀}(x)|` falls below ~1e-17 of its size at the
/// origin (`ψ_{λ₀}(x) ~ exp(-2√(ax))`), capped.
fn bound_state_length(a: f64) -> usize {
    let n = (400.0 / a).ceil() + 64.0;
    n.min((1u64 << 20) as f64) as usize
}

pub fn bound_state_solve(q: f64) -> Result<BoundState> {
    check_q(q)?;
    let a = bound_state_root(q)?;
    bound_state_with_length(q, a, bound_state_length(a))
}

/// Bound state with the eigenvector stored on `0..len`.
pub fn bound_state_solve_len(q: f64, len: usize) -> Result<BoundState> {
    check_q(q)?;
    let a = bound_state_root(q)?;
    bound_state_with_length(q, a, len.max(2))
}

fn bound_state_with_length(q: f64, a: f64, len: usize) -> Result<BoundState> {
    let psi = minimal_solution(-a, len, 1.0 / q)?;
    let psi_norm_sq = 1.0 / a - 1.0 / q;
    let scale = 1.0 / psi_norm_sq.sqrt();
    let vector = LatticeVector::from_real(&psi.iter().map(|v| v * scale).collect::<Vec<_>>(), false);
    Ok(BoundState {
        q,
        lambda0: -a,
        secular_residual: 1.0 - q * scaled_e1(a)?,
        psi_norm_sq,
        vector,
    })
}

/// Minimal (decaying) solution of `(L₀ - z)u = 0` on rows `x ≥ 1` for real
/// `z < 0`, normalized to `u(0) = u0`, by backward recursion from far out.
fn minimal_solution(z: f64, len: usize, u0: f64) -> Result<Vec<f64>> {
    let a = -z;
    // dominant/minimal ratio grows like exp(4√(a x)); start where the
    // spurious dominant part has decayed by e^{-40} at the last stored site
    let start_root = (len as f64).sqrt() + 10.0 / a.sqrt();
    let start = (start_root * start_root).ceil();
    if !(start < 5e7) {
        return Err(Error::NotConverged(format!(
            "backward recursion for z = {z} would start at {start:e}"
        )));
    }
    let start = start as usize + 2;
    let mut u = vec![0.0; len];
    let (mut next, mut cur) = (0.0f64, 1e-300f64);
    // u(x-1) = ((2x+1-z)u(x) - (x+1)u(x+1)) / x
    for x in (1..=start).rev() {
        let xf = x as f64;
        let prev = ((2.0 * xf + 1.0 - z) * cur - (xf + 1.0) * next) / xf;
        next = cur;
        cur = prev;
        if cur.abs() > 1e250 {
            next *= 1e-250;
            cur *= 1e-250;
            u.iter_mut().for_each(|v| *v *= 1e-250);
        }
        if x - 1 < len {
            u[x - 1] = cur;
        }
    }
    let s = u0 / u[0];
    u.iter_mut().for_each(|v| *v *= s);
    Ok(u)
}

impl BoundState {
    /// Residual `‖(L^{(N)} - λ₀)u‖/‖u‖` for the eigenvector `u` of the
    /// truncated matrix nearest `λ₀`.
    pub fn truncated_residual(&self, n: usize) -> Result<f64> {
        let t = truncated_matrix(&OperatorSpec::perturbed(self.q, n)?)?;
        let (u, _, _) = t.inverse_iteration(self.lambda0)?;
        let tu = t.matvec_real(&u);
        let r: f64 = tu
            .iter()
            .zip(&u)
            .map(|(a, b)| (a - self.lambda0 * b).powi(2))
            .sum::<f64>()
            .sqrt();
        Ok(r)
    }

    /// `P_{λ₀}(x₁, x₂) = v(x₁)v(x₂)`.
    pub fn projector(&self, x1: usize, x2: usize) -> f64 {
        self.vector.get(x1).re * self.vector.get(x2).re
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `PV ψ^L_λ = g_λ[PVf φ - q PVf ξ + ξ - q(PVf)²φ - q(πw)²φ]`.
pub fn pv_psi_perturbed(lambda: f64, q: f64, xmax: usize) -> Result<LatticeVector> {
    check_q(q)?;
    if !(lambda > 0.0) {
        return Err(Error::Threshold(format!(
            "PV ψ^L needs lambda > 0, got {lambda}"
        )));
    }
    let gf = g_factor(lambda, q)?;
    let (f, w, g) = (gf.pv_f, gf.delta_f, gf.value);
    let phi = phi_values(lambda, xmax);
    let xi = xi_values(lambda, xmax);
    let cphi = f - q * f * f - q * (PI * w).powi(2);
    let cxi = 1.0 - q * f;
    let v: Vec<f64> = phi.iter().zip(&xi).map(|(p, x)| g * (cphi * p + cxi * x)).collect();
    Ok(LatticeVector::from_real(&v, false))
}

/// `F(λ, x₁, x₂)`: `w_λφ_λ(x₁)φ_λ(x₂)` or `w^L_λφ^L_λ(x₁)φ^L_λ(x₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralKernel {
    pub kind: OperatorKind,
    pub q: f64,
}

impl SpectralKernel {
    pub fn free() -> Self {
        SpectralKernel {
            kind: OperatorKind::Free,
            q: 0.0,
        }
    }

    pub fn perturbed(q: f64) -> Result<Self> {
        check_q(q)?;
        Ok(SpectralKernel {
            kind: OperatorKind::Perturbed,
            q,
        })
    }

    pub fn from_spec(spec: &OperatorSpec) -> Result<Self> {
        match spec.kind {
            OperatorKind::Free => Ok(Self::free()),
            OperatorKind::Perturbed => Self::perturbed(spec.q),
        }
    }

    /// Weight and eigenfunction values on `0..=xmax`, so that
    /// `F(λ, x₁, x₂) = weight·u(x₁)·u(x₂)`.
    pub fn amplitudes(&self, lambda: f64, xmax: usize) -> Result<(f64, Vec<f64>)> {
        if !(lambda >= 0.0) {
            return domain(format!("spectral kernel needs lambda >= 0, got {lambda}"));
        }
        Ok(match self.kind {
            OperatorKind::Free => (weight_free(lambda), phi_values(lambda, xmax)),
            OperatorKind::Perturbed => (
                g_factor(lambda, self.q)?.weight,
                phi_perturbed_values(lambda, self.q, xmax),
            ),
        })
    }

    pub fn value(&self, lambda: f64, x1: usize, x2: usize) -> Result<f64> {
        let (w, u) = self.amplitudes(lambda, x1.max(x2))?;
        Ok(w * (u[x1] * u[x2]))
    }

    /// Envelope `E(λ) ≥ |F(λ, x₁, x₂)|` valid for `λ ≥ max(x₁, x₂, 1)`,
    /// decreasing at least like `e^{-λ/2}` once `λ ≥ 2(x₁+x₂)`.
    ///
    /// Uses `|φ_λ(x)| ≤ L_x(-λ)`, `|ξ_λ(x)| ≤ L_x(-λ)` for `λ ≥ x`, and
    /// `g_λ ≤ 1` there.
    pub fn envelope(&self, lambda: f64, x1: usize, x2: usize) -> f64 {
        let m = x1.max(x2);
        let p = phi_values(-lambda, m);
        let c = match self.kind {
            OperatorKind::Free => 1.0,
            OperatorKind::Perturbed => (1.0 + self.q).powi(2),
        };
        c * (-lambda).exp() * p[x1] * p[x2]
    }
}

pub fn spectral_kernel(kernel: &SpectralKernel, lambda: f64, x1: usize, x2: usize) -> Result<f64> {
    kernel.value(lambda, x1, x2)
}

/// Upper cutoff `Λ` with `∫_Λ^∞ |F| < tol` for all `x₁, x₂ ≤ xmax`.
///
/// Starts at `max(50 + 2·xmax, 4·xmax + 2)` and grows until twice the
/// envelope at `Λ` is below `tol` (the envelope halves at least every
/// `2 ln 2` there, so twice its value bounds the tail).
pub fn spectral_cutoff(kernel: &SpectralKernel, xmax: usize, tol: f64) -> f64 {
    let mut lam = (50.0 + 2.0 * xmax as f64).max(4.0 * xmax as f64 + 2.0);
    while 2.0 * kernel.envelope(lam, xmax, xmax) >= tol && lam < 1e4 {
        lam += 5.0;
    }
    lam
}

/// Panels for spectral integrals up to `upper`: `[0, 1e-12]`, geometric
/// grading with ratio 1/2 up to 1, then widths resolving the oscillation of
/// `φ_λ(x)` for `x ≤ xmax`.
pub fn spectral_panels(upper: f64, xmax: usize, max_width: f64) -> Result<Vec<(f64, f64)>> {
    graded_panels(1e-12, 1.0, 0.5, upper, max_width, 4.0 * xmax.max(1) as f64, 4)
}

/// Deviation of the spectral resolution of the identity at `(x₁, x₂)`:
/// `|[P_{λ₀}(x₁,x₂)] + ∫ F(λ,x₁,x₂)dλ - δ_{x₁x₂}|`.
pub fn completeness_check(q: Option<f64>, x1: usize, x2: usize) -> Result<f64> {
    completeness_check_scaled(q, x1, x2, 1.0)
}

/// [`completeness_check`] with the continuum weight multiplied by
/// `weight_scale`; anything but 1 should break the identity.
pub fn completeness_check_scaled(q: Option<f64>, x1: usize, x2: usize, weight_scale: f64) -> Result<f64> {
    let kernel = match q {
        None => SpectralKernel::free(),
        Some(q) => SpectralKernel::perturbed(q)?,
    };
    let m = x1.max(x2);
    let upper = spectral_cutoff(&kernel, m, 1e-15);
    let rule = PanelRule::new(spectral_panels(upper, m, 1.0)?, 20)?;
    let parts: Result<Vec<f64>> = rule
        .nodes
        .par_iter()
        .zip(rule.weights.par_iter())
        .map(|(&l, &w)| Ok(weight_scale * w * kernel.value(l, x1, x2)?))
        .collect();
    let mut total = crate::dd::sum_f64(parts?);
    if let Some(q) = q {
        total += bound_state_solve(q)?.projector(x1, x2);
    }
    let delta = if x1 == x2 { 1.0 } else { 0.0 };
    Ok((total - delta).abs())
}
