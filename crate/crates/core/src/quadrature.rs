//! Composite Gauss–Legendre and Filon–Legendre rules on panels.
//!
//! On a panel `[a, b]` with midpoint `m` and half-width `h`, a smooth factor
//! `S` is expanded in Legendre polynomials from its values at the Gauss
//! nodes. The oscillatory factor is then integrated exactly:
//!
//! `∫_{-1}^{1} e^{-iωu} P_k(u) du = 2 (-i)^k j_k(ω)`,
//!
//! which folds into one complex weight per node. At `t = 0` the weights reduce
//! to plain Gauss–Legendre.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// `P_0(u) .. P_kmax(u)`.
pub fn legendre_values(kmax: usize, u: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(kmax + 1);
    p.push(1.0);
    if kmax >= 1 {
        p.push(u);
    }
    for k in 1..kmax {
        let kf = k as f64;
        p.push(((2.0 * kf + 1.0) * u * p[k] - kf * p[k - 1]) / (kf + 1.0));
    }
    p
}

/// Spherical Bessel functions `j_0(w) .. j_kmax(w)` for real `w`.
///
/// Upward recurrence is stable for `k < |w|`; otherwise Miller's backward
/// recurrence is normalized with `Σ (2k+1) j_k² = 1`.
pub fn spherical_bessel(kmax: usize, w: f64) -> Vec<f64> {
    let a = w.abs();
    let mut j = vec![0.0; kmax + 1];
    if a == 0.0 {
        j[0] = 1.0;
        return j;
    }
    if a < 1e-6 {
        // j_k(a) = a^k/(2k+1)!! (1 - a²/(2(2k+3)) + O(a⁴))
        let mut lead = 1.0;
        for (k, v) in j.iter_mut().enumerate() {
            if k > 0 {
                lead *= a / (2.0 * k as f64 + 1.0);
            }
            *v = lead * (1.0 - a * a / (2.0 * (2.0 * k as f64 + 3.0)));
        }
    } else if a > kmax as f64 + 1.0 {
        j[0] = a.sin() / a;
        if kmax >= 1 {
            j[1] = a.sin() / (a * a) - a.cos() / a;
        }
        for k in 1..kmax {
            j[k + 1] = (2.0 * k as f64 + 1.0) / a * j[k] - j[k - 1];
        }
    } else {
        let start = kmax + 30 + (a as usize);
        let mut up = 0.0f64; // j_{k+1}
        let mut cur = 1e-100f64; // j_k
        let mut norm = 0.0f64;
        for k in (0..=start).rev() {
            if k <= kmax {
                j[k] = cur;
            }
            norm += (2.0 * k as f64 + 1.0) * cur * cur;
            if k == 0 {
                break;
            }
            let down = (2.0 * k as f64 + 1.0) / a * cur - up;
            up = cur;
            cur = down;
            if cur.abs() > 1e100 {
                let s = 1e-100;
                up *= s;
                cur *= s;
                norm *= s * s;
                j.iter_mut().for_each(|v| *v *= s);
            }
        }
        let scale = 1.0 / norm.sqrt();
        // fix the sign against whichever of j_0, j_1 is not near a zero
        let j0 = a.sin() / a;
        let sign = if j0.abs() > 0.1 || kmax == 0 {
            j[0].signum() * j0.signum()
        } else {
            let j1 = a.sin() / (a * a) - a.cos() / a;
            j[1].signum() * j1.signum()
        };
        j.iter_mut().for_each(|v| *v *= scale * sign);
    }
    if w < 0.0 {
        for (k, v) in j.iter_mut().enumerate() {
            if k % 2 == 1 {
                *v = -*v;
            }
        }
    }
    j
}

/// Composite rule: Gauss–Legendre with `degree + 1` nodes on each panel.
#[derive(Debug, Clone)]
pub struct PanelRule {
    panels: Vec<(f64, f64)>,
    degree: usize,
    /// Node abscissae, panel by panel.
    pub nodes: Vec<f64>,
    /// Plain (t = 0) weights.
    pub weights: Vec<f64>,
    gl_w: Vec<f64>,
    /// `(2k+1) P_k(u_i)` for reference node `i`, row-major in `i`.
    leg: Vec<Vec<f64>>,
}

impl PanelRule {
    pub fn new(panels: Vec<(f64, f64)>, degree: usize) -> Result<Self> {
        if panels.is_empty() {
            return Err(Error::Grid("panel rule needs at least one panel".into()));
        }
        if panels.iter().any(|&(a, b)| !(b > a)) {
            return Err(Error::Grid("panels must have positive length".into()));
        }
        let n = degree + 1;
        let (gl_u, gl_w) = gauss_legendre(n);
        let leg = gl_u
            .iter()
            .map(|&u| {
                legendre_values(degree, u)
                    .into_iter()
                    .enumerate()
                    .map(|(k, p)| (2.0 * k as f64 + 1.0) * p)
                    .collect()
            })
            .collect();
        let mut nodes = Vec::with_capacity(n * panels.len());
        let mut weights = Vec::with_capacity(n * panels.len());
        for &(a, b) in &panels {
            let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
            for i in 0..n {
                nodes.push(m + h * gl_u[i]);
                weights.push(h * gl_w[i]);
            }
        }
        Ok(PanelRule {
            panels,
            degree,
            nodes,
            weights,
            gl_w,
            leg,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn panels(&self) -> &[(f64, f64)] {
        &self.panels
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Node weights `ω_j(t)` with `Σ ω_j S(λ_j) ≈ ∫ e^{-itλ} S(λ) dλ`.
    pub fn filon_weights(&self, t: f64) -> Vec<Complex64> {
        let n = self.degree + 1;
        let mut out = Vec::with_capacity(self.nodes.len());
        // (-i)^k
        let phases: Vec<Complex64> = (0..=self.degree)
            .map(|k| match k % 4 {
                0 => Complex64::new(1.0, 0.0),
                1 => Complex64::new(0.0, -1.0),
                2 => Complex64::new(-1.0, 0.0),
                _ => Complex64::new(0.0, 1.0),
            })
            .collect();
        for &(a, b) in &self.panels {
            let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
            let omega = t * h;
            let carrier = Complex64::from_polar(h, -t * m);
            if omega == 0.0 {
                for i in 0..n {
                    out.push(carrier * self.gl_w[i]);
                }
                continue;
            }
            let j = spherical_bessel(self.degree, omega);
            let moments: Vec<Complex64> = (0..=self.degree).map(|k| phases[k] * j[k]).collect();
            for i in 0..n {
                let s: Complex64 = self.leg[i]
                    .iter()
                    .zip(&moments)
                    .map(|(l, mk)| mk * *l)
                    .sum();
                out.push(carrier * self.gl_w[i] * s);
            }
        }
        out
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

/// Panel layout: `[0, floor]`, geometric panels `floor·σ^{-j}` up to `top`,
/// then panels of width at most `max_width` up to `upper`, narrowed where the
/// local oscillation scale `2π√(λ/x_scale)` is short.
pub fn graded_panels(
    floor: f64,
    top: f64,
    sigma: f64,
    upper: f64,
    max_width: f64,
    x_scale: f64,
    panels_per_period: usize,
) -> Result<Vec<(f64, f64)>> {
    if !(floor > 0.0 && floor < top && top < upper) {
        return Err(Error::Grid(format!(
            "need 0 < floor < top < upper, got {floor}, {top}, {upper}"
        )));
    }
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::Grid(format!("grading ratio must be in (0,1), got {sigma}")));
    }
    let mut cuts = vec![0.0, floor];
    let mut x = floor;
    while x < top {
        x = (x / sigma).min(top);
        if top - x < 1e-12 * top {
            x = top;
        }
        cuts.push(x);
    }
    let ppp = panels_per_period.max(1) as f64;
    let mut x = top;
    while x < upper {
        let period = if x_scale > 0.0 {
            2.0 * PI * (x / x_scale).sqrt()
        } else {
            f64::INFINITY
        };
        let w = max_width.min(period / ppp).max(1e-3);
        x = (x + w).min(upper);
        if upper - x < 1e-9 * w {
            x = upper;
        }
        cuts.push(x);
    }
    Ok(cuts.windows(2).map(|c| (c[0], c[1])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        for n in [1usize, 2, 5, 16, 33] {
            let (x, w) = gauss_legendre(n);
            for k in 0..2 * n {
                let s: f64 = x.iter().zip(&w).map(|(a, b)| b * a.powi(k as i32)).sum();
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                assert!((s - exact).abs() < 1e-14, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn spherical_bessel_matches_closed_forms() {
        for &w in &[1e-8, 1e-3, 0.3, 1.0, 2.5, 7.0, 19.0, 40.0, 150.0, -3.0] {
            let j = spherical_bessel(20, w);
            let (s, c) = (w.sin(), w.cos());
            let j0 = s / w;
            let j2 = (3.0 / (w * w) - 1.0) * s / w - 3.0 * c / (w * w);
            assert!((j[0] - j0).abs() < 1e-14, "w={w}");
            if w.abs() > 0.1 {
                assert!((j[2] - j2).abs() < 1e-13, "w={w} {} {}", j[2], j2);
            }
            // Σ (2k+1) j_k² → 1; with 21 terms it holds for moderate w
            if w.abs() < 10.0 {
                let s: f64 = j.iter().enumerate().map(|(k, v)| (2 * k + 1) as f64 * v * v).sum();
                assert!((s - 1.0).abs() < 1e-13);
            }
        }
        // small-argument limit j_k(w) ≈ w^k/(2k+1)!!
        let j = spherical_bessel(6, 1e-3);
        assert!((j[3] / (1e-9 / 105.0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn filon_integrates_polynomial_times_phase_exactly() {
        // ∫_0^2 λ² e^{-itλ} dλ in closed form
        let rule = PanelRule::new(vec![(0.0, 0.7), (0.7, 2.0)], 6).unwrap();
        for &t in &[0.0, 0.5, 3.0, 40.0, 1e4] {
            let w = rule.filon_weights(t);
            let s: Complex64 = w.iter().zip(&rule.nodes).map(|(w, x)| w * x * x).sum();
            let exact = if t == 0.0 {
                Complex64::new(8.0 / 3.0, 0.0)
            } else {
                let it = Complex64::new(0.0, t);
                let e = (-it * 2.0).exp();
                // antiderivative of λ² e^{-aλ}: -e^{-aλ}(λ²/a + 2λ/a² + 2/a³)
                let f = |lam: f64, e: Complex64| -e * (lam * lam / it + 2.0 * lam / (it * it) + 2.0 / (it * it * it));
                f(2.0, e) - f(0.0, Complex64::new(1.0, 0.0))
            };
            assert!((s - exact).norm() < 1e-12 * (1.0 + exact.norm()), "t={t} {s} {exact}");
        }
    }

    #[test]
    fn filon_cost_is_independent_of_frequency() {
        // ∫_0^∞ e^{-(1+it)λ} dλ = 1/(1+it) on a fixed panel set
        let panels = graded_panels(1e-12, 1.0, 0.5, 60.0, 1.0, 0.0, 4).unwrap();
        let rule = PanelRule::new(panels, 16).unwrap();
        let f: Vec<f64> = rule.nodes.iter().map(|l| (-l).exp()).collect();
        for &t in &[1.0, 10.0, 100.0, 1e3] {
            let w = rule.filon_weights(t);
            let s: Complex64 = w.iter().zip(&f).map(|(a, b)| a * b).sum();
            let exact = Complex64::new(1.0, 0.0) / Complex64::new(1.0, t);
            assert!((s - exact).norm() < 1e-13, "t={t} {s} {exact}");
        }
    }

    #[test]
    fn graded_panels_cover_interval() {
        let p = graded_panels(1e-12, 1.0, 0.5, 30.0, 1.0, 40.0, 4).unwrap();
        assert_eq!(p[0].0, 0.0);
        assert_eq!(p.last().unwrap().1, 30.0);
        for w in p.windows(2) {
            assert_eq!(w[0].1, w[1].0);
        }
        assert!(graded_panels(1.0, 0.5, 0.5, 3.0, 1.0, 1.0, 4).is_err());
    }
}
