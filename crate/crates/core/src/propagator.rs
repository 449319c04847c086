//! Time-evolution kernels `e^{-itL₀}(x₁,x₂)` and `e^{-itL}(x₁,x₂)`.
//!
//! The spectral side is `∫ e^{-itλ} F(λ,x₁,x₂) dλ` with a Filon rule: on each
//! panel the smooth factor `F` is interpolated at Gauss–Legendre nodes and the
//! moments of `e^{-itλ}` against the interpolant are exact, so the node count
//! does not grow with `t`. All `(x₁, x₂)` pairs share the nodes, giving the
//! Gram form `K = Σ_j ω_j(t) w_j u_j(x₁) u_j(x₂)`.
//!
//! The oracle diagonalizes the truncated matrix `L^{(N)}` and doubles `N`
//! until the result stops changing.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::lattice::{truncated_matrix, LatticeVector, OperatorKind, OperatorSpec};
use crate::quadrature::PanelRule;
use crate::spectral::{bound_state_solve_len, spectral_cutoff, SpectralKernel};

/// Quadrature parameters for the spectral side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureConfig {
    /// Upper cutoff `Λ`; `None` picks it from the tail envelope.
    pub upper: Option<f64>,
    /// Ratio of the geometric grading toward `λ = 0`.
    pub sigma: f64,
    /// Panels per local period of the eigenfunction product.
    pub panels_per_period: usize,
    /// Interpolation degree per panel; the error estimate uses twice this.
    pub filon_degree: usize,
    pub max_width: f64,
    /// Target for the neglected tail beyond `Λ`.
    pub tail_tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            upper: None,
            sigma: 0.5,
            panels_per_period: 4,
            filon_degree: 12,
            max_width: 1.0,
            tail_tol: 1e-13,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(u) = self.upper {
            if !(u > 1.0) {
                return domain(format!("upper cutoff must exceed 1, got {u}"));
            }
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return domain(format!("grading ratio must lie in (0,1), got {}", self.sigma));
        }
        if self.panels_per_period < 4 {
            return domain("panels_per_period must be at least 4");
        }
        if self.filon_degree < 2 {
            return domain("filon_degree must be at least 2");
        }
        if !(self.max_width > 0.0 && self.tail_tol > 0.0) {
            return domain("max_width and tail_tol must be positive");
        }
        Ok(())
    }

    fn panels(&self, kernel: &SpectralKernel, xmax: usize) -> Result<Vec<(f64, f64)>> {
        let upper = self
            .upper
            .unwrap_or_else(|| spectral_cutoff(kernel, xmax, self.tail_tol));
        crate::quadrature::graded_panels(
            1e-12,
            1.0,
            self.sigma,
            upper,
            self.max_width,
            4.0 * xmax.max(1) as f64,
            self.panels_per_period,
        )
    }
}

/// Kernel samples for `x₁, x₂ ≤ xmax` at each `t`.
#[derive(Debug, Clone, Serialize)]
pub struct KernelTable {
    pub spec: OperatorSpec,
    pub config: QuadratureConfig,
    pub xmax: usize,
    pub times: Vec<f64>,
    /// Continuum part, `[t][x₁·(xmax+1) + x₂]`.
    pub continuum: Vec<Vec<Complex64>>,
    /// Bound-state part `e^{-itλ₀}P_{λ₀}` (perturbed operator only).
    pub bound: Option<Vec<Vec<Complex64>>>,
    /// Degree-doubling error estimate per entry.
    pub errors: Vec<Vec<f64>>,
    pub nodes: usize,
}

impl KernelTable {
    fn idx(&self, x1: usize, x2: usize) -> usize {
        x1 * (self.xmax + 1) + x2
    }

    pub fn continuum(&self, ti: usize, x1: usize, x2: usize) -> Complex64 {
        self.continuum[ti][self.idx(x1, x2)]
    }

    pub fn bound(&self, ti: usize, x1: usize, x2: usize) -> Complex64 {
        self.bound
            .as_ref()
            .map_or(Complex64::new(0.0, 0.0), |b| b[ti][self.idx(x1, x2)])
    }

    /// Full kernel `e^{-itH}(x₁,x₂)`.
    pub fn get(&self, ti: usize, x1: usize, x2: usize) -> Complex64 {
        self.continuum(ti, x1, x2) + self.bound(ti, x1, x2)
    }

    pub fn error(&self, ti: usize, x1: usize, x2: usize) -> f64 {
        self.errors[ti][self.idx(x1, x2)]
    }

    pub fn max_error(&self) -> f64 {
        self.errors.iter().flatten().fold(0.0, |a, &b| a.max(b))
    }

    /// CSV with columns `t,x1,x2,re,im,err_est` (full kernel).
    pub fn write_csv<W: std::io::Write>(&self, out: &mut W) -> Result<()> {
        use crate::io::{fmt_f64, write_schema_line};
        write_schema_line(
            out,
            &format!("kernel-table kind={} q={}", self.spec.kind, fmt_f64(self.spec.coupling())),
        )?;
        writeln!(out, "t,x1,x2,re,im,err_est")?;
        for (ti, t) in self.times.iter().enumerate() {
            for x1 in 0..=self.xmax {
                for x2 in 0..=self.xmax {
                    let k = self.get(ti, x1, x2);
                    writeln!(
                        out,
                        "{},{},{},{},{},{}",
                        fmt_f64(*t),
                        x1,
                        x2,
                        fmt_f64(k.re),
                        fmt_f64(k.im),
                        fmt_f64(self.error(ti, x1, x2))
                    )?;
                }
            }
        }
        Ok(())
    }
}

/// Spectral weight and eigenfunction values at the nodes of one panel rule.
struct NodeData {
    rule: PanelRule,
    spectral_weight: Vec<f64>,
    /// `u_j(x)` for `x ≤ xmax`, node-major.
    amps: Vec<Vec<f64>>,
}

impl NodeData {
    fn new(kernel: &SpectralKernel, panels: Vec<(f64, f64)>, degree: usize, xmax: usize) -> Result<Self> {
        let rule = PanelRule::new(panels, degree)?;
        let data: Result<Vec<(f64, Vec<f64>)>> = rule
            .nodes
            .par_iter()
            .map(|&l| kernel.amplitudes(l, xmax))
            .collect();
        let (spectral_weight, amps) = data?.into_iter().unzip();
        Ok(NodeData {
            rule,
            spectral_weight,
            amps,
        })
    }

    /// `Σ_j ω_j(t) w_j u_j(x₁) u_j(x₂)` for all pairs, row-major.
    fn gram(&self, t: f64, xmax: usize) -> Vec<Complex64> {
        let omega = self.rule.filon_weights(t);
        let m = xmax + 1;
        let c: Vec<Complex64> = omega
            .iter()
            .zip(&self.spectral_weight)
            .map(|(o, w)| o * *w)
            .collect();
        // rows in parallel, upper triangle, then mirror
        let rows: Vec<Vec<Complex64>> = (0..m)
            .into_par_iter()
            .map(|x1| {
                let mut row = vec![Complex64::new(0.0, 0.0); m];
                for (cj, u) in c.iter().zip(&self.amps) {
                    let a = cj * u[x1];
                    for x2 in x1..m {
                        row[x2] += a * u[x2];
                    }
                }
                row
            })
            .collect();
        let mut out = vec![Complex64::new(0.0, 0.0); m * m];
        for x1 in 0..m {
            for x2 in x1..m {
                out[x1 * m + x2] = rows[x1][x2];
                out[x2 * m + x1] = rows[x1][x2];
            }
        }
        out
    }
}

/// Spectral kernel table for `x₁, x₂ ≤ xmax` at the given times.
pub fn kernel_table(
    spec: &OperatorSpec,
    times: &[f64],
    xmax: usize,
    cfg: &QuadratureConfig,
) -> Result<KernelTable> {
    cfg.validate()?;
    if times.iter().any(|t| !t.is_finite()) {
        return domain("times must be finite");
    }
    let kernel = SpectralKernel::from_spec(spec)?;
    let panels = cfg.panels(&kernel, xmax)?;
    let coarse = NodeData::new(&kernel, panels.clone(), cfg.filon_degree, xmax)?;
    let fine = NodeData::new(&kernel, panels, 2 * cfg.filon_degree, xmax)?;
    let mut continuum = Vec::with_capacity(times.len());
    let mut errors = Vec::with_capacity(times.len());
    for &t in times {
        let a = coarse.gram(t, xmax);
        let b = fine.gram(t, xmax);
        errors.push(a.iter().zip(&b).map(|(p, q)| (p - q).norm()).collect());
        continuum.push(b);
    }
    let bound = match spec.kind {
        OperatorKind::Free => None,
        OperatorKind::Perturbed => {
            let bs = bound_state_solve_len(spec.q, (xmax + 1).max(2))?;
            let v: Vec<f64> = (0..=xmax).map(|x| bs.vector.get(x).re).collect();
            Some(
                times
                    .iter()
                    .map(|&t| {
                        let phase = Complex64::from_polar(1.0, -t * bs.lambda0);
                        let mut m = Vec::with_capacity((xmax + 1) * (xmax + 1));
                        for a in &v {
                            for b in &v {
                                m.push(phase * (a * b));
                            }
                        }
                        m
                    })
                    .collect(),
            )
        }
    };
    Ok(KernelTable {
        spec: *spec,
        config: *cfg,
        xmax,
        times: times.to_vec(),
        continuum,
        bound,
        errors,
        nodes: fine.rule.len(),
    })
}

/// A kernel value with its degree-doubling error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelValue {
    pub value: Complex64,
    pub err_est: f64,
}

/// `e^{-itL₀}(x₁, x₂)`.
pub fn kernel_free(t: f64, x1: usize, x2: usize, cfg: &QuadratureConfig) -> Result<KernelValue> {
    let table = kernel_table(&OperatorSpec::free(0), &[t], x1.max(x2), cfg)?;
    Ok(KernelValue {
        value: table.get(0, x1, x2),
        err_est: table.error(0, x1, x2),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerturbedKernelValue {
    pub continuum: Complex64,
    pub bound: Complex64,
    pub err_est: f64,
}

impl PerturbedKernelValue {
    pub fn total(&self) -> Complex64 {
        self.continuum + self.bound
    }
}

/// `e^{-itL}(x₁, x₂)` split into `e^{-itL}P_e` and the bound-state part.
pub fn kernel_perturbed(
    t: f64,
    x1: usize,
    x2: usize,
    q: f64,
    cfg: &QuadratureConfig,
) -> Result<PerturbedKernelValue> {
    let table = kernel_table(&OperatorSpec::perturbed(q, 0)?, &[t], x1.max(x2), cfg)?;
    Ok(PerturbedKernelValue {
        continuum: table.continuum(0, x1, x2),
        bound: table.bound(0, x1, x2),
        err_est: table.error(0, x1, x2),
    })
}

/// `(Kv)(x₁) = Σ_{x₂} K(t,x₁,x₂)v(x₂)` using the kernel at time index `ti`.
pub fn contract(table: &KernelTable, ti: usize, v: &LatticeVector) -> Result<LatticeVector> {
    if v.len() > table.xmax + 1 {
        return Err(Error::Grid(format!(
            "vector of length {} exceeds the kernel grid (xmax = {})",
            v.len(),
            table.xmax
        )));
    }
    let out = (0..=table.xmax)
        .map(|x1| {
            (0..v.len())
                .map(|x2| table.get(ti, x1, x2) * v.get(x2))
                .sum()
        })
        .collect();
    Ok(LatticeVector::truncated(out))
}

/// `e^{-itH}v` on `x ≤ xmax` via the spectral kernel.
pub fn evolve_state(
    v: &LatticeVector,
    t: f64,
    spec: &OperatorSpec,
    xmax: usize,
    cfg: &QuadratureConfig,
) -> Result<LatticeVector> {
    if v.len() > xmax + 1 {
        return Err(Error::Grid(format!(
            "vector of length {} exceeds the output grid (xmax = {xmax})",
            v.len()
        )));
    }
    let table = kernel_table(spec, &[t], xmax, cfg)?;
    contract(&table, 0, v)
}

/// Oracle kernel from the truncated matrix, with its `N`-doubling record.
#[derive(Debug, Clone, Serialize)]
pub struct OracleKernel {
    pub times: Vec<f64>,
    pub xmax: usize,
    pub n: usize,
    /// Largest change of any entry between the last two truncation sizes.
    pub doubling_discrepancy: f64,
    /// `[t][x₁·(xmax+1) + x₂]`.
    pub values: Vec<Vec<Complex64>>,
}

impl OracleKernel {
    pub fn get(&self, ti: usize, x1: usize, x2: usize) -> Complex64 {
        self.values[ti][x1 * (self.xmax + 1) + x2]
    }
}

const ORACLE_TOL: f64 = 1e-8;
const ORACLE_N_MAX: usize = 65_536;

fn truncated_kernel(spec: &OperatorSpec, n: usize, times: &[f64], xmax: usize) -> Result<Vec<Vec<Complex64>>> {
    let t = truncated_matrix(&OperatorSpec { n, ..*spec })?;
    let data = t.spectral_heads(xmax + 1, 0.0)?;
    let m = xmax + 1;
    Ok(times
        .par_iter()
        .map(|&time| {
            let mut out = vec![Complex64::new(0.0, 0.0); m * m];
            for (mu, u) in data.values.iter().zip(&data.heads) {
                let ph = Complex64::from_polar(1.0, -time * mu);
                for x1 in 0..m {
                    let a = ph * u[x1];
                    for x2 in x1..m {
                        out[x1 * m + x2] += a * u[x2];
                    }
                }
            }
            for x1 in 0..m {
                for x2 in 0..x1 {
                    out[x1 * m + x2] = out[x2 * m + x1];
                }
            }
            out
        })
        .collect())
}

/// `e^{-itL^{(N)}}(x₁,x₂)` for `x₁, x₂ ≤ xmax`, starting at `spec.n` and
/// doubling `N` until successive results agree to 1e-8.
pub fn oracle_kernel(spec: &OperatorSpec, times: &[f64], xmax: usize) -> Result<OracleKernel> {
    let mut n = spec.n.max(2 * (xmax + 1)).max(16);
    let mut prev = truncated_kernel(spec, n, times, xmax)?;
    loop {
        let next_n = 2 * n;
        if next_n > ORACLE_N_MAX {
            return Err(Error::NotConverged(format!(
                "oracle did not settle by N = {n} for t up to {:?}",
                times.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()))
            )));
        }
        let next = truncated_kernel(spec, next_n, times, xmax)?;
        let diff = prev
            .iter()
            .flatten()
            .zip(next.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        if diff < ORACLE_TOL {
            return Ok(OracleKernel {
                times: times.to_vec(),
                xmax,
                n: next_n,
                doubling_discrepancy: diff,
                values: next,
            });
        }
        n = next_n;
        prev = next;
    }
}

/// Result of [`oracle_evolve`].
#[derive(Debug, Clone, Serialize)]
pub struct OracleState {
    pub vector: LatticeVector,
    pub n: usize,
    pub doubling_discrepancy: f64,
}

/// `e^{-itL^{(N)}}v` restricted to the support of `v` plus `extra` sites.
pub fn oracle_evolve(v: &LatticeVector, t: f64, spec: &OperatorSpec, extra: usize) -> Result<OracleState> {
    if v.is_empty() {
        return Err(Error::Grid("empty initial vector".into()));
    }
    let xmax = v.len() - 1 + extra;
    if t == 0.0 {
        return Ok(OracleState {
            vector: v.resized(xmax + 1),
            n: spec.n,
            doubling_discrepancy: 0.0,
        });
    }
    let k = oracle_kernel(spec, &[t], xmax)?;
    let out = (0..=xmax)
        .map(|x1| (0..v.len()).map(|x2| k.get(0, x1, x2) * v.get(x2)).sum())
        .collect();
    Ok(OracleState {
        vector: LatticeVector::truncated(out),
        n: k.n,
        doubling_discrepancy: k.doubling_discrepancy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn free_kernel_closed_form() {
        let cfg = QuadratureConfig::default();
        for &t in &[0.5, 1.0, 7.0, 100.0, 1e4] {
            let k = kernel_free(t, 0, 0, &cfg).unwrap();
            let want = c(1.0, 0.0) / c(1.0, t);
            assert!((k.value - want).norm() < 1e-10, "t={t} {} {want}", k.value);
            assert!(k.err_est < 1e-9);
        }
    }

    #[test]
    fn time_zero_is_identity() {
        let cfg = QuadratureConfig::default();
        let spec = OperatorSpec::free(0);
        let tab = kernel_table(&spec, &[0.0], 10, &cfg).unwrap();
        for x1 in 0..=10 {
            for x2 in 0..=10 {
                let want = if x1 == x2 { 1.0 } else { 0.0 };
                assert!((tab.get(0, x1, x2) - want).norm() < 1e-9, "{x1} {x2}");
            }
        }
        let p = OperatorSpec::perturbed(1.0, 0).unwrap();
        let tab = kernel_table(&p, &[0.0], 5, &cfg).unwrap();
        for x1 in 0..=5 {
            for x2 in 0..=5 {
                let want = if x1 == x2 { 1.0 } else { 0.0 };
                assert!((tab.get(0, x1, x2) - want).norm() < 1e-6, "{x1} {x2}");
            }
        }
    }

    #[test]
    fn time_reversal_symmetry() {
        let cfg = QuadratureConfig::default();
        for spec in [OperatorSpec::free(0), OperatorSpec::perturbed(0.5, 0).unwrap()] {
            let tab = kernel_table(&spec, &[3.0, -3.0], 6, &cfg).unwrap();
            for x1 in 0..=6 {
                for x2 in 0..=6 {
                    let a = tab.get(0, x1, x2);
                    let b = tab.get(1, x2, x1).conj();
                    assert!((a - b).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn matches_oracle_at_moderate_time() {
        let cfg = QuadratureConfig::default();
        for spec in [OperatorSpec::free(400), OperatorSpec::perturbed(1.0, 400).unwrap()] {
            let tab = kernel_table(&spec, &[5.0], 10, &cfg).unwrap();
            let orc = oracle_kernel(&spec, &[5.0], 10).unwrap();
            for x1 in 0..=10 {
                for x2 in 0..=10 {
                    let d = (tab.get(0, x1, x2) - orc.get(0, x1, x2)).norm();
                    assert!(d < 1e-6, "{:?} {x1} {x2} {d:e}", spec.kind);
                }
            }
        }
    }

    #[test]
    fn continuum_part_decays_bound_part_does_not() {
        let cfg = QuadratureConfig::default();
        let spec = OperatorSpec::perturbed(1.0, 0).unwrap();
        let tab = kernel_table(&spec, &[10.0, 100.0, 1000.0], 2, &cfg).unwrap();
        let b0 = tab.bound(0, 1, 1).norm();
        for ti in 0..3 {
            assert!((tab.bound(ti, 1, 1).norm() - b0).abs() < 1e-14);
        }
        assert!(tab.continuum(2, 1, 1).norm() < tab.continuum(0, 1, 1).norm());
    }

    #[test]
    fn oracle_basics() {
        let spec = OperatorSpec::free(200);
        let v = LatticeVector::delta(0, 1);
        let s = oracle_evolve(&v, 0.0, &spec, 3).unwrap();
        assert_eq!(s.vector.get(0), c(1.0, 0.0));
        let s = oracle_evolve(&v, 1.0, &spec, 0).unwrap();
        assert!((s.vector.get(0) - c(0.5, -0.5)).norm() < 1e-8);
        // e^{-itL₀}χ₀(x) = (it)^x/(1+it)^{x+1}; |·|² is geometric with ratio
        // t²/(1+t²), so 150 sites hold the column's unit norm to 1e-14
        let t = 2.0;
        let k = oracle_kernel(&spec, &[t], 150).unwrap();
        let norm: f64 = (0..=150).map(|x| k.get(0, x, 0).norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-10, "{norm}");
        for x in 0..=150 {
            let want = c(0.0, t).powu(x as u32) / c(1.0, t).powu(x as u32 + 1);
            assert!((k.get(0, x, 0) - want).norm() < 1e-9, "x={x}");
        }
    }

    #[test]
    fn oracle_group_property() {
        let spec = OperatorSpec::perturbed(0.5, 200).unwrap();
        let m = 80;
        let k = oracle_kernel(&spec, &[1.0, 1.5, 2.5], m).unwrap();
        // |K(t,y,x)| falls off like (t²/(1+t²))^{y/2}; the composition over
        // y ≤ 80 is complete to ~1e-14
        for x2 in 0..=3 {
            for x1 in 0..=3 {
                let composed: Complex64 = (0..=m).map(|y| k.get(1, x1, y) * k.get(0, y, x2)).sum();
                let d = (composed - k.get(2, x1, x2)).norm();
                assert!(d < 1e-8, "{x1} {x2} {d:e} n={}", k.n);
            }
        }
    }

    #[test]
    fn evolve_state_contracts_and_checks_grid() {
        let cfg = QuadratureConfig::default();
        let spec = OperatorSpec::free(0);
        let v = LatticeVector::delta(0, 1);
        let w = evolve_state(&v, 0.0, &spec, 4, &cfg).unwrap();
        assert!((w.get(0) - 1.0).norm() < 1e-9);
        assert!(evolve_state(&LatticeVector::zeros(9), 1.0, &spec, 4, &cfg).is_err());
    }

    #[test]
    fn node_count_is_independent_of_time() {
        let cfg = QuadratureConfig::default();
        let spec = OperatorSpec::free(0);
        let a = kernel_table(&spec, &[1.0], 5, &cfg).unwrap();
        let b = kernel_table(&spec, &[1000.0], 5, &cfg).unwrap();
        assert_eq!(a.nodes, b.nodes);
    }

    #[test]
    fn csv_layout() {
        let tab = kernel_table(&OperatorSpec::free(0), &[0.0, 1.0], 1, &QuadratureConfig::default())
            .unwrap();
        let mut buf = Vec::new();
        tab.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let (h, rows) = crate::io::read_csv(&text).unwrap();
        assert_eq!(h, ["t", "x1", "x2", "re", "im", "err_est"]);
        assert_eq!(rows.len(), 8);
    }
}
