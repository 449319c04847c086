//! Lattice vectors on ℤ₊, the operators `L₀` and `L = L₀ - qP₀`, weights and
//! the binomial transform.
//!
//! `L₀v(x) = -(x+1)v(x+1) + (2x+1)v(x) - x v(x-1)` with boundary row
//! `v(0) - v(1)`. Vectors of length `N+1` are acted on with Dirichlet
//! truncation: the `-(N+1)v(N+1)` term is dropped.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dd::{Dd, DdComplex};
use crate::error::{domain, Error, Result};
use crate::tridiag::SymTridiag;

/// A complex sequence indexed by `x = 0..len`.
///
/// `finite` declares that the sequence vanishes beyond the stored values; a
/// vector without that flag is a truncation of a longer sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeVector {
    values: Vec<Complex64>,
    finite: bool,
}

impl LatticeVector {
    pub fn new(values: Vec<Complex64>, finite: bool) -> Self {
        LatticeVector { values, finite }
    }

    /// A finitely supported vector.
    pub fn finite(values: Vec<Complex64>) -> Self {
        Self::new(values, true)
    }

    /// A truncation of a sequence that continues past the stored range.
    pub fn truncated(values: Vec<Complex64>) -> Self {
        Self::new(values, false)
    }

    pub fn from_real(values: &[f64], finite: bool) -> Self {
        Self::new(
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            finite,
        )
    }

    pub fn zeros(len: usize) -> Self {
        Self::finite(vec![Complex64::new(0.0, 0.0); len])
    }

    /// Unit vector `χ_x` stored with length `len`.
    pub fn delta(x: usize, len: usize) -> Self {
        let mut v = Self::zeros(len.max(x + 1));
        v.values[x] = Complex64::new(1.0, 0.0);
        v
    }

    /// The all-ones sequence truncated to `len` entries.
    pub fn ones(len: usize) -> Self {
        Self::truncated(vec![Complex64::new(1.0, 0.0); len])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite_support(&self) -> bool {
        self.finite
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn get(&self, x: usize) -> Complex64 {
        self.values.get(x).copied().unwrap_or_default()
    }

    /// Largest index carrying a nonzero value (`x_v`), `None` for the zero
    /// vector.
    pub fn support_hint(&self) -> Option<usize> {
        self.values.iter().rposition(|v| *v != Complex64::new(0.0, 0.0))
    }

    /// Copy extended with zeros (or cut) to `len` entries.
    pub fn resized(&self, len: usize) -> Self {
        let mut values = self.values.clone();
        values.resize(len, Complex64::new(0.0, 0.0));
        Self::new(values, self.finite)
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self::new(self.values.iter().map(|v| v * s).collect(), self.finite)
    }

    /// Euclidean inner product `(u, v) = Σ conj(u) v`.
    pub fn dot(&self, other: &LatticeVector) -> Complex64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

impl Serialize for LatticeVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.values.iter().map(|v| [v.re, v.im]).collect();
        pairs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LatticeVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(LatticeVector::finite(
            pairs.into_iter().map(|[re, im]| Complex64::new(re, im)).collect(),
        ))
    }
}

/// The weight `W_{κ,τ}v(x) = (x+κ)^τ v(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub kappa: f64,
    pub tau: f64,
}

impl WeightSpec {
    pub fn new(kappa: f64, tau: f64) -> Result<Self> {
        if !(kappa > 1.0 && kappa.is_finite()) {
            return domain(format!("kappa must exceed 1, got {kappa}"));
        }
        if !tau.is_finite() {
            return domain(format!("tau must be finite, got {tau}"));
        }
        Ok(WeightSpec { kappa, tau })
    }

    pub fn at(&self, x: usize) -> f64 {
        (x as f64 + self.kappa).powf(self.tau)
    }
}

impl Default for WeightSpec {
    fn default() -> Self {
        WeightSpec {
            kappa: 4.0,
            tau: -3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    Free,
    Perturbed,
}

impl std::fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OperatorKind::Free => f.write_str("free"),
            OperatorKind::Perturbed => f.write_str("perturbed"),
        }
    }
}

/// Operator kind, coupling and truncation size `N` (matrix order `N+1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    pub kind: OperatorKind,
    pub q: f64,
    pub n: usize,
}

impl OperatorSpec {
    pub fn free(n: usize) -> Self {
        OperatorSpec {
            kind: OperatorKind::Free,
            q: 0.0,
            n,
        }
    }

    pub fn perturbed(q: f64, n: usize) -> Result<Self> {
        if !(q > 0.0 && q.is_finite()) {
            return domain(format!("coupling q must be positive, got {q}"));
        }
        Ok(OperatorSpec {
            kind: OperatorKind::Perturbed,
            q,
            n,
        })
    }

    /// Coupling actually applied at the origin (zero for the free operator).
    pub fn coupling(&self) -> f64 {
        match self.kind {
            OperatorKind::Free => 0.0,
            OperatorKind::Perturbed => self.q,
        }
    }
}

fn stencil(v: &[Complex64], q: f64) -> Vec<Complex64> {
    let n = v.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for x in 0..n {
        let xf = x as f64;
        let mut acc = v[x] * (2.0 * xf + 1.0);
        if x + 1 < n {
            acc -= v[x + 1] * (xf + 1.0);
        }
        if x > 0 {
            acc -= v[x - 1] * xf;
        }
        out[x] = acc;
    }
    if n > 0 {
        out[0] -= v[0] * q;
    }
    out
}

/// `L₀v` on the stored range (Dirichlet truncation at the last index).
pub fn apply_l0(v: &LatticeVector) -> LatticeVector {
    LatticeVector::new(stencil(&v.values, 0.0), v.finite)
}

/// `Lv = L₀v - q v(0) χ₀`.
pub fn apply_l(v: &LatticeVector, q: f64) -> Result<LatticeVector> {
    if !(q > 0.0) {
        return domain(format!("coupling q must be positive, got {q}"));
    }
    Ok(LatticeVector::new(stencil(&v.values, q), v.finite))
}

/// `L₀v` or `Lv` according to `spec` (its `n` is ignored).
pub fn apply_operator(v: &LatticeVector, spec: &OperatorSpec) -> LatticeVector {
    LatticeVector::new(stencil(&v.values, spec.coupling()), v.finite)
}

/// `Tv(k) = Σ_x (-1)^x C(k,x) v(x)` for `k = 0..=k_out`.
///
/// Only `x ≤ k` contribute, so the sum is finite; values of `v` past its
/// stored range are needed only when `k_out` exceeds it, which requires the
/// vector to be declared finitely supported. Binomials are exact (Pascal
/// rows in double-double) and the alternating sum is accumulated in
/// double-double, then rounded once.
pub fn binomial_transform(v: &LatticeVector, k_out: usize) -> Result<LatticeVector> {
    if k_out >= v.len() && !v.finite {
        return Err(Error::Invalid(format!(
            "transform up to k = {k_out} needs values past index {} of a \
             vector that is not finitely supported",
            v.len().saturating_sub(1)
        )));
    }
    let wide: Vec<DdComplex> = v.values.iter().map(|&z| DdComplex::from(z)).collect();
    let out = binomial_transform_wide(&wide, k_out);
    Ok(LatticeVector::finite(out.into_iter().map(DdComplex::to_c64).collect()))
}

/// The binomial transform on double-double data (finitely supported input).
///
/// Rounding `Tv` to double before transforming back costs up to
/// `ε·3^K·max|v|` in `T²v` on `0..=K`; keeping the intermediate sequence in
/// double-double makes the round trip accurate far beyond that.
pub fn binomial_transform_wide(v: &[DdComplex], k_out: usize) -> Vec<DdComplex> {
    let mut out = Vec::with_capacity(k_out + 1);
    let mut row = vec![Dd::ONE];
    for k in 0..=k_out {
        if k > 0 {
            let mut next = Vec::with_capacity(k + 1);
            next.push(Dd::ONE);
            for j in 1..k {
                next.push(row[j - 1] + row[j]);
            }
            next.push(Dd::ONE);
            row = next;
        }
        let mut acc = DdComplex::ZERO;
        for (x, c) in row.iter().enumerate().take(v.len()) {
            let term = v[x].scale(*c);
            acc = if x % 2 == 0 { acc + term } else { acc - term };
        }
        out.push(acc);
    }
    out
}

/// Exact binomial transform of an integer vector. Fails on `i128` overflow.
pub fn binomial_transform_exact(v: &[i64], k_out: usize) -> Result<Vec<i128>> {
    let overflow = || Error::Invalid("integer overflow in exact binomial transform".into());
    let mut out = Vec::with_capacity(k_out + 1);
    let mut row: Vec<i128> = vec![1];
    for k in 0..=k_out {
        if k > 0 {
            let mut next = vec![1i128; k + 1];
            for j in 1..k {
                next[j] = row[j - 1].checked_add(row[j]).ok_or_else(overflow)?;
            }
            row = next;
        }
        let mut acc: i128 = 0;
        for (x, &c) in row.iter().enumerate().take(v.len()) {
            let term = c.checked_mul(v[x] as i128).ok_or_else(overflow)?;
            acc = if x % 2 == 0 {
                acc.checked_add(term)
            } else {
                acc.checked_sub(term)
            }
            .ok_or_else(overflow)?;
        }
        out.push(acc);
    }
    Ok(out)
}

/// `W_{κ,τ}v`.
pub fn apply_weight(v: &LatticeVector, w: &WeightSpec) -> LatticeVector {
    LatticeVector::new(
        v.values
            .iter()
            .enumerate()
            .map(|(x, val)| val * w.at(x))
            .collect(),
        v.finite,
    )
}

/// Dirichlet truncation of `L₀` or `L` to sites `0..=N`.
pub fn truncated_matrix(spec: &OperatorSpec) -> Result<SymTridiag> {
    if spec.n < 2 {
        return domain(format!("truncation needs N >= 2, got {}", spec.n));
    }
    if spec.kind == OperatorKind::Perturbed && !(spec.q > 0.0) {
        return domain(format!("coupling q must be positive, got {}", spec.q));
    }
    let m = spec.n + 1;
    let mut diag: Vec<f64> = (0..m).map(|x| 2.0 * x as f64 + 1.0).collect();
    diag[0] -= spec.coupling();
    let off = (0..m - 1).map(|x| -(x as f64 + 1.0)).collect();
    Ok(SymTridiag::new(diag, off))
}

/// `(ℓ¹, ℓ², sup)` norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Norms {
    pub l1: f64,
    pub l2: f64,
    pub sup: f64,
}

pub fn norms(v: &LatticeVector) -> Norms {
    let mut l1 = 0.0;
    let mut sup: f64 = 0.0;
    let mut scale = 0.0f64;
    let mut ssq = 1.0f64;
    for z in &v.values {
        let a = z.norm();
        l1 += a;
        sup = sup.max(a);
        // scaled sum of squares, as in LAPACK's nrm2
        if a > 0.0 {
            if scale < a {
                ssq = 1.0 + ssq * (scale / a).powi(2);
                scale = a;
            } else {
                ssq += (a / scale).powi(2);
            }
        }
    }
    Norms {
        l1,
        l2: scale * ssq.sqrt(),
        sup,
    }
}

/// One row of the power-bound comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerBound {
    pub k: usize,
    pub norm: f64,
    pub bound: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemiAnalyticReport {
    pub support: usize,
    pub l1: f64,
    pub rows: Vec<PowerBound>,
}

impl SemiAnalyticReport {
    pub fn holds(&self) -> bool {
        self.rows.iter().all(|r| r.ratio <= 1.0)
    }
}

/// Compares `‖L₀ᵏv‖₂` against `4ᵏ (k+x_v)!/x_v! ‖v‖₁` for `k = 1..=kmax`.
///
/// `L₀ᵏv` is supported in `0..=x_v+k`, so it is computed exactly on a
/// window of that length (no truncation effect).
pub fn semi_analytic_bound_report(v: &LatticeVector, kmax: usize) -> Result<SemiAnalyticReport> {
    if !v.finite {
        return Err(Error::Invalid(
            "power bound needs a finitely supported vector".into(),
        ));
    }
    let xv = v
        .support_hint()
        .ok_or_else(|| Error::Invalid("power bound of the zero vector".into()))?;
    let l1 = norms(v).l1;
    let mut cur = v.resized(xv + kmax + 2);
    let mut rows = Vec::with_capacity(kmax);
    // running (k + x_v)!/x_v!
    let mut falling = 1.0f64;
    for k in 1..=kmax {
        cur = apply_l0(&cur);
        falling *= (k + xv) as f64;
        let norm = norms(&cur).l2;
        let bound = 4f64.powi(k as i32) * falling * l1;
        rows.push(PowerBound {
            k,
            norm,
            bound,
            ratio: norm / bound,
        });
    }
    Ok(SemiAnalyticReport {
        support: xv,
        l1,
        rows,
    })
}

/// Builds a real-valued finitely supported vector from integer entries.
pub fn from_integers(v: &[i64]) -> LatticeVector {
    LatticeVector::finite(v.iter().map(|&a| Complex64::new(a as f64, 0.0)).collect())
}

/// `count` finitely supported vectors with support length in `1..=max_support`
/// and entries uniform in `[-1, 1]`, reproducible from `seed`.
pub fn random_finite_vectors(count: usize, max_support: usize, seed: u64) -> Vec<LatticeVector> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let len = rng.random_range(1..=max_support.max(1));
            let v: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..=1.0)).collect();
            LatticeVector::from_real(&v, true)
        })
        .collect()
}
