//! Symmetric tridiagonal matrices: products, eigenvalues (implicit QL),
//! leading eigenvector components, and Gauss rules.
//!
//! Only the first few components of each eigenvector are ever needed, so
//! they are generated by the three-term recursion of the matrix instead of
//! accumulating rotations. This keeps the full spectral data at `O(N²)`.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    /// `off[i]` couples rows `i` and `i+1`.
    pub off: Vec<f64>,
}

/// Eigenvalues in increasing order with the leading components of the
/// corresponding unit eigenvectors, normalized so that `heads[j][0] ≥ 0`.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub values: Vec<f64>,
    pub heads: Vec<Vec<f64>>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len().max(1));
        SymTridiag { diag, off }
    }

    pub fn order(&self) -> usize {
        self.diag.len()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.order();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            m[i][i] = self.diag[i];
            if i + 1 < n {
                m[i][i + 1] = self.off[i];
                m[i + 1][i] = self.off[i];
            }
        }
        m
    }

    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.order();
        (0..n)
            .map(|i| {
                let mut acc = v[i] * self.diag[i];
                if i + 1 < n {
                    acc += v[i + 1] * self.off[i];
                }
                if i > 0 {
                    acc += v[i - 1] * self.off[i - 1];
                }
                acc
            })
            .collect()
    }

    pub fn matvec_real(&self, v: &[f64]) -> Vec<f64> {
        let n = self.order();
        (0..n)
            .map(|i| {
                let mut acc = v[i] * self.diag[i];
                if i + 1 < n {
                    acc += v[i + 1] * self.off[i];
                }
                if i > 0 {
                    acc += v[i - 1] * self.off[i - 1];
                }
                acc
            })
            .collect()
    }

    /// Gershgorin bound on the spectral radius.
    pub fn norm_bound(&self) -> f64 {
        let n = self.order();
        (0..n)
            .map(|i| {
                let mut r = self.diag[i].abs();
                if i + 1 < n {
                    r += self.off[i].abs();
                }
                if i > 0 {
                    r += self.off[i - 1].abs();
                }
                r
            })
            .fold(0.0, f64::max)
    }

    /// All eigenvalues, ascending, by the implicit QL algorithm with Wilkinson
    /// shifts.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let n = self.order();
        let mut d = self.diag.clone();
        let mut e = self.off.clone();
        e.push(0.0);
        for l in 0..n {
            let mut iter = 0;
            loop {
                let mut m = l;
                while m + 1 < n {
                    let dd = d[m].abs() + d[m + 1].abs();
                    if e[m].abs() <= f64::EPSILON * dd {
                        break;
                    }
                    m += 1;
                }
                if m == l {
                    break;
                }
                iter += 1;
                if iter > 60 {
                    return Err(Error::NotConverged(format!(
                        "QL iteration stalled at row {l} of {n}"
                    )));
                }
                let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                let mut r = g.hypot(1.0);
                g = d[m] - d[l] + e[l] / (g + r.copysign(g));
                let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
                let mut deflated = false;
                let mut i = m;
                while i > l {
                    i -= 1;
                    let f = s * e[i];
                    let b = c * e[i];
                    r = f.hypot(g);
                    e[i + 1] = r;
                    if r == 0.0 {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        deflated = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                }
                if deflated {
                    continue;
                }
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        }
        d.sort_by(|a, b| a.total_cmp(b));
        Ok(d)
    }

    /// Solves `(T - σ)x = b` by Gaussian elimination with partial pivoting.
    pub fn solve_shifted(&self, sigma: f64, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.order();
        if b.len() != n {
            return Err(Error::Grid(format!(
                "right-hand side has length {}, matrix order {n}",
                b.len()
            )));
        }
        let tiny = f64::EPSILON * self.norm_bound().max(1.0);
        // rows stored as (sub, diag, sup, sup2) after pivoting
        let mut dl: Vec<f64> = self.off.clone();
        let mut dg: Vec<f64> = self.diag.iter().map(|x| x - sigma).collect();
        let mut du: Vec<f64> = self.off.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut x = b.to_vec();
        for i in 0..n.saturating_sub(1) {
            if dg[i].abs() >= dl[i].abs() {
                if dg[i].abs() < tiny {
                    dg[i] = tiny;
                }
                let f = dl[i] / dg[i];
                dg[i + 1] -= f * du[i];
                x[i + 1] -= f * x[i];
                dl[i] = 0.0;
            } else {
                let f = dg[i] / dl[i];
                dg[i] = dl[i];
                let tmp = dg[i + 1];
                dg[i + 1] = du[i] - f * tmp;
                du[i] = tmp;
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -f * du[i + 1];
                }
                x.swap(i, i + 1);
                x[i + 1] -= f * x[i];
            }
        }
        if n > 0 && dg[n - 1].abs() < tiny {
            dg[n - 1] = tiny;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            if i + 1 < n {
                acc -= du[i] * x[i + 1];
            }
            if i + 2 < n {
                acc -= du2[i] * x[i + 2];
            }
            x[i] = acc / dg[i];
        }
        Ok(x)
    }

    /// Unit eigenvector for the eigenvalue closest to `sigma` by inverse
    /// iteration; returns the vector and its residual `‖(T-σ')u‖` at the
    /// Rayleigh quotient `σ'`.
    pub fn inverse_iteration(&self, sigma: f64) -> Result<(Vec<f64>, f64, f64)> {
        let n = self.order();
        let mut u: Vec<f64> = (0..n).map(|i| 1.0 / (1.0 + i as f64)).collect();
        normalize(&mut u);
        let mut rayleigh = sigma;
        let mut resid = f64::INFINITY;
        for _ in 0..8 {
            let mut v = self.solve_shifted(sigma, &u)?;
            normalize(&mut v);
            let tv = self.matvec_real(&v);
            rayleigh = v.iter().zip(&tv).map(|(a, b)| a * b).sum();
            let r: f64 = tv
                .iter()
                .zip(&v)
                .map(|(t, a)| (t - rayleigh * a).powi(2))
                .sum::<f64>()
                .sqrt();
            u = v;
            if r >= resid * 0.5 {
                resid = resid.min(r);
                break;
            }
            resid = r;
        }
        if u[0] < 0.0 {
            u.iter_mut().for_each(|a| *a = -*a);
        }
        Ok((u, rayleigh, resid))
    }

    /// Eigenvalues and the first `m` components of every unit eigenvector.
    ///
    /// Components come from the forward three-term recursion seeded with
    /// `u(0) = 1`, which is stable for eigenvectors that do not decay from the
    /// origin. Eigenvectors below `recursion_floor` (bound states) are
    /// computed by inverse iteration instead.
    pub fn spectral_heads(&self, m: usize, recursion_floor: f64) -> Result<SpectralData> {
        if self.off.iter().any(|&b| b == 0.0) {
            return Err(Error::Invalid(
                "recursion needs a nonzero off-diagonal".into(),
            ));
        }
        let values = self.eigenvalues()?;
        let m = m.min(self.order());
        let heads = values
            .iter()
            .map(|&lam| {
                if lam < recursion_floor {
                    let (u, _, _) = self.inverse_iteration(lam)?;
                    Ok(u[..m].to_vec())
                } else {
                    Ok(self.recursion_head(lam, m))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SpectralData { values, heads })
    }

    fn recursion_head(&self, lam: f64, m: usize) -> Vec<f64> {
        let n = self.order();
        let mut head = Vec::with_capacity(m);
        let (mut prev, mut cur) = (0.0f64, 1.0f64);
        let mut ssq = 0.0f64;
        for x in 0..n {
            if x < m {
                head.push(cur);
            }
            ssq += cur * cur;
            if x + 1 == n {
                break;
            }
            let lower = if x > 0 { self.off[x - 1] * prev } else { 0.0 };
            let next = ((lam - self.diag[x]) * cur - lower) / self.off[x];
            prev = cur;
            cur = next;
            if cur.abs() > 1e150 {
                // rescale everything accumulated so far
                let s = 1e-150;
                prev *= s;
                cur *= s;
                ssq *= s * s;
                head.iter_mut().for_each(|h| *h *= s);
            }
        }
        let norm = ssq.sqrt();
        head.iter_mut().for_each(|h| *h /= norm);
        head
    }
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    v.iter_mut().for_each(|a| *a /= n);
}

/// `n`-point Gauss rule for the weight `e^{-λ}` on `[0, ∞)`, from the
/// Jacobi matrix of the Laguerre recursion.
pub fn gauss_laguerre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n < 2 {
        return Err(Error::Invalid(format!("Gauss-Laguerre needs n >= 2, got {n}")));
    }
    let diag = (0..n).map(|x| 2.0 * x as f64 + 1.0).collect();
    let off = (0..n - 1).map(|x| -(x as f64 + 1.0)).collect();
    let spec = SymTridiag::new(diag, off).spectral_heads(1, f64::NEG_INFINITY)?;
    let weights = spec.heads.iter().map(|h| h[0] * h[0]).collect();
    Ok((spec.values, weights))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn laguerre_matrix(n: usize, q: f64) -> SymTridiag {
        let mut diag: Vec<f64> = (0..n).map(|x| 2.0 * x as f64 + 1.0).collect();
        diag[0] -= q;
        SymTridiag::new(diag, (0..n - 1).map(|x| -(x as f64 + 1.0)).collect())
    }

    fn dense_eigen(t: &SymTridiag) -> (Vec<f64>, DMatrix<f64>) {
        let n = t.order();
        let d = t.to_dense();
        let m = DMatrix::from_fn(n, n, |i, j| d[i][j]);
        let eig = m.symmetric_eigen();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vecs = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, idx[c])]);
        (vals, vecs)
    }

    #[test]
    fn eigenvalues_match_dense_solver() {
        for &(n, q) in &[(5, 0.0), (40, 0.0), (60, 1.0), (80, 0.5)] {
            let t = laguerre_matrix(n, q);
            let ours = t.eigenvalues().unwrap();
            let (theirs, _) = dense_eigen(&t);
            for (a, b) in ours.iter().zip(&theirs) {
                assert!((a - b).abs() < 1e-11 * (4.0 * n as f64), "n={n} {a} {b}");
            }
        }
    }

    #[test]
    fn heads_match_dense_eigenvectors() {
        for &(n, q) in &[(30, 0.0), (60, 1.0), (60, 2.0)] {
            let t = laguerre_matrix(n, q);
            let ours = t.spectral_heads(6, 0.0).unwrap();
            let (_, vecs) = dense_eigen(&t);
            for j in 0..n {
                let sign = if vecs[(0, j)] < 0.0 { -1.0 } else { 1.0 };
                for x in 0..6 {
                    let a = ours.heads[j][x];
                    let b = sign * vecs[(x, j)];
                    assert!((a - b).abs() < 1e-10, "n={n} q={q} j={j} x={x} {a} {b}");
                }
            }
        }
    }

    #[test]
    fn shifted_solve_inverts() {
        let t = laguerre_matrix(25, 1.0);
        let b: Vec<f64> = (0..25).map(|i| (i as f64 * 0.37).sin()).collect();
        let x = t.solve_shifted(-0.3, &b).unwrap();
        let tx = t.matvec_real(&x);
        for i in 0..25 {
            assert!((tx[i] + 0.3 * x[i] - b[i]).abs() < 1e-11);
        }
    }

    #[test]
    fn gauss_laguerre_integrates_monomials() {
        let (nodes, weights) = gauss_laguerre(20).unwrap();
        // ∫ λ^k e^{-λ} = k!, exact up to degree 39
        let mut fact = 1.0f64;
        for k in 0..30 {
            if k > 0 {
                fact *= k as f64;
            }
            let s: f64 = nodes
                .iter()
                .zip(&weights)
                .map(|(x, w)| w * x.powi(k))
                .sum();
            assert!((s / fact - 1.0).abs() < 1e-11, "k={k} {s} {fact}");
        }
    }
}
