//! Small dense Hermitian eigenproblems.
//!
//! A Hermitian `A = R + iJ` is embedded as the real symmetric
//! `[[R, -J], [J, R]]`, diagonalised by cyclic Jacobi rotations. Every
//! eigenvalue of `A` appears twice in the embedding, and an embedded
//! eigenvector `[u; v]` maps back to `u + iv`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    pub dim: usize,
    pub data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        CMatrix {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(dim);
        for r in 0..dim {
            for c in 0..dim {
                m.data[r * dim + c] = f(r, c);
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.dim + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.dim + c] = v;
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        CMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Largest `|A - A†|` entry.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.dim {
            for c in 0..self.dim {
                worst = worst.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        worst
    }
}

/// Eigen-decomposition `A V = V Λ` of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `j` is the eigenvector of `values[j]`.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    /// `‖A V - V Λ‖_F`.
    pub fn residual(&self, a: &CMatrix) -> f64 {
        let n = a.dim;
        let mut sum = 0.0;
        for r in 0..n {
            for j in 0..n {
                let mut av = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    av += a.get(r, k) * self.vectors.get(k, j);
                }
                sum += (av - self.vectors.get(r, j) * self.values[j]).norm_sqr();
            }
        }
        sum.sqrt()
    }
}

const MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi on a real symmetric matrix (row-major). Returns eigenvalues
/// and the column eigenvector matrix.
pub fn jacobi_symmetric(mut a: Vec<f64>, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let off = |a: &[f64]| {
        let mut s = 0.0;
        for r in 0..n {
            for c in 0..n {
                if r != c {
                    s += a[r * n + c] * a[r * n + c];
                }
            }
        }
        s.sqrt()
    };
    let target = 1e-15 * scale.max(f64::MIN_POSITIVE);
    for _ in 0..MAX_SWEEPS {
        if off(&a) <= target {
            let values = (0..n).map(|i| a[i * n + i]).collect();
            return Ok((values, v));
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let tau = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let t = if tau == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    Err(Error::EigenNonConvergence {
        sweeps: MAX_SWEEPS,
        residual: off(&a),
    })
}

/// Full eigen-decomposition of a Hermitian matrix.
pub fn hermitian_eigen(a: &CMatrix) -> Result<HermitianEigen> {
    let n = a.dim;
    let m = 2 * n;
    let mut emb = vec![0.0; m * m];
    for r in 0..n {
        for c in 0..n {
            // symmetrise so round-off asymmetry cannot stall the sweeps
            let z = 0.5 * (a.get(r, c) + a.get(c, r).conj());
            emb[r * m + c] = z.re;
            emb[(r + n) * m + (c + n)] = z.re;
            emb[r * m + (c + n)] = -z.im;
            emb[(r + n) * m + c] = z.im;
        }
    }
    let (vals, vecs) = jacobi_symmetric(emb, m)?;
    let candidates: Vec<(f64, Vec<Complex64>)> = (0..m)
        .map(|j| {
            let col = (0..n)
                .map(|r| Complex64::new(vecs[r * m + j], vecs[(r + n) * m + j]))
                .collect();
            (vals[j], col)
        })
        .collect();
    // pivoted Gram-Schmidt picks one complex vector from each embedded pair
    let mut chosen: Vec<(f64, Vec<Complex64>)> = Vec::with_capacity(n);
    let mut used = vec![false; m];
    for _ in 0..n {
        let mut best: Option<(usize, f64, Vec<Complex64>)> = None;
        for (j, (_, cand)) in candidates.iter().enumerate() {
            if used[j] {
                continue;
            }
            let mut w = cand.clone();
            for (_, q) in &chosen {
                let proj: Complex64 = q.iter().zip(&w).map(|(qi, wi)| qi.conj() * wi).sum();
                w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= proj * qi);
            }
            let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if best.as_ref().is_none_or(|b| norm > b.1) {
                best = Some((j, norm, w));
            }
        }
        let (j, norm, mut w) = best.expect("candidate pool never empties before n picks");
        used[j] = true;
        w.iter_mut().for_each(|z| *z /= norm);
        chosen.push((candidates[j].0, w));
    }
    chosen.sort_by(|x, y| x.0.total_cmp(&y.0));
    let values: Vec<f64> = chosen.iter().map(|c| c.0).collect();
    let vectors = CMatrix::from_fn(n, |r, c| chosen[c].1[r]);
    Ok(HermitianEigen { values, vectors })
}

/// Eigenvalues only, ascending.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Result<Vec<f64>> {
    Ok(hermitian_eigen(a)?.values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
        let mut m = CMatrix::zeros(n);
        for r in 0..n {
            m.set(r, r, c(rng.random_range(-1.0..1.0), 0.0));
            for k in r + 1..n {
                let z = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                m.set(r, k, z);
                m.set(k, r, z.conj());
            }
        }
        m
    }

    #[test]
    fn diagonal_matrix() {
        let m = CMatrix::from_fn(3, |r, k| {
            if r == k {
                c([3.0, -1.0, 0.5][r], 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let e = hermitian_eigen(&m).unwrap();
        assert_eq!(e.values, vec![-1.0, 0.5, 3.0]);
    }

    #[test]
    fn pauli_y() {
        let m = CMatrix::from_fn(2, |r, k| match (r, k) {
            (0, 1) => c(0.0, -1.0),
            (1, 0) => c(0.0, 1.0),
            _ => c(0.0, 0.0),
        });
        let e = hermitian_eigen(&m).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
        assert!(e.residual(&m) < 1e-13);
    }

    #[test]
    fn random_residuals_and_orthonormality() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=11 {
            let m = random_hermitian(&mut rng, n);
            let e = hermitian_eigen(&m).unwrap();
            assert!(e.residual(&m) <= 1e-10 * m.frobenius().max(1.0), "n={n}");
            for i in 0..n {
                for j in 0..n {
                    let dot: Complex64 = (0..n)
                        .map(|r| e.vectors.get(r, i).conj() * e.vectors.get(r, j))
                        .sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((dot - want).norm() < 1e-10);
                }
            }
            let tr: f64 = e.values.iter().sum();
            assert!((tr - m.trace().re).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_spectrum() {
        let m = CMatrix::from_fn(4, |r, k| if r == k { c(2.0, 0.0) } else { c(0.0, 0.0) });
        let e = hermitian_eigen(&m).unwrap();
        assert!(e.values.iter().all(|v| (v - 2.0).abs() < 1e-15));
        assert!(e.residual(&m) < 1e-14);
    }
}
