//! Small dense complex linear algebra.
//!
//! Everything here works on square matrices of a handful of rows (two-qubit
//! states are 4×4). The routines favour accuracy and determinism over speed:
//! cyclic Jacobi for Hermitian spectra, LU with partial pivoting for
//! determinants and Householder QR for unitary extraction.

use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance on `max |m - m†|` accepted as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Smallest `|r_jj|` accepted by [`unitary_from_qr`].
pub const RANK_TOL: f64 = 1e-14;

const MAX_SWEEPS: usize = 64;

/// Square complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major entries. Fails unless `entries.len()`
    /// is a perfect square.
    pub fn from_entries(entries: Vec<Complex64>) -> Result<Self> {
        let dim = (entries.len() as f64).sqrt().round() as usize;
        if dim == 0 || dim * dim != entries.len() {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Ok(Self { dim, entries })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                entries.push(f(i, j));
            }
        }
        Self { dim, entries }
    }

    /// Outer product `|v⟩⟨v|`.
    pub fn outer(v: &[Complex64]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j].conj())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch in add");
        Self {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// `self * other†`, skipping the explicit adjoint.
    pub fn mul_adjoint(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch in mul_adjoint");
        let n = self.dim;
        Self::from_fn(n, |i, j| {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..n {
                acc += self[(i, k)] * other[(j, k)].conj();
            }
            acc
        })
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (n, m) = (self.dim, other.dim);
        Self::from_fn(n * m, |i, j| self[(i / m, j / m)] * other[(i % m, j % m)])
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch in max_abs_diff");
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |m - m†|` over all entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn max_imag(&self) -> f64 {
        self.entries.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.dim).map(|i| self[(i, j)]).collect()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.entries[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.entries[i * self.dim + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in mul");
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                for j in 0..n {
                    out.entries[i * n + j] += a * rhs.entries[k * n + j];
                }
            }
        }
        out
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Spectrum of a Hermitian matrix, eigenvalues descending, eigenvectors as
/// the columns of `unitary`.
#[derive(Clone, Debug)]
pub struct Eigensystem {
    pub eigenvalues: Vec<f64>,
    pub unitary: ComplexMatrix,
}

impl Eigensystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `U diag(λ) U†`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.dim();
        let u = &self.unitary;
        ComplexMatrix::from_fn(n, |i, j| {
            (0..n)
                .map(|k| u[(i, k)] * self.eigenvalues[k] * u[(j, k)].conj())
                .sum()
        })
    }
}

/// Rotates each column so that its entry of largest modulus is real and
/// nonnegative. Ties go to the lowest row index. Idempotent.
pub fn normalize_column_phases(u: &mut ComplexMatrix) {
    let n = u.dim();
    for j in 0..n {
        let mut pivot = 0;
        let mut best = -1.0;
        for i in 0..n {
            let m = u[(i, j)].norm_sqr();
            if m > best {
                best = m;
                pivot = i;
            }
        }
        let p = u[(pivot, j)];
        let modulus = p.norm();
        if modulus == 0.0 {
            continue;
        }
        let phase = p.conj() / modulus;
        for i in 0..n {
            u[(i, j)] *= phase;
        }
        u[(pivot, j)] = Complex64::new(modulus, 0.0);
    }
}

/// Sum of squared moduli strictly above the diagonal.
fn off_diagonal_sq(a: &ComplexMatrix) -> f64 {
    let n = a.dim();
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            s += a[(i, j)].norm_sqr();
        }
    }
    s
}

/// Cyclic complex Jacobi. Returns the diagonalized matrix's diagonal and,
/// when requested, the accumulated eigenvector matrix (unsorted).
fn jacobi(m: &ComplexMatrix, want_vectors: bool) -> Result<(Vec<f64>, Option<ComplexMatrix>)> {
    let n = m.dim();
    let mut a = m.clone();
    // Symmetrize exactly so that the rotations act on a true Hermitian matrix.
    for i in 0..n {
        a[(i, i)] = Complex64::new(a[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let z = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = z;
            a[(j, i)] = z.conj();
        }
    }
    let mut v = want_vectors.then(|| ComplexMatrix::identity(n));

    let scale: f64 = a.entries.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let target = scale * 1e-30;
    let negligible = scale * 1e-36;

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        if off_diagonal_sq(&a) <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.norm_sqr() <= negligible {
                    continue;
                }
                let r = apq.norm();
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // e^{-iφ} where a_pq = r e^{iφ}
                let w = apq.conj() / r;
                let theta = (aqq - app) / (2.0 * r);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                // Columns: A <- A G with G_pp = c, G_pq = s, G_qp = -s w, G_qq = c w.
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c - akq * w * s;
                    a[(k, q)] = akp * s + akq * w * c;
                }
                // Rows: A <- G† A.
                let wc = w.conj();
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c - aqk * wc * s;
                    a[(q, k)] = apk * s + aqk * wc * c;
                }
                a[(p, p)] = Complex64::new(app - t * r, 0.0);
                a[(q, q)] = Complex64::new(aqq + t * r, 0.0);
                a[(p, q)] = Complex64::new(0.0, 0.0);
                a[(q, p)] = Complex64::new(0.0, 0.0);

                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = vkp * c - vkq * w * s;
                        v[(k, q)] = vkp * s + vkq * w * c;
                    }
                }
            }
        }
    }
    if !converged && off_diagonal_sq(&a) > target {
        return Err(Error::ConvergenceFailure { sweeps: MAX_SWEEPS });
    }
    let diag = (0..n).map(|i| a[(i, i)].re).collect();
    Ok((diag, v))
}

fn check_hermitian(m: &ComplexMatrix) -> Result<()> {
    let defect = m.hermiticity_defect();
    if defect > HERMITIAN_TOL || defect.is_nan() {
        return Err(Error::NotHermitian { defect });
    }
    Ok(())
}

/// Descending order; the sort is stable so exact ties keep solver order.
fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    order
}

/// Full eigendecomposition of a Hermitian matrix with eigenvalues sorted
/// descending and eigenvector phases fixed by [`normalize_column_phases`].
pub fn hermitian_eigensystem(m: &ComplexMatrix) -> Result<Eigensystem> {
    check_hermitian(m)?;
    let (diag, v) = jacobi(m, true)?;
    let v = v.expect("vectors requested");
    let order = descending_order(&diag);
    let n = m.dim();
    let eigenvalues = order.iter().map(|&k| diag[k]).collect();
    let mut unitary = ComplexMatrix::from_fn(n, |i, j| v[(i, order[j])]);
    normalize_column_phases(&mut unitary);
    Ok(Eigensystem {
        eigenvalues,
        unitary,
    })
}

/// Eigenvalues only, descending.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    check_hermitian(m)?;
    let (mut diag, _) = jacobi(m, false)?;
    diag.sort_by(|a, b| b.total_cmp(a));
    Ok(diag)
}

/// Determinant by LU factorization with partial pivoting.
pub fn determinant(m: &ComplexMatrix) -> Complex64 {
    let n = m.dim();
    let mut a = m.clone();
    let mut det = Complex64::new(1.0, 0.0);
    for k in 0..n {
        let mut pivot = k;
        let mut best = a[(k, k)].norm();
        for i in (k + 1)..n {
            let v = a[(i, k)].norm();
            if v > best {
                best = v;
                pivot = i;
            }
        }
        if best == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if pivot != k {
            for j in 0..n {
                a.entries.swap(k * n + j, pivot * n + j);
            }
            det = -det;
        }
        let akk = a[(k, k)];
        det *= akk;
        for i in (k + 1)..n {
            let factor = a[(i, k)] / akk;
            if factor == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in (k + 1)..n {
                let akj = a[(k, j)];
                a[(i, j)] -= factor * akj;
            }
        }
    }
    det
}

/// The Q factor of `m = QR`, normalized so that `R` has a real positive
/// diagonal. For Ginibre input the result is Haar distributed on U(n).
pub fn unitary_from_qr(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = m.dim();
    let mut r = m.clone();
    let mut q = ComplexMatrix::identity(n);

    // Householder reflections H_k = I - 2 v v† / (v† v), accumulated into Q.
    for k in 0..n.saturating_sub(1) {
        let norm_x: f64 = (k..n).map(|i| r[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if norm_x == 0.0 {
            continue;
        }
        let x0 = r[(k, k)];
        let phase = if x0.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        let mut v: Vec<Complex64> = (k..n).map(|i| r[(i, k)]).collect();
        v[0] += phase * norm_x;
        let vnorm_sq: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm_sq == 0.0 {
            continue;
        }
        // R <- H R
        for j in 0..n {
            let dot: Complex64 = v
                .iter()
                .enumerate()
                .map(|(t, vi)| vi.conj() * r[(k + t, j)])
                .sum();
            let f = dot * (2.0 / vnorm_sq);
            for (t, vi) in v.iter().enumerate() {
                r[(k + t, j)] -= vi * f;
            }
        }
        // Q <- Q H
        for i in 0..n {
            let dot: Complex64 = v.iter().enumerate().map(|(t, vi)| q[(i, k + t)] * vi).sum();
            let f = dot * (2.0 / vnorm_sq);
            for (t, vi) in v.iter().enumerate() {
                q[(i, k + t)] -= f * vi.conj();
            }
        }
    }

    // Absorb the phases of diag(R) into the columns of Q.
    for j in 0..n {
        let rjj = r[(j, j)];
        let modulus = rjj.norm();
        if modulus < RANK_TOL {
            return Err(Error::RankDeficient {
                column: j,
                magnitude: modulus,
            });
        }
        let phase = rjj / modulus;
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn bell_phi_plus() -> ComplexMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        ComplexMatrix::outer(&[c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)])
    }

    fn sample_hermitian(seed: u64) -> ComplexMatrix {
        // xorshift so these tests do not depend on the ensemble module
        let mut x = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
        let mut next = || {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let a = ComplexMatrix::from_fn(4, |_, _| c(next(), next()));
        a.add(&a.adjoint())
    }

    #[test]
    fn identity_spectrum() {
        let es = hermitian_eigensystem(&ComplexMatrix::identity(4)).unwrap();
        assert_eq!(es.eigenvalues, vec![1.0; 4]);
        let uu = es.unitary.mul_adjoint(&es.unitary);
        assert!(uu.max_abs_diff(&ComplexMatrix::identity(4)) < 1e-12);
    }

    #[test]
    fn diagonal_input_keeps_identity_unitary() {
        let m = ComplexMatrix::from_real_diagonal(&[0.4, 0.3, 0.2, 0.1]);
        let es = hermitian_eigensystem(&m).unwrap();
        assert_eq!(es.eigenvalues, vec![0.4, 0.3, 0.2, 0.1]);
        assert_eq!(es.unitary, ComplexMatrix::identity(4));
    }

    #[test]
    fn random_hermitian_reconstructs() {
        for seed in 1..200 {
            let m = sample_hermitian(seed);
            let es = hermitian_eigensystem(&m).unwrap();
            assert!(es.reconstruct().max_abs_diff(&m) < 1e-10, "seed {seed}");
            let uu = es.unitary.mul_adjoint(&es.unitary);
            assert!(uu.max_abs_diff(&ComplexMatrix::identity(4)) < 1e-10);
            assert!(es.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
            for j in 0..4 {
                let col = es.unitary.column(j);
                let top =
                    col.iter()
                        .copied()
                        .fold(c(0.0, 0.0), |b, z| if z.norm() > b.norm() { z } else { b });
                assert_eq!(top.im, 0.0);
                assert!(top.re >= 0.0);
            }
        }
    }

    #[test]
    fn eigensystem_is_deterministic() {
        let m = sample_hermitian(77);
        let a = hermitian_eigensystem(&m).unwrap();
        let b = hermitian_eigensystem(&m).unwrap();
        assert_eq!(a.unitary, b.unitary);
        assert_eq!(a.eigenvalues, b.eigenvalues);
    }

    #[test]
    fn values_only_matches_full() {
        let m = sample_hermitian(5);
        let full = hermitian_eigensystem(&m).unwrap().eigenvalues;
        let vals = hermitian_eigenvalues(&m).unwrap();
        for (a, b) in full.iter().zip(&vals) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = ComplexMatrix::identity(4);
        m[(0, 1)] = c(0.5, 0.0);
        assert!(matches!(
            hermitian_eigensystem(&m),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn determinant_cases() {
        assert_eq!(determinant(&ComplexMatrix::identity(4)), c(1.0, 0.0));
        let quarter = ComplexMatrix::from_real_diagonal(&[0.25; 4]);
        assert!((determinant(&quarter) - c(1.0 / 256.0, 0.0)).norm() < 1e-18);

        // Partial transpose of |Φ+⟩⟨Φ+| is the swap operator over two.
        let mut pt = ComplexMatrix::zeros(4);
        pt[(0, 0)] = c(0.5, 0.0);
        pt[(3, 3)] = c(0.5, 0.0);
        pt[(1, 2)] = c(0.5, 0.0);
        pt[(2, 1)] = c(0.5, 0.0);
        assert!((determinant(&pt) - c(-1.0 / 16.0, 0.0)).norm() < 1e-15);
        assert!(determinant(&bell_phi_plus()).norm() < 1e-15);
    }

    #[test]
    fn determinant_matches_eigen_product() {
        for seed in 1..100 {
            let m = sample_hermitian(seed);
            let det = determinant(&m);
            let prod: f64 = hermitian_eigenvalues(&m).unwrap().iter().product();
            assert!(det.im.abs() < 1e-12);
            if prod.abs() > 1e-20 {
                assert!(((det.re - prod) / prod).abs() < 1e-8, "seed {seed}");
            }
        }
    }

    #[test]
    fn qr_of_identity_is_identity() {
        let q = unitary_from_qr(&ComplexMatrix::identity(4)).unwrap();
        assert!(q.max_abs_diff(&ComplexMatrix::identity(4)) < 1e-15);
    }

    #[test]
    fn qr_absorbs_negative_diagonal() {
        let q =
            unitary_from_qr(&ComplexMatrix::from_real_diagonal(&[-2.0, 3.0, 1.0, 5.0])).unwrap();
        let expected = ComplexMatrix::from_real_diagonal(&[-1.0, 1.0, 1.0, 1.0]);
        assert!(q.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn qr_is_unitary_with_positive_r() {
        for seed in 1..50 {
            let m = sample_hermitian(seed).add(&ComplexMatrix::from_fn(4, |i, j| {
                c((i * 3 + j) as f64 * 0.01, -(j as f64) * 0.02)
            }));
            let q = unitary_from_qr(&m).unwrap();
            let qq = q.mul_adjoint(&q);
            assert!(qq.max_abs_diff(&ComplexMatrix::identity(4)) < 1e-12);
            // R = Q† M must be upper triangular with positive real diagonal.
            let r = &q.adjoint() * &m;
            for i in 0..4 {
                assert!(r[(i, i)].re > 0.0 && r[(i, i)].im.abs() < 1e-12);
                for j in 0..i {
                    assert!(r[(i, j)].norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn qr_rank_deficient() {
        let m = ComplexMatrix::from_real_diagonal(&[1.0, 0.0, 1.0, 1.0]);
        assert!(matches!(
            unitary_from_qr(&m),
            Err(Error::RankDeficient { column: 1, .. })
        ));
    }

    #[test]
    fn phase_normalization_is_idempotent() {
        let es = hermitian_eigensystem(&sample_hermitian(9)).unwrap();
        let mut u = es.unitary.clone();
        normalize_column_phases(&mut u);
        assert_eq!(u, es.unitary);
    }
}
