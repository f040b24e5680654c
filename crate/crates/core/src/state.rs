//! Two-qubit density matrices and their local structure.
//!
//! Basis ordering is `index = 2 * alice + bob`, so the 4×4 matrix splits into
//! four 2×2 blocks indexed by Alice's qubit.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{self, ComplexMatrix, HERMITIAN_TOL};

/// Tolerance on `|trace - 1|`.
pub const TRACE_TOL: f64 = 1e-10;
/// Most negative eigenvalue tolerated in a density matrix.
pub const PSD_TOL: f64 = 1e-10;
/// Largest imaginary part tolerated for real-field states.
pub const REAL_FIELD_TOL: f64 = 1e-12;
/// Partial-transpose eigenvalues at or above `-PPT_TOL` count as nonnegative.
pub const PPT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Complex,
    Real,
}

impl Field {
    pub fn as_str(self) -> &'static str {
        match self {
            Field::Complex => "complex",
            Field::Real => "real",
        }
    }
}

#[derive(Clone, Debug)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    field: Field,
}

impl DensityMatrix {
    /// Wraps `matrix` after checking Hermiticity, unit trace, positivity and
    /// (for the real field) vanishing imaginary parts.
    pub fn new(matrix: ComplexMatrix, field: Field) -> Result<Self> {
        let rho = Self { matrix, field };
        rho.check_invariants()?;
        Ok(rho)
    }

    /// Skips validation; samplers use this on states that are valid by
    /// construction and validate separately.
    pub(crate) fn new_unchecked(matrix: ComplexMatrix, field: Field) -> Self {
        Self { matrix, field }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::new_unchecked(
            ComplexMatrix::from_real_diagonal(&vec![1.0 / dim as f64; dim]),
            Field::Real,
        )
    }

    /// `|ψ⟩⟨ψ|` for a unit vector `ψ`.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let field = if psi.iter().all(|z| z.im == 0.0) {
            Field::Real
        } else {
            Field::Complex
        };
        Self::new(ComplexMatrix::outer(psi), field)
    }

    /// `|Φ+⟩ = (|00⟩ + |11⟩)/√2`.
    pub fn bell_phi_plus() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let zero = Complex64::new(0.0, 0.0);
        let psi = [Complex64::new(s, 0.0), zero, zero, Complex64::new(s, 0.0)];
        Self::new_unchecked(ComplexMatrix::outer(&psi), Field::Real)
    }

    /// `w |Φ+⟩⟨Φ+| + (1 - w) I/4`.
    pub fn werner(w: f64) -> Self {
        let bell = Self::bell_phi_plus().matrix.scale(w);
        let mixed = Self::maximally_mixed(4).matrix.scale(1.0 - w);
        Self::new_unchecked(bell.add(&mixed), Field::Real)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn check_invariants(&self) -> Result<()> {
        let m = &self.matrix;
        let defect = m.hermiticity_defect();
        if !(defect <= HERMITIAN_TOL) {
            return Err(Error::NotHermitian { defect });
        }
        let trace = m.trace().re;
        if !((trace - 1.0).abs() <= TRACE_TOL) {
            return Err(Error::InvalidDensityMatrix(format!(
                "trace {trace} differs from 1"
            )));
        }
        if self.field == Field::Real && m.max_imag() >= REAL_FIELD_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "real-field state has imaginary part {:e}",
                m.max_imag()
            )));
        }
        if !shifted_cholesky_succeeds(m, PSD_TOL) {
            let smallest = kernel::hermitian_eigenvalues(m)?
                .last()
                .copied()
                .unwrap_or(f64::NAN);
            if !(smallest >= -PSD_TOL) {
                return Err(Error::InvalidDensityMatrix(format!(
                    "smallest eigenvalue {smallest:e} is negative"
                )));
            }
        }
        Ok(())
    }

    /// Conjugation by a unitary, `u ρ u†`.
    pub fn conjugate_by(&self, u: &ComplexMatrix) -> Self {
        let conj = (u * &self.matrix).mul_adjoint(u);
        let field = if conj.max_imag() == 0.0 {
            self.field
        } else {
            Field::Complex
        };
        Self::new_unchecked(conj, field)
    }
}

/// Cholesky of `m + shift I`; success certifies `m ≥ -shift`.
fn shifted_cholesky_succeeds(m: &ComplexMatrix, shift: f64) -> bool {
    let n = m.dim();
    let mut l = ComplexMatrix::zeros(n);
    for j in 0..n {
        let mut d = m[(j, j)].re + shift;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) {
            return false;
        }
        let d = d.sqrt();
        l[(j, j)] = Complex64::new(d, 0.0);
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / d;
        }
    }
    true
}

fn require_two_qubit(rho: &DensityMatrix) -> Result<()> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: rho.dim(),
        });
    }
    Ok(())
}

/// Transpose on Bob's factor: each 2×2 block is transposed in place.
pub fn partial_transpose_b(rho: &DensityMatrix) -> Result<ComplexMatrix> {
    require_two_qubit(rho)?;
    Ok(partial_transpose_matrix(rho.matrix()))
}

pub(crate) fn partial_transpose_matrix(m: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(4, |r, c| {
        let (i, k) = (r / 2, r % 2);
        let (j, l) = (c / 2, c % 2);
        m[(2 * i + l, 2 * j + k)]
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeparabilityVerdict {
    pub separable: bool,
    pub min_pt_eigenvalue: f64,
    pub det_pt: f64,
}

/// Peres-Horodecki test, which is exact for two qubits.
pub fn separability_verdict(rho: &DensityMatrix) -> Result<SeparabilityVerdict> {
    let pt = partial_transpose_b(rho)?;
    let eigenvalues = kernel::hermitian_eigenvalues(&pt)?;
    let min_pt_eigenvalue = eigenvalues[eigenvalues.len() - 1];
    Ok(SeparabilityVerdict {
        separable: min_pt_eigenvalue >= -PPT_TOL,
        min_pt_eigenvalue,
        det_pt: kernel::determinant(&pt).re,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochData {
    /// Norm of Alice's Bloch vector.
    pub a: f64,
    /// Norm of Bob's Bloch vector.
    pub b: f64,
}

/// Reduced state of Alice, tracing out Bob.
pub fn reduced_alice(rho: &ComplexMatrix) -> [[Complex64; 2]; 2] {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (k, entry) in row.iter_mut().enumerate() {
            *entry = rho[(2 * i, 2 * k)] + rho[(2 * i + 1, 2 * k + 1)];
        }
    }
    out
}

/// Reduced state of Bob, tracing out Alice.
pub fn reduced_bob(rho: &ComplexMatrix) -> [[Complex64; 2]; 2] {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (j, row) in out.iter_mut().enumerate() {
        for (l, entry) in row.iter_mut().enumerate() {
            *entry = rho[(j, l)] + rho[(2 + j, 2 + l)];
        }
    }
    out
}

/// `(Tr ρσx, Tr ρσy, Tr ρσz)` of a qubit state.
pub fn bloch_vector(q: &[[Complex64; 2]; 2]) -> [f64; 3] {
    [2.0 * q[0][1].re, -2.0 * q[0][1].im, q[0][0].re - q[1][1].re]
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub fn bloch_norms(rho: &DensityMatrix) -> Result<BlochData> {
    require_two_qubit(rho)?;
    Ok(BlochData {
        a: norm3(bloch_vector(&reduced_alice(rho.matrix()))),
        b: norm3(bloch_vector(&reduced_bob(rho.matrix()))),
    })
}

/// `Tr ρ²`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.matrix().entries().iter().map(|z| z.norm_sqr()).sum()
}
