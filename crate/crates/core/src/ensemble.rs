//! Random density matrices from the Hilbert-Schmidt and Bures ensembles.
//!
//! Every chunk of work draws from its own [`RngStream`], derived from a
//! [`SeedSpec`]. The mapping is injective: the ChaCha8 key holds the
//! little-endian master seed in its first eight bytes (remaining key bytes
//! zero) and the chunk index selects the 64-bit ChaCha stream. Streams with
//! the same key and different stream ids never overlap.

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{unitary_from_qr, ComplexMatrix};
use crate::state::{DensityMatrix, Field};

/// Release builds validate one state in this many.
pub const RELEASE_VALIDATION_STRIDE: u64 = 10_000;

const MIN_TRACE: f64 = 1e-100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub chunk_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, chunk_index: u64) -> Self {
        Self {
            master_seed,
            chunk_index,
        }
    }
}

/// A reproducible random stream owned by one worker.
#[derive(Clone, Debug)]
pub struct RngStream {
    rng: ChaCha8Rng,
    states_drawn: u64,
}

pub fn derive_stream(seed: SeedSpec) -> RngStream {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.master_seed.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(seed.chunk_index);
    RngStream {
        rng,
        states_drawn: 0,
    }
}

impl RngStream {
    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    fn should_validate(&mut self) -> bool {
        let n = self.states_drawn;
        self.states_drawn += 1;
        cfg!(debug_assertions) || n.is_multiple_of(RELEASE_VALIDATION_STRIDE)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Measure {
    #[serde(rename = "hs")]
    HilbertSchmidt,
    #[serde(rename = "bures")]
    Bures,
}

impl Measure {
    pub fn as_str(self) -> &'static str {
        match self {
            Measure::HilbertSchmidt => "hs",
            Measure::Bures => "bures",
        }
    }
}

/// Which ensemble to sample from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EnsembleKind {
    measure: Measure,
    field: Field,
    dim: usize,
}

impl EnsembleKind {
    pub fn new(measure: Measure, field: Field, dim: usize) -> Result<Self> {
        if measure == Measure::Bures && field == Field::Real {
            return Err(Error::InvalidConfig(
                "the Bures ensemble is only defined over the complex field".into(),
            ));
        }
        if dim < 2 {
            return Err(Error::InvalidConfig(format!("dimension {dim} below 2")));
        }
        Ok(Self {
            measure,
            field,
            dim,
        })
    }

    pub fn two_qubit(measure: Measure, field: Field) -> Result<Self> {
        Self::new(measure, field, 4)
    }

    pub fn hilbert_schmidt() -> Self {
        Self {
            measure: Measure::HilbertSchmidt,
            field: Field::Complex,
            dim: 4,
        }
    }

    pub fn bures() -> Self {
        Self {
            measure: Measure::Bures,
            field: Field::Complex,
            dim: 4,
        }
    }

    pub fn measure(&self) -> Measure {
        self.measure
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Square matrix with i.i.d. standard-normal real parts and, for the complex
/// field, i.i.d. standard-normal imaginary parts. Entries are drawn in
/// row-major order, real part first.
pub fn sample_ginibre(dim: usize, field: Field, rng: &mut RngStream) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, |_, _| {
        let re = rng.standard_normal();
        let im = match field {
            Field::Complex => rng.standard_normal(),
            Field::Real => 0.0,
        };
        Complex64::new(re, im)
    })
}

/// Haar-random unitary from the QR factor of a complex Ginibre matrix.
pub fn sample_haar_unitary(dim: usize, rng: &mut RngStream) -> Result<ComplexMatrix> {
    unitary_from_qr(&sample_ginibre(dim, Field::Complex, rng))
}

/// `M M† / Tr(M M†)`.
fn normalized_gram(m: &ComplexMatrix, field: Field) -> Result<DensityMatrix> {
    let trace: f64 = m.entries().iter().map(|z| z.norm_sqr()).sum();
    if !(trace >= MIN_TRACE) {
        return Err(Error::DegenerateSample { trace });
    }
    let mut gram = m.mul_adjoint(m).scale(1.0 / trace);
    // Exact Hermitian symmetry and a real diagonal.
    let n = gram.dim();
    for i in 0..n {
        gram[(i, i)].im = 0.0;
        for j in (i + 1)..n {
            gram[(j, i)] = gram[(i, j)].conj();
        }
    }
    Ok(DensityMatrix::new_unchecked(gram, field))
}

fn validated(rho: DensityMatrix, rng: &mut RngStream) -> Result<DensityMatrix> {
    if rng.should_validate() {
        rho.check_invariants()?;
    }
    Ok(rho)
}

/// `A Aᵀ / Tr(A Aᵀ)` for a real `dim × (dim + 1)` Ginibre `A`, drawn row-major.
///
/// A square real `A` induces an eigenvalue density with an extra
/// `Π λ_i^{-1/2}` factor; one surplus column makes it flat, which is the
/// Hilbert-Schmidt measure on real states.
fn sample_real_hs_gram(dim: usize, rng: &mut RngStream) -> Result<DensityMatrix> {
    let cols = dim + 1;
    let a: Vec<f64> = (0..dim * cols).map(|_| rng.standard_normal()).collect();
    let trace: f64 = a.iter().map(|x| x * x).sum();
    if !(trace >= MIN_TRACE) {
        return Err(Error::DegenerateSample { trace });
    }
    let mut gram = ComplexMatrix::zeros(dim);
    for i in 0..dim {
        for j in i..dim {
            let dot: f64 = (0..cols).map(|k| a[i * cols + k] * a[j * cols + k]).sum();
            gram[(i, j)] = Complex64::new(dot / trace, 0.0);
            gram[(j, i)] = gram[(i, j)];
        }
    }
    Ok(DensityMatrix::new_unchecked(gram, Field::Real))
}

/// `ρ = A A† / Tr(A A†)` with `A` Ginibre. Complex states use a square `A`;
/// real states use a `dim × (dim + 1)` one (see [`sample_real_hs_gram`]).
pub fn sample_hs_state(cfg: &EnsembleKind, rng: &mut RngStream) -> Result<DensityMatrix> {
    if cfg.measure != Measure::HilbertSchmidt {
        return Err(Error::InvalidConfig(
            "sample_hs_state called with a non-HS ensemble".into(),
        ));
    }
    let rho = match cfg.field {
        Field::Complex => normalized_gram(
            &sample_ginibre(cfg.dim, Field::Complex, rng),
            Field::Complex,
        )?,
        Field::Real => sample_real_hs_gram(cfg.dim, rng)?,
    };
    validated(rho, rng)
}

/// `ρ = (1+U) A A† (1+U†) / Tr[...]` with `A` Ginibre and `U` Haar.
pub fn sample_bures_state(cfg: &EnsembleKind, rng: &mut RngStream) -> Result<DensityMatrix> {
    if cfg.measure != Measure::Bures || cfg.field != Field::Complex {
        return Err(Error::InvalidConfig(
            "sample_bures_state requires the complex Bures ensemble".into(),
        ));
    }
    let a = sample_ginibre(cfg.dim, Field::Complex, rng);
    let u = sample_haar_unitary(cfg.dim, rng)?;
    let one_plus_u = ComplexMatrix::identity(cfg.dim).add(&u);
    let m = &one_plus_u * &a;
    let rho = normalized_gram(&m, Field::Complex)?;
    validated(rho, rng)
}

pub fn sample_state(cfg: &EnsembleKind, rng: &mut RngStream) -> Result<DensityMatrix> {
    match cfg.measure {
        Measure::HilbertSchmidt => sample_hs_state(cfg, rng),
        Measure::Bures => sample_bures_state(cfg, rng),
    }
}
