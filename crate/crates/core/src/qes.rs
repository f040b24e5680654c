//! Steering-ellipsoid volumes and the importance weights built on them.
//!
//! Every weight function returns `Option<f64>`: `None` marks a sample whose
//! weight is not finite (a vanishing denominator or an overflow). Such
//! samples are counted by the estimator but never enter a sum.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensemble::{EnsembleKind, Measure};
use crate::error::{Error, Result};
use crate::kernel::{self, ComplexMatrix, Eigensystem};
use crate::state::{self, BlochData, DensityMatrix, Field, SeparabilityVerdict};

/// Volume of the unit Bloch ball.
pub const BLOCH_BALL_VOLUME: f64 = 4.0 * PI / 3.0;
/// Largest steering-ellipsoid volume a separable state can have, `4π/81`.
pub const SEPARABLE_VOLUME_BOUND: f64 = 4.0 * PI / 81.0;
const VOLUME_PREFACTOR: f64 = 64.0 * PI / 3.0;

const BLOCH_DENOMINATOR_TOL: f64 = 1e-24;
const DET_GAP_TOL: f64 = 1e-18;
/// Eigenvalues below this make the reciprocal cross weight non-finite.
pub const MIN_EIGENVALUE: f64 = 1e-15;
/// Eigenvalue gaps below this make the steering weights non-finite.
pub const MIN_GAP: f64 = 1e-12;
/// Unitary factors below this make the unitary-extended weight non-finite.
pub const MIN_UNITARY_FACTOR: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QesData {
    /// Volume of Alice's steering ellipsoid.
    pub v_a: f64,
    /// Volume of Bob's steering ellipsoid.
    pub v_b: f64,
    pub bloch: BlochData,
}

fn ellipsoid_volume(det_gap: f64, norm: f64) -> Result<f64> {
    let denominator = (1.0 - norm * norm).powi(2);
    if denominator < BLOCH_DENOMINATOR_TOL {
        if det_gap < DET_GAP_TOL {
            return Ok(0.0);
        }
        return Err(Error::SingularBloch {
            denominator,
            numerator: det_gap,
        });
    }
    Ok(VOLUME_PREFACTOR * det_gap / denominator)
}

/// `V_A = (64π/3) |det ρ - det ρ^{T_B}| / (1 - b²)²`, and `V_B` with `a` in
/// place of `b`.
pub fn qes_volume(rho: &DensityMatrix) -> Result<QesData> {
    let pt = state::partial_transpose_b(rho)?;
    let det = kernel::determinant(rho.matrix()).re;
    let det_pt = kernel::determinant(&pt).re;
    let gap = (det - det_pt).abs();
    let bloch = state::bloch_norms(rho)?;
    Ok(QesData {
        v_a: ellipsoid_volume(gap, bloch.b)?,
        v_b: ellipsoid_volume(gap, bloch.a)?,
        bloch,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CrossDirection {
    /// Reweights a Bures ensemble towards Hilbert-Schmidt measure.
    BuresToHs,
    /// Reweights a Hilbert-Schmidt ensemble towards Bures measure.
    HsToBures,
}

fn clamped(eig: &Eigensystem) -> Vec<f64> {
    eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect()
}

fn pair_product(values: &[f64], f: impl Fn(f64, f64) -> f64) -> f64 {
    let mut prod = 1.0;
    for j in 0..values.len() {
        for k in (j + 1)..values.len() {
            prod *= f(values[j], values[k]);
        }
    }
    prod
}

fn finite(w: f64) -> Option<f64> {
    (w.is_finite() && w >= 0.0).then_some(w)
}

/// `Π_{j<k}(λ_j + λ_k) √det ρ` or its reciprocal.
pub fn cross_weight(eig: &Eigensystem, direction: CrossDirection) -> Option<f64> {
    let lambda = clamped(eig);
    let forward = pair_product(&lambda, |x, y| x + y) * lambda.iter().product::<f64>().sqrt();
    match direction {
        CrossDirection::BuresToHs => finite(forward),
        CrossDirection::HsToBures => {
            if lambda.iter().any(|&l| l < MIN_EIGENVALUE) {
                return None;
            }
            finite(1.0 / forward)
        }
    }
}

fn squared_gap_product(lambda: &[f64]) -> Option<f64> {
    let mut prod = 1.0;
    for j in 0..lambda.len() {
        for k in (j + 1)..lambda.len() {
            let gap = (lambda[j] - lambda[k]).abs();
            if gap < MIN_GAP {
                return None;
            }
            prod *= gap * gap;
        }
    }
    Some(prod)
}

/// `V_A` divided by the eigenvalue factor of the sampling measure's volume
/// element: `Π(λ_j - λ_k)²` for Hilbert-Schmidt, and
/// `Π(λ_j - λ_k)²/(λ_j + λ_k) / √det ρ` for Bures.
pub fn qes_eig_weight(v_a: f64, eig: &Eigensystem, measure: Measure) -> Option<f64> {
    let lambda = clamped(eig);
    let gaps = squared_gap_product(&lambda)?;
    let w = match measure {
        Measure::HilbertSchmidt => v_a / gaps,
        Measure::Bures => {
            let sums = pair_product(&lambda, |x, y| x + y);
            let root_det = lambda.iter().product::<f64>().sqrt();
            v_a * root_det * sums / gaps
        }
    };
    finite(w)
}

/// Re-phases each column so that its diagonal entry is real and nonnegative.
fn diagonal_gauge(u: &ComplexMatrix) -> ComplexMatrix {
    let n = u.dim();
    let mut out = u.clone();
    for j in 0..n {
        let d = u[(j, j)];
        let modulus = d.norm();
        if modulus == 0.0 {
            continue;
        }
        let phase = d.conj() / modulus;
        for i in 0..n {
            out[(i, j)] = u[(i, j)] * phase;
        }
        out[(j, j)] = Complex64::new(modulus, 0.0);
    }
    out
}

/// `|Π_{j<k} Re(U†)_{jk} Im(U†)_{jk}|` with eigenvector columns in the
/// diagonal gauge. Under the largest-modulus gauge most states would carry an
/// exactly real entry above the diagonal of `U†`, so the product is taken
/// after moving each column's phase onto its diagonal entry instead.
pub fn unitary_factor(u: &ComplexMatrix) -> Option<f64> {
    let g = diagonal_gauge(u);
    let n = g.dim();
    let mut prod = 1.0;
    for j in 0..n {
        for k in (j + 1)..n {
            let entry = g[(k, j)].conj(); // (U†)_{jk}
            let (re, im) = (entry.re.abs(), entry.im.abs());
            if re < MIN_UNITARY_FACTOR || im < MIN_UNITARY_FACTOR {
                return None;
            }
            prod *= re * im;
        }
    }
    Some(prod)
}

/// `V_A / [Π(λ_j - λ_k)² |Π Re(U†)_{jk} Im(U†)_{jk}|]`.
pub fn qes_unitary_weight(v_a: f64, eig: &Eigensystem) -> Option<f64> {
    let gaps = squared_gap_product(&clamped(eig))?;
    let unitary = unitary_factor(&eig.unitary)?;
    finite(v_a / (gaps * unitary))
}

/// The steering-ellipsoid volume itself.
pub fn qes_raw_weight(v_a: f64) -> f64 {
    v_a
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightScheme {
    None,
    QesRaw,
    Cross,
    QesEig,
    QesUnitary,
}

impl WeightScheme {
    pub fn as_str(self) -> &'static str {
        match self {
            WeightScheme::None => "none",
            WeightScheme::QesRaw => "qes-raw",
            WeightScheme::Cross => "cross",
            WeightScheme::QesEig => "qes-eig",
            WeightScheme::QesUnitary => "qes-unitary",
        }
    }

    fn needs_eigensystem(self) -> bool {
        matches!(
            self,
            WeightScheme::Cross | WeightScheme::QesEig | WeightScheme::QesUnitary
        )
    }

    /// Rejects combinations whose weight is not defined.
    pub fn check_compatible(self, ensemble: &EnsembleKind) -> Result<()> {
        if self == WeightScheme::QesUnitary && ensemble.measure() != Measure::HilbertSchmidt {
            return Err(Error::InvalidConfig(
                "qes-unitary weights require the hs ensemble".into(),
            ));
        }
        if ensemble.field() == Field::Real && self.needs_eigensystem() {
            return Err(Error::InvalidConfig(format!(
                "{} weights are defined for complex states only",
                self.as_str()
            )));
        }
        if self != WeightScheme::None && ensemble.dim() != 4 {
            return Err(Error::InvalidConfig(format!(
                "{} weights need two-qubit states",
                self.as_str()
            )));
        }
        Ok(())
    }
}

/// One weighted observation. `weight` is `None` when non-finite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedSample {
    pub weight: Option<f64>,
    pub separable: bool,
    pub v_a: f64,
}

/// Everything computed for a single sampled state.
#[derive(Clone, Copy, Debug)]
pub struct SampleEvaluation {
    pub verdict: SeparabilityVerdict,
    pub qes: QesData,
    pub sample: WeightedSample,
}

/// Classifies and weighs one two-qubit state. `cap` clips finite weights
/// from above.
pub fn evaluate_state(
    rho: &DensityMatrix,
    ensemble: &EnsembleKind,
    scheme: WeightScheme,
    cap: Option<f64>,
) -> Result<SampleEvaluation> {
    let verdict = state::separability_verdict(rho)?;
    let qes = qes_volume(rho)?;
    let eig = if scheme.needs_eigensystem() {
        Some(kernel::hermitian_eigensystem(rho.matrix())?)
    } else {
        None
    };
    let weight = match (scheme, eig.as_ref()) {
        (WeightScheme::None, _) => Some(1.0),
        (WeightScheme::QesRaw, _) => Some(qes_raw_weight(qes.v_a)),
        (WeightScheme::Cross, Some(eig)) => {
            let direction = match ensemble.measure() {
                Measure::Bures => CrossDirection::BuresToHs,
                Measure::HilbertSchmidt => CrossDirection::HsToBures,
            };
            cross_weight(eig, direction)
        }
        (WeightScheme::QesEig, Some(eig)) => qes_eig_weight(qes.v_a, eig, ensemble.measure()),
        (WeightScheme::QesUnitary, Some(eig)) => qes_unitary_weight(qes.v_a, eig),
        _ => unreachable!("eigensystem computed for every scheme that needs it"),
    };
    let weight = match cap {
        Some(cap) => weight.map(|w| w.min(cap)),
        None => weight,
    };
    Ok(SampleEvaluation {
        verdict,
        qes,
        sample: WeightedSample {
            weight,
            separable: verdict.separable,
            v_a: qes.v_a,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eig_of(values: &[f64]) -> Eigensystem {
        Eigensystem {
            eigenvalues: values.to_vec(),
            unitary: ComplexMatrix::identity(values.len()),
        }
    }

    #[test]
    fn volumes_of_named_states() {
        let mixed = qes_volume(&DensityMatrix::maximally_mixed(4)).unwrap();
        assert_eq!((mixed.v_a, mixed.v_b), (0.0, 0.0));

        let bell = qes_volume(&DensityMatrix::bell_phi_plus()).unwrap();
        assert!((bell.v_a / BLOCH_BALL_VOLUME - 1.0).abs() < 1e-10);
        assert!((bell.v_b / BLOCH_BALL_VOLUME - 1.0).abs() < 1e-10);

        let werner = qes_volume(&DensityMatrix::werner(1.0 / 3.0)).unwrap();
        assert!((werner.v_a / SEPARABLE_VOLUME_BOUND - 1.0).abs() < 1e-10);
    }

    #[test]
    fn pure_product_state_has_zero_volume() {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let rho = DensityMatrix::pure(&[one, zero, zero, zero]).unwrap();
        let q = qes_volume(&rho).unwrap();
        assert_eq!((q.v_a, q.v_b), (0.0, 0.0));
    }

    #[test]
    fn cross_weight_cases() {
        let w = cross_weight(&eig_of(&[0.25; 4]), CrossDirection::BuresToHs).unwrap();
        assert!((w - 1.0 / 1024.0).abs() < 1e-18);
        let pure = cross_weight(&eig_of(&[1.0, 0.0, 0.0, 0.0]), CrossDirection::BuresToHs);
        assert_eq!(pure, Some(0.0));
        assert_eq!(
            cross_weight(&eig_of(&[1.0, 0.0, 0.0, 0.0]), CrossDirection::HsToBures),
            None
        );
        let lam = [0.4, 0.3, 0.2, 0.1];
        let fwd = cross_weight(&eig_of(&lam), CrossDirection::BuresToHs).unwrap();
        let back = cross_weight(&eig_of(&lam), CrossDirection::HsToBures).unwrap();
        assert!((fwd * back - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eig_weight_hand_product() {
        // gaps 0.1, 0.2, 0.3, 0.1, 0.2, 0.1 -> product 1.2e-5, squared 1.44e-10
        let w =
            qes_eig_weight(1.0, &eig_of(&[0.4, 0.3, 0.2, 0.1]), Measure::HilbertSchmidt).unwrap();
        assert!((w / (1.0 / 1.44e-10) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_spectrum_is_flagged() {
        assert_eq!(
            qes_eig_weight(0.0, &eig_of(&[0.25; 4]), Measure::HilbertSchmidt),
            None
        );
        assert_eq!(
            qes_eig_weight(0.0, &eig_of(&[0.25; 4]), Measure::Bures),
            None
        );
    }

    #[test]
    fn bures_eig_weight_is_hs_times_cross() {
        let e = eig_of(&[0.45, 0.3, 0.17, 0.08]);
        let hs = qes_eig_weight(0.7, &e, Measure::HilbertSchmidt).unwrap();
        let bures = qes_eig_weight(0.7, &e, Measure::Bures).unwrap();
        let cross = cross_weight(&e, CrossDirection::BuresToHs).unwrap();
        assert!((bures / (hs * cross) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_unitary_is_flagged() {
        assert_eq!(
            qes_unitary_weight(1.0, &eig_of(&[0.4, 0.3, 0.2, 0.1])),
            None
        );
    }

    #[test]
    fn raw_weight_passthrough() {
        assert_eq!(qes_raw_weight(0.0), 0.0);
        let bell = qes_volume(&DensityMatrix::bell_phi_plus()).unwrap();
        assert!((qes_raw_weight(bell.v_a) - BLOCH_BALL_VOLUME).abs() < 1e-12);
    }

    #[test]
    fn scheme_compatibility() {
        let hs = EnsembleKind::hilbert_schmidt();
        let bures = EnsembleKind::bures();
        let rebit = EnsembleKind::two_qubit(Measure::HilbertSchmidt, Field::Real).unwrap();
        assert!(WeightScheme::QesUnitary.check_compatible(&hs).is_ok());
        assert!(WeightScheme::QesUnitary.check_compatible(&bures).is_err());
        assert!(WeightScheme::QesEig.check_compatible(&rebit).is_err());
        assert!(WeightScheme::QesRaw.check_compatible(&rebit).is_ok());
        assert!(WeightScheme::None.check_compatible(&rebit).is_ok());
    }

    #[test]
    fn cap_clips_weights() {
        let rho = DensityMatrix::bell_phi_plus();
        let e = evaluate_state(
            &rho,
            &EnsembleKind::hilbert_schmidt(),
            WeightScheme::QesRaw,
            Some(1.0),
        )
        .unwrap();
        assert_eq!(e.sample.weight, Some(1.0));
        assert!(!e.sample.separable);
    }
}
