//! Closed-form and structural checks run by `qesprob selftest`.

use std::fmt;

use crate::cli::{estimate, RunConfig};
use crate::ensemble::{derive_stream, sample_state, EnsembleKind, SeedSpec};
use crate::error::Result;
use crate::estimator::EstimatorAccumulator;
use crate::kernel::hermitian_eigensystem;
use crate::qes::{
    self, cross_weight, qes_volume, CrossDirection, WeightScheme, BLOCH_BALL_VOLUME,
    SEPARABLE_VOLUME_BOUND,
};
use crate::state::{self, partial_transpose_matrix, DensityMatrix, SeparabilityVerdict};

/// Sign disagreements between `det ρ^{T_B}` and the minimum partial-transpose
/// eigenvalue are tolerated only when that eigenvalue is this close to zero.
pub const DET_SIGN_TOL: f64 = 1e-10;

pub const PPT_EQUIVALENCE_SAMPLES: u64 = 100_000;

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status}  {:<32} {}", self.name, self.detail)
    }
}

/// True when the determinant sign and the eigenvalue test agree, or the
/// state sits on the separability boundary.
pub fn det_sign_consistent(v: &SeparabilityVerdict) -> bool {
    (v.det_pt >= 0.0) == v.separable || v.min_pt_eigenvalue.abs() <= DET_SIGN_TOL
}

/// Counts det-versus-eigenvalue disagreements over `n` sampled states.
pub fn ppt_det_counterexamples(ensemble: &EnsembleKind, seed: SeedSpec, n: u64) -> Result<u64> {
    let mut rng = derive_stream(seed);
    let mut bad = 0;
    for _ in 0..n {
        let rho = sample_state(ensemble, &mut rng)?;
        if !det_sign_consistent(&state::separability_verdict(&rho)?) {
            bad += 1;
        }
    }
    Ok(bad)
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> CheckResult {
    match f() {
        Ok((passed, detail)) => CheckResult {
            name,
            passed,
            detail,
        },
        Err(e) => CheckResult {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn relative_volume_check(rho: &DensityMatrix, unit: f64) -> Result<(bool, String)> {
    let ratio = qes_volume(rho)?.v_a / unit;
    Ok(((ratio - 1.0).abs() < 1e-10, format!("ratio = {ratio:?}")))
}

pub fn run_selftest() -> Vec<CheckResult> {
    let hs = EnsembleKind::hilbert_schmidt();
    let bures = EnsembleKind::bures();
    vec![
        check("bell_volume", || {
            relative_volume_check(&DensityMatrix::bell_phi_plus(), BLOCH_BALL_VOLUME)
        }),
        check("werner_boundary_volume", || {
            relative_volume_check(&DensityMatrix::werner(1.0 / 3.0), SEPARABLE_VOLUME_BOUND)
        }),
        check("maximally_mixed_volume", || {
            let v = qes_volume(&DensityMatrix::maximally_mixed(4))?.v_a;
            Ok((v == 0.0, format!("v_a = {v:?}")))
        }),
        check("bell_partial_transpose", || {
            let v = state::separability_verdict(&DensityMatrix::bell_phi_plus())?;
            let ok = !v.separable
                && (v.min_pt_eigenvalue + 0.5).abs() < 1e-12
                && (v.det_pt + 1.0 / 16.0).abs() < 1e-12;
            Ok((
                ok,
                format!("min = {:?}, det = {:?}", v.min_pt_eigenvalue, v.det_pt),
            ))
        }),
        check("partial_transpose_involution", || {
            let mut rng = derive_stream(SeedSpec::new(0x5e1f, 0));
            for _ in 0..1000 {
                let rho = sample_state(&bures, &mut rng)?;
                let twice = partial_transpose_matrix(&partial_transpose_matrix(rho.matrix()));
                if &twice != rho.matrix() {
                    return Ok((false, "PT(PT(rho)) != rho".into()));
                }
            }
            Ok((true, "1000 states, bitwise".into()))
        }),
        check("weight_reciprocity", || {
            let mut rng = derive_stream(SeedSpec::new(0x5e1f, 1));
            let mut worst: f64 = 0.0;
            for _ in 0..1000 {
                let eig = hermitian_eigensystem(sample_state(&hs, &mut rng)?.matrix())?;
                let fwd = cross_weight(&eig, CrossDirection::BuresToHs);
                let back = cross_weight(&eig, CrossDirection::HsToBures);
                if let (Some(f), Some(b)) = (fwd, back) {
                    worst = worst.max((f * b - 1.0).abs());
                }
            }
            Ok((worst < 1e-10, format!("max |w_fwd w_back - 1| = {worst:e}")))
        }),
        check("det_ppt_equivalence_hs", || {
            let bad =
                ppt_det_counterexamples(&hs, SeedSpec::new(0x5e1f, 2), PPT_EQUIVALENCE_SAMPLES)?;
            Ok((
                bad == 0,
                format!("{bad} counterexamples in {PPT_EQUIVALENCE_SAMPLES}"),
            ))
        }),
        check("det_ppt_equivalence_bures", || {
            let bad =
                ppt_det_counterexamples(&bures, SeedSpec::new(0x5e1f, 3), PPT_EQUIVALENCE_SAMPLES)?;
            Ok((
                bad == 0,
                format!("{bad} counterexamples in {PPT_EQUIVALENCE_SAMPLES}"),
            ))
        }),
        check("merge_associativity", || {
            let mut rng = derive_stream(SeedSpec::new(0x5e1f, 4));
            let mut samples = Vec::with_capacity(10_000);
            for _ in 0..10_000 {
                let rho = sample_state(&hs, &mut rng)?;
                samples.push(qes::evaluate_state(&rho, &hs, WeightScheme::QesRaw, None)?.sample);
            }
            let mut seq = EstimatorAccumulator::new(1000);
            samples.iter().for_each(|s| seq.accumulate(s));
            let mut a = EstimatorAccumulator::new(1000);
            let mut b = EstimatorAccumulator::new(1000);
            samples[..5000].iter().for_each(|s| a.accumulate(s));
            samples[5000..].iter().for_each(|s| b.accumulate(s));
            let merged = a.merge(b)?;
            let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs()).max(f64::MIN_POSITIVE);
            let ok = seq.n_total == merged.n_total
                && seq.n_excluded == merged.n_excluded
                && seq.n_separable == merged.n_separable
                && rel(seq.sum_w, merged.sum_w) < 1e-12
                && rel(seq.sum_w_sep, merged.sum_w_sep) < 1e-12
                && rel(seq.sum_v_a, merged.sum_v_a) < 1e-12
                && seq.batches().count() == merged.batches().count();
            Ok((ok, format!("sum_w {:?} vs {:?}", seq.sum_w, merged.sum_w)))
        }),
        check("seed_determinism", || {
            let mut cfg = RunConfig::new(hs, WeightScheme::QesEig, 4000, 42);
            cfg.batch_size = 500;
            cfg.threads = 1;
            let one = estimate(&cfg)?;
            cfg.threads = 3;
            let three = estimate(&cfg)?;
            let same = one.summary == three.summary && one.accumulator == three.accumulator;
            Ok((same, format!("estimate {:?}", one.summary.estimate)))
        }),
    ]
}
