mod common;

use num_complex::Complex64;
use qesprob::ensemble::{derive_stream, sample_haar_unitary, SeedSpec};
use qesprob::kernel::{determinant, hermitian_eigensystem, hermitian_eigenvalues, ComplexMatrix};

use common::{kolmogorov_q, ks_one_sample};

#[test]
fn kolmogorov_tail_reference_points() {
    // Q_KS(1.36) ≈ 0.049 and Q_KS(1.63) ≈ 0.010 are the textbook 5% / 1% points.
    assert!((kolmogorov_q(1.358) - 0.05).abs() < 1e-3);
    assert!((kolmogorov_q(1.628) - 0.01).abs() < 1e-3);
}

/// Eigenphases of a unitary through a generic Hermitian combination of its
/// real and imaginary parts, which shares its eigenvectors.
fn eigenphases(u: &ComplexMatrix) -> Vec<f64> {
    let ud = u.adjoint();
    let cos_part = u.add(&ud).scale(0.5);
    let i = Complex64::new(0.0, 1.0);
    let sin_part = ComplexMatrix::from_fn(u.dim(), |r, c| (u[(r, c)] - ud[(r, c)]) / (2.0 * i));
    let k = cos_part.add(&sin_part.scale(0.618_033_988_749_894_9));
    let es = hermitian_eigensystem(&k).unwrap();
    (0..u.dim())
        .map(|j| {
            let v = es.unitary.column(j);
            let uv: Vec<Complex64> = (0..u.dim())
                .map(|r| (0..u.dim()).map(|c| u[(r, c)] * v[c]).sum())
                .collect();
            let z: Complex64 = v.iter().zip(&uv).map(|(a, b)| a.conj() * b).sum();
            z.arg()
        })
        .collect()
}

#[test]
fn haar_eigenphases_are_uniform() {
    let mut rng = derive_stream(SeedSpec::new(2024, 0));
    let mut phases = Vec::with_capacity(100_000);
    while phases.len() < 100_000 {
        let u = sample_haar_unitary(4, &mut rng).unwrap();
        assert!(u.mul_adjoint(&u).max_abs_diff(&ComplexMatrix::identity(4)) < 1e-12);
        phases.extend(eigenphases(&u));
    }
    let pi = std::f64::consts::PI;
    let (d, p) = ks_one_sample(phases, |x| (x + pi) / (2.0 * pi));
    assert!(p > 1e-3, "KS D = {d}, p = {p}");
}

#[test]
fn qr_of_unphased_ginibre_is_not_haar() {
    // Without the phase correction, Q from a QR with real-positive Householder
    // conventions is biased. Sanity check that the test above can fail: a
    // fixed unitary has non-uniform eigenphases.
    let u = ComplexMatrix::from_real_diagonal(&[1.0, 1.0, 1.0, 1.0]);
    let phases: Vec<f64> = (0..1000).flat_map(|_| eigenphases(&u)).collect();
    let pi = std::f64::consts::PI;
    let (_, p) = ks_one_sample(phases, |x| (x + pi) / (2.0 * pi));
    assert!(p < 1e-6);
}

#[test]
fn sampled_spectra_reconstruct() {
    let mut rng = derive_stream(SeedSpec::new(77, 3));
    for _ in 0..20_000 {
        let a = qesprob::ensemble::sample_ginibre(4, qesprob::state::Field::Complex, &mut rng);
        let m = a.add(&a.adjoint());
        let es = hermitian_eigensystem(&m).unwrap();
        assert!(es.reconstruct().max_abs_diff(&m) < 1e-10);
        assert!(
            es.unitary
                .mul_adjoint(&es.unitary)
                .max_abs_diff(&ComplexMatrix::identity(4))
                < 1e-10
        );
        let det = determinant(&m).re;
        let prod: f64 = hermitian_eigenvalues(&m).unwrap().iter().product();
        if prod.abs() > 1e-20 {
            assert!(((det - prod) / prod).abs() < 1e-8);
        }
    }
}

#[test]
fn near_degenerate_spectrum_still_converges() {
    let eps = 1e-13;
    let base = ComplexMatrix::from_real_diagonal(&[0.25 + eps, 0.25, 0.25 - eps, 0.25]);
    let mut rng = derive_stream(SeedSpec::new(5, 5));
    let u = sample_haar_unitary(4, &mut rng).unwrap();
    let m = (&u * &base).mul_adjoint(&u);
    let es = hermitian_eigensystem(&m).unwrap();
    assert!(es.reconstruct().max_abs_diff(&m) < 1e-10);
}
