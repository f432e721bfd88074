use dscatter::dispersion::Dispersion;
use dscatter::models::{
    basis_with_first, construct_bright_tuned_model, detect_bright_zero_state, perturb_reduced_block, CMatrix, CVector,
    CouplingSpec, EmitterModel, EmitterSpec, DEFAULT_RANK_TOL,
};
use dscatter::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn gauss(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| gauss(rng)).qr().q()
}

/// W K^R W† with W unitary and W u = u.
fn conjugate_fixing_u(model: &EmitterModel, rng: &mut ChaCha8Rng) -> EmitterModel {
    let n = model.n();
    let b = basis_with_first(model.u());
    let mut inner = CMatrix::identity(n, n);
    inner.view_mut((1, 1), (n - 1, n - 1)).copy_from(&random_unitary(rng, n - 1));
    // a phase on the u direction leaves |u⟩⟨u| alone too
    inner[(0, 0)] = Complex64::from_polar(1.0, rng.random_range(-3.0..3.0));
    let w = &b * inner * b.adjoint();
    let kr = &w * model.kr() * w.adjoint();
    let kr = (&kr + kr.adjoint()) * Complex64::new(0.5, 0.0);
    model.with_kr(kr).unwrap()
}

#[test]
fn detection_is_invariant_under_conjugation() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let d = Dispersion::power(1, 1.0, 2).unwrap();
    for trial in 0..100u64 {
        let n = 2 + trial as usize % 3;
        let tuned = construct_bright_tuned_model(n, trial).unwrap();
        let plain = perturb_reduced_block(&tuned, 1e-3, trial).unwrap();
        let (t2, p2) = (conjugate_fixing_u(&tuned, &mut rng), conjugate_fixing_u(&plain, &mut rng));
        let cert = detect_bright_zero_state(&t2, DEFAULT_RANK_TOL).expect("tuned model stays bright");
        assert!(cert.verify(&t2, &d), "{:?}", cert.residuals(&t2, &d));
        assert!(detect_bright_zero_state(&p2, DEFAULT_RANK_TOL).is_none());
        // |ψ0| is a property of the state, not of the basis
        let c1 = detect_bright_zero_state(&tuned, DEFAULT_RANK_TOL).unwrap();
        assert!((c1.psi0_constant.norm() - cert.psi0_constant.norm()).abs() < 1e-9 * (1.0 + c1.psi0_constant.norm()));
    }
}

#[test]
fn generic_models_have_no_bright_state() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut found = 0;
    for trial in 0..1000 {
        let n = 2 + trial % 4;
        let g = CMatrix::from_fn(n, n, |_, _| gauss(&mut rng));
        let kr = (&g + g.adjoint()) * Complex64::new(0.5, 0.0);
        let u = CVector::from_fn(n, |_, _| gauss(&mut rng));
        let u = &u / Complex64::new(u.norm(), 0.0);
        let m = EmitterModel::new(kr, u, CouplingSpec::gaussian(Complex64::new(1.0, 0.0), 1.0)).unwrap();
        if detect_bright_zero_state(&m, DEFAULT_RANK_TOL).is_some() {
            found += 1;
        }
    }
    assert!(found <= 10, "{found} of 1000 random models flagged");
}

#[test]
fn certificate_fails_on_a_dark_null_vector() {
    // reduced block singular, but the coupling row does not see the null vector
    let c = |x: f64| Complex64::new(x, 0.0);
    let kr = CMatrix::from_row_slice(3, 3, &[c(0.3), c(0.5), c(0.0), c(0.5), c(1.0), c(0.0), c(0.0), c(0.0), c(0.0)]);
    let u = CVector::from_vec(vec![c(1.0), c(0.0), c(0.0)]);
    let m = EmitterModel::new(kr, u, CouplingSpec::gaussian(c(1.0), 1.0)).unwrap();
    assert!(detect_bright_zero_state(&m, DEFAULT_RANK_TOL).is_none());
    // zero coupling at k = 0 cannot feed a bright state either
    let tuned = construct_bright_tuned_model(3, 1).unwrap();
    let off = tuned.with_coupling(CouplingSpec::gaussian(c(0.0), 1.0)).unwrap();
    assert!(detect_bright_zero_state(&off, DEFAULT_RANK_TOL).is_none());
}

#[test]
fn spec_round_trip() {
    let m = construct_bright_tuned_model(3, 9).unwrap();
    let spec = EmitterSpec::from(m.clone());
    let json = serde_json::to_string(&spec).unwrap();
    let back: EmitterSpec = serde_json::from_str(&json).unwrap();
    let m2 = EmitterModel::try_from(back).unwrap();
    assert!((m.kr() - m2.kr()).norm() < 1e-15);
    assert!((m.u() - m2.u()).norm() < 1e-15);
    assert_eq!(m.coupling(), m2.coupling());
}
