use std::f64::consts::PI;

use dscatter::dispersion::Dispersion;
use dscatter::models::{random_emitter_model, CMatrix, CouplingSpec, EmitterModel, Passivity};
use dscatter::propagators::ScatteringSystem;
use dscatter::smatrix::{distance_to_limit, limit_from_propagator, parity_eigenvalue, s_matrix, universal_limit, Route};
use dscatter::{Complex64, Error};
use proptest::prelude::*;

const LADDER: [f64; 7] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8];

fn model(n: usize, seed: u64, kind: Passivity) -> EmitterModel {
    let amp = Complex64::from_polar(0.5 + (seed % 7) as f64 / 7.0, seed as f64);
    random_emitter_model(n, seed, kind, CouplingSpec::gaussian(amp, 0.6 + (seed % 5) as f64 / 5.0))
}

fn spectral_norm(m: &CMatrix) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

/// Sides of the threshold on which the continuum lives.
fn sides(d: &Dispersion) -> Vec<f64> {
    let Dispersion::Power1d(p) = d else { return vec![1.0] };
    if p.m % 2 == 1 {
        vec![1.0, -1.0]
    } else {
        vec![p.sigma as f64]
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn hermitian_scattering_is_unitary(m in 2u32..=6, neg in any::<bool>(), n in 1usize..=3, seed in any::<u64>(), le in -6.0..1.0f64, route in any::<bool>()) {
        let d = Dispersion::power(if neg { -1 } else { 1 }, 1.0, m).unwrap();
        let sys = ScatteringSystem::emitter(d, model(n, seed, Passivity::Hermitian));
        let route = if route { Route::TMatrix } else { Route::JRatio };
        for sgn in sides(&d) {
            let s = s_matrix(sgn * 10f64.powf(le), &sys, route).unwrap();
            let n = s.n();
            prop_assert!(spectral_norm(&(s.entries.adjoint() * &s.entries - CMatrix::identity(n, n))) < 1e-8);
            prop_assert!(s.unitarity_defect < 1e-8);
        }
    }

    #[test]
    fn dissipative_scattering_is_contractive(m in 2u32..=6, n in 1usize..=3, seed in any::<u64>(), le in -6.0..1.0f64) {
        let d = Dispersion::power(1, 1.0, m).unwrap();
        let sys = ScatteringSystem::emitter(d, model(n, seed, Passivity::Dissipative));
        for sgn in sides(&d) {
            let s = s_matrix(sgn * 10f64.powf(le), &sys, Route::TMatrix).unwrap();
            prop_assert!(spectral_norm(&s.entries) <= 1.0 + 1e-8);
            prop_assert!(s.det().norm() <= 1.0 + 1e-8);
        }
    }

    #[test]
    fn routes_agree(m in 1u32..=6, n in 1usize..=4, seed in any::<u64>(), le in -10.0..1.0f64, diss in any::<bool>()) {
        let d = Dispersion::power(1, 1.0, m).unwrap();
        let kind = if diss { Passivity::Dissipative } else { Passivity::Hermitian };
        let sys = ScatteringSystem::emitter(d, model(n, seed, kind));
        for sgn in sides(&d) {
            let e = sgn * 10f64.powf(le);
            let a = s_matrix(e, &sys, Route::TMatrix).unwrap();
            let b = s_matrix(e, &sys, Route::JRatio).unwrap();
            prop_assert!((&a.entries - &b.entries).norm() < 1e-9, "E={e}: {} vs {}", a.entries, b.entries);
        }
    }
}

/// Every sampled model approaches the same limit, monotonically.
#[test]
fn universal_convergence() {
    let mut cases = Vec::new();
    for m in [2u32, 4, 6] {
        for s in [1i8, -1] {
            cases.push(Dispersion::power(s, 1.0, m).unwrap());
        }
    }
    for m in [3u32, 5] {
        cases.push(Dispersion::power(1, 1.0, m).unwrap());
    }
    for d in cases {
        let limit = universal_limit(&d).unwrap();
        for seed in 0..20u64 {
            let kind = if seed % 2 == 0 { Passivity::Hermitian } else { Passivity::Dissipative };
            let sys = ScatteringSystem::emitter(d, model(1 + seed as usize % 3, seed, kind));
            for sgn in sides(&d) {
                let dist: Vec<f64> = LADDER
                    .iter()
                    .map(|&e| distance_to_limit(&s_matrix(sgn * e, &sys, Route::TMatrix).unwrap(), &limit).unwrap())
                    .collect();
                assert!(dist.windows(2).all(|x| x[1] < x[0]), "{d:?} seed {seed} side {sgn}: {dist:?}");
                assert!(dist[dist.len() - 1] < 0.05, "{d:?} seed {seed} side {sgn}: {dist:?}");
            }
        }
    }
}

/// Two unrelated models share S(E → 0), and the prefactor d does not enter.
#[test]
fn limit_is_independent_of_the_model_and_of_d() {
    for m in [2u32, 3, 4, 5, 6] {
        let base = Dispersion::power(1, 1.0, m).unwrap();
        let a = ScatteringSystem::emitter(base, model(1, 11, Passivity::Hermitian));
        let b = ScatteringSystem::emitter(base, model(3, 12, Passivity::Dissipative));
        let sa = s_matrix(1e-8, &a, Route::TMatrix).unwrap();
        let sb = s_matrix(1e-8, &b, Route::TMatrix).unwrap();
        assert!(spectral_norm(&(&sa.entries - &sb.entries)) <= 0.05, "m={m}");
        let limit = universal_limit(&base).unwrap();
        for dd in [0.1, 3.0, 25.0] {
            let scaled = Dispersion::power(1, dd, m).unwrap();
            let other = universal_limit(&scaled).unwrap();
            assert_eq!(limit.at(1.0), other.at(1.0));
            let sys = ScatteringSystem::emitter(scaled, model(2, 13, Passivity::Hermitian));
            // ε = d k^m: the threshold scale moves with d, so compare at equal k
            let e = 1e-8 * dd;
            assert!(distance_to_limit(&s_matrix(e, &sys, Route::TMatrix).unwrap(), &limit).unwrap() < 0.05, "m={m} d={dd}");
        }
    }
}

#[test]
fn tables_match_the_propagator_form() {
    for m in 2..=6u32 {
        for s in [1i8, -1] {
            let d = Dispersion::power(s, 1.0, m).unwrap();
            let limit = universal_limit(&d).unwrap();
            for e in sides(&d).into_iter().map(|x| x * 1e-3) {
                let table = limit.at(e).unwrap();
                let prop = limit_from_propagator(e, &d).unwrap();
                assert!(spectral_norm(&(table - prop)) < 1e-12, "m={m} σ={s} E={e}");
            }
        }
    }
    for (a, dim) in [(4.0, 3), (3.0, 2), (2.0, 1)] {
        let d = Dispersion::isotropic(a, dim).unwrap();
        let limit = universal_limit(&d).unwrap();
        let prop = limit_from_propagator(1e-3, &d).unwrap();
        assert!((limit.at(1.0).unwrap()[(0, 0)] - prop[(0, 0)]).norm() < 1e-12, "a={a} D={dim}");
    }
}

#[test]
fn even_m_eigenvalues() {
    for m in [2u32, 4, 6] {
        for s in [1i8, -1] {
            let d = Dispersion::power(s, 1.0, m).unwrap();
            let limit = universal_limit(&d).unwrap();
            let want = Complex64::from_polar(1.0, 2.0 * PI * s as f64 / m as f64);
            assert!((limit.symmetric_eigenvalue.unwrap() - want).norm() < 1e-14);
            assert_eq!(limit.antisymmetric_eigenvalue, Some(Complex64::new(1.0, 0.0)));
            let sys = ScatteringSystem::emitter(d, model(2, 7 + m as u64, Passivity::Hermitian));
            let (mut anti, mut sym) = (Vec::new(), Vec::new());
            for e in LADDER {
                let sm = s_matrix(s as f64 * e, &sys, Route::TMatrix).unwrap();
                anti.push((parity_eigenvalue(&sm, true).unwrap() - 1.0).norm());
                sym.push((parity_eigenvalue(&sm, false).unwrap() - want).norm());
            }
            // an even coupling never sees the odd channel
            assert!(anti.iter().all(|&x| x < 1e-12), "m={m} σ={s}: {anti:?}");
            assert!(sym.windows(2).all(|x| x[1] < x[0]), "m={m} σ={s}: {sym:?}");
            assert!(sym[sym.len() - 1] < 0.05);
        }
    }
}

#[test]
fn linear_dispersion_has_no_universal_limit() {
    let d = Dispersion::power(1, 1.0, 1).unwrap();
    assert!(matches!(universal_limit(&d), Err(Error::NonUniversal { .. })));
    // S(0) is set by V(0), so it moves with the amplitude
    let s = |amp: f64| {
        let m = EmitterModel::single(Complex64::new(0.2, 0.0), CouplingSpec::gaussian(Complex64::new(amp, 0.0), 1.0));
        s_matrix(1e-8, &ScatteringSystem::emitter(d, m), Route::TMatrix).unwrap().entries[(0, 0)]
    };
    assert!((s(0.5) - s(2.0)).norm() > 0.05);
}
