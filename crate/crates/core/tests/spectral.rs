use dscatter::dispersion::Dispersion;
use dscatter::models::{random_emitter_model, CouplingSpec, EmitterModel, Passivity, SeparableModel};
use dscatter::numerics::{count_zeros, ContourOptions, RectContour};
use dscatter::propagators::{green_matrix, Frequency, ScatteringSystem};
use dscatter::spectral::{
    bound_state_count, bound_states, bound_states_with, count_bound_states_real_axis, default_real_bracket, SearchOptions,
};
use dscatter::{Complex64, Error};

fn fixtures() -> Vec<(ScatteringSystem, EmitterModel)> {
    let mut out = Vec::new();
    for m in [2u32, 4, 6] {
        for sigma in [1i8, -1] {
            let d = Dispersion::power(sigma, 1.0, m).unwrap();
            for seed in 0..4u64 {
                let amp = Complex64::from_polar(0.6 + 0.3 * seed as f64, 1.3 * seed as f64);
                let model = random_emitter_model(1 + seed as usize % 3, 100 * m as u64 + seed, Passivity::Hermitian, CouplingSpec::gaussian(amp, 0.9));
                out.push((ScatteringSystem::emitter(d, model.clone()), model));
            }
        }
    }
    out
}

#[test]
fn contour_and_real_axis_counts_agree() {
    let mut total = 0;
    for (sys, _) in fixtures() {
        let contour = bound_state_count(&bound_states(&sys).unwrap());
        let real = count_bound_states_real_axis(&sys, default_real_bracket(&sys).unwrap()).unwrap();
        assert_eq!(contour, real, "{:?}", sys.dispersion);
        total += contour;
    }
    assert!(total > 0);
}

#[test]
fn bound_states_are_poles_of_the_green_function() {
    for (sys, model) in fixtures() {
        for b in bound_states(&sys).unwrap() {
            assert!(b.energy.im.abs() < 1e-12 * (1.0 + b.energy.re.abs()), "Hermitian state off the axis: {}", b.energy);
            assert!(!sys.dispersion.in_continuum(b.energy.re));
            let g = green_matrix(Frequency::OffAxis(b.energy), &model, &sys.dispersion);
            assert!(matches!(g, Err(Error::SingularResolvent { .. })), "E_B={}: {g:?}", b.energy);
            // and regular a little way off
            let off = b.energy + Complex64::new(0.0, 1e-3 * (1.0 + b.energy.norm()));
            assert!(green_matrix(Frequency::OffAxis(off), &model, &sys.dispersion).is_ok());
        }
    }
}

/// Counts do not move when the search boxes grow or shrink by 10%.
#[test]
fn counts_are_stable_under_inflation() {
    for (sys, _) in fixtures() {
        let base = bound_states(&sys).unwrap();
        for f in [0.9, 1.1] {
            let opts = SearchOptions { depth_factor: 2.0 * f, margin: 1e-6 * f, ..SearchOptions::default() };
            assert_eq!(bound_state_count(&bound_states_with(&sys, &opts).unwrap()), bound_state_count(&base));
        }
        let h = |w: Complex64| sys.denominator(Frequency::OffAxis(w));
        for b in &base {
            let gap = base.iter().filter(|o| o.energy != b.energy).map(|o| (o.energy - b.energy).norm()).fold(b.energy.re.abs(), f64::min);
            let r = 0.25 * gap;
            let boxed = RectContour::new(b.energy.re - r, b.energy.re + r, -r, r).unwrap();
            for f in [0.9, 1.0, 1.1] {
                let n = count_zeros(&h, &boxed.inflate(f), &ContourOptions::default()).unwrap();
                assert_eq!(n, b.multiplicity as i64, "E_B={} factor {f}", b.energy);
            }
        }
    }
}

#[test]
fn dissipation_pushes_states_below_the_axis() {
    let d = Dispersion::power(1, 1.0, 2).unwrap();
    for seed in 0..6u64 {
        let model = random_emitter_model(2, seed, Passivity::Dissipative, CouplingSpec::gaussian(Complex64::new(1.0, 0.0), 1.0));
        let sys = ScatteringSystem::emitter(d, model);
        for b in bound_states(&sys).unwrap() {
            assert!(b.energy.im <= 1e-12, "{}", b.energy);
        }
    }
}

#[test]
fn attractive_separable_potential_binds() {
    let d = Dispersion::power(1, 1.0, 2).unwrap();
    let ff = CouplingSpec::gaussian(Complex64::new(1.0, 0.0), 1.0);
    let attractive = ScatteringSystem::separable(d, SeparableModel::new(-0.5, ff.clone()).unwrap());
    let repulsive = ScatteringSystem::separable(d, SeparableModel::new(0.5, ff).unwrap());
    let bb = bound_states(&attractive).unwrap();
    assert_eq!(bound_state_count(&bb), 1);
    assert!(bb[0].energy.re < 0.0);
    assert_eq!(bound_state_count(&bound_states(&repulsive).unwrap()), 0);
    assert_eq!(count_bound_states_real_axis(&attractive, default_real_bracket(&attractive).unwrap()).unwrap(), 1);
}
