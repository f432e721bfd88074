use dscatter::dispersion::{Dispersion, DispersionIsotropic, DispersionPower1D};
use proptest::prelude::*;

/// ρ(E) by binning ε(k) over a uniform momentum grid.
fn histogram_density(energy: impl Fn(f64) -> f64, e: f64, kmax: f64) -> f64 {
    let de = 2e-3 * e.abs();
    let (lo, hi) = (e.abs() - 0.5 * de, e.abs() + 0.5 * de);
    let n = 4_000_000usize;
    let h = 2.0 * kmax / n as f64;
    let hits = (0..n)
        .map(|i| -kmax + (i as f64 + 0.5) * h)
        .filter(|&k| {
            let v = energy(k).abs();
            v > lo && v < hi
        })
        .count();
    hits as f64 * h / de
}

#[test]
fn density_of_states_matches_histogram() {
    for m in 2..=6u32 {
        let d = DispersionPower1D::new(1, 1.0, m).unwrap();
        for e in [0.1, 1.0, 10.0] {
            let kmax = 1.5 * d.shell_momentum(e);
            let hist = histogram_density(|k| d.energy(k), e, kmax);
            let rho = d.density_of_states(e).unwrap();
            assert!((hist / rho - 1.0).abs() < 0.01, "m={m} E={e}: histogram {hist} vs {rho}");
        }
    }
}

proptest! {
    #[test]
    fn degenerate_momenta_lie_on_the_shell(m in 1u32..=7, neg in any::<bool>(), d in 0.1..10.0f64, le in -6.0..3.0f64, upper in any::<bool>()) {
        let sigma = if neg { -1 } else { 1 };
        let disp = DispersionPower1D::new(sigma, d, m).unwrap();
        let mut e = 10f64.powf(le) * sigma as f64;
        if m % 2 == 1 && !upper {
            e = -e;
        }
        prop_assume!(disp.in_continuum(e));
        // one rounding in k^(1/m), amplified m-fold by k^m
        let tol = (2 * m + 2) as f64 * f64::EPSILON * e.abs();
        for k in disp.degenerate_momenta(e).unwrap() {
            prop_assert!((disp.energy(k) - e).abs() <= tol, "k={k} ε={} E={e}", disp.energy(k));
        }
    }

    #[test]
    fn isotropic_shell(a in 0.5..6.0f64, dim in 1u32..=3, le in -6.0..3.0f64) {
        let disp = DispersionIsotropic::new(a, dim).unwrap();
        let e = 10f64.powf(le);
        for k in disp.degenerate_momenta(e).unwrap() {
            prop_assert!((disp.energy(k) - e).abs() <= (2.0 * a + 4.0) * f64::EPSILON * e);
        }
    }

    #[test]
    fn velocity_density_identity(half_m in 1u32..=5, neg in any::<bool>(), d in 0.01..100.0f64, le in -8.0..4.0f64) {
        let sigma = if neg { -1 } else { 1 };
        let disp = DispersionPower1D::new(sigma, d, 2 * half_m).unwrap();
        let e = sigma as f64 * 10f64.powf(le);
        prop_assert!((disp.velocity_product_rho_limit(e).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_dimensional_isotropic_is_even_power(half_m in 1u32..=4, le in -8.0..4.0f64) {
        let m = 2 * half_m;
        let e = 10f64.powf(le);
        let iso = Dispersion::isotropic(m as f64, 1).unwrap();
        let pow = Dispersion::power(1, 1.0, m).unwrap();
        let (a, b) = (iso.density_of_states(e).unwrap(), pow.density_of_states(e).unwrap());
        prop_assert!((a - b).abs() <= 4.0 * f64::EPSILON * b, "{a} vs {b}");
    }
}

#[test]
fn zero_is_never_in_the_continuum() {
    for m in 1..=6 {
        for s in [1, -1] {
            let d = Dispersion::power(s, 1.0, m).unwrap();
            assert!(!d.in_continuum(0.0));
            assert!(d.continuum().threshold_energies.contains(&0.0));
        }
    }
    let iso = Dispersion::isotropic(3.0, 2).unwrap();
    assert!(!iso.in_continuum(0.0));
    assert!(!iso.in_continuum(-1.0));
}
