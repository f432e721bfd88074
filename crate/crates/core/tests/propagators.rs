use std::f64::consts::PI;

use dscatter::dispersion::{Dispersion, DispersionIsotropic};
use dscatter::hyperdim::k_radial;
use dscatter::models::{CouplingSpec, EmitterModel};
use dscatter::propagators::{k_boundary, k_scalar, l_boundary, l_closed, l_quadrature, BoundarySide, KappaEntry, PolarFrequency};
use dscatter::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn coupling(kind: u8, amp: Complex64, w: f64) -> CouplingSpec {
    match kind % 2 {
        0 => CouplingSpec::gaussian(amp, w),
        _ => CouplingSpec::lorentzian(amp, w, 2.0),
    }
}

#[test]
fn l_over_rho_tends_to_pi_kappa() {
    for m in 2..=6u32 {
        for sigma in [1i8, -1] {
            let d = Dispersion::power(sigma, 1.0, m).unwrap();
            let Dispersion::Power1d(p) = d else { unreachable!() };
            for theta in [0.3, 1.2, 2.0, 2.9, 4.0, 5.5] {
                let w = |mag: f64| Complex64::from_polar(mag, theta) * sigma as f64;
                let branch = PolarFrequency::from_complex(w(1.0), &p).unwrap().branch;
                let target = PI * KappaEntry::new(m, branch).kappa.norm();
                for k in [2, 4, 6, 8, 10] {
                    let mag = 10f64.powi(-k);
                    let ratio = l_quadrature(w(mag), &d).unwrap().norm() / d.density_of_states(mag * sigma as f64).unwrap();
                    assert!((ratio - target).abs() < 1e-8 * target, "m={m} σ={sigma} θ={theta} |ω|={mag}: {ratio} vs {target}");
                }
            }
        }
    }
}

/// K/L → |V(0)|² along rays; the deviation shrinks monotonically.
#[test]
fn toeplitz_limit_along_rays() {
    for m in 2..=6u32 {
        for sigma in [1i8, -1] {
            let d = Dispersion::power(sigma, 1.0, m).unwrap();
            for (kind, amp, w) in [(0u8, c(1.0, 0.0), 1.0), (1, c(0.6, -0.8), 0.7), (0, c(-0.3, 1.2), 1.9)] {
                let model = EmitterModel::single(c(0.1, 0.0), coupling(kind, amp, w));
                let v0 = amp.norm_sqr();
                let mut thetas = vec![PI / 4.0, PI / 2.0, 3.0 * PI / 4.0];
                if m % 2 == 0 {
                    thetas.push(PI);
                }
                for theta in thetas {
                    let dev: Vec<f64> = (2..=6)
                        .map(|k| {
                            let omega = Complex64::from_polar(10f64.powi(-k), theta) * sigma as f64;
                            (k_scalar(omega, &model, &d).unwrap() / l_closed(omega, &d).unwrap() - v0).norm()
                        })
                        .collect();
                    assert!(dev.windows(2).all(|x| x[1] < x[0]), "m={m} σ={sigma} θ={theta}: {dev:?}");
                    assert!(dev[dev.len() - 1] < 0.05 * v0, "m={m} σ={sigma} θ={theta}: {dev:?}");
                }
                if m % 2 == 1 {
                    // θ = π is the continuum for odd m: approach it from both sides.
                    for side in [BoundarySide::Above, BoundarySide::Below] {
                        let dev: Vec<f64> = (2..=6)
                            .map(|k| {
                                let e = -(sigma as f64) * 10f64.powi(-k);
                                (k_boundary(e, side, &model, &d).unwrap() / l_boundary(e, side, &d).unwrap() - v0).norm()
                            })
                            .collect();
                        assert!(dev.windows(2).all(|x| x[1] < x[0]), "m={m} σ={sigma} θ=π {side:?}: {dev:?}");
                    }
                }
            }
        }
    }
}

#[test]
fn toeplitz_limit_in_d_dimensions() {
    for (a, dim) in [(4.0, 3), (3.0, 2), (2.0, 1), (5.0, 2)] {
        let disp = DispersionIsotropic::new(a, dim).unwrap();
        let d = Dispersion::Isotropic(disp);
        let amp = c(0.8, 0.5);
        let model = EmitterModel::single(c(0.0, 0.0), CouplingSpec::gaussian(amp, 1.1));
        for theta in [PI / 3.0, PI, 5.0 * PI / 3.0] {
            let dev: Vec<f64> = (2..=6)
                .map(|k| {
                    let omega = Complex64::from_polar(10f64.powi(-k), theta);
                    (k_radial(omega, &model, &disp).unwrap() / l_closed(omega, &d).unwrap() - amp.norm_sqr()).norm()
                })
                .collect();
            assert!(dev.windows(2).all(|x| x[1] < x[0]), "a={a} D={dim} θ={theta}: {dev:?}");
            assert!(dev[dev.len() - 1] < 0.05, "a={a} D={dim}: {dev:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    /// L(ω)/ρ(|ω|) = -πi·2/(1 - e^{2πi/ζ})·e^{-iθ(ζ-1)/ζ}, against quadrature.
    #[test]
    fn isotropic_l_over_rho(zeta in 1.15..4.0f64, dim in 1u32..=3, theta in 0.05..(2.0 * PI - 0.05), lm in -3.0..1.0f64) {
        let disp = DispersionIsotropic::new(zeta * dim as f64, dim).unwrap();
        let d = Dispersion::Isotropic(disp);
        let mag = 10f64.powf(lm);
        let omega = Complex64::from_polar(mag, theta);
        let rho = disp.density_of_states(mag).unwrap();
        let expected = -PI * c(0.0, 1.0) * 2.0 / (c(1.0, 0.0) - Complex64::from_polar(1.0, 2.0 * PI / zeta)) * Complex64::from_polar(1.0, -theta * (zeta - 1.0) / zeta);
        let got = l_quadrature(omega, &d).unwrap() / rho;
        prop_assert!((got - expected).norm() < 1e-8 * expected.norm(), "{got} vs {expected}");
    }

    #[test]
    fn boundary_jump_is_the_on_shell_density(m in 1u32..=6, neg in any::<bool>(), le in -4.0..1.5f64, kind in 0u8..2, ar in -1.5..1.5f64, ai in -1.5..1.5f64, w in 0.4..2.0f64, low in any::<bool>()) {
        let sigma = if neg { -1 } else { 1 };
        let d = Dispersion::power(sigma, 1.0, m).unwrap();
        let Dispersion::Power1d(p) = d else { unreachable!() };
        let mut e = sigma as f64 * 10f64.powf(le);
        if m % 2 == 1 && low {
            e = -e;
        }
        let amp = c(ar, ai);
        prop_assume!(amp.norm() > 0.1);
        let cp = coupling(kind, amp, w);
        let model = EmitterModel::single(c(0.0, 0.0), cp.clone());
        let above = k_boundary(e, BoundarySide::Above, &model, &d).unwrap();
        let below = k_boundary(e, BoundarySide::Below, &model, &d).unwrap();
        let shell: f64 = p.degenerate_momenta(e).unwrap().iter().map(|&k| cp.abs2(k) / p.velocity(k).abs()).sum();
        let expected = c(0.0, -2.0 * PI * shell);
        prop_assert!((above - below - expected).norm() <= 1e-9 * (1.0 + above.norm()), "{} vs {}", above - below, expected);
        // passivity of the induced decay
        prop_assert!(above.im <= 0.0);
    }
}
