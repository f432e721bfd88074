//! Isotropic dispersion |k|^a in D dimensions: radial K, s-wave channel
//! couplings and the a ≤ D regimes.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::dispersion::{Dispersion, DispersionIsotropic};
use crate::error::{Error, Result};
use crate::models::{CouplingSpec, EmitterModel};
use crate::numerics::gauss::legendre;
use crate::numerics::{integrate_on, QuadratureSpec};
use crate::smatrix::{universal_limit, UniversalLimit};

/// Coupling of the emitters to the angular channel α at energy E
/// (α = 1 is the s-wave).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelCoupling {
    pub alpha: usize,
    #[serde(rename = "V_alpha_E")]
    pub v_alpha_e: Complex64,
}

/// Channel couplings for α = 1..=n_channels. Isotropic couplings only feed
/// the s-wave; the others vanish identically.
pub fn channel_couplings(e: f64, coupling: &CouplingSpec, d: &DispersionIsotropic, n_channels: usize) -> Result<Vec<ChannelCoupling>> {
    if !(e > 0.0) {
        return Err(Error::OutsideContinuum { energy: e });
    }
    let k = e.powf(1.0 / d.a);
    Ok((1..=n_channels)
        .map(|alpha| ChannelCoupling {
            alpha,
            v_alpha_e: if alpha == 1 { coupling.value(k) } else { Complex64::new(0.0, 0.0) },
        })
        .collect())
}

/// V_{α,E} by explicit angular projection, with V(k) given as a function of
/// the D-vector k: b_D^{-1/2}∫dΩ Y_α*(n) V(k_E n). Only D = 1, 2, 3 and the
/// lowest two channels (α = 2 is cos φ resp. cos θ) are tabulated.
pub fn project_channel<F>(v: &F, e: f64, d: &DispersionIsotropic, alpha: usize, nodes: usize) -> Result<Complex64>
where
    F: Fn(&[f64]) -> Complex64,
{
    if !(e > 0.0) {
        return Err(Error::OutsideContinuum { energy: e });
    }
    if alpha == 0 || alpha > 2 {
        return Err(Error::InvalidInput(format!("channel {alpha} is not tabulated")));
    }
    let k = e.powf(1.0 / d.a);
    let b = d.b_d();
    let gl = legendre(nodes);
    // Y_1 = b^{-1/2}; Y_2 normalised on the sphere.
    let sum = match d.dim {
        1 => {
            // The "sphere" is {+1, -1}; α = 2 is the odd channel.
            let sgn = if alpha == 1 { 1.0 } else { -1.0 };
            (v(&[k]) + v(&[-k]) * sgn) / b.sqrt()
        }
        2 => {
            let y2 = (1.0 / PI).sqrt();
            gl.iter().fold(Complex64::new(0.0, 0.0), |acc, &(x, w)| {
                let phi = PI * (x + 1.0);
                let y = if alpha == 1 { 1.0 / b.sqrt() } else { y2 * phi.cos() };
                acc + v(&[k * phi.cos(), k * phi.sin()]) * (w * PI * y)
            })
        }
        3 => {
            let y2 = (3.0 / (4.0 * PI)).sqrt();
            let mut acc = Complex64::new(0.0, 0.0);
            for &(x, wx) in &gl {
                let st = (1.0 - x * x).sqrt();
                let y = if alpha == 1 { 1.0 / b.sqrt() } else { y2 * x };
                for &(p, wp) in &gl {
                    let phi = PI * (p + 1.0);
                    let n = [st * phi.cos(), st * phi.sin(), x];
                    acc += v(&[k * n[0], k * n[1], k * n[2]]) * (wx * wp * PI * y);
                }
            }
            acc
        }
        _ => return Err(Error::InvalidInput(format!("angular projection not tabulated for D = {}", d.dim))),
    };
    Ok(sum / b.sqrt())
}

/// K(ω) = b_D∫₀^∞ dk k^{D-1}|v(k)|²/(ω - k^a), integrated directly on the
/// half-line (no threshold subtraction).
pub fn k_radial(omega: Complex64, model: &EmitterModel, d: &DispersionIsotropic) -> Result<Complex64> {
    k_radial_with(omega, model.coupling(), d, &QuadratureSpec::default())
}

pub fn k_radial_with(omega: Complex64, c: &CouplingSpec, d: &DispersionIsotropic, spec: &QuadratureSpec) -> Result<Complex64> {
    if omega.re >= 0.0 && omega.im == 0.0 {
        return Err(Error::OnContinuum { re: omega.re, im: omega.im });
    }
    if c.is_zero() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let b = d.b_d();
    let dm1 = d.dim as f64 - 1.0;
    let a = d.a;
    let f = |k: f64| {
        let v2 = c.abs2(k);
        if v2 == 0.0 || k == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        // k^{D-1}/(ω - k^a) without overflowing k^a.
        let ka = k.powf(a);
        let r = if ka.is_finite() { k.powf(dm1) / (omega - ka) } else { Complex64::new(0.0, 0.0) };
        r * (b * v2)
    };
    // Resolve the shell |k| ≈ |ω|^{1/a} and the coupling width.
    let p = omega.norm().powf(1.0 / a);
    let w = c.width();
    let mut breaks = vec![w];
    let (lo, hi) = (p.min(w) / 64.0, 64.0 * p.max(w));
    let mut x = lo;
    while x < hi {
        breaks.push(x);
        x *= 4.0;
    }
    breaks.push(p);
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();
    let decay = (c.decay_exponent() * 2.0 - dm1 + a).max(1.1);
    Ok(integrate_on(&f, 0.0, f64::INFINITY, &breaks, &spec.with_decay(decay))?.value)
}

/// |K(ω)|/|ln|ω|| at a = D, where K diverges logarithmically at threshold;
/// None for other exponents.
pub fn log_divergence_ratio(omega: Complex64, model: &EmitterModel, d: &DispersionIsotropic) -> Result<Option<f64>> {
    if d.a != d.dim as f64 {
        return Ok(None);
    }
    let k = k_radial(omega, model, d)?;
    Ok(Some(k.norm() / omega.norm().ln().abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// a < D: S(0) = 1.
    TrivialIdentity,
    /// a = D: S(0) = 1, reached only logarithmically.
    LogMarginal,
    /// a > D: s-wave S(0) = e^{2πiD/a}.
    Universal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeInfo {
    pub regime: Regime,
    pub limit: UniversalLimit,
}

pub fn regime(d: &DispersionIsotropic) -> RegimeInfo {
    let dim = d.dim as f64;
    let regime = if d.a < dim {
        Regime::TrivialIdentity
    } else if d.a == dim {
        Regime::LogMarginal
    } else {
        Regime::Universal
    };
    let limit = universal_limit(&Dispersion::Isotropic(*d)).expect("isotropic dispersions always have a limit");
    RegimeInfo { regime, limit }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagators::{k_scalar, ScatteringSystem};
    use crate::smatrix::swave_channel_s11;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn iso(a: f64, dim: u32) -> DispersionIsotropic {
        DispersionIsotropic::new(a, dim).unwrap()
    }

    #[test]
    fn zero_coupling_gives_zero() {
        let m = EmitterModel::single(c(0.0, 0.0), CouplingSpec::gaussian(c(0.0, 0.0), 1.0));
        assert_eq!(k_radial(c(0.3, 0.4), &m, &iso(4.0, 3)).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn one_dimensional_reduction() {
        let m = EmitterModel::single(c(0.0, 0.0), CouplingSpec::gaussian(c(0.8, 0.3), 1.3));
        let d1 = Dispersion::power(1, 1.0, 2).unwrap();
        for w in [c(0.5, 1.0), c(-2.0, 0.1), c(3.0, -0.5), c(-0.01, 0.0), c(1e-3, 1e-2)] {
            let a = k_radial(w, &m, &iso(2.0, 1)).unwrap();
            let b = k_scalar(w, &m, &d1).unwrap();
            assert!((a - b).norm() <= 1e-10 * b.norm().max(1.0), "{w}: {a} vs {b}");
        }
    }

    #[test]
    fn radial_matches_subtracted_kernel() {
        let m = EmitterModel::single(c(0.0, 0.0), CouplingSpec::gaussian(c(1.0, 0.0), 1.0));
        for (a, dim) in [(4.0, 3), (3.0, 2), (2.0, 3), (2.0, 2)] {
            let d = Dispersion::isotropic(a, dim).unwrap();
            for w in [c(0.2, 0.7), c(-1.0, 0.0), c(2.0, -0.3)] {
                let x = k_radial(w, &m, &iso(a, dim)).unwrap();
                let y = k_scalar(w, &m, &d).unwrap();
                assert!((x - y).norm() <= 1e-9 * y.norm(), "a={a} D={dim} {w}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn log_divergence_bounded() {
        let m = EmitterModel::single(c(0.0, 0.0), CouplingSpec::gaussian(c(1.0, 0.0), 1.0));
        let d = iso(2.0, 2);
        let mut ratios = Vec::new();
        for j in 2..=8 {
            let w = c(0.0, 10f64.powi(-j));
            ratios.push(log_divergence_ratio(w, &m, &d).unwrap().unwrap());
        }
        let (lo, hi) = ratios.iter().fold((f64::MAX, 0.0f64), |(l, h), &r| (l.min(r), h.max(r)));
        assert!(hi < 10.0 && lo > 0.1 && hi / lo < 3.0, "{ratios:?}");
        // The coefficient tends to b_D|v(0)|²/a = π.
        assert!((ratios.last().unwrap() - PI).abs() < 0.3, "{ratios:?}");
        assert_eq!(log_divergence_ratio(c(0.0, 1e-3), &m, &iso(4.0, 3)).unwrap(), None);
    }

    #[test]
    fn regimes() {
        assert_eq!(regime(&iso(2.0, 3)).regime, Regime::TrivialIdentity);
        assert_eq!(regime(&iso(3.0, 3)).regime, Regime::LogMarginal);
        let r = regime(&iso(4.0, 3));
        assert_eq!(r.regime, Regime::Universal);
        let l = r.limit.det_at(1.0).unwrap();
        assert!((l - Complex64::from_polar(1.0, 1.5 * PI)).norm() < 1e-12);
        let one = regime(&iso(2.0, 3)).limit.det_at(1.0).unwrap();
        assert!((one - 1.0).norm() < 1e-12);
    }

    #[test]
    fn swave_identity_by_projection() {
        let w = 1.3;
        let amp = c(0.7, -0.4);
        let cs = CouplingSpec::gaussian(amp, w);
        for (a, dim) in [(4.0, 3), (3.0, 2), (2.0, 1)] {
            let d = iso(a, dim);
            let v = |k: &[f64]| cs.value(k.iter().map(|x| x * x).sum::<f64>().sqrt());
            for e in [1e-4, 0.3, 2.0] {
                let s = project_channel(&v, e, &d, 1, 48).unwrap();
                let tab = channel_couplings(e, &cs, &d, 2).unwrap();
                let target = cs.abs2(e.powf(1.0 / a));
                assert!((s.norm_sqr() - target).abs() < 1e-12 * target.max(1e-300), "a={a} D={dim} E={e}");
                assert!((tab[0].v_alpha_e.norm_sqr() - target).abs() < 1e-14);
                assert_eq!(tab[1].v_alpha_e, c(0.0, 0.0));
                let p = project_channel(&v, e, &d, 2, 48).unwrap();
                assert!(p.norm() < 1e-12, "p-wave leak {p}");
            }
        }
    }

    #[test]
    fn trivial_regime_s11_approaches_one_monotonically() {
        let m = EmitterModel::single(c(0.2, 0.0), CouplingSpec::gaussian(c(1.0, 0.0), 1.0));
        let sys = ScatteringSystem::emitter(Dispersion::isotropic(2.0, 3).unwrap(), m);
        let mut prev = f64::MAX;
        for j in 4..=12 {
            let s = swave_channel_s11(10f64.powi(-j), &sys).unwrap();
            let dist = (s - 1.0).norm();
            assert!(dist < prev, "not monotone at 1e-{j}: {dist} >= {prev}");
            prev = dist;
        }
        assert!(prev < 1e-4);
    }
}
