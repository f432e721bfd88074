//! Power-law dispersion relations and their spectral data.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// ε(k) = σ|d|k^m on the real line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionPower1D {
    pub sigma: i8,
    pub d: f64,
    pub m: u32,
}

/// ε(k) = |k|^a in D dimensions, radially.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionIsotropic {
    pub a: f64,
    #[serde(rename = "D")]
    pub dim: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Dispersion {
    Power1d(DispersionPower1D),
    Isotropic(DispersionIsotropic),
}

/// Open intervals of the continuum plus threshold energies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub intervals: Vec<(f64, f64)>,
    pub threshold_energies: Vec<f64>,
}

impl Spectrum {
    pub fn contains(&self, e: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| e > a && e < b)
    }
}

impl DispersionPower1D {
    pub fn new(sigma: i8, d: f64, m: u32) -> Result<Self> {
        let s = DispersionPower1D { sigma, d, m };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.sigma != 1 && self.sigma != -1 {
            bad.push(format!("dispersion.sigma must be +1 or -1, got {}", self.sigma));
        }
        if !(self.d > 0.0 && self.d.is_finite()) {
            bad.push(format!("dispersion.d must be positive, got {}", self.d));
        }
        if self.m < 1 {
            bad.push("dispersion.m must be >= 1".into());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(bad))
        }
    }

    pub fn sigma_f(&self) -> f64 {
        self.sigma as f64
    }

    pub fn is_even(&self) -> bool {
        self.m % 2 == 0
    }

    pub fn energy(&self, k: f64) -> f64 {
        self.sigma_f() * self.d * k.powi(self.m as i32)
    }

    /// dε/dk.
    pub fn velocity(&self, k: f64) -> f64 {
        self.sigma_f() * self.d * self.m as f64 * k.powi(self.m as i32 - 1)
    }

    pub fn continuum(&self) -> Spectrum {
        let intervals = if !self.is_even() {
            vec![(f64::NEG_INFINITY, 0.0), (0.0, f64::INFINITY)]
        } else if self.sigma > 0 {
            vec![(0.0, f64::INFINITY)]
        } else {
            vec![(f64::NEG_INFINITY, 0.0)]
        };
        Spectrum { intervals, threshold_energies: vec![0.0] }
    }

    pub fn in_continuum(&self, e: f64) -> bool {
        e != 0.0 && e.is_finite() && (!self.is_even() || self.sigma_f() * e > 0.0)
    }

    /// Momentum magnitude on the energy shell |E|.
    pub fn shell_momentum(&self, e: f64) -> f64 {
        (e.abs() / self.d).powf(1.0 / self.m as f64)
    }

    /// Even m: [+p, -p]; odd m: the single root with sign σ·sign(E).
    pub fn degenerate_momenta(&self, e: f64) -> Result<Vec<f64>> {
        if !self.in_continuum(e) {
            return Err(Error::OutsideContinuum { energy: e });
        }
        let p = self.shell_momentum(e);
        Ok(if self.is_even() { vec![p, -p] } else { vec![p * self.sigma_f() * e.signum()] })
    }

    /// 2/(m d^{1/m}) |E|^{-1+1/m}, counting both momentum branches.
    pub fn density_of_states(&self, e: f64) -> Result<f64> {
        if e == 0.0 {
            return if self.m >= 2 { Err(Error::ThresholdDivergence) } else { Ok(2.0 / self.d) };
        }
        if !self.in_continuum(e) {
            return Err(Error::OutsideContinuum { energy: e });
        }
        Ok(self.rho_abs(e.abs()))
    }

    /// The density formula at |ω| without a continuum check; used by L(ω).
    pub(crate) fn rho_abs(&self, mag: f64) -> f64 {
        let m = self.m as f64;
        2.0 / (m * self.d.powf(1.0 / m)) * mag.powf(-1.0 + 1.0 / m)
    }

    /// |ε'(k_α)ε'(k_β)|^{1/2}·ρ(|E|)/2. The density counts both branches
    /// while each of the two velocities belongs to one of them, hence the 1/2;
    /// the combination equals 1 for every E and d.
    pub fn velocity_product_rho_limit(&self, e: f64) -> Result<f64> {
        let ks = self.degenerate_momenta(e)?;
        let (ka, kb) = (ks[0], *ks.last().unwrap());
        let v = (self.velocity(ka) * self.velocity(kb)).abs().sqrt();
        Ok(v * self.rho_abs(e.abs()) / 2.0)
    }
}

/// Γ(n/2) for positive integer n.
pub fn gamma_half_integer(n: u32) -> f64 {
    let mut x = if n % 2 == 0 { 1.0 } else { PI.sqrt() };
    let mut k = if n % 2 == 0 { 2 } else { 1 };
    while k < n {
        x *= k as f64 / 2.0;
        k += 2;
    }
    x
}

impl DispersionIsotropic {
    pub fn new(a: f64, dim: u32) -> Result<Self> {
        let s = DispersionIsotropic { a, dim };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.a > 0.0 && self.a.is_finite()) {
            bad.push(format!("dispersion.a must be positive, got {}", self.a));
        }
        if self.dim < 1 {
            bad.push("dispersion.D must be >= 1".into());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(bad))
        }
    }

    pub fn zeta(&self) -> f64 {
        self.a / self.dim as f64
    }

    /// Solid angle 2π^{D/2}/Γ(D/2).
    pub fn b_d(&self) -> f64 {
        2.0 * PI.powf(self.dim as f64 / 2.0) / gamma_half_integer(self.dim)
    }

    pub fn energy(&self, k: f64) -> f64 {
        k.abs().powf(self.a)
    }

    pub fn velocity(&self, k: f64) -> f64 {
        self.a * k.abs().powf(self.a - 1.0)
    }

    pub fn continuum(&self) -> Spectrum {
        Spectrum { intervals: vec![(0.0, f64::INFINITY)], threshold_energies: vec![0.0] }
    }

    pub fn in_continuum(&self, e: f64) -> bool {
        e > 0.0 && e.is_finite()
    }

    pub fn degenerate_momenta(&self, e: f64) -> Result<Vec<f64>> {
        if !self.in_continuum(e) {
            return Err(Error::OutsideContinuum { energy: e });
        }
        Ok(vec![e.powf(1.0 / self.a)])
    }

    /// (b_D/a) E^{-1+1/ζ}.
    pub fn density_of_states(&self, e: f64) -> Result<f64> {
        if e == 0.0 {
            return if self.zeta() > 1.0 {
                Err(Error::ThresholdDivergence)
            } else if self.zeta() == 1.0 {
                Ok(self.b_d() / self.a)
            } else {
                Ok(0.0)
            };
        }
        if !self.in_continuum(e) {
            return Err(Error::OutsideContinuum { energy: e });
        }
        Ok(self.rho_abs(e))
    }

    pub(crate) fn rho_abs(&self, mag: f64) -> f64 {
        self.b_d() / self.a * mag.powf(-1.0 + 1.0 / self.zeta())
    }
}

impl Dispersion {
    pub fn power(sigma: i8, d: f64, m: u32) -> Result<Self> {
        Ok(Dispersion::Power1d(DispersionPower1D::new(sigma, d, m)?))
    }

    pub fn isotropic(a: f64, dim: u32) -> Result<Self> {
        Ok(Dispersion::Isotropic(DispersionIsotropic::new(a, dim)?))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Dispersion::Power1d(p) => p.validate(),
            Dispersion::Isotropic(i) => i.validate(),
        }
    }

    pub fn energy(&self, k: f64) -> f64 {
        match self {
            Dispersion::Power1d(p) => p.energy(k),
            Dispersion::Isotropic(i) => i.energy(k),
        }
    }

    pub fn velocity(&self, k: f64) -> f64 {
        match self {
            Dispersion::Power1d(p) => p.velocity(k),
            Dispersion::Isotropic(i) => i.velocity(k),
        }
    }

    pub fn continuum(&self) -> Spectrum {
        match self {
            Dispersion::Power1d(p) => p.continuum(),
            Dispersion::Isotropic(i) => i.continuum(),
        }
    }

    pub fn in_continuum(&self, e: f64) -> bool {
        match self {
            Dispersion::Power1d(p) => p.in_continuum(e),
            Dispersion::Isotropic(i) => i.in_continuum(e),
        }
    }

    pub fn degenerate_momenta(&self, e: f64) -> Result<Vec<f64>> {
        match self {
            Dispersion::Power1d(p) => p.degenerate_momenta(e),
            Dispersion::Isotropic(i) => i.degenerate_momenta(e),
        }
    }

    pub fn density_of_states(&self, e: f64) -> Result<f64> {
        match self {
            Dispersion::Power1d(p) => p.density_of_states(e),
            Dispersion::Isotropic(i) => i.density_of_states(e),
        }
    }

    /// Energy-units scale of the threshold singularity: m for 1D, ζ otherwise.
    pub fn divergence_exponent(&self) -> f64 {
        match self {
            Dispersion::Power1d(p) => p.m as f64,
            Dispersion::Isotropic(i) => i.zeta(),
        }
    }

    /// Number of open channels on the shell.
    pub fn channel_count(&self) -> usize {
        match self {
            Dispersion::Power1d(p) if p.is_even() => 2,
            _ => 1,
        }
    }

    /// Upper bound on the |V(k)|² decay exponent for a UV-finite model.
    pub fn decay_threshold(&self) -> f64 {
        match self {
            Dispersion::Power1d(p) => p.m as f64 - 1.0,
            Dispersion::Isotropic(i) => i.a - i.dim as f64,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn energies() {
        let d2 = DispersionPower1D::new(1, 1.0, 2).unwrap();
        assert_eq!(d2.energy(-2.0), 4.0);
        let d3 = DispersionPower1D::new(-1, 1.0, 3).unwrap();
        assert_eq!(d3.energy(2.0), -8.0);
        assert_eq!(DispersionIsotropic::new(4.0, 3).unwrap().energy(1.0), 1.0);
    }

    #[test]
    fn momenta() {
        let d2 = DispersionPower1D::new(1, 1.0, 2).unwrap();
        assert_eq!(d2.degenerate_momenta(4.0).unwrap(), vec![2.0, -2.0]);
        assert_eq!(d2.degenerate_momenta(-1.0), Err(Error::OutsideContinuum { energy: -1.0 }));
        let d3 = DispersionPower1D::new(1, 1.0, 3).unwrap();
        let k = d3.degenerate_momenta(-8.0).unwrap();
        assert_eq!(k.len(), 1);
        assert!((k[0] + 2.0).abs() < 1e-15);
        let d3m = DispersionPower1D::new(-1, 1.0, 3).unwrap();
        assert!((d3m.degenerate_momenta(-8.0).unwrap()[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn densities() {
        let d2 = DispersionPower1D::new(1, 1.0, 2).unwrap();
        assert!((d2.density_of_states(4.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(d2.density_of_states(0.0), Err(Error::ThresholdDivergence));
        let iso = DispersionIsotropic::new(2.0, 3).unwrap();
        assert!((iso.density_of_states(1.0).unwrap() - 2.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn solid_angles() {
        let b = |d| DispersionIsotropic::new(2.0, d).unwrap().b_d();
        assert!((b(1) - 2.0).abs() < 1e-15);
        assert!((b(2) - 2.0 * PI).abs() < 1e-14);
        assert!((b(3) - 4.0 * PI).abs() < 1e-14);
        assert!((b(4) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn continua() {
        let c = |s, m| DispersionPower1D::new(s, 1.0, m).unwrap().continuum().intervals;
        assert_eq!(c(1, 2), vec![(0.0, f64::INFINITY)]);
        assert_eq!(c(-1, 2), vec![(f64::NEG_INFINITY, 0.0)]);
        assert_eq!(c(1, 5), vec![(f64::NEG_INFINITY, 0.0), (0.0, f64::INFINITY)]);
        assert_eq!(DispersionIsotropic::new(4.0, 3).unwrap().continuum().intervals, vec![(0.0, f64::INFINITY)]);
    }

    #[test]
    fn velocity_rho_identity() {
        let d = |dd, m| DispersionPower1D::new(1, dd, m).unwrap();
        assert!((d(1.0, 2).velocity_product_rho_limit(1e-6).unwrap() - 1.0).abs() < 1e-12);
        assert!((d(1.0, 4).velocity_product_rho_limit(1e-8).unwrap() - 1.0).abs() < 1e-10);
        assert!((d(2.0, 2).velocity_product_rho_limit(1.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_parameters() {
        assert!(DispersionPower1D::new(0, 1.0, 2).is_err());
        assert!(DispersionPower1D::new(1, -1.0, 2).is_err());
        assert!(DispersionPower1D::new(1, 1.0, 0).is_err());
        assert!(DispersionIsotropic::new(0.0, 3).is_err());
    }
}
