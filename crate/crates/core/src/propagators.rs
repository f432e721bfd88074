//! The bare propagator L(ω), the coupling-weighted K(ω) off the real axis and
//! on the continuum edges, the emitter Green's function and J(ω).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dispersion::{Dispersion, DispersionIsotropic, DispersionPower1D};
use crate::error::{Error, Result};
use crate::models::{CMatrix, CouplingSpec, EmitterModel, Scatterer, SeparableModel};
use crate::numerics::{integrate_on, principal_value_on, QuadratureSpec};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Frequencies closer to the threshold than this are rejected.
pub const THRESHOLD_FLOOR: f64 = 1e-100;

/// Which limit onto the real axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundarySide {
    Above,
    Below,
}

impl BoundarySide {
    /// +1 above, -1 below.
    pub fn sign(self) -> f64 {
        match self {
            BoundarySide::Above => 1.0,
            BoundarySide::Below => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            BoundarySide::Above => BoundarySide::Below,
            BoundarySide::Below => BoundarySide::Above,
        }
    }
}

/// A point off the real axis, or a real energy approached from one side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Frequency {
    OffAxis(Complex64),
    Boundary(f64, BoundarySide),
}

impl Frequency {
    pub fn above(e: f64) -> Self {
        Frequency::Boundary(e, BoundarySide::Above)
    }

    pub fn below(e: f64) -> Self {
        Frequency::Boundary(e, BoundarySide::Below)
    }

    /// The number that multiplies 1_N in ω - K^R - K(ω).
    pub fn value(&self) -> Complex64 {
        match *self {
            Frequency::OffAxis(w) => w,
            Frequency::Boundary(e, _) => Complex64::new(e, 0.0),
        }
    }
}

impl From<Complex64> for Frequency {
    fn from(w: Complex64) -> Self {
        Frequency::OffAxis(w)
    }
}

// ---------------------------------------------------------------------------
// κ_m and the polar decomposition

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaBranch {
    /// θ ∈ (0, π), odd m.
    Upper,
    /// θ ∈ (π, 2π), odd m.
    Lower,
    /// any θ, even m.
    EvenAll,
}

/// Residue-sum prefactor of the closed-form L(ω).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KappaEntry {
    pub m: u32,
    pub branch: KappaBranch,
    pub mu: Complex64,
    pub kappa: Complex64,
    pub index_set_size: usize,
}

impl KappaEntry {
    pub fn new(m: u32, branch: KappaBranch) -> Self {
        assert!(m >= 1);
        let mu = Complex64::from_polar(1.0, PI / m as f64);
        let even = m % 2 == 0;
        let branch = if even { KappaBranch::EvenAll } else if branch == KappaBranch::EvenAll { KappaBranch::Upper } else { branch };
        let kappa = match branch {
            KappaBranch::EvenAll => 2.0 / (ONE - mu * mu),
            KappaBranch::Upper => -1.0 / (mu - 1.0),
            KappaBranch::Lower => -1.0 / ((mu - 1.0) * mu),
        };
        let e = KappaEntry { m, branch, mu, kappa, index_set_size: Self::index_set(m, branch).len() };
        // m = 1 is the symmetric-limit value; the residue argument needs m >= 2.
        if m >= 2 {
            let d = (e.brute_force_sum() - kappa).norm();
            assert!(d < 1e-12, "kappa mismatch for m={m} {branch:?}: {d}");
        }
        e
    }

    /// Indices j of the roots μ^{2j}-rotations lying in the upper half plane.
    pub fn index_set(m: u32, branch: KappaBranch) -> Vec<u32> {
        let top = match branch {
            KappaBranch::EvenAll => (m as i64 - 2) / 2,
            KappaBranch::Upper => (m as i64 - 1) / 2,
            KappaBranch::Lower => (m as i64 - 3) / 2,
        };
        (0..=top).filter(|j| *j >= 0).map(|j| j as u32).collect()
    }

    /// Σ_{j∈A} (-μ)^{2j}.
    pub fn brute_force_sum(&self) -> Complex64 {
        Self::index_set(self.m, self.branch).iter().map(|&j| (-self.mu).powu(2 * j)).sum()
    }
}

/// ω = σ e^{iθ}|ω| with θ ∈ (0, 2π); θ ∈ {0, π, 2π} only for boundary values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolarFrequency {
    pub magnitude: f64,
    pub theta: f64,
    pub sigma: i8,
    pub branch: KappaBranch,
}

impl PolarFrequency {
    pub fn from_complex(w: Complex64, disp: &DispersionPower1D) -> Result<Self> {
        let mag = w.norm();
        if mag == 0.0 {
            return Err(Error::ZeroFrequency);
        }
        if mag < THRESHOLD_FLOOR {
            return Err(Error::NearThreshold { magnitude: mag });
        }
        let z = w * disp.sigma_f();
        let mut theta = z.arg();
        if theta < 0.0 {
            theta += 2.0 * PI;
        }
        let on_cut = if z.im == 0.0 { z.re > 0.0 || !disp.is_even() } else { false };
        if on_cut {
            return Err(Error::OnContinuum { re: w.re, im: w.im });
        }
        let branch = if disp.is_even() {
            KappaBranch::EvenAll
        } else if theta < PI {
            KappaBranch::Upper
        } else {
            KappaBranch::Lower
        };
        Ok(PolarFrequency { magnitude: mag, theta, sigma: disp.sigma, branch })
    }

    /// E ± i0 on the continuum.
    pub fn boundary(e: f64, side: BoundarySide, disp: &DispersionPower1D) -> Result<Self> {
        if !disp.in_continuum(e) {
            return Err(Error::OutsideContinuum { energy: e });
        }
        if e.abs() < THRESHOLD_FLOOR {
            return Err(Error::NearThreshold { magnitude: e.abs() });
        }
        let re_pos = disp.sigma_f() * e > 0.0;
        let im_pos = disp.sigma_f() * side.sign() > 0.0;
        let (theta, upper) = match (re_pos, im_pos) {
            (true, true) => (0.0, true),
            (true, false) => (2.0 * PI, false),
            (false, true) => (PI, true),
            (false, false) => (PI, false),
        };
        let branch = if disp.is_even() {
            KappaBranch::EvenAll
        } else if upper {
            KappaBranch::Upper
        } else {
            KappaBranch::Lower
        };
        Ok(PolarFrequency { magnitude: e.abs(), theta, sigma: disp.sigma, branch })
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::from_polar(self.magnitude, self.theta) * self.sigma as f64
    }
}

// ---------------------------------------------------------------------------
// L(ω)

fn l_polar_1d(p: &PolarFrequency, disp: &DispersionPower1D) -> Complex64 {
    let m = disp.m as f64;
    let kappa = KappaEntry::new(disp.m, p.branch).kappa;
    let rho = disp.rho_abs(p.magnitude);
    -(disp.sigma_f()) * PI * I * kappa * rho * Complex64::from_polar(1.0, -p.theta * (m - 1.0) / m)
}

fn l_iso(mag: f64, theta: f64, disp: &DispersionIsotropic) -> Result<Complex64> {
    let z = disp.zeta();
    if z <= 1.0 {
        return Err(Error::ZetaNotDivergent { zeta: z });
    }
    let rho = disp.rho_abs(mag);
    let c = 2.0 / (ONE - Complex64::from_polar(1.0, 2.0 * PI / z));
    Ok(-PI * I * rho * c * Complex64::from_polar(1.0, -theta * (z - 1.0) / z))
}

fn iso_theta(w: Complex64) -> Result<(f64, f64)> {
    let mag = w.norm();
    if mag == 0.0 {
        return Err(Error::ZeroFrequency);
    }
    if mag < THRESHOLD_FLOOR {
        return Err(Error::NearThreshold { magnitude: mag });
    }
    if w.im == 0.0 && w.re > 0.0 {
        return Err(Error::OnContinuum { re: w.re, im: w.im });
    }
    let mut theta = w.arg();
    if theta < 0.0 {
        theta += 2.0 * PI;
    }
    Ok((mag, theta))
}

/// Closed-form ∫dk 1/(ω - ε(k)) (radial b_D ∫k^{D-1} for isotropic).
pub fn l_closed(omega: Complex64, dispersion: &Dispersion) -> Result<Complex64> {
    match dispersion {
        Dispersion::Power1d(d) => Ok(l_polar_1d(&PolarFrequency::from_complex(omega, d)?, d)),
        Dispersion::Isotropic(d) => {
            let (mag, theta) = iso_theta(omega)?;
            l_iso(mag, theta, d)
        }
    }
}

/// L(E ± i0).
pub fn l_boundary(e: f64, side: BoundarySide, dispersion: &Dispersion) -> Result<Complex64> {
    match dispersion {
        Dispersion::Power1d(d) => Ok(l_polar_1d(&PolarFrequency::boundary(e, side, d)?, d)),
        Dispersion::Isotropic(d) => {
            if !d.in_continuum(e) {
                return Err(Error::OutsideContinuum { energy: e });
            }
            if e < THRESHOLD_FLOOR {
                return Err(Error::NearThreshold { magnitude: e });
            }
            let theta = if side == BoundarySide::Above { 0.0 } else { 2.0 * PI };
            l_iso(e, theta, d)
        }
    }
}

pub fn l_at(freq: Frequency, dispersion: &Dispersion) -> Result<Complex64> {
    match freq {
        Frequency::OffAxis(w) => l_closed(w, dispersion),
        Frequency::Boundary(e, s) => l_boundary(e, s, dispersion),
    }
}

/// Direct quadrature of the L integral, independent of the closed form.
pub fn l_quadrature(omega: Complex64, dispersion: &Dispersion) -> Result<Complex64> {
    let spec = QuadratureSpec::default();
    match dispersion {
        Dispersion::Power1d(d) => {
            PolarFrequency::from_complex(omega, d)?;
            let p = d.shell_momentum(omega.norm());
            let breaks = geometric_breaks(p, p, &near_real_roots_1d(omega, d));
            // Fold k and -k onto the half-line.
            let f = |k: f64| recip(omega - d.energy(k)) + recip(omega - d.energy(-k));
            let q = if d.is_even() { d.m as f64 } else { 2.0 * d.m as f64 };
            Ok(integrate_on(&f, 0.0, f64::INFINITY, &positive(&breaks), &spec.with_decay(q))?.value)
        }
        Dispersion::Isotropic(d) => {
            iso_theta(omega)?;
            if d.zeta() <= 1.0 {
                return Err(Error::ZetaNotDivergent { zeta: d.zeta() });
            }
            let p = omega.norm().powf(1.0 / d.a);
            let b = d.b_d();
            let dm1 = d.dim as f64 - 1.0;
            let f = |k: f64| b * radial_resolvent(omega, k, dm1, d.a);
            let breaks = geometric_breaks(p, p, &near_real_roots_iso(omega, d));
            let q = d.a - dm1;
            Ok(integrate_on(&f, 0.0, f64::INFINITY, &positive(&breaks), &spec.with_decay(q))?.value)
        }
    }
}

// ---------------------------------------------------------------------------
// K(ω)

/// 1/z, with an overflowing z treated as infinitely far away.
#[inline]
fn recip(z: Complex64) -> Complex64 {
    if z.re.is_finite() && z.im.is_finite() {
        1.0 / z
    } else {
        Complex64::new(0.0, 0.0)
    }
}

/// k^{D-1}/(ω - k^a), arranged not to overflow at large k.
#[inline]
fn radial_resolvent(w: Complex64, k: f64, dm1: f64, a: f64) -> Complex64 {
    if k <= 1.0 {
        k.powf(dm1) * recip(w - k.powf(a))
    } else {
        k.powf(dm1 - a) * recip(w * k.powf(-a) - 1.0)
    }
}

/// E - ε(k) for a dispersion ε(k) = ε(k0)(k/k0)^n near each pole k0 with
/// ε(k0) = E, written so that k - k0 enters exactly; the folded
/// principal-value windows rely on this.
fn shell_gap(e: f64, k: f64, poles: &[f64], n: f64) -> Option<f64> {
    poles.iter().find_map(|&k0| {
        let r = (k - k0) / k0;
        (r.abs() < 0.5).then(|| -e * (n * r.ln_1p()).exp_m1())
    })
}

fn positive(v: &[f64]) -> Vec<f64> {
    v.iter().copied().filter(|x| *x > 0.0).collect()
}

/// ±x for x geometric (ratio 4) spanning the threshold scale p and coupling
/// width w, plus 0 and the given extra points.
fn geometric_breaks(p: f64, w: f64, extra: &[f64]) -> Vec<f64> {
    let lo = p.min(w) / 64.0;
    let hi = p.max(w) * 64.0;
    let mut out = vec![0.0];
    // Anchor the grid on p so that p itself is a node.
    let mut x = p;
    while x > lo {
        x /= 4.0;
    }
    while x <= hi {
        out.push(x);
        out.push(-x);
        x *= 4.0;
    }
    for s in [0.5, 1.0, 2.0, 4.0] {
        out.push(s * w);
        out.push(-s * w);
    }
    out.extend_from_slice(extra);
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out.dedup();
    out
}

fn near_real_roots_1d(w: Complex64, d: &DispersionPower1D) -> Vec<f64> {
    let z = w / (d.sigma_f() * d.d);
    let m = d.m as f64;
    let r = z.norm().powf(1.0 / m);
    let phi = z.arg();
    (0..d.m)
        .map(|j| Complex64::from_polar(r, (phi + 2.0 * PI * j as f64) / m))
        .filter(|y| y.im.abs() < 0.3 * y.norm())
        .flat_map(peak_breaks)
        .collect()
}

/// Re y plus a geometric ladder of offsets resolving the Lorentzian-like
/// peak of width |Im y| around it.
fn peak_breaks(y: Complex64) -> Vec<f64> {
    let mut out = vec![y.re];
    let mut h = y.im.abs().max(1e-300);
    while h < 0.25 * y.norm() {
        out.push(y.re + h);
        out.push(y.re - h);
        h *= 8.0;
    }
    out
}

fn near_real_roots_iso(w: Complex64, d: &DispersionIsotropic) -> Vec<f64> {
    let y = Complex64::from_polar(w.norm().powf(1.0 / d.a), w.arg() / d.a);
    if y.im.abs() < 0.3 * y.norm() && y.re > 0.0 {
        peak_breaks(y)
    } else {
        Vec::new()
    }
}

/// How the coupling enters K: |V|² for emitters, v² for separable potentials.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Weight<'a> {
    Abs2(&'a CouplingSpec),
    Square(&'a CouplingSpec),
}

impl Weight<'_> {
    #[inline]
    fn at(&self, k: f64) -> Complex64 {
        match *self {
            Weight::Abs2(c) => Complex64::new(c.abs2(k), 0.0),
            Weight::Square(c) => {
                let v = c.value(k);
                v * v
            }
        }
    }

    fn spec(&self) -> &CouplingSpec {
        match *self {
            Weight::Abs2(c) | Weight::Square(c) => c,
        }
    }

    fn is_zero(&self) -> bool {
        self.spec().is_zero()
    }

    /// Large-k exponent of the weight, clamped for the quadrature hint.
    fn decay(&self) -> f64 {
        self.spec().decay_exponent().max(-8.0)
    }
}

/// ∫ F(k)/(ω - ε(k)) for a given weight F.
pub(crate) struct Kernel<'a> {
    pub(crate) disp: &'a Dispersion,
    weight: Weight<'a>,
    spec: QuadratureSpec,
}

impl<'a> Kernel<'a> {
    pub(crate) fn new(disp: &'a Dispersion, weight: Weight<'a>, spec: QuadratureSpec) -> Self {
        Kernel { disp, weight, spec }
    }

    fn width(&self) -> f64 {
        self.weight.spec().width()
    }

    /// Threshold subtraction is used when the shell momentum is not far
    /// outside the coupling range and L(ω) exists.
    fn subtract(&self, shell: f64) -> bool {
        let f0 = self.weight.at(0.0);
        if f0.norm() == 0.0 || shell > 8.0 * self.width() {
            return false;
        }
        match self.disp {
            Dispersion::Power1d(d) => d.m >= 2,
            Dispersion::Isotropic(d) => d.zeta() > 1.0,
        }
    }

    /// Quadrature settings for the remainder after subtracting f0·L: its
    /// error only has to be small against the size of the full K.
    fn remainder_spec(&self, q: f64, lead: f64) -> QuadratureSpec {
        let mut s = self.spec.with_decay(q);
        s.abs_tol = s.abs_tol.max(0.1 * s.rel_tol * lead);
        s
    }

    pub(crate) fn off_axis(&self, w: Complex64) -> Result<Complex64> {
        if self.weight.is_zero() {
            // Still reject invalid points for consistency.
            l_validate(w, self.disp)?;
            return Ok(Complex64::new(0.0, 0.0));
        }
        match self.disp {
            Dispersion::Power1d(d) => {
                PolarFrequency::from_complex(w, d)?;
                let p = d.shell_momentum(w.norm());
                let breaks = geometric_breaks(p, self.width(), &near_real_roots_1d(w, d));
                let m = d.m as f64;
                if self.subtract(p) {
                    let f0 = self.weight.at(0.0);
                    let f = |k: f64| (self.weight.at(k) - f0) * recip(w - d.energy(k));
                    let lead = f0 * l_closed(w, self.disp)?;
                    let r = integrate_on(&f, f64::NEG_INFINITY, f64::INFINITY, &breaks, &self.remainder_spec(m, lead.norm()))?;
                    Ok(lead + r.value)
                } else {
                    let f = |k: f64| self.weight.at(k) * recip(w - d.energy(k));
                    let q = m - self.weight.decay();
                    Ok(integrate_on(&f, f64::NEG_INFINITY, f64::INFINITY, &breaks, &self.spec.with_decay(q))?.value)
                }
            }
            Dispersion::Isotropic(d) => {
                iso_theta(w)?;
                let p = w.norm().powf(1.0 / d.a);
                let breaks = positive(&geometric_breaks(p, self.width(), &near_real_roots_iso(w, d)));
                let b = d.b_d();
                let dm1 = d.dim as f64 - 1.0;
                if self.subtract(p) {
                    let f0 = self.weight.at(0.0);
                    let f = |k: f64| b * (self.weight.at(k) - f0) * radial_resolvent(w, k, dm1, d.a);
                    let lead = f0 * l_closed(w, self.disp)?;
                    let r = integrate_on(&f, 0.0, f64::INFINITY, &breaks, &self.remainder_spec(d.a - dm1, lead.norm()))?;
                    Ok(lead + r.value)
                } else {
                    let f = |k: f64| b * self.weight.at(k) * radial_resolvent(w, k, dm1, d.a);
                    let q = d.a - dm1 - self.weight.decay();
                    Ok(integrate_on(&f, 0.0, f64::INFINITY, &breaks, &self.spec.with_decay(q))?.value)
                }
            }
        }
    }

    /// (K(E + i0), K(E - i0)) from one principal-value evaluation.
    pub(crate) fn boundary_pair(&self, e: f64) -> Result<(Complex64, Complex64)> {
        if !self.disp.in_continuum(e) {
            return Err(Error::OutsideContinuum { energy: e });
        }
        if e.abs() < THRESHOLD_FLOOR {
            return Err(Error::NearThreshold { magnitude: e.abs() });
        }
        if self.weight.is_zero() {
            return Ok((Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)));
        }
        let poles = self.disp.degenerate_momenta(e)?;
        match self.disp {
            Dispersion::Power1d(d) => {
                let p = d.shell_momentum(e);
                let breaks = geometric_breaks(p, self.width(), &[]);
                let m = d.m as f64;
                let sub = self.subtract(p);
                let f0 = if sub { self.weight.at(0.0) } else { Complex64::new(0.0, 0.0) };
                let f = |k: f64| (self.weight.at(k) - f0) * recip(Complex64::new(shell_gap(e, k, &poles, m).unwrap_or_else(|| e - d.energy(k)), 0.0));
                let q = if sub { m } else { m - self.weight.decay() };
                let (la, lb) = if sub {
                    (l_boundary(e, BoundarySide::Above, self.disp)?, l_boundary(e, BoundarySide::Below, self.disp)?)
                } else {
                    (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
                };
                let spec = self.remainder_spec(q, (f0 * la).norm());
                let pv = principal_value_on(&f, f64::NEG_INFINITY, f64::INFINITY, &poles, &breaks, &spec)?.value;
                let delta: Complex64 = poles.iter().map(|&k| (self.weight.at(k) - f0) / d.velocity(k).abs()).sum();
                Ok((f0 * la + pv - PI * I * delta, f0 * lb + pv + PI * I * delta))
            }
            Dispersion::Isotropic(d) => {
                let p = poles[0];
                let breaks = positive(&geometric_breaks(p, self.width(), &[]));
                let b = d.b_d();
                let dm1 = d.dim as f64 - 1.0;
                let sub = self.subtract(p);
                let f0 = if sub { self.weight.at(0.0) } else { Complex64::new(0.0, 0.0) };
                let f = |k: f64| {
                    let r = match shell_gap(e, k, &poles, d.a) {
                        Some(g) => Complex64::new(k.powf(dm1) / g, 0.0),
                        None => radial_resolvent(Complex64::new(e, 0.0), k, dm1, d.a),
                    };
                    b * (self.weight.at(k) - f0) * r
                };
                let q = if sub { d.a - dm1 } else { d.a - dm1 - self.weight.decay() };
                let (la, lb) = if sub {
                    (l_boundary(e, BoundarySide::Above, self.disp)?, l_boundary(e, BoundarySide::Below, self.disp)?)
                } else {
                    (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
                };
                let spec = self.remainder_spec(q, (f0 * la).norm());
                let pv = principal_value_on(&f, 0.0, f64::INFINITY, &poles, &breaks, &spec)?.value;
                let delta = d.rho_abs(e) * (self.weight.at(p) - f0);
                Ok((f0 * la + pv - PI * I * delta, f0 * lb + pv + PI * I * delta))
            }
        }
    }

    pub(crate) fn at(&self, freq: Frequency) -> Result<Complex64> {
        match freq {
            Frequency::OffAxis(w) => self.off_axis(w),
            Frequency::Boundary(e, s) => {
                let (a, b) = self.boundary_pair(e)?;
                Ok(if s == BoundarySide::Above { a } else { b })
            }
        }
    }
}

fn l_validate(w: Complex64, disp: &Dispersion) -> Result<()> {
    match disp {
        Dispersion::Power1d(d) => PolarFrequency::from_complex(w, d).map(|_| ()),
        Dispersion::Isotropic(_) => iso_theta(w).map(|_| ()),
    }
}

// ---------------------------------------------------------------------------
// systems

/// A dispersion, a scatterer and the quadrature settings used for K.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringSystem {
    pub dispersion: Dispersion,
    pub scatterer: Scatterer,
    pub quadrature: QuadratureSpec,
}

impl ScatteringSystem {
    pub fn new(dispersion: Dispersion, scatterer: Scatterer) -> Self {
        ScatteringSystem { dispersion, scatterer, quadrature: QuadratureSpec::default() }
    }

    pub fn emitter(dispersion: Dispersion, model: EmitterModel) -> Self {
        Self::new(dispersion, Scatterer::Emitter(model))
    }

    pub fn separable(dispersion: Dispersion, sep: SeparableModel) -> Self {
        Self::new(dispersion, Scatterer::Separable(sep))
    }

    pub(crate) fn kernel(&self) -> Kernel<'_> {
        let w = match &self.scatterer {
            Scatterer::Emitter(m) => Weight::Abs2(m.coupling()),
            Scatterer::Separable(s) => Weight::Square(&s.form_factor),
        };
        Kernel::new(&self.dispersion, w, self.quadrature)
    }

    /// K(ω) for emitters, K_sep(ω) for separable potentials.
    pub fn k_value(&self, freq: Frequency) -> Result<Complex64> {
        self.kernel().at(freq)
    }

    pub fn k_boundary_pair(&self, e: f64) -> Result<(Complex64, Complex64)> {
        self.kernel().boundary_pair(e)
    }

    /// J(ω) given K(ω) (or g^{-1} - K_sep).
    pub fn denominator_with(&self, w: Complex64, k: Complex64) -> Complex64 {
        match &self.scatterer {
            Scatterer::Emitter(m) => j_from_k(m, w, k),
            Scatterer::Separable(s) => 1.0 / s.g - k,
        }
    }

    /// J(ω) for emitters, g^{-1} - K_sep(ω) for separable potentials.
    pub fn denominator(&self, freq: Frequency) -> Result<Complex64> {
        let k = self.k_value(freq)?;
        Ok(self.denominator_with(freq.value(), k))
    }

    /// Scale of the operator: ‖K^R‖ plus the coupling mass √∫|F|.
    pub fn energy_scale(&self) -> f64 {
        let w = self.kernel().width();
        let coupling_mass = match &self.dispersion {
            Dispersion::Power1d(_) => coupling_mass(|k| self.kernel().weight.at(k).norm(), w, false),
            Dispersion::Isotropic(d) => {
                let b = d.b_d();
                let dm1 = d.dim as f64 - 1.0;
                coupling_mass(
                    |k| {
                        let v = self.kernel().weight.at(k).norm();
                        if v == 0.0 {
                            0.0
                        } else {
                            b * k.powf(dm1) * v
                        }
                    },
                    w,
                    true,
                )
            }
        };
        let kr = match &self.scatterer {
            Scatterer::Emitter(m) => m.kr_norm(),
            Scatterer::Separable(s) => 1.0 / s.g.abs(),
        };
        kr + coupling_mass.sqrt()
    }
}

fn coupling_mass(f: impl Fn(f64) -> f64, w: f64, half: bool) -> f64 {
    let spec = QuadratureSpec { rel_tol: 1e-6, abs_tol: 1e-12, ..Default::default() };
    let g = |k: f64| Complex64::new(f(k), 0.0);
    let (lo, breaks) = if half { (0.0, vec![w]) } else { (f64::NEG_INFINITY, vec![-w, 0.0, w]) };
    integrate_on(&g, lo, f64::INFINITY, &breaks, &spec.with_decay(1.5)).map(|r| r.value.re).unwrap_or(f64::INFINITY)
}

/// det(ω - K^R_⊘11), 1 for N = 1.
pub fn reduced_characteristic(model: &EmitterModel, w: Complex64) -> Complex64 {
    let n = model.n();
    if n == 1 {
        return ONE;
    }
    let red = model.kr_reduced();
    (CMatrix::identity(n - 1, n - 1) * w - red).determinant()
}

/// det(ω - K^R).
pub fn full_characteristic(model: &EmitterModel, w: Complex64) -> Complex64 {
    let n = model.n();
    (CMatrix::identity(n, n) * w - model.kr()).determinant()
}

pub(crate) fn j_from_k(model: &EmitterModel, w: Complex64, k: Complex64) -> Complex64 {
    -k * reduced_characteristic(model, w) + full_characteristic(model, w)
}

/// Scalar K(ω) = ∫|V(k)|²/(ω - ε(k)) dk off the continuum.
pub fn k_scalar(omega: Complex64, model: &EmitterModel, dispersion: &Dispersion) -> Result<Complex64> {
    Kernel::new(dispersion, Weight::Abs2(model.coupling()), QuadratureSpec::default()).off_axis(omega)
}

/// K(E ± i0): principal value plus the ∓iπ Σ|V(k_α)|²/|ε'(k_α)| jump.
pub fn k_boundary(e: f64, side: BoundarySide, model: &EmitterModel, dispersion: &Dispersion) -> Result<Complex64> {
    Kernel::new(dispersion, Weight::Abs2(model.coupling()), QuadratureSpec::default()).at(Frequency::Boundary(e, side))
}

/// ω - K^R - |u⟩⟨u| K(ω).
pub fn resolvent_inverse(model: &EmitterModel, w: Complex64, k: Complex64) -> CMatrix {
    let n = model.n();
    let u = model.u();
    CMatrix::identity(n, n) * w - model.kr() - u * u.adjoint() * k
}

pub(crate) fn invert_checked(model: &EmitterModel, w: Complex64, k: Complex64) -> Result<CMatrix> {
    let cond = resolvent_conditioning(model, w, k);
    if cond < 1e-10 {
        return Err(Error::SingularResolvent { re: w.re, im: w.im, condition: cond });
    }
    resolvent_inverse(model, w, k).try_inverse().ok_or(Error::SingularResolvent { re: w.re, im: w.im, condition: cond })
}

/// G(ω) = (ω - K^R - K(ω))^{-1}.
pub fn green_matrix(freq: Frequency, model: &EmitterModel, dispersion: &Dispersion) -> Result<CMatrix> {
    let k = Kernel::new(dispersion, Weight::Abs2(model.coupling()), QuadratureSpec::default()).at(freq)?;
    invert_checked(model, freq.value(), k)
}

/// J(ω) = det(ω - K^R - K(ω)) via the rank-one factorization.
pub fn j_function(freq: Frequency, model: &EmitterModel, dispersion: &Dispersion) -> Result<Complex64> {
    let k = Kernel::new(dispersion, Weight::Abs2(model.coupling()), QuadratureSpec::default()).at(freq)?;
    Ok(j_from_k(model, freq.value(), k))
}

/// σ_min of ω - K^R - K(ω) relative to the size of its terms; small
/// values flag a pole of G.
pub fn resolvent_conditioning(model: &EmitterModel, w: Complex64, k: Complex64) -> f64 {
    let sv = resolvent_inverse(model, w, k).singular_values();
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    smin / (w.norm() + model.kr_norm() + k.norm()).max(1e-300)
}
