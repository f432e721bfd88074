//! On-shell T- and S-matrices in the degenerate-momentum basis, the det S
//! ratio of boundary determinants, and the analytic zero-energy limits.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dispersion::Dispersion;
use crate::error::{Error, Result};
use crate::models::{spectral_norm, CMatrix, EmitterModel, Scatterer, SeparableModel};
use crate::propagators::{
    invert_checked, reduced_characteristic, BoundarySide, Frequency, ScatteringSystem,
};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// How S was assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// δ - 2πi T with T from the inverted resolvent.
    TMatrix,
    /// δ - 2πi T with ⟨u|G|u⟩ = det(ω - K^R_⊘11)/J(ω).
    JRatio,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SMatrixAtEnergy {
    pub energy: f64,
    /// Degenerate momenta labelling rows and columns, (k > 0, k < 0) for even m.
    pub momenta: Vec<f64>,
    #[serde(serialize_with = "crate::serde_util::ser_cmatrix")]
    pub entries: CMatrix,
    pub route: Route,
    /// ‖S†S - 1‖.
    pub unitarity_defect: f64,
}

impl SMatrixAtEnergy {
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn det(&self) -> Complex64 {
        self.entries.determinant()
    }

    fn build(energy: f64, momenta: Vec<f64>, entries: CMatrix, route: Route) -> Self {
        let n = entries.nrows();
        let defect = spectral_norm(&(entries.adjoint() * &entries - CMatrix::identity(n, n)));
        SMatrixAtEnergy { energy, momenta, entries, route, unitarity_defect: defect }
    }
}

/// Side(s) of the threshold on which the continuum, and so the limit, lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApproachSide {
    FromAbove,
    FromBelow,
    Both,
}

/// Analytic E → 0 limit of S.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniversalLimit {
    pub dispersion: Dispersion,
    pub approach_side: ApproachSide,
    /// Limit as E → 0⁺, when the continuum reaches there.
    #[serde(serialize_with = "crate::serde_util::ser_opt_cmatrix")]
    pub from_above: Option<CMatrix>,
    /// Limit as E → 0⁻, when the continuum reaches there.
    #[serde(serialize_with = "crate::serde_util::ser_opt_cmatrix")]
    pub from_below: Option<CMatrix>,
    /// Even m: eigenvalues on (1, 1)/√2 and (1, -1)/√2.
    pub symmetric_eigenvalue: Option<Complex64>,
    pub antisymmetric_eigenvalue: Option<Complex64>,
}

impl UniversalLimit {
    /// Limit matrix on the side of sign(e).
    pub fn at(&self, e: f64) -> Option<&CMatrix> {
        if e > 0.0 {
            self.from_above.as_ref()
        } else {
            self.from_below.as_ref()
        }
    }

    pub fn det_at(&self, e: f64) -> Option<Complex64> {
        self.at(e).map(|m| m.determinant())
    }
}

fn scalar(z: Complex64) -> CMatrix {
    CMatrix::from_element(1, 1, z)
}

/// Zero-energy limits; m = 1 has none.
pub fn universal_limit(dispersion: &Dispersion) -> Result<UniversalLimit> {
    match dispersion {
        Dispersion::Power1d(d) => {
            let m = d.m as f64;
            if d.m == 1 {
                return Err(Error::NonUniversal {
                    reason: "linear dispersion has a finite density of states at threshold; S(0) depends on the coupling".into(),
                });
            }
            if d.is_even() {
                let s = d.sigma_f();
                let (c, sn) = ((PI / m).cos(), (PI / m).sin());
                let ph = Complex64::from_polar(1.0, s * PI / m);
                let mat = CMatrix::from_row_slice(
                    2,
                    2,
                    &[ph * c, ph * I * s * sn, ph * I * s * sn, ph * c],
                );
                let (above, below, side) = if s > 0.0 {
                    (Some(mat), None, ApproachSide::FromAbove)
                } else {
                    (None, Some(mat), ApproachSide::FromBelow)
                };
                Ok(UniversalLimit {
                    dispersion: *dispersion,
                    approach_side: side,
                    from_above: above,
                    from_below: below,
                    symmetric_eigenvalue: Some(Complex64::from_polar(1.0, 2.0 * PI * s / m)),
                    antisymmetric_eigenvalue: Some(Complex64::new(1.0, 0.0)),
                })
            } else {
                Ok(UniversalLimit {
                    dispersion: *dispersion,
                    approach_side: ApproachSide::Both,
                    from_above: Some(scalar(Complex64::from_polar(1.0, PI / m))),
                    from_below: Some(scalar(Complex64::from_polar(1.0, -PI / m))),
                    symmetric_eigenvalue: None,
                    antisymmetric_eigenvalue: None,
                })
            }
        }
        Dispersion::Isotropic(d) => {
            let v = if d.a > d.dim as f64 {
                Complex64::from_polar(1.0, 2.0 * PI * d.dim as f64 / d.a)
            } else {
                Complex64::new(1.0, 0.0)
            };
            Ok(UniversalLimit {
                dispersion: *dispersion,
                approach_side: ApproachSide::FromAbove,
                from_above: Some(scalar(v)),
                from_below: None,
                symmetric_eigenvalue: None,
                antisymmetric_eigenvalue: None,
            })
        }
    }
}

/// Degenerate momenta and the velocity-normalized on-shell couplings
/// (V(k_α)/√|ε'(k_α)|, or √ρ·v(E^{1/a}) for the isotropic s-wave).
pub fn channel_amplitudes(e: f64, system: &ScatteringSystem) -> Result<(Vec<f64>, Vec<Complex64>)> {
    let c = system.scatterer.coupling();
    let ks = system.dispersion.degenerate_momenta(e)?;
    let amps = match &system.dispersion {
        Dispersion::Power1d(d) => ks.iter().map(|&k| c.value(k) / d.velocity(k).abs().sqrt()).collect(),
        Dispersion::Isotropic(d) => vec![c.value(ks[0]) * d.density_of_states(e)?.sqrt()],
    };
    Ok((ks, amps))
}

fn green_uu(model: &EmitterModel, w: Complex64, k: Complex64, route: Route, e: f64) -> Result<Complex64> {
    match route {
        Route::TMatrix => {
            let singular = |err| match err {
                Error::SingularResolvent { .. } => Error::BoundStateInContinuum { energy: e },
                other => other,
            };
            // ⟨u|G|u⟩ as the inverse Schur complement of the u-adapted block;
            // inverting the full matrix loses the digits carried by the
            // reduced block once |K| dominates near threshold.
            let n = model.n();
            let a = CMatrix::identity(n, n) * w - model.kr_rotated();
            let den = if n == 1 {
                a[(0, 0)] - k
            } else {
                let d = a.view((1, 1), (n - 1, n - 1)).into_owned();
                match d.clone().lu().solve(&a.view((1, 0), (n - 1, 1)).into_owned()) {
                    Some(x) if x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) => {
                        a[(0, 0)] - k - (a.view((0, 1), (1, n - 1)) * x)[(0, 0)]
                    }
                    _ => {
                        let g = invert_checked(model, w, k).map_err(singular)?;
                        return Ok((model.u().adjoint() * g * model.u())[(0, 0)]);
                    }
                }
            };
            if den.norm() <= 1e-300 || !(den.re.is_finite() && den.im.is_finite()) {
                return Err(Error::BoundStateInContinuum { energy: e });
            }
            Ok(1.0 / den)
        }
        Route::JRatio => {
            let j = crate::propagators::j_from_k(model, w, k);
            if j.norm() == 0.0 || !j.re.is_finite() {
                return Err(Error::BoundStateInContinuum { energy: e });
            }
            Ok(reduced_characteristic(model, w) / j)
        }
    }
}

/// T(ω, k, k') = V*(k')V(k)⟨u|G(ω)|u⟩.
pub fn t_matrix(freq: Frequency, k: f64, kp: f64, model: &EmitterModel, dispersion: &Dispersion) -> Result<Complex64> {
    let c = model.coupling();
    if c.is_zero() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let sys = ScatteringSystem::emitter(*dispersion, model.clone());
    let kv = sys.k_value(freq)?;
    let w = freq.value();
    let g = invert_checked(model, w, kv)?;
    Ok(c.value(kp).conj() * c.value(k) * (model.u().adjoint() * g * model.u())[(0, 0)])
}

/// T_sep(ω, k, k') = v(k)v(k')/(g^{-1} - K_sep(ω)).
pub fn t_separable(freq: Frequency, k: f64, kp: f64, sep: &SeparableModel, dispersion: &Dispersion) -> Result<Complex64> {
    sep.validate()?;
    let sys = ScatteringSystem::separable(*dispersion, sep.clone());
    let den = sys.denominator(freq)?;
    if den.norm() == 0.0 {
        return Err(Error::ZeroDenominator { energy: freq.value().re });
    }
    Ok(sep.form_factor.value(k) * sep.form_factor.value(kp) / den)
}

/// S(E) = δ - 2πi T(E + i0)/√|ε'ε'| in the degenerate-momentum basis.
pub fn s_matrix(e: f64, system: &ScatteringSystem, route: Route) -> Result<SMatrixAtEnergy> {
    if !system.dispersion.in_continuum(e) {
        return Err(Error::OutsideContinuum { energy: e });
    }
    if system.scatterer.coupling().is_zero() {
        let ks = system.dispersion.degenerate_momenta(e)?;
        let n = ks.len();
        return Ok(SMatrixAtEnergy::build(e, ks, CMatrix::identity(n, n), route));
    }
    let k_above = system.k_value(Frequency::above(e))?;
    s_from_k(e, system, k_above, route)
}

/// S(E) given K(E + i0).
pub(crate) fn s_from_k(e: f64, system: &ScatteringSystem, k_above: Complex64, route: Route) -> Result<SMatrixAtEnergy> {
    let (ks, a) = channel_amplitudes(e, system)?;
    let n = ks.len();
    let w = Complex64::new(e, 0.0);
    let mut s = CMatrix::identity(n, n);
    match &system.scatterer {
        Scatterer::Emitter(model) => {
            let g = green_uu(model, w, k_above, route, e)?;
            for i in 0..n {
                for j in 0..n {
                    s[(i, j)] -= 2.0 * PI * I * g * a[i] * a[j].conj();
                }
            }
        }
        Scatterer::Separable(sep) => {
            let den = 1.0 / sep.g - k_above;
            if den.norm() == 0.0 {
                return Err(Error::BoundStateInContinuum { energy: e });
            }
            for i in 0..n {
                for j in 0..n {
                    s[(i, j)] -= 2.0 * PI * I * a[i] * a[j] / den;
                }
            }
        }
    }
    Ok(SMatrixAtEnergy::build(e, ks, s, route))
}

/// det S(E) = D(E - i0)/D(E + i0), D = J (emitters) or g^{-1} - K_sep.
pub fn det_s_via_j(e: f64, system: &ScatteringSystem) -> Result<Complex64> {
    if system.scatterer.coupling().is_zero() {
        if !system.dispersion.in_continuum(e) {
            return Err(Error::OutsideContinuum { energy: e });
        }
        return Ok(Complex64::new(1.0, 0.0));
    }
    let (ka, kb) = system.k_boundary_pair(e)?;
    let w = Complex64::new(e, 0.0);
    let da = system.denominator_with(w, ka);
    let db = system.denominator_with(w, kb);
    if da.norm() == 0.0 || !(da.re.is_finite() && da.im.is_finite()) {
        return Err(Error::ZeroDenominator { energy: e });
    }
    Ok(db / da)
}

/// det S_sep(E).
pub fn det_s_separable(e: f64, sep: &SeparableModel, dispersion: &Dispersion) -> Result<Complex64> {
    sep.validate()?;
    det_s_via_j(e, &ScatteringSystem::separable(*dispersion, sep.clone()))
}

/// s-wave S₁₁(E) for isotropic couplings.
pub fn swave_channel_s11(e: f64, system: &ScatteringSystem) -> Result<Complex64> {
    if !matches!(system.dispersion, Dispersion::Isotropic(_)) {
        return Err(Error::InvalidInput("s-wave channel requires an isotropic dispersion".into()));
    }
    Ok(s_matrix(e, system, Route::TMatrix)?.entries[(0, 0)])
}

/// ‖S(E) - S(0±)‖ in spectral norm.
pub fn distance_to_limit(s: &SMatrixAtEnergy, limit: &UniversalLimit) -> Option<f64> {
    limit.at(s.energy).map(|l| spectral_norm(&(&s.entries - l)))
}

/// S(E) eigenvalue on (1, ±1)/√2, as a Rayleigh quotient.
pub fn parity_eigenvalue(s: &SMatrixAtEnergy, antisymmetric: bool) -> Option<Complex64> {
    if s.n() != 2 {
        return None;
    }
    let sgn = if antisymmetric { -1.0 } else { 1.0 };
    let v = [Complex64::new(1.0, 0.0), Complex64::new(sgn, 0.0)];
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            acc += v[i] * s.entries[(i, j)] * v[j];
        }
    }
    Some(acc / 2.0)
}

/// Small-E form δ + 2πi/(|ε'|L(E + i0)) of S, used as an independent check
/// of the limit tables.
pub fn limit_from_propagator(e: f64, dispersion: &Dispersion) -> Result<CMatrix> {
    let l = crate::propagators::l_boundary(e, BoundarySide::Above, dispersion)?;
    let ks = dispersion.degenerate_momenta(e)?;
    let n = ks.len();
    let mut s = CMatrix::identity(n, n);
    let inv_v: Vec<f64> = match dispersion {
        Dispersion::Power1d(d) => ks.iter().map(|&k| 1.0 / d.velocity(k).abs()).collect(),
        Dispersion::Isotropic(d) => vec![d.density_of_states(e)?],
    };
    for i in 0..n {
        for j in 0..n {
            s[(i, j)] += 2.0 * PI * I * (inv_v[i] * inv_v[j]).sqrt() / l;
        }
    }
    Ok(s)
}
