//! Emitter and separable-potential models, coupling families, and the
//! bright zero-energy state test.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dispersion::Dispersion;
use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Momentum-space coupling V(k). Complex amplitudes are `[re, im]` in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum CouplingSpec {
    /// V0 exp(-k²/2w²)
    Gaussian { amplitude: Complex64, width: f64 },
    /// V0 / (1 + (k/w)²)^p
    LorentzianPower { amplitude: Complex64, width: f64, power: f64 },
    /// V0 (1 + c1 k + c2 k² + …) exp(-k²/2w²)
    PolynomialGaussian { amplitude: Complex64, width: f64, coefficients: Vec<f64> },
    /// |V(k)| sampled on 0 = k_0 < k_1 < …, even in k, extended beyond the
    /// table as a power law with the declared |V|² exponent.
    Tabulated { k: Vec<f64>, abs_v: Vec<f64>, decay_exponent: f64 },
}

impl CouplingSpec {
    pub fn gaussian(amplitude: Complex64, width: f64) -> Self {
        CouplingSpec::Gaussian { amplitude, width }
    }

    pub fn lorentzian(amplitude: Complex64, width: f64, power: f64) -> Self {
        CouplingSpec::LorentzianPower { amplitude, width, power }
    }

    pub fn value(&self, k: f64) -> Complex64 {
        match self {
            CouplingSpec::Gaussian { amplitude, width } => amplitude * (-k * k / (2.0 * width * width)).exp(),
            CouplingSpec::LorentzianPower { amplitude, width, power } => {
                let x = k / width;
                amplitude / (1.0 + x * x).powf(*power)
            }
            CouplingSpec::PolynomialGaussian { amplitude, width, coefficients } => {
                let mut p = 0.0;
                for c in coefficients.iter().rev() {
                    p = (p + c) * k;
                }
                amplitude * (1.0 + p) * (-k * k / (2.0 * width * width)).exp()
            }
            CouplingSpec::Tabulated { k: ks, abs_v, decay_exponent } => {
                let x = k.abs();
                let n = ks.len();
                if x >= ks[n - 1] {
                    let v = abs_v[n - 1] * (x / ks[n - 1]).powf(decay_exponent / 2.0);
                    return Complex64::new(v, 0.0);
                }
                let i = ks.partition_point(|&kk| kk <= x).saturating_sub(1).min(n - 2);
                let t = (x - ks[i]) / (ks[i + 1] - ks[i]);
                Complex64::new(abs_v[i] * (1.0 - t) + abs_v[i + 1] * t, 0.0)
            }
        }
    }

    pub fn abs2(&self, k: f64) -> f64 {
        self.value(k).norm_sqr()
    }

    pub fn at_zero(&self) -> Complex64 {
        self.value(0.0)
    }

    pub fn is_zero(&self) -> bool {
        match self {
            CouplingSpec::Gaussian { amplitude, .. }
            | CouplingSpec::LorentzianPower { amplitude, .. }
            | CouplingSpec::PolynomialGaussian { amplitude, .. } => amplitude.norm() == 0.0,
            CouplingSpec::Tabulated { abs_v, .. } => abs_v.iter().all(|v| *v == 0.0),
        }
    }

    /// Momentum scale beyond which the coupling falls off.
    pub fn width(&self) -> f64 {
        match self {
            CouplingSpec::Gaussian { width, .. }
            | CouplingSpec::LorentzianPower { width, .. }
            | CouplingSpec::PolynomialGaussian { width, .. } => *width,
            CouplingSpec::Tabulated { k, .. } => k[k.len() - 1].max(1e-300),
        }
    }

    /// Exponent q with |V(k)|² ~ |k|^q at large |k| (-inf for Gaussians).
    pub fn decay_exponent(&self) -> f64 {
        match self {
            CouplingSpec::Gaussian { .. } | CouplingSpec::PolynomialGaussian { .. } => f64::NEG_INFINITY,
            CouplingSpec::LorentzianPower { power, .. } => -4.0 * power,
            CouplingSpec::Tabulated { decay_exponent, .. } => *decay_exponent,
        }
    }

    /// Whether the decay exponent follows from the closed form.
    pub fn decay_is_verified(&self) -> bool {
        !matches!(self, CouplingSpec::Tabulated { .. })
    }

    /// V(-k) = V(k) for every k.
    pub fn is_even(&self) -> bool {
        match self {
            CouplingSpec::PolynomialGaussian { coefficients, .. } => {
                coefficients.iter().step_by(2).all(|c| *c == 0.0)
            }
            _ => true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        match self {
            CouplingSpec::Gaussian { amplitude, width }
            | CouplingSpec::LorentzianPower { amplitude, width, .. }
            | CouplingSpec::PolynomialGaussian { amplitude, width, .. } => {
                if !(width.is_finite() && *width > 0.0) {
                    bad.push(format!("coupling.width must be positive, got {width}"));
                }
                if !(amplitude.re.is_finite() && amplitude.im.is_finite()) {
                    bad.push("coupling.amplitude must be finite".into());
                }
            }
            CouplingSpec::Tabulated { k, abs_v, .. } => {
                if k.len() < 2 || k.len() != abs_v.len() {
                    bad.push("coupling.k and coupling.abs_v must have equal length >= 2".into());
                } else {
                    if k[0] != 0.0 || k.windows(2).any(|w| w[1] <= w[0]) {
                        bad.push("coupling.k must start at 0 and increase strictly".into());
                    }
                    if abs_v.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                        bad.push("coupling.abs_v must be finite and non-negative".into());
                    }
                }
            }
        }
        if let CouplingSpec::LorentzianPower { power, .. } = self {
            if !(power.is_finite() && *power >= 0.0) {
                bad.push(format!("coupling.power must be non-negative, got {power}"));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(bad))
        }
    }
}

/// Unitary matrix whose first column is `u`.
pub fn basis_with_first(u: &CVector) -> CMatrix {
    let n = u.len();
    let mut cols: Vec<CVector> = vec![u.clone()];
    let mut used = vec![false; n];
    while cols.len() < n {
        let mut best: Option<(usize, CVector, f64)> = None;
        for j in (0..n).filter(|j| !used[*j]) {
            let mut v = CVector::zeros(n);
            v[j] = ONE;
            for _ in 0..2 {
                for c in &cols {
                    let p = c.dotc(&v);
                    v -= c * p;
                }
            }
            let nv = v.norm();
            if best.as_ref().is_none_or(|b| nv > b.2) {
                best = Some((j, v, nv));
            }
        }
        let (j, v, nv) = best.expect("basis completion");
        used[j] = true;
        cols.push(v / Complex64::new(nv, 0.0));
    }
    CMatrix::from_columns(&cols)
}

/// N emitters with K^R = A + iB and coupling |v_k⟩ = V(k)|u⟩.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EmitterSpec", into = "EmitterSpec")]
pub struct EmitterModel {
    kr: CMatrix,
    u: CVector,
    coupling: CouplingSpec,
    basis: CMatrix,
    kr_rot: CMatrix,
}

/// Serialized form of an emitter model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterSpec {
    #[serde(rename = "N")]
    pub n: usize,
    /// Row-major N·N entries.
    #[serde(rename = "KR")]
    pub kr: Vec<Complex64>,
    pub u: Vec<Complex64>,
    pub coupling: CouplingSpec,
}

impl TryFrom<EmitterSpec> for EmitterModel {
    type Error = Error;

    fn try_from(s: EmitterSpec) -> Result<Self> {
        let mut bad = Vec::new();
        if s.n == 0 {
            bad.push("model.N must be >= 1".to_string());
        }
        if s.kr.len() != s.n * s.n {
            bad.push(format!("model.KR has {} entries, expected N*N = {}", s.kr.len(), s.n * s.n));
        }
        if s.u.len() != s.n {
            bad.push(format!("model.u has {} entries, expected N = {}", s.u.len(), s.n));
        }
        if !bad.is_empty() {
            return Err(Error::Validation(bad));
        }
        let kr = CMatrix::from_row_slice(s.n, s.n, &s.kr);
        EmitterModel::new(kr, CVector::from_vec(s.u), s.coupling)
    }
}

impl From<EmitterModel> for EmitterSpec {
    fn from(m: EmitterModel) -> Self {
        let n = m.n();
        let mut kr = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                kr.push(m.kr[(i, j)]);
            }
        }
        EmitterSpec { n, kr, u: m.u.iter().copied().collect(), coupling: m.coupling }
    }
}

impl EmitterModel {
    pub fn new(kr: CMatrix, u: CVector, coupling: CouplingSpec) -> Result<Self> {
        let n = u.len();
        let mut bad = Vec::new();
        if n == 0 {
            bad.push("model.N must be >= 1".to_string());
        }
        if kr.nrows() != n || kr.ncols() != n {
            bad.push(format!("model.KR is {}x{}, expected {n}x{n}", kr.nrows(), kr.ncols()));
        }
        if kr.iter().chain(u.iter()).any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            bad.push("model entries must be finite".into());
        }
        if (u.norm() - 1.0).abs() > 1e-10 {
            bad.push(format!("model.u must be a unit vector, |u| = {}", u.norm()));
        }
        if let Err(Error::Validation(v)) = coupling.validate() {
            bad.extend(v);
        }
        if !bad.is_empty() {
            return Err(Error::Validation(bad));
        }
        let basis = basis_with_first(&u);
        let kr_rot = basis.adjoint() * &kr * &basis;
        Ok(EmitterModel { kr, u, coupling, basis, kr_rot })
    }

    /// Single emitter with K^R = kr.
    pub fn single(kr: Complex64, coupling: CouplingSpec) -> Self {
        Self::new(CMatrix::from_element(1, 1, kr), CVector::from_element(1, ONE), coupling).expect("valid single emitter")
    }

    pub fn n(&self) -> usize {
        self.u.len()
    }

    pub fn kr(&self) -> &CMatrix {
        &self.kr
    }

    pub fn u(&self) -> &CVector {
        &self.u
    }

    pub fn coupling(&self) -> &CouplingSpec {
        &self.coupling
    }

    /// Columns: u, then an orthonormal completion.
    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    /// K^R in the u-adapted basis.
    pub fn kr_rotated(&self) -> &CMatrix {
        &self.kr_rot
    }

    /// K^R with the u row and column removed (in the u-adapted basis).
    pub fn kr_reduced(&self) -> CMatrix {
        let n = self.n();
        self.kr_rot.view((1, 1), (n - 1, n - 1)).into_owned()
    }

    pub fn with_kr(&self, kr: CMatrix) -> Result<Self> {
        Self::new(kr, self.u.clone(), self.coupling.clone())
    }

    pub fn with_coupling(&self, coupling: CouplingSpec) -> Result<Self> {
        Self::new(self.kr.clone(), self.u.clone(), coupling)
    }

    pub fn kr_norm(&self) -> f64 {
        spectral_norm(&self.kr)
    }

    /// B = (K^R - K^R†)/2i.
    pub fn loss_matrix(&self) -> CMatrix {
        (&self.kr - self.kr.adjoint()) * Complex64::new(0.0, -0.5)
    }

    pub fn is_hermitian(&self) -> bool {
        let d = (&self.kr - self.kr.adjoint()).norm();
        d <= 1e-14 * self.kr.norm().max(1.0)
    }

    /// Largest eigenvalue of B (<= 0 for passive models).
    pub fn max_loss_eigenvalue(&self) -> f64 {
        let b = self.loss_matrix();
        let eig = nalgebra::SymmetricEigen::new(b);
        eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_dissipative(&self) -> bool {
        !self.is_hermitian() && self.max_loss_eigenvalue() <= 1e-14 * self.kr.norm().max(1.0)
    }
}

pub(crate) fn spectral_norm(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone().singular_values().iter().copied().fold(0.0, f64::max)
}

/// Separable potential g·v(k)v(k') with v(0) = 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparableModel {
    pub g: f64,
    pub form_factor: CouplingSpec,
}

impl SeparableModel {
    pub fn new(g: f64, form_factor: CouplingSpec) -> Result<Self> {
        let s = SeparableModel { g, form_factor };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.g == 0.0 {
            return Err(Error::ZeroCoupling);
        }
        let mut bad = Vec::new();
        if !self.g.is_finite() {
            bad.push("model.g must be finite".to_string());
        }
        if let Err(Error::Validation(v)) = self.form_factor.validate() {
            bad.extend(v);
        }
        let v0 = self.form_factor.at_zero();
        if (v0 - ONE).norm() > 1e-12 {
            bad.push(format!("model.form_factor must satisfy v(0) = 1, got {v0}"));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(bad))
        }
    }
}

/// Either kind of scatterer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Scatterer {
    Emitter(EmitterModel),
    Separable(SeparableModel),
}

impl Scatterer {
    pub fn coupling(&self) -> &CouplingSpec {
        match self {
            Scatterer::Emitter(m) => m.coupling(),
            Scatterer::Separable(s) => &s.form_factor,
        }
    }

    /// Number of emitters (0 for a separable potential).
    pub fn emitter_count(&self) -> usize {
        match self {
            Scatterer::Emitter(m) => m.n(),
            Scatterer::Separable(_) => 0,
        }
    }

    pub fn is_hermitian(&self) -> bool {
        match self {
            Scatterer::Emitter(m) => m.is_hermitian(),
            Scatterer::Separable(_) => true,
        }
    }
}

// ---------------------------------------------------------------------------
// bright zero-energy states

pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Witness of a zero-energy eigenstate with photon amplitude ψ0 (constant)
/// and emitter part e0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrightStateCertificate {
    pub e0: Vec<Complex64>,
    pub psi0_constant: Complex64,
}

/// Residuals of the three cancellations that make the ansatz an eigenstate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertificateResiduals {
    /// ε(0).
    pub threshold_energy: f64,
    /// |⟨u|e0⟩|.
    pub overlap: f64,
    /// ‖K^R e0 + ψ0 V(0) u‖: the emitter equation.
    pub emitter_equation: f64,
    /// |ψ0|, must be nonzero for the state to be bright.
    pub photon_amplitude: f64,
}

impl BrightStateCertificate {
    pub fn residuals(&self, model: &EmitterModel, dispersion: &Dispersion) -> CertificateResiduals {
        let e0 = CVector::from_vec(self.e0.clone());
        let v0 = model.coupling().at_zero();
        let r = model.kr() * &e0 + model.u() * (self.psi0_constant * v0);
        CertificateResiduals {
            threshold_energy: dispersion.energy(0.0),
            overlap: model.u().dotc(&e0).norm(),
            emitter_equation: r.norm(),
            photon_amplitude: self.psi0_constant.norm(),
        }
    }

    pub fn verify(&self, model: &EmitterModel, dispersion: &Dispersion) -> bool {
        let r = self.residuals(model, dispersion);
        let scale = model.kr_norm().max(1.0);
        r.threshold_energy == 0.0 && r.overlap < 1e-12 && r.emitter_equation < 1e-12 * scale && r.photon_amplitude > 1e-12
    }
}

/// Null space of `a` (columns), singular values below `cut`.
fn null_space(a: &CMatrix, cut: f64) -> Vec<CVector> {
    let n = a.ncols();
    if n == 0 {
        return Vec::new();
    }
    // Square up so the SVD returns a full set of right singular vectors.
    let sq = if a.nrows() < n {
        let mut s = CMatrix::zeros(n, n);
        s.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
        s
    } else {
        a.clone()
    };
    let svd = sq.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s <= cut)
        .map(|(i, _)| vt.row(i).adjoint())
        .collect()
}

/// Singular values of K^R_⊘11 (ascending); empty for N = 1.
pub fn reduced_singular_values(model: &EmitterModel) -> Vec<f64> {
    if model.n() < 2 {
        return Vec::new();
    }
    let mut s: Vec<f64> = model.kr_reduced().singular_values().iter().copied().collect();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    s
}

/// Look for a bright zero-energy state: a null vector of K^R_⊘11 that K^R
/// does not annihilate.
pub fn detect_bright_zero_state(model: &EmitterModel, rank_tol: f64) -> Option<BrightStateCertificate> {
    let n = model.n();
    if n < 2 {
        return None;
    }
    let v0 = model.coupling().at_zero();
    if v0.norm() == 0.0 {
        return None;
    }
    let smax = model.kr_norm();
    if smax == 0.0 {
        return None;
    }
    let cut = rank_tol * smax;
    let null = null_space(&model.kr_reduced(), cut);
    if null.is_empty() {
        return None;
    }
    let row = model.kr_rotated().view((0, 1), (1, n - 1)).into_owned();
    // Coefficients of the coupling row on the null space.
    let coeffs: Vec<Complex64> = null.iter().map(|nv| (&row * nv)[(0, 0)]).collect();
    let cnorm = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if cnorm <= cut {
        return None;
    }
    let mut e = CVector::zeros(n - 1);
    for (nv, c) in null.iter().zip(&coeffs) {
        e += nv * c.conj();
    }
    e /= Complex64::new(e.norm(), 0.0);
    let mut emb = CVector::zeros(n);
    emb.rows_mut(1, n - 1).copy_from(&e);
    let e0 = model.basis() * emb;
    let proj = model.u().dotc(&(model.kr() * &e0));
    Some(BrightStateCertificate { e0: e0.iter().copied().collect(), psi0_constant: -proj / v0 })
}

// ---------------------------------------------------------------------------
// validation

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<ValidationCheck>,
    pub hermitian: bool,
    pub dissipative: bool,
    pub decay_verified: bool,
    /// Smallest singular value of K^R_⊘11 relative to ‖K^R‖ (None for N = 1).
    pub reduced_conditioning: Option<f64>,
    /// Emitter-only zero-energy states (null vectors of K^R orthogonal to u).
    pub zero_energy_emitter_states: usize,
    pub bright_state: Option<BrightStateCertificate>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<String> {
        self.checks.iter().filter(|c| !c.passed).map(|c| format!("{}: {}", c.name, c.detail)).collect()
    }
}

fn check(name: &str, passed: bool, detail: String) -> ValidationCheck {
    ValidationCheck { name: name.to_string(), passed, detail }
}

fn decay_check(coupling: &CouplingSpec, dispersion: &Dispersion) -> ValidationCheck {
    let q = coupling.decay_exponent();
    let lim = dispersion.decay_threshold();
    let verified = if coupling.decay_is_verified() { "" } else { " (declared, unverified decay)" };
    check("decay", q < lim, format!("|V(k)|^2 ~ k^{q} against bound k^{lim}{verified}"))
}

pub fn validate_model(model: &EmitterModel, dispersion: &Dispersion, rank_tol: f64) -> ValidationReport {
    let c = model.coupling();
    let v0 = c.at_zero();
    let unorm = model.u().norm();
    let scale = model.kr_norm().max(1.0);
    let maxb = model.max_loss_eigenvalue();
    let hermitian = model.is_hermitian();
    let mut checks = vec![
        check("coupling_at_origin", v0.norm() > 0.0, format!("V(0) = {v0}")),
        decay_check(c, dispersion),
        check("unit_u", (unorm - 1.0).abs() <= 1e-14, format!("|u| - 1 = {:e}", unorm - 1.0)),
        check("passive", maxb <= 1e-14 * scale, format!("largest eigenvalue of B = {maxb:e}")),
    ];
    if let Dispersion::Isotropic(_) = dispersion {
        checks.push(check("isotropic_coupling", c.is_even(), "coupling must depend on |k| only".into()));
    }
    let zero_states = {
        let n = model.n();
        let mut m = CMatrix::zeros(n + 1, n);
        m.view_mut((0, 0), (n, n)).copy_from(model.kr());
        m.view_mut((n, 0), (1, n)).copy_from(&model.u().adjoint());
        null_space(&m, rank_tol * scale).len()
    };
    let sv = reduced_singular_values(model);
    ValidationReport {
        checks,
        hermitian,
        dissipative: model.is_dissipative(),
        decay_verified: c.decay_is_verified(),
        reduced_conditioning: sv.first().map(|s| s / scale),
        zero_energy_emitter_states: zero_states,
        bright_state: detect_bright_zero_state(model, rank_tol),
    }
}

pub fn validate_separable(sep: &SeparableModel, dispersion: &Dispersion) -> ValidationReport {
    let v0 = sep.form_factor.at_zero();
    let mut checks = vec![
        check("coupling_strength", sep.g != 0.0 && sep.g.is_finite(), format!("g = {}", sep.g)),
        check("form_factor_normalized", (v0 - ONE).norm() <= 1e-12, format!("v(0) = {v0}")),
        decay_check(&sep.form_factor, dispersion),
    ];
    if let Dispersion::Isotropic(_) = dispersion {
        checks.push(check("isotropic_coupling", sep.form_factor.is_even(), "form factor must depend on |k| only".into()));
    }
    ValidationReport {
        checks,
        hermitian: true,
        dissipative: false,
        decay_verified: sep.form_factor.decay_is_verified(),
        reduced_conditioning: None,
        zero_energy_emitter_states: 0,
        bright_state: None,
    }
}

// ---------------------------------------------------------------------------
// random fixtures

/// Loss structure of a random model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Passivity {
    Hermitian,
    Dissipative,
}

fn gauss_c(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> CVector {
    let v = CVector::from_iterator(n, (0..n).map(|_| gauss_c(rng)));
    let nv = v.norm();
    v / Complex64::new(nv, 0.0)
}

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| gauss_c(rng));
    (&g + g.adjoint()) * Complex64::new(0.5 * scale, 0.0)
}

/// Random K^R = A + iB with B = 0 or B = -CC†, Gaussian coupling, and the
/// reduced block kept well away from singular (no bright state nearby).
pub fn random_emitter_model(n: usize, seed: u64, kind: Passivity, coupling: CouplingSpec) -> EmitterModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let u = random_unit(&mut rng, n);
        let mut kr = random_hermitian(&mut rng, n, 0.5);
        if kind == Passivity::Dissipative {
            let c = CMatrix::from_fn(n, n, |_, _| gauss_c(&mut rng)) * Complex64::new(0.4, 0.0);
            kr -= (&c * c.adjoint()) * Complex64::new(0.0, 1.0);
        }
        let m = EmitterModel::new(kr, u, coupling.clone()).expect("random model is valid");
        let ok = reduced_singular_values(&m).first().is_none_or(|s| *s > 0.15);
        if ok {
            return m;
        }
    }
}

/// Random Hermitian model tuned onto the bright-state manifold: the reduced
/// block annihilates a chosen e while the coupling row does not.
pub fn construct_bright_tuned_model(n: usize, seed: u64) -> Result<EmitterModel> {
    if n < 2 {
        return Err(Error::InvalidInput("bright-tuned models need N >= 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb41f_7e57);
    let u = random_unit(&mut rng, n);
    let basis = basis_with_first(&u);
    let mut k = random_hermitian(&mut rng, n, 0.5);
    let e = random_unit(&mut rng, n - 1);
    let p = CMatrix::identity(n - 1, n - 1) - &e * e.adjoint();
    let red = &p * k.view((1, 1), (n - 1, n - 1)) * &p;
    k.view_mut((1, 1), (n - 1, n - 1)).copy_from(&red);
    // Make sure the u row sees e clearly.
    let overlap = (k.view((0, 1), (1, n - 1)) * &e)[(0, 0)];
    if overlap.norm() < 0.3 {
        let shift = e.adjoint() * Complex64::new(0.5, 0.0);
        let row = k.view((0, 1), (1, n - 1)) + &shift;
        k.view_mut((0, 1), (1, n - 1)).copy_from(&row);
        let col = row.adjoint();
        k.view_mut((1, 0), (n - 1, 1)).copy_from(&col);
    }
    let kr = &basis * k * basis.adjoint();
    let kr = (&kr + kr.adjoint()) * Complex64::new(0.5, 0.0);
    EmitterModel::new(kr, u, CouplingSpec::gaussian(ONE, 1.0))
}

/// Add `eps`·X to the reduced block, X a random Hermitian with ‖X‖ = 1.
pub fn perturb_reduced_block(model: &EmitterModel, eps: f64, seed: u64) -> Result<EmitterModel> {
    let n = model.n();
    if n < 2 {
        return Ok(model.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let x = random_hermitian(&mut rng, n - 1, 1.0);
    let x = &x / Complex64::new(spectral_norm(&x), 0.0);
    let mut k = model.kr_rotated().clone();
    let red = k.view((1, 1), (n - 1, n - 1)) + x * Complex64::new(eps, 0.0);
    k.view_mut((1, 1), (n - 1, n - 1)).copy_from(&red);
    let kr = model.basis() * k * model.basis().adjoint();
    model.with_kr(kr)
}
