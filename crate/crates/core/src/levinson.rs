//! Winding of det S(E) across the continuum and the generalized Levinson
//! count.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::Dispersion;
use crate::error::{Error, Result};
use crate::models::{detect_bright_zero_state, CMatrix, Scatterer, DEFAULT_RANK_TOL};
use crate::numerics::principal_arg_step;
use crate::propagators::{Frequency, ScatteringSystem};
use crate::smatrix::{s_from_k, universal_limit, Route};
use crate::spectral::{bound_state_count, bound_states_with, count_bound_states_real_axis, real_bracket_with, BoundState, SearchOptions};

/// Whether the last sampled point near threshold is joined to the analytic
/// det S(0) by its principal phase gap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdClosure {
    Never,
    /// Only for a = D, where det S approaches its limit logarithmically.
    LogMarginalOnly,
    Always,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    /// `points` per decade of |E|.
    Log,
    /// `points` evenly spaced samples per segment.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepGrid {
    /// Smallest |E|; None picks 1e-10 of the operator scale, or 1e-60 for
    /// a = D where det S creeps to its limit like 1/log E.
    pub e_min: Option<f64>,
    /// Largest |E|; None starts at 1e3 of the scale and grows until the tail
    /// is settled.
    pub e_max: Option<f64>,
    pub points: usize,
    pub spacing: Spacing,
    /// Adjacent samples are refined until their phase step is below this.
    pub max_arg_step: f64,
    pub max_refine_passes: u32,
    /// Remaining phase |arg det S(E_max)| accepted for the tail.
    pub tail_tol: f64,
    pub e_max_cap: f64,
    pub threshold_closure: ThresholdClosure,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            e_min: None,
            e_max: None,
            points: 25,
            spacing: Spacing::Log,
            max_arg_step: PI / 8.0,
            max_refine_passes: 40,
            tail_tol: 0.005,
            e_max_cap: 1e12,
            threshold_closure: ThresholdClosure::Never,
        }
    }
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if let (Some(a), Some(b)) = (self.e_min, self.e_max) {
            if !(a > 0.0 && b > a) {
                bad.push(format!("sweep: need 0 < E_min < E_max, got {a}, {b}"));
            }
        }
        if self.points < 2 {
            bad.push(format!("sweep.points must be at least 2, got {}", self.points));
        }
        if !(self.max_arg_step > 0.0 && self.max_arg_step < PI / 4.0 + 1e-12) {
            bad.push("sweep: max_arg_step must lie in (0, π/4]".into());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(bad))
        }
    }
}

/// One point of the trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepSample {
    pub energy: f64,
    pub det_s: Complex64,
    /// Unwrapped arg det S along the branch.
    pub phase: f64,
    /// |det S(T-matrix route) - det S(J ratio)|.
    pub route_defect: f64,
}

/// The part of Δδ collected on one continuous piece of the continuum,
/// traversed with increasing E.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchWinding {
    pub label: String,
    pub e_lo: f64,
    pub e_hi: f64,
    /// Half the sampled phase increase plus the tail closure(s).
    pub delta: f64,
    /// Half the phase increase between the first and last samples.
    pub delta_sampled: f64,
    /// Half the phase still missing to det S = 1 at the far end(s).
    pub tail_closure: f64,
    /// Half arg(limit/det S) at the threshold end; zero for m = 1.
    pub threshold_gap: f64,
    pub threshold_included: bool,
    #[serde(skip)]
    pub samples: Vec<SweepSample>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EndpointValue {
    pub label: String,
    pub energy: f64,
    pub det_s: Complex64,
    /// Analytic det S(0±) when the query is a threshold point.
    pub limit: Option<Complex64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindingReport {
    pub delta_total: f64,
    pub branch_contributions: Vec<BranchWinding>,
    pub endpoint_values: Vec<EndpointValue>,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "N_B")]
    pub n_b: usize,
    /// Real-axis cross-check of N_B (Hermitian models with a gap).
    #[serde(rename = "N_B_real_axis")]
    pub n_b_real_axis: Option<usize>,
    pub bound_states: Vec<BoundState>,
    pub predicted: f64,
    pub residual: f64,
    pub tail_bound: f64,
    /// Largest ||det S| - 1| over the samples.
    pub max_modulus_defect: f64,
    /// Largest |det S|; at most 1 for passive models.
    pub max_modulus: f64,
    pub max_route_defect: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub diagnostics: Vec<String>,
}

fn e_scale(system: &ScatteringSystem) -> f64 {
    let w = system.scatterer.coupling().width();
    let band = system.dispersion.energy(w).abs();
    system.energy_scale().max(band).max(1e-300)
}

fn is_log_marginal(d: &Dispersion) -> bool {
    matches!(d, Dispersion::Isotropic(i) if i.a == i.dim as f64)
}

/// Centres and widths of the narrow resonances hanging off the reduced
/// block: near each eigenvalue λ of K^R_⊘11, J = 0 reads
/// ω = λ + R/(ω - K^R_11 - K(ω) - g'(ω)), with R the residue of the Schur
/// term at λ and g' the rest of it. Iterated with K taken on the real axis.
/// A resonance much narrower than the grid spacing winds det S by 2π
/// between two samples, which no step-size rule can see.
fn resonances(system: &ScatteringSystem, sgn: f64) -> Vec<(f64, f64)> {
    let Scatterer::Emitter(model) = &system.scatterer else {
        return Vec::new();
    };
    let n = model.n();
    if n < 2 {
        return Vec::new();
    }
    let rot = model.kr_rotated();
    let red = model.kr_reduced();
    let b = rot.view((0, 1), (1, n - 1)).into_owned();
    let c = rot.view((1, 0), (n - 1, 1)).into_owned();
    let eye = CMatrix::identity(n - 1, n - 1);
    let schur = |w: Complex64| -> Option<Complex64> {
        let x = (eye.clone() * w - &red).lu().solve(&c)?;
        Some((&b * x)[(0, 0)])
    };
    let Some(lams) = red.clone().schur().eigenvalues() else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for lam in lams.iter().copied() {
        if lam.re * sgn <= 0.0 {
            continue;
        }
        let h = 1e-7 * (1.0 + lam.norm());
        let Some(r) = schur(lam + h).map(|g| g * h) else { continue };
        if r.norm() <= 1e-300 {
            continue;
        }
        let mut w = lam;
        let mut done = false;
        for _ in 0..60 {
            if w.re * sgn <= 0.0 || !system.dispersion.in_continuum(w.re) {
                break;
            }
            let Ok(k) = system.k_value(Frequency::above(w.re)) else { break };
            let rest = match schur(w) {
                Some(g) if (w - lam).norm() > 0.0 && g.re.is_finite() && g.im.is_finite() => g - r / (w - lam),
                _ => Complex64::new(0.0, 0.0),
            };
            let next = lam + r / (w - rot[(0, 0)] - k - rest);
            let step = (next - w).norm();
            w = next;
            if step <= 1e-14 * (1.0 + w.norm()) {
                done = true;
                break;
            }
        }
        if done && w.re * sgn > 0.0 && w.re.is_finite() {
            out.push((w.re.abs(), w.im.abs()));
        }
    }
    out
}

/// Extra |E| values resolving each resonance: the centre and a geometric
/// ladder of offsets from Γ/16 out to the centre's own scale.
fn resonance_points(res: &[(f64, f64)], lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for &(t0, gamma) in res {
        out.push(t0);
        let mut h = (gamma / 16.0).max(1e-15 * t0);
        while h < 0.5 * t0 {
            out.push(t0 + h);
            out.push(t0 - h);
            h *= 2.0;
        }
    }
    out.retain(|&t| t > lo && t < hi);
    out
}

/// det S at E from a single boundary evaluation of K, both routes.
pub fn sample(system: &ScatteringSystem, e: f64) -> Result<SweepSample> {
    let (ka, kb) = system.k_boundary_pair(e)?;
    let w = Complex64::new(e, 0.0);
    let da = system.denominator_with(w, ka);
    let db = system.denominator_with(w, kb);
    // J = -K·P_{N-1} + P_N is linear in K.
    let size = match &system.scatterer {
        Scatterer::Emitter(m) => {
            let r = e.abs() + m.kr_norm();
            ka.norm() * r.powi(m.n() as i32 - 1) + r.powi(m.n() as i32)
        }
        Scatterer::Separable(s) => 1.0 / s.g.abs() + ka.norm(),
    };
    if da.norm() <= 1e-13 * size {
        return Err(Error::BoundStateInContinuum { energy: e });
    }
    let det = db / da;
    if det.norm() < 1e-13 || !(det.re.is_finite() && det.im.is_finite()) {
        return Err(Error::ZeroDetS { energy: e });
    }
    let route_defect = match s_from_k(e, system, ka, Route::TMatrix) {
        Ok(s) => (s.det() - det).norm(),
        Err(Error::BoundStateInContinuum { .. }) => return Err(Error::BoundStateInContinuum { energy: e }),
        Err(err) => return Err(err),
    };
    Ok(SweepSample { energy: e, det_s: det, phase: 0.0, route_defect })
}

fn grid_points(a: f64, b: f64, grid: &SweepGrid) -> Vec<f64> {
    match grid.spacing {
        Spacing::Log => {
            let decades = (b / a).log10();
            let n = ((decades * grid.points as f64).ceil() as usize).max(1);
            (0..=n).map(|i| a * (b / a).powf(i as f64 / n as f64)).collect()
        }
        Spacing::Linear => {
            let n = grid.points - 1;
            (0..=n).map(|i| a + (b - a) * (i as f64 / n as f64)).collect()
        }
    }
}

/// Samples at energies sgn·t for the given t values, refined in t until the
/// phase steps are small; output ordered by increasing energy.
fn sweep_segment(system: &ScatteringSystem, sgn: f64, ts: &[f64], grid: &SweepGrid) -> Result<Vec<SweepSample>> {
    let mut pts: Vec<(f64, SweepSample)> = ts
        .par_iter()
        .map(|&t| sample(system, sgn * t).map(|s| (t, s)))
        .collect::<Result<_>>()?;
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for _ in 0..grid.max_refine_passes {
        let need: Vec<f64> = pts
            .windows(2)
            .filter(|w| principal_arg_step(w[0].1.det_s, w[1].1.det_s).abs() >= grid.max_arg_step)
            .map(|w| (w[0].0 * w[1].0).sqrt())
            .filter(|&m| m > 0.0)
            .collect();
        if need.is_empty() {
            let mut out: Vec<SweepSample> = pts.into_iter().map(|p| p.1).collect();
            out.sort_by(|a, b| a.energy.partial_cmp(&b.energy).unwrap());
            return Ok(out);
        }
        let new: Vec<(f64, SweepSample)> =
            need.par_iter().map(|&t| sample(system, sgn * t).map(|s| (t, s))).collect::<Result<_>>()?;
        pts.extend(new);
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    }
    Err(Error::GridTooCoarse { detail: format!("phase steps still above {} after {} refinement passes", grid.max_arg_step, grid.max_refine_passes) })
}

fn unwrap_in_place(samples: &mut [SweepSample]) {
    for i in 0..samples.len() {
        samples[i].phase = if i == 0 {
            samples[0].det_s.arg()
        } else {
            samples[i - 1].phase + principal_arg_step(samples[i - 1].det_s, samples[i].det_s)
        };
    }
}

/// Sweep of |E| from e_min outwards with E_max grown until det S ≈ 1.
fn sweep_outwards(system: &ScatteringSystem, sgn: f64, e_min: f64, grid: &SweepGrid, diag: &mut Vec<String>) -> Result<Vec<SweepSample>> {
    let scale = e_scale(system);
    let mut hi = grid.e_max.unwrap_or(1e3 * scale).max(e_min * 10.0);
    let res = resonances(system, sgn);
    let with_res = |mut ts: Vec<f64>, lo: f64, hi: f64| {
        ts.extend(resonance_points(&res, lo, hi));
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ts.dedup();
        ts
    };
    let mut samples = sweep_segment(system, sgn, &with_res(grid_points(e_min, hi, grid), e_min, hi), grid)?;
    if grid.e_max.is_none() {
        loop {
            let last = samples.last().unwrap().det_s;
            if last.arg().abs() < grid.tail_tol || hi >= grid.e_max_cap {
                if last.arg().abs() >= grid.tail_tol {
                    diag.push(format!("tail not settled at |E| = {hi:e}: arg det S = {:.3e}", last.arg()));
                }
                break;
            }
            let next = (hi * 10.0).min(grid.e_max_cap);
            let more = grid_points(hi, next, grid);
            let seg = sweep_segment(system, sgn, &with_res(more[1..].to_vec(), hi, next), grid)?;
            // Keep the stitch refined as well.
            let first = seg.first().unwrap().det_s;
            if principal_arg_step(last, first).abs() >= grid.max_arg_step {
                let mid = sweep_segment(system, sgn, &[hi, (hi * more[1]).sqrt(), more[1]], grid)?;
                samples.extend(mid.into_iter().filter(|s| s.energy.abs() > hi && s.energy.abs() < more[1]));
            }
            samples.extend(seg);
            samples.sort_by(|a, b| a.energy.abs().partial_cmp(&b.energy.abs()).unwrap());
            hi = next;
        }
    }
    samples.sort_by(|a, b| a.energy.partial_cmp(&b.energy).unwrap());
    Ok(samples)
}

fn default_e_min(system: &ScatteringSystem) -> f64 {
    let f = if is_log_marginal(&system.dispersion) { 1e-60 } else { 1e-10 };
    (f * e_scale(system)).max(crate::propagators::THRESHOLD_FLOOR)
}

/// Δδ from sampled det S, per continuum branch.
pub fn winding_phase(system: &ScatteringSystem, grid: &SweepGrid) -> Result<(Vec<BranchWinding>, Vec<String>)> {
    grid.validate()?;
    let mut diag = Vec::new();
    let e_min = grid.e_min.unwrap_or_else(|| default_e_min(system));
    let limit = universal_limit(&system.dispersion).ok();
    let close = match grid.threshold_closure {
        ThresholdClosure::Never => false,
        ThresholdClosure::Always => true,
        ThresholdClosure::LogMarginalOnly => is_log_marginal(&system.dispersion),
    };
    let threshold = |s: &SweepSample| -> (f64, bool) {
        match limit.as_ref().and_then(|l| l.det_at(s.energy)) {
            Some(l) => {
                let gap = principal_arg_step(s.det_s, l);
                let ok = (s.det_s - l).norm() <= 0.25;
                (0.5 * gap, close && ok)
            }
            None => (0.0, false),
        }
    };
    let mut out = Vec::new();
    match &system.dispersion {
        Dispersion::Power1d(d) if d.m == 1 => {
            // Finite density of states: det S is continuous through E = 0.
            let neg = sweep_outwards(system, -1.0, e_min, grid, &mut diag)?;
            let pos = sweep_outwards(system, 1.0, e_min, grid, &mut diag)?;
            let mut all = neg;
            all.extend(pos);
            unwrap_in_place(&mut all);
            let (first, last) = (all[0], *all.last().unwrap());
            let sampled = 0.5 * (last.phase - first.phase);
            let tail = 0.5 * (-last.det_s.arg() + first.det_s.arg());
            out.push(BranchWinding {
                label: "E in (-inf, inf)".into(),
                e_lo: first.energy,
                e_hi: last.energy,
                delta: sampled + tail,
                delta_sampled: sampled,
                tail_closure: tail,
                threshold_gap: 0.0,
                threshold_included: false,
                samples: all,
            });
        }
        _ => {
            let signs: Vec<f64> = match &system.dispersion {
                Dispersion::Power1d(d) if d.is_even() => vec![d.sigma_f()],
                Dispersion::Power1d(_) => vec![1.0, -1.0],
                Dispersion::Isotropic(_) => vec![1.0],
            };
            for sgn in signs {
                let mut s = sweep_outwards(system, sgn, e_min, grid, &mut diag)?;
                unwrap_in_place(&mut s);
                let (first, last) = (s[0], *s.last().unwrap());
                let sampled = 0.5 * (last.phase - first.phase);
                // The far end is at +∞ for the upper branch and at -∞ for the lower.
                let (tail, gap_point, sign_gap) = if sgn > 0.0 {
                    (-0.5 * last.det_s.arg(), first, -1.0)
                } else {
                    (0.5 * first.det_s.arg(), last, 1.0)
                };
                let (gap, inc) = threshold(&gap_point);
                // Upper branch starts at the threshold: the missing piece runs
                // from the limit to the first sample, i.e. minus the gap.
                let gap = sign_gap * gap;
                let delta = sampled + tail + if inc { gap } else { 0.0 };
                out.push(BranchWinding {
                    label: if sgn > 0.0 { "E > 0".into() } else { "E < 0".into() },
                    e_lo: first.energy,
                    e_hi: last.energy,
                    delta,
                    delta_sampled: sampled,
                    tail_closure: tail,
                    threshold_gap: gap,
                    threshold_included: inc,
                    samples: s,
                });
            }
        }
    }
    Ok((out, diag))
}

/// Levinson prediction for the model class.
pub fn predicted_winding(system: &ScatteringSystem, n_b: usize) -> f64 {
    let offset = match &system.dispersion {
        Dispersion::Power1d(d) => PI * (d.m as f64 - 1.0) / d.m as f64,
        Dispersion::Isotropic(d) => {
            if d.a > d.dim as f64 {
                PI * (d.a - d.dim as f64) / d.a
            } else {
                0.0
            }
        }
    };
    let n = match &system.scatterer {
        Scatterer::Emitter(m) => m.n() as f64,
        Scatterer::Separable(_) => 0.0,
    };
    PI * (n - n_b as f64) + offset
}

/// Bound states, winding, prediction and verdict.
pub fn levinson_check(system: &ScatteringSystem, grid: &SweepGrid, tol: f64) -> Result<WindingReport> {
    levinson_check_with(system, grid, tol, &SearchOptions::default())
}

pub fn levinson_check_with(system: &ScatteringSystem, grid: &SweepGrid, tol: f64, search: &SearchOptions) -> Result<WindingReport> {
    let n = system.scatterer.emitter_count();
    let not_applicable = |reason: String| WindingReport {
        delta_total: 0.0,
        branch_contributions: Vec::new(),
        endpoint_values: Vec::new(),
        n,
        n_b: 0,
        n_b_real_axis: None,
        bound_states: Vec::new(),
        predicted: f64::NAN,
        residual: f64::NAN,
        tail_bound: 0.0,
        max_modulus_defect: 0.0,
        max_modulus: 1.0,
        max_route_defect: 0.0,
        tolerance: tol,
        verdict: Verdict::NotApplicable { reason: reason.clone() },
        diagnostics: vec![reason],
    };
    if system.scatterer.coupling().is_zero() {
        return Ok(not_applicable("zero coupling: det S is identically 1 and the count is ill-posed".into()));
    }
    if let Scatterer::Emitter(m) = &system.scatterer {
        if let Some(cert) = detect_bright_zero_state(m, DEFAULT_RANK_TOL) {
            return Ok(not_applicable(format!(
                "bright zero-energy state present (photon amplitude {:.3e}); the theorem does not apply",
                cert.psi0_constant.norm()
            )));
        }
    }
    let states = bound_states_with(system, search)?;
    let n_b = bound_state_count(&states);
    let mut diagnostics = Vec::new();
    let n_b_real = if system.scatterer.is_hermitian() {
        match real_bracket_with(system, search) {
            Some(br) => Some(count_bound_states_real_axis(system, br)?),
            None => Some(0),
        }
    } else {
        None
    };
    if let Some(r) = n_b_real {
        if r != n_b {
            diagnostics.push(format!("bound-state counters disagree: contour {n_b}, real axis {r}"));
        }
    }
    let (branches, mut diag) = winding_phase(system, grid)?;
    diagnostics.append(&mut diag);
    let delta_total: f64 = branches.iter().map(|b| b.delta).sum();
    let predicted = predicted_winding(system, n_b);
    let residual = (delta_total - predicted).abs();
    let tail_bound = branches.iter().map(|b| b.tail_closure.abs()).sum::<f64>();
    let all = branches.iter().flat_map(|b| b.samples.iter());
    let max_modulus_defect = all.clone().map(|s| (s.det_s.norm() - 1.0).abs()).fold(0.0, f64::max);
    let max_modulus = all.clone().map(|s| s.det_s.norm()).fold(0.0, f64::max);
    let max_route_defect = all.map(|s| s.route_defect).fold(0.0, f64::max);
    let limit = universal_limit(&system.dispersion).ok();
    let mut endpoint_values = Vec::new();
    for b in &branches {
        let (first, last) = (b.samples[0], *b.samples.last().unwrap());
        for s in [first, last] {
            let near = s.energy.abs() < 1.0 && !matches!(&system.dispersion, Dispersion::Power1d(d) if d.m == 1);
            endpoint_values.push(EndpointValue {
                label: format!("{}: E = {:e}", b.label, s.energy),
                energy: s.energy,
                det_s: s.det_s,
                limit: if near { limit.as_ref().and_then(|l| l.det_at(s.energy)) } else { None },
            });
        }
        if b.threshold_included {
            diagnostics.push(format!(
                "{}: threshold gap {:.3e} rad closed against the analytic limit (logarithmic approach)",
                b.label, b.threshold_gap
            ));
        }
    }
    let counters_agree = n_b_real.is_none_or(|r| r == n_b);
    let verdict = if residual < tol && counters_agree { Verdict::Pass } else { Verdict::Fail };
    Ok(WindingReport {
        delta_total,
        branch_contributions: branches,
        endpoint_values,
        n,
        n_b,
        n_b_real_axis: n_b_real,
        bound_states: states,
        predicted,
        residual,
        tail_bound,
        max_modulus_defect,
        max_modulus,
        max_route_defect,
        tolerance: tol,
        verdict,
        diagnostics,
    })
}
