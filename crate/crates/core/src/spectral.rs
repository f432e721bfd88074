//! Bound states: zeros of J(ω) (or g^{-1} - K_sep) off the continuum.

use num_complex::Complex64;
use serde::Serialize;

use crate::dispersion::Dispersion;
use crate::error::{Error, Result};
use crate::numerics::{count_zeros, ContourOptions, RectContour};
use crate::propagators::{Frequency, ScatteringSystem};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundState {
    pub energy: Complex64,
    /// |J'(E_B)|.
    pub residue_scale: f64,
    pub multiplicity: u32,
}

/// Knobs for the contour search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub contour: ContourOptions,
    /// Quadrisection depth before Newton is attempted regardless.
    pub max_depth: u32,
    pub newton_max_iter: u32,
    /// Margin kept between the search regions and the continuum, relative to
    /// the operator scale.
    pub margin: f64,
    /// Depth of the lower half-plane search in units of the operator scale.
    pub depth_factor: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        // Edges running just off the axis see each nearby zero as a sharp π
        // step; grade the nodes towards the threshold so that two of them
        // never share a segment and cancel.
        let contour = ContourOptions { focus: Some(Complex64::new(0.0, 0.0)), ..ContourOptions::default() };
        SearchOptions { contour, max_depth: 14, newton_max_iter: 60, margin: 1e-6, depth_factor: 2.0 }
    }
}

/// Half-width of the square that certainly contains every bound state.
pub fn search_extent(system: &ScatteringSystem, opts: &SearchOptions) -> f64 {
    opts.depth_factor * system.energy_scale() + 2.0
}

/// Rectangles covering the physical sheet up to the search extent, minus a
/// thin margin around the continuum: below and above the real axis, and for
/// one-sided continua a strip straddling the gap.
pub fn default_search_regions(system: &ScatteringSystem, opts: &SearchOptions) -> Vec<RectContour> {
    let x = search_extent(system, opts);
    let h = opts.margin * (x - 2.0).max(1.0);
    let mut out = vec![
        RectContour { re_min: -x, re_max: x, im_min: -x, im_max: -h },
        RectContour { re_min: -x, re_max: x, im_min: h, im_max: x },
    ];
    let gap_left = match &system.dispersion {
        Dispersion::Power1d(d) if d.is_even() => Some(d.sigma > 0),
        Dispersion::Power1d(_) => None,
        Dispersion::Isotropic(_) => Some(true),
    };
    match gap_left {
        Some(true) => out.push(RectContour { re_min: -x, re_max: -h, im_min: -h, im_max: h }),
        Some(false) => out.push(RectContour { re_min: h, re_max: x, im_min: -h, im_max: h }),
        None => {}
    }
    out
}

fn denominator(system: &ScatteringSystem, w: Complex64) -> Result<Complex64> {
    system.denominator(Frequency::OffAxis(w))
}

fn derivative(system: &ScatteringSystem, w: Complex64, step: f64) -> Result<Complex64> {
    let d = Complex64::new(step, 0.0);
    Ok((denominator(system, w + d)? - denominator(system, w - d)?) / (2.0 * step))
}

/// Newton iteration confined to `rect`.
fn newton(system: &ScatteringSystem, start: Complex64, rect: &RectContour, opts: &SearchOptions, scale: f64) -> Option<Complex64> {
    let mut w = start;
    let step = 1e-6 * scale;
    for _ in 0..opts.newton_max_iter {
        let j = denominator(system, w).ok()?;
        let dj = derivative(system, w, step.min(0.25 * rect.width().min(rect.height()).max(1e-300) + 1e-300)).ok()?;
        if dj.norm() == 0.0 {
            return None;
        }
        let dw = j / dj;
        w -= dw;
        if !rect.contains(w) {
            return None;
        }
        if dw.norm() <= 1e-14 * scale.max(w.norm()) {
            return Some(w);
        }
    }
    None
}

/// Real-axis polish of a Hermitian root, where J is real.
fn polish_real(system: &ScatteringSystem, mut e: f64, scale: f64) -> Option<f64> {
    let step = 1e-7 * scale.max(e.abs());
    for _ in 0..60 {
        let j = denominator(system, Complex64::new(e, 0.0)).ok()?.re;
        let jp = (denominator(system, Complex64::new(e + step, 0.0)).ok()?.re
            - denominator(system, Complex64::new(e - step, 0.0)).ok()?.re)
            / (2.0 * step);
        if jp == 0.0 {
            return None;
        }
        let de = j / jp;
        e -= de;
        if de.abs() <= 1e-15 * scale.max(e.abs()) {
            return Some(e);
        }
    }
    Some(e)
}

fn count(system: &ScatteringSystem, rect: &RectContour, opts: &SearchOptions) -> Result<i64> {
    let h = |w: Complex64| denominator(system, w);
    count_zeros(&h, rect, &opts.contour)
}

fn split(rect: &RectContour, hermitian_strip: bool) -> Vec<RectContour> {
    if hermitian_strip {
        // Hermitian roots lie on the real axis: never cut along it.
        let m = rect.re_min + 0.4871 * rect.width();
        vec![
            RectContour { re_max: m, ..*rect },
            RectContour { re_min: m, ..*rect },
        ]
    } else {
        rect.quadrants(0.4871, 0.5129).to_vec()
    }
}

fn locate(
    system: &ScatteringSystem,
    rect: &RectContour,
    n: i64,
    depth: u32,
    opts: &SearchOptions,
    scale: f64,
    strip: bool,
    out: &mut Vec<BoundState>,
) -> Result<()> {
    if n <= 0 {
        return Ok(());
    }
    if n == 1 {
        if let Some(w) = newton(system, rect.center(), rect, opts, scale) {
            out.push(finish(system, w, 1, scale, strip)?);
            return Ok(());
        }
    }
    let tiny = rect.width().max(rect.height()) < 1e-10 * scale;
    if depth >= opts.max_depth || tiny {
        let w = newton(system, rect.center(), rect, opts, scale).unwrap_or(rect.center());
        out.push(finish(system, w, n as u32, scale, strip)?);
        return Ok(());
    }
    let parts = split(rect, strip);
    // Parent and children sample different edges, so a disagreement means one
    // of them aliased a full turn; recount both on finer edges.
    let mut n = n;
    let mut o = *opts;
    let mut counts: Vec<i64> = parts.iter().map(|p| count(system, p, &o)).collect::<Result<_>>()?;
    for _ in 0..3 {
        if counts.iter().sum::<i64>() == n {
            break;
        }
        o.contour.points_per_edge *= 4;
        o.contour.max_arg_step *= 0.5;
        n = count(system, rect, &o)?;
        counts = parts.iter().map(|p| count(system, p, &o)).collect::<Result<_>>()?;
    }
    if counts.iter().sum::<i64>() != n {
        return Err(Error::CountMismatch { parent: n, children: counts.iter().sum() });
    }
    for (p, c) in parts.iter().zip(counts) {
        locate(system, p, c, depth + 1, opts, scale, strip, out)?;
    }
    Ok(())
}

fn finish(system: &ScatteringSystem, w: Complex64, mult: u32, scale: f64, strip: bool) -> Result<BoundState> {
    let mut e = w;
    if strip && system.scatterer.is_hermitian() {
        if let Some(r) = polish_real(system, w.re, scale) {
            e = Complex64::new(r, 0.0);
        }
    }
    let step = 1e-6 * scale.max(e.norm());
    let dj = derivative(system, e, step)?;
    Ok(BoundState { energy: e, residue_scale: dj.norm(), multiplicity: mult })
}

/// Zeros inside the given rectangles, sorted by real part.
pub fn find_bound_states(system: &ScatteringSystem, regions: &[RectContour], opts: &SearchOptions) -> Result<Vec<BoundState>> {
    let scale = system.energy_scale().max(1e-300);
    let mut out = Vec::new();
    for r in regions {
        r.validate()?;
        let strip = r.im_min < 0.0 && r.im_max > 0.0;
        let n = count(system, r, opts)?;
        locate(system, r, n, 0, opts, scale, strip, &mut out)?;
    }
    out.sort_by(|a, b| a.energy.re.partial_cmp(&b.energy.re).unwrap().then(a.energy.im.partial_cmp(&b.energy.im).unwrap()));
    Ok(out)
}

/// All bound states in the default regions.
pub fn bound_states(system: &ScatteringSystem) -> Result<Vec<BoundState>> {
    bound_states_with(system, &SearchOptions::default())
}

pub fn bound_states_with(system: &ScatteringSystem, opts: &SearchOptions) -> Result<Vec<BoundState>> {
    find_bound_states(system, &default_search_regions(system, opts), opts)
}

/// Total count, multiplicities included.
pub fn bound_state_count(states: &[BoundState]) -> usize {
    states.iter().map(|b| b.multiplicity as usize).sum()
}

/// The part of the real axis outside the continuum closure, within the
/// search extent; None for two-sided continua.
pub fn default_real_bracket(system: &ScatteringSystem) -> Option<(f64, f64)> {
    real_bracket_with(system, &SearchOptions::default())
}

pub fn real_bracket_with(system: &ScatteringSystem, opts: &SearchOptions) -> Option<(f64, f64)> {
    let x = search_extent(system, opts);
    let h = opts.margin * (x - 2.0).max(1.0);
    match &system.dispersion {
        Dispersion::Power1d(d) if d.is_even() => Some(if d.sigma > 0 { (-x, -h) } else { (h, x) }),
        Dispersion::Power1d(_) => None,
        Dispersion::Isotropic(_) => Some((-x, -h)),
    }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    // Geometric in the distance from the threshold end (the one nearer 0).
    let sgn = if hi <= 0.0 { -1.0 } else { 1.0 };
    let (a, b) = (lo.abs().min(hi.abs()), lo.abs().max(hi.abs()));
    let r = (b / a).ln();
    let mut g: Vec<f64> = (0..=n).map(|i| sgn * a * (r * i as f64 / n as f64).exp()).collect();
    g.sort_by(|x, y| x.partial_cmp(y).unwrap());
    g
}

/// Real roots of J on a bracket outside the continuum (Hermitian models),
/// bracketed by sign changes and polished by bisection.
pub fn real_axis_roots(system: &ScatteringSystem, bracket: (f64, f64)) -> Result<Vec<f64>> {
    if !system.scatterer.is_hermitian() {
        return Err(Error::InvalidInput("real-axis counting needs a Hermitian model".into()));
    }
    let (lo, hi) = bracket;
    if !(lo < hi) || (lo < 0.0 && hi > 0.0) || lo == 0.0 && hi == 0.0 {
        return Err(Error::InvalidInput(format!("bad bracket ({lo}, {hi})")));
    }
    if system.dispersion.in_continuum(lo) || system.dispersion.in_continuum(hi) {
        return Err(Error::InvalidInput(format!("bracket ({lo}, {hi}) meets the continuum")));
    }
    let f = |e: f64| denominator(system, Complex64::new(e, 0.0)).map(|z| z.re);
    let sign_changes = |n: usize| -> Result<Vec<(f64, f64, f64, f64)>> {
        use rayon::prelude::*;
        let g = if lo.abs().min(hi.abs()) > 0.0 { log_grid(lo, hi, n) } else { (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect() };
        let v: Vec<f64> = g.par_iter().map(|&e| f(e)).collect::<Result<_>>()?;
        Ok((1..g.len()).filter(|&i| v[i - 1].signum() != v[i].signum() || v[i] == 0.0).map(|i| (g[i - 1], g[i], v[i - 1], v[i])).collect())
    };
    let coarse = sign_changes(400)?;
    let fine = sign_changes(800)?;
    if coarse.len() != fine.len() {
        return Err(Error::GridTooCoarse { detail: format!("{} sign changes at 400 points, {} at 800", coarse.len(), fine.len()) });
    }
    let mut roots = Vec::with_capacity(fine.len());
    for (mut a, mut b, mut fa, _) in fine {
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            let fm = f(m)?;
            if fm == 0.0 {
                a = m;
                b = m;
                break;
            }
            if fm.signum() == fa.signum() {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        roots.push(0.5 * (a + b));
    }
    Ok(roots)
}

pub fn count_bound_states_real_axis(system: &ScatteringSystem, bracket: (f64, f64)) -> Result<usize> {
    Ok(real_axis_roots(system, bracket)?.len())
}
