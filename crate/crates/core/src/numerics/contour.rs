use num_complex::Complex64;
use rayon::prelude::*;

use super::RectContour;
use crate::error::{Error, Result};

/// Sampling controls for the argument-principle count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourOptions {
    pub points_per_edge: usize,
    /// Largest accepted arg(h(b)/h(a)) along one segment.
    pub max_arg_step: f64,
    /// Largest accepted |ln|h(b)/h(a)|| along one segment.
    pub max_log_modulus_step: f64,
    pub max_bisections: u32,
    /// Quadrant subdivision depth used when a rectangle fails to give an integer.
    pub max_split_depth: u32,
    /// Extra edge nodes graded geometrically towards this point, for edges
    /// passing much closer to it than their length.
    pub focus: Option<Complex64>,
}

/// Node spacing ratio of the graded refinement.
const GRADE: f64 = 1.2;

impl Default for ContourOptions {
    fn default() -> Self {
        ContourOptions {
            points_per_edge: 16,
            max_arg_step: std::f64::consts::PI / 8.0,
            max_log_modulus_step: 0.7,
            max_bisections: 48,
            max_split_depth: 2,
            focus: None,
        }
    }
}

fn corners(r: &RectContour) -> [Complex64; 4] {
    [
        Complex64::new(r.re_min, r.im_min),
        Complex64::new(r.re_max, r.im_min),
        Complex64::new(r.re_max, r.im_max),
        Complex64::new(r.re_min, r.im_max),
    ]
}

fn check(z: Complex64, v: Complex64) -> Result<Complex64> {
    if v.norm() == 0.0 {
        return Err(Error::ZeroOnContour { re: z.re, im: z.im });
    }
    if !(v.re.is_finite() && v.im.is_finite()) {
        return Err(Error::NonIntegerWinding { value: f64::NAN });
    }
    Ok(v)
}

struct Sampler<'a, H> {
    h: &'a H,
    opts: ContourOptions,
    scale: f64,
}

impl<H> Sampler<'_, H>
where
    H: Fn(Complex64) -> Result<Complex64> + Sync,
{
    fn segment(&self, za: Complex64, ha: Complex64, zb: Complex64, hb: Complex64, depth: u32) -> Result<f64> {
        let q = hb / ha;
        let step = q.arg();
        let dm = q.norm().ln().abs();
        if step.abs() < self.opts.max_arg_step && dm < self.opts.max_log_modulus_step {
            return Ok(step);
        }
        if depth >= self.opts.max_bisections || (zb - za).norm() < 1e-15 * (za.norm() + zb.norm()) {
            let small = ha.norm().min(hb.norm()) < 1e-10 * self.scale;
            return Err(if small {
                Error::ZeroOnContour { re: za.re, im: za.im }
            } else {
                Error::NonIntegerWinding { value: step / std::f64::consts::TAU }
            });
        }
        let zm = 0.5 * (za + zb);
        let hm = check(zm, (self.h)(zm)?)?;
        Ok(self.segment(za, ha, zm, hm, depth + 1)? + self.segment(zm, hm, zb, hb, depth + 1)?)
    }
}

/// Parameters in [0, 1) along a -> b: uniform, plus a geometric cluster
/// around the point nearest `focus`.
fn edge_nodes(a: Complex64, b: Complex64, n: usize, focus: Option<Complex64>) -> Vec<f64> {
    let mut ts: Vec<f64> = (0..n).map(|j| j as f64 / n as f64).collect();
    if let Some(f) = focus {
        let d = b - a;
        let len2 = d.norm_sqr();
        let t0 = (((f - a) * d.conj()).re / len2).clamp(0.0, 1.0);
        let gap = (a + d * t0 - f).norm() / len2.sqrt();
        if gap < 1.0 / n as f64 {
            let mut s = gap.max(1e-15);
            while s < 1.0 {
                for t in [t0 - s, t0 + s] {
                    if t > 0.0 && t < 1.0 {
                        ts.push(t);
                    }
                }
                s *= GRADE;
            }
            if t0 > 0.0 && t0 < 1.0 {
                ts.push(t0);
            }
            ts.sort_by(|x, y| x.partial_cmp(y).unwrap());
            ts.dedup_by(|x, y| (*x - *y).abs() < 1e-15);
        }
    }
    ts
}

/// (1/2 pi i) ∮ h'/h around the rectangle (counter-clockwise), before rounding.
pub fn winding_number<H>(h: &H, rect: &RectContour, opts: &ContourOptions) -> Result<f64>
where
    H: Fn(Complex64) -> Result<Complex64> + Sync,
{
    rect.validate()?;
    let c = corners(rect);
    let n = opts.points_per_edge.max(2);
    let mut zs = Vec::with_capacity(4 * n + 1);
    for e in 0..4 {
        let (a, b) = (c[e], c[(e + 1) % 4]);
        zs.extend(edge_nodes(a, b, n, opts.focus).into_iter().map(|t| a + (b - a) * t));
    }
    let hs: Vec<Complex64> = zs.par_iter().map(|&z| h(z).and_then(|v| check(z, v))).collect::<Result<_>>()?;
    let mut mods: Vec<f64> = hs.iter().map(|v| v.norm()).collect();
    mods.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let scale = mods[mods.len() / 2];
    let s = Sampler { h, opts: *opts, scale };
    let m = zs.len();
    let total: f64 = (0..m)
        .into_par_iter()
        .map(|i| s.segment(zs[i], hs[i], zs[(i + 1) % m], hs[(i + 1) % m], 0))
        .collect::<Result<Vec<f64>>>()?
        .iter()
        .sum();
    Ok(total / std::f64::consts::TAU)
}

/// Number of zeros of `h` inside `rect` by the argument principle.
pub fn count_zeros<H>(h: &H, rect: &RectContour, opts: &ContourOptions) -> Result<i64>
where
    H: Fn(Complex64) -> Result<Complex64> + Sync,
{
    count_rec(h, rect, opts, 0)
}

fn count_rec<H>(h: &H, rect: &RectContour, opts: &ContourOptions, depth: u32) -> Result<i64>
where
    H: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let w = match winding_number(h, rect, opts) {
        Ok(w) if (w - w.round()).abs() < 0.05 => return Ok(w.round() as i64),
        Ok(w) => Error::NonIntegerWinding { value: w },
        Err(e @ Error::NonIntegerWinding { .. }) => e,
        Err(e) => return Err(e),
    };
    if depth >= opts.max_split_depth {
        return Err(w);
    }
    let mut n = 0;
    for q in rect.quadrants(0.5, 0.5) {
        n += count_rec(h, &q, opts, depth + 1)?;
    }
    Ok(n)
}
