use std::sync::OnceLock;

use num_complex::Complex64;

use super::QuadratureSpec;
use crate::error::{Error, Result};

const MAX_LEVEL: usize = 8;
const START_LEVEL: usize = 2;
const T_MAX: f64 = 6.0;

/// (distance-to-endpoint factor, weight) for the nodes first appearing at
/// each level; t >= 0 only, the mirror node is implied.
struct Level {
    nodes: Vec<(f64, f64)>,
}

fn levels() -> &'static [Level] {
    static TABLE: OnceLock<Vec<Level>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let half_pi = std::f64::consts::FRAC_PI_2;
        (0..=MAX_LEVEL)
            .map(|k| {
                let h = 0.5f64.powi(k as i32);
                let mut nodes = Vec::new();
                let mut j = 1usize;
                loop {
                    let t = if k == 0 { j as f64 } else { (j as f64) * h };
                    if t > T_MAX {
                        break;
                    }
                    let s = half_pi * t.sinh();
                    let e = (-2.0 * s).exp();
                    let comp = 2.0 * e / (1.0 + e);
                    let w = half_pi * t.cosh() * 4.0 * e / ((1.0 + e) * (1.0 + e));
                    if comp > 0.0 && w > 0.0 {
                        nodes.push((comp, w));
                    }
                    j += if k == 0 { 1 } else { 2 };
                }
                Level { nodes }
            })
            .collect()
    })
}

/// Integration panel: a finite interval, or a half-line mapped onto (0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Panel {
    Finite { a: f64, b: f64 },
    /// [c, +inf) via x = c + s (u^-alpha - 1).
    RightTail { c: f64, s: f64, alpha: f64 },
    /// (-inf, c] via x = c - s (u^-alpha - 1).
    LeftTail { c: f64, s: f64, alpha: f64 },
}

impl Panel {
    fn bounds(&self) -> (f64, f64) {
        match *self {
            Panel::Finite { a, b } => (a, b),
            _ => (0.0, 1.0),
        }
    }

    #[inline]
    fn eval<F: Fn(f64) -> Complex64>(&self, f: &F, u: f64) -> Result<Complex64> {
        let (x, jac) = match *self {
            Panel::Finite { .. } => (u, 1.0),
            Panel::RightTail { c, s, alpha } => {
                let p = u.powf(-alpha);
                (c + s * (p - 1.0), s * alpha * p / u)
            }
            Panel::LeftTail { c, s, alpha } => {
                let p = u.powf(-alpha);
                (c - s * (p - 1.0), s * alpha * p / u)
            }
        };
        if !x.is_finite() || !jac.is_finite() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let v = f(x);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::SingularIntegrand { x });
        }
        let out = v * jac;
        if !(out.re.is_finite() && out.im.is_finite()) {
            return Err(Error::SingularIntegrand { x });
        }
        Ok(out)
    }
}

fn tail_alpha(q: f64) -> f64 {
    if q >= 2.0 {
        1.0
    } else {
        (1.0 / (q.max(1.05) - 1.0)).min(20.0)
    }
}

#[derive(Debug, Clone)]
struct Work {
    panel: Panel,
    a: f64,
    b: f64,
    level: usize,
    raw: Complex64,
    raw_l1: f64,
    value: Complex64,
    l1: f64,
    err: f64,
    last_ratio: f64,
    last_diff: f64,
}

impl Work {
    fn new<F: Fn(f64) -> Complex64>(f: &F, panel: Panel, evals: &mut usize) -> Result<Work> {
        let (a, b) = panel.bounds();
        let mut w = Work {
            panel,
            a,
            b,
            level: 0,
            raw: Complex64::new(0.0, 0.0),
            raw_l1: 0.0,
            value: Complex64::new(0.0, 0.0),
            l1: 0.0,
            err: f64::INFINITY,
            last_ratio: 1.0,
            last_diff: f64::INFINITY,
        };
        let hw = 0.5 * (b - a);
        let c = a + hw;
        let f0 = panel.eval(f, c)?;
        *evals += 1;
        w.raw = f0 * std::f64::consts::FRAC_PI_2;
        w.raw_l1 = f0.norm() * std::f64::consts::FRAC_PI_2;
        w.add_level(f, 0, evals)?;
        let mut prev = w.value;
        for k in 1..=START_LEVEL {
            w.add_level(f, k, evals)?;
            w.err = (w.value - prev).norm();
            w.last_diff = w.err;
            prev = w.value;
        }
        w.level = START_LEVEL;
        Ok(w)
    }

    fn add_level<F: Fn(f64) -> Complex64>(&mut self, f: &F, k: usize, evals: &mut usize) -> Result<()> {
        let hw = 0.5 * (self.b - self.a);
        let mut s = Complex64::new(0.0, 0.0);
        let mut s1 = 0.0;
        for &(comp, wt) in &levels()[k].nodes {
            let d = hw * comp;
            // Nodes closer to an end than one ulp are nudged inside rather
            // than dropped; dropping them biases narrow panels.
            let xl = (self.a + d).max(self.a.next_up());
            let xr = (self.b - d).min(self.b.next_down());
            if xl < self.b {
                let v = self.panel.eval(f, xl)?;
                s += v * wt;
                s1 += v.norm() * wt;
                *evals += 1;
            }
            if xr > self.a {
                let v = self.panel.eval(f, xr)?;
                s += v * wt;
                s1 += v.norm() * wt;
                *evals += 1;
            }
        }
        self.raw += s;
        self.raw_l1 += s1;
        let h = 0.5f64.powi(k as i32);
        self.value = self.raw * (hw * h);
        self.l1 = self.raw_l1 * (hw * h);
        Ok(())
    }

    fn refine<F: Fn(f64) -> Complex64>(&mut self, f: &F, evals: &mut usize) -> Result<()> {
        let prev = self.value;
        let prev_err = self.last_diff;
        self.level += 1;
        self.add_level(f, self.level, evals)?;
        let diff = (self.value - prev).norm();
        self.last_ratio = if prev_err > 0.0 { diff / prev_err } else { 0.0 };
        // Once the level sums converge (roughly doubling digits per level)
        // the last difference overstates the error of the newest estimate.
        self.err = if self.last_ratio < 0.1 { diff * self.last_ratio.max(1e-3) } else { diff };
        self.last_diff = diff;
        Ok(())
    }

    fn split(&self) -> (Panel, Panel) {
        let m = 0.5 * (self.a + self.b);
        match self.panel {
            Panel::Finite { .. } => (Panel::Finite { a: self.a, b: m }, Panel::Finite { a: m, b: self.b }),
            tail => (
                SubTail { base: tail, a: self.a, b: m }.into_panel(),
                SubTail { base: tail, a: m, b: self.b }.into_panel(),
            ),
        }
    }
}

/// Bisected piece of a tail panel expressed back in x.
struct SubTail {
    base: Panel,
    a: f64,
    b: f64,
}

impl SubTail {
    fn into_panel(self) -> Panel {
        let x_of = |u: f64| match self.base {
            Panel::RightTail { c, s, alpha } => c + s * (u.powf(-alpha) - 1.0),
            Panel::LeftTail { c, s, alpha } => c - s * (u.powf(-alpha) - 1.0),
            Panel::Finite { .. } => u,
        };
        if self.a <= 0.0 {
            // Still reaches infinity: keep a tail anchored at the inner end.
            let c_new = x_of(self.b);
            match self.base {
                Panel::RightTail { s, alpha, .. } => {
                    let s_new = s * self.b.powf(-alpha);
                    Panel::RightTail { c: c_new, s: s_new, alpha }
                }
                Panel::LeftTail { s, alpha, .. } => {
                    let s_new = s * self.b.powf(-alpha);
                    Panel::LeftTail { c: c_new, s: s_new, alpha }
                }
                p => p,
            }
        } else {
            let (x1, x2) = (x_of(self.a), x_of(self.b));
            Panel::Finite { a: x1.min(x2), b: x1.max(x2) }
        }
    }
}

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: Complex64,
    pub err_est: f64,
    /// Integral of |f|, the natural scale for cancellation noise.
    pub l1: f64,
    pub evals: usize,
}

/// Globally adaptive tanh-sinh over a set of panels: the panel with the
/// largest error estimate is refined by one level, or bisected once its
/// level stops converging.
pub fn integrate_panels<F: Fn(f64) -> Complex64>(f: &F, panels: &[Panel], spec: &QuadratureSpec) -> Result<QuadResult> {
    spec.validate()?;
    let mut evals = 0usize;
    let mut work: Vec<Work> = Vec::with_capacity(panels.len() + 16);
    for p in panels {
        let (a, b) = p.bounds();
        if b > a {
            work.push(Work::new(f, *p, &mut evals)?);
        }
    }
    let mut splits = 0usize;
    loop {
        let total: Complex64 = work.iter().map(|w| w.value).sum();
        let err: f64 = work.iter().map(|w| w.err).sum();
        let l1: f64 = work.iter().map(|w| w.l1).sum();
        let noise = 64.0 * f64::EPSILON * l1;
        let target = spec.abs_tol.max(spec.rel_tol * total.norm()).max(noise);
        if err <= target || work.is_empty() {
            return Ok(QuadResult { value: total, err_est: err, l1, evals });
        }
        let (i, _) = work
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.partial_cmp(&y.1.err).unwrap_or(std::cmp::Ordering::Equal))
            .expect("non-empty");
        let w = &work[i];
        let converging = w.level < 4 || w.last_ratio < 0.05;
        // Round-off in the node positions themselves matters once a panel is
        // only a few ulps of |x| wide.
        let resolution = w.a.abs().max(w.b.abs()) / (w.b - w.a);
        let panel_noise = f64::EPSILON * w.l1 * (64.0 + 4.0 * resolution);
        if w.level < MAX_LEVEL && converging {
            work[i].refine(f, &mut evals)?;
        } else if splits < spec.max_subdivisions && (w.b - w.a) > 1e-13 * (w.a.abs() + w.b.abs()) {
            let (l, r) = w.split();
            let wl = Work::new(f, l, &mut evals)?;
            let wr = Work::new(f, r, &mut evals)?;
            work[i] = wl;
            work.push(wr);
            splits += 1;
        } else if w.err <= panel_noise.max(target / (work.len() as f64)) {
            // Already at round-off; mark settled.
            work[i].err = 0.0;
        } else {
            return Err(Error::NonConvergence { value_re: total.re, value_im: total.im, err_est: err, target });
        }
    }
}

/// Panels covering (lo, hi) with the given interior breakpoints; infinite
/// ends are mapped using the decay hint.
pub fn panels_for(lo: f64, hi: f64, breaks: &[f64], decay_hint: f64) -> Vec<Panel> {
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|x| x.is_finite() && *x > lo && *x < hi).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * a.abs().max(b.abs()));
    let alpha = tail_alpha(decay_hint);
    let mut out = Vec::new();
    let finite_lo = lo.is_finite();
    let finite_hi = hi.is_finite();
    if !finite_lo && !finite_hi && pts.is_empty() {
        pts.push(0.0);
    }
    let mut nodes: Vec<f64> = Vec::new();
    if finite_lo {
        nodes.push(lo);
    }
    nodes.extend(pts.iter().copied());
    if finite_hi {
        nodes.push(hi);
    }
    if !finite_lo {
        let c = nodes[0];
        out.push(Panel::LeftTail { c, s: c.abs().max(1.0), alpha });
    }
    for w in nodes.windows(2) {
        out.push(Panel::Finite { a: w[0], b: w[1] });
    }
    if !finite_hi {
        let c = *nodes.last().unwrap();
        out.push(Panel::RightTail { c, s: c.abs().max(1.0), alpha });
    }
    out
}

/// Integrate over (lo, hi), either end possibly infinite.
pub fn integrate_on<F: Fn(f64) -> Complex64>(f: &F, lo: f64, hi: f64, breaks: &[f64], spec: &QuadratureSpec) -> Result<QuadResult> {
    let panels = panels_for(lo, hi, breaks, spec.domain_decay_hint);
    integrate_panels(f, &panels, spec)
}

/// Finite interval [a, b].
pub fn integrate<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<QuadResult> {
    integrate_on(f, a, b, &[], spec)
}

/// Whole real line.
pub fn integrate_infinite<F: Fn(f64) -> Complex64>(f: &F, spec: &QuadratureSpec) -> Result<(Complex64, f64)> {
    let r = integrate_on(f, f64::NEG_INFINITY, f64::INFINITY, &[-1.0, 0.0, 1.0], spec)?;
    Ok((r.value, r.err_est))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn lorentzian_on_line() {
        let (v, err) = integrate_infinite(&|k: f64| c(1.0 / (-1.0 - k * k), 0.0), &QuadratureSpec::default()).unwrap();
        assert!((v - c(-PI, 0.0)).norm() < 1e-10, "{v}");
        assert!(err < 1e-9);
    }

    #[test]
    fn gaussian_on_line() {
        let (v, _) = integrate_infinite(&|k: f64| c((-k * k).exp(), 0.0), &QuadratureSpec::default()).unwrap();
        assert!((v.re - PI.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn complex_denominator() {
        let (v, _) = integrate_infinite(&|k: f64| c(0.0, 1.0).sub_inv(k * k), &QuadratureSpec::default()).unwrap();
        let want = Complex64::from_polar(PI, -0.75 * PI);
        assert!((v - want).norm() < 1e-9, "{v} vs {want}");
    }

    trait SubInv {
        fn sub_inv(self, x: f64) -> Complex64;
    }
    impl SubInv for Complex64 {
        fn sub_inv(self, x: f64) -> Complex64 {
            1.0 / (self - x)
        }
    }

    #[test]
    fn slow_tail_with_hint() {
        // (1 + x)^(-3/2) on [0, inf) = 2
        let spec = QuadratureSpec::default().with_decay(1.5);
        let r = integrate_on(&|x: f64| c((1.0 + x).powf(-1.5), 0.0), 0.0, f64::INFINITY, &[], &spec).unwrap();
        assert!((r.value.re - 2.0).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn endpoint_singularity() {
        // x^(-1/2) on (0, 1] = 2
        let r = integrate(&|x: f64| c(x.powf(-0.5), 0.0), 0.0, 1.0, &QuadratureSpec::default()).unwrap();
        assert!((r.value.re - 2.0).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn non_finite_sample_is_reported() {
        let e = integrate(&|x: f64| c(1.0 / (x - 0.5), 0.0), 0.0, 1.0, &QuadratureSpec::default()).unwrap_err();
        assert!(matches!(e, Error::SingularIntegrand { .. }));
    }

    #[test]
    fn narrow_peak_needs_breakpoint_or_bisection() {
        let eta = 1e-4;
        let f = |x: f64| c(eta / (x * x + eta * eta), 0.0);
        let r = integrate_on(&f, -1.0, 1.0, &[0.0], &QuadratureSpec::default()).unwrap();
        let want = 2.0 * (1.0 / eta).atan();
        assert!((r.value.re - want).abs() < 1e-9);
        let r = integrate_on(&f, -1.0, 1.0, &[], &QuadratureSpec::default()).unwrap();
        assert!((r.value.re - want).abs() < 1e-8, "{} {}", r.value.re, want);
    }

    #[test]
    fn budget_exhaustion_is_an_error() {
        let spec = QuadratureSpec { max_subdivisions: 1, rel_tol: 1e-14, abs_tol: 1e-300, ..Default::default() };
        let f = |x: f64| c((1.0 / (x + 1e-3)).sin(), 0.0);
        assert!(matches!(integrate(&f, 0.0, 1.0, &spec), Err(Error::NonConvergence { .. })));
    }
}
