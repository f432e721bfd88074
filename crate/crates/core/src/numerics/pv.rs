use num_complex::Complex64;

use super::gauss::{gl_high, gl_low};
use super::tanh_sinh::{integrate_panels, panels_for, Panel};
use super::{QuadResult, QuadratureSpec};
use crate::error::{Error, Result};

/// Cauchy principal value over the whole real line.
pub fn principal_value<F: Fn(f64) -> Complex64>(f: &F, poles: &[f64], spec: &QuadratureSpec) -> Result<Complex64> {
    principal_value_on(f, f64::NEG_INFINITY, f64::INFINITY, poles, &[], spec).map(|r| r.value)
}

/// Principal value over (lo, hi) with simple poles strictly inside.
///
/// Each pole gets a symmetric window [p - d, p + d] on which the integrand
/// is folded, f(p + t) + f(p - t), so the 1/t parts cancel before
/// summation. Samples are rescaled by the exact floating offset to keep that
/// cancellation exact for the pole term.
pub fn principal_value_on<F: Fn(f64) -> Complex64>(
    f: &F,
    lo: f64,
    hi: f64,
    poles: &[f64],
    breaks: &[f64],
    spec: &QuadratureSpec,
) -> Result<QuadResult> {
    spec.validate()?;
    let mut ps: Vec<f64> = poles.to_vec();
    ps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for w in ps.windows(2) {
        if (w[1] - w[0]).abs() <= 1e-10 * w[0].abs().max(w[1].abs()).max(1e-300) {
            return Err(Error::PoleCollision { a: w[0], b: w[1] });
        }
    }
    for &p in &ps {
        if !(p > lo && p < hi) {
            return Err(Error::InvalidInput(format!("pole {p} outside ({lo}, {hi})")));
        }
    }
    let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300);
    let mut windows = Vec::with_capacity(ps.len());
    for (i, &p) in ps.iter().enumerate() {
        let mut d = if p == 0.0 { 1.0 } else { 0.5 * p.abs() };
        if i > 0 {
            d = d.min(0.45 * (p - ps[i - 1]));
        }
        if i + 1 < ps.len() {
            d = d.min(0.45 * (ps[i + 1] - p));
        }
        for &b in breaks {
            if b.is_finite() && !same(b, p) {
                d = d.min((b - p).abs());
            }
        }
        if lo.is_finite() {
            d = d.min(0.5 * (p - lo));
        }
        if hi.is_finite() {
            d = d.min(0.5 * (hi - p));
        }
        windows.push((p, d));
    }

    let mut nodes: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&b| {
            b.is_finite()
                && !windows.iter().any(|&(p, d)| (b - p).abs() < d || same(b, p - d) || same(b, p + d))
        })
        .collect();
    for &(p, d) in &windows {
        nodes.push(p - d);
        nodes.push(p + d);
    }
    let panels: Vec<Panel> = panels_for(lo, hi, &nodes, spec.domain_decay_hint)
        .into_iter()
        .filter(|pan| match *pan {
            Panel::Finite { a, b } => !windows.iter().any(|&(p, d)| a == p - d && b == p + d),
            _ => true,
        })
        .collect();
    let mut out = integrate_panels(f, &panels, spec)?;
    for &(p, d) in &windows {
        let w = folded_window(f, p, d, spec)?;
        out.value += w.value;
        out.err_est += w.err_est;
        out.l1 += w.l1;
        out.evals += w.evals;
    }
    Ok(out)
}

fn folded_window<F: Fn(f64) -> Complex64>(f: &F, p: f64, d: f64, spec: &QuadratureSpec) -> Result<QuadResult> {
    let g = |t: f64| -> Result<Complex64> {
        let x1 = p + t;
        let x2 = p - t;
        let t1 = x1 - p;
        let t2 = p - x2;
        let v1 = f(x1);
        let v2 = f(x2);
        let v = v1 * (t1 / t) + v2 * (t2 / t);
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(Error::SingularIntegrand { x: x1 })
        }
    };
    let rule = |a: f64, b: f64, nodes: &[(f64, f64)], evals: &mut usize| -> Result<(Complex64, f64)> {
        let hw = 0.5 * (b - a);
        let c = a + hw;
        let mut s = Complex64::new(0.0, 0.0);
        let mut s1 = 0.0;
        for &(x, w) in nodes {
            let v = g(c + hw * x)?;
            s += v * w;
            s1 += v.norm() * w;
        }
        *evals += 2 * nodes.len();
        Ok((s * hw, s1 * hw))
    };
    let mut evals = 0;
    let mut stack = vec![(0.0, d, 0u32)];
    let mut res = QuadResult { value: Complex64::new(0.0, 0.0), err_est: 0.0, l1: 0.0, evals: 0 };
    while let Some((a, b, depth)) = stack.pop() {
        let (lo, _) = rule(a, b, gl_low(), &mut evals)?;
        let (hi, l1) = rule(a, b, gl_high(), &mut evals)?;
        let err = (hi - lo).norm();
        let tol = (0.1 * spec.abs_tol).max(0.1 * spec.rel_tol * l1).max(64.0 * f64::EPSILON * l1);
        if err <= tol || depth >= 16 {
            if err > tol {
                return Err(Error::NonConvergence { value_re: hi.re, value_im: hi.im, err_est: err, target: tol });
            }
            res.value += hi;
            res.err_est += err;
            res.l1 += l1;
        } else {
            let m = 0.5 * (a + b);
            stack.push((a, m, depth + 1));
            stack.push((m, b, depth + 1));
        }
    }
    res.evals = evals;
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn breaks_a_few_ulp_from_window_edges() {
        for k in 1..8 {
            let w = 1.0 - 0.5 * k as f64 * f64::EPSILON;
            let r = principal_value_on(&|x: f64| c(1.0 / (1.0 - x)), 0.0, 3.0, &[1.0], &[0.5 * w, w, 2.0 * w], &QuadratureSpec::default())
                .unwrap();
            assert!((r.value.re + 2f64.ln()).abs() < 1e-10, "{k}: {}", r.value);
        }
    }

    #[test]
    fn symmetric_pair_vanishes() {
        let v = principal_value(&|k: f64| c(1.0 / (1.0 - k * k)), &[-1.0, 1.0], &QuadratureSpec::default()).unwrap();
        assert!(v.norm() < 1e-10, "{v}");
    }

    #[test]
    fn pv_of_simple_pole_on_interval() {
        // PV of 1/x over (-1, 2) = ln 2
        let r = principal_value_on(&|x: f64| c(1.0 / x), -1.0, 2.0, &[0.0], &[], &QuadratureSpec::default()).unwrap();
        assert!((r.value.re - 2f64.ln()).abs() < 1e-12, "{}", r.value);
    }

    #[test]
    fn close_poles_collide() {
        let e = principal_value(&|k: f64| c(k), &[1.0, 1.0 + 1e-14], &QuadratureSpec::default()).unwrap_err();
        assert!(matches!(e, Error::PoleCollision { .. }));
    }

    #[test]
    fn pv_of_cauchy_kernel_against_hilbert_transform() {
        // PV ∫ exp(-k^2)/(x-k) dk = 2 sqrt(pi) F(x), F = Dawson's integral.
        let x = 0.7f64;
        let dawson = {
            // F(x) = exp(-x^2) ∫_0^x exp(t^2) dt, by Simpson with many points
            let n = 20000;
            let h = x / n as f64;
            let mut s = 0.0;
            for i in 0..=n {
                let t = i as f64 * h;
                let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                s += w * (t * t).exp();
            }
            (-x * x).exp() * s * h / 3.0
        };
        let v = principal_value(&|k: f64| c((-k * k).exp() / (x - k)), &[x], &QuadratureSpec::default()).unwrap();
        assert!((v.re - 2.0 * std::f64::consts::PI.sqrt() * dawson).abs() < 1e-10, "{} {}", v.re, dawson);
    }
}
