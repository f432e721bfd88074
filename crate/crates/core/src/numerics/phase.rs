use num_complex::Complex64;

use crate::error::{Error, Result};

const JUMP_MARGIN: f64 = 1e-6;

/// arg(b / a) in (-pi, pi].
pub fn principal_arg_step(a: Complex64, b: Complex64) -> f64 {
    (b * a.conj()).arg()
}

/// Continuous phase along an ordered sequence of nonzero samples.
pub fn unwrap_phase(samples: &[Complex64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(samples.len());
    for (i, z) in samples.iter().enumerate() {
        if z.norm() == 0.0 || !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::ZeroSample { index: i });
        }
        if i == 0 {
            out.push(z.arg());
            continue;
        }
        let step = principal_arg_step(samples[i - 1], *z);
        if step.abs() >= std::f64::consts::PI - JUMP_MARGIN {
            return Err(Error::JumpTooLarge { index: i - 1, gap: step });
        }
        out.push(out[i - 1] + step);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn quarter_turns() {
        let s = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(1.0, 0.0),
        ];
        let p = unwrap_phase(&s).unwrap();
        for (got, want) in p.iter().zip([0.0, PI / 2.0, PI, 1.5 * PI, 2.0 * PI]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_and_two_turns() {
        let ones = vec![Complex64::new(1.0, 0.0); 3];
        assert_eq!(unwrap_phase(&ones).unwrap(), vec![0.0; 3]);
        let s: Vec<_> = (0..=32).map(|j| Complex64::from_polar(1.0, j as f64 * PI / 8.0)).collect();
        let p = unwrap_phase(&s).unwrap();
        assert!(p.windows(2).all(|w| w[1] > w[0]));
        assert!((p[32] - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        let z = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        assert_eq!(unwrap_phase(&z), Err(Error::ZeroSample { index: 1 }));
        let j = [Complex64::new(1.0, 0.0), Complex64::new(-1.0, 1e-9)];
        assert!(matches!(unwrap_phase(&j), Err(Error::JumpTooLarge { index: 0, .. })));
    }
}
