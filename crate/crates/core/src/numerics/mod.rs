//! Quadrature, principal values, phase unwrapping and zero counting.

mod contour;
pub(crate) mod gauss;
mod phase;
mod pv;
mod tanh_sinh;

pub use contour::{count_zeros, winding_number, ContourOptions};
pub use phase::{principal_arg_step, unwrap_phase};
pub use pv::{principal_value, principal_value_on};
pub use tanh_sinh::{integrate, integrate_infinite, integrate_on, Panel, QuadResult};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerances and budget for the adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// Power `q` in |f(x)| ~ |x|^-q at large |x|; shapes the tail map.
    pub domain_decay_hint: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { rel_tol: 1e-10, abs_tol: 1e-12, max_subdivisions: 400, domain_decay_hint: 2.0 }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) || self.max_subdivisions < 1 {
            return Err(Error::InvalidInput(format!("bad quadrature spec {self:?}")));
        }
        Ok(())
    }

    pub fn with_decay(mut self, q: f64) -> Self {
        self.domain_decay_hint = q;
        self
    }
}

/// Axis-aligned rectangle in the complex frequency plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectContour {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl RectContour {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let r = RectContour { re_min, re_max, im_min, im_max };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.re_min < self.re_max
            && self.im_min < self.im_max
            && [self.re_min, self.re_max, self.im_min, self.im_max].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("degenerate rectangle {self:?}")))
        }
    }

    pub fn width(&self) -> f64 {
        self.re_max - self.re_min
    }

    pub fn height(&self) -> f64 {
        self.im_max - self.im_min
    }

    pub fn center(&self) -> num_complex::Complex64 {
        num_complex::Complex64::new(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))
    }

    pub fn contains(&self, z: num_complex::Complex64) -> bool {
        z.re > self.re_min && z.re < self.re_max && z.im > self.im_min && z.im < self.im_max
    }

    /// Split into four quadrants at (`fx`, `fy`) fractions of the width/height.
    pub fn quadrants(&self, fx: f64, fy: f64) -> [RectContour; 4] {
        let xm = self.re_min + fx * self.width();
        let ym = self.im_min + fy * self.height();
        [
            RectContour { re_min: self.re_min, re_max: xm, im_min: self.im_min, im_max: ym },
            RectContour { re_min: xm, re_max: self.re_max, im_min: self.im_min, im_max: ym },
            RectContour { re_min: xm, re_max: self.re_max, im_min: ym, im_max: self.im_max },
            RectContour { re_min: self.re_min, re_max: xm, im_min: ym, im_max: self.im_max },
        ]
    }

    /// Scale about the center.
    pub fn inflate(&self, factor: f64) -> RectContour {
        let c = self.center();
        let hw = 0.5 * self.width() * factor;
        let hh = 0.5 * self.height() * factor;
        RectContour { re_min: c.re - hw, re_max: c.re + hw, im_min: c.im - hh, im_max: c.im + hh }
    }
}
