use std::fmt;
use std::sync::Arc;

use super::{mat_scale, Interval, Mat2};
use crate::error::{Error, Result};

type EvalFn = dyn Fn(f64, [f64; 2], f64) -> Mat2 + Send + Sync;

/// The nonlinearity `a(t, x, y)` together with its admissible open interval.
#[derive(Clone)]
pub struct CoefficientFn {
    label: String,
    dim: usize,
    admissible: Interval,
    eval: Arc<EvalFn>,
}

impl fmt::Debug for CoefficientFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientFn")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("admissible", &self.admissible)
            .finish()
    }
}

impl CoefficientFn {
    pub fn new(
        label: impl Into<String>,
        dim: usize,
        admissible: Interval,
        eval: impl Fn(f64, [f64; 2], f64) -> Mat2 + Send + Sync + 'static,
    ) -> Self {
        CoefficientFn {
            label: label.into(),
            dim,
            admissible,
            eval: Arc::new(eval),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn admissible(&self) -> Interval {
        self.admissible
    }

    #[inline]
    pub fn eval(&self, t: f64, x: [f64; 2], y: f64) -> Mat2 {
        (self.eval)(t, x, y)
    }

    /// `a(t + tau, x, y)`: the coefficient seen by a problem restarted at `tau`.
    pub fn shifted(&self, tau: f64) -> CoefficientFn {
        if tau == 0.0 {
            return self.clone();
        }
        let inner = Arc::clone(&self.eval);
        CoefficientFn {
            label: format!("{}@{tau}", self.label),
            dim: self.dim,
            admissible: self.admissible,
            eval: Arc::new(move |t, x, y| inner(t + tau, x, y)),
        }
    }

    /// `a = Id`, admissible on the whole line.
    pub fn identity(dim: usize) -> Self {
        CoefficientFn::scaled(dim, 1.0)
    }

    /// `a = c Id`.
    pub fn scaled(dim: usize, c: f64) -> Self {
        let label = if c == 1.0 { "identity".to_string() } else { format!("scaled:{c}") };
        CoefficientFn::new(label, dim, Interval::real_line(), move |_, _, _| mat_scale(c))
    }

    /// Porous medium `a = y^m Id` on `O = (0, inf)`.
    pub fn porous(dim: usize, m: f64) -> Self {
        CoefficientFn::new(format!("porous:{m}"), dim, Interval::new(0.0, f64::INFINITY), move |_, _, y| {
            mat_scale(y.powf(m))
        })
    }

    /// `R(theta) diag(1, 2) R(theta)^T`, independent of `(t, x, y)`. In one
    /// dimension this reduces to the scalar `cos^2 + 2 sin^2`.
    pub fn anisotropic(dim: usize, theta: f64) -> Self {
        let (c, s) = (theta.cos(), theta.sin());
        let a = [
            [c * c + 2.0 * s * s, -c * s],
            [-c * s, s * s + 2.0 * c * c],
        ];
        CoefficientFn::new(format!("anisotropic:{theta}"), dim, Interval::real_line(), move |_, _, _| a)
    }

    /// `a = (1 + min(t, tau)) Id`.
    pub fn time_ramp(dim: usize, tau: f64) -> Self {
        CoefficientFn::new(format!("time_ramp:{tau}"), dim, Interval::real_line(), move |t, _, _| {
            mat_scale(1.0 + t.min(tau))
        })
    }

    /// `a = (1 + min(t, tau)) y Id` on `O = (0, inf)`: a porous medium whose
    /// mobility grows in time.
    pub fn ramped_porous(dim: usize, tau: f64) -> Self {
        CoefficientFn::new(format!("ramped_porous:{tau}"), dim, Interval::new(0.0, f64::INFINITY), move |t, _, y| {
            mat_scale((1.0 + t.min(tau)) * y)
        })
    }

    /// `a = (2 + cos(2 pi x / L)) Id`, a periodic medium independent of `y`.
    pub fn periodic_medium(dim: usize, length: f64) -> Self {
        let k = 2.0 * std::f64::consts::PI / length;
        CoefficientFn::new(format!("periodic_medium:{length}"), dim, Interval::real_line(), move |_, x, _| {
            mat_scale(2.0 + (k * x[0]).cos())
        })
    }

    /// Resolves a registered label such as `"porous:2"` or `"identity"`.
    pub fn from_label(label: &str, dim: usize) -> Result<Self> {
        let (name, arg) = match label.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (label.trim(), None),
        };
        let num = |what: &str| -> Result<f64> {
            let raw = arg.ok_or_else(|| Error::InvalidParameter(format!("coefficient `{name}` needs a {what}")))?;
            raw.parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("cannot parse {what} `{raw}` in `{label}`")))
        };
        let a = match name {
            "identity" => CoefficientFn::identity(dim),
            "scaled" => CoefficientFn::scaled(dim, num("factor")?),
            "porous" => {
                let m = num("exponent")?;
                if !(m > 0.0) {
                    return Err(Error::InvalidParameter(format!("porous exponent must be positive, got {m}")));
                }
                CoefficientFn::porous(dim, m)
            }
            "anisotropic" => CoefficientFn::anisotropic(dim, num("angle")?),
            "time_ramp" => CoefficientFn::time_ramp(dim, num("ramp time")?),
            "ramped_porous" => CoefficientFn::ramped_porous(dim, num("ramp time")?),
            "periodic_medium" => CoefficientFn::periodic_medium(dim, num("period")?),
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "unknown coefficient `{label}`; known: identity, scaled:c, porous:m, anisotropic:theta, time_ramp:tau, ramped_porous:tau, periodic_medium:L"
                )))
            }
        };
        Ok(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_resolve() {
        for l in ["identity", "porous:1", "porous:2.5", "anisotropic:0.3", "time_ramp:1", "ramped_porous:1", "scaled:2", "periodic_medium:1"] {
            assert!(CoefficientFn::from_label(l, 2).is_ok(), "{l}");
        }
        assert!(CoefficientFn::from_label("porous", 1).is_err());
        assert!(CoefficientFn::from_label("porous:-1", 1).is_err());
        assert!(CoefficientFn::from_label("nope", 1).is_err());
    }

    #[test]
    fn shift_moves_time_origin() {
        let a = CoefficientFn::time_ramp(1, 1.0);
        let b = a.shifted(0.25);
        assert_eq!(b.eval(0.5, [0.0; 2], 0.0)[0][0], a.eval(0.75, [0.0; 2], 0.0)[0][0]);
    }

    #[test]
    fn anisotropic_is_symmetric() {
        let a = CoefficientFn::anisotropic(2, 0.7).eval(0.0, [0.0; 2], 0.0);
        assert_eq!(a[0][1], a[1][0]);
    }
}
