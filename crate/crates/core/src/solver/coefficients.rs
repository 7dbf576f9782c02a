use crate::error::{Error, Result};
use crate::geometry::ModelParams;
use crate::graph::{gradient_w, Jet2};

/// Coefficients of `L_f w = a w_xx + 2b w_xt + c w_tt + d w_x + e w_t` frozen at one
/// node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrozenCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
}

impl FrozenCoefficients {
    /// `a c − b²`; equals `W²` identically.
    pub fn ellipticity(&self) -> f64 {
        self.a * self.c - self.b * self.b
    }

    pub fn apply(&self, j: &Jet2) -> f64 {
        self.a * j.fxx + 2.0 * self.b * j.fxt + self.c * j.ftt + self.d * j.fx + self.e * j.ft
    }
}

/// Freeze the quasilinear operator at `(f, fx, ft)`.
///
/// With `Q = W²/(f²(W + f)) + 1/f`:
///
/// ```text
/// a = f² + ft²            b = 2τf − fx ft        c = fx² + (1 + 4τ²)
/// d = f fx + 2τ ft − Q f² fx
/// e = −Q ((1 + 4τ²) ft + 4τ f fx)
/// ```
///
/// Applying `L_f` to `f` itself gives back the `H = 1/2` equation, i.e.
/// `apply(jet) == residual_eq1(jet)` for every jet.
pub fn frozen_coefficients(f: f64, fx: f64, ft: f64, params: ModelParams) -> Result<FrozenCoefficients> {
    if !(f > 0.0 && f.is_finite()) {
        return Err(Error::Domain(format!("frozen coefficients need f > 0, got {f}")));
    }
    let tau = params.tau;
    let k = params.one_plus_4tau2();
    let w = gradient_w(&Jet2::new(f, fx, ft, 0.0, 0.0, 0.0), params);
    let q = w * w / (f * f * (w + f)) + 1.0 / f;
    Ok(FrozenCoefficients {
        a: f * f + ft * ft,
        b: 2.0 * tau * f - fx * ft,
        c: fx * fx + k,
        d: f * fx + 2.0 * tau * ft - q * f * f * fx,
        e: -q * (k * ft + 4.0 * tau * f * fx),
    })
}

/// Partial derivatives of `residual_eq1` with respect to `(f, fx, ft)`, holding the
/// second derivatives fixed. Used to assemble the Newton Jacobian.
pub fn residual_gradient(j: &Jet2, params: ModelParams) -> [f64; 3] {
    let tau = params.tau;
    let (f, fx, ft) = (j.f, j.fx, j.ft);
    let w = gradient_w(j, params);
    let a = f * fx + 2.0 * tau * ft;
    // W³/f² and its partials
    let w_f = (f + a * fx) / w;
    let w_fx = a * f / w;
    let w_ft = (ft + 2.0 * tau * a) / w;
    let cube = |dw: f64| 3.0 * w * w * dw / (f * f);
    let d_f = 2.0 * f * j.fxx + 4.0 * tau * j.fxt + 1.0 + fx * fx - (cube(w_f) - 2.0 * w * w * w / (f * f * f));
    let d_fx = -2.0 * ft * j.fxt + 2.0 * fx * j.ftt + 2.0 * f * fx + 2.0 * tau * ft - cube(w_fx);
    let d_ft = 2.0 * ft * j.fxx - 2.0 * fx * j.fxt + 2.0 * tau * fx - cube(w_ft);
    [d_f, d_fx, d_ft]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::residual_eq1;

    #[test]
    fn coefficients_of_flat_graph() {
        for tau in [0.0, 0.25, -1.5] {
            let c = frozen_coefficients(1.0, 0.0, 0.0, ModelParams { tau }).unwrap();
            assert_eq!(c.a, 1.0);
            assert_eq!(c.b, 2.0 * tau);
            assert_eq!(c.c, 1.0 + 4.0 * tau * tau);
            assert_eq!(c.d, 0.0);
            assert_eq!(c.e.abs(), 0.0);
        }
    }

    #[test]
    fn defining_contract_at_tilted_jet() {
        // f = 1, fx = 1, ft = 0, τ = 0: W = √2, Q = 2/(√2 + 1) + 1.
        let p = ModelParams { tau: 0.0 };
        let c = frozen_coefficients(1.0, 1.0, 0.0, p).unwrap();
        let q = 2.0 / (2f64.sqrt() + 1.0) + 1.0;
        assert!((c.d - (1.0 - q)).abs() < 1e-15);
        assert_eq!(c.e, 0.0);
        let j = Jet2::new(1.0, 1.0, 0.0, 0.2, -0.1, 0.7);
        // brute force: (f²+ft²)fxx − 2 fx ft fxt + (fx²+1) ftt + f(1+fx²) − W³/f²
        let brute = 0.2 + 2.0 * 0.7 + 2.0 - 2f64.sqrt().powi(3);
        assert!((c.apply(&j) - brute).abs() < 1e-14);
        assert!((residual_eq1(&j, p) - brute).abs() < 1e-14);
    }

    #[test]
    fn ellipticity_is_w_squared() {
        let p = ModelParams { tau: 0.8 };
        let j = Jet2::new(0.7, -1.2, 0.9, 0.0, 0.0, 0.0);
        let c = frozen_coefficients(j.f, j.fx, j.ft, p).unwrap();
        let w = gradient_w(&j, p);
        assert!((c.ellipticity() - w * w).abs() < 1e-13);
    }

    #[test]
    fn non_positive_height_is_rejected() {
        assert!(matches!(
            frozen_coefficients(0.0, 0.0, 0.0, ModelParams::default()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn residual_gradient_matches_finite_differences() {
        let p = ModelParams { tau: 0.35 };
        let j = Jet2::new(1.1, 0.3, -0.45, 0.2, 0.1, -0.3);
        let g = residual_gradient(&j, p);
        let h = 1e-6;
        let bump = |q: usize, s: f64| {
            let mut k = j;
            match q {
                0 => k.f += s,
                1 => k.fx += s,
                _ => k.ft += s,
            }
            residual_eq1(&k, p)
        };
        for q in 0..3 {
            let fd = (bump(q, h) - bump(q, -h)) / (2.0 * h);
            assert!((fd - g[q]).abs() < 1e-7, "{q}: {fd} vs {}", g[q]);
        }
    }
}
