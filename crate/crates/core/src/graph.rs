//! Horizontal graphs `y = f(x, t)`.
//!
//! Every pointwise formula works on a [`Jet2`], the value of `f` and its first and
//! second derivatives at one `(x, t)` point. The graph is parametrized by
//! `φ(x, t) = (x, f(x, t), t)`, with tangent vectors
//!
//! ```text
//! φx = λ(E1 + fx E2 − 2τE3),   φt = λ ft E2 + E3,   λ = 1/f
//! ```
//!
//! and normal `N ∝ −(fx + 2τλft)E1 + E2 − λft E3`. With this normal the
//! horocylinders `f = const` have mean curvature `+1/2`.
//!
//! The second fundamental form is computed from the connection table of
//! [`crate::geometry`]; the closed forms of the mean-curvature equation are
//! separate functions, so each route can be checked against the other.

use crate::error::{Error, Result};
use crate::geometry::{connection_frame, FrameCoeffs, ModelParams, Point3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub f: f64,
    pub fx: f64,
    pub ft: f64,
    pub fxx: f64,
    pub fxt: f64,
    pub ftt: f64,
}

impl Jet2 {
    pub const fn new(f: f64, fx: f64, ft: f64, fxx: f64, fxt: f64, ftt: f64) -> Self {
        Self { f, fx, ft, fxx, fxt, ftt }
    }

    /// Jet of the constant function `c`.
    pub const fn constant(c: f64) -> Self {
        Self::new(c, 0.0, 0.0, 0.0, 0.0, 0.0)
    }

    pub fn check(&self) -> Result<()> {
        if self.f > 0.0 && self.f.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain(format!("graph height must be positive, got f = {}", self.f)))
        }
    }
}

/// First (`g_ij`) and second (`b_ij`) fundamental forms in the `(x, t)` chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormCoefficients {
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
    pub b11: f64,
    pub b12: f64,
    pub b22: f64,
}

impl FormCoefficients {
    pub fn det(&self) -> f64 {
        self.g11 * self.g22 - self.g12 * self.g12
    }

    /// `2H = (b11 g22 + b22 g11 − 2 b12 g12) / det g`
    pub fn twice_mean_curvature(&self) -> f64 {
        (self.b11 * self.g22 + self.b22 * self.g11 - 2.0 * self.b12 * self.g12) / self.det()
    }
}

/// `W = sqrt(f² + ft² + (f fx + 2τ ft)²)`.
pub fn gradient_w(j: &Jet2, params: ModelParams) -> f64 {
    let a = j.f * j.fx + 2.0 * params.tau * j.ft;
    (j.f * j.f + j.ft * j.ft + a * a).sqrt()
}

/// The same `W` written with `λ = 1/f`: `sqrt(f² + ft² + f²(fx + 2τλft)²)`.
pub fn gradient_w_lambda_form(j: &Jet2, params: ModelParams) -> f64 {
    let lambda = 1.0 / j.f;
    let s = j.fx + 2.0 * params.tau * lambda * j.ft;
    (j.f * j.f + j.ft * j.ft + j.f * j.f * s * s).sqrt()
}

/// First fundamental form from `(f, fx, ft)`.
pub fn first_form(f: f64, fx: f64, ft: f64, params: ModelParams) -> (f64, f64, f64) {
    let lambda = 1.0 / f;
    let l2 = lambda * lambda;
    let g11 = l2 * (params.one_plus_4tau2() + fx * fx);
    let g12 = l2 * fx * ft - 2.0 * params.tau * lambda;
    let g22 = 1.0 + l2 * ft * ft;
    (g11, g12, g22)
}

/// Frame coefficients of `φx` and `φt`.
pub fn tangent_vectors(j: &Jet2, params: ModelParams) -> (FrameCoeffs, FrameCoeffs) {
    let lambda = 1.0 / j.f;
    (
        [lambda, lambda * j.fx, -2.0 * params.tau * lambda],
        [0.0, lambda * j.ft, 1.0],
    )
}

/// Unit normal in frame coefficients.
pub fn unit_normal(j: &Jet2, params: ModelParams) -> FrameCoeffs {
    let n = normal_unnormalized(j, params);
    let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    n.map(|c| c / norm)
}

fn normal_unnormalized(j: &Jet2, params: ModelParams) -> FrameCoeffs {
    let lambda = 1.0 / j.f;
    [-(j.fx + 2.0 * params.tau * lambda * j.ft), 1.0, -lambda * j.ft]
}

fn dot(a: &FrameCoeffs, b: &FrameCoeffs) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Which tangent vector of the parametrization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tangent {
    X,
    T,
}

/// `∇̄_{φ_dir} φ_field` in frame coefficients.
///
/// The frame coefficients `c` of `φ_field` vary along the surface through `λ = 1/f`
/// and the derivatives of `f`, so this is `∂_dir c_k E_k + c_k c'_m ∇̄_{E_m} E_k`
/// with `c'` the coefficients of `φ_dir`.
pub fn covariant_derivative(dir: Tangent, field: Tangent, j: &Jet2, params: ModelParams) -> Result<FrameCoeffs> {
    j.check()?;
    let tau = params.tau;
    let lambda = 1.0 / j.f;
    let l2 = lambda * lambda;
    let (cx, ct) = tangent_vectors(j, params);

    let derivative: FrameCoeffs = match (field, dir) {
        (Tangent::X, Tangent::X) => [-l2 * j.fx, -l2 * j.fx * j.fx + lambda * j.fxx, 2.0 * tau * l2 * j.fx],
        (Tangent::X, Tangent::T) => [-l2 * j.ft, -l2 * j.fx * j.ft + lambda * j.fxt, 2.0 * tau * l2 * j.ft],
        (Tangent::T, Tangent::X) => [0.0, -l2 * j.fx * j.ft + lambda * j.fxt, 0.0],
        (Tangent::T, Tangent::T) => [0.0, -l2 * j.ft * j.ft + lambda * j.ftt, 0.0],
    };
    let c_field = if field == Tangent::X { cx } else { ct };
    let c_dir = if dir == Tangent::X { cx } else { ct };

    let p = Point3::new(0.0, j.f, 0.0);
    let mut out = derivative;
    for m in 0..3 {
        if c_dir[m] == 0.0 {
            continue;
        }
        for k in 0..3 {
            if c_field[k] == 0.0 {
                continue;
            }
            let nabla = connection_frame(m + 1, k + 1, p, params)?;
            for q in 0..3 {
                out[q] += c_dir[m] * c_field[k] * nabla[q];
            }
        }
    }
    Ok(out)
}

pub fn fundamental_forms(j: &Jet2, params: ModelParams) -> Result<FormCoefficients> {
    j.check()?;
    let (g11, g12, g22) = first_form(j.f, j.fx, j.ft, params);
    let det = g11 * g22 - g12 * g12;
    if !(det > 0.0) || !det.is_finite() {
        return Err(Error::Degenerate(format!("det g = {det} at jet {j:?}")));
    }
    let n = unit_normal(j, params);
    let b11 = dot(&covariant_derivative(Tangent::X, Tangent::X, j, params)?, &n);
    let b12 = dot(&covariant_derivative(Tangent::T, Tangent::X, j, params)?, &n);
    let b22 = dot(&covariant_derivative(Tangent::T, Tangent::T, j, params)?, &n);
    Ok(FormCoefficients { g11, g12, g22, b11, b12, b22 })
}

/// `b21 = ⟨∇̄_{φx} φt, N⟩`; equals `b12` because the connection is torsion free.
pub fn second_form_b21(j: &Jet2, params: ModelParams) -> Result<f64> {
    let n = unit_normal(j, params);
    Ok(dot(&covariant_derivative(Tangent::X, Tangent::T, j, params)?, &n))
}

/// Closed-form second fundamental form taken against the non-unit normal
/// `−(fx + 2τλft)E1 + E2 − λftE3`. Dividing by its length `λW` gives the
/// `b_ij` of [`fundamental_forms`]; see [`second_form_report`].
pub fn second_form_closed(j: &Jet2, params: ModelParams) -> [f64; 3] {
    let tau = params.tau;
    let k = params.one_plus_4tau2();
    let l = 1.0 / j.f;
    let (l2, l3) = (l * l, l * l * l);
    let b11 = l * j.fxx + l2 * k * j.fx * j.fx + 2.0 * tau * l3 * k * j.fx * j.ft + l2 * k;
    let b12 = l * j.fxt - tau * l * j.fx * j.fx + 2.0 * tau * l3 * (0.5 + 2.0 * tau * tau) * j.ft * j.ft - tau * l;
    let b22 = l * j.ftt - 2.0 * tau * l * j.fx * j.ft - l2 * j.ft * j.ft * k;
    [b11, b12, b22]
}

/// Agreement between the connection-derived `b_ij` and the closed forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondFormReport {
    pub derived: [f64; 3],
    pub closed_rescaled: [f64; 3],
    pub max_abs_diff: f64,
}

pub fn second_form_report(j: &Jet2, params: ModelParams) -> Result<SecondFormReport> {
    let forms = fundamental_forms(j, params)?;
    let derived = [forms.b11, forms.b12, forms.b22];
    let n = normal_unnormalized(j, params);
    let len = dot(&n, &n).sqrt();
    let closed_rescaled = second_form_closed(j, params).map(|b| b / len);
    let max_abs_diff = (0..3)
        .map(|i| (derived[i] - closed_rescaled[i]).abs())
        .fold(0.0, f64::max);
    Ok(SecondFormReport { derived, closed_rescaled, max_abs_diff })
}

pub fn mean_curvature(j: &Jet2, params: ModelParams) -> Result<f64> {
    Ok(0.5 * fundamental_forms(j, params)?.twice_mean_curvature())
}

/// Second-order part `(f² + ft²)fxx − 2(fx ft − 2τf)fxt + ((1 + 4τ²) + fx²)ftt`.
pub fn second_order_part(j: &Jet2, params: ModelParams) -> f64 {
    let tau = params.tau;
    (j.f * j.f + j.ft * j.ft) * j.fxx - 2.0 * (j.fx * j.ft - 2.0 * tau * j.f) * j.fxt
        + (params.one_plus_4tau2() + j.fx * j.fx) * j.ftt
}

/// Lower-order part `f(1 + fx²) + 2τ fx ft`.
fn lower_order_part(j: &Jet2, params: ModelParams) -> f64 {
    j.f * (1.0 + j.fx * j.fx) + 2.0 * params.tau * j.fx * j.ft
}

/// `2Hλ²W³ − [second-order part + f(1 + fx²) + 2τ fx ft]`, with `λ = 1/f` and `W` in
/// its `λ` form. Zero iff the jet has mean curvature `h`.
pub fn residual_eq_h(j: &Jet2, h: f64, params: ModelParams) -> f64 {
    let lambda = 1.0 / j.f;
    let w = gradient_w_lambda_form(j, params);
    2.0 * h * lambda * lambda * w * w * w - (second_order_part(j, params) + lower_order_part(j, params))
}

/// Residual of the `H = 1/2` equation written as
/// `second-order part = −f(1 + fx²) − 2τ fx ft + W³/f²` (left minus right).
///
/// Equal to `−residual_eq_h(j, 1/2)`: the two displays put the
/// second-order part on opposite sides.
pub fn residual_eq1(j: &Jet2, params: ModelParams) -> f64 {
    let w = gradient_w(j, params);
    second_order_part(j, params) + lower_order_part(j, params) - w * w * w / (j.f * j.f)
}

/// Replace `fxx` so that the jet has mean curvature `h`.
pub fn solve_fxx(j: &Jet2, h: f64, params: ModelParams) -> Result<Jet2> {
    j.check()?;
    let coeff = j.f * j.f + j.ft * j.ft;
    let mut out = *j;
    out.fxx = 0.0;
    let r = residual_eq_h(&out, h, params);
    out.fxx = r / coeff;
    Ok(out)
}

/// `Δ_S f` and `Δ_S(1/f)` as given by the closed forms valid on `H = 1/2` jets:
///
/// ```text
/// Δ_S f     = (f²/W)(1 − f/W + (f fx² + 2τ ft fx)/W)
/// Δ_S (1/f) = (W − f)/(fW) + (ft² + 2τ(f fx ft + 2τ ft²))/W
/// ```
///
/// The second closed form does not agree with the Laplace–Beltrami operator (see
/// [`inverse_height_laplacian`] for the identity that does).
pub fn closed_form_laplacians(j: &Jet2, params: ModelParams) -> (f64, f64) {
    let tau = params.tau;
    let (f, fx, ft) = (j.f, j.fx, j.ft);
    let w = gradient_w(j, params);
    let lap_f = (f * f / w) * (1.0 - f / w + (f * fx * fx + 2.0 * tau * ft * fx) / w);
    let lap_inv = (w - f) / (f * w) + (ft * ft + 2.0 * tau * (f * fx * ft + 2.0 * tau * ft * ft)) / w;
    (lap_f, lap_inv)
}

/// `Δ_S f` for an arbitrary jet:
///
/// ```text
/// Δ_S f = (f²/W⁴) [ f² · second-order part + (a³ + f³fx) fx + (a fx ft − (1 + 4τ²) f ft) ft ],
/// a = f fx + 2τ ft
/// ```
pub fn height_laplacian(j: &Jet2, params: ModelParams) -> f64 {
    let (f, fx, ft) = (j.f, j.fx, j.ft);
    let a = f * fx + 2.0 * params.tau * ft;
    let w = gradient_w(j, params);
    let lower = (a * a * a + f * f * f * fx) * fx + (a * fx * ft - params.one_plus_4tau2() * f * ft) * ft;
    f * f / (w * w * w * w) * (f * f * second_order_part(j, params) + lower)
}

/// The general display with the grouping `(a fx − (1 + 4τ²) f ft) ft`, i.e. without
/// the `ft` factor on `a fx`. Kept for the discrepancy report; it is not
/// Laplace–Beltrami.
pub fn height_laplacian_printed(j: &Jet2, params: ModelParams) -> f64 {
    let (f, fx, ft) = (j.f, j.fx, j.ft);
    let a = f * fx + 2.0 * params.tau * ft;
    let w = gradient_w(j, params);
    let lower = (a * a * a + f * f * f * fx) * fx + (a * fx - params.one_plus_4tau2() * f * ft) * ft;
    f * f / (w * w * w * w) * (f * f * second_order_part(j, params) + lower)
}

/// `Δ_S(1/f) = −Δ_S f / f² + 2|∇_S f|²/f³`, with `|∇_S f|² = f²(W² − f²)/W²`.
pub fn inverse_height_laplacian(j: &Jet2, params: ModelParams) -> f64 {
    let f = j.f;
    let w = gradient_w(j, params);
    -height_laplacian(j, params) / (f * f) + 2.0 * (w * w - f * f) / (f * w * w)
}

/// Scalar samples on a rectangular `(x, t)` grid; `values[ix * nt + it]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceField {
    pub x0: f64,
    pub t0: f64,
    pub hx: f64,
    pub ht: f64,
    pub nx: usize,
    pub nt: usize,
    pub values: Vec<f64>,
}

impl SurfaceField {
    pub fn from_fn<F: Fn(f64, f64) -> f64>(x0: f64, t0: f64, hx: f64, ht: f64, nx: usize, nt: usize, f: F) -> Result<Self> {
        if !(hx > 0.0 && ht > 0.0) {
            return Err(Error::Argument(format!("grid spacings must be positive, got ({hx}, {ht})")));
        }
        if nx < 3 || nt < 3 {
            return Err(Error::Argument(format!("grid needs at least 3x3 nodes, got {nx}x{nt}")));
        }
        let mut values = Vec::with_capacity(nx * nt);
        for ix in 0..nx {
            for it in 0..nt {
                values.push(f(x0 + ix as f64 * hx, t0 + it as f64 * ht));
            }
        }
        Ok(Self { x0, t0, hx, ht, nx, nt, values })
    }

    #[inline]
    pub fn get(&self, ix: usize, it: usize) -> f64 {
        self.values[ix * self.nt + it]
    }

    pub fn x(&self, ix: usize) -> f64 {
        self.x0 + ix as f64 * self.hx
    }

    pub fn t(&self, it: usize) -> f64 {
        self.t0 + it as f64 * self.ht
    }

    fn same_grid(&self, other: &SurfaceField) -> bool {
        self.nx == other.nx
            && self.nt == other.nt
            && self.x0 == other.x0
            && self.t0 == other.t0
            && self.hx == other.hx
            && self.ht == other.ht
    }
}

/// `Δ_S φ = (1/√g) Σ ∂_i(√g g^{ij} ∂_j φ)` on the graph of `surface`, in divergence
/// form: fluxes `√g g^{ij} ∂_j φ` live on the staggered half-nodes and are
/// differenced back to the nodes. Second order for smooth data.
///
/// Returns the interior nodes only, as a field starting at `(x0 + hx, t0 + ht)`.
pub fn laplace_beltrami(surface: &SurfaceField, phi: &SurfaceField, params: ModelParams) -> Result<SurfaceField> {
    if !surface.same_grid(phi) {
        return Err(Error::Argument("surface and phi are sampled on different grids".into()));
    }
    if let Some(v) = surface.values.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::Domain(format!("surface height must be positive, found {v}")));
    }
    let (nx, nt, hx, ht) = (surface.nx, surface.nt, surface.hx, surface.ht);
    let s = |i: usize, k: usize| surface.get(i, k);
    let p = |i: usize, k: usize| phi.get(i, k);

    // √g and the contravariant metric from (f, fx, ft)
    let metric = |f: f64, fx: f64, ft: f64| -> Result<(f64, f64, f64, f64)> {
        let (g11, g12, g22) = first_form(f, fx, ft, params);
        let det = g11 * g22 - g12 * g12;
        if !(det > 0.0) {
            return Err(Error::Degenerate(format!("det g = {det}")));
        }
        Ok((det.sqrt(), g22 / det, -g12 / det, g11 / det))
    };

    // flux through the x-face between (i, k) and (i + 1, k)
    let flux_x = |i: usize, k: usize| -> Result<f64> {
        let f = 0.5 * (s(i, k) + s(i + 1, k));
        let fx = (s(i + 1, k) - s(i, k)) / hx;
        let ft = (s(i, k + 1) - s(i, k - 1) + s(i + 1, k + 1) - s(i + 1, k - 1)) / (4.0 * ht);
        let px = (p(i + 1, k) - p(i, k)) / hx;
        let pt = (p(i, k + 1) - p(i, k - 1) + p(i + 1, k + 1) - p(i + 1, k - 1)) / (4.0 * ht);
        let (sg, g11, g12, _) = metric(f, fx, ft)?;
        Ok(sg * (g11 * px + g12 * pt))
    };
    // flux through the t-face between (i, k) and (i, k + 1)
    let flux_t = |i: usize, k: usize| -> Result<f64> {
        let f = 0.5 * (s(i, k) + s(i, k + 1));
        let ft = (s(i, k + 1) - s(i, k)) / ht;
        let fx = (s(i + 1, k) - s(i - 1, k) + s(i + 1, k + 1) - s(i - 1, k + 1)) / (4.0 * hx);
        let pt = (p(i, k + 1) - p(i, k)) / ht;
        let px = (p(i + 1, k) - p(i - 1, k) + p(i + 1, k + 1) - p(i - 1, k + 1)) / (4.0 * hx);
        let (sg, _, g12, g22) = metric(f, fx, ft)?;
        Ok(sg * (g12 * px + g22 * pt))
    };

    let mut values = Vec::with_capacity((nx - 2) * (nt - 2));
    for i in 1..nx - 1 {
        for k in 1..nt - 1 {
            let fx = (s(i + 1, k) - s(i - 1, k)) / (2.0 * hx);
            let ft = (s(i, k + 1) - s(i, k - 1)) / (2.0 * ht);
            let (sg, _, _, _) = metric(s(i, k), fx, ft)?;
            let div = (flux_x(i, k)? - flux_x(i - 1, k)?) / hx + (flux_t(i, k)? - flux_t(i, k - 1)?) / ht;
            values.push(div / sg);
        }
    }
    Ok(SurfaceField {
        x0: surface.x0 + hx,
        t0: surface.t0 + ht,
        hx,
        ht,
        nx: nx - 2,
        nt: nt - 2,
        values,
    })
}
