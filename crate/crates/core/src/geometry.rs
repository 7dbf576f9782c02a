//! The half-space model of PSL~2(R, tau).
//!
//! Points are `(x, y, t)` with `y > 0` and the metric is
//!
//! ```text
//! g = λ²(dx² + dy²) + (−2τλ dx + dt)²,   λ = 1/y
//! ```
//!
//! The orthonormal frame is `E1 = ∂x/λ + 2τ∂t`, `E2 = ∂y/λ`, `E3 = ∂t`; `E3` is the
//! unit Killing field tangent to the fibers. Connection and bracket tables are
//! returned as coefficient triples in that frame.
//!
//! Orientation convention: normals and curvatures are signed so that the horizontal
//! line `y = c` of the base has geodesic curvature `+1` with respect to the normal
//! pointing towards increasing `y`, and the horocylinders `y = c` have mean curvature
//! `+1/2` with respect to `E2`.

use crate::error::{Error, Result};

/// Frame coefficients `(c1, c2, c3)` of a vector `c1 E1 + c2 E2 + c3 E3`.
pub type FrameCoeffs = [f64; 3];

/// Bundle curvature of the fibration. `tau = 0` is the product H² × R.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub tau: f64,
}

impl ModelParams {
    pub fn new(tau: f64) -> Result<Self> {
        if !tau.is_finite() {
            return Err(Error::Argument(format!("tau must be finite, got {tau}")));
        }
        Ok(Self { tau })
    }

    /// `1 + 4τ²`, which shows up in nearly every coefficient.
    #[inline]
    pub fn one_plus_4tau2(&self) -> f64 {
        1.0 + 4.0 * self.tau * self.tau
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self { tau: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, t: f64) -> Self {
        Self { x, y, t }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.t]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    fn check(&self) -> Result<()> {
        if self.y > 0.0 && self.y.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "point must satisfy y > 0, got y = {}",
                self.y
            )))
        }
    }
}

/// Symmetric bilinear form in the coordinate basis `(∂x, ∂y, ∂t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMatrix3 {
    pub xx: f64,
    pub xy: f64,
    pub xt: f64,
    pub yy: f64,
    pub yt: f64,
    pub tt: f64,
}

impl SymMatrix3 {
    pub fn to_array(&self) -> [[f64; 3]; 3] {
        [
            [self.xx, self.xy, self.xt],
            [self.xy, self.yy, self.yt],
            [self.xt, self.yt, self.tt],
        ]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.to_array()[i][j]
    }

    pub fn apply(&self, u: &[f64; 3], v: &[f64; 3]) -> f64 {
        let m = self.to_array();
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += u[i] * m[i][j] * v[j];
            }
        }
        s
    }

    pub fn max_abs_diff(&self, other: &SymMatrix3) -> f64 {
        let (a, b) = (self.to_array(), other.to_array());
        let mut m: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                m = m.max((a[i][j] - b[i][j]).abs());
            }
        }
        m
    }
}

/// `E1, E2, E3` in coordinate components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameVectors {
    pub e: [[f64; 3]; 3],
}

impl FrameVectors {
    /// Gram matrix `g(E_i, E_j)` under the given metric.
    pub fn gram(&self, g: &SymMatrix3) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = g.apply(&self.e[i], &self.e[j]);
            }
        }
        out
    }

    /// Coordinate components of `Σ c_k E_k`.
    pub fn combine(&self, c: &FrameCoeffs) -> [f64; 3] {
        let mut v = [0.0; 3];
        for k in 0..3 {
            for m in 0..3 {
                v[m] += c[k] * self.e[k][m];
            }
        }
        v
    }
}

pub fn metric_at(p: Point3, params: ModelParams) -> Result<SymMatrix3> {
    p.check()?;
    let lambda = 1.0 / p.y;
    let tau = params.tau;
    Ok(SymMatrix3 {
        xx: lambda * lambda * params.one_plus_4tau2(),
        xy: 0.0,
        xt: -2.0 * tau * lambda,
        yy: lambda * lambda,
        yt: 0.0,
        tt: 1.0,
    })
}

pub fn frame_at(p: Point3, params: ModelParams) -> Result<FrameVectors> {
    p.check()?;
    let inv_lambda = p.y;
    Ok(FrameVectors {
        e: [
            [inv_lambda, 0.0, 2.0 * params.tau],
            [0.0, inv_lambda, 0.0],
            [0.0, 0.0, 1.0],
        ],
    })
}

fn frame_index(i: usize) -> Result<usize> {
    if (1..=3).contains(&i) {
        Ok(i - 1)
    } else {
        Err(Error::Argument(format!("frame index must be 1, 2 or 3, got {i}")))
    }
}

/// Frame coefficients of `∇̄_{E_i} E_j` (indices 1-based).
///
/// General table for a conformal factor `λ(x, y)`:
///
/// ```text
/// ∇E1 E1 = −(λy/λ²) E2          ∇E1 E2 = (λy/λ²) E1 + τE3    ∇E1 E3 = −τE2
/// ∇E2 E1 = (λx/λ²) E2 − τE3     ∇E2 E2 = −(λx/λ²) E1         ∇E2 E3 = τE1
/// ∇E3 E1 = −τE2                 ∇E3 E2 = τE1                 ∇E3 E3 = 0
/// ```
///
/// With `λ = 1/y` we have `λx = 0` and `λy/λ² = −1` at every point.
pub fn connection_frame(i: usize, j: usize, p: Point3, params: ModelParams) -> Result<FrameCoeffs> {
    let (i, j) = (frame_index(i)?, frame_index(j)?);
    p.check()?;
    let tau = params.tau;
    let ly = -1.0; // λy/λ²
    let lx = 0.0; // λx/λ²
    Ok(match (i, j) {
        (0, 0) => [0.0, -ly, 0.0],
        (0, 1) => [ly, 0.0, tau],
        (0, 2) => [0.0, -tau, 0.0],
        (1, 0) => [0.0, lx, -tau],
        (1, 1) => [-lx, 0.0, 0.0],
        (1, 2) => [tau, 0.0, 0.0],
        (2, 0) => [0.0, -tau, 0.0],
        (2, 1) => [tau, 0.0, 0.0],
        (2, 2) => [0.0, 0.0, 0.0],
        _ => unreachable!(),
    })
}

/// Frame coefficients of `[E_i, E_j]` (indices 1-based).
///
/// `[E1, E2] = (λy/λ²)E1 − (λx/λ²)E2 + 2τE3`, the other brackets vanish.
pub fn lie_bracket_frame(i: usize, j: usize, p: Point3, params: ModelParams) -> Result<FrameCoeffs> {
    let (i, j) = (frame_index(i)?, frame_index(j)?);
    p.check()?;
    let e12 = [-1.0, 0.0, 2.0 * params.tau];
    Ok(match (i, j) {
        (0, 1) => e12,
        (1, 0) => e12.map(|c| -c),
        _ => [0.0; 3],
    })
}

/// Frame coefficients of a coordinate vector at `p`. The frame is orthonormal, so
/// the coefficients are the inner products with `E_k`.
pub fn to_frame(v: &[f64; 3], p: Point3, params: ModelParams) -> Result<FrameCoeffs> {
    let g = metric_at(p, params)?;
    let e = frame_at(p, params)?;
    Ok([g.apply(v, &e.e[0]), g.apply(v, &e.e[1]), g.apply(v, &e.e[2])])
}

/// Central-difference step used by the derivative-based checks: `h` scaled by the
/// magnitude of the point, never below `h` itself.
pub fn scaled_step(p: Point3, h: f64) -> f64 {
    let m = p.x.abs().max(p.y.abs()).max(p.t.abs()).max(1.0);
    h * m
}

/// `[E_i, E_j]` computed from the coordinate components of the frame fields by
/// central differences, `[X, Y]^k = X^m ∂_m Y^k − Y^m ∂_m X^k`, returned in frame
/// coefficients.
pub fn lie_bracket_fd(i: usize, j: usize, p: Point3, params: ModelParams, h: f64) -> Result<FrameCoeffs> {
    let (fi, fj) = (frame_index(i)?, frame_index(j)?);
    p.check()?;
    let step = scaled_step(p, h);
    if p.y - step <= 0.0 {
        return Err(Error::Domain(format!("step {step} leaves the half-space at y = {}", p.y)));
    }
    // ∂_m of each frame field, by central differences in coordinate m.
    let mut grad = [[[0.0; 3]; 3]; 3]; // grad[field][m][k]
    for m in 0..3 {
        let mut plus = p.as_array();
        let mut minus = p.as_array();
        plus[m] += step;
        minus[m] -= step;
        let fp = frame_at(Point3::from_array(plus), params)?;
        let fm = frame_at(Point3::from_array(minus), params)?;
        for field in 0..3 {
            for k in 0..3 {
                grad[field][m][k] = (fp.e[field][k] - fm.e[field][k]) / (2.0 * step);
            }
        }
    }
    let e = frame_at(p, params)?;
    let mut bracket = [0.0; 3];
    for k in 0..3 {
        for m in 0..3 {
            bracket[k] += e.e[fi][m] * grad[fj][m][k] - e.e[fj][m] * grad[fi][m][k];
        }
    }
    to_frame(&bracket, p, params)
}

/// Finite-difference Lie derivative of the metric along `∂t`. Since `∂t` has
/// constant components this is `∂t g_ij`; it must vanish for a Killing field.
pub fn killing_defect_fd(p: Point3, params: ModelParams, h: f64) -> Result<f64> {
    let step = scaled_step(p, h);
    let gp = metric_at(Point3::new(p.x, p.y, p.t + step), params)?;
    let gm = metric_at(Point3::new(p.x, p.y, p.t - step), params)?;
    Ok(gp.max_abs_diff(&gm) / (2.0 * step))
}

/// Metric of the hyperbolic half-plane `(dx² + dy²)/y²` as a conformal factor.
fn half_plane_conformal(p: [f64; 2]) -> f64 {
    1.0 / (p[1] * p[1])
}

/// Geodesic curvature in the hyperbolic half-plane of a parametrized curve at `s`.
///
/// Everything is finite differences: velocity and acceleration of the curve, and
/// the Christoffel symbols of the conformal metric `ρ δ_ij` from `∂ρ`. The sign is
/// taken with respect to the normal obtained by rotating the tangent by +90° in the
/// `(x, y)` plane, which for a curve moving in `+x` points towards increasing `y`.
pub fn geodesic_curvature_fd<C>(curve: C, s: f64, h: f64) -> Result<f64>
where
    C: Fn(f64) -> [f64; 2],
{
    let p = curve(s);
    if p[1] <= 0.0 {
        return Err(Error::Domain(format!("curve point has y = {} <= 0", p[1])));
    }
    let (pp, pm) = (curve(s + h), curve(s - h));
    let vel = [(pp[0] - pm[0]) / (2.0 * h), (pp[1] - pm[1]) / (2.0 * h)];
    let acc = [
        (pp[0] - 2.0 * p[0] + pm[0]) / (h * h),
        (pp[1] - 2.0 * p[1] + pm[1]) / (h * h),
    ];

    let rho = half_plane_conformal(p);
    let hp = h * p[1].abs().max(1.0) * 1e-1;
    let drho = [
        (half_plane_conformal([p[0] + hp, p[1]]) - half_plane_conformal([p[0] - hp, p[1]])) / (2.0 * hp),
        (half_plane_conformal([p[0], p[1] + hp]) - half_plane_conformal([p[0], p[1] - hp])) / (2.0 * hp),
    ];
    // Γ^k_ij = (δ_ki ∂_j ρ + δ_kj ∂_i ρ − δ_ij ∂_k ρ) / (2ρ)
    let mut cov = acc;
    for k in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                let dki = if k == i { drho[j] } else { 0.0 };
                let dkj = if k == j { drho[i] } else { 0.0 };
                let dij = if i == j { drho[k] } else { 0.0 };
                cov[k] += (dki + dkj - dij) / (2.0 * rho) * vel[i] * vel[j];
            }
        }
    }
    let speed2 = rho * (vel[0] * vel[0] + vel[1] * vel[1]);
    if speed2 <= 0.0 {
        return Err(Error::Degenerate("curve has zero velocity".into()));
    }
    // unit normal: rotate the unit tangent by +90°
    let inv_speed = 1.0 / speed2.sqrt();
    let normal = [-vel[1] * inv_speed, vel[0] * inv_speed];
    let acc_normal = rho * (cov[0] * normal[0] + cov[1] * normal[1]);
    Ok(acc_normal / speed2)
}

/// Geodesic curvature of the horocycle `y = c` of the base. Always 1, so the
/// vertical cylinder over it has mean curvature 1/2.
pub fn base_horocycle_curvature(c: f64) -> Result<f64> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!("horocycle height must be positive, got {c}")));
    }
    geodesic_curvature_fd(|s| [s, c], 0.0, 1e-4 * c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn metric_examples() {
        let g = metric_at(Point3::new(0.0, 1.0, 0.0), ModelParams { tau: 0.0 }).unwrap();
        assert_eq!(g.to_array(), [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

        let g = metric_at(Point3::new(0.0, 1.0, 0.0), ModelParams { tau: 0.5 }).unwrap();
        assert_eq!(g.to_array(), [[2.0, 0.0, -1.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 1.0]]);

        let g = metric_at(Point3::new(3.0, 2.0, -5.0), ModelParams { tau: 0.0 }).unwrap();
        assert_eq!(g.to_array(), [[0.25, 0.0, 0.0], [0.0, 0.25, 0.0], [0.0, 0.0, 1.0]]);
    }

    #[test]
    fn non_positive_y_is_a_domain_error() {
        for y in [0.0, -1.0, f64::NAN] {
            let p = Point3::new(0.0, y, 0.0);
            assert!(matches!(metric_at(p, ModelParams::default()), Err(Error::Domain(_))));
            assert!(matches!(frame_at(p, ModelParams::default()), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn frame_examples() {
        for tau in [-1.3, 0.0, 0.7] {
            let e = frame_at(Point3::new(0.0, 1.0, 0.0), ModelParams { tau }).unwrap();
            assert_eq!(e.e, [[1.0, 0.0, 2.0 * tau], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        }
        let e = frame_at(Point3::new(0.0, 2.0, 0.0), ModelParams { tau: 1.0 }).unwrap();
        assert_eq!(e.e, [[2.0, 0.0, 2.0], [0.0, 2.0, 0.0], [0.0, 0.0, 1.0]]);
    }

    #[test]
    fn frame_is_orthonormal() {
        let params = ModelParams { tau: 0.9 };
        let p = Point3::new(-2.0, 0.3, 4.0);
        let gram = frame_at(p, params).unwrap().gram(&metric_at(p, params).unwrap());
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!(close(gram[i][j], expect, 1e-12), "{i}{j}: {}", gram[i][j]);
            }
        }
    }

    #[test]
    fn connection_examples() {
        let p = Point3::new(0.3, 1.7, -2.0);
        assert_eq!(connection_frame(3, 3, p, ModelParams { tau: 0.4 }).unwrap(), [0.0; 3]);
        assert_eq!(
            connection_frame(1, 3, p, ModelParams { tau: 0.7 }).unwrap(),
            [0.0, -0.7, 0.0]
        );
        for tau in [-2.0, 0.0, 1.1] {
            assert_eq!(connection_frame(1, 1, p, ModelParams { tau }).unwrap(), [0.0, 1.0, 0.0]);
        }
        assert!(matches!(
            connection_frame(0, 1, p, ModelParams::default()),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            connection_frame(1, 4, p, ModelParams::default()),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn bracket_examples() {
        let p = Point3::new(1.0, 0.5, 0.0);
        let params = ModelParams { tau: 1.0 };
        assert_eq!(lie_bracket_frame(1, 3, p, params).unwrap(), [0.0; 3]);
        assert_eq!(lie_bracket_frame(1, 2, p, params).unwrap(), [-1.0, 0.0, 2.0]);
        assert_eq!(lie_bracket_frame(2, 1, p, params).unwrap(), [1.0, -0.0, -2.0]);
        assert!(lie_bracket_frame(2, 7, p, params).is_err());
    }

    #[test]
    fn bracket_matches_finite_differences() {
        let params = ModelParams { tau: -0.6 };
        let p = Point3::new(0.4, 2.5, 1.0);
        for i in 1..=3 {
            for j in 1..=3 {
                let exact = lie_bracket_frame(i, j, p, params).unwrap();
                let fd = lie_bracket_fd(i, j, p, params, 1e-4).unwrap();
                for k in 0..3 {
                    assert!(close(exact[k], fd[k], 1e-6), "[E{i},E{j}]_{k}: {} vs {}", exact[k], fd[k]);
                }
            }
        }
    }

    #[test]
    fn horocycle_has_unit_geodesic_curvature() {
        for c in [1.0, 5.0, 0.2] {
            let k = base_horocycle_curvature(c).unwrap();
            assert!(close(k, 1.0, 1e-6), "c = {c}: {k}");
        }
        assert!(matches!(base_horocycle_curvature(0.0), Err(Error::Domain(_))));
        assert!(matches!(base_horocycle_curvature(-3.0), Err(Error::Domain(_))));
    }

    #[test]
    fn vertical_geodesics_and_semicircles_have_zero_curvature() {
        let k = geodesic_curvature_fd(|s| [0.0, s.exp()], 0.3, 1e-4).unwrap();
        assert!(k.abs() < 1e-6, "{k}");
        let k = geodesic_curvature_fd(|s| [2.0 * s.cos(), 2.0 * s.sin()], 1.0, 1e-4).unwrap();
        assert!(k.abs() < 1e-6, "{k}");
    }

    #[test]
    fn euclidean_circles_have_known_curvature() {
        // A Euclidean circle of radius ρ centred at height y0 > ρ has geodesic
        // curvature y0/ρ; y0 = ρ is the tangent horocycle with curvature 1.
        let (y0, rho) = (3.0_f64, 1.0_f64);
        let k = geodesic_curvature_fd(|s| [rho * s.cos(), y0 + rho * s.sin()], 0.7, 1e-4).unwrap();
        assert!(close(k, y0 / rho, 1e-6), "{k}");
    }
}
