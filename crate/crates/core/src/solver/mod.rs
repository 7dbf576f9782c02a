//! Dirichlet problem for `H = 1/2` horizontal graphs over an annulus.
//!
//! The quasilinear equation is frozen at the current iterate `f`, giving the linear
//! elliptic operator `L_f`; `T f` is the solution of `L_f w = 0` with the barrier
//! `h` as boundary data, and a solution is a fixed point of `T`.

mod assembly;
mod coefficients;
mod grid;
mod iteration;
mod norm;
mod sweep;

pub use assembly::{apply_t, assemble_linear_system, assemble_with_boundary, LinearSystem, SparseMatrix};
pub use coefficients::{frozen_coefficients, residual_gradient, FrozenCoefficients};
pub use grid::{
    cartesian_stencil, fd_weights, node_jet, polar_stencil, radial_stencil, theta_stencil, AnnulusField, ChainRule,
    PolarGrid, MIN_NR, MIN_NTHETA,
};
pub use iteration::{
    fixed_point_solve, fixed_point_solve_from, nonlinear_residual, residual_field, IterationConfig, IterationMode, SolveReport,
};
pub use norm::{
    admissibility_check, scale_blocks, weighted_norm, weighted_norm_on, weighted_norm_parts, ScaleBlock,
    WeightedNormParts,
};
pub use sweep::{is_monotone_decreasing, r2_sweep, GridPolicy, SweepRow};

use crate::error::{Error, Result};
use crate::geometry::ModelParams;

/// Which barrier: `+` gives boundary data `1 + ε` on the inner circle, `−` gives `1 − ε`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusSpec {
    pub r1: f64,
    pub r2: f64,
    pub epsilon: f64,
    pub sign: Sign,
    pub params: ModelParams,
}

impl AnnulusSpec {
    pub fn new(r1: f64, r2: f64, epsilon: f64, sign: Sign, params: ModelParams) -> Result<Self> {
        let spec = Self { r1, r2, epsilon, sign, params };
        spec.validate()?;
        Ok(spec)
    }

    /// `0 < R1`, `R2 ≥ 2 R1` and `0 ≤ ε < 1`. `ε = 0` is accepted as the trivial
    /// problem whose solution is the constant 1.
    pub fn validate(&self) -> Result<()> {
        if !(self.r1 > 0.0 && self.r1.is_finite()) {
            return Err(Error::Argument(format!("r1 must be positive, got {}", self.r1)));
        }
        if !(self.r2 >= 2.0 * self.r1 && self.r2.is_finite()) {
            return Err(Error::Argument(format!(
                "r2 must satisfy r2 >= 2 r1 (r1 = {}, r2 = {})",
                self.r1, self.r2
            )));
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(Error::Argument(format!("eps must lie in [0, 1), got {}", self.epsilon)));
        }
        if !self.params.tau.is_finite() {
            return Err(Error::Argument("tau must be finite".into()));
        }
        Ok(())
    }

    /// The constant `1 ± ε` approached on compact sets as `R2 → ∞`.
    pub fn inner_value(&self) -> f64 {
        1.0 + self.sign.value() * self.epsilon
    }

    /// Bounds `[1, 1 + ε]` or `[1 − ε, 1]` that every solution satisfies.
    pub fn bounds(&self) -> (f64, f64) {
        match self.sign {
            Sign::Plus => (1.0, 1.0 + self.epsilon),
            Sign::Minus => (1.0 - self.epsilon, 1.0),
        }
    }
}

/// `h±(r) = 1 ± ε log(R2/r) / log(R2/R1)`.
pub fn barrier_h(r: f64, spec: &AnnulusSpec) -> Result<f64> {
    let slack = 1e-12 * spec.r2;
    if !(r >= spec.r1 - slack && r <= spec.r2 + slack) {
        return Err(Error::Domain(format!("r = {r} outside [{}, {}]", spec.r1, spec.r2)));
    }
    let r = r.clamp(spec.r1, spec.r2);
    Ok(1.0 + spec.sign.value() * spec.epsilon * (spec.r2 / r).ln() / (spec.r2 / spec.r1).ln())
}

/// The barrier sampled on a grid.
pub fn barrier_field(grid: PolarGrid, spec: &AnnulusSpec) -> Result<AnnulusField> {
    let mut values = Vec::with_capacity(grid.len());
    for i in 0..grid.n_r() {
        let h = barrier_h(grid.radius(i), spec)?;
        values.extend(std::iter::repeat(h).take(grid.n_theta()));
    }
    Ok(AnnulusField { grid, values })
}
