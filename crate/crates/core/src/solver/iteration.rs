use super::assembly::{apply_t, SparseMatrix};
use super::coefficients::{frozen_coefficients, residual_gradient};
use super::grid::{cartesian_stencil, node_jet, AnnulusField, PolarGrid};
use super::norm::admissibility_check;
use super::{barrier_field, AnnulusSpec};
use crate::error::{Error, Result};
use crate::geometry::ModelParams;
use crate::graph::residual_eq1;

/// Heights below this abort the iteration: the equation degenerates at `f = 0`.
pub const MIN_HEIGHT: f64 = 1e-8;
/// Slack on the `[1, 1 + ε]` / `[1 − ε, 1]` bounds in the report.
pub const BOUNDS_SLACK: f64 = 1e-6;

const STAGNATION_RATIO: f64 = 0.99;
const STAGNATION_WINDOW: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IterationMode {
    Picard,
    Newton,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationConfig {
    pub max_iters: usize,
    /// Sup-norm of the update below which the iteration stops.
    pub tol: f64,
    /// `f ← (1 − θ) f + θ T f`, `θ ∈ (0, 1]`.
    pub damping: f64,
    /// Switch to Newton on the discrete residual when Picard stagnates.
    pub newton_fallback: bool,
    /// Hölder exponent of the weighted-norm diagnostic.
    pub alpha: f64,
}

impl Default for IterationConfig {
    fn default() -> Self {
        Self { max_iters: 200, tol: 1e-10, damping: 1.0, newton_fallback: true, alpha: 0.5 }
    }
}

impl IterationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::Argument("max_iters must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Argument(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Argument(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Argument(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: AnnulusField,
    pub iterations: usize,
    /// Sup-norm of `f_{k+1} − f_k`, one entry per iteration.
    pub update_norms: Vec<f64>,
    pub converged: bool,
    /// Iterations taken in Newton mode (0 when Picard converged on its own).
    pub newton_iterations: usize,
    /// Pointwise residual of the `H = 1/2` equation from fourth-order jets.
    pub residual: AnnulusField,
    /// Sup of `residual` over the interior rings.
    pub nonlinear_residual_maxnorm: f64,
    pub bounds_ok: bool,
    /// `|f − h|*` at the configured Hölder exponent.
    pub weighted_norm_of_u: f64,
    pub admissible: bool,
}

/// Residual of the `H = 1/2` equation at every node, with jets from fourth-order
/// differences (shifted stencils on the boundary rings).
///
/// The scheme itself is second order and its jets make the residual vanish at a
/// fixed point, so the wider stencils are what exposes the truncation error.
pub fn residual_field(f: &AnnulusField, params: ModelParams) -> AnnulusField {
    let g = f.grid;
    let mut values = Vec::with_capacity(g.len());
    for i in 0..g.n_r() {
        for j in 0..g.n_theta() {
            values.push(residual_eq1(&node_jet(f, i, j, 4), params));
        }
    }
    AnnulusField { grid: g, values }
}

/// Discrete residual of the scheme, `r² · residual_eq1` on second-order jets, at the
/// interior unknowns. Zero exactly at a fixed point of `T`.
pub fn nonlinear_residual(f: &AnnulusField, params: ModelParams) -> Vec<f64> {
    let g = f.grid;
    let mut out = Vec::with_capacity((g.n_r() - 2) * g.n_theta());
    for i in 1..g.n_r() - 1 {
        let r2 = g.radius(i).powi(2);
        for j in 0..g.n_theta() {
            out.push(r2 * residual_eq1(&node_jet(f, i, j, 2), params));
        }
    }
    out
}

fn newton_step(f: &AnnulusField, params: ModelParams) -> Result<Vec<f64>> {
    let g = f.grid;
    let n_th = g.n_theta();
    let mut rows = Vec::with_capacity((g.n_r() - 2) * n_th);
    let mut rhs = Vec::with_capacity(rows.capacity());
    for i in 1..g.n_r() - 1 {
        let r2 = g.radius(i).powi(2);
        for j in 0..n_th {
            let jet = node_jet(f, i, j, 2);
            let c = frozen_coefficients(jet.f, jet.fx, jet.ft, params)?;
            let [d_f, d_fx, d_ft] = residual_gradient(&jet, params);
            let me = g.index(i, j);
            let mut row = Vec::with_capacity(9);
            for (k, w) in cartesian_stencil(&g, i, j, 2) {
                if g.is_boundary(k / n_th) {
                    continue;
                }
                let mut v = c.a * w[2] + 2.0 * c.b * w[3] + c.c * w[4] + d_fx * w[0] + d_ft * w[1];
                if k == me {
                    v += d_f;
                }
                row.push((k - n_th, r2 * v));
            }
            rows.push(row);
            rhs.push(-r2 * residual_eq1(&jet, params));
        }
    }
    SparseMatrix::from_rows(rows).solve(&rhs)
}

fn check_heights(f: &AnnulusField) -> Result<()> {
    let m = f.min();
    if !(m >= MIN_HEIGHT) {
        return Err(Error::Domain(format!("iterate dropped to f = {m} (below {MIN_HEIGHT:e})")));
    }
    Ok(())
}

fn stagnating(norms: &[f64]) -> bool {
    if norms.len() <= STAGNATION_WINDOW {
        return false;
    }
    norms[norms.len() - STAGNATION_WINDOW - 1..]
        .windows(2)
        .all(|w| w[1] > STAGNATION_RATIO * w[0])
}

/// Iterate `f_{k+1} = (1 − θ) f_k + θ T f_k` from the barrier.
pub fn fixed_point_solve(spec: &AnnulusSpec, grid: PolarGrid, config: &IterationConfig) -> Result<SolveReport> {
    spec.validate()?;
    let start = barrier_field(grid, spec)?;
    fixed_point_solve_from(spec, start, config)
}

/// Same as [`fixed_point_solve`] starting from a given field.
pub fn fixed_point_solve_from(spec: &AnnulusSpec, start: AnnulusField, config: &IterationConfig) -> Result<SolveReport> {
    spec.validate()?;
    config.validate()?;
    let grid = start.grid;

    if spec.epsilon == 0.0 {
        let solution = AnnulusField::constant(grid, 1.0);
        return finish(spec, config, solution, 1, vec![0.0], true, 0);
    }

    let mut f = start;
    check_heights(&f)?;
    let mut norms = Vec::new();
    let mut mode = IterationMode::Picard;
    let mut newton_iterations = 0;
    let mut converged = false;

    while norms.len() < config.max_iters {
        let update = match mode {
            IterationMode::Picard => {
                let w = apply_t(&f, spec)?;
                let theta = config.damping;
                let next = f.zip_with(&w, |a, b| (1.0 - theta) * a + theta * b);
                let du = next.sup_diff(&f);
                f = next;
                du
            }
            IterationMode::Newton => {
                let delta = newton_step(&f, spec.params)?;
                let n_th = grid.n_theta();
                let theta = config.damping;
                let mut du: f64 = 0.0;
                for (k, d) in delta.iter().enumerate() {
                    f.values[k + n_th] += theta * d;
                    du = du.max((theta * d).abs());
                }
                newton_iterations += 1;
                du
            }
        };
        check_heights(&f)?;
        norms.push(update);
        if !update.is_finite() {
            break;
        }
        if update < config.tol {
            converged = true;
            break;
        }
        if mode == IterationMode::Picard && config.newton_fallback && stagnating(&norms) {
            mode = IterationMode::Newton;
        }
    }
    let iterations = norms.len();
    finish(spec, config, f, iterations, norms, converged, newton_iterations)
}

fn finish(
    spec: &AnnulusSpec,
    config: &IterationConfig,
    solution: AnnulusField,
    iterations: usize,
    update_norms: Vec<f64>,
    converged: bool,
    newton_iterations: usize,
) -> Result<SolveReport> {
    let g = solution.grid;
    let residual = residual_field(&solution, spec.params);
    let n_th = g.n_theta();
    let interior = &residual.values[n_th..g.len() - n_th];
    let nonlinear_residual_maxnorm = interior.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let (lo, hi) = spec.bounds();
    let bounds_ok = solution.min() >= lo - BOUNDS_SLACK && solution.max() <= hi + BOUNDS_SLACK;
    let (admissible, weighted_norm_of_u) = admissibility_check(&solution, spec, config.alpha)?;
    Ok(SolveReport {
        solution,
        iterations,
        update_norms,
        converged,
        newton_iterations,
        residual,
        nonlinear_residual_maxnorm,
        bounds_ok,
        weighted_norm_of_u,
        admissible,
    })
}
