use rayon::prelude::*;

use super::grid::PolarGrid;
use super::iteration::{fixed_point_solve, IterationConfig};
use super::AnnulusSpec;
use crate::error::{Error, Result};

/// How the grid grows with `R2`: the radial node count keeps the spacing in
/// `ln r` fixed, the angular count is constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPolicy {
    /// Radial intervals per unit of `ln r`.
    pub intervals_per_log: f64,
    pub n_theta: usize,
    pub min_nr: usize,
}

impl Default for GridPolicy {
    /// 63 radial intervals over `ln 8`, 256 angular nodes: the 64×256 grid at `R2 = 8 R1`.
    fn default() -> Self {
        Self { intervals_per_log: 63.0 / 8f64.ln(), n_theta: 256, min_nr: 16 }
    }
}

impl GridPolicy {
    pub fn grid_for(&self, r1: f64, r2: f64) -> Result<PolarGrid> {
        let intervals = (self.intervals_per_log * (r2 / r1).ln()).round() as usize;
        PolarGrid::new(r1, r2, (intervals + 1).max(self.min_nr), self.n_theta)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub factor: f64,
    pub r2: f64,
    pub n_r: usize,
    /// `sup |f − (1 ± ε)|` over the nodes with `r ≤ 2 R1`.
    pub deviation: f64,
    /// `ε log 2 / log(R2/R1)`, the same quantity for the barrier.
    pub barrier_deviation: f64,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub weighted_norm_of_u: f64,
    pub admissible: bool,
    pub bounds_ok: bool,
    pub failure: Option<String>,
}

impl SweepRow {
    fn failed(factor: f64, r2: f64, n_r: usize, barrier_deviation: f64, why: String) -> Self {
        Self {
            factor,
            r2,
            n_r,
            deviation: f64::NAN,
            barrier_deviation,
            iterations: 0,
            residual: f64::NAN,
            converged: false,
            weighted_norm_of_u: f64::NAN,
            admissible: false,
            bounds_ok: false,
            failure: Some(why),
        }
    }
}

fn run_member(base: &AnnulusSpec, factor: f64, policy: &GridPolicy, config: &IterationConfig) -> SweepRow {
    let r2 = factor * base.r1;
    let barrier_deviation = base.epsilon * 2f64.ln() / factor.ln();
    let spec = AnnulusSpec { r2, ..*base };
    let grid = match policy.grid_for(base.r1, r2) {
        Ok(g) => g,
        Err(e) => return SweepRow::failed(factor, r2, 0, barrier_deviation, e.to_string()),
    };
    let report = match fixed_point_solve(&spec, grid, config) {
        Ok(r) => r,
        Err(e) => return SweepRow::failed(factor, r2, grid.n_r(), barrier_deviation, e.to_string()),
    };
    let target = spec.inner_value();
    let mut deviation: f64 = 0.0;
    for i in 0..grid.n_r() {
        if grid.radius(i) > 2.0 * base.r1 * (1.0 + 1e-12) {
            break;
        }
        for j in 0..grid.n_theta() {
            deviation = deviation.max((report.solution.get(i, j) - target).abs());
        }
    }
    SweepRow {
        factor,
        r2,
        n_r: grid.n_r(),
        deviation,
        barrier_deviation,
        iterations: report.iterations,
        residual: report.nonlinear_residual_maxnorm,
        converged: report.converged,
        weighted_norm_of_u: report.weighted_norm_of_u,
        admissible: report.admissible,
        bounds_ok: report.bounds_ok,
        failure: if report.converged { None } else { Some("did not converge".into()) },
    }
}

/// Solve for `R2 = factor · R1` over the given factors and tabulate how the solution
/// approaches `1 ± ε` on `R1 ≤ r ≤ 2R1`. Members run on up to `workers` threads; a
/// failed member yields a row with `failure` set instead of aborting the sweep.
pub fn r2_sweep(
    base: &AnnulusSpec,
    factors: &[f64],
    policy: &GridPolicy,
    config: &IterationConfig,
    workers: usize,
) -> Result<Vec<SweepRow>> {
    if factors.is_empty() {
        return Err(Error::Argument("sweep needs at least one factor".into()));
    }
    if let Some(f) = factors.iter().find(|f| !(**f >= 2.0 && f.is_finite())) {
        return Err(Error::Argument(format!("every factor must be >= 2, got {f}")));
    }
    if factors.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Argument(format!("factors must be strictly increasing, got {factors:?}")));
    }
    base.validate()?;
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Argument(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(|| factors.par_iter().map(|&m| run_member(base, m, policy, config)).collect()))
}

/// Whether a column decreases, allowing each step to rise by `slack` relative to
/// the previous entry.
pub fn is_monotone_decreasing(values: &[f64], slack: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] * (1.0 + slack))
}
