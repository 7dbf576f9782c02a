use faer::sparse::{SparseColMat, Triplet};
use faer::prelude::Solve;
use faer::Mat;

use super::coefficients::frozen_coefficients;
use super::grid::{cartesian_stencil, node_jet, AnnulusField, PolarGrid};
use super::{barrier_h, AnnulusSpec};
use crate::error::{Error, Result};

const TARGET_RELATIVE_RESIDUAL: f64 = 1e-12;
const MAX_REFINEMENTS: usize = 4;

/// Square sparse matrix in compressed rows.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    /// Rows given as `(column, value)` lists; duplicate columns are summed.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            for (c, v) in row {
                if cols.len() > *row_ptr.last().unwrap() && *cols.last().unwrap() == c {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, k: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[k]..self.row_ptr[k + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|k| self.row(k).map(|(c, v)| v * x[c]).sum()).collect()
    }

    /// Sparse LU with iterative refinement until `‖Ax − b‖ ≤ 1e−12 ‖b‖`.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        let b_norm = norm2(rhs);
        if b_norm == 0.0 {
            return Ok(vec![0.0; n]);
        }
        let triplets: Vec<Triplet<usize, usize, f64>> = (0..n)
            .flat_map(|k| self.row(k).map(move |(c, v)| Triplet::new(k, c, v)))
            .collect();
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| Error::Solver(format!("matrix construction failed: {e:?}")))?;
        let lu = mat
            .sp_lu()
            .map_err(|e| Error::Solver(format!("sparse LU failed: {e:?}")))?;

        let lu_solve = |r: &[f64]| -> Vec<f64> {
            let col = Mat::<f64>::from_fn(n, 1, |i, _| r[i]);
            let sol = lu.solve(&col);
            (0..n).map(|i| sol[(i, 0)]).collect()
        };

        let mut x = lu_solve(rhs);
        let mut trace = Vec::new();
        for _ in 0..=MAX_REFINEMENTS {
            let ax = self.matvec(&x);
            let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
            let rel = norm2(&r) / b_norm;
            trace.push(rel);
            if !rel.is_finite() {
                break;
            }
            if rel <= TARGET_RELATIVE_RESIDUAL {
                return Ok(x);
            }
            let dx = lu_solve(&r);
            for (xi, di) in x.iter_mut().zip(dx) {
                *xi += di;
            }
        }
        Err(Error::Solver(format!("relative residual trace {trace:?} did not reach {TARGET_RELATIVE_RESIDUAL:e}")))
    }
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `L_f w = 0` on the interior rings with the boundary rings moved to the
/// right-hand side. Unknown `(i − 1) n_θ + j` is node `(i, j)`, `1 ≤ i ≤ n_r − 2`.
/// Each row is the Cartesian operator times `r²`.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub grid: PolarGrid,
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub inner_value: f64,
    pub outer_value: f64,
}

impl LinearSystem {
    pub fn unknown(&self, i: usize, j: usize) -> usize {
        (i - 1) * self.grid.n_theta() + j
    }

    /// `A x − b` for interior values `x`.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.matvec(x).iter().zip(&self.rhs).map(|(a, b)| a - b).collect()
    }

    pub fn solve(&self) -> Result<Vec<f64>> {
        self.matrix.solve(&self.rhs)
    }

    /// Full field from interior unknowns and the boundary values.
    pub fn field_from(&self, x: &[f64]) -> AnnulusField {
        let g = self.grid;
        let mut values = Vec::with_capacity(g.len());
        values.extend(std::iter::repeat(self.inner_value).take(g.n_theta()));
        values.extend_from_slice(x);
        values.extend(std::iter::repeat(self.outer_value).take(g.n_theta()));
        AnnulusField { grid: g, values }
    }
}

fn check_grid(f: &AnnulusField, spec: &AnnulusSpec) -> Result<()> {
    spec.validate()?;
    let g = f.grid;
    if (g.r1() - spec.r1).abs() > 1e-12 * spec.r1 || (g.r2() - spec.r2).abs() > 1e-12 * spec.r2 {
        return Err(Error::Argument(format!(
            "grid spans [{}, {}] but the annulus is [{}, {}]",
            g.r1(),
            g.r2(),
            spec.r1,
            spec.r2
        )));
    }
    if f.values.len() != g.len() {
        return Err(Error::Argument("field length does not match its grid".into()));
    }
    Ok(())
}

/// Assemble `L_f w = 0`, `w = h` on both circles.
pub fn assemble_linear_system(f: &AnnulusField, spec: &AnnulusSpec) -> Result<LinearSystem> {
    check_grid(f, spec)?;
    let inner = barrier_h(spec.r1, spec)?;
    let outer = barrier_h(spec.r2, spec)?;
    assemble_with_boundary(f, spec, inner, outer)
}

/// Same as [`assemble_linear_system`] with arbitrary constant boundary values.
pub fn assemble_with_boundary(f: &AnnulusField, spec: &AnnulusSpec, inner: f64, outer: f64) -> Result<LinearSystem> {
    check_grid(f, spec)?;
    let g = f.grid;
    let (n_r, n_th) = (g.n_r(), g.n_theta());
    let n = (n_r - 2) * n_th;
    let mut rows = Vec::with_capacity(n);
    let mut rhs = vec![0.0; n];

    for i in 1..n_r - 1 {
        let r2 = g.radius(i).powi(2);
        for j in 0..n_th {
            let jet = node_jet(f, i, j, 2);
            let coeffs = frozen_coefficients(jet.f, jet.fx, jet.ft, spec.params).map_err(|e| Error::Assembly {
                i,
                j,
                reason: e.to_string(),
            })?;
            let ell = coeffs.ellipticity();
            if !(ell > 0.0 && ell.is_finite()) {
                return Err(Error::Assembly { i, j, reason: format!("ellipticity a c − b² = {ell}") });
            }
            let row_id = (i - 1) * n_th + j;
            let mut row = Vec::with_capacity(9);
            for (k, w) in cartesian_stencil(&g, i, j, 2) {
                let weight = r2
                    * (coeffs.a * w[2] + 2.0 * coeffs.b * w[3] + coeffs.c * w[4] + coeffs.d * w[0] + coeffs.e * w[1]);
                let ring = k / n_th;
                if ring == 0 {
                    rhs[row_id] -= weight * inner;
                } else if ring == n_r - 1 {
                    rhs[row_id] -= weight * outer;
                } else {
                    row.push((k - n_th, weight));
                }
            }
            rows.push(row);
        }
    }
    Ok(LinearSystem { grid: g, matrix: SparseMatrix::from_rows(rows), rhs, inner_value: inner, outer_value: outer })
}

/// `w = T f`: solve the frozen-coefficient Dirichlet problem with barrier data.
pub fn apply_t(f: &AnnulusField, spec: &AnnulusSpec) -> Result<AnnulusField> {
    let system = assemble_linear_system(f, spec)?;
    let x = system.solve()?;
    Ok(system.field_from(&x))
}
