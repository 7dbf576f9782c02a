//! Weighted Hölder norm diagnostics.
//!
//! ```text
//! |v|* = sup_X { |v| + r|Dv| + r²|D²v| + r^{2+α} [D²v]_{α;X} }
//! ```
//!
//! `Dv` and `D²v` are Cartesian and come from second-order differences (shifted
//! stencils on the boundary rings). `|D²v|` is the spectral norm. The local Hölder
//! coefficient at a node is the largest `|D²v(X) − D²v(Y)| / |X − Y|^α` over its
//! eight grid neighbours.

use super::barrier_field;
use super::grid::{node_jet, AnnulusField, PolarGrid, MIN_NR};
use super::AnnulusSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WeightedNormParts {
    pub value: f64,
    pub gradient: f64,
    pub hessian: f64,
    pub holder: f64,
    /// Sup of the pointwise sum of the four terms.
    pub total: f64,
}

fn spectral_norm(p: f64, q: f64, s: f64) -> f64 {
    let mean = 0.5 * (p + s);
    let rad = (0.25 * (p - s) * (p - s) + q * q).sqrt();
    mean.abs() + rad
}

fn per_node_terms(v: &AnnulusField, alpha: f64) -> Result<Vec<[f64; 4]>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Argument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let g = v.grid;
    if g.n_r() < MIN_NR {
        return Err(Error::Argument(format!("grid too coarse: n_r = {} < {MIN_NR}", g.n_r())));
    }
    let mut hess = Vec::with_capacity(g.len());
    let mut terms = Vec::with_capacity(g.len());
    for i in 0..g.n_r() {
        let r = g.radius(i);
        for j in 0..g.n_theta() {
            let jet = node_jet(v, i, j, 2);
            hess.push([jet.fxx, jet.fxt, jet.ftt]);
            let grad = (jet.fx * jet.fx + jet.ft * jet.ft).sqrt();
            terms.push([jet.f.abs(), r * grad, r * r * spectral_norm(jet.fxx, jet.fxt, jet.ftt), 0.0]);
        }
    }
    for i in 0..g.n_r() {
        let r = g.radius(i);
        for j in 0..g.n_theta() {
            let k = g.index(i, j);
            let (x, t) = g.xt(i, j);
            let mut coeff: f64 = 0.0;
            for di in -1isize..=1 {
                let ii = i as isize + di;
                if ii < 0 || ii >= g.n_r() as isize {
                    continue;
                }
                for dj in -1isize..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let jj = g.wrap(j as isize + dj);
                    let m = g.index(ii as usize, jj);
                    let (y1, y2) = g.xt(ii as usize, jj);
                    let dist = ((x - y1).powi(2) + (t - y2).powi(2)).sqrt();
                    let d = spectral_norm(hess[k][0] - hess[m][0], hess[k][1] - hess[m][1], hess[k][2] - hess[m][2]);
                    coeff = coeff.max(d / dist.powf(alpha));
                }
            }
            terms[k][3] = r.powf(2.0 + alpha) * coeff;
        }
    }
    Ok(terms)
}

fn reduce<'a, I: Iterator<Item = &'a [f64; 4]>>(terms: I) -> WeightedNormParts {
    let mut p = WeightedNormParts::default();
    for t in terms {
        p.value = p.value.max(t[0]);
        p.gradient = p.gradient.max(t[1]);
        p.hessian = p.hessian.max(t[2]);
        p.holder = p.holder.max(t[3]);
        p.total = p.total.max(t[0] + t[1] + t[2] + t[3]);
    }
    p
}

pub fn weighted_norm_parts(v: &AnnulusField, alpha: f64) -> Result<WeightedNormParts> {
    Ok(reduce(per_node_terms(v, alpha)?.iter()))
}

pub fn weighted_norm(v: &AnnulusField, alpha: f64) -> Result<f64> {
    Ok(weighted_norm_parts(v, alpha)?.total)
}

/// The norm restricted to a set of node indices (derivatives still use the whole
/// field).
pub fn weighted_norm_on(v: &AnnulusField, alpha: f64, nodes: &[usize]) -> Result<WeightedNormParts> {
    let terms = per_node_terms(v, alpha)?;
    Ok(reduce(nodes.iter().map(|&k| &terms[k])))
}

/// `(|f − h|* ≤ √ε, |f − h|*)`.
pub fn admissibility_check(f: &AnnulusField, spec: &AnnulusSpec, alpha: f64) -> Result<(bool, f64)> {
    let h = barrier_field(f.grid, spec)?;
    let u = f.zip_with(&h, |a, b| a - b);
    let norm = weighted_norm(&u, alpha)?;
    Ok((norm <= spec.epsilon.sqrt(), norm))
}

/// One radial block `lo ≤ r ≤ hi`, of scale `R1` with constants `lo/R1`, `hi/R1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleBlock {
    pub lo: f64,
    pub hi: f64,
    pub nodes: Vec<usize>,
}

impl ScaleBlock {
    /// `(c1, c2)` with every radius of the block in `[c1 R1, c2 R1]`.
    pub fn scale_constants(&self, r1: f64) -> (f64, f64) {
        (self.lo / r1, self.hi / r1)
    }
}

/// Split the annulus at `(m0 + 2)/3 · R1` and `2(m0 + 1)/3 · R1`, `m0 = R2/R1`.
/// Nodes on a cut belong to both neighbouring blocks.
pub fn scale_blocks(grid: &PolarGrid, spec: &AnnulusSpec) -> Result<[ScaleBlock; 3]> {
    if spec.r2 < 4.0 * spec.r1 {
        return Err(Error::Precondition(format!(
            "scale blocks need r2 >= 4 r1 (r1 = {}, r2 = {})",
            spec.r1, spec.r2
        )));
    }
    let m0 = spec.r2 / spec.r1;
    let cuts = [spec.r1, (m0 + 2.0) / 3.0 * spec.r1, 2.0 * (m0 + 1.0) / 3.0 * spec.r1, spec.r2];
    let tol = 1e-12 * spec.r2;
    let mut blocks: [ScaleBlock; 3] = std::array::from_fn(|b| ScaleBlock { lo: cuts[b], hi: cuts[b + 1], nodes: Vec::new() });
    for i in 0..grid.n_r() {
        let r = grid.radius(i);
        for block in blocks.iter_mut() {
            if r >= block.lo - tol && r <= block.hi + tol {
                block.nodes.extend((0..grid.n_theta()).map(|j| grid.index(i, j)));
            }
        }
    }
    Ok(blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ModelParams;
    use crate::solver::Sign;

    fn grid() -> PolarGrid {
        PolarGrid::new(1.0, 4.0, 33, 128).unwrap()
    }

    #[test]
    fn zero_and_constants() {
        let g = grid();
        assert_eq!(weighted_norm(&AnnulusField::constant(g, 0.0), 0.5).unwrap(), 0.0);
        let c = weighted_norm(&AnnulusField::constant(g, 2.5), 0.5).unwrap();
        assert!((c - 2.5).abs() < 1e-9, "{c}");
    }

    #[test]
    fn linear_function_has_no_curvature_terms() {
        // v = x: |v| + r|Dv| = |x| + r, maximal (2 R2) at θ = 0 on the outer circle.
        let g = grid();
        let v = AnnulusField::from_fn(g, |r, th| r * th.cos());
        let parts = weighted_norm_parts(&v, 0.5).unwrap();
        assert!((parts.value - 4.0).abs() < 1e-12);
        assert!((parts.gradient - 4.0).abs() < 1e-2, "{parts:?}");
        assert!(parts.hessian < 0.1, "{parts:?}");
        assert!((parts.total - 8.0).abs() < 0.2, "{parts:?}");
    }

    #[test]
    fn radius_function() {
        // v = r: |Dv| = 1 and the Hessian has spectral norm 1/r, so the first three
        // terms each reach R2.
        let g = grid();
        let v = AnnulusField::from_fn(g, |r, _| r);
        let p = weighted_norm_parts(&v, 0.5).unwrap();
        assert!((p.value - 4.0).abs() < 1e-12);
        assert!((p.gradient - 4.0).abs() < 1e-2, "{p:?}");
        assert!((p.hessian - 4.0).abs() < 0.05, "{p:?}");
        assert!(p.total >= 12.0 - 0.1);
    }

    #[test]
    fn coarse_grid_and_bad_alpha() {
        let g = grid();
        let v = AnnulusField::constant(g, 1.0);
        assert!(weighted_norm(&v, 0.0).is_err());
        assert!(weighted_norm(&v, 1.0).is_err());
    }

    #[test]
    fn admissibility_examples() {
        let spec = AnnulusSpec::new(1.0, 4.0, 0.02, Sign::Plus, ModelParams { tau: 0.25 }).unwrap();
        let g = grid();
        let h = barrier_field(g, &spec).unwrap();
        assert_eq!(admissibility_check(&h, &spec, 0.5).unwrap(), (true, 0.0));
        let shift = 2.0 * 0.02f64.sqrt();
        let f = AnnulusField { grid: g, values: h.values.iter().map(|v| v + shift).collect() };
        let (ok, n) = admissibility_check(&f, &spec, 0.5).unwrap();
        assert!(!ok);
        assert!((n - shift).abs() < 1e-9, "{n}");
    }

    #[test]
    fn scale_block_cuts() {
        let spec = AnnulusSpec::new(1.0, 7.0, 0.02, Sign::Plus, ModelParams::default()).unwrap();
        let g = PolarGrid::new(1.0, 7.0, 40, 16).unwrap();
        let blocks = scale_blocks(&g, &spec).unwrap();
        assert!((blocks[0].hi - 3.0).abs() < 1e-15);
        assert!((blocks[1].hi - 16.0 / 3.0).abs() < 1e-15);
        let mut covered = vec![false; g.len()];
        for b in &blocks {
            let (c1, c2) = b.scale_constants(1.0);
            for &k in &b.nodes {
                covered[k] = true;
                let r = g.radius(k / 16);
                assert!(r >= c1 - 1e-12 && r <= c2 + 1e-12);
            }
        }
        assert!(covered.iter().all(|c| *c));
        // disjoint apart from rings lying exactly on a cut
        let total: usize = blocks.iter().map(|b| b.nodes.len()).sum();
        assert!(total - g.len() <= 2 * g.n_theta());
    }

    #[test]
    fn scale_blocks_need_wide_annulus() {
        let spec = AnnulusSpec::new(1.0, 3.0, 0.02, Sign::Plus, ModelParams::default()).unwrap();
        let g = PolarGrid::new(1.0, 3.0, 16, 16).unwrap();
        assert!(matches!(scale_blocks(&g, &spec), Err(Error::Precondition(_))));
    }
}
