//! Polar discretization of the annulus `R1 ≤ r ≤ R2` in the `(x, t)` plane.
//!
//! Nodes are uniform in `(s, θ)` with `s = ln r`, so the annulus becomes a
//! rectangle that is periodic in `θ` and both circles are grid lines. Cartesian
//! derivatives are obtained from `(s, θ)` differences by the chain rule.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::graph::Jet2;

pub const MIN_NR: usize = 8;
pub const MIN_NTHETA: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarGrid {
    r1: f64,
    r2: f64,
    n_r: usize,
    n_theta: usize,
}

impl PolarGrid {
    pub fn new(r1: f64, r2: f64, n_r: usize, n_theta: usize) -> Result<Self> {
        if !(r1 > 0.0 && r2 > r1 && r2.is_finite()) {
            return Err(Error::Argument(format!("need 0 < r1 < r2, got r1 = {r1}, r2 = {r2}")));
        }
        if n_r < MIN_NR {
            return Err(Error::Argument(format!("n_r must be at least {MIN_NR}, got {n_r}")));
        }
        if n_theta < MIN_NTHETA {
            return Err(Error::Argument(format!("n_theta must be at least {MIN_NTHETA}, got {n_theta}")));
        }
        Ok(Self { r1, r2, n_r, n_theta })
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }
    pub fn n_theta(&self) -> usize {
        self.n_theta
    }
    pub fn len(&self) -> usize {
        self.n_r * self.n_theta
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn r1(&self) -> f64 {
        self.r1
    }
    pub fn r2(&self) -> f64 {
        self.r2
    }

    /// Spacing in `s = ln r`.
    pub fn ds(&self) -> f64 {
        (self.r2 / self.r1).ln() / (self.n_r - 1) as f64
    }

    pub fn dtheta(&self) -> f64 {
        2.0 * PI / self.n_theta as f64
    }

    pub fn radius(&self, i: usize) -> f64 {
        if i == 0 {
            self.r1
        } else if i == self.n_r - 1 {
            self.r2
        } else {
            self.r1 * (i as f64 * self.ds()).exp()
        }
    }

    pub fn theta(&self, j: usize) -> f64 {
        j as f64 * self.dtheta()
    }

    /// Row-major in `(r index, θ index)`.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_theta + j
    }

    #[inline]
    pub fn wrap(&self, j: isize) -> usize {
        j.rem_euclid(self.n_theta as isize) as usize
    }

    pub fn xt(&self, i: usize, j: usize) -> (f64, f64) {
        let (r, th) = (self.radius(i), self.theta(j));
        (r * th.cos(), r * th.sin())
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        i == 0 || i == self.n_r - 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnulusField {
    pub grid: PolarGrid,
    pub values: Vec<f64>,
}

impl AnnulusField {
    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: PolarGrid, f: F) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.n_r() {
            let r = grid.radius(i);
            for j in 0..grid.n_theta() {
                values.push(f(r, grid.theta(j)));
            }
        }
        Self { grid, values }
    }

    pub fn constant(grid: PolarGrid, c: f64) -> Self {
        Self { grid, values: vec![c; grid.len()] }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `sup |self − other|` over all nodes.
    pub fn sup_diff(&self, other: &AnnulusField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn zip_with<F: Fn(f64, f64) -> f64>(&self, other: &AnnulusField, op: F) -> AnnulusField {
        AnnulusField {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| op(*a, *b)).collect(),
        }
    }
}

/// Finite-difference weights at `0` for the given node offsets (Fornberg's recursion).
pub fn fd_weights(offsets: &[f64], deriv: usize) -> Vec<f64> {
    let n = offsets.len();
    assert!(n > deriv, "need more than {deriv} nodes");
    let mut c = vec![vec![0.0; deriv + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = offsets[0];
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(deriv);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = offsets[i];
        for j in 0..i {
            let c3 = offsets[i] - offsets[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[deriv]).collect()
}

/// Radial stencil at row `i` for the `deriv`-th derivative in `s`: first node and
/// weights (already divided by `ds^deriv`). Centred with `order + 1` nodes where it
/// fits, otherwise shifted inside the grid with `order + deriv` nodes so the
/// accuracy is kept.
pub fn radial_stencil(i: usize, n: usize, deriv: usize, order: usize, ds: f64) -> (usize, Vec<f64>) {
    let half = order / 2;
    let (start, len) = if i >= half && i + half < n {
        (i - half, order + 1)
    } else {
        let len = (order + deriv).min(n);
        let start = if i < half { 0 } else { n - len };
        (start, len)
    };
    let offsets: Vec<f64> = (start..start + len).map(|k| k as f64 - i as f64).collect();
    let scale = ds.powi(deriv as i32);
    (start, fd_weights(&offsets, deriv).into_iter().map(|w| w / scale).collect())
}

/// Centred periodic stencil in `θ`: offsets `−order/2 ..= order/2` and weights.
pub fn theta_stencil(deriv: usize, order: usize, dtheta: f64) -> Vec<(isize, f64)> {
    let half = (order / 2) as isize;
    let offsets: Vec<f64> = (-half..=half).map(|k| k as f64).collect();
    let scale = dtheta.powi(deriv as i32);
    (-half..=half)
        .zip(fd_weights(&offsets, deriv))
        .map(|(k, w)| (k, w / scale))
        .filter(|(_, w)| *w != 0.0)
        .collect()
}

/// Weights of `(∂s, ∂θ, ∂ss, ∂sθ, ∂θθ)` attached to one node of a stencil.
pub type PolarWeights = [f64; 5];

/// All nodes touched by the polar derivative stencils at `(i, j)`.
pub fn polar_stencil(grid: &PolarGrid, i: usize, j: usize, order: usize) -> Vec<(usize, PolarWeights)> {
    let (n, ds, dth) = (grid.n_r(), grid.ds(), grid.dtheta());
    let mut out: Vec<(usize, PolarWeights)> = Vec::with_capacity((order + 1) * (order + 1) + 4);
    let mut add = |idx: usize, slot: usize, w: f64| {
        if let Some(e) = out.iter_mut().find(|(k, _)| *k == idx) {
            e.1[slot] += w;
        } else {
            let mut ws = [0.0; 5];
            ws[slot] = w;
            out.push((idx, ws));
        }
    };

    let (s1, w1) = radial_stencil(i, n, 1, order, ds);
    for (k, w) in w1.iter().enumerate() {
        add(grid.index(s1 + k, j), 0, *w);
    }
    let (s2, w2) = radial_stencil(i, n, 2, order, ds);
    for (k, w) in w2.iter().enumerate() {
        add(grid.index(s2 + k, j), 2, *w);
    }
    let t1 = theta_stencil(1, order, dth);
    for &(dj, w) in &t1 {
        add(grid.index(i, grid.wrap(j as isize + dj)), 1, w);
    }
    for (dj, w) in theta_stencil(2, order, dth) {
        add(grid.index(i, grid.wrap(j as isize + dj)), 4, w);
    }
    for (k, wr) in w1.iter().enumerate() {
        for &(dj, wt) in &t1 {
            add(grid.index(s1 + k, grid.wrap(j as isize + dj)), 3, wr * wt);
        }
    }
    out
}

/// Chain rule from `(s, θ)` derivatives to `(x, t)` derivatives at radius `r`,
/// angle `θ`, where `x = e^s cos θ`, `t = e^s sin θ`.
#[derive(Debug, Clone, Copy)]
pub struct ChainRule {
    sx: f64,
    st: f64,
    thx: f64,
    tht: f64,
    sxx: f64,
    stt: f64,
    sxt: f64,
    thxx: f64,
    thtt: f64,
    thxt: f64,
}

impl ChainRule {
    pub fn new(r: f64, theta: f64) -> Self {
        let (sn, cs) = theta.sin_cos();
        let (s2, c2) = (2.0 * theta).sin_cos();
        let r2 = r * r;
        Self {
            sx: cs / r,
            st: sn / r,
            thx: -sn / r,
            tht: cs / r,
            sxx: -c2 / r2,
            stt: c2 / r2,
            sxt: -s2 / r2,
            thxx: s2 / r2,
            thtt: -s2 / r2,
            thxt: -c2 / r2,
        }
    }

    /// `(∂s, ∂θ, ∂ss, ∂sθ, ∂θθ)` → `(∂x, ∂t, ∂xx, ∂xt, ∂tt)`. Linear, so it applies
    /// equally to derivative values and to stencil weights.
    pub fn apply(&self, p: &PolarWeights) -> [f64; 5] {
        let [ds, dth, dss, dsth, dthth] = *p;
        let dx = self.sx * ds + self.thx * dth;
        let dt = self.st * ds + self.tht * dth;
        let dxx = self.sx * self.sx * dss
            + 2.0 * self.sx * self.thx * dsth
            + self.thx * self.thx * dthth
            + self.sxx * ds
            + self.thxx * dth;
        let dtt = self.st * self.st * dss
            + 2.0 * self.st * self.tht * dsth
            + self.tht * self.tht * dthth
            + self.stt * ds
            + self.thtt * dth;
        let dxt = self.sx * self.st * dss
            + (self.sx * self.tht + self.st * self.thx) * dsth
            + self.thx * self.tht * dthth
            + self.sxt * ds
            + self.thxt * dth;
        [dx, dt, dxx, dxt, dtt]
    }
}

/// Cartesian stencil at `(i, j)`: node indices with weights for
/// `(∂x, ∂t, ∂xx, ∂xt, ∂tt)`.
pub fn cartesian_stencil(grid: &PolarGrid, i: usize, j: usize, order: usize) -> Vec<(usize, [f64; 5])> {
    let chain = ChainRule::new(grid.radius(i), grid.theta(j));
    polar_stencil(grid, i, j, order)
        .into_iter()
        .map(|(k, w)| (k, chain.apply(&w)))
        .collect()
}

/// 2-jet of `field` at node `(i, j)` from differences of the given order.
pub fn node_jet(field: &AnnulusField, i: usize, j: usize, order: usize) -> Jet2 {
    let mut d = [0.0; 5];
    for (k, w) in cartesian_stencil(&field.grid, i, j, order) {
        let v = field.values[k];
        for q in 0..5 {
            d[q] += w[q] * v;
        }
    }
    Jet2::new(field.get(i, j), d[0], d[1], d[2], d[3], d[4])
}
