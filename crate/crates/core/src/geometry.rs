//! Uniform Cartesian grids over intervals, rectangles and discs, nodal fields,
//! finite-difference stencils and node-indicator quadrature over balls and
//! spheres.
//!
//! Nodes are numbered `i + nx * j` with `i` along the first axis. One-dimensional
//! grids use the same layout with a single row. Every node is either interior
//! (its whole `2N + 1` stencil lies in the closed domain) or boundary. Disc
//! domains are realised by masking the bounding square, so nodes outside the
//! disc are boundary nodes as well.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};

/// A point in the plane; one-dimensional grids ignore the second coordinate.
pub type Point = [f64; 2];

/// Builds a [`Point`] from a slice of length 1 or 2.
pub fn point(coords: &[f64]) -> Point {
    match coords {
        [x] => [*x, 0.0],
        [x, y, ..] => [*x, *y],
        [] => [0.0, 0.0],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    /// Axis-aligned box; the number of entries in `min` fixes the dimension.
    Rectangle { min: Vec<f64>, max: Vec<f64> },
    /// Ball of the given radius; the number of entries in `center` fixes the dimension.
    Disc { center: Vec<f64>, radius: f64 },
}

impl DomainSpec {
    pub fn interval(a: f64, b: f64) -> Self {
        DomainSpec::Rectangle {
            min: vec![a],
            max: vec![b],
        }
    }

    pub fn square(a: f64, b: f64) -> Self {
        DomainSpec::Rectangle {
            min: vec![a, a],
            max: vec![b, b],
        }
    }

    pub fn disc(center: Point, radius: f64) -> Self {
        DomainSpec::Disc {
            center: center.to_vec(),
            radius,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            DomainSpec::Rectangle { min, .. } => min.len(),
            DomainSpec::Disc { center, .. } => center.len(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Grid {
    dim: usize,
    domain: DomainSpec,
    h: f64,
    origin: Point,
    counts: [usize; 2],
    boundary: Vec<bool>,
    inside: Vec<bool>,
    interior_index: Vec<Option<usize>>,
    interior_nodes: Vec<usize>,
}

impl Grid {
    /// Discretizes `domain` with `resolution` nodes along the first axis.
    pub fn new(domain: DomainSpec, resolution: usize) -> Result<Self> {
        let dim = domain.dim();
        if !(1..=2).contains(&dim) {
            return Err(config_err("domain", format!("dimension {dim} unsupported, use 1 or 2")));
        }
        if resolution < 3 {
            return Err(config_err(
                "resolution",
                format!("resolution {resolution} < 3 leaves no interior node"),
            ));
        }
        let (origin, extents) = match &domain {
            DomainSpec::Rectangle { min, max } => {
                if max.len() != dim {
                    return Err(config_err("domain.max", "min and max differ in length"));
                }
                let ext: Vec<f64> = min.iter().zip(max).map(|(a, b)| b - a).collect();
                if ext.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
                    return Err(config_err("domain", "extents must be positive"));
                }
                (point(min), ext)
            }
            DomainSpec::Disc { center, radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(config_err("domain.radius", "radius must be positive"));
                }
                let c = point(center);
                (
                    [c[0] - radius, if dim == 2 { c[1] - radius } else { 0.0 }],
                    vec![2.0 * radius; dim],
                )
            }
        };
        let h = extents[0] / (resolution - 1) as f64;
        let mut counts = [resolution, 1];
        if dim == 2 {
            let steps = (extents[1] / h).round();
            if steps < 2.0 || ((steps * h - extents[1]).abs() > 1e-9 * extents[1]) {
                return Err(config_err(
                    "domain",
                    "second-axis extent is not a multiple of the first-axis spacing",
                ));
            }
            counts[1] = steps as usize + 1;
        }

        let len = counts[0] * counts[1];
        let mut grid = Grid {
            dim,
            domain,
            h,
            origin,
            counts,
            boundary: vec![true; len],
            inside: vec![false; len],
            interior_index: vec![None; len],
            interior_nodes: Vec::new(),
        };
        let inside: Vec<bool> = (0..len).map(|k| grid.point_in_domain(grid.coords(k))).collect();
        grid.inside = inside;
        for k in 0..len {
            let interior = grid.inside[k]
                && (0..dim).all(|axis| {
                    let (lo, hi) = grid.axis_neighbors(k, axis);
                    matches!((lo, hi), (Some(a), Some(b)) if grid.inside[a] && grid.inside[b])
                })
                && grid.stencil_strictly_interior(k);
            if interior {
                grid.boundary[k] = false;
                grid.interior_index[k] = Some(grid.interior_nodes.len());
                grid.interior_nodes.push(k);
            }
        }
        if grid.interior_nodes.is_empty() {
            return Err(config_err(
                "resolution",
                format!("resolution {resolution} contains no interior node"),
            ));
        }
        Ok(grid)
    }

    // Rectangle nodes on the edge are boundary nodes even though they are inside.
    fn stencil_strictly_interior(&self, k: usize) -> bool {
        match self.domain {
            DomainSpec::Rectangle { .. } => {
                let (i, j) = self.ij(k);
                i > 0 && i + 1 < self.counts[0] && (self.dim == 1 || (j > 0 && j + 1 < self.counts[1]))
            }
            DomainSpec::Disc { .. } => true,
        }
    }

    fn point_in_domain(&self, p: Point) -> bool {
        match &self.domain {
            DomainSpec::Rectangle { .. } => true,
            DomainSpec::Disc { center, radius } => {
                self.distance(p, point(center)) <= radius * (1.0 + 1e-12)
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn counts(&self) -> [usize; 2] {
        self.counts
    }

    pub fn len(&self) -> usize {
        self.counts[0] * self.counts[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `h^N`, the volume attached to one node by midpoint-type quadrature.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.counts[0], k / self.counts[0])
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.counts[0] * j
    }

    pub fn coords(&self, k: usize) -> Point {
        let (i, j) = self.ij(k);
        let x = self.origin[0] + i as f64 * self.h;
        let y = if self.dim == 2 {
            self.origin[1] + j as f64 * self.h
        } else {
            0.0
        };
        [x, y]
    }

    pub fn distance(&self, a: Point, b: Point) -> f64 {
        let dx = a[0] - b[0];
        if self.dim == 1 {
            dx.abs()
        } else {
            dx.hypot(a[1] - b[1])
        }
    }

    pub fn is_boundary(&self, k: usize) -> bool {
        self.boundary[k]
    }

    /// True when the node lies in the closed domain (always true for rectangles).
    pub fn is_inside(&self, k: usize) -> bool {
        self.inside[k]
    }

    pub fn interior_index(&self, k: usize) -> Option<usize> {
        self.interior_index[k]
    }

    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior_nodes
    }

    pub fn num_interior(&self) -> usize {
        self.interior_nodes.len()
    }

    /// Lower and upper neighbour of node `k` along `axis`, if they exist on the grid.
    pub fn axis_neighbors(&self, k: usize, axis: usize) -> (Option<usize>, Option<usize>) {
        let (i, j) = self.ij(k);
        let (pos, n, stride) = if axis == 0 {
            (i, self.counts[0], 1)
        } else {
            (j, self.counts[1], self.counts[0])
        };
        let lo = (pos > 0).then(|| k - stride);
        let hi = (pos + 1 < n).then(|| k + stride);
        (lo, hi)
    }

    /// All existing stencil neighbours of node `k`.
    pub fn neighbors(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.dim).flat_map(move |axis| {
            let (lo, hi) = self.axis_neighbors(k, axis);
            lo.into_iter().chain(hi)
        })
    }

    /// Quadrature weight of node `k` for integrals over the whole domain:
    /// trapezoidal on rectangles, `h^N` on the nodes inside a disc.
    pub fn node_weight(&self, k: usize) -> f64 {
        match self.domain {
            DomainSpec::Rectangle { .. } => {
                let (i, j) = self.ij(k);
                let mut w = self.cell_volume();
                if i == 0 || i + 1 == self.counts[0] {
                    w *= 0.5;
                }
                if self.dim == 2 && (j == 0 || j + 1 == self.counts[1]) {
                    w *= 0.5;
                }
                w
            }
            DomainSpec::Disc { .. } => {
                if self.inside[k] {
                    self.cell_volume()
                } else {
                    0.0
                }
            }
        }
    }

    /// Weight of the grid edge from `k` to its upper neighbour along `axis`,
    /// used by the Dirichlet energy. Interior nodes always see full-weight edges.
    fn edge_weight(&self, k: usize, axis: usize, upper: usize) -> f64 {
        match self.domain {
            DomainSpec::Rectangle { .. } => {
                let mut w = self.cell_volume();
                if self.dim == 2 {
                    let (i, j) = self.ij(k);
                    let (t, n) = if axis == 0 { (j, self.counts[1]) } else { (i, self.counts[0]) };
                    if t == 0 || t + 1 == n {
                        w *= 0.5;
                    }
                }
                w
            }
            DomainSpec::Disc { .. } => {
                if self.inside[k] && self.inside[upper] {
                    self.cell_volume()
                } else {
                    0.0
                }
            }
        }
    }

    /// Whether the closed ball `B_r(center)` lies in the closed domain.
    pub fn contains_ball(&self, center: Point, r: f64) -> bool {
        let slack = 1e-9 * self.h;
        match &self.domain {
            DomainSpec::Rectangle { min, max } => (0..self.dim)
                .all(|a| center[a] - r >= min[a] - slack && center[a] + r <= max[a] + slack),
            DomainSpec::Disc { center: c, radius } => {
                self.distance(center, point(c)) + r <= radius + slack
            }
        }
    }

    fn require_ball(&self, center: Point, r: f64) -> Result<()> {
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::Domain(format!("invalid radius {r}")));
        }
        if !self.contains_ball(center, r) {
            return Err(Error::Domain(format!(
                "ball of radius {r} around {center:?} is not contained in the domain"
            )));
        }
        Ok(())
    }

    /// Nodes `x` with `|x - center| <= r`.
    pub fn ball_nodes(&self, center: Point, r: f64) -> Vec<usize> {
        let tol = 1e-9 * self.h;
        self.nodes_in_box(center, r + self.h)
            .filter(|&k| self.distance(self.coords(k), center) <= r + tol)
            .collect()
    }

    /// Nodes `x` with `r - h/2 <= |x - center| < r + h/2`; consecutive shells of a
    /// ladder with step `h` are disjoint.
    pub fn shell_nodes(&self, center: Point, r: f64) -> Vec<usize> {
        let tol = 1e-9 * self.h;
        let lo = r - 0.5 * self.h - tol;
        let hi = r + 0.5 * self.h - tol;
        self.nodes_in_box(center, r + self.h)
            .filter(|&k| {
                let d = self.distance(self.coords(k), center);
                d >= lo && d < hi
            })
            .collect()
    }

    fn nodes_in_box(&self, center: Point, half: f64) -> impl Iterator<Item = usize> + '_ {
        let range = |axis: usize| -> (usize, usize) {
            if axis >= self.dim {
                return (0, 0);
            }
            let n = self.counts[axis] as f64;
            let lo = ((center[axis] - half - self.origin[axis]) / self.h).floor().max(0.0);
            let hi = ((center[axis] + half - self.origin[axis]) / self.h).ceil().min(n - 1.0);
            if hi < lo {
                (1, 0)
            } else {
                (lo as usize, hi as usize)
            }
        };
        let (i0, i1) = range(0);
        let (j0, j1) = range(1);
        (j0..=j1).flat_map(move |j| (i0..=i1).map(move |i| self.index(i, j)))
    }

    /// Nearest grid node to `p`.
    pub fn nearest_node(&self, p: Point) -> usize {
        let snap = |axis: usize| -> usize {
            if axis >= self.dim {
                return 0;
            }
            let t = ((p[axis] - self.origin[axis]) / self.h).round();
            t.clamp(0.0, (self.counts[axis] - 1) as f64) as usize
        };
        self.index(snap(0), snap(1))
    }
}

/// Nodal values on a shared [`Grid`]. All values are finite.
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Contract(format!(
                "field has {} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Contract(format!("non-finite value at node {k}")));
        }
        Ok(ScalarField { grid, values })
    }

    /// Samples `f` at every node.
    ///
    /// Panics if `f` returns a non-finite value.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(Point) -> f64) -> Self {
        let values: Vec<f64> = (0..grid.len()).map(|k| f(grid.coords(k))).collect();
        assert!(
            values.iter().all(|v| v.is_finite()),
            "sampled field contains non-finite values"
        );
        ScalarField { grid, values }
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        ScalarField {
            grid,
            values: vec![0.0; n],
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn value(&self, k: usize) -> f64 {
        self.values[k]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField::from_fn_indexed(self.grid.clone(), |k| f(self.values[k]))
    }

    pub(crate) fn from_fn_indexed(grid: Arc<Grid>, f: impl Fn(usize) -> f64) -> Self {
        let values = (0..grid.len()).map(f).collect();
        ScalarField { grid, values }
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest absolute nodal difference to `other` (same grid shape required).
    pub fn sup_distance(&self, other: &ScalarField) -> f64 {
        assert_eq!(self.values.len(), other.values.len(), "fields on different grids");
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Multilinear interpolation at `p`, clamped to the grid's bounding box.
    pub fn interpolate(&self, p: Point) -> f64 {
        let g = &self.grid;
        let locate = |axis: usize| -> (usize, f64) {
            if axis >= g.dim {
                return (0, 0.0);
            }
            let n = g.counts[axis];
            let t = ((p[axis] - g.origin[axis]) / g.h).clamp(0.0, (n - 1) as f64);
            let i = (t.floor() as usize).min(n - 2);
            (i, t - i as f64)
        };
        let (i, s) = locate(0);
        if g.dim == 1 {
            return (1.0 - s) * self.values[i] + s * self.values[i + 1];
        }
        let (j, t) = locate(1);
        let v00 = self.values[g.index(i, j)];
        let v10 = self.values[g.index(i + 1, j)];
        let v01 = self.values[g.index(i, j + 1)];
        let v11 = self.values[g.index(i + 1, j + 1)];
        (1.0 - t) * ((1.0 - s) * v00 + s * v10) + t * ((1.0 - s) * v01 + s * v11)
    }
}

/// Dirichlet data on the boundary nodes of a grid.
#[derive(Clone)]
pub enum BoundaryData {
    Constant(f64),
    /// One value per grid node; entries at interior nodes are ignored.
    Nodal(Vec<f64>),
    Function(Arc<dyn Fn(Point) -> f64 + Send + Sync>),
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryData::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            BoundaryData::Nodal(v) => f.debug_tuple("Nodal").field(&v.len()).finish(),
            BoundaryData::Function(_) => f.write_str("Function(..)"),
        }
    }
}

impl BoundaryData {
    pub fn function(f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        BoundaryData::Function(Arc::new(f))
    }

    /// Per-node boundary values (zero at interior nodes).
    pub fn resolve(&self, grid: &Grid) -> Result<Vec<f64>> {
        if let BoundaryData::Nodal(v) = self {
            if v.len() != grid.len() {
                return Err(Error::Contract(format!(
                    "boundary data has {} values for {} nodes",
                    v.len(),
                    grid.len()
                )));
            }
        }
        let mut out = vec![0.0; grid.len()];
        for (k, slot) in out.iter_mut().enumerate() {
            if !grid.is_boundary(k) {
                continue;
            }
            let g = match self {
                BoundaryData::Constant(c) => *c,
                BoundaryData::Nodal(v) => v[k],
                BoundaryData::Function(f) => f(grid.coords(k)),
            };
            if !g.is_finite() {
                return Err(Error::Contract(format!("boundary value at node {k} is not finite")));
            }
            *slot = g;
        }
        Ok(out)
    }
}

/// Standard `(2N + 1)`-point Laplacian at interior nodes, zero on the boundary.
pub fn discrete_laplacian(u: &ScalarField) -> ScalarField {
    let g = u.grid();
    let inv_h2 = 1.0 / (g.h * g.h);
    let two_n = 2.0 * g.dim as f64;
    let vals = u.values();
    ScalarField::from_fn_indexed(g.clone(), |k| {
        if g.is_boundary(k) {
            return 0.0;
        }
        let sum: f64 = g.neighbors(k).map(|n| vals[n]).sum();
        (sum - two_n * vals[k]) * inv_h2
    })
}

/// Nodal gradient: central differences, second-order one-sided at the edges of
/// the bounding box.
pub fn gradient(u: &ScalarField) -> Vec<Point> {
    let g = u.grid();
    let v = u.values();
    let h = g.h;
    (0..g.len())
        .map(|k| {
            let mut grad = [0.0; 2];
            for (axis, slot) in grad.iter_mut().enumerate().take(g.dim) {
                *slot = match g.axis_neighbors(k, axis) {
                    (Some(a), Some(b)) => (v[b] - v[a]) / (2.0 * h),
                    (None, Some(b)) => {
                        let (_, c) = g.axis_neighbors(b, axis);
                        let c = c.expect("axis has at least three nodes");
                        (-3.0 * v[k] + 4.0 * v[b] - v[c]) / (2.0 * h)
                    }
                    (Some(a), None) => {
                        let (c, _) = g.axis_neighbors(a, axis);
                        let c = c.expect("axis has at least three nodes");
                        (3.0 * v[k] - 4.0 * v[a] + v[c]) / (2.0 * h)
                    }
                    (None, None) => 0.0,
                };
            }
            grad
        })
        .collect()
}

/// `½ Σ_edges (Δu / h)² · weight`, the finite-difference Dirichlet energy whose
/// gradient at interior nodes is `-h^N Δ_h u`.
pub fn dirichlet_energy(u: &ScalarField) -> f64 {
    let g = u.grid();
    let v = u.values();
    let inv_h2 = 1.0 / (g.h * g.h);
    let mut total = 0.0;
    for k in 0..g.len() {
        for axis in 0..g.dim {
            if let (_, Some(up)) = g.axis_neighbors(k, axis) {
                let d = v[up] - v[k];
                total += d * d * inv_h2 * g.edge_weight(k, axis, up);
            }
        }
    }
    0.5 * total
}

/// Sum of nodal values times `h^N` over the nodes in `B_r(center)`.
pub fn ball_integral(field: &ScalarField, center: Point, r: f64) -> Result<f64> {
    let g = field.grid();
    g.require_ball(center, r)?;
    let sum: f64 = g.ball_nodes(center, r).into_iter().map(|k| field.value(k)).sum();
    Ok(sum * g.cell_volume())
}

/// Measure of the unit-radius-scaled sphere `∂B_r` in dimension `dim`.
pub fn sphere_measure(dim: usize, r: f64) -> f64 {
    match dim {
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI * r,
    }
}

/// Shell average of the nodal values times the measure of `∂B_r`.
pub fn sphere_integral(field: &ScalarField, center: Point, r: f64) -> Result<f64> {
    let g = field.grid();
    g.require_ball(center, r)?;
    let shell = g.shell_nodes(center, r);
    if r < 0.5 * g.h || shell.is_empty() {
        return Err(Error::Resolution(format!(
            "shell of radius {r} contains no node (h = {})",
            g.h
        )));
    }
    let mean = shell.iter().map(|&k| field.value(k)).sum::<f64>() / shell.len() as f64;
    Ok(mean * sphere_measure(g.dim, r))
}

/// Largest nodal value in `B_r(center)`.
pub fn sup_over_ball(u: &ScalarField, center: Point, r: f64) -> Result<f64> {
    let g = u.grid();
    g.require_ball(center, r)?;
    g.ball_nodes(center, r)
        .into_iter()
        .map(|k| u.value(k))
        .reduce(f64::max)
        .ok_or_else(|| Error::Resolution(format!("ball of radius {r} contains no node")))
}

/// Largest nodal value on the shell approximating `∂B_r(center)`.
pub fn sup_over_sphere(u: &ScalarField, center: Point, r: f64) -> Result<f64> {
    let g = u.grid();
    g.require_ball(center, r)?;
    g.shell_nodes(center, r)
        .into_iter()
        .map(|k| u.value(k))
        .reduce(f64::max)
        .ok_or_else(|| Error::Resolution(format!("shell of radius {r} contains no node")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn grid(domain: DomainSpec, res: usize) -> Arc<Grid> {
        Arc::new(Grid::new(domain, res).unwrap())
    }

    #[test]
    fn interval_spacing_and_interior() {
        let g = grid(DomainSpec::interval(-1.0, 1.0), 5);
        assert_eq!(g.h(), 0.5);
        let xs: Vec<f64> = g.interior_nodes().iter().map(|&k| g.coords(k)[0]).collect();
        assert_eq!(xs, vec![-0.5, 0.0, 0.5]);
    }

    #[test]
    fn unit_square_resolution_three() {
        let g = grid(DomainSpec::square(0.0, 1.0), 3);
        assert_eq!(g.num_interior(), 1);
        assert_eq!(g.coords(g.interior_nodes()[0]), [0.5, 0.5]);
    }

    #[test]
    fn disc_interior_matches_brute_force_scan() {
        let g = grid(DomainSpec::disc([0.0, 0.0], 1.0), 33);
        let h = 2.0 / 32.0;
        let inside = |x: f64, y: f64| x * x + y * y <= 1.0 + 1e-12;
        let mut expected = 0;
        for j in 0..33 {
            for i in 0..33 {
                let (x, y) = (-1.0 + i as f64 * h, -1.0 + j as f64 * h);
                let stencil = [(x, y), (x + h, y), (x - h, y), (x, y + h), (x, y - h)];
                let in_box = |v: f64| v >= -1.0 - 1e-12 && v <= 1.0 + 1e-12;
                if stencil.iter().all(|&(a, b)| in_box(a) && in_box(b) && inside(a, b)) {
                    expected += 1;
                }
            }
        }
        assert_eq!(g.num_interior(), expected);
        // recorded from the scan above
        assert_eq!(expected, 709);
    }

    #[test]
    fn interior_index_is_a_bijection() {
        let g = grid(DomainSpec::disc([0.2, -0.1], 0.7), 21);
        let mut seen = vec![false; g.num_interior()];
        for k in 0..g.len() {
            match g.interior_index(k) {
                Some(i) => {
                    assert!(!g.is_boundary(k));
                    assert!(!seen[i]);
                    seen[i] = true;
                }
                None => assert!(g.is_boundary(k)),
            }
        }
        assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn too_coarse_is_a_config_error() {
        assert!(matches!(
            Grid::new(DomainSpec::interval(0.0, 1.0), 2),
            Err(Error::Config { .. })
        ));
        assert!(matches!(
            Grid::new(DomainSpec::disc([0.0, 0.0], 1.0), 2),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn laplacian_examples() {
        let g1 = grid(DomainSpec::interval(-1.0, 1.0), 17);
        let c = ScalarField::from_fn(g1.clone(), |_| 3.5);
        assert!(discrete_laplacian(&c).values().iter().all(|v| v.abs() < 1e-12));
        let q = ScalarField::from_fn(g1.clone(), |x| x[0] * x[0]);
        let lap = discrete_laplacian(&q);
        for &k in g1.interior_nodes() {
            assert_abs_diff_eq!(lap.value(k), 2.0, epsilon = 1e-10);
        }
        let g2 = grid(DomainSpec::square(-1.0, 1.0), 17);
        let harm = ScalarField::from_fn(g2.clone(), |x| x[0] * x[0] - x[1] * x[1]);
        for &k in g2.interior_nodes() {
            assert_abs_diff_eq!(discrete_laplacian(&harm).value(k), 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn dirichlet_energy_examples() {
        let g1 = grid(DomainSpec::interval(0.0, 1.0), 9);
        assert_eq!(dirichlet_energy(&ScalarField::zeros(g1.clone())), 0.0);
        let lin = ScalarField::from_fn(g1, |x| x[0]);
        assert_abs_diff_eq!(dirichlet_energy(&lin), 0.5, epsilon = 1e-12);
        let g2 = grid(DomainSpec::square(0.0, 1.0), 11);
        let lin2 = ScalarField::from_fn(g2, |x| x[0] + x[1]);
        assert_abs_diff_eq!(dirichlet_energy(&lin2), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ball_integral_examples() {
        let g1 = grid(DomainSpec::interval(-1.0, 1.0), 201);
        let one = ScalarField::from_fn(g1.clone(), |_| 1.0);
        let v = ball_integral(&one, [0.0, 0.0], 0.5).unwrap();
        assert!((v - 1.0).abs() <= 2.0 * g1.h());

        let g2 = grid(DomainSpec::square(-1.0, 1.0), 201);
        let one = ScalarField::from_fn(g2.clone(), |_| 1.0);
        let v = ball_integral(&one, [0.0, 0.0], 0.5).unwrap();
        assert!((v - PI / 4.0).abs() <= 2.0 * g2.h(), "{v}");

        assert!(matches!(
            ball_integral(&one, [0.8, 0.0], 0.5),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn ball_integral_of_radius_squared_refines_to_reference() {
        // refinement oracle: compare against a run at four times the resolution
        let run = |res| {
            let g = grid(DomainSpec::disc([0.0, 0.0], 1.0), res);
            let f = ScalarField::from_fn(g, |x| x[0] * x[0] + x[1] * x[1]);
            ball_integral(&f, [0.0, 0.0], 1.0).unwrap()
        };
        let coarse = run(101);
        let fine = run(401);
        assert!((coarse - fine).abs() < 0.05, "{coarse} vs {fine}");
        assert!((fine - PI / 2.0).abs() < 0.02, "{fine}");
    }

    #[test]
    fn ball_quadrature_has_first_order_convergence() {
        let errs: Vec<(f64, f64)> = [51usize, 101, 201, 401]
            .iter()
            .map(|&res| {
                let g = grid(DomainSpec::square(-1.0, 1.0), res);
                let one = ScalarField::from_fn(g.clone(), |_| 1.0);
                let v = ball_integral(&one, [0.0, 0.0], 0.5).unwrap();
                (g.h(), (v - PI / 4.0).abs())
            })
            .collect();
        // node-indicator errors oscillate; fit the envelope through a least-squares slope
        let pts: Vec<(f64, f64)> = errs.iter().map(|&(h, e)| (h.ln(), e.max(1e-16).ln())).collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        assert!(slope >= 1.0, "observed order {slope}, errors {errs:?}");
    }

    #[test]
    fn sphere_integral_examples() {
        let g1 = grid(DomainSpec::interval(-1.0, 1.0), 101);
        let one = ScalarField::from_fn(g1.clone(), |_| 1.0);
        for r in [0.1, 0.37, 0.5, 0.9] {
            assert_eq!(sphere_integral(&one, [0.0, 0.0], r).unwrap(), 2.0);
        }
        let g2 = grid(DomainSpec::square(-1.0, 1.0), 201);
        let one = ScalarField::from_fn(g2.clone(), |_| 1.0);
        let v = sphere_integral(&one, [0.0, 0.0], 0.5).unwrap();
        assert!((v - PI).abs() < 1e-12 + 2.0 * g2.h() * PI);
        let odd = ScalarField::from_fn(g2.clone(), |x| x[0]);
        let v = sphere_integral(&odd, [0.0, 0.0], 0.5).unwrap();
        assert!(v.abs() <= 10.0 * g2.h(), "{v}");
        assert!(matches!(
            sphere_integral(&one, [0.0, 0.0], 0.2 * g2.h()),
            Err(Error::Resolution(_))
        ));
    }

    #[test]
    fn sup_examples() {
        let g = grid(DomainSpec::interval(-1.0, 1.0), 9);
        assert_eq!(sup_over_ball(&ScalarField::zeros(g.clone()), [0.0, 0.0], 0.5).unwrap(), 0.0);
        let tent = ScalarField::from_fn(g.clone(), |x| 1.0 - x[0].abs());
        assert_eq!(sup_over_ball(&tent, [0.0, 0.0], 0.5).unwrap(), 1.0);
        let sq = ScalarField::from_fn(g.clone(), |x| x[0] * x[0]);
        assert_eq!(sup_over_ball(&sq, [0.0, 0.0], 0.5).unwrap(), 0.25);
    }

    #[test]
    fn shells_of_an_h_ladder_are_disjoint() {
        let g = grid(DomainSpec::square(-1.0, 1.0), 41);
        let h = g.h();
        let mut seen = std::collections::HashSet::new();
        for k in 1..16 {
            for n in g.shell_nodes([0.0, 0.0], k as f64 * h) {
                assert!(seen.insert(n), "node {n} in two shells");
            }
        }
    }

    #[test]
    fn interpolation_reproduces_bilinear_functions() {
        let g = grid(DomainSpec::square(-1.0, 1.0), 11);
        let f = ScalarField::from_fn(g, |x| 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[0] * x[1]);
        for p in [[0.13, -0.71], [0.99, 0.99], [-1.0, 0.05]] {
            let exact = 1.0 + 2.0 * p[0] - p[1] + 0.5 * p[0] * p[1];
            assert_abs_diff_eq!(f.interpolate(p), exact, epsilon = 1e-12);
        }
    }

    #[test]
    fn gradient_is_exact_for_quadratics_including_edges() {
        let g = grid(DomainSpec::square(-1.0, 1.0), 9);
        let f = ScalarField::from_fn(g.clone(), |x| x[0] * x[0] + 3.0 * x[1] * x[1] - x[0] * x[1]);
        for (k, d) in gradient(&f).into_iter().enumerate() {
            let [x, y] = g.coords(k);
            assert_abs_diff_eq!(d[0], 2.0 * x - y, epsilon = 1e-12);
            assert_abs_diff_eq!(d[1], 6.0 * y - x, epsilon = 1e-12);
        }
    }
}
