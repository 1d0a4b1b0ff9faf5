//! Nonnegative energy minimizer with Dirichlet data.
//!
//! The discrete problem is the symmetric linear complementarity system
//!
//! ```text
//! u >= 0,   w = -Δ_h u - f >= 0,   u · w = 0     (interior nodes)
//! u = g                                          (boundary nodes)
//! ```
//!
//! solved by projected Gauss–Seidel / SOR sweeps. Every sweep lowers the
//! discrete energy or leaves it unchanged. An exhaustive active-set oracle is
//! provided for grids with at most [`ORACLE_MAX_INTERIOR`] interior nodes.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::positivity_threshold;
use crate::error::{Error, Result};
use crate::geometry::{dirichlet_energy, BoundaryData, Grid, ScalarField};
use crate::par::{self, Strategy};
use crate::source::SourceTerm;

pub const ORACLE_MAX_INTERIOR: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    ProjectedGaussSeidel,
    ProjectedSor { omega: f64 },
}

impl Method {
    fn omega(self) -> f64 {
        match self {
            Method::ProjectedGaussSeidel => 1.0,
            Method::ProjectedSor { omega } => omega,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub method: Method,
    /// Defaults to `200 ×` the node count of the first axis.
    pub max_iters: Option<usize>,
    /// KKT residual target in units of `f`. Defaults to `10⁻¹⁰ · max(1, max|f|)`,
    /// raised to a small multiple of the rounding floor `ε · max(1, max g) / h²`
    /// on fine meshes.
    pub tol_residual: Option<f64>,
    pub tol_uniqueness: f64,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            method: Method::ProjectedSor { omega: 1.5 },
            max_iters: None,
            tol_residual: None,
            tol_uniqueness: 1e-8,
            seed: 0,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        let omega = self.method.omega();
        if !(omega > 0.0 && omega < 2.0) {
            return Err(crate::error::config_err(
                "solver.omega",
                format!("omega = {omega} must lie in (0, 2)"),
            ));
        }
        if let Some(t) = self.tol_residual {
            if !(t > 0.0) {
                return Err(crate::error::config_err("solver.tol_residual", "must be positive"));
            }
        }
        if !(self.tol_uniqueness > 0.0) {
            return Err(crate::error::config_err("solver.tol_uniqueness", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub u: ScalarField,
    /// Number of sweeps performed.
    pub iterations: usize,
    pub final_kkt_residual: f64,
    /// `I(u)` before the first sweep and after every sweep.
    pub energy_trace: Vec<f64>,
    /// KKT residual aligned with `energy_trace`.
    pub kkt_trace: Vec<f64>,
    pub converged: bool,
}

/// Grid, source and boundary data resolved to nodal arrays.
struct Problem {
    grid: Arc<Grid>,
    f: Vec<f64>,
    g: Vec<f64>,
    weights: Vec<f64>,
    stencils: Vec<(usize, [usize; 4])>,
}

impl Problem {
    fn new(grid: &Arc<Grid>, f: &SourceTerm, boundary: &BoundaryData) -> Result<Self> {
        if f.dim() != grid.dim() {
            return Err(Error::Contract(format!(
                "source of dimension {} on a grid of dimension {}",
                f.dim(),
                grid.dim()
            )));
        }
        let g = boundary.resolve(grid)?;
        if let Some(k) = (0..grid.len()).find(|&k| grid.is_boundary(k) && g[k] < 0.0) {
            return Err(Error::Admissibility(format!(
                "boundary value {} < 0 at node {k}; the admissible set requires g >= 0",
                g[k]
            )));
        }
        let stencils = grid
            .interior_nodes()
            .iter()
            .map(|&k| {
                let mut nb = [k; 4];
                for (slot, n) in nb.iter_mut().zip(grid.neighbors(k)) {
                    *slot = n;
                }
                (k, nb)
            })
            .collect();
        Ok(Problem {
            f: f.sample(grid),
            weights: (0..grid.len()).map(|k| grid.node_weight(k)).collect(),
            grid: grid.clone(),
            g,
            stencils,
        })
    }

    fn two_n(&self) -> usize {
        2 * self.grid.dim()
    }

    fn scale(&self) -> f64 {
        self.f.iter().fold(1.0f64, |m, v| m.max(v.abs()))
    }

    fn default_tol(&self) -> f64 {
        let h2 = self.grid.h() * self.grid.h();
        let top = self.g.iter().fold(1.0f64, |m, v| m.max(*v));
        let floor = 16.0 * f64::EPSILON * self.two_n() as f64 * top / h2;
        (1e-10 * self.scale()).max(floor)
    }

    fn energy(&self, u: &[f64]) -> f64 {
        let field = ScalarField::new(self.grid.clone(), u.to_vec()).expect("finite iterate");
        let source: f64 = u
            .iter()
            .zip(&self.f)
            .zip(&self.weights)
            .map(|((u, f), w)| f * u.max(0.0) * w)
            .sum();
        dirichlet_energy(&field) - source
    }

    fn residual_at(&self, u: &[f64], k: usize, nb: &[usize; 4]) -> f64 {
        let h2 = self.grid.h() * self.grid.h();
        let m = self.two_n();
        let sum: f64 = nb[..m].iter().map(|&n| u[n]).sum();
        (m as f64 * u[k] - sum) / h2 - self.f[k]
    }

    /// Largest violation of the complementarity conditions.
    fn kkt_residual(&self, u: &[f64]) -> f64 {
        let tau = 1e-12 * u.iter().fold(1.0f64, |m, v| m.max(*v));
        self.stencils
            .iter()
            .map(|(k, nb)| {
                let r = self.residual_at(u, *k, nb);
                if u[*k] > tau {
                    r.abs()
                } else {
                    (-r).max(0.0)
                }
            })
            .fold(0.0, f64::max)
    }

    fn sweep(&self, u: &mut [f64], omega: f64) {
        let h2 = self.grid.h() * self.grid.h();
        let m = self.two_n();
        let inv = 1.0 / m as f64;
        for (k, nb) in &self.stencils {
            let sum: f64 = nb[..m].iter().map(|&n| u[n]).sum();
            let gs = (sum + h2 * self.f[*k]) * inv;
            let next = u[*k] + omega * (gs - u[*k]);
            u[*k] = next.max(0.0);
        }
    }

    fn initial(&self, init: Option<&ScalarField>) -> Result<Vec<f64>> {
        let mut u = match init {
            Some(field) => {
                if field.grid().len() != self.grid.len() {
                    return Err(Error::Contract("initial guess on a different grid".into()));
                }
                field.values().iter().map(|v| v.max(0.0)).collect()
            }
            None => vec![0.0; self.grid.len()],
        };
        for k in 0..self.grid.len() {
            if self.grid.is_boundary(k) {
                u[k] = self.g[k];
            }
        }
        Ok(u)
    }
}

/// Minimizes `I` over nonnegative fields with trace `boundary`, starting from zero.
pub fn solve(
    grid: &Arc<Grid>,
    f: &SourceTerm,
    boundary: &BoundaryData,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    solve_from(grid, f, boundary, opts, None)
}

/// As [`solve`], from `init` (projected onto `u >= 0` and corrected on the boundary).
pub fn solve_from(
    grid: &Arc<Grid>,
    f: &SourceTerm,
    boundary: &BoundaryData,
    opts: &SolveOptions,
    init: Option<&ScalarField>,
) -> Result<SolveReport> {
    opts.validate()?;
    let problem = Problem::new(grid, f, boundary)?;
    let tol = opts.tol_residual.unwrap_or_else(|| problem.default_tol());
    let max_iters = opts.max_iters.unwrap_or(200 * grid.counts()[0]);
    let omega = opts.method.omega();

    let mut u = problem.initial(init)?;
    let mut energy_trace = vec![problem.energy(&u)];
    let mut kkt = problem.kkt_residual(&u);
    let mut kkt_trace = vec![kkt];
    let mut iterations = 0;
    while kkt > tol && iterations < max_iters {
        problem.sweep(&mut u, omega);
        iterations += 1;
        kkt = problem.kkt_residual(&u);
        energy_trace.push(problem.energy(&u));
        kkt_trace.push(kkt);
    }
    Ok(SolveReport {
        u: ScalarField::new(grid.clone(), u)?,
        iterations,
        final_kkt_residual: kkt,
        energy_trace,
        kkt_trace,
        converged: kkt <= tol,
    })
}

/// Largest violation of the discrete complementarity conditions by `u`, in
/// the units of `f`. Zero-set nodes use the threshold of
/// [`positivity_threshold`].
pub fn kkt_residual(u: &ScalarField, f: &SourceTerm) -> f64 {
    let g = u.grid();
    let tau = positivity_threshold(u);
    let lap = crate::geometry::discrete_laplacian(u);
    g.interior_nodes()
        .iter()
        .map(|&k| {
            let r = -lap.value(k) - f.evaluate(g.coords(k));
            if u.value(k) > tau {
                r.abs()
            } else {
                (-r).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// Random nonnegative starting field, uniform in `[0, max(g) + 1]` at every node.
pub fn random_initial_guess(grid: &Arc<Grid>, boundary: &BoundaryData, seed: u64) -> Result<ScalarField> {
    let g = boundary.resolve(grid)?;
    let top = g.iter().fold(0.0f64, |m, v| m.max(*v)) + 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..grid.len()).map(|_| rng.gen_range(0.0..top)).collect();
    ScalarField::new(grid.clone(), values)
}

/// Solves from `trials` random initializations and returns the largest
/// pairwise sup-norm distance between the solutions.
pub fn verify_uniqueness(
    grid: &Arc<Grid>,
    f: &SourceTerm,
    boundary: &BoundaryData,
    opts: &SolveOptions,
    trials: usize,
) -> Result<f64> {
    verify_uniqueness_with(grid, f, boundary, opts, trials, Strategy::Auto)
}

pub fn verify_uniqueness_with(
    grid: &Arc<Grid>,
    f: &SourceTerm,
    boundary: &BoundaryData,
    opts: &SolveOptions,
    trials: usize,
    strategy: Strategy,
) -> Result<f64> {
    if trials < 2 {
        return Err(Error::Contract(format!("need at least 2 trials, got {trials}")));
    }
    let runs = par::map_range(strategy, trials, |t| -> Result<SolveReport> {
        let init = random_initial_guess(grid, boundary, opts.seed.wrapping_add(t as u64))?;
        solve_from(grid, f, boundary, opts, Some(&init))
    });
    let mut fields = Vec::with_capacity(trials);
    for (t, run) in runs.into_iter().enumerate() {
        let report = run?;
        if !report.converged {
            return Err(Error::Inconclusive(format!(
                "trial {t} stopped after {} sweeps with kkt residual {:e}",
                report.iterations, report.final_kkt_residual
            )));
        }
        fields.push(report.u);
    }
    let mut worst = 0.0f64;
    for i in 0..fields.len() {
        for j in i + 1..fields.len() {
            worst = worst.max(fields[i].sup_distance(&fields[j]));
        }
    }
    Ok(worst)
}

/// Exact discrete minimizer by enumerating every active set.
pub fn exact_small_oracle(
    grid: &Arc<Grid>,
    f: &SourceTerm,
    boundary: &BoundaryData,
) -> Result<ScalarField> {
    exact_small_oracle_with(grid, f, boundary, Strategy::Auto)
}

pub fn exact_small_oracle_with(
    grid: &Arc<Grid>,
    f: &SourceTerm,
    boundary: &BoundaryData,
    strategy: Strategy,
) -> Result<ScalarField> {
    let n = grid.num_interior();
    if n > ORACLE_MAX_INTERIOR {
        return Err(Error::Contract(format!(
            "oracle enumerates 2^k active sets and needs k <= {ORACLE_MAX_INTERIOR}, got {n}"
        )));
    }
    let problem = Problem::new(grid, f, boundary)?;
    let h2 = grid.h() * grid.h();
    let two_n = problem.two_n() as f64;
    let nodes = grid.interior_nodes();
    let tol_r = 1e-9 * problem.scale();

    let candidates = par::map_range(strategy, 1usize << n, |mask| -> Option<(f64, Vec<f64>)> {
        let free: Vec<usize> = (0..n).filter(|i| mask & (1 << i) == 0).collect();
        let mut u = problem.g.clone();
        for &k in nodes {
            u[k] = 0.0;
        }
        if !free.is_empty() {
            let m = free.len();
            let mut a = DMatrix::<f64>::zeros(m, m);
            let mut b = DVector::<f64>::zeros(m);
            for (row, &i) in free.iter().enumerate() {
                let k = nodes[i];
                a[(row, row)] = two_n / h2;
                b[row] = problem.f[k];
                for nb in grid.neighbors(k) {
                    match grid.interior_index(nb) {
                        Some(j) => {
                            if let Some(col) = free.iter().position(|&x| x == j) {
                                a[(row, col)] -= 1.0 / h2;
                            }
                        }
                        None => b[row] += problem.g[nb] / h2,
                    }
                }
            }
            let x = a.lu().solve(&b)?;
            for (row, &i) in free.iter().enumerate() {
                u[nodes[i]] = x[row];
            }
        }
        let tol_u = 1e-12 * u.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let feasible = problem.stencils.iter().enumerate().all(|(i, (k, nb))| {
            if mask & (1 << i) == 0 {
                u[*k] >= -tol_u
            } else {
                problem.residual_at(&u, *k, nb) >= -tol_r
            }
        });
        if !feasible {
            return None;
        }
        for &k in nodes {
            u[k] = u[k].max(0.0);
        }
        Some((problem.energy(&u), u))
    });

    let best = candidates
        .into_iter()
        .flatten()
        .reduce(|a, b| if b.0 < a.0 { b } else { a })
        .ok_or_else(|| Error::Invariant("no feasible active set for nonnegative boundary data".into()))?;
    ScalarField::new(grid.clone(), best.1)
}
