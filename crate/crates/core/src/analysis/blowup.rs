use std::sync::Arc;

use serde::Serialize;

use super::rescale;
use crate::energy::positivity_threshold;
use crate::error::{Error, Result};
use crate::geometry::{discrete_laplacian, gradient, Grid, Point, ScalarField};
use crate::par::{self, Strategy};
use crate::source::{growth_exponent, SourceTerm};

#[derive(Debug, Clone, Serialize)]
pub struct BlowupIterate {
    pub r: f64,
    #[serde(skip)]
    pub field: ScalarField,
    /// Sup over unit-ball nodes of `|u_{r_n} - u_{r_{n-1}}|`; `None` for the first iterate.
    pub c0_dist_to_prev: Option<f64>,
    /// Same for the discrete gradients (Euclidean norm).
    pub c1_dist_to_prev: Option<f64>,
    /// Shell mean of `(y·∇u_r - 2 u_r)²` on `∂B_1`.
    pub residual_deg2: f64,
    /// Shell mean of `(y·∇u_r - (2 - N/q) u_r)²` on `∂B_1`.
    pub residual_deg_growth: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlowupReport {
    pub center: Point,
    pub growth_exponent: f64,
    pub iterates: Vec<BlowupIterate>,
    /// Schedule entries skipped because they fall below `2h`.
    pub truncated: Vec<f64>,
}

/// RMS of `-Δ_h u_* - g` over unit-ball nodes where the last iterate is positive,
/// for the rescaled source `g = f_r` and for `g = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SourceResiduals {
    pub against_rescaled_source: f64,
    pub against_one: f64,
    pub nodes: usize,
}

impl BlowupReport {
    pub fn last(&self) -> &BlowupIterate {
        self.iterates.last().expect("a report holds at least three iterates")
    }

    pub fn homogeneity_residual(&self) -> f64 {
        self.last().residual_deg2
    }

    pub fn c0_distances(&self) -> Vec<f64> {
        self.iterates.iter().filter_map(|it| it.c0_dist_to_prev).collect()
    }

    pub fn source_residuals(&self, f: &SourceTerm) -> SourceResiduals {
        let last = self.last();
        let u = &last.field;
        let unit = u.grid();
        let n_over_q = if f.q().is_infinite() {
            0.0
        } else {
            unit.dim() as f64 / f.q()
        };
        let scale = last.r.powf(n_over_q);
        let lap = discrete_laplacian(u);
        let tau = positivity_threshold(u);
        let c = self.center;
        let (mut s_f, mut s_1, mut n) = (0.0, 0.0, 0usize);
        for &k in unit.interior_nodes() {
            let y = unit.coords(k);
            if unit.distance(y, [0.0, 0.0]) > 1.0 || u.value(k) <= tau {
                continue;
            }
            let fr = scale * f.evaluate([c[0] + last.r * y[0], c[1] + last.r * y[1]]);
            let minus_lap = -lap.value(k);
            s_f += (minus_lap - fr).powi(2);
            s_1 += (minus_lap - 1.0).powi(2);
            n += 1;
        }
        let rms = |s: f64| if n == 0 { 0.0 } else { (s / n as f64).sqrt() };
        SourceResiduals {
            against_rescaled_source: rms(s_f),
            against_one: rms(s_1),
            nodes: n,
        }
    }
}

fn homogeneity_residual(u: &ScalarField, grad: &[Point], degree: f64) -> Result<f64> {
    let g = u.grid();
    let shell = g.shell_nodes([0.0, 0.0], 1.0);
    if shell.is_empty() {
        return Err(Error::Resolution("unit sphere shell contains no node".into()));
    }
    let sum: f64 = shell
        .iter()
        .map(|&k| {
            let y = g.coords(k);
            let radial = y[0] * grad[k][0] + y[1] * grad[k][1];
            (radial - degree * u.value(k)).powi(2)
        })
        .sum();
    Ok(sum / shell.len() as f64)
}

pub fn blowup_sequence(
    u: &ScalarField,
    q: f64,
    center: Point,
    schedule: &[f64],
    unit: &Arc<Grid>,
) -> Result<BlowupReport> {
    blowup_sequence_with(Strategy::Auto, u, q, center, schedule, unit)
}

/// Rescalings `u_{r_n}` for a strictly decreasing schedule. The sequence stops
/// at the first radius below `2h`; at least three iterates are required.
pub fn blowup_sequence_with(
    strategy: Strategy,
    u: &ScalarField,
    q: f64,
    center: Point,
    schedule: &[f64],
    unit: &Arc<Grid>,
) -> Result<BlowupReport> {
    let dim = u.grid().dim();
    let beta = growth_exponent(q, dim)?;
    if schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Contract("blow-up schedule must be strictly decreasing".into()));
    }
    let two_h = 2.0 * u.grid().h();
    let cut = schedule.iter().position(|&r| r < two_h).unwrap_or(schedule.len());
    let (usable, truncated) = schedule.split_at(cut);
    if usable.len() < 3 {
        return Err(Error::Resolution(format!(
            "only {} schedule radii are at least 2h = {two_h}, need 3",
            usable.len()
        )));
    }

    let in_ball: Vec<usize> = unit.ball_nodes([0.0, 0.0], 1.0);
    let computed = par::map(strategy, usable, |&r| -> Result<(ScalarField, Vec<Point>, f64, f64)> {
        let field = rescale(u, center, r, q, unit)?;
        let grad = gradient(&field);
        let d2 = homogeneity_residual(&field, &grad, 2.0)?;
        let db = homogeneity_residual(&field, &grad, beta)?;
        Ok((field, grad, d2, db))
    });

    let mut iterates: Vec<BlowupIterate> = Vec::with_capacity(usable.len());
    let mut prev_grad: Option<Vec<Point>> = None;
    for (&r, item) in usable.iter().zip(computed) {
        let (field, grad, residual_deg2, residual_deg_growth) = item?;
        let (c0, c1) = match (iterates.last(), &prev_grad) {
            (Some(prev), Some(pg)) => {
                let c0 = in_ball
                    .iter()
                    .map(|&k| (field.value(k) - prev.field.value(k)).abs())
                    .fold(0.0, f64::max);
                let c1 = in_ball
                    .iter()
                    .map(|&k| (grad[k][0] - pg[k][0]).hypot(grad[k][1] - pg[k][1]))
                    .fold(0.0, f64::max);
                (Some(c0), Some(c1))
            }
            _ => (None, None),
        };
        iterates.push(BlowupIterate {
            r,
            field,
            c0_dist_to_prev: c0,
            c1_dist_to_prev: c1,
            residual_deg2,
            residual_deg_growth,
        });
        prev_grad = Some(grad);
    }
    Ok(BlowupReport {
        center,
        growth_exponent: beta,
        iterates,
        truncated: truncated.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::unit_grid;
    use crate::geometry::DomainSpec;
    use approx::assert_abs_diff_eq;

    fn interval(res: usize) -> Arc<Grid> {
        Arc::new(Grid::new(DomainSpec::interval(-1.0, 1.0), res).unwrap())
    }

    fn schedule(r0: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| r0 * 0.5f64.powi(k as i32)).collect()
    }

    #[test]
    fn half_parabola_is_a_fixed_point() {
        // unit spacing 1/16 keeps every r_n·y on the mesh
        let g = interval(1025);
        let u = ScalarField::from_fn(g, |x| x[0].max(0.0).powi(2));
        let unit = unit_grid(1, 33).unwrap();
        let rep = blowup_sequence(&u, f64::INFINITY, [0.0, 0.0], &schedule(0.5, 5), &unit).unwrap();
        for d in rep.c0_distances() {
            assert!(d < 1e-12);
        }
        // one-sided differences are exact on quadratics
        assert!(rep.homogeneity_residual() < 1e-20);
    }

    #[test]
    fn power_law_matches_its_own_degree_only() {
        // 2 - 1/q = 1.5 for q = 2 in one dimension
        let g = interval(1025);
        let u = ScalarField::from_fn(g, |x| x[0].abs().powf(1.5));
        let unit = unit_grid(1, 33).unwrap();
        let rep = blowup_sequence(&u, 2.0, [0.0, 0.0], &schedule(0.5, 4), &unit).unwrap();
        assert_abs_diff_eq!(rep.growth_exponent, 1.5);
        for d in rep.c0_distances() {
            assert!(d < 1e-12);
        }
        let last = rep.last();
        assert!(last.residual_deg_growth < 1e-3);
        // y·∇u - 2u = -0.5 |y|^1.5 at |y| = 1
        assert!(last.residual_deg2 > 0.2);
    }

    #[test]
    fn schedule_is_truncated_at_two_h() {
        let g = interval(65);
        let u = ScalarField::zeros(g.clone());
        let unit = unit_grid(1, 33).unwrap();
        let rep = blowup_sequence(&u, f64::INFINITY, [0.0, 0.0], &schedule(0.4, 8), &unit).unwrap();
        assert!(rep.iterates.iter().all(|it| it.r >= 2.0 * g.h()));
        assert!(!rep.truncated.is_empty());
        assert!(matches!(
            blowup_sequence(&u, f64::INFINITY, [0.0, 0.0], &[0.05, 0.04, 0.03], &unit),
            Err(Error::Resolution(_))
        ));
        assert!(matches!(
            blowup_sequence(&u, f64::INFINITY, [0.0, 0.0], &[0.2, 0.3, 0.1], &unit),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn source_residuals_of_exact_profile() {
        let g = interval(1025);
        let u = ScalarField::from_fn(g, |x| x[0].max(0.0).powi(2));
        let unit = unit_grid(1, 33).unwrap();
        let rep = blowup_sequence(&u, f64::INFINITY, [0.0, 0.0], &schedule(0.5, 4), &unit).unwrap();
        let res = rep.source_residuals(&SourceTerm::constant(-2.0, 1));
        assert!(res.nodes > 0);
        assert!(res.against_rescaled_source < 1e-9);
        assert_abs_diff_eq!(res.against_one, 3.0, epsilon = 1e-9);
    }

    #[test]
    fn strategies_agree() {
        let g = Arc::new(Grid::new(DomainSpec::square(-1.0, 1.0), 129).unwrap());
        let u = ScalarField::from_fn(g, |x| (x[0] + 0.1 * x[1]).max(0.0).powi(2));
        let unit = unit_grid(2, 33).unwrap();
        let a = blowup_sequence_with(Strategy::Auto, &u, f64::INFINITY, [0.0, 0.0], &schedule(0.5, 3), &unit)
            .unwrap();
        let b = blowup_sequence_with(Strategy::Sequential, &u, f64::INFINITY, [0.0, 0.0], &schedule(0.5, 3), &unit)
            .unwrap();
        for (x, y) in a.iterates.iter().zip(&b.iterates) {
            assert_eq!(x.field.values(), y.field.values());
            assert_eq!(x.c0_dist_to_prev, y.c0_dist_to_prev);
        }
    }
}
