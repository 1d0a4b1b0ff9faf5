use serde::Serialize;

use super::free_boundary::extract_free_boundary;
use crate::error::{Error, Result};
use crate::geometry::{discrete_laplacian, sup_over_ball, sup_over_sphere, Point, ScalarField};
use crate::source::growth_exponent;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckSide {
    /// `sup_{B_r} u <= C r^{2-N/q}`: the measured slope must not fall below the prediction.
    UpperBound,
    /// `sup_{∂B_r} u >= (c0 / 2N) r^{2-N/q}` at every rung.
    LowerBound,
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub center: Point,
    pub radii: Vec<f64>,
    pub sup_values: Vec<f64>,
    pub fitted_slope: f64,
    pub predicted: f64,
    pub side: CheckSide,
    /// Per-rung lower bound `(c0 / 2N) r^{2-N/q}`; empty for upper-bound checks.
    pub lower_bounds: Vec<f64>,
}

impl GrowthReport {
    pub fn slope_at_least(&self, slack: f64) -> bool {
        self.fitted_slope >= self.predicted - slack
    }

    pub fn slope_within(&self, below: f64, above: f64) -> bool {
        self.fitted_slope >= self.predicted - below && self.fitted_slope <= self.predicted + above
    }

    /// Rungs `(r, sup / bound)` with `sup < bound · (1 - slack)`.
    pub fn violations(&self, slack: f64) -> Vec<(f64, f64)> {
        self.radii
            .iter()
            .zip(&self.sup_values)
            .zip(&self.lower_bounds)
            .filter(|((_, s), b)| **s < **b * (1.0 - slack))
            .map(|((r, s), b)| (*r, s / b))
            .collect()
    }

    /// Smallest `sup / bound` over the ladder (lower-bound checks only).
    pub fn min_ratio(&self) -> Option<f64> {
        self.sup_values
            .iter()
            .zip(&self.lower_bounds)
            .map(|(s, b)| s / b)
            .reduce(f64::min)
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn fit_loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn check_ladder(radii: &[f64]) -> Result<()> {
    if radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::Contract("radii must be positive".into()));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Contract("radii must be strictly increasing".into()));
    }
    Ok(())
}

fn check_near_free_boundary(u: &ScalarField, x0: Point) -> Result<()> {
    let fb = extract_free_boundary(u);
    let d = fb.distance_to(u, x0);
    if d > u.grid().h() * (1.0 + 1e-9) {
        return Err(Error::Contract(format!(
            "centre {x0:?} is {d} away from the free boundary (h = {})",
            u.grid().h()
        )));
    }
    Ok(())
}

fn fit_positive(radii: &[f64], sups: &[f64]) -> Result<f64> {
    let (rs, ss): (Vec<f64>, Vec<f64>) = radii
        .iter()
        .zip(sups)
        .filter(|(_, s)| **s > 0.0)
        .map(|(r, s)| (*r, *s))
        .unzip();
    if rs.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "only {} rungs with positive sup, need 4",
            rs.len()
        )));
    }
    Ok(fit_loglog_slope(&rs, &ss))
}

/// Fits `log sup_{B_r(x0)} u` against `log r`. Rungs where the sup vanishes are
/// dropped; at least four must remain.
pub fn growth_upper_check(u: &ScalarField, x0: Point, radii: &[f64], q: f64) -> Result<GrowthReport> {
    let dim = u.grid().dim();
    let predicted = growth_exponent(q, dim)?;
    check_ladder(radii)?;
    check_near_free_boundary(u, x0)?;
    let mut kept_r = Vec::new();
    let mut kept_s = Vec::new();
    for &r in radii {
        let s = sup_over_ball(u, x0, r)?;
        if s > 0.0 {
            kept_r.push(r);
            kept_s.push(s);
        }
    }
    let fitted_slope = fit_positive(&kept_r, &kept_s)?;
    Ok(GrowthReport {
        center: x0,
        radii: kept_r,
        sup_values: kept_s,
        fitted_slope,
        predicted,
        side: CheckSide::UpperBound,
        lower_bounds: Vec::new(),
    })
}

/// Compares `sup_{∂B_r(x1)} u` with `(c0 / 2N) r^{2-N/q}` on every rung.
pub fn nondegeneracy_check(
    u: &ScalarField,
    x1: Point,
    radii: &[f64],
    c0: f64,
    q: f64,
) -> Result<GrowthReport> {
    let dim = u.grid().dim();
    let predicted = growth_exponent(q, dim)?;
    if !(c0 > 0.0) {
        return Err(Error::Contract(format!("c0 = {c0} must be positive")));
    }
    check_ladder(radii)?;
    check_near_free_boundary(u, x1)?;
    let sup_values = radii
        .iter()
        .map(|&r| sup_over_sphere(u, x1, r))
        .collect::<Result<Vec<_>>>()?;
    let fitted_slope = fit_positive(radii, &sup_values)?;
    let lower_bounds = radii
        .iter()
        .map(|r| c0 / (2.0 * dim as f64) * r.powf(predicted))
        .collect();
    Ok(GrowthReport {
        center: x1,
        radii: radii.to_vec(),
        sup_values,
        fitted_slope,
        predicted,
        side: CheckSide::LowerBound,
        lower_bounds,
    })
}

#[derive(Debug, Clone)]
pub struct BarrierReport {
    /// `v = u - (c0 / 2N) |x - x'|^{2-N/q}`.
    pub v: ScalarField,
    /// Interior nodes of `{u > τ}` examined.
    pub positive_nodes: usize,
    /// Fraction of those with `Δ_h v <= tol`, i.e. `-Δ_h v >= -tol`.
    pub superharmonic_fraction: f64,
    /// Fraction of those with `Δ_h v >= -tol`.
    pub subharmonic_fraction: f64,
    pub tol: f64,
}

pub fn barrier_field(u: &ScalarField, x_prime: Point, c0: f64, q: f64) -> Result<BarrierReport> {
    let g = u.grid();
    let dim = g.dim();
    let beta = growth_exponent(q, dim)?;
    let coef = c0 / (2.0 * dim as f64);
    let v = ScalarField::from_fn_indexed(g.clone(), |k| {
        u.value(k) - coef * g.distance(g.coords(k), x_prime).powf(beta)
    });
    let lap = discrete_laplacian(&v);
    let tau = crate::energy::positivity_threshold(u);
    let positive: Vec<usize> = g
        .interior_nodes()
        .iter()
        .copied()
        .filter(|&k| u.value(k) > tau)
        .collect();
    let lap_u = discrete_laplacian(u);
    let scale = positive.iter().fold(1.0f64, |m, &k| m.max(lap_u.value(k).abs()));
    let tol = 1e-8 * scale.max(c0);
    let n = positive.len();
    let frac = |pred: &dyn Fn(f64) -> bool| {
        if n == 0 {
            1.0
        } else {
            positive.iter().filter(|&&k| pred(lap.value(k))).count() as f64 / n as f64
        }
    };
    Ok(BarrierReport {
        superharmonic_fraction: frac(&|l| l <= tol),
        subharmonic_fraction: frac(&|l| l >= -tol),
        positive_nodes: n,
        v,
        tol,
    })
}
