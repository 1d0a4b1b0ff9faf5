use std::sync::Arc;

use serde::Serialize;

use super::rescale;
use crate::error::{Error, Result};
use crate::geometry::{ball_integral, gradient, sphere_integral, Grid, Point, ScalarField};
use crate::par::{self, Strategy};
use crate::source::{growth_exponent, SourceTerm};

/// One evaluation of `W = dirichlet - source - boundary`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeissComponents {
    pub dirichlet: f64,
    pub source: f64,
    pub boundary: f64,
    pub total: f64,
}

impl WeissComponents {
    fn new(dirichlet: f64, source: f64, boundary: f64) -> Self {
        WeissComponents {
            dirichlet,
            source,
            boundary,
            total: dirichlet - source - boundary,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WeissProfile {
    pub center: Point,
    pub radii: Vec<f64>,
    /// `∫_{B_1} ½|∇u_r|² - ∫_{B_1} f_r u_r - ∫_{∂B_1} u_r²` on the unit grid.
    pub rescaled: Vec<WeissComponents>,
    /// Direct integrals over `B_r` and `∂B_r` with the prefactors
    /// `r^-(N+6-2N/q)`, `r^-(N+2-N/q)` and `r^-(N+3-2N/q)`.
    pub raw: Vec<WeissComponents>,
    /// `W(r_{i+1}) - W(r_i)` of the rescaled form.
    pub delta: Vec<f64>,
    pub tol_mono: f64,
    /// `(r_{i+1}, ΔW)` with `ΔW < -tol_mono`.
    pub monotonicity_violations: Vec<(f64, f64)>,
    /// Requested radii that were too small for the mesh.
    pub dropped: Vec<f64>,
}

impl WeissProfile {
    pub fn is_monotone(&self) -> bool {
        self.monotonicity_violations.is_empty()
    }

    /// Largest minus smallest rescaled value.
    pub fn spread(&self) -> f64 {
        let (lo, hi) = self
            .rescaled
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
                (lo.min(c.total), hi.max(c.total))
            });
        hi - lo
    }

    /// Most negative increment (zero when the ladder never decreases).
    pub fn min_delta(&self) -> f64 {
        self.delta.iter().copied().fold(0.0, f64::min)
    }
}

pub fn weiss_profile(
    u: &ScalarField,
    f: &SourceTerm,
    center: Point,
    radii: &[f64],
    unit: &Arc<Grid>,
    tol_mono_factor: f64,
) -> Result<WeissProfile> {
    weiss_profile_with(Strategy::Auto, u, f, center, radii, unit, tol_mono_factor)
}

/// Weiss ladder around `center`. Rungs are evaluated independently; rungs
/// below `2h` are dropped and at least five must remain. `tol_mono` is
/// `tol_mono_factor · h`.
pub fn weiss_profile_with(
    strategy: Strategy,
    u: &ScalarField,
    f: &SourceTerm,
    center: Point,
    radii: &[f64],
    unit: &Arc<Grid>,
    tol_mono_factor: f64,
) -> Result<WeissProfile> {
    let g = u.grid();
    let dim = g.dim();
    let q = f.q();
    growth_exponent(q, dim)?;
    if f.dim() != dim {
        return Err(Error::Contract("source and solution dimensions differ".into()));
    }
    if radii.len() < 5 {
        return Err(Error::Contract(format!("{} rungs given, need at least 5", radii.len())));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Contract("radii must be strictly increasing".into()));
    }
    for &r in radii {
        if !g.contains_ball(center, r) {
            return Err(Error::Domain(format!(
                "ball of radius {r} around {center:?} is not contained in the domain"
            )));
        }
    }

    let n_over_q = if q.is_infinite() { 0.0 } else { dim as f64 / q };
    let grad_u = gradient(u);
    let half_grad_sq = ScalarField::from_fn_indexed(g.clone(), |k| {
        let d = grad_u[k];
        0.5 * (d[0] * d[0] + d[1] * d[1])
    });
    let fu = ScalarField::from_fn_indexed(g.clone(), |k| f.evaluate(g.coords(k)) * u.value(k));
    let u_sq = u.map(|v| v * v);

    let rungs = par::map(strategy, radii, |&r| -> Result<Option<(WeissComponents, WeissComponents)>> {
        let ur = match rescale(u, center, r, q, unit) {
            Ok(ur) => ur,
            Err(Error::Resolution(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        let grad = gradient(&ur);
        let fr_scale = r.powf(n_over_q);
        let dir = ScalarField::from_fn_indexed(unit.clone(), |k| {
            let d = grad[k];
            0.5 * (d[0] * d[0] + d[1] * d[1])
        });
        let src = ScalarField::from_fn_indexed(unit.clone(), |k| {
            let y = unit.coords(k);
            fr_scale * f.evaluate([center[0] + r * y[0], center[1] + r * y[1]]) * ur.value(k)
        });
        let origin = [0.0, 0.0];
        let rescaled = WeissComponents::new(
            ball_integral(&dir, origin, 1.0)?,
            ball_integral(&src, origin, 1.0)?,
            sphere_integral(&ur.map(|v| v * v), origin, 1.0)?,
        );
        let nf = dim as f64;
        let raw = WeissComponents::new(
            r.powf(-(nf + 6.0 - 2.0 * n_over_q)) * ball_integral(&half_grad_sq, center, r)?,
            r.powf(-(nf + 2.0 - n_over_q)) * ball_integral(&fu, center, r)?,
            r.powf(-(nf + 3.0 - 2.0 * n_over_q)) * sphere_integral(&u_sq, center, r)?,
        );
        Ok(Some((rescaled, raw)))
    });

    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    let mut rescaled = Vec::new();
    let mut raw = Vec::new();
    for (&r, rung) in radii.iter().zip(rungs) {
        match rung? {
            Some((a, b)) => {
                kept.push(r);
                rescaled.push(a);
                raw.push(b);
            }
            None => dropped.push(r),
        }
    }
    if kept.len() < 5 {
        return Err(Error::InsufficientData(format!(
            "{} usable rungs after dropping radii below 2h, need 5",
            kept.len()
        )));
    }
    let tol_mono = tol_mono_factor * g.h();
    let delta: Vec<f64> = rescaled.windows(2).map(|w| w[1].total - w[0].total).collect();
    let monotonicity_violations = kept[1..]
        .iter()
        .zip(&delta)
        .filter(|(_, d)| **d < -tol_mono)
        .map(|(r, d)| (*r, *d))
        .collect();
    Ok(WeissProfile {
        center,
        radii: kept,
        rescaled,
        raw,
        delta,
        tol_mono,
        monotonicity_violations,
        dropped,
    })
}
