//! Post-processing of discrete solutions: free boundary extraction, growth and
//! nondegeneracy ladders, the Weiss energy and blow-up sequences.
//!
//! Rescalings are resampled onto a fixed unit grid `[-1, 1]^N` so that
//! successive rungs can be compared node by node.

mod blowup;
mod free_boundary;
mod growth;
mod weiss;

use std::sync::Arc;

pub use blowup::{blowup_sequence, blowup_sequence_with, BlowupIterate, BlowupReport, SourceResiduals};
pub use free_boundary::{extract_free_boundary, FreeBoundary};
pub use growth::{
    barrier_field, fit_loglog_slope, growth_upper_check, nondegeneracy_check, BarrierReport,
    CheckSide, GrowthReport,
};
pub use weiss::{weiss_profile, weiss_profile_with, WeissComponents, WeissProfile};

use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, Grid, Point, ScalarField};
use crate::source::growth_exponent;

/// Rectangle grid on `[-1, 1]^dim` with `resolution` nodes per axis.
pub fn unit_grid(dim: usize, resolution: usize) -> Result<Arc<Grid>> {
    let domain = match dim {
        1 => DomainSpec::interval(-1.0, 1.0),
        2 => DomainSpec::square(-1.0, 1.0),
        _ => return Err(Error::Domain(format!("dimension {dim} is not supported"))),
    };
    Ok(Arc::new(Grid::new(domain, resolution)?))
}

/// `u_r(y) = u(x0 + r y) / r^{2 - N/q}` sampled on `unit` by multilinear
/// interpolation of `u`.
pub fn rescale(u: &ScalarField, x0: Point, r: f64, q: f64, unit: &Arc<Grid>) -> Result<ScalarField> {
    let g = u.grid();
    let dim = g.dim();
    if unit.dim() != dim {
        return Err(Error::Contract("unit grid dimension differs from the solution".into()));
    }
    let beta = growth_exponent(q, dim)?;
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::Contract(format!("rescaling radius {r} must lie in (0, 1]")));
    }
    if r < 2.0 * g.h() {
        return Err(Error::Resolution(format!(
            "rescaling radius {r} is below 2h = {}",
            2.0 * g.h()
        )));
    }
    if !g.contains_ball(x0, r) {
        return Err(Error::Domain(format!(
            "ball of radius {r} around {x0:?} is not contained in the domain"
        )));
    }
    let scale = r.powf(-beta);
    Ok(ScalarField::from_fn(unit.clone(), |y| {
        u.interpolate([x0[0] + r * y[0], x0[1] + r * y[1]]) * scale
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rescaling_preserves_homogeneous_profiles() {
        let g = Arc::new(Grid::new(DomainSpec::interval(-1.0, 1.0), 1025).unwrap());
        let u = ScalarField::from_fn(g, |x| x[0].max(0.0).powi(2));
        let unit = unit_grid(1, 65).unwrap();
        // r·y lands on mesh nodes, so interpolation is exact
        for r in [0.5, 0.125, 1.0 / 16.0] {
            let ur = rescale(&u, [0.0, 0.0], r, f64::INFINITY, &unit).unwrap();
            for k in 0..unit.len() {
                let y = unit.coords(k)[0];
                assert_abs_diff_eq!(ur.value(k), y.max(0.0).powi(2), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn rescaling_off_mesh_has_interpolation_error_only() {
        let g = Arc::new(Grid::new(DomainSpec::interval(-1.0, 1.0), 1025).unwrap());
        let h = g.h();
        let u = ScalarField::from_fn(g, |x| x[0].max(0.0).powi(2));
        let unit = unit_grid(1, 129).unwrap();
        for r in [0.3, 0.07] {
            let ur = rescale(&u, [0.0, 0.0], r, f64::INFINITY, &unit).unwrap();
            let bound = 0.25 * (h / r).powi(2) + 1e-14;
            for k in 0..unit.len() {
                let y = unit.coords(k)[0];
                assert!((ur.value(k) - y.max(0.0).powi(2)).abs() <= bound);
            }
        }
    }

    #[test]
    fn rescaling_radius_limits() {
        let g = Arc::new(Grid::new(DomainSpec::interval(-1.0, 1.0), 33).unwrap());
        let u = ScalarField::zeros(g.clone());
        let unit = unit_grid(1, 17).unwrap();
        assert!(matches!(
            rescale(&u, [0.0, 0.0], 1.5 * g.h(), f64::INFINITY, &unit),
            Err(Error::Resolution(_))
        ));
        assert!(matches!(
            rescale(&u, [0.8, 0.0], 0.5, f64::INFINITY, &unit),
            Err(Error::Domain(_))
        ));
        assert!(matches!(rescale(&u, [0.0, 0.0], 0.5, 0.25, &unit), Err(Error::Regime { .. })));
    }
}
