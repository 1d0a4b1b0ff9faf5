//! The energy `I(u) = ½∫|∇u|² - ∫ f u⁺`, its first variation and the fiber map
//! `t ↦ I(t u)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{discrete_laplacian, dirichlet_energy, BoundaryData, ScalarField};
use crate::source::SourceTerm;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    pub dirichlet: f64,
    pub source: f64,
    pub total: f64,
}

/// `10⁻¹² · max(1, sup u)`: nodes at or below it count as the zero set.
pub fn positivity_threshold(u: &ScalarField) -> f64 {
    1e-12 * u.sup().max(1.0)
}

pub fn energy(u: &ScalarField, f: &SourceTerm) -> EnergyBreakdown {
    let g = u.grid();
    let dirichlet = dirichlet_energy(u);
    let source: f64 = (0..g.len())
        .map(|k| f.evaluate(g.coords(k)) * u.value(k).max(0.0) * g.node_weight(k))
        .sum();
    EnergyBreakdown {
        dirichlet,
        source,
        total: dirichlet - source,
    }
}

/// `-Δ_h u - f χ{u > τ}` at interior nodes, zero on the boundary.
pub fn energy_subgradient(
    u: &ScalarField,
    f: &SourceTerm,
    boundary: &BoundaryData,
) -> Result<ScalarField> {
    let g = u.grid();
    let gv = boundary.resolve(g)?;
    let scale = gv.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    for k in 0..g.len() {
        if g.is_boundary(k) && (u.value(k) - gv[k]).abs() > 1e-10 * scale {
            return Err(Error::Contract(format!(
                "u = {} differs from boundary data {} at node {k}",
                u.value(k),
                gv[k]
            )));
        }
    }
    let tau = positivity_threshold(u);
    let lap = discrete_laplacian(u);
    Ok(ScalarField::from_fn_indexed(g.clone(), |k| {
        if g.is_boundary(k) {
            return 0.0;
        }
        let active = if u.value(k) > tau {
            f.evaluate(g.coords(k))
        } else {
            0.0
        };
        -lap.value(k) - active
    }))
}

/// `∫ f u` with the domain quadrature.
pub fn source_pairing(u: &ScalarField, f: &SourceTerm) -> f64 {
    let g = u.grid();
    (0..g.len())
        .map(|k| f.evaluate(g.coords(k)) * u.value(k) * g.node_weight(k))
        .sum()
}

/// Critical point `t* = ∫ f u / ∫|∇u|²` of the fiber map `t ↦ I(t u)`.
pub fn fiber_critical_t(u: &ScalarField, f: &SourceTerm) -> Result<f64> {
    let seminorm_sq = 2.0 * dirichlet_energy(u);
    if seminorm_sq <= 0.0 {
        return Err(Error::Degenerate(
            "fiber map needs a field with nonzero gradient".into(),
        ));
    }
    Ok(source_pairing(u, f) / seminorm_sq)
}

/// `I(t u)`.
pub fn fiber_energy(u: &ScalarField, f: &SourceTerm, t: f64) -> f64 {
    energy(&u.map(|v| t * v), f).total
}
