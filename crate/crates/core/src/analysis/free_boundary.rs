use serde::Serialize;

use crate::energy::positivity_threshold;
use crate::geometry::{Point, ScalarField};

/// Interior nodes of `{u > τ}` with at least one interior stencil neighbour in
/// `{u <= τ}`. Contact with Dirichlet data on the boundary is not a free
/// boundary and is not listed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FreeBoundary {
    pub nodes: Vec<usize>,
    pub positivity_threshold: f64,
}

pub fn extract_free_boundary(u: &ScalarField) -> FreeBoundary {
    let g = u.grid();
    let tau = positivity_threshold(u);
    let nodes = g
        .interior_nodes()
        .iter()
        .copied()
        .filter(|&k| {
            u.value(k) > tau
                && g
                    .neighbors(k)
                    .any(|n| !g.is_boundary(n) && u.value(n) <= tau)
        })
        .collect();
    FreeBoundary {
        nodes,
        positivity_threshold: tau,
    }
}

impl FreeBoundary {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Zero-set neighbours of the listed nodes, i.e. free boundary points snapped
    /// to the side where `u` vanishes. Sorted, without duplicates.
    pub fn zero_side_nodes(&self, u: &ScalarField) -> Vec<usize> {
        let g = u.grid();
        let mut out: Vec<usize> = self
            .nodes
            .iter()
            .flat_map(|&k| g.neighbors(k))
            .filter(|&n| !g.is_boundary(n) && u.value(n) <= self.positivity_threshold)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// The zero-side free boundary node closest to `hint`, used as the centre of
    /// growth, Weiss and blow-up analyses (ties go to the lower node index).
    pub fn anchor_near(&self, u: &ScalarField, hint: Point) -> Option<usize> {
        let g = u.grid();
        self.zero_side_nodes(u).into_iter().min_by(|&a, &b| {
            let da = g.distance(g.coords(a), hint);
            let db = g.distance(g.coords(b), hint);
            da.total_cmp(&db).then(a.cmp(&b))
        })
    }

    /// Distance from `p` to the nearest listed node (infinite when empty).
    pub fn distance_to(&self, u: &ScalarField, p: Point) -> f64 {
        let g = u.grid();
        self.nodes
            .iter()
            .map(|&k| g.distance(g.coords(k), p))
            .fold(f64::INFINITY, f64::min)
    }
}
