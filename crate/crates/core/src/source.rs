//! Analytic source terms with a declared integrability exponent `q`, and the
//! exponent predictions that follow from `q` and the dimension.

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Regime, Result};
use crate::geometry::{Grid, Point};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub value: f64,
}

impl Region {
    fn contains(&self, x: Point) -> bool {
        self.min
            .iter()
            .zip(&self.max)
            .enumerate()
            .all(|(a, (lo, hi))| x[a] >= *lo && x[a] <= *hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SourceKind {
    Constant { value: f64 },
    /// Value of the first region containing the point, `background` elsewhere.
    Piecewise { background: f64, regions: Vec<Region> },
    /// `amplitude · |x - center|^{-gamma}`, saturated at magnitude `cap`.
    RadialSingular {
        amplitude: f64,
        center: Point,
        gamma: f64,
        cap: f64,
    },
    /// Compactly supported bump of total mass `mass` and radius `width`.
    /// Experimental stand-in for a point mass.
    MollifiedPointMass { mass: f64, center: Point, width: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceTerm {
    kind: SourceKind,
    dim: usize,
    q: f64,
    c0: Option<f64>,
}

impl SourceTerm {
    /// Validates the model. `q` may be `f64::INFINITY`.
    pub fn new(kind: SourceKind, dim: usize, q: f64) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(config_err("source", format!("dimension {dim} unsupported")));
        }
        if q.is_nan() || q < 1.0 {
            return Err(config_err("source.q", format!("q = {q} must be >= 1")));
        }
        match &kind {
            SourceKind::Constant { value } if !value.is_finite() => {
                return Err(config_err("source.value", "must be finite"));
            }
            SourceKind::Piecewise {
                background,
                regions,
            } => {
                if !background.is_finite() || regions.iter().any(|r| !r.value.is_finite()) {
                    return Err(config_err("source.regions", "values must be finite"));
                }
                if regions.iter().any(|r| r.min.len() != dim || r.max.len() != dim) {
                    return Err(config_err("source.regions", "region corners must match the dimension"));
                }
            }
            SourceKind::RadialSingular {
                amplitude,
                gamma,
                cap,
                ..
            } => {
                if !amplitude.is_finite() || !gamma.is_finite() || *gamma < 0.0 {
                    return Err(config_err("source.gamma", "need finite amplitude and gamma >= 0"));
                }
                if !(cap.is_finite() && *cap > 0.0) {
                    return Err(config_err("source.cap", "cap must be positive and finite"));
                }
                if q.is_finite() && gamma * q >= dim as f64 {
                    return Err(config_err(
                        "source.gamma",
                        format!(
                            "gamma * q = {} >= N = {dim}: the profile is not in L^q",
                            gamma * q
                        ),
                    ));
                }
            }
            SourceKind::MollifiedPointMass { mass, width, .. } => {
                if !mass.is_finite() || !(width.is_finite() && *width > 0.0) {
                    return Err(config_err("source.width", "need finite mass and positive width"));
                }
            }
            _ => {}
        }
        Ok(SourceTerm {
            kind,
            dim,
            q,
            c0: None,
        })
    }

    pub fn constant(value: f64, dim: usize) -> Self {
        Self::new(SourceKind::Constant { value }, dim, f64::INFINITY)
            .expect("finite constant source is valid")
    }

    /// Declares a nondegeneracy constant: `|f| >= c0` on the unit ball around
    /// the model's reference point (the whole domain for constant and
    /// piecewise models). Checked analytically against the model parameters.
    pub fn with_c0(mut self, c0: f64) -> Result<Self> {
        if !(c0.is_finite() && c0 > 0.0) {
            return Err(config_err("source.c0", "c0 must be positive"));
        }
        let ok = match &self.kind {
            SourceKind::Constant { value } => value.abs() >= c0,
            SourceKind::Piecewise {
                background,
                regions,
            } => background.abs() >= c0 && regions.iter().all(|r| r.value.abs() >= c0),
            // |x - x0|^{-gamma} >= 1 on the unit ball around x0
            SourceKind::RadialSingular { amplitude, cap, .. } => {
                amplitude.abs() >= c0 && *cap >= c0
            }
            SourceKind::MollifiedPointMass { .. } => false,
        };
        if !ok {
            return Err(config_err(
                "source.c0",
                format!("the model does not satisfy |f| >= c0 = {c0}"),
            ));
        }
        self.c0 = Some(c0);
        Ok(self)
    }

    pub fn kind(&self) -> &SourceKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn c0(&self) -> Option<f64> {
        self.c0
    }

    pub fn is_experimental(&self) -> bool {
        matches!(self.kind, SourceKind::MollifiedPointMass { .. })
    }

    /// Model with every value multiplied by `t`.
    pub fn scaled(&self, t: f64) -> Self {
        let kind = match &self.kind {
            SourceKind::Constant { value } => SourceKind::Constant { value: t * value },
            SourceKind::Piecewise {
                background,
                regions,
            } => SourceKind::Piecewise {
                background: t * background,
                regions: regions
                    .iter()
                    .map(|r| Region {
                        value: t * r.value,
                        ..r.clone()
                    })
                    .collect(),
            },
            SourceKind::RadialSingular {
                amplitude,
                center,
                gamma,
                cap,
            } => SourceKind::RadialSingular {
                amplitude: t * amplitude,
                center: *center,
                gamma: *gamma,
                cap: t.abs() * cap,
            },
            SourceKind::MollifiedPointMass {
                mass,
                center,
                width,
            } => SourceKind::MollifiedPointMass {
                mass: t * mass,
                center: *center,
                width: *width,
            },
        };
        SourceTerm {
            kind,
            dim: self.dim,
            q: self.q,
            c0: None,
        }
    }

    pub fn evaluate(&self, x: Point) -> f64 {
        let dist = |c: &Point| {
            let dx = x[0] - c[0];
            if self.dim == 1 {
                dx.abs()
            } else {
                dx.hypot(x[1] - c[1])
            }
        };
        match &self.kind {
            SourceKind::Constant { value } => *value,
            SourceKind::Piecewise {
                background,
                regions,
            } => regions
                .iter()
                .find(|r| r.contains(x))
                .map_or(*background, |r| r.value),
            SourceKind::RadialSingular {
                amplitude,
                center,
                gamma,
                cap,
            } => {
                let d = dist(center);
                let magnitude = if d == 0.0 {
                    *cap
                } else {
                    (amplitude.abs() * d.powf(-gamma)).min(*cap)
                };
                magnitude.copysign(*amplitude)
            }
            SourceKind::MollifiedPointMass {
                mass,
                center,
                width,
            } => {
                let s = dist(center) / width;
                if s >= 1.0 {
                    return 0.0;
                }
                let norm = match self.dim {
                    1 => 3.0 / (4.0 * width),
                    _ => 2.0 / (std::f64::consts::PI * width * width),
                };
                mass * norm * (1.0 - s * s)
            }
        }
    }

    /// Nodal values on `grid`.
    pub fn sample(&self, grid: &Grid) -> Vec<f64> {
        (0..grid.len()).map(|k| self.evaluate(grid.coords(k))).collect()
    }
}

/// One-cell saturation level `|amplitude| · h^{-gamma}` for singular profiles.
pub fn default_cap(amplitude: f64, gamma: f64, h: f64) -> f64 {
    amplitude.abs() * h.powf(-gamma)
}

/// Discrete `L^q` norm `(Σ |f|^q w)^{1/q}` with the grid's domain quadrature
/// weights; `q = ∞` gives the nodal maximum over the domain.
pub fn lq_norm(f: &SourceTerm, grid: &Grid, q: f64) -> Result<f64> {
    if q.is_nan() || q < 1.0 {
        return Err(config_err("q", format!("q = {q} must be >= 1")));
    }
    let vals = (0..grid.len())
        .filter(|&k| grid.node_weight(k) > 0.0)
        .map(|k| (k, f.evaluate(grid.coords(k)).abs()));
    if q.is_infinite() {
        return Ok(vals.map(|(_, v)| v).fold(0.0, f64::max));
    }
    let sum: f64 = vals.map(|(k, v)| v.powf(q) * grid.node_weight(k)).sum();
    Ok(sum.powf(1.0 / q))
}

fn regime_check(q: f64, dim: usize) -> Result<()> {
    let half = dim as f64 / 2.0;
    if q.is_infinite() {
        return Ok(());
    }
    if (q - half).abs() <= 1e-12 * half {
        return Err(Error::Regime {
            regime: Regime::Inconclusive,
            q,
            dim,
        });
    }
    if q < half {
        return Err(Error::Regime {
            regime: Regime::RapidGrowth,
            q,
            dim,
        });
    }
    Ok(())
}

/// Growth exponent `2 - N/q` of the solution at free boundary points.
pub fn growth_exponent(q: f64, dim: usize) -> Result<f64> {
    regime_check(q, dim)?;
    if q.is_infinite() {
        return Ok(2.0);
    }
    Ok(2.0 - dim as f64 / q)
}

pub fn predicted_growth_exponent(f: &SourceTerm, dim: usize) -> Result<f64> {
    growth_exponent(f.q(), dim)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum HolderExponent {
    Value(f64),
    /// Every exponent below one is attained but one itself is not claimed.
    AnyBelowOne,
}

impl HolderExponent {
    /// Short regularity label, e.g. `C^{1,0.5}` or `C^{1,1}`.
    pub fn tag(&self) -> String {
        match self {
            HolderExponent::Value(a) if *a == 1.0 => "C^{1,1}".to_string(),
            HolderExponent::Value(a) => format!("C^{{1,{a}}}"),
            HolderExponent::AnyBelowOne => "C^{1,a} for every a<1".to_string(),
        }
    }
}

/// Hölder exponent of the gradient, predicted for `N/2 < q <= N` and `q = ∞`.
pub fn predicted_holder_exponent(q: f64, dim: usize) -> Result<HolderExponent> {
    regime_check(q, dim)?;
    if q.is_infinite() {
        return Ok(HolderExponent::Value(1.0));
    }
    let n = dim as f64;
    if q > n * (1.0 + 1e-12) {
        return Err(Error::Regime {
            regime: Regime::OutsideHolderRange,
            q,
            dim,
        });
    }
    let ratio = n / q;
    let nearest = ratio.round();
    if (ratio - nearest).abs() <= 1e-12 * ratio.max(1.0) {
        return Ok(HolderExponent::AnyBelowOne);
    }
    Ok(HolderExponent::Value(1.0 - ratio + ratio.floor()))
}
