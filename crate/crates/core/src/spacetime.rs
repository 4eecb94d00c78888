//! Relativistic position inference and latency accounting.
//!
//! A verifier that sends at `t` and receives the credential at `t′` knows the
//! prover lies within `(t′ − t)·c₀/2` of it. The admissible region is the
//! intersection of the two verifiers' balls; with no excess latency the balls
//! are tangent and the region is a point, and each nanosecond of excess
//! latency widens it by `c₀·δt`.
//!
//! Times are integer picoseconds; distances are `f64` meters.

use serde::{Deserialize, Serialize};

use crate::error::{domain, QpvError, Result};

/// Speed of light in vacuum, m/s (exact by definition of the meter).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

const PS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dimension", rename_all = "kebab-case")]
pub enum VerifierGeometry {
    Line { v1: f64, v2: f64 },
    Plane { v1: [f64; 2], v2: [f64; 2] },
}

impl VerifierGeometry {
    pub fn line(v1: f64, v2: f64) -> Result<Self> {
        let g = VerifierGeometry::Line { v1, v2 };
        g.validate()?;
        Ok(g)
    }

    pub fn plane(v1: [f64; 2], v2: [f64; 2]) -> Result<Self> {
        let g = VerifierGeometry::Plane { v1, v2 };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = match self {
            VerifierGeometry::Line { v1, v2 } => v1.is_finite() && v2.is_finite(),
            VerifierGeometry::Plane { v1, v2 } => v1.iter().chain(v2).all(|x| x.is_finite()),
        };
        if !finite {
            return Err(domain("verifier position", f64::NAN, "coordinates must be finite"));
        }
        if self.separation() == 0.0 {
            return Err(domain("verifier separation", 0.0, "verifiers must be at distinct positions"));
        }
        Ok(())
    }

    pub fn separation(&self) -> f64 {
        match *self {
            VerifierGeometry::Line { v1, v2 } => (v2 - v1).abs(),
            VerifierGeometry::Plane { v1, v2 } => (v2[0] - v1[0]).hypot(v2[1] - v1[1]),
        }
    }
}

/// Send and receive instants of both verifiers, in picoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub t1_send: i64,
    pub t1_recv: i64,
    pub t2_send: i64,
    pub t2_recv: i64,
}

impl TimingRecord {
    pub fn radii(&self) -> Result<(f64, f64)> {
        Ok((
            radius_from_times(self.t1_send, self.t1_recv)?,
            radius_from_times(self.t2_send, self.t2_recv)?,
        ))
    }
}

/// Round-trip time to radius: `(t_recv − t_send)·c₀/2`.
pub fn radius_from_times(t_send_ps: i64, t_recv_ps: i64) -> Result<f64> {
    if t_recv_ps < t_send_ps {
        return Err(QpvError::Causality {
            send_ps: t_send_ps,
            recv_ps: t_recv_ps,
        });
    }
    Ok((t_recv_ps - t_send_ps) as f64 * PS * SPEED_OF_LIGHT / 2.0)
}

/// Width `δr = c₀·δt` of the admissible range for an excess latency `δt`.
pub fn range_from_excess(delta_t_ps: i64) -> Result<f64> {
    if delta_t_ps < 0 {
        return Err(domain("delta_t", delta_t_ps as f64, "excess latency must be >= 0"));
    }
    Ok(delta_t_ps as f64 * PS * SPEED_OF_LIGHT)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RegionShape {
    Interval {
        lo: f64,
        hi: f64,
    },
    /// Intersection of two disks. `corners` are the circle intersection
    /// points, `None` when one disk contains the other.
    Lens {
        corners: Option<[[f64; 2]; 2]>,
        area: f64,
    },
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositionRegion {
    pub shape: RegionShape,
    /// Largest distance between two admissible positions; 0 when empty.
    pub diameter: f64,
}

impl PositionRegion {
    pub fn is_empty(&self) -> bool {
        matches!(self.shape, RegionShape::Empty)
    }

    const EMPTY: Self = Self {
        shape: RegionShape::Empty,
        diameter: 0.0,
    };
}

pub fn position_region(geom: &VerifierGeometry, r1: f64, r2: f64) -> Result<PositionRegion> {
    for (name, r) in [("r1", r1), ("r2", r2)] {
        if !(r.is_finite() && r >= 0.0) {
            return Err(domain(name, r, "radius must be finite and >= 0"));
        }
    }
    geom.validate()?;
    if r1 + r2 < geom.separation() {
        return Ok(PositionRegion::EMPTY);
    }
    Ok(match *geom {
        VerifierGeometry::Line { v1, v2 } => {
            let lo = (v1 - r1).max(v2 - r2);
            let hi = (v1 + r1).min(v2 + r2);
            PositionRegion {
                shape: RegionShape::Interval { lo, hi },
                diameter: (hi - lo).max(0.0),
            }
        }
        VerifierGeometry::Plane { v1, v2 } => lens(v1, v2, r1, r2),
    })
}

fn lens(c1: [f64; 2], c2: [f64; 2], r1: f64, r2: f64) -> PositionRegion {
    let d = (c2[0] - c1[0]).hypot(c2[1] - c1[1]);
    let small = r1.min(r2);
    if d <= (r1 - r2).abs() {
        // One disk inside the other.
        return PositionRegion {
            shape: RegionShape::Lens {
                corners: None,
                area: std::f64::consts::PI * small * small,
            },
            diameter: 2.0 * small,
        };
    }
    let u = [(c2[0] - c1[0]) / d, (c2[1] - c1[1]) / d];
    // Signed distance from c1 to the chord line along u, and from c2 back.
    let x1 = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
    let x2 = d - x1;
    let half_chord = (r1 * r1 - x1 * x1).max(0.0).sqrt();
    let foot = [c1[0] + x1 * u[0], c1[1] + x1 * u[1]];
    let corners = [
        [foot[0] - half_chord * u[1], foot[1] + half_chord * u[0]],
        [foot[0] + half_chord * u[1], foot[1] - half_chord * u[0]],
    ];

    // Diameter of a lens: the chord, the width along the center line, or the
    // full diameter of a circle whose arc on the lens exceeds a semicircle.
    let mut diameter = (2.0 * half_chord).max(r1 + r2 - d);
    if x1 < 0.0 {
        diameter = diameter.max(2.0 * r1);
    }
    if x2 < 0.0 {
        diameter = diameter.max(2.0 * r2);
    }

    let segment = |r: f64, x: f64| r * r * (x / r).clamp(-1.0, 1.0).acos() - x * (r * r - x * x).max(0.0).sqrt();
    let area = segment(r1, x1) + segment(r2, x2);
    PositionRegion {
        shape: RegionShape::Lens {
            corners: Some(corners),
            area,
        },
        diameter,
    }
}

/// Named latency contributions in nanoseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyBudget {
    pub components: Vec<(String, f64)>,
}

impl LatencyBudget {
    pub fn new(components: Vec<(String, f64)>) -> Result<Self> {
        for (name, ns) in &components {
            if !(ns.is_finite() && *ns >= 0.0) {
                return Err(QpvError::Config(format!("latency component {name} must be >= 0, got {ns}")));
            }
        }
        Ok(Self { components })
    }

    /// Measured component delays of the 40-bit lookup-table prover.
    pub fn reference() -> Self {
        Self {
            components: [
                ("boolean-function", 117.3),
                ("classical-channel-1", 22.05),
                ("classical-channel-2", 22.39),
                ("detector", 17.7),
                ("switch-driver", 50.0),
                ("interconnect", 20.0),
            ]
            .into_iter()
            .map(|(n, v)| (n.to_string(), v))
            .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencySummary {
    pub total_ns: f64,
    /// Components sorted by descending delay (ties keep input order).
    pub breakdown: Vec<(String, f64)>,
}

pub fn latency_budget(budget: &LatencyBudget) -> LatencySummary {
    let mut breakdown = budget.components.clone();
    breakdown.sort_by(|a, b| b.1.total_cmp(&a.1));
    LatencySummary {
        total_ns: budget.components.iter().map(|(_, v)| v).sum(),
        breakdown,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_values() {
        assert_eq!(radius_from_times(5, 5).unwrap(), 0.0);
        let r = radius_from_times(0, 6_526_000).unwrap();
        assert!((r - 978.2).abs() < 0.1, "{r}");
        assert!(matches!(radius_from_times(1000, 0), Err(QpvError::Causality { .. })));
    }

    #[test]
    fn radius_linear_in_elapsed_time() {
        let a = radius_from_times(0, 1_000_000).unwrap();
        let b = radius_from_times(123_456, 2_123_456).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-12);
    }

    #[test]
    fn excess_range_values() {
        assert_eq!(range_from_excess(0).unwrap(), 0.0);
        assert!((range_from_excess(247_800).unwrap() - 74.29).abs() < 0.05);
        assert!((range_from_excess(1_000_000_000).unwrap() - 299_792.458).abs() < 1e-6);
        assert!(range_from_excess(-1).is_err());
    }

    #[test]
    fn interval_cases() {
        let g = VerifierGeometry::line(0.0, 2000.0).unwrap();
        let tangent = position_region(&g, 1000.0, 1000.0).unwrap();
        assert_eq!(tangent.shape, RegionShape::Interval { lo: 1000.0, hi: 1000.0 });
        assert_eq!(tangent.diameter, 0.0);

        let widened = position_region(&g, 1037.15, 1037.15).unwrap();
        match widened.shape {
            RegionShape::Interval { lo, hi } => {
                assert!((lo - 962.85).abs() < 1e-9 && (hi - 1037.15).abs() < 1e-9)
            }
            other => panic!("{other:?}"),
        }
        assert!((widened.diameter - 74.3).abs() < 0.1);

        assert!(position_region(&g, 500.0, 500.0).unwrap().is_empty());
        assert!(position_region(&g, -1.0, 500.0).is_err());
    }

    #[test]
    fn coincident_verifiers_rejected() {
        assert!(VerifierGeometry::line(3.0, 3.0).is_err());
        assert!(VerifierGeometry::plane([1.0, 1.0], [1.0, 1.0]).is_err());
    }

    #[test]
    fn lens_tangent_and_symmetric() {
        let g = VerifierGeometry::plane([0.0, 0.0], [2000.0, 0.0]).unwrap();
        let t = position_region(&g, 1000.0, 1000.0).unwrap();
        assert!(t.diameter.abs() < 1e-9);
        // r = 1000 + w/2 on both sides: chord 2√(r² − 1000²) exceeds the width w.
        let w = 74.3;
        let r = 1000.0 + w / 2.0;
        let l = position_region(&g, r, r).unwrap();
        let chord = 2.0 * (r * r - 1e6).sqrt();
        assert!((l.diameter - chord).abs() < 1e-9);
        assert!(l.diameter >= w);
    }

    #[test]
    fn lens_containment() {
        let g = VerifierGeometry::plane([0.0, 0.0], [10.0, 0.0]).unwrap();
        let r = position_region(&g, 100.0, 5.0).unwrap();
        assert_eq!(r.diameter, 10.0);
        match r.shape {
            RegionShape::Lens { corners: None, area } => assert!((area - std::f64::consts::PI * 25.0).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lens_major_arc_uses_full_diameter() {
        // Small circle's center lies inside the big disk, beyond the chord.
        let g = VerifierGeometry::plane([0.0, 0.0], [10.0, 0.0]).unwrap();
        let r = position_region(&g, 10.5, 2.0).unwrap();
        assert!((r.diameter - 4.0).abs() < 1e-12);
    }

    #[test]
    fn lens_area_matches_half_overlap() {
        // Two unit circles one radius apart: area = 2π/3 − √3/2.
        let g = VerifierGeometry::plane([0.0, 0.0], [1.0, 0.0]).unwrap();
        match position_region(&g, 1.0, 1.0).unwrap().shape {
            RegionShape::Lens { area, corners: Some(c) } => {
                let expected = 2.0 * std::f64::consts::PI / 3.0 - 3f64.sqrt() / 2.0;
                assert!((area - expected).abs() < 1e-12);
                assert!((c[0][0] - 0.5).abs() < 1e-12 && (c[0][1].abs() - 3f64.sqrt() / 2.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn budget_totals() {
        assert_eq!(latency_budget(&LatencyBudget::new(vec![]).unwrap()).total_ns, 0.0);
        let zero = LatencyBudget::new(vec![("a".into(), 0.0), ("b".into(), 0.0)]).unwrap();
        assert_eq!(latency_budget(&zero).total_ns, 0.0);
        let single = LatencyBudget::new(vec![("boolean-function".into(), 117.3)]).unwrap();
        assert_eq!(latency_budget(&single).total_ns, 117.3);
        let s = latency_budget(&LatencyBudget::reference());
        assert!((s.total_ns - 249.44).abs() < 1e-9);
        assert!(((s.total_ns - 247.8) / 247.8).abs() < 0.01);
        assert_eq!(s.breakdown[0].0, "boolean-function");
        assert!(s.breakdown.windows(2).all(|w| w[0].1 >= w[1].1));
        assert!(LatencyBudget::new(vec![("x".into(), -1.0)]).is_err());
    }
}
