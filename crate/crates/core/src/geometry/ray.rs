use std::f64::consts::LN_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::GeometryError;
use crate::measures::Measure;
use crate::state::BellDiagonalState;

/// Sign patterns `(s1, s2, s3)` with `λ_ab = (1 + s·c)/4`.
const EIGEN_SIGNS: [[f64; 3]; 4] = [
    [1.0, -1.0, 1.0],
    [1.0, 1.0, -1.0],
    [-1.0, 1.0, 1.0],
    [-1.0, -1.0, -1.0],
];

/// Largest `t` with `t·direction` inside the tetrahedron, from the four
/// linear constraints `1 + t (s·d) ≥ 0`.
pub fn max_extent(direction: [f64; 3]) -> f64 {
    EIGEN_SIGNS
        .iter()
        .map(|s| s[0] * direction[0] + s[1] * direction[1] + s[2] * direction[2])
        .filter(|&k| k < 0.0)
        .map(|k| -1.0 / k)
        .fold(f64::INFINITY, f64::min)
}

/// How a ray was parameterized, when it belongs to one of the anchored
/// families.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum RayFamily {
    Generic,
    /// `c2 = m·c1`, `c3 = 0`, with `c1 ≥ 0`.
    CoherencePlane { m: f64 },
    /// `c1 = m·c2`, `c3 = 0`, with `c2 ≥ 0`.
    DiscordPlane { m: f64 },
    /// `c1 = a·c3`, `c2 = b·c3`, with `c3 ≥ 0`.
    DiscordGeneric { a: f64, b: f64 },
}

impl fmt::Display for RayFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RayFamily::Generic => write!(f, "generic"),
            RayFamily::CoherencePlane { m } => write!(f, "c2 = {m}·c1"),
            RayFamily::DiscordPlane { m } => write!(f, "c1 = {m}·c2"),
            RayFamily::DiscordGeneric { a, b } => write!(f, "c1 = {a}·c3, c2 = {b}·c3"),
        }
    }
}

/// A ray from the centre of the tetrahedron to its surface.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    direction: [f64; 3],
    t_max: f64,
    family: RayFamily,
}

impl Ray {
    /// Ray along `direction` (normalized internally).
    pub fn new(direction: [f64; 3]) -> Result<Self, GeometryError> {
        Self::with_family(direction, RayFamily::Generic)
    }

    fn with_family(direction: [f64; 3], family: RayFamily) -> Result<Self, GeometryError> {
        let norm = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(GeometryError::DegenerateRay);
        }
        let direction = direction.map(|x| x / norm);
        Ok(Self {
            direction,
            t_max: max_extent(direction),
            family,
        })
    }

    pub fn coherence_plane(m: f64) -> Result<Self, GeometryError> {
        Self::with_family([1.0, m, 0.0], RayFamily::CoherencePlane { m })
    }

    pub fn discord_plane(m: f64) -> Result<Self, GeometryError> {
        Self::with_family([m, 1.0, 0.0], RayFamily::DiscordPlane { m })
    }

    pub fn discord_generic(a: f64, b: f64) -> Result<Self, GeometryError> {
        Self::with_family([a, b, 1.0], RayFamily::DiscordGeneric { a, b })
    }

    /// Unit direction.
    pub fn direction(&self) -> [f64; 3] {
        self.direction
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn family(&self) -> RayFamily {
        self.family
    }

    pub fn point(&self, t: f64) -> [f64; 3] {
        self.direction.map(|d| d * t)
    }

    /// State at arc length `t`, clipped to `[0, t_max]`.
    pub fn state_at(&self, t: f64) -> BellDiagonalState {
        let t = t.clamp(0.0, self.t_max);
        BellDiagonalState::from_components(self.point(t))
            .expect("points of a ray up to t_max are inside the tetrahedron")
    }
}

/// `n` evenly spaced states from the origin to the surface, both included.
pub fn ray_states(ray: &Ray, n: usize) -> Result<Vec<BellDiagonalState>, GeometryError> {
    if n < 2 {
        return Err(GeometryError::TooFewSamples { min: 2, got: n });
    }
    Ok((0..n)
        .map(|i| ray.state_at(ray.t_max * i as f64 / (n - 1) as f64))
        .collect())
}

fn plane_terms(m: f64, c1: f64) -> Result<[f64; 4], GeometryError> {
    let terms = [
        1.0 - c1 - m * c1,
        1.0 - c1 + m * c1,
        1.0 + c1 - m * c1,
        1.0 + c1 + m * c1,
    ];
    if terms.iter().all(|&x| x > 0.0) && m.is_finite() && c1.is_finite() {
        Ok(terms)
    } else {
        Err(GeometryError::OutsideDomain { m, c1 })
    }
}

fn plane_coefficients(m: f64) -> [f64; 4] {
    [-1.0 - m, -1.0 + m, 1.0 - m, 1.0 + m]
}

/// `dC_re/dc1` along `c2 = m·c1, c3 = 0`:
/// `¼ Σ k_i log2(1 + k_i c1)` with `k = (-1-m, -1+m, 1-m, 1+m)`.
pub fn cre_first_derivative(m: f64, c1: f64) -> Result<f64, GeometryError> {
    let terms = plane_terms(m, c1)?;
    Ok(0.25
        * plane_coefficients(m)
            .iter()
            .zip(terms)
            .map(|(k, x)| k * x.log2())
            .sum::<f64>())
}

/// `d²C_re/dc1²` along `c2 = m·c1, c3 = 0`: `1/(4 ln 2) Σ k_i² / (1 + k_i c1)`.
pub fn cre_second_derivative(m: f64, c1: f64) -> Result<f64, GeometryError> {
    let terms = plane_terms(m, c1)?;
    Ok(plane_coefficients(m)
        .iter()
        .zip(terms)
        .map(|(k, x)| k * k / x)
        .sum::<f64>()
        / (4.0 * LN_2))
}

/// Geometric discord on an anchored ray, as a function of the anchor
/// coordinate `t` (`c2` for [`RayFamily::DiscordPlane`], `c3` for
/// [`RayFamily::DiscordGeneric`]).
///
/// The branch is chosen by which correlation has the largest magnitude;
/// each branch drops that correlation's square from `Σ c_j² / 4`.
pub fn geo_discord_ray_piecewise(family: &RayFamily, t: f64) -> Result<f64, GeometryError> {
    let t2 = t * t;
    match *family {
        RayFamily::DiscordPlane { m } => Ok(if m.abs() >= 1.0 {
            // c = |c1|
            0.25 * t2
        } else {
            // c = |c2|
            0.25 * m * m * t2
        }),
        RayFamily::DiscordGeneric { a, b } => {
            let (aa, ab) = (a.abs(), b.abs());
            Ok(if aa >= ab && aa >= 1.0 {
                // c = |c1|
                0.25 * (b * b + 1.0) * t2
            } else if ab >= 1.0 {
                // c = |c2|
                0.25 * (a * a + 1.0) * t2
            } else {
                // c = |c3|
                0.25 * (a * a + b * b) * t2
            })
        }
        other => Err(GeometryError::WrongFamily(other.to_string())),
    }
}

/// Measure values along a ray walked from the surface to the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayMonotonicityReport {
    pub measure: Measure,
    /// `(t, value)` with `t` decreasing from `t_max` to 0.
    pub samples: Vec<(f64, f64)>,
    /// Indices `i` where `value[i + 1]` exceeds `value[i]` by more than 1e-10.
    pub violations: Vec<usize>,
}

impl RayMonotonicityReport {
    pub fn is_monotone(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn ray_monotonicity_report(
    measure: Measure,
    ray: &Ray,
    n: usize,
) -> Result<RayMonotonicityReport, GeometryError> {
    if n < 3 {
        return Err(GeometryError::TooFewSamples { min: 3, got: n });
    }
    let samples: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let t = ray.t_max * (n - 1 - i) as f64 / (n - 1) as f64;
            (t, measure.evaluate(&ray.state_at(t)))
        })
        .collect();
    let violations = samples
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1].1 > w[0].1 + 1e-10)
        .map(|(i, _)| i)
        .collect();
    Ok(RayMonotonicityReport {
        measure,
        samples,
        violations,
    })
}
