use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::field::ScalarField2;
use super::GeometryError;

/// A contour line in c-space. Closed polylines do not repeat their first point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub points: Vec<[f64; 3]>,
    pub closed: bool,
}

impl Polyline {
    /// Line segments, including the closing one.
    pub fn segments(&self) -> impl Iterator<Item = ([f64; 3], [f64; 3])> + '_ {
        let n = self.points.len();
        let count = if self.closed && n > 2 { n } else { n.saturating_sub(1) };
        (0..count).map(move |i| (self.points[i], self.points[(i + 1) % n]))
    }
}

/// Grid edge: lower node `(i, j)` and axis (0 = c1, 1 = c2).
type EdgeKey = (usize, usize, u8);

/// Marching squares over the valid cells of `field`. Cells touching a
/// masked node are skipped; saddle cells are split with the asymptotic
/// decider.
pub fn contour_slice(field: &ScalarField2, level: f64) -> Result<Vec<Polyline>, GeometryError> {
    let (min, max) = field.value_range().unwrap_or((f64::NAN, f64::NAN));
    if !(level.is_finite() && min <= level && level <= max) {
        return Err(GeometryError::EmptyLevelSet { level, min, max });
    }
    let [nx, ny] = field.dims;
    let rows: Vec<Vec<(EdgeKey, EdgeKey)>> = (0..ny - 1)
        .into_par_iter()
        .map(|j| {
            let mut segments = Vec::new();
            for i in 0..nx - 1 {
                cell_segments(field, level, i, j, &mut segments);
            }
            segments
        })
        .collect();

    let mut adjacency: BTreeMap<EdgeKey, Vec<EdgeKey>> = BTreeMap::new();
    for (a, b) in rows.into_iter().flatten() {
        adjacency.entry(a).or_default().push(b);
        adjacency.entry(b).or_default().push(a);
    }
    if adjacency.is_empty() {
        return Err(GeometryError::EmptyLevelSet { level, min, max });
    }
    let chains = chain(&adjacency);
    Ok(chains
        .into_iter()
        .map(|(keys, closed)| Polyline {
            points: keys.iter().map(|k| edge_point(field, level, *k)).collect(),
            closed,
        })
        .collect())
}

fn cell_segments(field: &ScalarField2, level: f64, i: usize, j: usize, out: &mut Vec<(EdgeKey, EdgeKey)>) {
    let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
    let mut v = [0.0; 4];
    for (slot, &(ci, cj)) in corners.iter().enumerate() {
        let idx = field.index(ci, cj);
        if !field.valid[idx] {
            return;
        }
        v[slot] = field.values[idx];
    }
    let above = v.map(|x| x > level);
    // Edges in corner order: bottom, right, top, left.
    let edges: [EdgeKey; 4] = [(i, j, 0), (i + 1, j, 1), (i, j + 1, 0), (i, j, 1)];
    let crossed: Vec<usize> = (0..4).filter(|&e| above[e] != above[(e + 1) % 4]).collect();
    match crossed.len() {
        2 => out.push((edges[crossed[0]], edges[crossed[1]])),
        4 => {
            if saddle_above(v, level) == above[0] {
                // Corners 0 and 2 join through the centre; cut off 1 and 3.
                out.push((edges[0], edges[1]));
                out.push((edges[2], edges[3]));
            } else {
                out.push((edges[3], edges[0]));
                out.push((edges[1], edges[2]));
            }
        }
        _ => {}
    }
}

/// Whether the bilinear interpolant's saddle value lies above `level`.
pub(super) fn saddle_above(v: [f64; 4], level: f64) -> bool {
    let denom = v[0] + v[2] - v[1] - v[3];
    let centre = if denom.abs() > f64::EPSILON {
        (v[0] * v[2] - v[1] * v[3]) / denom
    } else {
        0.25 * (v[0] + v[1] + v[2] + v[3])
    };
    centre > level
}

fn edge_point(field: &ScalarField2, level: f64, (i, j, axis): EdgeKey) -> [f64; 3] {
    let (i1, j1) = if axis == 0 { (i + 1, j) } else { (i, j + 1) };
    let a = field.node(i, j);
    let b = field.node(i1, j1);
    let t = crossing_fraction(field.values[field.index(i, j)], field.values[field.index(i1, j1)], level);
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), field.c3]
}

pub(super) fn crossing_fraction(va: f64, vb: f64, level: f64) -> f64 {
    let d = vb - va;
    if d == 0.0 {
        0.5
    } else {
        ((level - va) / d).clamp(0.0, 1.0)
    }
}

/// Links segments into chains. Every key has degree 1 or 2; open chains
/// start from the smallest free endpoint, loops from their smallest key.
fn chain(adjacency: &BTreeMap<EdgeKey, Vec<EdgeKey>>) -> Vec<(Vec<EdgeKey>, bool)> {
    let mut visited: BTreeMap<EdgeKey, bool> = adjacency.keys().map(|k| (*k, false)).collect();
    let mut chains = Vec::new();
    let starts: Vec<EdgeKey> = adjacency
        .iter()
        .filter(|(_, n)| n.len() == 1)
        .map(|(k, _)| *k)
        .chain(adjacency.keys().copied())
        .collect();
    for start in starts {
        if visited[&start] {
            continue;
        }
        let mut keys = vec![start];
        visited.insert(start, true);
        let mut current = start;
        let closed;
        loop {
            let next = adjacency[&current].iter().copied().find(|k| !visited[k]);
            match next {
                Some(k) => {
                    visited.insert(k, true);
                    keys.push(k);
                    current = k;
                }
                None => {
                    closed = keys.len() > 2 && adjacency[&current].contains(&start);
                    break;
                }
            }
        }
        chains.push((keys, closed));
    }
    chains
}

/// Distances from the slice origin `(0, 0, c3)` at which the polylines
/// cross the in-slice half-line at `angle` (radians from the c1 axis).
pub fn radial_crossings(polylines: &[Polyline], angle: f64) -> Vec<f64> {
    let (dy, dx) = angle.sin_cos();
    let mut hits = Vec::new();
    for line in polylines {
        for (p, q) in line.segments() {
            // Solve r·d = p + s·(q − p) for r ≥ 0, s ∈ [0, 1].
            let ex = q[0] - p[0];
            let ey = q[1] - p[1];
            let det = ex * dy - ey * dx;
            if det.abs() < 1e-300 {
                continue;
            }
            let s = (p[1] * dx - p[0] * dy) / det;
            let r = (p[1] * ex - p[0] * ey) / det;
            if (0.0..=1.0).contains(&s) && r >= 0.0 {
                hits.push(r);
            }
        }
    }
    hits.sort_by(f64::total_cmp);
    // A crossing through a shared vertex is hit by both of its segments.
    hits.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    hits
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{sample_slice, Bounds};
    use crate::measures::Measure;
    use crate::state::BellDiagonalState;

    fn slice(measure: Measure, c3: f64, n: usize) -> ScalarField2 {
        sample_slice(measure, c3, [n, n], Bounds::unit_cube()).unwrap()
    }

    #[test]
    fn l1_square() {
        let f = slice(Measure::CoherenceL1, 0.0, 201);
        let lines = contour_slice(&f, 0.5).unwrap();
        let points: Vec<_> = lines.iter().flat_map(|l| l.points.iter()).collect();
        assert!(!points.is_empty());
        for p in &points {
            assert!((p[0].abs().max(p[1].abs()) - 0.5).abs() < 1e-12, "{p:?}");
        }
        // All four sides are present.
        for side in [[0.5, 0.0], [-0.5, 0.0], [0.0, 0.5], [0.0, -0.5]] {
            assert!(points.iter().any(|p| (p[0] - side[0]).abs() < 0.02 && (p[1] - side[1]).abs() < 0.02));
        }
    }

    #[test]
    fn cre_closed_curve_through_axes() {
        let level = 0.188_721_875_540_867_06;
        let f = slice(Measure::CoherenceRelEntropy, 0.0, 201);
        let lines = contour_slice(&f, level).unwrap();
        assert_eq!(lines.len(), 1);
        assert!(lines[0].closed);
        for angle in [0.0, 0.5, 1.0, 1.5].map(|k: f64| k * std::f64::consts::PI) {
            let r = radial_crossings(&lines, angle);
            assert_eq!(r.len(), 1, "{angle}");
            assert!((r[0] - 0.5).abs() < 1e-4, "{r:?}");
        }
        let h = f.cell_size();
        for p in &lines[0].points {
            let s = BellDiagonalState::new(p[0], p[1], p[2]).unwrap();
            assert!((Measure::CoherenceRelEntropy.evaluate(&s) - level).abs() < h);
        }
    }

    #[test]
    fn nesting_along_rays() {
        let f = slice(Measure::CoherenceRelEntropy, 0.3, 101);
        let inner = contour_slice(&f, 0.05).unwrap();
        let outer = contour_slice(&f, 0.2).unwrap();
        for k in 0..50 {
            let angle = k as f64 * std::f64::consts::TAU / 50.0;
            let a = radial_crossings(&inner, angle);
            let b = radial_crossings(&outer, angle);
            if let (Some(a_max), Some(b_min)) = (a.last(), b.first()) {
                assert!(b_min > a_max);
            }
        }
    }

    #[test]
    fn level_out_of_range() {
        let f = slice(Measure::CoherenceL1, 0.0, 21);
        assert!(matches!(contour_slice(&f, 2.0), Err(GeometryError::EmptyLevelSet { .. })));
    }

    #[test]
    fn saddle_cell_split() {
        let v = [1.0, 0.0, 1.0, 0.0];
        assert!(saddle_above([1.0, 0.0, 1.0, 0.0], 0.4));
        assert!(!saddle_above(v, 0.6));
    }
}
