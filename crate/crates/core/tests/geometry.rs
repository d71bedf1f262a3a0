use std::collections::HashMap;

use belltet::geometry::{contour_slice, isosurface, sample_field, sample_slice, Bounds, IsosurfaceMesh};
use belltet::Measure;

const SIGNS: [[f64; 3]; 4] = [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]];
const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

fn mesh(measure: Measure, level: f64, n: usize) -> IsosurfaceMesh {
    let field = sample_field(measure, [n; 3], Bounds::unit_cube()).unwrap();
    isosurface(&field, level).unwrap()
}

/// Vertices bucketed by cell for nearest-neighbour queries.
struct Buckets {
    h: f64,
    cells: HashMap<[i64; 3], Vec<[f64; 3]>>,
}

impl Buckets {
    fn new(points: &[[f64; 3]], h: f64) -> Self {
        let mut cells: HashMap<[i64; 3], Vec<[f64; 3]>> = HashMap::new();
        for p in points {
            cells.entry(Self::key(p, h)).or_default().push(*p);
        }
        Self { h, cells }
    }

    fn key(p: &[f64; 3], h: f64) -> [i64; 3] {
        p.map(|x| (x / h).floor() as i64)
    }

    fn nearest(&self, p: &[f64; 3]) -> f64 {
        let k = Self::key(p, self.h);
        let mut best = f64::INFINITY;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(list) = self.cells.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        for q in list {
                            let d = (0..3).map(|i| (p[i] - q[i]).powi(2)).sum::<f64>().sqrt();
                            best = best.min(d);
                        }
                    }
                }
            }
        }
        best
    }
}

fn axis_distance(p: &[f64; 3], axis: usize) -> f64 {
    (0..3).filter(|&k| k != axis).map(|k| p[k] * p[k]).sum::<f64>().sqrt()
}

#[test]
fn discord_isosurface_has_tetrahedral_symmetry() {
    let m = mesh(Measure::Discord, 0.05, 41);
    let h = 2.0 / 40.0;
    let buckets = Buckets::new(&m.vertices, h);
    let mut worst: f64 = 0.0;
    for v in &m.vertices {
        for perm in PERMS {
            for signs in SIGNS {
                let image: [f64; 3] = std::array::from_fn(|k| signs[k] * v[perm[k]]);
                worst = worst.max(buckets.nearest(&image));
            }
        }
    }
    assert!(worst <= h, "worst image distance {worst}");
}

#[test]
fn geometric_discord_isosurface_has_tetrahedral_symmetry() {
    let m = mesh(Measure::GeometricDiscord, 0.02, 41);
    let h = 2.0 / 40.0;
    let buckets = Buckets::new(&m.vertices, h);
    for v in &m.vertices {
        for perm in PERMS {
            for signs in SIGNS {
                let image: [f64; 3] = std::array::from_fn(|k| signs[k] * v[perm[k]]);
                assert!(buckets.nearest(&image) <= h, "{v:?} -> {image:?}");
            }
        }
    }
}

#[test]
fn discord_isosurface_avoids_every_axis() {
    let m = mesh(Measure::Discord, 0.03, 41);
    for v in &m.vertices {
        for axis in 0..3 {
            assert!(axis_distance(v, axis) >= 0.02, "{v:?} near axis {axis}");
        }
    }
}

#[test]
fn coherence_isosurfaces_avoid_the_c3_axis() {
    for measure in [Measure::CoherenceL1, Measure::CoherenceRelEntropy] {
        let m = mesh(measure, 0.03, 41);
        assert!(!m.triangles.is_empty());
        for v in &m.vertices {
            assert!(axis_distance(v, 2) >= 0.02, "{measure} {v:?}");
        }
    }
}

#[test]
fn coherence_contours_avoid_the_c3_axis() {
    for measure in [Measure::CoherenceL1, Measure::CoherenceRelEntropy] {
        for c3 in [-0.6, -0.2, 0.0, 0.3, 0.7] {
            let field = sample_slice(measure, c3, [101, 101], Bounds::unit_cube()).unwrap();
            let lines = contour_slice(&field, 0.03).unwrap();
            for p in lines.iter().flat_map(|l| &l.points) {
                assert!(axis_distance(p, 2) >= 0.02, "{measure} c3={c3} {p:?}");
                assert_eq!(p[2], c3);
            }
        }
    }
}

#[test]
fn isosurface_vertices_stay_in_the_tetrahedron() {
    for measure in Measure::ALL {
        let m = mesh(measure, 0.02, 31);
        for v in &m.vertices {
            assert!(belltet::BellDiagonalState::from_components(*v).is_ok(), "{measure} {v:?}");
        }
    }
}
