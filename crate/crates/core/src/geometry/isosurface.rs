use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::contour::{crossing_fraction, saddle_above};
use super::field::{Bounds, ScalarField3};
use super::GeometryError;

/// Triangle mesh of a level set. Triangles are oriented so their normals
/// point towards increasing values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsosurfaceMesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[u32; 3]>,
    pub level: f64,
    pub dims: [usize; 3],
    pub bounds: Bounds<3>,
}

/// Grid edge: lower node `(i, j, k)` and axis.
type EdgeKey = (usize, usize, usize, u8);

/// The six cube faces as cyclic corner offsets.
const FACES: [[[usize; 3]; 4]; 6] = [
    [[0, 0, 0], [0, 1, 0], [0, 1, 1], [0, 0, 1]],
    [[1, 0, 0], [1, 1, 0], [1, 1, 1], [1, 0, 1]],
    [[0, 0, 0], [1, 0, 0], [1, 0, 1], [0, 0, 1]],
    [[0, 1, 0], [1, 1, 0], [1, 1, 1], [0, 1, 1]],
    [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]],
    [[0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]],
];

/// Marching cubes over cells whose eight corners are all inside the
/// tetrahedron. Each face is resolved with the asymptotic decider, the
/// resulting edge cycles are fan-triangulated, and vertices are numbered in
/// cell order so output is independent of thread scheduling.
pub fn isosurface(field: &ScalarField3, level: f64) -> Result<IsosurfaceMesh, GeometryError> {
    let (min, max) = field.value_range().unwrap_or((f64::NAN, f64::NAN));
    if !(level.is_finite() && min <= level && level <= max) {
        return Err(GeometryError::EmptyLevelSet { level, min, max });
    }
    let [nx, ny, nz] = field.dims;
    let layers: Vec<Vec<Vec<EdgeKey>>> = (0..nz - 1)
        .into_par_iter()
        .map(|k| {
            let mut polygons = Vec::new();
            for j in 0..ny - 1 {
                for i in 0..nx - 1 {
                    cell_polygons(field, level, [i, j, k], &mut polygons);
                }
            }
            polygons
        })
        .collect();

    let mut index: HashMap<EdgeKey, u32> = HashMap::new();
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for polygon in layers.into_iter().flatten() {
        let ids: Vec<u32> = polygon
            .iter()
            .map(|key| {
                *index.entry(*key).or_insert_with(|| {
                    vertices.push(edge_point(field, level, *key));
                    (vertices.len() - 1) as u32
                })
            })
            .collect();
        for w in 1..ids.len() - 1 {
            triangles.push([ids[0], ids[w], ids[w + 1]]);
        }
    }
    if triangles.is_empty() {
        return Err(GeometryError::EmptyLevelSet { level, min, max });
    }
    Ok(IsosurfaceMesh {
        vertices,
        triangles,
        level,
        dims: field.dims,
        bounds: field.bounds,
    })
}

fn cell_polygons(field: &ScalarField3, level: f64, base: [usize; 3], out: &mut Vec<Vec<EdgeKey>>) {
    let mut v = [[[0.0; 2]; 2]; 2];
    for (dx, plane) in v.iter_mut().enumerate() {
        for (dy, row) in plane.iter_mut().enumerate() {
            for (dz, slot) in row.iter_mut().enumerate() {
                let idx = field.index(base[0] + dx, base[1] + dy, base[2] + dz);
                if !field.valid[idx] {
                    return;
                }
                *slot = field.values[idx];
            }
        }
    }
    let value = |c: [usize; 3]| v[c[0]][c[1]][c[2]];
    let above = |c: [usize; 3]| value(c) > level;
    let key = |a: [usize; 3], b: [usize; 3]| -> EdgeKey {
        let axis = (0..3).find(|&d| a[d] != b[d]).unwrap();
        let lo = if a[axis] < b[axis] { a } else { b };
        (base[0] + lo[0], base[1] + lo[1], base[2] + lo[2], axis as u8)
    };

    let mut segments: Vec<(EdgeKey, EdgeKey)> = Vec::new();
    for face in &FACES {
        let edges: [EdgeKey; 4] = std::array::from_fn(|e| key(face[e], face[(e + 1) % 4]));
        let crossed: Vec<usize> = (0..4)
            .filter(|&e| above(face[e]) != above(face[(e + 1) % 4]))
            .collect();
        match crossed.len() {
            2 => segments.push((edges[crossed[0]], edges[crossed[1]])),
            4 => {
                let fv = face.map(value);
                if saddle_above(fv, level) == above(face[0]) {
                    segments.push((edges[0], edges[1]));
                    segments.push((edges[2], edges[3]));
                } else {
                    segments.push((edges[3], edges[0]));
                    segments.push((edges[1], edges[2]));
                }
            }
            _ => {}
        }
    }
    if segments.is_empty() {
        return;
    }

    // Gradient of the trilinear interpolant at the cell centre.
    let mut grad = [0.0; 3];
    for dx in 0..2 {
        for dy in 0..2 {
            for dz in 0..2 {
                let c = [dx, dy, dz];
                for (d, g) in grad.iter_mut().enumerate() {
                    let sign = if c[d] == 1 { 1.0 } else { -1.0 };
                    *g += sign * value(c);
                }
            }
        }
    }

    let mut used = vec![false; segments.len()];
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let first = segments[start].0;
        let mut polygon = vec![first];
        let mut current = segments[start].1;
        while current != first {
            polygon.push(current);
            let next = (0..segments.len()).find(|&s| !used[s] && (segments[s].0 == current || segments[s].1 == current));
            let Some(s) = next else { break };
            used[s] = true;
            current = if segments[s].0 == current { segments[s].1 } else { segments[s].0 };
        }
        if polygon.len() < 3 {
            continue;
        }
        let points: Vec<[f64; 3]> = polygon.iter().map(|k| edge_point(field, level, *k)).collect();
        if dot(newell_normal(&points), grad) < 0.0 {
            polygon.reverse();
        }
        out.push(polygon);
    }
}

fn newell_normal(points: &[[f64; 3]]) -> [f64; 3] {
    let mut n = [0.0; 3];
    for (a, p) in points.iter().enumerate() {
        let q = points[(a + 1) % points.len()];
        n[0] += (p[1] - q[1]) * (p[2] + q[2]);
        n[1] += (p[2] - q[2]) * (p[0] + q[0]);
        n[2] += (p[0] - q[0]) * (p[1] + q[1]);
    }
    n
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn edge_point(field: &ScalarField3, level: f64, (i, j, k, axis): EdgeKey) -> [f64; 3] {
    let mut hi = [i, j, k];
    hi[axis as usize] += 1;
    let a = field.node(i, j, k);
    let b = field.node(hi[0], hi[1], hi[2]);
    let t = crossing_fraction(
        field.values[field.index(i, j, k)],
        field.values[field.index(hi[0], hi[1], hi[2])],
        level,
    );
    [0, 1, 2].map(|d| a[d] + t * (b[d] - a[d]))
}
