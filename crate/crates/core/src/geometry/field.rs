use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::GeometryError;
use crate::measures::Measure;
use crate::state::BellDiagonalState;

/// Axis-aligned box `[lo, hi]` in c-space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "RawBounds", try_from = "RawBounds")]
pub struct Bounds<const N: usize> {
    pub lo: [f64; N],
    pub hi: [f64; N],
}

#[derive(Serialize, Deserialize)]
struct RawBounds {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl<const N: usize> From<Bounds<N>> for RawBounds {
    fn from(b: Bounds<N>) -> Self {
        Self {
            lo: b.lo.to_vec(),
            hi: b.hi.to_vec(),
        }
    }
}

impl<const N: usize> TryFrom<RawBounds> for Bounds<N> {
    type Error = String;

    fn try_from(raw: RawBounds) -> Result<Self, Self::Error> {
        let wrong = |v: &Vec<f64>| format!("expected {N} bounds, got {}", v.len());
        Ok(Self {
            lo: raw.lo.as_slice().try_into().map_err(|_| wrong(&raw.lo))?,
            hi: raw.hi.as_slice().try_into().map_err(|_| wrong(&raw.hi))?,
        })
    }
}

impl<const N: usize> Bounds<N> {
    /// The cube `[-1, 1]^N` enclosing the tetrahedron.
    pub fn unit_cube() -> Self {
        Self {
            lo: [-1.0; N],
            hi: [1.0; N],
        }
    }

    fn validate(&self) -> Result<(), GeometryError> {
        for k in 0..N {
            if !(self.lo[k].is_finite() && self.hi[k].is_finite() && self.lo[k] < self.hi[k]) {
                return Err(GeometryError::InvalidBounds(format!("{:?}..{:?}", self.lo, self.hi)));
            }
        }
        Ok(())
    }

    /// Coordinate of node `i` of `n` along axis `k`. For odd `n` on a
    /// symmetric box the middle node is exactly 0.
    pub fn node(&self, k: usize, i: usize, n: usize) -> f64 {
        self.lo[k] + (self.hi[k] - self.lo[k]) * i as f64 / (n - 1) as f64
    }

    /// Grid spacing along axis `k` for `n` nodes.
    pub fn spacing(&self, k: usize, n: usize) -> f64 {
        (self.hi[k] - self.lo[k]) / (n - 1) as f64
    }
}

/// A measure sampled on a regular 3D grid. Nodes outside the tetrahedron
/// are masked out and hold NaN.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField3 {
    pub dims: [usize; 3],
    pub bounds: Bounds<3>,
    /// Node values, x fastest: `values[i + nx (j + ny k)]`.
    pub values: Vec<f64>,
    /// `true` for nodes inside the tetrahedron.
    pub valid: Vec<bool>,
}

impl ScalarField3 {
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn node(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [
            self.bounds.node(0, i, self.dims[0]),
            self.bounds.node(1, j, self.dims[1]),
            self.bounds.node(2, k, self.dims[2]),
        ]
    }

    pub fn value(&self, i: usize, j: usize, k: usize) -> Option<f64> {
        let idx = self.index(i, j, k);
        self.valid[idx].then(|| self.values[idx])
    }

    /// `(min, max)` over valid nodes.
    pub fn value_range(&self) -> Option<(f64, f64)> {
        value_range(&self.values, &self.valid)
    }

    pub fn masked_fraction(&self) -> f64 {
        self.valid.iter().filter(|v| !**v).count() as f64 / self.valid.len() as f64
    }

    /// Largest grid spacing.
    pub fn cell_size(&self) -> f64 {
        (0..3)
            .map(|k| self.bounds.spacing(k, self.dims[k]))
            .fold(0.0, f64::max)
    }
}

/// A measure sampled on the `(c1, c2)` grid of the slice at fixed `c3`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField2 {
    pub dims: [usize; 2],
    pub bounds: Bounds<2>,
    pub c3: f64,
    /// `values[i + nx j]`.
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
}

impl ScalarField2 {
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.dims[0] * j
    }

    pub fn node(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.bounds.node(0, i, self.dims[0]),
            self.bounds.node(1, j, self.dims[1]),
        ]
    }

    pub fn value_range(&self) -> Option<(f64, f64)> {
        value_range(&self.values, &self.valid)
    }

    pub fn cell_size(&self) -> f64 {
        self.bounds
            .spacing(0, self.dims[0])
            .max(self.bounds.spacing(1, self.dims[1]))
    }
}

fn value_range(values: &[f64], valid: &[bool]) -> Option<(f64, f64)> {
    values
        .iter()
        .zip(valid)
        .filter(|(_, ok)| **ok)
        .map(|(v, _)| *v)
        .fold(None, |acc, v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
}

fn evaluate_node<F: Fn(&BellDiagonalState) -> f64>(f: &F, c: [f64; 3]) -> (f64, bool) {
    match BellDiagonalState::from_components(c) {
        Ok(s) => (f(&s), true),
        Err(_) => (f64::NAN, false),
    }
}

pub fn sample_field(
    measure: Measure,
    dims: [usize; 3],
    bounds: Bounds<3>,
) -> Result<ScalarField3, GeometryError> {
    sample_field_with(|s| measure.evaluate(s), dims, bounds)
}

/// Samples an arbitrary state function; z-layers are evaluated in parallel.
pub fn sample_field_with<F>(f: F, dims: [usize; 3], bounds: Bounds<3>) -> Result<ScalarField3, GeometryError>
where
    F: Fn(&BellDiagonalState) -> f64 + Sync,
{
    if dims.iter().any(|&n| n < 2) {
        return Err(GeometryError::InvalidDims(dims.to_vec()));
    }
    bounds.validate()?;
    let [nx, ny, nz] = dims;
    let layers: Vec<Vec<(f64, bool)>> = (0..nz)
        .into_par_iter()
        .map(|k| {
            let z = bounds.node(2, k, nz);
            let mut layer = Vec::with_capacity(nx * ny);
            for j in 0..ny {
                let y = bounds.node(1, j, ny);
                for i in 0..nx {
                    layer.push(evaluate_node(&f, [bounds.node(0, i, nx), y, z]));
                }
            }
            layer
        })
        .collect();
    let (values, valid) = layers.into_iter().flatten().unzip();
    Ok(ScalarField3 {
        dims,
        bounds,
        values,
        valid,
    })
}

pub fn sample_slice(
    measure: Measure,
    c3: f64,
    dims: [usize; 2],
    bounds: Bounds<2>,
) -> Result<ScalarField2, GeometryError> {
    if dims.iter().any(|&n| n < 2) {
        return Err(GeometryError::InvalidDims(dims.to_vec()));
    }
    bounds.validate()?;
    let [nx, ny] = dims;
    let rows: Vec<Vec<(f64, bool)>> = (0..ny)
        .into_par_iter()
        .map(|j| {
            let y = bounds.node(1, j, ny);
            (0..nx)
                .map(|i| evaluate_node(&|s: &BellDiagonalState| measure.evaluate(s), [bounds.node(0, i, nx), y, c3]))
                .collect()
        })
        .collect();
    let (values, valid) = rows.into_iter().flatten().unzip();
    Ok(ScalarField2 {
        dims,
        bounds,
        c3,
        values,
        valid,
    })
}
