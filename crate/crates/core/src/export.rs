//! Text formats for states, trajectories, sequences, contours and meshes.
//!
//! Floats are written with 17 significant digits so every value reads back
//! bit-identical. File writers go through a temporary file in the target
//! directory and rename on success, so a failed run leaves no partial file.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tempfile::NamedTempFile;
use thiserror::Error;

use crate::channels::{Trajectory, TrajectorySample};
use crate::geometry::{Bounds, IsosurfaceMesh, Polyline};
use crate::measures::{measure_all, MeasureSet};
use crate::ordering::SortedSequenceReport;
use crate::state::{BellDiagonalState, StateError};

pub const STATE_HEADER: [&str; 3] = ["c1", "c2", "c3"];
pub const TRAJECTORY_HEADER: [&str; 8] = ["t", "c1", "c2", "c3", "c_l1", "c_re", "discord", "geo_discord"];
pub const SEQUENCE_HEADER: [&str; 3] = ["index", "value_a", "value_b"];
pub const POLYLINE_HEADER: [&str; 4] = ["polyline_id", "c1", "c2", "c3"];

#[derive(Debug, Error)]
pub enum ExportError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    State(#[from] StateError),
    #[error("unexpected header {found:?}, expected {expected:?}")]
    Header { found: Vec<String>, expected: Vec<String> },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Scientific notation with 17 significant digits.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes to `path` through a temporary sibling and renames on success.
pub fn write_atomic<F>(path: &Path, write: F) -> Result<(), ExportError>
where
    F: FnOnce(&mut dyn Write) -> Result<(), ExportError>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir)?;
    {
        let mut out = BufWriter::new(tmp.as_file_mut());
        write(&mut out)?;
        out.flush()?;
    }
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn check_header<R: Read>(reader: &mut csv::Reader<R>, expected: &[&str]) -> Result<(), ExportError> {
    let found: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if found != expected {
        return Err(ExportError::Header {
            found,
            expected: expected.iter().map(|s| s.to_string()).collect(),
        });
    }
    Ok(())
}

fn parse_field<T: std::str::FromStr>(record: &csv::StringRecord, idx: usize) -> Result<T, ExportError> {
    let line = record.position().map_or(0, |p| p.line() as usize);
    let raw = record.get(idx).ok_or_else(|| ExportError::Parse {
        line,
        message: format!("missing column {idx}"),
    })?;
    raw.trim().parse().map_err(|_| ExportError::Parse {
        line,
        message: format!("cannot parse {raw:?}"),
    })
}

fn write_rows<W: Write>(out: W, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<(), ExportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_states_csv<W: Write>(out: W, states: &[BellDiagonalState]) -> Result<(), ExportError> {
    write_rows(
        out,
        &STATE_HEADER,
        states.iter().map(|s| s.components().map(format_f64).to_vec()),
    )
}

pub fn read_states_csv<R: Read>(input: R) -> Result<Vec<BellDiagonalState>, ExportError> {
    let mut reader = csv::Reader::from_reader(input);
    check_header(&mut reader, &STATE_HEADER)?;
    reader
        .records()
        .map(|r| {
            let r = r?;
            Ok(BellDiagonalState::new(parse_field(&r, 0)?, parse_field(&r, 1)?, parse_field(&r, 2)?)?)
        })
        .collect()
}

pub fn write_trajectory_csv<W: Write>(out: W, trajectory: &Trajectory) -> Result<(), ExportError> {
    write_rows(
        out,
        &TRAJECTORY_HEADER,
        trajectory.samples.iter().map(|s| {
            let [c1, c2, c3] = s.state.components();
            let m = s.measures;
            [s.t, c1, c2, c3, m.c_l1, m.c_re, m.discord, m.geo_discord]
                .map(format_f64)
                .to_vec()
        }),
    )
}

/// Reads trajectory rows back. The measure columns are taken from the file,
/// not recomputed.
pub fn read_trajectory_csv<R: Read>(input: R) -> Result<Vec<TrajectorySample>, ExportError> {
    let mut reader = csv::Reader::from_reader(input);
    check_header(&mut reader, &TRAJECTORY_HEADER)?;
    reader
        .records()
        .map(|r| {
            let r = r?;
            let v: Vec<f64> = (0..8).map(|i| parse_field(&r, i)).collect::<Result<_, _>>()?;
            Ok(TrajectorySample {
                t: v[0],
                state: BellDiagonalState::new(v[1], v[2], v[3])?,
                measures: MeasureSet {
                    c_l1: v[4],
                    c_re: v[5],
                    discord: v[6],
                    geo_discord: v[7],
                },
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SequenceRow {
    pub index: usize,
    pub value_a: f64,
    pub value_b: f64,
}

pub fn write_sequence_csv<W: Write>(out: W, report: &SortedSequenceReport) -> Result<(), ExportError> {
    write_rows(
        out,
        &SEQUENCE_HEADER,
        report
            .values_a
            .iter()
            .zip(&report.values_b)
            .enumerate()
            .map(|(i, (a, b))| vec![i.to_string(), format_f64(*a), format_f64(*b)]),
    )
}

pub fn read_sequence_csv<R: Read>(input: R) -> Result<Vec<SequenceRow>, ExportError> {
    let mut reader = csv::Reader::from_reader(input);
    check_header(&mut reader, &SEQUENCE_HEADER)?;
    reader
        .records()
        .map(|r| {
            let r = r?;
            Ok(SequenceRow {
                index: parse_field(&r, 0)?,
                value_a: parse_field(&r, 1)?,
                value_b: parse_field(&r, 2)?,
            })
        })
        .collect()
}

/// One row per point. Closed polylines repeat their first point at the end.
pub fn write_polylines_csv<W: Write>(out: W, polylines: &[Polyline]) -> Result<(), ExportError> {
    let rows = polylines.iter().enumerate().flat_map(|(id, line)| {
        let closing = (line.closed && !line.points.is_empty()).then(|| line.points[0]);
        line.points
            .iter()
            .copied()
            .chain(closing)
            .map(move |p| {
                let mut row = vec![id.to_string()];
                row.extend(p.map(format_f64));
                row
            })
    });
    write_rows(out, &POLYLINE_HEADER, rows)
}

pub fn read_polylines_csv<R: Read>(input: R) -> Result<Vec<Polyline>, ExportError> {
    let mut reader = csv::Reader::from_reader(input);
    check_header(&mut reader, &POLYLINE_HEADER)?;
    let mut lines: Vec<(usize, Vec<[f64; 3]>)> = Vec::new();
    for r in reader.records() {
        let r = r?;
        let id: usize = parse_field(&r, 0)?;
        let p = [parse_field(&r, 1)?, parse_field(&r, 2)?, parse_field(&r, 3)?];
        match lines.last_mut() {
            Some((last, points)) if *last == id => points.push(p),
            _ => lines.push((id, vec![p])),
        }
    }
    Ok(lines
        .into_iter()
        .map(|(_, mut points)| {
            let closed = points.len() > 3 && points.first() == points.last();
            if closed {
                points.pop();
            }
            Polyline { points, closed }
        })
        .collect())
}

/// Wavefront text mesh: `v x y z` lines, then 1-based `f i j k` lines.
pub fn write_obj<W: Write>(mut out: W, mesh: &IsosurfaceMesh) -> Result<(), ExportError> {
    for v in &mesh.vertices {
        writeln!(out, "v {} {} {}", format_f64(v[0]), format_f64(v[1]), format_f64(v[2]))?;
    }
    for t in &mesh.triangles {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    Ok(())
}

/// Vertices and 0-based triangles.
pub type ObjData = (Vec<[f64; 3]>, Vec<[u32; 3]>);

/// Reads an OBJ file. Lines other than `v` and `f` are ignored.
pub fn read_obj<R: Read>(input: R) -> Result<ObjData, ExportError> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (n, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        let mut parts = line.split_whitespace();
        let tag = parts.next();
        let fields: Vec<&str> = parts.collect();
        let bad = |message: String| ExportError::Parse { line: n + 1, message };
        match tag {
            Some("v") | Some("f") if fields.len() != 3 => {
                return Err(bad(format!("expected 3 fields, got {}", fields.len())));
            }
            Some("v") => {
                let mut p = [0.0; 3];
                for (slot, f) in p.iter_mut().zip(&fields) {
                    *slot = f.parse().map_err(|_| bad(format!("cannot parse {f:?}")))?;
                }
                vertices.push(p);
            }
            Some("f") => {
                let mut t = [0u32; 3];
                for (slot, f) in t.iter_mut().zip(&fields) {
                    let idx: u32 = f.parse().map_err(|_| bad(format!("cannot parse {f:?}")))?;
                    if idx == 0 {
                        return Err(bad("face indices are 1-based".into()));
                    }
                    *slot = idx - 1;
                }
                triangles.push(t);
            }
            _ => {}
        }
    }
    Ok((vertices, triangles))
}

/// JSON summary written next to an OBJ mesh.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshSidecar {
    pub level: f64,
    pub dims: [usize; 3],
    pub bounds: Bounds<3>,
    pub n_vertices: usize,
    pub n_triangles: usize,
}

impl From<&IsosurfaceMesh> for MeshSidecar {
    fn from(mesh: &IsosurfaceMesh) -> Self {
        Self {
            level: mesh.level,
            dims: mesh.dims,
            bounds: mesh.bounds,
            n_vertices: mesh.vertices.len(),
            n_triangles: mesh.triangles.len(),
        }
    }
}

pub fn sidecar_path(obj: &Path) -> PathBuf {
    obj.with_extension("json")
}

/// Pretty JSON with a trailing newline.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String, ExportError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<W: Write, T: Serialize + ?Sized>(mut out: W, value: &T) -> Result<(), ExportError> {
    out.write_all(to_json_string(value)?.as_bytes())?;
    Ok(())
}

pub fn save_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), ExportError> {
    write_atomic(path, |w| write_json(w, value))
}

/// Writes the mesh and its sidecar; neither file appears unless both succeed
/// in rendering.
pub fn save_mesh(path: &Path, mesh: &IsosurfaceMesh) -> Result<PathBuf, ExportError> {
    let sidecar = sidecar_path(path);
    let json = to_json_string(&MeshSidecar::from(mesh))?;
    write_atomic(path, |w| write_obj(w, mesh))?;
    write_atomic(&sidecar, |w| Ok(w.write_all(json.as_bytes())?))?;
    Ok(sidecar)
}

pub fn load_mesh(path: &Path) -> Result<(IsosurfaceMesh, MeshSidecar), ExportError> {
    let (vertices, triangles) = read_obj(File::open(path)?)?;
    let sidecar: MeshSidecar = serde_json::from_reader(BufReader::new(File::open(sidecar_path(path))?))?;
    Ok((
        IsosurfaceMesh {
            vertices,
            triangles,
            level: sidecar.level,
            dims: sidecar.dims,
            bounds: sidecar.bounds,
        },
        sidecar,
    ))
}

/// Recomputes the measure columns of rows read back from a trajectory file.
pub fn recompute_measures(samples: &mut [TrajectorySample]) {
    for s in samples {
        s.measures = measure_all(&s.state);
    }
}
