//! Grid sampling of canal surfaces, the `(x1, x2, x3 + x4)` projection to
//! three dimensions, and mesh/data file output.

use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::canal::{curvature, first_form_values, surface_jet, CurvatureData, RadiusFunction};
use crate::curves::{make_curve, CurveSpec};
use crate::error::{Error, Result};
use crate::geom::Vec4;
use crate::ptframe::{propagate, seed_frame, FramedCurve};

/// Upper bound on `nu * nv`.
pub const MAX_GRID_POINTS: usize = 10_000_000;

/// `nu` rows over a closed `u` interval, `nv` columns over `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nu: usize,
    pub nv: usize,
    pub u_range: [f64; 2],
}

impl GridSpec {
    pub fn new(nu: usize, nv: usize, u_range: [f64; 2]) -> Result<Self> {
        let g = GridSpec { nu, nv, u_range };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nu < 2 || self.nv < 2 {
            return Err(Error::InvalidInput(format!("grid needs nu, nv >= 2, got {}x{}", self.nu, self.nv)));
        }
        if self.nu.saturating_mul(self.nv) > MAX_GRID_POINTS {
            return Err(Error::InvalidInput(format!("grid {}x{} exceeds {MAX_GRID_POINTS} points", self.nu, self.nv)));
        }
        let [a, b] = self.u_range;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidInput(format!("bad u range [{a}, {b}]")));
        }
        Ok(())
    }

    pub fn du(&self) -> f64 {
        (self.u_range[1] - self.u_range[0]) / (self.nu - 1) as f64
    }

    pub fn dv(&self) -> f64 {
        2.0 * PI / self.nv as f64
    }

    /// Row parameter; the last row lands exactly on the range end.
    pub fn u_at(&self, i: usize) -> f64 {
        if i + 1 == self.nu {
            self.u_range[1]
        } else {
            self.u_range[0] + i as f64 * self.du()
        }
    }

    pub fn v_at(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.nv as f64
    }

    pub fn len(&self) -> usize {
        self.nu * self.nv
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major nodes, `u` outer.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.nu).flat_map(move |i| (0..self.nv).map(move |j| (self.u_at(i), self.v_at(j))))
    }
}

/// Per-node data written to the field CSV.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointFields {
    pub e: f64,
    pub f_form: f64,
    pub g_form: f64,
    pub f: f64,
    pub g: f64,
    pub curvature: CurvatureData,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PatchPoint {
    pub u: f64,
    pub v: f64,
    pub x: Vec4,
    pub fields: Option<PointFields>,
}

#[derive(Clone, Debug)]
pub struct PatchSamples {
    pub grid: GridSpec,
    pub points: Vec<PatchPoint>,
}

impl PatchSamples {
    pub fn irregular_count(&self) -> usize {
        self.points
            .iter()
            .filter(|p| p.fields.is_some_and(|f| !f.curvature.regular))
            .count()
    }
}

/// Samples the canal patch row by row. Curvature, when requested, is the
/// general closed form; irregular nodes are kept and flagged.
pub fn sample_patch(fc: &FramedCurve, rad: &RadiusFunction, gs: &GridSpec, with_curvature: bool) -> Result<PatchSamples> {
    gs.validate()?;
    for i in 0..gs.nu {
        rad.eval_positive(gs.u_at(i))?;
    }
    let rows: Vec<Vec<PatchPoint>> = (0..gs.nu)
        .into_par_iter()
        .map(|i| {
            let u = gs.u_at(i);
            (0..gs.nv)
                .map(|j| {
                    let v = gs.v_at(j);
                    let jet = surface_jet(fc, rad, u, v)?;
                    let fields = with_curvature.then(|| {
                        let ff = first_form_values(&jet);
                        PointFields {
                            e: ff.e,
                            f_form: ff.f,
                            g_form: ff.g,
                            f: jet.f,
                            g: jet.g,
                            curvature: curvature(&jet),
                        }
                    });
                    Ok(PatchPoint { u, v, x: jet.x, fields })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(PatchSamples { grid: *gs, points: rows.concat() })
}

/// `(x1, x2, x3 + x4)`
pub fn project3(p: Vec4) -> [f64; 3] {
    [p[0], p[1], p[2] + p[3]]
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 3]>,
    pub k: Option<Vec<f64>>,
    pub h: Option<Vec<f64>>,
}

impl TriMesh {
    /// Projects the samples and triangulates the grid, stitching the last
    /// `v` column to the first.
    pub fn from_patch(patch: &PatchSamples) -> TriMesh {
        let (nu, nv) = (patch.grid.nu, patch.grid.nv);
        let vertices = patch.points.iter().map(|p| project3(p.x)).collect();
        let id = |i: usize, j: usize| i * nv + j % nv;
        let mut faces = Vec::with_capacity(2 * (nu - 1) * nv);
        for i in 0..nu - 1 {
            for j in 0..nv {
                let (a, b, c, d) = (id(i, j), id(i, j + 1), id(i + 1, j), id(i + 1, j + 1));
                faces.push([a, c, b]);
                faces.push([b, c, d]);
            }
        }
        let channel = |pick: fn(&CurvatureData) -> f64| {
            patch
                .points
                .iter()
                .map(|p| p.fields.map(|f| pick(&f.curvature)))
                .collect::<Option<Vec<f64>>>()
        };
        TriMesh { vertices, faces, k: channel(|c| c.k), h: channel(|c| c.h) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.vertices.is_empty() || self.faces.is_empty() {
            return Err(Error::InvalidMesh("mesh has no vertices or faces".into()));
        }
        let n = self.vertices.len();
        if let Some(f) = self.faces.iter().find(|f| f.iter().any(|&i| i >= n)) {
            return Err(Error::InvalidMesh(format!("face {f:?} indexes past {n} vertices")));
        }
        for ch in [&self.k, &self.h].into_iter().flatten() {
            if ch.len() != n {
                return Err(Error::InvalidMesh("scalar channel length differs from vertex count".into()));
            }
        }
        Ok(())
    }
}

/// Wavefront OBJ: `v` lines in shortest round-trip form, then 1-based `f`
/// lines.
pub fn write_obj_to<W: Write>(mesh: &TriMesh, w: W) -> Result<()> {
    mesh.validate()?;
    let mut w = BufWriter::new(w);
    for [x, y, z] in &mesh.vertices {
        writeln!(w, "v {x:?} {y:?} {z:?}")?;
    }
    for [a, b, c] in &mesh.faces {
        writeln!(w, "f {} {} {}", a + 1, b + 1, c + 1)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_obj(mesh: &TriMesh, path: impl AsRef<Path>) -> Result<()> {
    mesh.validate()?;
    write_obj_to(mesh, File::create(path)?)
}

/// Reads `v` and `f` records; other lines are ignored. Face entries may
/// carry `/`-separated texture or normal indices.
pub fn read_obj<R: Read>(r: R) -> Result<TriMesh> {
    let mut mesh = TriMesh::default();
    let bad = |line: &str| Error::InvalidMesh(format!("malformed OBJ line: {line}"));
    for line in BufReader::new(r).lines() {
        let line = line?;
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let xs: Vec<f64> = it.map(str::parse).collect::<std::result::Result<_, _>>().map_err(|_| bad(&line))?;
                if xs.len() < 3 {
                    return Err(bad(&line));
                }
                mesh.vertices.push([xs[0], xs[1], xs[2]]);
            }
            Some("f") => {
                let ids: Vec<usize> = it
                    .map(|t| t.split('/').next().unwrap_or("").parse::<usize>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad(&line))?;
                if ids.len() != 3 || ids.contains(&0) {
                    return Err(bad(&line));
                }
                mesh.faces.push([ids[0] - 1, ids[1] - 1, ids[2] - 1]);
            }
            _ => {}
        }
    }
    mesh.validate()?;
    Ok(mesh)
}

pub const FIELD_HEADER: [&str; 14] =
    ["u", "v", "E", "F", "G", "f", "g", "K", "H", "Hvec_T", "Hvec_M1", "Hvec_M2", "Hvec_M3", "regular"];

pub fn write_csv_fields_to<W: Write>(patch: &PatchSamples, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(FIELD_HEADER)?;
    for p in &patch.points {
        let f = p
            .fields
            .ok_or_else(|| Error::InvalidInput("field export needs a patch sampled with curvature".into()))?;
        let c = &f.curvature;
        let mut rec: Vec<String> = [p.u, p.v, f.e, f.f_form, f.g_form, f.f, f.g, c.k, c.h]
            .iter()
            .chain(&c.hvec_frame)
            .map(|x| format!("{x:?}"))
            .collect();
        rec.push(if c.regular { "1" } else { "0" }.into());
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_csv_fields(patch: &PatchSamples, path: impl AsRef<Path>) -> Result<()> {
    write_csv_fields_to(patch, File::create(path)?)
}

/// gnuplot `splot` grid data: one `x y z` line per node, a blank line after
/// each `u` row, and the first column repeated to close the loop.
pub fn write_points_to<W: Write>(patch: &PatchSamples, w: W) -> Result<()> {
    let mut w = BufWriter::new(w);
    let nv = patch.grid.nv;
    for row in patch.points.chunks(nv) {
        for p in row.iter().chain(row.first()) {
            let [x, y, z] = project3(p.x);
            writeln!(w, "{x:?} {y:?} {z:?}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// One of the reproduced figure meshes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FigureEntry {
    pub name: String,
    pub radius: String,
    pub u_window: [f64; 2],
    pub nu: usize,
    pub nv: usize,
    pub vertices: usize,
    pub triangles: usize,
    pub obj: String,
    pub points: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FigureManifest {
    pub spine: CurveSpec,
    pub frame_step: f64,
    pub projection: String,
    pub figures: Vec<FigureEntry>,
}

pub const FIGURE_GRID: (usize, usize) = (60, 40);
pub const FIGURE_FRAME_STEP: f64 = 1e-3;

/// Figure radii with their `u` windows. `u²` starts off zero and `cos u²`
/// stays inside its first positivity interval.
pub fn figure_catalog() -> Vec<(&'static str, &'static str, RadiusFunction, [f64; 2])> {
    vec![
        ("figure1", "2u+6", RadiusFunction::linear(2.0, 6.0), [0.0, 2.0 * PI]),
        ("figure2", "u^2", RadiusFunction::quadratic(1.0, 0.0, 0.0), [0.25, 2.0 * PI]),
        ("figure3", "cos(u^2)", RadiusFunction::cos_sq(), [0.0, 1.2]),
    ]
}

pub fn figure_spine() -> CurveSpec {
    CurveSpec::torus(0.6, 0.4, 1.0, 2.0, [0.0, 2.0 * PI])
}

/// Writes the three figure meshes, their gnuplot point files and
/// `manifest.json` into `out`.
pub fn write_figures(out: impl AsRef<Path>) -> Result<FigureManifest> {
    let out = out.as_ref();
    fs::create_dir_all(out)?;
    let spec = figure_spine();
    let curve = make_curve(&spec)?;
    let (a, b) = curve.domain();
    let fc = propagate(&curve, a, b, FIGURE_FRAME_STEP, &seed_frame(&curve, a)?)?;
    let (nu, nv) = FIGURE_GRID;
    let mut figures = Vec::new();
    for (name, label, rad, window) in figure_catalog() {
        let gs = GridSpec::new(nu, nv, window)?;
        let patch = sample_patch(&fc, &rad, &gs, false)?;
        let mesh = TriMesh::from_patch(&patch);
        let obj = format!("{name}.obj");
        let points = format!("{name}.dat");
        write_obj(&mesh, out.join(&obj))?;
        write_points_to(&patch, File::create(out.join(&points))?)?;
        figures.push(FigureEntry {
            name: name.into(),
            radius: label.into(),
            u_window: window,
            nu,
            nv,
            vertices: mesh.vertices.len(),
            triangles: mesh.faces.len(),
            obj,
            points,
        });
    }
    let manifest = FigureManifest {
        spine: spec,
        frame_step: FIGURE_FRAME_STEP,
        projection: "(x1, x2, x3 + x4)".into(),
        figures,
    };
    let path: PathBuf = out.join("manifest.json");
    serde_json::to_writer_pretty(BufWriter::new(File::create(path)?), &manifest)?;
    Ok(manifest)
}
