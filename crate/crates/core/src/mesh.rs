//! Two-dimensional polytopal meshes.
//!
//! Cells are convex polygons given by a counterclockwise vertex loop. Face `i`
//! of a cell joins its vertices `i` and `i + 1`. Faces are shared between
//! cells and deduplicated by their sorted vertex pair.

use crate::error::{Error, Result};
use nalgebra::{Matrix2, Vector2};
use std::collections::HashMap;
use std::fmt::Write as _;

pub type Point = Vector2<f64>;

/// Cells with signed area at or below this are rejected.
pub const MIN_CELL_AREA: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub id: usize,
    pub position: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub id: usize,
    pub vertices: [usize; 2],
    /// One entry for boundary faces, two for interior faces.
    pub cells: Vec<usize>,
    pub measure: f64,
    pub barycenter: Point,
    pub is_boundary: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub id: usize,
    /// Counterclockwise.
    pub vertices: Vec<usize>,
    pub faces: Vec<usize>,
    pub measure: f64,
    pub center: Point,
    /// Outward unit normal per local face.
    pub normals: Vec<Point>,
    /// Orthogonal distance from `center` to each local face.
    pub distances: Vec<f64>,
    pub diameter: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolytopalMesh {
    vertices: Vec<Vertex>,
    faces: Vec<Face>,
    cells: Vec<Cell>,
    size: f64,
}

impl PolytopalMesh {
    /// Builds a mesh from vertex positions and counterclockwise cell loops.
    pub fn from_polygons(positions: Vec<Point>, loops: Vec<Vec<usize>>) -> Result<Self> {
        let vertices: Vec<Vertex> = positions
            .into_iter()
            .enumerate()
            .map(|(id, position)| Vertex { id, position })
            .collect();

        let mut faces: Vec<Face> = Vec::new();
        // sorted vertex pair -> (face id, orientation of first owner)
        let mut face_index: HashMap<(usize, usize), (usize, bool)> = HashMap::new();
        let mut cells = Vec::with_capacity(loops.len());

        for (cid, lp) in loops.into_iter().enumerate() {
            if lp.len() < 3 {
                return Err(Error::Topology(format!(
                    "cell {cid} has {} vertices, need at least 3",
                    lp.len()
                )));
            }
            if let Some(&bad) = lp.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::Topology(format!(
                    "cell {cid} references vertex {bad}, but only {} vertices exist",
                    vertices.len()
                )));
            }
            let pts: Vec<Point> = lp.iter().map(|&v| vertices[v].position).collect();
            let m = pts.len();

            let (area, centroid) = polygon_area_centroid(&pts);
            if area <= MIN_CELL_AREA {
                return Err(Error::DegenerateCell { cell: cid, area });
            }

            let mut face_ids = Vec::with_capacity(m);
            let mut normals = Vec::with_capacity(m);
            let mut distances = Vec::with_capacity(m);
            for i in 0..m {
                let (a, b) = (lp[i], lp[(i + 1) % m]);
                if a == b {
                    return Err(Error::Topology(format!("cell {cid} repeats vertex {a}")));
                }
                let key = (a.min(b), a.max(b));
                let forward = a < b;
                let fid = match face_index.get(&key) {
                    Some(&(fid, first_forward)) => {
                        let face = &mut faces[fid];
                        if face.cells.len() >= 2 {
                            return Err(Error::Topology(format!(
                                "non-manifold face ({a}, {b}) shared by more than two cells"
                            )));
                        }
                        if first_forward == forward {
                            return Err(Error::Topology(format!(
                                "cells {} and {cid} traverse face ({a}, {b}) in the same direction",
                                face.cells[0]
                            )));
                        }
                        face.cells.push(cid);
                        face.is_boundary = false;
                        fid
                    }
                    None => {
                        let fid = faces.len();
                        let (pa, pb) = (vertices[key.0].position, vertices[key.1].position);
                        faces.push(Face {
                            id: fid,
                            vertices: [key.0, key.1],
                            cells: vec![cid],
                            measure: (pb - pa).norm(),
                            barycenter: (pa + pb) * 0.5,
                            is_boundary: true,
                        });
                        face_index.insert(key, (fid, forward));
                        fid
                    }
                };
                let edge = pts[(i + 1) % m] - pts[i];
                let normal = Point::new(edge.y, -edge.x) / edge.norm();
                face_ids.push(fid);
                normals.push(normal);
                distances.push((faces[fid].barycenter - centroid).dot(&normal));
            }

            let mut diameter: f64 = 0.0;
            for i in 0..m {
                for j in (i + 1)..m {
                    diameter = diameter.max((pts[i] - pts[j]).norm());
                }
            }

            cells.push(Cell {
                id: cid,
                vertices: lp,
                faces: face_ids,
                measure: area,
                center: centroid,
                normals,
                distances,
                diameter,
            });
        }

        let size = cells.iter().map(|c| c.diameter).fold(0.0, f64::max);
        Ok(PolytopalMesh {
            vertices,
            faces,
            cells,
            size,
        })
    }

    /// Unit square cut into `n x n` squares, each split along its
    /// lower-left to upper-right diagonal.
    pub fn structured_triangular(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("structured mesh needs n >= 1".into()));
        }
        let step = 1.0 / n as f64;
        let mut positions = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                positions.push(Point::new(i as f64 * step, j as f64 * step));
            }
        }
        let idx = |i: usize, j: usize| j * (n + 1) + i;
        let mut loops = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (v00, v10, v11, v01) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
                loops.push(vec![v00, v10, v11]);
                loops.push(vec![v00, v11, v01]);
            }
        }
        Self::from_polygons(positions, loops)
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Maximum cell diameter.
    pub fn mesh_size(&self) -> f64 {
        self.size
    }

    pub fn vertex_position(&self, v: usize) -> Point {
        self.vertices[v].position
    }

    /// End points of face `f` in the orientation of the cell's vertex loop.
    pub fn local_face_endpoints(&self, cell: usize, local: usize) -> (Point, Point) {
        let c = &self.cells[cell];
        let m = c.vertices.len();
        (
            self.vertices[c.vertices[local]].position,
            self.vertices[c.vertices[(local + 1) % m]].position,
        )
    }

    pub fn face_endpoints(&self, f: usize) -> (Point, Point) {
        let [a, b] = self.faces[f].vertices;
        (self.vertices[a].position, self.vertices[b].position)
    }

    /// Moves the cell point of `cell` and recomputes its face distances.
    /// Intended for sensitivity experiments; nothing checks that the new
    /// point stays inside the cell.
    pub fn set_cell_center(&mut self, cell: usize, center: Point) {
        let faces = &self.faces;
        let c = &mut self.cells[cell];
        c.center = center;
        for (i, &f) in c.faces.iter().enumerate() {
            c.distances[i] = (faces[f].barycenter - center).dot(&c.normals[i]);
        }
    }

    /// Geometric consistency checks.
    pub fn validate(&self) -> ValidationReport {
        let mut closedness: f64 = 0.0;
        let mut stokes: f64 = 0.0;
        let mut distance_identity: f64 = 0.0;
        let mut min_distance = f64::INFINITY;
        let mut total_area = 0.0;
        for c in &self.cells {
            let mut sum_n = Point::zeros();
            let mut sum_xn = Matrix2::zeros();
            let mut sum_d = 0.0;
            for (i, &f) in c.faces.iter().enumerate() {
                let face = &self.faces[f];
                sum_n += c.normals[i] * face.measure;
                sum_xn += c.normals[i] * (face.barycenter - c.center).transpose() * face.measure;
                sum_d += face.measure * c.distances[i];
                min_distance = min_distance.min(c.distances[i]);
            }
            closedness = closedness.max(sum_n.norm());
            stokes = stokes.max((sum_xn - Matrix2::identity() * c.measure).norm());
            distance_identity = distance_identity.max((sum_d - 2.0 * c.measure).abs());
            total_area += c.measure;
        }

        let mut opposite_normals: f64 = 0.0;
        for face in self.faces.iter().filter(|f| !f.is_boundary) {
            let n: Vec<Point> = face
                .cells
                .iter()
                .map(|&k| {
                    let c = &self.cells[k];
                    let local = c.faces.iter().position(|&g| g == face.id).unwrap();
                    c.normals[local]
                })
                .collect();
            opposite_normals = opposite_normals.max((n[0] + n[1]).norm());
        }

        let outside = self
            .vertices
            .iter()
            .filter(|v| {
                let p = v.position;
                !(0.0..=1.0).contains(&p.x) || !(0.0..=1.0).contains(&p.y)
            })
            .count();

        let euler = self.vertices.len() as i64 - self.faces.len() as i64 + self.cells.len() as i64;
        ValidationReport {
            closedness_defect: closedness,
            stokes_defect: stokes,
            distance_identity_defect: distance_identity,
            opposite_normal_defect: opposite_normals,
            min_distance,
            euler_characteristic: euler,
            total_area,
            vertices_outside_unit_square: outside,
        }
    }

    /// Serializes to the text mesh format read by [`load_mesh`].
    pub fn to_mesh_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "vertices {}", self.vertices.len());
        for v in &self.vertices {
            let _ = writeln!(s, "{:?} {:?}", v.position.x, v.position.y);
        }
        let _ = writeln!(s, "cells {}", self.cells.len());
        for c in &self.cells {
            let _ = write!(s, "{}", c.vertices.len());
            for v in &c.vertices {
                let _ = write!(s, " {v}");
            }
            s.push('\n');
        }
        s
    }
}

fn polygon_area_centroid(pts: &[Point]) -> (f64, Point) {
    let m = pts.len();
    let mut area2 = 0.0;
    let mut c = Point::zeros();
    // shoelace relative to the first vertex for round-off
    let o = pts[0];
    for i in 0..m {
        let p = pts[i] - o;
        let q = pts[(i + 1) % m] - o;
        let cross = p.x * q.y - q.x * p.y;
        area2 += cross;
        c += (p + q) * cross;
    }
    let area = 0.5 * area2;
    if area2.abs() < f64::MIN_POSITIVE {
        return (area, o);
    }
    (area, o + c / (3.0 * area2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    /// max_K |sum_sigma |sigma| n_{K,sigma}|
    pub closedness_defect: f64,
    /// max_K |sum_sigma |sigma| n_{K,sigma} (x_sigma - x_K)^T - |K| I|
    pub stokes_defect: f64,
    /// max_K |sum_sigma |sigma| d_{K,sigma} - 2 |K||
    pub distance_identity_defect: f64,
    /// max over interior faces of |n_{K,sigma} + n_{L,sigma}|
    pub opposite_normal_defect: f64,
    pub min_distance: f64,
    /// V - E + C; 1 for a simply connected planar mesh.
    pub euler_characteristic: i64,
    pub total_area: f64,
    pub vertices_outside_unit_square: usize,
}

impl ValidationReport {
    pub fn failures(&self, tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        if self.closedness_defect > tol {
            out.push(format!("closedness defect {:e} > {tol:e}", self.closedness_defect));
        }
        if self.stokes_defect > tol {
            out.push(format!("Stokes identity defect {:e} > {tol:e}", self.stokes_defect));
        }
        if self.distance_identity_defect > tol {
            out.push(format!(
                "distance identity defect {:e} > {tol:e}",
                self.distance_identity_defect
            ));
        }
        if self.opposite_normal_defect > tol {
            out.push(format!(
                "opposite normal defect {:e} > {tol:e}",
                self.opposite_normal_defect
            ));
        }
        if self.min_distance <= 0.0 {
            out.push(format!(
                "cell point outside its cell: min d_K,sigma = {:e}",
                self.min_distance
            ));
        }
        if self.euler_characteristic != 1 {
            out.push(format!(
                "Euler characteristic {} != 1",
                self.euler_characteristic
            ));
        }
        if self.vertices_outside_unit_square > 0 {
            out.push(format!(
                "{} vertices outside the unit square",
                self.vertices_outside_unit_square
            ));
        }
        out
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        self.failures(tol).is_empty()
    }
}

/// Parses the text mesh format.
///
/// ```text
/// vertices <V>
/// x y            (V lines)
/// cells <C>
/// k i1 ... ik    (C lines, counterclockwise, 0-based)
/// ```
///
/// Blank lines and `#` comments are ignored.
pub fn load_mesh(text: &str) -> Result<PolytopalMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let parse_err = |line: usize, message: String| Error::Parse { line, message };

    let nv = read_header(&mut lines, "vertices")?;
    let mut positions = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(0, "unexpected end of file in vertex block".into()))?;
        let vals: Vec<f64> = l
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(ln, format!("bad coordinate: {e}")))?;
        if vals.len() != 2 {
            return Err(parse_err(ln, format!("expected 2 coordinates, got {}", vals.len())));
        }
        positions.push(Point::new(vals[0], vals[1]));
    }

    let nc = read_header(&mut lines, "cells")?;

    let mut loops = Vec::with_capacity(nc);
    for _ in 0..nc {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(0, "unexpected end of file in cell block".into()))?;
        let ids: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(ln, format!("bad index: {e}")))?;
        let Some((&k, rest)) = ids.split_first() else {
            return Err(parse_err(ln, "empty cell line".into()));
        };
        if rest.len() != k {
            return Err(parse_err(ln, format!("cell declares {k} vertices, lists {}", rest.len())));
        }
        if let Some(&bad) = rest.iter().find(|&&v| v >= nv) {
            return Err(parse_err(ln, format!("vertex index {bad} out of range (V = {nv})")));
        }
        loops.push(rest.to_vec());
    }
    if let Some((ln, _)) = lines.next() {
        return Err(parse_err(ln, "unexpected content after cell block".into()));
    }
    PolytopalMesh::from_polygons(positions, loops)
}

fn read_header<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    keyword: &str,
) -> Result<usize> {
    let (ln, l) = lines.next().ok_or_else(|| Error::Parse {
        line: 0,
        message: format!("missing `{keyword}` header"),
    })?;
    let err = |message: String| Error::Parse { line: ln, message };
    let mut tok = l.split_whitespace();
    if tok.next() != Some(keyword) {
        return Err(err(format!("expected `{keyword} <count>`")));
    }
    let count = tok
        .next()
        .and_then(|t| t.parse::<usize>().ok())
        .ok_or_else(|| err(format!("bad count after `{keyword}`")))?;
    if tok.next().is_some() {
        return Err(err("trailing tokens".into()));
    }
    Ok(count)
}
