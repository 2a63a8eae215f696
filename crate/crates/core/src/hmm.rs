//! Hybrid mimetic mixed (HMM) gradient discretisation.
//!
//! Unknowns are one value per cell and one per face. The function
//! reconstruction is the cell value; the gradient reconstruction is constant
//! on each diamond `D_{K,sigma}` (the triangle spanned by the face and the
//! cell point) and equals the consistent cell gradient plus a stabilisation
//! along the face normal:
//!
//! ```text
//! grad_K phi  = 1/|K| sum_sigma |sigma| phi_sigma n_{K,sigma}
//! R_{K,sigma} = phi_sigma - phi_K - grad_K phi . (x_sigma - x_K)
//! grad_D phi  = grad_K phi + sqrt(2) / d_{K,sigma} R_{K,sigma} n_{K,sigma}   on D_{K,sigma}
//! ```
//!
//! Degrees of freedom are numbered cells first, then faces. The zero-trace
//! space `X_{D,0}` (boundary faces removed) uses cells first, then interior
//! faces in increasing face id.

use crate::error::{Error, Result};
use crate::mesh::{Point, PolytopalMesh};
use crate::quadrature::{segment_mean, TriangleRule};
use crate::sparse::SparseMatrix;
use nalgebra::DMatrix;
use std::sync::Arc;

/// Spatial dimension; enters the stabilisation weight `sqrt(d) / d_{K,sigma}`.
const DIM: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteVector {
    pub cells: Vec<f64>,
    pub faces: Vec<f64>,
}

impl DiscreteVector {
    pub fn zeros(mesh: &PolytopalMesh) -> Self {
        DiscreteVector {
            cells: vec![0.0; mesh.num_cells()],
            faces: vec![0.0; mesh.num_faces()],
        }
    }

    /// Point values: `f(x_K)` on cells and `f(x_sigma)` on faces.
    pub fn sample<F: Fn(Point) -> f64>(mesh: &PolytopalMesh, f: F) -> Self {
        DiscreteVector {
            cells: mesh.cells().iter().map(|c| f(c.center)).collect(),
            faces: mesh.faces().iter().map(|s| f(s.barycenter)).collect(),
        }
    }

    pub fn from_dofs(mesh: &PolytopalMesh, dofs: &[f64]) -> Result<Self> {
        let nc = mesh.num_cells();
        let expected = nc + mesh.num_faces();
        if dofs.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: dofs.len(),
            });
        }
        Ok(DiscreteVector {
            cells: dofs[..nc].to_vec(),
            faces: dofs[nc..].to_vec(),
        })
    }

    pub fn to_dofs(&self) -> Vec<f64> {
        let mut v = self.cells.clone();
        v.extend_from_slice(&self.faces);
        v
    }

    pub fn check_size(&self, mesh: &PolytopalMesh) -> Result<()> {
        if self.cells.len() != mesh.num_cells() {
            return Err(Error::DimensionMismatch {
                expected: mesh.num_cells(),
                got: self.cells.len(),
            });
        }
        if self.faces.len() != mesh.num_faces() {
            return Err(Error::DimensionMismatch {
                expected: mesh.num_faces(),
                got: self.faces.len(),
            });
        }
        Ok(())
    }

    /// True if every boundary face value is exactly zero.
    pub fn in_zero_trace_space(&self, mesh: &PolytopalMesh) -> bool {
        mesh.faces()
            .iter()
            .filter(|f| f.is_boundary)
            .all(|f| self.faces[f.id] == 0.0)
    }

    /// `a * self + b * other`
    pub fn combine(&self, a: f64, other: &DiscreteVector, b: f64) -> DiscreteVector {
        let lin = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(x, y)| a * x + b * y).collect();
        DiscreteVector {
            cells: lin(&self.cells, &other.cells),
            faces: lin(&self.faces, &other.faces),
        }
    }
}

/// Piecewise constant function on cells.
#[derive(Debug, Clone, PartialEq)]
pub struct CellField {
    pub values: Vec<f64>,
}

impl CellField {
    pub fn l2_norm(&self, mesh: &PolytopalMesh) -> f64 {
        mesh.cells()
            .iter()
            .zip(&self.values)
            .map(|(c, v)| c.measure * v * v)
            .sum::<f64>()
            .sqrt()
    }
}

/// One vector per diamond, stored cell by cell in local face order.
#[derive(Debug, Clone, PartialEq)]
pub struct DiamondField {
    pub values: Vec<Point>,
}

/// Per-cell linear maps of the HMM reconstruction.
#[derive(Debug, Clone)]
struct LocalOperator {
    /// `|sigma| n_{K,sigma} / |K|`, so `grad_K phi = sum_j weights[j] phi_sigma_j`.
    grad_weights: Vec<Point>,
    /// `sqrt(d) / d_{K,sigma}`
    stab: Vec<f64>,
    /// `|D_{K,sigma}| = |sigma| d_{K,sigma} / d`
    diamond_volumes: Vec<f64>,
    /// Rows `2i, 2i+1`: gradient on diamond `i` as a function of the local
    /// unknowns `(phi_K, phi_sigma_1, ..., phi_sigma_m)`.
    diamond_map: DMatrix<f64>,
    /// `sum_i |D_i| G_i^T G_i`
    stiffness: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct HmmDiscretisation {
    mesh: Arc<PolytopalMesh>,
    local: Vec<LocalOperator>,
    diamond_offsets: Vec<usize>,
    interior_index: Vec<Option<usize>>,
    interior_faces: Vec<usize>,
    boundary_faces: Vec<usize>,
}

impl HmmDiscretisation {
    pub fn new(mesh: Arc<PolytopalMesh>) -> Self {
        let mut local = Vec::with_capacity(mesh.num_cells());
        let mut diamond_offsets = Vec::with_capacity(mesh.num_cells() + 1);
        diamond_offsets.push(0);
        for cell in mesh.cells() {
            let m = cell.faces.len();
            let faces = mesh.faces();
            let grad_weights: Vec<Point> = (0..m)
                .map(|i| cell.normals[i] * (faces[cell.faces[i]].measure / cell.measure))
                .collect();
            let stab: Vec<f64> = cell.distances.iter().map(|d| DIM.sqrt() / d).collect();
            let diamond_volumes: Vec<f64> = (0..m)
                .map(|i| faces[cell.faces[i]].measure * cell.distances[i] / DIM)
                .collect();

            let mut g = DMatrix::zeros(2 * m, m + 1);
            for i in 0..m {
                let n = cell.normals[i];
                let y = faces[cell.faces[i]].barycenter - cell.center;
                let s = stab[i];
                for k in 0..2 {
                    g[(2 * i + k, 0)] = -s * n[k];
                    for j in 0..m {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        g[(2 * i + k, j + 1)] =
                            grad_weights[j][k] + s * n[k] * (delta - grad_weights[j].dot(&y));
                    }
                }
            }
            let mut stiffness = DMatrix::zeros(m + 1, m + 1);
            for i in 0..m {
                let gi = g.rows(2 * i, 2);
                stiffness += gi.transpose() * gi * diamond_volumes[i];
            }
            diamond_offsets.push(diamond_offsets.last().unwrap() + m);
            local.push(LocalOperator {
                grad_weights,
                stab,
                diamond_volumes,
                diamond_map: g,
                stiffness,
            });
        }

        let mut interior_index = vec![None; mesh.num_faces()];
        let mut interior_faces = Vec::new();
        let mut boundary_faces = Vec::new();
        for f in mesh.faces() {
            if f.is_boundary {
                boundary_faces.push(f.id);
            } else {
                interior_index[f.id] = Some(interior_faces.len());
                interior_faces.push(f.id);
            }
        }

        HmmDiscretisation {
            mesh,
            local,
            diamond_offsets,
            interior_index,
            interior_faces,
            boundary_faces,
        }
    }

    pub fn mesh(&self) -> &PolytopalMesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<PolytopalMesh> {
        &self.mesh
    }

    pub fn num_dofs(&self) -> usize {
        self.mesh.num_cells() + self.mesh.num_faces()
    }

    /// Dimension of `X_{D,0}`.
    pub fn num_interior_dofs(&self) -> usize {
        self.mesh.num_cells() + self.interior_faces.len()
    }

    pub fn interior_faces(&self) -> &[usize] {
        &self.interior_faces
    }

    pub fn boundary_faces(&self) -> &[usize] {
        &self.boundary_faces
    }

    /// Index of face `f` in the interior-face enumeration.
    pub fn interior_face_index(&self, f: usize) -> Option<usize> {
        self.interior_index[f]
    }

    pub fn num_diamonds(&self) -> usize {
        *self.diamond_offsets.last().unwrap()
    }

    /// Flat index of diamond `(cell, local face)`.
    pub fn diamond_index(&self, cell: usize, local: usize) -> usize {
        self.diamond_offsets[cell] + local
    }

    pub fn diamond_volume(&self, cell: usize, local: usize) -> f64 {
        self.local[cell].diamond_volumes[local]
    }

    pub fn stabilisation_coefficient(&self, cell: usize, local: usize) -> f64 {
        self.local[cell].stab[local]
    }

    /// Vertices of diamond `(cell, local)`: the cell point and the face end points.
    pub fn diamond_triangle(&self, cell: usize, local: usize) -> (Point, Point, Point) {
        let (a, b) = self.mesh.local_face_endpoints(cell, local);
        (self.mesh.cells()[cell].center, a, b)
    }

    pub fn cell_gradient(&self, phi: &DiscreteVector, cell: usize) -> Point {
        let c = &self.mesh.cells()[cell];
        self.local[cell]
            .grad_weights
            .iter()
            .zip(&c.faces)
            .fold(Point::zeros(), |acc, (w, &f)| acc + w * phi.faces[f])
    }

    /// `R_K(phi)`, one entry per local face.
    pub fn stabilisation(&self, phi: &DiscreteVector, cell: usize) -> Vec<f64> {
        let c = &self.mesh.cells()[cell];
        let g = self.cell_gradient(phi, cell);
        c.faces
            .iter()
            .map(|&f| {
                let y = self.mesh.faces()[f].barycenter - c.center;
                phi.faces[f] - phi.cells[cell] - g.dot(&y)
            })
            .collect()
    }

    pub fn reconstruct_gradient(&self, phi: &DiscreteVector) -> DiamondField {
        let mut values = Vec::with_capacity(self.num_diamonds());
        for (k, c) in self.mesh.cells().iter().enumerate() {
            let g = self.cell_gradient(phi, k);
            let r = self.stabilisation(phi, k);
            for i in 0..c.faces.len() {
                values.push(g + c.normals[i] * (self.local[k].stab[i] * r[i]));
            }
        }
        DiamondField { values }
    }

    pub fn reconstruct_function(&self, phi: &DiscreteVector) -> CellField {
        CellField {
            values: phi.cells.clone(),
        }
    }

    /// `sqrt(sum |D| |field|^2)`
    pub fn diamond_l2_norm(&self, field: &DiamondField) -> f64 {
        let mut acc = 0.0;
        for (k, op) in self.local.iter().enumerate() {
            for (i, vol) in op.diamond_volumes.iter().enumerate() {
                acc += vol * field.values[self.diamond_index(k, i)].norm_squared();
            }
        }
        acc.sqrt()
    }

    /// `sum_D |D| value_D`
    pub fn diamond_integral(&self, field: &DiamondField) -> Point {
        let mut acc = Point::zeros();
        for (k, op) in self.local.iter().enumerate() {
            for (i, vol) in op.diamond_volumes.iter().enumerate() {
                acc += field.values[self.diamond_index(k, i)] * *vol;
            }
        }
        acc
    }

    /// Integral of `f` over cell `k` (fan triangulation from the cell point).
    pub fn integrate_cell<F: FnMut(Point) -> f64>(&self, k: usize, mut f: F) -> f64 {
        let rule = TriangleRule::standard();
        (0..self.mesh.cells()[k].faces.len())
            .map(|i| {
                let (x, a, b) = self.diamond_triangle(k, i);
                rule.integrate(x, a, b, &mut f)
            })
            .sum()
    }

    /// `J_D w`: cell means of `w`, zero on every face.
    pub fn interpolate_initial<F: Fn(Point) -> f64>(&self, w: F) -> DiscreteVector {
        let cells = self
            .mesh
            .cells()
            .iter()
            .map(|c| self.integrate_cell(c.id, &w) / c.measure)
            .collect();
        DiscreteVector {
            cells,
            faces: vec![0.0; self.mesh.num_faces()],
        }
    }

    /// `I_{D,boundary} g(., t)`: face means on the boundary faces, in the
    /// order of [`Self::boundary_faces`].
    pub fn interpolate_boundary<G: Fn(Point, f64) -> f64>(&self, g: G, t: f64) -> Vec<f64> {
        self.boundary_faces
            .iter()
            .map(|&f| {
                let (a, b) = self.mesh.face_endpoints(f);
                segment_mean(a, b, |x| g(x, t))
            })
            .collect()
    }

    /// Overwrites the boundary face values of `phi`.
    pub fn set_boundary(&self, phi: &mut DiscreteVector, values: &[f64]) {
        for (&f, &v) in self.boundary_faces.iter().zip(values) {
            phi.faces[f] = v;
        }
    }

    /// Mean of `w` over every face (boundary and interior).
    pub fn face_means<F: Fn(Point) -> f64>(&self, w: F) -> Vec<f64> {
        (0..self.mesh.num_faces())
            .map(|f| {
                let (a, b) = self.mesh.face_endpoints(f);
                segment_mean(a, b, &w)
            })
            .collect()
    }

    /// Interior unknowns of `phi` in the `X_{D,0}` layout.
    pub fn restrict_interior(&self, phi: &DiscreteVector) -> Vec<f64> {
        let mut x = phi.cells.clone();
        x.extend(self.interior_faces.iter().map(|&f| phi.faces[f]));
        x
    }

    /// Writes `x` (in the `X_{D,0}` layout) into the interior unknowns of `phi`.
    pub fn scatter_interior(&self, x: &[f64], phi: &mut DiscreteVector) {
        let nc = self.mesh.num_cells();
        phi.cells.copy_from_slice(&x[..nc]);
        for (i, &f) in self.interior_faces.iter().enumerate() {
            phi.faces[f] = x[nc + i];
        }
    }

    /// Element of `X_{D,0}` from its interior unknowns.
    pub fn zero_trace_vector(&self, x: &[f64]) -> DiscreteVector {
        let mut phi = DiscreteVector::zeros(&self.mesh);
        self.scatter_interior(x, &mut phi);
        phi
    }

    fn local_dofs(&self, k: usize, face_dof: impl Fn(usize) -> Option<usize>) -> Vec<Option<usize>> {
        let c = &self.mesh.cells()[k];
        std::iter::once(Some(k))
            .chain(c.faces.iter().map(|&f| face_dof(f)))
            .collect()
    }

    fn assemble_with(&self, mu: f64, size: usize, face_dof: impl Fn(usize) -> Option<usize>) -> SparseMatrix {
        let mut triplets = Vec::new();
        for (k, op) in self.local.iter().enumerate() {
            let dofs = self.local_dofs(k, &face_dof);
            for (a, ra) in dofs.iter().enumerate() {
                let Some(r) = ra else { continue };
                for (b, cb) in dofs.iter().enumerate() {
                    let Some(c) = cb else { continue };
                    triplets.push((*r, *c, mu * op.stiffness[(a, b)]));
                }
            }
        }
        SparseMatrix::from_triplets(size, size, &triplets)
    }

    /// `A_ij = mu int grad_D e_i . grad_D e_j` on all of `X_D`.
    pub fn assemble_diffusion(&self, mu: f64) -> SparseMatrix {
        let nc = self.mesh.num_cells();
        self.assemble_with(mu, self.num_dofs(), |f| Some(nc + f))
    }

    /// The diffusion matrix restricted to `X_{D,0}`.
    pub fn assemble_interior_diffusion(&self, mu: f64) -> SparseMatrix {
        let nc = self.mesh.num_cells();
        self.assemble_with(mu, self.num_interior_dofs(), |f| {
            self.interior_index[f].map(|i| nc + i)
        })
    }

    /// Gram matrix of the function reconstruction on `X_D`: `|K|` on cell
    /// diagonals, nothing on faces.
    pub fn assemble_mass(&self) -> SparseMatrix {
        let n = self.num_dofs();
        let triplets: Vec<_> = self
            .mesh
            .cells()
            .iter()
            .map(|c| (c.id, c.id, c.measure))
            .collect();
        SparseMatrix::from_triplets(n, n, &triplets)
    }

    /// `mu A phi` on all of `X_D`, computed cell by cell.
    pub fn apply_diffusion(&self, mu: f64, phi: &DiscreteVector) -> DiscreteVector {
        let mut out = DiscreteVector::zeros(&self.mesh);
        for (k, op) in self.local.iter().enumerate() {
            let c = &self.mesh.cells()[k];
            let m = c.faces.len();
            let loc: Vec<f64> = std::iter::once(phi.cells[k])
                .chain(c.faces.iter().map(|&f| phi.faces[f]))
                .collect();
            for a in 0..=m {
                let v: f64 = (0..=m).map(|b| op.stiffness[(a, b)] * loc[b]).sum::<f64>() * mu;
                if a == 0 {
                    out.cells[k] += v;
                } else {
                    out.faces[c.faces[a - 1]] += v;
                }
            }
        }
        out
    }

    /// Gradient of basis function `e_dof` on diamond `(cell, local)` where
    /// `dof` is a local index (0 = cell, `1 + j` = local face `j`).
    pub fn local_basis_gradient(&self, cell: usize, local: usize, dof: usize) -> Point {
        let g = &self.local[cell].diamond_map;
        Point::new(g[(2 * local, dof)], g[(2 * local + 1, dof)])
    }

    /// Local-to-interior dof map of cell `k` (0 = cell, `1 + j` = face `j`).
    pub fn interior_local_dofs(&self, k: usize) -> Vec<Option<usize>> {
        let nc = self.mesh.num_cells();
        self.local_dofs(k, |g| self.interior_index[g].map(|i| nc + i))
    }
}
