//! Quality measures of a gradient discretisation, evaluated on one mesh.
//!
//! All quantities live on the zero-trace space `X_{D,0}` with the norm
//! `||grad_D .||_{L2}`, whose Gram matrix is the interior diffusion matrix
//! with unit coefficient.

use crate::error::{Error, Result};
use crate::hmm::{CellField, DiscreteVector, HmmDiscretisation};
use crate::mesh::Point;
use crate::quadrature::TriangleRule;
use crate::sparse::{dot, norm2, SparseCholesky};
use std::f64::consts::PI;

const LINEAR_REL_TOL: f64 = 1e-12;
pub const POWER_TOL: f64 = 1e-8;
pub const POWER_MAX_ITER: usize = 10_000;

/// Discrete Poincare constant and a maximizer.
#[derive(Debug, Clone)]
pub struct Coercivity {
    pub value: f64,
    /// Normalized so that `||grad_D phi|| = 1`.
    pub extremal: DiscreteVector,
    pub iterations: usize,
}

/// `C_D = max ||Pi_D phi|| / ||grad_D phi||` over `X_{D,0}`, by power
/// iteration on `A^{-1} M`.
pub fn coercivity_constant(disc: &HmmDiscretisation) -> Result<Coercivity> {
    let mesh = disc.mesh();
    let nc = mesh.num_cells();
    let chol = SparseCholesky::new(&disc.assemble_interior_diffusion(1.0))?;
    let mass: Vec<f64> = mesh.cells().iter().map(|c| c.measure).collect();
    let apply_m = |x: &[f64]| -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        for k in 0..nc {
            y[k] = mass[k] * x[k];
        }
        y
    };

    let mut x = vec![0.0; disc.num_interior_dofs()];
    x[..nc].fill(1.0);
    let mut lambda = 0.0;
    for it in 1..=POWER_MAX_ITER {
        let mut y = chol.solve(&apply_m(&x), LINEAR_REL_TOL)?;
        // Rayleigh quotient of M against A at the new iterate
        let ay = chol.matrix().matvec(&y);
        let anorm = dot(&y, &ay).sqrt();
        y.iter_mut().for_each(|v| *v /= anorm);
        let next = dot(&y, &apply_m(&y));
        let done = (next - lambda).abs() <= POWER_TOL * next;
        lambda = next;
        x = y;
        if done {
            return Ok(Coercivity {
                value: lambda.sqrt(),
                extremal: disc.zero_trace_vector(&x),
                iterations: it,
            });
        }
    }
    Err(Error::PowerIteration {
        iterations: POWER_MAX_ITER,
    })
}

/// `||Pi_D phi|| / ||grad_D phi||`
pub fn poincare_ratio(disc: &HmmDiscretisation, phi: &DiscreteVector) -> f64 {
    disc.reconstruct_function(phi).l2_norm(disc.mesh())
        / disc.diamond_l2_norm(&disc.reconstruct_gradient(phi))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsistencyDefect {
    /// `||Pi_D w - phi||`
    pub value: f64,
    /// `||grad_D w - grad phi||`
    pub gradient: f64,
}

impl ConsistencyDefect {
    pub fn total(&self) -> f64 {
        self.value + self.gradient
    }
}

/// Upper bound of `S_D(phi)` at the interpolant with face means on faces and
/// cell means on cells. Both norms by quadrature.
pub fn consistency_defect<F, G>(disc: &HmmDiscretisation, phi: F, grad: G) -> ConsistencyDefect
where
    F: Fn(Point) -> f64,
    G: Fn(Point) -> Point,
{
    let mesh = disc.mesh();
    let mut w = disc.interpolate_initial(&phi);
    w.faces = disc.face_means(&phi);

    let mut value = 0.0;
    for c in mesh.cells() {
        value += disc.integrate_cell(c.id, |x| (w.cells[c.id] - phi(x)).powi(2));
    }
    let gw = disc.reconstruct_gradient(&w);
    let rule = TriangleRule::standard();
    let mut gradient = 0.0;
    for c in mesh.cells() {
        for i in 0..c.faces.len() {
            let g = gw.values[disc.diamond_index(c.id, i)];
            let (x, a, b) = disc.diamond_triangle(c.id, i);
            gradient += rule.integrate(x, a, b, |p| (g - grad(p)).norm_squared());
        }
    }
    ConsistencyDefect {
        value: value.sqrt(),
        gradient: gradient.sqrt(),
    }
}

/// `b_i = int grad_D e_i . psi + Pi_D e_i div psi` over `X_{D,0}`.
pub fn conformity_load<P, D>(disc: &HmmDiscretisation, psi: P, div: D) -> Vec<f64>
where
    P: Fn(Point) -> Point,
    D: Fn(Point) -> f64,
{
    let mesh = disc.mesh();
    let rule = TriangleRule::standard();
    let mut b = vec![0.0; disc.num_interior_dofs()];
    for c in mesh.cells() {
        let dofs = disc.interior_local_dofs(c.id);
        b[c.id] += disc.integrate_cell(c.id, &div);
        for i in 0..c.faces.len() {
            let (x, p, q) = disc.diamond_triangle(c.id, i);
            let flux: Point = rule.integrate(x, p, q, &psi);
            for (a, dof) in dofs.iter().enumerate() {
                if let Some(r) = dof {
                    b[*r] += disc.local_basis_gradient(c.id, i, a).dot(&flux);
                }
            }
        }
    }
    b
}

/// `sqrt(b^T A^{-1} b)` for the zero-trace Gram matrix `A`.
fn energy_dual(disc: &HmmDiscretisation, b: &[f64]) -> Result<f64> {
    if norm2(b) == 0.0 {
        return Ok(0.0);
    }
    let chol = SparseCholesky::new(&disc.assemble_interior_diffusion(1.0))?;
    let x = chol.solve(b, LINEAR_REL_TOL)?;
    Ok(dot(b, &x).max(0.0).sqrt())
}

/// `W_D(psi)`: the supremum is attained at `w = A^{-1} b`.
pub fn limit_conformity_defect<P, D>(disc: &HmmDiscretisation, psi: P, div: D) -> Result<f64>
where
    P: Fn(Point) -> Point,
    D: Fn(Point) -> f64,
{
    energy_dual(disc, &conformity_load(disc, psi, div))
}

/// `|int grad_D w . psi + Pi_D w div psi| / ||grad_D w||` for one `w`.
pub fn conformity_ratio(disc: &HmmDiscretisation, b: &[f64], w: &DiscreteVector) -> f64 {
    let x = disc.restrict_interior(w);
    dot(b, &x).abs() / disc.diamond_l2_norm(&disc.reconstruct_gradient(w))
}

/// `||w||_{*,D}` for a piecewise constant `w` (one value per cell).
pub fn dual_norm(disc: &HmmDiscretisation, w: &CellField) -> Result<f64> {
    let mesh = disc.mesh();
    if w.values.len() != mesh.num_cells() {
        return Err(Error::DimensionMismatch {
            expected: mesh.num_cells(),
            got: w.values.len(),
        });
    }
    let mut c = vec![0.0; disc.num_interior_dofs()];
    for cell in mesh.cells() {
        c[cell.id] = cell.measure * w.values[cell.id];
    }
    energy_dual(disc, &c)
}

/// Smooth test function with its gradient.
#[derive(Clone, Copy)]
pub struct ScalarSample {
    pub label: &'static str,
    pub value: fn(Point) -> f64,
    pub gradient: fn(Point) -> Point,
}

/// Smooth vector field with its divergence.
#[derive(Clone, Copy)]
pub struct FieldSample {
    pub label: &'static str,
    pub field: fn(Point) -> Point,
    pub divergence: fn(Point) -> f64,
}

pub const SCALAR_SAMPLES: &[ScalarSample] = &[
    ScalarSample {
        label: "sinsin",
        value: |p| (PI * p.x).sin() * (PI * p.y).sin(),
        gradient: |p| {
            Point::new(
                PI * (PI * p.x).cos() * (PI * p.y).sin(),
                PI * (PI * p.x).sin() * (PI * p.y).cos(),
            )
        },
    },
    ScalarSample {
        label: "affine",
        value: |p| 1.0 + 2.0 * p.x - p.y,
        gradient: |_| Point::new(2.0, -1.0),
    },
    ScalarSample {
        label: "constant",
        value: |_| 1.0,
        gradient: |_| Point::zeros(),
    },
    ScalarSample {
        label: "exp",
        value: |p| (-p.x - p.y).exp(),
        gradient: |p| Point::new(-1.0, -1.0) * (-p.x - p.y).exp(),
    },
];

pub const FIELD_SAMPLES: &[FieldSample] = &[
    FieldSample {
        label: "x0",
        field: |p| Point::new(p.x, 0.0),
        divergence: |_| 1.0,
    },
    FieldSample {
        label: "constant",
        field: |_| Point::new(1.0, -2.0),
        divergence: |_| 0.0,
    },
    FieldSample {
        label: "swirl",
        field: |p| Point::new(-(PI * p.y).sin(), (PI * p.x).sin()),
        divergence: |_| 0.0,
    },
    FieldSample {
        label: "radial",
        field: |p| Point::new(p.x * p.x, p.x * p.y),
        divergence: |p| 3.0 * p.x,
    },
];

pub fn scalar_sample(label: &str) -> Result<ScalarSample> {
    SCALAR_SAMPLES
        .iter()
        .find(|s| s.label == label)
        .copied()
        .ok_or_else(|| Error::InvalidArgument(format!("unknown scalar sample `{label}`")))
}

pub fn field_sample(label: &str) -> Result<FieldSample> {
    FIELD_SAMPLES
        .iter()
        .find(|s| s.label == label)
        .copied()
        .ok_or_else(|| Error::InvalidArgument(format!("unknown field sample `{label}`")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GdmQualityReport {
    pub h: f64,
    pub c_d: f64,
    pub s_d: Vec<(String, f64)>,
    pub w_d: Vec<(String, f64)>,
}

impl GdmQualityReport {
    pub fn csv_header(&self) -> String {
        let mut cols = vec!["h".to_string(), "C_D".to_string()];
        cols.extend(self.s_d.iter().map(|(l, _)| format!("S_D[{l}]")));
        cols.extend(self.w_d.iter().map(|(l, _)| format!("W_D[{l}]")));
        cols.join(",")
    }

    pub fn csv_row(&self) -> String {
        let mut cols = vec![format!("{:.8e}", self.h), format!("{:.8e}", self.c_d)];
        cols.extend(self.s_d.iter().chain(&self.w_d).map(|(_, v)| format!("{v:.8e}")));
        cols.join(",")
    }
}

pub fn quality_report(
    disc: &HmmDiscretisation,
    scalar_labels: &[String],
    field_labels: &[String],
) -> Result<GdmQualityReport> {
    let c_d = coercivity_constant(disc)?.value;
    let mut s_d = Vec::new();
    for l in scalar_labels {
        let s = scalar_sample(l)?;
        s_d.push((l.clone(), consistency_defect(disc, s.value, s.gradient).total()));
    }
    let mut w_d = Vec::new();
    for l in field_labels {
        let s = field_sample(l)?;
        w_d.push((l.clone(), limit_conformity_defect(disc, s.field, s.divergence)?));
    }
    Ok(GdmQualityReport {
        h: disc.mesh().mesh_size(),
        c_d,
        s_d,
        w_d,
    })
}
