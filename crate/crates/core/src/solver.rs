//! Implicit Euler gradient scheme for the coupled two-species system.
//!
//! Each step solves, for every test function `phi` in `X_{D,0}`,
//!
//! ```text
//! int (u^{n+1} - u^n)/dt Pi phi + mu1 int grad_D u^{n+1} . grad_D phi = int F(u^{n+1}, v^{n+1}) Pi phi
//! ```
//!
//! (and the same for `v` with `mu2`, `G`) by Newton's method. Boundary face
//! values are pinned to the face means of the Dirichlet data at `t^{n+1}`.
//!
//! The algebraic unknown is `[u_int, v_int]`, each in the `X_{D,0}` layout.

use crate::error::{Error, Result};
use crate::hmm::{CellField, DiscreteVector, HmmDiscretisation};
use crate::kinetics::KineticsModel;
use crate::mesh::Point;
use crate::sparse::{norm2, solve_refined, SparseLu, SparseMatrix};
use std::fmt;
use std::sync::Arc;

pub type SpaceFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type SpaceTimeFn = Arc<dyn Fn(Point, f64) -> f64 + Send + Sync>;

/// Data of the continuous problem on the unit square.
#[derive(Clone)]
pub struct ProblemSpec {
    pub mu1: f64,
    pub mu2: f64,
    pub kinetics: KineticsModel,
    pub u_ini: SpaceFn,
    pub v_ini: SpaceFn,
    /// Dirichlet data for `u`.
    pub g: SpaceTimeFn,
    /// Dirichlet data for `v`.
    pub h: SpaceTimeFn,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("mu1", &self.mu1)
            .field("mu2", &self.mu2)
            .field("kinetics", &self.kinetics)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu1 > 0.0 && self.mu2 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "diffusion coefficients must be positive (mu1 = {}, mu2 = {})",
                self.mu1, self.mu2
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn from_times(times: Vec<f64>) -> Result<Self> {
        if times.first() != Some(&0.0) {
            return Err(Error::InvalidArgument("time grid must start at 0".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("time grid must be strictly increasing".into()));
        }
        Ok(TimeGrid { times })
    }

    /// `steps` equal steps on `[0, t_final]`.
    pub fn uniform(t_final: f64, steps: usize) -> Result<Self> {
        if !(t_final > 0.0) && steps > 0 {
            return Err(Error::InvalidArgument("final time must be positive".into()));
        }
        let times = (0..=steps)
            .map(|n| if n == steps { t_final } else { t_final * n as f64 / steps as f64 })
            .collect();
        Self::from_times(times)
    }

    /// Uniform grid with step as close to `dt` as divides `t_final`.
    pub fn with_step(dt: f64, t_final: f64) -> Result<Self> {
        if !(dt > 0.0) || !(t_final > 0.0) {
            return Err(Error::InvalidArgument("dt and T must be positive".into()));
        }
        let steps = ((t_final / dt) - 1e-9).ceil().max(1.0) as usize;
        Self::uniform(t_final, steps)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn num_steps(&self) -> usize {
        self.times.len() - 1
    }

    /// `t^{(n+1)} - t^{(n)}`
    pub fn step(&self, n: usize) -> f64 {
        self.times[n + 1] - self.times[n]
    }

    pub fn max_step(&self) -> f64 {
        (0..self.num_steps()).map(|n| self.step(n)).fold(0.0, f64::max)
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().unwrap()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    /// Euclidean norm of the algebraic residual.
    pub tol_residual: f64,
    pub max_iter: usize,
    pub linear_rel_tol: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            tol_residual: 1e-10,
            max_iter: 20,
            linear_rel_tol: 1e-12,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_residual > 0.0) || self.max_iter < 1 || !(self.linear_rel_tol > 0.0) {
            return Err(Error::InvalidArgument(format!("bad Newton config {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub u: DiscreteVector,
    pub v: DiscreteVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    /// Newton updates performed.
    pub iterations: usize,
    /// Residual norm before each update and after the last one.
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TransientSolution {
    pub times: Vec<f64>,
    pub levels: Vec<State>,
    pub reports: Vec<StepReport>,
}

/// `Pi (next - prev) / dt`
pub fn discrete_time_derivative(prev: &DiscreteVector, next: &DiscreteVector, dt: f64) -> CellField {
    CellField {
        values: next
            .cells
            .iter()
            .zip(&prev.cells)
            .map(|(n, p)| (n - p) / dt)
            .collect(),
    }
}

/// `(J_D u_ini, J_D v_ini)`
pub fn initial_state(disc: &HmmDiscretisation, spec: &ProblemSpec) -> State {
    State {
        u: disc.interpolate_initial(|p| (spec.u_ini)(p)),
        v: disc.interpolate_initial(|p| (spec.v_ini)(p)),
    }
}

/// Sets the boundary face values of `state` from `g`, `h` at time `t`.
pub fn impose_boundary(disc: &HmmDiscretisation, spec: &ProblemSpec, state: &mut State, t: f64) {
    let gb = disc.interpolate_boundary(|p, t| (spec.g)(p, t), t);
    let hb = disc.interpolate_boundary(|p, t| (spec.h)(p, t), t);
    disc.set_boundary(&mut state.u, &gb);
    disc.set_boundary(&mut state.v, &hb);
}

/// Scheme equations tested against every basis function of `X_{D,0}`,
/// `u` block first. Face rows carry only diffusion.
pub fn assemble_residual(
    disc: &HmmDiscretisation,
    state: &State,
    prev: &State,
    spec: &ProblemSpec,
    dt: f64,
) -> Result<Vec<f64>> {
    let mesh = disc.mesh();
    for s in [&state.u, &state.v, &prev.u, &prev.v] {
        s.check_size(mesh)?;
    }
    let n0 = disc.num_interior_dofs();
    let nc = mesh.num_cells();
    let au = disc.apply_diffusion(spec.mu1, &state.u);
    let av = disc.apply_diffusion(spec.mu2, &state.v);
    let mut r = vec![0.0; 2 * n0];
    for c in mesh.cells() {
        let k = c.id;
        let (u, v) = (state.u.cells[k], state.v.cells[k]);
        r[k] = c.measure * (u - prev.u.cells[k]) / dt + au.cells[k] - c.measure * spec.kinetics.f(u, v);
        r[n0 + k] =
            c.measure * (v - prev.v.cells[k]) / dt + av.cells[k] - c.measure * spec.kinetics.g(u, v);
    }
    for (i, &f) in disc.interior_faces().iter().enumerate() {
        r[nc + i] = au.faces[f];
        r[n0 + nc + i] = av.faces[f];
    }
    Ok(r)
}

/// Time-step matrix without reaction terms, with explicit slots for the
/// cell-cell reaction coupling.
struct JacobianTemplate {
    dt: f64,
    base: SparseMatrix,
    /// Per cell: slots of (uK,uK), (uK,vK), (vK,uK), (vK,vK).
    slots: Vec<[usize; 4]>,
}

impl JacobianTemplate {
    fn new(disc: &HmmDiscretisation, spec: &ProblemSpec, dt: f64) -> Self {
        let n0 = disc.num_interior_dofs();
        let a1 = disc.assemble_interior_diffusion(spec.mu1);
        let a2 = disc.assemble_interior_diffusion(spec.mu2);
        let mut triplets = Vec::with_capacity(a1.nnz() + a2.nnz() + 4 * disc.mesh().num_cells());
        for (r, c, v) in a1.triplets() {
            triplets.push((r, c, v));
        }
        for (r, c, v) in a2.triplets() {
            triplets.push((n0 + r, n0 + c, v));
        }
        for c in disc.mesh().cells() {
            let k = c.id;
            let m = c.measure / dt;
            triplets.push((k, k, m));
            triplets.push((n0 + k, n0 + k, m));
            triplets.push((k, n0 + k, 0.0));
            triplets.push((n0 + k, k, 0.0));
        }
        let base = SparseMatrix::from_triplets(2 * n0, 2 * n0, &triplets);
        let slots = (0..disc.mesh().num_cells())
            .map(|k| {
                let p = |r, c| base.position(r, c).expect("slot in pattern");
                [p(k, k), p(k, n0 + k), p(n0 + k, k), p(n0 + k, n0 + k)]
            })
            .collect();
        JacobianTemplate { dt, base, slots }
    }

    fn fill(&self, disc: &HmmDiscretisation, state: &State, kinetics: &KineticsModel) -> SparseMatrix {
        let mut j = self.base.clone();
        let vals = j.values_mut();
        for c in disc.mesh().cells() {
            let k = c.id;
            let jac = kinetics.jacobian(state.u.cells[k], state.v.cells[k]);
            let s = &self.slots[k];
            vals[s[0]] -= c.measure * jac[0][0];
            vals[s[1]] -= c.measure * jac[0][1];
            vals[s[2]] -= c.measure * jac[1][0];
            vals[s[3]] -= c.measure * jac[1][1];
        }
        j
    }
}

/// Exact linearization of [`assemble_residual`] with respect to the interior
/// unknowns.
pub fn assemble_jacobian(disc: &HmmDiscretisation, state: &State, spec: &ProblemSpec, dt: f64) -> SparseMatrix {
    JacobianTemplate::new(disc, spec, dt).fill(disc, state, &spec.kinetics)
}

/// Newton time stepper. Caches the Jacobian pattern and its symbolic LU
/// across steps of equal length.
pub struct Stepper<'a> {
    disc: &'a HmmDiscretisation,
    spec: &'a ProblemSpec,
    cfg: NewtonConfig,
    cache: Option<(JacobianTemplate, SparseLu)>,
}

impl<'a> Stepper<'a> {
    pub fn new(disc: &'a HmmDiscretisation, spec: &'a ProblemSpec, cfg: NewtonConfig) -> Result<Self> {
        spec.validate()?;
        cfg.validate()?;
        Ok(Stepper {
            disc,
            spec,
            cfg,
            cache: None,
        })
    }

    fn template(&mut self, dt: f64) -> Result<&mut (JacobianTemplate, SparseLu)> {
        let stale = match &self.cache {
            Some((t, _)) => t.dt != dt,
            None => true,
        };
        if stale {
            let t = JacobianTemplate::new(self.disc, self.spec, dt);
            let lu = match self.cache.take() {
                // pattern does not depend on dt
                Some((_, lu)) => lu,
                None => SparseLu::analyze(&t.base)?,
            };
            self.cache = Some((t, lu));
        }
        Ok(self.cache.as_mut().unwrap())
    }

    /// One implicit Euler step from `prev` to time `t_next = t_prev + dt`.
    pub fn advance(&mut self, prev: &State, t_next: f64, dt: f64) -> Result<(State, StepReport)> {
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        let disc = self.disc;
        let spec = self.spec;
        let cfg = self.cfg;
        let n0 = disc.num_interior_dofs();

        let mut state = prev.clone();
        impose_boundary(disc, spec, &mut state, t_next);
        let mut residuals = Vec::new();
        for iter in 0..=cfg.max_iter {
            let r = assemble_residual(disc, &state, prev, spec, dt)?;
            let rn = norm2(&r);
            residuals.push(rn);
            if !rn.is_finite() {
                return Err(Error::NewtonDiverged {
                    iterations: iter,
                    residual: rn,
                });
            }
            if rn <= cfg.tol_residual {
                return Ok((
                    state,
                    StepReport {
                        iterations: iter,
                        residuals,
                    },
                ));
            }
            if iter == cfg.max_iter {
                return Err(Error::NewtonDiverged {
                    iterations: iter,
                    residual: rn,
                });
            }
            let (template, lu) = self.template(dt)?;
            let jac = template.fill(disc, &state, &spec.kinetics);
            lu.factorize(&jac)?;
            let delta = solve_refined(lu, &jac, &r, cfg.linear_rel_tol)?;

            let mut xu = disc.restrict_interior(&state.u);
            let mut xv = disc.restrict_interior(&state.v);
            xu.iter_mut().zip(&delta[..n0]).for_each(|(x, d)| *x -= d);
            xv.iter_mut().zip(&delta[n0..]).for_each(|(x, d)| *x -= d);
            disc.scatter_interior(&xu, &mut state.u);
            disc.scatter_interior(&xv, &mut state.v);
        }
        unreachable!()
    }
}

/// Single step without a persistent [`Stepper`].
pub fn advance_step(
    disc: &HmmDiscretisation,
    prev: &State,
    t_next: f64,
    dt: f64,
    spec: &ProblemSpec,
    cfg: NewtonConfig,
) -> Result<(State, StepReport)> {
    Stepper::new(disc, spec, cfg)?.advance(prev, t_next, dt)
}

/// Runs the scheme over `grid`, handing every level to `observer`
/// (`level`, `time`, `state`, step report for levels >= 1). Returns the final
/// state.
pub fn solve_transient_with<O>(
    spec: &ProblemSpec,
    disc: &HmmDiscretisation,
    grid: &TimeGrid,
    cfg: NewtonConfig,
    mut observer: O,
) -> Result<State>
where
    O: FnMut(usize, f64, &State, Option<&StepReport>),
{
    let mut stepper = Stepper::new(disc, spec, cfg)?;
    let mut state = initial_state(disc, spec);
    observer(0, 0.0, &state, None);
    for n in 0..grid.num_steps() {
        let t = grid.times()[n + 1];
        let (next, report) = stepper.advance(&state, t, grid.step(n)).map_err(|e| Error::Step {
            level: n + 1,
            time: t,
            source: Box::new(e),
        })?;
        observer(n + 1, t, &next, Some(&report));
        state = next;
    }
    Ok(state)
}

/// Runs the scheme and keeps every time level.
pub fn solve_transient(
    spec: &ProblemSpec,
    disc: &HmmDiscretisation,
    grid: &TimeGrid,
    cfg: NewtonConfig,
) -> Result<TransientSolution> {
    let mut levels = Vec::with_capacity(grid.times().len());
    let mut reports = Vec::with_capacity(grid.num_steps());
    solve_transient_with(spec, disc, grid, cfg, |_, _, s, r| {
        levels.push(s.clone());
        if let Some(r) = r {
            reports.push(r.clone());
        }
    })?;
    Ok(TransientSolution {
        times: grid.times().to_vec(),
        levels,
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetics::{brusselator, no_reaction, BrusselatorParams};
    use crate::mesh::PolytopalMesh;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn disc(n: usize) -> HmmDiscretisation {
        HmmDiscretisation::new(Arc::new(PolytopalMesh::structured_triangular(n).unwrap()))
    }

    fn affine_spec() -> ProblemSpec {
        let u = |p: Point| 1.0 + 2.0 * p.x - 0.5 * p.y;
        let v = |p: Point| -0.3 + 0.25 * p.x + 1.5 * p.y;
        ProblemSpec {
            mu1: 0.25,
            mu2: 0.7,
            kinetics: no_reaction(),
            u_ini: Arc::new(u),
            v_ini: Arc::new(v),
            g: Arc::new(move |p, _| u(p)),
            h: Arc::new(move |p, _| v(p)),
        }
    }

    fn exponential_spec() -> ProblemSpec {
        ProblemSpec {
            mu1: 0.25,
            mu2: 0.25,
            kinetics: brusselator(BrusselatorParams::default()),
            u_ini: Arc::new(|p| (-p.x - p.y).exp()),
            v_ini: Arc::new(|p| (p.x + p.y).exp()),
            g: Arc::new(|p, t| (-p.x - p.y - 0.5 * t).exp()),
            h: Arc::new(|p, t| (p.x + p.y + 0.5 * t).exp()),
        }
    }

    fn random_state(d: &HmmDiscretisation, rng: &mut ChaCha8Rng) -> State {
        let mut r = || {
            let mut v = DiscreteVector::zeros(d.mesh());
            v.cells.iter_mut().for_each(|x| *x = rng.random_range(0.2..1.5));
            v.faces.iter_mut().for_each(|x| *x = rng.random_range(0.2..1.5));
            v
        };
        State { u: r(), v: r() }
    }

    #[test]
    fn time_derivative() {
        let d = disc(2);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = random_state(&d, &mut rng);
        assert!(discrete_time_derivative(&s.u, &s.u, 0.1).values.iter().all(|&v| v == 0.0));
        let shifted = DiscreteVector {
            cells: s.u.cells.iter().map(|x| x + 0.1 * 3.0).collect(),
            faces: s.u.faces.clone(),
        };
        assert!(discrete_time_derivative(&s.u, &shifted, 0.1)
            .values
            .iter()
            .all(|v| (v - 3.0).abs() < 1e-12));
        let dd = discrete_time_derivative(&s.u, &s.v, 0.5);
        for k in 0..s.u.cells.len() {
            assert_eq!(dd.values[k], (s.v.cells[k] - s.u.cells[k]) / 0.5);
        }
    }

    #[test]
    fn time_grid() {
        let g = TimeGrid::with_step(1e-3, 1.0).unwrap();
        assert_eq!(g.num_steps(), 1000);
        assert_eq!(g.final_time(), 1.0);
        assert!((0..g.num_steps()).all(|n| (g.step(n) - 1e-3).abs() < 1e-15));
        assert!((g.max_step() - 1e-3).abs() < 1e-15);
        assert!(TimeGrid::from_times(vec![0.0, 0.5, 0.5]).is_err());
        assert!(TimeGrid::from_times(vec![0.1, 0.5]).is_err());
    }

    #[test]
    fn affine_state_has_zero_residual() {
        let d = disc(4);
        let spec = affine_spec();
        let s = State {
            u: DiscreteVector::sample(d.mesh(), |p| (spec.u_ini)(p)),
            v: DiscreteVector::sample(d.mesh(), |p| (spec.v_ini)(p)),
        };
        let r = assemble_residual(&d, &s, &s, &spec, 0.01).unwrap();
        assert!(norm2(&r) <= 1e-12, "{}", norm2(&r));
    }

    #[test]
    fn face_rows_carry_only_diffusion() {
        let d = disc(3);
        let spec = exponential_spec();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let s = random_state(&d, &mut rng);
        let p = random_state(&d, &mut rng);
        let r = assemble_residual(&d, &s, &p, &spec, 0.01).unwrap();
        let au = d.assemble_diffusion(spec.mu1).matvec(&s.u.to_dofs());
        let nc = d.mesh().num_cells();
        for (i, &f) in d.interior_faces().iter().enumerate() {
            assert!((r[nc + i] - au[nc + f]).abs() < 1e-12);
        }
    }

    #[test]
    fn residual_matches_hand_assembly_on_two_cells() {
        // n = 1: one interior face (the diagonal) and two cells.
        let d = disc(1);
        let spec = exponential_spec();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let s = random_state(&d, &mut rng);
        let p = random_state(&d, &mut rng);
        let dt = 0.05;
        let r = assemble_residual(&d, &s, &p, &spec, dt).unwrap();
        let a = d.assemble_diffusion(spec.mu1).to_dense();
        let x = nalgebra::DVector::from_vec(s.u.to_dofs());
        let ax = &a * x;
        let c0 = &d.mesh().cells()[0];
        let (u, v) = (s.u.cells[0], s.v.cells[0]);
        let hand = c0.measure * (u - p.u.cells[0]) / dt + ax[0]
            - c0.measure * (u * u * v - 2.0 * u);
        assert!((r[0] - hand).abs() < 1e-12);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let d = disc(2);
        let spec = exponential_spec();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let dt = 0.01;
        let n0 = d.num_interior_dofs();
        let nc = d.mesh().num_cells();
        for _ in 0..3 {
            let s = random_state(&d, &mut rng);
            let p = random_state(&d, &mut rng);
            let j = assemble_jacobian(&d, &s, &spec, dt).to_dense();
            let h = 1e-6;
            for col in 0..2 * n0 {
                let bump = |sign: f64| {
                    let mut t = s.clone();
                    let (vec, i) = if col < n0 { (&mut t.u, col) } else { (&mut t.v, col - n0) };
                    if i < nc {
                        vec.cells[i] += sign * h;
                    } else {
                        vec.faces[d.interior_faces()[i - nc]] += sign * h;
                    }
                    assemble_residual(&d, &t, &p, &spec, dt).unwrap()
                };
                let (rp, rm) = (bump(1.0), bump(-1.0));
                for row in 0..2 * n0 {
                    let fd = (rp[row] - rm[row]) / (2.0 * h);
                    let scale = j[(row, col)].abs().max(1.0);
                    assert!((fd - j[(row, col)]).abs() <= 1e-5 * scale, "({row},{col}) {fd} vs {}", j[(row, col)]);
                }
            }
        }
    }

    #[test]
    fn reaction_free_jacobian_is_block_spd() {
        let d = disc(2);
        let mut spec = exponential_spec();
        spec.kinetics = no_reaction();
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let s = random_state(&d, &mut rng);
        let j = assemble_jacobian(&d, &s, &spec, 0.1);
        assert!(j.max_asymmetry() < 1e-13);
        let n0 = d.num_interior_dofs();
        assert!(j.triplets().iter().all(|&(r, c, v)| (r < n0) == (c < n0) || v == 0.0));
        let e = j.to_dense().symmetric_eigen();
        assert!(e.eigenvalues.iter().all(|&l| l > 0.0));
    }

    #[test]
    fn coupling_only_on_cells() {
        let d = disc(3);
        let spec = exponential_spec();
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let s = random_state(&d, &mut rng);
        let j = assemble_jacobian(&d, &s, &spec, 0.1);
        let n0 = d.num_interior_dofs();
        let nc = d.mesh().num_cells();
        for (r, c, v) in j.triplets() {
            if (r < n0) != (c < n0) && v != 0.0 {
                assert!(r % n0 < nc && c % n0 == r % n0);
            }
        }
    }

    #[test]
    fn linear_problem_converges_in_one_iteration() {
        let d = disc(4);
        let spec = affine_spec();
        let prev = initial_state(&d, &spec);
        let (next, rep) = advance_step(&d, &prev, 0.01, 0.01, &spec, NewtonConfig::default()).unwrap();
        assert_eq!(rep.iterations, 1);
        let exact = DiscreteVector::sample(d.mesh(), |p| (spec.u_ini)(p));
        for (a, b) in next.u.to_dofs().iter().zip(exact.to_dofs()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn small_steps_move_cells_by_order_dt() {
        let d = disc(4);
        let spec = exponential_spec();
        let prev = State {
            u: DiscreteVector::sample(d.mesh(), |p| (spec.u_ini)(p)),
            v: DiscreteVector::sample(d.mesh(), |p| (spec.v_ini)(p)),
        };
        let change = |dt: f64| {
            let (s, _) = advance_step(&d, &prev, dt, dt, &spec, NewtonConfig::default()).unwrap();
            let du: f64 = s.u.cells.iter().zip(&prev.u.cells).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            du
        };
        let (c1, c2) = (change(1e-3), change(5e-4));
        let ratio = c1 / c2;
        assert!((1.8..2.2).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn brusselator_newton_is_quadratic() {
        let d = disc(8);
        let spec = exponential_spec();
        let grid = TimeGrid::uniform(0.02, 20).unwrap();
        let mut worst = 0usize;
        let mut ratios = Vec::new();
        solve_transient_with(&spec, &d, &grid, NewtonConfig::default(), |_, _, _, r| {
            if let Some(r) = r {
                worst = worst.max(r.iterations);
                for w in r.residuals.windows(2) {
                    if w[1] > 1e-14 {
                        ratios.push(w[1] / (w[0] * w[0]));
                    }
                }
            }
        })
        .unwrap();
        assert!(worst <= 5);
        assert!(ratios.iter().all(|&q| q < 1e3), "{ratios:?}");
    }

    #[test]
    fn zero_steps_returns_initial_level() {
        let d = disc(2);
        let spec = affine_spec();
        let grid = TimeGrid::from_times(vec![0.0]).unwrap();
        let sol = solve_transient(&spec, &d, &grid, NewtonConfig::default()).unwrap();
        assert_eq!(sol.levels.len(), 1);
        assert!(sol.reports.is_empty());
    }

    #[test]
    fn affine_stationary_single_step() {
        let d = disc(3);
        let spec = affine_spec();
        let grid = TimeGrid::uniform(0.1, 1).unwrap();
        let sol = solve_transient(&spec, &d, &grid, NewtonConfig::default()).unwrap();
        let exact = DiscreteVector::sample(d.mesh(), |p| (spec.u_ini)(p));
        let last = &sol.levels[1].u;
        assert!(last.to_dofs().iter().zip(exact.to_dofs()).all(|(a, b)| (a - b).abs() < 1e-8));
    }

    #[test]
    fn bad_inputs_rejected() {
        let d = disc(2);
        let mut spec = affine_spec();
        let prev = initial_state(&d, &spec);
        assert!(advance_step(&d, &prev, 0.0, 0.0, &spec, NewtonConfig::default()).is_err());
        spec.mu1 = 0.0;
        assert!(advance_step(&d, &prev, 0.1, 0.1, &spec, NewtonConfig::default()).is_err());
        let short = State {
            u: DiscreteVector { cells: vec![0.0], faces: vec![] },
            v: prev.v.clone(),
        };
        let spec = affine_spec();
        assert!(matches!(
            assemble_residual(&d, &short, &prev, &spec, 0.1),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn newton_divergence_reported() {
        let d = disc(2);
        let spec = exponential_spec();
        let prev = initial_state(&d, &spec);
        let cfg = NewtonConfig {
            tol_residual: 1e-300,
            max_iter: 2,
            ..NewtonConfig::default()
        };
        match advance_step(&d, &prev, 0.01, 0.01, &spec, cfg) {
            Err(Error::NewtonDiverged { iterations, .. }) => assert_eq!(iterations, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
