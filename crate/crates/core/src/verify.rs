//! Manufactured-solution convergence harness.

use crate::error::{Error, Result};
use crate::hmm::{DiscreteVector, HmmDiscretisation};
use crate::kinetics::{brusselator, BrusselatorParams};
use crate::mesh::{Point, PolytopalMesh};
use crate::solver::{solve_transient_with, NewtonConfig, ProblemSpec, TimeGrid};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

pub type ScalarFn = Arc<dyn Fn(Point, f64) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(Point, f64) -> Point + Send + Sync>;

#[derive(Clone)]
pub struct ExactSolution {
    pub u: ScalarFn,
    pub v: ScalarFn,
    pub grad_u: VectorFn,
    pub grad_v: VectorFn,
}

/// `u = exp(-x - y - t/2)`, `v = exp(x + y + t/2)`.
pub fn brusselator_exact() -> ExactSolution {
    let u = |p: Point, t: f64| (-p.x - p.y - 0.5 * t).exp();
    let v = |p: Point, t: f64| (p.x + p.y + 0.5 * t).exp();
    ExactSolution {
        u: Arc::new(u),
        v: Arc::new(v),
        grad_u: Arc::new(move |p, t| Point::new(-1.0, -1.0) * u(p, t)),
        grad_v: Arc::new(move |p, t| Point::new(1.0, 1.0) * v(p, t)),
    }
}

/// The manufactured test: `a = 0`, `b = 1`, `mu1 = mu2 = 0.25`, initial and
/// boundary data taken from [`brusselator_exact`].
pub fn brusselator_problem() -> (ProblemSpec, ExactSolution) {
    let exact = brusselator_exact();
    let (u, v) = (exact.u.clone(), exact.v.clone());
    let (u0, v0) = (u.clone(), v.clone());
    let spec = ProblemSpec {
        mu1: 0.25,
        mu2: 0.25,
        kinetics: brusselator(BrusselatorParams::default()),
        u_ini: Arc::new(move |p| u0(p, 0.0)),
        v_ini: Arc::new(move |p| v0(p, 0.0)),
        g: u,
        h: v,
    };
    (spec, exact)
}

/// Cell-center sampled relative L2 error of `Pi_D u`.
pub fn relative_value_error<F>(mesh: &PolytopalMesh, u: &DiscreteVector, exact: F) -> Result<f64>
where
    F: Fn(Point) -> f64,
{
    u.check_size(mesh)?;
    let (mut num, mut den) = (0.0, 0.0);
    for c in mesh.cells() {
        let e = exact(c.center);
        num += c.measure * (e - u.cells[c.id]).powi(2);
        den += c.measure * e * e;
    }
    if den == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok((num / den).sqrt())
}

/// Diamond-wise relative L2 error of `grad_D u`, sampling the exact gradient
/// at `(x_K + x_sigma) / 2`.
pub fn relative_gradient_error<G>(disc: &HmmDiscretisation, u: &DiscreteVector, exact_grad: G) -> Result<f64>
where
    G: Fn(Point) -> Point,
{
    let mesh = disc.mesh();
    u.check_size(mesh)?;
    let grad = disc.reconstruct_gradient(u);
    let (mut num, mut den) = (0.0, 0.0);
    for c in mesh.cells() {
        for (i, &f) in c.faces.iter().enumerate() {
            let x = (c.center + mesh.faces()[f].barycenter) * 0.5;
            let e = exact_grad(x);
            let vol = disc.diamond_volume(c.id, i);
            num += vol * (e - grad.values[disc.diamond_index(c.id, i)]).norm_squared();
            den += vol * e.norm_squared();
        }
    }
    if den == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok((num / den).sqrt())
}

/// `log(e_c / e_f) / log(h_c / h_f)`
pub fn convergence_rate(e_coarse: f64, e_fine: f64, h_coarse: f64, h_fine: f64) -> Result<f64> {
    if !(e_coarse > 0.0 && e_fine > 0.0 && h_coarse > 0.0 && h_fine > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "convergence rate needs positive inputs (e = {e_coarse}, {e_fine}; h = {h_coarse}, {h_fine})"
        )));
    }
    if h_coarse == h_fine {
        return Err(Error::InvalidArgument("mesh sizes must differ".into()));
    }
    Ok((e_coarse / e_fine).ln() / (h_coarse / h_fine).ln())
}

/// Least-squares slope of `log e` against `log h`.
pub fn loglog_slope(h: &[f64], e: &[f64]) -> Result<f64> {
    if h.len() != e.len() || h.len() < 2 {
        return Err(Error::InvalidArgument("need at least two (h, e) pairs".into()));
    }
    if h.iter().chain(e).any(|&x| !(x > 0.0)) {
        return Err(Error::InvalidArgument("log-log slope needs positive values".into()));
    }
    let xs: Vec<f64> = h.iter().map(|x| x.ln()).collect();
    let ys: Vec<f64> = e.iter().map(|x| x.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("mesh sizes must differ".into()));
    }
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    /// Structured mesh level.
    pub n: usize,
    /// Mesh size (largest cell diameter).
    pub h: f64,
    pub err_u: f64,
    pub err_v: f64,
    pub err_grad_u: f64,
    pub err_grad_v: f64,
    pub runtime_s: f64,
    pub steps: usize,
    pub newton_total: usize,
    pub newton_max: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    U,
    V,
    GradU,
    GradV,
}

impl Quantity {
    pub const ALL: [Quantity; 4] = [Quantity::U, Quantity::V, Quantity::GradU, Quantity::GradV];

    pub fn of(self, r: &ErrorReport) -> f64 {
        match self {
            Quantity::U => r.err_u,
            Quantity::V => r.err_v,
            Quantity::GradU => r.err_grad_u,
            Quantity::GradV => r.err_grad_v,
        }
    }
}

/// Errors below this are treated as exact reproduction and get no rate.
pub const RATE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub reports: Vec<ErrorReport>,
}

impl ConvergenceTable {
    pub fn new(reports: Vec<ErrorReport>) -> Result<Self> {
        if reports.windows(2).any(|w| w[1].h >= w[0].h) {
            return Err(Error::InvalidArgument("levels must be ordered by decreasing h".into()));
        }
        Ok(ConvergenceTable { reports })
    }

    /// Rate between level `i - 1` and `i`; `None` for the first level or
    /// when either error is at round-off level.
    pub fn rate(&self, q: Quantity, i: usize) -> Option<f64> {
        if i == 0 || i >= self.reports.len() {
            return None;
        }
        let (c, f) = (&self.reports[i - 1], &self.reports[i]);
        let (ec, ef) = (q.of(c), q.of(f));
        if ec <= RATE_FLOOR || ef <= RATE_FLOOR {
            return None;
        }
        convergence_rate(ec, ef, c.h, f.h).ok()
    }

    pub fn rates(&self, q: Quantity) -> Vec<f64> {
        (1..self.reports.len()).filter_map(|i| self.rate(q, i)).collect()
    }

    pub fn slope(&self, q: Quantity) -> Result<f64> {
        let h: Vec<f64> = self.reports.iter().map(|r| r.h).collect();
        let e: Vec<f64> = self.reports.iter().map(|r| q.of(r)).collect();
        loglog_slope(&h, &e)
    }

    /// Errors strictly decrease along the ladder for every quantity.
    pub fn is_monotone(&self) -> bool {
        Quantity::ALL
            .iter()
            .all(|&q| self.reports.windows(2).all(|w| q.of(&w[1]) < q.of(&w[0])))
    }

    pub const CSV_HEADER: &'static str = "h,err_u,rate_u,err_v,rate_v,err_gu,rate_gu,err_gv,rate_gv,runtime_s";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for (i, r) in self.reports.iter().enumerate() {
            let rate = |q| self.rate(q, i).map(|x| format!("{x:.8e}")).unwrap_or_default();
            let _ = writeln!(
                out,
                "{:.8e},{:.8e},{},{:.8e},{},{:.8e},{},{:.8e},{},{:.8e}",
                r.h,
                r.err_u,
                rate(Quantity::U),
                r.err_v,
                rate(Quantity::V),
                r.err_grad_u,
                rate(Quantity::GradU),
                r.err_grad_v,
                rate(Quantity::GradV),
                r.runtime_s
            );
        }
        out
    }

    /// `log10(h) log10(err)` per level.
    pub fn plot_data(&self, q: Quantity) -> String {
        let mut out = String::new();
        for r in &self.reports {
            let _ = writeln!(out, "{:.8e} {:.8e}", r.h.log10(), q.of(r).log10());
        }
        out
    }
}

/// Solves on one structured level and measures the errors at the final time.
pub fn run_level(
    n: usize,
    spec: &ProblemSpec,
    exact: &ExactSolution,
    grid: &TimeGrid,
    cfg: NewtonConfig,
) -> Result<ErrorReport> {
    let start = Instant::now();
    let mesh = Arc::new(PolytopalMesh::structured_triangular(n)?);
    let disc = HmmDiscretisation::new(mesh);
    let (mut total, mut max) = (0, 0);
    let last = solve_transient_with(spec, &disc, grid, cfg, |_, _, _, r| {
        if let Some(r) = r {
            total += r.iterations;
            max = max.max(r.iterations);
        }
    })?;
    let t = grid.final_time();
    let mesh = disc.mesh();
    Ok(ErrorReport {
        n,
        h: mesh.mesh_size(),
        err_u: relative_value_error(mesh, &last.u, |p| (exact.u)(p, t))?,
        err_v: relative_value_error(mesh, &last.v, |p| (exact.v)(p, t))?,
        err_grad_u: relative_gradient_error(&disc, &last.u, |p| (exact.grad_u)(p, t))?,
        err_grad_v: relative_gradient_error(&disc, &last.v, |p| (exact.grad_v)(p, t))?,
        runtime_s: start.elapsed().as_secs_f64(),
        steps: grid.num_steps(),
        newton_total: total,
        newton_max: max,
    })
}

/// Runs every level (in parallel) and merges the reports in level order.
pub fn run_convergence_study(
    levels: &[usize],
    dt: f64,
    t_final: f64,
    spec: &ProblemSpec,
    exact: &ExactSolution,
    cfg: NewtonConfig,
) -> Result<ConvergenceTable> {
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("levels must be sorted coarse to fine".into()));
    }
    let grid = TimeGrid::with_step(dt, t_final)?;
    let reports: Vec<Result<ErrorReport>> = levels
        .par_iter()
        .map(|&n| {
            run_level(n, spec, exact, &grid, cfg).map_err(|e| Error::Level {
                level: n,
                source: Box::new(e),
            })
        })
        .collect();
    ConvergenceTable::new(reports.into_iter().collect::<Result<_>>()?)
}
