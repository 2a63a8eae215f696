//! Command execution behind the `hmmrd` binary.

use crate::config::{Command, MeshSource, RunConfig};
use crate::diagnostics::quality_report;
use crate::error::{Error, Result};
use crate::hmm::HmmDiscretisation;
use crate::kinetics::{preset, BrusselatorParams};
use crate::mesh::{load_mesh, PolytopalMesh};
use crate::solver::{solve_transient_with, ProblemSpec, TimeGrid};
use crate::verify::{
    brusselator_problem, relative_gradient_error, relative_value_error, run_convergence_study, ConvergenceTable,
    ErrorReport, ExactSolution, Quantity,
};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

/// What a run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// Human-readable summary for stdout.
    pub summary: String,
    /// Files written, relative to the output directory.
    pub files: Vec<String>,
}

fn sha256_hex(data: &[u8]) -> String {
    Sha256::digest(data).iter().map(|b| format!("{b:02x}")).collect()
}

/// Manufactured problem with the configured kinetics and diffusion.
pub fn configured_problem(cfg: &RunConfig) -> Result<(ProblemSpec, ExactSolution)> {
    let (mut spec, exact) = brusselator_problem();
    spec.kinetics = preset(&cfg.kinetics, BrusselatorParams { a: cfg.a, b: cfg.b })?;
    spec.mu1 = cfg.mu1;
    spec.mu2 = cfg.mu2;
    Ok((spec, exact))
}

fn build_mesh(source: &MeshSource) -> Result<PolytopalMesh> {
    match source {
        MeshSource::Level(n) => PolytopalMesh::structured_triangular(*n),
        MeshSource::File(p) => load_mesh(&fs::read_to_string(p)?),
    }
}

fn mesh_label(source: &MeshSource) -> String {
    match source {
        MeshSource::Level(n) => format!("structured n={n}"),
        MeshSource::File(p) => p.display().to_string(),
    }
}

struct Output {
    dir: PathBuf,
    files: Vec<String>,
}

impl Output {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Output {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        fs::write(self.dir.join(name), contents)?;
        self.files.push(name.to_string());
        Ok(())
    }
}

/// Executes `cfg.command`, writing artifacts under `cfg.out`.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    let mut out = Output::new(&cfg.out)?;
    let mut log = String::new();
    let mut meshes: Vec<(String, String)> = Vec::new();
    let mut summary = String::new();
    let start = Instant::now();

    match cfg.command {
        Command::MeshInfo => {
            let source = cfg.mesh_source();
            let mesh = build_mesh(&source)?;
            let report = mesh.validate();
            let text = mesh.to_mesh_text();
            meshes.push((mesh_label(&source), sha256_hex(text.as_bytes())));
            let _ = writeln!(summary, "mesh: {}", mesh_label(&source));
            let _ = writeln!(summary, "cells: {}", mesh.num_cells());
            let _ = writeln!(summary, "faces: {}", mesh.num_faces());
            let _ = writeln!(summary, "vertices: {}", mesh.num_vertices());
            let _ = writeln!(summary, "h: {:.8e}", mesh.mesh_size());
            let _ = writeln!(summary, "closedness_defect: {:.8e}", report.closedness_defect);
            let _ = writeln!(summary, "stokes_defect: {:.8e}", report.stokes_defect);
            let _ = writeln!(summary, "distance_identity_defect: {:.8e}", report.distance_identity_defect);
            let _ = writeln!(summary, "opposite_normal_defect: {:.8e}", report.opposite_normal_defect);
            let _ = writeln!(summary, "min_distance: {:.8e}", report.min_distance);
            let _ = writeln!(summary, "euler_characteristic: {}", report.euler_characteristic);
            let _ = writeln!(summary, "total_area: {:.8e}", report.total_area);
            for f in report.failures(1e-12) {
                let _ = writeln!(summary, "FAILED: {f}");
            }
            out.write("mesh_info.txt", &summary)?;
        }
        Command::Solve => {
            let source = cfg.mesh_source();
            let mesh = Arc::new(build_mesh(&source)?);
            meshes.push((mesh_label(&source), sha256_hex(mesh.to_mesh_text().as_bytes())));
            let (spec, exact) = configured_problem(cfg)?;
            let disc = HmmDiscretisation::new(mesh.clone());
            let grid = TimeGrid::with_step(cfg.dt, cfg.t_final)?;
            let (mut total, mut max) = (0, 0);
            let last = solve_transient_with(&spec, &disc, &grid, cfg.newton, |level, t, _, r| {
                if let Some(r) = r {
                    total += r.iterations;
                    max = max.max(r.iterations);
                    if level % 100 == 0 || level == grid.num_steps() {
                        let _ = writeln!(log, "step {level} t={t:.8e} newton={}", r.iterations);
                    }
                }
            })?;
            let t = grid.final_time();
            let report = ErrorReport {
                n: match source {
                    MeshSource::Level(n) => n,
                    MeshSource::File(_) => 0,
                },
                h: mesh.mesh_size(),
                err_u: relative_value_error(&mesh, &last.u, |p| (exact.u)(p, t))?,
                err_v: relative_value_error(&mesh, &last.v, |p| (exact.v)(p, t))?,
                err_grad_u: relative_gradient_error(&disc, &last.u, |p| (exact.grad_u)(p, t))?,
                err_grad_v: relative_gradient_error(&disc, &last.v, |p| (exact.grad_v)(p, t))?,
                runtime_s: start.elapsed().as_secs_f64(),
                steps: grid.num_steps(),
                newton_total: total,
                newton_max: max,
            };
            let _ = writeln!(
                log,
                "mesh {} steps={} newton_total={} newton_max={} runtime_s={:.3}",
                mesh_label(&source),
                report.steps,
                total,
                max,
                report.runtime_s
            );
            let table = ConvergenceTable::new(vec![report.clone()])?;
            out.write("errors.csv", &table.to_csv())?;

            let mut sol = String::from("cell,x,y,u,v\n");
            for c in mesh.cells() {
                let _ = writeln!(
                    sol,
                    "{},{:.8e},{:.8e},{:.8e},{:.8e}",
                    c.id, c.center.x, c.center.y, last.u.cells[c.id], last.v.cells[c.id]
                );
            }
            out.write("solution.csv", &sol)?;
            let _ = writeln!(
                summary,
                "solved to T={} on {} ({} steps, max {} Newton iterations); err_u={:.8e} err_v={:.8e}",
                cfg.t_final,
                mesh_label(&source),
                report.steps,
                max,
                report.err_u,
                report.err_v
            );
        }
        Command::Convergence => {
            let (spec, exact) = configured_problem(cfg)?;
            for &n in &cfg.levels {
                let mesh = PolytopalMesh::structured_triangular(n)?;
                meshes.push((format!("structured n={n}"), sha256_hex(mesh.to_mesh_text().as_bytes())));
            }
            let table = run_convergence_study(&cfg.levels, cfg.dt, cfg.t_final, &spec, &exact, cfg.newton)?;
            for r in &table.reports {
                let _ = writeln!(
                    log,
                    "level n={} h={:.8e} steps={} newton_total={} newton_max={} runtime_s={:.3}",
                    r.n, r.h, r.steps, r.newton_total, r.newton_max, r.runtime_s
                );
            }
            out.write("errors.csv", &table.to_csv())?;
            out.write("u.dat", &table.plot_data(Quantity::U))?;
            out.write("v.dat", &table.plot_data(Quantity::V))?;
            out.write("grad_u.dat", &table.plot_data(Quantity::GradU))?;
            out.write("grad_v.dat", &table.plot_data(Quantity::GradV))?;
            summary.push_str(&table.to_csv());
        }
        Command::Diagnose => {
            let sources: Vec<MeshSource> = match &cfg.mesh {
                Some(s) => vec![s.clone()],
                None => cfg.diag_levels.iter().map(|&n| MeshSource::Level(n)).collect(),
            };
            let mut csv = String::new();
            for (i, source) in sources.iter().enumerate() {
                let t0 = Instant::now();
                let mesh = Arc::new(build_mesh(source)?);
                meshes.push((mesh_label(source), sha256_hex(mesh.to_mesh_text().as_bytes())));
                let disc = HmmDiscretisation::new(mesh);
                let report = quality_report(&disc, &cfg.scalar_samples, &cfg.field_samples).map_err(|e| {
                    match source {
                        MeshSource::Level(n) => Error::Level {
                            level: *n,
                            source: Box::new(e),
                        },
                        MeshSource::File(_) => e,
                    }
                })?;
                if i == 0 {
                    csv.push_str(&report.csv_header());
                    csv.push('\n');
                }
                csv.push_str(&report.csv_row());
                csv.push('\n');
                let _ = writeln!(log, "diagnose {} runtime_s={:.3}", mesh_label(source), t0.elapsed().as_secs_f64());
            }
            out.write("diagnostics.csv", &csv)?;
            summary.push_str(&csv);
        }
    }

    let _ = writeln!(log, "total runtime_s={:.3}", start.elapsed().as_secs_f64());
    out.write("run.log", &log)?;

    let mut manifest = String::new();
    let _ = writeln!(manifest, "command = {}", cfg.command.name());
    let _ = writeln!(manifest, "config_sha256 = {}", sha256_hex(cfg.canonical().as_bytes()));
    for (label, sum) in &meshes {
        let _ = writeln!(manifest, "mesh_sha256 = {sum}  {label}");
    }
    let _ = writeln!(manifest, "hmmrd_version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(manifest, "platform = {}-{}", std::env::consts::ARCH, std::env::consts::OS);
    for f in &out.files {
        let _ = writeln!(manifest, "output = {f}");
    }
    manifest.push_str("\n[config]\n");
    manifest.push_str(&cfg.canonical());
    out.write("manifest.txt", &manifest)?;

    Ok(RunOutcome {
        summary,
        files: out.files,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn cfg(command: Command, extra: &[(&str, &str)], dir: &Path) -> RunConfig {
        let mut overrides: Vec<(String, String)> = extra.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        overrides.push(("out".into(), dir.display().to_string()));
        parse_config(command, "", &overrides).unwrap()
    }

    #[test]
    fn mesh_info_counts() {
        let dir = tempfile::tempdir().unwrap();
        let out = run(&cfg(Command::MeshInfo, &[("level", "2")], dir.path())).unwrap();
        assert!(out.summary.contains("cells: 8\n"));
        assert!(out.summary.contains("faces: 16\n"));
        assert!(out.summary.contains("vertices: 9\n"));
        assert!(!out.summary.contains("FAILED"));
        assert!(dir.path().join("manifest.txt").exists());
    }

    #[test]
    fn solve_writes_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg(Command::Solve, &[("level", "4"), ("T", "0.05"), ("dt", "0.01")], dir.path());
        let out = run(&c).unwrap();
        for f in ["errors.csv", "solution.csv", "run.log", "manifest.txt"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        assert!(out.files.contains(&"errors.csv".to_string()));
    }

    #[test]
    fn solve_errors_carry_step_context() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg(
            Command::Solve,
            &[("level", "2"), ("T", "0.02"), ("dt", "0.01"), ("newton_max_iter", "1"), ("newton_tol", "1e-300")],
            dir.path(),
        );
        match run(&c) {
            Err(Error::Step { level: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
