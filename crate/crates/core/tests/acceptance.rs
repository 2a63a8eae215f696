//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

use hmmrd::diagnostics::{coercivity_constant, consistency_defect, limit_conformity_defect};
use hmmrd::kinetics::no_reaction;
use hmmrd::solver::{assemble_jacobian, assemble_residual, solve_transient_with, NewtonConfig, ProblemSpec, State, TimeGrid};
use hmmrd::verify::{brusselator_exact, brusselator_problem, convergence_rate, run_convergence_study, ConvergenceTable, Quantity};
use hmmrd::{DiscreteVector, HmmDiscretisation, Point, PolytopalMesh};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

const TABLE_ERR_U: [f64; 4] = [0.000720746, 0.000184132, 0.0000501972, 0.0000149187];
const TABLE_ERR_V: [f64; 4] = [0.000561639, 0.000140295, 0.0000342813, 0.00000688301];
const TABLE_RATE_U: [f64; 3] = [1.968753, 1.8750586, 1.750485];
const TABLE_RATE_V: [f64; 3] = [2.0011797, 2.03296997, 2.31630842];
const TABLE_H: [f64; 4] = [0.125, 0.0625, 0.03125, 0.015625];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn disc(n: usize) -> HmmDiscretisation {
    HmmDiscretisation::new(Arc::new(PolytopalMesh::structured_triangular(n).unwrap()))
}

fn fmt(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("[{}]", parts.join(", "))
}

fn rate_reproduction(t: &ConvergenceTable) -> Outcome {
    let (ru, rv) = (t.rates(Quantity::U), t.rates(Quantity::V));
    let ok = ru.len() == 2 && rv.len() == 2 && ru.iter().chain(&rv).all(|r| (1.7..=2.4).contains(r));
    outcome(ok, format!("rate_u {} rate_v {} (need [1.7, 2.4])", fmt(&ru), fmt(&rv)))
}

fn error_anchor(t: &ConvergenceTable) -> Outcome {
    let r = &t.reports[0];
    let within = |e: f64, target: f64| e / target <= 3.0 && target / e <= 3.0;
    let ok = within(r.err_u, TABLE_ERR_U[0]) && within(r.err_v, TABLE_ERR_V[0]);
    outcome(
        ok,
        format!(
            "n=8: err_u {:.6e} (x{:.3} of table), err_v {:.6e} (x{:.3} of table)",
            r.err_u,
            r.err_u / TABLE_ERR_U[0],
            r.err_v,
            r.err_v / TABLE_ERR_V[0]
        ),
    )
}

fn gradient_slopes(t: &ConvergenceTable) -> Outcome {
    let su = t.slope(Quantity::GradU).unwrap();
    let sv = t.slope(Quantity::GradV).unwrap();
    let ok = (0.8..=1.2).contains(&su) && (0.8..=1.2).contains(&sv);
    outcome(ok, format!("slope grad_u {su:.6}, grad_v {sv:.6} (need [0.8, 1.2])"))
}

fn rate_arithmetic() -> Outcome {
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        let ru = convergence_rate(TABLE_ERR_U[i], TABLE_ERR_U[i + 1], TABLE_H[i], TABLE_H[i + 1]).unwrap();
        let rv = convergence_rate(TABLE_ERR_V[i], TABLE_ERR_V[i + 1], TABLE_H[i], TABLE_H[i + 1]).unwrap();
        worst = worst.max((ru - TABLE_RATE_U[i]).abs()).max((rv - TABLE_RATE_V[i]).abs());
    }
    outcome(worst <= 1e-4, format!("max deviation from printed rates {worst:.3e} (need <= 1e-4)"))
}

fn affine_exactness() -> Outcome {
    let u = |p: Point| 0.3 + 1.2 * p.x - 0.7 * p.y;
    let v = |p: Point| -1.0 + 0.4 * p.x + 2.0 * p.y;
    let spec = ProblemSpec {
        mu1: 0.25,
        mu2: 0.6,
        kinetics: no_reaction(),
        u_ini: Arc::new(u),
        v_ini: Arc::new(v),
        g: Arc::new(move |p, _| u(p)),
        h: Arc::new(move |p, _| v(p)),
    };
    let grid = TimeGrid::with_step(0.01, 0.1).unwrap();
    let mut worst: f64 = 0.0;
    let mut levels = 0;
    for n in [1, 2, 4, 8, 16, 32] {
        let d = disc(n);
        let eu = DiscreteVector::sample(d.mesh(), u);
        let ev = DiscreteVector::sample(d.mesh(), v);
        let res = solve_transient_with(&spec, &d, &grid, NewtonConfig::default(), |level, _, s, _| {
            if level == 0 {
                return;
            }
            let du = s.u.to_dofs().iter().zip(eu.to_dofs()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let dv = s.v.to_dofs().iter().zip(ev.to_dofs()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            worst = worst.max(du).max(dv);
        });
        if let Err(e) = res {
            return outcome(false, format!("solve failed on n={n}: {}", e));
        }
        levels += 1;
    }
    outcome(
        worst <= 1e-8,
        format!("{levels} levels x {} steps, max deviation {worst:.3e} (need <= 1e-8)", grid.num_steps()),
    )
}

fn geometry_identities() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in [1, 2, 4, 8, 16, 32, 64] {
        let d = disc(n);
        let m = d.mesh();
        let r = m.validate();
        worst = worst
            .max(r.closedness_defect)
            .max(r.stokes_defect)
            .max(r.distance_identity_defect)
            .max(r.opposite_normal_defect)
            .max((r.total_area - 1.0).abs());
        let mut total = 0.0;
        for c in m.cells() {
            let s: f64 = (0..c.faces.len()).map(|i| d.diamond_volume(c.id, i)).sum();
            worst = worst.max((s - c.measure).abs());
            total += s;
        }
        worst = worst.max((total - 1.0).abs());
        if r.euler_characteristic != 1 {
            return outcome(false, format!("n={n}: Euler characteristic {}", r.euler_characteristic));
        }
    }
    outcome(worst <= 1e-12, format!("n in 1..64: max defect {worst:.3e} (need <= 1e-12)"))
}

fn gdm_trends() -> Outcome {
    let ladder = [4, 8, 16];
    let mut c = Vec::new();
    let mut s = Vec::new();
    let mut w = Vec::new();
    let mut wc: f64 = 0.0;
    for n in ladder {
        let d = disc(n);
        c.push(coercivity_constant(&d).unwrap().value);
        s.push(
            consistency_defect(
                &d,
                |p| (PI * p.x).sin() * (PI * p.y).sin(),
                |p| {
                    Point::new(
                        PI * (PI * p.x).cos() * (PI * p.y).sin(),
                        PI * (PI * p.x).sin() * (PI * p.y).cos(),
                    )
                },
            )
            .total(),
        );
        w.push(limit_conformity_defect(&d, |p| Point::new(p.x, 0.0), |_| 1.0).unwrap());
        wc = wc.max(limit_conformity_defect(&d, |_| Point::new(0.7, -1.3), |_| 0.0).unwrap());
    }
    let c_factor = c.iter().cloned().fold(0.0, f64::max) / c.iter().cloned().fold(f64::MAX, f64::min);
    let s_ratios: Vec<f64> = s.windows(2).map(|p| p[1] / p[0]).collect();
    let ok = c_factor < 2.0
        && s_ratios.iter().all(|r| (0.4..=0.7).contains(r))
        && w.windows(2).all(|p| p[1] < p[0])
        && wc <= 1e-10;
    outcome(
        ok,
        format!(
            "C_D {} (factor {c_factor:.4}); S_D ratios {}; W_D(x,0) {}; W_D(const) {wc:.3e}",
            fmt(&c),
            fmt(&s_ratios),
            fmt(&w)
        ),
    )
}

fn newton_behavior(t: &ConvergenceTable) -> Outcome {
    let max_iter = t.reports.iter().map(|r| r.newton_max).max().unwrap();

    let (spec, _) = brusselator_problem();
    let d = disc(2);
    let n0 = d.num_interior_dofs();
    let nc = d.mesh().num_cells();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let dt = 1e-3;
    for _ in 0..5 {
        let mut rand_vec = || {
            let mut v = DiscreteVector::zeros(d.mesh());
            v.cells.iter_mut().chain(v.faces.iter_mut()).for_each(|x| *x = rng.random_range(0.1..2.0));
            v
        };
        let s = State { u: rand_vec(), v: rand_vec() };
        let p = State { u: rand_vec(), v: rand_vec() };
        let j = assemble_jacobian(&d, &s, &spec, dt);
        let h = 1e-6;
        for col in 0..2 * n0 {
            let eval = |sign: f64| {
                let mut t = s.clone();
                let (vec, i) = if col < n0 { (&mut t.u, col) } else { (&mut t.v, col - n0) };
                if i < nc {
                    vec.cells[i] += sign * h;
                } else {
                    vec.faces[d.interior_faces()[i - nc]] += sign * h;
                }
                assemble_residual(&d, &t, &p, &spec, dt).unwrap()
            };
            let (rp, rm) = (eval(1.0), eval(-1.0));
            for row in 0..2 * n0 {
                let fd = (rp[row] - rm[row]) / (2.0 * h);
                let an = j.get(row, col);
                worst = worst.max((fd - an).abs() / an.abs().max(1.0));
            }
        }
    }
    outcome(
        max_iter <= 5 && worst <= 1e-5,
        format!("max Newton iterations {max_iter} (need <= 5); Jacobian vs FD {worst:.3e} (need <= 1e-5)"),
    )
}

fn exact_residual() -> Outcome {
    let e = brusselator_exact();
    let (spec, _) = brusselator_problem();
    let mu = 0.25;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let p = Point::new(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
        let t = rng.random_range(0.0..1.0);
        let (u, v) = ((e.u)(p, t), (e.v)(p, t));
        // independent closed forms: u_t = -u/2, lap u = 2u, v_t = v/2, lap v = 2v
        let oracle_u = (-p.x - p.y - 0.5 * t).exp();
        let oracle_v = (p.x + p.y + 0.5 * t).exp();
        let r_u = -0.5 * u - mu * 2.0 * u - spec.kinetics.f(u, v);
        let r_v = 0.5 * v - mu * 2.0 * v - spec.kinetics.g(u, v);
        worst = worst
            .max(r_u.abs())
            .max(r_v.abs())
            .max((u - oracle_u).abs())
            .max((v - oracle_v).abs());
    }
    outcome(worst <= 1e-12, format!("100 space-time points, max residual {worst:.3e} (need <= 1e-12)"))
}

fn main() {
    let start = Instant::now();
    let (spec, exact) = brusselator_problem();
    let study = run_convergence_study(&[8, 16, 32], 1e-3, 1.0, &spec, &exact, NewtonConfig::default());
    let study_time = start.elapsed().as_secs_f64();

    let mut results: Vec<(&str, Outcome)> = Vec::new();
    match &study {
        Ok(t) => {
            results.push(("rate reproduction", rate_reproduction(t)));
            results.push(("error-magnitude anchor", error_anchor(t)));
            results.push(("gradient slopes", gradient_slopes(t)));
        }
        Err(e) => {
            for name in ["rate reproduction", "error-magnitude anchor", "gradient slopes"] {
                results.push((name, outcome(false, format!("study failed: {e}"))));
            }
        }
    }
    results.push(("rate arithmetic oracle", rate_arithmetic()));
    results.push(("affine exactness", affine_exactness()));
    results.push(("geometry identities", geometry_identities()));
    results.push(("GDM property trends", gdm_trends()));
    match &study {
        Ok(t) => results.push(("Newton behavior", newton_behavior(t))),
        Err(e) => results.push(("Newton behavior", outcome(false, format!("study failed: {e}")))),
    }
    results.push(("exact-solution residual", exact_residual()));

    if let Ok(t) = &study {
        println!("study (n = 8, 16, 32; dt = 1e-3; T = 1) in {study_time:.1} s:");
        print!("{}", t.to_csv());
    }
    let mut failed = 0;
    for (name, o) in &results {
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
