//! The nine acceptance criteria at their pinned tolerances, one line each.

use akhiezer::formulas::ThetaPipeline;
use akhiezer::numerics::comparison_points;
use akhiezer::opoly::stieltjes;
use akhiezer::quadrature::InnerProductEngine;
use akhiezer::verify::{verify, Report, RunConfig, Status};
use akhiezer::IntervalSet;
use std::process::ExitCode;
use std::time::Instant;

struct Line {
    passed: bool,
    detail: String,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Worst residual over the named records, failing on any record that did not pass.
fn records(reports: &[&Report], ids: &[&str]) -> Line {
    let mut worst: Vec<String> = Vec::new();
    let mut passed = true;
    for r in reports {
        for id in ids {
            let rec = r.record(id).unwrap_or_else(|| panic!("no record {id}"));
            match rec.status {
                Status::Pass => {}
                Status::Skipped => continue,
                Status::Fail => {
                    passed = false;
                    worst.push(format!("g={} {id} {:?} > {:e}", r.header.genus, rec.residual, rec.tolerance));
                }
            }
        }
    }
    let detail = if passed {
        let max = reports
            .iter()
            .flat_map(|r| ids.iter().filter_map(|id| r.record(id)?.residual.map(|x| x / r.record(id).unwrap().tolerance)))
            .fold(0.0, f64::max);
        format!("{} records, worst residual/tolerance {max:.2e}", ids.len() * reports.len())
    } else {
        worst.join("; ")
    };
    Line { passed, detail }
}

fn chebyshev_closure() -> Line {
    let start = Instant::now();
    let set = IntervalSet::new(&[], &[-1.0, 1.0]).unwrap();
    let table = stieltjes(&InnerProductEngine::new(&set, 200).unwrap(), 21).unwrap();
    let pipe = ThetaPipeline::new(set, 200, 1e-12).unwrap();
    let (mut quad, mut theta) = (0.0f64, 0.0f64);
    for n in 1..=20 {
        let a = if n == 1 { 0.5 } else { 0.25 };
        let h = 2.0 * 4f64.powi(-(n as i32));
        quad = quad.max(table.b(n).abs()).max(rel(table.a(n), a)).max(rel(table.h(n), h));
        theta = theta
            .max(pipe.b(n).unwrap().abs())
            .max(rel(pipe.a(n).unwrap(), a))
            .max(rel(pipe.h(n).unwrap(), h));
    }
    let capacity = (pipe.capacity() - 0.5).abs();
    let secs = start.elapsed().as_secs_f64();
    Line {
        passed: quad <= 1e-10 && theta <= 1e-8 && capacity <= 1e-8 && secs < 10.0,
        detail: format!("quadrature {quad:.2e}, theta {theta:.2e}, |C − 1/2| {capacity:.2e}, {secs:.2}s"),
    }
}

fn cross_pipeline() -> Line {
    let start = Instant::now();
    let set = IntervalSet::new(&[-0.3], &[-1.0, 0.1, 1.0]).unwrap();
    let table = stieltjes(&InnerProductEngine::new(&set, 200).unwrap(), 11).unwrap();
    let pipe = ThetaPipeline::new(set.clone(), 200, 1e-12).unwrap();
    let points = comparison_points(&set, 30);
    let mut w = 0.0f64;
    for n in 1..=10 {
        w = w
            .max(rel(pipe.h(n).unwrap(), table.h(n)))
            .max(rel(pipe.a(n).unwrap(), table.a(n)))
            .max(rel(pipe.b(n).unwrap(), table.b(n)))
            .max(rel(pipe.hankel(n).unwrap(), table.hankel_product(n + 1)));
        for &z in &points {
            let want = table.eval_p(n, z);
            w = w.max((pipe.p(n, z).unwrap() - want).norm() / want.norm());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Line {
        passed: w <= 1e-6 && secs < 120.0,
        detail: format!("worst relative deviation {w:.2e} over n = 1..10 and 30 points, {secs:.2}s"),
    }
}

fn main() -> ExitCode {
    let g0 = verify(&RunConfig::new(&[], &[-1.0, 1.0])).unwrap();
    let g1 = verify(&RunConfig::new(&[-0.3], &[-1.0, 0.1, 1.0])).unwrap();
    let g2 = verify(&RunConfig::new(&[-0.5, 0.2], &[-1.0, -0.3, 0.5, 1.0])).unwrap();
    let both = [&g0, &g1];

    let lines = [
        ("Chebyshev closure (g=0)", chebyshev_closure()),
        ("cross-pipeline agreement (g=1)", cross_pipeline()),
        (
            "Riemann–Hilbert identities",
            records(&both, &["rh.det_y", "rh.wronskian", "rh.det_phi", "rh.det_psi", "rh.psi_jump"]),
        ),
        (
            "Fuchsian residues",
            records(
                &both,
                &[
                    "fuchs.trace",
                    "fuchs.det",
                    "fuchs.sum_rule",
                    "fuchs.first_moment",
                    "fuchs.sum_offdiag",
                    "fuchs.sum_split",
                    "fuchs.delta_moment",
                ],
            ),
        ),
        (
            "deformation (g=1)",
            records(
                &[&g1],
                &["deformation.schlesinger", "deformation.dh", "deformation.convergence", "tau.increment", "tau.a0_constant"],
            ),
        ),
        (
            "Freud and Lax relations",
            records(&both, &["freud.linear", "freud.quadratic", "freud.determinant", "transfer.lax"]),
        ),
        (
            "surface (g=1, g=2)",
            records(
                &[&g1, &g2],
                &[
                    "surface.normalization",
                    "surface.symmetry",
                    "surface.im_b_condition",
                    "surface.omega_a_periods",
                    "surface.bilinear",
                    "surface.alpha_omega",
                ],
            ),
        ),
        (
            "theta function",
            records(&[&g1, &g2], &["theta.quasi_periodicity", "theta.known_value", "theta.truncation"]),
        ),
        ("polynomiality of the theta formula (g=1)", records(&[&g1], &["theta.polynomial_fit", "theta.monic"])),
    ];

    let mut ok = true;
    for (k, (name, line)) in lines.iter().enumerate() {
        ok &= line.passed;
        let mark = if line.passed { "PASS" } else { "FAIL" };
        println!("criterion {}: {mark} {name}: {}", k + 1, line.detail);
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
