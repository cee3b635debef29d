mod common;

use akhiezer::monodromy::*;
use akhiezer::numerics::sample_points;
use akhiezer::opoly::{stieltjes, RecurrenceTable};
use akhiezer::quadrature::InnerProductEngine;
use akhiezer::IntervalSet;
use common::*;
use num_complex::Complex64;

fn table(set: &IntervalSet, n_max: usize) -> RecurrenceTable {
    let engine = InnerProductEngine::new(set, 200).unwrap();
    stieltjes(&engine, n_max).unwrap()
}

fn diag(a: f64, b: f64) -> M2 {
    M2::new(a, 0.0, 0.0, b)
}

#[test]
fn chebyshev_first_residues() {
    let set = chebyshev();
    let t = table(&set, 4);
    let r = residues(&t, &set, 1);
    // δ order for g = 0 is (β₀, β₁) = (−1, 1)
    let at_minus = M2::new(0.5, 0.5, 0.0, 0.0);
    let at_plus = M2::new(0.5, -0.5, 0.0, 0.0);
    assert!((r.c[0] - at_minus).abs().max() < 1e-12);
    assert!((r.c[1] - at_plus).abs().max() < 1e-12);
    assert!((r.cal_a(0) - diag(1.0, 0.0)).abs().max() < 1e-12);
}

#[test]
fn trace_determinant_and_sum_rule() {
    for set in [chebyshev(), two_bands(), three_bands()] {
        let g = set.genus();
        let t = table(&set, 9);
        for n in 1..=8 {
            let r = residues(&t, &set, n);
            for (j, c) in r.c.iter().enumerate() {
                let want = if j < g { -0.5 } else { 0.5 };
                let size = c.abs().max().max(1.0);
                assert!((c.trace() - want).abs() < 1e-9, "tr, n={n} j={j}");
                assert!(c.determinant().abs() / (size * size) < 1e-9, "det, n={n} j={j}");
            }
            let nf = n as f64;
            let sum: M2 = r.c.iter().sum();
            let dev = sum_residual(&r, &sum, &diag(nf, 1.0 - nf));
            assert!(dev < 1e-8, "g={g} n={n}: {dev:e}");
        }
    }
}

#[test]
fn moment_identities() {
    for set in [chebyshev(), two_bands()] {
        let t = table(&set, 9);
        for n in 1..=8 {
            let nf = n as f64;
            let r = residues(&t, &set, n);
            let a0 = r.cal_a(0);
            let a1 = r.cal_a(1);
            assert!(sum_residual(&r, &a0, &diag(nf, 1.0 - nf)) < 1e-8);
            assert!(sum_residual(&r, &a1, &first_moment_rhs(&t, &set, n)) < 1e-8, "n={n}");

            let off: f64 = r.c.iter().map(|c| c[(0, 1)]).sum();
            let split: f64 = r.c.iter().map(|c| c[(0, 0)] - c[(1, 1)]).sum();
            let moment: f64 = r.c.iter().zip(&r.deltas).map(|(c, d)| d * c[(0, 1)]).sum();
            let size = r.c.iter().map(|c| c.abs().max()).fold(1.0, f64::max);
            assert!(off.abs() / size < 1e-8);
            assert!((split - (2.0 * nf - 1.0)).abs() / size < 1e-8);
            assert!(rel(moment, -2.0 * nf * t.h(n)) < 1e-8, "n={n}");
        }
    }
}

#[test]
fn shifted_alpha_form_breaks_sum_rule() {
    let set = two_bands();
    let t = table(&set, 4);
    let n = 3;
    let r = residues(&t, &set, n);
    let shifted = alpha_residue_shifted(&t, n, set.alphas()[0]);
    assert!((shifted.trace() + 0.5).abs() < 1e-9);
    let mut c = r.c.clone();
    c[0] = shifted;
    let sum: M2 = c.iter().sum();
    assert!((sum - diag(3.0, -2.0)).abs().max() > 0.1);
}

#[test]
fn transfer_matrix() {
    let set = chebyshev();
    let t = table(&set, 4);
    let z = Complex64::new(0.3, -0.7);
    let u = transfer(&t, 1, z);
    let want = C2::new(z, (-0.5).into(), 2.0.into(), 0.0.into());
    assert!(max_norm(&(u - want)) < 1e-12);

    let set = two_bands();
    let t = table(&set, 8);
    for z in sample_points(&set, 10) {
        for n in 0..7 {
            let u = transfer(&t, n, z);
            assert!((u.determinant() - 1.0).norm() < 1e-12);
            let (p, p_next) = (t.eval_p(n, z), t.eval_p(n + 1, z));
            let p_prev = if n == 0 { 0.0.into() } else { t.eval_p(n - 1, z) };
            // U_n maps (P_n, P_{n−1}/h_{n−1}) to (P_{n+1}, P_n/h_n)
            let scaled_prev = if n == 0 { 0.0.into() } else { p_prev / t.h(n - 1) };
            let moved = u * nalgebra::Vector2::new(p, scaled_prev);
            assert!((moved[0] - p_next).norm() < 1e-10 * p_next.norm().max(1.0));
            assert!((moved[1] - p / t.h(n)).norm() < 1e-10 * (p / t.h(n)).norm().max(1.0));
        }
    }
}

#[test]
fn conjugation_and_lax() {
    for set in [chebyshev(), two_bands(), three_bands()] {
        let t = table(&set, 10);
        for n in 1..=8 {
            let c = conjugation_residual(&t, &set, n);
            assert!(c < 1e-8, "conjugation n={n}: {c:e}");
            for z in sample_points(&set, 20) {
                let l = lax_residual(&t, &set, n, z);
                assert!(l < 1e-8, "lax n={n} z={z}: {l:e}");
            }
        }
    }
}

#[test]
fn fuchsian_system_and_phi_determinant() {
    for set in [chebyshev(), two_bands()] {
        let t = table(&set, 9);
        for n in 1..=8 {
            for z in sample_points(&set, 20) {
                let f = fuchs_residual(&t, &set, n, z).unwrap();
                assert!(f < 1e-6, "n={n} z={z}: {f:e}");
                let d = phi(&t, &set, n, z).unwrap().determinant();
                let w = set.w_complex(z).unwrap();
                assert!((d * w - 1.0).norm() < 1e-8, "det Φ, n={n}");
            }
        }
    }
}

#[test]
fn freud_relations() {
    let set = chebyshev();
    let t = table(&set, 5);
    for r in freud_residuals(&t, &set, [2usize]) {
        assert!(r.max() < 1e-10, "{r:?}");
    }
    for set in [chebyshev(), two_bands(), three_bands()] {
        let t = table(&set, 10);
        let rows = freud_residuals(&t, &set, 1..=8);
        assert_eq!(rows.len(), set.deltas().len() * 8);
        for r in rows {
            assert!(r.max() < 1e-8, "{r:?}");
        }
    }
}

#[test]
fn schlesinger_equations() {
    let set = two_bands();
    for k in 0..4 {
        for e in schlesinger_fd(&set, 200, 3, k, 1e-5).unwrap() {
            assert!(e.residual <= 1e-6, "{e:?}");
            assert!(e.converged(), "{e:?}");
        }
    }
    // g = 0: the residues are affine in the endpoints, so the difference is exact
    for e in schlesinger_fd(&chebyshev(), 200, 1, 1, 1e-5).unwrap() {
        assert!(e.residual <= 1e-6 && e.converged(), "{e:?}");
    }
}

#[test]
fn tau_function_identities() {
    let set = two_bands();
    for k in 0..4 {
        let rows = tau_identities(&set, 200, 2, k, 1e-5).unwrap();
        let get = |name: &str| rows.iter().find(|e| e.check == name).unwrap();
        let dh = get("dh");
        assert!(dh.residual <= 1e-6 * dh.scale && dh.converged(), "{dh:?}");
        assert!(get("tau-increment").residual <= 1e-6);
        assert!(get("a0-constant").residual <= 1e-8);

        let p = tau_potential_fd(&set, 200, 4, k, 1e-5).unwrap();
        assert!(p.residual <= 1e-6, "{p:?}");
    }
    let c = closedness_fd(&set, 200, 3, 0, 2, 1e-5).unwrap();
    assert!(c.residual <= 1e-6, "{c:?}");
}

#[test]
fn hamiltonian_at_first_degree_is_geometric() {
    // C_j(1) depends on the polynomials only through P_1, and H_k(1) reduces
    // to a function of the endpoints alone.
    for set in [chebyshev(), two_bands(), three_bands()] {
        let t = table(&set, 3);
        let r = residues(&t, &set, 1);
        for k in 0..set.deltas().len() {
            let h = r.hamiltonian(k);
            assert!((h - tau_offset(&set, k)).abs() < 1e-10 * h.abs().max(1.0), "k={k}");
        }
    }
}

#[test]
fn invalid_perturbation_is_reported() {
    let set = IntervalSet::new(&[-0.3], &[-1.0, -0.29, 1.0]).unwrap();
    let err = schlesinger_fd(&set, 200, 2, 2, 0.02).unwrap_err();
    assert!(matches!(err, MonodromyError::GeometryBroken(_)));
}
