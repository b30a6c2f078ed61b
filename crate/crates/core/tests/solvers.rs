mod common;

use branchprob::admm::{recover, AdmmConfig};
use branchprob::fft::Fft2;
use branchprob::grid::{full_measurements, invert_full, sample_indices, ComplexGrid, MeasurementSet, TransitionMatrix};
use branchprob::models::reference::hsc;
use branchprob::models::{pgf, UnitCirclePoint};
use branchprob::operator::{objective, SampledFourier};
use branchprob::pgd::{fidelity_gradient, pgd_recover, PgdConfig, PgdSolver};
use branchprob::OdeConfig;
use num_complex::Complex64;

/// `N²·inverse(S)`, i.e. the PGF grid of a matrix `S`.
fn grid_of(s: &TransitionMatrix) -> ComplexGrid {
    let n = s.n();
    let mut data: Vec<Complex64> = s.data().iter().map(|&p| Complex64::new(p, 0.0)).collect();
    Fft2::new(n).inverse(&mut data);
    let n2 = (n * n) as f64;
    ComplexGrid::from_vec(n, n, data.into_iter().map(|z| z * n2).collect()).unwrap()
}

fn sparse_truth(n: usize) -> TransitionMatrix {
    let mut s = TransitionMatrix::zeros(n);
    s.set(0, 0, 0.5);
    s.set(1, 0, 0.3);
    s.set(0, 2, 0.15);
    s.set(3, 1, 0.05);
    s
}

fn tight_admm(lambda: f64) -> AdmmConfig {
    AdmmConfig {
        beta: 0.5,
        lambda,
        eps_abs: 1e-13,
        eps_rel: 1e-13,
        d1_exp: 0.0,
        d2_exp: 0.0,
        max_iter: 200_000,
    }
}

#[test]
fn admm_and_pgd_reach_the_same_optimum() {
    let n = 8;
    let truth = sparse_truth(n);
    let full = grid_of(&truth);
    let ms = MeasurementSet::from_full(&full, sample_indices(n, 6, 3).unwrap()).unwrap();
    let lambda = 0.5;
    let a = recover(&ms, &tight_admm(lambda)).unwrap();
    let p = pgd_recover(
        &ms,
        &PgdConfig {
            lambda,
            tol: 1e-13,
            max_iter: 200_000,
            ..PgdConfig::default()
        },
    )
    .unwrap();
    assert!(a.converged && p.converged);
    let d = a.s_hat.max_abs_diff(&p.s_hat);
    assert!(d < 1e-4, "solvers disagree by {d:e}");
    assert!(a.s_hat.eps_rel_l2(&truth) < 0.1);
}

#[test]
fn full_sampling_without_penalty_is_exact_inversion() {
    let n = 16;
    let full = full_measurements(&hsc((1, 0)), n, &OdeConfig::default()).unwrap();
    let truth = invert_full(&full).unwrap();
    let ms = MeasurementSet::from_full(&full, (0..n).collect()).unwrap();
    let a = recover(&ms, &tight_admm(0.0)).unwrap();
    assert!(a.s_hat.max_abs_diff(&truth) < 1e-9);
    let p = pgd_recover(&ms, &PgdConfig { tol: 1e-14, ..PgdConfig::default() }).unwrap();
    assert!(p.s_hat.max_abs_diff(&truth) < 1e-9);
}

#[test]
fn gradient_vanishes_at_the_pgd_optimum_up_to_the_subgradient() {
    // at the optimum every coordinate satisfies |∇f| ≤ λ, with equality
    // wherever the iterate is nonzero
    let n = 8;
    let truth = sparse_truth(n);
    let ms = MeasurementSet::from_full(&grid_of(&truth), sample_indices(n, 6, 1).unwrap()).unwrap();
    let lambda = 0.5;
    let cfg = PgdConfig {
        lambda,
        tol: 1e-14,
        max_iter: 200_000,
        ..PgdConfig::default()
    };
    let (state, report) = PgdSolver::new(&ms, cfg).unwrap().run().unwrap();
    assert!(report.converged);
    let x = state.s_cur;
    let g = fidelity_gradient(&x, &ms).unwrap();
    let worst = g.data().iter().map(|v| v.norm()).fold(0.0, f64::max);
    assert!(worst <= lambda * (1.0 + 1e-3), "max |grad| {worst}");
    let op = SampledFourier::for_measurements(&ms);
    let f_opt = objective(&op, &ms, &x, &x, lambda).unwrap();
    let zero = ComplexGrid::zeros(n, n);
    let f_zero = objective(&op, &ms, &zero, &zero, lambda).unwrap();
    assert!(f_opt < f_zero);
}

#[test]
fn pgf_is_one_at_the_unit_point() {
    let one = UnitCirclePoint::new(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
    for init in [(1, 0), (0, 1), (3, 2)] {
        for t in [0.1, 1.0, 5.0] {
            let m = hsc(init).with_time(t).unwrap();
            let v = pgf(&m, one, &OdeConfig::default()).unwrap();
            assert!((v - 1.0).norm() < 1e-8);
        }
    }
}
