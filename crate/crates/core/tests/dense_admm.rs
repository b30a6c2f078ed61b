mod common;

use branchprob::admm::{build_mhat, u_update, AdmmConfig, AdmmSolver, AdmmState};
use branchprob::fft::Fft2;
use branchprob::grid::MeasurementSet;
use common::{max_diff, random_grid, random_problem, unvec, DenseAdmm};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn config(beta: f64, lambda: f64) -> AdmmConfig {
    AdmmConfig {
        beta,
        lambda,
        eps_abs: 1e-14,
        eps_rel: 1e-14,
        d1_exp: 0.0,
        d2_exp: 0.0,
        max_iter: 1000,
    }
}

fn col(g: &branchprob::ComplexGrid) -> DVector<num_complex::Complex64> {
    let n = g.rows();
    DVector::from_fn(n * n, |k, _| g.get(k % n, k / n))
}

#[test]
fn u_update_matches_kronecker_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 4;
    let beta = 0.1;
    let ms = MeasurementSet::new(n, vec![0, 1], random_grid(2, 2, &mut rng)).unwrap();
    let state = AdmmState {
        u: random_grid(n, n, &mut rng),
        z: random_grid(n, n, &mut rng),
        y: random_grid(n, n, &mut rng),
        k: 0,
    };
    let mhat = build_mhat(n, ms.indices(), beta).unwrap();
    let got = u_update(&state, &ms.embedded(), &mhat, beta, &Fft2::new(n)).unwrap();
    let dense = DenseAdmm::new(&ms, beta, 0.0);
    let want = unvec(n, &dense.u_update(&col(&state.z), &col(&state.y)));
    assert!(max_diff(&got, &want) < 1e-12, "{}", max_diff(&got, &want));
}

#[test]
fn two_iterations_on_the_toy_match() {
    let n = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let ms = MeasurementSet::new(n, vec![0, 1], random_grid(2, 2, &mut rng)).unwrap();
    let solver = AdmmSolver::new(&ms, config(0.1, 0.3)).unwrap();
    let mut st = solver.initial_state();
    let mut dense = DenseAdmm::new(&ms, 0.1, 0.3);
    for _ in 0..2 {
        solver.step(&mut st).unwrap();
        dense.step();
        let (u, z, y) = dense.grids();
        assert!(max_diff(&st.u, &u) < 1e-12);
        assert!(max_diff(&st.z, &z) < 1e-12);
        assert!(max_diff(&st.y, &y) < 1e-12);
    }
}

#[test]
fn every_iterate_matches_for_small_grids() {
    let mut thresholded = 0;
    for (n, m) in [(4, 2), (4, 3), (8, 3), (8, 5)] {
        for seed in 0..5 {
            let ms = random_problem(n, m, seed);
            let (beta, lambda) = (0.05 + 0.1 * seed as f64, 0.2);
            let solver = AdmmSolver::new(&ms, config(beta, lambda)).unwrap();
            let mut st = solver.initial_state();
            let mut dense = DenseAdmm::new(&ms, beta, lambda);
            for k in 0..40 {
                solver.step(&mut st).unwrap();
                dense.step();
                let (u, z, y) = dense.grids();
                let d = max_diff(&st.u, &u).max(max_diff(&st.z, &z)).max(max_diff(&st.y, &y));
                assert!(d < 1e-10, "n={n} seed={seed} k={k} diff={d}");
            }
            thresholded += st.z.data().iter().filter(|v| v.norm() == 0.0).count();
        }
    }
    assert!(thresholded > 0, "soft threshold never zeroed an entry");
}
