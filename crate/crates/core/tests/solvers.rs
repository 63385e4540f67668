use chemcomp::chemodel::SingleCellHysteresisParams;
use chemcomp::hybrid::{solve_type1, solve_type2, SolverParams};
use chemcomp::qubo::{
    brute_force_min, build_partition, greedy_descent, index_to_bits, QuboProblem,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn eight() -> QuboProblem {
    build_partition(&[1, 3, 4, 9, 3, 5, 3, 6], 1.0).unwrap()
}

#[test]
fn greedy_descent_can_be_trapped() {
    let p = eight();
    let best = brute_force_min(&p).unwrap().min_energy;
    let mut trapped = 0;
    for idx in 0..256u64 {
        let x = index_to_bits(idx, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(idx);
        let t = greedy_descent(&p, &x, 10_000, &mut rng).unwrap();
        let end = t.configs.last().unwrap();
        assert!(t.energies.windows(2).all(|w| w[1] <= w[0] + 1e-9));
        assert!((0..8).all(|i| p.flip_delta(end, i) >= -p.tolerance()));
        if *t.energies.last().unwrap() > best + p.tolerance() {
            trapped += 1;
        }
    }
    assert!(trapped > 0);
}

#[test]
fn type2_random_index_climbs() {
    let p = eight();
    let params = SolverParams {
        p_chem: 0.5,
        max_steps: 2000,
        patience: Some(usize::MAX),
        ..SolverParams::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let t = solve_type2(&p, Some(&[false; 8]), &params, &mut rng).unwrap();
    let uphill = t
        .steps
        .iter()
        .filter(|s| s.accepted && s.true_delta_e > 0.0)
        .count();
    assert!(uphill > 0);
}

#[test]
fn type1_with_exact_reads_is_metropolis() {
    // one spin, E = 2x: from x = 0 every proposal is uphill by 2
    let p = QuboProblem::from_quadratic_form(0.0, &[2.0], &[vec![0.0]]).unwrap();
    let params = SolverParams {
        k_temp: 1.5,
        max_steps: 1,
        patience: Some(usize::MAX),
        hysteresis: SingleCellHysteresisParams { p_read: 1.0 },
        ..SolverParams::default()
    };
    let runs = 40_000;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let accepted = (0..runs)
        .filter(|_| {
            let t = solve_type1(&p, Some(&[false]), &params, &mut rng).unwrap();
            t.final_config[0]
        })
        .count();
    let want = (-2.0f64 / 1.5).exp();
    let sigma = (want * (1.0 - want) / runs as f64).sqrt();
    let got = accepted as f64 / runs as f64;
    assert!((got - want).abs() < 4.0 * sigma, "{got} vs {want}");
}

#[test]
fn same_seed_same_trace() {
    let p = eight();
    let params = SolverParams::default();
    let a = solve_type2(&p, None, &params, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let b = solve_type2(&p, None, &params, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    assert_eq!(a, b);
}
