//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::collections::VecDeque;
use std::time::Instant;

use chemcomp::cca1d::{run_1d, Cca1dState, Mode, Rule1D};
use chemcomp::cca2d::{cca2d_update, fluct_budget, ChemitEventCounts, ChemitLattice, PwmGrid};
use chemcomp::chemodel::{ChemModel1DParams, PwmClass, SingleCellHysteresisParams};
use chemcomp::hybrid::{solve_type1, solve_type2, SolverParams};
use chemcomp::lattice::{chemical_state_count, input_state_count, CellIndex, Grid, Scientific};
use chemcomp::markov::{build_transition_matrix, success_probabilities, SuccessReport};
use chemcomp::qubo::{
    brute_force_min, build_2sat, build_partition, build_tsp, decode_tour, euclidean_distances,
    index_to_bits, spins_to_bits, tsp_var, QuboProblem,
};
use chemcomp::seed::stream_rng;
use chemcomp::signal::{
    synthesize_trace, two_d_tock_threshold, ClockMode, ClockedReader, ColorState, GlobalClock,
    GlobalState, LocalClock, Rfsm,
};
use chemcomp::ChemicalState;
use chemcomp_harness::{replay, run, ExperimentConfig, Kind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Outcome = Result<String, String>;

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn from_spins(s: &[i8]) -> Vec<bool> {
    spins_to_bits(s).unwrap()
}

fn partition4() -> QuboProblem {
    build_partition(&[1, 3, 4, 8], 1.0).unwrap()
}

fn partition6() -> QuboProblem {
    build_partition(&[1, 3, 4, 6, 5, 1], 1.0).unwrap()
}

const SAT1: [[i32; 2]; 3] = [[1, 2], [2, -4], [3, 4]];
const SAT2: [[i32; 2]; 6] = [[1, 2], [2, -4], [3, 4], [1, -3], [1, -2], [-3, 4]];
const CITIES: [[f64; 2]; 4] = [[0.0, 0.0], [1.0, 0.0], [3.0, 3.0], [0.0, 10.0]];

fn tsp4() -> QuboProblem {
    build_tsp(&euclidean_distances(&CITIES), 1.0, None).unwrap()
}

fn golden_hamiltonians() -> Outcome {
    let p = partition4();
    check(p.offset() == 256.0, "partition h0")?;
    check(
        p.linear() == [-60.0, -156.0, -192.0, -256.0],
        "partition h1",
    )?;
    let h2 = [
        [0.0, 12.0, 16.0, 32.0],
        [12.0, 0.0, 48.0, 96.0],
        [16.0, 48.0, 0.0, 128.0],
        [32.0, 96.0, 128.0, 0.0],
    ];
    check(
        p.halved_matrix()
            .iter()
            .zip(&h2)
            .all(|(a, b)| a[..] == b[..]),
        "partition h2",
    )?;

    let sat = [
        (
            build_2sat(&SAT1, 1.0).unwrap(),
            [-4.0, -4.0, -4.0, 0.0],
            [
                [0.0, 2.0, 0.0, 0.0],
                [2.0, 0.0, 0.0, -2.0],
                [0.0, 0.0, 0.0, 2.0],
                [0.0, -2.0, 2.0, 0.0],
            ],
        ),
        (
            build_2sat(&SAT2, 1.0).unwrap(),
            [-4.0, 0.0, 4.0, 0.0],
            [
                [0.0, 0.0, -2.0, 0.0],
                [0.0, 0.0, 0.0, -2.0],
                [-2.0, 0.0, 0.0, 0.0],
                [0.0, -2.0, 0.0, 0.0],
            ],
        ),
    ];
    for (k, (p, h1, h2)) in sat.iter().enumerate() {
        check(p.offset() == 8.0, format!("2-SAT example {} h0", k + 1))?;
        check(
            p.linear() == h1,
            format!("2-SAT example {} h1 {:?}", k + 1, p.linear()),
        )?;
        check(
            p.halved_matrix()
                .iter()
                .zip(h2)
                .all(|(a, b)| a[..] == b[..]),
            format!("2-SAT example {} h2", k + 1),
        )?;
    }

    // printed cross-position couplings, cities A..D
    let printed = [
        [0.0, 0.01, 0.0422, 0.0995],
        [0.01, 0.0, 0.0359, 0.1],
        [0.0422, 0.0359, 0.0, 0.0758],
        [0.0995, 0.1, 0.0758, 0.0],
    ];
    let t = tsp4();
    let mut worst: f64 = 0.0;
    check(t.offset() == 8.0, "tsp h0")?;
    check(t.linear().iter().all(|&v| v == -2.0), "tsp h1")?;
    for p1 in 0..4 {
        for c1 in 0..4 {
            for p2 in 0..4 {
                for c2 in 0..4 {
                    let (i, j) = (tsp_var(4, p1, c1), tsp_var(4, p2, c2));
                    if i >= j {
                        continue;
                    }
                    let adjacent = (p1 + 1) % 4 == p2 || (p2 + 1) % 4 == p1;
                    let want = if p1 == p2 || c1 == c2 {
                        2.0
                    } else if adjacent {
                        printed[c1][c2]
                    } else {
                        0.0
                    };
                    worst = worst.max((t.coupling(i, j) - want).abs());
                }
            }
        }
    }
    check(worst <= 5e-4, format!("tsp coupling off by {worst:.2e}"))?;
    Ok(format!(
        "partition, both 2-SAT examples exact; tsp couplings within {worst:.1e}"
    ))
}

fn oracle_solutions() -> Outcome {
    let p = partition4();
    let bf = brute_force_min(&p).unwrap();
    let want = [
        bits_index(&[true, true, true, false]),
        bits_index(&[false, false, false, true]),
    ];
    check(
        bf.min_energy == 0.0 && bf.argmins == want,
        format!("{{1,3,4,8}}: {:?}", bf),
    )?;

    let numbers = [1u64, 3, 4, 6, 5, 1];
    let bf6 = brute_force_min(&partition6()).unwrap();
    check(bf6.min_energy == 0.0, "six-number minimum")?;
    for x in bf6.argmin_bits(6) {
        let diff: i64 = numbers
            .iter()
            .zip(&x)
            .map(|(&v, &b)| if b { v as i64 } else { -(v as i64) })
            .sum();
        check(diff == 0, "six-number argmin is not an equal split")?;
    }
    // {1,3,5,1}|{4,6} and {1,3,6}|{4,5,1}
    for split in [
        [false, false, true, true, false, false],
        [false, false, true, false, true, true],
    ] {
        check(
            bf6.argmins.contains(&bits_index(&split)),
            format!("split {split:?} missing"),
        )?;
    }

    for (clauses, sol) in [
        (&SAT1[..], [true, false, true, false]),
        (&SAT2[..], [true, true, false, true]),
    ] {
        let p = build_2sat(clauses, 1.0).unwrap();
        let bf = brute_force_min(&p).unwrap();
        check(bf.min_energy == 0.0, "2-SAT minimum")?;
        check(
            bf.argmins.contains(&bits_index(&sol)),
            format!("2-SAT solution {sol:?}"),
        )?;
    }

    let t = tsp4();
    let bf = brute_force_min(&t).unwrap();
    check(
        close(bf.min_energy, 0.2212, 5e-4),
        format!("tsp minimum {}", bf.min_energy),
    )?;
    for x in bf.argmin_bits(16) {
        check(decode_tour(&x, 4).is_some(), "tsp argmin is not a tour")?;
    }
    let published = from_spins(&[-1, -1, -1, 1, 1, -1, -1, -1, -1, 1, -1, -1, -1, -1, 1, -1]);
    check(
        bf.argmins.contains(&bits_index(&published)),
        "published tour is not optimal",
    )?;
    Ok(format!(
        "{{1,3,4,8}} 2 argmins; {{1,3,4,6,5,1}} {} equal splits; 2-SAT solutions found; tsp E={:.4} ({} argmins)",
        bf6.argmins.len(),
        bf.min_energy,
        bf.argmins.len()
    ))
}

fn bits_index(x: &[bool]) -> u64 {
    chemcomp::qubo::bits_to_index(x)
}

fn solver_reproduction() -> Outcome {
    let p = partition4();
    let printed: [([i8; 4], f64); 8] = [
        ([-1, -1, -1, -1], 256.0),
        ([-1, 1, -1, -1], 100.0),
        ([1, 1, -1, -1], 64.0),
        ([-1, 1, -1, 1], 36.0),
        ([-1, 1, 1, 1], 196.0),
        ([1, 1, -1, 1], 64.0),
        ([-1, 1, 1, -1], 4.0),
        ([-1, -1, -1, 1], 0.0),
    ];
    for (s, e) in printed {
        let got = p.energy(&from_spins(&s)).unwrap();
        check(got == e, format!("{s:?}: {got} != {e}"))?;
    }
    check(
        build_2sat(&SAT1, 1.0).unwrap().energy(&[false; 4]).unwrap() == 8.0,
        "2-SAT start energy",
    )?;
    check(
        build_2sat(&SAT2, 1.0).unwrap().energy(&[false; 4]).unwrap() == 8.0,
        "2-SAT start energy",
    )?;

    let problems = [
        ("{1,3,4,8}", partition4()),
        ("{1,3,4,6,5,1}", partition6()),
        ("2-SAT 1", build_2sat(&SAT1, 1.0).unwrap()),
        ("2-SAT 2", build_2sat(&SAT2, 1.0).unwrap()),
        ("tsp", tsp4()),
    ];
    let mut parts = Vec::new();
    for (name, p) in &problems {
        let min = brute_force_min(p).unwrap().min_energy;
        for type1 in [true, false] {
            let params = SolverParams {
                p_chem: 0.95,
                max_steps: 10_000,
                target_energy: Some(min),
                hysteresis: SingleCellHysteresisParams { p_read: 1.0 },
                record_steps: false,
                ..SolverParams::default()
            };
            let reached = (0..100u64)
                .into_par_iter()
                .filter(|&k| {
                    let mut rng = stream_rng(2024, k);
                    let t = if type1 {
                        solve_type1(p, None, &params, &mut rng).unwrap()
                    } else {
                        solve_type2(p, None, &params, &mut rng).unwrap()
                    };
                    t.reached_target()
                })
                .count();
            let label = if type1 { "T1" } else { "T2" };
            check(reached >= 95, format!("{name} {label}: {reached}/100"))?;
            parts.push(format!("{name} {label} {reached}"));
        }
    }
    Ok(format!(
        "printed energies verified; reached/100: {}",
        parts.join(", ")
    ))
}

/// At index 1 only non-increasing flips happen. Configurations with no such
/// path to a minimum score 0, those that can only end at a minimum score 1,
/// and those whose descent can branch either way lie strictly between.
fn deterministic_index_study() -> Outcome {
    let p = build_partition(&[1, 3, 4, 9, 3, 5, 3, 6], 1.0).unwrap();
    let n = p.n();
    let bf = brute_force_min(&p).unwrap();
    let report = |pc: f64| -> SuccessReport {
        let t = build_transition_matrix(&p, pc).unwrap();
        success_probabilities(&t, &bf.argmins, 800, 10).unwrap()
    };
    let r1 = report(1.0);
    let r99 = report(0.99);
    let r95 = report(0.95);

    let dim = 1usize << n;
    let is_min = |c: usize| bf.argmins.contains(&(c as u64));
    let mut pred: Vec<Vec<usize>> = vec![Vec::new(); dim];
    for c in 0..dim {
        if is_min(c) {
            continue;
        }
        let x = index_to_bits(c as u64, n);
        for h in 0..n {
            if p.flip_delta(&x, h) <= p.tolerance() {
                pred[c ^ (1 << h)].push(c);
            }
        }
    }
    let reach_back = |seeds: Vec<usize>| -> Vec<bool> {
        let mut seen = vec![false; dim];
        let mut q: VecDeque<usize> = seeds.into_iter().collect();
        for &s in &q {
            seen[s] = true;
        }
        while let Some(c) = q.pop_front() {
            for &b in &pred[c] {
                if !seen[b] {
                    seen[b] = true;
                    q.push_back(b);
                }
            }
        }
        seen
    };
    let can_win = reach_back(bf.argmins.iter().map(|&m| m as usize).collect());
    let can_lose = reach_back((0..dim).filter(|&c| !can_win[c]).collect());

    let (mut zeros, mut ones, mut branching) = (0, 0, 0);
    for c in 0..dim {
        let s = r1.success[c];
        if !can_win[c] {
            check(
                s == 0.0,
                format!("config {c} cannot reach a minimum but scores {s}"),
            )?;
            zeros += 1;
        } else if !can_lose[c] {
            check(
                s >= 1.0 - 1e-9,
                format!("config {c} cannot be trapped but scores {s}"),
            )?;
            ones += 1;
        } else {
            check(
                s > 0.0 && s < 1.0,
                format!("branching config {c} scores {s}"),
            )?;
            branching += 1;
        }
    }
    check(zeros > 0, "no trapped configuration at index 1.0")?;
    check(
        r99.success.iter().all(|&s| s > 0.0),
        "a configuration never succeeds at 0.99",
    )?;
    let (s1, s99, s95) = (r1.summary.spread, r99.summary.spread, r95.summary.spread);
    check(
        s95 < s99 && s99 < s1,
        format!("spreads {s95} {s99} {s1} not ordered"),
    )?;
    Ok(format!(
        "index 1.0: {zeros} trapped, {ones} certain, {branching} branching; min at 0.99 = {:.4}; spread {s95:.2e} < {s99:.2e} < {s1:.2}",
        r99.summary.min
    ))
}

fn markov_monte_carlo() -> Outcome {
    let p = partition4();
    let bf = brute_force_min(&p).unwrap();
    let horizon = 40;
    let runs = 10_000;
    let mut worst: f64 = 0.0;
    for pc in [1.0, 0.95] {
        let t = build_transition_matrix(&p, pc).unwrap();
        let exact = success_probabilities(&t, &bf.argmins, horizon, 10).unwrap();
        let params = SolverParams {
            p_chem: pc,
            max_steps: horizon,
            target_energy: Some(bf.min_energy),
            patience: Some(usize::MAX),
            record_steps: false,
            ..SolverParams::default()
        };
        let rows: Vec<(u64, usize)> = (0..16u64)
            .into_par_iter()
            .map(|c| {
                let x = index_to_bits(c, 4);
                let mut rng = stream_rng(77 + c, (pc * 100.0) as u64);
                let hits = (0..runs)
                    .filter(|_| {
                        solve_type2(&p, Some(&x), &params, &mut rng)
                            .unwrap()
                            .reached_target()
                    })
                    .count();
                (c, hits)
            })
            .collect();
        for (c, hits) in rows {
            let want = exact.success[c as usize];
            let got = hits as f64 / runs as f64;
            let sigma = (want * (1.0 - want) / runs as f64).sqrt();
            let z = if sigma > 0.0 {
                (got - want).abs() / sigma
            } else {
                0.0
            };
            check(
                (got - want).abs() <= 3.0 * sigma + 1e-12,
                format!("p_chem {pc} config {c}: {got} vs {want:.4}"),
            )?;
            worst = worst.max(z);
        }
    }
    Ok(format!(
        "32 initial configurations within 3 sigma (worst {worst:.2} sigma), horizon {horizon}"
    ))
}

fn eca(rule: u8, row: &[bool]) -> Vec<bool> {
    let w = row.len();
    (0..w)
        .map(|i| {
            let l = i > 0 && row[i - 1];
            let r = i + 1 < w && row[i + 1];
            rule >> ((l as u8) << 2 | (row[i] as u8) << 1 | r as u8) & 1 == 1
        })
        .collect()
}

fn eca_display() -> Outcome {
    let grid = Grid::line(7, false).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let params = ChemModel1DParams::default();
    for rule in [30u8, 110, 250] {
        for trial in 0..21 {
            let init: Vec<bool> = if trial == 0 {
                (0..7).map(|i| i == 3).collect()
            } else {
                (0..7).map(|_| rng.gen()).collect()
            };
            let state = Cca1dState::new(
                &grid,
                init.iter().map(|&b| ChemicalState::from_bit(b)).collect(),
            )
            .unwrap();
            let r: Rule1D = format!("{rule}-16").parse().unwrap();
            let raster = run_1d(
                &grid,
                &state,
                &r,
                25,
                Mode::DisplayScreen,
                &params,
                &mut rng,
            )
            .unwrap();
            let mut row = init;
            for got in &raster.rows {
                let got: Vec<bool> = got.iter().map(|c| c.is_high()).collect();
                check(got == row, format!("rule {rule} trial {trial}"))?;
                row = eca(rule, &row);
            }
        }
    }
    Ok("rules 30, 110, 250 bit-identical for 25 steps from 21 initial rows each".into())
}

fn degeneration() -> Outcome {
    let grid = Grid::line(7, false).unwrap();
    let params = ChemModel1DParams::default();
    let rules = [30u8, 110, 250, 90, 150, 54, 18, 60, 184, 45];
    for a in rules {
        let r: Rule1D = format!("{a}-1").parse().unwrap();
        check(r.rule_b() == 0, "A-1 must switch every interface off")?;
        for seed in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let init: Vec<ChemicalState> =
                (0..7).map(|_| ChemicalState::from_bit(rng.gen())).collect();
            let state = Cca1dState::new(&grid, init).unwrap();
            let prob = run_1d(
                &grid,
                &state,
                &r,
                30,
                Mode::Probabilistic,
                &params,
                &mut rng,
            )
            .unwrap();
            let disp = run_1d(
                &grid,
                &state,
                &r,
                30,
                Mode::DisplayScreen,
                &params,
                &mut rng,
            )
            .unwrap();
            check(prob == disp, format!("rule {a} seed {seed}"))?;
        }
    }
    Ok("10 rules x 100 seeds identical to display mode".into())
}

fn at(lat: &ChemitLattice, r: usize, c: usize) -> usize {
    lat.grid().offset(CellIndex::new(r, c))
}

fn high_at(cells: &[usize]) -> Vec<ChemicalState> {
    let mut cs = vec![ChemicalState::Low; 25];
    for &k in cells {
        cs[k] = ChemicalState::High;
    }
    cs
}

fn chemit_events() -> Outcome {
    let lat = ChemitLattice::square(5).unwrap();
    let budget = fluct_budget(25, 0.1);
    let centre = at(&lat, 2, 2);
    let one = PwmGrid::with_chemits(&lat, &[centre]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    // propagation: the right neighbour is high
    let right = at(&lat, 2, 3);
    let (next, ev) = cca2d_update(&lat, &one, &high_at(&[right]), budget, &mut rng).unwrap();
    check(
        next.cores() == vec![right],
        "propagation moves the core right",
    )?;
    check(
        next.class[centre] == PwmClass::Fluct,
        "old core becomes fluctuation",
    )?;
    check(ev.propagation == 1, "propagation count")?;

    // replication: the bottom-right next-nearest cell is high
    let diag = at(&lat, 3, 3);
    let (next, ev) = cca2d_update(&lat, &one, &high_at(&[diag]), budget, &mut rng).unwrap();
    check(
        next.cores() == vec![centre, diag],
        "replication adds a core",
    )?;
    check(ev.replication == 1, "replication count")?;

    // competition: two adjacent cores, both high
    let left = at(&lat, 2, 1);
    let pair = PwmGrid::with_chemits(&lat, &[left, centre]).unwrap();
    let cs = high_at(&[left, centre]);
    let trials = 10_000;
    let mut tally = [0usize; 3];
    for seed in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (next, ev) = cca2d_update(&lat, &pair, &cs, budget, &mut rng).unwrap();
        check(
            ev.competition_survived + ev.competition_died == 2,
            "two competitions",
        )?;
        match next.core_count() {
            2 => tally[0] += 1,
            0 => tally[1] += 1,
            1 => tally[2] += 1,
            k => return Err(format!("{k} cores after competition")),
        }
    }
    let freq = tally.map(|t| t as f64 / trials as f64);
    for (f, want) in freq.iter().zip([0.25, 0.25, 0.5]) {
        check(
            close(*f, want, 0.02),
            format!("competition frequencies {freq:?}"),
        )?;
    }

    // random selection
    let up = at(&lat, 1, 2);
    let up_left = at(&lat, 1, 1);
    let cases: [(&[usize], &str); 3] = [
        (&[up, right], "propagation"),
        (&[up_left, diag], "replication"),
        (&[right, diag], "either"),
    ];
    let mut seen_either = ChemitEventCounts::default();
    for (high, class) in cases {
        for seed in 0..400 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (next, ev) = cca2d_update(&lat, &one, &high_at(high), budget, &mut rng).unwrap();
            check(
                ev.random_selection == 1,
                "multiple high cells trigger random selection",
            )?;
            let cores = next.cores();
            let ok = match class {
                "propagation" => {
                    ev.propagation == 1 && cores.len() == 1 && high.contains(&cores[0])
                }
                "replication" => ev.replication == 1 && cores.len() == 2 && cores.contains(&centre),
                _ => ev.propagation + ev.replication == 1,
            };
            check(ok, format!("{class} case, seed {seed}: {cores:?}"))?;
            if class == "either" {
                seen_either += ev;
            }
        }
    }
    check(
        seen_either.propagation > 0 && seen_either.replication > 0,
        "mixed case never produced both outcomes",
    )?;
    Ok(format!(
        "propagation, replication, random selection as published; competition both/none/one = {:.3}/{:.3}/{:.3}",
        freq[0], freq[1], freq[2]
    ))
}

fn population_run(side: usize, initial: usize, steps: usize) -> f64 {
    let mut cfg = ExperimentConfig::new(Kind::Cca2d);
    cfg.seed = 42;
    cfg.replicas = 10;
    let c = cfg.cca2d.as_mut().unwrap();
    c.side = side;
    c.initial_chemits = initial;
    c.steps = steps;
    let dir = tempfile::tempdir().unwrap();
    run(&cfg, dir.path()).unwrap();
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    summary["tail_mean"].as_f64().unwrap()
}

fn population_dynamics() -> Outcome {
    let steps = 8000;
    let jobs: Vec<(usize, usize)> = vec![(50, 1), (50, 10), (50, 100), (20, 10), (10, 10)];
    let means: Vec<f64> = jobs
        .par_iter()
        .map(|&(s, i)| population_run(s, i, steps))
        .collect();
    let init = &means[..3];
    let max = init.iter().copied().fold(f64::MIN, f64::max);
    let min = init.iter().copied().fold(f64::MAX, f64::min);
    let avg = init.iter().sum::<f64>() / 3.0;
    let spread = (max - min) / avg;
    check(
        spread < 0.2,
        format!("initial counts 1/10/100 end at {init:.2?}, spread {spread:.3}"),
    )?;
    let (p50, p20, p10) = (means[1], means[3], means[4]);
    check(
        p50 > p20 && p20 > p10,
        format!("sizes 50/20/10 give {p50:.2}/{p20:.2}/{p10:.2}"),
    )?;
    Ok(format!(
        "50x50 tail means {:.1}/{:.1}/{:.1} (spread {:.1}%); 50/20/10 sides {p50:.1} > {p20:.1} > {p10:.1}",
        init[0],
        init[1],
        init[2],
        spread * 100.0
    ))
}

fn counting() -> Outcome {
    let input = input_state_count(7, 4, 2);
    let chem = chemical_state_count(7, 2);
    let a = Scientific::truncated(&input, 3).to_string();
    let b = Scientific::truncated(&chem, 2).to_string();
    // expansion with two levels everywhere
    let ratio = input_state_count(7, 2, 2) / &chem;
    check(
        ratio == num_bigint::BigUint::from(2u8).pow(84),
        "expansion is 2^84",
    )?;
    let c = Scientific::truncated(&ratio, 2).to_string();
    check(a == "6.12×10^54", a.clone())?;
    check(b == "5.6×10^14", b.clone())?;
    check(c == "1.9×10^25", c.clone())?;
    Ok(format!("{a}, {b}, ratio {c}"))
}

fn clock_conformance() -> Outcome {
    use ColorState::{Blue as B, LightBlue as L, Red as R};
    use LocalClock::{None as N, Tick, Tock};
    for (from, osc, to) in [
        (N, false, Tock),
        (Tick, false, Tock),
        (Tock, false, Tock),
        (N, true, Tick),
        (Tick, true, Tick),
        (Tock, true, Tick),
    ] {
        check(from.step(osc) == to, format!("local {from:?} on {osc}"))?;
    }

    let mut g = GlobalClock::new(ClockMode::OneD);
    let mut quiet = vec![N; 7];
    check(
        !g.step(&mut quiet) && g.state == GlobalState::None,
        "global stays none",
    )?;
    let mut one_tick = vec![N; 7];
    one_tick[0] = Tick;
    check(
        !g.step(&mut one_tick) && g.state == GlobalState::Tick,
        "global none to tick",
    )?;
    let mut all = vec![Tock; 7];
    check(
        g.step(&mut all) && all.iter().all(|&l| l == N),
        "all tock fires and resets",
    )?;
    g.state = GlobalState::Tick;
    let mut two = vec![N; 7];
    two[1] = Tock;
    two[5] = Tock;
    check(g.step(&mut two), "two tocks with all red fire")?;
    g.state = GlobalState::Tick;
    let mut busy = vec![Tock; 7];
    busy[2] = Tick;
    check(!g.step(&mut busy), "a ticking cell blocks the tock")?;
    let mut g2 = GlobalClock {
        state: GlobalState::Tick,
        ..GlobalClock::new(ClockMode::TwoD)
    };
    check(two_d_tock_threshold(49) == 15, "2D threshold")?;
    let mut locals = vec![N; 49];
    locals[..14].fill(Tock);
    check(!g2.step(&mut locals), "14 of 49 tocks do not fire")?;
    locals[14] = Tock;
    check(g2.step(&mut locals), "15 of 49 tocks fire")?;

    let decode = |c: &[ColorState]| Rfsm::decode(c);
    check(decode(&[R, L, R]) == [ChemicalState::Low], "R-LB-R is low")?;
    check(
        decode(&[R, L, B, L, R]) == [ChemicalState::High],
        "R-LB-B-LB-R is high",
    )?;
    check(
        decode(&[R, B, R]) == [ChemicalState::High],
        "direct blue is high",
    )?;
    check(
        decode(&[R, R, L, L]).is_empty(),
        "nothing before the return to red",
    )?;

    let mut reader = ClockedReader::new(2, ClockMode::OneD, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut decisions = 0;
    for _ in 0..4 {
        let a = synthesize_trace(ChemicalState::High, 8, 0, &mut rng).unwrap();
        let b = synthesize_trace(ChemicalState::Low, 8, 0, &mut rng).unwrap();
        for f in 0..a.len() {
            if let Some(d) = reader.push_frame(&[a[f], b[f]]).unwrap() {
                check(
                    d == [ChemicalState::High, ChemicalState::Low],
                    "clocked decision",
                )?;
                decisions += 1;
            }
        }
    }
    check(
        decisions == 2,
        format!("two global tocks per decision gave {decisions} decisions"),
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for case in 0..1000 {
        let target = ChemicalState::from_bit(rng.gen());
        let period = rng.gen_range(4..40);
        let trace = synthesize_trace(target, period, 0, &mut rng).unwrap();
        check(
            decode(&trace) == [target],
            format!("round trip case {case}"),
        )?;
    }
    Ok("local, global, 2D and rFSM branches conform; 1000/1000 round trips".into())
}

fn small_configs() -> Vec<ExperimentConfig> {
    let mut v = Vec::new();
    for kind in [
        Kind::Count,
        Kind::Cca1d,
        Kind::Cca2d,
        Kind::Solve,
        Kind::Markov,
        Kind::ClockDemo,
    ] {
        let mut c = ExperimentConfig::new(kind);
        c.seed = 99;
        c.replicas = 3;
        match kind {
            Kind::Cca1d => c.cca1d.as_mut().unwrap().mode = Mode::Probabilistic,
            Kind::Cca2d => {
                let s = c.cca2d.as_mut().unwrap();
                s.side = 12;
                s.steps = 60;
                s.snapshot_every = 20;
                s.ppm = true;
            }
            Kind::Markov => c.markov.as_mut().unwrap().trajectory_steps = 50,
            Kind::ClockDemo => {
                let s = c.clock_demo.as_mut().unwrap();
                s.jitter = 1;
                s.noise = 0.01;
            }
            _ => {}
        }
        v.push(c);
    }
    v
}

fn determinism() -> Outcome {
    let mut files = 0;
    for cfg in small_configs() {
        let dir = tempfile::tempdir().unwrap();
        let first = run(&cfg, &dir.path().join("a")).map_err(|e| e.to_string())?;
        let report = replay(&dir.path().join("a/manifest.json"), &dir.path().join("b"))
            .map_err(|e| e.to_string())?;
        check(
            report.is_identical(),
            format!("{}: {:?}", cfg.kind.name(), report.mismatches),
        )?;
        for rec in &first.manifest.outputs {
            let a = std::fs::read(dir.path().join("a").join(&rec.path)).unwrap();
            let b = std::fs::read(dir.path().join("b").join(&rec.path)).unwrap();
            check(a == b, format!("{} differs", rec.path))?;
        }
        files += first.manifest.outputs.len();
    }
    Ok(format!(
        "6 kinds replayed from manifests, {files} files byte-identical"
    ))
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() {
    let criteria: Vec<Criterion> = vec![
        (1, "golden Hamiltonians", golden_hamiltonians),
        (2, "oracle solutions", oracle_solutions),
        (3, "solver reproduction", solver_reproduction),
        (4, "deterministic-index study", deterministic_index_study),
        (5, "Markov/Monte-Carlo agreement", markov_monte_carlo),
        (6, "ECA display mode", eca_display),
        (7, "1D-CCA degeneration", degeneration),
        (8, "Chemit micro-events", chemit_events),
        (9, "population dynamics", population_dynamics),
        (10, "counting", counting),
        (11, "clock and rFSM", clock_conformance),
        (12, "determinism", determinism),
    ];
    let results: Vec<(Outcome, f64)> = criteria
        .par_iter()
        .map(|(_, _, f)| {
            let t = Instant::now();
            let r = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
            (r, t.elapsed().as_secs_f64())
        })
        .collect();
    let mut failed = 0;
    for ((id, name, _), (r, secs)) in criteria.iter().zip(results) {
        match r {
            Ok(detail) => println!("criterion {id:>2} PASS {name} ({secs:.1}s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {id:>2} FAIL {name} ({secs:.1}s): {why}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
