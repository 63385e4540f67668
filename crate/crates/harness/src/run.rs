//! Per-kind runners.

use std::fmt::Write as _;
use std::path::Path;

use chemcomp::cca1d::{run_1d, Cca1dState, Mode, Raster};
use chemcomp::cca2d::{cs_to_text, run_population_with, PopulationStats, PwmGrid};
use chemcomp::hybrid::{solve_type1, solve_type2_with, SolveTrace};
use chemcomp::lattice::{chemical_state_count, input_state_count, Grid, Scientific};
use chemcomp::markov::{
    build_transition_matrix, default_horizon, success_probabilities, trajectory_raster,
    SuccessSummary,
};
use chemcomp::qubo::{brute_force_min, decode_tour, index_to_bits, ProblemKind, QuboProblem};
use chemcomp::seed::{derive_seed, stream_rng};
use chemcomp::signal::{synthesize_trace, ClockedReader, ColorState, MislabelNoise};
use chemcomp::ChemicalState;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{
    Cca1dConfig, Cca2dConfig, ClockDemoConfig, CountConfig, ExperimentConfig, Kind, MarkovConfig,
    SolveConfig, SolverKind, Target,
};
use crate::error::{HarnessError, Result};
use crate::manifest::{canonical_config, sha256_hex, Outputs, RunManifest, MANIFEST_FILE};

/// Manifest of a finished run plus a short human-readable report.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub report: String,
}

/// Validate `config`, run it into `out_dir` and write the manifest there.
pub fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome> {
    config.validate()?;
    let started = chrono::Utc::now().to_rfc3339();
    let mut out = Outputs::new(out_dir)?;
    log::info!(
        "running {} (seed {}) into {}",
        config.kind.name(),
        config.seed,
        out.root().display()
    );
    let section = |present: bool| {
        if present {
            Ok(())
        } else {
            Err(HarnessError::config(config.kind.name(), "missing table"))
        }
    };
    let report = match config.kind {
        Kind::Count => {
            section(config.count.is_some())?;
            run_count(config.count.as_ref().expect("checked"), &mut out)?
        }
        Kind::Cca1d => {
            section(config.cca1d.is_some())?;
            run_cca1d(config, config.cca1d.as_ref().expect("checked"), &mut out)?
        }
        Kind::Cca2d => {
            section(config.cca2d.is_some())?;
            run_cca2d(config, config.cca2d.as_ref().expect("checked"), &mut out)?
        }
        Kind::Solve => {
            section(config.solve.is_some())?;
            run_solve(config, config.solve.as_ref().expect("checked"), &mut out)?
        }
        Kind::Markov => {
            section(config.markov.is_some())?;
            run_markov(config, config.markov.as_ref().expect("checked"), &mut out)?
        }
        Kind::ClockDemo => {
            section(config.clock_demo.is_some())?;
            run_clock_demo(
                config,
                config.clock_demo.as_ref().expect("checked"),
                &mut out,
            )?
        }
    };
    let text = canonical_config(config);
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        kind: config.kind.name().to_string(),
        seed: config.seed,
        config_hash: sha256_hex(text.as_bytes()),
        config: text,
        started,
        finished: chrono::Utc::now().to_rfc3339(),
        outputs: out.into_records(),
    };
    let path = out_dir.join(MANIFEST_FILE);
    let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    json.push('\n');
    std::fs::write(&path, json).map_err(|e| HarnessError::io(&path, e))?;
    Ok(RunOutcome { manifest, report })
}

fn bit_string(bits: impl IntoIterator<Item = bool>) -> String {
    bits.into_iter()
        .map(|b| if b { '1' } else { '0' })
        .collect()
}

fn csv_bytes(w: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    w(&mut buf).expect("writing to memory");
    buf
}

#[derive(Serialize)]
struct CountReport {
    n: u32,
    p: u32,
    q: u32,
    k: u32,
    input_states: String,
    chemical_states: String,
    input_approx: String,
    chemical_approx: String,
    /// Exact when the input count is a multiple of the chemical count.
    expansion: Option<String>,
    expansion_approx: Option<String>,
}

fn run_count(c: &CountConfig, out: &mut Outputs) -> Result<String> {
    let input = input_state_count(c.n, c.p, c.q);
    let chem = chemical_state_count(c.n, c.k);
    let exact = (&input % &chem) == num_bigint::BigUint::from(0u8);
    let ratio = exact.then(|| &input / &chem);
    let report = CountReport {
        n: c.n,
        p: c.p,
        q: c.q,
        k: c.k,
        input_states: input.to_string(),
        chemical_states: chem.to_string(),
        input_approx: Scientific::truncated(&input, c.digits).to_string(),
        chemical_approx: Scientific::truncated(&chem, c.digits).to_string(),
        expansion: ratio.as_ref().map(|r| r.to_string()),
        expansion_approx: ratio
            .as_ref()
            .map(|r| Scientific::truncated(r, c.digits).to_string()),
    };
    out.json("count.json", &report)?;
    let mut text = format!(
        "input states: {}\nchemical states: {}\n",
        report.input_approx, report.chemical_approx
    );
    if let Some(r) = &report.expansion_approx {
        writeln!(text, "expansion: {r}").unwrap();
    }
    Ok(text)
}

fn run_cca1d(cfg: &ExperimentConfig, c: &Cca1dConfig, out: &mut Outputs) -> Result<String> {
    let grid = Grid::line(c.width, c.periodic)?;
    let rule = c.rule()?;
    let init = if c.init == "center" {
        Cca1dState::single_seed(&grid)?
    } else {
        let cs = c
            .init
            .chars()
            .map(|ch| ChemicalState::from_bit(ch == '1'))
            .collect();
        Cca1dState::new(&grid, cs)?
    };
    // display mode draws no random numbers, so one raster covers every replica
    let replicas = if c.mode == Mode::DisplayScreen {
        1
    } else {
        cfg.replicas
    };
    let rasters = (0..replicas as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(cfg.seed, k);
            run_1d(&grid, &init, &rule, c.steps, c.mode, &c.model, &mut rng)
        })
        .collect::<chemcomp::Result<Vec<Raster>>>()?;
    for (k, r) in rasters.iter().enumerate() {
        let stem = if replicas == 1 {
            "raster".to_string()
        } else {
            format!("raster_{k}")
        };
        out.write(&format!("{stem}.txt"), r.to_text().as_bytes())?;
        out.write(&format!("{stem}.csv"), &csv_bytes(|b| r.write_csv(b)))?;
    }
    Ok(format!(
        "rule {rule}, {} cells, {} steps\n{}",
        c.width,
        c.steps,
        rasters[0].to_text()
    ))
}

#[derive(Serialize)]
struct Cca2dSummary {
    side: usize,
    initial_chemits: usize,
    steps: usize,
    replicas: usize,
    tail_window: usize,
    tail_mean: f64,
    final_mean: f64,
    final_counts: Vec<usize>,
}

struct Snapshot {
    step: usize,
    pwm: PwmGrid,
    cs: String,
}

fn run_cca2d(cfg: &ExperimentConfig, c: &Cca2dConfig, out: &mut Outputs) -> Result<String> {
    let params = c.population();
    let runs = (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(cfg.seed, k);
            let mut snaps = Vec::new();
            let every = if k == 0 { c.snapshot_every } else { 0 };
            let series = run_population_with(
                c.side,
                c.initial_chemits,
                c.steps,
                &params,
                derive_seed(cfg.seed, k),
                &mut rng,
                |t, pwm, cs| {
                    if every > 0 && t % every == 0 {
                        snaps.push(Snapshot {
                            step: t,
                            pwm: pwm.clone(),
                            cs: cs_to_text(cs, c.side),
                        });
                    }
                },
            )?;
            Ok((series, snaps))
        })
        .collect::<chemcomp::Result<Vec<_>>>()?;
    let mut series = Vec::with_capacity(runs.len());
    for (k, (s, snaps)) in runs.into_iter().enumerate() {
        out.write(&format!("replica_{k}.csv"), &csv_bytes(|b| s.write_csv(b)))?;
        for snap in snaps {
            let stem = format!("snapshots/step_{:06}", snap.step);
            out.write(
                &format!("{stem}_pwm.txt"),
                snap.pwm.to_text(c.side).as_bytes(),
            )?;
            out.write(&format!("{stem}_cs.txt"), snap.cs.as_bytes())?;
            if c.ppm {
                out.write(
                    &format!("{stem}.ppm"),
                    &csv_bytes(|b| snap.pwm.write_ppm(c.side, b)),
                )?;
            }
        }
        series.push(s);
    }
    let stats = PopulationStats::from_replicas(series)?;
    out.write("population.csv", &csv_bytes(|b| stats.write_csv(b)))?;
    let window = c.steps.clamp(1, 2000);
    let summary = Cca2dSummary {
        side: c.side,
        initial_chemits: c.initial_chemits,
        steps: c.steps,
        replicas: cfg.replicas,
        tail_window: window,
        tail_mean: stats.tail_mean(window),
        final_mean: *stats.mean.last().expect("at least the initial row"),
        final_counts: stats
            .replicas
            .iter()
            .map(|r| *r.chemits.last().expect("initial row"))
            .collect(),
    };
    out.json("summary.json", &summary)?;
    Ok(format!(
        "{}x{} torus, {} initial Chemits, {} replicas: mean over last {} steps {:.2}\n",
        c.side, c.side, c.initial_chemits, cfg.replicas, window, summary.tail_mean
    ))
}

#[derive(Serialize)]
struct TraceLine<'a> {
    step: usize,
    flip: usize,
    observed_delta_e: f64,
    true_delta_e: f64,
    accepted: bool,
    config: &'a str,
    energy: f64,
    lowest: f64,
}

#[derive(Serialize)]
struct SolveRun {
    replica: usize,
    seed: u64,
    initial: String,
    initial_energy: f64,
    final_config: String,
    final_energy: f64,
    lowest_config: String,
    lowest_energy: f64,
    proposals: usize,
    reached_target_at: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tour: Option<Vec<usize>>,
}

#[derive(Serialize)]
struct Oracle {
    min_energy: f64,
    argmins: Vec<String>,
}

#[derive(Serialize)]
struct SolveSummary {
    solver: SolverKind,
    n: usize,
    target_energy: Option<f64>,
    oracle: Option<Oracle>,
    reached: usize,
    runs: Vec<SolveRun>,
}

fn run_solve(cfg: &ExperimentConfig, c: &SolveConfig, out: &mut Outputs) -> Result<String> {
    let p = c.problem.build()?;
    let n = p.n();
    let oracle = match c.target {
        Target::Oracle => Some(brute_force_min(&p)?),
        _ => None,
    };
    let mut params = c.params;
    params.target_energy = match c.target {
        Target::Oracle => oracle.as_ref().map(|o| o.min_energy),
        Target::None => None,
        Target::Energy(e) => Some(e),
    };
    let init: Option<Vec<bool>> = c.init.as_ref().map(|v| v.iter().map(|&b| b == 1).collect());
    if let Some(x) = &init {
        if x.len() != n {
            return Err(HarnessError::config(
                "solve.init",
                format!("expected {n} values, got {}", x.len()),
            ));
        }
    }
    let traces = (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(cfg.seed, k);
            match c.solver {
                SolverKind::Type1 => solve_type1(&p, init.as_deref(), &params, &mut rng),
                SolverKind::Type2 => {
                    solve_type2_with(&p, init.as_deref(), &params, &c.consistency, &mut rng)
                }
            }
        })
        .collect::<chemcomp::Result<Vec<SolveTrace>>>()?;
    let mut runs = Vec::with_capacity(traces.len());
    for (k, t) in traces.iter().enumerate() {
        if params.record_steps {
            let mut text = String::new();
            for s in &t.steps {
                let config = bit_string(s.config.iter().copied());
                let line = TraceLine {
                    step: s.step,
                    flip: s.flip,
                    observed_delta_e: s.observed_delta_e,
                    true_delta_e: s.true_delta_e,
                    accepted: s.accepted,
                    config: &config,
                    energy: s.energy,
                    lowest: s.lowest,
                };
                text.push_str(&serde_json::to_string(&line).expect("trace serializes"));
                text.push('\n');
            }
            out.write(&format!("trace_{k}.jsonl"), text.as_bytes())?;
        }
        runs.push(SolveRun {
            replica: k,
            seed: derive_seed(cfg.seed, k as u64),
            initial: bit_string(t.initial.iter().copied()),
            initial_energy: t.initial_energy,
            final_config: bit_string(t.final_config.iter().copied()),
            final_energy: t.final_energy,
            lowest_config: bit_string(t.lowest_config.iter().copied()),
            lowest_energy: t.lowest_energy,
            proposals: t.proposals,
            reached_target_at: t.reached_target_at,
            tour: tour_of(&p, &t.final_config),
        });
    }
    let summary = SolveSummary {
        solver: c.solver,
        n,
        target_energy: params.target_energy,
        oracle: oracle.map(|o| Oracle {
            min_energy: o.min_energy,
            argmins: o
                .argmins
                .iter()
                .map(|&i| bit_string(index_to_bits(i, n)))
                .collect(),
        }),
        reached: runs
            .iter()
            .filter(|r| r.reached_target_at.is_some())
            .count(),
        runs,
    };
    out.json("summary.json", &summary)?;
    let mut text = format!("{n} variables, {} runs", summary.runs.len());
    if let Some(e) = summary.target_energy {
        write!(text, ", target {e}: reached in {}", summary.reached).unwrap();
    }
    text.push('\n');
    for r in summary.runs.iter().take(10) {
        writeln!(
            text,
            "  run {}: {} E={} after {} proposals",
            r.replica, r.final_config, r.final_energy, r.proposals
        )
        .unwrap();
    }
    Ok(text)
}

fn tour_of(p: &QuboProblem, x: &[bool]) -> Option<Vec<usize>> {
    match p.kind() {
        ProblemKind::Tsp { distances, .. } => decode_tour(x, distances.len()),
        _ => None,
    }
}

#[derive(Serialize)]
struct IndexSummary {
    p_chem: f64,
    file: String,
    summary: SuccessSummary,
}

#[derive(Serialize)]
struct MarkovSummary {
    n: usize,
    horizon: usize,
    min_energy: f64,
    minima: Vec<String>,
    indices: Vec<IndexSummary>,
}

fn run_markov(cfg: &ExperimentConfig, c: &MarkovConfig, out: &mut Outputs) -> Result<String> {
    let p = c.problem.build()?;
    let n = p.n();
    let oracle = brute_force_min(&p)?;
    let horizon = c.horizon.unwrap_or_else(|| default_horizon(n));
    let init: Vec<bool> = match &c.trajectory_init {
        Some(v) if v.len() != n => {
            return Err(HarnessError::config(
                "markov.trajectory_init",
                format!("expected {n} values, got {}", v.len()),
            ))
        }
        Some(v) => v.iter().map(|&b| b == 1).collect(),
        None => vec![false; n],
    };
    let results = c
        .p_chem
        .par_iter()
        .enumerate()
        .map(|(k, &pc)| {
            let t = build_transition_matrix(&p, pc)?;
            let report = success_probabilities(&t, &oracle.argmins, horizon, c.bins)?;
            let traj = if c.trajectory_steps > 0 {
                Some(trajectory_raster(
                    &p,
                    pc,
                    &init,
                    c.trajectory_steps,
                    &mut stream_rng(cfg.seed, k as u64),
                )?)
            } else {
                None
            };
            Ok((report, traj))
        })
        .collect::<chemcomp::Result<Vec<_>>>()?;
    let mut indices = Vec::new();
    let mut text = format!(
        "{n} variables, {} minima, horizon {horizon}\n",
        oracle.argmins.len()
    );
    for (report, traj) in results {
        let label = format!("{}", report.p_chem);
        let file = format!("success_p{label}.csv");
        out.write(&file, &csv_bytes(|b| report.write_csv(b)))?;
        out.json(&format!("success_p{label}.json"), &report)?;
        if let Some(traj) = traj {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["step", "config", "bits", "energy", "at_minimum"])
                .expect("in-memory csv");
            for (step, &c) in traj.iter().enumerate() {
                let energy = p.energy_of_index(c);
                w.write_record([
                    step.to_string(),
                    c.to_string(),
                    bit_string(index_to_bits(c, n)),
                    energy.to_string(),
                    oracle.argmins.binary_search(&c).is_ok().to_string(),
                ])
                .expect("in-memory csv");
            }
            out.write(
                &format!("trajectory_p{label}.csv"),
                &w.into_inner().expect("in-memory csv"),
            )?;
        }
        let s = &report.summary;
        writeln!(
            text,
            "  p_chem {label}: success min {:.4} max {:.4} mean {:.4} spread {:.4}",
            s.min, s.max, s.mean, s.spread
        )
        .unwrap();
        indices.push(IndexSummary {
            p_chem: report.p_chem,
            file,
            summary: report.summary,
        });
    }
    out.json(
        "summary.json",
        &MarkovSummary {
            n,
            horizon,
            min_energy: oracle.min_energy,
            minima: oracle
                .argmins
                .iter()
                .map(|&i| bit_string(index_to_bits(i, n)))
                .collect(),
            indices,
        },
    )?;
    Ok(text)
}

#[derive(Serialize)]
struct ClockSummary {
    cells: usize,
    cycles: usize,
    frames: usize,
    decisions: usize,
    expected_decisions: usize,
    cells_compared: usize,
    cells_correct: usize,
    accuracy: f64,
}

fn run_clock_demo(
    cfg: &ExperimentConfig,
    c: &ClockDemoConfig,
    out: &mut Outputs,
) -> Result<String> {
    let mut rng = stream_rng(cfg.seed, 0);
    let noise = MislabelNoise {
        probability: c.noise,
    };
    let mut targets: Vec<Vec<ChemicalState>> = Vec::with_capacity(c.cycles);
    let mut frames: Vec<Vec<ColorState>> = Vec::new();
    for _ in 0..c.cycles {
        let target: Vec<ChemicalState> = (0..c.cells)
            .map(|_| ChemicalState::from_bit(rng.gen()))
            .collect();
        let mut traces = target
            .iter()
            .map(|&t| synthesize_trace(t, c.period_frames, c.jitter, &mut rng))
            .collect::<chemcomp::Result<Vec<_>>>()?;
        let len = traces.iter().map(Vec::len).max().unwrap_or(0);
        for tr in &mut traces {
            tr.resize(len, ColorState::Red);
            noise.apply(tr, &mut rng);
        }
        frames.extend((0..len).map(|f| traces.iter().map(|tr| tr[f]).collect()));
        targets.push(target);
    }

    let confirm = c.confirm_tocks.max(1) as usize;
    let mut reader = ClockedReader::new(c.cells, c.mode, c.confirm_tocks);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["decision", "frame", "cycle", "decoded", "target", "correct"])
        .expect("in-memory csv");
    let (mut decisions, mut compared, mut correct) = (0, 0, 0);
    for (f, frame) in frames.iter().enumerate() {
        if let Some(decoded) = reader.push_frame(frame)? {
            let cycle = (decisions + 1) * confirm - 1;
            let target = targets.get(cycle);
            let hits = target.map(|t| t.iter().zip(&decoded).filter(|(a, b)| a == b).count());
            if let Some(h) = hits {
                compared += c.cells;
                correct += h;
            }
            w.write_record([
                decisions.to_string(),
                f.to_string(),
                cycle.to_string(),
                bit_string(decoded.iter().map(|s| s.is_high())),
                target
                    .map(|t| bit_string(t.iter().map(|s| s.is_high())))
                    .unwrap_or_default(),
                hits.map(|h| h.to_string()).unwrap_or_default(),
            ])
            .expect("in-memory csv");
            decisions += 1;
        }
    }
    out.write("clock.csv", &w.into_inner().expect("in-memory csv"))?;
    let summary = ClockSummary {
        cells: c.cells,
        cycles: c.cycles,
        frames: frames.len(),
        decisions,
        expected_decisions: c.cycles / confirm,
        cells_compared: compared,
        cells_correct: correct,
        accuracy: if compared == 0 {
            0.0
        } else {
            correct as f64 / compared as f64
        },
    };
    out.json("summary.json", &summary)?;
    Ok(format!(
        "{} decisions over {} cycles, accuracy {:.4}\n",
        summary.decisions, summary.cycles, summary.accuracy
    ))
}
