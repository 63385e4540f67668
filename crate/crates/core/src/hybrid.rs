//! Hybrid electronic-chemical solvers.
//!
//! Type 1 treats read chemical states as spins: a random command flip is
//! followed by a noisy readout of every cell and a Metropolis decision on the
//! read energy. Type 2 treats commanded stirrer states as spins: the energy
//! change of a flip is summed pair by pair, and each pair's contribution is
//! sign-flipped when its chemical consistency check fails. The deterministic
//! index `p_chem` is the probability a check passes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chemodel::{
    prob_high_1d, prob_high_single, sample_cs, ChemModel1DParams, SingleCellHysteresisParams,
};
use crate::qubo::{bits_to_spins, qubo_to_ising, IsingProblem, QuboProblem};
use crate::{ChemicalState, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    pub p_chem: f64,
    pub k_temp: f64,
    pub max_steps: usize,
    /// Stop as soon as the energy reaches this value.
    pub target_energy: Option<f64>,
    /// Without a target, stop after this many consecutive rejected proposals.
    /// `None` means `50 · n`.
    pub patience: Option<usize>,
    pub hysteresis: SingleCellHysteresisParams,
    /// Keep every step in the trace; summaries are always kept.
    pub record_steps: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            p_chem: 0.95,
            k_temp: 5.0,
            max_steps: 10_000,
            target_energy: None,
            patience: None,
            hysteresis: SingleCellHysteresisParams::default(),
            record_steps: true,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_chem) {
            return Err(Error::invalid(format!(
                "p_chem {} outside [0, 1]",
                self.p_chem
            )));
        }
        if !(self.k_temp > 0.0 && self.k_temp.is_finite()) {
            return Err(Error::invalid(format!(
                "k_temp {} must be positive",
                self.k_temp
            )));
        }
        self.hysteresis.validate()
    }

    fn patience_for(&self, n: usize) -> usize {
        self.patience.unwrap_or(50 * n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: usize,
    pub flip: usize,
    pub observed_delta_e: f64,
    pub true_delta_e: f64,
    pub accepted: bool,
    pub config: Vec<bool>,
    pub energy: f64,
    pub lowest: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    pub initial: Vec<bool>,
    pub initial_energy: f64,
    pub steps: Vec<TraceStep>,
    pub final_config: Vec<bool>,
    pub final_energy: f64,
    pub lowest_config: Vec<bool>,
    pub lowest_energy: f64,
    pub proposals: usize,
    /// Proposal count at which the target was first met (0 when the start met it).
    pub reached_target_at: Option<usize>,
}

impl SolveTrace {
    fn start(x: Vec<bool>, e: f64) -> Self {
        SolveTrace {
            initial: x.clone(),
            initial_energy: e,
            steps: Vec::new(),
            final_config: x.clone(),
            final_energy: e,
            lowest_config: x,
            lowest_energy: e,
            proposals: 0,
            reached_target_at: None,
        }
    }

    pub fn reached_target(&self) -> bool {
        self.reached_target_at.is_some()
    }
}

/// Shared stopping rule of both solvers.
struct Stopper {
    target: Option<f64>,
    tol: f64,
    patience: usize,
    idle: usize,
}

impl Stopper {
    fn new(p: &QuboProblem, params: &SolverParams) -> Self {
        Stopper {
            target: params.target_energy,
            tol: p.tolerance(),
            patience: params.patience_for(p.n()),
            idle: 0,
        }
    }

    fn hit(&self, energy: f64) -> bool {
        self.target.is_some_and(|t| energy <= t + self.tol)
    }

    /// Returns true when the run should end.
    fn after(&mut self, trace: &mut SolveTrace, accepted: bool) -> bool {
        if self.hit(trace.final_energy) {
            trace.reached_target_at = Some(trace.proposals);
            return true;
        }
        if self.target.is_none() {
            self.idle = if accepted { 0 } else { self.idle + 1 };
            return self.idle >= self.patience;
        }
        false
    }
}

fn initial_config<R: Rng + ?Sized>(
    n: usize,
    init: Option<&[bool]>,
    rng: &mut R,
) -> Result<Vec<bool>> {
    match init {
        Some(x) => {
            Error::check_len(n, x.len())?;
            Ok(x.to_vec())
        }
        None => Ok((0..n).map(|_| rng.gen::<bool>()).collect()),
    }
}

fn record(trace: &mut SolveTrace, params: &SolverParams, step: TraceStep) {
    if params.record_steps {
        trace.steps.push(step);
    }
}

/// Type 1: chemical states as spins, Metropolis acceptance `min(e^{−ΔE/k}, 1)`.
///
/// Each proposal flips one commanded bit, then every cell is read through the
/// single-cell hysteresis model. The trace records the read states.
pub fn solve_type1<R: Rng + ?Sized>(
    p: &QuboProblem,
    init: Option<&[bool]>,
    params: &SolverParams,
    rng: &mut R,
) -> Result<SolveTrace> {
    params.validate()?;
    let n = p.n();
    let mut cmd = initial_config(n, init, rng)?;
    let mut cs = cmd.clone();
    let mut e = p.energy(&cs)?;
    let mut trace = SolveTrace::start(cs.clone(), e);
    let mut stop = Stopper::new(p, params);
    if stop.hit(e) {
        trace.reached_target_at = Some(0);
        return Ok(trace);
    }
    for step in 1..=params.max_steps {
        let h = rng.gen_range(0..n);
        let true_delta_e = p.flip_delta(&cmd, h);
        let mut new_cmd = cmd.clone();
        new_cmd[h] = !new_cmd[h];
        let new_cs = new_cmd
            .iter()
            .zip(&cs)
            .map(|(&c, &prev)| {
                let pr = prob_high_single(c, ChemicalState::from_bit(prev), &params.hysteresis);
                sample_cs(pr, rng).map(ChemicalState::is_high)
            })
            .collect::<Result<Vec<_>>>()?;
        let new_e = p.energy(&new_cs)?;
        let observed = new_e - e;
        let accept_p = (-observed / params.k_temp).exp().min(1.0);
        let accepted = observed <= 0.0 || rng.gen::<f64>() < accept_p;
        if accepted {
            cmd = new_cmd;
            cs = new_cs;
            e = new_e;
        }
        trace.proposals = step;
        trace.final_config.clone_from(&cs);
        trace.final_energy = e;
        if e < trace.lowest_energy {
            trace.lowest_energy = e;
            trace.lowest_config.clone_from(&cs);
        }
        let lowest = trace.lowest_energy;
        record(
            &mut trace,
            params,
            TraceStep {
                step,
                flip: h,
                observed_delta_e: observed,
                true_delta_e,
                accepted,
                config: cs.clone(),
                energy: e,
                lowest,
            },
        );
        if stop.after(&mut trace, accepted) {
            break;
        }
    }
    Ok(trace)
}

/// Energy change of flipping spin `h`, split into the self term and one term
/// per coupled partner. The parts sum to the true change.
#[derive(Debug, Clone, PartialEq)]
pub struct FlipTerms {
    pub linear: f64,
    pub partners: Vec<usize>,
    pub pair: Vec<f64>,
}

impl FlipTerms {
    pub fn of(ising: &IsingProblem, s: &[i8], h: usize) -> Self {
        let n = ising.n();
        let ds = -2.0 * s[h] as f64;
        let mut partners = Vec::new();
        let mut pair = Vec::new();
        for j in (0..n).filter(|&j| j != h) {
            let k = ising.coupling(h, j);
            if k != 0.0 {
                partners.push(j);
                pair.push(ds * k * s[j] as f64);
            }
        }
        FlipTerms {
            linear: ds * ising.field[h],
            partners,
            pair,
        }
    }

    pub fn true_delta(&self) -> f64 {
        self.linear + self.pair.iter().sum::<f64>()
    }

    /// Sum with each pair term kept when its bit is set and negated otherwise.
    pub fn observed(&self, consistency: &[bool]) -> Result<f64> {
        Error::check_len(self.pair.len(), consistency.len())?;
        Ok(self.linear
            + self
                .pair
                .iter()
                .zip(consistency)
                .map(|(&d, &ok)| if ok { d } else { -d })
                .sum::<f64>())
    }
}

/// Observed energy change of flipping spin `h` given one consistency bit per
/// coupled partner (partners in index order).
pub fn observed_delta_e(p: &QuboProblem, s: &[i8], h: usize, consistency: &[bool]) -> Result<f64> {
    Error::check_len(p.n(), s.len())?;
    if h >= p.n() {
        return Err(Error::invalid(format!("flip index {h} out of range")));
    }
    if s.iter().any(|&v| v != 1 && v != -1) {
        return Err(Error::invalid("spins must be ±1"));
    }
    FlipTerms::of(&qubo_to_ising(p), s, h).observed(consistency)
}

/// Type-2 acceptance rule, shared with the Markov analysis.
pub fn accepts(p: &QuboProblem, observed: f64) -> bool {
    observed <= p.tolerance()
}

/// How a pair's consistency check is decided.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "snake_case")]
pub enum Consistency {
    /// One Bernoulli(`p_chem`) draw per pair.
    #[default]
    Bernoulli,
    /// Two coupled cells are driven by the pair's commands through the 1D
    /// chemical model; the check passes when both read states equal the most
    /// probable ones. `p_chem` is not used.
    ChemModel(ChemModel1DParams),
}

fn pair_consistent<R: Rng + ?Sized>(
    backend: &Consistency,
    p_chem: f64,
    a: bool,
    b: bool,
    rng: &mut R,
) -> Result<bool> {
    match backend {
        Consistency::Bernoulli => Ok(rng.gen::<f64>() < p_chem),
        Consistency::ChemModel(model) => {
            // two-cell chain, interface on; each cell sees only the other
            let pa = prob_high_1d(a, false, b, false, true, model);
            let pb = prob_high_1d(b, a, false, true, false, model);
            let ra = sample_cs(pa, rng)?.is_high();
            let rb = sample_cs(pb, rng)?.is_high();
            Ok(ra == (pa >= 0.5) && rb == (pb >= 0.5))
        }
    }
}

/// Type 2 with the default Bernoulli consistency check.
pub fn solve_type2<R: Rng + ?Sized>(
    p: &QuboProblem,
    init: Option<&[bool]>,
    params: &SolverParams,
    rng: &mut R,
) -> Result<SolveTrace> {
    solve_type2_with(p, init, params, &Consistency::Bernoulli, rng)
}

/// Type 2: stirrer commands as spins; accept a flip when the observed energy
/// change is at most zero.
pub fn solve_type2_with<R: Rng + ?Sized>(
    p: &QuboProblem,
    init: Option<&[bool]>,
    params: &SolverParams,
    backend: &Consistency,
    rng: &mut R,
) -> Result<SolveTrace> {
    params.validate()?;
    let n = p.n();
    let ising = qubo_to_ising(p);
    let mut x = initial_config(n, init, rng)?;
    let mut s = bits_to_spins(&x);
    let mut e = p.energy(&x)?;
    let mut trace = SolveTrace::start(x.clone(), e);
    let mut stop = Stopper::new(p, params);
    if stop.hit(e) {
        trace.reached_target_at = Some(0);
        return Ok(trace);
    }
    let mut bits = Vec::with_capacity(n);
    for step in 1..=params.max_steps {
        let h = rng.gen_range(0..n);
        let terms = FlipTerms::of(&ising, &s, h);
        bits.clear();
        for &j in &terms.partners {
            bits.push(pair_consistent(
                backend,
                params.p_chem,
                s[h] < 0,
                s[j] > 0,
                rng,
            )?);
        }
        let observed = terms.observed(&bits)?;
        let true_delta_e = terms.true_delta();
        let accepted = accepts(p, observed);
        if accepted {
            x[h] = !x[h];
            s[h] = -s[h];
            e = p.energy(&x)?;
        }
        trace.proposals = step;
        trace.final_config.clone_from(&x);
        trace.final_energy = e;
        if e < trace.lowest_energy {
            trace.lowest_energy = e;
            trace.lowest_config.clone_from(&x);
        }
        let lowest = trace.lowest_energy;
        record(
            &mut trace,
            params,
            TraceStep {
                step,
                flip: h,
                observed_delta_e: observed,
                true_delta_e,
                accepted,
                config: x.clone(),
                energy: e,
                lowest,
            },
        );
        if stop.after(&mut trace, accepted) {
            break;
        }
    }
    Ok(trace)
}
