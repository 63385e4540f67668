//! Exact Markov-chain analysis of the Type-2 solver.
//!
//! Each proposal picks one of `n` spins uniformly and accepts with a
//! probability that depends only on the current configuration, so the solver
//! is a chain over the `2^n` configurations. Only single-flip moves have
//! nonzero probability; the matrix stores the diagonal plus `n` off-diagonal
//! entries per row.

use std::io::{self, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::hybrid::{accepts, solve_type2, FlipTerms, SolverParams};
use crate::qubo::{bits_to_spins, index_to_bits, qubo_to_ising, IsingProblem, QuboProblem};
use crate::{Error, Result};

/// Largest spin count for which a transition matrix is built.
pub const MATRIX_LIMIT: usize = 14;

/// Distribution of the observed energy change, as sorted (value, mass) atoms.
fn observed_distribution(terms: &FlipTerms, p_chem: f64, merge_tol: f64) -> Vec<(f64, f64)> {
    let mut atoms = vec![(terms.linear, 1.0)];
    let mut next = Vec::new();
    for &d in &terms.pair {
        next.clear();
        for &(v, m) in &atoms {
            if p_chem > 0.0 {
                next.push((v + d, m * p_chem));
            }
            if p_chem < 1.0 {
                next.push((v - d, m * (1.0 - p_chem)));
            }
        }
        next.sort_by(|a, b| a.0.total_cmp(&b.0));
        atoms.clear();
        for &(v, m) in &next {
            match atoms.last_mut() {
                Some((lv, lm)) if (v - *lv).abs() <= merge_tol => *lm += m,
                _ => atoms.push((v, m)),
            }
        }
    }
    atoms
}

fn acceptance_from_terms(p: &QuboProblem, terms: &FlipTerms, p_chem: f64) -> f64 {
    observed_distribution(terms, p_chem, p.tolerance() * 1e-3)
        .into_iter()
        .filter(|&(v, _)| accepts(p, v))
        .map(|(_, m)| m)
        .sum::<f64>()
        .min(1.0)
}

/// Probability that flipping spin `h` from configuration `x` is accepted.
pub fn acceptance_prob(p: &QuboProblem, x: &[bool], h: usize, p_chem: f64) -> Result<f64> {
    Error::check_len(p.n(), x.len())?;
    if h >= p.n() {
        return Err(Error::invalid(format!("flip index {h} out of range")));
    }
    check_p_chem(p_chem)?;
    let terms = FlipTerms::of(&qubo_to_ising(p), &bits_to_spins(x), h);
    Ok(acceptance_from_terms(p, &terms, p_chem))
}

fn check_p_chem(p_chem: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p_chem) {
        return Err(Error::invalid(format!("p_chem {p_chem} outside [0, 1]")));
    }
    Ok(())
}

/// Row-stochastic single-flip transition matrix. Configuration `c` moves to
/// `c ^ (1 << h)` with probability `off(c, h)` and stays with `diag(c)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    n: usize,
    p_chem: f64,
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl TransitionMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn p_chem(&self) -> f64 {
        self.p_chem
    }

    pub fn diag(&self, c: usize) -> f64 {
        self.diag[c]
    }

    pub fn off(&self, c: usize, h: usize) -> f64 {
        self.off[c * self.n + h]
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        let diff = from ^ to;
        if diff == 0 {
            self.diag[from]
        } else if diff.is_power_of_two() {
            self.off(from, diff.trailing_zeros() as usize)
        } else {
            0.0
        }
    }

    pub fn row_sum(&self, c: usize) -> f64 {
        self.diag[c] + self.off[c * self.n..(c + 1) * self.n].iter().sum::<f64>()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..d)
            .map(|i| (0..d).map(|j| self.get(i, j)).collect())
            .collect()
    }
}

pub fn build_transition_matrix(p: &QuboProblem, p_chem: f64) -> Result<TransitionMatrix> {
    let n = p.n();
    if n > MATRIX_LIMIT {
        return Err(Error::Capacity {
            what: "spins for a transition matrix",
            value: n,
            limit: MATRIX_LIMIT,
        });
    }
    check_p_chem(p_chem)?;
    let ising: IsingProblem = qubo_to_ising(p);
    let dim = 1usize << n;
    let mut diag = vec![0.0; dim];
    let mut off = vec![0.0; dim * n];
    for c in 0..dim {
        let s = bits_to_spins(&index_to_bits(c as u64, n));
        for h in 0..n {
            let terms = FlipTerms::of(&ising, &s, h);
            off[c * n + h] = acceptance_from_terms(p, &terms, p_chem) / n as f64;
        }
        diag[c] = 1.0 - off[c * n..(c + 1) * n].iter().sum::<f64>();
    }
    Ok(TransitionMatrix {
        n,
        p_chem,
        diag,
        off,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessSummary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub spread: f64,
    /// Counts over equal-width bins of [0, 1]; the last bin is closed.
    pub histogram: Vec<usize>,
}

impl SuccessSummary {
    fn of(values: &[f64], bins: usize) -> Self {
        let bins = bins.max(1);
        let mut histogram = vec![0; bins];
        for &v in values {
            histogram[((v * bins as f64) as usize).min(bins - 1)] += 1;
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = values.iter().sum::<f64>() / values.len().max(1) as f64;
        SuccessSummary {
            min,
            max,
            mean,
            spread: max - min,
            histogram,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessReport {
    pub p_chem: f64,
    pub horizon: usize,
    /// Indexed by configuration.
    pub success: Vec<f64>,
    pub minima: Vec<u64>,
    /// Over configurations that are not minima themselves; over all
    /// configurations when every one is a minimum.
    pub summary: SuccessSummary,
}

impl SuccessReport {
    /// `config,success` with a header line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "config,success")?;
        for (c, v) in self.success.iter().enumerate() {
            writeln!(w, "{c},{v:.12}")?;
        }
        Ok(())
    }
}

/// Default horizon: `100 · n` proposals.
pub fn default_horizon(n: usize) -> usize {
    100 * n
}

/// Probability of having reached a minimum within `horizon` proposals, per
/// starting configuration. Minima are absorbing.
pub fn success_probabilities(
    t: &TransitionMatrix,
    minima: &[u64],
    horizon: usize,
    bins: usize,
) -> Result<SuccessReport> {
    if minima.is_empty() {
        return Err(Error::invalid("minima set is empty"));
    }
    let dim = t.dim();
    let n = t.n;
    let mut absorbing = vec![false; dim];
    for &m in minima {
        let m = m as usize;
        if m >= dim {
            return Err(Error::invalid(format!("minimum index {m} out of range")));
        }
        absorbing[m] = true;
    }
    let mut v: Vec<f64> = absorbing.iter().map(|&a| a as u8 as f64).collect();
    let mut next = v.clone();
    for _ in 0..horizon {
        for c in 0..dim {
            if absorbing[c] {
                continue;
            }
            let mut acc = t.diag[c] * v[c];
            for h in 0..n {
                acc += t.off[c * n + h] * v[c ^ (1 << h)];
            }
            next[c] = acc.clamp(0.0, 1.0);
        }
        std::mem::swap(&mut v, &mut next);
    }
    let nontrivial: Vec<f64> = (0..dim).filter(|&c| !absorbing[c]).map(|c| v[c]).collect();
    let summary = if nontrivial.is_empty() {
        SuccessSummary::of(&v, bins)
    } else {
        SuccessSummary::of(&nontrivial, bins)
    };
    let mut minima = minima.to_vec();
    minima.sort_unstable();
    minima.dedup();
    Ok(SuccessReport {
        p_chem: t.p_chem,
        horizon,
        success: v,
        minima,
        summary,
    })
}

/// One sampled Type-2 run of `steps` proposals, as configuration indices
/// (`steps + 1` entries, starting with `init`).
pub fn trajectory_raster<R: Rng + ?Sized>(
    p: &QuboProblem,
    p_chem: f64,
    init: &[bool],
    steps: usize,
    rng: &mut R,
) -> Result<Vec<u64>> {
    let params = SolverParams {
        p_chem,
        max_steps: steps,
        target_energy: None,
        patience: Some(usize::MAX),
        record_steps: true,
        ..SolverParams::default()
    };
    let trace = solve_type2(p, Some(init), &params, rng)?;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(crate::qubo::bits_to_index(&trace.initial));
    out.extend(
        trace
            .steps
            .iter()
            .map(|s| crate::qubo::bits_to_index(&s.config)),
    );
    Ok(out)
}
