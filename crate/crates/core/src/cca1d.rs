//! One-dimensional chemical cellular automaton.
//!
//! A rule is a pair: an elementary (Wolfram-coded) rule that drives each cell
//! stirrer from its neighbourhood, and a two-input rule that drives each
//! interfacial stirrer from the ordered pair of cells it joins. One step runs the
//! digital machine over the current chemical states, then samples new chemical
//! states from the stirrer pattern.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chemodel::{prob_high_1d, sample_cs, ChemModel1DParams};
use crate::lattice::{Grid, Topology};
use crate::{ChemicalState, Error, Result};

/// Number of distinct rules: 256 cell rules times 16 interface rules.
pub const RULE_SPACE: usize = 256 * 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rule1D {
    rule_a: u8,
    rule_b: u8,
}

impl Rule1D {
    pub fn new(rule_a: u8, rule_b: u8) -> Result<Self> {
        if rule_b >= 16 {
            return Err(Error::invalid(format!(
                "interface rule {rule_b} is not below 16"
            )));
        }
        Ok(Rule1D { rule_a, rule_b })
    }

    /// Interfaces always off: a plain elementary automaton.
    pub fn elementary(rule_a: u8) -> Self {
        Rule1D { rule_a, rule_b: 0 }
    }

    pub fn rule_a(&self) -> u8 {
        self.rule_a
    }

    pub fn rule_b(&self) -> u8 {
        self.rule_b
    }

    /// Position in the 4096-rule space.
    pub fn index(&self) -> usize {
        self.rule_a as usize * 16 + self.rule_b as usize
    }

    pub fn from_index(index: usize) -> Result<Self> {
        if index >= RULE_SPACE {
            return Err(Error::invalid(format!("rule index {index} out of range")));
        }
        Ok(Rule1D {
            rule_a: (index / 16) as u8,
            rule_b: (index % 16) as u8,
        })
    }

    pub fn cell_bit(&self, l: ChemicalState, c: ChemicalState, r: ChemicalState) -> bool {
        apply_rule_a(self.rule_a, l, c, r)
    }

    pub fn interface_bit(&self, a: ChemicalState, b: ChemicalState) -> bool {
        apply_rule_b(self.rule_b, a, b)
    }
}

/// Label form `A-i`, where `i = rule_b + 1` runs from 1 to 16.
impl fmt::Display for Rule1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.rule_a, self.rule_b as u16 + 1)
    }
}

/// Accepts `30-1` and `30-{1}`.
impl FromStr for Rule1D {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("malformed rule label {s:?}"));
        let (a, b) = s.trim().split_once('-').ok_or_else(bad)?;
        let b = b.trim().trim_start_matches('{').trim_end_matches('}');
        let rule_a: u8 = a.trim().parse().map_err(|_| bad())?;
        let i: u8 = b.trim().parse().map_err(|_| bad())?;
        if !(1..=16).contains(&i) {
            return Err(bad());
        }
        Rule1D::new(rule_a, i - 1)
    }
}

/// Wolfram lookup: bit `4l + 2c + r` of `rule_a`.
pub fn apply_rule_a(rule_a: u8, l: ChemicalState, c: ChemicalState, r: ChemicalState) -> bool {
    let idx = 4 * l.bit() + 2 * c.bit() + r.bit();
    (rule_a >> idx) & 1 == 1
}

/// Pair lookup: bit `2a + b` of `rule_b`, with `a` the upstream cell.
pub fn apply_rule_b(rule_b: u8, a: ChemicalState, b: ChemicalState) -> bool {
    let idx = 2 * a.bit() + b.bit();
    (rule_b >> idx) & 1 == 1
}

/// Stirrer commands of a chain. `interface[k]` sits between cell `k` and cell
/// `k + 1` (wrapping to cell 0 on a periodic chain).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StirrerState1D {
    pub cell: Vec<bool>,
    pub interface: Vec<bool>,
}

impl StirrerState1D {
    pub fn off(grid: &Grid) -> Self {
        StirrerState1D {
            cell: vec![false; grid.width()],
            interface: vec![false; interface_count(grid)],
        }
    }
}

fn interface_count(grid: &Grid) -> usize {
    if grid.is_periodic() {
        grid.width()
    } else {
        grid.width() - 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cca1dState {
    pub cs: Vec<ChemicalState>,
    pub stirrers: StirrerState1D,
    pub step: u64,
}

impl Cca1dState {
    pub fn new(grid: &Grid, cs: Vec<ChemicalState>) -> Result<Self> {
        check_chain(grid)?;
        Error::check_len(grid.width(), cs.len())?;
        Ok(Cca1dState {
            cs,
            stirrers: StirrerState1D::off(grid),
            step: 0,
        })
    }

    /// A single high cell in the middle of the chain.
    pub fn single_seed(grid: &Grid) -> Result<Self> {
        let mut cs = vec![ChemicalState::Low; grid.width()];
        cs[grid.width() / 2] = ChemicalState::High;
        Self::new(grid, cs)
    }
}

fn check_chain(grid: &Grid) -> Result<()> {
    if grid.topology() != Topology::Line1D {
        return Err(Error::UnsupportedTopology("1D automaton needs a chain"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Stirrer commands pass through the chemical model.
    #[default]
    Probabilistic,
    /// Chemical state mirrors the commanded cell stirrer exactly.
    #[serde(alias = "display")]
    DisplayScreen,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "probabilistic" | "prob" => Ok(Mode::Probabilistic),
            "display" | "display_screen" => Ok(Mode::DisplayScreen),
            other => Err(Error::invalid(format!("unknown mode {other:?}"))),
        }
    }
}

/// Digital phase: new stirrer commands from the current chemical states.
/// Missing neighbours of a non-periodic chain read low.
pub fn digital_phase(grid: &Grid, cs: &[ChemicalState], rule: &Rule1D) -> StirrerState1D {
    let w = grid.width();
    let at = |i: isize| -> ChemicalState {
        if grid.is_periodic() {
            cs[i.rem_euclid(w as isize) as usize]
        } else if i < 0 || i >= w as isize {
            ChemicalState::Low
        } else {
            cs[i as usize]
        }
    };
    let cell = (0..w as isize)
        .map(|i| rule.cell_bit(at(i - 1), at(i), at(i + 1)))
        .collect();
    let interface = (0..interface_count(grid) as isize)
        .map(|k| rule.interface_bit(at(k), at(k + 1)))
        .collect();
    StirrerState1D { cell, interface }
}

/// Probability of a high state for every cell under a stirrer pattern.
pub fn high_probabilities(
    grid: &Grid,
    stirrers: &StirrerState1D,
    params: &ChemModel1DParams,
) -> Vec<f64> {
    let w = grid.width();
    let periodic = grid.is_periodic();
    (0..w)
        .map(|i| {
            let left = if periodic {
                Some((i + w - 1) % w)
            } else {
                i.checked_sub(1)
            };
            let right = if periodic {
                Some((i + 1) % w)
            } else if i + 1 < w {
                Some(i + 1)
            } else {
                None
            };
            let s_l = left.is_some_and(|j| stirrers.cell[j]);
            let s_r = right.is_some_and(|j| stirrers.cell[j]);
            // interface k joins k and k+1
            let i_l = left.is_some_and(|j| stirrers.interface[j]);
            let i_r = right.is_some() && stirrers.interface[i];
            prob_high_1d(stirrers.cell[i], s_l, s_r, i_l, i_r, params)
        })
        .collect()
}

/// One synchronous step: digital phase, then a chemical draw per cell in index order.
pub fn step_1d<R: Rng + ?Sized>(
    grid: &Grid,
    state: &Cca1dState,
    rule: &Rule1D,
    params: &ChemModel1DParams,
    rng: &mut R,
) -> Result<Cca1dState> {
    check_chain(grid)?;
    Error::check_len(grid.width(), state.cs.len())?;
    let stirrers = digital_phase(grid, &state.cs, rule);
    let cs = high_probabilities(grid, &stirrers, params)
        .into_iter()
        .map(|p| sample_cs(p, rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(Cca1dState {
        cs,
        stirrers,
        step: state.step + 1,
    })
}

fn step_display(grid: &Grid, state: &Cca1dState, rule: &Rule1D) -> Cca1dState {
    let stirrers = digital_phase(grid, &state.cs, rule);
    let cs = stirrers
        .cell
        .iter()
        .map(|&b| ChemicalState::from_bit(b))
        .collect();
    Cca1dState {
        cs,
        stirrers,
        step: state.step + 1,
    }
}

/// Space-time raster of chemical states; row 0 is the initial state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Raster {
    pub rows: Vec<Vec<ChemicalState>>,
}

impl Raster {
    /// One line per step, `#` for high and `.` for low.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for row in &self.rows {
            s.extend(row.iter().map(|c| if c.is_high() { '#' } else { '.' }));
            s.push('\n');
        }
        s
    }

    /// Rows of the text form back into a raster.
    pub fn from_text(text: &str) -> Result<Self> {
        let rows = text
            .lines()
            .filter(|l| !l.is_empty())
            .map(|l| {
                l.chars()
                    .map(|ch| match ch {
                        '#' => Ok(ChemicalState::High),
                        '.' => Ok(ChemicalState::Low),
                        other => Err(Error::invalid(format!("unexpected raster char {other:?}"))),
                    })
                    .collect()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Raster { rows })
    }

    /// `step,cell,cs` with a header line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "step,cell,cs")?;
        for (t, row) in self.rows.iter().enumerate() {
            for (i, c) in row.iter().enumerate() {
                writeln!(w, "{t},{i},{}", c.bit())?;
            }
        }
        Ok(())
    }
}

/// Run `steps` steps from `init` and return the raster of `steps + 1` rows.
pub fn run_1d<R: Rng + ?Sized>(
    grid: &Grid,
    init: &Cca1dState,
    rule: &Rule1D,
    steps: usize,
    mode: Mode,
    params: &ChemModel1DParams,
    rng: &mut R,
) -> Result<Raster> {
    check_chain(grid)?;
    Error::check_len(grid.width(), init.cs.len())?;
    let mut rows = Vec::with_capacity(steps + 1);
    rows.push(init.cs.clone());
    let mut state = init.clone();
    for _ in 0..steps {
        state = match mode {
            Mode::Probabilistic => step_1d(grid, &state, rule, params, rng)?,
            Mode::DisplayScreen => step_display(grid, &state, rule),
        };
        rows.push(state.cs.clone());
    }
    Ok(Raster { rows })
}
