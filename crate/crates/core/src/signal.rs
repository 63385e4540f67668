//! Colour recognition and chemical clocking.
//!
//! A camera classifies each cell into one of three colours per frame. The
//! recognition machine ([`Rfsm`]) turns a completed red-to-red excursion into a
//! binary [`ChemicalState`]. Local and global clocks gate decisions to whole
//! oscillation cycles, and [`ClockedReader`] ties the three together.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ColorState {
    Red,
    LightBlue,
    Blue,
}

impl ColorState {
    pub fn is_red(self) -> bool {
        self == ColorState::Red
    }

    pub fn code(self) -> &'static str {
        match self {
            ColorState::Red => "R",
            ColorState::LightBlue => "LB",
            ColorState::Blue => "B",
        }
    }
}

impl fmt::Display for ColorState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for ColorState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "R" => Ok(ColorState::Red),
            "LB" => Ok(ColorState::LightBlue),
            "B" => Ok(ColorState::Blue),
            other => Err(Error::invalid(format!("unknown colour code {other:?}"))),
        }
    }
}

/// Digital chemical state of one cell at one clock step.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord, Serialize, Deserialize,
)]
pub enum ChemicalState {
    #[default]
    Low,
    High,
}

impl ChemicalState {
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            ChemicalState::High
        } else {
            ChemicalState::Low
        }
    }

    pub fn is_high(self) -> bool {
        self == ChemicalState::High
    }

    pub fn bit(self) -> u8 {
        self as u8
    }
}

impl From<bool> for ChemicalState {
    fn from(bit: bool) -> Self {
        ChemicalState::from_bit(bit)
    }
}

/// Recognition state machine for a single cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rfsm {
    last_color: ColorState,
    pending_high: bool,
    emitted: Option<ChemicalState>,
}

impl Default for Rfsm {
    fn default() -> Self {
        Rfsm {
            last_color: ColorState::Red,
            pending_high: false,
            emitted: None,
        }
    }
}

impl Rfsm {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn last_color(&self) -> ColorState {
        self.last_color
    }

    /// Most recent state emitted by a completed excursion.
    pub fn emitted(&self) -> Option<ChemicalState> {
        self.emitted
    }

    /// Feed one frame. Returns a state only when an excursion returns to red:
    /// high if it reached blue (with or without passing light blue), low otherwise.
    pub fn step(&mut self, color: ColorState) -> Option<ChemicalState> {
        let event = match (self.last_color, color) {
            (ColorState::Red, ColorState::Red) => None,
            (_, ColorState::Red) => {
                let cs = ChemicalState::from_bit(self.pending_high);
                self.pending_high = false;
                self.emitted = Some(cs);
                Some(cs)
            }
            (_, ColorState::Blue) => {
                self.pending_high = true;
                None
            }
            (_, ColorState::LightBlue) => None,
        };
        self.last_color = color;
        event
    }

    pub fn decode(colors: &[ColorState]) -> Vec<ChemicalState> {
        let mut fsm = Rfsm::new();
        colors.iter().filter_map(|&c| fsm.step(c)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LocalClock {
    #[default]
    None,
    Tick,
    Tock,
}

impl LocalClock {
    /// `oscillating` is the camera bit: true when the cell is not red.
    ///
    /// Every state goes to `Tock` on a red frame and to `Tick` otherwise,
    /// including `None` on a red frame.
    pub fn step(self, oscillating: bool) -> LocalClock {
        match (self, oscillating) {
            (LocalClock::None, false) => LocalClock::Tock,
            (LocalClock::Tick, false) => LocalClock::Tock,
            (LocalClock::Tock, false) => LocalClock::Tock,
            (LocalClock::None, true) => LocalClock::Tick,
            (LocalClock::Tick, true) => LocalClock::Tick,
            (LocalClock::Tock, true) => LocalClock::Tick,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClockMode {
    /// Fires on at least two local tocks with every cell red.
    OneD,
    /// Fires when at least `ceil(15/49 * cells)` locals tock and every cell is red.
    TwoD,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum GlobalState {
    #[default]
    None,
    Tick,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlobalClock {
    pub state: GlobalState,
    /// Global tocks fired since the last decision.
    pub tock_count_this_cycle: u32,
    pub mode: ClockMode,
}

/// Minimum local tock count for a 2D global tock: 15 of 49, scaled and rounded up.
pub fn two_d_tock_threshold(cells: usize) -> usize {
    (15 * cells).div_ceil(49)
}

impl GlobalClock {
    pub fn new(mode: ClockMode) -> Self {
        GlobalClock {
            state: GlobalState::None,
            tock_count_this_cycle: 0,
            mode,
        }
    }

    /// Advance on the current local clocks. A cell whose local clock is not `Tick`
    /// is read as red. Returns true when a global tock fires; all locals are then
    /// reset to `None`.
    pub fn step(&mut self, locals: &mut [LocalClock]) -> bool {
        match self.state {
            GlobalState::None => {
                if locals.contains(&LocalClock::Tick) {
                    self.state = GlobalState::Tick;
                }
                false
            }
            GlobalState::Tick => {
                let all_red = locals.iter().all(|&l| l != LocalClock::Tick);
                let tocks = locals.iter().filter(|&&l| l == LocalClock::Tock).count();
                let enough = match self.mode {
                    ClockMode::OneD => tocks == locals.len() || tocks >= 2,
                    ClockMode::TwoD => tocks >= two_d_tock_threshold(locals.len()),
                };
                if all_red && enough {
                    self.state = GlobalState::None;
                    self.tock_count_this_cycle += 1;
                    locals.fill(LocalClock::None);
                    true
                } else {
                    false
                }
            }
        }
    }
}

/// Recognition machines, local clocks and a global clock for a set of cells.
///
/// A decision is released after `confirm_tocks` global tocks (default 2) and
/// reports the latest state each cell emitted; cells that never completed an
/// excursion read low.
#[derive(Debug, Clone)]
pub struct ClockedReader {
    rfsm: Vec<Rfsm>,
    locals: Vec<LocalClock>,
    global: GlobalClock,
    confirm_tocks: u32,
}

impl ClockedReader {
    pub fn new(cells: usize, mode: ClockMode, confirm_tocks: u32) -> Self {
        ClockedReader {
            rfsm: vec![Rfsm::new(); cells],
            locals: vec![LocalClock::None; cells],
            global: GlobalClock::new(mode),
            confirm_tocks: confirm_tocks.max(1),
        }
    }

    pub fn global(&self) -> &GlobalClock {
        &self.global
    }

    pub fn locals(&self) -> &[LocalClock] {
        &self.locals
    }

    /// Feed one frame of colours, one per cell.
    pub fn push_frame(&mut self, colors: &[ColorState]) -> Result<Option<Vec<ChemicalState>>> {
        Error::check_len(self.rfsm.len(), colors.len())?;
        for ((fsm, local), &c) in self.rfsm.iter_mut().zip(&mut self.locals).zip(colors) {
            fsm.step(c);
            *local = local.step(!c.is_red());
        }
        if self.global.step(&mut self.locals)
            && self.global.tock_count_this_cycle >= self.confirm_tocks
        {
            self.global.tock_count_this_cycle = 0;
            let decision = self
                .rfsm
                .iter()
                .map(|f| f.emitted().unwrap_or_default())
                .collect();
            return Ok(Some(decision));
        }
        Ok(None)
    }
}

/// Probability that a synthetic frame is replaced by a uniformly chosen wrong colour.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MislabelNoise {
    pub probability: f64,
}

impl MislabelNoise {
    pub fn apply<R: Rng + ?Sized>(&self, colors: &mut [ColorState], rng: &mut R) {
        if self.probability <= 0.0 {
            return;
        }
        for c in colors.iter_mut() {
            if rng.gen_bool(self.probability.min(1.0)) {
                let others: Vec<ColorState> =
                    [ColorState::Red, ColorState::LightBlue, ColorState::Blue]
                        .into_iter()
                        .filter(|o| o != c)
                        .collect();
                *c = others[rng.gen_range(0..others.len())];
            }
        }
    }
}

/// Generate one oscillation period for a cell that should read as `target`.
///
/// The period is split into a red rest phase of `ceil(period/2)` frames, half
/// before and half after, and an excursion of `floor(period/2)` frames:
/// light blue, then blue (only for a high target), then light blue. Each segment
/// length is perturbed by a uniform integer in `[-jitter, jitter]` and clamped so
/// every segment keeps at least one frame (the trailing light blue segment may be
/// empty for very short periods).
pub fn synthesize_trace<R: Rng + ?Sized>(
    target: ChemicalState,
    period_frames: usize,
    jitter: usize,
    rng: &mut R,
) -> Result<Vec<ColorState>> {
    if period_frames < 4 {
        return Err(Error::invalid(format!(
            "period must be at least 4 frames, got {period_frames}"
        )));
    }
    let excursion = period_frames / 2;
    let rest = period_frames - excursion;
    let lead = rest.div_ceil(2);
    let tail = rest - lead;

    let (lb1, blue, lb2) = if target.is_high() {
        let third = (excursion / 3).max(1);
        let lb1 = third;
        let blue = third.max(excursion.saturating_sub(2 * third));
        (lb1, blue, excursion.saturating_sub(lb1 + blue))
    } else {
        let lb1 = excursion.div_ceil(2);
        (lb1, 0, excursion - lb1)
    };

    let mut jittered = |len: usize, min: usize| -> usize {
        let j = jitter as isize;
        let delta = if j > 0 { rng.gen_range(-j..=j) } else { 0 };
        (len as isize + delta).max(min as isize) as usize
    };
    let lead = jittered(lead, 1);
    let lb1 = jittered(lb1, 1);
    let blue = if target.is_high() {
        jittered(blue, 1)
    } else {
        0
    };
    let lb2 = jittered(lb2, if lb2 > 0 { 1 } else { 0 });
    let tail = jittered(tail, 1);

    let mut out = Vec::with_capacity(lead + lb1 + blue + lb2 + tail);
    out.extend(std::iter::repeat_n(ColorState::Red, lead));
    out.extend(std::iter::repeat_n(ColorState::LightBlue, lb1));
    out.extend(std::iter::repeat_n(ColorState::Blue, blue));
    out.extend(std::iter::repeat_n(ColorState::LightBlue, lb2));
    out.extend(std::iter::repeat_n(ColorState::Red, tail));
    Ok(out)
}
