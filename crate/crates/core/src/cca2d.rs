//! Two-dimensional chemical cellular automaton with Chemits.
//!
//! A Chemit is a core cell driven hard, surrounded by halo cells. Each update
//! reads the chemical states around every core and moves, copies or pits cores
//! against each other, then paints halos, then scatters random fluctuation
//! cells over whatever is left. The chemical model then samples new states
//! from the updated stirrer classes.
//!
//! Update rules, per core in row-major order:
//!
//! * no high cell among the nearest and next-nearest neighbours: the core stays;
//! * otherwise one high cell is picked uniformly:
//!   - a nearest neighbour that is itself a core: competition, the core stays
//!     with probability 1/2 and otherwise drops to fluctuation;
//!   - a nearest neighbour that is not a core: propagation, the core moves there
//!     and its old cell is frozen as fluctuation;
//!   - a next-nearest cell that is not a core: replication, a new core appears;
//!   - a next-nearest cell that is a core: nothing happens and the core stays.
//!
//! The halo pass then switches on every interface of every core and paints the
//! unfrozen, non-core nearest neighbours as halo. Cores are never painted over.
//! Remaining unfrozen cells are switched off, except a budget of uniformly
//! chosen ones that become fluctuation cells.

use std::collections::HashSet;
use std::io::{self, Write};

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chemodel::{prob_high_2d, sample_cs, ChemModel2DParams, PwmClass};
use crate::lattice::{CellIndex, Grid, Topology};
use crate::seed::stream_rng;
use crate::{ChemicalState, Error, Result};

/// Smallest torus side on which every cell has four distinct neighbours.
pub const MIN_SIDE: usize = 3;

/// Torus with precomputed neighbour tables, as flat offsets.
#[derive(Debug, Clone)]
pub struct ChemitLattice {
    grid: Grid,
    nearest: Vec<[usize; 4]>,
    next_nearest: Vec<Vec<usize>>,
}

impl ChemitLattice {
    pub fn new(grid: Grid) -> Result<Self> {
        if grid.topology() != Topology::Torus2D {
            return Err(Error::UnsupportedTopology("Chemits live on a 2D torus"));
        }
        if grid.width() < MIN_SIDE || grid.height() < MIN_SIDE {
            return Err(Error::invalid(format!(
                "torus sides must be at least {MIN_SIDE}"
            )));
        }
        let mut nearest = Vec::with_capacity(grid.len());
        let mut next_nearest = Vec::with_capacity(grid.len());
        for c in grid.cells() {
            let nn = grid.nearest_neighbors(c)?;
            nearest.push([0, 1, 2, 3].map(|k| grid.offset(nn[k])));
            next_nearest.push(
                grid.next_nearest_neighbors(c)?
                    .into_iter()
                    .map(|n| grid.offset(n))
                    .collect(),
            );
        }
        Ok(ChemitLattice {
            grid,
            nearest,
            next_nearest,
        })
    }

    pub fn square(side: usize) -> Result<Self> {
        Self::new(Grid::torus(side, side)?)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Left, right, up, down.
    pub fn nearest(&self, k: usize) -> &[usize; 4] {
        &self.nearest[k]
    }

    pub fn next_nearest(&self, k: usize) -> &[usize] {
        &self.next_nearest[k]
    }

    fn is_adjacent(&self, a: usize, b: usize) -> bool {
        self.nearest[a].contains(&b)
    }
}

/// Stirrer classes of every cell plus interfacial bits. Interface `2k` joins
/// cell `k` to its right neighbour and `2k + 1` to the one below.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PwmGrid {
    pub class: Vec<PwmClass>,
    pub interfacial: Vec<bool>,
}

impl PwmGrid {
    pub fn off(cells: usize) -> Self {
        PwmGrid {
            class: vec![PwmClass::Off; cells],
            interfacial: vec![false; 2 * cells],
        }
    }

    pub fn cores(&self) -> Vec<usize> {
        (0..self.class.len())
            .filter(|&k| self.class[k] == PwmClass::Core)
            .collect()
    }

    pub fn core_count(&self) -> usize {
        self.class.iter().filter(|&&c| c == PwmClass::Core).count()
    }

    /// Cores with halos painted on their non-core nearest neighbours and
    /// interfaces on. Everything else is off.
    pub fn with_chemits(lat: &ChemitLattice, cores: &[usize]) -> Result<Self> {
        let mut pwm = PwmGrid::off(lat.len());
        for &k in cores {
            if k >= lat.len() {
                return Err(Error::invalid(format!("core offset {k} out of range")));
            }
            pwm.class[k] = PwmClass::Core;
        }
        for &k in cores {
            pwm.light_interfaces(lat, k);
            for &n in lat.nearest(k) {
                if pwm.class[n] != PwmClass::Core {
                    pwm.class[n] = PwmClass::Halo;
                }
            }
        }
        Ok(pwm)
    }

    fn light_interfaces(&mut self, lat: &ChemitLattice, k: usize) {
        let [left, _, up, _] = *lat.nearest(k);
        self.interfacial[2 * k] = true;
        self.interfacial[2 * k + 1] = true;
        self.interfacial[2 * left] = true;
        self.interfacial[2 * up + 1] = true;
    }

    fn check(&self, lat: &ChemitLattice) -> Result<()> {
        Error::check_len(lat.len(), self.class.len())?;
        Error::check_len(2 * lat.len(), self.interfacial.len())
    }

    /// One line per row using [`PwmClass::symbol`].
    pub fn to_text(&self, width: usize) -> String {
        let mut s = String::with_capacity(self.class.len() + self.class.len() / width.max(1));
        for row in self.class.chunks(width.max(1)) {
            s.extend(row.iter().map(|c| c.symbol()));
            s.push('\n');
        }
        s
    }

    /// Binary PPM: off white, fluctuation orange, core red, halo blue.
    pub fn write_ppm<W: Write>(&self, width: usize, mut w: W) -> io::Result<()> {
        let height = self.class.len() / width.max(1);
        write!(w, "P6\n{width} {height}\n255\n")?;
        for c in &self.class {
            let rgb: [u8; 3] = match c {
                PwmClass::Off => [255, 255, 255],
                PwmClass::Fluct => [255, 165, 0],
                PwmClass::Core => [220, 20, 20],
                PwmClass::Halo => [30, 80, 220],
            };
            w.write_all(&rgb)?;
        }
        Ok(())
    }
}

/// High cells as `#`, low as `.`, one line per row.
pub fn cs_to_text(cs: &[ChemicalState], width: usize) -> String {
    let mut s = String::new();
    for row in cs.chunks(width.max(1)) {
        s.extend(row.iter().map(|c| if c.is_high() { '#' } else { '.' }));
        s.push('\n');
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ChemitEventCounts {
    pub propagation: usize,
    pub replication: usize,
    pub competition_survived: usize,
    pub competition_died: usize,
    pub annihilation: usize,
    /// Cores that chose among more than one high cell.
    pub random_selection: usize,
}

impl std::ops::AddAssign for ChemitEventCounts {
    fn add_assign(&mut self, o: Self) {
        self.propagation += o.propagation;
        self.replication += o.replication;
        self.competition_survived += o.competition_survived;
        self.competition_died += o.competition_died;
        self.annihilation += o.annihilation;
        self.random_selection += o.random_selection;
    }
}

/// Tracks freezing and rejects a second write to a frozen cell.
struct Writes {
    class: Vec<PwmClass>,
    frozen: Vec<bool>,
}

impl Writes {
    fn set_frozen(&mut self, k: usize, c: PwmClass) {
        assert!(!self.frozen[k], "cell {k} assigned twice in one update");
        self.class[k] = c;
        self.frozen[k] = true;
    }
}

/// Digital update of the stirrer classes from the current chemical states.
///
/// The returned counts are the events as executed: `annihilation` equals
/// `competition_died`.
pub fn cca2d_update<R: Rng + ?Sized>(
    lat: &ChemitLattice,
    pwm: &PwmGrid,
    cs: &[ChemicalState],
    fluct_budget: usize,
    rng: &mut R,
) -> Result<(PwmGrid, ChemitEventCounts)> {
    pwm.check(lat)?;
    Error::check_len(lat.len(), cs.len())?;
    let n = lat.len();
    let mut w = Writes {
        class: vec![PwmClass::Off; n],
        frozen: vec![false; n],
    };
    let mut ev = ChemitEventCounts::default();
    let mut blue = Vec::with_capacity(12);
    for k in 0..n {
        if pwm.class[k] != PwmClass::Core {
            continue;
        }
        blue.clear();
        blue.extend(
            lat.nearest(k)
                .iter()
                .chain(lat.next_nearest(k))
                .copied()
                .filter(|&m| cs[m].is_high()),
        );
        if blue.is_empty() {
            w.class[k] = PwmClass::Core;
            continue;
        }
        if blue.len() > 1 {
            ev.random_selection += 1;
        }
        let p = blue[rng.gen_range(0..blue.len())];
        let adjacent = lat.is_adjacent(k, p);
        let target_core = pwm.class[p] == PwmClass::Core;
        match (adjacent, target_core) {
            (true, true) => {
                if rng.gen::<bool>() {
                    w.class[k] = PwmClass::Core;
                    ev.competition_survived += 1;
                } else {
                    w.class[k] = PwmClass::Fluct;
                    ev.competition_died += 1;
                }
            }
            (true, false) => {
                w.set_frozen(k, PwmClass::Fluct);
                w.class[p] = PwmClass::Core;
                ev.propagation += 1;
            }
            (false, false) => {
                w.class[k] = PwmClass::Core;
                w.class[p] = PwmClass::Core;
                ev.replication += 1;
            }
            (false, true) => w.class[k] = PwmClass::Core,
        }
    }
    ev.annihilation = ev.competition_died;

    let mut out = PwmGrid {
        class: Vec::new(),
        interfacial: vec![false; 2 * n],
    };
    for k in 0..n {
        if w.class[k] != PwmClass::Core {
            continue;
        }
        out.light_interfaces(lat, k);
        for &m in lat.nearest(k) {
            if !w.frozen[m] && w.class[m] != PwmClass::Core {
                w.set_frozen(m, PwmClass::Halo);
            }
        }
        w.frozen[k] = true;
    }

    let free: Vec<usize> = (0..n).filter(|&k| !w.frozen[k]).collect();
    for &k in &free {
        w.class[k] = PwmClass::Off;
    }
    let budget = if fluct_budget > free.len() {
        log::warn!(
            "fluctuation budget {fluct_budget} exceeds {} free cells; clamped",
            free.len()
        );
        free.len()
    } else {
        fluct_budget
    };
    for i in sample(rng, free.len(), budget) {
        w.class[free[i]] = PwmClass::Fluct;
    }
    out.class = w.class;
    Ok((out, ev))
}

/// Chemical phase: sample every cell's state from its class, its four
/// neighbours' classes and its previous state, in offset order.
pub fn chemical_phase<R: Rng + ?Sized>(
    lat: &ChemitLattice,
    pwm: &PwmGrid,
    prev: &[ChemicalState],
    params: &ChemModel2DParams,
    rng: &mut R,
) -> Result<Vec<ChemicalState>> {
    pwm.check(lat)?;
    Error::check_len(lat.len(), prev.len())?;
    (0..lat.len())
        .map(|k| {
            let nb = lat.nearest(k).map(|m| pwm.class[m]);
            sample_cs(prob_high_2d(pwm.class[k], &nb, prev[k], params), rng)
        })
        .collect()
}

/// Number of fluctuation cells for a grid and a ratio.
pub fn fluct_budget(cells: usize, ratio: f64) -> usize {
    (cells as f64 * ratio).round().max(0.0) as usize
}

/// Full loop: digital update, then chemical sampling.
///
/// Propagation, replication and annihilation in the returned counts come from
/// comparing core positions before and after ([`analyze_transition`]);
/// competition and random-selection counts come from the update itself.
pub fn step_chemits<R: Rng + ?Sized>(
    lat: &ChemitLattice,
    pwm: &PwmGrid,
    cs: &[ChemicalState],
    params: &ChemModel2DParams,
    fluct_ratio: f64,
    rng: &mut R,
) -> Result<(PwmGrid, Vec<ChemicalState>, ChemitEventCounts)> {
    let (next, raw) = cca2d_update(lat, pwm, cs, fluct_budget(lat.len(), fluct_ratio), rng)?;
    let cs_next = chemical_phase(lat, &next, cs, params, rng)?;
    let mut ev = analyze_offsets(lat, &pwm.cores(), &next.cores());
    ev.competition_survived = raw.competition_survived;
    ev.competition_died = raw.competition_died;
    ev.random_selection = raw.random_selection;
    Ok((next, cs_next, ev))
}

/// Classify core changes between consecutive steps.
///
/// Each new core is matched, in row-major order, to the first unmatched
/// vanished core adjacent to it (a propagation); unmatched new cores are
/// replications. Annihilations are the vanished cores left unmatched, so
/// `|new| − |old| = replication − annihilation`.
pub fn analyze_transition(
    grid: &Grid,
    old: &[CellIndex],
    new: &[CellIndex],
) -> Result<ChemitEventCounts> {
    let lat = ChemitLattice::new(*grid)?;
    let off = |v: &[CellIndex]| -> Result<Vec<usize>> {
        v.iter()
            .map(|&c| {
                grid.check(c)?;
                Ok(grid.offset(c))
            })
            .collect()
    };
    Ok(analyze_offsets(&lat, &off(old)?, &off(new)?))
}

fn analyze_offsets(lat: &ChemitLattice, old: &[usize], new: &[usize]) -> ChemitEventCounts {
    let old_set: HashSet<usize> = old.iter().copied().collect();
    let new_set: HashSet<usize> = new.iter().copied().collect();
    let mut vanished: Vec<usize> = old_set.difference(&new_set).copied().collect();
    vanished.sort_unstable();
    let mut appeared: Vec<usize> = new_set.difference(&old_set).copied().collect();
    appeared.sort_unstable();
    let mut used = vec![false; vanished.len()];
    let mut ev = ChemitEventCounts::default();
    for &a in &appeared {
        match (0..vanished.len()).find(|&i| !used[i] && lat.is_adjacent(a, vanished[i])) {
            Some(i) => {
                used[i] = true;
                ev.propagation += 1;
            }
            None => ev.replication += 1,
        }
    }
    ev.annihilation = vanished.len() - ev.propagation;
    ev
}

/// Settings of a population run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationParams {
    pub model: ChemModel2DParams,
    /// Fraction of all cells made fluctuation cells each step.
    pub fluct_ratio: f64,
}

impl Default for PopulationParams {
    fn default() -> Self {
        PopulationParams {
            model: ChemModel2DParams::default(),
            fluct_ratio: 0.1,
        }
    }
}

impl PopulationParams {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if !(0.0..=1.0).contains(&self.fluct_ratio) {
            return Err(Error::invalid(format!(
                "fluct_ratio {} outside [0, 1]",
                self.fluct_ratio
            )));
        }
        Ok(())
    }
}

/// One replica's history. `chemits` and `high_cs` have `steps + 1` entries
/// (index 0 is the initial placement); `events` has `steps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSeries {
    pub seed: u64,
    pub side: usize,
    pub initial: Vec<CellIndex>,
    pub chemits: Vec<usize>,
    pub high_cs: Vec<usize>,
    pub events: Vec<ChemitEventCounts>,
}

impl PopulationSeries {
    /// `step,chemits,high_cs,propagation,replication,annihilation` with a header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(
            w,
            "step,chemits,high_cs,propagation,replication,annihilation"
        )?;
        for t in 0..self.chemits.len() {
            let e = if t == 0 {
                ChemitEventCounts::default()
            } else {
                self.events[t - 1]
            };
            writeln!(
                w,
                "{t},{},{},{},{},{}",
                self.chemits[t], self.high_cs[t], e.propagation, e.replication, e.annihilation
            )?;
        }
        Ok(())
    }

    /// Mean population over the last `window` steps.
    pub fn tail_mean(&self, window: usize) -> f64 {
        let w = window.clamp(1, self.chemits.len());
        let tail = &self.chemits[self.chemits.len() - w..];
        tail.iter().sum::<usize>() as f64 / w as f64
    }
}

/// Random distinct core placement, halos painted, cores start high.
pub fn seed_population<R: Rng + ?Sized>(
    lat: &ChemitLattice,
    initial_chemits: usize,
    rng: &mut R,
) -> Result<(PwmGrid, Vec<ChemicalState>)> {
    if initial_chemits > lat.len() {
        return Err(Error::invalid(format!(
            "{initial_chemits} Chemits do not fit on {} cells",
            lat.len()
        )));
    }
    let mut cores = sample(rng, lat.len(), initial_chemits).into_vec();
    cores.sort_unstable();
    let pwm = PwmGrid::with_chemits(lat, &cores)?;
    let cs = pwm
        .class
        .iter()
        .map(|&c| ChemicalState::from_bit(c == PwmClass::Core))
        .collect();
    Ok((pwm, cs))
}

/// One replica of a population run driven by `rng`.
pub fn run_population<R: Rng + ?Sized>(
    side: usize,
    initial_chemits: usize,
    steps: usize,
    params: &PopulationParams,
    seed: u64,
    rng: &mut R,
) -> Result<PopulationSeries> {
    run_population_with(
        side,
        initial_chemits,
        steps,
        params,
        seed,
        rng,
        |_, _, _| {},
    )
}

/// As [`run_population`], calling `observe(step, classes, states)` after the
/// initial placement and after every step.
pub fn run_population_with<R, F>(
    side: usize,
    initial_chemits: usize,
    steps: usize,
    params: &PopulationParams,
    seed: u64,
    rng: &mut R,
    mut observe: F,
) -> Result<PopulationSeries>
where
    R: Rng + ?Sized,
    F: FnMut(usize, &PwmGrid, &[ChemicalState]),
{
    params.validate()?;
    let lat = ChemitLattice::square(side)?;
    let (mut pwm, mut cs) = seed_population(&lat, initial_chemits, rng)?;
    let count_high = |cs: &[ChemicalState]| cs.iter().filter(|c| c.is_high()).count();
    let mut series = PopulationSeries {
        seed,
        side,
        initial: pwm
            .cores()
            .into_iter()
            .map(|k| lat.grid().cell(k))
            .collect(),
        chemits: Vec::with_capacity(steps + 1),
        high_cs: Vec::with_capacity(steps + 1),
        events: Vec::with_capacity(steps),
    };
    series.chemits.push(pwm.core_count());
    series.high_cs.push(count_high(&cs));
    observe(0, &pwm, &cs);
    for t in 1..=steps {
        let (p, c, ev) = step_chemits(&lat, &pwm, &cs, &params.model, params.fluct_ratio, rng)?;
        pwm = p;
        cs = c;
        series.chemits.push(pwm.core_count());
        series.high_cs.push(count_high(&cs));
        series.events.push(ev);
        observe(t, &pwm, &cs);
    }
    Ok(series)
}

/// Per-step mean and standard deviation over replicas, plus the raw series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub replicas: Vec<PopulationSeries>,
}

impl PopulationStats {
    /// Aggregate replicas of equal length, kept in the given order.
    pub fn from_replicas(replicas: Vec<PopulationSeries>) -> Result<Self> {
        let len = replicas
            .first()
            .ok_or_else(|| Error::invalid("no replicas to aggregate"))?
            .chemits
            .len();
        for r in &replicas {
            Error::check_len(len, r.chemits.len())?;
        }
        let k = replicas.len() as f64;
        let mut mean = vec![0.0; len];
        let mut std = vec![0.0; len];
        for t in 0..len {
            let m = replicas.iter().map(|r| r.chemits[t] as f64).sum::<f64>() / k;
            let var = replicas
                .iter()
                .map(|r| (r.chemits[t] as f64 - m).powi(2))
                .sum::<f64>()
                / k;
            mean[t] = m;
            std[t] = var.sqrt();
        }
        Ok(PopulationStats {
            mean,
            std,
            replicas,
        })
    }

    /// `step,mean,std` with a header line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "step,mean,std")?;
        for t in 0..self.mean.len() {
            writeln!(w, "{t},{:.6},{:.6}", self.mean[t], self.std[t])?;
        }
        Ok(())
    }

    /// Mean over replicas of each replica's last-`window` mean.
    pub fn tail_mean(&self, window: usize) -> f64 {
        self.replicas
            .iter()
            .map(|r| r.tail_mean(window))
            .sum::<f64>()
            / self.replicas.len() as f64
    }
}

/// Independent replicas; replica `k` is seeded from `derive_seed(master_seed, k)`.
pub fn run_population_experiment(
    side: usize,
    initial_chemits: usize,
    steps: usize,
    replicas: usize,
    params: &PopulationParams,
    master_seed: u64,
) -> Result<PopulationStats> {
    if replicas == 0 {
        return Err(Error::invalid("need at least one replica"));
    }
    let runs = (0..replicas as u64)
        .map(|k| {
            let seed = crate::seed::derive_seed(master_seed, k);
            run_population(
                side,
                initial_chemits,
                steps,
                params,
                seed,
                &mut stream_rng(master_seed, k),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    PopulationStats::from_replicas(runs)
}
