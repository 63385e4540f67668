//! Phenomenological chemical state machine.
//!
//! Given the stirrer commands around a cell (and, in 2D, its previous chemical
//! state) these functions return the probability that the cell reads high on
//! the next clock step. [`sample_cs`] turns a probability into a state.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{ChemicalState, Error, Result};

/// Stirrer level class of a 2D cell.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord, Serialize, Deserialize,
)]
pub enum PwmClass {
    /// No interaction, the cell relaxes to low.
    #[default]
    Off,
    /// Weak random fluctuation.
    Fluct,
    /// Interaction ring around a Chemit core.
    Halo,
    /// Chemit core.
    Core,
}

impl PwmClass {
    pub const ALL: [PwmClass; 4] = [
        PwmClass::Off,
        PwmClass::Fluct,
        PwmClass::Halo,
        PwmClass::Core,
    ];

    /// Motor duty level out of 255.
    pub fn pwm(self) -> u8 {
        match self {
            PwmClass::Off => 0,
            PwmClass::Fluct => 22,
            PwmClass::Halo => 30,
            PwmClass::Core => 50,
        }
    }

    /// Index used by the Chemit state machine: 0 off, 1 fluctuation, 2 nearest
    /// neighbour, 3 core.
    pub fn code(self) -> u8 {
        match self {
            PwmClass::Off => 0,
            PwmClass::Fluct => 1,
            PwmClass::Halo => 2,
            PwmClass::Core => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        PwmClass::ALL.get(code as usize).copied()
    }

    pub fn symbol(self) -> char {
        match self {
            PwmClass::Off => '.',
            PwmClass::Fluct => 'f',
            PwmClass::Halo => 'h',
            PwmClass::Core => 'C',
        }
    }
}

/// Probabilities of the 1D coupling table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChemModel1DParams {
    /// Both neighbours driven and both interfaces on.
    pub p_both: f64,
    /// One driven neighbour coupled through its interface.
    pub p_single: f64,
}

impl Default for ChemModel1DParams {
    fn default() -> Self {
        ChemModel1DParams {
            p_both: 0.8,
            p_single: 0.5,
        }
    }
}

/// Probability that a 1D cell reads high, from its own stirrer bit, its
/// neighbours' stirrer bits and the two interface bits.
///
/// The table is evaluated first-match in order; patterns it does not cover
/// (a driven neighbour whose connecting interface is off) give 0.
pub fn prob_high_1d(
    s_c: bool,
    s_l: bool,
    s_r: bool,
    i_l: bool,
    i_r: bool,
    params: &ChemModel1DParams,
) -> f64 {
    if s_c {
        1.0
    } else if !s_l && !s_r {
        0.0
    } else if !i_l && !i_r {
        0.0
    } else if s_l && s_r && i_l && i_r {
        params.p_both
    } else if s_l && i_l && !i_r {
        params.p_single
    } else if s_r && i_r && !i_l {
        params.p_single
    } else if s_l && !s_r && i_l {
        params.p_single
    } else if !s_l && s_r && i_r {
        params.p_single
    } else {
        0.0
    }
}

/// Parameters of the 2D model.
///
/// `p1..p4` weight the neighbourhood, `q1..q4` the centre class (off, fluct,
/// core, halo) and `k_low`/`k_high` damp by the previous chemical state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChemModel2DParams {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub p4: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub q4: f64,
    pub k_low: f64,
    pub k_high: f64,
}

impl Default for ChemModel2DParams {
    fn default() -> Self {
        ChemModel2DParams {
            p1: 0.5,
            p2: 0.3,
            p3: 0.25,
            p4: 0.1,
            q1: 0.0,
            q2: 0.1,
            q3: 0.5,
            q4: 0.5,
            k_low: 0.7,
            k_high: 1.0,
        }
    }
}

impl ChemModel2DParams {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("p1", self.p1),
            ("p2", self.p2),
            ("p3", self.p3),
            ("p4", self.p4),
            ("q1", self.q1),
            ("q2", self.q2),
            ("q3", self.q3),
            ("q4", self.q4),
            ("k_low", self.k_low),
            ("k_high", self.k_high),
        ];
        for (name, v) in named {
            check_probability(name, v)?;
        }
        Ok(())
    }

    /// Neighbourhood factor from the classes of the four nearest neighbours.
    pub fn neighborhood_factor(&self, neighbors: &[PwmClass]) -> f64 {
        let count = |class| neighbors.iter().filter(|&&n| n == class).count();
        let n_core = count(PwmClass::Core);
        let n_halo = count(PwmClass::Halo);
        let n_off = count(PwmClass::Off);
        if n_core >= 3 {
            self.p1
        } else if n_core >= 1 {
            self.p2
        } else if n_halo >= 3 {
            self.p3
        } else if n_halo >= 1 && n_off <= 3 {
            self.p4
        } else {
            0.0
        }
    }
}

impl ChemModel1DParams {
    pub fn validate(&self) -> Result<()> {
        check_probability("p_both", self.p_both)?;
        check_probability("p_single", self.p_single)
    }
}

fn check_probability(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} = {v} is not in [0, 1]")))
    }
}

/// Probability that a 2D cell reads high.
pub fn prob_high_2d(
    center: PwmClass,
    neighbors: &[PwmClass; 4],
    prev: ChemicalState,
    params: &ChemModel2DParams,
) -> f64 {
    let k = if prev.is_high() {
        params.k_high
    } else {
        params.k_low
    };
    let c = params.neighborhood_factor(neighbors);
    let base = match center {
        PwmClass::Off => params.q1 * c,
        PwmClass::Fluct => params.q2 * c,
        PwmClass::Core => params.q3,
        PwmClass::Halo => params.q4 * c,
    };
    k * base
}

/// Read-out fidelity of a single commanded cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SingleCellHysteresisParams {
    pub p_read: f64,
}

impl Default for SingleCellHysteresisParams {
    fn default() -> Self {
        SingleCellHysteresisParams { p_read: 0.9 }
    }
}

impl SingleCellHysteresisParams {
    pub fn validate(&self) -> Result<()> {
        check_probability("p_read", self.p_read)
    }
}

/// A driven cell reads high with `p_read`; an undriven cell that was high keeps
/// its state with `1 - p_read`; an undriven low cell stays low.
pub fn prob_high_single(
    commanded: bool,
    prev: ChemicalState,
    params: &SingleCellHysteresisParams,
) -> f64 {
    match (commanded, prev) {
        (true, _) => params.p_read,
        (false, ChemicalState::High) => 1.0 - params.p_read,
        (false, ChemicalState::Low) => 0.0,
    }
}

/// Bernoulli draw. Always consumes exactly one uniform variate.
pub fn sample_cs<R: Rng + ?Sized>(p: f64, rng: &mut R) -> Result<ChemicalState> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("probability {p} is not in [0, 1]")));
    }
    let u: f64 = rng.gen();
    Ok(ChemicalState::from_bit(u < p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use PwmClass::*;

    fn p1d(bits: [u8; 5]) -> f64 {
        let b = |i: usize| bits[i] == 1;
        prob_high_1d(b(0), b(1), b(2), b(3), b(4), &ChemModel1DParams::default())
    }

    #[test]
    fn one_d_table() {
        assert_eq!(p1d([1, 0, 0, 0, 0]), 1.0);
        assert_eq!(p1d([0, 1, 1, 1, 1]), 0.8);
        assert_eq!(p1d([0, 1, 0, 1, 0]), 0.5);
        assert_eq!(p1d([0, 0, 0, 1, 1]), 0.0);
        assert_eq!(p1d([0, 1, 1, 0, 0]), 0.0);
        // driven left neighbour but only the right interface is on
        assert_eq!(p1d([0, 1, 0, 0, 1]), 0.0);
    }

    #[test]
    fn one_d_mirror_symmetry() {
        for bits in 0u8..32 {
            let v: [u8; 5] = std::array::from_fn(|i| (bits >> i) & 1);
            let mirrored = [v[0], v[2], v[1], v[4], v[3]];
            assert_eq!(p1d(v), p1d(mirrored), "{v:?}");
            let p = p1d(v);
            assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn two_d_examples() {
        let params = ChemModel2DParams::default();
        let any = [Core, Halo, Off, Fluct];
        assert_eq!(prob_high_2d(Core, &any, ChemicalState::High, &params), 0.5);
        let p = prob_high_2d(Fluct, &[Core, Off, Off, Off], ChemicalState::High, &params);
        assert!((p - 0.03).abs() < 1e-15);
        assert_eq!(
            prob_high_2d(Off, &[Core, Core, Core, Core], ChemicalState::Low, &params),
            0.0
        );
        // core under a low previous state is damped by k_low
        assert!((prob_high_2d(Core, &any, ChemicalState::Low, &params) - 0.35).abs() < 1e-15);
    }

    #[test]
    fn neighborhood_cascade() {
        let params = ChemModel2DParams::default();
        assert_eq!(params.neighborhood_factor(&[Core, Core, Core, Off]), 0.5);
        assert_eq!(params.neighborhood_factor(&[Core, Halo, Halo, Halo]), 0.3);
        assert_eq!(params.neighborhood_factor(&[Halo, Halo, Halo, Off]), 0.25);
        assert_eq!(params.neighborhood_factor(&[Halo, Off, Off, Off]), 0.1);
        assert_eq!(params.neighborhood_factor(&[Fluct, Off, Off, Off]), 0.0);
    }

    #[test]
    fn two_d_bounded_over_all_inputs() {
        let params = ChemModel2DParams::default();
        for center in PwmClass::ALL {
            for code in 0..256u32 {
                let n: [PwmClass; 4] = std::array::from_fn(|i| {
                    PwmClass::from_code(((code >> (2 * i)) & 3) as u8).unwrap()
                });
                for prev in [ChemicalState::Low, ChemicalState::High] {
                    let p = prob_high_2d(center, &n, prev, &params);
                    assert!((0.0..=1.0).contains(&p));
                }
            }
        }
    }

    #[test]
    fn display_screen_limit_is_deterministic() {
        let params = ChemModel2DParams {
            q1: 0.0,
            q2: 1.0,
            q3: 1.0,
            q4: 0.0,
            k_low: 1.0,
            k_high: 1.0,
            p1: 1.0,
            p2: 1.0,
            p3: 1.0,
            p4: 1.0,
        };
        for center in PwmClass::ALL {
            for code in 0..256u32 {
                let n: [PwmClass; 4] = std::array::from_fn(|i| {
                    PwmClass::from_code(((code >> (2 * i)) & 3) as u8).unwrap()
                });
                let p = prob_high_2d(center, &n, ChemicalState::Low, &params);
                assert!(p == 0.0 || p == 1.0);
            }
        }
    }

    #[test]
    fn single_cell() {
        let h = SingleCellHysteresisParams::default();
        assert_eq!(prob_high_single(true, ChemicalState::Low, &h), 0.9);
        assert!((prob_high_single(false, ChemicalState::High, &h) - 0.1).abs() < 1e-15);
        assert_eq!(prob_high_single(false, ChemicalState::Low, &h), 0.0);
    }

    #[test]
    fn sampling() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for _ in 0..1000 {
            assert_eq!(sample_cs(0.0, &mut rng).unwrap(), ChemicalState::Low);
            assert_eq!(sample_cs(1.0, &mut rng).unwrap(), ChemicalState::High);
        }
        assert!(sample_cs(1.5, &mut rng).is_err());
        assert!(sample_cs(-0.1, &mut rng).is_err());
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| sample_cs(0.8, &mut rng).unwrap().is_high())
            .count();
        let mean = hits as f64 / n as f64;
        assert!((mean - 0.8).abs() < 0.01, "{mean}");
    }

    #[test]
    fn codes_round_trip() {
        for c in PwmClass::ALL {
            assert_eq!(PwmClass::from_code(c.code()), Some(c));
        }
        assert_eq!(PwmClass::from_code(4), None);
        assert_eq!(Core.pwm(), 50);
        assert_eq!(Halo.pwm(), 30);
    }
}
