//! Grid topology for chains and tori of stirred cells.
//!
//! Cells are addressed by `(row, col)`; a one-dimensional chain is a single row.
//! Every pair of nearest neighbours is separated by an interfacial stirrer, which
//! is addressed by an [`InterfaceIndex`].

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Topology {
    Line1D,
    Torus2D,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    topology: Topology,
    width: usize,
    height: usize,
    periodic: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellIndex {
    pub row: usize,
    pub col: usize,
}

impl CellIndex {
    pub const fn new(row: usize, col: usize) -> Self {
        CellIndex { row, col }
    }
}

impl From<(usize, usize)> for CellIndex {
    fn from((row, col): (usize, usize)) -> Self {
        CellIndex { row, col }
    }
}

/// An unordered pair of adjacent cells, stored with `cell_a` first in row-major order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct InterfaceIndex {
    pub cell_a: CellIndex,
    pub cell_b: CellIndex,
}

impl Grid {
    /// A one-dimensional chain of `width` cells.
    pub fn line(width: usize, periodic: bool) -> Result<Self> {
        if width == 0 {
            return Err(Error::invalid("grid width must be at least 1"));
        }
        Ok(Grid {
            topology: Topology::Line1D,
            width,
            height: 1,
            periodic,
        })
    }

    /// A periodic `height` x `width` array.
    pub fn torus(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("grid sides must be at least 1"));
        }
        Ok(Grid {
            topology: Topology::Torus2D,
            width,
            height,
            periodic: true,
        })
    }

    pub fn square(side: usize) -> Result<Self> {
        Self::torus(side, side)
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, c: CellIndex) -> bool {
        c.row < self.height && c.col < self.width
    }

    pub fn check(&self, c: CellIndex) -> Result<()> {
        if self.contains(c) {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                row: c.row,
                col: c.col,
                width: self.width,
                height: self.height,
            })
        }
    }

    /// Row-major linear offset of a cell.
    pub fn offset(&self, c: CellIndex) -> usize {
        c.row * self.width + c.col
    }

    pub fn cell(&self, offset: usize) -> CellIndex {
        CellIndex::new(offset / self.width, offset % self.width)
    }

    pub fn cells(&self) -> impl Iterator<Item = CellIndex> + '_ {
        (0..self.len()).map(move |i| self.cell(i))
    }

    fn shift(&self, c: CellIndex, drow: isize, dcol: isize) -> Option<CellIndex> {
        let wrap = |v: usize, d: isize, n: usize| -> Option<usize> {
            let raw = v as isize + d;
            if self.periodic {
                Some(raw.rem_euclid(n as isize) as usize)
            } else if raw < 0 || raw >= n as isize {
                None
            } else {
                Some(raw as usize)
            }
        };
        Some(CellIndex::new(
            wrap(c.row, drow, self.height)?,
            wrap(c.col, dcol, self.width)?,
        ))
    }

    fn collect_offsets(&self, c: CellIndex, deltas: &[(isize, isize)]) -> Vec<CellIndex> {
        let mut out: Vec<CellIndex> = Vec::with_capacity(deltas.len());
        for &(dr, dc) in deltas {
            if let Some(n) = self.shift(c, dr, dc) {
                if n != c && !out.contains(&n) {
                    out.push(n);
                }
            }
        }
        out
    }

    /// Von Neumann neighbours in the order left, right, up, down.
    ///
    /// Missing neighbours of non-periodic chain endpoints are omitted. On very small
    /// periodic grids wrapped duplicates (and the cell itself) are dropped.
    pub fn nearest_neighbors(&self, c: CellIndex) -> Result<Vec<CellIndex>> {
        self.check(c)?;
        let deltas: &[(isize, isize)] = match self.topology {
            Topology::Line1D => &[(0, -1), (0, 1)],
            Topology::Torus2D => &[(0, -1), (0, 1), (-1, 0), (1, 0)],
        };
        Ok(self.collect_offsets(c, deltas))
    }

    /// Diagonal cells followed by the axial cells at distance two.
    ///
    /// Order: (-1,-1), (-1,+1), (+1,-1), (+1,+1), (-2,0), (+2,0), (0,-2), (0,+2).
    /// Cells that wrap onto the centre or onto a nearest neighbour are dropped.
    pub fn next_nearest_neighbors(&self, c: CellIndex) -> Result<Vec<CellIndex>> {
        if self.topology != Topology::Torus2D {
            return Err(Error::UnsupportedTopology(
                "next-nearest neighbours need a 2D torus",
            ));
        }
        self.check(c)?;
        let nearest = self.nearest_neighbors(c)?;
        let mut out = self.collect_offsets(
            c,
            &[
                (-1, -1),
                (-1, 1),
                (1, -1),
                (1, 1),
                (-2, 0),
                (2, 0),
                (0, -2),
                (0, 2),
            ],
        );
        out.retain(|n| !nearest.contains(n));
        Ok(out)
    }

    pub fn are_adjacent(&self, a: CellIndex, b: CellIndex) -> bool {
        self.nearest_neighbors(a)
            .map(|ns| ns.contains(&b))
            .unwrap_or(false)
    }

    /// Canonical interface between two adjacent cells.
    pub fn interface(&self, a: CellIndex, b: CellIndex) -> Result<InterfaceIndex> {
        self.check(a)?;
        self.check(b)?;
        if !self.are_adjacent(a, b) {
            return Err(Error::invalid(format!(
                "cells ({}, {}) and ({}, {}) are not nearest neighbours",
                a.row, a.col, b.row, b.col
            )));
        }
        let (cell_a, cell_b) = if self.offset(a) <= self.offset(b) {
            (a, b)
        } else {
            (b, a)
        };
        Ok(InterfaceIndex { cell_a, cell_b })
    }

    /// All interfaces, each listed once, in row-major order of their first cell.
    pub fn interfaces(&self) -> Vec<InterfaceIndex> {
        let mut out = Vec::new();
        for c in self.cells() {
            for n in self
                .nearest_neighbors(c)
                .expect("cell from iterator is valid")
            {
                if self.offset(c) < self.offset(n) {
                    out.push(InterfaceIndex {
                        cell_a: c,
                        cell_b: n,
                    });
                }
            }
        }
        out
    }
}

/// Number of stirrer input states of an `n` x `n` array: `p^(n^2) * q^(2n(n-1))`.
pub fn input_state_count(n: u32, p: u32, q: u32) -> BigUint {
    BigUint::from(p).pow(n * n) * BigUint::from(q).pow(2 * n * n.saturating_sub(1))
}

/// Number of global chemical states of an `n` x `n` array: `k^(n^2)`.
pub fn chemical_state_count(n: u32, k: u32) -> BigUint {
    BigUint::from(k).pow(n * n)
}

/// Decimal scientific form of an exact integer at a fixed number of significant figures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scientific {
    pub mantissa: String,
    pub exponent: usize,
}

impl Scientific {
    /// Rounded half-up.
    pub fn of(value: &BigUint, sig: usize) -> Self {
        Self::build(value, sig, true)
    }

    /// Digits past `sig` dropped. The published counts are quoted this way
    /// (`4^49 2^84 = 6.1299…e54` is quoted as 6.12e54).
    pub fn truncated(value: &BigUint, sig: usize) -> Self {
        Self::build(value, sig, false)
    }

    fn build(value: &BigUint, sig: usize, round: bool) -> Self {
        let sig = sig.max(1);
        let digits: Vec<u8> = value.to_string().bytes().map(|b| b - b'0').collect();
        let mut exponent = digits.len() - 1;
        let mut kept: Vec<u8> = digits.iter().copied().take(sig).collect();
        while kept.len() < sig {
            kept.push(0);
        }
        if round && digits.get(sig).is_some_and(|&d| d >= 5) {
            let mut i = kept.len();
            loop {
                if i == 0 {
                    kept.insert(0, 1);
                    kept.pop();
                    exponent += 1;
                    break;
                }
                i -= 1;
                if kept[i] == 9 {
                    kept[i] = 0;
                } else {
                    kept[i] += 1;
                    break;
                }
            }
        }
        let mut mantissa = String::new();
        mantissa.push((b'0' + kept[0]) as char);
        if kept.len() > 1 {
            mantissa.push('.');
            mantissa.extend(kept[1..].iter().map(|&d| (b'0' + d) as char));
        }
        Scientific { mantissa, exponent }
    }

    /// `6.12e54` style.
    pub fn to_e_notation(&self) -> String {
        format!("{}e{}", self.mantissa, self.exponent)
    }
}

impl std::fmt::Display for Scientific {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}×10^{}", self.mantissa, self.exponent)
    }
}
