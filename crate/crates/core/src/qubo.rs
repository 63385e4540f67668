//! QUBO and Ising problem models.
//!
//! A [`QuboProblem`] stores `H(x) = h0 + Σ h1_i x_i + Σ_{i<j} J_ij x_i x_j` over
//! `x ∈ {0,1}^n`, where `J` is the full pairwise coefficient. Printed matrices
//! often use the halved symmetric form (`xᵀ h2 x` with `h2_ij = J_ij / 2`);
//! [`QuboProblem::halved_matrix`] and [`QuboProblem::from_quadratic_form`]
//! convert to and from it. Spins relate to bits by `s = 2x − 1`.
//!
//! Configurations are also addressed by index: bit `i` of the index is `x_i`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest problem the exhaustive oracle accepts.
pub const BRUTE_FORCE_LIMIT: usize = 24;

/// Energies closer than this (relative to the problem's coefficient scale) are equal.
pub const ENERGY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemKind {
    Partition {
        numbers: Vec<u64>,
        a: f64,
    },
    TwoSat {
        clauses: Vec<[i32; 2]>,
        a: f64,
    },
    Tsp {
        distances: Vec<Vec<f64>>,
        a: f64,
        scale: f64,
    },
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuboProblem {
    offset: f64,
    linear: Vec<f64>,
    /// Row-major `n × n`, symmetric, zero diagonal.
    coupling: Vec<f64>,
    kind: ProblemKind,
}

impl QuboProblem {
    /// Empty problem over `n` variables.
    pub fn zeros(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("problem needs at least one variable"));
        }
        Ok(QuboProblem {
            offset: 0.0,
            linear: vec![0.0; n],
            coupling: vec![0.0; n * n],
            kind: ProblemKind::Explicit,
        })
    }

    /// From `h0 + h1·x + xᵀ M x`. The pairwise coefficient of `x_i x_j` is
    /// `M_ij + M_ji`; diagonal entries fold into the linear term.
    pub fn from_quadratic_form(h0: f64, h1: &[f64], m: &[Vec<f64>]) -> Result<Self> {
        let n = h1.len();
        let mut p = Self::zeros(n)?;
        Error::check_len(n, m.len())?;
        for row in m {
            Error::check_len(n, row.len())?;
        }
        p.offset = h0;
        for i in 0..n {
            p.linear[i] = h1[i] + m[i][i];
            for j in (i + 1)..n {
                p.add_pair(i, j, m[i][j] + m[j][i]);
            }
        }
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.linear.len()
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn kind(&self) -> &ProblemKind {
        &self.kind
    }

    /// Full coefficient of `x_i x_j`.
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.coupling[i * self.n() + j]
    }

    /// Partners of `i` with a nonzero coupling, in index order.
    pub fn partners(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let n = self.n();
        self.coupling[i * n..(i + 1) * n]
            .iter()
            .enumerate()
            .filter(|&(_, &v)| v != 0.0)
            .map(|(j, &v)| (j, v))
    }

    /// Symmetric matrix with entries `J_ij / 2`.
    pub fn halved_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        (0..n)
            .map(|i| (0..n).map(|j| self.coupling(i, j) / 2.0).collect())
            .collect()
    }

    /// Largest absolute coefficient, used to scale tolerances.
    pub fn scale(&self) -> f64 {
        self.linear
            .iter()
            .chain(self.coupling.iter())
            .chain(std::iter::once(&self.offset))
            .fold(1.0f64, |m, v| m.max(v.abs()))
    }

    pub fn tolerance(&self) -> f64 {
        ENERGY_TOL * self.scale()
    }

    fn add_pair(&mut self, i: usize, j: usize, v: f64) {
        let n = self.n();
        self.coupling[i * n + j] += v;
        self.coupling[j * n + i] += v;
    }

    pub fn energy(&self, x: &[bool]) -> Result<f64> {
        Error::check_len(self.n(), x.len())?;
        Ok(self.energy_unchecked(x))
    }

    fn energy_unchecked(&self, x: &[bool]) -> f64 {
        let n = self.n();
        let mut e = self.offset;
        for i in (0..n).filter(|&i| x[i]) {
            e += self.linear[i];
            for j in ((i + 1)..n).filter(|&j| x[j]) {
                e += self.coupling[i * n + j];
            }
        }
        e
    }

    pub fn energy_of_index(&self, index: u64) -> f64 {
        self.energy_unchecked(&index_to_bits(index, self.n()))
    }

    /// Energy change from flipping `x_i`.
    pub fn flip_delta(&self, x: &[bool], i: usize) -> f64 {
        let n = self.n();
        let local = self.linear[i]
            + (0..n)
                .filter(|&j| x[j])
                .map(|j| self.coupling[i * n + j])
                .sum::<f64>();
        if x[i] {
            -local
        } else {
            local
        }
    }
}

pub fn spins_to_bits(s: &[i8]) -> Result<Vec<bool>> {
    s.iter()
        .map(|&v| match v {
            1 => Ok(true),
            -1 => Ok(false),
            other => Err(Error::invalid(format!("spin value {other} is not ±1"))),
        })
        .collect()
}

pub fn bits_to_spins(x: &[bool]) -> Vec<i8> {
    x.iter().map(|&b| if b { 1 } else { -1 }).collect()
}

pub fn bits_to_index(x: &[bool]) -> u64 {
    x.iter()
        .enumerate()
        .fold(0, |acc, (i, &b)| acc | ((b as u64) << i))
}

pub fn index_to_bits(index: u64, n: usize) -> Vec<bool> {
    (0..n).map(|i| (index >> i) & 1 == 1).collect()
}

/// `H = A (Σ n_i s_i)²`.
pub fn build_partition(numbers: &[u64], a: f64) -> Result<QuboProblem> {
    if numbers.is_empty() {
        return Err(Error::invalid("partition needs at least one number"));
    }
    let mut p = QuboProblem::zeros(numbers.len())?;
    let total: f64 = numbers.iter().map(|&v| v as f64).sum();
    p.offset = a * total * total;
    for (i, &ni) in numbers.iter().enumerate() {
        let ni = ni as f64;
        p.linear[i] = a * (4.0 * ni * ni - 4.0 * ni * total);
        for (j, &nj) in numbers.iter().enumerate().skip(i + 1) {
            p.add_pair(i, j, 8.0 * a * ni * nj as f64);
        }
    }
    p.kind = ProblemKind::Partition {
        numbers: numbers.to_vec(),
        a,
    };
    Ok(p)
}

/// `H = A Σ_clauses Π (1 − w s)`. Literals are 1-based variable numbers,
/// negative for a negated variable. The variable count is the largest one named.
pub fn build_2sat(clauses: &[[i32; 2]], a: f64) -> Result<QuboProblem> {
    if clauses.is_empty() {
        return Err(Error::invalid("2-SAT needs at least one clause"));
    }
    if clauses.iter().flatten().any(|&l| l == 0) {
        return Err(Error::invalid("literal 0 does not name a variable"));
    }
    let n = clauses
        .iter()
        .flatten()
        .map(|l| l.unsigned_abs() as usize)
        .max()
        .unwrap_or(0);
    let mut p = QuboProblem::zeros(n)?;
    for &[l1, l2] in clauses {
        // 1 − w s = (1 + w) − 2w x
        let term = |l: i32| {
            let w = l.signum() as f64;
            ((l.unsigned_abs() - 1) as usize, 1.0 + w, -2.0 * w)
        };
        let (i, a1, b1) = term(l1);
        let (j, a2, b2) = term(l2);
        p.offset += a * a1 * a2;
        if i == j {
            // x² = x
            p.linear[i] += a * (a1 * b2 + a2 * b1 + b1 * b2);
        } else {
            p.linear[i] += a * a2 * b1;
            p.linear[j] += a * a1 * b2;
            p.add_pair(i, j, a * b1 * b2);
        }
    }
    p.kind = ProblemKind::TwoSat {
        clauses: clauses.to_vec(),
        a,
    };
    Ok(p)
}

/// Distance scale that maps the longest edge to 0.1.
pub fn default_tsp_scale(distances: &[Vec<f64>]) -> f64 {
    let d_max = distances.iter().flatten().fold(0.0f64, |m, &d| m.max(d));
    if d_max > 0.0 {
        0.1 / d_max
    } else {
        1.0
    }
}

/// Variable index of "city `city` at tour position `pos`" (both 0-based).
pub fn tsp_var(n_cities: usize, pos: usize, city: usize) -> usize {
    pos * n_cities + city
}

/// One-hot row and column penalties plus scaled distances between consecutive
/// tour positions (cyclic). `scale = None` picks [`default_tsp_scale`].
pub fn build_tsp(distances: &[Vec<f64>], a: f64, scale: Option<f64>) -> Result<QuboProblem> {
    let n = distances.len();
    if n < 2 {
        return Err(Error::invalid("TSP needs at least two cities"));
    }
    for (u, row) in distances.iter().enumerate() {
        if row.len() != n {
            return Err(Error::invalid("distance matrix is not square"));
        }
        for (v, &d) in row.iter().enumerate() {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(Error::invalid(format!(
                    "distance ({u},{v}) is not a finite nonnegative value"
                )));
            }
            if (d - distances[v][u]).abs() > 1e-12 * d.max(1.0) {
                return Err(Error::invalid("distance matrix is not symmetric"));
            }
        }
        if row[u] != 0.0 {
            return Err(Error::invalid("distance matrix diagonal must be zero"));
        }
    }
    let scale = scale.unwrap_or_else(|| default_tsp_scale(distances));
    let mut p = QuboProblem::zeros(n * n)?;
    // A(1 − Σ x)² = A(1 − Σ x + 2 Σ_{k<l} x_k x_l) for each row and each column
    p.offset = 2.0 * n as f64 * a;
    for v in p.linear.iter_mut() {
        *v = -2.0 * a;
    }
    for fixed in 0..n {
        for k in 0..n {
            for l in (k + 1)..n {
                p.add_pair(tsp_var(n, fixed, k), tsp_var(n, fixed, l), 2.0 * a);
                p.add_pair(tsp_var(n, k, fixed), tsp_var(n, l, fixed), 2.0 * a);
            }
        }
    }
    for pos in 0..n {
        let next = (pos + 1) % n;
        for u in 0..n {
            for v in (0..n).filter(|&v| v != u) {
                p.add_pair(
                    tsp_var(n, pos, u),
                    tsp_var(n, next, v),
                    scale * distances[u][v],
                );
            }
        }
    }
    p.kind = ProblemKind::Tsp {
        distances: distances.to_vec(),
        a,
        scale,
    };
    Ok(p)
}

/// Euclidean distance matrix of planar points.
pub fn euclidean_distances(points: &[[f64; 2]]) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|a| {
            points
                .iter()
                .map(|b| (a[0] - b[0]).hypot(a[1] - b[1]))
                .collect()
        })
        .collect()
}

/// Read a tour from a one-hot assignment: `tour[pos] = city`. `None` if any
/// position or city is not covered exactly once.
pub fn decode_tour(x: &[bool], n_cities: usize) -> Option<Vec<usize>> {
    if x.len() != n_cities * n_cities {
        return None;
    }
    let mut tour = Vec::with_capacity(n_cities);
    for pos in 0..n_cities {
        let mut cities = (0..n_cities).filter(|&c| x[tsp_var(n_cities, pos, c)]);
        let city = cities.next()?;
        if cities.next().is_some() {
            return None;
        }
        tour.push(city);
    }
    let mut seen = vec![false; n_cities];
    for &c in &tour {
        if std::mem::replace(&mut seen[c], true) {
            return None;
        }
    }
    Some(tour)
}

/// Ising form `H = c + Σ h_i s_i + Σ_{i<j} J_ij s_i s_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingProblem {
    pub offset: f64,
    pub field: Vec<f64>,
    /// Row-major `n × n`, symmetric, zero diagonal.
    pub coupling: Vec<f64>,
}

impl IsingProblem {
    pub fn n(&self) -> usize {
        self.field.len()
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.coupling[i * self.n() + j]
    }

    pub fn energy(&self, s: &[i8]) -> Result<f64> {
        let n = self.n();
        Error::check_len(n, s.len())?;
        let mut e = self.offset;
        for i in 0..n {
            e += self.field[i] * s[i] as f64;
            for j in (i + 1)..n {
                e += self.coupling[i * n + j] * (s[i] * s[j]) as f64;
            }
        }
        Ok(e)
    }
}

/// Substitute `x = (s + 1) / 2`.
pub fn qubo_to_ising(p: &QuboProblem) -> IsingProblem {
    let n = p.n();
    let mut offset = p.offset + p.linear.iter().sum::<f64>() / 2.0;
    let mut field: Vec<f64> = p.linear.iter().map(|h| h / 2.0).collect();
    let mut coupling = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let q = p.coupling(i, j) / 4.0;
            if q != 0.0 {
                offset += q;
                field[i] += q;
                field[j] += q;
                coupling[i * n + j] = q;
                coupling[j * n + i] = q;
            }
        }
    }
    IsingProblem {
        offset,
        field,
        coupling,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruteForceResult {
    pub min_energy: f64,
    /// Argmin configurations as indices, ascending.
    pub argmins: Vec<u64>,
}

impl BruteForceResult {
    pub fn argmin_bits(&self, n: usize) -> Vec<Vec<bool>> {
        self.argmins.iter().map(|&i| index_to_bits(i, n)).collect()
    }
}

/// Exhaustive minimum over all `2^n` configurations.
pub fn brute_force_min(p: &QuboProblem) -> Result<BruteForceResult> {
    let n = p.n();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::Capacity {
            what: "variables for exhaustive search",
            value: n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    // Gray-code walk; candidates near the running minimum are re-evaluated exactly.
    let slack = 1e-6 * p.scale();
    let mut x = vec![false; n];
    let mut e = p.offset;
    let mut best = e;
    let mut candidates = vec![0u64];
    for k in 1u64..(1u64 << n) {
        let bit = k.trailing_zeros() as usize;
        e += p.flip_delta(&x, bit);
        x[bit] = !x[bit];
        if e <= best + slack {
            if e < best {
                best = e;
                candidates.retain(|&c| p.energy_of_index(c) <= best + slack);
            }
            candidates.push(bits_to_index(&x));
        }
    }
    let exact: Vec<(u64, f64)> = candidates
        .into_iter()
        .map(|c| (c, p.energy_of_index(c)))
        .collect();
    let min_energy = exact.iter().map(|&(_, e)| e).fold(f64::INFINITY, f64::min);
    let tol = p.tolerance();
    let mut argmins: Vec<u64> = exact
        .into_iter()
        .filter(|&(_, e)| e <= min_energy + tol)
        .map(|(c, _)| c)
        .collect();
    argmins.sort_unstable();
    argmins.dedup();
    Ok(BruteForceResult {
        min_energy,
        argmins,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub configs: Vec<Vec<bool>>,
    pub energies: Vec<f64>,
}

/// Random single-flip descent: a uniformly chosen variable is flipped when that
/// does not raise the energy. Stops once no flip strictly lowers the energy, or
/// after `max_iters` proposals.
pub fn greedy_descent<R: Rng + ?Sized>(
    p: &QuboProblem,
    init: &[bool],
    max_iters: usize,
    rng: &mut R,
) -> Result<Trajectory> {
    let n = p.n();
    Error::check_len(n, init.len())?;
    let tol = p.tolerance();
    let mut x = init.to_vec();
    let mut e = p.energy_unchecked(&x);
    let mut traj = Trajectory {
        configs: vec![x.clone()],
        energies: vec![e],
    };
    for _ in 0..max_iters {
        if (0..n).all(|i| p.flip_delta(&x, i) >= -tol) {
            break;
        }
        let i = rng.gen_range(0..n);
        let d = p.flip_delta(&x, i);
        if d <= tol {
            x[i] = !x[i];
            e = p.energy_unchecked(&x);
            traj.configs.push(x.clone());
            traj.energies.push(e);
        }
    }
    Ok(traj)
}

/// Problem file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    Partition {
        numbers: Vec<u64>,
        #[serde(default = "one")]
        a: f64,
    },
    TwoSat {
        clauses: Vec<[i32; 2]>,
        #[serde(default = "one")]
        a: f64,
    },
    Tsp {
        #[serde(default)]
        distances: Option<Vec<Vec<f64>>>,
        /// Planar city coordinates, used when `distances` is absent.
        #[serde(default)]
        cities: Option<Vec<[f64; 2]>>,
        #[serde(default = "one")]
        a: f64,
        #[serde(default)]
        scale: Option<f64>,
    },
    /// `h0 + h1·x + xᵀ h2 x`.
    Explicit {
        h0: f64,
        h1: Vec<f64>,
        h2: Vec<Vec<f64>>,
    },
}

fn one() -> f64 {
    1.0
}

impl ProblemSpec {
    pub fn build(&self) -> Result<QuboProblem> {
        match self {
            ProblemSpec::Partition { numbers, a } => build_partition(numbers, *a),
            ProblemSpec::TwoSat { clauses, a } => build_2sat(clauses, *a),
            ProblemSpec::Tsp {
                distances,
                cities,
                a,
                scale,
            } => {
                let d = match (distances, cities) {
                    (Some(d), None) => d.clone(),
                    (None, Some(c)) => euclidean_distances(c),
                    _ => {
                        return Err(Error::invalid(
                            "tsp needs exactly one of `distances` or `cities`",
                        ))
                    }
                };
                build_tsp(&d, *a, *scale)
            }
            ProblemSpec::Explicit { h0, h1, h2 } => QuboProblem::from_quadratic_form(*h0, h1, h2),
        }
    }
}
