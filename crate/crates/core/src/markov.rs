//! Exact buffer-state Markov chain under HRS with i.i.d. fading.
//!
//! With i.i.d. links each of the `N^2` ordered (receive, transmit) pairs
//! produced by max-max selection is equally likely. A pair moves one packet
//! from the transmitting relay's buffer count to the receiving relay's when
//! the relays differ and the HRS fallback does not fire; every other pair
//! leaves the state unchanged. Total occupancy `N_e` is therefore conserved.
//!
//! Probabilities are kept as integer numerators over the common denominator
//! `N^2`, so symmetry, double stochasticity, and stationarity are checked
//! exactly.

use std::collections::HashMap;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::selection::brs_trigger;
use crate::{Error, Result};

/// Exact rational number used for mode probabilities.
pub type Rational = Ratio<u64>;

fn check_feasible(n: usize, lb: u32, ne: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "at least one relay is required".into(),
        ));
    }
    if lb == 0 {
        return Err(Error::InvalidParameter(
            "buffer size L_b must be at least 1".into(),
        ));
    }
    let max = max_total_full(n, lb);
    if ne > max {
        return Err(Error::Infeasible { n, lb, ne, max });
    }
    Ok(())
}

/// Largest feasible `N_e`: every buffer at `L_b - 1`.
pub fn max_total_full(n: usize, lb: u32) -> u64 {
    n as u64 * u64::from(lb.saturating_sub(1))
}

/// Visit every occupancy vector with entries in `0..=L_b-1` summing to `N_e`,
/// in lexicographic order.
pub fn for_each_state<F: FnMut(&[u32])>(n: usize, lb: u32, ne: u64, mut visit: F) -> Result<()> {
    check_feasible(n, lb, ne)?;
    let cap = u64::from(lb - 1);
    let mut current = vec![0u32; n];
    fn recurse<F: FnMut(&[u32])>(
        pos: usize,
        remaining: u64,
        cap: u64,
        current: &mut [u32],
        visit: &mut F,
    ) {
        let n = current.len();
        if pos == n - 1 {
            if remaining <= cap {
                current[pos] = remaining as u32;
                visit(current);
            }
            return;
        }
        let rest_capacity = cap * (n - pos - 1) as u64;
        let lo = remaining.saturating_sub(rest_capacity);
        let hi = remaining.min(cap);
        for x in lo..=hi {
            current[pos] = x as u32;
            recurse(pos + 1, remaining - x, cap, current, visit);
        }
    }
    recurse(0, ne, cap, &mut current, &mut visit);
    Ok(())
}

/// All buffer states for fixed `(N, L_b, N_e)`, lexicographically ordered.
#[derive(Debug, Clone)]
pub struct StateSpace {
    n_relays: usize,
    capacity: u32,
    total_full: u64,
    states: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
}

impl StateSpace {
    pub fn n_relays(&self) -> usize {
        self.n_relays
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn total_full(&self) -> u64 {
        self.total_full
    }

    pub fn states(&self) -> &[Vec<u32>] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, state: &[u32]) -> Option<usize> {
        self.index.get(state).copied()
    }
}

pub fn enumerate_states(n: usize, lb: u32, ne: u64) -> Result<StateSpace> {
    let mut states = Vec::new();
    for_each_state(n, lb, ne, |s| states.push(s.to_vec()))?;
    let index = states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i))
        .collect();
    Ok(StateSpace {
        n_relays: n,
        capacity: lb,
        total_full: ne,
        states,
        index,
    })
}

/// Number of states without enumeration, for two and three relays.
pub fn count_states_closed_form(n: usize, lb: u32, ne: u64) -> Result<u64> {
    if !(n == 2 || n == 3) {
        return Err(Error::Unsupported(format!(
            "no closed-form state count for N={n}; enumerate the state space instead"
        )));
    }
    check_feasible(n, lb, ne)?;
    let lb = i64::from(lb);
    let ne = ne as i64;
    let pos = |x: i64| x.max(0);
    let count = if n == 2 {
        if ne < lb {
            ne + 1
        } else {
            2 * lb - ne - 1
        }
    } else {
        // i = N_e - X_1 + 1 for X_1 in 0..=min(L_b - 1, N_e); each term counts
        // the two-relay states holding the remaining i - 1 packets
        (pos(ne - lb + 1) + 1..=ne + 1)
            .map(|i| pos(i - 2 * pos(i - lb)))
            .sum()
    };
    Ok(count as u64)
}

/// Number of full (`X = L_b - 1`) and empty (`X = 0`) buffers of a state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateClassification {
    pub n_full: u32,
    pub n_empty: u32,
}

pub fn classify(state: &[u32], lb: u32) -> StateClassification {
    let n_full = state.iter().filter(|&&x| x == lb - 1).count() as u32;
    let n_empty = state.iter().filter(|&&x| x == 0).count() as u32;
    StateClassification { n_full, n_empty }
}

/// Transition matrix with entries `numerator / denominator`, `denominator = N^2`.
///
/// Rows are stored sparsely: every state has at most `N(N-1)` neighbours.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactTransitionMatrix {
    denominator: u64,
    rows: Vec<Vec<(usize, u64)>>,
}

impl ExactTransitionMatrix {
    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn denominator(&self) -> u64 {
        self.denominator
    }

    /// Non-zero entries of row `i` as `(column, numerator)`, sorted by column.
    pub fn row(&self, i: usize) -> &[(usize, u64)] {
        &self.rows[i]
    }

    pub fn numerator(&self, i: usize, j: usize) -> u64 {
        self.rows[i]
            .binary_search_by_key(&j, |&(c, _)| c)
            .map(|k| self.rows[i][k].1)
            .unwrap_or(0)
    }

    pub fn probability(&self, i: usize, j: usize) -> Rational {
        Rational::new(self.numerator(i, j), self.denominator)
    }

    pub fn to_dense(&self) -> Vec<Vec<u64>> {
        let n = self.size();
        self.rows
            .iter()
            .map(|row| {
                let mut dense = vec![0; n];
                for &(j, v) in row {
                    dense[j] = v;
                }
                dense
            })
            .collect()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(_, v)| v).sum())
            .collect()
    }

    pub fn column_sums(&self) -> Vec<u64> {
        let mut sums = vec![0; self.size()];
        for row in &self.rows {
            for &(j, v) in row {
                sums[j] += v;
            }
        }
        sums
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.size()).all(|i| self.rows[i].iter().all(|&(j, v)| self.numerator(j, i) == v))
    }

    pub fn is_doubly_stochastic(&self) -> bool {
        let d = self.denominator;
        self.row_sums().iter().all(|&s| s == d) && self.column_sums().iter().all(|&s| s == d)
    }

    /// One step `x <- x P` in floating point.
    pub fn step(&self, x: &[f64]) -> Vec<f64> {
        let scale = 1.0 / self.denominator as f64;
        let mut out = vec![0.0; x.len()];
        for (i, row) in self.rows.iter().enumerate() {
            let xi = x[i] * scale;
            for &(j, v) in row {
                out[j] += xi * v as f64;
            }
        }
        out
    }
}

pub fn build_transition_matrix(space: &StateSpace) -> ExactTransitionMatrix {
    let n = space.n_relays;
    let lb = space.capacity;
    let mut rows = Vec::with_capacity(space.len());
    let mut next = vec![0u32; n];
    for state in &space.states {
        let mut row: Vec<(usize, u64)> = Vec::new();
        let mut self_loop = 0u64;
        for rx in 0..n {
            for tx in 0..n {
                if rx == tx || brs_trigger(state, lb, rx, tx) {
                    self_loop += 1;
                    continue;
                }
                next.copy_from_slice(state);
                next[rx] += 1;
                next[tx] -= 1;
                let j = space
                    .index_of(&next)
                    .expect("an MMRS move out of a non-triggered state stays feasible");
                row.push((j, 1));
            }
        }
        let i = space
            .index_of(state)
            .expect("state belongs to its own space");
        row.push((i, self_loop));
        row.sort_unstable_by_key(|&(j, _)| j);
        rows.push(row);
    }
    ExactTransitionMatrix {
        denominator: (n * n) as u64,
        rows,
    }
}

/// Power iteration from `initial` until the L∞ change drops below `tol`.
/// Returns the final vector and the number of steps taken.
pub fn power_iteration(
    m: &ExactTransitionMatrix,
    initial: &[f64],
    tol: f64,
    max_steps: usize,
) -> (Vec<f64>, usize) {
    let mut x = initial.to_vec();
    for step in 1..=max_steps {
        let next = m.step(&x);
        let delta = next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        x = next;
        if delta < tol {
            return (x, step);
        }
    }
    (x, max_steps)
}

/// Uniform stationary distribution, verified exactly (`πP = π` reduces to
/// every column summing to the denominator) and by power iteration from a
/// point mass on the first state.
pub fn stationary_distribution(m: &ExactTransitionMatrix) -> Result<Vec<Rational>> {
    let ns = m.size();
    if ns == 0 {
        return Err(Error::Internal("empty transition matrix".into()));
    }
    let d = m.denominator();
    if let Some(i) = m.row_sums().iter().position(|&s| s != d) {
        return Err(Error::Internal(format!("row {i} is not stochastic")));
    }
    // (πP)_j = (1/N_s) Σ_i P_ij, so πP = π exactly iff every column sums to 1
    if let Some(j) = m.column_sums().iter().position(|&s| s != d) {
        return Err(Error::Internal(format!(
            "uniform π is not invariant at column {j}"
        )));
    }
    let pi = vec![Rational::new(1, ns as u64); ns];

    let mut init = vec![0.0; ns];
    init[0] = 1.0;
    let (x, _) = power_iteration(m, &init, 1e-15, 10_000_000);
    let uniform = 1.0 / ns as f64;
    let err = x.iter().map(|v| (v - uniform).abs()).fold(0.0, f64::max);
    if err >= 1e-12 {
        return Err(Error::Internal(format!(
            "power iteration ended {err:e} away from uniform"
        )));
    }
    Ok(pi)
}

/// Probability of the BRS fallback in one state, from the full/empty counts.
pub fn p_brs_state(state: &[u32], n: usize, lb: u32) -> Rational {
    let StateClassification { n_full, n_empty } = classify(state, lb);
    let (f, e, n) = (u64::from(n_full), u64::from(n_empty), n as u64);
    Rational::new((f + e) * n - f * e, n * n)
}

/// Number of the `N^2` selection pairs that fire the HRS fallback in `state`.
pub fn count_brs_pairs(state: &[u32], lb: u32) -> u64 {
    let n = state.len();
    let mut count = 0;
    for rx in 0..n {
        for tx in 0..n {
            if brs_trigger(state, lb, rx, tx) {
                count += 1;
            }
        }
    }
    count
}

/// Long-run probabilities of the two HRS modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeProbabilities {
    pub p_brs: Rational,
    pub n_states: u64,
}

impl ModeProbabilities {
    pub fn p_mmrs(&self) -> Rational {
        Rational::from_integer(1) - self.p_brs
    }

    pub fn p_brs_f64(&self) -> f64 {
        ratio_to_f64(self.p_brs)
    }
}

pub fn ratio_to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Stationary probability of BRS mode: the uniform average of the per-state
/// fallback probabilities.
pub fn p_brs_total(n: usize, lb: u32, ne: u64) -> Result<ModeProbabilities> {
    let nn = (n * n) as u64;
    let mut numer_sum = 0u64;
    let mut n_states = 0u64;
    for_each_state(n, lb, ne, |s| {
        let c = classify(s, lb);
        let (f, e) = (u64::from(c.n_full), u64::from(c.n_empty));
        numer_sum += (f + e) * n as u64 - f * e;
        n_states += 1;
    })?;
    Ok(ModeProbabilities {
        p_brs: Rational::new(numer_sum, nn * n_states),
        n_states,
    })
}

/// JSON debug dump of a state space and its transition matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainDump {
    pub n_relays: usize,
    pub capacity: u32,
    pub total_full: u64,
    pub states: Vec<Vec<u32>>,
    pub numerators: Vec<Vec<u64>>,
    pub denominator: u64,
}

impl ChainDump {
    pub fn new(space: &StateSpace, m: &ExactTransitionMatrix) -> Self {
        Self {
            n_relays: space.n_relays,
            capacity: space.capacity,
            total_full: space.total_full,
            states: space.states.clone(),
            numerators: m.to_dense(),
            denominator: m.denominator(),
        }
    }
}
