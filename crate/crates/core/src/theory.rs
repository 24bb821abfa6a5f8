// SPDX-License-Identifier: Apache-2.0

//! Closed-form limiting fitness distributions of long random circuits, the
//! gate-averaged Markov chain on bus states, and total variation distance.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::circuit::Bus;
use crate::error::{Error, Result};
use crate::fitness::TargetTable;
use crate::gate::enumerate_gates;

/// Largest Hamming range for which a pmf is materialized.
pub const PMF_LIMIT: u64 = 1 << 20;

/// Widest bus [`gate_transition_matrix`] accepts.
pub const MATRIX_WIRE_LIMIT: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LimitKind {
    /// Every output bit an independent fair coin.
    BinomialHamming,
    /// Single output, no spare wire: the zero bus state is pinned and the
    /// rest of the bus is shuffled uniformly. Only even scores occur.
    ParityShiftedHamming,
    /// Single output with spare wires, exact for a finite bus: inputs land
    /// on distinct uniformly random non-zero bus states.
    FiniteBusHamming,
    RmsSmallT,
    RmsExhaustive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitModel {
    pub kind: LimitKind,
    pub n: usize,
    pub m: usize,
    pub mean: f64,
    pub sd: f64,
    pub solution_probability: f64,
    /// Probability of each raw fitness `0..=m*2^n`, when materialized.
    pub pmf: Option<Vec<f64>>,
}

impl LimitModel {
    pub fn pmf_at(&self, fitness: usize) -> Option<f64> {
        self.pmf.as_ref().map(|p| p.get(fitness).copied().unwrap_or(0.0))
    }

    /// `fitness,probability` rows with a header.
    pub fn to_csv(&self) -> Option<String> {
        let pmf = self.pmf.as_ref()?;
        let mut out = String::from("fitness,probability\n");
        for (f, p) in pmf.iter().enumerate() {
            let _ = writeln!(out, "{f},{p:e}");
        }
        Some(out)
    }
}

fn moments(pmf: &[f64]) -> (f64, f64) {
    let mean: f64 = pmf.iter().enumerate().map(|(f, p)| f as f64 * p).sum();
    let var: f64 = pmf
        .iter()
        .enumerate()
        .map(|(f, p)| (f as f64 - mean).powi(2) * p)
        .sum();
    (mean, var.sqrt())
}

/// Binomial limit of Hamming fitness: each of the `m * 2^n` output bits is
/// an independent fair coin.
pub fn binomial_limit(n: usize, m: usize) -> LimitModel {
    let total = (m as u64) << n;
    let pmf = (total <= PMF_LIMIT).then(|| {
        let ln_half = -(total as f64) * std::f64::consts::LN_2;
        (0..=total)
            .map(|f| (ln_binomial(total, f) + ln_half).exp())
            .collect()
    });
    LimitModel {
        kind: LimitKind::BinomialHamming,
        n,
        m,
        mean: total as f64 / 2.0,
        sd: (total as f64).sqrt() / 2.0,
        solution_probability: (-(total as f64)).exp2(),
        pmf,
    }
}

/// Mean and standard deviation of normalized Hamming fitness in the limit.
pub fn normalized_limit(n: usize, m: usize) -> (f64, f64) {
    (0.5, (-(n as f64) / 2.0).exp2() / (2.0 * (m as f64).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RmsRegime {
    /// A few tests with small answers.
    SmallT,
    /// Every input tested, answers spread uniformly over `0..2^m`.
    ExhaustiveUniform,
}

/// Limiting mean and standard deviation of RMS error for `m`-bit outputs.
pub fn rms_limit(m: usize, regime: RmsRegime) -> (f64, f64) {
    let scale = (m as f64).exp2();
    match regime {
        RmsRegime::SmallT => (scale / 2.0, scale / (2.0 * 3f64.sqrt())),
        RmsRegime::ExhaustiveUniform => (7.0 * scale / (12.0 * 3f64.sqrt()), 0.23 * scale),
    }
}

/// The [`LimitModel`] row for an RMS regime.
pub fn rms_limit_model(m: usize, regime: RmsRegime) -> LimitModel {
    let (mean, sd) = rms_limit(m, regime);
    LimitModel {
        kind: match regime {
            RmsRegime::SmallT => LimitKind::RmsSmallT,
            RmsRegime::ExhaustiveUniform => LimitKind::RmsExhaustive,
        },
        n: 0,
        m,
        mean,
        sd,
        solution_probability: f64::NAN,
        pmf: None,
    }
}

/// Exact limit of single-output Hamming fitness on a finite bus.
///
/// Every CCNOT fixes the all-zero bus state, and on the remaining
/// `2^N - 1` states long random circuits become uniform. A fitness case
/// whose input state is zero (case 0 with no constant-1 wire) therefore
/// always reads 0; the others land on distinct uniformly random non-zero
/// states, `2^(N-1)` of which carry a 1 on the output wire.
///
/// With no spare wire every output row is balanced and, against a balanced
/// target, only even scores occur; the mean rises slightly above `2^n / 2`.
pub fn finite_bus_limit(bus: Bus, target: &TargetTable) -> Result<LimitModel> {
    if target.m_outputs() != 1 || target.n_inputs() != bus.n_inputs {
        return Err(Error::DimensionMismatch(
            "finite-bus limit needs a single-output target matching the bus".into(),
        ));
    }
    if bus.wires > 60 || bus.wires < 3 {
        return Err(Error::InvalidConfig(format!(
            "finite-bus limit supports 3..=60 wires, got {}",
            bus.wires
        )));
    }
    let cases = target.cases() as u64;
    let population = (1u64 << bus.wires) - 1;
    let ones = 1u64 << (bus.wires - 1);
    let pinned_case = (bus.input_state(0) == 0).then_some(0usize);

    // Pinned case reads 0: it matches iff the target wants 0.
    let pinned_matches = pinned_case.map_or(0, |c| (!target.bit(0, c)) as u64);
    let free = (0..target.cases()).filter(|&c| Some(c) != pinned_case);
    let (mut k1, mut k0) = (0u64, 0u64);
    for c in free {
        if target.bit(0, c) {
            k1 += 1;
        } else {
            k0 += 1;
        }
    }
    let drawn = k1 + k0;
    let unused = population - drawn;
    let ln_total = ln_binomial(population, ones);

    let mut pmf = vec![0.0; cases as usize + 1];
    for a in 0..=k1 {
        for b in 0..=k0 {
            // a ones on target-one cases, b ones on target-zero cases.
            let rest = match ones.checked_sub(a + b) {
                Some(r) if r <= unused => r,
                _ => continue,
            };
            let ln_p = ln_binomial(k1, a) + ln_binomial(k0, b) + ln_binomial(unused, rest) - ln_total;
            let fitness = pinned_matches + a + (k0 - b);
            pmf[fitness as usize] += ln_p.exp();
        }
    }
    let (mean, sd) = moments(&pmf);
    let kind = if bus.wires == bus.n_inputs {
        LimitKind::ParityShiftedHamming
    } else {
        LimitKind::FiniteBusHamming
    };
    Ok(LimitModel {
        kind,
        n: bus.n_inputs,
        m: 1,
        mean,
        sd,
        solution_probability: pmf[cases as usize],
        pmf: Some(pmf),
    })
}

/// Normal density at each integer of `support`, renormalized over it.
/// Used to overlay the bell-curve approximation on sampled histograms.
pub fn normal_approximation(mean: f64, sd: f64, size: usize, support: impl Fn(usize) -> bool) -> Vec<f64> {
    let mut pmf: Vec<f64> = (0..size)
        .map(|f| {
            if support(f) {
                let z = (f as f64 - mean) / sd;
                (-0.5 * z * z).exp()
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = pmf.iter().sum();
    pmf.iter_mut().for_each(|p| *p /= total);
    pmf
}

/// Half the L1 distance between two distributions on the same support.
pub fn total_variation_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::InvalidDistribution(format!(
            "support sizes differ: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    for (name, d) in [("p", p), ("q", q)] {
        if d.iter().any(|&x| x.is_nan() || x < 0.0) {
            return Err(Error::InvalidDistribution(format!("{name} has a negative or NaN entry")));
        }
        let sum: f64 = d.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!("{name} sums to {sum}")));
        }
    }
    let tvd = 0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>();
    Ok(tvd.min(1.0))
}

/// Row-major square stochastic matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    size: usize,
    entries: Vec<f64>,
}

impl TransitionMatrix {
    pub fn identity(size: usize) -> Self {
        let mut entries = vec![0.0; size * size];
        for i in 0..size {
            entries[i * size + i] = 1.0;
        }
        Self { size, entries }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.entries[from * self.size + to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.entries[from * self.size..(from + 1) * self.size]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.size).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.size)
            .map(|j| (0..self.size).map(|i| self.get(i, j)).sum())
            .collect()
    }

    pub fn is_doubly_stochastic(&self, tol: f64) -> bool {
        self.entries.iter().all(|&x| x >= 0.0)
            && self
                .row_sums()
                .into_iter()
                .chain(self.column_sums())
                .all(|s| (s - 1.0).abs() <= tol)
    }

    pub fn multiply(&self, other: &TransitionMatrix) -> TransitionMatrix {
        let n = self.size;
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    entries[i * n + j] += a * other.get(k, j);
                }
            }
        }
        TransitionMatrix { size: n, entries }
    }

    /// `self^k` by repeated squaring.
    pub fn power(&self, mut k: u32) -> TransitionMatrix {
        let mut result = TransitionMatrix::identity(self.size);
        let mut base = self.clone();
        while k > 0 {
            if k & 1 == 1 {
                result = result.multiply(&base);
            }
            base = base.multiply(&base);
            k >>= 1;
        }
        result
    }

    /// Row vector times matrix: one step of the chain from distribution `p`.
    pub fn step(&self, p: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.size];
        for (i, &pi) in p.iter().enumerate() {
            for (j, o) in out.iter_mut().enumerate() {
                *o += pi * self.get(i, j);
            }
        }
        out
    }
}

/// One-step transition matrix on bus states when a gate is drawn uniformly
/// from every legal gate: the average of the gates' permutation matrices.
pub fn gate_transition_matrix(wires: usize) -> Result<TransitionMatrix> {
    if wires > MATRIX_WIRE_LIMIT {
        return Err(Error::BusTooWide {
            wires,
            limit: MATRIX_WIRE_LIMIT,
        });
    }
    let gates = enumerate_gates(wires)?;
    let size = 1usize << wires;
    let weight = 1.0 / gates.len() as f64;
    let mut entries = vec![0.0; size * size];
    for s in 0..size {
        for g in &gates {
            entries[s * size + g.apply_state(s as u64) as usize] += weight;
        }
    }
    Ok(TransitionMatrix { size, entries })
}

/// Distance of each row of `matrix^k` from the uniform distribution.
pub fn row_distances_to_uniform(matrix: &TransitionMatrix, k: u32) -> Vec<f64> {
    let powered = matrix.power(k);
    let uniform = vec![1.0 / matrix.size() as f64; matrix.size()];
    (0..matrix.size())
        .map(|i| 0.5 * powered.row(i).iter().zip(&uniform).map(|(a, b)| (a - b).abs()).sum::<f64>())
        .collect()
}

/// Like [`row_distances_to_uniform`], but against the uniform distribution
/// on `class` and only for rows starting inside it. The all-zero bus state
/// is fixed by every gate, so the non-zero states form the class that
/// mixes.
pub fn class_distances_to_uniform(matrix: &TransitionMatrix, k: u32, class: &[usize]) -> Vec<f64> {
    let powered = matrix.power(k);
    let mut uniform = vec![0.0; matrix.size()];
    for &s in class {
        uniform[s] = 1.0 / class.len() as f64;
    }
    class
        .iter()
        .map(|&i| 0.5 * powered.row(i).iter().zip(&uniform).map(|(a, b)| (a - b).abs()).sum::<f64>())
        .collect()
}
