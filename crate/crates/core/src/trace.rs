// SPDX-License-Identifier: Apache-2.0

//! Bit-parallel truth-table evaluation and exact permutation semantics.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::circuit::{Bus, Circuit};
use crate::error::{Error, Result};
use crate::gate::Gate;

/// Widest bus [`to_permutation`] will tabulate.
pub const PERMUTATION_WIRE_LIMIT: usize = 24;

/// Bit `t` of word `i` is the value of input bit `i` on case `t`, `i < 6`.
pub(crate) const INPUT_PATTERNS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

/// Mask selecting the valid case bits of the last word of a row.
pub(crate) fn case_mask(n_inputs: usize) -> u64 {
    if n_inputs >= 6 {
        u64::MAX
    } else {
        (1u64 << (1 << n_inputs)) - 1
    }
}

/// Per-wire rows of packed bits over all `2^n` fitness cases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthTableTrace {
    wires: usize,
    n_inputs: usize,
    words: usize,
    rows: Vec<u64>,
}

impl TruthTableTrace {
    /// The trace before any gate: input wires carry the case enumeration,
    /// the rest carry the constant fill.
    pub fn initial(bus: Bus) -> Self {
        let n = bus.n_inputs;
        let words = if n <= 6 { 1 } else { 1usize << (n - 6) };
        let mask = case_mask(n);
        let mut rows = vec![0u64; bus.wires * words];
        for wire in 0..bus.wires {
            let row = &mut rows[wire * words..(wire + 1) * words];
            for (w, word) in row.iter_mut().enumerate() {
                *word = if wire < n.min(6) {
                    INPUT_PATTERNS[wire]
                } else if wire < n {
                    if (w >> (wire - 6)) & 1 == 1 {
                        u64::MAX
                    } else {
                        0
                    }
                } else if bus.constant_fill {
                    u64::MAX
                } else {
                    0
                };
                *word &= mask;
            }
        }
        Self {
            wires: bus.wires,
            n_inputs: n,
            words,
            rows,
        }
    }

    pub fn wires(&self) -> usize {
        self.wires
    }

    pub fn case_count(&self) -> usize {
        1usize << self.n_inputs
    }

    pub fn words_per_row(&self) -> usize {
        self.words
    }

    pub fn row(&self, wire: usize) -> &[u64] {
        &self.rows[wire * self.words..(wire + 1) * self.words]
    }

    /// Value of `wire` on fitness case `case`.
    pub fn bit(&self, wire: usize, case: usize) -> bool {
        (self.row(wire)[case / 64] >> (case % 64)) & 1 == 1
    }

    /// `row[target] ^= row[a] & row[b]` over every word.
    #[inline]
    pub fn apply(&mut self, gate: Gate) {
        let w = self.words;
        let (t, a, b) = (gate.target() * w, gate.control_a() * w, gate.control_b() * w);
        for k in 0..w {
            self.rows[t + k] ^= self.rows[a + k] & self.rows[b + k];
        }
    }
}

/// Run every gate of the circuit over all fitness cases at once.
pub fn evaluate(circuit: &Circuit) -> TruthTableTrace {
    let mut trace = TruthTableTrace::initial(circuit.bus());
    for &g in circuit.gates() {
        trace.apply(g);
    }
    trace
}

/// Initial single-word rows for a bus with `n <= 6`.
pub(crate) fn initial_rows_word(bus: Bus) -> Vec<u64> {
    debug_assert!(bus.n_inputs <= 6);
    TruthTableTrace::initial(bus).rows
}

/// A bijection on the `2^N` bus states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BusPermutation {
    mapping: Vec<u32>,
}

impl BusPermutation {
    pub fn identity(wires: usize) -> Result<Self> {
        check_width(wires)?;
        Ok(Self {
            mapping: (0..1u32 << wires).collect(),
        })
    }

    /// Uniformly random permutation of all `2^N` states.
    pub fn random<R: Rng + ?Sized>(wires: usize, rng: &mut R) -> Result<Self> {
        let mut p = Self::identity(wires)?;
        p.mapping.shuffle(rng);
        Ok(p)
    }

    /// Wrap a mapping, checking that it is a bijection.
    pub fn from_mapping(mapping: Vec<u32>) -> Result<Self> {
        let p = Self { mapping };
        if !p.mapping.len().is_power_of_two() || !p.is_bijection() {
            return Err(Error::InvalidConfig("mapping is not a bus permutation".into()));
        }
        Ok(p)
    }

    pub fn mapping(&self) -> &[u32] {
        &self.mapping
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    #[inline]
    pub fn apply(&self, state: u64) -> u64 {
        self.mapping[state as usize] as u64
    }

    pub fn is_bijection(&self) -> bool {
        let mut seen = vec![false; self.mapping.len()];
        self.mapping.iter().all(|&s| {
            let s = s as usize;
            s < seen.len() && !std::mem::replace(&mut seen[s], true)
        })
    }

    /// `other ∘ self`: first `self`, then `other`.
    pub fn then(&self, other: &BusPermutation) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch("permutation sizes differ".into()));
        }
        Ok(Self {
            mapping: self.mapping.iter().map(|&s| other.mapping[s as usize]).collect(),
        })
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0u32; self.mapping.len()];
        for (s, &t) in self.mapping.iter().enumerate() {
            inv[t as usize] = s as u32;
        }
        Self { mapping: inv }
    }

    /// Truth-table rows obtained by feeding each fitness case of `bus`
    /// through the permutation.
    pub fn rows(&self, bus: Bus) -> Vec<Vec<bool>> {
        let outputs: Vec<u64> = (0..bus.cases() as u64)
            .map(|case| self.apply(bus.input_state(case)))
            .collect();
        (0..bus.wires)
            .map(|w| outputs.iter().map(|s| (s >> w) & 1 == 1).collect())
            .collect()
    }
}

fn check_width(wires: usize) -> Result<()> {
    if wires > PERMUTATION_WIRE_LIMIT {
        return Err(Error::BusTooWide {
            wires,
            limit: PERMUTATION_WIRE_LIMIT,
        });
    }
    Ok(())
}

/// The map from input bus state to output bus state, with wire 0 as the
/// least significant bit.
pub fn to_permutation(circuit: &Circuit) -> Result<BusPermutation> {
    check_width(circuit.wires())?;
    let mapping = (0..1u64 << circuit.wires())
        .map(|s| circuit.gates().iter().fold(s, |s, g| g.apply_state(s)) as u32)
        .collect();
    Ok(BusPermutation { mapping })
}
