// SPDX-License-Identifier: Apache-2.0

//! Target truth tables and the fitness of a circuit against them.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::circuit::{Bus, Circuit};
use crate::error::{Error, Result};
use crate::trace::{case_mask, evaluate, TruthTableTrace};

/// Desired output bits for every fitness case, one packed row per output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetTable {
    n_inputs: usize,
    m_outputs: usize,
    rows: Vec<Vec<u64>>,
}

impl TargetTable {
    /// Build from a function of the case index returning the output bits
    /// (bit `j` is output `j`).
    pub fn from_fn(n_inputs: usize, m_outputs: usize, f: impl Fn(u64) -> u64) -> Self {
        let words = words_for(n_inputs);
        let mut rows = vec![vec![0u64; words]; m_outputs];
        for case in 0..1u64 << n_inputs {
            let out = f(case);
            for (j, row) in rows.iter_mut().enumerate() {
                if (out >> j) & 1 == 1 {
                    row[(case / 64) as usize] |= 1 << (case % 64);
                }
            }
        }
        Self {
            n_inputs,
            m_outputs,
            rows,
        }
    }

    /// The table a circuit actually computes on the given output wires.
    pub fn realized_by(circuit: &Circuit, outputs: &OutputMap) -> Result<Self> {
        outputs.check(circuit.wires())?;
        let trace = evaluate(circuit);
        Ok(Self {
            n_inputs: circuit.bus().n_inputs,
            m_outputs: outputs.len(),
            rows: outputs.wires().iter().map(|&w| trace.row(w).to_vec()).collect(),
        })
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn m_outputs(&self) -> usize {
        self.m_outputs
    }

    pub fn cases(&self) -> usize {
        1 << self.n_inputs
    }

    /// Largest possible Hamming score, `m * 2^n`.
    pub fn max_fitness(&self) -> u64 {
        (self.m_outputs as u64) << self.n_inputs
    }

    pub fn row(&self, output: usize) -> &[u64] {
        &self.rows[output]
    }

    pub fn bit(&self, output: usize, case: usize) -> bool {
        (self.rows[output][case / 64] >> (case % 64)) & 1 == 1
    }

    /// Desired outputs of one case as an integer.
    pub fn answer(&self, case: usize) -> u64 {
        (0..self.m_outputs).fold(0, |acc, j| acc | (self.bit(j, case) as u64) << j)
    }

    /// Header `n m`, then one line of `m` space-separated bits per case.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.n_inputs, self.m_outputs);
        for case in 0..self.cases() {
            let bits: Vec<&str> = (0..self.m_outputs)
                .map(|j| if self.bit(j, case) { "1" } else { "0" })
                .collect();
            let _ = writeln!(out, "{}", bits.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            line,
            column: 1,
            message,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| err(1, "empty target table".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| err(1, format!("bad header '{header}'"))))
            .collect::<Result<_>>()?;
        let [n, m] = dims[..] else {
            return Err(err(1, "header must be 'n m'".into()));
        };
        if n > 24 {
            return Err(err(1, format!("{n} inputs is too many")));
        }
        let mut answers = Vec::with_capacity(1 << n);
        for (idx, line) in lines {
            let bits: Vec<&str> = line.split_whitespace().collect();
            if bits.len() != m {
                return Err(err(idx + 1, format!("expected {m} bits, found {}", bits.len())));
            }
            let mut value = 0u64;
            for (j, b) in bits.iter().enumerate() {
                match *b {
                    "0" => {}
                    "1" => value |= 1 << j,
                    other => return Err(err(idx + 1, format!("'{other}' is not a bit"))),
                }
            }
            answers.push(value);
        }
        if answers.len() != 1 << n {
            return Err(Error::DimensionMismatch(format!(
                "expected {} cases, found {}",
                1usize << n,
                answers.len()
            )));
        }
        Ok(Self::from_fn(n, m, |case| answers[case as usize]))
    }
}

fn words_for(n_inputs: usize) -> usize {
    if n_inputs <= 6 {
        1
    } else {
        1 << (n_inputs - 6)
    }
}

/// The six-multiplexor: inputs `D0 D1 D2 D3 A0 A1` on case bits 0..6,
/// output `D[2*A1 + A0]`.
pub fn six_multiplexor_target() -> TargetTable {
    TargetTable::from_fn(6, 1, |case| {
        let select = ((case >> 4) & 1) | (((case >> 5) & 1) << 1);
        (case >> select) & 1
    })
}

/// Which wire each output is read from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OutputMap {
    wires: Vec<usize>,
}

impl OutputMap {
    pub fn new(wires: Vec<usize>) -> Result<Self> {
        let mut sorted = wires.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != wires.len() {
            return Err(Error::InvalidConfig("output wires must be distinct".into()));
        }
        Ok(Self { wires })
    }

    /// A single output read from `wire`.
    pub fn single(wire: usize) -> Self {
        Self { wires: vec![wire] }
    }

    pub fn wires(&self) -> &[usize] {
        &self.wires
    }

    pub fn len(&self) -> usize {
        self.wires.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wires.is_empty()
    }

    fn check(&self, wires: usize) -> Result<()> {
        match self.wires.iter().find(|&&w| w >= wires) {
            Some(&wire) => Err(Error::WireOutOfRange { wire, wires }),
            None => Ok(()),
        }
    }
}

impl Default for OutputMap {
    /// The six-multiplexor output on wire 0.
    fn default() -> Self {
        Self::single(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FitnessValue {
    pub raw: u64,
    pub max: u64,
}

impl FitnessValue {
    pub fn normalized(self) -> f64 {
        self.raw as f64 / self.max as f64
    }

    pub fn is_perfect(self) -> bool {
        self.raw == self.max
    }
}

fn check_dims(bus: Bus, target: &TargetTable, outputs: &OutputMap) -> Result<()> {
    if bus.n_inputs != target.n_inputs {
        return Err(Error::DimensionMismatch(format!(
            "circuit has {} inputs, target has {}",
            bus.n_inputs, target.n_inputs
        )));
    }
    if outputs.len() != target.m_outputs {
        return Err(Error::DimensionMismatch(format!(
            "{} output wires for a {}-output target",
            outputs.len(),
            target.m_outputs
        )));
    }
    outputs.check(bus.wires)
}

/// Matches between an evaluated trace and the target on the mapped wires.
pub fn score_trace(trace: &TruthTableTrace, target: &TargetTable, outputs: &OutputMap) -> u64 {
    let mask = case_mask(target.n_inputs);
    outputs
        .wires()
        .iter()
        .zip(&target.rows)
        .map(|(&wire, want)| {
            let got = trace.row(wire);
            let last = want.len() - 1;
            got.iter()
                .zip(want)
                .enumerate()
                .map(|(k, (g, t))| {
                    let m = if k == last { mask } else { u64::MAX };
                    (!(g ^ t) & m).count_ones() as u64
                })
                .sum::<u64>()
        })
        .sum()
}

/// Number of output bits, over all fitness cases, that match the target.
pub fn hamming_fitness(
    circuit: &Circuit,
    target: &TargetTable,
    outputs: &OutputMap,
) -> Result<FitnessValue> {
    check_dims(circuit.bus(), target, outputs)?;
    let trace = evaluate(circuit);
    Ok(FitnessValue {
        raw: score_trace(&trace, target, outputs),
        max: target.max_fitness(),
    })
}

/// Best single-output score over every wire of the bus, with the wire
/// that achieves it (lowest index on ties).
pub fn best_wire_fitness(circuit: &Circuit, target: &TargetTable) -> Result<(usize, FitnessValue)> {
    if target.m_outputs != 1 {
        return Err(Error::DimensionMismatch("best-wire scoring needs a single output".into()));
    }
    check_dims(circuit.bus(), target, &OutputMap::single(0))?;
    let trace = evaluate(circuit);
    let (wire, raw) = (0..circuit.wires())
        .map(|w| (w, score_trace(&trace, target, &OutputMap::single(w))))
        .fold((0, 0), |best, cur| if cur.1 > best.1 { cur } else { best });
    Ok((
        wire,
        FitnessValue {
            raw,
            max: target.max_fitness(),
        },
    ))
}

/// Case-by-case Hamming fitness: each fitness case is pushed through the
/// gates as a bus-state integer. Independent of the bit-parallel path.
pub fn hamming_fitness_scalar(
    circuit: &Circuit,
    target: &TargetTable,
    outputs: &OutputMap,
) -> Result<FitnessValue> {
    check_dims(circuit.bus(), target, outputs)?;
    if circuit.wires() > 64 {
        return Err(Error::BusTooWide {
            wires: circuit.wires(),
            limit: 64,
        });
    }
    let bus = circuit.bus();
    let mut raw = 0;
    for case in 0..target.cases() {
        let mut state = bus.input_state(case as u64);
        for g in circuit.gates() {
            state = g.apply_state(state);
        }
        for (j, &wire) in outputs.wires().iter().enumerate() {
            if ((state >> wire) & 1 == 1) == target.bit(j, case) {
                raw += 1;
            }
        }
    }
    Ok(FitnessValue {
        raw,
        max: target.max_fitness(),
    })
}

/// Which Hamming scores a six-input, single-output layout can reach.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParityClass {
    /// Only even scores: with no spare wire each output row is balanced,
    /// as is the six-multiplexor target.
    EvenOnly,
    All,
}

pub fn parity_of_reachable_fitness(wires: usize, n_inputs: usize) -> ParityClass {
    if wires <= n_inputs {
        ParityClass::EvenOnly
    } else {
        ParityClass::All
    }
}

/// Root mean squared error of the circuit's `m`-bit output, read from the
/// mapped wires (wire of output `j` is bit `j`), against integer answers.
pub fn rms_error(circuit: &Circuit, cases: &[(u64, u64)], outputs: &OutputMap) -> Result<f64> {
    if cases.is_empty() {
        return Err(Error::NoCases);
    }
    outputs.check(circuit.wires())?;
    if circuit.wires() > 64 {
        return Err(Error::BusTooWide {
            wires: circuit.wires(),
            limit: 64,
        });
    }
    let bus = circuit.bus();
    let m = outputs.len();
    let mut sum = 0.0;
    for &(input, answer) in cases {
        if input >> bus.n_inputs != 0 {
            return Err(Error::DimensionMismatch(format!(
                "input {input} needs more than {} bits",
                bus.n_inputs
            )));
        }
        if m < 64 && answer >> m != 0 {
            return Err(Error::DimensionMismatch(format!("answer {answer} needs more than {m} bits")));
        }
        let state = circuit
            .gates()
            .iter()
            .fold(bus.input_state(input), |s, g| g.apply_state(s));
        let value = outputs
            .wires()
            .iter()
            .enumerate()
            .fold(0u64, |acc, (j, &w)| acc | ((state >> w) & 1) << j);
        let diff = value as f64 - answer as f64;
        sum += diff * diff;
    }
    Ok((sum / cases.len() as f64).sqrt())
}
