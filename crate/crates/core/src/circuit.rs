// SPDX-License-Identifier: Apache-2.0

//! Circuits: a bus layout plus an ordered list of gates.
//!
//! Text format, one circuit per line:
//!
//! ```text
//! N:6 n:6 fill:1 ; T(1,4)>0 T(2,2)>5
//! ```
//!
//! `N` is the wire count, `n` the number of input wires (wires `0..n`) and
//! `fill` the constant fed to wires `n..N`. An optional `m:<outputs>` field
//! may follow `fill`; it defaults to 1. Each gate is written
//! `T(control_a,control_b)>target`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gate::{enumerate_gates, Gate, MAX_WIRES};

/// Wire layout shared by every circuit in an experiment.
///
/// Wire 0 is the least significant bit of a bus state. Inputs occupy wires
/// `0..n_inputs`; the remaining wires carry `constant_fill`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bus {
    pub wires: usize,
    pub n_inputs: usize,
    pub m_outputs: usize,
    pub constant_fill: bool,
}

impl Bus {
    pub fn new(wires: usize, n_inputs: usize, m_outputs: usize, constant_fill: bool) -> Result<Self> {
        if wires > MAX_WIRES {
            return Err(Error::WireOutOfRange {
                wire: wires - 1,
                wires: MAX_WIRES,
            });
        }
        if n_inputs > wires {
            return Err(Error::TooManyInputs {
                inputs: n_inputs,
                wires,
            });
        }
        if m_outputs > wires {
            return Err(Error::DimensionMismatch(format!(
                "{m_outputs} outputs on {wires} wires"
            )));
        }
        Ok(Self {
            wires,
            n_inputs,
            m_outputs,
            constant_fill,
        })
    }

    /// The six-multiplexor layout: six inputs, one output, constant-1
    /// spare wires.
    pub fn six_mux(wires: usize) -> Result<Self> {
        Self::new(wires, 6, 1, true)
    }

    /// Number of fitness cases, `2^n`.
    pub fn cases(&self) -> usize {
        1usize << self.n_inputs
    }

    /// Full bus state fed in for fitness case `case`.
    pub fn input_state(&self, case: u64) -> u64 {
        let constants = if self.constant_fill {
            let all = if self.wires >= 64 {
                u64::MAX
            } else {
                (1u64 << self.wires) - 1
            };
            all & !((1u64 << self.n_inputs) - 1)
        } else {
            0
        };
        case | constants
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Circuit {
    bus: Bus,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(bus: Bus, gates: Vec<Gate>) -> Result<Self> {
        for g in &gates {
            if g.span() > bus.wires {
                return Err(Error::WireOutOfRange {
                    wire: g.span() - 1,
                    wires: bus.wires,
                });
            }
        }
        Ok(Self { bus, gates })
    }

    pub fn empty(bus: Bus) -> Self {
        Self {
            bus,
            gates: Vec::new(),
        }
    }

    pub fn bus(&self) -> Bus {
        self.bus
    }

    pub fn wires(&self) -> usize {
        self.bus.wires
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub(crate) fn gates_mut(&mut self) -> &mut [Gate] {
        &mut self.gates
    }

    /// `self` followed by `other`. Both must share a bus.
    pub fn concat(&self, other: &Circuit) -> Result<Circuit> {
        if self.bus != other.bus {
            return Err(Error::DimensionMismatch(
                "cannot concatenate circuits on different buses".into(),
            ));
        }
        let mut gates = self.gates.clone();
        gates.extend_from_slice(&other.gates);
        Ok(Circuit {
            bus: self.bus,
            gates,
        })
    }

    /// Gates in reverse order. Since every CCNOT is its own inverse this
    /// is the inverse circuit.
    pub fn reversed(&self) -> Circuit {
        let mut gates = self.gates.clone();
        gates.reverse();
        Circuit {
            bus: self.bus,
            gates,
        }
    }

    /// Parse every non-blank line of `text`; `#` starts a comment.
    pub fn parse_many(text: &str) -> Result<Vec<Circuit>> {
        let mut out = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("");
            if line.trim().is_empty() {
                continue;
            }
            out.push(parse_line(line, idx + 1)?);
        }
        Ok(out)
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bus = &self.bus;
        write!(
            f,
            "N:{} n:{} fill:{}",
            bus.wires, bus.n_inputs, bus.constant_fill as u8
        )?;
        if bus.m_outputs != 1 {
            write!(f, " m:{}", bus.m_outputs)?;
        }
        f.write_str(" ;")?;
        for g in &self.gates {
            write!(f, " {g}")?;
        }
        Ok(())
    }
}

impl FromStr for Circuit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_line(s, 1)
    }
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Whitespace-separated tokens with their 1-based starting columns.
fn tokens(s: &str, offset: usize) -> impl Iterator<Item = (usize, &str)> {
    let mut rest = s;
    let mut col = offset;
    std::iter::from_fn(move || {
        let trimmed = rest.trim_start();
        col += rest.len() - trimmed.len();
        if trimmed.is_empty() {
            return None;
        }
        let end = trimmed.find(char::is_whitespace).unwrap_or(trimmed.len());
        let tok = &trimmed[..end];
        let start = col;
        col += end;
        rest = &trimmed[end..];
        Some((start + 1, tok))
    })
}

fn parse_line(line: &str, lineno: usize) -> Result<Circuit> {
    let semi = line
        .find(';')
        .ok_or_else(|| parse_err(lineno, line.len() + 1, "missing ';' after header"))?;
    let (header, body) = (&line[..semi], &line[semi + 1..]);

    let (mut wires, mut inputs, mut fill, mut outputs) = (None, None, None, 1usize);
    for (col, tok) in tokens(header, 0) {
        let (key, value) = tok
            .split_once(':')
            .ok_or_else(|| parse_err(lineno, col, format!("expected key:value, found '{tok}'")))?;
        let value: usize = value
            .parse()
            .map_err(|_| parse_err(lineno, col + key.len() + 1, format!("bad number '{value}'")))?;
        match key {
            "N" => wires = Some(value),
            "n" => inputs = Some(value),
            "m" => outputs = value,
            "fill" if value <= 1 => fill = Some(value == 1),
            "fill" => return Err(parse_err(lineno, col + 5, "fill must be 0 or 1")),
            _ => return Err(parse_err(lineno, col, format!("unknown field '{key}'"))),
        }
    }
    let wires = wires.ok_or_else(|| parse_err(lineno, 1, "missing N:<wires>"))?;
    let inputs = inputs.ok_or_else(|| parse_err(lineno, 1, "missing n:<inputs>"))?;
    let fill = fill.ok_or_else(|| parse_err(lineno, 1, "missing fill:<0|1>"))?;
    let bus = Bus::new(wires, inputs, outputs, fill).map_err(|e| parse_err(lineno, 1, e.to_string()))?;

    let mut gates = Vec::new();
    for (col, tok) in tokens(body, semi + 1) {
        gates.push(parse_gate(tok, wires).map_err(|msg| parse_err(lineno, col, msg))?);
    }
    Ok(Circuit { bus, gates })
}

fn parse_gate(tok: &str, wires: usize) -> std::result::Result<Gate, String> {
    let bad = || format!("expected T(a,b)>t, found '{tok}'");
    let inner = tok.strip_prefix("T(").ok_or_else(bad)?;
    let (controls, target) = inner.split_once(")>").ok_or_else(bad)?;
    let (a, b) = controls.split_once(',').ok_or_else(bad)?;
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    let (a, b, t) = (num(a)?, num(b)?, num(target)?);
    if let Some(&w) = [t, a, b].iter().find(|&&w| w >= wires) {
        return Err(format!("wire {w} out of range for a {wires}-wire bus"));
    }
    Gate::new(t, a, b).map_err(|e| format!("illegal gate '{tok}': {e}"))
}

/// All legal gates of a bus, kept for fast uniform sampling.
#[derive(Debug, Clone)]
pub struct GateSet {
    gates: Vec<Gate>,
}

impl GateSet {
    pub fn new(wires: usize) -> Result<Self> {
        Ok(Self {
            gates: enumerate_gates(wires)?,
        })
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Gate {
        self.gates[rng.random_range(0..self.gates.len() as u32) as usize]
    }
}

/// A circuit of `length` gates, each drawn independently and uniformly
/// from the legal gates of the bus.
pub fn random_circuit<R: Rng + ?Sized>(bus: Bus, length: usize, rng: &mut R) -> Result<Circuit> {
    let set = GateSet::new(bus.wires)?;
    Ok(random_circuit_from(&set, bus, length, rng))
}

pub(crate) fn random_circuit_from<R: Rng + ?Sized>(
    set: &GateSet,
    bus: Bus,
    length: usize,
    rng: &mut R,
) -> Circuit {
    let gates = (0..length).map(|_| set.sample(rng)).collect();
    Circuit { bus, gates }
}
