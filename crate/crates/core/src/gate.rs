// SPDX-License-Identifier: Apache-2.0

//! The CCNOT (Toffoli) gate and the legal gate set of a bus.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest bus the crate represents; wire indices are stored as `u8`.
pub const MAX_WIRES: usize = 255;

/// One CCNOT placement: `target ^= control_a & control_b`.
///
/// The controls may share a wire, in which case the gate is a CNOT. The
/// target may not coincide with either control. Controls are stored in
/// canonical order (`control_a <= control_b`), so derived equality is
/// equality of the unordered control pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Gate {
    target: u8,
    control_a: u8,
    control_b: u8,
}

impl Gate {
    pub fn new(target: usize, control_a: usize, control_b: usize) -> Result<Self> {
        for wire in [target, control_a, control_b] {
            if wire >= MAX_WIRES {
                return Err(Error::WireOutOfRange {
                    wire,
                    wires: MAX_WIRES,
                });
            }
        }
        if target == control_a || target == control_b {
            return Err(Error::TargetIsControl(target));
        }
        let (lo, hi) = if control_a <= control_b {
            (control_a, control_b)
        } else {
            (control_b, control_a)
        };
        Ok(Self {
            target: target as u8,
            control_a: lo as u8,
            control_b: hi as u8,
        })
    }

    #[inline]
    pub fn target(self) -> usize {
        self.target as usize
    }

    #[inline]
    pub fn control_a(self) -> usize {
        self.control_a as usize
    }

    #[inline]
    pub fn control_b(self) -> usize {
        self.control_b as usize
    }

    /// Wires in slot order: target, first control, second control.
    #[inline]
    pub fn slots(self) -> [usize; 3] {
        [self.target(), self.control_a(), self.control_b()]
    }

    /// True when both controls sit on one wire (the gate acts as a CNOT).
    #[inline]
    pub fn is_cnot(self) -> bool {
        self.control_a == self.control_b
    }

    /// Largest wire index touched, plus one.
    pub fn span(self) -> usize {
        self.target.max(self.control_b) as usize + 1
    }

    /// Apply the gate to a bus state whose bit `i` is wire `i`.
    #[inline]
    pub fn apply_state(self, state: u64) -> u64 {
        let a = (state >> self.control_a) & 1;
        let b = (state >> self.control_b) & 1;
        state ^ ((a & b) << self.target)
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T({},{})>{}", self.control_a, self.control_b, self.target)
    }
}

/// Number of distinct canonical gates on a `wires`-wire bus.
pub fn gate_count(wires: usize) -> usize {
    if wires < 3 {
        return 0;
    }
    let others = wires - 1;
    wires * (others * (others - 1) / 2 + others)
}

/// Every distinct legal gate on the bus, ordered by target then controls.
pub fn enumerate_gates(wires: usize) -> Result<Vec<Gate>> {
    if wires < 3 {
        return Err(Error::TooFewWires(wires));
    }
    if wires > MAX_WIRES {
        return Err(Error::WireOutOfRange {
            wire: wires - 1,
            wires: MAX_WIRES,
        });
    }
    let mut gates = Vec::with_capacity(gate_count(wires));
    for target in 0..wires {
        for a in (0..wires).filter(|&a| a != target) {
            for b in (a..wires).filter(|&b| b != target) {
                gates.push(Gate::new(target, a, b)?);
            }
        }
    }
    Ok(gates)
}
