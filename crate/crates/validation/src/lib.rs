// SPDX-License-Identifier: Apache-2.0

//! Reference models written without the `revcirc` crate, used to check its
//! closed forms and its bit-parallel evaluator from the outside.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Running mean and population standard deviation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Moments {
    n: f64,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1.0;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.n
    }

    pub fn sd(&self) -> f64 {
        (self.sum_sq / self.n - self.mean().powi(2)).max(0.0).sqrt()
    }
}

/// |a - b| / |b|.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// The six-multiplexor: data D0..D3 on bits 0..3, address A0 A1 on bits 4, 5.
pub fn mux6(x: u64) -> u64 {
    let address = (x >> 4) & 3;
    (x >> address) & 1
}

/// Hamming fitness of a uniformly random bijection on `2^(n + spare)` bus
/// states. Inputs sit on the low `n` bits, spare bits are held at 1, and
/// output `j` is read from bit `j` and compared with bit `j` of `target`.
pub fn random_bijection_hamming(
    n: usize,
    m: usize,
    spare: usize,
    samples: usize,
    seed: u64,
    target: impl Fn(u64) -> u64,
) -> Moments {
    let wires = n + spare;
    let fill = ((1u64 << spare) - 1) << n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut states: Vec<u64> = (0..1u64 << wires).collect();
    let mut out = Moments::default();
    for _ in 0..samples {
        states.shuffle(&mut rng);
        let mut score = 0u32;
        for x in 0..1u64 << n {
            let y = states[(x | fill) as usize];
            let want = target(x);
            for j in 0..m {
                score += (((y ^ want) >> j) & 1 == 0) as u32;
            }
        }
        out.push(score as f64);
    }
    out
}

/// RMS error of a uniformly random `m`-bit answer `i` against a handful of
/// small expected answers: `sqrt(mean_t (i - y_t)^2)`.
pub fn rms_small_t(m: usize, expected: &[u64], samples: usize, seed: u64) -> Moments {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Moments::default();
    for _ in 0..samples {
        let i = rng.random_range(0..1u64 << m) as f64;
        let mse = expected.iter().map(|&y| (i - y as f64).powi(2)).sum::<f64>() / expected.len() as f64;
        out.push(mse.sqrt());
    }
    out
}

/// Per-case error `|X - Y|` when both the answer and the expected value are
/// uniform over `0..2^m`.
pub fn rms_uniform_case(m: usize, samples: usize, seed: u64) -> Moments {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Moments::default();
    for _ in 0..samples {
        let x = rng.random_range(0..1u64 << m) as f64;
        let y = rng.random_range(0..1u64 << m) as f64;
        out.push((x - y).abs());
    }
    out
}

/// Runs a gate list `(target, control_a, control_b)` on one bus state held
/// as a vector of booleans.
pub fn run_gates(gates: &[(usize, usize, usize)], mut bus: Vec<bool>) -> Vec<bool> {
    for &(t, a, b) in gates {
        if bus[a] && bus[b] {
            bus[t] = !bus[t];
        }
    }
    bus
}

/// Case-by-case six-multiplexor score of a gate list, read on `output`.
/// Spare wires (6 and up) start at 1.
pub fn six_mux_score(gates: &[(usize, usize, usize)], wires: usize, output: usize) -> u32 {
    (0..64u64)
        .filter(|&x| {
            let bus: Vec<bool> = (0..wires).map(|w| if w < 6 { (x >> w) & 1 == 1 } else { true }).collect();
            run_gates(gates, bus)[output] == (mux6(x) == 1)
        })
        .count() as u32
}
