// SPDX-License-Identifier: Apache-2.0

//! Large random-circuit experiments: fitness histograms per circuit
//! length, convergence towards the limiting distribution, solution
//! density, and exhaustive scans of short circuits.
//!
//! Samples are drawn in fixed-size batches. Batch `b` of the `i`-th length
//! owns ChaCha8 stream `(i << 40) | b` of the configured seed, so results
//! are bit-identical for any worker count and across resumed runs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Gamma};

use crate::circuit::{Bus, Circuit, GateSet};
use crate::error::{Error, Result};
use crate::exec;
use crate::fitness::{score_trace, six_multiplexor_target, OutputMap, TargetTable};
use crate::gate::Gate;
use crate::theory::{total_variation_distance, LimitModel};
use crate::trace::{case_mask, initial_rows_word, TruthTableTrace};

/// Samples drawn from one RNG stream.
pub const BATCH_SIZE: u64 = 1 << 14;

/// Batches between checkpoint writes (about one million samples).
pub const CHECKPOINT_BATCHES: u64 = 62;

/// Solutions retained per length.
pub const KEEP_SOLUTIONS: usize = 16;

/// Default bound on the number of circuits an exhaustive scan enumerates.
pub const SCAN_LIMIT: u128 = 100_000_000;

/// How a single-output score is read off the bus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputScoring {
    /// Outputs read from fixed wires.
    Fixed(OutputMap),
    /// The best-scoring wire of each circuit (single-output targets).
    BestWire,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub bus: Bus,
    pub lengths: Vec<usize>,
    pub samples_per_length: u64,
    pub target: TargetTable,
    pub scoring: OutputScoring,
    pub seed: u64,
    /// Worker threads; 0 means one per available core.
    pub workers: usize,
}

impl ExperimentConfig {
    /// Six-multiplexor experiment scored on wire 0.
    pub fn six_mux(wires: usize, lengths: Vec<usize>, samples_per_length: u64, seed: u64) -> Result<Self> {
        let config = Self {
            bus: Bus::six_mux(wires)?,
            lengths,
            samples_per_length,
            target: six_multiplexor_target(),
            scoring: OutputScoring::Fixed(OutputMap::default()),
            seed,
            workers: 0,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples_per_length == 0 {
            return Err(Error::InvalidConfig("samples per length must be at least 1".into()));
        }
        if self.lengths.is_empty() {
            return Err(Error::InvalidConfig("no circuit lengths given".into()));
        }
        if self.lengths.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig("lengths must be strictly increasing".into()));
        }
        if self.bus.wires < 3 {
            return Err(Error::TooFewWires(self.bus.wires));
        }
        if self.target.n_inputs() != self.bus.n_inputs {
            return Err(Error::DimensionMismatch(format!(
                "bus has {} inputs, target has {}",
                self.bus.n_inputs,
                self.target.n_inputs()
            )));
        }
        match &self.scoring {
            OutputScoring::Fixed(map) => {
                if map.len() != self.target.m_outputs() {
                    return Err(Error::DimensionMismatch(format!(
                        "{} output wires for a {}-output target",
                        map.len(),
                        self.target.m_outputs()
                    )));
                }
                if let Some(&wire) = map.wires().iter().find(|&&w| w >= self.bus.wires) {
                    return Err(Error::WireOutOfRange {
                        wire,
                        wires: self.bus.wires,
                    });
                }
            }
            OutputScoring::BestWire if self.target.m_outputs() != 1 => {
                return Err(Error::DimensionMismatch("best-wire scoring needs a single output".into()));
            }
            OutputScoring::BestWire => {}
        }
        Ok(())
    }

    fn batches(&self) -> u64 {
        self.samples_per_length.div_ceil(BATCH_SIZE)
    }

    fn batch_len(&self, batch: u64) -> u64 {
        BATCH_SIZE.min(self.samples_per_length - batch * BATCH_SIZE)
    }
}

/// Counts of circuits per raw fitness at one circuit length.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitnessHistogram {
    pub length: usize,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl FitnessHistogram {
    pub fn new(length: usize, max_fitness: u64) -> Self {
        Self {
            length,
            counts: vec![0; max_fitness as usize + 1],
            total: 0,
        }
    }

    pub fn max_fitness(&self) -> usize {
        self.counts.len() - 1
    }

    pub fn record(&mut self, fitness: u64) {
        self.counts[fitness as usize] += 1;
        self.total += 1;
    }

    pub fn merge(&mut self, other: &FitnessHistogram) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total += other.total;
    }

    pub fn mean(&self) -> f64 {
        let sum: f64 = self.counts.iter().enumerate().map(|(f, &c)| f as f64 * c as f64).sum();
        sum / self.total as f64
    }

    /// Population standard deviation.
    pub fn sd(&self) -> f64 {
        let mean = self.mean();
        let ss: f64 = self
            .counts
            .iter()
            .enumerate()
            .map(|(f, &c)| (f as f64 - mean).powi(2) * c as f64)
            .sum();
        (ss / self.total as f64).sqrt()
    }

    pub fn pmf(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.total as f64).collect()
    }

    pub fn odd_count(&self) -> u64 {
        self.counts.iter().skip(1).step_by(2).sum()
    }

    /// Circuits scoring the maximum.
    pub fn solutions(&self) -> u64 {
        self.counts[self.max_fitness()]
    }
}

/// Histograms plus a few of the perfect circuits encountered.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingRun {
    pub histograms: Vec<FitnessHistogram>,
    pub solutions: Vec<Vec<Circuit>>,
}

/// Evaluation state shared by every batch of an experiment.
struct Sampler<'a> {
    config: &'a ExperimentConfig,
    gates: GateSet,
    word_rows: Option<Vec<u64>>,
    mask: u64,
    max: u64,
}

impl<'a> Sampler<'a> {
    fn new(config: &'a ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let word_rows = (config.bus.n_inputs <= 6).then(|| initial_rows_word(config.bus));
        Ok(Self {
            config,
            gates: GateSet::new(config.bus.wires)?,
            word_rows,
            mask: case_mask(config.bus.n_inputs),
            max: config.target.max_fitness(),
        })
    }

    #[inline]
    fn score_words(&self, rows: &[u64]) -> u64 {
        let target = &self.config.target;
        let matches = |wire: usize, j: usize| (!(rows[wire] ^ target.row(j)[0]) & self.mask).count_ones() as u64;
        match &self.config.scoring {
            OutputScoring::Fixed(map) => map.wires().iter().enumerate().map(|(j, &w)| matches(w, j)).sum(),
            OutputScoring::BestWire => (0..rows.len()).map(|w| matches(w, 0)).max().unwrap_or(0),
        }
    }

    fn score_trace(&self, trace: &TruthTableTrace) -> u64 {
        let target = &self.config.target;
        match &self.config.scoring {
            OutputScoring::Fixed(map) => score_trace(trace, target, map),
            OutputScoring::BestWire => (0..trace.wires())
                .map(|w| score_trace(trace, target, &OutputMap::single(w)))
                .max()
                .unwrap_or(0),
        }
    }

    fn run_batch(&self, length_index: usize, batch: u64) -> (FitnessHistogram, Vec<Circuit>) {
        let length = self.config.lengths[length_index];
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(((length_index as u64) << 40) | batch);
        let mut hist = FitnessHistogram::new(length, self.max);
        let mut found = Vec::new();
        let mut circuit = vec![Gate::new(0, 1, 2).expect("legal gate"); length];
        let count = self.config.batch_len(batch);

        match &self.word_rows {
            Some(init) => {
                let mut rows = init.clone();
                for _ in 0..count {
                    rows.copy_from_slice(init);
                    for slot in circuit.iter_mut() {
                        let g = self.gates.sample(&mut rng);
                        *slot = g;
                        rows[g.target()] ^= rows[g.control_a()] & rows[g.control_b()];
                    }
                    let f = self.score_words(&rows);
                    hist.record(f);
                    if f == self.max && found.len() < KEEP_SOLUTIONS {
                        found.push(Circuit::new(self.config.bus, circuit.clone()).expect("sampled gates fit the bus"));
                    }
                }
            }
            None => {
                for _ in 0..count {
                    let mut trace = TruthTableTrace::initial(self.config.bus);
                    for slot in circuit.iter_mut() {
                        let g = self.gates.sample(&mut rng);
                        *slot = g;
                        trace.apply(g);
                    }
                    let f = self.score_trace(&trace);
                    hist.record(f);
                    if f == self.max && found.len() < KEEP_SOLUTIONS {
                        found.push(Circuit::new(self.config.bus, circuit.clone()).expect("sampled gates fit the bus"));
                    }
                }
            }
        }
        (hist, found)
    }

    /// Run batches `start..end` of one length and fold them in order.
    fn run_range(&self, length_index: usize, start: u64, end: u64, hist: &mut FitnessHistogram, found: &mut Vec<Circuit>) {
        let parts = exec::map_indexed((end - start) as usize, self.config.workers, |i| {
            self.run_batch(length_index, start + i as u64)
        });
        for (h, sols) in parts {
            hist.merge(&h);
            for c in sols {
                if found.len() < KEEP_SOLUTIONS {
                    found.push(c);
                }
            }
        }
    }
}

/// Draw `samples_per_length` random circuits at every configured length
/// and histogram their fitness.
pub fn sample_distribution(config: &ExperimentConfig) -> Result<Vec<FitnessHistogram>> {
    Ok(run_sampling(config, None)?.histograms)
}

#[derive(Debug, Serialize, Deserialize)]
struct Checkpoint {
    config: ExperimentConfig,
    progress: Vec<LengthProgress>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LengthProgress {
    batches_done: u64,
    histogram: FitnessHistogram,
    solutions: Vec<String>,
}

/// Sampling with optional on-disk progress. With a checkpoint path the
/// state is rewritten every [`CHECKPOINT_BATCHES`] batches, and a run
/// restarted with the same configuration resumes where it stopped.
pub fn run_sampling(config: &ExperimentConfig, checkpoint: Option<&Path>) -> Result<SamplingRun> {
    let sampler = Sampler::new(config)?;
    let fresh = || Checkpoint {
        config: config.clone(),
        progress: config
            .lengths
            .iter()
            .map(|&l| LengthProgress {
                batches_done: 0,
                histogram: FitnessHistogram::new(l, sampler.max),
                solutions: Vec::new(),
            })
            .collect(),
    };
    let mut state = match checkpoint {
        Some(path) if path.exists() => {
            let saved: Checkpoint = serde_json::from_str(&fs::read_to_string(path)?)
                .map_err(|e| Error::InvalidConfig(format!("unreadable checkpoint: {e}")))?;
            // Worker count does not affect results.
            let mut theirs = saved.config.clone();
            theirs.workers = config.workers;
            if &theirs != config {
                return Err(Error::InvalidConfig(format!(
                    "checkpoint {} belongs to a different experiment",
                    path.display()
                )));
            }
            saved
        }
        _ => fresh(),
    };

    let total_batches = config.batches();
    for li in 0..state.progress.len() {
        let mut found: Vec<Circuit> = state.progress[li]
            .solutions
            .iter()
            .map(|s| s.parse())
            .collect::<Result<_>>()?;
        while state.progress[li].batches_done < total_batches {
            let done = state.progress[li].batches_done;
            let step = if checkpoint.is_some() { CHECKPOINT_BATCHES } else { total_batches };
            let end = (done + step).min(total_batches);
            let progress = &mut state.progress[li];
            sampler.run_range(li, done, end, &mut progress.histogram, &mut found);
            progress.batches_done = end;
            progress.solutions = found.iter().map(|c| c.to_string()).collect();
            if let Some(path) = checkpoint {
                write_checkpoint(path, &state)?;
            }
        }
    }
    if let Some(path) = checkpoint {
        write_checkpoint(path, &state)?;
    }

    let mut histograms = Vec::with_capacity(state.progress.len());
    let mut solutions = Vec::with_capacity(state.progress.len());
    for p in state.progress {
        solutions.push(p.solutions.iter().map(|s| s.parse()).collect::<Result<_>>()?);
        histograms.push(p.histogram);
    }
    Ok(SamplingRun { histograms, solutions })
}

fn write_checkpoint(path: &Path, state: &Checkpoint) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, serde_json::to_string(state).expect("checkpoint serializes"))?;
    fs::rename(tmp, path)?;
    Ok(())
}

/// `length,fitness,count` rows with a header.
pub fn histograms_csv(histograms: &[FitnessHistogram]) -> String {
    let mut out = String::from("length,fitness,count\n");
    for h in histograms {
        for (f, c) in h.counts.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", h.length, f, c);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub length: usize,
    pub mean: f64,
    pub sd: f64,
    pub tvd: f64,
    /// Delta-method standard error of `tvd` under multinomial sampling.
    pub tvd_se: f64,
    pub solutions: u64,
    pub total: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSeries {
    pub points: Vec<SeriesPoint>,
}

impl ConvergenceSeries {
    /// True when no step increases the TVD by more than `sigmas` combined
    /// standard errors.
    pub fn is_non_increasing(&self, sigmas: f64) -> bool {
        self.points.windows(2).all(|w| {
            let slack = sigmas * (w[0].tvd_se.powi(2) + w[1].tvd_se.powi(2)).sqrt();
            w[1].tvd <= w[0].tvd + slack
        })
    }

    /// `length,mean,sd,tvd,solutions,total` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("length,mean,sd,tvd,solutions,total\n");
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{:.6},{:.6},{:.6},{},{}",
                p.length, p.mean, p.sd, p.tvd, p.solutions, p.total
            );
        }
        out
    }
}

/// Per-length moments, distance to the limit, and solution counts.
pub fn convergence_series(histograms: &[FitnessHistogram], limit: &LimitModel) -> Result<ConvergenceSeries> {
    let target = limit
        .pmf
        .as_ref()
        .ok_or_else(|| Error::InvalidDistribution("limit has no materialized pmf".into()))?;
    let points = histograms
        .iter()
        .map(|h| {
            if h.counts.len() != target.len() {
                return Err(Error::InvalidDistribution(format!(
                    "histogram has {} bins, limit has {}",
                    h.counts.len(),
                    target.len()
                )));
            }
            let pmf = h.pmf();
            let tvd = total_variation_distance(&pmf, target)?;
            let signs: Vec<f64> = pmf
                .iter()
                .zip(target)
                .map(|(p, q)| if p > q { 0.5 } else if p < q { -0.5 } else { 0.0 })
                .collect();
            let first: f64 = signs.iter().zip(&pmf).map(|(s, p)| s * p).sum();
            let second: f64 = signs.iter().zip(&pmf).map(|(s, p)| s * s * p).sum();
            let tvd_se = ((second - first * first).max(0.0) / h.total as f64).sqrt();
            Ok(SeriesPoint {
                length: h.length,
                mean: h.mean(),
                sd: h.sd(),
                tvd,
                tvd_se,
                solutions: h.solutions(),
                total: h.total,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ConvergenceSeries { points })
}

/// Exact (Garwood) two-sided confidence interval for a Poisson mean given
/// `count` observed events.
pub fn poisson_interval(count: u64, confidence: f64) -> (f64, f64) {
    let alpha = 1.0 - confidence;
    let lower = if count == 0 {
        0.0
    } else {
        Gamma::new(count as f64, 1.0)
            .expect("positive shape")
            .inverse_cdf(alpha / 2.0)
    };
    let upper = Gamma::new(count as f64 + 1.0, 1.0)
        .expect("positive shape")
        .inverse_cdf(1.0 - alpha / 2.0);
    (lower, upper)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityPoint {
    pub length: usize,
    pub solutions: u64,
    pub total: u64,
    pub rate: f64,
    /// 95% Poisson interval on the rate.
    pub rate_low: f64,
    pub rate_high: f64,
}

impl DensityPoint {
    pub fn contains(&self, rate: f64) -> bool {
        (self.rate_low..=self.rate_high).contains(&rate)
    }
}

/// Rate of perfect circuits per length with exact Poisson 95% intervals.
pub fn solution_density(config: &ExperimentConfig) -> Result<Vec<DensityPoint>> {
    Ok(density_points(&sample_distribution(config)?))
}

pub fn density_points(histograms: &[FitnessHistogram]) -> Vec<DensityPoint> {
    histograms
        .iter()
        .map(|h| {
            let k = h.solutions();
            let (lo, hi) = poisson_interval(k, 0.95);
            let n = h.total as f64;
            DensityPoint {
                length: h.length,
                solutions: k,
                total: h.total,
                rate: k as f64 / n,
                rate_low: lo / n,
                rate_high: hi / n,
            }
        })
        .collect()
}

pub fn density_csv(points: &[DensityPoint]) -> String {
    let mut out = String::from("length,solutions,total,rate,rate_low,rate_high\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{:e},{:e},{:e}",
            p.length, p.solutions, p.total, p.rate, p.rate_low, p.rate_high
        );
    }
    out
}

#[derive(Debug, Clone)]
pub struct ScanOptions {
    /// Skip a gate identical to its predecessor (the pair cancels).
    pub prune: bool,
    pub limit: u128,
    pub workers: usize,
    /// Candidate output wires; `None` tries every wire.
    pub output_wires: Option<Vec<usize>>,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            prune: true,
            limit: SCAN_LIMIT,
            workers: 0,
            output_wires: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanRow {
    pub length: usize,
    pub circuits: u64,
    /// Perfect circuits per candidate output wire.
    pub solutions_per_wire: Vec<u64>,
    /// Best single-wire score among circuits of this length.
    pub best_fitness: u64,
    /// First solution in enumeration order, if any.
    pub example: Option<Circuit>,
}

impl ScanRow {
    fn new(length: usize, wires: usize) -> Self {
        Self {
            length,
            circuits: 0,
            solutions_per_wire: vec![0; wires],
            best_fitness: 0,
            example: None,
        }
    }

    pub fn solutions(&self) -> u64 {
        self.solutions_per_wire.iter().sum()
    }

    fn merge(&mut self, other: ScanRow) {
        self.circuits += other.circuits;
        for (a, b) in self.solutions_per_wire.iter_mut().zip(other.solutions_per_wire) {
            *a += b;
        }
        self.best_fitness = self.best_fitness.max(other.best_fitness);
        if self.example.is_none() {
            self.example = other.example;
        }
    }
}

/// Exhaustive count of single-output solutions at every length up to
/// `max_length`, trying every output wire, with adjacent-duplicate pruning.
pub fn exhaustive_min_scan(bus: Bus, max_length: usize, target: &TargetTable) -> Result<Vec<ScanRow>> {
    exhaustive_scan(bus, max_length, target, &ScanOptions::default())
}

struct Scan<'a> {
    bus: Bus,
    gates: &'a [Gate],
    target: u64,
    mask: u64,
    candidates: Vec<usize>,
    prune: bool,
    max_length: usize,
}

impl Scan<'_> {
    fn record(&self, rows: &[u64], path: &[Gate], row: &mut ScanRow) {
        row.circuits += 1;
        for (slot, &w) in self.candidates.iter().enumerate() {
            let score = (!(rows[w] ^ self.target) & self.mask).count_ones() as u64;
            row.best_fitness = row.best_fitness.max(score);
            if rows[w] & self.mask == self.target {
                row.solutions_per_wire[slot] += 1;
                if row.example.is_none() {
                    row.example = Some(Circuit::new(self.bus, path.to_vec()).expect("scan gates fit the bus"));
                }
            }
        }
    }

    fn descend(&self, stack: &mut [u64], path: &mut Vec<Gate>, out: &mut [ScanRow]) {
        let depth = path.len();
        let w = self.bus.wires;
        let last = path.last().copied();
        for &g in self.gates {
            if self.prune && last == Some(g) {
                continue;
            }
            let (current, next) = stack[depth * w..(depth + 2) * w].split_at_mut(w);
            next.copy_from_slice(current);
            next[g.target()] ^= next[g.control_a()] & next[g.control_b()];
            path.push(g);
            self.record(&stack[(depth + 1) * w..(depth + 2) * w], path, &mut out[depth + 1]);
            if depth + 1 < self.max_length {
                self.descend(stack, path, out);
            }
            path.pop();
        }
    }
}

/// [`exhaustive_min_scan`] with explicit options.
pub fn exhaustive_scan(bus: Bus, max_length: usize, target: &TargetTable, options: &ScanOptions) -> Result<Vec<ScanRow>> {
    if target.m_outputs() != 1 || target.n_inputs() != bus.n_inputs || bus.n_inputs > 6 {
        return Err(Error::DimensionMismatch(
            "exhaustive scan needs a single-output target of at most 6 inputs matching the bus".into(),
        ));
    }
    let gates = crate::gate::enumerate_gates(bus.wires)?;
    let circuits = (gates.len() as u128).saturating_pow(max_length as u32);
    if circuits > options.limit {
        return Err(Error::EnumerationTooLarge {
            circuits,
            limit: options.limit,
        });
    }
    let candidates = match &options.output_wires {
        Some(w) => {
            if let Some(&wire) = w.iter().find(|&&x| x >= bus.wires) {
                return Err(Error::WireOutOfRange { wire, wires: bus.wires });
            }
            w.clone()
        }
        None => (0..bus.wires).collect(),
    };
    let scan = Scan {
        bus,
        gates: &gates,
        target: target.row(0)[0],
        mask: case_mask(bus.n_inputs),
        candidates,
        prune: options.prune,
        max_length,
    };
    let init = initial_rows_word(bus);
    let wires = bus.wires;
    let fresh_rows = || -> Vec<ScanRow> { (0..=max_length).map(|l| ScanRow::new(l, scan.candidates.len())).collect() };

    let mut rows = fresh_rows();
    scan.record(&init, &[], &mut rows[0]);
    if max_length == 0 {
        return Ok(rows);
    }
    let parts = exec::map_indexed(gates.len(), options.workers, |i| {
        let mut local = fresh_rows();
        let mut stack = vec![0u64; (max_length + 1) * wires];
        let g = gates[i];
        stack[..wires].copy_from_slice(&init);
        stack[wires..2 * wires].copy_from_slice(&init);
        stack[wires + g.target()] ^= stack[wires + g.control_a()] & stack[wires + g.control_b()];
        let mut path = vec![g];
        scan.record(&stack[wires..2 * wires], &path, &mut local[1]);
        if max_length > 1 {
            scan.descend(&mut stack, &mut path, &mut local);
        }
        local
    });
    for part in parts {
        for (row, p) in rows.iter_mut().zip(part) {
            row.merge(p);
        }
    }
    Ok(rows)
}

/// Correlation between the bits of two wires over every fitness case of
/// `samples` random circuits of the given length.
pub fn output_bit_correlation(bus: Bus, length: usize, samples: u64, seed: u64, wire_a: usize, wire_b: usize) -> Result<f64> {
    if wire_a >= bus.wires || wire_b >= bus.wires {
        return Err(Error::WireOutOfRange {
            wire: wire_a.max(wire_b),
            wires: bus.wires,
        });
    }
    let set = GateSet::new(bus.wires)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sa, mut sb, mut sab, mut n) = (0f64, 0f64, 0f64, 0f64);
    for _ in 0..samples {
        let mut trace = TruthTableTrace::initial(bus);
        for _ in 0..length {
            trace.apply(set.sample(&mut rng));
        }
        for case in 0..trace.case_count() {
            let a = trace.bit(wire_a, case) as u8 as f64;
            let b = trace.bit(wire_b, case) as u8 as f64;
            sa += a;
            sb += b;
            sab += a * b;
            n += 1.0;
        }
    }
    let (ma, mb) = (sa / n, sb / n);
    let cov = sab / n - ma * mb;
    let denom = (ma * (1.0 - ma) * mb * (1.0 - mb)).sqrt();
    Ok(if denom == 0.0 { 0.0 } else { cov / denom })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitness::hamming_fitness_scalar;
    use crate::theory::{binomial_limit, finite_bus_limit};
    use rand::Rng;

    fn small(wires: usize, lengths: Vec<usize>, samples: u64) -> ExperimentConfig {
        ExperimentConfig::six_mux(wires, lengths, samples, 99).unwrap()
    }

    #[test]
    fn results_do_not_depend_on_worker_count() {
        let mut a = small(7, vec![5, 20], 3 * BATCH_SIZE + 17);
        let mut b = a.clone();
        a.workers = 1;
        b.workers = 3;
        assert_eq!(sample_distribution(&a).unwrap(), sample_distribution(&b).unwrap());
    }

    #[test]
    fn seeds_change_results() {
        let a = small(7, vec![20], 5000);
        let mut b = a.clone();
        b.seed += 1;
        assert_ne!(sample_distribution(&a).unwrap(), sample_distribution(&b).unwrap());
    }

    #[test]
    fn histogram_totals_match_sample_count() {
        let hists = sample_distribution(&small(6, vec![1, 7, 30], 12_345)).unwrap();
        for h in &hists {
            assert_eq!(h.total, 12_345);
            assert_eq!(h.counts.iter().sum::<u64>(), 12_345);
            assert_eq!(h.counts.len(), 65);
        }
    }

    #[test]
    fn six_wire_bus_never_scores_odd() {
        let hists = sample_distribution(&small(6, vec![1, 3, 10, 50], 40_000)).unwrap();
        assert!(hists.iter().all(|h| h.odd_count() == 0));
        let spare = sample_distribution(&small(7, vec![50], 40_000)).unwrap();
        assert!(spare[0].odd_count() > 0);
    }

    #[test]
    fn length_one_cannot_solve() {
        let mut c = small(6, vec![1], 50_000);
        c.scoring = OutputScoring::BestWire;
        let h = &sample_distribution(&c).unwrap()[0];
        assert_eq!(h.solutions(), 0);
        assert_eq!(h.counts.iter().rposition(|&c| c > 0), Some(40));
    }

    #[test]
    fn sampled_scores_match_scalar_evaluation() {
        // Re-derive a batch by hand and score each circuit case by case.
        let c = small(7, vec![9], 200);
        let hist = &sample_distribution(&c).unwrap()[0];
        let set = GateSet::new(7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
        rng.set_stream(0);
        let mut manual = FitnessHistogram::new(9, 64);
        let target = six_multiplexor_target();
        for _ in 0..200 {
            let gates: Vec<Gate> = (0..9).map(|_| set.sample(&mut rng)).collect();
            let circuit = Circuit::new(c.bus, gates).unwrap();
            manual.record(hamming_fitness_scalar(&circuit, &target, &OutputMap::single(0)).unwrap().raw);
        }
        assert_eq!(hist, &manual);
    }

    #[test]
    fn best_wire_dominates_fixed_wire() {
        let fixed = sample_distribution(&small(7, vec![15], 20_000)).unwrap();
        let mut c = small(7, vec![15], 20_000);
        c.scoring = OutputScoring::BestWire;
        let best = sample_distribution(&c).unwrap();
        assert!(best[0].mean() > fixed[0].mean());
    }

    #[test]
    fn wide_inputs_use_the_general_path() {
        let bus = Bus::new(9, 7, 1, true).unwrap();
        let target = TargetTable::from_fn(7, 1, |x| x.count_ones() as u64 & 1);
        let config = ExperimentConfig {
            bus,
            lengths: vec![0, 12],
            samples_per_length: 300,
            target,
            scoring: OutputScoring::Fixed(OutputMap::single(3)),
            seed: 5,
            workers: 1,
        };
        let hists = sample_distribution(&config).unwrap();
        assert_eq!(hists[0].counts.len(), 129);
        assert_eq!(hists[0].total, 300);
        assert_eq!(hists[0].counts.iter().filter(|&&c| c > 0).count(), 1);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(ExperimentConfig::six_mux(6, vec![], 10, 1).is_err());
        assert!(ExperimentConfig::six_mux(6, vec![5, 5], 10, 1).is_err());
        assert!(ExperimentConfig::six_mux(6, vec![5], 0, 1).is_err());
        assert!(ExperimentConfig::six_mux(5, vec![5], 10, 1).is_err());
        let mut c = small(6, vec![5], 10);
        c.scoring = OutputScoring::Fixed(OutputMap::single(6));
        assert!(matches!(c.validate(), Err(Error::WireOutOfRange { .. })));
    }

    #[test]
    fn checkpoint_resume_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        let config = small(7, vec![4, 30], CHECKPOINT_BATCHES * BATCH_SIZE + 1000);
        let straight = run_sampling(&config, None).unwrap();

        // Leave a half-finished checkpoint behind, then resume from it.
        let partial = {
            let mut c = config.clone();
            c.lengths = vec![4];
            run_sampling(&c, None).unwrap()
        };
        let state = Checkpoint {
            config: config.clone(),
            progress: vec![
                LengthProgress {
                    batches_done: config.batches(),
                    histogram: partial.histograms[0].clone(),
                    solutions: vec![],
                },
                LengthProgress {
                    batches_done: 0,
                    histogram: FitnessHistogram::new(30, 64),
                    solutions: vec![],
                },
            ],
        };
        write_checkpoint(&path, &state).unwrap();
        let resumed = run_sampling(&config, Some(&path)).unwrap();
        assert_eq!(resumed.histograms, straight.histograms);

        // A finished checkpoint reproduces the same answer without work.
        let again = run_sampling(&config, Some(&path)).unwrap();
        assert_eq!(again.histograms, straight.histograms);

        let mut other = config.clone();
        other.seed += 1;
        assert!(matches!(run_sampling(&other, Some(&path)), Err(Error::InvalidConfig(_))));
        let mut more_workers = config.clone();
        more_workers.workers = 2;
        assert!(run_sampling(&more_workers, Some(&path)).is_ok());
    }

    #[test]
    fn tvd_of_exact_and_point_mass_histograms() {
        let limit = binomial_limit(6, 1);
        let pmf = limit.pmf.clone().unwrap();
        let scale = 1u64 << 40;
        let mut exact = FitnessHistogram::new(100, 64);
        for (f, p) in pmf.iter().enumerate() {
            exact.counts[f] = (p * scale as f64).round() as u64;
        }
        exact.total = exact.counts.iter().sum();
        let series = convergence_series(&[exact], &limit).unwrap();
        assert!(series.points[0].tvd < 1e-9);
        assert!((series.points[0].mean - 32.0).abs() < 1e-9);

        let mut spike = FitnessHistogram::new(3, 64);
        spike.record(64);
        let s = convergence_series(&[spike], &limit).unwrap();
        assert!((s.points[0].tvd - (1.0 - pmf[64])).abs() < 1e-15);
        assert_eq!(s.points[0].solutions, 1);
    }

    #[test]
    fn support_mismatch_is_an_error() {
        let limit = binomial_limit(5, 1);
        let h = FitnessHistogram::new(3, 64);
        assert!(matches!(convergence_series(&[h], &limit), Err(Error::InvalidDistribution(_))));
    }

    #[test]
    fn long_six_wire_circuits_approach_the_finite_bus_limit() {
        let config = small(6, vec![5, 200], 200_000);
        let hists = sample_distribution(&config).unwrap();
        let limit = finite_bus_limit(config.bus, &config.target).unwrap();
        let series = convergence_series(&hists, &limit).unwrap();
        assert!(series.points[1].tvd < 0.02);
        assert!(series.points[0].tvd > series.points[1].tvd);
        assert!(series.is_non_increasing(2.0));
        assert!(series.to_csv().lines().count() == 3);
    }

    #[test]
    fn poisson_intervals_match_tables() {
        let (lo, hi) = poisson_interval(0, 0.95);
        assert_eq!(lo, 0.0);
        assert!((hi - 3.688879).abs() < 1e-5);
        let (lo, hi) = poisson_interval(3, 0.95);
        assert!((lo - 0.618672).abs() < 1e-5);
        assert!((hi - 8.767273).abs() < 1e-5);
        let (lo, hi) = poisson_interval(10, 0.95);
        assert!((lo - 4.795389).abs() < 1e-5);
        assert!((hi - 18.390356).abs() < 1e-5);
    }

    #[test]
    fn density_points_scale_intervals_by_total() {
        let mut h = FitnessHistogram::new(5, 64);
        for _ in 0..3 {
            h.record(64);
        }
        for _ in 0..999_997 {
            h.record(32);
        }
        let p = &density_points(&[h])[0];
        assert!((p.rate - 3e-6).abs() < 1e-15);
        assert!(p.contains(3e-6) && p.contains(8e-6) && !p.contains(9e-6));
        assert!(density_csv(std::slice::from_ref(p)).starts_with("length,solutions"));
    }

    #[test]
    fn scan_guard_refuses_huge_enumerations() {
        let bus = Bus::six_mux(6).unwrap();
        let r = exhaustive_min_scan(bus, 6, &six_multiplexor_target());
        assert!(matches!(r, Err(Error::EnumerationTooLarge { .. })));
    }

    #[test]
    fn short_scan_finds_no_six_mux_and_counts_circuits() {
        let bus = Bus::six_mux(6).unwrap();
        let rows = exhaustive_min_scan(bus, 3, &six_multiplexor_target()).unwrap();
        let counts: Vec<u64> = rows.iter().map(|r| r.circuits).collect();
        assert_eq!(counts, vec![1, 90, 90 * 89, 90 * 89 * 89]);
        assert!(rows.iter().all(|r| r.solutions() == 0));
        assert_eq!(rows[0].best_fitness, 40);
        assert_eq!(rows[1].best_fitness, 40);
    }

    #[test]
    fn pruning_never_loses_a_shortest_solution() {
        // Every table one wire of a 4-wire, 2-input bus can realize.
        let bus = Bus::new(4, 2, 1, true).unwrap();
        for bits in 0..16u64 {
            let target = TargetTable::from_fn(2, 1, |x| (bits >> x) & 1);
            let pruned = exhaustive_scan(bus, 3, &target, &ScanOptions::default()).unwrap();
            let full = exhaustive_scan(
                bus,
                3,
                &target,
                &ScanOptions {
                    prune: false,
                    ..ScanOptions::default()
                },
            )
            .unwrap();
            let first = |rows: &[ScanRow]| rows.iter().position(|r| r.solutions() > 0);
            assert_eq!(first(&pruned), first(&full), "target {bits:04b}");
        }
    }

    #[test]
    fn planted_targets_are_found_at_their_length() {
        let bus = Bus::six_mux(6).unwrap();
        let set = GateSet::new(6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..6 {
            let len = rng.random_range(1..=3);
            let gates: Vec<Gate> = (0..len).map(|_| set.sample(&mut rng)).collect();
            let circuit = Circuit::new(bus, gates.clone()).unwrap();
            let wire = gates.last().unwrap().target();
            let target = TargetTable::realized_by(&circuit, &OutputMap::single(wire)).unwrap();
            let rows = exhaustive_min_scan(bus, 3, &target).unwrap();
            let first = rows.iter().position(|r| r.solutions() > 0).unwrap();
            assert!(first <= len);
            let example = rows[first].example.as_ref().unwrap();
            let hit = (0..6).any(|w| {
                hamming_fitness_scalar(example, &target, &OutputMap::single(w)).unwrap().is_perfect()
            });
            assert!(hit);
        }
    }

    #[test]
    fn scan_is_worker_independent() {
        let bus = Bus::six_mux(6).unwrap();
        let t = six_multiplexor_target();
        let one = exhaustive_scan(bus, 2, &t, &ScanOptions { workers: 1, ..ScanOptions::default() }).unwrap();
        let many = exhaustive_scan(bus, 2, &t, &ScanOptions { workers: 4, ..ScanOptions::default() }).unwrap();
        assert_eq!(one, many);
    }

    #[test]
    fn unrelated_wires_are_nearly_uncorrelated() {
        let bus = Bus::six_mux(8).unwrap();
        let r = output_bit_correlation(bus, 200, 2000, 3, 0, 1).unwrap();
        assert!(r.abs() < 0.05, "{r}");
        assert!(output_bit_correlation(bus, 5, 10, 3, 0, 8).is_err());
    }
}
