// SPDX-License-Identifier: Apache-2.0

//! Single-gate mutation, a strict hill climber, a generational
//! tournament GA, and Koza's computational effort.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{random_circuit_from, Bus, Circuit, GateSet};
use crate::error::{Error, Result};
use crate::exec;
use crate::fitness::{hamming_fitness, six_multiplexor_target, OutputMap, TargetTable};
use crate::gate::Gate;
use crate::trace::evaluate;

/// Default evaluation budget of a hill-climbing run.
pub const DEFAULT_CLIMB_BUDGET: u64 = 50_000;

/// Success probability used for computational effort.
pub const EFFORT_CONFIDENCE: f64 = 0.99;

/// Wires that may replace the wire in `slot` (0 = target, 1 and 2 =
/// controls) of `gate` on a `wires`-wire bus.
pub fn slot_alternatives(gate: Gate, slot: usize, wires: usize) -> impl Iterator<Item = usize> {
    let [t, a, b] = gate.slots();
    (0..wires).filter(move |&w| match slot {
        0 => w != t && w != a && w != b,
        1 => w != a && w != t,
        _ => w != b && w != t,
    })
}

fn alternative_count(gate: Gate, slot: usize, wires: usize) -> usize {
    let [_, a, b] = gate.slots();
    match slot {
        0 if a == b => wires - 2,
        0 => wires - 3,
        _ => wires - 2,
    }
}

fn replace_slot(gate: Gate, slot: usize, wire: usize) -> Gate {
    let mut s = gate.slots();
    s[slot] = wire;
    Gate::new(s[0], s[1], s[2]).expect("alternative wires keep the gate legal")
}

/// Pick one gate, one of its three wires, and replace that wire with a
/// different legal wire, all uniformly. Slots with no alternative are
/// re-drawn.
pub fn mutate<R: Rng + ?Sized>(circuit: &Circuit, rng: &mut R) -> Result<Circuit> {
    let wires = circuit.wires();
    if circuit
        .gates()
        .iter()
        .all(|&g| (0..3).all(|s| alternative_count(g, s, wires) == 0))
    {
        return Err(Error::NothingToMutate);
    }
    let mut out = circuit.clone();
    loop {
        let index = rng.random_range(0..circuit.len());
        let gate = circuit.gates()[index];
        let slot = rng.random_range(0..3);
        let n = alternative_count(gate, slot, wires);
        if n == 0 {
            continue;
        }
        let pick = rng.random_range(0..n);
        let wire = slot_alternatives(gate, slot, wires)
            .nth(pick)
            .expect("alternative count matches the iterator");
        out.gates_mut()[index] = replace_slot(gate, slot, wire);
        return Ok(out);
    }
}

/// Number of single-wire moves available to [`mutate`]: the legal
/// alternatives summed over every slot of every gate. A gate whose two
/// controls share a wire contributes its two control slots separately.
pub fn neighborhood_size(circuit: &Circuit) -> usize {
    circuit
        .gates()
        .iter()
        .map(|&g| (0..3).map(|s| alternative_count(g, s, circuit.wires())).sum::<usize>())
        .sum()
}

/// Number of distinct circuits reachable by one mutation. Smaller than
/// [`neighborhood_size`] when some gate has equal controls, because both
/// control slots then yield the same mutants.
pub fn distinct_neighbor_count(circuit: &Circuit) -> usize {
    let wires = circuit.wires();
    circuit
        .gates()
        .iter()
        .map(|&g| {
            let set: HashSet<Gate> = (0..3)
                .flat_map(|s| slot_alternatives(g, s, wires).map(move |w| replace_slot(g, s, w)))
                .collect();
            set.len()
        })
        .sum()
}

/// Expected draws to see every one of `k` equally likely items, `k * H_k`.
pub fn coupon_collector_expected(k: usize) -> f64 {
    k as f64 * (1..=k).map(|i| 1.0 / i as f64).sum::<f64>()
}

/// What a search run is scored against.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Problem {
    pub target: TargetTable,
    pub outputs: OutputMap,
}

impl Problem {
    pub fn six_mux() -> Self {
        Self {
            target: six_multiplexor_target(),
            outputs: OutputMap::default(),
        }
    }

    pub fn score(&self, circuit: &Circuit) -> Result<u64> {
        Ok(hamming_fitness(circuit, &self.target, &self.outputs)?.raw)
    }

    fn score_unchecked(&self, circuit: &Circuit) -> u64 {
        crate::fitness::score_trace(&evaluate(circuit), &self.target, &self.outputs)
    }

    pub fn max_fitness(&self) -> u64 {
        self.target.max_fitness()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClimbRecord {
    /// `(evaluations so far, fitness)` at the start and after each
    /// accepted improvement.
    pub trajectory: Vec<(u64, u64)>,
    pub solved: bool,
    pub evaluations: u64,
    pub final_fitness: u64,
    pub circuit: Circuit,
}

/// Mutate the current circuit and keep the mutant only when it is strictly
/// fitter. Stops on a perfect score or after `budget` mutant evaluations.
pub fn hill_climb<R: Rng + ?Sized>(start: &Circuit, problem: &Problem, budget: u64, rng: &mut R) -> Result<ClimbRecord> {
    if budget == 0 {
        return Err(Error::InvalidConfig("hill-climb budget must be at least 1".into()));
    }
    let max = problem.max_fitness();
    let mut current = start.clone();
    let mut fitness = problem.score(&current)?;
    let mut trajectory = vec![(0, fitness)];
    let mut evaluations = 0;
    while fitness < max && evaluations < budget {
        let mutant = mutate(&current, rng)?;
        let f = problem.score_unchecked(&mutant);
        evaluations += 1;
        if f > fitness {
            current = mutant;
            fitness = f;
            trajectory.push((evaluations, f));
        }
    }
    Ok(ClimbRecord {
        trajectory,
        solved: fitness == max,
        evaluations,
        final_fitness: fitness,
        circuit: current,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub bus: Bus,
    /// Gates per circuit, fixed for the whole run.
    pub length: usize,
    pub population: usize,
    pub tournament: usize,
    /// Generations including the initial one.
    pub generations: usize,
    pub problem: Problem,
    pub seed: u64,
    pub workers: usize,
}

impl GaConfig {
    /// Six-multiplexor with population 500, tournaments of 7 and at most
    /// 500 generations.
    pub fn six_mux(wires: usize, length: usize, seed: u64) -> Result<Self> {
        Ok(Self {
            bus: Bus::six_mux(wires)?,
            length,
            population: 500,
            tournament: 7,
            generations: 500,
            problem: Problem::six_mux(),
            seed,
            workers: 0,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.population == 0 || self.tournament == 0 || self.generations == 0 {
            return Err(Error::InvalidConfig(
                "population, tournament size and generations must be positive".into(),
            ));
        }
        if self.length == 0 {
            return Err(Error::InvalidConfig("circuits need at least one gate".into()));
        }
        // Surface dimension errors before the run starts.
        self.problem.score(&Circuit::empty(self.bus)).map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// Best fitness within each generation (not cumulative).
    pub best_per_generation: Vec<u64>,
    pub mean_per_generation: Vec<f64>,
    pub solved: bool,
    /// First generation holding a perfect circuit.
    pub solved_generation: Option<usize>,
    pub evaluations: u64,
    pub solution: Option<Circuit>,
}

impl RunRecord {
    /// One JSON object per generation: run, generation, best, mean, solved.
    pub fn to_jsonl(&self, run: usize) -> String {
        let mut out = String::new();
        for (g, (&best, &mean)) in self
            .best_per_generation
            .iter()
            .zip(&self.mean_per_generation)
            .enumerate()
        {
            let line = serde_json::json!({
                "run": run,
                "generation": g,
                "best": best,
                "mean": mean,
                "solved": self.solved_generation.is_some_and(|s| s <= g),
            });
            out.push_str(&line.to_string());
            out.push('\n');
        }
        out
    }
}

fn tournament<R: Rng + ?Sized>(fitness: &[u64], size: usize, rng: &mut R) -> usize {
    let mut best = rng.random_range(0..fitness.len());
    let mut ties = 1u32;
    for _ in 1..size {
        let c = rng.random_range(0..fitness.len());
        if fitness[c] > fitness[best] {
            best = c;
            ties = 1;
        } else if fitness[c] == fitness[best] {
            // Uniform choice among tied competitors.
            ties += 1;
            if rng.random_range(0..ties) == 0 {
                best = c;
            }
        }
    }
    best
}

/// Generational, non-elitist GA: every child is a tournament winner
/// mutated once.
pub fn evolve(config: &GaConfig) -> Result<RunRecord> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let set = GateSet::new(config.bus.wires)?;
    let population: Vec<Circuit> = (0..config.population)
        .map(|_| random_circuit_from(&set, config.bus, config.length, &mut rng))
        .collect();
    evolve_from(config, population, &mut rng)
}

/// [`evolve`] starting from a given generation 0.
pub fn evolve_from<R: Rng + ?Sized>(config: &GaConfig, mut population: Vec<Circuit>, rng: &mut R) -> Result<RunRecord> {
    config.validate()?;
    if population.is_empty() {
        return Err(Error::InvalidConfig("empty initial population".into()));
    }
    let max = config.problem.max_fitness();
    let mut record = RunRecord {
        best_per_generation: Vec::new(),
        mean_per_generation: Vec::new(),
        solved: false,
        solved_generation: None,
        evaluations: 0,
        solution: None,
    };
    for generation in 0..config.generations {
        let fitness = exec::map_slice(&population, config.workers, |c| config.problem.score_unchecked(c));
        record.evaluations += fitness.len() as u64;
        let best = *fitness.iter().max().expect("non-empty population");
        record.best_per_generation.push(best);
        record
            .mean_per_generation
            .push(fitness.iter().sum::<u64>() as f64 / fitness.len() as f64);
        if best == max {
            let winner = fitness.iter().position(|&f| f == max).expect("best is present");
            record.solved = true;
            record.solved_generation = Some(generation);
            record.solution = Some(population[winner].clone());
            break;
        }
        if generation + 1 == config.generations {
            break;
        }
        population = (0..config.population)
            .map(|_| {
                let parent = tournament(&fitness, config.tournament, rng);
                mutate(&population[parent], rng)
            })
            .collect::<Result<_>>()?;
    }
    Ok(record)
}

/// Independent GA runs with seeds `base_seed + i`.
pub fn evolve_runs(config: &GaConfig, runs: usize) -> Result<Vec<RunRecord>> {
    // Runs in parallel; each run evaluates sequentially.
    let records = exec::map_indexed(runs, config.workers, |i| {
        let mut c = config.clone();
        c.seed = config.seed.wrapping_add(i as u64);
        c.workers = 1;
        evolve(&c)
    });
    records.into_iter().collect()
}

/// Hill-climbing runs from random starts, seeds `base_seed + i`.
pub fn climb_runs(bus: Bus, length: usize, problem: &Problem, budget: u64, runs: usize, base_seed: u64, workers: usize) -> Result<Vec<ClimbRecord>> {
    let set = GateSet::new(bus.wires)?;
    let records = exec::map_indexed(runs, workers, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(i as u64));
        let start = random_circuit_from(&set, bus, length, &mut rng);
        hill_climb(&start, problem, budget, &mut rng)
    });
    records.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Effort {
    /// Individuals that must be processed, `M * (i + 1) * R(z)`.
    pub individuals: u64,
    /// Generation `i` at which the minimum is attained.
    pub generation: usize,
    /// Independent runs `R(z)` needed at that generation.
    pub runs_required: u64,
    /// Cumulative success probability `P(M, i)`.
    pub success_probability: f64,
}

/// Koza's computational effort at 99% confidence.
pub fn koza_effort(runs: &[RunRecord], population: usize) -> Result<Effort> {
    koza_effort_at(runs, population, EFFORT_CONFIDENCE)
}

pub fn koza_effort_at(runs: &[RunRecord], population: usize, z: f64) -> Result<Effort> {
    if runs.is_empty() || runs.iter().all(|r| r.solved_generation.is_none()) {
        return Err(Error::NoSolvedRuns);
    }
    let horizon = runs.iter().map(|r| r.best_per_generation.len()).max().unwrap_or(1);
    let mut best: Option<Effort> = None;
    for i in 0..horizon {
        let solved = runs
            .iter()
            .filter(|r| r.solved_generation.is_some_and(|g| g <= i))
            .count();
        if solved == 0 {
            continue;
        }
        let p = solved as f64 / runs.len() as f64;
        let needed = if p >= 1.0 {
            1
        } else {
            let r = (1.0 - z).ln() / (1.0 - p).ln();
            ((r - 1e-9).ceil() as u64).max(1)
        };
        let individuals = population as u64 * (i as u64 + 1) * needed;
        if best.is_none_or(|b| individuals < b.individuals) {
            best = Some(Effort {
                individuals,
                generation: i,
                runs_required: needed,
                success_probability: p,
            });
        }
    }
    best.ok_or(Error::NoSolvedRuns)
}

/// Expected random-search draws to reach at least `level`, estimated from
/// a fitness histogram of random circuits of the same length.
pub fn random_search_expected_tries(hist: &crate::sampling::FitnessHistogram, level: u64) -> f64 {
    let hits: u64 = hist.counts.iter().skip(level as usize).sum();
    if hits == 0 {
        f64::INFINITY
    } else {
        hist.total as f64 / hits as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::random_circuit;
    use crate::fitness::hamming_fitness_scalar;
    use std::collections::BTreeSet;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn circuit_of(wires: usize, gates: &[(usize, usize, usize)]) -> Circuit {
        let gates = gates.iter().map(|&(t, a, b)| Gate::new(t, a, b).unwrap()).collect();
        Circuit::new(Bus::six_mux(wires).unwrap(), gates).unwrap()
    }

    // Differs in exactly one wire of one gate: same target and control
    // multisets differing by one element, or same controls and a new target.
    fn single_slot_change(a: Gate, b: Gate) -> bool {
        if a.target() == b.target() {
            let mut x = vec![a.control_a(), a.control_b()];
            let mut y = vec![b.control_a(), b.control_b()];
            for v in x.clone() {
                if let Some(p) = y.iter().position(|&w| w == v) {
                    y.remove(p);
                    x.remove(x.iter().position(|&w| w == v).unwrap());
                }
            }
            x.len() == 1 && y.len() == 1
        } else {
            a.control_a() == b.control_a() && a.control_b() == b.control_b()
        }
    }

    #[test]
    fn paper_neighbourhood_counts() {
        let distinct: Vec<_> = (0..20).map(|i| (i % 12, (i + 1) % 12, (i + 2) % 12)).collect();
        let c = circuit_of(12, &distinct);
        assert_eq!(neighborhood_size(&c), 580);
        assert_eq!(distinct_neighbor_count(&c), 580);
        let equal: Vec<_> = (0..20).map(|i| (i % 12, (i + 5) % 12, (i + 5) % 12)).collect();
        let c = circuit_of(12, &equal);
        assert_eq!(neighborhood_size(&c), 600);
        assert_eq!(distinct_neighbor_count(&c), 400);
        let five: Vec<_> = (0..5).map(|i| (i, (i + 1) % 6, (i + 2) % 6)).collect();
        assert_eq!(neighborhood_size(&circuit_of(6, &five)), 55);
    }

    #[test]
    fn slot_counts_at_twelve_wires() {
        let g = Gate::new(0, 1, 2).unwrap();
        let counts: Vec<usize> = (0..3).map(|s| slot_alternatives(g, s, 12).count()).collect();
        assert_eq!(counts, vec![9, 10, 10]);
        let g = Gate::new(0, 3, 3).unwrap();
        let counts: Vec<usize> = (0..3).map(|s| slot_alternatives(g, s, 12).count()).collect();
        assert_eq!(counts, vec![10, 10, 10]);
    }

    // Oracle: every (gate, slot, wire) move, applied to the ordered slot
    // triple and deduplicated; and separately deduplicated as circuits.
    fn brute_force_neighbours(c: &Circuit) -> (usize, usize) {
        let mut moves = BTreeSet::new();
        let mut circuits = BTreeSet::new();
        for (i, g) in c.gates().iter().enumerate() {
            for slot in 0..3 {
                for w in 0..c.wires() {
                    let mut s = g.slots();
                    if s[slot] == w {
                        continue;
                    }
                    s[slot] = w;
                    if let Ok(ng) = Gate::new(s[0], s[1], s[2]) {
                        moves.insert((i, s));
                        let mut gates = c.gates().to_vec();
                        gates[i] = ng;
                        circuits.insert(gates);
                    }
                }
            }
        }
        (moves.len(), circuits.len())
    }

    #[test]
    fn neighbourhood_matches_brute_force() {
        let mut r = rng(1);
        for i in 0..100 {
            let wires = if i % 2 == 0 { 6 } else { 12 };
            let c = random_circuit(Bus::six_mux(wires).unwrap(), 1 + i % 20, &mut r).unwrap();
            let (moves, distinct) = brute_force_neighbours(&c);
            assert_eq!(neighborhood_size(&c), moves);
            assert_eq!(distinct_neighbor_count(&c), distinct);
        }
    }

    #[test]
    fn mutation_contract() {
        let mut r = rng(2);
        for wires in [3, 4, 6, 12] {
            let bus = Bus::new(wires, 3, 1, true).unwrap();
            let set = GateSet::new(wires).unwrap();
            for _ in 0..250_000 / 4 {
                let c = random_circuit_from(&set, bus, 1 + r.random_range(0..5), &mut r);
                let m = mutate(&c, &mut r).unwrap();
                assert_ne!(m, c);
                let changed: Vec<usize> = (0..c.len()).filter(|&i| c.gates()[i] != m.gates()[i]).collect();
                assert_eq!(changed.len(), 1);
                let i = changed[0];
                assert!(m.gates()[i].span() <= wires);
                assert!(single_slot_change(c.gates()[i], m.gates()[i]));
            }
        }
    }

    #[test]
    fn mutation_edge_cases() {
        let bus = Bus::new(3, 3, 1, true).unwrap();
        assert!(matches!(mutate(&Circuit::empty(bus), &mut rng(0)), Err(Error::NothingToMutate)));
        // Distinct controls at 3 wires: the target slot has no alternative.
        let c = Circuit::new(bus, vec![Gate::new(0, 1, 2).unwrap()]).unwrap();
        let mut r = rng(3);
        for _ in 0..100 {
            let m = mutate(&c, &mut r).unwrap();
            assert_eq!(m.gates()[0].target(), 0);
        }
        assert_eq!(neighborhood_size(&c), 2);
    }

    #[test]
    fn coupon_collector_bound() {
        assert!((coupon_collector_expected(600) - 4185.0).abs() < 1.0);
        assert!(coupon_collector_expected(580) < 4185.0);
        assert_eq!(coupon_collector_expected(1), 1.0);
    }

    fn solved_record(generation: Option<usize>, horizon: usize) -> RunRecord {
        RunRecord {
            best_per_generation: vec![0; horizon],
            mean_per_generation: vec![0.0; horizon],
            solved: generation.is_some(),
            solved_generation: generation,
            evaluations: 0,
            solution: None,
        }
    }

    #[test]
    fn effort_examples() {
        let runs = vec![solved_record(Some(0), 1); 4];
        assert_eq!(koza_effort(&runs, 500).unwrap().individuals, 500);

        let mut runs = vec![solved_record(Some(9), 10); 5];
        runs.extend(vec![solved_record(None, 500); 5]);
        let e = koza_effort(&runs, 500).unwrap();
        assert_eq!((e.individuals, e.generation, e.runs_required), (35_000, 9, 7));

        assert!(matches!(koza_effort(&[solved_record(None, 3)], 500), Err(Error::NoSolvedRuns)));
        assert!(matches!(koza_effort(&[], 500), Err(Error::NoSolvedRuns)));

        // P = 0.9 needs exactly 2 runs at z = 0.99.
        let mut runs = vec![solved_record(Some(0), 1); 9];
        runs.push(solved_record(None, 1));
        assert_eq!(koza_effort(&runs, 10).unwrap().runs_required, 2);
    }

    #[test]
    fn climber_stops_when_solved() {
        let problem = Problem::six_mux();
        let start = Circuit::empty(Bus::six_mux(6).unwrap());
        let own = Problem {
            target: TargetTable::realized_by(&start, &problem.outputs).unwrap(),
            outputs: problem.outputs.clone(),
        };
        let rec = hill_climb(&start, &own, 10, &mut rng(0)).unwrap();
        assert!(rec.solved);
        assert_eq!(rec.evaluations, 0);
        assert!(hill_climb(&start, &own, 0, &mut rng(0)).is_err());
    }

    #[test]
    fn climber_is_strict_and_deterministic() {
        let problem = Problem::six_mux();
        let bus = Bus::six_mux(6).unwrap();
        let start = random_circuit(bus, 5, &mut rng(4)).unwrap();
        let a = hill_climb(&start, &problem, 5_000, &mut rng(5)).unwrap();
        let b = hill_climb(&start, &problem, 5_000, &mut rng(5)).unwrap();
        assert_eq!(a, b);
        assert!(a.trajectory.windows(2).all(|w| w[1].1 > w[0].1 && w[1].0 > w[0].0));
        assert_eq!(problem.score(&a.circuit).unwrap(), a.final_fitness);
    }

    #[test]
    fn clone_population_solves_at_generation_zero() {
        let problem = Problem::six_mux();
        let bus = Bus::six_mux(6).unwrap();
        let seed = random_circuit(bus, 5, &mut rng(6)).unwrap();
        let own = Problem {
            target: TargetTable::realized_by(&seed, &problem.outputs).unwrap(),
            outputs: problem.outputs.clone(),
        };
        let config = GaConfig {
            bus,
            length: 5,
            population: 20,
            tournament: 7,
            generations: 10,
            problem: own,
            seed: 0,
            workers: 1,
        };
        let rec = evolve_from(&config, vec![seed.clone(); 20], &mut rng(0)).unwrap();
        assert!(rec.solved);
        assert_eq!(rec.solved_generation, Some(0));
        assert_eq!(rec.evaluations, 20);
        assert_eq!(rec.solution, Some(seed));
    }

    #[test]
    fn ga_is_deterministic_and_valid() {
        let mut config = GaConfig::six_mux(6, 5, 42).unwrap();
        config.population = 50;
        config.generations = 20;
        let a = evolve(&config).unwrap();
        config.workers = 1;
        let b = evolve(&config).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.best_per_generation.len(), a.mean_per_generation.len());
        assert!(a.best_per_generation.iter().all(|&f| f <= 64 && f % 2 == 0));
        if let Some(sol) = &a.solution {
            let f = hamming_fitness_scalar(sol, &config.problem.target, &config.problem.outputs).unwrap();
            assert!(f.is_perfect());
        }
        let log = a.to_jsonl(3);
        assert_eq!(log.lines().count(), a.best_per_generation.len());
        assert!(log.starts_with("{\"best\":"));
    }

    #[test]
    fn tournament_prefers_fitter() {
        let fitness = vec![1, 5, 5, 2];
        let mut r = rng(8);
        let mut wins = [0usize; 4];
        for _ in 0..10_000 {
            wins[tournament(&fitness, 7, &mut r)] += 1;
        }
        assert!(wins[1] > 4_000 && wins[2] > 4_000);
        assert!(wins[0] + wins[3] < 200);
    }
}
