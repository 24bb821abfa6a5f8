// SPDX-License-Identifier: Apache-2.0

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use revcirc::sampling::{self, convergence_series, ExperimentConfig};
use revcirc::search::{self, GaConfig, Problem, RunRecord};
use revcirc::theory::finite_bus_limit;
use revcirc::{hamming_fitness_scalar, random_circuit, six_multiplexor_target, Bus, Circuit, OutputMap};

fn solved_at(g: Option<usize>) -> RunRecord {
    RunRecord {
        best_per_generation: vec![0; g.map_or(500, |g| g + 1)],
        mean_per_generation: vec![0.0; g.map_or(500, |g| g + 1)],
        solved: g.is_some(),
        solved_generation: g,
        evaluations: 0,
        solution: None,
    }
}

#[test]
fn ga_runs_are_reproducible_for_any_worker_count() {
    let mut config = GaConfig::six_mux(12, 20, 41).unwrap();
    config.generations = 40;
    config.workers = 1;
    let one = search::evolve_runs(&config, 3).unwrap();
    config.workers = 3;
    let three = search::evolve_runs(&config, 3).unwrap();
    assert_eq!(one, three);
}

#[test]
fn evolved_solutions_survive_text_round_trip_and_scalar_check() {
    let mut config = GaConfig::six_mux(12, 20, 7).unwrap();
    config.workers = 1;
    let runs = search::evolve_runs(&config, 4).unwrap();
    let solution = runs
        .iter()
        .find_map(|r| r.solution.clone())
        .expect("at least one of four 12-wire runs solves");
    let text = solution.to_string();
    let parsed: Circuit = text.parse().unwrap();
    assert_eq!(parsed, solution);
    let f = hamming_fitness_scalar(&parsed, &six_multiplexor_target(), &OutputMap::single(0)).unwrap();
    assert!(f.is_perfect());
    let log = runs[0].to_jsonl(0);
    assert_eq!(log.lines().count(), runs[0].best_per_generation.len());
}

#[test]
fn koza_effort_matches_hand_computation() {
    // Half the runs solve by generation 9: 500 * 10 * ceil(ln 0.01 / ln 0.5).
    let runs: Vec<RunRecord> = (0..10).map(|i| solved_at((i < 5).then_some(9))).collect();
    let e = search::koza_effort(&runs, 500).unwrap();
    assert_eq!(e.individuals, 35_000);
    assert_eq!(e.runs_required, 7);
    let all: Vec<RunRecord> = (0..4).map(|_| solved_at(Some(0))).collect();
    assert_eq!(search::koza_effort(&all, 500).unwrap().individuals, 500);
    let none: Vec<RunRecord> = (0..4).map(|_| solved_at(None)).collect();
    assert!(search::koza_effort(&none, 500).is_err());
}

#[test]
fn hill_climbs_only_go_up() {
    let bus = Bus::six_mux(12).unwrap();
    let records = search::climb_runs(bus, 20, &Problem::six_mux(), 5_000, 4, 3, 0).unwrap();
    for r in &records {
        assert!(r.trajectory.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1));
        assert_eq!(r.trajectory.last().unwrap().1, r.final_fitness);
        assert!(r.evaluations <= 5_000);
        assert_eq!(Problem::six_mux().score(&r.circuit).unwrap(), r.final_fitness);
    }
}

#[test]
fn six_wire_histograms_follow_the_finite_bus_limit() {
    let config = ExperimentConfig::six_mux(6, vec![10, 40, 160], 100_000, 12).unwrap();
    let hists = sampling::sample_distribution(&config).unwrap();
    let limit = finite_bus_limit(config.bus, &config.target).unwrap();
    let series = convergence_series(&hists, &limit).unwrap();
    assert!(series.is_non_increasing(2.0));
    let last = series.points.last().unwrap();
    assert!(last.tvd < 0.02, "{}", last.tvd);
    assert!((last.mean - limit.mean).abs() < 0.1);
    let csv = sampling::histograms_csv(&hists);
    assert_eq!(csv.lines().count(), 1 + 3 * 65);
}

#[test]
fn random_circuits_are_seed_determined() {
    let bus = Bus::six_mux(6).unwrap();
    let a = random_circuit(bus, 5, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    let b = random_circuit(bus, 5, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 5);
}
