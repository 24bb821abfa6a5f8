// SPDX-License-Identifier: Apache-2.0

mod recipe;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use revcirc::sampling::{self, ExperimentConfig, OutputScoring, ScanOptions};
use revcirc::search::{self, GaConfig, Problem};
use revcirc::theory::finite_bus_limit;
use revcirc::{binomial_limit, six_multiplexor_target, Bus, OutputMap};

use crate::recipe::{RecipeId, RecipeParams, Scale};

#[derive(Parser)]
#[command(name = "revcirc", version, about = "Random reversible CCNOT circuits on the six-multiplexor")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fitness histograms of random circuits per length.
    Sample(SampleArgs),
    /// Mean, sd and distance to the limit per length.
    Converge {
        #[command(flatten)]
        sample: SampleArgs,
        #[arg(long, value_enum, default_value_t = LimitChoice::Finite)]
        limit: LimitChoice,
    },
    /// Rate of perfect circuits per length with 95% Poisson intervals.
    Density(SampleArgs),
    /// Exhaustive count of six-mux solutions of every length up to a bound.
    Minscan {
        #[arg(long, default_value_t = 6)]
        wires: usize,
        #[arg(long, default_value_t = 4)]
        max_length: usize,
        /// Enumerate adjacent identical gates too.
        #[arg(long)]
        no_prune: bool,
        /// Refuse scans larger than this many circuits.
        #[arg(long, default_value_t = sampling::SCAN_LIMIT)]
        limit: u128,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Strict-improvement hill climbing from random circuits.
    Hillclimb {
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long, default_value_t = search::DEFAULT_CLIMB_BUDGET)]
        budget: u64,
    },
    /// Generational GA with tournament selection and single-slot mutation.
    Ga {
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long, default_value_t = 500)]
        pop: usize,
        #[arg(long, default_value_t = 7)]
        tournament: usize,
        #[arg(long, default_value_t = 500)]
        gens: usize,
    },
    /// Print the six-multiplexor truth table.
    Target {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Limiting fitness distribution as `fitness,probability` CSV.
    Limit {
        #[arg(long, default_value_t = 6)]
        wires: usize,
        #[arg(long, value_enum, default_value_t = LimitChoice::Finite)]
        kind: LimitChoice,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regenerate the data behind one figure or table.
    Recipe {
        #[arg(value_enum)]
        id: RecipeId,
        #[arg(long, value_enum, default_value_t = Scale::Ci)]
        scale: Scale,
        #[arg(long, env = "REVCIRC_SEED", default_value_t = 1)]
        seed: u64,
        /// Override the scale's samples per length.
        #[arg(long)]
        samples: Option<u64>,
        /// Override the scale's runs per search configuration.
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Re-run a recipe from its manifest.
    Rerun {
        manifest: PathBuf,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum LimitChoice {
    /// Exact limit for the bus (all-zero state fixed).
    Finite,
    /// Independent fair bits.
    Binomial,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long, default_value_t = 6)]
    wires: usize,
    #[arg(long, value_delimiter = ',', default_value = "5,10,20,50,100,200,500")]
    lengths: Vec<usize>,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, env = "REVCIRC_SEED", default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long, default_value_t = 0)]
    output_wire: usize,
    /// Score each circuit on its best wire.
    #[arg(long)]
    best_wire: bool,
    /// Resumable progress file.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SampleArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut c = ExperimentConfig::six_mux(self.wires, self.lengths.clone(), self.samples, self.seed)?;
        c.workers = self.workers;
        c.scoring = if self.best_wire {
            OutputScoring::BestWire
        } else {
            OutputScoring::Fixed(OutputMap::single(self.output_wire))
        };
        c.validate()?;
        Ok(c)
    }

    fn histograms(&self) -> Result<Vec<sampling::FitnessHistogram>> {
        let config = self.config()?;
        Ok(sampling::run_sampling(&config, self.checkpoint.as_deref())?.histograms)
    }
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, default_value_t = 6)]
    wires: usize,
    #[arg(long, default_value_t = 5)]
    gates: usize,
    #[arg(long, default_value_t = 10)]
    runs: usize,
    #[arg(long, env = "REVCIRC_SEED", default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long, default_value_t = 0)]
    output_wire: usize,
    /// Directory for `runs.jsonl`, `solutions.txt` and `summary.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SearchArgs {
    fn problem(&self) -> Problem {
        Problem {
            target: six_multiplexor_target(),
            outputs: OutputMap::single(self.output_wire),
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Write search artifacts into `dir`, or the log to stdout without one.
fn emit_search(dir: Option<&Path>, log: &str, solutions: &[String], summary: serde_json::Value) -> Result<()> {
    match dir {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            emit(Some(&dir.join("runs.jsonl")), log)?;
            let mut text = solutions.join("\n");
            if !text.is_empty() {
                text.push('\n');
            }
            emit(Some(&dir.join("solutions.txt")), &text)?;
            emit(Some(&dir.join("summary.json")), &format!("{summary:#}\n"))?;
            println!("{summary}");
        }
        None => print!("{log}"),
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Sample(args) => emit(args.out.as_deref(), &sampling::histograms_csv(&args.histograms()?)),
        Command::Converge { sample, limit } => {
            let config = sample.config()?;
            let model = match limit {
                LimitChoice::Finite => finite_bus_limit(config.bus, &config.target)?,
                LimitChoice::Binomial => binomial_limit(6, 1),
            };
            let series = sampling::convergence_series(&sample.histograms()?, &model)?;
            emit(sample.out.as_deref(), &series.to_csv())
        }
        Command::Density(args) => {
            let points = sampling::density_points(&args.histograms()?);
            emit(args.out.as_deref(), &sampling::density_csv(&points))
        }
        Command::Minscan {
            wires,
            max_length,
            no_prune,
            limit,
            workers,
            out,
        } => {
            let options = ScanOptions {
                prune: !no_prune,
                limit,
                workers,
                output_wires: None,
            };
            let rows = sampling::exhaustive_scan(Bus::six_mux(wires)?, max_length, &six_multiplexor_target(), &options)?;
            let mut csv = String::from("length,circuits,solutions,best_fitness,example\n");
            for r in &rows {
                let example = r.example.as_ref().map(|c| c.to_string()).unwrap_or_default();
                csv.push_str(&format!("{},{},{},{},{}\n", r.length, r.circuits, r.solutions(), r.best_fitness, example));
            }
            emit(out.as_deref(), &csv)
        }
        Command::Hillclimb { search: args, budget } => {
            let records = search::climb_runs(
                Bus::six_mux(args.wires)?,
                args.gates,
                &args.problem(),
                budget,
                args.runs,
                args.seed,
                args.workers,
            )?;
            let mut log = String::new();
            for (i, r) in records.iter().enumerate() {
                let line = serde_json::json!({
                    "run": i,
                    "seed": args.seed.wrapping_add(i as u64),
                    "final_fitness": r.final_fitness,
                    "solved": r.solved,
                    "evaluations": r.evaluations,
                    "trajectory": r.trajectory,
                });
                log.push_str(&format!("{line}\n"));
            }
            let solutions: Vec<String> = records.iter().filter(|r| r.solved).map(|r| r.circuit.to_string()).collect();
            let summary = serde_json::json!({
                "wires": args.wires,
                "gates": args.gates,
                "runs": args.runs,
                "solved": solutions.len(),
                "final_fitness": records.iter().map(|r| r.final_fitness).collect::<Vec<_>>(),
            });
            emit_search(args.out.as_deref(), &log, &solutions, summary)
        }
        Command::Ga {
            search: args,
            pop,
            tournament,
            gens,
        } => {
            let config = GaConfig {
                bus: Bus::six_mux(args.wires)?,
                length: args.gates,
                population: pop,
                tournament,
                generations: gens,
                problem: args.problem(),
                seed: args.seed,
                workers: args.workers,
            };
            let records = search::evolve_runs(&config, args.runs)?;
            let log: String = records.iter().enumerate().map(|(i, r)| r.to_jsonl(i)).collect();
            let solutions: Vec<String> = records.iter().filter_map(|r| r.solution.as_ref()).map(|c| c.to_string()).collect();
            let effort = search::koza_effort(&records, pop).ok();
            let summary = serde_json::json!({
                "wires": args.wires,
                "gates": args.gates,
                "runs": args.runs,
                "solved": solutions.len(),
                "solved_generations": records.iter().map(|r| r.solved_generation).collect::<Vec<_>>(),
                "effort": effort,
            });
            emit_search(args.out.as_deref(), &log, &solutions, summary)
        }
        Command::Target { out } => emit(out.as_deref(), &six_multiplexor_target().to_text()),
        Command::Limit { wires, kind, out } => {
            let model = match kind {
                LimitChoice::Finite => finite_bus_limit(Bus::six_mux(wires)?, &six_multiplexor_target())?,
                LimitChoice::Binomial => binomial_limit(6, 1),
            };
            let Some(csv) = model.to_csv() else {
                bail!("limit has no tabulated distribution");
            };
            emit(out.as_deref(), &csv)
        }
        Command::Recipe {
            id,
            scale,
            seed,
            samples,
            runs,
            workers,
            out,
        } => {
            let params = RecipeParams::for_scale(id, scale, seed, samples, runs);
            let manifest = recipe::run(&params, workers, &out)?;
            println!("{}", serde_json::to_string(&manifest)?);
            Ok(())
        }
        Command::Rerun { manifest, workers, out } => {
            let text = fs::read_to_string(&manifest).with_context(|| format!("reading {}", manifest.display()))?;
            let saved: recipe::Manifest = serde_json::from_str(&text).context("parsing manifest")?;
            let fresh = recipe::run(&saved.params, workers, &out)?;
            println!("{}", serde_json::to_string(&fresh)?);
            Ok(())
        }
    }
}
