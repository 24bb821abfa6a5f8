// SPDX-License-Identifier: Apache-2.0

//! Self-contained pipelines that regenerate the data behind each figure
//! and table, plus the manifest that makes them repeatable.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::ValueEnum;
use revcirc::sampling::{self, ExperimentConfig, FitnessHistogram, OutputScoring};
use revcirc::search::{self, GaConfig, Problem};
use revcirc::theory::{self, finite_bus_limit, RmsRegime};
use revcirc::{binomial_limit, normalized_limit, rms_limit, six_multiplexor_target, Bus};
use serde::{Deserialize, Serialize};

const LENGTHS: [usize; 7] = [5, 10, 20, 50, 100, 200, 500];
const DENSITY_LENGTHS: [usize; 11] = [5, 6, 7, 8, 9, 10, 12, 15, 20, 30, 50];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecipeId {
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    Fig10,
    Table1,
    Table3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Ci,
    Full,
}

/// Everything that determines a recipe's output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecipeParams {
    pub recipe: RecipeId,
    pub scale: Scale,
    pub seed: u64,
    pub samples_per_length: u64,
    pub runs: usize,
}

impl RecipeParams {
    pub fn for_scale(recipe: RecipeId, scale: Scale, seed: u64, samples: Option<u64>, runs: Option<usize>) -> Self {
        let default_samples = match scale {
            Scale::Ci => 1_000_000,
            Scale::Full => 100_000_000,
        };
        Self {
            recipe,
            scale,
            seed,
            samples_per_length: samples.unwrap_or(default_samples),
            runs: runs.unwrap_or(10),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub params: RecipeParams,
    pub version: String,
    pub wall_seconds: f64,
    pub files: Vec<String>,
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl Writer<'_> {
    fn write(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }
}

fn sample(wires: usize, lengths: &[usize], p: &RecipeParams, scoring: OutputScoring, workers: usize) -> Result<Vec<FitnessHistogram>> {
    // Each bus width gets its own seed so recipes sharing a width agree.
    let mut config = ExperimentConfig::six_mux(wires, lengths.to_vec(), p.samples_per_length, p.seed.wrapping_add(wires as u64))?;
    config.scoring = scoring;
    config.workers = workers;
    Ok(sampling::sample_distribution(&config)?)
}

fn fixed() -> OutputScoring {
    OutputScoring::Fixed(Default::default())
}

fn histogram_figure(wires: usize, p: &RecipeParams, workers: usize, w: &mut Writer) -> Result<()> {
    let hists = sample(wires, &LENGTHS, p, fixed(), workers)?;
    w.write("histograms.csv", &sampling::histograms_csv(&hists))?;
    let bus = Bus::six_mux(wires)?;
    let limit = finite_bus_limit(bus, &six_multiplexor_target())?;
    let pmf = limit.pmf.as_deref().unwrap_or_default();
    let even_only = wires == 6;
    let normal = theory::normal_approximation(limit.mean, limit.sd, pmf.len(), |f| !even_only || f % 2 == 0);
    let binomial = binomial_limit(6, 1).pmf.unwrap_or_default();
    let mut csv = String::from("fitness,limit,normal,binomial\n");
    for f in 0..pmf.len() {
        let _ = writeln!(csv, "{f},{:e},{:e},{:e}", pmf[f], normal[f], binomial[f]);
    }
    w.write("limit.csv", &csv)
}

fn convergence_figure(p: &RecipeParams, workers: usize, w: &mut Writer, tvd: bool) -> Result<()> {
    let mut csv = if tvd {
        String::from("wires,length,tvd_limit,tvd_limit_se,tvd_binomial\n")
    } else {
        String::from("wires,length,mean,sd,limit_mean,limit_sd\n")
    };
    let binomial = binomial_limit(6, 1);
    for wires in [6, 7, 12] {
        let hists = sample(wires, &LENGTHS, p, fixed(), workers)?;
        let limit = finite_bus_limit(Bus::six_mux(wires)?, &six_multiplexor_target())?;
        let exact = sampling::convergence_series(&hists, &limit)?;
        let coin = sampling::convergence_series(&hists, &binomial)?;
        for (a, b) in exact.points.iter().zip(&coin.points) {
            if tvd {
                let _ = writeln!(csv, "{wires},{},{:.6},{:.6},{:.6}", a.length, a.tvd, a.tvd_se, b.tvd);
            } else {
                let _ = writeln!(csv, "{wires},{},{:.6},{:.6},{:.6},{:.6}", a.length, a.mean, a.sd, limit.mean, limit.sd);
            }
        }
    }
    w.write(if tvd { "tvd.csv" } else { "moments.csv" }, &csv)
}

fn density_figure(p: &RecipeParams, workers: usize, w: &mut Writer) -> Result<()> {
    let mut csv = String::from("wires,length,solutions,total,rate,rate_low,rate_high\n");
    for wires in [6, 7, 12] {
        let hists = sample(wires, &DENSITY_LENGTHS, p, OutputScoring::BestWire, workers)?;
        for d in sampling::density_points(&hists) {
            let _ = writeln!(
                csv,
                "{wires},{},{},{},{:e},{:e},{:e}",
                d.length, d.solutions, d.total, d.rate, d.rate_low, d.rate_high
            );
        }
    }
    w.write("density.csv", &csv)
}

fn table1(p: &RecipeParams, workers: usize, w: &mut Writer) -> Result<()> {
    let mut csv = String::from("wires,gates,method,solved,runs,final_fitness\n");
    let mut log = String::new();
    let mut effort = String::from("wires,gates,runs,effort,generation,success_probability,runs_required\n");
    for (wires, gates) in [(6usize, 5usize), (12, 20)] {
        let bus = Bus::six_mux(wires)?;
        let seed = p.seed.wrapping_add((wires * 1000 + gates) as u64);
        let climbs = search::climb_runs(
            bus,
            gates,
            &Problem::six_mux(),
            search::DEFAULT_CLIMB_BUDGET,
            p.runs,
            seed,
            workers,
        )?;
        let finals: Vec<String> = climbs.iter().map(|r| r.final_fitness.to_string()).collect();
        let solved = climbs.iter().filter(|r| r.solved).count();
        let _ = writeln!(csv, "{wires},{gates},hillclimb,{solved},{},{}", p.runs, finals.join(" "));

        let mut config = GaConfig::six_mux(wires, gates, seed)?;
        config.workers = workers;
        let runs = search::evolve_runs(&config, p.runs)?;
        let finals: Vec<String> = runs
            .iter()
            .map(|r| r.best_per_generation.last().copied().unwrap_or(0).to_string())
            .collect();
        let solved = runs.iter().filter(|r| r.solved).count();
        let _ = writeln!(csv, "{wires},{gates},ga,{solved},{},{}", p.runs, finals.join(" "));
        for (i, r) in runs.iter().enumerate() {
            for line in r.to_jsonl(i).lines() {
                let _ = writeln!(log, "{{\"wires\":{wires},\"gates\":{gates},{}", &line[1..]);
            }
        }
        match search::koza_effort(&runs, config.population) {
            Ok(e) => {
                let _ = writeln!(
                    effort,
                    "{wires},{gates},{},{},{},{:.4},{}",
                    p.runs, e.individuals, e.generation, e.success_probability, e.runs_required
                );
            }
            Err(_) => {
                let _ = writeln!(effort, "{wires},{gates},{},,,0,", p.runs);
            }
        }
    }
    w.write("table1.csv", &csv)?;
    w.write("effort.csv", &effort)?;
    w.write("ga_runs.jsonl", &log)
}

fn table3(w: &mut Writer) -> Result<()> {
    let mut csv = String::from("row,n,m,mean,sd\n");
    let (n, m) = (6, 1);
    let b = binomial_limit(n, m);
    let _ = writeln!(csv, "hamming,{n},{m},{},{}", b.mean, b.sd);
    let (mean, sd) = normalized_limit(n, m);
    let _ = writeln!(csv, "normalized,{n},{m},{mean},{sd:.6}");
    for bits in [8, 16] {
        let (mean, sd) = rms_limit(bits, RmsRegime::SmallT);
        let _ = writeln!(csv, "rms_small_t,,{bits},{mean:.4},{sd:.4}");
        let (mean, sd) = rms_limit(bits, RmsRegime::ExhaustiveUniform);
        let _ = writeln!(csv, "rms_exhaustive,,{bits},{mean:.4},{sd:.4}");
    }
    w.write("table3.csv", &csv)
}

/// Run a recipe into `dir` and write its `manifest.json`.
pub fn run(params: &RecipeParams, workers: usize, dir: &Path) -> Result<Manifest> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let start = Instant::now();
    let mut w = Writer { dir, files: Vec::new() };
    match params.recipe {
        RecipeId::Fig4 => histogram_figure(6, params, workers, &mut w)?,
        RecipeId::Fig5 => histogram_figure(7, params, workers, &mut w)?,
        RecipeId::Fig6 => histogram_figure(12, params, workers, &mut w)?,
        RecipeId::Fig7 => convergence_figure(params, workers, &mut w, true)?,
        RecipeId::Fig8 => convergence_figure(params, workers, &mut w, false)?,
        RecipeId::Fig10 => density_figure(params, workers, &mut w)?,
        RecipeId::Table1 => table1(params, workers, &mut w)?,
        RecipeId::Table3 => table3(&mut w)?,
    }
    let manifest = Manifest {
        params: params.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_seconds: start.elapsed().as_secs_f64(),
        files: w.files,
    };
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(manifest)
}
