//! Sweep driver: every (overlap, lambda, penalty) cell times `mc_reps`
//! repetitions, each repetition one full multi-round discovery on a
//! fresh instance. Repetitions are independent tasks with seeds derived
//! from the master seed, so the worker pool may run them in any order
//! while the output tables keep deterministic (cell, rep) order.
//!
//! Instances are keyed by (overlap, rep) only: cells that differ in
//! lambda or penalty strength see the same sampled graphs, which pairs
//! the comparisons across penalty settings.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use gmatch_core::diversify::{discover, PenaltySchedule};
use gmatch_core::fw::{relabel_for_seeds, LayeredPair};
use gmatch_core::graph::{pad, Assignment, Graph};
use gmatch_core::mat::Mat;
use gmatch_core::mcer::{sample_mcer, sample_similarity};
use gmatch_core::rng::{derive_rng, mix};
use rand::Rng;

use crate::config::ExperimentConfig;
use crate::metrics;
use crate::{CliError, Result};

/// One grid cell's parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub k: usize,
    pub lambda: f64,
    pub eps1: f64,
    pub eps2: Option<f64>,
}

/// Cells in emission order: k, then lambda, then eps1, then eps2.
pub fn cells(config: &ExperimentConfig) -> Vec<Cell> {
    let eps2_values: Vec<Option<f64>> = match &config.grid.eps2 {
        Some(values) => values.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let mut out = Vec::new();
    for &k in &config.k_values() {
        for &lambda in &config.grid.lambda {
            for &eps1 in &config.grid.eps1 {
                for &eps2 in &eps2_values {
                    out.push(Cell {
                        k,
                        lambda,
                        eps1,
                        eps2,
                    });
                }
            }
        }
    }
    out
}

/// One repetition's results. Fraction slots beyond the model's template
/// count stay `None` and serialize as empty CSV fields.
#[derive(Clone, Debug, PartialEq)]
pub struct RepRow {
    pub k: usize,
    pub lambda: f64,
    pub eps1: f64,
    pub eps2: Option<f64>,
    pub rep: usize,
    pub label: String,
    pub fracs: [Option<f64>; 3],
    pub ged: f64,
    pub novel_nodes: usize,
    pub objective: f64,
    pub iterations: usize,
    pub wall_ms: u64,
}

/// Per-cell aggregate over repetitions.
#[derive(Clone, Debug, PartialEq)]
pub struct CellRow {
    pub k: usize,
    pub lambda: f64,
    pub eps1: f64,
    pub eps2: Option<f64>,
    pub majority_label: String,
    pub mean_fracs: [Option<f64>; 3],
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GridOutput {
    pub rep_rows: Vec<RepRow>,
    pub cell_rows: Vec<CellRow>,
}

/// Instance fixed on disk, loaded once and shared by all repetitions.
struct FixedData {
    template: Graph,
    background: Graph,
    sim: Mat,
    truths: Vec<Assignment>,
    overlap: Vec<usize>,
}

fn load_fixed(config: &ExperimentConfig) -> Result<Option<FixedData>> {
    let Some(data) = &config.data else {
        return Ok(None);
    };
    let template = crate::io::read_graph(&data.template, None)?;
    let background = crate::io::read_graph(&data.background, None)?;
    let (m, n) = (template.n(), background.n());
    if m > n {
        return Err(CliError::Config(format!(
            "template has {m} nodes, background only {n}"
        )));
    }
    let sim = match &data.similarity {
        Some(path) => {
            let sim = crate::io::read_similarity(path)?;
            if sim.rows() != m || sim.cols() != n {
                return Err(CliError::Config(format!(
                    "similarity is {}x{}, expected {m}x{n}",
                    sim.rows(),
                    sim.cols()
                )));
            }
            sim
        }
        None => {
            if config.grid.lambda.iter().any(|&l| l > 0.0) {
                return Err(CliError::Config(
                    "lambda > 0 needs a similarity matrix".into(),
                ));
            }
            Mat::zeros(m, n)
        }
    };
    let truths = match &data.meta {
        Some(path) => {
            let meta: crate::io::InstanceMeta = crate::io::read_json(path)?;
            if meta.m != m || meta.n != n {
                return Err(CliError::Config(format!(
                    "metadata says {}x{}, graphs are {m}x{n}",
                    meta.m, meta.n
                )));
            }
            meta.truth
                .into_iter()
                .map(|map| Assignment::new(map, n).map_err(CliError::from))
                .collect::<Result<Vec<_>>>()?
        }
        None => Vec::new(),
    };
    // Shared nodes: template nodes every planted copy sends to the same
    // background node. These are the only legitimate seed sources.
    let overlap: Vec<usize> = match truths.split_first() {
        Some((first, rest)) => (0..m)
            .filter(|&i| rest.iter().all(|t| t.get(i) == first.get(i)))
            .collect(),
        None => Vec::new(),
    };
    if config.seeds_from_overlap > overlap.len() {
        return Err(CliError::Config(format!(
            "{} seeds cannot be drawn from {} shared nodes",
            config.seeds_from_overlap,
            overlap.len()
        )));
    }
    Ok(Some(FixedData {
        template,
        background,
        sim,
        truths,
        overlap,
    }))
}

/// Run the whole grid. Deterministic for a fixed config: instance,
/// similarity, seed draws, and matcher streams all derive from the
/// master seed.
pub fn run_grid(config: &ExperimentConfig) -> Result<GridOutput> {
    config.validate()?;
    let fixed = load_fixed(config)?;
    let cell_list = cells(config);
    let tasks: Vec<(usize, usize)> = cell_list
        .iter()
        .enumerate()
        .flat_map(|(ci, _)| (0..config.mc_reps).map(move |rep| (ci, rep)))
        .collect();
    let rep_rows: Vec<RepRow> = tasks
        .par_iter()
        .map(|&(ci, rep)| run_one(config, &cell_list[ci], rep, fixed.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    let cell_rows = aggregate(&cell_list, &rep_rows, config.mc_reps);
    Ok(GridOutput {
        rep_rows,
        cell_rows,
    })
}

fn run_one(
    config: &ExperimentConfig,
    cell: &Cell,
    rep: usize,
    fixed: Option<&FixedData>,
) -> Result<RepRow> {
    let start = config.timing.then(Instant::now);
    let instance_key = match fixed {
        None => mix(config.master_seed, mix(cell.k as u64, rep as u64)),
        Some(_) => mix(config.master_seed, rep as u64),
    };

    let sampled;
    let sampled_sim;
    let sampled_overlap;
    let (template, background, sim, truths, overlap): (
        &Graph,
        &Graph,
        &Mat,
        &[Assignment],
        &[usize],
    ) = match fixed {
        Some(data) => (
            &data.template,
            &data.background,
            &data.sim,
            &data.truths,
            &data.overlap,
        ),
        None => {
            let model = config.model.as_ref().expect("validated");
            let spec = model.to_spec(cell.k);
            sampled = sample_mcer(&spec, &mut derive_rng(instance_key, 0))?;
            let sim_spec = config.similarity.as_ref().expect("validated").to_spec();
            sampled_sim = sample_similarity(&spec, &sim_spec, &mut derive_rng(instance_key, 1))?;
            sampled_overlap = spec.overlap_nodes();
            (
                &sampled.template,
                &sampled.background,
                &sampled_sim,
                &sampled.truth,
                &sampled_overlap,
            )
        }
    };

    let pairs = draw_seed_pairs(overlap, truths, config.seeds_from_overlap, instance_key)?;
    let (ra, rb, rsim, maps) = relabel_for_seeds(template, background, sim, &pairs)?;
    let problem = LayeredPair::single(pad(&ra, &rb, config.scheme.to_core())?);
    let fw = config.matcher.to_fw(
        background.n(),
        cell.lambda,
        pairs.len(),
        mix(instance_key, 3),
    );
    let mut eps = vec![cell.eps1];
    if let Some(e2) = cell.eps2 {
        eps.push(e2);
    }
    let rounds = eps.len() + 1;
    let log = discover(
        &problem,
        &rsim,
        &fw,
        &PenaltySchedule::PerRound(eps),
        config.strategy.to_core(),
        rounds,
    )?;

    let last = log.rounds.last().expect("rounds >= 1");
    let final_a = maps.translate(&last.assignment)?;
    let baseline = maps.translate(&log.rounds[0].assignment)?;

    let mut fracs = [None; 3];
    for (slot, frac) in fracs
        .iter_mut()
        .zip(metrics::template_fractions(&final_a, truths))
    {
        *slot = Some(frac);
    }
    let label = if truths.is_empty() {
        "none".to_string()
    } else {
        metrics::label_string(metrics::recovery_label(
            &final_a,
            truths,
            config.recovery_threshold,
        ))
    };

    Ok(RepRow {
        k: cell.k,
        lambda: cell.lambda,
        eps1: cell.eps1,
        eps2: cell.eps2,
        rep,
        label,
        fracs,
        ged: metrics::ged_proxy(template, background, &final_a),
        novel_nodes: metrics::novel_nodes(&final_a, &baseline),
        objective: last.objective,
        iterations: last.iterations,
        wall_ms: start.map_or(0, |t| t.elapsed().as_millis() as u64),
    })
}

/// Draw `count` distinct template nodes from the shared set (partial
/// Fisher-Yates) and pair each with its common background image.
fn draw_seed_pairs(
    overlap: &[usize],
    truths: &[Assignment],
    count: usize,
    instance_key: u64,
) -> Result<Vec<(usize, usize)>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    if count > overlap.len() {
        return Err(CliError::Config(format!(
            "{count} seeds cannot be drawn from {} shared nodes",
            overlap.len()
        )));
    }
    let first = truths
        .first()
        .ok_or_else(|| CliError::Config("seeding needs planted truths".into()))?;
    let mut pool = overlap.to_vec();
    let mut rng = derive_rng(instance_key, 2);
    for i in 0..count {
        let j = rng.random_range(i..pool.len());
        pool.swap(i, j);
    }
    Ok(pool[..count].iter().map(|&i| (i, first.get(i))).collect())
}

fn aggregate(cell_list: &[Cell], rep_rows: &[RepRow], mc_reps: usize) -> Vec<CellRow> {
    cell_list
        .iter()
        .zip(rep_rows.chunks(mc_reps))
        .map(|(cell, chunk)| {
            // Majority label: strictly most frequent, ties are "none".
            let mut labels: Vec<&str> = chunk.iter().map(|r| r.label.as_str()).collect();
            labels.sort_unstable();
            let mut majority = "none";
            let mut best_count = 0usize;
            let mut tied = false;
            for group in labels.chunk_by(|a, b| a == b) {
                match group.len().cmp(&best_count) {
                    std::cmp::Ordering::Greater => {
                        best_count = group.len();
                        majority = group[0];
                        tied = false;
                    }
                    std::cmp::Ordering::Equal => tied = true,
                    std::cmp::Ordering::Less => {}
                }
            }
            if tied {
                majority = "none";
            }
            let mut mean_fracs = [None; 3];
            for (t, slot) in mean_fracs.iter_mut().enumerate() {
                let values: Vec<f64> = chunk.iter().filter_map(|r| r.fracs[t]).collect();
                if !values.is_empty() {
                    *slot = Some(values.iter().sum::<f64>() / values.len() as f64);
                }
            }
            CellRow {
                k: cell.k,
                lambda: cell.lambda,
                eps1: cell.eps1,
                eps2: cell.eps2,
                majority_label: majority.to_string(),
                mean_fracs,
            }
        })
        .collect()
}

pub const PER_REP_HEADER: [&str; 14] = [
    "k",
    "lambda",
    "eps1",
    "eps2",
    "rep",
    "label",
    "frac_t1",
    "frac_t2",
    "frac_t3",
    "ged",
    "novel_nodes",
    "objective",
    "iterations",
    "wall_ms",
];

pub const AGGREGATE_HEADER: [&str; 8] = [
    "k",
    "lambda",
    "eps1",
    "eps2",
    "majority_label",
    "mean_frac_t1",
    "mean_frac_t2",
    "mean_frac_t3",
];

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x}"))
}

/// Write both CSV tables: one row per repetition and one per cell.
pub fn emit_results(output: &GridOutput, per_rep: &Path, aggregate: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(per_rep)
        .map_err(|e| CliError::Io(format!("{}: {e}", per_rep.display())))?;
    writer.write_record(PER_REP_HEADER)?;
    for row in &output.rep_rows {
        writer.write_record([
            row.k.to_string(),
            format!("{}", row.lambda),
            format!("{}", row.eps1),
            fmt_opt(row.eps2),
            row.rep.to_string(),
            row.label.clone(),
            fmt_opt(row.fracs[0]),
            fmt_opt(row.fracs[1]),
            fmt_opt(row.fracs[2]),
            format!("{}", row.ged),
            row.novel_nodes.to_string(),
            format!("{}", row.objective),
            row.iterations.to_string(),
            row.wall_ms.to_string(),
        ])?;
    }
    writer.flush()?;

    let mut writer = csv::Writer::from_path(aggregate)
        .map_err(|e| CliError::Io(format!("{}: {e}", aggregate.display())))?;
    writer.write_record(AGGREGATE_HEADER)?;
    for row in &output.cell_rows {
        writer.write_record([
            row.k.to_string(),
            format!("{}", row.lambda),
            format!("{}", row.eps1),
            fmt_opt(row.eps2),
            row.majority_label.clone(),
            fmt_opt(row.mean_fracs[0]),
            fmt_opt(row.mean_fracs[1]),
            fmt_opt(row.mean_fracs[2]),
        ])?;
    }
    writer.flush()?;
    Ok(())
}
