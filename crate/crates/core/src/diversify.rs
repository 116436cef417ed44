//! Recovering several template copies by repeated matching.
//!
//! After each round the best assignment is turned into a penalty mask
//! that down-weights exactly the node pairs it used. Later rounds see
//! the cumulative product of all masks, applied to the similarity
//! matrix, to the score gradient, or to the start point, so the search
//! drifts toward copies that have not been recovered yet.

use alloc::format;
use alloc::vec::Vec;

use crate::fw::{match_restarts, FwConfig, FwPenalty, LayeredPair};
use crate::graph::Assignment;
use crate::mat::Mat;
use crate::rng::mix;
use crate::{Error, Result};

/// One recovered assignment with its down-weighting strength. A matched
/// pair `(i, sigma(i))` is scaled by `1 - eps`; everything else is left
/// alone. `eps` must lie in `[0, 1)` so no entry is zeroed outright.
#[derive(Clone, Debug, PartialEq)]
pub struct PenaltyMask {
    assignment: Assignment,
    eps: f64,
}

impl PenaltyMask {
    pub fn new(assignment: Assignment, eps: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&eps) {
            return Err(Error::Input(format!("eps {eps} must lie in [0, 1)")));
        }
        Ok(PenaltyMask { assignment, eps })
    }

    pub fn assignment(&self) -> &Assignment {
        &self.assignment
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }
}

/// Cumulative factor matrix of a mask stack: entry `(i, j)` is the
/// product of `1 - eps` over every mask whose assignment maps i to j.
pub fn mask_factors(masks: &[PenaltyMask], m: usize, n: usize) -> Result<Mat> {
    let mut factors = Mat::filled(m, n, 1.0);
    scale_by_masks(&mut factors, masks, m, n)?;
    Ok(factors)
}

/// Similarity matrix with the mask stack applied entrywise.
pub fn apply_to_sim(sim: &Mat, masks: &[PenaltyMask]) -> Result<Mat> {
    let mut masked = sim.clone();
    scale_by_masks(&mut masked, masks, sim.rows(), sim.cols())?;
    Ok(masked)
}

fn scale_by_masks(target: &mut Mat, masks: &[PenaltyMask], m: usize, n: usize) -> Result<()> {
    for mask in masks {
        let a = &mask.assignment;
        if a.len() != m {
            return Err(Error::Dimension(format!(
                "mask covers {} template nodes, expected {m}",
                a.len()
            )));
        }
        for i in 0..m {
            let j = a.get(i);
            if j >= n {
                return Err(Error::Dimension(format!(
                    "mask maps node {i} to {j}, beyond background size {n}"
                )));
            }
            target.set(i, j, target.get(i, j) * (1.0 - mask.eps));
        }
    }
    Ok(())
}

/// Down-weighting strength per discovery round.
#[derive(Clone, Debug, PartialEq)]
pub enum PenaltySchedule {
    /// Same strength after every round.
    Fixed(f64),
    /// `values[k]` penalizes the solution found in round k (0-based).
    /// Must cover at least `rounds - 1` entries; extras are ignored.
    PerRound(Vec<f64>),
}

impl PenaltySchedule {
    fn eps_for(&self, round: usize) -> Result<f64> {
        match self {
            PenaltySchedule::Fixed(e) => Ok(*e),
            PenaltySchedule::PerRound(values) => values.get(round).copied().ok_or_else(|| {
                Error::Input(format!(
                    "schedule has {} entries, none for round {}",
                    values.len(),
                    round + 1
                ))
            }),
        }
    }
}

/// Where the cumulative mask is injected into the solver.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiversifyStrategy {
    /// Scale the similarity matrix; changes the objective itself.
    Similarity,
    /// Scale the score gradient each iteration; the objective and line
    /// search stay unpenalized.
    Gradient,
    /// Scale the random start point's template rows, renormalize, and
    /// run the untouched objective from there.
    Initialization,
}

/// Best result of one discovery round.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundRecord {
    pub assignment: Assignment,
    /// Objective of the assignment under the similarity matrix this
    /// round actually optimized (masked under the similarity strategy,
    /// pristine under the other two).
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Digest of the similarity matrix used this round; rounds with
    /// identical similarity input share a digest.
    pub sim_digest: u64,
}

/// Full multi-round history, best assignment per round in order.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscoveryLog {
    pub strategy: DiversifyStrategy,
    pub rounds: Vec<RoundRecord>,
}

impl DiscoveryLog {
    pub fn best_of_round(&self, round: usize) -> &RoundRecord {
        &self.rounds[round]
    }
}

/// FNV-1a over the matrix dimensions and entry bit patterns.
fn digest_mat(mat: &Mat) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    let mut eat = |v: u64| {
        for byte in v.to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    };
    eat(mat.rows() as u64);
    eat(mat.cols() as u64);
    for &v in mat.as_slice() {
        eat(v.to_bits());
    }
    h
}

/// Run `rounds` matching rounds, penalizing each round's best solution
/// before the next. Restart seeds are re-derived per round from the
/// configured master seed, so rounds explore fresh start points.
pub fn discover(
    problem: &LayeredPair,
    sim: &Mat,
    config: &FwConfig,
    schedule: &PenaltySchedule,
    strategy: DiversifyStrategy,
    rounds: usize,
) -> Result<DiscoveryLog> {
    if rounds == 0 {
        return Err(Error::Input("discovery needs at least one round".into()));
    }
    let (m, n) = (problem.m(), problem.n());
    crate::graph::check_sim_shape(sim, m, n)?;
    config.validate(m)?;

    let mut masks: Vec<PenaltyMask> = Vec::new();
    let mut log = DiscoveryLog {
        strategy,
        rounds: Vec::with_capacity(rounds),
    };
    for round in 0..rounds {
        let mut round_config = config.clone();
        round_config.master_seed = mix(config.master_seed, round as u64);

        let masked_sim;
        let factors;
        let (sim_used, penalty) = match strategy {
            DiversifyStrategy::Similarity => {
                masked_sim = apply_to_sim(sim, &masks)?;
                (&masked_sim, FwPenalty::None)
            }
            DiversifyStrategy::Gradient => {
                factors = mask_factors(&masks, m, n)?;
                (sim, FwPenalty::Gradient(&factors))
            }
            DiversifyStrategy::Initialization => {
                factors = mask_factors(&masks, m, n)?;
                (sim, FwPenalty::Init(&factors))
            }
        };
        let results = match_restarts(problem, sim_used, &round_config, &penalty)?;
        let best = results
            .into_iter()
            .next()
            .expect("n_restarts >= 1 is validated");

        if round + 1 < rounds {
            masks.push(PenaltyMask::new(
                best.assignment.clone(),
                schedule.eps_for(round)?,
            )?);
        }
        log.rounds.push(RoundRecord {
            sim_digest: digest_mat(sim_used),
            assignment: best.assignment,
            objective: best.objective,
            iterations: best.iterations,
            converged: best.converged,
        });
    }
    Ok(log)
}
