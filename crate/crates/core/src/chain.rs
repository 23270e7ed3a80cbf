//! Chains of measure-and-undo rounds ("hexagons") with postselection.
//!
//! One hexagon is: partial measurement, X flip, second measurement postselected
//! on repeating the first outcome, X flip back.  A chain runs a fixed number of
//! hexagons and aborts on the first failed undo.  Monte Carlo ensembles are
//! backed by [`enumerate_exact`], which multiplies the branch probabilities of
//! every path through the chain and serves as the exact oracle for all sampled
//! statistics.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::{Outcome, PartialMeasurement};
use crate::qubit::{Operator2, PureState};
use crate::rng;

/// Exact enumeration is capped: a depth-`d` chain has `4^d` branch patterns.
pub const MAX_ENUM_DEPTH: usize = 6;

/// Ensemble geometry: `n_hexagons` undo rounds per chain, `trials` chains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub n_hexagons: usize,
    pub trials: u64,
    pub master_seed: u64,
}

impl ChainConfig {
    pub fn new(n_hexagons: usize, trials: u64, master_seed: u64) -> Result<Self> {
        if n_hexagons == 0 {
            return Err(Error::InvalidConfig {
                detail: "a chain needs at least one hexagon".into(),
            });
        }
        if trials == 0 {
            return Err(Error::InvalidConfig {
                detail: "an ensemble needs at least one trial".into(),
            });
        }
        Ok(Self {
            n_hexagons,
            trials,
            master_seed,
        })
    }
}

/// Record of a single chain: first-measurement outcomes per hexagon, whether
/// every undo succeeded, and where the chain stopped if one failed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryLog {
    /// First-measurement outcome of each attempted hexagon (the failed one
    /// included, as the final entry).
    pub outcomes: Vec<Outcome>,
    pub completed: bool,
    /// Index of the hexagon whose undo failed; `None` iff `completed`.
    pub fail_index: Option<usize>,
}

/// Postselected outcome tallies: `n_m` hexagons survived via the null-outcome
/// path, `n_mbar` via the complementary one.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRecord {
    pub n_m: u64,
    pub n_mbar: u64,
}

impl CountRecord {
    pub fn new(n_m: u64, n_mbar: u64) -> Self {
        Self { n_m, n_mbar }
    }

    pub fn total(&self) -> u64 {
        self.n_m + self.n_mbar
    }
}

/// Aggregate statistics of a chain ensemble.
///
/// Postselected fractions condition on completed chains; the per-hexagon path
/// rates are the unnormalized per-attempt frequencies whose exact values are
/// `(1-p)(1-q)` and `p q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    /// Successful-hexagon tallies within completed chains.
    pub counts: CountRecord,
    pub completed_chains: u64,
    pub failed_chains: u64,
    /// completed / trials
    pub completion_rate: f64,
    /// Hexagons started, over all chains (failed ones included).
    pub hexagons_attempted: u64,
    /// Successful null-path hexagons per attempt; exact value `(1-p)(1-q)`.
    pub m_path_rate: f64,
    /// Successful complementary-path hexagons per attempt; exact value `p q`.
    pub mbar_path_rate: f64,
    /// `counts.n_m / counts.total()`; exact value
    /// `(1-p)(1-q) / [(1-p)(1-q) + p q]`.
    pub postselected_m_fraction: f64,
    pub postselected_mbar_fraction: f64,
}

/// One measure-and-undo round.  Returns the first outcome, whether the undo
/// succeeded, and the resulting state (the restored input on success, the
/// failed branch otherwise).
pub fn run_hexagon<R: rand::Rng + ?Sized>(
    pm: &PartialMeasurement,
    psi: &PureState,
    rng: &mut R,
) -> Result<(Outcome, bool, PureState)> {
    require_invertible(pm)?;
    let (outcome, post) = pm.sample_measure(psi, rng);
    let (ok, state) = pm.reversal_round(&post, outcome, rng);
    Ok((outcome, ok, state))
}

/// Runs one chain of `cfg.n_hexagons` hexagons, aborting on the first failed
/// undo.
pub fn run_chain<R: rand::Rng + ?Sized>(
    pm: &PartialMeasurement,
    psi: &PureState,
    cfg: &ChainConfig,
    rng: &mut R,
) -> Result<TrajectoryLog> {
    require_invertible(pm)?;
    let mut outcomes = Vec::with_capacity(cfg.n_hexagons);
    let mut state = *psi;
    for index in 0..cfg.n_hexagons {
        let (outcome, ok, next) = run_hexagon(pm, &state, rng)?;
        outcomes.push(outcome);
        if !ok {
            return Ok(TrajectoryLog {
                outcomes,
                completed: false,
                fail_index: Some(index),
            });
        }
        state = next;
    }
    Ok(TrajectoryLog {
        outcomes,
        completed: true,
        fail_index: None,
    })
}

/// Runs `cfg.trials` independent chains and aggregates exact integer tallies.
///
/// Each trial draws from its own counter-based substream of
/// `cfg.master_seed`, so the statistics are reproducible bit-for-bit
/// regardless of how many rayon workers execute the trials.
pub fn simulate_ensemble(
    pm: &PartialMeasurement,
    psi: &PureState,
    cfg: &ChainConfig,
) -> Result<EnsembleStats> {
    require_invertible(pm)?;

    #[derive(Default, Clone, Copy)]
    struct Tally {
        completed: u64,
        failed: u64,
        attempted: u64,
        m_all: u64,
        mbar_all: u64,
        m_completed: u64,
        mbar_completed: u64,
    }

    let tally = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = rng::substream(cfg.master_seed, trial);
            let log = run_chain(pm, psi, cfg, &mut rng)
                .expect("invertibility was checked before the parallel loop");
            let mut t = Tally::default();
            t.attempted = log.outcomes.len() as u64;
            let successful = if log.completed {
                t.completed = 1;
                &log.outcomes[..]
            } else {
                t.failed = 1;
                &log.outcomes[..log.outcomes.len() - 1]
            };
            for outcome in successful {
                match outcome {
                    Outcome::M => t.m_all += 1,
                    Outcome::MBar => t.mbar_all += 1,
                }
            }
            if log.completed {
                t.m_completed = t.m_all;
                t.mbar_completed = t.mbar_all;
            }
            t
        })
        .reduce(Tally::default, |a, b| Tally {
            completed: a.completed + b.completed,
            failed: a.failed + b.failed,
            attempted: a.attempted + b.attempted,
            m_all: a.m_all + b.m_all,
            mbar_all: a.mbar_all + b.mbar_all,
            m_completed: a.m_completed + b.m_completed,
            mbar_completed: a.mbar_completed + b.mbar_completed,
        });

    let counts = CountRecord::new(tally.m_completed, tally.mbar_completed);
    let postselected_total = counts.total();
    let frac = |num: u64| {
        if postselected_total == 0 {
            f64::NAN
        } else {
            num as f64 / postselected_total as f64
        }
    };
    Ok(EnsembleStats {
        counts,
        completed_chains: tally.completed,
        failed_chains: tally.failed,
        completion_rate: tally.completed as f64 / cfg.trials as f64,
        hexagons_attempted: tally.attempted,
        m_path_rate: tally.m_all as f64 / tally.attempted as f64,
        mbar_path_rate: tally.mbar_all as f64 / tally.attempted as f64,
        postselected_m_fraction: frac(counts.n_m),
        postselected_mbar_fraction: frac(counts.n_mbar),
    })
}

/// One hexagon branch in an enumerated path: the first-measurement outcome and
/// whether the postselected undo repeated it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PathStep {
    pub outcome: Outcome,
    pub reversed: bool,
}

/// Exact distribution over chain paths.  A path is a sequence of
/// [`PathStep`]s; only the final step may have `reversed = false` because a
/// failed undo aborts the chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathDistribution {
    depth: usize,
    paths: BTreeMap<Vec<PathStep>, f64>,
}

impl PathDistribution {
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<PathStep>, f64)> {
        self.paths.iter().map(|(k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Sums to 1 for any state: the branches exhaust the sample space.
    pub fn total_probability(&self) -> f64 {
        self.paths.values().sum()
    }

    /// Probability that all `depth` hexagons complete; the exact value is
    /// `[(1-p)(1-q) + p q]^depth` independent of the state.
    pub fn completion_probability(&self) -> f64 {
        self.completed().map(|(_, w)| w).sum()
    }

    /// Completed paths and their unconditional probabilities.
    pub fn completed(&self) -> impl Iterator<Item = (&Vec<PathStep>, f64)> {
        let depth = self.depth;
        self.paths
            .iter()
            .filter(move |(steps, _)| steps.len() == depth && steps.iter().all(|s| s.reversed))
            .map(|(k, &v)| (k, v))
    }

    /// Outcome records of completed chains, conditioned on completion.
    /// This is the distribution an observer of the postselected record sees.
    pub fn completed_record_distribution(&self) -> BTreeMap<Vec<Outcome>, f64> {
        let total = self.completion_probability();
        let mut out = BTreeMap::new();
        if total <= 0.0 {
            return out;
        }
        for (steps, w) in self.completed() {
            let record: Vec<Outcome> = steps.iter().map(|s| s.outcome).collect();
            *out.entry(record).or_insert(0.0) += w / total;
        }
        out
    }
}

/// Exhaustively enumerates every path of a depth-`depth` chain, multiplying
/// the Born probability of each first measurement by the conditional
/// probability of its undo check.  Both factors are computed from the actual
/// collapsed state vectors, so this function is an independent route to the
/// closed-form path probabilities `(1-p)(1-q)` and `p q`.
pub fn enumerate_exact(
    pm: &PartialMeasurement,
    psi: &PureState,
    depth: usize,
) -> Result<PathDistribution> {
    require_invertible(pm)?;
    if depth == 0 {
        return Err(Error::InvalidConfig {
            detail: "enumeration depth must be at least 1".into(),
        });
    }
    if depth > MAX_ENUM_DEPTH {
        return Err(Error::DepthTooLarge {
            depth,
            max: MAX_ENUM_DEPTH,
        });
    }
    let mut paths = BTreeMap::new();
    let mut prefix = Vec::with_capacity(depth);
    descend(pm, psi, depth, 1.0, &mut prefix, &mut paths)?;
    Ok(PathDistribution { depth, paths })
}

fn descend(
    pm: &PartialMeasurement,
    psi: &PureState,
    remaining: usize,
    weight: f64,
    prefix: &mut Vec<PathStep>,
    paths: &mut BTreeMap<Vec<PathStep>, f64>,
) -> Result<()> {
    if remaining == 0 {
        paths.insert(prefix.clone(), weight);
        return Ok(());
    }
    let x = Operator2::pauli_x();
    let (p_m, p_mbar) = pm.outcome_probabilities(psi);
    for (outcome, prior) in [(Outcome::M, p_m), (Outcome::MBar, p_mbar)] {
        if prior <= 0.0 {
            continue; // zero-probability branches are omitted
        }
        let (post, _) = pm.collapse(psi, outcome)?;
        let (flipped, _) = x.apply_normalized(&post)?;
        let (s_m, s_mbar) = pm.outcome_probabilities(&flipped);
        let (repeat_prob, fail_prob) = match outcome {
            Outcome::M => (s_m, s_mbar),
            Outcome::MBar => (s_mbar, s_m),
        };

        if fail_prob > 0.0 {
            prefix.push(PathStep {
                outcome,
                reversed: false,
            });
            paths.insert(prefix.clone(), weight * prior * fail_prob);
            prefix.pop();
        }

        if repeat_prob > 0.0 {
            // Complete the undo: collapse onto the repeated outcome, flip back.
            let (second, _) = pm.collapse(&flipped, outcome)?;
            let (restored, _) = x.apply_normalized(&second)?;
            prefix.push(PathStep {
                outcome,
                reversed: true,
            });
            descend(
                pm,
                &restored,
                remaining - 1,
                weight * prior * repeat_prob,
                prefix,
                paths,
            )?;
            prefix.pop();
        }
    }
    Ok(())
}

fn require_invertible(pm: &PartialMeasurement) -> Result<()> {
    if !pm.is_invertible() {
        return Err(Error::NotInvertible { p: pm.p(), q: pm.q() });
    }
    Ok(())
}
