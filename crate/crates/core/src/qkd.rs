//! B92 key distribution with a pluggable eavesdropper.
//!
//! Alice encodes bit 0 as `|0>` and bit 1 as `|+>`; Bob measures Z for his
//! bit 0 and X for his bit 1 and keeps only rounds whose result is −1, which
//! pins Alice's bit to the complement of his own.  Two eavesdroppers are
//! provided: a measure-and-reverse Eve who runs undo rounds on the qubit in
//! flight and forwards it only when every undo succeeds (undetectable in the
//! sifted key, but — as the mutual-information estimate shows — also
//! uninformed), and an intercept-resend Eve whose disturbance shows up as a
//! strictly positive sifted-key error rate.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::chain::run_hexagon;
use crate::error::{Error, Result};
use crate::measurement::{Outcome, PartialMeasurement};
use crate::qubit::PureState;
use crate::rng;

/// Smallest contingency-table total the plug-in estimator accepts.
pub const MIN_MI_SAMPLES: u64 = 1000;
/// Cap on Eve's undo rounds per qubit: her record alphabet (and the mutual
/// information table) grows as `2^rounds`.
pub const MAX_EVE_ROUNDS: u32 = 16;

/// Measurement basis of an intercept-resend eavesdropper.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EveBasis {
    Z,
    X,
}

/// What the eavesdropper does to each qubit in flight.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum EveStrategy {
    /// Untouched channel.
    None,
    /// Runs `rounds` measure-and-undo rounds with strengths `(p, q)`; forwards
    /// the qubit only when every undo succeeds, keeping the outcome record.
    MeasureReverse { p: f64, q: f64, rounds: u32 },
    /// Projectively measures in `basis` and resends the eigenstate found.
    InterceptResend { basis: EveBasis },
}

/// Protocol configuration: number of rounds, seed for the per-round
/// substreams, and the eavesdropper.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct B92Config {
    pub n_rounds: u64,
    pub master_seed: u64,
    pub eve: EveStrategy,
}

impl B92Config {
    pub fn new(n_rounds: u64, master_seed: u64, eve: EveStrategy) -> Result<Self> {
        let cfg = Self {
            n_rounds,
            master_seed,
            eve,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Re-checked by [`run_b92`] since the fields are public.
    fn validate(&self) -> Result<()> {
        if self.n_rounds == 0 {
            return Err(Error::InvalidConfig {
                detail: "the protocol needs at least one round".into(),
            });
        }
        if let EveStrategy::MeasureReverse { p, q, rounds } = self.eve {
            let pm = PartialMeasurement::new(p, q)?;
            if !pm.is_invertible() {
                return Err(Error::NotInvertible { p, q });
            }
            if rounds == 0 || rounds > MAX_EVE_ROUNDS {
                return Err(Error::InvalidConfig {
                    detail: format!(
                        "eavesdropper rounds per qubit must be in 1..={MAX_EVE_ROUNDS}, got {rounds}"
                    ),
                });
            }
        }
        Ok(())
    }
}

/// One protocol round.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundRecord {
    pub alice_bit: u8,
    /// Bob's basis bit: 0 measures Z, 1 measures X.
    pub bob_choice: u8,
    /// Bob's eigenvalue, `None` when the qubit never arrived.
    pub bob_result: Option<i8>,
    /// Result −1 on a delivered qubit: the round enters the key, with Alice's
    /// bit read off as the complement of Bob's.
    pub sifted: bool,
    pub qubit_lost: bool,
    /// The eavesdropper's outcome record, present exactly when she forwarded
    /// a qubit she had measured.
    pub eve_record: Option<Vec<Outcome>>,
}

/// All rounds of one protocol run, in round order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Transcript {
    pub rounds: Vec<RoundRecord>,
}

/// Plug-in mutual information estimate from a contingency table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MIEstimate {
    pub bits: f64,
    pub n_samples: u64,
}

/// Aggregate statistics of a protocol run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct B92Stats {
    pub n_rounds: u64,
    pub sifted: u64,
    pub sift_rate: f64,
    /// Sifted rounds where Alice's bit is not the complement of Bob's.
    pub sifted_errors: u64,
    /// Error fraction of the sifted key; 0 when nothing was sifted.
    pub error_rate: f64,
    pub lost: u64,
    pub loss_rate: f64,
    /// Rounds the eavesdropper measured and still delivered.
    pub forwarded_with_record: u64,
    /// Estimated information (bits) the eavesdropper's record carries about
    /// Alice's bit; present for a measure-and-reverse Eve with enough
    /// forwarded rounds to estimate from.
    pub eve_mutual_information: Option<MIEstimate>,
}

/// Alice's signal state for her bit.
pub fn alice_state(bit: u8) -> PureState {
    if bit == 0 {
        PureState::zero()
    } else {
        PureState::plus()
    }
}

/// Probability that Bob's measurement returns −1: the `|1>` weight when his
/// choice bit is 0 (Z basis), the `|->` weight when it is 1 (X basis).
pub fn bob_minus_probability(psi: &PureState, choice: u8) -> f64 {
    if choice == 0 {
        psi.prob_one()
    } else {
        (psi.alpha() - psi.beta()).norm_sqr() * 0.5
    }
}

fn basis_probs(psi: &PureState, basis: EveBasis) -> (f64, f64) {
    match basis {
        EveBasis::Z => (psi.prob_zero(), psi.prob_one()),
        EveBasis::X => {
            let p_plus = (psi.alpha() + psi.beta()).norm_sqr() * 0.5;
            (p_plus, (1.0 - p_plus).max(0.0))
        }
    }
}

fn basis_states(basis: EveBasis) -> [PureState; 2] {
    match basis {
        EveBasis::Z => [PureState::zero(), PureState::one()],
        EveBasis::X => [PureState::plus(), PureState::minus()],
    }
}

/// What the measure-and-reverse eavesdropper did with one qubit.
#[derive(Debug, Clone, PartialEq)]
pub enum EveOutcome {
    /// Every undo succeeded: the qubit goes on (restored) and Eve keeps the
    /// outcome record.
    Forwarded {
        state: PureState,
        record: Vec<Outcome>,
    },
    /// An undo failed; Eve keeps the qubit and the channel stays empty.
    Absorbed { partial_record: Vec<Outcome> },
}

/// Runs `rounds` measure-and-undo rounds on an intercepted qubit.  Forwards
/// only on full success; the forwarded state equals the input exactly, so the
/// interception is invisible downstream.
pub fn eve_measure_reverse<R: Rng + ?Sized>(
    state: &PureState,
    pm: &PartialMeasurement,
    rounds: u32,
    rng: &mut R,
) -> Result<EveOutcome> {
    let mut current = *state;
    let mut record = Vec::with_capacity(rounds as usize);
    for _ in 0..rounds {
        let (outcome, ok, next) = run_hexagon(pm, &current, rng)?;
        record.push(outcome);
        if !ok {
            return Ok(EveOutcome::Absorbed {
                partial_record: record,
            });
        }
        current = next;
    }
    Ok(EveOutcome::Forwarded {
        state: current,
        record,
    })
}

/// Plays one round: Alice encodes `a`, Eve intervenes, Bob measures with
/// basis bit `a_prime` and sifting applies.
pub fn b92_round<R: Rng + ?Sized>(
    a: u8,
    a_prime: u8,
    eve: &EveStrategy,
    rng: &mut R,
) -> Result<RoundRecord> {
    let sent = alice_state(a);
    let (delivered, eve_record) = match eve {
        EveStrategy::None => (Some(sent), None),
        EveStrategy::MeasureReverse { p, q, rounds } => {
            let pm = PartialMeasurement::new(*p, *q)?;
            match eve_measure_reverse(&sent, &pm, *rounds, rng)? {
                EveOutcome::Forwarded { state, record } => (Some(state), Some(record)),
                EveOutcome::Absorbed { .. } => (None, None),
            }
        }
        EveStrategy::InterceptResend { basis } => {
            let (w0, _) = basis_probs(&sent, *basis);
            let k = usize::from(rng.gen::<f64>() >= w0);
            (Some(basis_states(*basis)[k]), None)
        }
    };

    match delivered {
        Some(state) => {
            let p_minus = bob_minus_probability(&state, a_prime);
            let minus = rng.gen::<f64>() < p_minus;
            Ok(RoundRecord {
                alice_bit: a,
                bob_choice: a_prime,
                bob_result: Some(if minus { -1 } else { 1 }),
                sifted: minus,
                qubit_lost: false,
                eve_record,
            })
        }
        None => Ok(RoundRecord {
            alice_bit: a,
            bob_choice: a_prime,
            bob_result: None,
            sifted: false,
            qubit_lost: true,
            eve_record: None,
        }),
    }
}

/// Runs the full protocol.  Rounds are independent and executed in parallel,
/// each on its own seed substream, so the transcript depends only on the
/// configuration.
pub fn run_b92(cfg: &B92Config) -> Result<(Transcript, B92Stats)> {
    cfg.validate()?;
    let rounds: Vec<RoundRecord> = (0..cfg.n_rounds)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::substream(cfg.master_seed, i);
            let a = u8::from(rng.gen::<f64>() < 0.5);
            let a_prime = u8::from(rng.gen::<f64>() < 0.5);
            b92_round(a, a_prime, &cfg.eve, &mut rng)
        })
        .collect::<Result<_>>()?;

    let mut sifted = 0u64;
    let mut sifted_errors = 0u64;
    let mut lost = 0u64;
    let mut forwarded_with_record = 0u64;
    for r in &rounds {
        if r.qubit_lost {
            lost += 1;
        }
        if r.eve_record.is_some() {
            forwarded_with_record += 1;
        }
        if r.sifted {
            sifted += 1;
            if r.alice_bit != 1 - r.bob_choice {
                sifted_errors += 1;
            }
        }
    }

    let eve_mutual_information = if let EveStrategy::MeasureReverse { rounds: n, .. } = cfg.eve {
        let table = record_table(&rounds, n);
        match mutual_information(&table) {
            Ok(est) => Some(est),
            Err(Error::UndersizedTable { .. }) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };

    let n = cfg.n_rounds as f64;
    let stats = B92Stats {
        n_rounds: cfg.n_rounds,
        sifted,
        sift_rate: sifted as f64 / n,
        sifted_errors,
        error_rate: if sifted > 0 {
            sifted_errors as f64 / sifted as f64
        } else {
            0.0
        },
        lost,
        loss_rate: lost as f64 / n,
        forwarded_with_record,
        eve_mutual_information,
    };
    Ok((Transcript { rounds }, stats))
}

/// Contingency table of (Alice's bit) × (Eve's record, read as a binary
/// number with the first outcome most significant) over forwarded rounds.
fn record_table(rounds: &[RoundRecord], eve_rounds: u32) -> Vec<Vec<u64>> {
    let k = 1usize << eve_rounds;
    let mut table = vec![vec![0u64; k]; 2];
    for r in rounds {
        if let Some(record) = &r.eve_record {
            let idx = record
                .iter()
                .fold(0usize, |acc, o| acc * 2 + usize::from(*o == Outcome::MBar));
            table[r.alice_bit as usize][idx] += 1;
        }
    }
    table
}

/// Plug-in mutual information (bits) of a contingency table of counts.
/// Rows must be equally long and the total must reach [`MIN_MI_SAMPLES`].
pub fn mutual_information(joint_counts: &[Vec<u64>]) -> Result<MIEstimate> {
    if joint_counts.is_empty() || joint_counts[0].is_empty() {
        return Err(Error::InvalidDistribution {
            detail: "contingency table must have at least one row and column".into(),
        });
    }
    let width = joint_counts[0].len();
    if joint_counts.iter().any(|row| row.len() != width) {
        return Err(Error::InvalidDistribution {
            detail: "contingency table rows must have equal length".into(),
        });
    }
    let total: u64 = joint_counts.iter().flatten().sum();
    if total < MIN_MI_SAMPLES {
        return Err(Error::UndersizedTable {
            total,
            min: MIN_MI_SAMPLES,
        });
    }
    let n = total as f64;
    let row_sums: Vec<f64> = joint_counts
        .iter()
        .map(|row| row.iter().sum::<u64>() as f64 / n)
        .collect();
    let col_sums: Vec<f64> = (0..width)
        .map(|j| joint_counts.iter().map(|row| row[j]).sum::<u64>() as f64 / n)
        .collect();
    let mut bits = 0.0;
    for (i, row) in joint_counts.iter().enumerate() {
        for (j, &count) in row.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let p = count as f64 / n;
            bits += p * (p / (row_sums[i] * col_sums[j])).log2();
        }
    }
    Ok(MIEstimate {
        // The plug-in value is non-negative up to rounding.
        bits: bits.max(0.0),
        n_samples: total,
    })
}

/// Exactly enumerated footprint of an intercept-resend eavesdropper.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterceptResendProfile {
    pub sift_rate: f64,
    /// Error fraction of the sifted key — strictly positive, which is what
    /// makes this attack detectable.
    pub error_rate: f64,
}

/// Computes the sift and sifted-error rates of an intercept-resend attack by
/// summing over Alice's bit, Bob's basis, and Eve's outcome.
pub fn intercept_resend_profile(basis: EveBasis) -> InterceptResendProfile {
    let eigen = basis_states(basis);
    let mut sift = 0.0;
    let mut errors = 0.0;
    for a in 0..2u8 {
        let sent = alice_state(a);
        let weights = basis_probs(&sent, basis);
        for a_prime in 0..2u8 {
            for (w, resent) in [(weights.0, &eigen[0]), (weights.1, &eigen[1])] {
                if w <= 0.0 {
                    continue;
                }
                let p_minus = bob_minus_probability(resent, a_prime);
                let weight = 0.25 * w * p_minus;
                sift += weight;
                if a != 1 - a_prime {
                    errors += weight;
                }
            }
        }
    }
    InterceptResendProfile {
        sift_rate: sift,
        error_rate: if sift > 0.0 { errors / sift } else { 0.0 },
    }
}
