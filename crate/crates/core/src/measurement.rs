//! Generalized partial measurements on a single qubit.
//!
//! A measurement of strength pair `(p, q)` has two diagonal Kraus operators,
//!
//! ```text
//! M_m    = diag(sqrt(1-q), sqrt(1-p))        "null" outcome
//! M_mbar = diag(sqrt(q),   sqrt(p))          complementary outcome
//! ```
//!
//! whose effects sum to the identity.  For strengths strictly inside (0, 1)
//! both operators are invertible, and the inverse is again a scaled partial
//! measurement conjugated by X.  That structure is what makes the undo
//! protocol in [`PartialMeasurement::reversal_round`] work: flip, measure
//! again, postselect on repeating the outcome, flip back.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubit::{Operator2, PureState};

/// The two outcomes of a partial measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Outcome {
    /// Outcome associated with `M_m = diag(sqrt(1-q), sqrt(1-p))`.
    #[serde(rename = "m")]
    M,
    /// Outcome associated with `M_mbar = diag(sqrt(q), sqrt(p))`.
    #[serde(rename = "mbar")]
    MBar,
}

impl Outcome {
    /// Short ASCII label used in path strings and transcripts.
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::M => "m",
            Outcome::MBar => "mbar",
        }
    }

    pub fn other(&self) -> Outcome {
        match self {
            Outcome::M => Outcome::MBar,
            Outcome::MBar => Outcome::M,
        }
    }
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Two-outcome partial measurement with strengths `p` (on |1>) and `q` (on |0>).
///
/// `p = q = 1` is a projective computational-basis measurement; `p = q = 0`
/// does nothing.  Strengths strictly inside (0, 1) give an invertible, and
/// therefore probabilistically reversible, measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartialMeasurement {
    p: f64,
    q: f64,
}

impl PartialMeasurement {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        for (name, value) in [("p", p), ("q", q)] {
            if !value.is_finite() || !(0.0..=1.0).contains(&value) {
                return Err(Error::ProbabilityOutOfRange { name, value });
            }
        }
        Ok(Self { p, q })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// True when both Kraus operators have an inverse, i.e. both strengths lie
    /// strictly inside (0, 1).
    pub fn is_invertible(&self) -> bool {
        self.p > 0.0 && self.p < 1.0 && self.q > 0.0 && self.q < 1.0
    }

    /// The Kraus operator for one outcome.
    pub fn kraus(&self, outcome: Outcome) -> Operator2 {
        let (a, b) = match outcome {
            Outcome::M => (1.0 - self.q, 1.0 - self.p),
            Outcome::MBar => (self.q, self.p),
        };
        Operator2::diag(a.sqrt(), b.sqrt()).expect("strengths are finite")
    }

    /// Both Kraus operators, `(M_m, M_mbar)`.
    pub fn kraus_pair(&self) -> (Operator2, Operator2) {
        (self.kraus(Outcome::M), self.kraus(Outcome::MBar))
    }

    /// The effect `E = M^dagger M` for one outcome.  The two effects sum to
    /// the identity.
    pub fn effect(&self, outcome: Outcome) -> Operator2 {
        let m = self.kraus(outcome);
        m.dagger().matmul(&m)
    }

    /// Born probabilities `(P_m, P_mbar)` for a given state.
    pub fn outcome_probabilities(&self, psi: &PureState) -> (f64, f64) {
        let p0 = psi.prob_zero();
        let p1 = psi.prob_one();
        (
            (1.0 - self.q) * p0 + (1.0 - self.p) * p1,
            self.q * p0 + self.p * p1,
        )
    }

    /// Post-measurement state and Born probability for a specific outcome.
    /// Conditioning on an outcome of probability zero is rejected.
    pub fn collapse(&self, psi: &PureState, outcome: Outcome) -> Result<(PureState, f64)> {
        self.kraus(outcome)
            .apply_normalized(psi)
            .map_err(|_| Error::DegenerateCollapse)
    }

    /// Samples an outcome from the Born distribution and collapses the state.
    pub fn sample_measure<R: Rng + ?Sized>(
        &self,
        psi: &PureState,
        rng: &mut R,
    ) -> (Outcome, PureState) {
        let (p_m, _) = self.outcome_probabilities(psi);
        let outcome = if rng.gen::<f64>() < p_m {
            Outcome::M
        } else {
            Outcome::MBar
        };
        // A sampled outcome has nonzero probability, so collapse succeeds.
        let (post, _) = self
            .collapse(psi, outcome)
            .expect("sampled outcome has positive probability");
        (outcome, post)
    }

    /// Inverse Kraus operator, built as the X-conjugated partial measurement
    /// scaled by the inverse path amplitude:
    ///
    /// ```text
    /// M_m^-1    = [(1-p)(1-q)]^(-1/2) X M_m X
    /// M_mbar^-1 = (p q)^(-1/2)        X M_mbar X
    /// ```
    pub fn inverse_kraus(&self, outcome: Outcome) -> Result<Operator2> {
        if !self.is_invertible() {
            return Err(Error::NotInvertible { p: self.p, q: self.q });
        }
        let joint = match outcome {
            Outcome::M => (1.0 - self.p) * (1.0 - self.q),
            Outcome::MBar => self.p * self.q,
        };
        let x = Operator2::pauli_x();
        Ok(x.matmul(&self.kraus(outcome)).matmul(&x).scale(joint.sqrt().recip()))
    }

    /// Probability that the undo protocol's second measurement repeats
    /// `outcome`, given the post-measurement state of the first.  Equals
    /// `(1-p)(1-q) / P_m` for the null outcome and `p q / P_mbar` for the
    /// complementary one, so the joint probability of "outcome then repeat"
    /// is state-independent.
    pub fn conditional_success(&self, psi: &PureState, outcome: Outcome) -> Result<f64> {
        let (p_m, p_mbar) = self.outcome_probabilities(psi);
        let (joint, prior) = match outcome {
            Outcome::M => ((1.0 - self.p) * (1.0 - self.q), p_m),
            Outcome::MBar => (self.p * self.q, p_mbar),
        };
        if prior <= 0.0 {
            return Err(Error::DegenerateCollapse);
        }
        Ok(joint / prior)
    }

    /// One undo attempt on a post-measurement state: apply X, measure again,
    /// and postselect on repeating `outcome`; on success the trailing X
    /// completes the inverse and the return state has fidelity 1 with
    /// whatever state entered the original measurement.  On failure the
    /// protocol stops and the state of the failed branch (after the second
    /// measurement, without the trailing X) is returned.
    pub fn reversal_round<R: Rng + ?Sized>(
        &self,
        post: &PureState,
        outcome: Outcome,
        rng: &mut R,
    ) -> (bool, PureState) {
        let x = Operator2::pauli_x();
        let (flipped, _) = x
            .apply_normalized(post)
            .expect("X preserves the norm");
        let (second, collapsed) = self.sample_measure(&flipped, rng);
        if second != outcome {
            return (false, collapsed);
        }
        let (restored, _) = x
            .apply_normalized(&collapsed)
            .expect("X preserves the norm");
        (true, restored)
    }
}

/// Partial measurement with K outcomes: `M_k = diag(sqrt(q_k), sqrt(p_k))`
/// where both strength rows sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KOutcomeMeasurement {
    qs: Vec<f64>,
    ps: Vec<f64>,
}

impl KOutcomeMeasurement {
    /// Validates lengths (equal, at least 2), ranges, and the two sum rules.
    pub fn new(qs: Vec<f64>, ps: Vec<f64>) -> Result<Self> {
        if qs.len() != ps.len() {
            return Err(Error::InvalidDistribution {
                detail: format!("{} q entries vs {} p entries", qs.len(), ps.len()),
            });
        }
        if qs.len() < 2 {
            return Err(Error::InvalidDistribution {
                detail: "at least two outcomes required".into(),
            });
        }
        for (name, row) in [("q", &qs), ("p", &ps)] {
            let mut sum = 0.0;
            for &v in row.iter() {
                if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidDistribution {
                        detail: format!("{name} entry {v} outside [0, 1]"),
                    });
                }
                sum += v;
            }
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidDistribution {
                    detail: format!("{name} entries sum to {sum}, expected 1"),
                });
            }
        }
        Ok(Self { qs, ps })
    }

    pub fn len(&self) -> usize {
        self.qs.len()
    }

    pub fn is_empty(&self) -> bool {
        false // validated to hold at least two outcomes
    }

    /// The K Kraus operators.  Their effects sum to the identity because each
    /// strength row sums to one.
    pub fn operators(&self) -> Vec<Operator2> {
        self.qs
            .iter()
            .zip(&self.ps)
            .map(|(&qk, &pk)| Operator2::diag(qk.sqrt(), pk.sqrt()).expect("finite strengths"))
            .collect()
    }

    /// Born probabilities for all K outcomes.
    pub fn probabilities(&self, psi: &PureState) -> Vec<f64> {
        let p0 = psi.prob_zero();
        let p1 = psi.prob_one();
        self.qs
            .iter()
            .zip(&self.ps)
            .map(|(&qk, &pk)| qk * p0 + pk * p1)
            .collect()
    }

    /// Inverse of the k-th operator, `(p_k q_k)^(-1/2) X M_k X`; requires both
    /// strengths of that outcome to be nonzero.
    pub fn inverse(&self, k: usize) -> Result<Operator2> {
        let (qk, pk) = (self.qs[k], self.ps[k]);
        if qk <= 0.0 || pk <= 0.0 {
            return Err(Error::NotInvertible { p: pk, q: qk });
        }
        let x = Operator2::pauli_x();
        let mk = Operator2::diag(qk.sqrt(), pk.sqrt()).expect("finite strengths");
        Ok(x.matmul(&mk).matmul(&x).scale((pk * qk).sqrt().recip()))
    }
}
