//! Two- and three-qubit scenarios built from local partial measurements.
//!
//! Everything here stays in pure-state representation: local measurements are
//! applied as operator ⊗ identity followed by renormalization, and
//! conditioning on an outcome is amplitude filtering.  The module covers
//! entanglement amplification on a Bell pair (measure, then undo the
//! measurement to restore full entanglement), a no-signaling audit of the
//! remote party's marginals, and the measurement-based remote-readout
//! scenarios on the teleportation circuit state.
//!
//! Qubit ordering: qubit 0 is the leftmost label, and bit `i` of a basis
//! index addresses qubit `i` (index `2*b0 + b1` for two qubits,
//! `4*b0 + 2*b1 + b2` for three).

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measurement::{Outcome, PartialMeasurement};
use crate::qubit::{Complex, Operator2, PureState, RENORM_WINDOW};

/// Projective single-qubit readout basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MeasBasis {
    Z,
    X,
}

fn validate_amplitudes(amps: &[Complex]) -> Result<f64> {
    let mut norm_sq = 0.0;
    for a in amps {
        if !a.re.is_finite() || !a.im.is_finite() {
            return Err(Error::NonFinite {
                context: "state amplitudes",
            });
        }
        norm_sq += a.norm_sqr();
    }
    if (norm_sq - 1.0).abs() > RENORM_WINDOW {
        return Err(Error::NotNormalized { norm_sq });
    }
    Ok(norm_sq)
}

/// Applies `op` to the qubit selected by `mask` inside a register of
/// amplitudes, in place and without renormalizing.
fn apply_on_mask(amps: &mut [Complex], op: &Operator2, mask: usize) {
    for i in 0..amps.len() {
        if i & mask == 0 {
            let j = i | mask;
            let (a0, a1) = (amps[i], amps[j]);
            amps[i] = op.entry(0, 0) * a0 + op.entry(0, 1) * a1;
            amps[j] = op.entry(1, 0) * a0 + op.entry(1, 1) * a1;
        }
    }
}

fn renormalize(amps: &mut [Complex]) -> Result<f64> {
    let norm_sq: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    if norm_sq <= 0.0 || !norm_sq.is_finite() {
        return Err(Error::ZeroNorm {
            context: "local operator application",
        });
    }
    let s = norm_sq.sqrt().recip();
    for a in amps.iter_mut() {
        *a *= s;
    }
    Ok(norm_sq)
}

/// Pure state of two qubits, amplitudes indexed by `2*b0 + b1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoQubitState {
    amps: [Complex; 4],
}

impl TwoQubitState {
    /// Builds a state from amplitudes `[a00, a01, a10, a11]`, renormalizing
    /// drift within the usual window and rejecting anything larger.
    pub fn new(amps: [Complex; 4]) -> Result<Self> {
        let norm_sq = validate_amplitudes(&amps)?;
        let s = norm_sq.sqrt().recip();
        Ok(Self {
            amps: amps.map(|a| a * s),
        })
    }

    /// The maximally entangled state `(|00> + |11>)/sqrt(2)`.
    pub fn bell_phi_plus() -> Self {
        let h = Complex::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let z = Complex::new(0.0, 0.0);
        Self {
            amps: [h, z, z, h],
        }
    }

    /// Product state `a ⊗ b` (qubit 0 in `a`, qubit 1 in `b`).
    pub fn from_product(a: &PureState, b: &PureState) -> Self {
        Self {
            amps: [
                a.alpha() * b.alpha(),
                a.alpha() * b.beta(),
                a.beta() * b.alpha(),
                a.beta() * b.beta(),
            ],
        }
    }

    /// Amplitude of the basis state `|b0 b1>`.
    pub fn amplitude(&self, b0: u8, b1: u8) -> Complex {
        self.amps[(2 * b0 + b1) as usize]
    }

    pub fn amplitudes(&self) -> &[Complex; 4] {
        &self.amps
    }

    fn mask(qubit: usize) -> usize {
        assert!(qubit < 2, "two-qubit register has qubits 0 and 1");
        2 >> qubit
    }

    /// Applies a single-qubit operator to the chosen qubit and renormalizes.
    /// Returns the post state and the squared norm of the unnormalized image
    /// (the Born weight of this branch when `op` is a measurement operator).
    /// A numerically zero image is rejected.
    pub fn apply_local(&self, op: &Operator2, qubit: usize) -> Result<(Self, f64)> {
        let mut amps = self.amps;
        apply_on_mask(&mut amps, op, Self::mask(qubit));
        let norm_sq = renormalize(&mut amps)?;
        Ok((Self { amps }, norm_sq))
    }

    /// Entanglement of a normalized pure state:
    /// `2 |a00*a11 - a01*a10|`, clamped to `[0, 1]`.
    pub fn concurrence(&self) -> f64 {
        let d = self.amps[0] * self.amps[3] - self.amps[1] * self.amps[2];
        (2.0 * d.norm()).clamp(0.0, 1.0)
    }

    /// Squared overlap `|<self|other>|^2`.
    pub fn fidelity(&self, other: &Self) -> f64 {
        let overlap: Complex = self
            .amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum();
        overlap.norm_sqr()
    }

    /// Outcome weights `(P(0), P(1))` of a projective readout of one qubit in
    /// the given basis, unconditioned on the other qubit.
    pub fn qubit_marginal(&self, qubit: usize, basis: MeasBasis) -> (f64, f64) {
        let mut amps = self.amps;
        if basis == MeasBasis::X {
            apply_on_mask(&mut amps, &Operator2::hadamard(), Self::mask(qubit));
        }
        marginal_weights(&amps, Self::mask(qubit))
    }
}

/// Z-basis weights of one qubit from a (possibly unnormalized) register.
fn marginal_weights(amps: &[Complex], mask: usize) -> (f64, f64) {
    let mut w0 = 0.0;
    let mut w1 = 0.0;
    for (i, a) in amps.iter().enumerate() {
        if i & mask == 0 {
            w0 += a.norm_sqr();
        } else {
            w1 += a.norm_sqr();
        }
    }
    (w0, w1)
}

/// One run of the Bell-pair amplification experiment: partially measure one
/// half of `Φ⁺`, then attempt to undo the measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmplificationReport {
    /// The sampled first-measurement outcome.
    pub outcome: Outcome,
    /// Concurrence after the partial measurement (degraded unless `p = q`).
    pub c_before: f64,
    /// Exact probability that the undo succeeds, summed over both
    /// first-measurement branches; independent of the shared state.
    pub success_probability: f64,
    /// Whether the sampled undo check repeated the original outcome.
    pub reversal_success: bool,
    /// Concurrence after a successful undo; absent on failure.
    pub c_after: Option<f64>,
    /// The restored state itself on success.
    pub restored_state: Option<TwoQubitState>,
}

/// Measures one qubit of a Bell pair with strengths `(p, q)` and attempts the
/// flip–measure–flip undo on it, postselecting on a repeated outcome.
pub fn epr_amplification<R: Rng + ?Sized>(
    pm: &PartialMeasurement,
    rng: &mut R,
) -> Result<AmplificationReport> {
    if !pm.is_invertible() {
        return Err(Error::NotInvertible {
            p: pm.p(),
            q: pm.q(),
        });
    }
    let bell = TwoQubitState::bell_phi_plus();
    let x = Operator2::pauli_x();

    // Exact success probability over both branches: Born weight of each first
    // outcome times the weight of repeating it on the flipped branch state.
    let mut success_probability = 0.0;
    let mut branches = Vec::with_capacity(2);
    for outcome in [Outcome::M, Outcome::MBar] {
        let (post, weight) = bell.apply_local(&pm.kraus(outcome), 0)?;
        let (flipped, _) = post.apply_local(&x, 0)?;
        let (repeated, repeat_weight) = flipped.apply_local(&pm.kraus(outcome), 0)?;
        success_probability += weight * repeat_weight;
        branches.push((outcome, post, weight, flipped, repeated, repeat_weight));
    }

    // Sample the branch actually taken.
    let (outcome, post, _, _, repeated, repeat_weight) = if rng.gen::<f64>() < branches[0].2 {
        branches[0]
    } else {
        branches[1]
    };
    let c_before = post.concurrence();

    let reversal_success = rng.gen::<f64>() < repeat_weight;
    let (c_after, restored_state) = if reversal_success {
        let (restored, _) = repeated.apply_local(&x, 0)?;
        (Some(restored.concurrence()), Some(restored))
    } else {
        (None, None)
    };

    Ok(AmplificationReport {
        outcome,
        c_before,
        success_probability,
        reversal_success,
        c_after,
        restored_state,
    })
}

/// Bob's unconditioned marginals under each of Alice's measurement choices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoSignalingReport {
    /// Bob's `P(0)` per (Alice choice, Bob basis): `marginals[c][b]` for
    /// choice index `c` and basis index `b` in `[Z, X]` order.
    pub marginals: Vec<[f64; 2]>,
    /// Spread (max minus min) of Bob's `P(0)` across Alice's choices, per Bob
    /// basis in `[Z, X]` order.
    pub per_basis_deviation: [f64; 2],
    pub max_deviation: f64,
}

/// Checks that Alice cannot steer Bob's unconditioned statistics on a shared
/// `Φ⁺` pair: for every choice (each partial measurement, plus a projective
/// measurement per requested basis), Bob's outcome weights are summed over
/// Alice's outcomes and compared across choices in both of Bob's bases.
pub fn no_signaling_check(
    partials: &[PartialMeasurement],
    projective: &[MeasBasis],
) -> NoSignalingReport {
    let bell = TwoQubitState::bell_phi_plus();
    let half = Complex::new(0.5, 0.0);
    let plus_proj = Operator2::new([[half, half], [half, half]]).expect("finite entries");
    let minus_proj = Operator2::new([[half, -half], [-half, half]]).expect("finite entries");

    let mut choices: Vec<[Operator2; 2]> = Vec::new();
    for pm in partials {
        let (m, mbar) = pm.kraus_pair();
        choices.push([m, mbar]);
    }
    for basis in projective {
        choices.push(match basis {
            MeasBasis::Z => [
                Operator2::diag(1.0, 0.0).expect("finite entries"),
                Operator2::diag(0.0, 1.0).expect("finite entries"),
            ],
            MeasBasis::X => [plus_proj, minus_proj],
        });
    }

    let mut marginals = Vec::with_capacity(choices.len());
    for ops in &choices {
        let mut row = [0.0f64; 2];
        for (b, bob_basis) in [MeasBasis::Z, MeasBasis::X].into_iter().enumerate() {
            // Sum Bob's weight over Alice's (unnormalized) outcome branches.
            let mut p0 = 0.0;
            for op in ops {
                let mut amps = *bell.amplitudes();
                apply_on_mask(&mut amps, op, 2);
                if bob_basis == MeasBasis::X {
                    apply_on_mask(&mut amps, &Operator2::hadamard(), 1);
                }
                p0 += marginal_weights(&amps, 1).0;
            }
            row[b] = p0;
        }
        marginals.push(row);
    }

    let mut per_basis_deviation = [0.0f64; 2];
    for b in 0..2 {
        let lo = marginals.iter().map(|r| r[b]).fold(f64::INFINITY, f64::min);
        let hi = marginals
            .iter()
            .map(|r| r[b])
            .fold(f64::NEG_INFINITY, f64::max);
        per_basis_deviation[b] = if hi >= lo { hi - lo } else { 0.0 };
    }
    NoSignalingReport {
        marginals,
        per_basis_deviation,
        max_deviation: per_basis_deviation[0].max(per_basis_deviation[1]),
    }
}

/// Pure state of three qubits, amplitudes indexed by `4*b0 + 2*b1 + b2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThreeQubitState {
    amps: [Complex; 8],
}

impl ThreeQubitState {
    /// Builds a state from eight amplitudes in index order, renormalizing
    /// drift within the usual window and rejecting anything larger.
    pub fn new(amps: [Complex; 8]) -> Result<Self> {
        let norm_sq = validate_amplitudes(&amps)?;
        let s = norm_sq.sqrt().recip();
        Ok(Self {
            amps: amps.map(|a| a * s),
        })
    }

    /// Product of a single qubit (qubit 0) with a two-qubit register
    /// (qubits 1 and 2).
    pub fn from_qubit_and_pair(psi: &PureState, pair: &TwoQubitState) -> Self {
        let mut amps = [Complex::new(0.0, 0.0); 8];
        for (i, a) in amps.iter_mut().enumerate() {
            let b0 = i >> 2;
            let single = if b0 == 0 { psi.alpha() } else { psi.beta() };
            *a = single * pair.amplitudes()[i & 3];
        }
        Self { amps }
    }

    /// Amplitude of the basis state `|b0 b1 b2>`.
    pub fn amplitude(&self, b0: u8, b1: u8, b2: u8) -> Complex {
        self.amps[(4 * b0 + 2 * b1 + b2) as usize]
    }

    pub fn amplitudes(&self) -> &[Complex; 8] {
        &self.amps
    }

    fn mask(qubit: usize) -> usize {
        assert!(qubit < 3, "three-qubit register has qubits 0, 1, and 2");
        4 >> qubit
    }

    /// Applies a single-qubit operator to the chosen qubit and renormalizes.
    /// Returns the post state and the squared norm of the unnormalized image.
    pub fn apply_single(&self, op: &Operator2, qubit: usize) -> Result<(Self, f64)> {
        let mut amps = self.amps;
        apply_on_mask(&mut amps, op, Self::mask(qubit));
        let norm_sq = renormalize(&mut amps)?;
        Ok((Self { amps }, norm_sq))
    }

    /// Controlled-NOT: flips `target` where `control` is 1.  Pure index
    /// permutation, hence exact.
    pub fn apply_cnot(&self, control: usize, target: usize) -> Self {
        let cmask = Self::mask(control);
        let tmask = Self::mask(target);
        assert!(cmask != tmask, "control and target must differ");
        let mut amps = self.amps;
        for i in 0..amps.len() {
            if i & cmask != 0 && i & tmask == 0 {
                amps.swap(i, i | tmask);
            }
        }
        Self { amps }
    }

    /// Z-basis outcome weights `(P(0), P(1))` of one qubit.
    pub fn qubit_weights(&self, qubit: usize) -> (f64, f64) {
        marginal_weights(&self.amps, Self::mask(qubit))
    }

    /// Collapses one qubit onto the Z-basis value `bit`, returning the
    /// normalized conditional state and the weight of that branch.
    pub fn project_qubit(&self, qubit: usize, bit: u8) -> Result<(Self, f64)> {
        let mask = Self::mask(qubit);
        let want = if bit == 0 { 0 } else { mask };
        let mut amps = self.amps;
        for (i, a) in amps.iter_mut().enumerate() {
            if i & mask != want {
                *a = Complex::new(0.0, 0.0);
            }
        }
        let norm_sq = renormalize(&mut amps)?;
        Ok((Self { amps }, norm_sq))
    }

    /// Squared overlap `|<self|other>|^2`.
    pub fn fidelity(&self, other: &Self) -> f64 {
        let overlap: Complex = self
            .amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum();
        overlap.norm_sqr()
    }

    /// Probability that qubit 2 alone would pass a projective test onto
    /// `psi`: the overlap of the last qubit's reduced state with `psi`.
    pub fn bob_overlap_fidelity(&self, psi: &PureState) -> f64 {
        let mut total = 0.0;
        for b01 in 0..4 {
            let overlap = psi.alpha().conj() * self.amps[2 * b01]
                + psi.beta().conj() * self.amps[2 * b01 + 1];
            total += overlap.norm_sqr();
        }
        total
    }
}

/// Entangles `psi` (qubit 0) with half of a Bell pair shared with a remote
/// party (qubit 2): prepares `psi ⊗ Φ⁺`, applies CNOT from qubit 0 to
/// qubit 1, then a Hadamard on qubit 0.  The result is
/// `(1/2)[|00>psi + |01>X psi + |10>Z psi + |11>XZ psi]` with the operators
/// acting on qubit 2.
pub fn teleport_prepare(psi: &PureState) -> ThreeQubitState {
    let start = ThreeQubitState::from_qubit_and_pair(psi, &TwoQubitState::bell_phi_plus());
    let (out, _) = start
        .apply_cnot(0, 1)
        .apply_single(&Operator2::hadamard(), 0)
        .expect("unitary application preserves the norm");
    out
}

/// Which remote-readout experiment to run on the teleportation-circuit state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ReadoutVariant {
    /// Alice weakly filters both of her qubits (strength `p`, null outcome
    /// kept) and postselects; as `p` approaches 1, Bob's conditional state
    /// approaches `psi`.
    TwoBit { strength: f64 },
    /// Alice projectively reads her second qubit; each result pairs with a
    /// definite assignment of Bob's outcome probabilities.
    OneBit,
}

/// One conditional branch of the one-bit readout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OneBitBranch {
    pub probability: f64,
    /// Full conditional state, with Alice's second qubit collapsed in place.
    pub conditional_state: ThreeQubitState,
    pub bob_prob_zero: f64,
    pub bob_prob_one: f64,
}

/// Report of a remote-readout run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ReadoutReport {
    TwoBit {
        strength: f64,
        /// Probability that both of Alice's filters return the null outcome.
        postselect_probability: f64,
        /// Conditional three-qubit state given that postselection.
        conditional_state: ThreeQubitState,
        /// Overlap of Bob's conditional reduced state with `psi`.
        bob_fidelity: f64,
        /// Whether the sampled run actually passed postselection.
        sampled_success: bool,
    },
    OneBit {
        /// Branches for Alice's result 0 and 1, in that order.
        branches: [OneBitBranch; 2],
        sampled_alice_bit: u8,
        sampled_bob_bit: u8,
    },
}

/// Runs one remote-readout experiment on the circuit state prepared from
/// `psi`.  The two-bit variant requires a strength below 1 (at 1 the filters
/// are projective and nothing remains to postselect smoothly); its filters
/// use a null-outcome operator `diag(1, sqrt(1-p))`.
pub fn remote_readout_scenario<R: Rng + ?Sized>(
    psi: &PureState,
    variant: ReadoutVariant,
    rng: &mut R,
) -> Result<ReadoutReport> {
    let prepared = teleport_prepare(psi);
    match variant {
        ReadoutVariant::TwoBit { strength } => {
            let pm = PartialMeasurement::new(strength, 0.0)?;
            if strength >= 1.0 {
                return Err(Error::InvalidConfig {
                    detail: "two-bit readout requires strength below 1".into(),
                });
            }
            let null = pm.kraus(Outcome::M);
            let (after_first, w1) = prepared.apply_single(&null, 0)?;
            let (conditional_state, w2) = after_first.apply_single(&null, 1)?;
            let postselect_probability = w1 * w2;
            let bob_fidelity = conditional_state.bob_overlap_fidelity(psi);

            // Sample the run: qubit 0's filter, then qubit 1's on that branch.
            let sampled_success = if rng.gen::<f64>() < w1 {
                rng.gen::<f64>() < w2
            } else {
                false
            };
            Ok(ReadoutReport::TwoBit {
                strength,
                postselect_probability,
                conditional_state,
                bob_fidelity,
                sampled_success,
            })
        }
        ReadoutVariant::OneBit => {
            let (w0, _) = prepared.qubit_weights(1);
            let mut branches = Vec::with_capacity(2);
            for bit in 0..2u8 {
                let (conditional_state, probability) = prepared.project_qubit(1, bit)?;
                let (bob_prob_zero, bob_prob_one) = conditional_state.qubit_weights(2);
                branches.push(OneBitBranch {
                    probability,
                    conditional_state,
                    bob_prob_zero,
                    bob_prob_one,
                });
            }
            let branches = [branches[0], branches[1]];

            let sampled_alice_bit = u8::from(rng.gen::<f64>() >= w0);
            let taken = &branches[sampled_alice_bit as usize];
            let sampled_bob_bit = u8::from(rng.gen::<f64>() >= taken.bob_prob_zero);
            Ok(ReadoutReport::OneBit {
                branches,
                sampled_alice_bit,
                sampled_bob_bit,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubit::BlochAngles;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    /// Closed-form concurrence after the null outcome on one Bell-pair half.
    fn c_null(p: f64, q: f64) -> f64 {
        2.0 * ((1.0 - p) * (1.0 - q)).sqrt() / (2.0 - p - q)
    }

    /// Closed-form concurrence after the complementary outcome.
    fn c_comp(p: f64, q: f64) -> f64 {
        2.0 * (p * q).sqrt() / (p + q)
    }

    #[test]
    fn bell_state_basics() {
        let bell = TwoQubitState::bell_phi_plus();
        assert_abs_diff_eq!(bell.concurrence(), 1.0, epsilon = 1e-15);
        let norm_sq: f64 = bell.amplitudes().iter().map(|a| a.norm_sqr()).sum();
        assert_abs_diff_eq!(norm_sq, 1.0, epsilon = 1e-15);
        for qubit in 0..2 {
            for basis in [MeasBasis::Z, MeasBasis::X] {
                let (p0, p1) = bell.qubit_marginal(qubit, basis);
                assert_abs_diff_eq!(p0, 0.5, epsilon = 1e-12);
                assert_abs_diff_eq!(p1, 0.5, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn product_state_has_no_entanglement() {
        let s = TwoQubitState::from_product(&PureState::plus(), &PureState::one());
        assert_abs_diff_eq!(s.concurrence(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitude(0, 1).re, std::f64::consts::FRAC_1_SQRT_2);
        assert_abs_diff_eq!(s.amplitude(0, 0).norm(), 0.0);
    }

    #[test]
    fn state_construction_guards() {
        let z = c(0.0, 0.0);
        assert!(TwoQubitState::new([c(0.5, 0.0), z, z, z]).is_err());
        assert!(TwoQubitState::new([c(f64::NAN, 0.0), z, z, c(1.0, 0.0)]).is_err());
        // Drift within the window is renormalized.
        let drift = 1.0 + 1e-10;
        let s = TwoQubitState::new([c(drift, 0.0), z, z, z]).unwrap();
        assert_abs_diff_eq!(s.amplitude(0, 0).norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn local_measurement_on_a_bell_pair() {
        let bell = TwoQubitState::bell_phi_plus();
        let pm = PartialMeasurement::new(0.2, 0.3).unwrap();
        let (post, w) = bell.apply_local(&pm.kraus(Outcome::M), 0).unwrap();
        // Branch weight (0.7 + 0.8)/2.
        assert_abs_diff_eq!(w, 0.75, epsilon = 1e-12);
        // Post state proportional to sqrt(0.7)|00> + sqrt(0.8)|11>.
        let norm = (1.5f64).sqrt();
        assert_abs_diff_eq!(post.amplitude(0, 0).re, (0.7f64).sqrt() / norm, epsilon = 1e-12);
        assert_abs_diff_eq!(post.amplitude(1, 1).re, (0.8f64).sqrt() / norm, epsilon = 1e-12);
        assert_abs_diff_eq!(post.amplitude(0, 1).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(post.amplitude(1, 0).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn flip_acts_on_the_chosen_qubit() {
        let s = TwoQubitState::from_product(&PureState::zero(), &PureState::zero());
        let (flipped, w) = s.apply_local(&Operator2::pauli_x(), 1).unwrap();
        assert_abs_diff_eq!(w, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(flipped.amplitude(0, 1).re, 1.0, epsilon = 1e-15);
        let (same, _) = s.apply_local(&Operator2::identity(), 0).unwrap();
        assert_eq!(same, s);
    }

    #[test]
    fn zero_branch_is_rejected() {
        let s = TwoQubitState::from_product(&PureState::zero(), &PureState::zero());
        // Projecting qubit 0 onto |1> annihilates the state.
        let proj = Operator2::diag(0.0, 1.0).unwrap();
        assert!(matches!(
            s.apply_local(&proj, 0),
            Err(Error::ZeroNorm { .. })
        ));
    }

    #[test]
    fn concurrence_closed_forms_hold_on_a_grid() {
        let bell = TwoQubitState::bell_phi_plus();
        for i in 1..10 {
            for j in 1..10 {
                let (p, q) = (i as f64 / 10.0, j as f64 / 10.0);
                let pm = PartialMeasurement::new(p, q).unwrap();
                let (post_m, _) = bell.apply_local(&pm.kraus(Outcome::M), 0).unwrap();
                let (post_mbar, _) = bell.apply_local(&pm.kraus(Outcome::MBar), 0).unwrap();
                assert_abs_diff_eq!(post_m.concurrence(), c_null(p, q), epsilon = 1e-12);
                assert_abs_diff_eq!(post_mbar.concurrence(), c_comp(p, q), epsilon = 1e-12);
                if (p - q).abs() > 1e-12 {
                    assert!(post_m.concurrence() < 1.0);
                    assert!(post_mbar.concurrence() < 1.0);
                } else {
                    assert_abs_diff_eq!(post_m.concurrence(), 1.0, epsilon = 1e-12);
                    assert_abs_diff_eq!(post_mbar.concurrence(), 1.0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn strong_filter_degrades_entanglement() {
        // Strength (0.99, 0) null branch: 2*sqrt(0.01)/1.01.
        let bell = TwoQubitState::bell_phi_plus();
        let pm = PartialMeasurement::new(0.99, 0.0).unwrap();
        let (post, _) = bell.apply_local(&pm.kraus(Outcome::M), 0).unwrap();
        assert_abs_diff_eq!(post.concurrence(), 0.2 / 1.01, epsilon = 1e-12);
    }

    #[test]
    fn amplification_restores_the_bell_state() {
        let pm = PartialMeasurement::new(0.99, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let bell = TwoQubitState::bell_phi_plus();
        let mut successes = 0u32;
        let runs = 4000;
        for _ in 0..runs {
            let report = epr_amplification(&pm, &mut rng).unwrap();
            assert_abs_diff_eq!(report.success_probability, 0.108, epsilon = 1e-12);
            let expected_c = match report.outcome {
                Outcome::M => c_null(0.99, 0.1),
                Outcome::MBar => c_comp(0.99, 0.1),
            };
            assert_abs_diff_eq!(report.c_before, expected_c, epsilon = 1e-12);
            if report.reversal_success {
                successes += 1;
                assert_abs_diff_eq!(report.c_after.unwrap(), 1.0, epsilon = 1e-12);
                assert_abs_diff_eq!(
                    report.restored_state.unwrap().fidelity(&bell),
                    1.0,
                    epsilon = 1e-12
                );
            } else {
                assert!(report.c_after.is_none());
                assert!(report.restored_state.is_none());
            }
        }
        // 0.108 +/- 5 sigma at 4000 runs.
        let rate = f64::from(successes) / f64::from(runs);
        assert_abs_diff_eq!(rate, 0.108, epsilon = 0.025);
    }

    #[test]
    fn symmetric_strengths_keep_full_entanglement() {
        let pm = PartialMeasurement::new(0.5, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let report = epr_amplification(&pm, &mut rng).unwrap();
            assert_abs_diff_eq!(report.c_before, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn amplification_requires_invertible_strengths() {
        let pm = PartialMeasurement::new(1.0, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            epr_amplification(&pm, &mut rng),
            Err(Error::NotInvertible { .. })
        ));
    }

    #[test]
    fn alice_cannot_steer_bobs_marginals() {
        let partials: Vec<PartialMeasurement> = [(0.2, 0.3), (0.9, 0.05), (0.5, 0.5)]
            .iter()
            .map(|&(p, q)| PartialMeasurement::new(p, q).unwrap())
            .collect();
        let report = no_signaling_check(&partials, &[MeasBasis::Z, MeasBasis::X]);
        assert!(report.max_deviation < 1e-12, "max = {}", report.max_deviation);
        for row in &report.marginals {
            for &p0 in row {
                assert_abs_diff_eq!(p0, 0.5, epsilon = 1e-12);
            }
        }
        assert_eq!(report.marginals.len(), 5);
    }

    #[test]
    fn circuit_state_for_the_two_poles() {
        // psi = |0>: (1/2)(|000> + |011> + |100> + |111>).
        let s0 = teleport_prepare(&PureState::zero());
        for (b0, b1, b2, want) in [
            (0, 0, 0, 0.5),
            (0, 1, 1, 0.5),
            (1, 0, 0, 0.5),
            (1, 1, 1, 0.5),
            (0, 0, 1, 0.0),
            (1, 1, 0, 0.0),
        ] {
            assert_abs_diff_eq!(s0.amplitude(b0, b1, b2).re, want, epsilon = 1e-12);
            assert_abs_diff_eq!(s0.amplitude(b0, b1, b2).im, 0.0, epsilon = 1e-15);
        }
        // psi = |1>: (1/2)(|001> + |010> - |101> - |110>).
        let s1 = teleport_prepare(&PureState::one());
        for (b0, b1, b2, want) in [
            (0, 0, 1, 0.5),
            (0, 1, 0, 0.5),
            (1, 0, 1, -0.5),
            (1, 1, 0, -0.5),
            (0, 0, 0, 0.0),
        ] {
            assert_abs_diff_eq!(s1.amplitude(b0, b1, b2).re, want, epsilon = 1e-12);
        }
    }

    /// The four-term form of the circuit state, built directly.
    fn four_term_oracle(psi: &PureState) -> [Complex; 8] {
        let x = Operator2::pauli_x();
        let z = Operator2::pauli_z();
        let xz = x.matmul(&z);
        let mut amps = [Complex::new(0.0, 0.0); 8];
        for (block, op) in [
            (0, Operator2::identity()),
            (1, x),
            (2, z),
            (3, xz),
        ] {
            let (v, _) = op.apply(psi);
            amps[2 * block] = 0.5 * v[0];
            amps[2 * block + 1] = 0.5 * v[1];
        }
        amps
    }

    #[test]
    fn circuit_state_matches_the_four_term_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let theta = rng.gen::<f64>() * std::f64::consts::PI;
            let phi = rng.gen::<f64>() * std::f64::consts::TAU;
            let psi = PureState::from_angles(BlochAngles::new(theta, phi).unwrap());
            let prepared = teleport_prepare(&psi);
            let oracle = four_term_oracle(&psi);
            let norm_sq: f64 = prepared.amplitudes().iter().map(|a| a.norm_sqr()).sum();
            assert_abs_diff_eq!(norm_sq, 1.0, epsilon = 1e-12);
            for (got, want) in prepared.amplitudes().iter().zip(oracle.iter()) {
                assert_abs_diff_eq!((got - want).norm(), 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn two_bit_readout_filters_toward_the_input() {
        let psi = PureState::from_angles(BlochAngles::new(0.8, 0.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let report = remote_readout_scenario(
            &psi,
            ReadoutVariant::TwoBit { strength: 0.99 },
            &mut rng,
        )
        .unwrap();
        match report {
            ReadoutReport::TwoBit {
                postselect_probability,
                bob_fidelity,
                conditional_state,
                ..
            } => {
                // ((2 - p)/2)^2 at p = 0.99.
                assert_abs_diff_eq!(postselect_probability, 0.255025, epsilon = 1e-12);
                assert!(bob_fidelity > 0.99, "fidelity = {bob_fidelity}");
                assert_abs_diff_eq!(
                    conditional_state.bob_overlap_fidelity(&psi),
                    bob_fidelity,
                    epsilon = 1e-15
                );
            }
            ReadoutReport::OneBit { .. } => panic!("wrong variant"),
        }
    }

    #[test]
    fn two_bit_readout_exact_values_for_any_input() {
        // Exact conditional values: postselection weight ((2-p)/2)^2 and Bob
        // fidelity [1 + (1-p)(x^2 + z^2) + (1-p)^2 y^2] / (2-p)^2 where
        // (x, y, z) is the input's Bloch vector.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for &p in &[0.5, 0.9, 0.99, 0.999] {
            for &(theta, phi) in &[(0.8, 0.0), (1.3, 2.0), (std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2)] {
                let psi = PureState::from_angles(BlochAngles::new(theta, phi).unwrap());
                let report = remote_readout_scenario(
                    &psi,
                    ReadoutVariant::TwoBit { strength: p },
                    &mut rng,
                )
                .unwrap();
                let ReadoutReport::TwoBit {
                    postselect_probability,
                    bob_fidelity,
                    ..
                } = report
                else {
                    panic!("wrong variant");
                };
                let w = (2.0 - p) / 2.0;
                assert_abs_diff_eq!(postselect_probability, w * w, epsilon = 1e-12);
                let (x, y, z) = (
                    theta.sin() * phi.cos(),
                    theta.sin() * phi.sin(),
                    theta.cos(),
                );
                let expected = (1.0 + (1.0 - p) * (x * x + z * z) + (1.0 - p).powi(2) * y * y)
                    / ((2.0 - p) * (2.0 - p));
                assert_abs_diff_eq!(bob_fidelity, expected, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn two_bit_fidelity_increases_with_strength() {
        let psi = PureState::from_angles(BlochAngles::new(1.1, 0.7).unwrap());
        let mut fidelities = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for &p in &[0.5, 0.9, 0.99, 0.9999] {
            let report =
                remote_readout_scenario(&psi, ReadoutVariant::TwoBit { strength: p }, &mut rng)
                    .unwrap();
            let ReadoutReport::TwoBit { bob_fidelity, .. } = report else {
                panic!("wrong variant");
            };
            fidelities.push(bob_fidelity);
        }
        for w in fidelities.windows(2) {
            assert!(w[1] > w[0], "fidelity must grow with the filter strength");
        }
        assert!(fidelities.last().unwrap() > &0.999);
    }

    #[test]
    fn two_bit_readout_rejects_projective_strength() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(remote_readout_scenario(
            &PureState::plus(),
            ReadoutVariant::TwoBit { strength: 1.0 },
            &mut rng
        )
        .is_err());
    }

    #[test]
    fn one_bit_readout_branches() {
        let theta = 1.2f64;
        let phi = 0.9f64;
        let psi = PureState::from_angles(BlochAngles::new(theta, phi).unwrap());
        let (c2, s2) = ((theta / 2.0).cos().powi(2), (theta / 2.0).sin().powi(2));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let report = remote_readout_scenario(&psi, ReadoutVariant::OneBit, &mut rng).unwrap();
        let ReadoutReport::OneBit { branches, .. } = report else {
            panic!("wrong variant");
        };
        for branch in &branches {
            assert_abs_diff_eq!(branch.probability, 0.5, epsilon = 1e-12);
        }
        // Alice's 0 branch gives Bob (cos^2, sin^2); her 1 branch swaps them.
        assert_abs_diff_eq!(branches[0].bob_prob_zero, c2, epsilon = 1e-12);
        assert_abs_diff_eq!(branches[0].bob_prob_one, s2, epsilon = 1e-12);
        assert_abs_diff_eq!(branches[1].bob_prob_zero, s2, epsilon = 1e-12);
        assert_abs_diff_eq!(branches[1].bob_prob_one, c2, epsilon = 1e-12);

        // The 0 branch is cos(t/2)|+>|0> + e^{i phi} sin(t/2)|->|1> on
        // (qubit 0, qubit 2), with qubit 1 pinned at |0>.
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        let cpos = (theta / 2.0).cos() * inv_sqrt2;
        let spos = (theta / 2.0).sin() * inv_sqrt2;
        let phase = Complex::new(0.0, phi).exp();
        let b0 = &branches[0].conditional_state;
        assert_abs_diff_eq!(b0.amplitude(0, 0, 0).re, cpos, epsilon = 1e-12);
        assert_abs_diff_eq!(b0.amplitude(1, 0, 0).re, cpos, epsilon = 1e-12);
        assert_abs_diff_eq!((b0.amplitude(0, 0, 1) - phase * spos).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!((b0.amplitude(1, 0, 1) + phase * spos).norm(), 0.0, epsilon = 1e-12);
        for idx in [2usize, 3, 6, 7] {
            assert_abs_diff_eq!(b0.amplitudes()[idx].norm(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn sampled_runs_are_reproducible() {
        let psi = PureState::from_angles(BlochAngles::new(0.7, 1.9).unwrap());
        let run = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            remote_readout_scenario(&psi, ReadoutVariant::OneBit, &mut rng).unwrap()
        };
        assert_eq!(run(42), run(42));
    }

    #[test]
    fn three_qubit_state_guards() {
        let z = c(0.0, 0.0);
        let mut amps = [z; 8];
        amps[0] = c(0.6, 0.0);
        assert!(ThreeQubitState::new(amps).is_err());
        amps[0] = c(1.0, 0.0);
        let s = ThreeQubitState::new(amps).unwrap();
        assert!(s.project_qubit(0, 1).is_err(), "empty branch must be rejected");
        let (proj, w) = s.project_qubit(0, 0).unwrap();
        assert_abs_diff_eq!(w, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(proj.amplitude(0, 0, 0).re, 1.0, epsilon = 1e-15);
    }
}
