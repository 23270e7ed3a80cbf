//! Single-qubit primitives: Bloch-sphere parametrization, pure states, and
//! 2x2 operators.
//!
//! States are kept normalized by construction.  A state built from Bloch angles
//! has a real, non-negative |0> amplitude, which fixes the global phase; state
//! comparisons elsewhere in the crate go through [`PureState::fidelity`] so they
//! are phase-insensitive anyway.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Complex scalar used for all amplitudes and matrix entries.
pub type Complex = Complex64;

/// Norm deviation guaranteed after construction / renormalization.
pub const NORM_TOL: f64 = 1e-12;
/// Constructors renormalize silently when |norm^2 - 1| is at most this value
/// and reject the input otherwise.
pub const RENORM_WINDOW: f64 = 1e-9;
/// Entry-wise tolerance for operator comparisons and Hermiticity checks.
pub const OPERATOR_TOL: f64 = 1e-12;

/// Polar and azimuthal angle of a point on the Bloch sphere.
///
/// `theta` lies in `[0, pi]` and `phi` in `[0, 2*pi)`.  At the poles
/// (`theta = 0` or `pi`) the azimuth is physically meaningless and is
/// canonicalized to zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochAngles {
    theta: f64,
    phi: f64,
}

impl BlochAngles {
    /// Validates the ranges and canonicalizes `phi = 0` at the poles.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !theta.is_finite() || !phi.is_finite() {
            return Err(Error::NonFinite {
                context: "Bloch angles",
            });
        }
        if !(0.0..=std::f64::consts::PI).contains(&theta) {
            return Err(Error::AngleOutOfRange {
                name: "theta",
                value: theta,
                min: 0.0,
                max: std::f64::consts::PI,
            });
        }
        if !(0.0..std::f64::consts::TAU).contains(&phi) {
            return Err(Error::AngleOutOfRange {
                name: "phi",
                value: phi,
                min: 0.0,
                max: std::f64::consts::TAU,
            });
        }
        let phi = if theta == 0.0 || theta == std::f64::consts::PI {
            0.0
        } else {
            phi
        };
        Ok(Self { theta, phi })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }
}

/// Normalized single-qubit pure state `alpha |0> + beta |1>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureState {
    alpha: Complex,
    beta: Complex,
}

impl PureState {
    /// Builds a state from amplitudes, renormalizing when the norm is within
    /// [`RENORM_WINDOW`] of 1 and rejecting anything farther away.
    pub fn new(alpha: Complex, beta: Complex) -> Result<Self> {
        if !alpha.re.is_finite()
            || !alpha.im.is_finite()
            || !beta.re.is_finite()
            || !beta.im.is_finite()
        {
            return Err(Error::NonFinite {
                context: "state amplitudes",
            });
        }
        let norm_sq = alpha.norm_sqr() + beta.norm_sqr();
        if (norm_sq - 1.0).abs() > RENORM_WINDOW {
            return Err(Error::NotNormalized { norm_sq });
        }
        let scale = norm_sq.sqrt().recip();
        Ok(Self {
            alpha: alpha * scale,
            beta: beta * scale,
        })
    }

    /// `cos(theta/2) |0> + e^{i phi} sin(theta/2) |1>`.
    ///
    /// The |0> amplitude is real and non-negative, fixing the global phase.
    pub fn from_angles(angles: BlochAngles) -> Self {
        let half = 0.5 * angles.theta();
        Self {
            alpha: Complex::new(half.cos(), 0.0),
            beta: Complex::from_polar(half.sin(), angles.phi()),
        }
    }

    /// |0>
    pub fn zero() -> Self {
        Self {
            alpha: Complex::new(1.0, 0.0),
            beta: Complex::new(0.0, 0.0),
        }
    }

    /// |1>
    pub fn one() -> Self {
        Self {
            alpha: Complex::new(0.0, 0.0),
            beta: Complex::new(1.0, 0.0),
        }
    }

    /// (|0> + |1>) / sqrt(2)
    pub fn plus() -> Self {
        let a = Complex::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self { alpha: a, beta: a }
    }

    /// (|0> - |1>) / sqrt(2)
    pub fn minus() -> Self {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            alpha: Complex::new(a, 0.0),
            beta: Complex::new(-a, 0.0),
        }
    }

    pub fn alpha(&self) -> Complex {
        self.alpha
    }

    pub fn beta(&self) -> Complex {
        self.beta
    }

    /// Probability of finding |0> in a computational-basis measurement.
    pub fn prob_zero(&self) -> f64 {
        self.alpha.norm_sqr()
    }

    /// Probability of finding |1> in a computational-basis measurement.
    pub fn prob_one(&self) -> f64 {
        self.beta.norm_sqr()
    }

    /// `|<self|other>|^2`; insensitive to global phase.
    pub fn fidelity(&self, other: &PureState) -> f64 {
        let overlap = self.alpha.conj() * other.alpha + self.beta.conj() * other.beta;
        overlap.norm_sqr()
    }

    /// Recovers Bloch angles; the inverse of [`PureState::from_angles`] up to
    /// global phase.  At the poles the azimuth is canonicalized to zero.
    pub fn bloch_angles(&self) -> BlochAngles {
        let theta = 2.0 * self.beta.norm().atan2(self.alpha.norm());
        let phi = if theta == 0.0 || theta == std::f64::consts::PI {
            0.0
        } else {
            let raw = self.beta.arg() - self.alpha.arg();
            raw.rem_euclid(std::f64::consts::TAU)
        };
        // Angles derived from a valid state are always in range.
        BlochAngles { theta, phi }
    }
}

/// 2x2 complex matrix acting on [`PureState`] amplitude vectors.
///
/// Entries are stored row-major: `entries[row][col]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Operator2 {
    entries: [[Complex; 2]; 2],
}

impl Operator2 {
    /// Builds an operator, rejecting NaN or infinite entries.
    pub fn new(entries: [[Complex; 2]; 2]) -> Result<Self> {
        for row in &entries {
            for e in row {
                if !e.re.is_finite() || !e.im.is_finite() {
                    return Err(Error::NonFinite {
                        context: "operator entries",
                    });
                }
            }
        }
        Ok(Self { entries })
    }

    /// Diagonal operator `diag(a, b)` with real entries.
    pub fn diag(a: f64, b: f64) -> Result<Self> {
        Self::new([
            [Complex::new(a, 0.0), Complex::new(0.0, 0.0)],
            [Complex::new(0.0, 0.0), Complex::new(b, 0.0)],
        ])
    }

    pub fn identity() -> Self {
        Self::diag(1.0, 1.0).expect("identity entries are finite")
    }

    /// Pauli X (bit flip).
    pub fn pauli_x() -> Self {
        let o = Complex::new(0.0, 0.0);
        let l = Complex::new(1.0, 0.0);
        Self {
            entries: [[o, l], [l, o]],
        }
    }

    /// Pauli Z (phase flip).
    pub fn pauli_z() -> Self {
        Self::diag(1.0, -1.0).expect("Pauli Z entries are finite")
    }

    /// Hadamard gate.
    pub fn hadamard() -> Self {
        let h = Complex::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self {
            entries: [[h, h], [h, -h]],
        }
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex {
        self.entries[row][col]
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let e = &self.entries;
        Self {
            entries: [
                [e[0][0].conj(), e[1][0].conj()],
                [e[0][1].conj(), e[1][1].conj()],
            ],
        }
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &Operator2) -> Self {
        let a = &self.entries;
        let b = &other.entries;
        let mut out = [[Complex::new(0.0, 0.0); 2]; 2];
        for (i, out_row) in out.iter_mut().enumerate() {
            for (j, out_e) in out_row.iter_mut().enumerate() {
                *out_e = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Self { entries: out }
    }

    /// Scales every entry by a real factor.
    pub fn scale(&self, factor: f64) -> Self {
        let f = Complex::new(factor, 0.0);
        let e = &self.entries;
        Self {
            entries: [
                [e[0][0] * f, e[0][1] * f],
                [e[1][0] * f, e[1][1] * f],
            ],
        }
    }

    /// Applies the operator to a state, returning the unnormalized image
    /// vector and its squared norm.  The caller decides whether to
    /// renormalize (e.g. after a measurement collapse).
    pub fn apply(&self, psi: &PureState) -> ([Complex; 2], f64) {
        let e = &self.entries;
        let v0 = e[0][0] * psi.alpha + e[0][1] * psi.beta;
        let v1 = e[1][0] * psi.alpha + e[1][1] * psi.beta;
        (
            [v0, v1],
            v0.norm_sqr() + v1.norm_sqr(),
        )
    }

    /// Applies the operator and renormalizes, returning the post state and
    /// the squared norm of the unnormalized image.  A numerically zero image
    /// vector is rejected rather than renormalized.
    pub fn apply_normalized(&self, psi: &PureState) -> Result<(PureState, f64)> {
        let ([v0, v1], norm_sq) = self.apply(psi);
        if norm_sq <= 0.0 || !norm_sq.is_finite() {
            return Err(Error::ZeroNorm {
                context: "operator application",
            });
        }
        let scale = norm_sq.sqrt().recip();
        Ok((
            PureState {
                alpha: v0 * scale,
                beta: v1 * scale,
            },
            norm_sq,
        ))
    }

    /// Largest entry-wise absolute difference from `other`.
    pub fn max_abs_diff(&self, other: &Operator2) -> f64 {
        let mut max = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                max = max.max((self.entries[i][j] - other.entries[i][j]).norm());
            }
        }
        max
    }

    /// True when the operator equals its conjugate transpose within
    /// [`OPERATOR_TOL`].
    pub fn is_hermitian(&self) -> bool {
        self.max_abs_diff(&self.dagger()) <= OPERATOR_TOL
    }

    /// `<psi| self |psi>` for a Hermitian operator.  Non-Hermitian operators
    /// are rejected because the result would not be real.
    pub fn expectation(&self, psi: &PureState) -> Result<f64> {
        let max_dev = self.max_abs_diff(&self.dagger());
        if max_dev > OPERATOR_TOL {
            return Err(Error::NonHermitian { max_dev });
        }
        let ([v0, v1], _) = self.apply(psi);
        Ok((psi.alpha.conj() * v0 + psi.beta.conj() * v1).re)
    }
}
