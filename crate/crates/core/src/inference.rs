//! Likelihood, estimation, and entropy machinery for postselected records.
//!
//! A record of a reversal chain holds `n_m` hexagons that survived via the
//! null-outcome path and `n_mbar` via the complementary path.  The weighted
//! likelihood of Bloch angles `(theta, phi)` multiplies, per hexagon, the Born
//! probability of the first outcome and the conditional probability that the
//! undo check repeated it.  Because the conditional probability is the
//! state-independent joint path weight divided by the same Born prior, each
//! pair telescopes:
//!
//! ```text
//! P_m(psi) * [(1-p)(1-q) / P_m(psi)] = (1-p)(1-q)
//! ```
//!
//! so the full weighted likelihood collapses to
//! `[(1-p)(1-q)]^n_m * (p q)^n_mbar`, carrying no dependence on the state at
//! all.  The log-likelihood is evaluated in that telescoped form, which makes
//! the flatness exact instead of exact-up-to-rounding; the test suite
//! independently multiplies the per-hexagon factors and confirms the collapse
//! numerically.  Switching the reversal factors off keeps only the Born
//! priors and recovers an informative (state-dependent) likelihood.
//!
//! All entropies are reported in nats.

use serde::{Deserialize, Serialize};

use crate::chain::CountRecord;
use crate::error::{Error, Result};
use crate::measurement::{Outcome, PartialMeasurement};
use crate::qubit::{BlochAngles, PureState};

/// Default tie tolerance for maximum-likelihood cell selection.
pub const DEFAULT_MAP_TIE_TOL: f64 = 1e-9;
/// Default central-difference step (radians) for the Fisher matrix.
pub const DEFAULT_FD_STEP: f64 = 1e-4;
/// A Hessian whose half-step recomputation moves any entry by more than this
/// is flagged unreliable.
pub const RICHARDSON_TOL: f64 = 1e-4;

/// Whether the likelihood includes the undo-check factors alongside the Born
/// priors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LikelihoodSpec {
    pub include_reversal_factors: bool,
}

impl LikelihoodSpec {
    /// Priors and undo-check factors (the full postselected record).
    pub fn with_reversal_factors() -> Self {
        Self {
            include_reversal_factors: true,
        }
    }

    /// Born priors only (pretending the undo checks were free).
    pub fn priors_only() -> Self {
        Self {
            include_reversal_factors: false,
        }
    }
}

/// `count * ln(prob)`, with the convention that a zero count contributes
/// nothing even when the probability vanishes.
fn count_log_term(count: u64, prob: f64) -> f64 {
    if count == 0 {
        0.0
    } else {
        count as f64 * prob.ln()
    }
}

/// Log weighted likelihood of the Bloch angles given postselected counts.
///
/// With reversal factors on the value is angle-independent (see the module
/// docs); with them off it is the ordinary two-outcome log-likelihood of the
/// Born priors.  A zero-probability factor with a nonzero count yields
/// negative infinity, not an error.
pub fn log_weighted_likelihood(
    pm: &PartialMeasurement,
    counts: &CountRecord,
    angles: BlochAngles,
    spec: LikelihoodSpec,
) -> f64 {
    if spec.include_reversal_factors {
        let joint_m = (1.0 - pm.p()) * (1.0 - pm.q());
        let joint_mbar = pm.p() * pm.q();
        count_log_term(counts.n_m, joint_m) + count_log_term(counts.n_mbar, joint_mbar)
    } else {
        let psi = PureState::from_angles(angles);
        let (p_m, p_mbar) = pm.outcome_probabilities(&psi);
        count_log_term(counts.n_m, p_m) + count_log_term(counts.n_mbar, p_mbar)
    }
}

/// Linear-domain weighted likelihood; underflows to zero for large counts,
/// which is why the log version is the primary interface.
pub fn weighted_likelihood(
    pm: &PartialMeasurement,
    counts: &CountRecord,
    angles: BlochAngles,
    spec: LikelihoodSpec,
) -> f64 {
    log_weighted_likelihood(pm, counts, angles, spec).exp()
}

/// Rectangular evaluation grid over the Bloch sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceGrid {
    thetas: Vec<f64>,
    phis: Vec<f64>,
}

impl SurfaceGrid {
    /// Explicit grid lines; both axes must be strictly increasing and within
    /// `[0, pi]` and `[0, 2*pi)` respectively.
    pub fn new(thetas: Vec<f64>, phis: Vec<f64>) -> Result<Self> {
        if thetas.is_empty() || phis.is_empty() {
            return Err(Error::InvalidConfig {
                detail: "grid axes must be non-empty".into(),
            });
        }
        for w in thetas.windows(2).chain(phis.windows(2)) {
            if !(w[0] < w[1]) {
                return Err(Error::InvalidConfig {
                    detail: "grid axes must be strictly increasing".into(),
                });
            }
        }
        for &t in &thetas {
            BlochAngles::new(t, 0.0)?;
        }
        for &f in &phis {
            BlochAngles::new(1.0, f)?;
        }
        Ok(Self {
            thetas,
            phis,
        })
    }

    /// `n x m` grid: theta spans `[0, pi]` inclusive, phi spans `[0, 2*pi)`
    /// half-open.  Both axis sizes must be at least 2.
    pub fn uniform(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta < 2 || n_phi < 2 {
            return Err(Error::InvalidConfig {
                detail: "uniform grid needs at least 2 points per axis".into(),
            });
        }
        // The unit fraction is computed first so the final theta is exactly
        // pi (multiplying into pi before dividing can land one ulp above it,
        // which the range check rejects).
        let thetas = (0..n_theta)
            .map(|i| i as f64 / (n_theta - 1) as f64 * std::f64::consts::PI)
            .collect();
        let phis = (0..n_phi)
            .map(|j| j as f64 / n_phi as f64 * std::f64::consts::TAU)
            .collect();
        Self::new(thetas, phis)
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn phis(&self) -> &[f64] {
        &self.phis
    }
}

/// Log-likelihood evaluated over a grid, with its flatness (max minus min over
/// the finite entries; 0 when no entry is finite).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LikelihoodSurface {
    pub theta_grid: Vec<f64>,
    pub phi_grid: Vec<f64>,
    /// `log_values[i][j]` is the value at `(theta_grid[i], phi_grid[j])`.
    pub log_values: Vec<Vec<f64>>,
    pub flatness: f64,
}

/// Evaluates the log weighted likelihood over `grid`.
pub fn log_likelihood_surface(
    pm: &PartialMeasurement,
    counts: &CountRecord,
    grid: &SurfaceGrid,
    spec: LikelihoodSpec,
) -> LikelihoodSurface {
    let mut log_values = Vec::with_capacity(grid.thetas.len());
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &theta in &grid.thetas {
        let mut row = Vec::with_capacity(grid.phis.len());
        for &phi in &grid.phis {
            let angles = BlochAngles::new(theta, phi).expect("grid validated on construction");
            let v = log_weighted_likelihood(pm, counts, angles, spec);
            if v.is_finite() {
                min = min.min(v);
                max = max.max(v);
            }
            row.push(v);
        }
        log_values.push(row);
    }
    let flatness = if max >= min { max - min } else { 0.0 };
    LikelihoodSurface {
        theta_grid: grid.thetas.clone(),
        phi_grid: grid.phis.clone(),
        log_values,
        flatness,
    }
}

/// Maximum-likelihood cells of a surface.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapEstimate {
    /// `(theta index, phi index)` of every cell within the tie tolerance of
    /// the maximum, in row-major order.
    pub cells: Vec<(usize, usize)>,
    pub max_log: f64,
    /// Set when more than half of all cells tie for the maximum: the surface
    /// carries no usable location information.
    pub degenerate: bool,
}

/// Finds all cells within `tie_tolerance` of the surface maximum.  A surface
/// with no finite entries has no maximum and is rejected.
pub fn map_estimate(surface: &LikelihoodSurface, tie_tolerance: f64) -> Result<MapEstimate> {
    let mut max_log = f64::NEG_INFINITY;
    for row in &surface.log_values {
        for &v in row {
            if v.is_finite() && v > max_log {
                max_log = v;
            }
        }
    }
    if !max_log.is_finite() {
        return Err(Error::EmptySurface);
    }
    let mut cells = Vec::new();
    let mut total = 0usize;
    for (i, row) in surface.log_values.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            total += 1;
            if v.is_finite() && max_log - v <= tie_tolerance {
                cells.push((i, j));
            }
        }
    }
    let degenerate = cells.len() * 2 > total;
    Ok(MapEstimate {
        cells,
        max_log,
        degenerate,
    })
}

/// Fisher information matrix in `(theta, phi)` with a step-halving
/// reliability check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FisherReport {
    /// Negative Hessian of the log weighted likelihood,
    /// `[[-d2/dtheta2, -d2/dtheta dphi], [., -d2/dphi2]]`.
    pub matrix: [[f64; 2]; 2],
    pub step: f64,
    /// Largest entry change when the Hessian is recomputed at half the step.
    pub max_disagreement: f64,
    /// False when `max_disagreement` exceeds [`RICHARDSON_TOL`].
    pub reliable: bool,
}

/// Central-difference negative Hessian of the log weighted likelihood.
///
/// The angles must be far enough inside the domain that `theta +/- step` stays
/// in `[0, pi]`; phi wraps modulo `2*pi`.  Every stencil evaluation must be
/// finite, otherwise the curvature is undefined and an error is returned.
pub fn fisher_information(
    pm: &PartialMeasurement,
    counts: &CountRecord,
    angles: BlochAngles,
    spec: LikelihoodSpec,
    step: f64,
) -> Result<FisherReport> {
    if !step.is_finite() || step <= 0.0 {
        return Err(Error::InvalidConfig {
            detail: format!("finite-difference step {step} must be positive"),
        });
    }
    let f = |theta: f64, phi: f64| -> Result<f64> {
        let a = BlochAngles::new(theta, phi.rem_euclid(std::f64::consts::TAU))?;
        let v = log_weighted_likelihood(pm, counts, a, spec);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::ZeroProbability {
                context: "likelihood stencil evaluation",
            })
        }
    };
    let full = neg_hessian(&f, angles.theta(), angles.phi(), step)?;
    let half = neg_hessian(&f, angles.theta(), angles.phi(), 0.5 * step)?;
    let mut max_disagreement = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            max_disagreement = max_disagreement.max((full[i][j] - half[i][j]).abs());
        }
    }
    Ok(FisherReport {
        matrix: full,
        step,
        max_disagreement,
        reliable: max_disagreement <= RICHARDSON_TOL,
    })
}

/// Negative Hessian of `f` at `(x, y)` by central differences with step `h`.
fn neg_hessian(
    f: &dyn Fn(f64, f64) -> Result<f64>,
    x: f64,
    y: f64,
    h: f64,
) -> Result<[[f64; 2]; 2]> {
    let c = f(x, y)?;
    let xx = (f(x + h, y)? - 2.0 * c + f(x - h, y)?) / (h * h);
    let yy = (f(x, y + h)? - 2.0 * c + f(x, y - h)?) / (h * h);
    let xy = (f(x + h, y + h)? - f(x + h, y - h)? - f(x - h, y + h)? + f(x - h, y - h)?)
        / (4.0 * h * h);
    Ok([[-xx, -xy], [-xy, -yy]])
}

/// Surprisal decomposition of a postselected record, in nats.
///
/// `s_meas` is the information cost of the first-measurement outcomes,
/// `s_rev` that of the undo checks, and `s_total` their state-independent
/// sum `-n_m ln[(1-p)(1-q)] - n_mbar ln(p q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyReport {
    pub s_meas: f64,
    pub s_rev: f64,
    pub s_total: f64,
}

/// Computes the surprisal decomposition for a state and counts.  Every factor
/// probability with a nonzero count must be positive.
pub fn entropy_report(
    pm: &PartialMeasurement,
    psi: &PureState,
    counts: &CountRecord,
) -> Result<EntropyReport> {
    let (p_m, p_mbar) = pm.outcome_probabilities(psi);
    let joint_m = (1.0 - pm.p()) * (1.0 - pm.q());
    let joint_mbar = pm.p() * pm.q();

    let mut s_meas = 0.0;
    let mut s_rev = 0.0;
    let mut s_total = 0.0;
    for (count, prior, joint, outcome) in [
        (counts.n_m, p_m, joint_m, Outcome::M),
        (counts.n_mbar, p_mbar, joint_mbar, Outcome::MBar),
    ] {
        if count == 0 {
            continue;
        }
        if prior <= 0.0 || joint <= 0.0 {
            return Err(Error::ZeroProbability {
                context: "entropy factor",
            });
        }
        let conditional = pm.conditional_success(psi, outcome)?;
        let n = count as f64;
        s_meas -= n * prior.ln();
        s_rev -= n * conditional.ln();
        s_total -= n * joint.ln();
    }
    Ok(EntropyReport {
        s_meas,
        s_rev,
        s_total,
    })
}

/// `x ln x` with the continuous-extension convention `0 ln 0 = 0`.
fn x_ln_x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Expected information cost per successful hexagon (nats):
/// `-(1-p)(1-q) ln[(1-p)(1-q)] - p q ln(p q)`.  Maximal, at `ln 2`, when the
/// two path weights are equal (`p = q = 1/2`).
pub fn per_hexagon_entropy(p: f64, q: f64) -> f64 {
    let joint_m = (1.0 - p) * (1.0 - q);
    let joint_mbar = p * q;
    -x_ln_x(joint_m) - x_ln_x(joint_mbar)
}

/// Per-hexagon entropy evaluated over a strength grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyScan {
    pub p_grid: Vec<f64>,
    pub q_grid: Vec<f64>,
    /// `values[i][j]` is the entropy at `(p_grid[i], q_grid[j])`.
    pub values: Vec<Vec<f64>>,
    /// `(p, q)` of the first maximal cell in row-major order.
    pub argmax: (f64, f64),
    pub max_value: f64,
}

/// Evaluates [`per_hexagon_entropy`] over the given strength grids and finds
/// the maximum.
pub fn asymptotic_entropy_scan(p_grid: &[f64], q_grid: &[f64]) -> Result<EntropyScan> {
    if p_grid.is_empty() || q_grid.is_empty() {
        return Err(Error::InvalidConfig {
            detail: "entropy scan grids must be non-empty".into(),
        });
    }
    for &v in p_grid.iter().chain(q_grid) {
        if !v.is_finite() || !(0.0..=1.0).contains(&v) {
            return Err(Error::ProbabilityOutOfRange {
                name: "scan grid entry",
                value: v,
            });
        }
    }
    let mut values = Vec::with_capacity(p_grid.len());
    let mut argmax = (p_grid[0], q_grid[0]);
    let mut max_value = f64::NEG_INFINITY;
    for &p in p_grid {
        let mut row = Vec::with_capacity(q_grid.len());
        for &q in q_grid {
            let s = per_hexagon_entropy(p, q);
            if s > max_value {
                max_value = s;
                argmax = (p, q);
            }
            row.push(s);
        }
        values.push(row);
    }
    Ok(EntropyScan {
        p_grid: p_grid.to_vec(),
        q_grid: q_grid.to_vec(),
        values,
        argmax,
        max_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pm(p: f64, q: f64) -> PartialMeasurement {
        PartialMeasurement::new(p, q).unwrap()
    }

    fn angles(theta: f64, phi: f64) -> BlochAngles {
        BlochAngles::new(theta, phi).unwrap()
    }

    /// Independent route: multiply the per-hexagon prior and undo-check
    /// factors explicitly, without the telescoped shortcut.
    fn factor_route_log_likelihood(
        meas: &PartialMeasurement,
        counts: &CountRecord,
        a: BlochAngles,
        include_reversal: bool,
    ) -> f64 {
        let psi = PureState::from_angles(a);
        let (p_m, p_mbar) = meas.outcome_probabilities(&psi);
        let mut total = 0.0;
        for (count, prior, outcome) in [
            (counts.n_m, p_m, Outcome::M),
            (counts.n_mbar, p_mbar, Outcome::MBar),
        ] {
            if count == 0 {
                continue;
            }
            total += count as f64 * prior.ln();
            if include_reversal {
                let cond = meas.conditional_success(&psi, outcome).unwrap();
                total += count as f64 * cond.ln();
            }
        }
        total
    }

    #[test]
    fn reversal_factors_cancel_the_state_dependence() {
        // The telescoped implementation must agree with explicit per-factor
        // multiplication at every grid point, for desk-scale counts.
        let grid: Vec<BlochAngles> = [(0.1, 0.2), (0.9, 2.2), (1.5707, 3.1), (2.8, 5.9)]
            .iter()
            .map(|&(t, f)| angles(t, f))
            .collect();
        for &(p, q) in &[(0.2, 0.3), (0.5, 0.5), (0.9, 0.05), (0.35, 0.75)] {
            let meas = pm(p, q);
            for &counts in &[
                CountRecord::new(56, 6),
                CountRecord::new(113, 41),
                CountRecord::new(7, 0),
                CountRecord::new(0, 9),
            ] {
                for &a in &grid {
                    let telescoped = log_weighted_likelihood(
                        &meas,
                        &counts,
                        a,
                        LikelihoodSpec::with_reversal_factors(),
                    );
                    let explicit = factor_route_log_likelihood(&meas, &counts, a, true);
                    assert_abs_diff_eq!(telescoped, explicit, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn factors_on_value_is_identical_at_any_angles() {
        let meas = pm(0.2, 0.3);
        let counts = CountRecord::new(2, 1);
        let spec = LikelihoodSpec::with_reversal_factors();
        let a = log_weighted_likelihood(&meas, &counts, angles(0.3, 1.2), spec);
        let b = log_weighted_likelihood(&meas, &counts, angles(2.1, 4.0), spec);
        assert_eq!(a, b, "factors-on likelihood must not depend on the angles");

        // 0.56^2 * 0.06 in the linear domain.
        let linear = weighted_likelihood(&meas, &counts, angles(0.3, 1.2), spec);
        assert_abs_diff_eq!(linear, 0.018816, epsilon = 1e-15);
    }

    #[test]
    fn factors_off_prefers_the_more_likely_state() {
        let meas = pm(0.2, 0.3);
        let counts = CountRecord::new(1, 0);
        let spec = LikelihoodSpec::priors_only();
        // One null outcome: |0> has prior 0.7, |1> has 0.8.
        let at_zero = weighted_likelihood(&meas, &counts, angles(0.0, 0.0), spec);
        let at_one = weighted_likelihood(&meas, &counts, angles(std::f64::consts::PI, 0.0), spec);
        assert_abs_diff_eq!(at_zero, 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(at_one, 0.8, epsilon = 1e-12);
    }

    #[test]
    fn zero_probability_factor_gives_negative_infinity() {
        // p = 0 kills the complementary path weight.
        let meas = pm(0.0, 0.3);
        let counts = CountRecord::new(0, 3);
        let v = log_weighted_likelihood(
            &meas,
            &counts,
            angles(1.0, 0.0),
            LikelihoodSpec::with_reversal_factors(),
        );
        assert_eq!(v, f64::NEG_INFINITY);
    }

    #[test]
    fn surface_flatness_on_vs_off() {
        let meas = pm(0.2, 0.3);
        let counts = CountRecord::new(56_000, 6_000);
        let grid = SurfaceGrid::uniform(50, 50).unwrap();

        let on = log_likelihood_surface(&meas, &counts, &grid, LikelihoodSpec::with_reversal_factors());
        assert_eq!(on.flatness, 0.0);

        let off = log_likelihood_surface(&meas, &counts, &grid, LikelihoodSpec::priors_only());
        assert!(off.flatness > 1e-3, "flatness = {}", off.flatness);
    }

    #[test]
    fn symmetric_strengths_flatten_even_the_priors() {
        // p = q makes both effects proportional to the identity, so even the
        // priors-only surface is flat.
        let meas = pm(0.5, 0.5);
        let counts = CountRecord::new(120, 80);
        let grid = SurfaceGrid::uniform(20, 20).unwrap();
        let off = log_likelihood_surface(&meas, &counts, &grid, LikelihoodSpec::priors_only());
        assert!(off.flatness < 1e-12, "flatness = {}", off.flatness);
    }

    #[test]
    fn map_on_flat_surface_is_degenerate() {
        let meas = pm(0.2, 0.3);
        let counts = CountRecord::new(56, 6);
        let grid = SurfaceGrid::uniform(20, 20).unwrap();
        let on = log_likelihood_surface(&meas, &counts, &grid, LikelihoodSpec::with_reversal_factors());
        let map = map_estimate(&on, DEFAULT_MAP_TIE_TOL).unwrap();
        assert!(map.degenerate);
        assert_eq!(map.cells.len(), 400, "every cell ties on a flat surface");
    }

    #[test]
    fn map_without_reversal_factors_hits_the_boundary_row() {
        // The postselected null fraction 0.9 exceeds every reachable prior
        // (0.7..0.8 for p=0.2, q=0.3), so the priors-only maximum sits on the
        // theta = pi row -- at the same cell for any true state that produced
        // the counts.
        let meas = pm(0.2, 0.3);
        let counts = CountRecord::new(90, 10);
        let grid = SurfaceGrid::uniform(21, 11).unwrap();
        let off = log_likelihood_surface(&meas, &counts, &grid, LikelihoodSpec::priors_only());
        let map = map_estimate(&off, DEFAULT_MAP_TIE_TOL).unwrap();
        assert!(!map.degenerate);
        assert!(!map.cells.is_empty());
        for &(i, _) in &map.cells {
            assert_eq!(i, 20, "argmax must lie on the last theta row");
        }
    }

    #[test]
    fn map_rejects_all_infinite_surface() {
        let surface = LikelihoodSurface {
            theta_grid: vec![0.0, 1.0],
            phi_grid: vec![0.0],
            log_values: vec![vec![f64::NEG_INFINITY], vec![f64::NEG_INFINITY]],
            flatness: 0.0,
        };
        assert!(matches!(
            map_estimate(&surface, 1e-9),
            Err(Error::EmptySurface)
        ));
    }

    #[test]
    fn hessian_of_a_known_quadratic() {
        // f(x, y) = -(2x^2 + 0.6xy + 1.5y^2) has constant Hessian; the
        // negative Hessian is [[4, 0.6], [0.6, 3]].
        let f = |x: f64, y: f64| -> Result<f64> { Ok(-(2.0 * x * x + 0.6 * x * y + 1.5 * y * y)) };
        let h = neg_hessian(&f, 0.4, 0.9, 1e-4).unwrap();
        assert_abs_diff_eq!(h[0][0], 4.0, epsilon = 1e-5);
        assert_abs_diff_eq!(h[0][1], 0.6, epsilon = 1e-5);
        assert_abs_diff_eq!(h[1][1], 3.0, epsilon = 1e-5);
    }

    #[test]
    fn fisher_with_reversal_factors_vanishes() {
        let meas = pm(0.2, 0.3);
        let counts = CountRecord::new(75, 25);
        let report = fisher_information(
            &meas,
            &counts,
            angles(std::f64::consts::FRAC_PI_2, 1.0),
            LikelihoodSpec::with_reversal_factors(),
            DEFAULT_FD_STEP,
        )
        .unwrap();
        for row in report.matrix {
            for entry in row {
                assert_eq!(entry, 0.0, "flat likelihood has exactly zero curvature");
            }
        }
        assert!(report.reliable);
    }

    #[test]
    fn fisher_without_reversal_factors_has_theta_curvature() {
        // At theta = pi/2 the null prior is 0.75 = n_m / n, a stationary
        // point of the priors-only likelihood, with positive information.
        let meas = pm(0.2, 0.3);
        let counts = CountRecord::new(75, 25);
        let report = fisher_information(
            &meas,
            &counts,
            angles(std::f64::consts::FRAC_PI_2, 1.0),
            LikelihoodSpec::priors_only(),
            DEFAULT_FD_STEP,
        )
        .unwrap();
        assert!(
            report.matrix[0][0] > 1e-2,
            "theta-theta entry = {}",
            report.matrix[0][0]
        );
        // The priors depend only on theta, so the phi row/column vanish up to
        // central-difference roundoff (~ machine epsilon * |logL| / step^2).
        assert_abs_diff_eq!(report.matrix[1][1], 0.0, epsilon = 1e-5);
        assert_abs_diff_eq!(report.matrix[0][1], 0.0, epsilon = 1e-5);
        assert!(report.reliable);
    }

    #[test]
    fn entropy_report_reference_values() {
        let meas = pm(0.2, 0.3);
        let report = entropy_report(&meas, &PureState::plus(), &CountRecord::new(1, 1)).unwrap();
        // Priors 0.75 / 0.25; conditionals 0.56/0.75 and 0.06/0.25.
        let expected_meas = -(0.75f64.ln() + 0.25f64.ln());
        let expected_rev = -((0.56f64 / 0.75).ln() + (0.06f64 / 0.25).ln());
        let expected_total = -(0.56f64.ln() + 0.06f64.ln());
        assert_abs_diff_eq!(report.s_meas, expected_meas, epsilon = 1e-12);
        assert_abs_diff_eq!(report.s_rev, expected_rev, epsilon = 1e-12);
        assert_abs_diff_eq!(report.s_total, expected_total, epsilon = 1e-12);
    }

    #[test]
    fn entropy_decomposition_is_consistent_and_state_independent() {
        let states = [
            PureState::zero(),
            PureState::plus(),
            PureState::from_angles(angles(2.2, 4.0)),
        ];
        for &(p, q) in &[(0.2, 0.3), (0.5, 0.5), (0.9, 0.05)] {
            let meas = pm(p, q);
            let counts = CountRecord::new(137, 43);
            let mut totals = Vec::new();
            for psi in &states {
                let r = entropy_report(&meas, psi, &counts).unwrap();
                assert_abs_diff_eq!(r.s_meas + r.s_rev, r.s_total, epsilon = 1e-12);
                totals.push(r.s_total);
            }
            for &t in &totals[1..] {
                assert_eq!(t, totals[0], "s_total must not depend on the state");
            }
        }
    }

    #[test]
    fn entropy_report_rejects_zero_probability_factors() {
        // q = 0 makes the complementary path weight vanish.
        let meas = pm(0.5, 0.0);
        let err = entropy_report(&meas, &PureState::plus(), &CountRecord::new(1, 1)).unwrap_err();
        assert!(matches!(err, Error::ZeroProbability { .. }));
        // With a zero count on that factor the report is fine.
        assert!(entropy_report(&meas, &PureState::plus(), &CountRecord::new(5, 0)).is_ok());
    }

    #[test]
    fn per_hexagon_entropy_reference_values() {
        // Balanced path weights maximize the cost at ln 2.
        assert_abs_diff_eq!(
            per_hexagon_entropy(0.5, 0.5),
            std::f64::consts::LN_2,
            epsilon = 1e-12
        );
        // 0.56/0.06 weights.
        let expected = -0.56f64 * 0.56f64.ln() - 0.06f64 * 0.06f64.ln();
        assert_abs_diff_eq!(per_hexagon_entropy(0.2, 0.3), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(per_hexagon_entropy(0.2, 0.3), 0.4935, epsilon = 5e-4);
        // Vanishing strengths cost nothing: the record is certain.
        assert_eq!(per_hexagon_entropy(0.0, 0.0), 0.0);
    }

    #[test]
    fn entropy_scan_peaks_at_the_symmetric_point() {
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let scan = asymptotic_entropy_scan(&grid, &grid).unwrap();
        assert_eq!(scan.argmax, (0.5, 0.5));
        assert_abs_diff_eq!(scan.max_value, std::f64::consts::LN_2, epsilon = 1e-12);
    }

    #[test]
    fn grid_validation() {
        assert!(SurfaceGrid::uniform(1, 5).is_err());
        assert!(SurfaceGrid::new(vec![0.5, 0.4], vec![0.0]).is_err());
        assert!(SurfaceGrid::new(vec![0.5], vec![0.0, 7.0]).is_err());
        assert!(asymptotic_entropy_scan(&[0.5, 1.5], &[0.5]).is_err());
    }

    #[test]
    fn uniform_grid_endpoints_are_exact_for_any_size() {
        // Sizes whose divisor does not divide pi cleanly used to overshoot
        // the upper theta bound by one ulp and fail validation.
        for n in 2..=256 {
            let grid = SurfaceGrid::uniform(n, n).unwrap();
            assert_eq!(grid.thetas()[0], 0.0);
            assert_eq!(grid.thetas()[n - 1], std::f64::consts::PI);
            assert!(*grid.phis().last().unwrap() < std::f64::consts::TAU);
        }
    }
}
