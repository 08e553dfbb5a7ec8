//! Hypotheses and conclusions of the eigenvalue-gap lemma.
//!
//! Coordinates are split into a "small" suffix `S = {k, ..., d-1}` (0-based
//! here) and the large remainder. Given a gap `gamma_i / gamma_k >= 1 + p`
//! on the large part and two conditions on the initial residual, early-
//! stopped gradient flow ends with population loss at least
//! `eps (1 - alpha) min_{j in S} lambda_j / gamma_j`, while annealed descent
//! with `eta = 1 / gamma_1` ends at most
//! `eps max_{top} lambda_j / gamma_j + c^K sum_{i in Q} lambda_i delta_i(0)^2`.

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Error, Result};
use crate::optimizers::{annealed_gd, gradient_flow, in_top_eigenspace, large_step_size};
use crate::quadratic::DiagonalProblem;

/// Relative slack applied when comparing realized losses with the bounds.
pub const BOUND_SLACK: f64 = 1e-9;

/// `p = min_{i < k} gamma_i / gamma_k - 1`; errors when there is no gap.
pub fn eigenvalue_gap(problem: &DiagonalProblem, small_start: usize) -> Result<f64> {
    let d = problem.dim();
    if small_start == 0 || small_start >= d {
        return Err(Error::SmallSetOutOfRange { start: small_start, dim: d });
    }
    let gamma = problem.gamma();
    let p = gamma[..small_start]
        .iter()
        .map(|g| g / gamma[small_start])
        .fold(f64::INFINITY, f64::min)
        - 1.0;
    if p <= 0.0 {
        return Err(Error::NoEigenvalueGap { start: small_start, p });
    }
    Ok(p)
}

/// Index in `S` minimizing `gamma_j delta_j(0)^2`, lowest index on ties.
pub fn small_set_argmin(delta0: &[f64], problem: &DiagonalProblem, small_start: usize) -> Result<usize> {
    problem.check_dim(delta0)?;
    let d = problem.dim();
    if small_start >= d {
        return Err(Error::SmallSetOutOfRange { start: small_start, dim: d });
    }
    let mass = |j: usize| problem.gamma()[j] * delta0[j] * delta0[j];
    if (small_start..d).all(|j| mass(j) == 0.0) {
        return Err(Error::DegenerateSmallSet);
    }
    Ok((small_start..d).fold(small_start, |best, j| if mass(j) < mass(best) { j } else { best }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaSetup {
    /// First index (0-based) of the small set `S`.
    pub small_start: usize,
    pub p: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub j_star: usize,
}

impl LemmaSetup {
    pub fn new(
        delta0: &[f64],
        problem: &DiagonalProblem,
        small_start: usize,
        alpha: f64,
        epsilon: f64,
    ) -> Result<Self> {
        check_finite("alpha", alpha)?;
        check_finite("epsilon", epsilon)?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::AlphaOutOfRange(alpha));
        }
        if epsilon <= 0.0 {
            return Err(Error::NonPositiveEpsilon(epsilon));
        }
        let p = eigenvalue_gap(problem, small_start)?;
        let j_star = small_set_argmin(delta0, problem, small_start)?;
        Ok(Self { small_start, p, alpha, epsilon, j_star })
    }

    pub fn small_len(&self, problem: &DiagonalProblem) -> usize {
        problem.dim() - self.small_start
    }

    /// `|S| gamma_{j*} delta_{j*}(0)^2`.
    fn small_mass(&self, delta0: &[f64], problem: &DiagonalProblem) -> Result<f64> {
        problem.check_dim(delta0)?;
        let d = problem.dim();
        if self.small_start == 0 || self.small_start >= d {
            return Err(Error::SmallSetOutOfRange { start: self.small_start, dim: d });
        }
        if !(self.small_start..d).contains(&self.j_star) {
            return Err(Error::InvalidConfig(format!("j_star {} outside the small set", self.j_star)));
        }
        if delta0[self.small_start..].iter().all(|&x| x == 0.0) {
            return Err(Error::DegenerateSmallSet);
        }
        let j = self.j_star;
        Ok(self.small_len(problem) as f64 * problem.gamma()[j] * delta0[j] * delta0[j])
    }
}

/// A checked hypothesis and the quantity it was decided on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub holds: bool,
    pub value: f64,
}

/// `gamma_1 delta_1(0)^2 > epsilon` (strict).
pub fn check_condition1(delta0: &[f64], problem: &DiagonalProblem, epsilon: f64) -> Result<Condition> {
    problem.check_dim(delta0)?;
    let value = problem.gamma()[0] * delta0[0] * delta0[0];
    Ok(Condition { holds: value > epsilon, value })
}

/// `eps^p sum_{i not in S} gamma_i delta_i(0)^2 / (|S| gamma_{j*} delta_{j*}(0)^2)^(1+p) <= alpha`.
///
/// A zero `j*` mass with a non-zero small set makes the left side infinite.
pub fn check_condition2(delta0: &[f64], problem: &DiagonalProblem, setup: &LemmaSetup) -> Result<Condition> {
    let denom = setup.small_mass(delta0, problem)?;
    let large: f64 = (0..setup.small_start)
        .map(|i| problem.gamma()[i] * delta0[i] * delta0[i])
        .sum();
    let value = if denom == 0.0 {
        f64::INFINITY
    } else {
        large / denom * (setup.epsilon / denom).powf(setup.p)
    };
    Ok(Condition { holds: value <= setup.alpha, value })
}

/// `T >= ln(|S| gamma_{j*} delta_{j*}(0)^2 / eps) / (4 gamma_k)`.
pub fn stop_time_lower_bound(delta0: &[f64], problem: &DiagonalProblem, setup: &LemmaSetup) -> Result<f64> {
    let mass = setup.small_mass(delta0, problem)?;
    Ok((mass / setup.epsilon).ln() / (4.0 * problem.gamma()[setup.small_start]))
}

/// `eps (1 - alpha) min_{j in S} lambda_j / gamma_j`.
pub fn gf_lower_bound(setup: &LemmaSetup, problem: &DiagonalProblem) -> f64 {
    let min_ratio = (setup.small_start..problem.dim())
        .map(|j| problem.lambda()[j] / problem.gamma()[j])
        .fold(f64::INFINITY, f64::min);
    setup.epsilon * (1.0 - setup.alpha) * min_ratio
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgdBound {
    pub bound: f64,
    /// `c = max_{j in Q} |1 - 2 gamma_j / gamma_1|^2`, zero when `Q` is empty.
    pub decay_constant: f64,
    /// `c^K sum_{i in Q} lambda_i delta_i(0)^2`.
    pub remainder: f64,
}

/// Upper bound on the annealed population loss after `k` large steps.
pub fn agd_upper_bound(
    delta0: &[f64],
    setup: &LemmaSetup,
    problem: &DiagonalProblem,
    k: usize,
) -> Result<AgdBound> {
    problem.check_dim(delta0)?;
    let top = problem.top_gamma();
    let mut top_ratio = f64::NEG_INFINITY;
    let mut decay_constant = 0.0f64;
    let mut q_mass = 0.0;
    for (i, (&g, &l)) in problem.gamma().iter().zip(problem.lambda()).enumerate() {
        if in_top_eigenspace(g, top) {
            top_ratio = top_ratio.max(l / g);
        } else {
            let f = 1.0 - 2.0 * (g / top);
            decay_constant = decay_constant.max(f * f);
            q_mass += l * delta0[i] * delta0[i];
        }
    }
    let k = i32::try_from(k).unwrap_or(i32::MAX);
    let remainder = if q_mass == 0.0 { 0.0 } else { decay_constant.powi(k) * q_mass };
    Ok(AgdBound { bound: setup.epsilon * top_ratio + remainder, decay_constant, remainder })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdicts {
    pub gf_bound: bool,
    pub agd_bound: bool,
    pub stop_time_bound: bool,
}

impl Verdicts {
    pub fn all(&self) -> bool {
        self.gf_bound && self.agd_bound && self.stop_time_bound
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub setup: LemmaSetup,
    #[serde(rename = "K")]
    pub k_steps: usize,
    pub eta: f64,
    pub condition1: Condition,
    pub condition2: Condition,
    pub gf_lower_bound: f64,
    pub agd_upper_bound: f64,
    pub agd_decay_constant: f64,
    pub agd_remainder: f64,
    pub stop_time_lower: f64,
    pub stop_time: f64,
    pub gd_steps_taken: usize,
    pub realized_gf_loss: f64,
    pub realized_agd_loss: f64,
    pub verdicts: Verdicts,
}

impl LemmaReport {
    /// Both hypotheses hold, so the conclusions are claimed.
    pub fn applicable(&self) -> bool {
        self.condition1.holds && self.condition2.holds
    }

    pub fn bounds_hold(&self) -> bool {
        self.verdicts.all()
    }

    /// Realized gradient-flow loss over realized annealed loss.
    pub fn ratio(&self) -> f64 {
        self.realized_gf_loss / self.realized_agd_loss
    }
}

/// Runs gradient flow and annealed descent (`eta = 1 / gamma_1`, `k` steps)
/// from `delta0` and compares the outcomes with the analytic bounds.
/// Failing hypotheses are reported, not raised.
pub fn verify_lemma(
    delta0: &[f64],
    problem: &DiagonalProblem,
    setup: &LemmaSetup,
    k: usize,
    snapshots: usize,
) -> Result<LemmaReport> {
    let condition1 = check_condition1(delta0, problem, setup.epsilon)?;
    let condition2 = check_condition2(delta0, problem, setup)?;
    let stop_time_lower = stop_time_lower_bound(delta0, problem, setup)?;
    let gf_bound = gf_lower_bound(setup, problem);
    let agd = agd_upper_bound(delta0, setup, problem, k)?;

    let eta = large_step_size(problem);
    let gf = gradient_flow(delta0, problem, setup.epsilon, snapshots)?;
    let annealed = annealed_gd(delta0, problem, eta, k, setup.epsilon, snapshots)?;
    let realized_gf_loss = problem.population_loss_of(&gf.final_state.delta)?;
    let realized_agd_loss = problem.population_loss_of(&annealed.final_state().delta)?;

    let verdicts = Verdicts {
        gf_bound: realized_gf_loss >= gf_bound * (1.0 - BOUND_SLACK),
        agd_bound: realized_agd_loss <= agd.bound * (1.0 + BOUND_SLACK),
        stop_time_bound: gf.stop_time >= stop_time_lower - BOUND_SLACK * stop_time_lower.abs(),
    };
    Ok(LemmaReport {
        setup: *setup,
        k_steps: k,
        eta,
        condition1,
        condition2,
        gf_lower_bound: gf_bound,
        agd_upper_bound: agd.bound,
        agd_decay_constant: agd.decay_constant,
        agd_remainder: agd.remainder,
        stop_time_lower,
        stop_time: gf.stop_time,
        gd_steps_taken: annealed.gd_steps_taken,
        realized_gf_loss,
        realized_agd_loss,
        verdicts,
    })
}
