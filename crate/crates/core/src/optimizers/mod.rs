//! Gradient flow, large-step gradient descent and the annealed schedule
//! (descent for `K` steps, then flow), all early-stopped at a train-loss
//! threshold.
//!
//! In eigen-coordinates both dynamics are diagonal:
//!
//! ```text
//!   flow:     delta_i(t)   = delta_i(0) * exp(-2 gamma_i t)
//!   descent:  delta_i(t+1) = (1 - 2 eta gamma_i) * delta_i(t)
//! ```
//!
//! Flow is always evaluated in closed form. [`euler_oracle`] integrates it
//! with small explicit steps and exists only as an independent check.

mod trajectory;

pub use trajectory::{Trajectory, TrajectoryPoint, DEFAULT_SNAPSHOTS};

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Error, Result};
use crate::quadratic::{weighted_square_sum, DiagonalProblem, Phase, ResidualState};
use trajectory::spread_indices;

/// Relative tolerance for treating `gamma_i` as part of the top eigenspace,
/// and `eta * gamma_1` as exactly 1.
pub const TOP_EIGEN_TOL: f64 = 1e-12;

pub const BISECTION_MAX_ITERS: usize = 200;

const MAX_DOUBLINGS: usize = 2048;

/// `gamma_i` belongs to the top eigenspace of the train loss.
pub fn in_top_eigenspace(gamma_i: f64, top: f64) -> bool {
    gamma_i / top >= 1.0 - TOP_EIGEN_TOL
}

/// The large learning rate `1 / gamma_1`, at which the top eigenspace
/// oscillates.
pub fn large_step_size(problem: &DiagonalProblem) -> f64 {
    1.0 / problem.top_gamma()
}

fn check_epsilon(epsilon: f64) -> Result<f64> {
    check_finite("epsilon", epsilon)?;
    if epsilon <= 0.0 {
        return Err(Error::NonPositiveEpsilon(epsilon));
    }
    Ok(epsilon)
}

fn check_snapshots(snapshots: usize) -> Result<()> {
    if snapshots < 2 {
        return Err(Error::TooFewSnapshots(snapshots));
    }
    Ok(())
}

/// Per-coordinate multipliers `1 - 2 eta gamma_i` of one descent step.
///
/// When `eta` is the large step `1 / gamma_1`, top-eigenspace factors are
/// exactly `-1` and the rest are formed as `1 - 2 gamma_i / gamma_1`.
pub fn update_factors(problem: &DiagonalProblem, eta: f64) -> Result<Vec<f64>> {
    if !eta.is_finite() || eta <= 0.0 {
        return Err(Error::NonPositiveStepSize(eta));
    }
    let top = problem.top_gamma();
    let large = (eta * top - 1.0).abs() <= TOP_EIGEN_TOL;
    Ok(problem
        .gamma()
        .iter()
        .map(|&g| match (large, in_top_eigenspace(g, top)) {
            (true, true) => -1.0,
            (true, false) => 1.0 - 2.0 * (g / top),
            (false, _) => 1.0 - 2.0 * eta * g,
        })
        .collect())
}

/// One gradient-descent step on the train loss.
pub fn gd_step(delta: &[f64], problem: &DiagonalProblem, eta: f64) -> Result<Vec<f64>> {
    problem.check_dim(delta)?;
    let factors = update_factors(problem, eta)?;
    Ok(delta.iter().zip(&factors).map(|(d, f)| d * f).collect())
}

fn flow_unchecked(delta0: &[f64], gamma: &[f64], t: f64) -> Vec<f64> {
    delta0.iter().zip(gamma).map(|(d, g)| d * (-2.0 * g * t).exp()).collect()
}

/// Closed-form gradient-flow residual at time `t`.
pub fn gf_state(delta0: &[f64], problem: &DiagonalProblem, t: f64) -> Result<Vec<f64>> {
    problem.check_dim(delta0)?;
    check_finite("t", t)?;
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    Ok(flow_unchecked(delta0, problem.gamma(), t))
}

/// First time at which gradient flow from `delta0` reaches train loss
/// `epsilon`; zero if it starts at or below the threshold.
///
/// The train loss along the flow is strictly decreasing, so the root is
/// bracketed by doubling from `t = 1` and then bisected until the bracket
/// stops shrinking. The upper end is returned, so the train loss at the
/// returned time never exceeds `epsilon`.
pub fn solve_stop_time(delta0: &[f64], problem: &DiagonalProblem, epsilon: f64) -> Result<f64> {
    problem.check_dim(delta0)?;
    check_epsilon(epsilon)?;
    let gamma = problem.gamma();
    let loss = |t: f64| weighted_square_sum(gamma, &flow_unchecked(delta0, gamma, t));

    if loss(0.0) <= epsilon {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut doublings = 0;
    while loss(hi) >= epsilon {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_DOUBLINGS || !hi.is_finite() {
            return Err(Error::BracketFailure);
        }
    }
    for _ in 0..BISECTION_MAX_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if loss(mid) > epsilon {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GFResult {
    pub stop_time: f64,
    pub final_state: ResidualState,
    pub trajectory: Trajectory,
}

/// Early-stopped gradient flow. The trajectory holds the initial point and
/// `snapshots` uniformly spaced times in `[0, T]` (a single point when
/// `T = 0`).
pub fn gradient_flow(
    delta0: &[f64],
    problem: &DiagonalProblem,
    epsilon: f64,
    snapshots: usize,
) -> Result<GFResult> {
    check_snapshots(snapshots)?;
    let stop_time = solve_stop_time(delta0, problem, epsilon)?;
    let gamma = problem.gamma();

    let mut trajectory = Trajectory::new();
    trajectory.push(TrajectoryPoint::capture(problem, Phase::Init, 0.0, delta0.to_vec()));
    let times: Vec<f64> = if stop_time == 0.0 {
        vec![0.0]
    } else {
        (0..snapshots)
            .map(|j| {
                if j + 1 == snapshots {
                    stop_time
                } else {
                    stop_time * j as f64 / (snapshots - 1) as f64
                }
            })
            .collect()
    };
    for t in times {
        trajectory.push(TrajectoryPoint::capture(problem, Phase::Gf, t, flow_unchecked(delta0, gamma, t)));
    }
    let final_state = ResidualState::new(flow_unchecked(delta0, gamma, stop_time), stop_time, Phase::Gf);
    Ok(GFResult { stop_time, final_state, trajectory })
}

/// Repeated multiplication by `factors`, stopping once the train loss is at
/// most `epsilon` (checked before the first step). Calls `visit` after each
/// step with the step number.
fn descend(
    delta0: &[f64],
    factors: &[f64],
    problem: &DiagonalProblem,
    max_steps: Option<usize>,
    epsilon: f64,
    mut visit: impl FnMut(usize, &[f64]),
) -> (Vec<f64>, usize) {
    let mut delta = delta0.to_vec();
    let mut steps = 0;
    while weighted_square_sum(problem.gamma(), &delta) > epsilon && max_steps.is_none_or(|k| steps < k) {
        delta.iter_mut().zip(factors).for_each(|(d, f)| *d *= f);
        steps += 1;
        visit(steps, &delta);
    }
    (delta, steps)
}

/// Up to `k` steps of gradient descent with step size `eta`, stopping early
/// once the train loss is at most `epsilon`. Returns the final state and the
/// number of steps taken.
pub fn gradient_descent(
    delta0: &[f64],
    problem: &DiagonalProblem,
    eta: f64,
    k: usize,
    epsilon: f64,
) -> Result<(ResidualState, usize)> {
    problem.check_dim(delta0)?;
    check_epsilon(epsilon)?;
    let factors = update_factors(problem, eta)?;
    let (delta, steps) = descend(delta0, &factors, problem, Some(k), epsilon, |_, _| {});
    let phase = if steps == 0 { Phase::Init } else { Phase::Gd };
    Ok((ResidualState::new(delta, steps as f64, phase), steps))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealedResult {
    pub gd_steps_taken: usize,
    pub post_gd: ResidualState,
    pub gf: GFResult,
    pub trajectory: Trajectory,
}

impl AnnealedResult {
    pub fn final_state(&self) -> &ResidualState {
        &self.gf.final_state
    }
}

/// Gradient descent with step `eta` for at most `k` steps, then early-stopped
/// gradient flow from where descent left off.
pub fn annealed_gd(
    delta0: &[f64],
    problem: &DiagonalProblem,
    eta: f64,
    k: usize,
    epsilon: f64,
    snapshots: usize,
) -> Result<AnnealedResult> {
    check_snapshots(snapshots)?;
    problem.check_dim(delta0)?;
    check_epsilon(epsilon)?;
    let factors = update_factors(problem, eta)?;

    let (_, taken) = descend(delta0, &factors, problem, Some(k), epsilon, |_, _| {});
    let keep = spread_indices(1, taken, snapshots);
    let mut trajectory = Trajectory::new();
    trajectory.push(TrajectoryPoint::capture(problem, Phase::Init, 0.0, delta0.to_vec()));
    let mut next = keep.iter().peekable();
    let (delta, steps) = descend(delta0, &factors, problem, Some(k), epsilon, |step, d| {
        if next.peek() == Some(&&step) {
            next.next();
            trajectory.push(TrajectoryPoint::capture(problem, Phase::Gd, step as f64, d.to_vec()));
        }
    });
    debug_assert_eq!(steps, taken);

    let phase = if steps == 0 { Phase::Init } else { Phase::Gd };
    let post_gd = ResidualState::new(delta, steps as f64, phase);
    let gf = gradient_flow(&post_gd.delta, problem, epsilon, snapshots)?;
    trajectory.points.extend(gf.trajectory.points.iter().skip(1).cloned());
    Ok(AnnealedResult { gd_steps_taken: steps, post_gd, gf, trajectory })
}

fn euler_factors(problem: &DiagonalProblem, step: f64) -> Result<Vec<f64>> {
    if !step.is_finite() || step <= 0.0 {
        return Err(Error::NonPositiveStepSize(step));
    }
    let top = 1.0 - 2.0 * step * problem.top_gamma();
    if top <= 0.0 {
        return Err(Error::UnstableStep { step, factor: top });
    }
    let factors: Vec<f64> = problem.gamma().iter().map(|g| 1.0 - 2.0 * step * g).collect();
    // a factor that rounds to 1 never makes progress
    if let Some(&f) = factors.iter().find(|&&f| f >= 1.0) {
        return Err(Error::UnstableStep { step, factor: f });
    }
    Ok(factors)
}

/// Explicit-Euler integration of the flow with a fixed small step until
/// the train loss is at most `epsilon`.
pub fn euler_oracle(
    delta0: &[f64],
    problem: &DiagonalProblem,
    step: f64,
    epsilon: f64,
) -> Result<ResidualState> {
    problem.check_dim(delta0)?;
    check_epsilon(epsilon)?;
    let factors = euler_factors(problem, step)?;
    let (delta, steps) = descend(delta0, &factors, problem, None, epsilon, |_, _| {});
    Ok(ResidualState::new(delta, steps as f64 * step, Phase::Gf))
}

/// [`euler_oracle`] with up to `snapshots` evenly spread steps recorded as
/// GF points (time = steps * step).
pub fn euler_trajectory(
    delta0: &[f64],
    problem: &DiagonalProblem,
    step: f64,
    epsilon: f64,
    snapshots: usize,
) -> Result<Trajectory> {
    check_snapshots(snapshots)?;
    problem.check_dim(delta0)?;
    check_epsilon(epsilon)?;
    let factors = euler_factors(problem, step)?;
    let (_, taken) = descend(delta0, &factors, problem, None, epsilon, |_, _| {});

    let keep = spread_indices(0, taken, snapshots);
    let mut trajectory = Trajectory::new();
    trajectory.push(TrajectoryPoint::capture(problem, Phase::Init, 0.0, delta0.to_vec()));
    if keep.first() == Some(&0) {
        trajectory.push(TrajectoryPoint::capture(problem, Phase::Gf, 0.0, delta0.to_vec()));
    }
    let mut next = keep.iter().skip_while(|&&i| i == 0).peekable();
    descend(delta0, &factors, problem, None, epsilon, |n, d| {
        if next.peek() == Some(&&n) {
            next.next();
            trajectory.push(TrajectoryPoint::capture(problem, Phase::Gf, n as f64 * step, d.to_vec()));
        }
    });
    Ok(trajectory)
}
