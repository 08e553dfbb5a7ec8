use serde::{Deserialize, Serialize};

use crate::quadratic::{DiagonalProblem, Phase, ResidualState};

/// Default number of recorded points per phase.
pub const DEFAULT_SNAPSHOTS: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub phase: Phase,
    /// Continuous time (GF) or step count (GD); phase-local.
    pub time: f64,
    pub delta: Vec<f64>,
    pub train_loss: f64,
    pub test_loss: f64,
}

impl TrajectoryPoint {
    pub(crate) fn capture(problem: &DiagonalProblem, phase: Phase, time: f64, delta: Vec<f64>) -> Self {
        let train_loss = crate::quadratic::weighted_square_sum(problem.gamma(), &delta);
        let test_loss = crate::quadratic::weighted_square_sum(problem.lambda(), &delta);
        Self { phase, time, delta, train_loss, test_loss }
    }

    pub fn state(&self) -> ResidualState {
        ResidualState::new(self.delta.clone(), self.time, self.phase)
    }
}

/// Recorded snapshots of one optimizer run, phases in order INIT, GD, GF.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
}

impl Trajectory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, point: TrajectoryPoint) {
        self.points.push(point);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last(&self) -> Option<&TrajectoryPoint> {
        self.points.last()
    }

    pub fn phase(&self, phase: Phase) -> impl Iterator<Item = &TrajectoryPoint> {
        self.points.iter().filter(move |p| p.phase == phase)
    }

    /// Phases never go backwards and time strictly increases within a phase.
    pub fn is_well_ordered(&self) -> bool {
        self.points.windows(2).all(|w| match w[0].phase.cmp(&w[1].phase) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Equal => w[0].time < w[1].time,
            std::cmp::Ordering::Greater => false,
        })
    }
}

/// Up to `count` evenly spread indices in `first..=last`, always including
/// both ends when `count >= 2`.
pub(crate) fn spread_indices(first: usize, last: usize, count: usize) -> Vec<usize> {
    if last < first || count == 0 {
        return Vec::new();
    }
    let span = last - first;
    if span < count {
        return (first..=last).collect();
    }
    if count == 1 {
        return vec![last];
    }
    (0..count)
        .map(|j| first + ((j as f64) * span as f64 / (count - 1) as f64).round() as usize)
        .collect()
}
