//! Monte Carlo reproduction of the three-sample experiment.
//!
//! Inputs are drawn uniformly from `{e_1, e_2}` with noiseless labels and
//! population covariance `diag(1/2, 1/2)`. Two distinct inputs among the
//! draws give a sample covariance with a gap (`diag(2/3, 1/3)` for three
//! samples), where annealing beats gradient flow; a single repeated input
//! leaves a one-dimensional problem on which both optimizers agree.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Error, Result};
use crate::lemma::{verify_lemma, LemmaReport, LemmaSetup};
use crate::optimizers::{annealed_gd, gradient_flow, large_step_size};
use crate::quadratic::{build_problem, Dataset, Sample};

/// Input dimension of the sampled distribution.
pub const DIM: usize = 2;

/// Population covariance eigenvalues for uniform `x in {e_1, e_2}`.
pub const POPULATION_LAMBDA: [f64; DIM] = [0.5, 0.5];

/// Loss-equality tolerance for degenerate trials, relative to `max(1, loss)`.
pub const DEGENERATE_TOL: f64 = 1e-10;

/// Relative slack on the per-trial ratio bound.
pub const RATIO_SLACK: f64 = 1e-6;

/// Width of the acceptance interval for the duplicated fraction, in
/// binomial standard deviations.
pub const FRACTION_SIGMAS: f64 = 3.0;

const TRIAL_SNAPSHOTS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub alpha: f64,
    pub epsilon: f64,
    #[serde(rename = "K")]
    pub k_steps: usize,
    pub n: usize,
    pub seed: u64,
    pub trials: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self { alpha: 0.01, epsilon: 0.01, k_steps: 10, n: 3, seed: 0, trials: 10_000 }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        check_finite("alpha", self.alpha)?;
        check_finite("epsilon", self.epsilon)?;
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::AlphaOutOfRange(self.alpha));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::EpsilonOutOfRange(self.epsilon));
        }
        if self.k_steps == 0 {
            return Err(Error::InvalidConfig("K must be a positive integer".into()));
        }
        if self.n == 0 {
            return Err(Error::InvalidConfig("n must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        Ok(())
    }

    /// Probability that the draws hit both basis vectors: `1 - 2^(1-n)`.
    pub fn duplicated_probability(&self) -> f64 {
        1.0 - 0.5f64.powi(self.n as i32 - 1)
    }
}

/// `beta_star = (100 / sqrt(alpha), 100 / sqrt(alpha))`.
pub fn ground_truth_for(alpha: f64) -> Result<Vec<f64>> {
    check_finite("alpha", alpha)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    Ok(vec![100.0 / alpha.sqrt(); DIM])
}

/// Independent stream for trial `index`: ChaCha8 keyed by `seed`, stream
/// number `index`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `n` i.i.d. samples; the low bit of one 64-bit draw picks `e_1` (0) or
/// `e_2` (1). Labels are `y = beta_star[index]`.
pub fn sample_dataset<R: RngCore + ?Sized>(rng: &mut R, beta_star: &[f64], n: usize) -> Result<Dataset> {
    if beta_star.len() != DIM {
        return Err(Error::DimensionMismatch { expected: DIM, found: beta_star.len() });
    }
    let samples = (0..n)
        .map(|_| {
            let index = (rng.next_u64() & 1) as usize;
            Sample { index, y: beta_star[index] }
        })
        .collect();
    Dataset::new(samples, DIM)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TrialCase {
    /// Both basis vectors were drawn.
    Duplicated,
    /// Every sample has the same input.
    Degenerate,
}

impl TrialCase {
    pub fn as_str(self) -> &'static str {
        match self {
            TrialCase::Duplicated => "DUPLICATED",
            TrialCase::Degenerate => "DEGENERATE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    /// Samples per basis vector.
    pub counts: Vec<usize>,
    pub case: TrialCase,
    /// Population loss on the image of the sample covariance.
    pub gf_loss: f64,
    pub agd_loss: f64,
    /// `gf_loss / agd_loss`, duplicated trials only.
    pub ratio: Option<f64>,
    /// Population loss along never-sampled directions; identical for both
    /// optimizers.
    pub unreachable_loss: f64,
    pub gf_stop_time: f64,
    pub agd_stop_time: f64,
    pub gd_steps_taken: usize,
    /// Final residuals coincide exactly.
    pub residuals_equal: bool,
    pub lemma: Option<LemmaReport>,
}

impl TrialResult {
    pub fn losses_equal(&self) -> bool {
        (self.gf_loss - self.agd_loss).abs() <= DEGENERATE_TOL * self.gf_loss.abs().max(1.0)
    }

    /// Ratio bound implied by the lemma's two bounds, with slack.
    pub fn ratio_bound_holds(&self) -> Option<bool> {
        let (ratio, lemma) = (self.ratio?, self.lemma.as_ref()?);
        let bound = lemma.gf_lower_bound / lemma.agd_upper_bound;
        Some(ratio >= bound * (1.0 - RATIO_SLACK))
    }
}

/// One trial on a freshly sampled dataset.
pub fn run_trial<R: RngCore + ?Sized>(config: &ExperimentConfig, rng: &mut R) -> Result<TrialResult> {
    let beta_star = ground_truth_for(config.alpha)?;
    let dataset = sample_dataset(rng, &beta_star, config.n)?;
    run_trial_on(config, &dataset, &beta_star)
}

/// One trial on a given dataset: gradient flow vs. annealed descent with
/// `eta = 1 / gamma_1`, plus the lemma check when two inputs were drawn.
pub fn run_trial_on(config: &ExperimentConfig, dataset: &Dataset, beta_star: &[f64]) -> Result<TrialResult> {
    let (problem, init) = build_problem(dataset, beta_star, &POPULATION_LAMBDA)?;
    let delta0 = &init.delta;
    let eta = large_step_size(&problem);
    let gf = gradient_flow(delta0, &problem, config.epsilon, TRIAL_SNAPSHOTS)?;
    let agd = annealed_gd(delta0, &problem, eta, config.k_steps, config.epsilon, TRIAL_SNAPSHOTS)?;
    let gf_loss = problem.population_loss_of(&gf.final_state.delta)?;
    let agd_loss = problem.population_loss_of(&agd.final_state().delta)?;

    let (case, ratio, lemma) = if problem.dim() == 1 {
        (TrialCase::Degenerate, None, None)
    } else {
        let lemma = match LemmaSetup::new(delta0, &problem, 1, config.alpha, config.epsilon) {
            Ok(setup) => Some(verify_lemma(delta0, &problem, &setup, config.k_steps, TRIAL_SNAPSHOTS)?),
            Err(e) if e.is_inapplicable() => None,
            Err(e) => return Err(e),
        };
        (TrialCase::Duplicated, Some(gf_loss / agd_loss), lemma)
    };

    Ok(TrialResult {
        counts: dataset.counts(),
        case,
        gf_loss,
        agd_loss,
        ratio,
        unreachable_loss: problem.dropped_population_loss(),
        gf_stop_time: gf.stop_time,
        agd_stop_time: agd.gf.stop_time,
        gd_steps_taken: agd.gd_steps_taken,
        residuals_equal: gf.final_state.delta == agd.final_state().delta,
        lemma,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCSummary {
    pub trials: usize,
    pub duplicated_count: usize,
    pub degenerate_count: usize,
    pub duplicated_fraction: f64,
    pub expected_duplicated_fraction: f64,
    /// `expected +- 3 sigma` for the binomial fraction.
    pub duplicated_interval: [f64; 2],
    pub mean_ratio_duplicated: Option<f64>,
    pub min_ratio_duplicated: Option<f64>,
    pub degenerate_loss_equal_fraction: Option<f64>,
    pub lemma_applicable_count: usize,
    pub gf_bound_pass: usize,
    pub agd_bound_pass: usize,
    pub stop_time_bound_pass: usize,
    pub ratio_bound_pass: usize,
    pub degenerate_equal_pass: usize,
}

impl MCSummary {
    pub fn fraction_in_interval(&self) -> bool {
        let [lo, hi] = self.duplicated_interval;
        (lo..=hi).contains(&self.duplicated_fraction)
    }

    /// Every duplicated trial satisfies the lemma hypotheses and all bounds.
    pub fn bounds_hold(&self) -> bool {
        let d = self.duplicated_count;
        [
            self.lemma_applicable_count,
            self.gf_bound_pass,
            self.agd_bound_pass,
            self.stop_time_bound_pass,
            self.ratio_bound_pass,
        ]
        .iter()
        .all(|&c| c == d)
    }

    pub fn degenerate_all_equal(&self) -> bool {
        self.degenerate_equal_pass == self.degenerate_count
    }

    pub fn claim_holds(&self) -> bool {
        self.fraction_in_interval() && self.bounds_hold() && self.degenerate_all_equal()
    }
}

/// Per-trial results, in trial order. Trials run in parallel; each uses
/// [`trial_rng`]`(seed, index)`, so the output does not depend on scheduling.
pub fn monte_carlo_trials(config: &ExperimentConfig) -> Result<Vec<TrialResult>> {
    config.validate()?;
    (0..config.trials as u64)
        .into_par_iter()
        .map(|i| run_trial(config, &mut trial_rng(config.seed, i)))
        .collect()
}

pub fn summarize(config: &ExperimentConfig, trials: &[TrialResult]) -> MCSummary {
    let total = trials.len();
    let expected = config.duplicated_probability();
    let half = FRACTION_SIGMAS * (expected * (1.0 - expected) / total.max(1) as f64).sqrt();

    let mut s = MCSummary {
        trials: total,
        duplicated_count: 0,
        degenerate_count: 0,
        duplicated_fraction: 0.0,
        expected_duplicated_fraction: expected,
        duplicated_interval: [expected - half, expected + half],
        mean_ratio_duplicated: None,
        min_ratio_duplicated: None,
        degenerate_loss_equal_fraction: None,
        lemma_applicable_count: 0,
        gf_bound_pass: 0,
        agd_bound_pass: 0,
        stop_time_bound_pass: 0,
        ratio_bound_pass: 0,
        degenerate_equal_pass: 0,
    };
    let mut ratio_sum = 0.0;
    let mut ratio_min = f64::INFINITY;
    for t in trials {
        match t.case {
            TrialCase::Duplicated => {
                s.duplicated_count += 1;
                if let Some(r) = t.ratio {
                    ratio_sum += r;
                    ratio_min = ratio_min.min(r);
                }
                if let Some(l) = t.lemma.as_ref().filter(|l| l.applicable()) {
                    s.lemma_applicable_count += 1;
                    s.gf_bound_pass += usize::from(l.verdicts.gf_bound);
                    s.agd_bound_pass += usize::from(l.verdicts.agd_bound);
                    s.stop_time_bound_pass += usize::from(l.verdicts.stop_time_bound);
                    s.ratio_bound_pass += usize::from(t.ratio_bound_holds() == Some(true));
                }
            }
            TrialCase::Degenerate => {
                s.degenerate_count += 1;
                s.degenerate_equal_pass += usize::from(t.losses_equal());
            }
        }
    }
    if total > 0 {
        s.duplicated_fraction = s.duplicated_count as f64 / total as f64;
    }
    if s.duplicated_count > 0 {
        s.mean_ratio_duplicated = Some(ratio_sum / s.duplicated_count as f64);
        s.min_ratio_duplicated = Some(ratio_min);
    }
    if s.degenerate_count > 0 {
        s.degenerate_loss_equal_fraction = Some(s.degenerate_equal_pass as f64 / s.degenerate_count as f64);
    }
    s
}

pub fn monte_carlo(config: &ExperimentConfig) -> Result<MCSummary> {
    let trials = monte_carlo_trials(config)?;
    Ok(summarize(config, &trials))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> ExperimentConfig {
        ExperimentConfig { trials: 200, ..Default::default() }
    }

    #[test]
    fn ground_truth_examples() {
        assert_eq!(ground_truth_for(0.01).unwrap(), vec![1000.0, 1000.0]);
        assert_eq!(ground_truth_for(0.25).unwrap(), vec![200.0, 200.0]);
        assert_eq!(ground_truth_for(1.0), Err(Error::AlphaOutOfRange(1.0)));
        assert!(ground_truth_for(0.0).is_err());
    }

    #[test]
    fn sampled_labels_are_noiseless() {
        let mut rng = trial_rng(3, 0);
        let ds = sample_dataset(&mut rng, &[3.0, 7.0], 50).unwrap();
        for s in ds.samples() {
            assert_eq!(s.y, [3.0, 7.0][s.index]);
        }
        let one = sample_dataset(&mut rng, &[3.0, 7.0], 1).unwrap();
        assert_eq!(one.len(), 1);
        assert!(sample_dataset(&mut rng, &[1.0, 2.0, 3.0], 3).is_err());
    }

    #[test]
    fn sampling_uses_low_bit() {
        let mut a = trial_rng(11, 4);
        let mut b = trial_rng(11, 4);
        let ds = sample_dataset(&mut a, &[1.0, 2.0], 8).unwrap();
        let bits: Vec<usize> = (0..8).map(|_| (b.next_u64() & 1) as usize).collect();
        let got: Vec<usize> = ds.samples().iter().map(|s| s.index).collect();
        assert_eq!(got, bits);
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_dataset(&mut trial_rng(42, 9), &[1.0, 2.0], 3).unwrap();
        let b = sample_dataset(&mut trial_rng(42, 9), &[1.0, 2.0], 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn duplicated_trial_meets_claim() {
        let beta = ground_truth_for(0.01).unwrap();
        let ds = Dataset::from_indices(&[0, 0, 1], &beta).unwrap();
        let t = run_trial_on(&config(), &ds, &beta).unwrap();
        assert_eq!(t.case, TrialCase::Duplicated);
        assert!(t.gf_loss >= 0.01485);
        assert!(t.agd_loss <= 0.0075 + 1e-12);
        assert!(t.ratio.unwrap() >= 1.98);
        assert_eq!(t.ratio_bound_holds(), Some(true));
        assert!(t.lemma.as_ref().unwrap().bounds_hold());
    }

    #[test]
    fn degenerate_trial_losses_equal_even_and_odd() {
        let beta = ground_truth_for(0.01).unwrap();
        let ds = Dataset::from_indices(&[1, 1, 1], &beta).unwrap();
        for k in [10, 11] {
            let cfg = ExperimentConfig { k_steps: k, ..config() };
            let t = run_trial_on(&cfg, &ds, &beta).unwrap();
            assert_eq!(t.case, TrialCase::Degenerate);
            assert!(t.losses_equal());
            assert!((t.gf_loss - t.agd_loss).abs() <= 1e-10);
            assert_eq!(t.residuals_equal, k % 2 == 0);
            assert_eq!(t.unreachable_loss, 0.5 * 1e6);
            assert!(t.ratio.is_none() && t.lemma.is_none());
        }
    }

    #[test]
    fn immediate_stop_when_already_below_threshold() {
        let beta = [0.01, 0.01];
        let ds = Dataset::from_indices(&[0, 0, 1], &beta).unwrap();
        let t = run_trial_on(&ExperimentConfig { epsilon: 0.5, ..config() }, &ds, &beta).unwrap();
        assert_eq!(t.gf_stop_time, 0.0);
        assert_eq!(t.gd_steps_taken, 0);
        assert_eq!(t.gf_loss, t.agd_loss);
    }

    #[test]
    fn config_validation() {
        assert!(config().validate().is_ok());
        let bad = [
            ExperimentConfig { alpha: 1.5, ..config() },
            ExperimentConfig { epsilon: 1.0, ..config() },
            ExperimentConfig { k_steps: 0, ..config() },
            ExperimentConfig { trials: 0, ..config() },
            ExperimentConfig { n: 0, ..config() },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
        assert_eq!(config().duplicated_probability(), 0.75);
    }

    #[test]
    fn summary_is_reproducible() {
        let a = monte_carlo(&config()).unwrap();
        let b = monte_carlo(&config()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.duplicated_count + a.degenerate_count, 200);
        assert!(a.claim_holds(), "{a:?}");
    }

    #[test]
    fn single_trial_interval_covers_everything() {
        let s = monte_carlo(&ExperimentConfig { trials: 1, ..config() }).unwrap();
        assert!(s.fraction_in_interval());
    }
}
