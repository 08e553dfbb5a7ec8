//! Flat JSON settings shared by config files, instance files and flags.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use annealgap::experiment::ground_truth_for;
use annealgap::DiagonalProblem;
use serde::{Deserialize, Serialize};

use crate::args::{Common, Format, Optimizer};

pub const DEFAULT_ALPHA: f64 = 0.01;
pub const DEFAULT_EPSILON: f64 = 0.01;
pub const DEFAULT_K: usize = 10;

/// Every key is optional; later sources override earlier ones.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    pub k_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshots: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta0: Option<Vec<f64>>,
    /// 1-based index of the first small eigenvalue.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<Optimizer>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extent: Option<f64>,
}

macro_rules! overlay {
    ($dst:expr, $src:expr; $($field:ident),*) => {
        $( if $src.$field.is_some() { $dst.$field = $src.$field.clone(); } )*
    };
}

impl Settings {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Instance file, then `--config`, then flags.
    pub fn resolve(instance: Option<&Path>, common: &Common) -> Result<Self> {
        let mut s = match instance {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if let Some(p) = &common.config {
            s.overlay(&Self::load(p)?);
        }
        s.overlay(&Self::from_flags(common));
        Ok(s)
    }

    fn from_flags(c: &Common) -> Self {
        Self {
            alpha: c.alpha,
            epsilon: c.epsilon,
            k_steps: c.k_steps,
            eta: c.eta,
            trials: c.trials,
            seed: c.seed,
            snapshots: c.snapshots,
            out: c.out.clone(),
            format: c.format,
            ..Self::default()
        }
    }

    pub fn overlay(&mut self, other: &Self) {
        overlay!(self, other; alpha, epsilon, k_steps, eta, trials, seed, n, snapshots, out, format,
                 gamma, lambda, delta0, k, optimizer, step, grid, extent);
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn reject_eta(&self, command: &str) -> Result<()> {
        ensure!(self.eta.is_none(), "`{command}` always uses eta = 1/gamma_1; --eta is not accepted");
        Ok(())
    }

    /// The problem and initial residual. With no spectra given, the
    /// two-dimensional instance with gamma = (2/3, 1/3), lambda = (1/2, 1/2)
    /// and delta0 = -beta_star(alpha).
    pub fn instance(&self) -> Result<Instance> {
        let alpha = self.alpha.unwrap_or(DEFAULT_ALPHA);
        let (gamma, lambda, delta0, k) = match (&self.gamma, &self.lambda, &self.delta0) {
            (None, None, None) => {
                let delta0 = ground_truth_for(alpha)?.iter().map(|b| -b).collect();
                (vec![2.0 / 3.0, 1.0 / 3.0], vec![0.5, 0.5], delta0, Some(self.k.unwrap_or(2)))
            }
            (Some(g), Some(l), Some(d)) => (g.clone(), l.clone(), d.clone(), self.k),
            _ => bail!("an instance needs all of gamma, lambda and delta0"),
        };
        let problem = DiagonalProblem::from_spectra(gamma, lambda)?;
        problem.check_dim(&delta0)?;
        Ok(Instance {
            problem,
            delta0,
            k,
            alpha,
            epsilon: self.epsilon.unwrap_or(DEFAULT_EPSILON),
            k_steps: self.k_steps.unwrap_or(DEFAULT_K),
        })
    }

    /// Copy with every instance value filled in, for the run manifest.
    pub fn resolved_instance(&self, inst: &Instance) -> Self {
        Self {
            alpha: Some(inst.alpha),
            epsilon: Some(inst.epsilon),
            k_steps: Some(inst.k_steps),
            gamma: Some(inst.problem.gamma().to_vec()),
            lambda: Some(inst.problem.lambda().to_vec()),
            delta0: Some(inst.delta0.clone()),
            k: inst.k,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub problem: DiagonalProblem,
    pub delta0: Vec<f64>,
    pub k: Option<usize>,
    pub alpha: f64,
    pub epsilon: f64,
    pub k_steps: usize,
}

impl Instance {
    /// Residual measured from an initial point at the origin.
    pub fn beta_star(&self) -> Vec<f64> {
        self.delta0.iter().map(|d| -d).collect()
    }
}
