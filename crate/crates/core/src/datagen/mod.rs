//! Seeded benchmark generators with ground-truth counterfactual oracles.
//!
//! Each generator is a pure function of its inputs and a 64-bit seed (see
//! [`crate::rng`] for the generator family). Outcomes are stored together
//! with the exact noise draw, so `oracle + noise == outcome` holds bitwise
//! and evaluation code can query noiseless counterfactuals at any dosage.

use crate::rng::SplitMix64;
use crate::scalar::Scalar;
use ndarray::{Array1, Array2, ArrayView1};
use thiserror::Error;

mod csvio;
mod ihdp;
mod news;
mod synthetic;

pub use csvio::{load_covariates_csv, write_dataset_csv, ColumnStats};
pub use ihdp::{gen_ihdp_continuous, prepare_ihdp_covariates, surrogate_ihdp_covariates, IHDP_COLUMNS, IHDP_ROWS};
pub use news::gen_news;
pub use synthetic::gen_synthetic;

/// Dosages are kept strictly inside (0,1) by this margin.
pub const DOSAGE_MARGIN: f64 = 1e-6;

/// Standard deviation of every N(0, 0.25) noise term in the generators.
pub(crate) const NOISE_STD: f64 = 0.5;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("covariate matrix must have {expected} columns, got {got}")]
    WrongColumnCount { expected: usize, got: usize },
    #[error("covariate {value} at row {row}, column {col} outside [0,1]; scale columns first")]
    CovariateOutOfRange { row: usize, col: usize, value: f64 },
    #[error("split ratios must be positive and sum to 1, got {0:?}")]
    BadSplitRatios([f64; 3]),
    #[error("dataset of {n} rows cannot give every split at least one row at ratios {ratios:?}")]
    SplitTooSmall { n: usize, ratios: [f64; 3] },
    #[error("csv parse error at row {row}, column {col}: {detail}")]
    CsvCell {
        row: usize,
        col: usize,
        detail: String,
    },
    #[error("csv error: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Invalid(String),
}

/// Noiseless ground-truth outcome function of a generated dataset.
#[derive(Debug, Clone, PartialEq)]
pub enum Oracle<F: Scalar> {
    Synthetic,
    Ihdp { c1: F, c2: F },
    News {
        v1: Array1<F>,
        v2: Array1<F>,
        v3: Array1<F>,
    },
}

impl<F: Scalar> Oracle<F> {
    /// True outcome y(w, s | x) without noise. Deterministic in (x, w, s).
    pub fn truth(&self, x: ArrayView1<F>, _w: usize, s: F) -> F {
        match self {
            Oracle::Synthetic => synthetic::true_outcome(x, s),
            Oracle::Ihdp { c1, c2: _ } => ihdp::true_outcome(x, s, *c1),
            Oracle::News { v1, v2, v3 } => news::true_outcome(x, s, v1, v2, v3),
        }
    }
}

/// One generated benchmark sample plus its counterfactual oracle.
#[derive(Debug, Clone)]
pub struct Dataset<F: Scalar> {
    /// n x d covariates.
    pub covariates: Array2<F>,
    /// Treatment-type label per unit; the benchmarks all use a single type 0.
    pub treatments: Vec<usize>,
    /// Dosages, strictly inside (0,1).
    pub dosages: Array1<F>,
    /// Observed outcomes, equal to oracle truth plus the recorded noise.
    pub outcomes: Array1<F>,
    /// The exact outcome-noise draws.
    pub outcome_noise: Array1<F>,
    pub oracle: Oracle<F>,
}

impl<F: Scalar> Dataset<F> {
    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Covariate dimension.
    pub fn dim(&self) -> usize {
        self.covariates.ncols()
    }

    /// Number of distinct treatment types (all benchmarks: 1).
    pub fn treatment_types(&self) -> usize {
        self.treatments.iter().copied().max().map_or(1, |m| m + 1)
    }

    /// Noiseless true outcome for unit `i` at an arbitrary (w, s).
    pub fn truth(&self, i: usize, w: usize, s: F) -> F {
        self.oracle.truth(self.covariates.row(i), w, s)
    }

    /// Row subset preserving order of `idx`.
    pub fn subset(&self, idx: &[usize]) -> Dataset<F> {
        let d = self.dim();
        let mut covariates = Array2::zeros((idx.len(), d));
        for (r, &i) in idx.iter().enumerate() {
            covariates.row_mut(r).assign(&self.covariates.row(i));
        }
        Dataset {
            covariates,
            treatments: idx.iter().map(|&i| self.treatments[i]).collect(),
            dosages: idx.iter().map(|&i| self.dosages[i]).collect(),
            outcomes: idx.iter().map(|&i| self.outcomes[i]).collect(),
            outcome_noise: idx.iter().map(|&i| self.outcome_noise[i]).collect(),
            oracle: self.oracle.clone(),
        }
    }
}

/// Ratios and seed for a train/validation/test partition.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train: f64, validation: f64, test: f64, seed: u64) -> Self {
        SplitSpec {
            train,
            validation,
            test,
            seed,
        }
    }

    /// The protocol default 0.6/0.2/0.2.
    pub fn standard(seed: u64) -> Self {
        SplitSpec::new(0.6, 0.2, 0.2, seed)
    }

    fn validate(&self) -> Result<(), DataError> {
        let r = [self.train, self.validation, self.test];
        if r.iter().any(|&x| x <= 0.0) || (r.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(DataError::BadSplitRatios(r));
        }
        Ok(())
    }
}

/// Disjoint seeded partition into train/validation/test covering all rows.
pub fn split<F: Scalar>(
    ds: &Dataset<F>,
    spec: &SplitSpec,
) -> Result<(Dataset<F>, Dataset<F>, Dataset<F>), DataError> {
    spec.validate()?;
    let n = ds.len();
    let n_train = (spec.train * n as f64).round() as usize;
    let n_val = (spec.validation * n as f64).round() as usize;
    if n_train == 0 || n_val == 0 || n_train + n_val >= n {
        return Err(DataError::SplitTooSmall {
            n,
            ratios: [spec.train, spec.validation, spec.test],
        });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = SplitMix64::derive(spec.seed, 0x5917);
    // Fisher-Yates
    for i in (1..n).rev() {
        let j = (rng.uniform_f64() * (i + 1) as f64) as usize;
        idx.swap(i, j.min(i));
    }
    let train = ds.subset(&idx[..n_train]);
    let val = ds.subset(&idx[n_train..n_train + n_val]);
    let test = ds.subset(&idx[n_train + n_val..]);
    Ok((train, val, test))
}

pub(crate) fn clamp_dosage(s: f64) -> f64 {
    s.clamp(DOSAGE_MARGIN, 1.0 - DOSAGE_MARGIN)
}

#[cfg(test)]
mod tests;
