//! Dose-response predictors: shared representation network, MLP / DRNet /
//! VCNet outcome heads, the propensity density head, and the linear GPS
//! baseline.

use crate::autodiff::NumError;
use crate::basis::BasisError;
use crate::scalar::Scalar;
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

mod gps;
mod network;

pub use gps::{fit_gps, GpsModel};
pub use network::{BatchGroups, BoundModel, NetworkModel};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error("input has {got} columns, model expects {expected}")]
    InputDim { expected: usize, got: usize },
    #[error("treatment type {0} out of range")]
    TreatmentOutOfRange(usize),
    #[error("model has no propensity head")]
    MissingPropensityHead,
    #[error("design matrix singular even after {jitter} ridge jitter")]
    Singular { jitter: f64 },
    #[error("{0}")]
    Invalid(String),
}

/// Outcome-head architecture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arch {
    /// Plain feed-forward net on (x, s); dosage enters only at the input.
    Mlp,
    /// One regression head per dosage bin.
    DrNet,
    /// Varying-coefficient head; weights are spline functions of the dosage.
    VcNet,
}

impl std::fmt::Display for Arch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Arch::Mlp => "mlp",
            Arch::DrNet => "drnet",
            Arch::VcNet => "vcnet",
        })
    }
}

impl std::str::FromStr for Arch {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mlp" => Ok(Arch::Mlp),
            "drnet" => Ok(Arch::DrNet),
            "vcnet" => Ok(Arch::VcNet),
            other => Err(format!("unknown architecture {other:?}")),
        }
    }
}

/// Everything needed to rebuild a network's parameter layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub arch: Arch,
    /// Covariate dimension d (dosage input is added internally where needed).
    pub input_dim: usize,
    pub hidden: usize,
    pub treatment_types: usize,
    pub drnet_bins: usize,
    /// Propensity head bin count; `None` builds no head.
    pub propensity_bins: Option<usize>,
    /// Interior knots of the varying-coefficient basis.
    pub vcnet_knots: Vec<f64>,
    pub init_seed: u64,
}

impl ModelConfig {
    pub fn new(arch: Arch, input_dim: usize, init_seed: u64) -> Self {
        ModelConfig {
            arch,
            input_dim,
            hidden: 50,
            treatment_types: 1,
            drnet_bins: 5,
            propensity_bins: None,
            vcnet_knots: vec![1.0 / 3.0, 2.0 / 3.0],
            init_seed,
        }
    }

    pub fn with_propensity(mut self, bins: usize) -> Self {
        self.propensity_bins = Some(bins);
        self
    }
}

/// Handle into a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamId(pub(crate) usize);

/// Flat named parameter store; mutation happens only through the owning
/// training run.
#[derive(Debug, Clone)]
pub struct ParamStore<F: Scalar> {
    names: Vec<String>,
    values: Vec<Array2<F>>,
}

impl<F: Scalar> Default for ParamStore<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: Scalar> ParamStore<F> {
    pub fn new() -> Self {
        ParamStore {
            names: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, value: Array2<F>) -> ParamId {
        self.names.push(name.into());
        self.values.push(value);
        ParamId(self.values.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Array2<F> {
        &self.values[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn values(&self) -> &[Array2<F>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Array2<F>] {
        &mut self.values
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &Array2<F>)> {
        self.names.iter().map(|n| n.as_str()).zip(self.values.iter())
    }

    pub fn set_all(&mut self, values: Vec<Array2<F>>) {
        assert_eq!(values.len(), self.values.len());
        self.values = values;
    }

    /// Total scalar parameter count.
    pub fn total_parameters(&self) -> usize {
        self.values.iter().map(|v| v.len()).sum()
    }
}

/// Anything that predicts outcomes for a batch of units at a shared
/// treatment-dosage pair; this is the evaluation-facing surface.
pub trait DosePredictor<F: Scalar> {
    fn predict_batch(&self, x: &Array2<F>, w: usize, s: F) -> Result<Array1<F>, ModelError>;
}

/// Dosage bin index floor(bins * s), clamped to the last bin.
pub fn bin_index(s: f64, bins: usize) -> usize {
    ((s * bins as f64).floor() as usize).min(bins - 1)
}

#[cfg(test)]
mod tests;
