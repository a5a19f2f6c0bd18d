//! IHDP-continuous benchmark: real (or surrogate) IHDP covariates with a
//! constructed continuous dosage assignment and outcome.

use super::{clamp_dosage, DataError, Dataset, Oracle, NOISE_STD};
use crate::rng::SplitMix64;
use crate::scalar::Scalar;
use ndarray::{Array1, Array2, ArrayView1};
use rand_distr::{Distribution, Normal};

/// 0-based column sets; the formulas index covariates 1-based.
const SET_I: [usize; 10] = [15, 16, 17, 18, 19, 20, 21, 22, 23, 24];
const SET_J: [usize; 10] = [3, 6, 7, 8, 9, 10, 11, 12, 13, 14];

pub const IHDP_COLUMNS: usize = 25;
/// Row count of the original IHDP sample; the surrogate mirrors it.
pub const IHDP_ROWS: usize = 747;

fn mean_over(x: &[f64], idx: &[usize]) -> f64 {
    idx.iter().map(|&j| x[j]).sum::<f64>() / idx.len() as f64
}

pub(crate) fn dosage_score(x: &[f64], c2: f64) -> f64 {
    let (x1, x2, x3, x5, x6) = (x[0], x[1], x[2], x[4], x[5]);
    let mx = x3.max(x5).max(x6);
    let mn = x3.min(x5).min(x6);
    2.0 * x1 / (1.0 + x2) + 2.0 * mx / (0.2 + mn) + 2.0 * (5.0 * (mean_over(x, &SET_I) - c2)).tanh()
        - 4.0
}

fn outcome_f64(x: &[f64], s: f64, c1: f64) -> f64 {
    let (x1, x2, x3, x5, x6) = (x[0], x[1], x[2], x[4], x[5]);
    let mn = x2.min(x3).min(x5);
    let factor = (5.0 * (mean_over(x, &SET_J) - c1)).tanh()
        + (0.2 * (x1 - x6) / (0.5 + mn)).exp();
    (3.0 * std::f64::consts::PI * s).sin() / (1.2 - s) * factor
}

pub(crate) fn true_outcome<F: Scalar>(x: ArrayView1<F>, s: F, c1: F) -> F {
    let xf: Vec<f64> = x.iter().map(|v| v.widen()).collect();
    F::of(outcome_f64(&xf, s.widen(), c1.widen()))
}

/// Min-max scale any column that falls outside [0,1]; columns already inside
/// the unit interval (including binary indicators) are left untouched.
pub fn prepare_ihdp_covariates(raw: &Array2<f64>) -> Array2<f64> {
    let mut out = raw.clone();
    for j in 0..out.ncols() {
        let col = out.column(j);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in col {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if lo >= 0.0 && hi <= 1.0 {
            continue;
        }
        let range = hi - lo;
        for v in out.column_mut(j) {
            *v = if range > 0.0 { (*v - lo) / range } else { 0.5 };
        }
    }
    out
}

/// Surrogate covariates with the IHDP footprint (6 continuous + 19 binary
/// columns), for running the pipeline when the real CSV is not supplied.
pub fn surrogate_ihdp_covariates(n: usize, seed: u64) -> Array2<f64> {
    let mut rng = SplitMix64::derive(seed, 0x1dbc);
    let probs: Vec<f64> = (0..19).map(|_| 0.1 + 0.8 * rng.uniform_f64()).collect();
    let mut x = Array2::zeros((n, IHDP_COLUMNS));
    for i in 0..n {
        for j in 0..6 {
            x[[i, j]] = rng.uniform_f64();
        }
        for j in 6..IHDP_COLUMNS {
            x[[i, j]] = if rng.uniform_f64() < probs[j - 6] { 1.0 } else { 0.0 };
        }
    }
    x
}

/// Generate the IHDP-continuous sample from 25 covariates scaled to [0,1].
///
/// The centering constants c1/c2 are the empirical means of the J/I covariate
/// group means over the supplied matrix, so a constant matrix has both tanh
/// terms identically zero.
pub fn gen_ihdp_continuous<F: Scalar>(
    covariates: &Array2<f64>,
    seed: u64,
) -> Result<Dataset<F>, DataError> {
    if covariates.ncols() != IHDP_COLUMNS {
        return Err(DataError::WrongColumnCount {
            expected: IHDP_COLUMNS,
            got: covariates.ncols(),
        });
    }
    for ((i, j), &v) in covariates.indexed_iter() {
        if !(0.0..=1.0).contains(&v) {
            return Err(DataError::CovariateOutOfRange {
                row: i,
                col: j,
                value: v,
            });
        }
    }
    let n = covariates.nrows();
    if n == 0 {
        return Err(DataError::Invalid("empty covariate matrix".into()));
    }

    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| covariates.row(i).iter().copied().collect())
        .collect();
    let c1 = rows.iter().map(|x| mean_over(x, &SET_J)).sum::<f64>() / n as f64;
    let c2 = rows.iter().map(|x| mean_over(x, &SET_I)).sum::<f64>() / n as f64;

    let mut rng = SplitMix64::derive(seed, 0x1d);
    let noise = Normal::new(0.0, NOISE_STD).expect("valid normal");

    let mut dosages = Array1::zeros(n);
    for (i, x) in rows.iter().enumerate() {
        let score = dosage_score(x, c2) + noise.sample(&mut rng);
        dosages[i] = clamp_dosage(sigmoid(score));
    }
    let mut outcomes = Array1::zeros(n);
    let mut outcome_noise = Array1::zeros(n);
    for (i, x) in rows.iter().enumerate() {
        let e = noise.sample(&mut rng);
        outcome_noise[i] = e;
        outcomes[i] = outcome_f64(x, dosages[i], c1) + e;
    }

    Ok(Dataset {
        covariates: covariates.mapv(F::of),
        treatments: vec![0; n],
        dosages: dosages.mapv(F::of),
        outcomes: outcomes.mapv(F::of),
        outcome_noise: outcome_noise.mapv(F::of),
        oracle: Oracle::Ihdp {
            c1: F::of(c1),
            c2: F::of(c2),
        },
    })
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
