//! Fully synthetic benchmark: 6 uniform covariates, nonlinear dosage
//! assignment and outcome with cosine dose-response.

use super::{clamp_dosage, Dataset, Oracle, NOISE_STD};
use crate::rng::SplitMix64;
use crate::scalar::Scalar;
use ndarray::{Array1, Array2, ArrayView1};
use rand_distr::{Distribution, Normal};

/// Dosage assignment score before the sigmoid, without noise.
pub(crate) fn dosage_score(x: &[f64]) -> f64 {
    let (x1, x2, x3, x4, x5) = (x[0], x[1], x[2], x[3], x[4]);
    let m123 = x1.max(x2).max(x3);
    let m345 = x3.max(x4).max(x5);
    (10.0 * m123.sin() + m345.powi(3)) / (1.0 + (x1 + x5).powi(2))
        + (0.5 * x3).sin() * (1.0 + (x4 - 0.5 * x3).exp())
        + x3 * x3
        + 2.0 * x4.sin()
        + 2.0 * x5
        - 6.5
}

fn outcome_f64(x: &[f64], s: f64) -> f64 {
    let (x1, x3, x4, x6) = (x[0], x[2], x[3], x[5]);
    let ratio = 4.0 * x1.max(x6).powi(3) / (1.0 + 2.0 * x3 * x3);
    (2.0 * std::f64::consts::PI * (s - 0.5)).cos() * (s * s + ratio * x4.sin())
}

pub(crate) fn true_outcome<F: Scalar>(x: ArrayView1<F>, s: F) -> F {
    let xf: Vec<f64> = x.iter().map(|v| v.widen()).collect();
    F::of(outcome_f64(&xf, s.widen()))
}

/// Generate `n` units. Covariates are i.i.d. uniform on [0,1]^6; the dosage
/// is the sigmoid of the assignment score plus N(0, 0.25) noise.
pub fn gen_synthetic<F: Scalar>(n: usize, seed: u64) -> Dataset<F> {
    assert!(n >= 1, "need at least one unit");
    let mut rng = SplitMix64::derive(seed, 0x51);
    let noise = Normal::new(0.0, NOISE_STD).expect("valid normal");

    let mut covariates = Array2::zeros((n, 6));
    for i in 0..n {
        for j in 0..6 {
            covariates[[i, j]] = rng.uniform_f64();
        }
    }
    let mut dosages = Array1::zeros(n);
    for i in 0..n {
        let x: Vec<f64> = (0..6).map(|j| covariates[[i, j]]).collect();
        let score = dosage_score(&x) + noise.sample(&mut rng);
        dosages[i] = clamp_dosage(sigmoid(score));
    }
    let mut outcomes = Array1::zeros(n);
    let mut outcome_noise = Array1::zeros(n);
    for i in 0..n {
        let x: Vec<f64> = (0..6).map(|j| covariates[[i, j]]).collect();
        let e = noise.sample(&mut rng);
        outcome_noise[i] = e;
        outcomes[i] = outcome_f64(&x, dosages[i]) + e;
    }

    Dataset {
        covariates: covariates.mapv(F::of),
        treatments: vec![0; n],
        dosages: dosages.mapv(F::of),
        outcomes: outcomes.mapv(F::of),
        outcome_noise: outcome_noise.mapv(F::of),
        oracle: Oracle::Synthetic,
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
