//! News benchmark: word-count covariates, Beta-assigned dosages driven by
//! random projection directions, and a dose-modulated outcome.

use super::{clamp_dosage, Dataset, Oracle, NOISE_STD};
use crate::rng::SplitMix64;
use crate::scalar::Scalar;
use ndarray::{Array1, Array2, ArrayView1};
use rand_distr::{Beta, Distribution, Normal, Poisson};

/// Cap on the Beta shape parameter guarding the x'v1 -> 0 singularity;
/// Beta(2, s_w) with s_w this large already concentrates next to zero.
const SW_CAP: f64 = 100.0;

fn ratio_abs(xv1: f64, xv2: f64) -> f64 {
    if xv1 == 0.0 {
        f64::INFINITY
    } else {
        (xv2 / xv1).abs()
    }
}

/// Beta shape parameter s_w = max(1, |2 x'v2 / x'v1|), capped.
pub(crate) fn shape_param(x: &[f64], v1: &[f64], v2: &[f64]) -> f64 {
    let dot = |v: &[f64]| x.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    (2.0 * ratio_abs(dot(v1), dot(v2))).max(1.0).min(SW_CAP)
}

fn outcome_f64(x: &[f64], s: f64, v1: &[f64], v2: &[f64], v3: &[f64]) -> f64 {
    let dot = |v: &[f64]| x.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    let r = ratio_abs(dot(v1), dot(v2));
    let y_prime = (r - 0.3).exp();
    let curve = 20.0 * dot(v3) * 4.0 * (s - 0.5) * (s - 0.5) * (std::f64::consts::PI * s / 2.0).sin();
    2.0 * (y_prime.clamp(-2.0, 2.0) + curve)
}

pub(crate) fn true_outcome<F: Scalar>(
    x: ArrayView1<F>,
    s: F,
    v1: &Array1<F>,
    v2: &Array1<F>,
    v3: &Array1<F>,
) -> F {
    let xf: Vec<f64> = x.iter().map(|v| v.widen()).collect();
    let vf = |v: &Array1<F>| -> Vec<f64> { v.iter().map(|u| u.widen()).collect() };
    F::of(outcome_f64(&xf, s.widen(), &vf(v1), &vf(v2), &vf(v3)))
}

/// Generate `n` units over a `vocab`-dimensional synthetic word-count space.
///
/// Covariates are Poisson(0.5) counts with at least one nonzero entry per
/// row; real counts can be substituted through the CSV loader upstream.
pub fn gen_news<F: Scalar>(n: usize, vocab: usize, seed: u64) -> Dataset<F> {
    assert!(n >= 1, "need at least one unit");
    assert!(vocab >= 2, "need at least two vocabulary dimensions");
    let mut rng = SplitMix64::derive(seed, 0x4e);
    let std_normal = Normal::new(0.0, 1.0).expect("valid normal");
    let noise = Normal::new(0.0, NOISE_STD).expect("valid normal");
    let poisson = Poisson::new(0.5).expect("valid poisson");

    let direction = |rng: &mut SplitMix64| -> Vec<f64> {
        let v: Vec<f64> = (0..vocab).map(|_| std_normal.sample(rng)).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v.into_iter().map(|a| a / norm).collect()
    };
    let v1 = direction(&mut rng);
    let v2 = direction(&mut rng);
    let v3 = direction(&mut rng);

    let mut covariates = Array2::zeros((n, vocab));
    for i in 0..n {
        let mut nonzero = false;
        for j in 0..vocab {
            let c: f64 = poisson.sample(&mut rng);
            covariates[[i, j]] = c;
            nonzero |= c > 0.0;
        }
        if !nonzero {
            let j = (rng.uniform_f64() * vocab as f64) as usize;
            covariates[[i, j.min(vocab - 1)]] = 1.0;
        }
    }

    let mut dosages = Array1::zeros(n);
    for i in 0..n {
        let x: Vec<f64> = covariates.row(i).iter().copied().collect();
        let sw = shape_param(&x, &v1, &v2);
        let beta = Beta::new(2.0, sw).expect("valid beta shape");
        dosages[i] = clamp_dosage(beta.sample(&mut rng));
    }

    let mut outcomes = Array1::zeros(n);
    let mut outcome_noise = Array1::zeros(n);
    for i in 0..n {
        let x: Vec<f64> = covariates.row(i).iter().copied().collect();
        let e = noise.sample(&mut rng);
        outcome_noise[i] = e;
        outcomes[i] = outcome_f64(&x, dosages[i], &v1, &v2, &v3) + e;
    }

    Dataset {
        covariates: covariates.mapv(F::of),
        treatments: vec![0; n],
        dosages: dosages.mapv(F::of),
        outcomes: outcomes.mapv(F::of),
        outcome_noise: outcome_noise.mapv(F::of),
        oracle: Oracle::News {
            v1: Array1::from_vec(v1.into_iter().map(F::of).collect()),
            v2: Array1::from_vec(v2.into_iter().map(F::of).collect()),
            v3: Array1::from_vec(v3.into_iter().map(F::of).collect()),
        },
    }
}
