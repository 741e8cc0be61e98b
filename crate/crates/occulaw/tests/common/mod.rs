//! Helpers shared by the integration test targets.

#![allow(dead_code)]

use ndarray::{array, Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use occulaw::core::GeneratorMatrix;
use occulaw::moments::ThetaParams;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn g_left() -> GeneratorMatrix {
    GeneratorMatrix::validate(&array![
        [-3.0, 1.0, 2.0],
        [2.0, -3.0, 1.0],
        [1.0, 2.0, -3.0]
    ])
    .unwrap()
}

pub fn g_right() -> GeneratorMatrix {
    GeneratorMatrix::validate(&array![
        [-0.4, 0.2, 0.2],
        [0.3, -0.6, 0.3],
        [0.5, 0.5, -1.0]
    ])
    .unwrap()
}

/// Random generator with off-diagonal rates in [0.2, 1.5].
pub fn random_generator<R: Rng>(rng: &mut R, m: usize) -> GeneratorMatrix {
    let mut entries = Array2::zeros((m, m));
    for i in 0..m {
        let mut row_sum = 0.0;
        for j in 0..m {
            if i != j {
                let v = rng.random_range(0.2..1.5);
                entries[[i, j]] = v;
                row_sum += v;
            }
        }
        entries[[i, i]] = -row_sum;
    }
    GeneratorMatrix::validate(&entries).unwrap()
}

pub fn random_theta<R: Rng>(rng: &mut R, m: usize) -> ThetaParams {
    ThetaParams::new((0..m).map(|_| rng.random_range(0.2..5.0)).collect()).unwrap()
}

pub fn uniform(m: usize) -> Array1<f64> {
    Array1::from_elem(m, 1.0 / m as f64)
}

/// Simple least-squares slope of `y` against `x`.
pub fn regression_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    cov / var
}

/// One-sample Kolmogorov-Smirnov distance against a CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max((((i + 1) as f64) / n - f).abs());
        d = d.max((f - (i as f64) / n).abs());
    }
    d
}

/// Print the per-criterion verdict line and panic on failure.
pub fn verdict(label: &str, ok: bool, detail: &str) {
    if ok {
        println!("PASS {label}: {detail}");
    } else {
        println!("FAIL {label}: {detail}");
        panic!("{label} failed: {detail}");
    }
}
