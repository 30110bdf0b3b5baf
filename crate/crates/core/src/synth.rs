//! Seeded synthetic data sets standing in for field data.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal, Poisson};

use crate::glmm::BinomialPanel;

pub const GAUSSIAN_SITES: usize = 150;
pub const GAUSSIAN_NOISE_SD: f64 = 0.3;

pub const TURKEY_UNITS: usize = 114;
pub const TURKEY_LATTICE: usize = 11;
pub const TURKEY_THETA2: f64 = -0.3;
pub const TURKEY_MEAN_TRIALS: f64 = 30.0;
/// Baseline logit of the spatial effect.
pub const TURKEY_INTERCEPT: f64 = 0.0;
/// Variance of the unit-week noise on the logit scale.
pub const TURKEY_DELTA0: f64 = 0.5;

/// `sin(2 pi x1) cos(2 pi x2)`.
pub fn smooth_truth(p: [f64; 2]) -> f64 {
    (2.0 * PI * p[0]).sin() * (2.0 * PI * p[1]).cos()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSynthetic {
    pub sites: Vec<[f64; 2]>,
    pub value: Vec<f64>,
    pub truth: Vec<f64>,
}

/// `n` uniform sites on the unit square with `value = truth + N(0, 0.3^2)`.
pub fn gaussian_field(n: usize, seed: u64) -> GaussianSynthetic {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, GAUSSIAN_NOISE_SD).expect("valid sd");
    let sites: Vec<[f64; 2]> = (0..n).map(|_| [rng.random(), rng.random()]).collect();
    let truth: Vec<f64> = sites.iter().map(|&p| smooth_truth(p)).collect();
    let value = truth.iter().map(|t| t + noise.sample(&mut rng)).collect();
    GaussianSynthetic { sites, value, truth }
}

/// Free parameters of the synthetic binomial panel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurkeyParams {
    pub intercept: f64,
    pub delta0: f64,
    pub theta2: f64,
    pub mean_trials: f64,
}

impl Default for TurkeyParams {
    fn default() -> Self {
        TurkeyParams {
            intercept: TURKEY_INTERCEPT,
            delta0: TURKEY_DELTA0,
            theta2: TURKEY_THETA2,
            mean_trials: TURKEY_MEAN_TRIALS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TurkeySynthetic {
    pub panel: BinomialPanel,
    pub z_true: Vec<f64>,
}

/// Binomial panel on a jittered lattice of `TURKEY_UNITS` centroids.
/// `Z = intercept + smooth_truth`, trials `Poisson(30) + 1`,
/// `nu_ij = Z_i + theta_j + N(0, delta0)` with `theta_2 = -0.3`.
pub fn turkey_panel(seed: u64) -> TurkeySynthetic {
    turkey_panel_with(seed, TurkeyParams::default())
}

pub fn turkey_panel_with(seed: u64, params: TurkeyParams) -> TurkeySynthetic {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spacing = 1.0 / TURKEY_LATTICE as f64;
    let centroids: Vec<[f64; 2]> = (0..TURKEY_LATTICE * TURKEY_LATTICE)
        .take(TURKEY_UNITS)
        .map(|k| {
            let (r, c) = (k / TURKEY_LATTICE, k % TURKEY_LATTICE);
            let jx = (rng.random::<f64>() - 0.5) * 0.5 * spacing;
            let jy = (rng.random::<f64>() - 0.5) * 0.5 * spacing;
            [(c as f64 + 0.5) * spacing + jx, (r as f64 + 0.5) * spacing + jy]
        })
        .collect();
    let z_true: Vec<f64> = centroids
        .iter()
        .map(|&p| params.intercept + smooth_truth(p))
        .collect();
    let poisson = Poisson::new(params.mean_trials).expect("valid mean");
    let eps = Normal::new(0.0, params.delta0.sqrt()).expect("valid sd");
    let mut y = Vec::with_capacity(TURKEY_UNITS);
    let mut trials = Vec::with_capacity(TURKEY_UNITS);
    for &z in &z_true {
        let mut yi = [0u64; 2];
        let mut ni = [0u64; 2];
        for j in 0..2 {
            let theta = if j == 0 { 0.0 } else { params.theta2 };
            let nu = z + theta + eps.sample(&mut rng);
            let p = 1.0 / (1.0 + (-nu).exp());
            ni[j] = poisson.sample(&mut rng) as u64 + 1;
            yi[j] = Binomial::new(ni[j], p).expect("valid binomial").sample(&mut rng);
        }
        y.push(yi);
        trials.push(ni);
    }
    TurkeySynthetic {
        panel: BinomialPanel {
            y,
            trials,
            centroids,
        },
        z_true,
    }
}
