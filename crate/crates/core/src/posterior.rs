//! Direct (non-Markov) sampling of the joint posterior of `(eta, delta0, nu)`
//! for the Gaussian thin-plate model
//!
//! ```text
//! y | nu, delta0      ~ N(nu, delta0 I)
//! nu | eta, delta0    ~ (eta / delta0)^{r/2} exp(-eta nu' M nu / (2 delta0))
//! delta0              ~ InvGamma(a0, b0)
//! eta                 ~ pi(eta)
//! ```
//!
//! The factorization `pi(eta | y) pi(delta0 | eta, y) pi(nu | delta0, eta, y)`
//! gives independent draws. Everything is evaluated in the eigenbasis of `M`,
//! so each density evaluation is `O(n)` and each `nu` draw is one `O(n^2)`
//! matrix-vector product.
//!
//! The cache also covers `w` exchangeable replicates per site (used by the
//! binomial model's latent block): data enter through the site means, the
//! noise precision becomes `w / delta0`, and the within-site scatter adds
//! `(w - 1) n / 2` to the `delta0` shape and `within_ss / 2` to its scale.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::penalty::SplinePenalty;
use crate::prior::EtaPrior;
use crate::rou::{self, LogDensity, RouCounter, RouEnvelope};

pub const DEFAULT_A0: f64 = 0.01;
pub const DEFAULT_B0: f64 = 0.01;

/// Draws per RNG substream in [`draw_joint`]. Fixed so results do not depend
/// on the number of worker threads.
pub const SUBSTREAM_DRAWS: usize = 500;

/// Everything needed to evaluate `pi(eta | y)` in `O(n)`.
#[derive(Debug, Clone)]
pub struct PosteriorCache {
    pub lambdas: DVector<f64>,
    /// Data rotated into the eigenbasis of `M`.
    pub y_star: DVector<f64>,
    pub yty: f64,
    pub n: usize,
    pub rank: usize,
    pub a0: f64,
    pub b0: f64,
    pub eta_prior: Arc<dyn EtaPrior>,
    pub log_pdet: f64,
    /// Replicates per site (1 for the plain Gaussian model).
    pub replicates: f64,
    pub within_ss: f64,
}

fn check_hyper(a0: f64, b0: f64) -> Result<()> {
    if !(a0 >= 0.0 && a0.is_finite()) {
        return Err(Error::InvalidHyperparameter { name: "a0", value: a0 });
    }
    if !(b0 >= 0.0 && b0.is_finite()) {
        return Err(Error::InvalidHyperparameter { name: "b0", value: b0 });
    }
    Ok(())
}

/// Precompute `y* = Q'y` and `y'y` for the Gaussian model.
pub fn build_cache(
    penalty: &SplinePenalty,
    y: &DVector<f64>,
    a0: f64,
    b0: f64,
    eta_prior: Arc<dyn EtaPrior>,
) -> Result<PosteriorCache> {
    PosteriorCache::with_replicates(penalty, y, 1.0, 0.0, a0, b0, eta_prior)
}

impl PosteriorCache {
    /// Cache for `replicates` observations per site summarized by their
    /// means `site_means` and pooled within-site sum of squares `within_ss`.
    pub fn with_replicates(
        penalty: &SplinePenalty,
        site_means: &DVector<f64>,
        replicates: f64,
        within_ss: f64,
        a0: f64,
        b0: f64,
        eta_prior: Arc<dyn EtaPrior>,
    ) -> Result<Self> {
        let n = penalty.n();
        if site_means.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: site_means.len(),
            });
        }
        check_hyper(a0, b0)?;
        if !(replicates >= 1.0 && replicates.is_finite()) {
            return Err(Error::InvalidHyperparameter {
                name: "replicates",
                value: replicates,
            });
        }
        if !(within_ss >= 0.0 && within_ss.is_finite()) {
            return Err(Error::InvalidHyperparameter {
                name: "within_ss",
                value: within_ss,
            });
        }
        Ok(PosteriorCache {
            lambdas: penalty.lambdas.clone(),
            y_star: penalty.q.tr_mul(site_means),
            yty: site_means.norm_squared(),
            n,
            rank: penalty.rank,
            a0,
            b0,
            eta_prior,
            log_pdet: penalty.log_pdet,
            replicates,
            within_ss,
        })
    }

    /// Rotate fresh site means into the eigenbasis, keeping everything else.
    pub(crate) fn refresh(&mut self, q: &DMatrix<f64>, site_means: &DVector<f64>, within_ss: f64) {
        q.tr_mul_to(site_means, &mut self.y_star);
        self.yty = site_means.norm_squared();
        self.within_ss = within_ss;
    }

    /// Residual roughness `S(eta) = w (y'y - y'(I + (eta/w) M)^{-1} y)`,
    /// summed termwise so it never cancels.
    pub fn residual(&self, eta: f64) -> f64 {
        let w = self.replicates;
        self.lambdas
            .iter()
            .zip(self.y_star.iter())
            .map(|(&l, &ys)| {
                let el = eta * l;
                ys * ys * w * el / (w + el)
            })
            .sum()
    }

    /// Shape of `delta0 | eta, y`.
    pub fn delta0_shape(&self) -> f64 {
        self.a0 + 0.5 * self.rank as f64 + 0.5 * (self.replicates - 1.0) * self.n as f64
    }

    /// Scale of `delta0 | eta, y`.
    pub fn delta0_scale(&self, eta: f64) -> f64 {
        self.b0 + 0.5 * self.residual(eta) + 0.5 * self.within_ss
    }

    fn log_marginal_unchecked(&self, eta: f64) -> f64 {
        let w = self.replicates;
        let half_logdet: f64 = 0.5 * self.lambdas.iter().map(|&l| (w + eta * l).ln()).sum::<f64>();
        self.eta_prior.ln_density(eta) + 0.5 * self.rank as f64 * eta.ln()
            - half_logdet
            - self.delta0_shape() * self.delta0_scale(eta).ln()
    }
}

impl LogDensity for PosteriorCache {
    fn ln_density(&self, eta: f64) -> f64 {
        if eta > 0.0 {
            self.log_marginal_unchecked(eta)
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// Unnormalized `ln pi(eta | y)`, with `delta0` and `nu` integrated out.
/// Constants in `eta` (`|M|_+`, the gamma function) are dropped.
pub fn log_marginal_eta(cache: &PosteriorCache, eta: f64) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::NonPositiveEta(eta));
    }
    Ok(cache.log_marginal_unchecked(eta))
}

pub fn build_rou_envelope(cache: &PosteriorCache) -> Result<RouEnvelope> {
    rou::build_envelope(cache)
}

/// `count` independent draws of `eta | y`.
pub fn sample_eta<R: Rng + ?Sized>(
    cache: &PosteriorCache,
    env: &RouEnvelope,
    count: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    rou::sample(cache, env, count, rng)
}

/// Inverse-gamma draw `scale / Gamma(shape, 1)`.
pub(crate) fn inv_gamma<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> Result<f64> {
    let g = Gamma::new(shape, 1.0).map_err(|_| Error::InvalidHyperparameter {
        name: "inverse-gamma shape",
        value: shape,
    })?;
    Ok(scale / g.sample(rng))
}

/// One draw of `delta0 | eta, y`.
pub fn sample_delta0<R: Rng + ?Sized>(cache: &PosteriorCache, eta: f64, rng: &mut R) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::NonPositiveEta(eta));
    }
    inv_gamma(cache.delta0_shape(), cache.delta0_scale(eta), rng)
}

/// `nu = Q (diag(w / (w + eta l)) y* + sqrt(delta0) diag((w + eta l)^{-1/2}) z)`.
pub(crate) fn nu_draw_unchecked<R: Rng + ?Sized>(
    q: &DMatrix<f64>,
    cache: &PosteriorCache,
    eta: f64,
    delta0: f64,
    rng: &mut R,
) -> DVector<f64> {
    let w = cache.replicates;
    let sd = delta0.sqrt();
    let coef = DVector::from_iterator(
        cache.n,
        cache.lambdas.iter().zip(cache.y_star.iter()).map(|(&l, &ys)| {
            let d = w + eta * l;
            let z: f64 = StandardNormal.sample(rng);
            w * ys / d + sd * z / d.sqrt()
        }),
    );
    q * coef
}

/// One exact draw of `nu | delta0, eta, y ~ N((I + eta M)^{-1} y, delta0 (I + eta M)^{-1})`.
pub fn sample_nu<R: Rng + ?Sized>(
    penalty: &SplinePenalty,
    cache: &PosteriorCache,
    eta: f64,
    delta0: f64,
    rng: &mut R,
) -> Result<DVector<f64>> {
    if !(eta > 0.0) {
        return Err(Error::NonPositiveEta(eta));
    }
    if !(delta0 > 0.0) {
        return Err(Error::NonPositiveDelta0(delta0));
    }
    if penalty.n() != cache.n {
        return Err(Error::DimensionMismatch {
            expected: cache.n,
            got: penalty.n(),
        });
    }
    Ok(nu_draw_unchecked(&penalty.q, cache, eta, delta0, rng))
}

/// Columnar store of independent joint draws; row `i` of `nu` belongs to
/// `eta[i]` and `delta0[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDraws {
    pub eta: Vec<f64>,
    pub delta0: Vec<f64>,
    pub nu: DMatrix<f64>,
    pub seed: u64,
    pub n_draws: usize,
}

/// `(eta, delta0, nu)` draws from one substream.
type Chunk = (Vec<f64>, Vec<f64>, Vec<DVector<f64>>);

/// Seeded generator for substream `index`.
pub fn substream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `count` independent draws of `(eta, delta0, nu)`. Work is split into
/// fixed-size substreams, each with its own generator, and reassembled in
/// substream order, so the output depends only on `seed`.
pub fn draw_joint(
    penalty: &SplinePenalty,
    cache: &PosteriorCache,
    count: usize,
    seed: u64,
) -> Result<JointDraws> {
    let n = cache.n;
    if penalty.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: penalty.n(),
        });
    }
    if count == 0 {
        return Ok(JointDraws {
            eta: vec![],
            delta0: vec![],
            nu: DMatrix::zeros(0, n),
            seed,
            n_draws: 0,
        });
    }
    let env = build_rou_envelope(cache)?;
    let chunks = count.div_ceil(SUBSTREAM_DRAWS);
    let parts: Vec<Chunk> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = SUBSTREAM_DRAWS.min(count - c * SUBSTREAM_DRAWS);
            let mut rng = substream_rng(seed, c as u64);
            let mut counter = RouCounter::default();
            let mut etas = Vec::with_capacity(len);
            let mut deltas = Vec::with_capacity(len);
            let mut nus = Vec::with_capacity(len);
            for _ in 0..len {
                let eta = counter.draw(cache, &env, &mut rng)?;
                let delta0 = sample_delta0(cache, eta, &mut rng)?;
                nus.push(nu_draw_unchecked(&penalty.q, cache, eta, delta0, &mut rng));
                etas.push(eta);
                deltas.push(delta0);
            }
            Ok((etas, deltas, nus))
        })
        .collect::<Result<_>>()?;

    let mut eta = Vec::with_capacity(count);
    let mut delta0 = Vec::with_capacity(count);
    let mut nu = DMatrix::zeros(count, n);
    let mut row = 0;
    for (e, d, v) in parts {
        eta.extend(e);
        delta0.extend(d);
        for draw in v {
            nu.row_mut(row).tr_copy_from(&draw);
            row += 1;
        }
    }
    Ok(JointDraws {
        eta,
        delta0,
        nu,
        seed,
        n_draws: count,
    })
}
