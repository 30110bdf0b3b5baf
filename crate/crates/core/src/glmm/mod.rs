//! Hierarchical binomial-logit smoothing over areal units observed in two
//! weeks:
//!
//! ```text
//! y_ij ~ Binomial(n_ij, logistic(nu_ij))
//! nu_ij = Z_i + theta_j + eps_ij,   eps_ij ~ N(0, delta0),   theta_1 = 0
//! Z ~ thin-plate prior with smoothing parameter eta
//! ```
//!
//! Two interchangeable chain schemes are provided, both registered by name in
//! [`SchemeRegistry`]: `direct` draws `(eta, delta0, Z)` jointly given the
//! latent logits; `gibbs` cycles the one-parameter full conditionals.

mod schemes;
mod updates;

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::DVector;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::penalty::SplinePenalty;
use crate::posterior::{substream_rng, PosteriorCache, DEFAULT_A0, DEFAULT_B0};
use crate::prior::{EtaPrior, Pareto};

pub use schemes::{BaselineGibbs, DirectBlock};
pub use updates::{
    baseline_update_delta0, baseline_update_eta, baseline_update_z, direct_block_update,
    gibbs_update_theta2, log1p_exp, log_conditional_nu, mh_update_nu, pseudo_data,
};

/// Target Metropolis acceptance rate for the per-cell random walks.
pub const TARGET_ACCEPTANCE: f64 = 0.44;
pub const INITIAL_STEP: f64 = 1.0;

/// Harvest counts `y` out of `trials` for two weeks at each areal unit.
#[derive(Debug, Clone, PartialEq)]
pub struct BinomialPanel {
    pub y: Vec<[u64; 2]>,
    pub trials: Vec<[u64; 2]>,
    pub centroids: Vec<[f64; 2]>,
}

impl BinomialPanel {
    pub fn new(y: Vec<[u64; 2]>, trials: Vec<[u64; 2]>, centroids: Vec<[f64; 2]>) -> Result<Self> {
        let p = BinomialPanel { y, trials, centroids };
        p.validate()?;
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.centroids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centroids.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        if self.y.len() != n || self.trials.len() != n {
            return Err(Error::InvalidPanel(format!(
                "{} centroids, {} count rows, {} trial rows",
                n,
                self.y.len(),
                self.trials.len()
            )));
        }
        for (i, (y, t)) in self.y.iter().zip(&self.trials).enumerate() {
            for j in 0..2 {
                if y[j] > t[j] {
                    return Err(Error::InvalidPanel(format!(
                        "unit {i} week {}: {} successes out of {} trials",
                        j + 1,
                        y[j],
                        t[j]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Current position of one chain.
#[derive(Debug, Clone)]
pub struct GlmmState {
    pub nu: Vec<[f64; 2]>,
    pub z: DVector<f64>,
    /// Week-2 offset; week 1 is the reference and is never sampled.
    pub theta2: f64,
    pub delta0: f64,
    pub eta: f64,
    pub step_sizes: Vec<[f64; 2]>,
    pub rng: ChaCha8Rng,
    /// Random-walk proposals made / accepted since the last reset.
    pub proposals: u64,
    pub accepted: u64,
    /// Adaptation counter for the Robbins-Monro step sequence.
    pub adapt_iter: u64,
}

impl GlmmState {
    /// Empirical-logit start: `nu` from smoothed proportions, `Z`, `theta2`
    /// and `delta0` from their moment estimates, `eta = 1`.
    pub fn initial(panel: &BinomialPanel, rng: ChaCha8Rng) -> Self {
        let nc = panel.len();
        let nu: Vec<[f64; 2]> = panel
            .y
            .iter()
            .zip(&panel.trials)
            .map(|(y, t)| {
                let lg = |k: u64, m: u64| ((k as f64 + 0.5) / (m as f64 - k as f64 + 0.5)).ln();
                [lg(y[0], t[0]), lg(y[1], t[1])]
            })
            .collect();
        let theta2 = nu.iter().map(|v| v[1] - v[0]).sum::<f64>() / nc as f64;
        let z = DVector::from_iterator(nc, nu.iter().map(|v| 0.5 * (v[0] + v[1] - theta2)));
        let resid: f64 = nu
            .iter()
            .zip(z.iter())
            .map(|(v, &zi)| (v[0] - zi).powi(2) + (v[1] - zi - theta2).powi(2))
            .sum();
        let delta0 = (resid / (2 * nc) as f64).max(1e-3);
        GlmmState {
            nu,
            z,
            theta2,
            delta0,
            eta: 1.0,
            step_sizes: vec![[INITIAL_STEP; 2]; nc],
            rng,
            proposals: 0,
            accepted: 0,
            adapt_iter: 0,
        }
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposals as f64
        }
    }
}

/// Fixed model inputs plus per-chain scratch shared by the update steps.
#[derive(Debug)]
pub struct ChainContext<'a> {
    pub panel: &'a BinomialPanel,
    pub penalty: &'a SplinePenalty,
    pub a0: f64,
    pub b0: f64,
    pub eta_prior: Arc<dyn EtaPrior>,
    /// Replicate-aware cache refreshed from the current latent logits.
    pub cache: PosteriorCache,
}

impl<'a> ChainContext<'a> {
    pub fn new(
        panel: &'a BinomialPanel,
        penalty: &'a SplinePenalty,
        a0: f64,
        b0: f64,
        eta_prior: Arc<dyn EtaPrior>,
    ) -> Result<Self> {
        panel.validate()?;
        if penalty.n() != panel.len() {
            return Err(Error::DimensionMismatch {
                expected: panel.len(),
                got: penalty.n(),
            });
        }
        let cache = PosteriorCache::with_replicates(
            penalty,
            &DVector::zeros(panel.len()),
            2.0,
            0.0,
            a0,
            b0,
            eta_prior.clone(),
        )?;
        Ok(ChainContext {
            panel,
            penalty,
            a0,
            b0,
            eta_prior,
            cache,
        })
    }
}

/// One full sweep of a sampling scheme.
pub trait ChainScheme: Send + Sync {
    fn name(&self) -> &'static str;

    /// Advance `state` by one iteration. `adapt` is true during burn-in.
    fn step(&self, state: &mut GlmmState, ctx: &mut ChainContext<'_>, adapt: bool) -> Result<()>;
}

type SchemeCtor = fn() -> Box<dyn ChainScheme>;

/// Chain schemes by name.
pub struct SchemeRegistry {
    ctors: BTreeMap<&'static str, SchemeCtor>,
}

impl Default for SchemeRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl SchemeRegistry {
    pub fn builtin() -> Self {
        let mut ctors: BTreeMap<&'static str, SchemeCtor> = BTreeMap::new();
        ctors.insert(DirectBlock::NAME, || Box::new(DirectBlock));
        ctors.insert(BaselineGibbs::NAME, || Box::new(BaselineGibbs));
        SchemeRegistry { ctors }
    }

    pub fn register(&mut self, name: &'static str, ctor: SchemeCtor) {
        self.ctors.insert(name, ctor);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.ctors.keys().copied()
    }

    pub fn create(&self, name: &str) -> Result<Box<dyn ChainScheme>> {
        self.ctors
            .get(name)
            .map(|c| c())
            .ok_or_else(|| Error::UnknownStrategy {
                kind: "chain scheme",
                name: name.to_string(),
            })
    }
}

#[derive(Debug, Clone)]
pub struct ChainConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub a0: f64,
    pub b0: f64,
    pub eta_prior: Arc<dyn EtaPrior>,
    /// Keep every `thin`-th post-burn-in `Z` / `nu` snapshot.
    pub thin: usize,
}

impl ChainConfig {
    /// Defaults: burn-in 10% of `iterations`, Pareto prior on `eta`.
    pub fn new(iterations: usize, seed: u64) -> Self {
        ChainConfig {
            iterations,
            burn_in: iterations / 10,
            seed,
            a0: DEFAULT_A0,
            b0: DEFAULT_B0,
            eta_prior: Arc::new(Pareto),
            thin: 10,
        }
    }
}

/// Post-burn-in record of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput {
    pub scheme: String,
    pub theta2: Vec<f64>,
    pub eta: Vec<f64>,
    pub delta0: Vec<f64>,
    /// Running posterior mean of `Z` over all recorded iterations.
    pub z_mean: DVector<f64>,
    pub z_snapshots: Vec<DVector<f64>>,
    pub nu_snapshots: Vec<Vec<[f64; 2]>>,
    /// Random-walk acceptance rate after burn-in.
    pub acceptance_rate: f64,
    pub burn_in_acceptance_rate: f64,
    pub duration_secs: f64,
}

impl ChainOutput {
    pub fn len(&self) -> usize {
        self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta.is_empty()
    }
}

/// Run `scheme` for `config.iterations` sweeps, discarding the first
/// `config.burn_in`. The generator is a dedicated substream of `config.seed`.
/// `iterations == burn_in` yields empty records.
pub fn run_chain(
    scheme: &dyn ChainScheme,
    panel: &BinomialPanel,
    penalty: &SplinePenalty,
    config: &ChainConfig,
) -> Result<ChainOutput> {
    if config.iterations < config.burn_in {
        return Err(Error::InvalidChainLength {
            iterations: config.iterations,
            burn_in: config.burn_in,
        });
    }
    let start = Instant::now();
    let mut ctx = ChainContext::new(panel, penalty, config.a0, config.b0, config.eta_prior.clone())?;
    let mut state = GlmmState::initial(panel, substream_rng(config.seed, 0));

    for _ in 0..config.burn_in {
        scheme.step(&mut state, &mut ctx, true)?;
    }
    let burn_in_acceptance_rate = state.acceptance_rate();
    state.proposals = 0;
    state.accepted = 0;

    let kept = config.iterations - config.burn_in;
    let thin = config.thin.max(1);
    let mut out = ChainOutput {
        scheme: scheme.name().to_string(),
        theta2: Vec::with_capacity(kept),
        eta: Vec::with_capacity(kept),
        delta0: Vec::with_capacity(kept),
        z_mean: DVector::zeros(panel.len()),
        z_snapshots: Vec::new(),
        nu_snapshots: Vec::new(),
        acceptance_rate: 0.0,
        burn_in_acceptance_rate,
        duration_secs: 0.0,
    };
    for it in 0..kept {
        scheme.step(&mut state, &mut ctx, false)?;
        out.theta2.push(state.theta2);
        out.eta.push(state.eta);
        out.delta0.push(state.delta0);
        out.z_mean += &state.z;
        if it % thin == 0 {
            out.z_snapshots.push(state.z.clone());
            out.nu_snapshots.push(state.nu.clone());
        }
    }
    if kept > 0 {
        out.z_mean /= kept as f64;
    }
    out.acceptance_rate = state.acceptance_rate();
    out.duration_secs = start.elapsed().as_secs_f64();
    Ok(out)
}

/// Metropolis-within-Gibbs chain with the joint `(eta, delta0, Z)` block.
pub fn run_direct_chain(
    panel: &BinomialPanel,
    penalty: &SplinePenalty,
    config: &ChainConfig,
) -> Result<ChainOutput> {
    run_chain(&DirectBlock, panel, penalty, config)
}

/// Single-parameter full-conditional Gibbs chain.
pub fn run_baseline_gibbs(
    panel: &BinomialPanel,
    penalty: &SplinePenalty,
    config: &ChainConfig,
) -> Result<ChainOutput> {
    run_chain(&BaselineGibbs, panel, penalty, config)
}
