//! Individual update steps shared by the chain schemes.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{BinomialPanel, ChainContext, GlmmState, TARGET_ACCEPTANCE};
use crate::error::Result;
use crate::posterior::{inv_gamma, nu_draw_unchecked};
use crate::rou::{self, RouCounter};

/// Overflow-safe `ln(1 + e^x)`.
#[inline]
pub fn log1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `nu y - n ln(1 + e^nu) - (nu - z - theta)^2 / (2 delta0)`.
#[inline]
pub fn log_conditional_nu(nu: f64, y: f64, n: f64, z: f64, theta: f64, delta0: f64) -> f64 {
    let r = nu - z - theta;
    nu * y - n * log1p_exp(nu) - r * r / (2.0 * delta0)
}

#[inline]
fn week_offset(theta2: f64, j: usize) -> f64 {
    if j == 0 {
        0.0
    } else {
        theta2
    }
}

/// One Gaussian random-walk Metropolis step for every `nu_ij`. With `adapt`
/// set, each cell's log step size moves toward the target acceptance rate
/// with a decaying Robbins-Monro gain.
pub fn mh_update_nu(state: &mut GlmmState, panel: &BinomialPanel, adapt: bool) {
    let gain = if adapt {
        (state.adapt_iter as f64 + 1.0).powf(-0.6)
    } else {
        0.0
    };
    for i in 0..panel.len() {
        for j in 0..2 {
            let (y, n) = (panel.y[i][j] as f64, panel.trials[i][j] as f64);
            let (z, th) = (state.z[i], week_offset(state.theta2, j));
            let cur = state.nu[i][j];
            let step = state.step_sizes[i][j];
            let prop = cur + step * state.rng.sample::<f64, _>(StandardNormal);
            let log_ratio = log_conditional_nu(prop, y, n, z, th, state.delta0)
                - log_conditional_nu(cur, y, n, z, th, state.delta0);
            let u: f64 = state.rng.random();
            let accept = u.ln() < log_ratio || log_ratio >= 0.0;
            state.proposals += 1;
            if accept {
                state.nu[i][j] = prop;
                state.accepted += 1;
            }
            if adapt {
                let hit = if accept { 1.0 } else { 0.0 };
                state.step_sizes[i][j] = (step.ln() + gain * (hit - TARGET_ACCEPTANCE)).exp();
            }
        }
    }
    if adapt {
        state.adapt_iter += 1;
    }
}

/// Week-averaged logits with the week effect removed, and the pooled
/// within-unit sum of squares `sum_i (a_i - b_i)^2 / 2`.
pub fn pseudo_data(nu: &[[f64; 2]], theta2: f64) -> (DVector<f64>, f64) {
    let mut ss = 0.0;
    let ybar = DVector::from_iterator(
        nu.len(),
        nu.iter().map(|v| {
            let (a, b) = (v[0], v[1] - theta2);
            ss += 0.5 * (a - b) * (a - b);
            0.5 * (a + b)
        }),
    );
    (ybar, ss)
}

/// Joint draw of `(eta, delta0, Z)` given `(nu, theta2)`: `eta` from its
/// marginal by ratio-of-uniforms, `delta0` conjugately, `Z` exactly.
pub fn direct_block_update(state: &mut GlmmState, ctx: &mut ChainContext<'_>) -> Result<()> {
    let (ybar, within) = pseudo_data(&state.nu, state.theta2);
    ctx.cache.refresh(&ctx.penalty.q, &ybar, within);
    let env = rou::build_envelope(&ctx.cache)?;
    let eta = RouCounter::default().draw(&ctx.cache, &env, &mut state.rng)?;
    let delta0 = inv_gamma(ctx.cache.delta0_shape(), ctx.cache.delta0_scale(eta), &mut state.rng)?;
    state.z = nu_draw_unchecked(&ctx.penalty.q, &ctx.cache, eta, delta0, &mut state.rng);
    state.eta = eta;
    state.delta0 = delta0;
    Ok(())
}

/// `theta2 | Z, delta0, nu ~ N(mean(nu_i2 - Z_i), delta0 / N)`.
pub fn gibbs_update_theta2(state: &mut GlmmState) {
    let nc = state.nu.len() as f64;
    let mean = state
        .nu
        .iter()
        .zip(state.z.iter())
        .map(|(v, &z)| v[1] - z)
        .sum::<f64>()
        / nc;
    let z: f64 = state.rng.sample(StandardNormal);
    state.theta2 = mean + (state.delta0 / nc).sqrt() * z;
}

/// Site-by-site sweep over `Z_i | Z_{-i}, delta0, eta, theta2, nu`. Each
/// conditional is Gaussian with precision `(2 + eta M_ii) / delta0` and mean
/// `(2 ybar_i - eta sum_{k != i} M_ik Z_k) / (2 + eta M_ii)`.
pub fn baseline_update_z(state: &mut GlmmState, ctx: &ChainContext<'_>) {
    let (ybar, _) = pseudo_data(&state.nu, state.theta2);
    let m = &ctx.penalty.m;
    let eta = state.eta;
    for i in 0..state.z.len() {
        let mii = m[(i, i)];
        let off = m.column(i).dot(&state.z) - mii * state.z[i];
        let prec = 2.0 + eta * mii;
        let mean = (2.0 * ybar[i] - eta * off) / prec;
        let e: f64 = state.rng.sample(StandardNormal);
        state.z[i] = mean + (state.delta0 / prec).sqrt() * e;
    }
}

/// `delta0 | theta2, Z, nu, eta ~ InvGamma(a0 + N + r/2, b0 + (RSS + eta Z'MZ) / 2)`.
pub fn baseline_update_delta0(state: &mut GlmmState, ctx: &ChainContext<'_>) -> Result<()> {
    let nc = state.nu.len();
    let rss: f64 = state
        .nu
        .iter()
        .zip(state.z.iter())
        .map(|(v, &z)| (v[0] - z).powi(2) + (v[1] - z - state.theta2).powi(2))
        .sum();
    let rough = state.z.dot(&(&ctx.penalty.m * &state.z));
    let shape = ctx.a0 + nc as f64 + 0.5 * ctx.penalty.rank as f64;
    let scale = ctx.b0 + 0.5 * (rss + state.eta * rough);
    state.delta0 = inv_gamma(shape, scale, &mut state.rng)?;
    Ok(())
}

/// `eta | delta0, Z` with density `pi(eta) eta^{r/2} exp(-eta Z'MZ / (2 delta0))`,
/// drawn by ratio-of-uniforms.
pub fn baseline_update_eta(state: &mut GlmmState, ctx: &ChainContext<'_>) -> Result<()> {
    let rough = state.z.dot(&(&ctx.penalty.m * &state.z)).max(0.0);
    let half_rank = 0.5 * ctx.penalty.rank as f64;
    let rate = rough / (2.0 * state.delta0);
    let prior = ctx.eta_prior.clone();
    let target = move |eta: f64| {
        if eta > 0.0 {
            prior.ln_density(eta) + half_rank * eta.ln() - rate * eta
        } else {
            f64::NEG_INFINITY
        }
    };
    let env = rou::build_envelope(&target)?;
    state.eta = RouCounter::default().draw(&target, &env, &mut state.rng)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use statrs::function::gamma::ln_gamma;

    fn ln_binom_pmf(y: f64, n: f64, p: f64) -> f64 {
        ln_gamma(n + 1.0) - ln_gamma(y + 1.0) - ln_gamma(n - y + 1.0) + y * p.ln() + (n - y) * (1.0 - p).ln()
    }

    fn ln_normal_pdf(x: f64, m: f64, v: f64) -> f64 {
        -0.5 * (2.0 * std::f64::consts::PI * v).ln() - (x - m).powi(2) / (2.0 * v)
    }

    fn logistic(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    #[test]
    fn empty_binomial_is_gaussian() {
        let v = log_conditional_nu(1.3, 0.0, 0.0, 0.2, 0.5, 0.4);
        assert!((v + (1.3f64 - 0.7).powi(2) / 0.8).abs() < 1e-15);
    }

    #[test]
    fn matches_pmf_times_pdf() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let n = rng.random_range(1..60) as f64;
            let y = rng.random_range(0..=n as u64) as f64;
            let (z, th, d) = (rng.random::<f64>() * 4.0 - 2.0, rng.random::<f64>() - 0.5, 0.05 + rng.random::<f64>());
            let (a, b) = (rng.random::<f64>() * 6.0 - 3.0, rng.random::<f64>() * 6.0 - 3.0);
            let got = log_conditional_nu(a, y, n, z, th, d) - log_conditional_nu(b, y, n, z, th, d);
            let oracle = ln_binom_pmf(y, n, logistic(a)) + ln_normal_pdf(a, z + th, d)
                - ln_binom_pmf(y, n, logistic(b))
                - ln_normal_pdf(b, z + th, d);
            assert!((got - oracle).abs() < 1e-10, "{got} vs {oracle}");
        }
    }

    #[test]
    fn stationary_point() {
        // p = 1/4 exactly with n = 8, y = 2
        let nu = (1.0f64 / 3.0).ln();
        let f = |x: f64| log_conditional_nu(x, 2.0, 8.0, nu - 0.1, 0.1, 0.3);
        let h = 1e-5;
        assert!(((f(nu + h) - f(nu - h)) / (2.0 * h)).abs() < 1e-8);
    }

    #[test]
    fn finite_across_range() {
        for k in -700..=700 {
            let v = log_conditional_nu(k as f64, 3.0, 10.0, 0.0, 0.0, 1.0);
            assert!(v.is_finite(), "nu = {k}");
        }
        assert_eq!(log1p_exp(800.0), 800.0);
        assert!(log1p_exp(-800.0) >= 0.0);
    }

    #[test]
    fn pseudo_data_without_week_effect() {
        let nu = vec![[1.0, 1.0], [-2.0, -2.0], [0.5, 0.5]];
        let (ybar, ss) = pseudo_data(&nu, 0.0);
        assert_eq!(ybar.as_slice(), &[1.0, -2.0, 0.5]);
        assert_eq!(ss, 0.0);
    }
}
