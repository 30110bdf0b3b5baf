//! Ratio-of-uniforms sampling for univariate densities on `(0, inf)`.
//!
//! With `h` the target normalized to 1 at its mode, `(u, v)` is drawn
//! uniformly on `(0, a] x (0, b]` and accepted when `u^2 <= h(v / u)`;
//! `v / u` then has density proportional to `h`. The bounds are
//! `a = sup sqrt(h) = 1` and `b = sup x sqrt(h(x))`, both located
//! numerically in log space.

use rand::Rng;

use crate::error::{Error, Result};

/// An unnormalized log density on `(0, inf)`.
pub trait LogDensity {
    fn ln_density(&self, x: f64) -> f64;
}

impl<F: Fn(f64) -> f64> LogDensity for F {
    fn ln_density(&self, x: f64) -> f64 {
        self(x)
    }
}

pub const SEARCH_LO: f64 = 1e-8;
pub const SEARCH_HI: f64 = 1e8;
pub const GRID_POINTS: usize = 200;
/// Points at which `x^2 h(x)` must have stopped growing.
pub const TAIL_PROBES: [f64; 3] = [1e8, 1e9, 1e10];
/// Largest tolerated slope of `ln(x^2 h(x))` against `ln x` over the probes.
pub const TAIL_SLOPE_TOL: f64 = 0.05;
/// Relative safety margin applied to the `b` bound.
const BOUND_MARGIN: f64 = 1e-6;
const GOLDEN_TOL: f64 = 1e-10;

pub const STALL_MIN_PROPOSALS: u64 = 1_000_000;
pub const STALL_MIN_RATE: f64 = 1e-3;

/// Acceptance region bounds for one target density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouEnvelope {
    /// `a = sup sqrt(h)`; 1 by construction.
    pub sqrt_h_max: f64,
    /// `b = sup x sqrt(h(x))`.
    pub u_eta_max: f64,
    pub mode: f64,
    /// Unnormalized log density at the mode; subtracted to form `ln h`.
    pub log_h_mode: f64,
}

impl RouEnvelope {
    #[inline]
    pub fn ln_h<D: LogDensity + ?Sized>(&self, target: &D, x: f64) -> f64 {
        target.ln_density(x) - self.log_h_mode
    }
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - invphi * (hi - lo);
    let mut d = lo + invphi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while hi - lo > GOLDEN_TOL {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - invphi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + invphi * (hi - lo);
            fd = f(d);
        }
    }
    let t = 0.5 * (lo + hi);
    (t, f(t))
}

fn finite_or_neg_inf(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// Grid scan over `[ln lo, ln hi]` followed by golden-section refinement of
/// the best bracket. Returns `(t, f(t))` with `t` on the log scale.
fn maximize_log_scale(f: &impl Fn(f64) -> f64) -> (f64, f64) {
    let (tlo, thi) = (SEARCH_LO.ln(), SEARCH_HI.ln());
    let step = (thi - tlo) / (GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..GRID_POINTS).map(|k| tlo + k as f64 * step).collect();
    let vals: Vec<f64> = grid.iter().map(|&t| finite_or_neg_inf(f(t))).collect();
    let best = (0..GRID_POINTS)
        .max_by(|&i, &j| vals[i].total_cmp(&vals[j]))
        .unwrap_or(0);
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(GRID_POINTS - 1)];
    let (t, v) = golden_max(|t| finite_or_neg_inf(f(t)), lo, hi);
    if v >= vals[best] {
        (t, v)
    } else {
        (grid[best], vals[best])
    }
}

/// Locate the mode and the `b` bound for `target`, and reject targets whose
/// `x^2 h(x)` keeps growing in the right tail.
pub fn build_envelope<D: LogDensity + ?Sized>(target: &D) -> Result<RouEnvelope> {
    let lf = |t: f64| target.ln_density(t.exp());
    let (t_mode, log_h_mode) = maximize_log_scale(&lf);
    if !log_h_mode.is_finite() {
        return Err(Error::DegenerateDensity);
    }

    let tail: Vec<f64> = TAIL_PROBES
        .iter()
        .map(|&x| 2.0 * x.ln() + target.ln_density(x) - log_h_mode)
        .collect();
    let last = tail.len() - 1;
    let slope = if tail.iter().all(|v| v.is_finite()) {
        (tail[last] - tail[0]) / (TAIL_PROBES[last].ln() - TAIL_PROBES[0].ln())
    } else if tail.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
        f64::INFINITY
    } else {
        0.0
    };
    if !(slope <= TAIL_SLOPE_TOL) {
        return Err(Error::UnboundedPosterior(slope));
    }

    // ln(x sqrt(h(x))) on the log scale
    let lg = |t: f64| t + 0.5 * (target.ln_density(t.exp()) - log_h_mode);
    let (_, mut log_b) = maximize_log_scale(&lg);
    for &x in TAIL_PROBES.iter() {
        log_b = log_b.max(finite_or_neg_inf(lg(x.ln())));
    }
    let b = log_b.exp() * (1.0 + BOUND_MARGIN);
    if !(b.is_finite() && b > 0.0) {
        return Err(Error::UnboundedPosterior(f64::INFINITY));
    }

    Ok(RouEnvelope {
        sqrt_h_max: 1.0,
        u_eta_max: b,
        mode: t_mode.exp(),
        log_h_mode,
    })
}

/// Draws from one envelope while tracking the acceptance rate.
#[derive(Debug, Clone, Copy, Default)]
pub struct RouCounter {
    pub proposals: u64,
    pub accepted: u64,
}

impl RouCounter {
    pub fn rate(&self) -> f64 {
        if self.proposals == 0 {
            1.0
        } else {
            self.accepted as f64 / self.proposals as f64
        }
    }

    pub fn draw<D: LogDensity + ?Sized, R: Rng + ?Sized>(
        &mut self,
        target: &D,
        env: &RouEnvelope,
        rng: &mut R,
    ) -> Result<f64> {
        loop {
            self.proposals += 1;
            // (0, 1] so that ln u and v / u are always defined
            let u = env.sqrt_h_max * (1.0 - rng.random::<f64>());
            let v = env.u_eta_max * (1.0 - rng.random::<f64>());
            let x = v / u;
            if 2.0 * u.ln() <= env.ln_h(target, x) {
                self.accepted += 1;
                return Ok(x);
            }
            if self.proposals >= STALL_MIN_PROPOSALS && self.rate() < STALL_MIN_RATE {
                return Err(Error::AcceptanceStall {
                    rate: self.rate(),
                    proposals: self.proposals,
                });
            }
        }
    }
}

/// Convenience: `count` independent draws.
pub fn sample<D: LogDensity + ?Sized, R: Rng + ?Sized>(
    target: &D,
    env: &RouEnvelope,
    count: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let mut counter = RouCounter::default();
    (0..count).map(|_| counter.draw(target, env, rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn golden_finds_parabola_peak() {
        let (t, v) = golden_max(|x| -(x - 1.3).powi(2), -5.0, 5.0);
        assert!((t - 1.3).abs() < 1e-8);
        assert!(v.abs() < 1e-15);
    }

    #[test]
    fn gamma_target_moments() {
        // Gamma(shape 3, rate 2): mean 1.5, variance 0.75
        let target = |x: f64| 2.0 * x.ln() - 2.0 * x;
        let env = build_envelope(&target).unwrap();
        assert!((env.mode - 1.0).abs() < 1e-6);
        // x sqrt(h(x)) = x^2 e^{1-x}, maximized at x = 2
        let want_b = 4.0 * (-1.0f64).exp();
        assert!((env.u_eta_max / want_b - 1.0).abs() < 1e-5);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let xs = sample(&target, &env, 100_000, &mut rng).unwrap();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        let se = (0.75f64 / 1e5).sqrt();
        assert!((mean - 1.5).abs() < 4.0 * se, "{mean}");
        assert!((var - 0.75).abs() < 0.02, "{var}");
    }

    #[test]
    fn flat_target_is_unbounded() {
        let target = |_x: f64| 0.0;
        assert!(matches!(build_envelope(&target), Err(Error::UnboundedPosterior(_))));
    }

    #[test]
    fn nowhere_finite_target() {
        let target = |_x: f64| f64::NEG_INFINITY;
        assert_eq!(build_envelope(&target), Err(Error::DegenerateDensity));
    }

    #[test]
    fn broken_envelope_stalls() {
        let target = |x: f64| -0.5 * (x - 1.0).powi(2) * 1e6;
        let mut env = build_envelope(&target).unwrap();
        env.u_eta_max *= 1e4;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = RouCounter::default().draw(&target, &env, &mut rng).unwrap_err();
        assert!(matches!(err, Error::AcceptanceStall { .. }));
    }
}
