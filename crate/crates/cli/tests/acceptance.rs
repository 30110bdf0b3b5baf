//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process fails if any criterion fails.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use tps_cli::output::read_columns;
use tps_cli::{make_synthetic, run_binomial, run_gaussian, RunConfig, SynthKind};
use tps_core::diagnostics::{acf, mcse, ScalarChain};
use tps_core::glmm::{run_chain, ChainConfig, SchemeRegistry};
use tps_core::posterior::substream_rng;
use tps_core::synth::{gaussian_field, turkey_panel};
use tps_core::*;

const SEED: u64 = 2024;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn penalty_of(sites: &[[f64; 2]]) -> SplinePenalty {
    build_penalty(&build_design(sites).unwrap(), &TpsKernel::default()).unwrap()
}

fn random_sites(n: usize, rng: &mut impl Rng) -> Vec<[f64; 2]> {
    (0..n).map(|_| [rng.random(), rng.random()]).collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn c1_penalty() -> Outcome {
    let start = Instant::now();
    let mut rng = substream_rng(SEED, 1);
    let mut worst = [0.0f64; 3];
    let mut failures = 0;
    for _ in 0..20 {
        let n = rng.random_range(5..=50);
        let p = penalty_of(&random_sites(n, &mut rng));
        let scale = p.m.amax();
        let sym = (&p.m - p.m.transpose()).amax() / scale;
        let psd = p.m.clone().symmetric_eigen().eigenvalues.min() >= -1e-10 * scale;
        let mt = (&p.m * &p.t).amax() / scale;
        let nu = DVector::from_fn(n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let c = recover_coefficients(&p, &nu).unwrap();
        let quad = nu.dot(&(&p.m * &nu));
        let rel = (quad - c.gamma.dot(&(&p.k * &c.gamma))).abs() / quad.abs();
        worst = [worst[0].max(sym), worst[1].max(mt), worst[2].max(rel)];
        if !(sym < 1e-12 && psd && p.rank == n - 3 && mt < 1e-8 && rel < 1e-8) {
            failures += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        failures == 0 && secs < 10.0,
        format!(
            "20 designs, {failures} failing; max asym {:.1e}, max |MT|/max|M| {:.1e}, max quad rel err {:.1e}; {secs:.2}s (< 10s)",
            worst[0], worst[1], worst[2]
        ),
    )
}

fn c2_spectral() -> Outcome {
    let start = Instant::now();
    let mut rng = substream_rng(SEED, 2);
    let (mut det_err, mut res_err) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let n = rng.random_range(5..=50);
        let p = penalty_of(&random_sites(n, &mut rng));
        // eta from its Pareto prior: u / (1 - u)
        let u: f64 = rng.random();
        let eta = u / (1.0 - u);
        let a = DMatrix::<f64>::identity(n, n) + &p.m * eta;
        let dense_logdet = 2.0 * a.clone().cholesky().unwrap().l().diagonal().map(f64::ln).sum();
        let spec_logdet: f64 = p.lambdas.iter().map(|l| (eta * l).ln_1p()).sum();
        // relative error of the determinant itself
        det_err = det_err.max((dense_logdet - spec_logdet).exp_m1().abs());
        let y = DVector::from_fn(n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let dense = a.lu().solve(&y).unwrap();
        let ys = p.q.tr_mul(&y);
        let spec = &p.q * DVector::from_fn(n, |i, _| ys[i] / (1.0 + eta * p.lambdas[i]));
        res_err = res_err.max((&dense - &spec).norm() / dense.norm());
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        det_err < 1e-10 && res_err < 1e-10 && secs < 5.0,
        format!("max det rel err {det_err:.1e}, max resolvent rel err {res_err:.1e}; {secs:.2}s (< 5s)"),
    )
}

/// Cumulative integral of `exp(log_f(u))` over `[lo, hi]` by adaptive
/// trapezoid refinement; returns nodes and running integral.
fn adaptive_cdf(log_f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
    const PIECES: usize = 2000;
    let shift = (0..=PIECES)
        .map(|k| log_f(lo + (hi - lo) * k as f64 / PIECES as f64))
        .fold(f64::NEG_INFINITY, f64::max);
    let f = |u: f64| (log_f(u) - shift).exp();
    fn refine(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fb: f64, depth: u32, out: &mut Vec<(f64, f64)>) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        let coarse = 0.5 * (b - a) * (fa + fb);
        let fine = 0.25 * (b - a) * (fa + 2.0 * fm + fb);
        if depth >= 40 || (coarse - fine).abs() <= 1e-10 * (b - a).max(1e-3) {
            out.push((m, fm));
            out.push((b, fb));
        } else {
            refine(f, a, m, fa, fm, depth + 1, out);
            refine(f, m, b, fm, fb, depth + 1, out);
        }
    }
    let mut nodes = vec![(lo, f(lo))];
    for k in 0..PIECES {
        let a = lo + (hi - lo) * k as f64 / PIECES as f64;
        let b = lo + (hi - lo) * (k + 1) as f64 / PIECES as f64;
        let (fa, fb) = (nodes.last().unwrap().1, f(b));
        refine(&f, a, b, fa, fb, 0, &mut nodes);
    }
    let mut cum = vec![0.0];
    for w in nodes.windows(2) {
        cum.push(cum.last().unwrap() + 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1));
    }
    let total = *cum.last().unwrap();
    (nodes.iter().map(|n| n.0).collect(), cum.iter().map(|c| c / total).collect())
}

fn c3_eta_ks() -> Outcome {
    let start = Instant::now();
    let g = gaussian_field(50, SEED);
    let p = penalty_of(&g.sites);
    let cache = build_cache(&p, &DVector::from_vec(g.value.clone()), 0.01, 0.01, Arc::new(Pareto)).unwrap();
    let log_f = |u: f64| log_marginal_eta(&cache, u.exp()).unwrap() + u;
    let (us, cdf) = adaptive_cdf(&log_f, 1e-8f64.ln(), 1e10f64.ln());
    let oracle = |eta: f64| {
        let u = eta.ln();
        let k = us.partition_point(|&x| x <= u).clamp(1, us.len() - 1);
        let t = (u - us[k - 1]) / (us[k] - us[k - 1]);
        cdf[k - 1] + t * (cdf[k] - cdf[k - 1])
    };
    let env = build_rou_envelope(&cache).unwrap();
    let mut stats = Vec::new();
    for s in 1..=5u64 {
        let mut rng = substream_rng(SEED, 100 + s);
        let mut draws = sample_eta(&cache, &env, 10_000, &mut rng).unwrap();
        draws.sort_by(f64::total_cmp);
        let n = draws.len() as f64;
        let d = draws
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = oracle(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max);
        stats.push(d);
    }
    let passed = stats.iter().filter(|&&d| d < 0.0163).count();
    let secs = start.elapsed().as_secs_f64();
    outcome(
        passed >= 4 && secs < 30.0,
        format!(
            "KS per seed [{}], {passed}/5 below 0.0163 (need 4); {secs:.2}s (< 30s)",
            stats.iter().map(|d| format!("{d:.4}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn c4_independence() -> Outcome {
    let g = gaussian_field(150, SEED);
    let p = penalty_of(&g.sites);
    let cache = build_cache(&p, &DVector::from_vec(g.value), 0.01, 0.01, Arc::new(Pareto)).unwrap();
    let d = draw_joint(&p, &cache, 10_000, SEED).unwrap();
    let band = 2.0 / (10_000f64).sqrt();
    let mut inside = 0;
    let mut lag1 = Vec::new();
    for (label, v) in [("eta", &d.eta), ("delta0", &d.delta0)] {
        let rho = acf(&ScalarChain::new(label, v.clone()), 10).unwrap();
        lag1.push(rho[1]);
        inside += rho[1..].iter().filter(|r| r.abs() <= band).count();
    }
    let frac = inside as f64 / 20.0;
    outcome(
        lag1.iter().all(|r| r.abs() < 0.05) && frac >= 0.95,
        format!(
            "lag-1 ACF eta {:.4}, delta0 {:.4} (|.| < 0.05); {inside}/20 lags 1-10 within +-{band:.3} (need 95%)",
            lag1[0], lag1[1]
        ),
    )
}

fn c5_conditional_mean() -> Outcome {
    let g = gaussian_field(15, SEED);
    let p = penalty_of(&g.sites);
    let y = DVector::from_vec(g.value);
    let cache = build_cache(&p, &y, 0.01, 0.01, Arc::new(Pareto)).unwrap();
    let (eta, delta0) = (0.5, 0.09);
    let a = DMatrix::<f64>::identity(15, 15) + &p.m * eta;
    let a_inv = a.try_inverse().unwrap();
    let want = &a_inv * &y;
    let reps = 100_000;
    let mut rng = substream_rng(SEED, 5);
    let mut sum = DVector::zeros(15);
    for _ in 0..reps {
        sum += sample_nu(&p, &cache, eta, delta0, &mut rng).unwrap();
    }
    let got = sum / reps as f64;
    let z = (0..15)
        .map(|i| (got[i] - want[i]).abs() / (delta0 * a_inv[(i, i)] / reps as f64).sqrt())
        .fold(0.0, f64::max);
    outcome(z < 4.0, format!("max |mean - (I+eta M)^-1 y| over 15 sites = {z:.2} SE (< 4 SE)"))
}

fn c6_throughput() -> Outcome {
    let start = Instant::now();
    let g = gaussian_field(155, SEED);
    let p = penalty_of(&g.sites);
    let cache = build_cache(&p, &DVector::from_vec(g.value), 0.01, 0.01, Arc::new(Pareto)).unwrap();
    let d = draw_joint(&p, &cache, 10_000, SEED).unwrap();
    let secs = start.elapsed().as_secs_f64();
    outcome(
        d.n_draws == 10_000 && secs < 60.0,
        format!("155 sites, 10000 joint draws incl. setup in {secs:.2}s (< 60s)"),
    )
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn c7_to_9_glmm(dir: &Path) -> [Outcome; 3] {
    let start = Instant::now();
    let data = dir.join("turkey.csv");
    make_synthetic(SynthKind::Turkey, SEED, &data).unwrap();
    let mut cfg = RunConfig::binomial(&data, dir.join("binomial"));
    cfg.iterations = 20_000;
    cfg.seed = SEED;
    run_binomial(&cfg).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let out = &cfg.out;

    let (hdr, ess) = read_columns_with_label(&out.join("ess_comparison.csv"));
    let col = |name: &str| hdr.iter().position(|h| h == name).unwrap() - 1;
    let ratio = |name: &str| ess[0][col(name)] / ess[1][col(name)];
    let (r_eta, r_d0, r_th) = (ratio("eta"), ratio("delta0"), ratio("theta2"));
    let c7 = outcome(
        r_eta >= 2.0 && r_d0 >= 2.0 && secs < 900.0,
        format!(
            "ESS direct/gibbs: eta {:.0}/{:.0} = {r_eta:.2}x, delta0 {:.0}/{:.0} = {r_d0:.2}x (both >= 2x); theta2 {r_th:.2}x (not asserted); {secs:.0}s (< 900s)",
            ess[0][col("eta")], ess[1][col("eta")], ess[0][col("delta0")], ess[1][col("delta0")]
        ),
    );

    let (_, direct) = read_columns(&out.join("draws_direct.csv")).unwrap();
    let (_, gibbs) = read_columns(&out.join("draws_gibbs.csv")).unwrap();
    let mut parts = Vec::new();
    let mut agree = true;
    for (k, name) in ["theta2", "eta", "delta0"].iter().enumerate() {
        let se = |v: &[f64]| mcse(&ScalarChain::new(*name, v.to_vec())).unwrap();
        let (ma, mb) = (mean(&direct[k]), mean(&gibbs[k]));
        let z = (ma - mb).abs() / (se(&direct[k]).powi(2) + se(&gibbs[k]).powi(2)).sqrt();
        agree &= z < 3.0;
        parts.push(format!("{name} {ma:.4} vs {mb:.4} ({z:.2} SE)"));
    }
    let c8 = outcome(agree, format!("{} (each < 3 combined SE)", parts.join(", ")));

    let truth = turkey_panel(SEED).z_true;
    let (_, zd) = read_columns(&out.join("z_direct.csv")).unwrap();
    let (_, zg) = read_columns(&out.join("z_gibbs.csv")).unwrap();
    let (rd, rg) = (pearson(&zd[2], &truth), pearson(&zg[2], &truth));
    let c9 = outcome(
        rd > 0.8,
        format!("Pearson r(posterior mean Z, true Z) = {rd:.3} direct (> 0.8); {rg:.3} gibbs (not asserted)"),
    );
    [c7, c8, c9]
}

/// ESS table: first column is the scheme label.
fn read_columns_with_label(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let hdr = rdr.headers().unwrap().iter().map(String::from).collect();
    let rows = rdr
        .records()
        .map(|r| r.unwrap().iter().skip(1).map(|f| f.parse().unwrap()).collect())
        .collect();
    (hdr, rows)
}

fn files_equal(a: &Path, b: &Path, names: &[&str]) -> Vec<String> {
    names
        .iter()
        .filter(|n| std::fs::read(a.join(n)).unwrap() != std::fs::read(b.join(n)).unwrap())
        .map(|n| n.to_string())
        .collect()
}

fn c10_determinism(dir: &Path) -> Outcome {
    let mut diffs = Vec::new();
    for kind in [SynthKind::Gaussian, SynthKind::Turkey] {
        let a = dir.join(format!("{kind:?}_a.csv"));
        let b = dir.join(format!("{kind:?}_b.csv"));
        make_synthetic(kind, SEED, &a).unwrap();
        make_synthetic(kind, SEED, &b).unwrap();
        if std::fs::read(&a).unwrap() != std::fs::read(&b).unwrap() {
            diffs.push(format!("synth {kind:?}"));
        }
    }

    let g = dir.join("Gaussian_a.csv");
    for run in ["ga", "gb"] {
        let mut cfg = RunConfig::gaussian(&g, "value", dir.join(run));
        cfg.draws = 2_000;
        cfg.seed = SEED;
        run_gaussian(&cfg).unwrap();
    }
    diffs.extend(files_equal(
        &dir.join("ga"),
        &dir.join("gb"),
        &["draws.csv", "summary.csv", "diagnostics.csv", "surface.csv"],
    ));

    let t = dir.join("Turkey_a.csv");
    for run in ["ba", "bb"] {
        let mut cfg = RunConfig::binomial(&t, dir.join(run));
        cfg.iterations = 600;
        cfg.seed = SEED;
        run_binomial(&cfg).unwrap();
    }
    let mut names = vec!["ess_comparison.csv".to_string()];
    for s in ["direct", "gibbs"] {
        for f in ["draws", "summary", "diagnostics", "z"] {
            names.push(format!("{f}_{s}.csv"));
        }
    }
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    diffs.extend(files_equal(&dir.join("ba"), &dir.join("bb"), &refs));

    let panel = turkey_panel(SEED).panel;
    let p = penalty_of(&panel.centroids);
    let mut cc = ChainConfig::new(300, SEED);
    cc.burn_in = 100;
    for name in ["direct", "gibbs"] {
        let s = SchemeRegistry::builtin().create(name).unwrap();
        let mut x = run_chain(s.as_ref(), &panel, &p, &cc).unwrap();
        let mut y = run_chain(s.as_ref(), &panel, &p, &cc).unwrap();
        x.duration_secs = 0.0;
        y.duration_secs = 0.0;
        if x != y {
            diffs.push(format!("run_chain {name}"));
        }
    }

    let total = 2 + 4 + refs.len() + 2;
    outcome(
        diffs.is_empty(),
        format!("{}/{total} seeded outputs byte-identical across two runs{}", total - diffs.len(), if diffs.is_empty() { String::new() } else { format!("; differ: {}", diffs.join(", ")) }),
    )
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let mut results: Vec<(&str, Outcome)> = vec![
        ("1 penalty correctness", c1_penalty()),
        ("2 spectral identities", c2_spectral()),
        ("3 eta sampler KS", c3_eta_ks()),
        ("4 draw independence", c4_independence()),
        ("5 conditional mean", c5_conditional_mean()),
        ("6 throughput", c6_throughput()),
    ];
    let [c7, c8, c9] = c7_to_9_glmm(dir.path());
    results.push(("7 GLMM ESS ordering", c7));
    results.push(("8 sampler agreement", c8));
    results.push(("9 truth recovery", c9));
    results.push(("10 determinism", c10_determinism(dir.path())));

    println!();
    for (name, o) in &results {
        println!("ACCEPTANCE {} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    let failed = results.iter().filter(|(_, o)| !o.pass).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
