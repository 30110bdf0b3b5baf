use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tps_core::diagnostics::{ess, quantile_sorted, ScalarChain};
use tps_core::glmm::{run_chain, ChainConfig, ChainOutput, SchemeRegistry};
use tps_core::synth::{gaussian_field, turkey_panel, GAUSSIAN_SITES};
use tps_core::{
    build_cache, build_penalty, draw_joint, recover_coefficients, EtaPriorRegistry, SpatialDesign,
    SplinePenalty, SurfaceBasis, TpsKernel,
};

use crate::config::{GridSpec, Model, RunConfig};
use crate::error::{CliError, Result};
use crate::ingest::{ingest_panel, ingest_points, Jitter};
use crate::output::{
    diagnostics_header, diagnostics_rows, fmt, summary_header, summary_rows, write_columns, write_rows,
};

/// Upper bound on the draws used for surface bands.
pub const SURFACE_DRAWS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainInfo {
    pub scheme: String,
    pub acceptance_rate: f64,
    pub burn_in_acceptance_rate: f64,
    pub seconds: f64,
}

/// Everything needed to repeat a run, plus provenance of the outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub core_version: String,
    pub config: RunConfig,
    pub seed: u64,
    pub sites: usize,
    pub dropped_rows: usize,
    pub outputs: Vec<String>,
    pub chains: Vec<ChainInfo>,
    pub threads: usize,
    pub wall_clock_secs: f64,
}

pub const MANIFEST: &str = "manifest.json";

fn jitter(config: &RunConfig) -> Option<Jitter> {
    config.jitter.map(|eps| Jitter {
        eps,
        seed: config.seed,
    })
}

fn prepare_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_manifest(config: &RunConfig, mut m: Manifest, start: Instant) -> Result<Manifest> {
    m.wall_clock_secs = start.elapsed().as_secs_f64();
    m.outputs.push(MANIFEST.into());
    let path = config.out.join(MANIFEST);
    let body = serde_json::to_string_pretty(&m)?;
    std::fs::write(&path, body + "\n").map_err(|e| CliError::io(&path, e))?;
    Ok(m)
}

fn manifest(config: &RunConfig, sites: usize, dropped: usize) -> Manifest {
    Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        core_version: tps_core::VERSION.into(),
        config: config.clone(),
        seed: config.seed,
        sites,
        dropped_rows: dropped,
        outputs: Vec::new(),
        chains: Vec::new(),
        threads: rayon::current_num_threads(),
        wall_clock_secs: 0.0,
    }
}

/// Regular `nx * ny` grid, x varying fastest.
pub fn grid_points(grid: &GridSpec, design: &SpatialDesign) -> Vec<[f64; 2]> {
    let [x0, x1, y0, y1] = grid.bbox.unwrap_or_else(|| {
        let raw = design.raw_sites();
        let (mut b, inf) = ([f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY], 0.05);
        for p in &raw {
            b = [b[0].min(p[0]), b[1].max(p[0]), b[2].min(p[1]), b[3].max(p[1])];
        }
        let (dx, dy) = (inf * (b[1] - b[0]), inf * (b[3] - b[2]));
        [b[0] - dx, b[1] + dx, b[2] - dy, b[3] + dy]
    });
    let lin = |a: f64, b: f64, k: usize, n: usize| a + (b - a) * k as f64 / (n - 1) as f64;
    (0..grid.ny)
        .flat_map(|j| (0..grid.nx).map(move |i| [lin(x0, x1, i, grid.nx), lin(y0, y1, j, grid.ny)]))
        .collect()
}

/// Posterior mean and central 95% band of the surface at `points`, from
/// every `stride`-th field draw.
pub fn surface_bands(
    penalty: &SplinePenalty,
    fields: &[DVector<f64>],
    points: &[[f64; 2]],
) -> Result<Vec<[f64; 3]>> {
    let basis = SurfaceBasis::new(penalty.design(), penalty.kernel(), points)?;
    let surfaces: Vec<DVector<f64>> = fields
        .par_iter()
        .map(|nu| basis.evaluate(&recover_coefficients(penalty, nu)?))
        .collect::<tps_core::Result<_>>()?;
    let m = surfaces.len() as f64;
    Ok((0..points.len())
        .into_par_iter()
        .map(|g| {
            let mut v: Vec<f64> = surfaces.iter().map(|s| s[g]).collect();
            let mean = v.iter().sum::<f64>() / m;
            v.sort_by(f64::total_cmp);
            [mean, quantile_sorted(&v, 0.025), quantile_sorted(&v, 0.975)]
        })
        .collect())
}

fn thin_stride(count: usize) -> usize {
    count.div_ceil(SURFACE_DRAWS).max(1)
}

/// Independent joint draws for Gaussian point data.
pub fn run_gaussian(config: &RunConfig) -> Result<Manifest> {
    let start = Instant::now();
    config.validate()?;
    let data = ingest_points(&config.data, &config.value_col, config.transform, jitter(config))?;
    let prior = EtaPriorRegistry::builtin().create(&config.eta_prior)?;
    let penalty = build_penalty(&data.design, &TpsKernel::default())?;
    let cache = build_cache(&penalty, &data.values, config.a0, config.b0, prior)?;
    let draws = draw_joint(&penalty, &cache, config.draws, config.seed)?;
    let n = penalty.n();
    prepare_out(&config.out)?;

    let mut names = vec!["eta".to_string(), "delta0".into()];
    names.extend((1..=n).map(|i| format!("nu_{i}")));
    let nu_cols: Vec<Vec<f64>> = (0..n).map(|i| draws.nu.column(i).iter().copied().collect()).collect();
    let mut cols: Vec<&[f64]> = vec![&draws.eta, &draws.delta0];
    cols.extend(nu_cols.iter().map(|c| c.as_slice()));

    let out = &config.out;
    write_columns(&out.join("draws.csv"), &names, &cols)?;
    write_rows(&out.join("summary.csv"), &summary_header(), &summary_rows(&names, &cols))?;
    write_rows(
        &out.join("diagnostics.csv"),
        &diagnostics_header(),
        &diagnostics_rows(&names, &cols),
    )?;

    let points = grid_points(&config.grid, &data.design);
    let fields: Vec<DVector<f64>> = (0..config.draws)
        .step_by(thin_stride(config.draws))
        .map(|r| draws.nu.row(r).transpose())
        .collect();
    let bands = surface_bands(&penalty, &fields, &points)?;
    let rows: Vec<Vec<String>> = points
        .iter()
        .zip(&bands)
        .map(|(p, b)| vec![fmt(p[0]), fmt(p[1]), fmt(b[0]), fmt(b[1]), fmt(b[2])])
        .collect();
    let header: Vec<String> = ["x", "y", "mean", "q2.5", "q97.5"].map(String::from).to_vec();
    write_rows(&out.join("surface.csv"), &header, &rows)?;

    let mut m = manifest(config, n, data.dropped);
    m.outputs = ["draws.csv", "summary.csv", "diagnostics.csv", "surface.csv"].map(String::from).to_vec();
    write_manifest(config, m, start)
}

fn chain_files(out: &Path, chain: &ChainOutput, centroids: &[[f64; 2]]) -> Result<Vec<String>> {
    let s = &chain.scheme;
    let names: Vec<String> = ["theta2", "eta", "delta0"].map(String::from).to_vec();
    let cols: [&[f64]; 3] = [&chain.theta2, &chain.eta, &chain.delta0];
    let files = [
        format!("draws_{s}.csv"),
        format!("summary_{s}.csv"),
        format!("diagnostics_{s}.csv"),
        format!("z_{s}.csv"),
    ];
    write_columns(&out.join(&files[0]), &names, &cols)?;
    write_rows(&out.join(&files[1]), &summary_header(), &summary_rows(&names, &cols))?;
    write_rows(&out.join(&files[2]), &diagnostics_header(), &diagnostics_rows(&names, &cols))?;

    let rows: Vec<Vec<String>> = centroids
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let mut v: Vec<f64> = chain.z_snapshots.iter().map(|z| z[i]).collect();
            v.sort_by(f64::total_cmp);
            let (lo, hi) = if v.is_empty() {
                (f64::NAN, f64::NAN)
            } else {
                (quantile_sorted(&v, 0.025), quantile_sorted(&v, 0.975))
            };
            vec![fmt(c[0]), fmt(c[1]), fmt(chain.z_mean[i]), fmt(lo), fmt(hi)]
        })
        .collect();
    let header: Vec<String> = ["x", "y", "mean", "q2.5", "q97.5"].map(String::from).to_vec();
    write_rows(&out.join(&files[3]), &header, &rows)?;
    Ok(files.to_vec())
}

fn ess_or_nan(label: &str, v: &[f64]) -> f64 {
    ess(&ScalarChain::new(label, v.to_vec())).unwrap_or(f64::NAN)
}

/// Both GLMM chains on a two-week binomial panel, with an ESS comparison.
pub fn run_binomial(config: &RunConfig) -> Result<Manifest> {
    let start = Instant::now();
    config.validate()?;
    let data = ingest_panel(&config.data, jitter(config))?;
    let design = tps_core::build_design(&data.panel.centroids)?;
    let penalty = build_penalty(&design, &TpsKernel::default())?;
    let registry = SchemeRegistry::builtin();
    let schemes = config
        .schemes
        .iter()
        .map(|s| registry.create(s))
        .collect::<tps_core::Result<Vec<_>>>()?;
    let chain_cfg = ChainConfig {
        iterations: config.iterations,
        burn_in: config.burn_in(),
        seed: config.seed,
        a0: config.a0,
        b0: config.b0,
        eta_prior: EtaPriorRegistry::builtin().create(&config.eta_prior)?,
        thin: 10,
    };
    let chains: Vec<ChainOutput> = schemes
        .par_iter()
        .map(|s| run_chain(s.as_ref(), &data.panel, &penalty, &chain_cfg))
        .collect::<tps_core::Result<_>>()?;

    prepare_out(&config.out)?;
    let mut m = manifest(config, data.panel.len(), data.dropped);
    let mut rows = Vec::new();
    for c in &chains {
        m.outputs.extend(chain_files(&config.out, c, &data.panel.centroids)?);
        m.chains.push(ChainInfo {
            scheme: c.scheme.clone(),
            acceptance_rate: c.acceptance_rate,
            burn_in_acceptance_rate: c.burn_in_acceptance_rate,
            seconds: c.duration_secs,
        });
        rows.push(vec![
            c.scheme.clone(),
            fmt(ess_or_nan("theta2", &c.theta2)),
            fmt(ess_or_nan("eta", &c.eta)),
            fmt(ess_or_nan("delta0", &c.delta0)),
        ]);
    }
    let header: Vec<String> = ["scheme", "theta2", "eta", "delta0"].map(String::from).to_vec();
    write_rows(&config.out.join("ess_comparison.csv"), &header, &rows)?;
    m.outputs.push("ess_comparison.csv".into());
    write_manifest(config, m, start)
}

pub fn run(config: &RunConfig) -> Result<Manifest> {
    match config.model {
        Model::Gaussian => run_gaussian(config),
        Model::Binomial => run_binomial(config),
    }
}

/// Re-run the configuration stored in a manifest, optionally into another
/// directory.
pub fn replay(manifest_path: &Path, out: Option<PathBuf>) -> Result<Manifest> {
    let text = std::fs::read_to_string(manifest_path).map_err(|e| CliError::io(manifest_path, e))?;
    let m: Manifest = serde_json::from_str(&text)?;
    let mut config = m.config;
    if let Some(o) = out {
        config.out = o;
    }
    run(&config)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthKind {
    Gaussian,
    Turkey,
}

/// Write a seeded synthetic data set with its generating truth.
pub fn make_synthetic(kind: SynthKind, seed: u64, path: &Path) -> Result<()> {
    let (header, rows): (Vec<String>, Vec<Vec<String>>) = match kind {
        SynthKind::Gaussian => {
            let g = gaussian_field(GAUSSIAN_SITES, seed);
            let rows = (0..g.sites.len())
                .map(|i| {
                    vec![fmt(g.sites[i][0]), fmt(g.sites[i][1]), fmt(g.value[i]), fmt(g.truth[i])]
                })
                .collect();
            (["x", "y", "value", "truth"].map(String::from).to_vec(), rows)
        }
        SynthKind::Turkey => {
            let t = turkey_panel(seed);
            let p = &t.panel;
            let rows = (0..p.len())
                .map(|i| {
                    vec![
                        fmt(p.centroids[i][0]),
                        fmt(p.centroids[i][1]),
                        p.y[i][0].to_string(),
                        p.trials[i][0].to_string(),
                        p.y[i][1].to_string(),
                        p.trials[i][1].to_string(),
                        fmt(t.z_true[i]),
                    ]
                })
                .collect();
            (["x", "y", "y1", "n1", "y2", "n2", "Z_true"].map(String::from).to_vec(), rows)
        }
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        prepare_out(dir)?;
    }
    write_rows(path, &header, &rows)
}
