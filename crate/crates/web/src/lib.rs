//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each export has a plain Rust counterpart returning `Result<_, String>`,
//! which is what the native tests call.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use syncma_core::cmaes::CmaEs;
use syncma_core::fitness::WeightScheme;
use syncma_core::harness::{run_trials, summarize, OptimizerSpec, RunConfig};
use syncma_core::objectives::Function;
use syncma_core::syncma::SynCmaConfig;
use syncma_core::{Matrix, SynCma, Vector};
use wasm_bindgen::prelude::*;

/// Numbers per generation in [`trajectory_path`]: mean x, mean y, the three
/// covariance entries `c_xx, c_xy, c_yy`, and the best value so far.
pub const FRAME_LEN: usize = 6;

const MAX_CURVE_DIM: usize = 16;
const MAX_CURVE_TRIALS: usize = 50;

fn parse_function(name: &str) -> Result<Function, String> {
    name.parse().map_err(|e: syncma_core::Error| e.to_string())
}

/// Objective values on a `resolution × resolution` grid over `[lo, hi]²`,
/// row-major with `y` increasing down the rows.
pub fn landscape_grid(
    function: &str,
    lo: f64,
    hi: f64,
    resolution: usize,
) -> Result<Vec<f64>, String> {
    let f = parse_function(function)?;
    if resolution < 2 || lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
        return Err(format!(
            "need resolution >= 2 and lo < hi, got {resolution}, [{lo}, {hi}]"
        ));
    }
    let step = (hi - lo) / (resolution - 1) as f64;
    let mut out = Vec::with_capacity(resolution * resolution);
    for j in 0..resolution {
        for i in 0..resolution {
            out.push(f.base(&[lo + step * i as f64, lo + step * j as f64]));
        }
    }
    Ok(out)
}

fn frame(mean: &Vector, cov: &Matrix, best: f64) -> [f64; FRAME_LEN] {
    [
        mean[0],
        mean[1],
        cov[(0, 0)],
        cov[(0, 1)],
        cov[(1, 1)],
        best,
    ]
}

/// 2-D run of `optimizer` (`"syncma"` or `"cmaes"`) from `start`, one frame
/// per generation including the initial one.
pub fn trajectory_path(
    function: &str,
    optimizer: &str,
    lambda0: f64,
    sigma0: f64,
    start: [f64; 2],
    generations: usize,
    seed: u64,
) -> Result<Vec<f64>, String> {
    let f = parse_function(function)?;
    let m0 = Vector::from_column_slice(&start);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity((generations + 1) * FRAME_LEN);
    let mut best = f64::INFINITY;
    let eval = |xs: &[Vector]| {
        xs.iter()
            .map(|x| f.base(x.as_slice()))
            .collect::<Vec<f64>>()
    };
    match optimizer {
        "syncma" => {
            let config = SynCmaConfig {
                sigma0,
                ..SynCmaConfig::with_lambda0(lambda0)
            };
            let mut opt = SynCma::new(m0, config).map_err(|e| e.to_string())?;
            out.extend(frame(
                &opt.state().params.mean,
                &opt.state().params.cov,
                best,
            ));
            for _ in 0..generations {
                let xs = opt.ask(&mut rng).map_err(|e| e.to_string())?;
                let values = eval(&xs);
                best = values.iter().copied().fold(best, f64::min);
                if opt.tell_values(xs, values).is_err() {
                    break;
                }
                out.extend(frame(
                    &opt.state().params.mean,
                    &opt.state().params.cov,
                    best,
                ));
            }
        }
        "cmaes" => {
            let mut opt =
                CmaEs::new(m0, sigma0, 4, WeightScheme::default()).map_err(|e| e.to_string())?;
            let full_cov = |o: &CmaEs| &o.state().cov * o.state().sigma.powi(2);
            out.extend(frame(&opt.state().mean, &full_cov(&opt), best));
            for _ in 0..generations {
                let xs = opt.ask(&mut rng);
                let values = eval(&xs);
                best = values.iter().copied().fold(best, f64::min);
                if opt.tell(&xs, &values).is_err() {
                    break;
                }
                out.extend(frame(&opt.state().mean, &full_cov(&opt), best));
            }
        }
        other => return Err(format!("unknown optimizer `{other}`")),
    }
    Ok(out)
}

/// Median best-so-far per generation for SynCMA at each `lambda0`, then
/// CMA-ES. The first block is the evaluation count of each generation;
/// every later block has the same length.
pub fn median_curves(
    function: &str,
    dim: usize,
    budget: usize,
    trials: usize,
    seed: u64,
    lambda0s: &[f64],
) -> Result<Vec<f64>, String> {
    let f = parse_function(function)?;
    if dim > MAX_CURVE_DIM || trials > MAX_CURVE_TRIALS {
        return Err(format!(
            "keep dim <= {MAX_CURVE_DIM} and trials <= {MAX_CURVE_TRIALS} in the browser"
        ));
    }
    let mut optimizers: Vec<OptimizerSpec> = lambda0s
        .iter()
        .map(|&l| OptimizerSpec::SynCma(SynCmaConfig::with_lambda0(l)))
        .collect();
    optimizers.push(OptimizerSpec::CmaEs { sigma0: 0.1 });
    let mut blocks = Vec::new();
    for optimizer in optimizers {
        let config = RunConfig {
            trials,
            budget,
            base_seed: seed,
            ..RunConfig::new(f, dim, optimizer)
        };
        let traces = run_trials(&config).map_err(|e| e.to_string())?;
        let stats = summarize(&traces, config.hit_threshold);
        if blocks.is_empty() {
            blocks.push(
                stats
                    .bands
                    .iter()
                    .map(|b| b.evaluations as f64)
                    .collect::<Vec<_>>(),
            );
        }
        blocks.push(stats.bands.iter().map(|b| b.median).collect());
    }
    Ok(blocks.concat())
}

#[wasm_bindgen]
pub fn landscape(function: &str, lo: f64, hi: f64, resolution: usize) -> Result<Vec<f64>, JsError> {
    landscape_grid(function, lo, hi, resolution).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn trajectory(
    function: &str,
    optimizer: &str,
    lambda0: f64,
    sigma0: f64,
    start_x: f64,
    start_y: f64,
    generations: usize,
    seed: u32,
) -> Result<Vec<f64>, JsError> {
    trajectory_path(
        function,
        optimizer,
        lambda0,
        sigma0,
        [start_x, start_y],
        generations,
        seed.into(),
    )
    .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn curves(
    function: &str,
    dim: usize,
    budget: usize,
    trials: usize,
    seed: u32,
    lambda0s: Vec<f64>,
) -> Result<Vec<f64>, JsError> {
    median_curves(function, dim, budget, trials, seed.into(), &lambda0s)
        .map_err(|e| JsError::new(&e))
}
