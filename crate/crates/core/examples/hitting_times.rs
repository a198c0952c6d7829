//! Final value and median hitting time on every 32-d function, SynCMA at
//! λ₀ ∈ {1, 2, 4} next to CMA-ES.
//!
//! ```text
//! cargo run --release -p syncma-core --example hitting_times -- [trials] [offset]
//! ```
//!
//! `offset` moves both the optimum and the initial-mean box by the same
//! constant in every coordinate. An invariant optimizer prints the same table
//! for every offset.

use syncma_core::harness::{run_trials, summarize, M0Mode, OptimizerSpec, RunConfig};
use syncma_core::objectives::{Function, ShiftMode};
use syncma_core::syncma::SynCmaConfig;

const DIM: usize = 32;

fn main() {
    let mut args = std::env::args().skip(1);
    let trials: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(20);
    let offset: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.0);

    let mut optimizers: Vec<(String, OptimizerSpec)> = [1.0, 2.0, 4.0]
        .iter()
        .map(|&l| {
            (
                format!("syncma_{l}"),
                OptimizerSpec::SynCma(SynCmaConfig::with_lambda0(l)),
            )
        })
        .collect();
    optimizers.push(("cmaes".into(), OptimizerSpec::CmaEs { sigma0: 0.1 }));

    print!("{:<14}", "function");
    for (name, _) in &optimizers {
        print!("{name:>16}");
    }
    println!();
    for f in Function::ALL {
        print!("{:<14}", f.name());
        for (_, opt) in &optimizers {
            let config = RunConfig {
                trials,
                shift_mode: ShiftMode::Fixed(vec![offset; DIM]),
                m0_mode: M0Mode::SeededUniform(offset - 3.0, offset + 3.0),
                ..RunConfig::new(f, DIM, opt.clone())
            };
            let traces = run_trials(&config).expect("valid config");
            let s = summarize(&traces, config.hit_threshold);
            let cell = match s.median_hit_evals {
                Some(h) => format!("{:.2} ({h:.0})", s.median_best),
                None => format!("{:.2}", s.median_best),
            };
            print!("{cell:>16}");
        }
        println!();
    }
}
