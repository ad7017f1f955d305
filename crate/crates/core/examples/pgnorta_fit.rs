//! Fit a DS-WGAN to PGnorta data and compare generated and held-out
//! summary statistics.
//!
//! Usage: `cargo run --release --example pgnorta_fit -- [iterations] [seed]`

use std::time::Instant;

use dswgan::dswgan::{train_with_progress, TrainingConfig};
use dswgan::stats::summarize;
use dswgan::synthetic::{Pgnorta, PgnortaConfig};
use dswgan::{Horizon, RngStream};

fn main() -> dswgan::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let iterations = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(2_000);
    let seed = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1);

    let truth = Pgnorta::new(PgnortaConfig::ar1(
        vec![60.0, 90.0, 120.0, 150.0, 140.0, 120.0, 90.0, 70.0],
        vec![6.0; 8],
        0.7,
    ))?;
    let horizon = Horizon::new(4.0, 8)?;
    let train = truth.simulate_days(horizon, 1000, &RngStream::new(seed, 10))?;
    let test = truth.simulate_days(horizon, 20_000, &RngStream::new(seed, 11))?;

    let cfg = TrainingConfig {
        iterations,
        seed,
        generator_hidden: vec![128; 3],
        discriminator_hidden: vec![128; 3],
        ..TrainingConfig::default()
    };
    let start = Instant::now();
    let (model, _) = train_with_progress(&train, &cfg, |row| {
        if row.iteration % 500 == 0 {
            println!(
                "it {:>6} Lw {:>12.3} Lg {:>12.3} pen {:>9.3} clip {:.3} {:.1}s",
                row.iteration,
                row.critic_loss,
                row.generator_loss,
                row.penalty,
                row.clip_fraction,
                start.elapsed().as_secs_f64()
            );
        }
    })?;
    let generated = model.sample(20_000, 1.0, &RngStream::new(seed, 12))?;
    let (t, g) = (summarize(&test)?, summarize(&generated)?);
    for j in 0..8 {
        println!(
            "j={j} mean {:>8.2} / {:>8.2}  var {:>9.1} / {:>9.1}",
            t.marginal_mean[j], g.marginal_mean[j], t.marginal_variance[j], g.marginal_variance[j]
        );
    }
    for j in 0..7 {
        println!("corr j={} {:.3} / {:.3}", j + 1, t.past_future_corr[j], g.past_future_corr[j]);
    }
    println!("total {:.1}s", start.elapsed().as_secs_f64());
    Ok(())
}
