//! Runs every ablation variant over several seeds on a synthetic corpus and
//! prints the mean/std table.
//!
//! ```text
//! cargo run --release --example ablation -- [train_examples] [epochs] [seeds]
//! ```

use emt::corpus::{generate_split, SyntheticConfig};
use emt::trainer::{run_ablation, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let arg = |i: usize, default: usize| args.get(i).copied().unwrap_or(default);

    let corpus = generate_split(&SyntheticConfig::standard().with_examples(arg(0, 2000)), 11);
    let mut config = TrainConfig::desk();
    config.epochs = arg(1, 6);
    config.seeds = (1..=arg(2, 5) as u64).collect();

    let table = run_ablation(
        &corpus.train_labeled(),
        &corpus.dev_labeled(),
        &config,
        None,
    )?;
    print!("{}", table.table());
    Ok(())
}
