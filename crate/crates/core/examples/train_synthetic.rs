//! Trains on the standard synthetic corpus and prints dev metrics.
//!
//! ```text
//! cargo run --release --example train_synthetic -- [epochs] [dim] [layers] [seed] [lr] [dropout] [heads]
//! ```

use emt::corpus::{generate_split, SyntheticConfig};
use emt::rephrase::TemplateRephraser;
use emt::trainer::{train_seed, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg =
        |i: usize, default: usize| args.get(i).and_then(|a| a.parse().ok()).unwrap_or(default);
    let corpus = generate_split(&SyntheticConfig::standard(), 7);
    let (train, dev) = (corpus.train_labeled(), corpus.dev_labeled());

    let mut config = TrainConfig::desk();
    config.epochs = arg(0, 10);
    config.model.encoder.dim = arg(1, 64);
    config.model.encoder.ffn_dim = 2 * config.model.encoder.dim;
    config.model.encoder.layers = arg(2, 1);
    let seed = arg(3, 1) as u64;
    let float =
        |i: usize, default: f64| args.get(i).and_then(|a| a.parse().ok()).unwrap_or(default);
    config.learning_rate = float(4, config.learning_rate);
    config.dropout = float(5, config.dropout);
    config.model.encoder.heads = arg(6, config.model.encoder.heads);

    let started = std::time::Instant::now();
    let run = train_seed(&train, Some(&dev), &config, seed, None)?;
    println!("trained in {:.1}s", started.elapsed().as_secs_f64());
    let eval = emt::evaluator::evaluate(&run.model, &dev, &TemplateRephraser::default())?;
    print!("{}", eval.table());
    Ok(())
}
