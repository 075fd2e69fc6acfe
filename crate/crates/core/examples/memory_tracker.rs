//! Reads three pieces of user information into a two-slot memory with
//! hand-set weights and prints every gate and value.
//!
//! ```text
//! cargo run --example memory_tracker
//! ```

use emt::numeric::Tensor;
use emt::tracker::{init_memory, TrackerWeights};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let weights = TrackerWeights {
        w_k: Tensor::identity(2),
        w_v: Tensor::identity(2),
        w_s: Tensor::identity(2),
    };
    // keys for "you live in wales" and "you pay tax"
    let mut memory = init_memory(&[vec![1.0, 0.0], vec![0.0, 3.0]], true)?;
    println!("initial values: {:?}", memory.values);
    let reads = [
        ("question", vec![0.2, 0.2]),
        ("scenario", vec![0.0, 1.0]),
        ("turn 1", vec![2.0, -1.0]),
    ];
    for (name, s) in reads {
        memory = memory.read(&s, &weights)?;
        let gates = memory.gate_log.last().expect("one gate row per read");
        println!("after {name:<8} gates {:.3?}", gates);
        for (i, v) in memory.values.iter().enumerate() {
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            println!("  slot {i}: value {v:.4?} (norm {norm:.3})");
        }
    }
    Ok(())
}
