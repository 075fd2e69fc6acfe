//! Serves the session API for a model saved by `emt train`.
//!
//! ```text
//! cargo run --release --example serve_http -- <model_dir> [addr]
//! curl -s -X POST localhost:8080/v1/sessions -H 'content-type: application/json' \
//!   -d '{"rule_text": "You can get it if:\n* you live in wales", "question": "Can I get it?"}'
//! curl -s -X POST localhost:8080/v1/sessions/s00000001/answers -d '{"answer": "yes"}' \
//!   -H 'content-type: application/json'
//! curl -s localhost:8080/v1/sessions/s00000001/trace
//! ```

use std::sync::Arc;

use emt::model::EmtModel;
use emt::rephrase::by_name;
use emt::service::{serve, DialogEngine, SessionManager, DEFAULT_MAX_TURNS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut args = std::env::args().skip(1);
    let dir = args.next().ok_or("usage: serve_http <model_dir> [addr]")?;
    let addr = args
        .next()
        .unwrap_or_else(|| "127.0.0.1:8080".into())
        .parse()?;
    let engine = DialogEngine::new(
        Arc::new(EmtModel::load(dir)?),
        by_name("template")?,
        DEFAULT_MAX_TURNS,
    );
    let runtime = tokio::runtime::Builder::new_current_thread()
        .enable_io()
        .build()?;
    runtime.block_on(serve(addr, Arc::new(SessionManager::new(engine))))?;
    Ok(())
}
