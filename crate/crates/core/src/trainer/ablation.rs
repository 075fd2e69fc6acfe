use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{dev_columns, train, Ablation, DevMetrics, MeanStd, TrainConfig, TrainError};
use crate::corpus::LabeledExample;

pub const ABLATION_COLUMNS: [&str; 6] = [
    "micro",
    "macro",
    "bleu1",
    "bleu4",
    "sentence_id",
    "entail_macro",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: String,
    pub ablation: Ablation,
    /// One entry per column of [`ABLATION_COLUMNS`].
    pub metrics: Vec<Option<MeanStd>>,
    /// Raw values, one row per seed.
    pub per_seed: Vec<Vec<Option<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub seeds: Vec<u64>,
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn row(&self, variant: &str) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.variant == variant)
    }

    /// Mean of `column` for `variant`.
    pub fn mean(&self, variant: &str, column: &str) -> Option<f64> {
        let k = ABLATION_COLUMNS.iter().position(|c| *c == column)?;
        self.row(variant)?.metrics[k].map(|m| m.mean)
    }

    pub fn table(&self) -> String {
        let mut out = format!("{:<14}", "model");
        for c in ABLATION_COLUMNS {
            out.push_str(&format!(" | {c:>13}"));
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!("{:<14}", row.variant));
            for m in &row.metrics {
                let cell = m.map_or_else(|| "n/a".to_string(), |m| m.to_string());
                out.push_str(&format!(" | {cell:>13}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Trains every ablation variant of `base` with the same seeds and
/// tabulates mean ± std of the final dev metrics.
pub fn run_ablation(
    train_set: &[LabeledExample],
    dev: &[LabeledExample],
    base: &TrainConfig,
    mut log: Option<&mut dyn Write>,
) -> Result<AblationTable, TrainError> {
    base.validate()?;
    let mut rows = Vec::new();
    for (name, ablation) in Ablation::variants() {
        log::info!("ablation variant {name}");
        let config = TrainConfig {
            ablation,
            eval_every_epoch: false,
            ..base.clone()
        };
        let result = train(
            train_set,
            Some(dev),
            &config,
            log.as_mut().map(|w| &mut **w as &mut dyn Write),
        )?;
        let per_seed: Vec<Vec<Option<f64>>> = result
            .runs
            .iter()
            .map(|r| {
                let dev = DevMetrics::from(r.dev.as_ref().expect("dev set given"));
                dev_columns(&dev).iter().map(|c| c.1).collect()
            })
            .collect();
        let metrics = (0..ABLATION_COLUMNS.len())
            .map(|k| MeanStd::of(&per_seed.iter().filter_map(|r| r[k]).collect::<Vec<_>>()))
            .collect();
        rows.push(AblationRow {
            variant: name.to_string(),
            ablation,
            metrics,
            per_seed,
        });
    }
    Ok(AblationTable {
        seeds: base.seeds.clone(),
        rows,
    })
}
