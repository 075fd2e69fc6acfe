use serde::{Deserialize, Serialize};

use super::bleu::BleuScores;
use super::metrics::{classwise_accuracy, micro_macro_accuracy, ClassAccuracy};
use super::EvalError;
use crate::corpus::{
    tokenize, Decision, DialogExample, EntailmentLabel, LabeledExample, RuleDocument, Span,
};
use crate::model::{EmtModel, Prediction};
use crate::rephrase::{RephraseError, RephraseRequest, Rephraser};

/// Spans at or below this F1 form the error-analysis bucket.
pub const LOW_SPAN_F1: f64 = 0.5;

/// What a system produced for one dialog state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TurnPrediction {
    pub decision: Decision,
    /// Generated follow-up; expected whenever `decision` is Inquire.
    pub question: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndToEndReport {
    pub examples: usize,
    pub micro_accuracy: f64,
    pub macro_accuracy: f64,
    pub classwise: Vec<ClassAccuracy>,
    /// Examples where both gold and predicted decisions are Inquire; BLEU is
    /// computed on these only, so its size must be read alongside BLEU.
    pub mutual_inquire: usize,
    pub mutual_inquire_ids: Vec<String>,
    pub bleu: Option<BleuScores>,
    pub flags: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleQgReport {
    /// Gold-Inquire examples; BLEU is computed on exactly these.
    pub subset: usize,
    pub subset_ids: Vec<String>,
    pub bleu: Option<BleuScores>,
    /// Same references scored against the generator applied to gold spans.
    pub template_ceiling: Option<BleuScores>,
    pub span_f1: Option<f64>,
    /// Examples with span F1 ≤ [`LOW_SPAN_F1`].
    pub low_span_f1: Option<usize>,
    pub flags: Vec<String>,
}

/// Rephrases `span` of `rule` into a question. A span with no words (a
/// lone punctuation token) yields an empty question, which scores zero.
pub fn question_for(
    rule: &RuleDocument,
    span: &Span,
    rephraser: &dyn Rephraser,
) -> Result<String, EvalError> {
    let asked = RephraseRequest::from_span(rule, span).and_then(|r| rephraser.rephrase(&r));
    match asked {
        Ok(q) => Ok(q),
        Err(RephraseError::EmptySpan) => Ok(String::new()),
        Err(e) => Err(e.into()),
    }
}

pub fn end_to_end_from_predictions(
    golds: &[DialogExample],
    preds: &[TurnPrediction],
) -> Result<EndToEndReport, EvalError> {
    if golds.len() != preds.len() {
        return Err(EvalError::LengthMismatch {
            preds: preds.len(),
            golds: golds.len(),
        });
    }
    let gold_d: Vec<Decision> = golds.iter().map(|e| e.decision).collect();
    let pred_d: Vec<Decision> = preds.iter().map(|p| p.decision).collect();
    let (micro, macro_) = micro_macro_accuracy(&pred_d, &gold_d)?;
    let mut ids = Vec::new();
    let (mut cands, mut refs) = (Vec::new(), Vec::new());
    let mut flags = Vec::new();
    for (g, p) in golds.iter().zip(preds) {
        if g.decision == Decision::Inquire && p.decision == Decision::Inquire {
            ids.push(g.id.clone());
            cands.push(tokenize(p.question.as_deref().unwrap_or("")));
            refs.push(tokenize(g.follow_up.as_deref().unwrap_or("")));
        }
    }
    let bleu = if ids.is_empty() {
        flags.push("no mutual-Inquire examples: BLEU not computed".to_string());
        None
    } else {
        Some(BleuScores::compute(&cands, &refs)?)
    };
    Ok(EndToEndReport {
        examples: golds.len(),
        micro_accuracy: micro,
        macro_accuracy: macro_,
        classwise: classwise_accuracy(&pred_d, &gold_d)?,
        mutual_inquire: ids.len(),
        mutual_inquire_ids: ids,
        bleu,
        flags,
    })
}

/// Token-level F1 of two spans; spans in different sentences score 0.
pub fn span_f1(pred: &Span, gold: &Span) -> f64 {
    if pred.sentence != gold.sentence {
        return 0.0;
    }
    let lo = pred.start.max(gold.start);
    let hi = pred.end.min(gold.end);
    if lo > hi {
        return 0.0;
    }
    let overlap = (hi - lo + 1) as f64;
    let p = overlap / (pred.end - pred.start + 1) as f64;
    let r = overlap / (gold.end - gold.start + 1) as f64;
    2.0 * p * r / (p + r)
}

/// Runs `generate` on exactly the gold-Inquire examples. It returns the
/// generated question and, if available, the span it came from.
pub fn oracle_qg_from_generator(
    data: &[LabeledExample],
    rephraser: &dyn Rephraser,
    mut generate: impl FnMut(&LabeledExample) -> Result<(String, Option<Span>), EvalError>,
) -> Result<OracleQgReport, EvalError> {
    let mut ids = Vec::new();
    let (mut cands, mut refs, mut ceiling) = (Vec::new(), Vec::new(), Vec::new());
    let mut f1s = Vec::new();
    for ex in data
        .iter()
        .filter(|e| e.example.decision == Decision::Inquire)
    {
        let (question, span) = generate(ex)?;
        ids.push(ex.example.id.clone());
        cands.push(tokenize(&question));
        refs.push(tokenize(ex.example.follow_up.as_deref().unwrap_or("")));
        if let Some(gold) = &ex.span {
            ceiling.push(tokenize(&question_for(&ex.example.rule, gold, rephraser)?));
            if let Some(pred) = &span {
                f1s.push(span_f1(pred, gold));
            }
        }
    }
    if ids.is_empty() {
        return Ok(OracleQgReport {
            subset: 0,
            subset_ids: ids,
            bleu: None,
            template_ceiling: None,
            span_f1: None,
            low_span_f1: None,
            flags: vec!["no gold-Inquire examples: nothing to generate".to_string()],
        });
    }
    let template_ceiling = if ceiling.len() == refs.len() {
        Some(BleuScores::compute(&ceiling, &refs)?)
    } else {
        None
    };
    Ok(OracleQgReport {
        subset: ids.len(),
        subset_ids: ids,
        bleu: Some(BleuScores::compute(&cands, &refs)?),
        template_ceiling,
        span_f1: (!f1s.is_empty()).then(|| f1s.iter().sum::<f64>() / f1s.len() as f64),
        low_span_f1: (!f1s.is_empty()).then(|| f1s.iter().filter(|&&f| f <= LOW_SPAN_F1).count()),
        flags: Vec::new(),
    })
}

pub fn predict_all(
    model: &EmtModel,
    data: &[LabeledExample],
) -> Result<Vec<Prediction>, EvalError> {
    data.iter()
        .map(|ex| Ok(model.predict_example(&ex.example)?))
        .collect()
}

/// Macro accuracy over E/C/U with all rule sentences pooled.
pub fn entailment_macro_accuracy(
    data: &[LabeledExample],
    preds: &[Prediction],
) -> Result<f64, EvalError> {
    let mut p: Vec<EntailmentLabel> = Vec::new();
    let mut g: Vec<EntailmentLabel> = Vec::new();
    for (ex, pr) in data.iter().zip(preds) {
        g.extend(&ex.entailment);
        p.extend(&pr.entailment.labels);
    }
    Ok(micro_macro_accuracy(&p, &g)?.1)
}

/// Fraction of gold-Inquire examples whose extracted span lies in the gold
/// span's sentence. `None` without such examples.
pub fn sentence_identification_accuracy(
    data: &[LabeledExample],
    preds: &[Prediction],
) -> Option<f64> {
    let hits: Vec<bool> = data
        .iter()
        .zip(preds)
        .filter(|(ex, _)| ex.example.decision == Decision::Inquire)
        .filter_map(|(ex, p)| ex.span.as_ref().map(|s| s.sentence == p.best_span.sentence))
        .collect();
    (!hits.is_empty()).then(|| hits.iter().filter(|&&h| h).count() as f64 / hits.len() as f64)
}

/// Every metric from one prediction pass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub end_to_end: EndToEndReport,
    pub oracle_qg: OracleQgReport,
    pub entailment_macro: f64,
    pub sentence_identification: Option<f64>,
}

impl Evaluation {
    /// Human-readable summary.
    pub fn table(&self) -> String {
        let e = &self.end_to_end;
        let pct = |x: f64| format!("{:6.2}", 100.0 * x);
        let opt = |x: Option<f64>| x.map_or_else(|| "   n/a".to_string(), pct);
        let mut out = String::new();
        out.push_str("protocol     | micro  | macro  | BLEU1  | BLEU4  | subset\n");
        out.push_str(&format!(
            "end-to-end   | {} | {} | {} | {} | {}\n",
            pct(e.micro_accuracy),
            pct(e.macro_accuracy),
            opt(e.bleu.map(|b| b.bleu1)),
            opt(e.bleu.map(|b| b.bleu4)),
            e.mutual_inquire
        ));
        let o = &self.oracle_qg;
        out.push_str(&format!(
            "oracle-qg    |        |        | {} | {} | {}\n",
            opt(o.bleu.map(|b| b.bleu1)),
            opt(o.bleu.map(|b| b.bleu4)),
            o.subset
        ));
        out.push_str("\nclass        | acc    | n\n");
        for c in &e.classwise {
            out.push_str(&format!(
                "{:<12} | {} | {}\n",
                c.label,
                opt(c.accuracy),
                c.total
            ));
        }
        out.push_str(&format!(
            "\nentailment macro accuracy  {}\n",
            pct(self.entailment_macro)
        ));
        out.push_str(&format!(
            "sentence identification    {}\n",
            opt(self.sentence_identification)
        ));
        if let (Some(f1), Some(low)) = (o.span_f1, o.low_span_f1) {
            out.push_str(&format!(
                "span F1                    {}  ({low} at or below {LOW_SPAN_F1})\n",
                pct(f1)
            ));
        }
        for flag in e.flags.iter().chain(&o.flags) {
            out.push_str(&format!("note: {flag}\n"));
        }
        out
    }

    /// Per-class accuracies as delimited text, for plotting.
    pub fn classwise_tsv(&self) -> String {
        let mut out = String::from("label\tcorrect\ttotal\taccuracy\n");
        for c in &self.end_to_end.classwise {
            let acc = c.accuracy.map_or_else(String::new, |a| format!("{a:.6}"));
            out.push_str(&format!("{}\t{}\t{}\t{acc}\n", c.label, c.correct, c.total));
        }
        out
    }
}

pub fn evaluate(
    model: &EmtModel,
    data: &[LabeledExample],
    rephraser: &dyn Rephraser,
) -> Result<Evaluation, EvalError> {
    let preds = predict_all(model, data)?;
    let turns = preds
        .iter()
        .zip(data)
        .map(|(p, ex)| {
            let question = match p.inquiry() {
                Some(span) => Some(question_for(&ex.example.rule, span, rephraser)?),
                None => None,
            };
            Ok(TurnPrediction {
                decision: p.decision,
                question,
            })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    let examples: Vec<DialogExample> = data.iter().map(|e| e.example.clone()).collect();
    let end_to_end = end_to_end_from_predictions(&examples, &turns)?;
    let by_id: std::collections::HashMap<&str, &Prediction> = data
        .iter()
        .zip(&preds)
        .map(|(ex, p)| (ex.example.id.as_str(), p))
        .collect();
    let oracle_qg = oracle_qg_from_generator(data, rephraser, |ex| {
        let p = by_id[ex.example.id.as_str()];
        Ok((
            question_for(&ex.example.rule, &p.best_span, rephraser)?,
            Some(p.best_span.clone()),
        ))
    })?;
    Ok(Evaluation {
        end_to_end,
        oracle_qg,
        entailment_macro: entailment_macro_accuracy(data, &preds)?,
        sentence_identification: sentence_identification_accuracy(data, &preds),
    })
}

pub fn end_to_end_eval(
    model: &EmtModel,
    data: &[LabeledExample],
    rephraser: &dyn Rephraser,
) -> Result<EndToEndReport, EvalError> {
    Ok(evaluate(model, data, rephraser)?.end_to_end)
}

pub fn oracle_qg_eval(
    model: &EmtModel,
    data: &[LabeledExample],
    rephraser: &dyn Rephraser,
) -> Result<OracleQgReport, EvalError> {
    oracle_qg_from_generator(data, rephraser, |ex| {
        let p = model.predict_example(&ex.example)?;
        Ok((
            question_for(&ex.example.rule, &p.best_span, rephraser)?,
            Some(p.best_span),
        ))
    })
}

pub fn entailment_accuracy(model: &EmtModel, data: &[LabeledExample]) -> Result<f64, EvalError> {
    entailment_macro_accuracy(data, &predict_all(model, data)?)
}
