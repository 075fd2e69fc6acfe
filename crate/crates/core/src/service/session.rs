use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::trace::{
    SentenceTrace, SessionTrace, SpanTrace, StatusTrace, TurnTrace, SCHEMA_VERSION,
};
use crate::corpus::{Answer, Decision, QaTurn, RuleDocument, Span, UnparseableAnswer};
use crate::model::{EmtModel, ModelError};
use crate::rephrase::{RephraseError, RephraseRequest, Rephraser};

pub const DEFAULT_MAX_TURNS: usize = 8;

#[derive(Debug, thiserror::Error)]
pub enum DialogError {
    #[error("{0}")]
    Validation(String),
    #[error("session is {0} and accepts no further answers")]
    Closed(&'static str),
    #[error(transparent)]
    Unparseable(#[from] UnparseableAnswer),
    #[error("no session {0:?}")]
    NotFound(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Rephrase(#[from] RephraseError),
}

impl DialogError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            DialogError::Validation(_) => "validation_error",
            DialogError::Closed(_) => "session_closed",
            DialogError::Unparseable(_) => "unparseable_answer",
            DialogError::NotFound(_) => "session_not_found",
            DialogError::Model(_) | DialogError::Rephrase(_) => "internal_error",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "lowercase")]
pub enum SessionStatus {
    Active,
    Concluded { decision: Decision },
    Aborted { reason: String },
}

impl SessionStatus {
    fn name(&self) -> &'static str {
        match self {
            SessionStatus::Active => "active",
            SessionStatus::Concluded { .. } => "concluded",
            SessionStatus::Aborted { .. } => "aborted",
        }
    }
}

/// What one turn produced: a final decision, a question, or an abort.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TurnResult {
    pub session_id: String,
    pub turn: usize,
    pub status: SessionStatus,
    pub decision: Decision,
    /// The follow-up question awaiting an answer, while active.
    pub question: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Session {
    pub id: String,
    pub rule: RuleDocument,
    pub scenario: String,
    pub question: String,
    pub history: Vec<QaTurn>,
    pub status: SessionStatus,
    pub turns: Vec<TurnTrace>,
}

impl Session {
    pub fn trace(&self) -> SessionTrace {
        SessionTrace {
            schema_version: SCHEMA_VERSION,
            session_id: self.id.clone(),
            rule_text: self.rule.raw.clone(),
            sentences: SentenceTrace::all(&self.rule),
            scenario: self.scenario.clone(),
            question: self.question.clone(),
            status: match &self.status {
                SessionStatus::Active => StatusTrace::Active,
                SessionStatus::Concluded { decision } => StatusTrace::Concluded {
                    decision: *decision,
                },
                SessionStatus::Aborted { reason } => StatusTrace::Aborted {
                    reason: reason.clone(),
                },
            },
            turns: self.turns.clone(),
        }
    }

    /// Question waiting for an answer.
    pub fn pending_question(&self) -> Option<&str> {
        match self.status {
            SessionStatus::Active => self.turns.last().and_then(|t| t.question.as_deref()),
            _ => None,
        }
    }
}

/// Runs dialogs against one frozen model.
pub struct DialogEngine {
    model: Arc<EmtModel>,
    rephraser: Box<dyn Rephraser>,
    max_turns: usize,
}

impl DialogEngine {
    pub fn new(model: Arc<EmtModel>, rephraser: Box<dyn Rephraser>, max_turns: usize) -> Self {
        Self {
            model,
            rephraser,
            max_turns: max_turns.max(1),
        }
    }

    pub fn model(&self) -> &EmtModel {
        &self.model
    }

    pub fn max_turns(&self) -> usize {
        self.max_turns
    }

    /// Validates the inputs and runs the first turn with empty history.
    pub fn start(
        &self,
        id: String,
        rule_text: &str,
        scenario: &str,
        question: &str,
    ) -> Result<(Session, TurnResult), DialogError> {
        if question.trim().is_empty() {
            return Err(DialogError::Validation("question is empty".into()));
        }
        let rule = RuleDocument::parse(rule_text)
            .map_err(|_| DialogError::Validation("rule text is empty".into()))?;
        let mut session = Session {
            id,
            rule,
            scenario: scenario.to_string(),
            question: question.to_string(),
            history: Vec::new(),
            status: SessionStatus::Active,
            turns: Vec::new(),
        };
        let result = self.run_turn(&mut session)?;
        Ok((session, result))
    }

    /// Records `answer` to the pending question and runs the next turn.
    pub fn step(&self, session: &mut Session, answer: Answer) -> Result<TurnResult, DialogError> {
        if session.status != SessionStatus::Active {
            return Err(DialogError::Closed(session.status.name()));
        }
        let last = session
            .turns
            .last_mut()
            .expect("an active session has run a turn");
        let asked = last
            .question
            .clone()
            .expect("an active session is awaiting an answer");
        last.answer = Some(answer);
        session.history.push(QaTurn::new(asked, answer));
        self.run_turn(session)
    }

    /// Like [`DialogEngine::step`], parsing a free-text answer first.
    pub fn step_text(
        &self,
        session: &mut Session,
        answer: &str,
    ) -> Result<TurnResult, DialogError> {
        if session.status != SessionStatus::Active {
            return Err(DialogError::Closed(session.status.name()));
        }
        self.step(session, answer.parse()?)
    }

    fn ask(&self, rule: &RuleDocument, span: &Span) -> Result<String, DialogError> {
        match RephraseRequest::from_span(rule, span).and_then(|r| self.rephraser.rephrase(&r)) {
            Ok(q) => Ok(q),
            // A punctuation-only span: ask about its whole sentence instead.
            Err(RephraseError::EmptySpan) => {
                let text = &rule.sentences[span.sentence].text;
                Ok(self
                    .rephraser
                    .rephrase(&RephraseRequest::new(text, text, &rule.raw)?)?)
            }
            Err(e) => Err(e.into()),
        }
    }

    fn run_turn(&self, session: &mut Session) -> Result<TurnResult, DialogError> {
        let p = self.model.predict(
            &session.rule,
            &session.question,
            &session.scenario,
            &session.history,
        )?;
        let turn = session.turns.len() + 1;
        let (span, question) = match p.inquiry() {
            Some(span) => (
                Some(SpanTrace::new(&session.rule, span)),
                Some(self.ask(&session.rule, span)?),
            ),
            None => (None, None),
        };
        session.status = match p.decision {
            Decision::Inquire if turn >= self.max_turns => SessionStatus::Aborted {
                reason: format!(
                    "still inquiring after {turn} turns (limit {})",
                    self.max_turns
                ),
            },
            Decision::Inquire => SessionStatus::Active,
            d => SessionStatus::Concluded { decision: d },
        };
        session.turns.push(TurnTrace {
            turn,
            decision: p.decision,
            decision_probabilities: p.decision_probabilities,
            entailment: p.entailment.probabilities.clone(),
            gates: p.gates.clone(),
            span,
            question: question.clone(),
            answer: None,
        });
        Ok(TurnResult {
            session_id: session.id.clone(),
            turn,
            decision: p.decision,
            question: (session.status == SessionStatus::Active)
                .then_some(question)
                .flatten(),
            status: session.status.clone(),
        })
    }
}
