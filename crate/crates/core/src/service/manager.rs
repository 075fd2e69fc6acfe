use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use super::session::{DialogEngine, DialogError, Session, TurnResult};
use super::trace::SessionTrace;
use crate::corpus::Answer;

/// In-memory sessions over one engine. The map lock is held only to look
/// a session up; each session has its own lock, so turns of different
/// sessions run concurrently and turns of one session are serialized.
pub struct SessionManager {
    engine: DialogEngine,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
    next_id: AtomicU64,
}

impl SessionManager {
    pub fn new(engine: DialogEngine) -> Self {
        Self {
            engine,
            sessions: Mutex::new(HashMap::new()),
            next_id: AtomicU64::new(1),
        }
    }

    pub fn engine(&self) -> &DialogEngine {
        &self.engine
    }

    fn get(&self, id: &str) -> Result<Arc<Mutex<Session>>, DialogError> {
        self.sessions
            .lock()
            .expect("session map lock")
            .get(id)
            .cloned()
            .ok_or_else(|| DialogError::NotFound(id.to_string()))
    }

    pub fn start(
        &self,
        rule_text: &str,
        scenario: &str,
        question: &str,
    ) -> Result<TurnResult, DialogError> {
        let id = format!("s{:08}", self.next_id.fetch_add(1, Ordering::Relaxed));
        let (session, result) = self
            .engine
            .start(id.clone(), rule_text, scenario, question)?;
        self.sessions
            .lock()
            .expect("session map lock")
            .insert(id, Arc::new(Mutex::new(session)));
        Ok(result)
    }

    pub fn answer(&self, id: &str, answer: Answer) -> Result<TurnResult, DialogError> {
        let session = self.get(id)?;
        let mut session = session.lock().expect("session lock");
        self.engine.step(&mut session, answer)
    }

    pub fn answer_text(&self, id: &str, answer: &str) -> Result<TurnResult, DialogError> {
        let session = self.get(id)?;
        let mut session = session.lock().expect("session lock");
        self.engine.step_text(&mut session, answer)
    }

    pub fn trace(&self, id: &str) -> Result<SessionTrace, DialogError> {
        Ok(self.get(id)?.lock().expect("session lock").trace())
    }

    pub fn len(&self) -> usize {
        self.sessions.lock().expect("session map lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every session's trace, for dumping to a file.
    pub fn dump(&self) -> Vec<SessionTrace> {
        let sessions: Vec<_> = self
            .sessions
            .lock()
            .expect("session map lock")
            .values()
            .cloned()
            .collect();
        let mut traces: Vec<SessionTrace> = sessions
            .iter()
            .map(|s| s.lock().expect("session lock").trace())
            .collect();
        traces.sort_by(|a, b| a.session_id.cmp(&b.session_id));
        traces
    }
}
