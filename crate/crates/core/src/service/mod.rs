//! Interactive dialogs over a frozen model: the per-session state machine,
//! a concurrent session manager, the versioned trace schema and the HTTP
//! session API.

mod http;
mod manager;
mod session;
mod trace;

pub use http::{router, serve, AnswerRequest, ApiError, CreateSessionRequest, CreatedSession};
pub use manager::SessionManager;
pub use session::{
    DialogEngine, DialogError, Session, SessionStatus, TurnResult, DEFAULT_MAX_TURNS,
};
pub use trace::{SentenceTrace, SessionTrace, SpanTrace, TurnTrace, SCHEMA_VERSION};

#[cfg(test)]
mod tests;
