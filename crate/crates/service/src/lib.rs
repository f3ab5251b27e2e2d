//! HTTP service exposing engine sessions, with append-only replayable logs.

pub mod app;
pub mod embed;
pub mod log;
pub mod wire;

pub use app::{router, ApiError, AppState, ServiceConfig};
pub use log::{parse_log, replay, LogRecord, ReplayError};
pub use wire::{ActionBody, ActionResponse, CreateSession, WireMode, WireSession};
