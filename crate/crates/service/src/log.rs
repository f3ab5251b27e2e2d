//! Append-only session logs, one JSON record per line, and their replay.

use serde::{Deserialize, Serialize};

use selfcal_core::{ActionSignal, EngineConfig, Error, Meaning, SessionState, NUM_INTENTS};

use crate::wire::{ActionBody, WireMode};

pub const LOG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "lowercase", deny_unknown_fields)]
pub enum LogRecord {
    Header {
        version: u32,
        session_id: String,
        mode: WireMode,
        button_count: Option<u32>,
        seed: u64,
        config: EngineConfig,
    },
    /// An accepted action. `signal` is what the engine consumed, so replay
    /// needs no embedder.
    Action {
        step_index: u64,
        body: ActionBody,
        signal: ActionSignal,
        coloring: [Meaning; NUM_INTENTS],
        scores: [f64; NUM_INTENTS],
        posterior: [f64; NUM_INTENTS],
        valid: [bool; NUM_INTENTS],
    },
    Decision {
        step_index: u64,
        digit: u8,
        scores: [f64; NUM_INTENTS],
    },
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ReplayError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("log does not start with a header")]
    MissingHeader,
    #[error("unsupported log version {0}")]
    Version(u32),
    #[error("line {line}: engine rejected the record: {source}")]
    Engine { line: usize, source: Error },
    #[error("line {line}: replay diverged from the log: {what}")]
    Diverged { line: usize, what: String },
}

/// Fresh engine state for a header.
pub fn session_from_header(
    mode: WireMode,
    button_count: Option<u32>,
    seed: u64,
    config: EngineConfig,
) -> Result<SessionState, Error> {
    SessionState::new(
        mode.engine_mode(),
        button_count.or(mode.default_buttons()),
        seed,
        config,
    )
}

pub fn parse_log(text: &str) -> Result<Vec<LogRecord>, ReplayError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| ReplayError::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn to_ndjson(records: &[LogRecord]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("log records serialize") + "\n")
        .collect()
}

/// Runs every action through the engine and checks that colorings, scores
/// and decisions match the log bit for bit. Returns the session id and the
/// final state.
pub fn replay(records: &[LogRecord]) -> Result<(String, WireMode, SessionState), ReplayError> {
    let Some(LogRecord::Header {
        version,
        session_id,
        mode,
        button_count,
        seed,
        config,
    }) = records.first()
    else {
        return Err(ReplayError::MissingHeader);
    };
    if *version != LOG_VERSION {
        return Err(ReplayError::Version(*version));
    }
    let mut state = session_from_header(*mode, *button_count, *seed, config.clone())
        .map_err(|source| ReplayError::Engine { line: 1, source })?;
    let mut pending: Option<(u64, u8, [f64; NUM_INTENTS])> = None;
    for (i, record) in records.iter().enumerate().skip(1) {
        let line = i + 1;
        let diverged = |what: &str| ReplayError::Diverged {
            line,
            what: what.to_string(),
        };
        match record {
            LogRecord::Header { .. } => return Err(diverged("second header")),
            LogRecord::Action {
                step_index,
                signal,
                coloring,
                scores,
                posterior,
                valid,
                ..
            } => {
                if pending.is_some() {
                    return Err(diverged("decision record missing"));
                }
                if *step_index != state.step_index || coloring != state.coloring.colors() {
                    return Err(diverged("step index or coloring"));
                }
                let decision = state
                    .apply(signal.clone())
                    .map_err(|source| ReplayError::Engine { line, source })?;
                if !same_bits(scores, &state.scores) || !same_bits(posterior, &state.posterior) || *valid != state.valid
                {
                    return Err(diverged("scores, posterior or validity"));
                }
                pending = decision.map(|d| (d.step_decided, d.digit, d.scores_at_decision));
            }
            LogRecord::Decision {
                step_index,
                digit,
                scores,
            } => match pending.take() {
                Some((s, d, sc)) if s == *step_index && d == *digit && same_bits(&sc, scores) => {}
                _ => return Err(diverged("decision")),
            },
        }
    }
    if pending.is_some() {
        return Err(ReplayError::Diverged {
            line: records.len(),
            what: "decision record missing".into(),
        });
    }
    Ok((session_id.clone(), *mode, state))
}

fn same_bits(a: &[f64; NUM_INTENTS], b: &[f64; NUM_INTENTS]) -> bool {
    a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_only_log_replays_to_fresh_session() {
        let records = vec![LogRecord::Header {
            version: LOG_VERSION,
            session_id: "s".into(),
            mode: WireMode::Buttons9,
            button_count: None,
            seed: 4,
            config: EngineConfig::default(),
        }];
        let (_, _, state) = replay(&parse_log(&to_ndjson(&records)).unwrap()).unwrap();
        assert_eq!(state, session_from_header(WireMode::Buttons9, None, 4, EngineConfig::default()).unwrap());
    }

    #[test]
    fn empty_or_headless_logs_fail() {
        assert_eq!(replay(&[]).unwrap_err(), ReplayError::MissingHeader);
        assert!(matches!(parse_log("{\"record\":\"nope\"}"), Err(ReplayError::Parse { line: 1, .. })));
    }
}
