//! JSON shapes exchanged with clients.

use serde::{Deserialize, Serialize};

use selfcal_core::signals::{normalize_sketch, sketch_features, Polyline};
use selfcal_core::{ActionSignal, EngineConfig, Error, Meaning, Mode, SessionState, NUM_INTENTS};

/// Session modes as named on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WireMode {
    Known2,
    Buttons9,
    Touch,
    Sketch,
    Audio,
}

impl WireMode {
    pub fn engine_mode(self) -> Mode {
        match self {
            WireMode::Known2 => Mode::KnownButtons,
            WireMode::Buttons9 => Mode::SelfCalButtons,
            WireMode::Touch => Mode::TouchMap,
            WireMode::Sketch => Mode::Sketch,
            WireMode::Audio => Mode::Audio,
        }
    }

    pub fn default_buttons(self) -> Option<u32> {
        match self {
            WireMode::Known2 => Some(2),
            WireMode::Buttons9 => Some(9),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub mode: WireMode,
    #[serde(default)]
    pub button_count: Option<u32>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub config: Option<EngineConfig>,
}

/// One user action as posted by a client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ActionBody {
    Button { button: u32 },
    Point { x: f64, y: f64 },
    Sketch { points: Vec<[f64; 2]> },
    Audio { samples: Vec<f32>, sample_rate: u32 },
}

impl ActionBody {
    pub fn parse(bytes: &[u8]) -> Result<Self, Error> {
        let body: ActionBody = serde_json::from_slice(bytes).map_err(|e| Error::MalformedSignal(e.to_string()))?;
        // Numbers too large for f32 arrive as infinities; they would not
        // survive a trip through the log either.
        let finite = match &body {
            ActionBody::Button { .. } => true,
            ActionBody::Point { x, y } => x.is_finite() && y.is_finite(),
            ActionBody::Sketch { points } => points.iter().flatten().all(|v| v.is_finite()),
            ActionBody::Audio { samples, .. } => samples.iter().all(|v| v.is_finite()),
        };
        if !finite {
            return Err(Error::MalformedSignal("non-finite number".into()));
        }
        Ok(body)
    }

    /// Converts every kind except audio, which needs an embedder.
    pub fn to_signal(&self) -> Result<ActionSignal, Error> {
        match self {
            ActionBody::Button { button } => Ok(ActionSignal::button(*button)),
            ActionBody::Point { x, y } => {
                if !(x.is_finite() && y.is_finite()) {
                    return Err(Error::MalformedSignal("non-finite coordinate".into()));
                }
                Ok(ActionSignal::point(*x, *y))
            }
            ActionBody::Sketch { points } => {
                let stroke = Polyline::new(points.clone())?;
                let features = sketch_features(&normalize_sketch(&stroke)?);
                Ok(ActionSignal::Continuous {
                    features: features.to_vec(),
                })
            }
            ActionBody::Audio { .. } => Err(Error::Precondition("audio needs an embedder".into())),
        }
    }

    /// Whether this kind of body fits the session mode at all.
    pub fn fits(&self, mode: Mode) -> bool {
        matches!(
            (self, mode),
            (ActionBody::Button { .. }, Mode::KnownButtons | Mode::SelfCalButtons)
                | (ActionBody::Point { .. }, Mode::TouchMap)
                | (ActionBody::Sketch { .. }, Mode::Sketch)
                | (ActionBody::Audio { .. }, Mode::Audio)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireSession {
    pub session_id: String,
    pub mode: WireMode,
    pub button_count: Option<u32>,
    pub coloring: [Meaning; NUM_INTENTS],
    pub posterior: [f64; NUM_INTENTS],
    pub valid: [bool; NUM_INTENTS],
    pub pin_slots: Vec<u8>,
    pub step_index: u64,
    pub complete: bool,
    /// Per button: the color established by a decision (or known up front),
    /// `null` while unknown.
    pub button_colors: Option<Vec<Option<Meaning>>>,
}

impl WireSession {
    pub fn new(session_id: &str, mode: WireMode, state: &SessionState) -> Self {
        WireSession {
            session_id: session_id.to_string(),
            mode,
            button_count: state.button_count,
            coloring: *state.coloring.colors(),
            posterior: state.posterior,
            valid: state.valid,
            pin_slots: state.pin_slots.clone(),
            step_index: state.step_index,
            complete: state.is_complete(),
            button_colors: state.button_colors(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionResponse {
    pub session: WireSession,
    pub decision: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}
