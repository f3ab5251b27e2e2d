//! Domain types shared by the engine, the simulator and the service.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{self, Decision, MarginTracker};

/// Number of candidate intents (digits 0-9).
pub const NUM_INTENTS: usize = 10;
/// Number of meanings an action can convey.
pub const NUM_MEANINGS: usize = 2;
/// Digits in a PIN; identifying the last one closes the session.
pub const PIN_LENGTH: usize = 4;
/// Upper bound on buttons per session; known-button sessions hold one prior
/// point per button.
pub const MAX_BUTTONS: u32 = 1024;

/// The binary message carried by an action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Meaning {
    Yellow,
    Grey,
}

impl Meaning {
    pub const ALL: [Meaning; NUM_MEANINGS] = [Meaning::Yellow, Meaning::Grey];

    pub fn flipped(self) -> Meaning {
        match self {
            Meaning::Yellow => Meaning::Grey,
            Meaning::Grey => Meaning::Yellow,
        }
    }

    /// +1 for yellow, -1 for grey. Used as the SVM class label.
    pub fn sign(self) -> f64 {
        match self {
            Meaning::Yellow => 1.0,
            Meaning::Grey => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Meaning::Yellow => "yellow",
            Meaning::Grey => "grey",
        }
    }
}

/// What the user did: press a button or produce a continuous feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ActionSignal {
    Discrete { button: u32 },
    Continuous { features: Vec<f64> },
}

impl ActionSignal {
    pub fn button(button: u32) -> Self {
        ActionSignal::Discrete { button }
    }

    pub fn point(x: f64, y: f64) -> Self {
        ActionSignal::Continuous {
            features: vec![x, y],
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, ActionSignal::Discrete { .. })
    }

    pub fn as_button(&self) -> Option<u32> {
        match self {
            ActionSignal::Discrete { button } => Some(*button),
            ActionSignal::Continuous { .. } => None,
        }
    }

    pub fn as_features(&self) -> Option<&[f64]> {
        match self {
            ActionSignal::Discrete { .. } => None,
            ActionSignal::Continuous { features } => Some(features),
        }
    }
}

/// Digit to meaning assignment displayed at one step. Always holds both
/// colors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Meaning>", into = "Vec<Meaning>")]
pub struct ColoringPattern([Meaning; NUM_INTENTS]);

impl ColoringPattern {
    pub fn new(colors: [Meaning; NUM_INTENTS]) -> Result<Self> {
        let yellow = colors.iter().filter(|&&c| c == Meaning::Yellow).count();
        if yellow == 0 || yellow == NUM_INTENTS {
            return Err(Error::InvalidState(
                "a coloring must contain both yellow and grey digits".into(),
            ));
        }
        Ok(ColoringPattern(colors))
    }

    /// Builds a pattern from the set of yellow digits.
    pub fn from_yellow(yellow: &[u8]) -> Result<Self> {
        let mut colors = [Meaning::Grey; NUM_INTENTS];
        for &d in yellow {
            let slot = colors
                .get_mut(d as usize)
                .ok_or_else(|| Error::InvalidState(format!("digit {d} out of range")))?;
            *slot = Meaning::Yellow;
        }
        Self::new(colors)
    }

    pub fn color(&self, digit: u8) -> Meaning {
        self.0[digit as usize]
    }

    pub fn colors(&self) -> &[Meaning; NUM_INTENTS] {
        &self.0
    }

    pub fn flipped(&self) -> Self {
        ColoringPattern(self.0.map(Meaning::flipped))
    }
}

impl TryFrom<Vec<Meaning>> for ColoringPattern {
    type Error = Error;

    fn try_from(v: Vec<Meaning>) -> Result<Self> {
        let colors: [Meaning; NUM_INTENTS] = v.try_into().map_err(|v: Vec<Meaning>| {
            Error::InvalidState(format!("coloring has {} entries, expected 10", v.len()))
        })?;
        Self::new(colors)
    }
}

impl From<ColoringPattern> for Vec<Meaning> {
    fn from(c: ColoringPattern) -> Self {
        c.0.to_vec()
    }
}

/// One user action together with the coloring displayed when it was made.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionEvent {
    pub action: ActionSignal,
    pub coloring: ColoringPattern,
    pub step_index: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// Label implied by a candidate intent; differs between hypotheses.
    Hypothetical,
    /// Label fixed by an earlier decision; shared by every hypothesis.
    Propagated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSignal {
    pub action: ActionSignal,
    pub label: Meaning,
    pub provenance: Provenance,
}

/// The action history labeled as if the user were entering `intent`.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisDataset {
    pub intent: u8,
    pub items: Vec<LabeledSignal>,
}

impl HypothesisDataset {
    /// Items compared without the intent, i.e. the labeling itself.
    pub fn same_labeling(&self, other: &HypothesisDataset) -> bool {
        self.items == other.items
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Buttons whose colors are known; runs elimination through an injected prior.
    KnownButtons,
    /// Uncolored buttons; colors are inferred together with the digit.
    SelfCalButtons,
    /// Points on a 2-D map.
    TouchMap,
    /// Single-stroke sketches, reduced to 17 features and projected to 2-D.
    Sketch,
    /// Sounds, embedded per window and projected to 2-D.
    Audio,
}

impl Mode {
    pub fn is_discrete(self) -> bool {
        matches!(self, Mode::KnownButtons | Mode::SelfCalButtons)
    }
}

/// RBF kernel bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gamma {
    /// `1 / (2 * median^2)` over pairwise distances, recomputed per dataset.
    Median,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Projection {
    PrincipalComponents,
    /// Continuous signals already carry the final 2-D (or lower-level)
    /// coordinates computed outside the engine; used as-is.
    External2D,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    /// Minimum lead of the best hypothesis over every other valid one.
    pub decision_margin: f64,
    /// Steps in a row the same leader must hold the margin.
    pub consecutive_steps: u32,
    /// New points required before a continuous decision.
    pub min_points: u32,
    pub svm_c: f64,
    pub rbf_gamma: Gamma,
    pub cv_folds: u32,
    /// Softmax temperature for the display posterior.
    pub posterior_sharpness: f64,
    pub projection: Projection,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            // With fewer points, leave-one-out noise lets a wrong labeling
            // lead by 0.15 often enough to cost several percent accuracy.
            decision_margin: 0.2,
            consecutive_steps: 2,
            min_points: 10,
            svm_c: 10.0,
            rbf_gamma: Gamma::Median,
            cv_folds: 5,
            posterior_sharpness: 10.0,
            projection: Projection::PrincipalComponents,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(what.to_string()));
        if !(self.decision_margin > 0.0 && self.decision_margin < 1.0) {
            return bad("decision_margin must lie in (0, 1)");
        }
        if self.consecutive_steps < 1 {
            return bad("consecutive_steps must be at least 1");
        }
        if self.min_points < 1 {
            return bad("min_points must be at least 1");
        }
        if !(self.svm_c.is_finite() && self.svm_c > 0.0) {
            return bad("svm_c must be positive");
        }
        if let Gamma::Fixed(g) = self.rbf_gamma {
            if !(g.is_finite() && g > 0.0) {
                return bad("rbf_gamma must be positive");
            }
        }
        if self.cv_folds < 2 {
            return bad("cv_folds must be at least 2");
        }
        if !(self.posterior_sharpness.is_finite() && self.posterior_sharpness > 0.0) {
            return bad("posterior_sharpness must be positive");
        }
        Ok(())
    }
}

/// Complete engine state for one PIN-entry session.
///
/// A plain value: cloning it forks the session, and every engine operation
/// either returns a new state or takes it by exclusive reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub mode: Mode,
    pub button_count: Option<u32>,
    pub pin_slots: Vec<u8>,
    /// Events since the last decision.
    pub history: Vec<InteractionEvent>,
    pub shared_prior: Vec<LabeledSignal>,
    pub posterior: [f64; NUM_INTENTS],
    pub valid: [bool; NUM_INTENTS],
    /// Consistency score per digit from the latest step.
    pub scores: [f64; NUM_INTENTS],
    /// Coloring currently displayed; the next action is interpreted under it.
    pub coloring: ColoringPattern,
    pub rng_seed: u64,
    /// Colorings drawn so far; selects the RNG stream of the next draw.
    pub colorings_drawn: u64,
    /// Index the next event will carry.
    pub step_index: u64,
    /// Dimension shared by every continuous signal of this session.
    pub signal_dim: Option<usize>,
    pub tracker: MarginTracker,
    pub decisions: Vec<Decision>,
    pub config: EngineConfig,
}

impl SessionState {
    /// Starts a session. `button_count` is required in button modes and
    /// ignored otherwise. Known-button sessions color the first half of the
    /// buttons (rounded up) yellow and the rest grey.
    pub fn new(mode: Mode, button_count: Option<u32>, seed: u64, config: EngineConfig) -> Result<Self> {
        config.validate()?;
        let button_count = if mode.is_discrete() {
            let b = button_count.unwrap_or(if mode == Mode::KnownButtons { 2 } else { 9 });
            if !(2..=MAX_BUTTONS).contains(&b) {
                return Err(Error::InvalidButtonCount(b));
            }
            Some(b)
        } else {
            None
        };
        let mut state = SessionState {
            mode,
            button_count,
            pin_slots: Vec::new(),
            history: Vec::new(),
            shared_prior: Vec::new(),
            posterior: [1.0 / NUM_INTENTS as f64; NUM_INTENTS],
            valid: [true; NUM_INTENTS],
            scores: [1.0; NUM_INTENTS],
            // Replaced below by the first policy draw.
            coloring: ColoringPattern::from_yellow(&[0])?,
            rng_seed: seed,
            colorings_drawn: 0,
            step_index: 0,
            signal_dim: None,
            tracker: MarginTracker::default(),
            decisions: Vec::new(),
            config,
        };
        if mode == Mode::KnownButtons {
            let b = button_count.unwrap_or(2);
            let mapping: Vec<Meaning> = (0..b)
                .map(|i| if i < b.div_ceil(2) { Meaning::Yellow } else { Meaning::Grey })
                .collect();
            state.inject_button_colors(&mapping)?;
        }
        state.coloring = inference::draw_coloring(&mut state)?;
        Ok(state)
    }

    /// Known-button session with an explicit button-to-meaning mapping.
    /// The mapping must use both colors.
    pub fn new_known(mapping: &[Meaning], seed: u64, config: EngineConfig) -> Result<Self> {
        if !(mapping.contains(&Meaning::Yellow) && mapping.contains(&Meaning::Grey)) {
            return Err(Error::InvalidConfig("button mapping needs both colors".into()));
        }
        let b = mapping.len() as u32;
        let mut state = Self::new(Mode::SelfCalButtons, Some(b), seed, config)?;
        state.mode = Mode::KnownButtons;
        state.inject_button_colors(mapping)?;
        Ok(state)
    }

    /// Adds one propagated labeled point per button. Only allowed before the
    /// first event; this is how known colors turn self-calibration into plain
    /// elimination.
    pub fn inject_button_colors(&mut self, mapping: &[Meaning]) -> Result<()> {
        let b = self
            .button_count
            .ok_or_else(|| Error::Precondition("button colors need a button mode".into()))?;
        if mapping.len() as u32 != b {
            return Err(Error::Precondition(format!(
                "mapping covers {} buttons, session has {b}",
                mapping.len()
            )));
        }
        if !self.history.is_empty() || !self.pin_slots.is_empty() {
            return Err(Error::Precondition("prior must be injected before the first event".into()));
        }
        self.shared_prior
            .extend(mapping.iter().enumerate().map(|(i, &label)| LabeledSignal {
                action: ActionSignal::button(i as u32),
                label,
                provenance: Provenance::Propagated,
            }));
        Ok(())
    }

    pub fn is_complete(&self) -> bool {
        self.pin_slots.len() >= PIN_LENGTH
    }

    /// Colors the session has established for each button so far; `None`
    /// for buttons never involved in a decision.
    pub fn button_colors(&self) -> Option<Vec<Option<Meaning>>> {
        let b = self.button_count?;
        let mut colors = vec![None; b as usize];
        for item in &self.shared_prior {
            if let Some(button) = item.action.as_button() {
                if let Some(slot) = colors.get_mut(button as usize) {
                    *slot = Some(item.label);
                }
            }
        }
        Some(colors)
    }

    /// Checks every structural invariant. Used after deserializing untrusted
    /// state and by property tests.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidState(msg));
        self.config.validate()?;
        if self.mode.is_discrete() != self.button_count.is_some() {
            return bad("button_count must be set exactly in button modes".into());
        }
        if let Some(b) = self.button_count {
            if !(2..=MAX_BUTTONS).contains(&b) {
                return bad(format!("button_count {b} outside 2..={MAX_BUTTONS}"));
            }
        }
        if self.pin_slots.len() > PIN_LENGTH {
            return bad("more than four PIN digits".into());
        }
        if self.pin_slots.iter().any(|&d| d as usize >= NUM_INTENTS) {
            return bad("PIN digit out of range".into());
        }
        let sum: f64 = self.posterior.iter().sum();
        if self.posterior.iter().any(|p| !p.is_finite() || *p < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return bad(format!("posterior must be a distribution (sum {sum})"));
        }
        if self.mode.is_discrete() {
            for d in 0..NUM_INTENTS {
                if !self.valid[d] && self.posterior[d] != 0.0 {
                    return bad(format!("invalid digit {d} carries posterior mass"));
                }
            }
        }
        if self.scores.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return bad("scores must lie in [0, 1]".into());
        }
        let mut last: Option<u64> = None;
        for e in &self.history {
            if last.is_some_and(|l| e.step_index <= l) || e.step_index >= self.step_index {
                return bad("event step indices must increase".into());
            }
            last = Some(e.step_index);
        }
        let signals = self
            .shared_prior
            .iter()
            .map(|s| &s.action)
            .chain(self.history.iter().map(|e| &e.action));
        for a in signals {
            inference::check_signal(self, a)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_start() {
        let s = SessionState::new(Mode::SelfCalButtons, Some(9), 7, EngineConfig::default()).unwrap();
        assert_eq!(s.posterior, [0.1; 10]);
        assert_eq!(s.valid, [true; 10]);
        assert!(s.history.is_empty() && s.shared_prior.is_empty());
    }

    #[test]
    fn known_session_has_both_colors() {
        let s = SessionState::new(Mode::KnownButtons, Some(2), 1, EngineConfig::default()).unwrap();
        let yellow = s.coloring.colors().iter().filter(|&&c| c == Meaning::Yellow).count();
        assert!(yellow >= 1 && yellow <= 9);
        assert_eq!(s.button_colors().unwrap(), vec![Some(Meaning::Yellow), Some(Meaning::Grey)]);
    }

    #[test]
    fn single_button_rejected() {
        let err = SessionState::new(Mode::SelfCalButtons, Some(1), 0, EngineConfig::default());
        assert_eq!(err.unwrap_err(), Error::InvalidButtonCount(1));
    }

    #[test]
    fn button_count_is_capped() {
        assert!(SessionState::new(Mode::KnownButtons, Some(MAX_BUTTONS), 0, EngineConfig::default()).is_ok());
        let err = SessionState::new(Mode::KnownButtons, Some(MAX_BUTTONS + 1), 0, EngineConfig::default());
        assert_eq!(err.unwrap_err(), Error::InvalidButtonCount(MAX_BUTTONS + 1));
    }

    #[test]
    fn bad_config_rejected() {
        let cfg = EngineConfig {
            svm_c: -1.0,
            ..EngineConfig::default()
        };
        assert!(matches!(
            SessionState::new(Mode::TouchMap, None, 0, cfg),
            Err(Error::InvalidConfig(_))
        ));
        let cfg = EngineConfig {
            cv_folds: 1,
            ..EngineConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn monochrome_coloring_rejected() {
        assert!(ColoringPattern::new([Meaning::Grey; 10]).is_err());
        assert!(ColoringPattern::try_from(vec![Meaning::Grey; 9]).is_err());
        let c = ColoringPattern::from_yellow(&[1, 3, 4, 5, 6]).unwrap();
        assert_eq!(c.color(1), Meaning::Yellow);
        assert_eq!(c.color(0), Meaning::Grey);
    }
}
