//! Closed-loop runs of a simulated user against the engine.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use selfcal_core::consistency::unsup_baseline;
use selfcal_core::inference::{project_session, Decision};
use selfcal_core::{EngineConfig, InteractionEvent, Mode, SessionState, NUM_INTENTS, PIN_LENGTH};

use crate::user::{SimulatedUser, UserKind};

pub const DEFAULT_STEP_BUDGET: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSetup {
    pub mode: Mode,
    pub button_count: Option<u32>,
    pub engine_seed: u64,
    pub config: EngineConfig,
    pub max_steps_per_digit: usize,
    /// PIN slots to attempt, at most four.
    pub digits: usize,
    /// Also score the cluster-first baseline on each digit's events.
    pub with_baseline: bool,
}

impl ScenarioSetup {
    pub fn new(mode: Mode, engine_seed: u64) -> Self {
        ScenarioSetup {
            mode,
            button_count: None,
            engine_seed,
            config: EngineConfig::default(),
            max_steps_per_digit: DEFAULT_STEP_BUDGET,
            digits: PIN_LENGTH,
            with_baseline: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DigitOutcome {
    pub slot: usize,
    pub target: u8,
    pub decided: Option<u8>,
    pub clicks: usize,
    pub correct: bool,
    pub budget_exhausted: bool,
    /// Baseline answer on the same events, when requested.
    pub baseline: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub mode: Mode,
    pub pin: [u8; PIN_LENGTH],
    pub engine_seed: u64,
    pub digits: Vec<DigitOutcome>,
    pub events: Vec<InteractionEvent>,
    pub decisions: Vec<Decision>,
    pub final_valid: [bool; NUM_INTENTS],
    pub final_scores: [f64; NUM_INTENTS],
    pub color_map: String,
    pub error: Option<String>,
    pub wall_clock_ms: f64,
}

impl ScenarioReport {
    pub fn all_correct(&self) -> bool {
        self.digits.len() == PIN_LENGTH && self.digits.iter().all(|d| d.correct)
    }
}

fn describe(kind: &UserKind) -> String {
    serde_json::to_string(kind).unwrap_or_default()
}

pub fn start_session(user: &SimulatedUser, setup: &ScenarioSetup) -> selfcal_core::Result<SessionState> {
    match (&user.kind, setup.mode) {
        (UserKind::Button { mapping }, Mode::KnownButtons) => {
            SessionState::new_known(mapping, setup.engine_seed, setup.config.clone())
        }
        (UserKind::Button { mapping }, Mode::SelfCalButtons) => SessionState::new(
            setup.mode,
            Some(setup.button_count.unwrap_or(mapping.len() as u32)),
            setup.engine_seed,
            setup.config.clone(),
        ),
        _ => SessionState::new(setup.mode, setup.button_count, setup.engine_seed, setup.config.clone()),
    }
}

/// Runs the user until the PIN is entered, a budget runs out or the engine
/// errors. Returns the report and the final session.
pub fn run_with_session(user: &mut SimulatedUser, setup: &ScenarioSetup) -> (ScenarioReport, Option<SessionState>) {
    let started = Instant::now();
    let mut report = ScenarioReport {
        mode: setup.mode,
        pin: user.pin,
        engine_seed: setup.engine_seed,
        digits: Vec::new(),
        events: Vec::new(),
        decisions: Vec::new(),
        final_valid: [true; NUM_INTENTS],
        final_scores: [1.0; NUM_INTENTS],
        color_map: describe(&user.kind),
        error: None,
        wall_clock_ms: 0.0,
    };
    let mut session = match start_session(user, setup) {
        Ok(s) => s,
        Err(e) => {
            report.error = Some(e.to_string());
            return (report, None);
        }
    };
    'slots: for slot in 0..setup.digits.min(PIN_LENGTH) {
        let target = user.pin[slot];
        let mut clicks = 0;
        loop {
            if clicks >= setup.max_steps_per_digit {
                report.digits.push(outcome(slot, target, None, clicks, true, &session, setup));
                break 'slots;
            }
            let action = user.act(&session.coloring, slot);
            // Kept so the baseline sees the events that led to the decision.
            let before = session.clone();
            let pending = InteractionEvent {
                action: action.clone(),
                coloring: session.coloring,
                step_index: session.step_index,
            };
            match session.apply(action) {
                Ok(decision) => {
                    clicks += 1;
                    report.events.push(pending.clone());
                    if let Some(d) = decision {
                        let mut at_decision = before;
                        at_decision.history.push(pending);
                        report.digits.push(outcome(slot, target, Some(d.digit), clicks, false, &at_decision, setup));
                        report.decisions.push(d);
                        continue 'slots;
                    }
                }
                Err(e) => {
                    report.error = Some(e.to_string());
                    report.digits.push(outcome(slot, target, None, clicks, false, &session, setup));
                    break 'slots;
                }
            }
        }
    }
    report.final_valid = session.valid;
    report.final_scores = session.scores;
    report.wall_clock_ms = started.elapsed().as_secs_f64() * 1e3;
    (report, Some(session))
}

pub fn run_scenario(user: &mut SimulatedUser, setup: &ScenarioSetup) -> ScenarioReport {
    run_with_session(user, setup).0
}

fn outcome(
    slot: usize,
    target: u8,
    decided: Option<u8>,
    clicks: usize,
    budget_exhausted: bool,
    state: &SessionState,
    setup: &ScenarioSetup,
) -> DigitOutcome {
    let baseline = if setup.with_baseline && !state.mode.is_discrete() && state.history.len() >= 2 {
        // The baseline only clusters this digit's own events.
        let mut fresh = state.clone();
        fresh.shared_prior.clear();
        project_session(&fresh)
            .ok()
            .and_then(|coords| unsup_baseline(&coords, &fresh.history))
    } else {
        None
    };
    DigitOutcome {
        slot,
        target,
        decided,
        clicks,
        correct: decided == Some(target),
        budget_exhausted,
        baseline,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use selfcal_core::Meaning;

    #[test]
    fn known_buttons_enter_pin() {
        let mut user = SimulatedUser::new(
            UserKind::Button {
                mapping: vec![Meaning::Yellow, Meaning::Grey],
            },
            [1, 2, 3, 4],
            5,
        );
        let report = run_scenario(&mut user, &ScenarioSetup::new(Mode::KnownButtons, 5));
        assert!(report.all_correct(), "{report:?}");
        assert!(report.digits.iter().all(|d| d.clicks >= 1));
    }

    #[test]
    fn budget_is_recorded_not_thrown() {
        let mut user = SimulatedUser::new(UserKind::AdversarialButton { buttons: [0, 1, 3, 4] }, [0; 4], 1);
        let mut setup = ScenarioSetup::new(Mode::SelfCalButtons, 1);
        setup.button_count = Some(9);
        setup.max_steps_per_digit = 20;
        let report = run_scenario(&mut user, &setup);
        assert_eq!(report.digits.len(), 1);
        assert!(report.digits[0].budget_exhausted);
        assert_eq!(report.events.len(), 20);
        assert!(report.error.is_none());
    }
}
