//! Hypothesis labeling, elimination, decisions and the per-step engine loop.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::consistency::{consistency_score_with_prior, LabeledPoint};
use crate::error::{Error, Result};
use crate::model::{
    ActionSignal, ColoringPattern, EngineConfig, HypothesisDataset, InteractionEvent, LabeledSignal,
    Meaning, Mode, Projection, Provenance, SessionState, NUM_INTENTS,
};
use crate::signals::{self, SKETCH_FEATURES};

/// A digit identified by the engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub digit: u8,
    pub step_decided: u64,
    pub scores_at_decision: [f64; NUM_INTENTS],
}

/// Labels every event with the color `intent` had when the event happened,
/// after the shared prior.
pub fn hypothesis_dataset(
    history: &[InteractionEvent],
    shared_prior: &[LabeledSignal],
    intent: u8,
) -> HypothesisDataset {
    let items = shared_prior
        .iter()
        .cloned()
        .chain(history.iter().map(|e| LabeledSignal {
            action: e.action.clone(),
            label: e.coloring.color(intent),
            provenance: Provenance::Hypothetical,
        }))
        .collect();
    HypothesisDataset { intent, items }
}

/// One button, one meaning: false as soon as a button carries both labels.
pub fn discrete_consistent(dataset: &HypothesisDataset) -> Result<bool> {
    // Per button: bit 0 = seen yellow, bit 1 = seen grey.
    let mut seen: std::collections::HashMap<u32, u8> = std::collections::HashMap::new();
    for item in &dataset.items {
        let button = item.action.as_button().ok_or_else(|| {
            Error::MixedSignalKinds("continuous signal in a discrete consistency check".into())
        })?;
        let bit = match item.label {
            Meaning::Yellow => 1,
            Meaning::Grey => 2,
        };
        *seen.entry(button).or_insert(0) |= bit;
    }
    Ok(seen.values().all(|&bits| bits != 3))
}

/// Keeps the digits whose displayed color matches the conveyed meaning.
pub fn elim_step(valid: &[bool; NUM_INTENTS], coloring: &ColoringPattern, meaning: Meaning) -> [bool; NUM_INTENTS] {
    std::array::from_fn(|d| valid[d] && coloring.color(d as u8) == meaning)
}

/// Tracks how long the same hypothesis has led by the decision margin.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarginTracker {
    pub leader: Option<u8>,
    pub streak: u32,
}

impl MarginTracker {
    /// Feeds one step of continuous scores; returns the digit once its lead
    /// has held for `consecutive_steps` steps with enough new points.
    pub fn observe(
        &mut self,
        scores: &[f64; NUM_INTENTS],
        valid: &[bool; NUM_INTENTS],
        history_len: usize,
        config: &EngineConfig,
    ) -> Option<u8> {
        let lead = margin_leader(scores, valid)
            .filter(|&(_, margin)| history_len >= config.min_points as usize && margin >= config.decision_margin);
        match lead {
            Some((d, _)) if self.leader == Some(d) => self.streak += 1,
            Some((d, _)) => {
                self.leader = Some(d);
                self.streak = 1;
            }
            None => *self = MarginTracker::default(),
        }
        (self.streak >= config.consecutive_steps).then_some(self.leader).flatten()
    }
}

/// Best valid digit and its lead over the runner-up. `None` on an exact tie
/// for first place or when no digit is valid.
pub fn margin_leader(scores: &[f64; NUM_INTENTS], valid: &[bool; NUM_INTENTS]) -> Option<(u8, f64)> {
    let mut best: Option<usize> = None;
    for d in (0..NUM_INTENTS).filter(|&d| valid[d]) {
        if best.is_none_or(|b| scores[d] > scores[b]) {
            best = Some(d);
        }
    }
    let best = best?;
    let runner_up = (0..NUM_INTENTS)
        .filter(|&d| valid[d] && d != best)
        .map(|d| scores[d])
        .fold(f64::NEG_INFINITY, f64::max);
    if runner_up == scores[best] {
        return None;
    }
    // A lone valid digit leads by its whole score.
    let margin = if runner_up.is_finite() { scores[best] - runner_up } else { scores[best] };
    Some((best as u8, margin))
}

/// Decision rule. Discrete modes decide when exactly one digit survives;
/// continuous modes defer to the margin tracker.
pub fn decide(
    mode: Mode,
    scores: &[f64; NUM_INTENTS],
    valid: &[bool; NUM_INTENTS],
    history_len: usize,
    tracker: &mut MarginTracker,
    config: &EngineConfig,
) -> Result<Option<u8>> {
    let alive: Vec<u8> = (0..NUM_INTENTS as u8).filter(|&d| valid[d as usize]).collect();
    if alive.is_empty() {
        return Err(Error::NoValidHypothesis);
    }
    if mode.is_discrete() {
        return Ok(match alive.as_slice() {
            [d] if history_len > 0 => Some(*d),
            _ => None,
        });
    }
    Ok(tracker.observe(scores, valid, history_len, config))
}

/// Makes the winning hypothesis's labels shared ground truth and clears the
/// history; afterwards every hypothesis dataset is identical.
pub fn propagate_labels(session: &SessionState, decision: &Decision) -> Result<SessionState> {
    if session.history.is_empty() {
        return Err(Error::Precondition("a decision needs at least one event".into()));
    }
    let digit = decision.digit;
    if digit as usize >= NUM_INTENTS || !session.valid[digit as usize] {
        return Err(Error::Precondition(format!("digit {digit} is not a valid hypothesis")));
    }
    let mut next = session.clone();
    let winner = hypothesis_dataset(&next.history, &[], digit);
    next.shared_prior.extend(winner.items.into_iter().map(|mut item| {
        item.provenance = Provenance::Propagated;
        item
    }));
    next.history.clear();
    next.valid = [true; NUM_INTENTS];
    next.scores = [1.0; NUM_INTENTS];
    next.posterior = [1.0 / NUM_INTENTS as f64; NUM_INTENTS];
    next.tracker = MarginTracker::default();
    Ok(next)
}

/// Balanced random split of the valid digits; invalid digits get random
/// colors. The result always contains both colors.
pub fn next_coloring<R: Rng + ?Sized>(valid: &[bool; NUM_INTENTS], rng: &mut R) -> Result<ColoringPattern> {
    let mut alive: Vec<u8> = (0..NUM_INTENTS as u8).filter(|&d| valid[d as usize]).collect();
    if alive.is_empty() {
        return Err(Error::NoValidHypothesis);
    }
    let k = alive.len();
    let yellow_count = if k % 2 == 0 || rng.random_bool(0.5) { k / 2 } else { k.div_ceil(2) };
    alive.shuffle(rng);
    let mut colors = [Meaning::Grey; NUM_INTENTS];
    for (d, c) in colors.iter_mut().enumerate() {
        if !valid[d] && rng.random_bool(0.5) {
            *c = Meaning::Yellow;
        }
    }
    for (rank, &d) in alive.iter().enumerate() {
        colors[d as usize] = if rank < yellow_count { Meaning::Yellow } else { Meaning::Grey };
    }
    if colors.iter().all(|&c| c == colors[0]) {
        // Only reachable with a single valid digit: flip one invalid digit.
        let invalid: Vec<usize> = (0..NUM_INTENTS).filter(|&d| !valid[d]).collect();
        let pick = invalid[rng.random_range(0..invalid.len())];
        colors[pick] = colors[pick].flipped();
    }
    ColoringPattern::new(colors)
}

/// Draws the next coloring from the session's seeded stream.
///
/// Two valid digits that have had opposite colors at every event since the
/// last decision are mirror images: each one's labeling is the other's with
/// the colors swapped, so both stay consistent forever under balanced splits.
/// Such a pair is shown in the same color once to break the tie.
pub(crate) fn draw_coloring(state: &mut SessionState) -> Result<ColoringPattern> {
    let mut rng = ChaCha8Rng::seed_from_u64(state.rng_seed);
    rng.set_stream(state.colorings_drawn);
    state.colorings_drawn += 1;
    let alive: Vec<u8> = (0..NUM_INTENTS as u8).filter(|&d| state.valid[d as usize]).collect();
    if let [a, b] = alive[..] {
        if mirrored(&state.history, a, b) {
            return same_color_pair(a, b, &mut rng);
        }
    }
    next_coloring(&state.valid, &mut rng)
}

/// True when `a` and `b` differed in color at every event of a non-empty
/// history.
pub fn mirrored(history: &[InteractionEvent], a: u8, b: u8) -> bool {
    !history.is_empty() && history.iter().all(|e| e.coloring.color(a) != e.coloring.color(b))
}

fn same_color_pair<R: Rng + ?Sized>(a: u8, b: u8, rng: &mut R) -> Result<ColoringPattern> {
    let shared = if rng.random_bool(0.5) { Meaning::Yellow } else { Meaning::Grey };
    let mut colors: [Meaning; NUM_INTENTS] =
        std::array::from_fn(|_| if rng.random_bool(0.5) { Meaning::Yellow } else { Meaning::Grey });
    colors[a as usize] = shared;
    colors[b as usize] = shared;
    if colors.iter().all(|&c| c == shared) {
        let others: Vec<usize> = (0..NUM_INTENTS).filter(|&d| d != a as usize && d != b as usize).collect();
        colors[others[rng.random_range(0..others.len())]] = shared.flipped();
    }
    ColoringPattern::new(colors)
}

/// Rejects signals whose kind or shape does not fit the session.
pub fn check_signal(state: &SessionState, action: &ActionSignal) -> Result<()> {
    match (action, state.button_count) {
        (ActionSignal::Discrete { button }, Some(b)) => {
            if *button >= b {
                return Err(Error::MalformedSignal(format!("button {button} out of range (0..{b})")));
            }
            Ok(())
        }
        (ActionSignal::Discrete { .. }, None) => {
            Err(Error::MixedSignalKinds("button press in a continuous session".into()))
        }
        (ActionSignal::Continuous { .. }, Some(_)) => {
            Err(Error::MixedSignalKinds("continuous signal in a button session".into()))
        }
        (ActionSignal::Continuous { features }, None) => {
            if features.is_empty() {
                return Err(Error::MalformedSignal("empty feature vector".into()));
            }
            if features.iter().any(|v| !v.is_finite()) {
                return Err(Error::MalformedSignal("non-finite feature".into()));
            }
            if let Some(dim) = state.signal_dim {
                if features.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: features.len(),
                    });
                }
            }
            if state.config.projection == Projection::PrincipalComponents {
                let ok = match state.mode {
                    Mode::TouchMap => features.len() == 2,
                    Mode::Sketch => features.len() == SKETCH_FEATURES,
                    Mode::Audio => features.len() % signals::AUDIO_WINDOWS == 0,
                    Mode::KnownButtons | Mode::SelfCalButtons => false,
                };
                if !ok {
                    return Err(Error::MalformedSignal(format!(
                        "{} features do not fit {:?} mode",
                        features.len(),
                        state.mode
                    )));
                }
            }
            Ok(())
        }
    }
}

/// 2-D coordinates of every continuous signal in the session, prior first,
/// then history. Recomputed from scratch on each call.
pub fn project_session(state: &SessionState) -> Result<Vec<Vec<f64>>> {
    let rows: Vec<&[f64]> = state
        .shared_prior
        .iter()
        .map(|s| &s.action)
        .chain(state.history.iter().map(|e| &e.action))
        .filter_map(ActionSignal::as_features)
        .collect();
    if rows.is_empty() {
        return Ok(Vec::new());
    }
    match (state.mode, state.config.projection) {
        (_, Projection::External2D) | (Mode::TouchMap, _) => Ok(rows.iter().map(|r| r.to_vec()).collect()),
        (Mode::Audio, Projection::PrincipalComponents) => signals::project_trajectories(&rows, signals::AUDIO_WINDOWS),
        (_, Projection::PrincipalComponents) => {
            let projected = signals::project_2d(&rows, &signals::ProjectionMethod::PrincipalComponents)?;
            Ok(projected.into_iter().map(|p| p.to_vec()).collect())
        }
    }
}

/// Softmax of `sharpness * score` over valid digits, zero elsewhere.
pub fn display_posterior(scores: &[f64; NUM_INTENTS], valid: &[bool; NUM_INTENTS], sharpness: f64) -> [f64; NUM_INTENTS] {
    let max = (0..NUM_INTENTS)
        .filter(|&d| valid[d])
        .map(|d| scores[d])
        .fold(f64::NEG_INFINITY, f64::max);
    let mut post = [0.0; NUM_INTENTS];
    if !max.is_finite() {
        return [1.0 / NUM_INTENTS as f64; NUM_INTENTS];
    }
    for d in (0..NUM_INTENTS).filter(|&d| valid[d]) {
        post[d] = (sharpness * (scores[d] - max)).exp();
    }
    let z: f64 = post.iter().sum();
    post.map(|p| p / z)
}

/// Per-digit consistency: 1/0 validity in button modes, cross-validated
/// classifier accuracy on the projected signals otherwise.
pub fn hypothesis_scores(state: &SessionState) -> Result<([f64; NUM_INTENTS], [bool; NUM_INTENTS])> {
    if state.mode.is_discrete() {
        let mut valid = [false; NUM_INTENTS];
        for (d, v) in valid.iter_mut().enumerate() {
            *v = discrete_consistent(&hypothesis_dataset(&state.history, &state.shared_prior, d as u8))?;
        }
        return Ok((valid.map(|v| if v { 1.0 } else { 0.0 }), valid));
    }
    let coords = project_session(state)?;
    let (prior_coords, history_coords) = coords.split_at(state.shared_prior.len());
    let prior: Vec<LabeledPoint<'_>> = prior_coords
        .iter()
        .zip(&state.shared_prior)
        .map(|(p, s)| LabeledPoint::new(p, s.label))
        .collect();
    let scores = std::array::from_fn(|d| {
        let fresh: Vec<LabeledPoint<'_>> = history_coords
            .iter()
            .zip(&state.history)
            .map(|(p, e)| LabeledPoint::new(p, e.coloring.color(d as u8)))
            .collect();
        consistency_score_with_prior(&prior, &fresh, &state.config)
    });
    Ok((scores, [true; NUM_INTENTS]))
}

/// Applies one user action. The input state is left untouched; on error no
/// new state is produced.
pub fn step(session: &SessionState, action: ActionSignal) -> Result<(SessionState, Option<Decision>)> {
    if session.is_complete() {
        return Err(Error::SessionComplete);
    }
    check_signal(session, &action)?;
    let mut next = session.clone();
    if let Some(features) = action.as_features() {
        next.signal_dim.get_or_insert(features.len());
    }
    next.history.push(InteractionEvent {
        action,
        coloring: next.coloring,
        step_index: next.step_index,
    });
    next.step_index += 1;

    let (scores, valid) = hypothesis_scores(&next)?;
    let mut tracker = next.tracker.clone();
    let decided = decide(next.mode, &scores, &valid, next.history.len(), &mut tracker, &next.config)?;
    next.scores = scores;
    next.valid = valid;
    next.tracker = tracker;
    next.posterior = display_posterior(&scores, &valid, next.config.posterior_sharpness);

    let decision = decided.map(|digit| Decision {
        digit,
        step_decided: next.step_index - 1,
        scores_at_decision: scores,
    });
    if let Some(decision) = &decision {
        next = propagate_labels(&next, decision)?;
        next.pin_slots.push(decision.digit);
        next.decisions.push(decision.clone());
    }
    next.coloring = draw_coloring(&mut next)?;
    Ok((next, decision))
}

impl SessionState {
    /// In-place [`step`]; on error the session is unchanged.
    pub fn apply(&mut self, action: ActionSignal) -> Result<Option<Decision>> {
        let (next, decision) = step(self, action)?;
        *self = next;
        Ok(decision)
    }
}
