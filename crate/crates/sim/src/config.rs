//! Harness configuration: TOML files, seed ranges and per-mode default users.

use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use selfcal_core::signals::MAX_SAMPLE_RATE;
use selfcal_core::{EngineConfig, Meaning, Mode, MAX_BUTTONS, PIN_LENGTH};

use crate::scenario::{ScenarioSetup, DEFAULT_STEP_BUDGET};
use crate::user::{PointSampler, Shape, SimulatedUser, UserKind};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("invalid config file: {0}")]
    Toml(String),
    #[error("invalid engine config: {0}")]
    Engine(String),
    #[error("invalid seed range {0:?}: expected N or A..B with A <= B")]
    SeedRange(String),
    #[error("invalid PIN {0:?}: expected {PIN_LENGTH} digits")]
    Pin(String),
    #[error("invalid user: {0}")]
    User(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub max_steps_per_digit: usize,
    pub button_count: Option<u32>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            max_steps_per_digit: DEFAULT_STEP_BUDGET,
            button_count: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub engine: EngineConfig,
    /// Overrides the mode's default user.
    pub user: Option<UserKind>,
    pub run: RunConfig,
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: SimConfig = toml::from_str(text).map_err(|e| ConfigError::Toml(e.to_string()))?;
        cfg.engine.validate().map_err(|e| ConfigError::Engine(e.to_string()))?;
        if cfg.run.max_steps_per_digit == 0 {
            return Err(ConfigError::Toml("max_steps_per_digit must be at least 1".into()));
        }
        if let Some(user) = &cfg.user {
            check_user(user)?;
        }
        Ok(cfg)
    }
}

fn check_user(user: &UserKind) -> Result<(), ConfigError> {
    match user {
        UserKind::Button { mapping } => {
            if !Meaning::ALL.iter().all(|m| mapping.contains(m)) {
                return Err(ConfigError::User("button mapping needs both colors".into()));
            }
            if mapping.len() > MAX_BUTTONS as usize {
                return Err(ConfigError::User(format!("at most {MAX_BUTTONS} buttons")));
            }
        }
        UserKind::Map {
            color_map,
            sampler,
            margin,
        } => {
            if color_map.normal == [0.0, 0.0] || !margin.is_finite() || *margin < 0.0 {
                return Err(ConfigError::User("degenerate color map".into()));
            }
            let ok = match sampler {
                PointSampler::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
                PointSampler::Gaussians { centers, sd } => {
                    !centers.is_empty()
                        && centers.iter().flatten().all(|v| v.is_finite())
                        && sd.iter().all(|s| s.is_finite() && *s > 0.0)
                }
            };
            if !ok {
                return Err(ConfigError::User("degenerate point sampler".into()));
            }
        }
        UserKind::AdversarialMap { margin } if !(0.0..1.0).contains(margin) => {
            return Err(ConfigError::User("margin must lie in [0, 1)".into()));
        }
        UserKind::Audio { sample_rate, .. } if !(1..=MAX_SAMPLE_RATE).contains(sample_rate) => {
            return Err(ConfigError::User(format!("sample rate must lie in 1..={MAX_SAMPLE_RATE}")));
        }
        _ => {}
    }
    Ok(())
}

/// `"7"` or `"0..99"`, both ends inclusive.
pub fn parse_seed_range(text: &str) -> Result<RangeInclusive<u64>, ConfigError> {
    let bad = || ConfigError::SeedRange(text.to_string());
    let text = text.trim();
    let (a, b) = match text.split_once("..") {
        Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?),
        None => {
            let v = text.parse().map_err(|_| bad())?;
            (v, v)
        }
    };
    if a > b {
        return Err(bad());
    }
    Ok(a..=b)
}

pub fn parse_pin(text: &str) -> Result<[u8; PIN_LENGTH], ConfigError> {
    let digits: Vec<u8> = text
        .chars()
        .map(|c| c.to_digit(10).map(|d| d as u8))
        .collect::<Option<_>>()
        .ok_or_else(|| ConfigError::Pin(text.to_string()))?;
    digits.try_into().map_err(|_| ConfigError::Pin(text.to_string()))
}

/// Engine seed for a run; kept apart from the user's seed so the two random
/// streams are unrelated.
pub fn engine_seed(run_seed: u64) -> u64 {
    run_seed.wrapping_add(0x9E37_79B9_7F4A_7C15)
}

pub fn random_pin(run_seed: u64) -> [u8; PIN_LENGTH] {
    let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
    rng.set_stream(1);
    std::array::from_fn(|_| rng.random_range(0..10))
}

/// The mode's default user for a run.
pub fn default_user(mode: Mode, button_count: Option<u32>, run_seed: u64) -> UserKind {
    match mode {
        Mode::KnownButtons => {
            let b = button_count.unwrap_or(2);
            UserKind::Button {
                mapping: (0..b)
                    .map(|i| if i < b.div_ceil(2) { Meaning::Yellow } else { Meaning::Grey })
                    .collect(),
            }
        }
        Mode::SelfCalButtons => {
            let b = button_count.unwrap_or(9) as usize;
            let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
            rng.set_stream(2);
            let mut mapping: Vec<Meaning> = (0..b)
                .map(|_| if rng.random() { Meaning::Yellow } else { Meaning::Grey })
                .collect();
            // Both colors must be present.
            if !mapping.contains(&Meaning::Yellow) {
                mapping[0] = Meaning::Yellow;
            }
            if !mapping.contains(&Meaning::Grey) {
                mapping[b - 1] = Meaning::Grey;
            }
            UserKind::Button { mapping }
        }
        Mode::TouchMap => SimulatedUser::half_plane([0; PIN_LENGTH], 0).kind,
        Mode::Sketch => UserKind::Sketch {
            yellow: Shape::Circle,
            grey: Shape::Zigzag,
        },
        Mode::Audio => UserKind::Audio {
            yellow_hz: 220.0,
            grey_hz: 880.0,
            sample_rate: 8_000,
        },
    }
}

/// User and engine setup for one seeded run.
pub fn build_run(
    mode: Mode,
    cfg: &SimConfig,
    pin: Option<[u8; PIN_LENGTH]>,
    run_seed: u64,
) -> (SimulatedUser, ScenarioSetup) {
    let kind = cfg
        .user
        .clone()
        .unwrap_or_else(|| default_user(mode, cfg.run.button_count, run_seed));
    let pin = pin.unwrap_or_else(|| random_pin(run_seed));
    let mut setup = ScenarioSetup::new(mode, engine_seed(run_seed));
    setup.config = cfg.engine.clone();
    setup.button_count = cfg.run.button_count;
    setup.max_steps_per_digit = cfg.run.max_steps_per_digit;
    (SimulatedUser::new(kind, pin, run_seed), setup)
}
