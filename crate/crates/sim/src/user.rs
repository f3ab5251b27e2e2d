//! Simulated users: a private action-to-meaning mapping and a PIN.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use selfcal_core::signals::{audio_signal, normalize_sketch, sketch_features, AudioClip, Polyline, SpectralEmbedder};
use selfcal_core::{ActionSignal, ColoringPattern, Meaning, PIN_LENGTH};

const MAX_REJECTIONS: usize = 100_000;

/// Yellow on the side where `normal . p + offset < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfPlane {
    pub normal: [f64; 2],
    pub offset: f64,
}

impl HalfPlane {
    /// Left half yellow, right half grey.
    pub const VERTICAL: HalfPlane = HalfPlane {
        normal: [1.0, 0.0],
        offset: 0.0,
    };

    pub fn signed_distance(&self, p: [f64; 2]) -> f64 {
        (self.normal[0] * p[0] + self.normal[1] * p[1] + self.offset) / self.normal[0].hypot(self.normal[1])
    }

    pub fn color(&self, p: [f64; 2]) -> Meaning {
        if self.signed_distance(p) < 0.0 {
            Meaning::Yellow
        } else {
            Meaning::Grey
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PointSampler {
    Uniform { lo: f64, hi: f64 },
    /// Equal-weight mixture with per-axis standard deviations.
    Gaussians { centers: Vec<[f64; 2]>, sd: [f64; 2] },
}

impl PointSampler {
    fn sample(&self, rng: &mut ChaCha8Rng) -> [f64; 2] {
        match self {
            PointSampler::Uniform { lo, hi } => [rng.random_range(*lo..*hi), rng.random_range(*lo..*hi)],
            PointSampler::Gaussians { centers, sd } => {
                let c = centers[rng.random_range(0..centers.len())];
                let nx = Normal::new(0.0, sd[0]).expect("finite sd");
                let ny = Normal::new(0.0, sd[1]).expect("finite sd");
                [c[0] + nx.sample(rng), c[1] + ny.sample(rng)]
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Circle,
    Zigzag,
    Line,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum UserKind {
    /// Clicks a random button among those it colors like the target digit.
    Button { mapping: Vec<Meaning> },
    /// Clicks a point of the required color under a private color map.
    Map {
        color_map: HalfPlane,
        sampler: PointSampler,
        /// Minimum distance from the color boundary; zero allows straddling.
        margin: f64,
    },
    /// One button per (digit 0, digit 1) color combination.
    AdversarialButton { buttons: [u32; 4] },
    /// One map quadrant per (digit 0, digit 1) color combination.
    AdversarialMap { margin: f64 },
    /// Draws one shape for yellow and another for grey, at random scale and
    /// position.
    Sketch { yellow: Shape, grey: Shape },
    /// Hums one pitch for yellow and another for grey.
    Audio { yellow_hz: f32, grey_hz: f32, sample_rate: u32 },
}

#[derive(Debug, Clone)]
pub struct SimulatedUser {
    pub kind: UserKind,
    pub pin: [u8; PIN_LENGTH],
    rng: ChaCha8Rng,
}

impl SimulatedUser {
    pub fn new(kind: UserKind, pin: [u8; PIN_LENGTH], seed: u64) -> Self {
        SimulatedUser {
            kind,
            pin,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn half_plane(pin: [u8; PIN_LENGTH], seed: u64) -> Self {
        Self::new(
            UserKind::Map {
                color_map: HalfPlane::VERTICAL,
                sampler: PointSampler::Uniform { lo: -1.0, hi: 1.0 },
                margin: 0.05,
            },
            pin,
            seed,
        )
    }

    /// The meaning this user wants to convey for `digit` under `coloring`.
    pub fn intended_meaning(&self, coloring: &ColoringPattern, digit: u8) -> Meaning {
        coloring.color(digit)
    }

    /// Produces the action for the PIN slot `slot` under the displayed
    /// coloring.
    pub fn act(&mut self, coloring: &ColoringPattern, slot: usize) -> ActionSignal {
        let digit = self.pin[slot.min(PIN_LENGTH - 1)];
        let meaning = coloring.color(digit);
        let rng = &mut self.rng;
        match &self.kind {
            UserKind::Button { mapping } => {
                let candidates: Vec<u32> = (0..mapping.len() as u32)
                    .filter(|&b| mapping[b as usize] == meaning)
                    .collect();
                ActionSignal::button(candidates[rng.random_range(0..candidates.len())])
            }
            UserKind::Map {
                color_map,
                sampler,
                margin,
            } => {
                let mut last = sampler.sample(rng);
                for _ in 0..MAX_REJECTIONS {
                    let p = sampler.sample(rng);
                    last = p;
                    if color_map.color(p) == meaning && color_map.signed_distance(p).abs() >= *margin {
                        break;
                    }
                }
                ActionSignal::point(last[0], last[1])
            }
            UserKind::AdversarialButton { buttons } => {
                ActionSignal::button(buttons[combination(coloring)])
            }
            UserKind::AdversarialMap { margin } => {
                let (c0, c1) = (coloring.color(0), coloring.color(1));
                let sx = if c0 == Meaning::Yellow { -1.0 } else { 1.0 };
                let sy = if c1 == Meaning::Yellow { -1.0 } else { 1.0 };
                let x = sx * rng.random_range(*margin..1.0);
                let y = sy * rng.random_range(*margin..1.0);
                ActionSignal::point(x, y)
            }
            UserKind::Sketch { yellow, grey } => {
                let shape = if meaning == Meaning::Yellow { *yellow } else { *grey };
                let stroke = draw(shape, rng);
                let features = sketch_features(&normalize_sketch(&stroke).expect("strokes have many points"));
                ActionSignal::Continuous {
                    features: features.to_vec(),
                }
            }
            UserKind::Audio {
                yellow_hz,
                grey_hz,
                sample_rate,
            } => {
                let hz = if meaning == Meaning::Yellow { *yellow_hz } else { *grey_hz };
                let clip = hum(hz, *sample_rate, rng);
                let features = audio_signal(&clip, &SpectralEmbedder::default()).expect("synthetic clips embed");
                ActionSignal::Continuous { features }
            }
        }
    }
}

/// Index of the (digit 0, digit 1) color pair: YY, YG, GY, GG.
pub fn combination(coloring: &ColoringPattern) -> usize {
    let bit = |m: Meaning| usize::from(m == Meaning::Grey);
    bit(coloring.color(0)) * 2 + bit(coloring.color(1))
}

/// A jittered stroke of `shape` at random scale, rotation and offset.
pub fn draw(shape: Shape, rng: &mut ChaCha8Rng) -> Polyline {
    let scale = rng.random_range(0.5..3.0);
    let (ox, oy) = (rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0));
    let tilt: f64 = rng.random_range(-0.15..0.15);
    let jitter = Normal::new(0.0, 0.03).expect("finite sd");
    let base: Vec<[f64; 2]> = match shape {
        Shape::Circle => (0..=32)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / 32.0;
                [t.cos(), t.sin()]
            })
            .collect(),
        Shape::Zigzag => {
            let corners = [[-1.0, 1.0], [1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]];
            corners
                .windows(2)
                .flat_map(|w| {
                    (0..10).map(move |k| {
                        let t = k as f64 / 10.0;
                        [w[0][0] + t * (w[1][0] - w[0][0]), w[0][1] + t * (w[1][1] - w[0][1])]
                    })
                })
                .chain(std::iter::once([1.0, -1.0]))
                .collect()
        }
        Shape::Line => (0..=20).map(|i| [-1.0 + i as f64 / 10.0, -1.0 + i as f64 / 10.0]).collect(),
    };
    let (s, c) = tilt.sin_cos();
    let points = base
        .into_iter()
        .map(|[x, y]| {
            let (x, y) = (x + jitter.sample(rng), y + jitter.sample(rng));
            [scale * (c * x - s * y) + ox, scale * (s * x + c * y) + oy]
        })
        .collect();
    Polyline::new(points).expect("strokes have many finite points")
}

fn hum(hz: f32, sample_rate: u32, rng: &mut ChaCha8Rng) -> AudioClip {
    let seconds = rng.random_range(0.4..1.5);
    let hz = hz * rng.random_range(0.95..1.05);
    let noise = Normal::new(0.0, 0.05).expect("finite sd");
    let n = (seconds * sample_rate as f32) as usize;
    let samples = (0..n)
        .map(|i| {
            let t = i as f32 / sample_rate as f32;
            (std::f32::consts::TAU * hz * t).sin() + noise.sample(rng)
        })
        .collect();
    AudioClip::new(samples, sample_rate).expect("non-empty clip")
}
