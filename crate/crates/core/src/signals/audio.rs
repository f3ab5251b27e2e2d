use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::projection::project_trajectories;
use crate::error::{Error, Result};

/// Windows extracted from every clip.
pub const AUDIO_WINDOWS: usize = 21;
/// Clips are tiled or trimmed to this length before windowing.
pub const CLIP_SECONDS: usize = 3;
pub const MAX_SAMPLE_RATE: u32 = 192_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AudioClip {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Self> {
        if !(1..=MAX_SAMPLE_RATE).contains(&sample_rate) {
            return Err(Error::MalformedSignal(format!("sample rate must lie in 1..={MAX_SAMPLE_RATE}")));
        }
        if samples.is_empty() {
            return Err(Error::EmptyClip);
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::MalformedSignal("non-finite audio sample".into()));
        }
        Ok(AudioClip { samples, sample_rate })
    }
}

/// Maps a one-second window to a fixed-length vector.
pub trait Embedder {
    fn dim(&self) -> usize;
    fn embed(&self, window: &[f32], sample_rate: u32) -> Result<Vec<f64>>;
}

/// Tiles or trims the clip to exactly three seconds, then cuts 21 one-second
/// windows with a 100 ms hop.
pub fn audio_windows(clip: &AudioClip) -> Result<Vec<Vec<f32>>> {
    if clip.samples.is_empty() {
        return Err(Error::EmptyClip);
    }
    if clip.sample_rate == 0 {
        return Err(Error::MalformedSignal("sample rate must be positive".into()));
    }
    let sr = clip.sample_rate as usize;
    let total = CLIP_SECONDS * sr;
    let tiled: Vec<f32> = (0..total).map(|i| clip.samples[i % clip.samples.len()]).collect();
    // Start k * 100 ms, floored; the last window ends exactly at 3 s even
    // when the rate is not a multiple of 10.
    Ok((0..AUDIO_WINDOWS)
        .map(|k| {
            let start = k * sr / 10;
            tiled[start..start + sr].to_vec()
        })
        .collect())
}

/// Embeds every window of `clip` and concatenates the vectors. This is the
/// continuous signal an audio session consumes.
pub fn audio_signal(clip: &AudioClip, embedder: &dyn Embedder) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(AUDIO_WINDOWS * embedder.dim());
    for w in audio_windows(clip)? {
        let v = embedder.embed(&w, clip.sample_rate)?;
        if v.len() != embedder.dim() {
            return Err(Error::EmbedderFailure(format!(
                "embedder returned {} values, declared {}",
                v.len(),
                embedder.dim()
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::EmbedderFailure("non-finite embedding".into()));
        }
        out.extend(v);
    }
    Ok(out)
}

/// N clips to N 2-D points: 21 embeddings per clip, projected jointly, then
/// averaged per clip.
pub fn embed_and_project(clips: &[AudioClip], embedder: &dyn Embedder) -> Result<Vec<[f64; 2]>> {
    let rows = clips
        .iter()
        .map(|c| audio_signal(c, embedder))
        .collect::<Result<Vec<_>>>()?;
    if rows.is_empty() {
        return Ok(Vec::new());
    }
    Ok(project_trajectories(&rows, AUDIO_WINDOWS)?
        .into_iter()
        .map(|p| [p[0], p[1]])
        .collect())
}

/// Deterministic stand-in for a learned audio embedding: log share of
/// spectral power in equal-width frequency bands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEmbedder {
    pub bands: usize,
}

impl Default for SpectralEmbedder {
    fn default() -> Self {
        SpectralEmbedder { bands: 128 }
    }
}

impl Embedder for SpectralEmbedder {
    fn dim(&self) -> usize {
        self.bands
    }

    fn embed(&self, window: &[f32], _sample_rate: u32) -> Result<Vec<f64>> {
        if window.is_empty() || self.bands == 0 {
            return Err(Error::EmbedderFailure("empty window".into()));
        }
        let mut buf: Vec<Complex<f64>> = window.iter().map(|&s| Complex::new(s as f64, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
        let power: Vec<f64> = buf[1..=buf.len() / 2].iter().map(|c| c.norm_sqr()).collect();
        let total: f64 = power.iter().sum();
        let mut bands = vec![0.0; self.bands];
        for (i, p) in power.iter().enumerate() {
            bands[i * self.bands / power.len().max(1)] += p;
        }
        Ok(bands
            .into_iter()
            .map(|b| {
                let share = if total > 0.0 { b / total } else { 0.0 };
                (share + 1e-8).log10()
            })
            .collect())
    }
}
