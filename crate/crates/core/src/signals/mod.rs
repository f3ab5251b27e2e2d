//! Raw sketches and sounds to low-dimensional continuous signals.

mod audio;
mod projection;
mod sketch;

pub use audio::{
    audio_signal, audio_windows, embed_and_project, AudioClip, Embedder, SpectralEmbedder, AUDIO_WINDOWS,
    CLIP_SECONDS, MAX_SAMPLE_RATE,
};
pub use projection::{project_2d, project_trajectories, ProjectionMethod};
pub use sketch::{normalize_sketch, sketch_features, Polyline, SketchFeatures, SKETCH_FEATURES};
