//! Client for an audio embedder running as a separate HTTP service.
//!
//! Each one-second window is posted as `{"samples": [...], "sample_rate": n}`
//! and the service answers `{"embedding": [...]}`.

use serde::{Deserialize, Serialize};

use selfcal_core::signals::{audio_windows, AudioClip};
use selfcal_core::Error;

#[derive(Serialize)]
struct WindowRequest<'a> {
    samples: &'a [f32],
    sample_rate: u32,
}

#[derive(Deserialize)]
struct WindowResponse {
    embedding: Vec<f64>,
}

pub struct ExternalEmbedder {
    url: String,
    client: reqwest::Client,
}

impl ExternalEmbedder {
    pub fn new(url: String) -> Self {
        ExternalEmbedder {
            url,
            client: reqwest::Client::new(),
        }
    }

    async fn embed(&self, window: &[f32], sample_rate: u32) -> Result<Vec<f64>, Error> {
        let failure = |e: reqwest::Error| Error::EmbedderFailure(e.to_string());
        let response = self
            .client
            .post(&self.url)
            .json(&WindowRequest {
                samples: window,
                sample_rate,
            })
            .send()
            .await
            .map_err(failure)?
            .error_for_status()
            .map_err(failure)?;
        Ok(response.json::<WindowResponse>().await.map_err(failure)?.embedding)
    }

    /// Same layout as the in-process pipeline: 21 window embeddings,
    /// concatenated.
    pub async fn audio_signal(&self, clip: &AudioClip) -> Result<Vec<f64>, Error> {
        let mut out = Vec::new();
        let mut dim = None;
        for window in audio_windows(clip)? {
            let v = self.embed(&window, clip.sample_rate).await?;
            if v.is_empty() || *dim.get_or_insert(v.len()) != v.len() {
                return Err(Error::EmbedderFailure("embedding length changed between windows".into()));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::EmbedderFailure("non-finite embedding".into()));
            }
            out.extend(v);
        }
        Ok(out)
    }
}
