use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::provider::SubprocessClient;
use crate::vector_store::{cosine, Embedder};

/// Semantic textual similarity on the nominal 0–5 scale.
pub trait StsProvider: Send + Sync {
    fn sts(&self, answer: &str, gold: &str) -> Result<f64>;
}

/// Unclamped: negative cosines give small negative scores.
pub fn sts_from_cosine(cos: f64) -> f64 {
    5.0 * cos
}

/// Fallback STS: five times the cosine of the two text embeddings.
pub struct EmbeddingSts<'a> {
    embedder: &'a dyn Embedder,
}

impl<'a> EmbeddingSts<'a> {
    pub fn new(embedder: &'a dyn Embedder) -> Self {
        Self { embedder }
    }
}

impl StsProvider for EmbeddingSts<'_> {
    fn sts(&self, answer: &str, gold: &str) -> Result<f64> {
        let a = self.embedder.embed(answer)?;
        let b = self.embedder.embed(gold)?;
        Ok(sts_from_cosine(cosine(&a, &b)))
    }
}

#[derive(Serialize)]
struct StsRequest<'a> {
    answer: &'a str,
    gold: &'a str,
}

#[derive(Deserialize)]
struct StsResponse {
    score: f64,
}

/// STS model behind a child process: `{"answer","gold"}` → `{"score"}`.
pub struct SubprocessSts {
    client: SubprocessClient,
}

impl SubprocessSts {
    pub fn spawn(command: &[String]) -> Result<Self> {
        Ok(Self {
            client: SubprocessClient::spawn(command)?,
        })
    }
}

impl StsProvider for SubprocessSts {
    fn sts(&self, answer: &str, gold: &str) -> Result<f64> {
        let resp: StsResponse = self.client.call(&StsRequest { answer, gold })?;
        Ok(resp.score)
    }
}
