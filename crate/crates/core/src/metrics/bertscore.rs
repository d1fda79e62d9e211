//! Greedy-matching token similarity (BERTScore without IDF weighting or
//! baseline rescaling).

use super::PrfScore;
use crate::error::{Error, Result};
use crate::text::tokenize;
use crate::vector_store::{cosine, Embedder};

#[derive(Debug, Clone, PartialEq)]
pub struct TokenVector {
    pub token: String,
    pub vector: Vec<f64>,
}

fn greedy_side(from: &[TokenVector], to: &[TokenVector]) -> f64 {
    let total: f64 = from
        .iter()
        .map(|a| {
            to.iter()
                .map(|b| cosine(&a.vector, &b.vector))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum();
    total / from.len() as f64
}

/// Recall averages, over reference tokens, the best cosine to any candidate
/// token; precision does the same from the candidate side.
pub fn bertscore_greedy(candidate: &[TokenVector], reference: &[TokenVector]) -> Result<PrfScore> {
    if candidate.is_empty() || reference.is_empty() {
        return Err(Error::Invalid(
            "bertscore needs tokens on both sides".into(),
        ));
    }
    let dim = candidate[0].vector.len();
    if let Some(bad) = candidate
        .iter()
        .chain(reference)
        .find(|t| t.vector.len() != dim)
    {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: bad.vector.len(),
        });
    }
    let precision = greedy_side(candidate, reference);
    let recall = greedy_side(reference, candidate);
    Ok(PrfScore::new(precision, recall))
}

fn token_vectors(text: &str, embedder: &dyn Embedder) -> Result<Vec<TokenVector>> {
    tokenize(text)
        .into_iter()
        .map(|token| {
            let vector = embedder.embed(&token)?;
            Ok(TokenVector { token, vector })
        })
        .collect()
}

/// Tokenize both texts and embed each token with `embedder`.
pub fn bertscore_text(
    candidate: &str,
    reference: &str,
    embedder: &dyn Embedder,
) -> Result<PrfScore> {
    bertscore_greedy(
        &token_vectors(candidate, embedder)?,
        &token_vectors(reference, embedder)?,
    )
}
