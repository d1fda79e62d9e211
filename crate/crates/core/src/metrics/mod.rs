//! Answer-quality measures: lexical overlap, token-embedding similarity,
//! readability, contradiction detection and the statistics used to compare
//! systems.

mod bertscore;
mod entailment;
mod readability;
mod rouge;
mod similarity;
mod stats;

pub use bertscore::{bertscore_greedy, bertscore_text, TokenVector};
pub use entailment::{
    detect_contradiction, EntailmentProbs, EntailmentVerdict, FlaggedPair, NliProvider, StubNli,
    SubprocessNli, DEFAULT_CONTRADICTION_THRESHOLD,
};
pub use readability::{
    count_syllables, flesch_reading_ease, flesch_reading_ease_raw, ReadabilityStats,
};
pub use rouge::{lcs_length, rouge_l, rouge_l_tokens};
pub use similarity::{sts_from_cosine, EmbeddingSts, StsProvider, SubprocessSts};
pub use stats::{kde_overlap, mean, median, pearson_r, sample_std, welch_t_test, TTest};

pub use crate::text::split_sentences;

use serde::{Deserialize, Serialize};

/// Precision, recall and their harmonic mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrfScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub type RougeScore = PrfScore;

impl PrfScore {
    pub const ZERO: PrfScore = PrfScore {
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
    };

    pub fn new(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            precision,
            recall,
            f1,
        }
    }
}
