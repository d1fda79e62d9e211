//! Contradiction detection from pairwise sentence entailment.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl;
use crate::provider::SubprocessClient;
use crate::text::split_sentences;

pub const DEFAULT_CONTRADICTION_THRESHOLD: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntailmentProbs {
    pub positive: f64,
    pub neutral: f64,
    pub negative: f64,
}

impl EntailmentProbs {
    pub const NEUTRAL: EntailmentProbs = EntailmentProbs {
        positive: 0.0,
        neutral: 1.0,
        negative: 0.0,
    };

    pub fn validate(&self) -> Result<()> {
        let parts = [self.positive, self.neutral, self.negative];
        if parts.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Provider(format!(
                "entailment probabilities out of range: {self:?}"
            )));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::Provider(format!(
                "entailment probabilities sum to {sum}"
            )));
        }
        Ok(())
    }
}

pub trait NliProvider: Send + Sync {
    fn classify(&self, premise: &str, hypothesis: &str) -> Result<EntailmentProbs>;
}

#[derive(Deserialize, Serialize)]
struct StubRecord {
    premise: String,
    hypothesis: String,
    positive: f64,
    neutral: f64,
    negative: f64,
}

/// Table-driven NLI: listed pairs return their probabilities, every other
/// pair is fully neutral.
#[derive(Debug, Clone, Default)]
pub struct StubNli {
    table: HashMap<(String, String), EntailmentProbs>,
}

impl StubNli {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, premise: &str, hypothesis: &str, probs: EntailmentProbs) {
        self.table
            .insert((premise.to_string(), hypothesis.to_string()), probs);
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut stub = Self::new();
        for (line, rec) in jsonl::read_lines::<StubRecord>(path)? {
            let rec = rec.map_err(|m| Error::parse(path, line, m))?;
            let probs = EntailmentProbs {
                positive: rec.positive,
                neutral: rec.neutral,
                negative: rec.negative,
            };
            probs
                .validate()
                .map_err(|e| Error::parse(path, line, e.to_string()))?;
            stub.insert(&rec.premise, &rec.hypothesis, probs);
        }
        Ok(stub)
    }
}

impl NliProvider for StubNli {
    fn classify(&self, premise: &str, hypothesis: &str) -> Result<EntailmentProbs> {
        Ok(self
            .table
            .get(&(premise.to_string(), hypothesis.to_string()))
            .copied()
            .unwrap_or(EntailmentProbs::NEUTRAL))
    }
}

#[derive(Serialize)]
struct NliRequest<'a> {
    premise: &'a str,
    hypothesis: &'a str,
}

/// NLI model behind a child process: `{"premise","hypothesis"}` →
/// `{"positive","neutral","negative"}`.
pub struct SubprocessNli {
    client: SubprocessClient,
}

impl SubprocessNli {
    pub fn spawn(command: &[String]) -> Result<Self> {
        Ok(Self {
            client: SubprocessClient::spawn(command)?,
        })
    }
}

impl NliProvider for SubprocessNli {
    fn classify(&self, premise: &str, hypothesis: &str) -> Result<EntailmentProbs> {
        self.client.call(&NliRequest {
            premise,
            hypothesis,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlaggedPair {
    pub answer_sentence: usize,
    pub gold_sentence: usize,
    pub negative_prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntailmentVerdict {
    pub contradicted: bool,
    pub flagged_pairs: Vec<FlaggedPair>,
}

/// Check every (answer sentence, gold sentence) pair, gold as premise, and
/// flag pairs whose negative-entailment probability is at least `threshold`.
pub fn detect_contradiction(
    answer: &str,
    gold: &str,
    nli: &dyn NliProvider,
    threshold: f64,
) -> Result<EntailmentVerdict> {
    let answer_sentences = split_sentences(answer);
    let gold_sentences = split_sentences(gold);
    let mut flagged_pairs = Vec::new();
    for (i, hyp) in answer_sentences.iter().enumerate() {
        for (j, premise) in gold_sentences.iter().enumerate() {
            let probs = nli.classify(premise, hyp)?;
            probs.validate()?;
            if probs.negative >= threshold {
                flagged_pairs.push(FlaggedPair {
                    answer_sentence: i,
                    gold_sentence: j,
                    negative_prob: probs.negative,
                });
            }
        }
    }
    Ok(EntailmentVerdict {
        contradicted: !flagged_pairs.is_empty(),
        flagged_pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn neg(p: f64) -> EntailmentProbs {
        EntailmentProbs {
            positive: 0.0,
            neutral: 1.0 - p,
            negative: p,
        }
    }

    const GOLD: &str = "Asthma affects all ages. It narrows airways.";
    const ANSWER: &str = "Asthma only affects children. Airways narrow.";

    #[test]
    fn one_strong_contradiction() {
        let mut stub = StubNli::new();
        stub.insert(
            "Asthma affects all ages.",
            "Asthma only affects children.",
            neg(0.97),
        );
        let v = detect_contradiction(ANSWER, GOLD, &stub, DEFAULT_CONTRADICTION_THRESHOLD).unwrap();
        assert!(v.contradicted);
        assert_eq!(
            v.flagged_pairs,
            vec![FlaggedPair {
                answer_sentence: 0,
                gold_sentence: 0,
                negative_prob: 0.97
            }]
        );
    }

    #[test]
    fn weak_negatives_are_not_flagged() {
        struct Half;
        impl NliProvider for Half {
            fn classify(&self, _: &str, _: &str) -> Result<EntailmentProbs> {
                Ok(neg(0.5))
            }
        }
        let v = detect_contradiction(ANSWER, GOLD, &Half, 0.95).unwrap();
        assert!(!v.contradicted);
        assert!(v.flagged_pairs.is_empty());
    }

    #[test]
    fn threshold_is_inclusive() {
        let mut stub = StubNli::new();
        stub.insert("It narrows airways.", "Airways narrow.", neg(0.95));
        let v = detect_contradiction(ANSWER, GOLD, &stub, 0.95).unwrap();
        assert_eq!(v.flagged_pairs.len(), 1);
        assert_eq!(
            (
                v.flagged_pairs[0].answer_sentence,
                v.flagged_pairs[0].gold_sentence
            ),
            (1, 1)
        );
    }

    #[test]
    fn invalid_probabilities_are_provider_errors() {
        struct Bad;
        impl NliProvider for Bad {
            fn classify(&self, _: &str, _: &str) -> Result<EntailmentProbs> {
                Ok(EntailmentProbs {
                    positive: 0.5,
                    neutral: 0.5,
                    negative: 0.5,
                })
            }
        }
        assert!(detect_contradiction(ANSWER, GOLD, &Bad, 0.95).is_err());
    }
}
