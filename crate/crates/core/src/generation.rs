//! Candidate answer generation: one generator call per retrieved context.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl;
use crate::provider::{HttpClient, SubprocessClient};

/// Most contexts a single question may carry.
pub const MAX_CONTEXTS: usize = 5;

/// Decoding settings forwarded verbatim to the generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationParams {
    pub min_length: u32,
    pub max_length: u32,
    pub temperature: f64,
    pub num_beams: u32,
}

impl Default for GenerationParams {
    fn default() -> Self {
        Self {
            min_length: 40,
            max_length: 150,
            temperature: 0.7,
            num_beams: 4,
        }
    }
}

impl GenerationParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_length == 0 || self.min_length > self.max_length {
            return Err(Error::Config(format!(
                "need 0 < min_length <= max_length, got {} / {}",
                self.min_length, self.max_length
            )));
        }
        if self.temperature.is_nan() || self.temperature <= 0.0 {
            return Err(Error::Config("temperature must be positive".into()));
        }
        if self.num_beams == 0 {
            return Err(Error::Config("num_beams must be at least 1".into()));
        }
        Ok(())
    }
}

/// Wire request sent to external generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub question: String,
    pub context: String,
    pub min_length: u32,
    pub max_length: u32,
    pub temperature: f64,
    pub num_beams: u32,
}

impl GenerationRequest {
    pub fn new(question: &str, context: &str, params: &GenerationParams) -> Self {
        Self {
            question: question.to_string(),
            context: context.to_string(),
            min_length: params.min_length,
            max_length: params.max_length,
            temperature: params.temperature,
            num_beams: params.num_beams,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CandidateKey {
    pub question_id: String,
    pub context_id: String,
}

pub trait AnswerGenerator: Send + Sync {
    fn generate(&self, key: &CandidateKey, request: &GenerationRequest) -> Result<String>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub question_id: String,
    pub context_id: String,
    pub rank_in_retrieval: usize,
    pub answer_text: String,
    pub rerank_score: Option<f64>,
}

#[derive(Deserialize, Serialize)]
struct FixtureRecord {
    question_id: String,
    context_id: String,
    answer: String,
}

/// Canned answers keyed by `(question_id, context_id)`.
#[derive(Debug, Clone, Default)]
pub struct FixtureGenerator {
    answers: HashMap<CandidateKey, String>,
}

impl FixtureGenerator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, question_id: &str, context_id: &str, answer: &str) {
        self.answers.insert(
            CandidateKey {
                question_id: question_id.to_string(),
                context_id: context_id.to_string(),
            },
            answer.to_string(),
        );
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut gen = Self::new();
        for rec in jsonl::read_all::<FixtureRecord>(path)? {
            gen.insert(&rec.question_id, &rec.context_id, &rec.answer);
        }
        Ok(gen)
    }

    pub fn len(&self) -> usize {
        self.answers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.answers.is_empty()
    }
}

impl AnswerGenerator for FixtureGenerator {
    fn generate(&self, key: &CandidateKey, _request: &GenerationRequest) -> Result<String> {
        self.answers
            .get(key)
            .cloned()
            .ok_or_else(|| Error::FixtureMiss {
                question_id: key.question_id.clone(),
                context_id: key.context_id.clone(),
            })
    }
}

#[derive(Deserialize)]
struct GenerationResponse {
    answer: String,
}

/// Generator running as a child process speaking the line protocol.
pub struct SubprocessGenerator {
    client: SubprocessClient,
}

impl SubprocessGenerator {
    pub fn spawn(command: &[String]) -> Result<Self> {
        Ok(Self {
            client: SubprocessClient::spawn(command)?,
        })
    }
}

impl AnswerGenerator for SubprocessGenerator {
    fn generate(&self, _key: &CandidateKey, request: &GenerationRequest) -> Result<String> {
        let resp: GenerationResponse = self.client.call(request)?;
        Ok(resp.answer)
    }
}

/// Generator behind an HTTP endpoint accepting the request as a JSON POST.
pub struct HttpGenerator {
    client: HttpClient,
}

impl HttpGenerator {
    pub fn new(url: impl Into<String>) -> Self {
        Self {
            client: HttpClient::new(url),
        }
    }
}

impl AnswerGenerator for HttpGenerator {
    fn generate(&self, _key: &CandidateKey, request: &GenerationRequest) -> Result<String> {
        let resp: GenerationResponse = self.client.call(request)?;
        Ok(resp.answer)
    }
}

/// One candidate per context, in retrieval order. Generator calls run
/// concurrently; any failure fails the whole question.
pub fn generate_candidates(
    question_id: &str,
    question: &str,
    contexts: &[(String, String)],
    params: &GenerationParams,
    provider: &dyn AnswerGenerator,
) -> Result<Vec<Candidate>> {
    if contexts.is_empty() || contexts.len() > MAX_CONTEXTS {
        return Err(Error::Invalid(format!(
            "expected 1..={MAX_CONTEXTS} contexts, got {}",
            contexts.len()
        )));
    }
    params.validate()?;
    let results: Vec<Result<String>> = std::thread::scope(|scope| {
        let handles: Vec<_> = contexts
            .iter()
            .map(|(context_id, context)| {
                let key = CandidateKey {
                    question_id: question_id.to_string(),
                    context_id: context_id.clone(),
                };
                let request = GenerationRequest::new(question, context, params);
                scope.spawn(move || provider.generate(&key, &request))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(Error::Provider("generator thread panicked".into())))
            })
            .collect()
    });
    contexts
        .iter()
        .zip(results)
        .enumerate()
        .map(|(rank, ((context_id, _), answer))| {
            let answer_text = answer?;
            if answer_text.trim().is_empty() {
                return Err(Error::Provider(format!(
                    "empty answer for context `{context_id}`"
                )));
            }
            Ok(Candidate {
                question_id: question_id.to_string(),
                context_id: context_id.clone(),
                rank_in_retrieval: rank,
                answer_text,
                rerank_score: None,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn contexts(n: usize) -> Vec<(String, String)> {
        (0..n)
            .map(|i| (format!("c{i}"), format!("context {i}")))
            .collect()
    }

    fn fixture(n: usize) -> FixtureGenerator {
        let mut g = FixtureGenerator::new();
        for i in 0..n {
            g.insert("q1", &format!("c{i}"), &format!("answer {i}"));
        }
        g
    }

    #[test]
    fn five_contexts_in_retrieval_order() {
        let cands = generate_candidates(
            "q1",
            "why?",
            &contexts(5),
            &GenerationParams::default(),
            &fixture(5),
        )
        .unwrap();
        assert_eq!(cands.len(), 5);
        for (i, c) in cands.iter().enumerate() {
            assert_eq!(c.rank_in_retrieval, i);
            assert_eq!(c.answer_text, format!("answer {i}"));
            assert!(c.rerank_score.is_none());
        }
        let single = generate_candidates(
            "q1",
            "why?",
            &contexts(1),
            &GenerationParams::default(),
            &fixture(5),
        )
        .unwrap();
        assert_eq!(single.len(), 1);
    }

    #[test]
    fn fixture_miss_fails_the_question() {
        let err = generate_candidates(
            "q1",
            "why?",
            &contexts(3),
            &GenerationParams::default(),
            &fixture(2),
        )
        .unwrap_err();
        match err {
            Error::FixtureMiss { context_id, .. } => assert_eq!(context_id, "c2"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn context_count_bounds() {
        let p = GenerationParams::default();
        assert!(generate_candidates("q1", "q", &[], &p, &fixture(5)).is_err());
        assert!(generate_candidates("q1", "q", &contexts(6), &p, &fixture(6)).is_err());
    }

    #[test]
    fn default_request_carries_decoding_settings() {
        let req = GenerationRequest::new("q", "ctx", &GenerationParams::default());
        let json = serde_json::to_string(&req).unwrap();
        assert_eq!(
            json,
            r#"{"question":"q","context":"ctx","min_length":40,"max_length":150,"temperature":0.7,"num_beams":4}"#
        );
    }

    #[test]
    fn params_validation() {
        assert!(GenerationParams::default().validate().is_ok());
        let bad = [
            GenerationParams {
                min_length: 0,
                ..Default::default()
            },
            GenerationParams {
                min_length: 200,
                ..Default::default()
            },
            GenerationParams {
                temperature: 0.0,
                ..Default::default()
            },
            GenerationParams {
                num_beams: 0,
                ..Default::default()
            },
        ];
        assert!(bad.iter().all(|p| p.validate().is_err()));
    }

    struct Echo;
    impl AnswerGenerator for Echo {
        fn generate(&self, _key: &CandidateKey, r: &GenerationRequest) -> Result<String> {
            Ok(r.context.clone())
        }
    }

    #[test]
    fn empty_answer_is_rejected() {
        let ctx = vec![("c0".to_string(), String::new())];
        assert!(generate_candidates("q", "q", &ctx, &GenerationParams::default(), &Echo).is_err());
    }
}
