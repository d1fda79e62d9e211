//! Joint reasoning: parse the question against the graph, turn the matched
//! subgraph into text, and keep the candidate with the best ROUGE-L F1
//! against it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generation::{generate_candidates, AnswerGenerator, Candidate, GenerationParams};
use crate::knowledge_graph::{
    extract_subgraph, subgraph_text, Entity, EntityId, EntityKind, KnowledgeGraph, RelationSelector,
};
use crate::metrics::rouge_l;
use crate::text;
use crate::vector_store::{embed_text, top_k, Embedder, VectorIndex, DEFAULT_TOP_K};

pub const DEFAULT_FUZZY_THRESHOLD: f64 = 0.85;

/// `1 − levenshtein(a, b) / max(|a|, |b|)` over characters.
pub fn similarity_ratio(a: &str, b: &str) -> f64 {
    let (la, lb) = (a.chars().count(), b.chars().count());
    let longest = la.max(lb);
    if longest == 0 {
        return 1.0;
    }
    1.0 - strsim::levenshtein(a, b) as f64 / longest as f64
}

/// A fuzzy hit of an entity label against a run of question tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyHit {
    pub entity: EntityId,
    pub ratio: f64,
    /// Token range of the question that matched.
    pub span: (usize, usize),
}

/// Best entity whose normalized label matches some n-gram of `tokens` with
/// ratio ≥ `threshold`. Ties prefer the longer label, then the
/// lexicographically smaller one, then the earlier span. N-grams overlapping
/// any span in `exclude` are skipped.
pub fn fuzzy_best<'a>(
    tokens: &[String],
    entities: impl Iterator<Item = &'a Entity>,
    threshold: f64,
    exclude: &[(usize, usize)],
) -> Option<FuzzyHit> {
    let candidates: Vec<&Entity> = entities.collect();
    let max_len = candidates
        .iter()
        .map(|e| e.norm_label.split(' ').count())
        .max()?;
    let mut grams = Vec::new();
    for n in 1..=max_len.min(tokens.len()) {
        for start in 0..=tokens.len() - n {
            let end = start + n;
            if exclude.iter().any(|&(s, e)| start < e && end > s) {
                continue;
            }
            let gram = tokens[start..end].join(" ");
            grams.push((gram.chars().count(), gram, (start, end)));
        }
    }
    let mut best: Option<(f64, &Entity, (usize, usize))> = None;
    for e in candidates {
        let le = e.norm_label.chars().count();
        for (lg, gram, span) in &grams {
            // Levenshtein is at least the length difference.
            let bound = 1.0 - le.abs_diff(*lg) as f64 / le.max(*lg) as f64;
            if bound < threshold {
                continue;
            }
            let ratio = similarity_ratio(gram, &e.norm_label);
            if ratio < threshold {
                continue;
            }
            let better = match &best {
                None => true,
                Some((br, be, bspan)) => {
                    let key = |r: f64, ent: &Entity| (r, ent.norm_label.chars().count());
                    match key(ratio, e).partial_cmp(&key(*br, be)) {
                        Some(std::cmp::Ordering::Greater) => true,
                        Some(std::cmp::Ordering::Equal) => {
                            (e.norm_label.as_str(), *span) < (be.norm_label.as_str(), *bspan)
                        }
                        _ => false,
                    }
                }
            };
            if better {
                best = Some((ratio, e, *span));
            }
        }
    }
    best.map(|(ratio, e, span)| FuzzyHit {
        entity: e.id,
        ratio,
        span,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiseaseMatch {
    pub entity: EntityId,
    pub label: String,
    pub ratio: f64,
    #[serde(skip)]
    pub span: (usize, usize),
}

/// Fuzzy-match a disease named in the question. Invariant to casing and
/// punctuation.
pub fn match_disease(question: &str, kg: &KnowledgeGraph, threshold: f64) -> Option<DiseaseMatch> {
    let tokens = text::tokenize(question);
    let hit = fuzzy_best(&tokens, kg.entities_of(EntityKind::Disease), threshold, &[])?;
    Some(DiseaseMatch {
        entity: hit.entity,
        label: kg.entity(hit.entity)?.label.clone(),
        ratio: hit.ratio,
        span: hit.span,
    })
}

/// Question phrases that identify a relation.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationAliases {
    entries: Vec<(Vec<String>, String)>,
}

/// Phrase → relation seed vocabulary for the default relation set.
pub fn default_alias_table() -> BTreeMap<String, String> {
    let groups: [(&str, &[&str]); 8] = [
        ("symptoms", &["symptom", "symptoms", "sign", "signs"]),
        (
            "causes",
            &["cause", "causes", "caused", "reason", "reasons", "why"],
        ),
        (
            "treatment",
            &[
                "treatment",
                "treatments",
                "treat",
                "treated",
                "cure",
                "cures",
                "therapy",
            ],
        ),
        (
            "diagnosis",
            &[
                "diagnosis",
                "diagnosed",
                "diagnose",
                "test",
                "tests",
                "detect",
            ],
        ),
        (
            "risk_factors_of_disease",
            &["risk", "risks", "risk factor", "risk factors"],
        ),
        ("at_risk", &["at risk", "who gets", "more likely"]),
        ("risk_due_to_disease", &["complication", "complications"]),
        (
            "prevention",
            &["prevention", "prevent", "prevented", "prevents", "avoid"],
        ),
    ];
    groups
        .iter()
        .flat_map(|(rel, phrases)| {
            phrases
                .iter()
                .map(move |p| (p.to_string(), rel.to_string()))
        })
        .collect()
}

impl RelationAliases {
    /// Aliases from `table`, plus every relation name in `relations` and its
    /// singular/plural variant.
    pub fn new(table: &BTreeMap<String, String>, relations: &[String]) -> Self {
        let mut entries: Vec<(Vec<String>, String)> = Vec::new();
        let mut push = |phrase: &str, rel: &str| {
            let toks = text::tokenize(phrase);
            if !toks.is_empty() && !entries.iter().any(|(t, r)| *t == toks && r == rel) {
                entries.push((toks, rel.to_string()));
            }
        };
        for (phrase, rel) in table {
            push(phrase, rel);
        }
        for rel in relations {
            push(rel, rel);
            let toks = text::tokenize(rel);
            if let Some(last) = toks.last() {
                let mut variant = toks.clone();
                let n = variant.len() - 1;
                variant[n] = match last.strip_suffix('s') {
                    Some(stem) if !stem.is_empty() => stem.to_string(),
                    _ => format!("{last}s"),
                };
                push(&variant.join(" "), rel);
            }
        }
        Self { entries }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// The relation whose longest alias appears contiguously in the question.
pub fn match_relation(question: &str, aliases: &RelationAliases) -> Option<String> {
    match_relation_span(&text::tokenize(question), aliases).map(|(rel, _)| rel)
}

/// Like [`match_relation`] over pre-tokenized text, also returning the token
/// range of the first occurrence of the winning alias.
pub fn match_relation_span(
    tokens: &[String],
    aliases: &RelationAliases,
) -> Option<(String, (usize, usize))> {
    let mut hits: Vec<(&Vec<String>, &String, usize)> = aliases
        .entries
        .iter()
        .filter(|(phrase, _)| phrase.len() <= tokens.len())
        .filter_map(|(p, r)| {
            tokens
                .windows(p.len())
                .position(|w| w == p.as_slice())
                .map(|start| (p, r, start))
        })
        .collect();
    hits.sort_by(|a, b| {
        b.0.len()
            .cmp(&a.0.len())
            .then_with(|| b.0.join(" ").len().cmp(&a.0.join(" ").len()))
            .then_with(|| a.1.cmp(b.1))
    });
    let (phrase, best, start) = hits.first()?;
    let alternatives: Vec<&String> = hits
        .iter()
        .map(|(_, r, _)| *r)
        .filter(|r| r != best)
        .collect();
    if !alternatives.is_empty() {
        log::debug!("relation `{best}` chosen over {alternatives:?}");
    }
    Some((best.to_string(), (*start, start + phrase.len())))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuestionParse {
    pub disease: Option<DiseaseMatch>,
    pub relation: Option<String>,
    pub raw_question: String,
}

pub fn parse_question(
    question: &str,
    kg: &KnowledgeGraph,
    aliases: &RelationAliases,
    threshold: f64,
) -> QuestionParse {
    QuestionParse {
        disease: match_disease(question, kg, threshold),
        relation: match_relation(question, aliases),
        raw_question: question.to_string(),
    }
}

/// Fill every candidate's score with ROUGE-L F1 against `subgraph_text`.
pub fn rerank_candidates(candidates: Vec<Candidate>, subgraph_text: &str) -> Vec<Candidate> {
    candidates
        .into_iter()
        .map(|c| Candidate {
            rerank_score: Some(rouge_l(&c.answer_text, subgraph_text).f1),
            ..c
        })
        .collect()
}

/// Index of the highest score; the lowest index wins ties.
pub fn argmax_first(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        if best.is_none_or(|b| s > scores[b]) {
            best = Some(i);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SelectionMode {
    JointReasoning,
    FallbackFirstCandidate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinalAnswer {
    pub answer_text: String,
    pub chosen_rank: usize,
    /// One score per candidate, in retrieval order.
    pub rerank_scores: Vec<f64>,
    pub parse: QuestionParse,
    pub mode: SelectionMode,
    pub subgraph_text: String,
    pub candidates: Vec<Candidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AskOptions {
    pub params: GenerationParams,
    pub k: usize,
    pub fuzzy_threshold: f64,
    /// Off reproduces the "first of the top-k" ablation.
    pub joint_reasoning: bool,
    /// Off sends empty contexts to the generator instead of retrieving.
    pub use_vdb: bool,
    pub synonym_expansion: bool,
    /// A disease match without a relation uses the union of all relations;
    /// off falls back to the first candidate instead.
    pub all_relations_when_unmatched: bool,
}

impl Default for AskOptions {
    fn default() -> Self {
        Self {
            params: GenerationParams::default(),
            k: DEFAULT_TOP_K,
            fuzzy_threshold: DEFAULT_FUZZY_THRESHOLD,
            joint_reasoning: true,
            use_vdb: true,
            synonym_expansion: true,
            all_relations_when_unmatched: true,
        }
    }
}

/// Everything a question is answered against. All parts are read-only, so
/// one engine can serve concurrent questions.
pub struct QaEngine<'a> {
    pub kg: &'a KnowledgeGraph,
    pub index: &'a VectorIndex,
    pub embedder: &'a dyn Embedder,
    pub generator: &'a dyn AnswerGenerator,
    pub aliases: &'a RelationAliases,
}

/// Context ids used when retrieval is switched off.
pub fn no_vdb_context_id(rank: usize) -> String {
    format!("no-vdb-{rank}")
}

impl QaEngine<'_> {
    fn contexts(&self, question: &str, opts: &AskOptions) -> Result<Vec<(String, String)>> {
        if !opts.use_vdb {
            return Ok((0..opts.k)
                .map(|i| (no_vdb_context_id(i), String::new()))
                .collect());
        }
        let query = embed_text("query", question, self.embedder)?;
        top_k(self.index, &query, opts.k)?
            .into_iter()
            .map(|hit| {
                let text = self
                    .index
                    .text(&hit.id)
                    .ok_or_else(|| Error::UnknownId(hit.id.clone()))?
                    .to_string();
                Ok((hit.id, text))
            })
            .collect()
    }

    /// Retrieve, generate, parse, rerank and select.
    pub fn answer_question(
        &self,
        question_id: &str,
        question: &str,
        opts: &AskOptions,
    ) -> Result<FinalAnswer> {
        let contexts = self.contexts(question, opts)?;
        if contexts.is_empty() {
            return Err(Error::Invalid("no contexts, so no candidates".into()));
        }
        let candidates = generate_candidates(
            question_id,
            question,
            &contexts,
            &opts.params,
            self.generator,
        )?;
        let parse = parse_question(question, self.kg, self.aliases, opts.fuzzy_threshold);
        let selector = match (&parse.disease, &parse.relation) {
            (Some(_), Some(rel)) => Some(RelationSelector::Named(rel.clone())),
            (Some(_), None) if opts.all_relations_when_unmatched => Some(RelationSelector::All),
            _ => None,
        };
        let sub_text = match (&parse.disease, &selector) {
            (Some(d), Some(sel)) => subgraph_text(&extract_subgraph(
                self.kg,
                d.entity,
                sel,
                opts.synonym_expansion,
            )?),
            _ => String::new(),
        };
        let candidates = rerank_candidates(candidates, &sub_text);
        let rerank_scores: Vec<f64> = candidates
            .iter()
            .map(|c| c.rerank_score.unwrap_or(0.0))
            .collect();
        let (mode, chosen_rank) = if opts.joint_reasoning && selector.is_some() {
            let best = argmax_first(&rerank_scores)
                .ok_or_else(|| Error::Invalid("no candidates".into()))?;
            (SelectionMode::JointReasoning, best)
        } else {
            (SelectionMode::FallbackFirstCandidate, 0)
        };
        Ok(FinalAnswer {
            answer_text: candidates[chosen_rank].answer_text.clone(),
            chosen_rank,
            rerank_scores,
            parse,
            mode,
            subgraph_text: sub_text,
            candidates,
        })
    }
}
