//! Source documents: loading, the two preprocessing transforms, and
//! paragraph chunking for question generation.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl;
use crate::provider::SubprocessClient;
use crate::text::{self, sentence_spans, token_count};

/// One disease section: the corpus atom.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub disease: String,
    /// Section heading, used as the relation name in the graph.
    pub section: String,
    pub text: String,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paragraph {
    pub doc_id: String,
    pub ordinal: usize,
    pub text: String,
    pub token_count: usize,
}

/// `doc_id#ordinal`, the provenance of a generated QA pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ParagraphRef {
    pub doc_id: String,
    pub ordinal: usize,
}

impl fmt::Display for ParagraphRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.doc_id, self.ordinal)
    }
}

impl FromStr for ParagraphRef {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (doc_id, ord) = s
            .rsplit_once('#')
            .ok_or_else(|| format!("paragraph reference `{s}` lacks `#ordinal`"))?;
        let ordinal = ord
            .parse()
            .map_err(|_| format!("bad ordinal in paragraph reference `{s}`"))?;
        if doc_id.is_empty() {
            return Err(format!("paragraph reference `{s}` has an empty doc id"));
        }
        Ok(Self {
            doc_id: doc_id.to_string(),
            ordinal,
        })
    }
}

impl Serialize for ParagraphRef {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ParagraphRef {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAPair {
    pub question: String,
    pub answer: String,
    pub source: ParagraphRef,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadMode {
    #[default]
    Strict,
    Lenient,
}

/// Records plus the warnings produced for anything skipped in lenient mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Loaded<T> {
    pub records: Vec<T>,
    pub warnings: Vec<String>,
}

pub(crate) fn record_error(mode: LoadMode, warnings: &mut Vec<String>, err: Error) -> Result<()> {
    match mode {
        LoadMode::Strict => Err(err),
        LoadMode::Lenient => {
            log::warn!("{err}");
            warnings.push(err.to_string());
            Ok(())
        }
    }
}

pub fn load_documents(path: &Path, mode: LoadMode) -> Result<Loaded<Document>> {
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    let mut seen = HashSet::new();
    for (line, rec) in jsonl::read_lines::<Document>(path)? {
        let doc = match rec {
            Ok(doc) => doc,
            Err(msg) => {
                record_error(mode, &mut warnings, Error::parse(path, line, msg))?;
                continue;
            }
        };
        if doc.id.trim().is_empty() || doc.text.trim().is_empty() {
            let err = Error::parse(
                path,
                line,
                format!("document `{}` has an empty id or text", doc.id),
            );
            record_error(mode, &mut warnings, err)?;
            continue;
        }
        // Duplicate ids are fatal in both modes.
        if !seen.insert(doc.id.clone()) {
            return Err(Error::DuplicateId(doc.id));
        }
        records.push(doc);
    }
    Ok(Loaded { records, warnings })
}

pub fn write_documents(path: &Path, docs: &[Document]) -> Result<()> {
    jsonl::write_all(path, docs)
}

pub fn load_qa_pairs(path: &Path, mode: LoadMode) -> Result<Loaded<QAPair>> {
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    for (line, rec) in jsonl::read_lines::<QAPair>(path)? {
        match rec {
            Ok(qa) if !qa.question.trim().is_empty() && !qa.answer.trim().is_empty() => {
                records.push(qa)
            }
            Ok(_) => record_error(
                mode,
                &mut warnings,
                Error::parse(path, line, "empty question or answer"),
            )?,
            Err(msg) => record_error(mode, &mut warnings, Error::parse(path, line, msg))?,
        }
    }
    Ok(Loaded { records, warnings })
}

pub fn write_qa_pairs(path: &Path, pairs: &[QAPair]) -> Result<()> {
    jsonl::write_all(path, pairs)
}

pub fn write_paragraphs(path: &Path, paragraphs: &[Paragraph]) -> Result<()> {
    jsonl::write_all(path, paragraphs)
}

// ---------------------------------------------------------------------------
// Abbreviation expansion
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct Definition {
    short: String,
    long: String,
    /// Start of the clause holding the long form.
    window_start: usize,
    /// Byte offset just past the closing parenthesis.
    end: usize,
}

fn is_short_form(sf: &str) -> bool {
    let n = sf.chars().count();
    if !(1..=10).contains(&n) || sf.chars().any(char::is_whitespace) {
        return false;
    }
    if !sf.chars().next().is_some_and(char::is_alphanumeric) {
        return false;
    }
    let letters: Vec<char> = sf.chars().filter(|c| c.is_alphabetic()).collect();
    if letters.is_empty() {
        return false;
    }
    let upper = letters.iter().filter(|c| c.is_uppercase()).count();
    upper * 2 >= letters.len()
}

/// Classic Schwartz-Hearst match: walk the short form right to left, finding
/// each alphanumeric character in the candidate long form in order; the first
/// short-form character must start a word. Returns the trimmed long form.
fn best_long_form(short: &str, candidate: &str) -> Option<String> {
    let sf: Vec<char> = short.chars().flat_map(char::to_lowercase).collect();
    let lf: Vec<char> = candidate.chars().collect();
    let lf_lower: Vec<char> = lf
        .iter()
        .map(|c| c.to_lowercase().next().unwrap_or(*c))
        .collect();
    let mut s = sf.len() as isize - 1;
    let mut l = lf.len() as isize - 1;
    while s >= 0 {
        let c = sf[s as usize];
        if !c.is_alphanumeric() {
            s -= 1;
            continue;
        }
        while l >= 0
            && (lf_lower[l as usize] != c
                || (s == 0 && l > 0 && lf[(l - 1) as usize].is_alphanumeric()))
        {
            l -= 1;
        }
        if l < 0 {
            return None;
        }
        l -= 1;
        s -= 1;
    }
    let start = (l + 1) as usize;
    let word_start = lf[..start]
        .iter()
        .rposition(|c| c.is_whitespace())
        .map_or(0, |p| p + 1);
    let long: String = lf[word_start..].iter().collect();
    Some(long.trim().to_string())
}

fn contains_standalone(haystack: &str, needle: &str) -> bool {
    standalone_matches(haystack, needle).next().is_some()
}

fn standalone_matches<'a>(haystack: &'a str, needle: &'a str) -> impl Iterator<Item = usize> + 'a {
    haystack.match_indices(needle).filter_map(move |(i, m)| {
        let before_ok = haystack[..i]
            .chars()
            .next_back()
            .is_none_or(|c| !c.is_alphanumeric());
        let after_ok = haystack[i + m.len()..]
            .chars()
            .next()
            .is_none_or(|c| !c.is_alphanumeric());
        (before_ok && after_ok).then_some(i)
    })
}

fn find_definitions(text: &str) -> Vec<Definition> {
    let mut defs: Vec<Definition> = Vec::new();
    for (open, _) in text.match_indices('(') {
        let rest = &text[open + 1..];
        let Some(close_rel) = rest.find([')', '(']) else {
            continue;
        };
        if !rest[close_rel..].starts_with(')') {
            continue;
        }
        let short = &rest[..close_rel];
        if !is_short_form(short) {
            continue;
        }
        let window_start = text[..open]
            .rfind(['.', '!', '?', ';', ':', ',', '(', ')', '\n'])
            .map_or(0, |p| p + 1);
        let window = &text[window_start..open];
        let n_sf = short.chars().count();
        let max_words = (n_sf + 5).min(n_sf * 2);
        let words: Vec<&str> = window.split_whitespace().collect();
        if words.is_empty() {
            continue;
        }
        let candidate = words[words.len().saturating_sub(max_words)..].join(" ");
        let Some(long) = best_long_form(short, &candidate) else {
            continue;
        };
        if long.chars().count() <= n_sf || contains_standalone(&long, short) {
            continue;
        }
        if defs.iter().any(|d| d.short == short) {
            continue;
        }
        defs.push(Definition {
            short: short.to_string(),
            long,
            window_start,
            end: open + 1 + close_rel + 1,
        });
    }
    defs
}

/// Detect `long form (SF)` definitions and replace later standalone uses of
/// each short form with its long form. The defining occurrence is kept.
///
/// Returns the rewritten text and the short→long mapping in definition order.
pub fn expand_abbreviations(text: &str) -> (String, Vec<(String, String)>) {
    let defs = find_definitions(text);
    if defs.is_empty() {
        return (text.to_string(), Vec::new());
    }
    let protected: Vec<(usize, usize)> = defs.iter().map(|d| (d.window_start, d.end)).collect();
    let mut hits: Vec<(usize, usize, &str)> = Vec::new();
    for def in &defs {
        for start in standalone_matches(text, &def.short) {
            let end = start + def.short.len();
            if start < def.end || protected.iter().any(|&(s, e)| start < e && end > s) {
                continue;
            }
            hits.push((start, end, &def.long));
        }
    }
    // Longest match first at equal starts, then drop overlaps.
    hits.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
    let mut out = String::with_capacity(text.len());
    let mut cursor = 0;
    for (start, end, long) in hits {
        if start < cursor {
            continue;
        }
        out.push_str(&text[cursor..start]);
        out.push_str(long);
        cursor = end;
    }
    out.push_str(&text[cursor..]);
    let map = defs.into_iter().map(|d| (d.short, d.long)).collect();
    (out, map)
}

// ---------------------------------------------------------------------------
// Coreference
// ---------------------------------------------------------------------------

const PRONOUNS: [&str; 3] = ["It", "This", "They"];

/// External coreference resolver.
pub trait CoreferenceProvider: Send + Sync {
    fn resolve(&self, text: &str, entity: &str) -> Result<String>;
}

#[derive(Serialize)]
struct CorefRequest<'a> {
    text: &'a str,
    entity: &'a str,
}

#[derive(Deserialize)]
struct CorefResponse {
    text: String,
}

/// Coreference resolver running as a child process (`{"text","entity"}` →
/// `{"text"}`).
pub struct SubprocessCoreference {
    client: SubprocessClient,
}

impl SubprocessCoreference {
    pub fn spawn(command: &[String]) -> Result<Self> {
        Ok(Self {
            client: SubprocessClient::spawn(command)?,
        })
    }
}

impl CoreferenceProvider for SubprocessCoreference {
    fn resolve(&self, text: &str, entity: &str) -> Result<String> {
        let resp: CorefResponse = self.client.call(&CorefRequest { text, entity })?;
        Ok(resp.text)
    }
}

fn contains_tokens(haystack: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

/// Rule-based fallback: a sentence-initial `It`, `This` or `They` is replaced
/// by `main_entity` once the entity has been mentioned in an earlier sentence.
pub fn resolve_coreferences(text: &str, main_entity: &str) -> String {
    let entity_tokens = text::tokenize(main_entity);
    if entity_tokens.is_empty() {
        return text.to_string();
    }
    let mut out = String::with_capacity(text.len());
    let mut mentioned = false;
    for (s, e) in sentence_spans(text) {
        let sentence = &text[s..e];
        let lead = sentence.len() - sentence.trim_start().len();
        let body = &sentence[lead..];
        let pronoun = PRONOUNS.iter().find(|p| {
            body.starts_with(*p)
                && body[p.len()..]
                    .chars()
                    .next()
                    .is_none_or(|c| !c.is_alphanumeric())
        });
        match pronoun {
            Some(p) if mentioned => {
                out.push_str(&sentence[..lead]);
                out.push_str(main_entity);
                out.push_str(&body[p.len()..]);
            }
            _ => out.push_str(sentence),
        }
        if contains_tokens(&text::tokenize(sentence), &entity_tokens) {
            mentioned = true;
        }
    }
    out
}

/// Use the external provider when one is configured, else the rule-based
/// fallback.
pub fn resolve_coreferences_with(
    text: &str,
    main_entity: &str,
    provider: Option<&dyn CoreferenceProvider>,
) -> Result<String> {
    match provider {
        Some(p) => p.resolve(text, main_entity),
        None => Ok(resolve_coreferences(text, main_entity)),
    }
}

/// Abbreviation expansion followed by coreference resolution against the
/// document's disease.
pub fn preprocess_documents(
    docs: &[Document],
    coref: Option<&dyn CoreferenceProvider>,
) -> Result<Vec<Document>> {
    docs.iter()
        .map(|doc| {
            let (expanded, _) = expand_abbreviations(&doc.text);
            let text = resolve_coreferences_with(&expanded, &doc.disease, coref)?;
            Ok(Document {
                text,
                ..doc.clone()
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Chunking
// ---------------------------------------------------------------------------

fn blocks(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            if !current.is_empty() {
                out.push(current.join("\n"));
                current.clear();
            }
        } else {
            current.push(line);
        }
    }
    if !current.is_empty() {
        out.push(current.join("\n"));
    }
    out
}

/// Cut a single whitespace-free word into pieces of at most `max` tokens.
fn split_word(word: &str, max: usize) -> Vec<String> {
    let mut pieces = Vec::new();
    let mut start = 0;
    let mut tokens = 0;
    let mut in_token = false;
    for (i, c) in word.char_indices() {
        let alnum = c.is_alphanumeric();
        if alnum && !in_token {
            if tokens == max {
                pieces.push(word[start..i].to_string());
                start = i;
                tokens = 0;
            }
            tokens += 1;
        }
        in_token = alnum;
    }
    pieces.push(word[start..].to_string());
    pieces
}

/// Pieces no larger than `max` tokens: sentences, else words, else word
/// fragments.
fn pieces(block: &str, max: usize) -> Vec<String> {
    let mut out = Vec::new();
    for sentence in text::split_sentences(block) {
        if token_count(&sentence) <= max {
            out.push(text::collapse_whitespace(&sentence));
            continue;
        }
        for word in sentence.split_whitespace() {
            if token_count(word) <= max {
                out.push(word.to_string());
            } else {
                out.extend(split_word(word, max));
            }
        }
    }
    out
}

fn pack(pieces: Vec<String>, max: usize) -> Vec<String> {
    let mut chunks = Vec::new();
    let mut current = String::new();
    let mut count = 0;
    for piece in pieces {
        let n = token_count(&piece);
        if !current.is_empty() && count + n > max {
            chunks.push(std::mem::take(&mut current));
            count = 0;
        }
        if !current.is_empty() {
            current.push(' ');
        }
        current.push_str(&piece);
        count += n;
    }
    if !current.is_empty() {
        chunks.push(current);
    }
    chunks
}

/// Split each document on blank lines, then greedily re-split any block over
/// `max_tokens` at sentence boundaries.
pub fn chunk_paragraphs(docs: &[Document], max_tokens: usize) -> Result<Vec<Paragraph>> {
    if max_tokens == 0 {
        return Err(Error::Invalid("max_tokens must be at least 1".into()));
    }
    let mut out = Vec::new();
    for doc in docs {
        let mut ordinal = 0;
        for block in blocks(&doc.text) {
            let texts = if token_count(&block) <= max_tokens {
                vec![block.trim().to_string()]
            } else {
                pack(pieces(&block, max_tokens), max_tokens)
            };
            for text in texts {
                out.push(Paragraph {
                    doc_id: doc.id.clone(),
                    ordinal,
                    token_count: token_count(&text),
                    text,
                });
                ordinal += 1;
            }
        }
    }
    Ok(out)
}
