//! Batch evaluation: score system answers against gold answers, aggregate
//! per group, and render report tables.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{record_error, LoadMode, Loaded};
use crate::error::{Error, Result};
use crate::jsonl;
use crate::metrics::{
    bertscore_text, detect_contradiction, flesch_reading_ease, kde_overlap, mean, median, rouge_l,
    sample_std, welch_t_test, NliProvider, StsProvider,
};
use crate::text;
use crate::vector_store::Embedder;

pub const DEFAULT_MAX_WORDS: usize = 150;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    AboutDisease,
    AtRisk,
    Cause,
    DiagnosisAndTest,
    Symptom,
    Treatment,
    Other,
}

impl Category {
    pub const ALL: [Category; 7] = [
        Category::AboutDisease,
        Category::AtRisk,
        Category::Cause,
        Category::DiagnosisAndTest,
        Category::Symptom,
        Category::Treatment,
        Category::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::AboutDisease => "about_disease",
            Category::AtRisk => "at_risk",
            Category::Cause => "cause",
            Category::DiagnosisAndTest => "diagnosis_and_test",
            Category::Symptom => "symptom",
            Category::Treatment => "treatment",
            Category::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestQuestion {
    pub id: String,
    pub question: String,
    pub category: Category,
    pub gold_answer: String,
}

/// Question id → answer text for one system.
pub type SystemAnswers = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct AnswerRecord {
    id: String,
    answer: String,
}

/// Load `{"id","question","category","gold_answer"}` lines. Duplicate ids
/// are always fatal.
pub fn load_testset(path: &Path, mode: LoadMode) -> Result<Loaded<TestQuestion>> {
    let mut records: Vec<TestQuestion> = Vec::new();
    let mut warnings = Vec::new();
    let mut seen = HashSet::new();
    for (line, rec) in jsonl::read_lines::<TestQuestion>(path)? {
        match rec {
            Ok(q) if q.id.trim().is_empty() || q.gold_answer.trim().is_empty() => record_error(
                mode,
                &mut warnings,
                Error::parse(path, line, "empty id or gold_answer"),
            )?,
            Ok(q) => {
                if !seen.insert(q.id.clone()) {
                    return Err(Error::DuplicateId(q.id));
                }
                records.push(q);
            }
            Err(msg) => record_error(mode, &mut warnings, Error::parse(path, line, msg))?,
        }
    }
    Ok(Loaded { records, warnings })
}

pub fn write_testset(path: &Path, questions: &[TestQuestion]) -> Result<()> {
    jsonl::write_all(path, questions)
}

/// Load `{"id","answer"}` lines. A repeated id is an error.
pub fn load_system_answers(path: &Path) -> Result<SystemAnswers> {
    let mut out = SystemAnswers::new();
    for rec in jsonl::read_all::<AnswerRecord>(path)? {
        if out.insert(rec.id.clone(), rec.answer).is_some() {
            return Err(Error::DuplicateId(rec.id));
        }
    }
    Ok(out)
}

pub fn write_system_answers(path: &Path, answers: &SystemAnswers) -> Result<()> {
    jsonl::write_all(
        path,
        answers.iter().map(|(id, answer)| AnswerRecord {
            id: id.clone(),
            answer: answer.clone(),
        }),
    )
}

// ---------------------------------------------------------------------------
// Per-question scoring
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    RougeL,
    #[serde(rename = "bertscore")]
    BertScore,
    Sts,
    Flesch,
    /// 1 when any answer/gold sentence pair is flagged, otherwise 0.
    Contradiction,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::RougeL,
        Metric::BertScore,
        Metric::Sts,
        Metric::Flesch,
        Metric::Contradiction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::RougeL => "rouge_l",
            Metric::BertScore => "bertscore",
            Metric::Sts => "sts",
            Metric::Flesch => "flesch",
            Metric::Contradiction => "contradiction",
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::UnknownMetric(s.to_string()))
    }
}

pub fn parse_metrics<S: AsRef<str>>(names: &[S]) -> Result<Vec<Metric>> {
    names.iter().map(|n| n.as_ref().parse()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub question_id: String,
    pub system: String,
    pub metric: String,
    pub value: f64,
}

/// The scoring back ends. `nli` is needed only for the contradiction metric.
#[derive(Clone, Copy)]
pub struct MetricProviders<'a> {
    pub embedder: &'a dyn Embedder,
    pub sts: &'a dyn StsProvider,
    pub nli: Option<&'a dyn NliProvider>,
    pub contradiction_threshold: f64,
}

fn score(metric: Metric, answer: &str, gold: &str, providers: &MetricProviders) -> Result<f64> {
    Ok(match metric {
        Metric::RougeL => rouge_l(answer, gold).f1,
        Metric::BertScore => bertscore_text(answer, gold, providers.embedder)?.f1,
        Metric::Sts => providers.sts.sts(answer, gold)?,
        Metric::Flesch => flesch_reading_ease(answer)?,
        Metric::Contradiction => {
            let nli = providers.nli.ok_or_else(|| {
                Error::Config("the contradiction metric needs an NLI provider".into())
            })?;
            f64::from(u8::from(
                detect_contradiction(answer, gold, nli, providers.contradiction_threshold)?
                    .contradicted,
            ))
        }
    })
}

/// One record per (question, metric), in test-set order then metric order.
/// Questions without an answer are fatal in strict mode and skipped with a
/// warning in lenient mode.
pub fn run_evaluation(
    testset: &[TestQuestion],
    system: &str,
    answers: &SystemAnswers,
    metrics: &[Metric],
    providers: &MetricProviders,
    mode: LoadMode,
) -> Result<(Vec<EvalRecord>, Vec<String>)> {
    let mut warnings = Vec::new();
    let mut work = Vec::new();
    for q in testset {
        match answers.get(&q.id) {
            Some(a) => work.push((q, a.as_str())),
            None => record_error(
                mode,
                &mut warnings,
                Error::Invalid(format!(
                    "system `{system}` has no answer for question `{}`",
                    q.id
                )),
            )?,
        }
    }
    let threads = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(work.len().max(1));
    let chunk = work.len().div_ceil(threads).max(1);
    let per_chunk: Vec<Result<Vec<EvalRecord>>> = std::thread::scope(|s| {
        let handles: Vec<_> = work
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    let mut out = Vec::with_capacity(part.len() * metrics.len());
                    for (q, answer) in part {
                        for &m in metrics {
                            out.push(EvalRecord {
                                question_id: q.id.clone(),
                                system: system.to_string(),
                                metric: m.name().to_string(),
                                value: score(m, answer, &q.gold_answer, providers)?,
                            });
                        }
                    }
                    Ok(out)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(Error::Invalid("evaluation worker panicked".into())))
            })
            .collect()
    });
    let mut records = Vec::new();
    for part in per_chunk {
        records.extend(part?);
    }
    Ok((records, warnings))
}

pub fn write_records(path: &Path, records: &[EvalRecord]) -> Result<()> {
    jsonl::write_all(path, records)
}

// ---------------------------------------------------------------------------
// Length control
// ---------------------------------------------------------------------------

/// Keep answers of at most `max_words` tokens. Returns the kept answers and
/// their ids in id order.
pub fn length_filter(
    answers: &SystemAnswers,
    max_words: usize,
) -> Result<(SystemAnswers, Vec<String>)> {
    if max_words == 0 {
        return Err(Error::Invalid("max_words must be at least 1".into()));
    }
    let kept: SystemAnswers = answers
        .iter()
        .filter(|(_, a)| text::token_count(a) <= max_words)
        .map(|(id, a)| (id.clone(), a.clone()))
        .collect();
    let ids = kept.keys().cloned().collect();
    Ok((kept, ids))
}

/// Ids kept by every system, in id order.
pub fn kept_intersection(kept: &[Vec<String>]) -> Vec<String> {
    let Some((first, rest)) = kept.split_first() else {
        return Vec::new();
    };
    let rest: Vec<HashSet<&String>> = rest.iter().map(|k| k.iter().collect()).collect();
    let out: BTreeSet<&String> = first
        .iter()
        .filter(|id| rest.iter().all(|s| s.contains(id)))
        .collect();
    out.into_iter().cloned().collect()
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    Overall,
    Category,
}

pub const OVERALL: &str = "overall";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryCell {
    pub system: String,
    pub metric: String,
    pub group: String,
    pub n: usize,
    pub min: f64,
    pub max: f64,
    pub median: f64,
    pub mean: f64,
    /// Sample standard deviation, present when `n ≥ 2`.
    pub std: Option<f64>,
    /// Welch two-sided p against the reference system's values for the same
    /// metric and group.
    pub p_value: Option<f64>,
    /// KDE overlap (percent) with the reference system's values.
    pub kde_overlap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryTable {
    pub group_by: GroupBy,
    pub reference_system: Option<String>,
    /// Column order.
    pub systems: Vec<String>,
    /// Metrics in first-appearance order.
    pub metrics: Vec<String>,
    /// Group labels in row order.
    pub groups: Vec<String>,
    pub cells: Vec<SummaryCell>,
}

impl SummaryTable {
    pub fn cell(&self, system: &str, metric: &str, group: &str) -> Option<&SummaryCell> {
        self.cells
            .iter()
            .find(|c| c.system == system && c.metric == metric && c.group == group)
    }
}

fn describe(values: &[f64]) -> (f64, f64, f64, f64, Option<f64>) {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let med = median(values).unwrap_or(f64::NAN);
    (min, max, med, mean(values), sample_std(values))
}

fn first_appearance<'a>(items: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut seen = HashSet::new();
    items
        .filter(|s| seen.insert(*s))
        .map(str::to_string)
        .collect()
}

/// Aggregate records per (system, metric, group). Values within each group
/// are sorted before aggregation so the result does not depend on record
/// order. Groups with no values for some system are omitted with a warning.
pub fn summarize_scores(
    records: &[EvalRecord],
    categories: &BTreeMap<String, Category>,
    group_by: GroupBy,
    reference_system: Option<&str>,
) -> Result<(SummaryTable, Vec<String>)> {
    if records.is_empty() {
        return Err(Error::Invalid("no evaluation records to summarize".into()));
    }
    let systems = first_appearance(records.iter().map(|r| r.system.as_str()));
    let metrics = first_appearance(records.iter().map(|r| r.metric.as_str()));
    if let Some(reference) = reference_system {
        if !systems.iter().any(|s| s == reference) {
            return Err(Error::UnknownId(format!("reference system `{reference}`")));
        }
    }
    let mut values: BTreeMap<(&str, &str, String), Vec<f64>> = BTreeMap::new();
    for r in records {
        let group = match group_by {
            GroupBy::Overall => OVERALL.to_string(),
            GroupBy::Category => categories
                .get(&r.question_id)
                .ok_or_else(|| {
                    Error::UnknownId(format!("question `{}` has no category", r.question_id))
                })?
                .as_str()
                .to_string(),
        };
        values
            .entry((&r.system, &r.metric, group))
            .or_default()
            .push(r.value);
    }
    for v in values.values_mut() {
        v.sort_by(f64::total_cmp);
    }
    let groups: Vec<String> = match group_by {
        GroupBy::Overall => vec![OVERALL.to_string()],
        GroupBy::Category => {
            let present: BTreeSet<Category> = records
                .iter()
                .filter_map(|r| categories.get(&r.question_id).copied())
                .collect();
            present
                .into_iter()
                .map(|c| c.as_str().to_string())
                .collect()
        }
    };
    let mut warnings = Vec::new();
    let mut cells = Vec::new();
    for metric in &metrics {
        for group in &groups {
            let reference_values =
                reference_system.and_then(|s| values.get(&(s, metric.as_str(), group.clone())));
            for system in &systems {
                let Some(vals) = values.get(&(system.as_str(), metric.as_str(), group.clone()))
                else {
                    warnings.push(format!(
                        "no `{metric}` values for system `{system}` in group `{group}`"
                    ));
                    continue;
                };
                let (min, max, median, mean, std) = describe(vals);
                let is_reference = reference_system == Some(system.as_str());
                let against = reference_values.filter(|_| !is_reference);
                let p_value = against
                    .and_then(|r| welch_t_test(vals, r).ok())
                    .map(|t| t.p);
                let kde = against.and_then(|r| kde_overlap(vals, r).ok());
                cells.push(SummaryCell {
                    system: system.clone(),
                    metric: metric.clone(),
                    group: group.clone(),
                    n: vals.len(),
                    min,
                    max,
                    median,
                    mean,
                    std,
                    p_value,
                    kde_overlap: kde,
                });
            }
        }
    }
    Ok((
        SummaryTable {
            group_by,
            reference_system: reference_system.map(str::to_string),
            systems,
            metrics,
            groups,
            cells,
        },
        warnings,
    ))
}

pub fn write_summary(path: &Path, table: &SummaryTable) -> Result<()> {
    jsonl::write_all(path, &table.cells)
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

fn fmt_value(x: f64) -> String {
    format!("{x:.4}")
}

fn fmt_p(p: f64) -> String {
    format!("{p:.2e}")
}

fn render_block(out: &mut String, title: &str, header: &[String], rows: &[(String, Vec<String>)]) {
    let label_width = rows
        .iter()
        .map(|(l, _)| l.len())
        .max()
        .unwrap_or(0)
        .max(title.len().min(24));
    let widths: Vec<usize> = header
        .iter()
        .enumerate()
        .map(|(i, h)| {
            rows.iter()
                .map(|(_, c)| c[i].len())
                .max()
                .unwrap_or(0)
                .max(h.len())
        })
        .collect();
    let _ = writeln!(out, "{title}");
    let mut line = format!("{:label_width$}", "");
    for (h, w) in header.iter().zip(&widths) {
        let _ = write!(line, "  {h:>w$}");
    }
    let _ = writeln!(out, "{}", line.trim_end());
    for (label, cells) in rows {
        let mut line = format!("{label:label_width$}");
        for (c, w) in cells.iter().zip(&widths) {
            let _ = write!(line, "  {c:>w$}");
        }
        let _ = writeln!(out, "{}", line.trim_end());
    }
    out.push('\n');
}

/// Plain-text report. Overall tables list min, max, median, mean and
/// std. dev. per system, with the p-value against the reference in brackets
/// after the mean; category tables list medians. Missing values print as `-`.
pub fn render_table(table: &SummaryTable) -> String {
    let mut out = String::new();
    let header = table.systems.clone();
    let reference_note = table
        .reference_system
        .as_deref()
        .map(|r| format!("  [p-values and overlaps vs {r}]"))
        .unwrap_or_default();
    for metric in &table.metrics {
        let get = |system: &str, group: &str| table.cell(system, metric, group);
        match table.group_by {
            GroupBy::Overall => {
                let stat = |f: &dyn Fn(&SummaryCell) -> String| -> Vec<String> {
                    table
                        .systems
                        .iter()
                        .map(|s| get(s, OVERALL).map_or_else(|| "-".to_string(), f))
                        .collect()
                };
                let mut rows = vec![
                    ("n".to_string(), stat(&|c| c.n.to_string())),
                    ("min".to_string(), stat(&|c| fmt_value(c.min))),
                    ("max".to_string(), stat(&|c| fmt_value(c.max))),
                    ("median".to_string(), stat(&|c| fmt_value(c.median))),
                    (
                        "mean".to_string(),
                        stat(&|c| match c.p_value {
                            Some(p) => format!("{} ({})", fmt_value(c.mean), fmt_p(p)),
                            None => fmt_value(c.mean),
                        }),
                    ),
                    (
                        "std. dev.".to_string(),
                        stat(&|c| c.std.map_or_else(|| "-".to_string(), fmt_value)),
                    ),
                ];
                if table.reference_system.is_some() {
                    rows.push((
                        "kde overlap %".to_string(),
                        stat(&|c| {
                            c.kde_overlap
                                .map_or_else(|| "-".to_string(), |o| format!("{o:.2}"))
                        }),
                    ));
                }
                render_block(
                    &mut out,
                    &format!("{metric} (overall){reference_note}"),
                    &header,
                    &rows,
                );
            }
            GroupBy::Category => {
                let rows: Vec<(String, Vec<String>)> = table
                    .groups
                    .iter()
                    .map(|g| {
                        let cells = table
                            .systems
                            .iter()
                            .map(|s| match get(s, g) {
                                None => "-".to_string(),
                                Some(c) => match c.p_value {
                                    Some(p) => format!("{} ({})", fmt_value(c.median), fmt_p(p)),
                                    None => fmt_value(c.median),
                                },
                            })
                            .collect();
                        (g.clone(), cells)
                    })
                    .collect();
                render_block(
                    &mut out,
                    &format!("{metric} median by category{reference_note}"),
                    &header,
                    &rows,
                );
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{EmbeddingSts, EntailmentProbs, StubNli};
    use crate::vector_store::HashingEmbedder;

    fn q(id: &str, category: Category, gold: &str) -> TestQuestion {
        TestQuestion {
            id: id.into(),
            question: format!("question {id}"),
            category,
            gold_answer: gold.into(),
        }
    }

    fn rec(id: &str, system: &str, metric: &str, value: f64) -> EvalRecord {
        EvalRecord {
            question_id: id.into(),
            system: system.into(),
            metric: metric.into(),
            value,
        }
    }

    #[test]
    fn cardinality_and_identity() {
        let embedder = HashingEmbedder::default();
        let sts = EmbeddingSts::new(&embedder);
        let providers = MetricProviders {
            embedder: &embedder,
            sts: &sts,
            nli: None,
            contradiction_threshold: 0.95,
        };
        let tests = [
            q("1", Category::Cause, "Obesity causes gout."),
            q("2", Category::Symptom, "Pain and swelling."),
            q("3", Category::Treatment, "Rest helps."),
        ];
        let answers: SystemAnswers = [
            ("1", "Obesity causes gout."),
            ("2", "Swelling."),
            ("3", "Ice."),
        ]
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
        let (records, warnings) = run_evaluation(
            &tests,
            "sys",
            &answers,
            &[Metric::RougeL, Metric::Flesch],
            &providers,
            LoadMode::Strict,
        )
        .unwrap();
        assert!(warnings.is_empty());
        assert_eq!(records.len(), 6);
        assert_eq!(records[0].metric, "rouge_l");
        assert_eq!(records[0].value, 1.0);
    }

    #[test]
    fn missing_answer_strict_and_lenient() {
        let embedder = HashingEmbedder::default();
        let sts = EmbeddingSts::new(&embedder);
        let providers = MetricProviders {
            embedder: &embedder,
            sts: &sts,
            nli: None,
            contradiction_threshold: 0.95,
        };
        let tests = [
            q("1", Category::Cause, "gold"),
            q("2", Category::Cause, "gold"),
        ];
        let answers: SystemAnswers = [("1".to_string(), "gold".to_string())]
            .into_iter()
            .collect();
        assert!(run_evaluation(
            &tests,
            "s",
            &answers,
            &[Metric::RougeL],
            &providers,
            LoadMode::Strict
        )
        .is_err());
        let (records, warnings) = run_evaluation(
            &tests,
            "s",
            &answers,
            &[Metric::RougeL],
            &providers,
            LoadMode::Lenient,
        )
        .unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn contradiction_metric_uses_nli() {
        let embedder = HashingEmbedder::default();
        let sts = EmbeddingSts::new(&embedder);
        let mut nli = StubNli::new();
        nli.insert(
            "Gout is curable.",
            "Gout is incurable.",
            EntailmentProbs {
                positive: 0.01,
                neutral: 0.02,
                negative: 0.97,
            },
        );
        let providers = MetricProviders {
            embedder: &embedder,
            sts: &sts,
            nli: Some(&nli),
            contradiction_threshold: 0.95,
        };
        let tests = [q("1", Category::Treatment, "Gout is curable.")];
        let answers: SystemAnswers = [("1".to_string(), "Gout is incurable.".to_string())]
            .into_iter()
            .collect();
        let (records, _) = run_evaluation(
            &tests,
            "s",
            &answers,
            &[Metric::Contradiction],
            &providers,
            LoadMode::Strict,
        )
        .unwrap();
        assert_eq!(records[0].value, 1.0);
        let without = MetricProviders {
            nli: None,
            ..providers
        };
        assert!(run_evaluation(
            &tests,
            "s",
            &answers,
            &[Metric::Contradiction],
            &without,
            LoadMode::Strict
        )
        .is_err());
    }

    #[test]
    fn unknown_metric_name() {
        assert!(
            matches!(parse_metrics(&["rouge_l", "bleu"]), Err(Error::UnknownMetric(m)) if m == "bleu")
        );
        assert_eq!(
            parse_metrics(&["sts", "bertscore"]).unwrap(),
            vec![Metric::Sts, Metric::BertScore]
        );
    }

    #[test]
    fn summary_of_four_values() {
        let records: Vec<EvalRecord> = [1.0, 2.0, 3.0, 4.0]
            .iter()
            .enumerate()
            .map(|(i, v)| rec(&i.to_string(), "s", "rouge_l", *v))
            .collect();
        let (table, _) =
            summarize_scores(&records, &BTreeMap::new(), GroupBy::Overall, None).unwrap();
        let c = table.cell("s", "rouge_l", OVERALL).unwrap();
        assert_eq!((c.min, c.max, c.median, c.mean), (1.0, 4.0, 2.5, 2.5));
        // sqrt(5/3)
        assert!((c.std.unwrap() - 1.290_994_448_735_805_6).abs() < 1e-12);
    }

    #[test]
    fn single_value_has_no_std() {
        let (table, _) = summarize_scores(
            &[rec("1", "s", "flesch", 0.7)],
            &BTreeMap::new(),
            GroupBy::Overall,
            None,
        )
        .unwrap();
        let c = &table.cells[0];
        assert_eq!((c.min, c.max, c.median, c.mean), (0.7, 0.7, 0.7, 0.7));
        assert_eq!(c.std, None);
    }

    #[test]
    fn identical_systems_have_p_one() {
        let mut records = Vec::new();
        for (i, v) in [0.1, 0.5, 0.3].iter().enumerate() {
            records.push(rec(&i.to_string(), "a", "rouge_l", *v));
            records.push(rec(&i.to_string(), "b", "rouge_l", *v));
        }
        let (table, _) =
            summarize_scores(&records, &BTreeMap::new(), GroupBy::Overall, Some("a")).unwrap();
        assert_eq!(table.cell("a", "rouge_l", OVERALL).unwrap().p_value, None);
        let b = table.cell("b", "rouge_l", OVERALL).unwrap();
        assert_eq!(b.p_value, Some(1.0));
        assert!(b.kde_overlap.unwrap() >= 99.0);
    }

    #[test]
    fn per_category_groups_and_missing_groups() {
        let categories: BTreeMap<String, Category> = [
            ("1".to_string(), Category::Cause),
            ("2".to_string(), Category::Cause),
            ("3".to_string(), Category::Symptom),
        ]
        .into_iter()
        .collect();
        let records = vec![
            rec("1", "a", "rouge_l", 0.2),
            rec("2", "a", "rouge_l", 0.4),
            rec("3", "a", "rouge_l", 0.9),
            rec("1", "b", "rouge_l", 0.5),
        ];
        let (table, warnings) =
            summarize_scores(&records, &categories, GroupBy::Category, None).unwrap();
        assert_eq!(table.groups, vec!["cause", "symptom"]);
        assert!((table.cell("a", "rouge_l", "cause").unwrap().median - 0.3).abs() < 1e-12);
        assert!(table.cell("b", "rouge_l", "symptom").is_none());
        assert_eq!(warnings.len(), 1);
        let unknown = [rec("9", "a", "rouge_l", 0.1)];
        assert!(summarize_scores(&unknown, &categories, GroupBy::Category, None).is_err());
    }

    #[test]
    fn length_boundaries() {
        let words = |n: usize| vec!["word"; n].join(" ");
        let answers: SystemAnswers = [("a", words(150)), ("b", words(151)), ("c", words(3))]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        let (kept, ids) = length_filter(&answers, DEFAULT_MAX_WORDS).unwrap();
        assert_eq!(ids, vec!["a", "c"]);
        assert_eq!(kept.len(), 2);
        let (all, _) = length_filter(&answers, usize::MAX).unwrap();
        assert_eq!(all, answers);
        assert!(length_filter(&answers, 0).is_err());
    }

    #[test]
    fn intersection_of_kept_ids() {
        let kept = vec![
            vec!["1".to_string(), "2".to_string(), "3".to_string()],
            vec!["3".to_string(), "1".to_string()],
        ];
        assert_eq!(kept_intersection(&kept), vec!["1", "3"]);
        assert!(kept_intersection(&[]).is_empty());
    }

    #[test]
    fn rendered_overall_block() {
        let records = vec![
            rec("1", "base", "rouge_l", 0.1),
            rec("2", "base", "rouge_l", 0.3),
            rec("1", "ours", "rouge_l", 0.5),
            rec("2", "ours", "rouge_l", 0.9),
        ];
        let (table, _) =
            summarize_scores(&records, &BTreeMap::new(), GroupBy::Overall, Some("ours")).unwrap();
        let text = render_table(&table);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "rouge_l (overall)  [p-values and overlaps vs ours]"
        );
        assert!(lines[1].ends_with("base    ours"), "{:?}", lines[1]);
        assert!(lines
            .iter()
            .any(|l| l.starts_with("median") && l.contains("0.2000") && l.contains("0.7000")));
        let mean_line = lines.iter().find(|l| l.starts_with("mean")).unwrap();
        assert!(mean_line.contains("0.2000 ("), "{mean_line}");
    }

    #[test]
    fn testset_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tests.jsonl");
        let qs = vec![
            q("1", Category::AtRisk, "Older adults."),
            q("2", Category::Other, "See a doctor."),
        ];
        write_testset(&path, &qs).unwrap();
        assert_eq!(load_testset(&path, LoadMode::Strict).unwrap().records, qs);
        std::fs::write(
            &path,
            "{\"id\":\"1\",\"question\":\"q\",\"category\":\"weather\",\"gold_answer\":\"g\"}\n",
        )
        .unwrap();
        assert!(load_testset(&path, LoadMode::Strict).is_err());
        assert!(
            load_testset(&path, LoadMode::Lenient)
                .unwrap()
                .warnings
                .len()
                == 1
        );
        let answers_path = dir.path().join("answers.jsonl");
        let answers: SystemAnswers = [("1".to_string(), "x".to_string())].into_iter().collect();
        write_system_answers(&answers_path, &answers).unwrap();
        assert_eq!(load_system_answers(&answers_path).unwrap(), answers);
    }
}
