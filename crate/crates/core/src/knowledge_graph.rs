//! The disease knowledge graph: disease, term and CUI nodes joined by typed
//! edges, one edge type per document section.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Document, LoadMode};
use crate::error::{Error, Result};
use crate::jsonl;
use crate::text::{self, collapse_whitespace, token_count};

/// Relation linking a disease to the CUI node it shares with its synonyms.
pub const HAS_CUI: &str = "has_cui";

pub const DEFAULT_RELATIONS: [&str; 9] = [
    "overview",
    "symptoms",
    "causes",
    "risk_factors_of_disease",
    "risk_due_to_disease",
    "at_risk",
    "treatment",
    "prevention",
    "diagnosis",
];

const MAX_PHRASE_TOKENS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntityId(pub u32);

impl EntityId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Disease,
    Term,
    Cui,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Entity {
    pub id: EntityId,
    pub label: String,
    pub kind: EntityKind,
    pub norm_label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Triple {
    pub head: EntityId,
    pub relation: String,
    pub tail: EntityId,
}

#[derive(Debug, Clone, Default)]
pub struct KnowledgeGraph {
    entities: Vec<Entity>,
    by_key: HashMap<(EntityKind, String), EntityId>,
    triples: Vec<Triple>,
    triple_set: HashSet<Triple>,
    forward: HashMap<(EntityId, String), Vec<EntityId>>,
    backward: HashMap<(EntityId, String), Vec<EntityId>>,
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn entity(&self, id: EntityId) -> Option<&Entity> {
        self.entities.get(id.index())
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    /// Look an entity up by kind and any casing/punctuation of its label.
    pub fn find(&self, kind: EntityKind, label: &str) -> Option<EntityId> {
        self.by_key.get(&(kind, text::normalize(label))).copied()
    }

    pub fn entities_of(&self, kind: EntityKind) -> impl Iterator<Item = &Entity> {
        self.entities.iter().filter(move |e| e.kind == kind)
    }

    /// Return the existing entity with this key or create it. Labels are
    /// whitespace-collapsed; the first-seen casing is kept.
    pub fn get_or_insert(&mut self, label: &str, kind: EntityKind) -> Result<EntityId> {
        let norm_label = text::normalize(label);
        if norm_label.is_empty() {
            return Err(Error::Invalid(format!("label `{label}` has no tokens")));
        }
        if let Some(&id) = self.by_key.get(&(kind, norm_label.clone())) {
            return Ok(id);
        }
        let id = EntityId(self.entities.len() as u32);
        self.by_key.insert((kind, norm_label.clone()), id);
        self.entities.push(Entity {
            id,
            label: collapse_whitespace(label),
            kind,
            norm_label,
        });
        Ok(id)
    }

    /// Insert a triple; returns false when it was already present.
    pub fn add_triple(&mut self, head: EntityId, relation: &str, tail: EntityId) -> Result<bool> {
        for id in [head, tail] {
            if self.entity(id).is_none() {
                return Err(Error::UnknownId(id.to_string()));
            }
        }
        let triple = Triple {
            head,
            relation: relation.to_string(),
            tail,
        };
        if !self.triple_set.insert(triple.clone()) {
            return Ok(false);
        }
        self.forward
            .entry((head, relation.to_string()))
            .or_default()
            .push(tail);
        self.backward
            .entry((tail, relation.to_string()))
            .or_default()
            .push(head);
        self.triples.push(triple);
        Ok(true)
    }

    pub fn contains(&self, head: EntityId, relation: &str, tail: EntityId) -> bool {
        self.triple_set.contains(&Triple {
            head,
            relation: relation.to_string(),
            tail,
        })
    }

    /// Tails of `(head, relation, ·)` in insertion order.
    pub fn tails(&self, head: EntityId, relation: &str) -> &[EntityId] {
        self.forward
            .get(&(head, relation.to_string()))
            .map_or(&[], Vec::as_slice)
    }

    /// Heads of `(·, relation, tail)` in insertion order.
    pub fn heads(&self, tail: EntityId, relation: &str) -> &[EntityId] {
        self.backward
            .get(&(tail, relation.to_string()))
            .map_or(&[], Vec::as_slice)
    }

    /// Relations `r` with `(head, r, tail)` present, in insertion order.
    pub fn relations_between(&self, head: EntityId, tail: EntityId) -> Vec<&str> {
        self.triples
            .iter()
            .filter(|t| t.head == head && t.tail == tail)
            .map(|t| t.relation.as_str())
            .collect()
    }

    /// Distinct relation names in first-seen order.
    pub fn relations(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.triples
            .iter()
            .filter(|t| seen.insert(t.relation.as_str()))
            .map(|t| t.relation.as_str())
            .collect()
    }

    /// Diseases sharing a CUI node with `disease`, in link order.
    pub fn synonyms(&self, disease: EntityId) -> Vec<EntityId> {
        let mut out = Vec::new();
        for &cui in self.tails(disease, HAS_CUI) {
            for &other in self.heads(cui, HAS_CUI) {
                if other != disease && !out.contains(&other) {
                    out.push(other);
                }
            }
        }
        out
    }

    /// True when the adjacency maps are exactly the triple set re-indexed.
    pub fn adjacency_is_coherent(&self) -> bool {
        let forward_count: usize = self.forward.values().map(Vec::len).sum();
        let backward_count: usize = self.backward.values().map(Vec::len).sum();
        forward_count == self.triples.len()
            && backward_count == self.triples.len()
            && self.triples.iter().all(|t| {
                self.tails(t.head, &t.relation).contains(&t.tail)
                    && self.heads(t.tail, &t.relation).contains(&t.head)
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphBuildConfig {
    pub relations: Vec<String>,
    /// Sections kept for retrieval but not split into term nodes.
    pub prose_sections: Vec<String>,
    pub mode: LoadMode,
}

impl Default for GraphBuildConfig {
    fn default() -> Self {
        Self {
            relations: DEFAULT_RELATIONS.iter().map(|s| s.to_string()).collect(),
            prose_sections: vec!["overview".to_string()],
            mode: LoadMode::Strict,
        }
    }
}

fn is_phrase_separator(c: char) -> bool {
    matches!(c, '\n' | ';' | ',' | '•' | '◦' | '▪' | '‣' | '·' | '∙')
}

/// Split a list-style section into phrases. Long prose sentences are dropped.
pub fn split_phrases(text: &str) -> Vec<String> {
    text.split(is_phrase_separator)
        .map(|p| {
            p.trim()
                .trim_start_matches(['-', '*'])
                .trim_matches(|c: char| c.is_whitespace() || c == '.')
                .to_string()
        })
        .filter(|p| {
            let n = token_count(p);
            n > 0 && n <= MAX_PHRASE_TOKENS
        })
        .collect()
}

/// Build the graph: one disease node per distinct disease, one term node per
/// distinct phrase (shared across diseases), and a `(disease, section, term)`
/// triple per phrase.
pub fn build_graph(
    docs: &[Document],
    config: &GraphBuildConfig,
) -> Result<(KnowledgeGraph, Vec<String>)> {
    let relations: HashMap<String, &str> = config
        .relations
        .iter()
        .map(|r| (text::normalize(r), r.as_str()))
        .collect();
    let prose: HashSet<String> = config
        .prose_sections
        .iter()
        .map(|s| text::normalize(s))
        .collect();
    let mut kg = KnowledgeGraph::new();
    let mut warnings = Vec::new();
    for doc in docs {
        let section_key = text::normalize(&doc.section);
        let Some(&relation) = relations.get(&section_key) else {
            let msg = format!(
                "document `{}`: section `{}` is not a configured relation",
                doc.id, doc.section
            );
            if config.mode == LoadMode::Strict {
                return Err(Error::Invalid(msg));
            }
            log::warn!("{msg}");
            warnings.push(msg);
            continue;
        };
        let disease = kg.get_or_insert(&doc.disease, EntityKind::Disease)?;
        if prose.contains(&section_key) {
            continue;
        }
        for phrase in split_phrases(&doc.text) {
            let term = kg.get_or_insert(&phrase, EntityKind::Term)?;
            kg.add_triple(disease, relation, term)?;
        }
    }
    Ok((kg, warnings))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CuiLink {
    pub disease: String,
    pub cui: String,
}

pub fn load_cui_map(path: &Path) -> Result<Vec<CuiLink>> {
    jsonl::read_all(path)
}

/// Attach each mapped disease to a shared CUI node. Unknown diseases are
/// skipped with a warning.
pub fn link_synonyms(
    mut kg: KnowledgeGraph,
    links: &[CuiLink],
) -> Result<(KnowledgeGraph, Vec<String>)> {
    let mut warnings = Vec::new();
    for link in links {
        let Some(disease) = kg.find(EntityKind::Disease, &link.disease) else {
            let msg = format!("cui map: unknown disease `{}`", link.disease);
            log::warn!("{msg}");
            warnings.push(msg);
            continue;
        };
        let cui = kg.get_or_insert(&link.cui, EntityKind::Cui)?;
        kg.add_triple(disease, HAS_CUI, cui)?;
    }
    Ok((kg, warnings))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RelationSelector {
    /// Every relation except `has_cui`.
    All,
    Named(String),
}

/// Neighbours of `disease` under the selected relation, direct tails first,
/// then (when `expand_synonyms`) tails of CUI-linked diseases. Each entity
/// appears once.
pub fn extract_subgraph<'g>(
    kg: &'g KnowledgeGraph,
    disease: EntityId,
    relation: &RelationSelector,
    expand_synonyms: bool,
) -> Result<Vec<&'g Entity>> {
    match kg.entity(disease) {
        Some(e) if e.kind == EntityKind::Disease => {}
        Some(e) => return Err(Error::Invalid(format!("`{}` is not a disease", e.label))),
        None => return Err(Error::UnknownId(disease.to_string())),
    }
    let collect_for = |d: EntityId, out: &mut Vec<EntityId>| match relation {
        RelationSelector::Named(r) if r == HAS_CUI => {}
        RelationSelector::Named(r) => out.extend_from_slice(kg.tails(d, r)),
        RelationSelector::All => out.extend(
            kg.triples
                .iter()
                .filter(|t| t.head == d && t.relation != HAS_CUI)
                .map(|t| t.tail),
        ),
    };
    let mut ids = Vec::new();
    collect_for(disease, &mut ids);
    if expand_synonyms {
        for syn in kg.synonyms(disease) {
            collect_for(syn, &mut ids);
        }
    }
    let mut seen = HashSet::new();
    Ok(ids
        .into_iter()
        .filter(|id| seen.insert(*id))
        .filter_map(|id| kg.entity(id))
        .collect())
}

/// Node labels joined by `", "`, each normalized label once.
pub fn subgraph_text(nodes: &[&Entity]) -> String {
    let mut seen = HashSet::new();
    nodes
        .iter()
        .filter(|e| seen.insert(e.norm_label.as_str()))
        .map(|e| e.label.as_str())
        .collect::<Vec<_>>()
        .join(", ")
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

pub const ENTITIES_FILE: &str = "entities.jsonl";
pub const TRIPLES_FILE: &str = "triples.tsv";

#[derive(Serialize, Deserialize)]
struct EntityRecord {
    label: String,
    kind: EntityKind,
}

/// Write `entities.jsonl` and `triples.tsv` into `dir`.
pub fn persist_graph(kg: &KnowledgeGraph, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    jsonl::write_all(
        &dir.join(ENTITIES_FILE),
        kg.entities.iter().map(|e| EntityRecord {
            label: e.label.clone(),
            kind: e.kind,
        }),
    )?;
    let path = dir.join(TRIPLES_FILE);
    let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = BufWriter::new(file);
    for t in &kg.triples {
        let head = &kg.entities[t.head.index()].label;
        let tail = &kg.entities[t.tail.index()].label;
        writeln!(w, "{head}\t{}\t{tail}", t.relation).map_err(|e| Error::io(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))
}

pub fn load_graph(dir: &Path) -> Result<KnowledgeGraph> {
    let mut kg = KnowledgeGraph::new();
    let entities_path = dir.join(ENTITIES_FILE);
    for (line, rec) in jsonl::read_lines::<EntityRecord>(&entities_path)? {
        let rec = rec.map_err(|m| Error::parse(&entities_path, line, m))?;
        let before = kg.entities.len();
        kg.get_or_insert(&rec.label, rec.kind)
            .map_err(|e| Error::parse(&entities_path, line, e.to_string()))?;
        if kg.entities.len() == before {
            return Err(Error::parse(
                &entities_path,
                line,
                format!("duplicate entity `{}`", rec.label),
            ));
        }
    }
    let path = dir.join(TRIPLES_FILE);
    let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(&path, e))?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [head, relation, tail] = fields[..] else {
            return Err(Error::parse(
                &path,
                idx + 1,
                format!("expected 3 tab-separated fields, got {}", fields.len()),
            ));
        };
        let tail_kind = if relation == HAS_CUI {
            EntityKind::Cui
        } else {
            EntityKind::Term
        };
        let h = kg
            .find(EntityKind::Disease, head)
            .ok_or_else(|| Error::parse(&path, idx + 1, format!("unknown disease `{head}`")))?;
        let t = kg
            .find(tail_kind, tail)
            .ok_or_else(|| Error::parse(&path, idx + 1, format!("unknown tail `{tail}`")))?;
        kg.add_triple(h, relation, t)?;
    }
    Ok(kg)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn doc(id: &str, disease: &str, section: &str, text: &str) -> Document {
        Document {
            id: id.into(),
            disease: disease.into(),
            section: section.into(),
            text: text.into(),
            source: "test".into(),
        }
    }

    fn labels(nodes: &[&Entity]) -> Vec<String> {
        nodes.iter().map(|e| e.label.clone()).collect()
    }

    fn arthritis() -> KnowledgeGraph {
        let docs = [doc("a1", "Arthritis", "causes", "Family history; Obesity")];
        build_graph(&docs, &GraphBuildConfig::default()).unwrap().0
    }

    #[test]
    fn builds_disease_and_term_nodes() {
        let kg = arthritis();
        assert_eq!(kg.entities().len(), 3);
        assert_eq!(kg.triples().len(), 2);
        let a = kg.find(EntityKind::Disease, "arthritis").unwrap();
        let fh = kg.find(EntityKind::Term, "Family history").unwrap();
        let ob = kg.find(EntityKind::Term, "obesity").unwrap();
        assert!(kg.contains(a, "causes", fh));
        assert!(kg.contains(a, "causes", ob));
        assert!(kg.adjacency_is_coherent());
    }

    #[test]
    fn empty_section_gives_lone_disease() {
        let (kg, _) = build_graph(
            &[doc("a", "Asthma", "symptoms", "")],
            &GraphBuildConfig::default(),
        )
        .unwrap();
        assert_eq!(kg.entities().len(), 1);
        assert!(kg.triples().is_empty());
    }

    #[test]
    fn shared_terms_are_deduplicated() {
        let docs = [
            doc("a", "Arthritis", "risk_factors_of_disease", "Obesity, Age"),
            doc("b", "Diabetes", "risk_factors_of_disease", "obesity"),
        ];
        let (kg, _) = build_graph(&docs, &GraphBuildConfig::default()).unwrap();
        let ob = kg.find(EntityKind::Term, "Obesity").unwrap();
        assert_eq!(kg.entities_of(EntityKind::Term).count(), 2);
        assert_eq!(kg.heads(ob, "risk_factors_of_disease").len(), 2);
        assert_eq!(kg.entity(ob).unwrap().label, "Obesity");
    }

    #[test]
    fn unknown_section_strict_errors_lenient_warns() {
        let docs = [doc("a", "Asthma", "trivia", "x")];
        assert!(build_graph(&docs, &GraphBuildConfig::default()).is_err());
        let cfg = GraphBuildConfig {
            mode: LoadMode::Lenient,
            ..Default::default()
        };
        let (kg, warnings) = build_graph(&docs, &cfg).unwrap();
        assert!(kg.is_empty());
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn section_names_match_loosely_and_overview_is_prose() {
        let docs = [
            doc("a", "Asthma", "Risk factors of disease", "Smoking"),
            doc(
                "b",
                "Asthma",
                "overview",
                "Asthma is a condition, and it narrows airways.",
            ),
        ];
        let (kg, _) = build_graph(&docs, &GraphBuildConfig::default()).unwrap();
        assert_eq!(kg.relations(), vec!["risk_factors_of_disease"]);
        assert_eq!(kg.triples().len(), 1);
    }

    #[test]
    fn phrase_splitting() {
        assert_eq!(
            split_phrases("• Fever\n- Cough; sore throat, \n\n* Fatigue."),
            vec!["Fever", "Cough", "sore throat", "Fatigue"]
        );
        let long = "this sentence is far too long to be a single list item in any section";
        assert!(split_phrases(long).is_empty());
    }

    #[test]
    fn synonyms_share_one_cui_node() {
        let docs = [
            doc("a", "Heart attack", "symptoms", "Chest pain"),
            doc(
                "b",
                "Myocardial infarction",
                "symptoms",
                "Shortness of breath",
            ),
        ];
        let (kg, _) = build_graph(&docs, &GraphBuildConfig::default()).unwrap();
        let links = vec![
            CuiLink {
                disease: "Heart attack".into(),
                cui: "CUI_X".into(),
            },
            CuiLink {
                disease: "Myocardial infarction".into(),
                cui: "CUI_X".into(),
            },
        ];
        let (kg, warnings) = link_synonyms(kg, &links).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(kg.entities_of(EntityKind::Cui).count(), 1);
        let ha = kg.find(EntityKind::Disease, "heart attack").unwrap();
        let mi = kg
            .find(EntityKind::Disease, "myocardial infarction")
            .unwrap();
        assert_eq!(kg.synonyms(ha), vec![mi]);
    }

    #[test]
    fn empty_and_unknown_cui_links() {
        let kg = arthritis();
        let n = kg.triples().len();
        let (kg, w) = link_synonyms(kg, &[]).unwrap();
        assert_eq!(kg.triples().len(), n);
        assert!(w.is_empty());
        let links = vec![
            CuiLink {
                disease: "Nope".into(),
                cui: "C1".into(),
            },
            CuiLink {
                disease: "Arthritis".into(),
                cui: "C2".into(),
            },
        ];
        let (kg, w) = link_synonyms(kg, &links).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(kg.triples().len(), n + 1);
    }

    #[test]
    fn subgraph_of_arthritis_causes() {
        let kg = arthritis();
        let a = kg.find(EntityKind::Disease, "Arthritis").unwrap();
        let nodes =
            extract_subgraph(&kg, a, &RelationSelector::Named("causes".into()), true).unwrap();
        assert_eq!(labels(&nodes), vec!["Family history", "Obesity"]);
        assert_eq!(subgraph_text(&nodes), "Family history, Obesity");
        let none =
            extract_subgraph(&kg, a, &RelationSelector::Named("treatment".into()), true).unwrap();
        assert!(none.is_empty());
        assert_eq!(subgraph_text(&none), "");
        let term = kg.find(EntityKind::Term, "Obesity").unwrap();
        assert!(extract_subgraph(&kg, term, &RelationSelector::All, true).is_err());
    }

    #[test]
    fn subgraph_follows_cui_links() {
        // 5 section triples plus 2 has_cui links
        let docs = [
            doc("a", "Heart attack", "symptoms", "Chest pain; Sweating"),
            doc("b", "Heart attack", "causes", "Blocked artery"),
            doc("c", "Myocardial infarction", "symptoms", "Sweating; Nausea"),
        ];
        let (kg, _) = build_graph(&docs, &GraphBuildConfig::default()).unwrap();
        let links: Vec<CuiLink> = ["Heart attack", "Myocardial infarction"]
            .iter()
            .map(|d| CuiLink {
                disease: d.to_string(),
                cui: "C0027051".into(),
            })
            .collect();
        let (kg, _) = link_synonyms(kg, &links).unwrap();
        assert_eq!(kg.triples().len(), 7);
        let ha = kg.find(EntityKind::Disease, "Heart attack").unwrap();
        let sym = RelationSelector::Named("symptoms".into());
        let nodes = extract_subgraph(&kg, ha, &sym, true).unwrap();
        assert_eq!(labels(&nodes), vec!["Chest pain", "Sweating", "Nausea"]);
        let direct = extract_subgraph(&kg, ha, &sym, false).unwrap();
        assert_eq!(labels(&direct), vec!["Chest pain", "Sweating"]);
        let all = extract_subgraph(&kg, ha, &RelationSelector::All, false).unwrap();
        assert_eq!(
            labels(&all),
            vec!["Chest pain", "Sweating", "Blocked artery"]
        );
    }

    #[test]
    fn subgraph_text_dedups_by_norm_label() {
        let mut kg = KnowledgeGraph::new();
        let a = kg.get_or_insert("Fever", EntityKind::Term).unwrap();
        let b = kg.get_or_insert("FEVER", EntityKind::Disease).unwrap();
        let nodes = vec![kg.entity(a).unwrap(), kg.entity(b).unwrap()];
        assert_eq!(subgraph_text(&nodes), "Fever");
    }

    fn label_triples(kg: &KnowledgeGraph) -> Vec<(String, String, String)> {
        kg.triples()
            .iter()
            .map(|t| {
                (
                    kg.entity(t.head).unwrap().label.clone(),
                    t.relation.clone(),
                    kg.entity(t.tail).unwrap().label.clone(),
                )
            })
            .collect()
    }

    #[test]
    fn persist_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let kg = arthritis();
        let (kg, _) = link_synonyms(
            kg,
            &[CuiLink {
                disease: "Arthritis".into(),
                cui: "C0003864".into(),
            }],
        )
        .unwrap();
        persist_graph(&kg, dir.path()).unwrap();
        let back = load_graph(dir.path()).unwrap();
        assert_eq!(back.entities(), kg.entities());
        assert_eq!(label_triples(&back), label_triples(&kg));

        let empty = tempfile::tempdir().unwrap();
        persist_graph(&KnowledgeGraph::new(), empty.path()).unwrap();
        assert!(load_graph(empty.path()).unwrap().is_empty());
    }

    #[test]
    fn malformed_triples_report_line() {
        let dir = tempfile::tempdir().unwrap();
        persist_graph(&arthritis(), dir.path()).unwrap();
        let path = dir.path().join(TRIPLES_FILE);
        let mut content = fs::read_to_string(&path).unwrap();
        content.push_str("Arthritis\tcauses\n");
        fs::write(&path, content).unwrap();
        match load_graph(dir.path()).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }
}
