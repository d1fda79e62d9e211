use serde::Serialize;

use crate::error::{Error, Result};
use crate::knowledge_graph::{EntityId, EntityKind, KnowledgeGraph};
use crate::reasoning::{fuzzy_best, match_disease, match_relation_span, RelationAliases};
use crate::text;

/// Which slot of `⟨head, relation, tail⟩` the question leaves open.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "pattern", rename_all = "snake_case")]
pub enum TripletPattern {
    /// `⟨h, r, ?⟩`
    HeadRelation { head: EntityId, relation: String },
    /// `⟨?, r, t⟩`
    RelationTail { relation: String, tail: EntityId },
    /// `⟨h, ?, t⟩`
    HeadTail { head: EntityId, tail: EntityId },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TripletAnswer {
    #[serde(flatten)]
    pub pattern: TripletPattern,
    /// Entity labels for the first two patterns, relation names for
    /// `⟨h, ?, t⟩`. In graph insertion order.
    pub answers: Vec<String>,
}

/// Translate a question into a triplet pattern and answer it by direct graph
/// lookup.
pub fn triplet_query(
    question: &str,
    kg: &KnowledgeGraph,
    aliases: &RelationAliases,
    threshold: f64,
) -> Result<TripletAnswer> {
    let tokens = text::tokenize(question);
    let disease = match_disease(question, kg, threshold);
    let relation = match_relation_span(&tokens, aliases);
    let mut taken: Vec<(usize, usize)> = Vec::new();
    taken.extend(disease.as_ref().map(|d| d.span));
    taken.extend(relation.as_ref().map(|(_, span)| *span));
    let term = fuzzy_best(&tokens, kg.entities_of(EntityKind::Term), threshold, &taken);

    let labels = |ids: &[EntityId]| -> Vec<String> {
        ids.iter()
            .filter_map(|&id| kg.entity(id))
            .map(|e| e.label.clone())
            .collect()
    };
    let (pattern, answers) = match (disease, relation, term) {
        (Some(d), Some((rel, _)), _) => {
            let answers = labels(kg.tails(d.entity, &rel));
            (
                TripletPattern::HeadRelation {
                    head: d.entity,
                    relation: rel,
                },
                answers,
            )
        }
        (None, Some((rel, _)), Some(t)) => {
            let answers = labels(kg.heads(t.entity, &rel));
            (
                TripletPattern::RelationTail {
                    relation: rel,
                    tail: t.entity,
                },
                answers,
            )
        }
        (Some(d), None, Some(t)) => {
            let answers = kg
                .relations_between(d.entity, t.entity)
                .into_iter()
                .map(str::to_string)
                .collect();
            (
                TripletPattern::HeadTail {
                    head: d.entity,
                    tail: t.entity,
                },
                answers,
            )
        }
        _ => return Err(Error::UnresolvablePattern(question.to_string())),
    };
    Ok(TripletAnswer { pattern, answers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;
    use crate::knowledge_graph::{build_graph, GraphBuildConfig, DEFAULT_RELATIONS};
    use crate::reasoning::default_alias_table;

    fn doc(id: &str, disease: &str, section: &str, text: &str) -> Document {
        Document {
            id: id.into(),
            disease: disease.into(),
            section: section.into(),
            text: text.into(),
            source: String::new(),
        }
    }

    fn fixture() -> (KnowledgeGraph, RelationAliases) {
        let docs = [
            doc("a", "Arthritis", "causes", "Family history; Obesity"),
            doc("b", "Gout", "causes", "Obesity; Diet"),
            doc("c", "Arthritis", "symptoms", "Joint pain"),
        ];
        let (kg, _) = build_graph(&docs, &GraphBuildConfig::default()).unwrap();
        let rels: Vec<String> = DEFAULT_RELATIONS.iter().map(|r| r.to_string()).collect();
        (kg, RelationAliases::new(&default_alias_table(), &rels))
    }

    #[test]
    fn head_relation() {
        let (kg, aliases) = fixture();
        let ans = triplet_query("what causes arthritis?", &kg, &aliases, 0.85).unwrap();
        let a = kg.find(EntityKind::Disease, "Arthritis").unwrap();
        assert_eq!(
            ans.pattern,
            TripletPattern::HeadRelation {
                head: a,
                relation: "causes".into()
            }
        );
        assert_eq!(ans.answers, vec!["Family history", "Obesity"]);
    }

    #[test]
    fn relation_tail() {
        let (kg, aliases) = fixture();
        let ans = triplet_query("which diseases cause obesity?", &kg, &aliases, 0.85).unwrap();
        let ob = kg.find(EntityKind::Term, "Obesity").unwrap();
        assert_eq!(
            ans.pattern,
            TripletPattern::RelationTail {
                relation: "causes".into(),
                tail: ob
            }
        );
        assert_eq!(ans.answers, vec!["Arthritis", "Gout"]);
    }

    #[test]
    fn head_tail() {
        let (kg, aliases) = fixture();
        let ans = triplet_query(
            "how is joint pain related to arthritis?",
            &kg,
            &aliases,
            0.85,
        )
        .unwrap();
        assert!(matches!(ans.pattern, TripletPattern::HeadTail { .. }));
        assert_eq!(ans.answers, vec!["symptoms"]);
    }

    #[test]
    fn unresolvable() {
        let (kg, aliases) = fixture();
        let err = triplet_query("hello", &kg, &aliases, 0.85).unwrap_err();
        assert!(matches!(err, Error::UnresolvablePattern(_)));
    }
}
