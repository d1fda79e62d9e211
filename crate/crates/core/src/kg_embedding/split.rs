use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::knowledge_graph::{KnowledgeGraph, Triple};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.85,
            valid: 0.05,
            test: 0.10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripleSplit {
    pub train: Vec<Triple>,
    pub valid: Vec<Triple>,
    pub test: Vec<Triple>,
    pub seed: u64,
    /// Number of entity ids the split ranks over (`0..entity_count`).
    pub entity_count: usize,
    pub entity_labels: Vec<String>,
    /// Relation vocabulary in first-appearance order.
    pub relations: Vec<String>,
    /// Valid/test triples moved into train because they used an entity or
    /// relation train never saw.
    pub moved_to_train: usize,
}

/// Shuffle with `seed` and cut by `ratios`, then move any valid/test triple
/// carrying an entity or relation absent from train back into train.
pub fn split_triples(
    triples: &[Triple],
    entity_labels: Vec<String>,
    ratios: SplitRatios,
    seed: u64,
) -> Result<TripleSplit> {
    let sum = ratios.train + ratios.valid + ratios.test;
    if (sum - 1.0).abs() > 1e-9
        || [ratios.train, ratios.valid, ratios.test]
            .iter()
            .any(|r| *r < 0.0)
    {
        return Err(Error::Invalid(format!(
            "split ratios must be non-negative and sum to 1, got {sum}"
        )));
    }
    if triples.is_empty() {
        return Err(Error::Invalid("cannot split an empty triple set".into()));
    }
    let entity_count = entity_labels.len();
    if let Some(t) = triples
        .iter()
        .find(|t| t.head.index() >= entity_count || t.tail.index() >= entity_count)
    {
        return Err(Error::UnknownId(format!("{} / {}", t.head, t.tail)));
    }
    let mut relations: Vec<String> = Vec::new();
    for t in triples {
        if !relations.contains(&t.relation) {
            relations.push(t.relation.clone());
        }
    }

    let mut shuffled = triples.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n = shuffled.len();
    let n_valid = (n as f64 * ratios.valid).round() as usize;
    let n_test = (n as f64 * ratios.test).round() as usize;
    let n_train = n.saturating_sub(n_valid + n_test);
    let mut rest = shuffled.split_off(n_train);
    let mut train = shuffled;
    let test_part = rest.split_off(n_valid.min(rest.len()));
    let valid_part = rest;

    let mut seen_entities: HashSet<_> = train.iter().flat_map(|t| [t.head, t.tail]).collect();
    let mut seen_relations: HashSet<String> = train.iter().map(|t| t.relation.clone()).collect();
    let mut moved = 0;
    let mut sweep = |part: Vec<Triple>, train: &mut Vec<Triple>| -> Vec<Triple> {
        let mut kept = Vec::new();
        for t in part {
            let covered = seen_entities.contains(&t.head)
                && seen_entities.contains(&t.tail)
                && seen_relations.contains(&t.relation);
            if covered {
                kept.push(t);
            } else {
                seen_entities.insert(t.head);
                seen_entities.insert(t.tail);
                seen_relations.insert(t.relation.clone());
                train.push(t);
                moved += 1;
            }
        }
        kept
    };
    let valid = sweep(valid_part, &mut train);
    let test = sweep(test_part, &mut train);
    if moved > 0 {
        log::info!("split: moved {moved} uncovered triples into train");
    }
    if train.is_empty() || valid.is_empty() || test.is_empty() {
        return Err(Error::Invalid(format!(
            "graph too small for non-empty splits ({} / {} / {})",
            train.len(),
            valid.len(),
            test.len()
        )));
    }
    Ok(TripleSplit {
        train,
        valid,
        test,
        seed,
        entity_count,
        entity_labels,
        relations,
        moved_to_train: moved,
    })
}

/// Split every triple of the graph, ranking over all of its entities.
pub fn split_graph(kg: &KnowledgeGraph, ratios: SplitRatios, seed: u64) -> Result<TripleSplit> {
    let labels = kg.entities().iter().map(|e| e.label.clone()).collect();
    split_triples(kg.triples(), labels, ratios, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knowledge_graph::EntityId;

    fn t(h: u32, r: &str, tl: u32) -> Triple {
        Triple {
            head: EntityId(h),
            relation: r.into(),
            tail: EntityId(tl),
        }
    }

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("e{i}")).collect()
    }

    /// 100 distinct triples over 10 entities and 2 relations: every entity
    /// occurs in about 20 triples.
    fn dense() -> Vec<Triple> {
        let mut out = Vec::new();
        for h in 0..10u32 {
            for k in 1..=5u32 {
                for r in ["a", "b"] {
                    out.push(t(h, r, (h + k) % 10));
                }
            }
        }
        out
    }

    #[test]
    fn ratio_sizes_on_a_covered_graph() {
        let s = split_triples(&dense(), labels(10), SplitRatios::default(), 7).unwrap();
        assert_eq!((s.train.len(), s.valid.len(), s.test.len()), (85, 5, 10));
        assert_eq!(s.moved_to_train, 0);
        let all: HashSet<_> = s
            .train
            .iter()
            .chain(&s.valid)
            .chain(&s.test)
            .cloned()
            .collect();
        assert_eq!(all, dense().into_iter().collect());
    }

    #[test]
    fn seeded_splits_repeat() {
        let a = split_triples(&dense(), labels(10), SplitRatios::default(), 3).unwrap();
        let b = split_triples(&dense(), labels(10), SplitRatios::default(), 3).unwrap();
        assert_eq!(a, b);
        let c = split_triples(&dense(), labels(10), SplitRatios::default(), 4).unwrap();
        assert_ne!(a.train, c.train);
    }

    #[test]
    fn uncovered_tail_goes_to_train() {
        let mut triples = dense();
        // entity 10 appears only here
        let lonely = t(0, "a", 10);
        triples.push(lonely.clone());
        for seed in 0..20 {
            let s = split_triples(&triples, labels(11), SplitRatios::default(), seed).unwrap();
            assert!(s.train.contains(&lonely), "seed {seed}");
            let seen: HashSet<_> = s.train.iter().flat_map(|t| [t.head, t.tail]).collect();
            assert!(s
                .valid
                .iter()
                .chain(&s.test)
                .all(|t| seen.contains(&t.head) && seen.contains(&t.tail)));
        }
    }

    #[test]
    fn too_small_or_bad_ratios() {
        let few = vec![t(0, "a", 1), t(1, "a", 2)];
        assert!(split_triples(&few, labels(3), SplitRatios::default(), 0).is_err());
        assert!(split_triples(&[], labels(3), SplitRatios::default(), 0).is_err());
        let bad = SplitRatios {
            train: 0.5,
            valid: 0.1,
            test: 0.1,
        };
        assert!(split_triples(&dense(), labels(10), bad, 0).is_err());
    }
}
