//! A deterministic patterned graph for checking that training learns.

use crate::knowledge_graph::{EntityId, Triple};

pub const ENTITIES: usize = 60;
pub const RELATIONS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticGraph {
    pub triples: Vec<Triple>,
    pub entity_labels: Vec<String>,
    pub relations: Vec<String>,
}

/// Entity `i` is linked by relation `k` to entity `(i + OFFSETS[k]) mod 60`.
pub const OFFSETS: [usize; RELATIONS] = [1, 2, 3, 4, 5];

/// 60 entities, 5 relations, 300 triples. Every relation is a cyclic shift,
/// so there is shared structure to learn but no exact translation solution.
pub fn patterned_graph() -> SyntheticGraph {
    let relations: Vec<String> = (0..RELATIONS).map(|k| format!("r{k}")).collect();
    let mut triples = Vec::with_capacity(ENTITIES * RELATIONS);
    for (k, rel) in relations.iter().enumerate() {
        for i in 0..ENTITIES {
            triples.push(Triple {
                head: EntityId(i as u32),
                relation: rel.clone(),
                tail: EntityId(((i + OFFSETS[k]) % ENTITIES) as u32),
            });
        }
    }
    SyntheticGraph {
        triples,
        entity_labels: (0..ENTITIES).map(|i| format!("e{i}")).collect(),
        relations,
    }
}
