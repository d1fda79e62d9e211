//! Link prediction over the disease graph: triple splits, TransE training
//! and ranking metrics, plus direct triplet-pattern querying.

mod query;
mod rank;
mod split;
pub mod synthetic;
mod transe;

pub use query::{triplet_query, TripletAnswer, TripletPattern};
pub use rank::{rank_metrics, RankReport};
pub use split::{split_graph, split_triples, SplitRatios, TripleSplit};
pub use transe::{
    load_model, persist_model, score_triple, train_transe, EpochLog, LossKind, NormOrder,
    Optimizer, TrainConfig, TrainOutcome, TransEModel,
};
