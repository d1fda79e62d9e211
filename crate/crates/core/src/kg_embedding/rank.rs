use serde::Serialize;

use super::transe::TransEModel;
use crate::error::{Error, Result};
use crate::knowledge_graph::Triple;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankReport {
    pub hits1: f64,
    pub hits10: f64,
    pub hits100: f64,
    pub mrr: f64,
    /// Two rankings (head and tail) per test triple.
    pub rankings: usize,
}

/// Pessimistic rank: how many candidates score at least as well as the
/// true one (the true one included), so ties count against the model.
fn rank_of(scores: &[f64], truth: usize) -> usize {
    let target = scores[truth];
    scores.iter().filter(|&&s| s >= target).count()
}

/// Raw (unfiltered) Hits@{1,10,100} and MRR over head and tail rankings.
pub fn rank_metrics(model: &TransEModel, test: &[Triple]) -> Result<RankReport> {
    if test.is_empty() {
        return Err(Error::Invalid(
            "rank metrics need at least one test triple".into(),
        ));
    }
    let n = model.entity_count();
    let mut ranks = Vec::with_capacity(test.len() * 2);
    for triple in test {
        let (h, r, t) = model.resolve(triple)?;
        let tail_scores: Vec<f64> = (0..n).map(|e| model.score_ids(h, r, e)).collect();
        ranks.push(rank_of(&tail_scores, t));
        let head_scores: Vec<f64> = (0..n).map(|e| model.score_ids(e, r, t)).collect();
        ranks.push(rank_of(&head_scores, h));
    }
    let total = ranks.len() as f64;
    let hits = |k: usize| ranks.iter().filter(|&&r| r <= k).count() as f64 / total;
    Ok(RankReport {
        hits1: hits(1),
        hits10: hits(10),
        hits100: hits(100),
        mrr: ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / total,
        rankings: ranks.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg_embedding::NormOrder;
    use crate::knowledge_graph::EntityId;

    fn triple(h: u32, t: u32) -> Triple {
        Triple {
            head: EntityId(h),
            relation: "r".into(),
            tail: EntityId(t),
        }
    }

    #[test]
    fn true_tail_strictly_best() {
        // Entities on a line, r = +1: tail 1 is exact for head 0; head 0 is
        // exact for tail 1 as well.
        let m = TransEModel::from_parts(
            1,
            NormOrder::L1,
            vec![vec![0.0], vec![1.0], vec![5.0]],
            vec![("r".into(), vec![1.0])],
        )
        .unwrap();
        let rep = rank_metrics(&m, &[triple(0, 1)]).unwrap();
        assert_eq!(rep.hits1, 1.0);
        assert_eq!(rep.mrr, 1.0);
    }

    #[test]
    fn second_of_three_in_both_directions() {
        // e = [0, 1, 2.6], r = +1.5, test triple (0, r, 2).
        //   tails from 0: |1.5 - e| = 1.5, 0.5, 1.1 → e2 ranks 2 of 3.
        //   heads into 2.6: |e + 1.5 - 2.6| = 1.1, 0.1, 1.5 → e0 ranks 2 of 3.
        let m = TransEModel::from_parts(
            1,
            NormOrder::L1,
            vec![vec![0.0], vec![1.0], vec![2.6]],
            vec![("r".into(), vec![1.5])],
        )
        .unwrap();
        let rep = rank_metrics(&m, &[triple(0, 2)]).unwrap();
        assert_eq!(rep.rankings, 2);
        assert!((rep.mrr - 0.5).abs() < 1e-12);
        assert_eq!(rep.hits1, 0.0);
        assert_eq!(rep.hits10, 1.0);
    }

    #[test]
    fn constant_embeddings_rank_last() {
        let m = TransEModel::from_parts(
            1,
            NormOrder::L1,
            vec![vec![0.0]; 4],
            vec![("r".into(), vec![0.0])],
        )
        .unwrap();
        let rep = rank_metrics(&m, &[triple(0, 1)]).unwrap();
        assert!((rep.mrr - 0.25).abs() < 1e-12);
        assert_eq!(rep.hits1, 0.0);
    }

    #[test]
    fn empty_test_set() {
        let m = TransEModel::from_parts(
            1,
            NormOrder::L1,
            vec![vec![0.0]; 2],
            vec![("r".into(), vec![0.0])],
        )
        .unwrap();
        assert!(rank_metrics(&m, &[]).is_err());
    }
}
