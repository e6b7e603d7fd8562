//! Item-item neighborhood scoring.
//!
//! The score of track `t` is the sum of cosine similarities between its
//! column and the columns of every query track. Columns with zero norm
//! contribute nothing.

use std::sync::Arc;

use log::debug;

use super::{ScoredRanking, Scorer};
use crate::interactions::{InteractionMatrix, SparseVector};

/// Training matrix plus cached column norms.
#[derive(Debug, Clone)]
pub struct IinScorer {
    matrix: Arc<InteractionMatrix>,
    norms: Vec<f64>,
}

impl IinScorer {
    pub fn new(matrix: Arc<InteractionMatrix>) -> Self {
        let norms = (0..matrix.num_tracks())
            .map(|t| {
                let col = matrix.column_unchecked(t);
                col.values.iter().map(|v| v * v).sum::<f64>().sqrt()
            })
            .collect();
        IinScorer { matrix, norms }
    }

    /// Similarity sums for every track in the training space.
    ///
    /// Accumulates `x_t · x_q / |x_q|` by walking the query columns and the
    /// rows they touch, then divides by `|x_t|`.
    fn similarity_sums(&self, query: &SparseVector) -> Vec<f64> {
        let n = self.matrix.num_tracks();
        let mut acc = vec![0.0; n];
        for &q in query.indices() {
            if q >= n || self.norms[q] == 0.0 {
                continue;
            }
            let inv = 1.0 / self.norms[q];
            for (p, xq) in self.matrix.column_unchecked(q).iter() {
                for (t, xt) in self.matrix.row_unchecked(p).iter() {
                    acc[t] += xq * xt * inv;
                }
            }
        }
        for (a, &norm) in acc.iter_mut().zip(&self.norms) {
            *a = if norm == 0.0 { 0.0 } else { *a / norm };
        }
        acc
    }
}

impl Scorer for IinScorer {
    fn score(&self, query: &SparseVector, candidates: &[usize], _seed: u64) -> ScoredRanking {
        if query.is_empty() {
            debug!("item-item scorer received an empty query");
            return ScoredRanking::from_scores(candidates, |_| 0.0).with_empty_query(true);
        }
        let sums = self.similarity_sums(query);
        ScoredRanking::from_scores(candidates, |t| sums.get(t).copied().unwrap_or(0.0))
    }
}

/// Scores `candidates` for `query` against the columns of `matrix`.
pub fn iin_score(
    matrix: &InteractionMatrix,
    query: &SparseVector,
    candidates: &[usize],
) -> ScoredRanking {
    IinScorer::new(Arc::new(matrix.clone())).score(query, candidates, 0)
}
