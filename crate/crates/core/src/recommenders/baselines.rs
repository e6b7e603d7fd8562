//! Random and popularity baselines.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ScoredRanking, Scorer};
use crate::interactions::{InteractionMatrix, SparseVector};

/// Seeded uniform shuffle of the candidates.
///
/// Candidates are sorted before shuffling so the permutation depends only on
/// the candidate set and the seed. Scores decrease from 1 towards 0 along the
/// shuffled order.
pub fn random_score(candidates: &[usize], seed: u64) -> ScoredRanking {
    let mut order = candidates.to_vec();
    order.sort_unstable();
    order.dedup();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n = order.len() as f64;
    let mut rank = vec![0.0; order.iter().max().map_or(0, |&m| m + 1)];
    for (i, &t) in order.iter().enumerate() {
        rank[t] = (n - i as f64) / n;
    }
    ScoredRanking::from_scores(&order, |t| rank[t])
}

#[derive(Debug, Clone, Copy)]
pub struct RandomScorer;

impl Scorer for RandomScorer {
    fn score(&self, _query: &SparseVector, candidates: &[usize], seed: u64) -> ScoredRanking {
        random_score(candidates, seed)
    }
}

/// Fraction of training playlists containing each track.
#[derive(Debug, Clone)]
pub struct PopularityScorer {
    popularity: Vec<f64>,
}

impl PopularityScorer {
    pub fn new(matrix: &InteractionMatrix) -> Self {
        let m = matrix.num_playlists();
        let popularity = (0..matrix.num_tracks())
            .map(|t| {
                if m == 0 {
                    0.0
                } else {
                    matrix.column_count(t) as f64 / m as f64
                }
            })
            .collect();
        PopularityScorer { popularity }
    }

    pub fn popularity(&self) -> &[f64] {
        &self.popularity
    }
}

impl Scorer for PopularityScorer {
    fn score(&self, _query: &SparseVector, candidates: &[usize], _seed: u64) -> ScoredRanking {
        ScoredRanking::from_scores(candidates, |t| {
            self.popularity.get(t).copied().unwrap_or(0.0)
        })
    }
}

pub fn popularity_score(matrix: &InteractionMatrix, candidates: &[usize]) -> ScoredRanking {
    PopularityScorer::new(matrix).score(&SparseVector::new(), candidates, 0)
}
