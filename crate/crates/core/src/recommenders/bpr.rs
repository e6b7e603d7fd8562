//! Matrix factorization trained on the pairwise Bayesian personalized
//! ranking criterion
//!
//! ```text
//! sum over (p, t, t') of ln sigmoid(x_ptt') - lambda_theta * |theta|^2
//! ```
//!
//! with `x_ptt' = f_pᵀ f_t - f_pᵀ f_t'`, maximized by stochastic gradient
//! ascent over uniformly sampled triples.

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::als::FoldInScorer;
use super::factors::{FactorMatrix, FactorModel};
use super::{ScoredRanking, Scorer};
use crate::error::{Error, Result};
use crate::interactions::{InteractionMatrix, SparseVector};
use crate::linalg::dot;

const INIT_STD_DEV: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BprConfig {
    pub factors: usize,
    pub learning_rate: f64,
    pub lambda_theta: f64,
    pub epochs: usize,
    /// Defaults to the number of stored entries.
    pub samples_per_epoch: Option<usize>,
    pub seed: u64,
}

impl Default for BprConfig {
    fn default() -> Self {
        BprConfig {
            factors: 64,
            learning_rate: 0.05,
            lambda_theta: 0.01,
            epochs: 100,
            samples_per_epoch: None,
            seed: 0,
        }
    }
}

impl BprConfig {
    pub fn validate(&self) -> Result<()> {
        if self.factors == 0 || self.epochs == 0 || self.samples_per_epoch == Some(0) {
            return Err(Error::InvalidConfig(
                "bpr: factors, epochs and samples_per_epoch must be at least 1".into(),
            ));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "bpr: bad learning rate {}",
                self.learning_rate
            )));
        }
        if !(self.lambda_theta.is_finite() && self.lambda_theta >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "bpr: bad lambda_theta {}",
                self.lambda_theta
            )));
        }
        Ok(())
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln sigmoid(x)` without overflow for large negative `x`.
pub fn ln_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Pairwise prediction `f_pᵀ f_pos - f_pᵀ f_neg`.
pub fn pairwise(playlist: &[f64], positive: &[f64], negative: &[f64]) -> f64 {
    dot(playlist, positive) - dot(playlist, negative)
}

/// Per-triple objective `ln sigmoid(x) - lambda (|f_p|² + |f_pos|² + |f_neg|²)`
/// restricted to the three touched rows.
pub fn triple_objective(playlist: &[f64], positive: &[f64], negative: &[f64], lambda: f64) -> f64 {
    let reg: f64 = [playlist, positive, negative]
        .iter()
        .map(|v| dot(v, v))
        .sum();
    ln_sigmoid(pairwise(playlist, positive, negative)) - lambda * reg
}

/// Gradient of [`triple_objective`] with respect to the playlist, positive
/// and negative rows.
pub fn triple_gradient(
    playlist: &[f64],
    positive: &[f64],
    negative: &[f64],
    lambda: f64,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let g = sigmoid(-pairwise(playlist, positive, negative));
    let dp = playlist
        .iter()
        .zip(positive.iter().zip(negative))
        .map(|(p, (a, b))| g * (a - b) - 2.0 * lambda * p)
        .collect();
    let dpos = playlist
        .iter()
        .zip(positive)
        .map(|(p, a)| g * p - 2.0 * lambda * a)
        .collect();
    let dneg = playlist
        .iter()
        .zip(negative)
        .map(|(p, b)| -g * p - 2.0 * lambda * b)
        .collect();
    (dp, dpos, dneg)
}

/// Full criterion over an explicit list of triples.
pub fn criterion(model: &FactorModel, triples: &[(usize, usize, usize)], lambda: f64) -> f64 {
    let fit: f64 = triples
        .iter()
        .map(|&(p, t, n)| {
            ln_sigmoid(pairwise(
                model.playlist_factors.row(p),
                model.track_factors.row(t),
                model.track_factors.row(n),
            ))
        })
        .sum();
    fit - lambda * (model.playlist_factors.squared_norm() + model.track_factors.squared_norm())
}

/// One gradient-ascent step on the triple `(p, pos, neg)`.
pub fn ascent_step(
    model: &mut FactorModel,
    p: usize,
    pos: usize,
    neg: usize,
    learning_rate: f64,
    lambda: f64,
) {
    let (dp, dpos, dneg) = triple_gradient(
        model.playlist_factors.row(p),
        model.track_factors.row(pos),
        model.track_factors.row(neg),
        lambda,
    );
    for (v, d) in model.playlist_factors.row_mut(p).iter_mut().zip(dp) {
        *v += learning_rate * d;
    }
    for (v, d) in model.track_factors.row_mut(pos).iter_mut().zip(dpos) {
        *v += learning_rate * d;
    }
    for (v, d) in model.track_factors.row_mut(neg).iter_mut().zip(dneg) {
        *v += learning_rate * d;
    }
}

/// Trained model plus sampling diagnostics.
#[derive(Debug, Clone)]
pub struct BprFit {
    pub model: FactorModel,
    /// Samples drawn from playlists containing every track (no negative).
    pub skipped_samples: usize,
}

pub fn bpr_train(matrix: &InteractionMatrix, config: &BprConfig) -> Result<FactorModel> {
    bpr_train_detailed(matrix, config).map(|fit| fit.model)
}

pub fn bpr_train_detailed(matrix: &InteractionMatrix, config: &BprConfig) -> Result<BprFit> {
    config.validate()?;
    let n = matrix.num_tracks();
    if n < 2 {
        return Err(Error::Training(format!(
            "bpr needs at least 2 tracks, got {n}"
        )));
    }
    let nnz = matrix.nnz();
    if nnz == 0 {
        return Err(Error::Training(
            "bpr needs at least one positive entry".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let f = config.factors;
    let mut model = FactorModel {
        playlist_factors: FactorMatrix::gaussian(matrix.num_playlists(), f, INIT_STD_DEV, &mut rng),
        track_factors: FactorMatrix::gaussian(n, f, INIT_STD_DEV, &mut rng),
    };
    // entry k belongs to the playlist entry_rows[k]
    let mut entry_rows = Vec::with_capacity(nnz);
    let mut entry_tracks = Vec::with_capacity(nnz);
    for (p, t, _) in matrix.triples() {
        entry_rows.push(p);
        entry_tracks.push(t);
    }
    let samples = config.samples_per_epoch.unwrap_or(nnz);
    let mut skipped = 0;
    for _ in 0..config.epochs {
        for _ in 0..samples {
            let k = rng.random_range(0..nnz);
            let (p, pos) = (entry_rows[k], entry_tracks[k]);
            let row = matrix.row_unchecked(p);
            if row.len() >= n {
                skipped += 1;
                continue;
            }
            let neg = loop {
                let cand = rng.random_range(0..n);
                if row.indices.binary_search(&cand).is_err() {
                    break cand;
                }
            };
            ascent_step(
                &mut model,
                p,
                pos,
                neg,
                config.learning_rate,
                config.lambda_theta,
            );
        }
    }
    if skipped > 0 {
        warn!("bpr skipped {skipped} samples from playlists with no negative track");
    }
    if !model.is_finite() {
        return Err(Error::Training("bpr produced non-finite factors".into()));
    }
    Ok(BprFit {
        model,
        skipped_samples: skipped,
    })
}

/// Folds a query in by unit-confidence regularized least squares against
/// the trained track factors.
#[derive(Debug, Clone)]
pub struct BprScorer(FoldInScorer);

impl BprScorer {
    pub fn new(model: FactorModel, lambda_theta: f64) -> Self {
        BprScorer(FoldInScorer::new(model, 0.0, lambda_theta))
    }

    pub fn fold_in(&self, query: &SparseVector) -> Result<Vec<f64>> {
        self.0.fold_in(query)
    }
}

impl Scorer for BprScorer {
    fn score(&self, query: &SparseVector, candidates: &[usize], seed: u64) -> ScoredRanking {
        self.0.score(query, candidates, seed)
    }
}

pub fn bpr_score(
    model: &FactorModel,
    query: &SparseVector,
    candidates: &[usize],
    lambda_theta: f64,
) -> ScoredRanking {
    BprScorer::new(model.clone(), lambda_theta).score(query, candidates, 0)
}
