//! Weighted regularized matrix factorization trained by alternating least
//! squares.
//!
//! Targets are `r = 1[x > 0]` with confidence `c = 1 + alpha * x`. Each
//! half-sweep solves, for every playlist (resp. track),
//!
//! ```text
//! (YᵀY + Yᵀ(C - I)Y + lambda I) f = YᵀC r
//! ```
//!
//! where only the nonzeros of the row contribute to the `C - I` term.

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::factors::{FactorMatrix, FactorModel};
use super::{ScoredRanking, Scorer};
use crate::error::{Error, Result};
use crate::interactions::{InteractionMatrix, SparseVector, SparseView};
use crate::linalg::{add_outer, axpy, cholesky_solve, dot, gram};

const INIT_STD_DEV: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlsConfig {
    pub factors: usize,
    pub alpha: f64,
    pub lambda: f64,
    pub sweeps: usize,
    pub seed: u64,
}

impl Default for AlsConfig {
    fn default() -> Self {
        AlsConfig {
            factors: 64,
            alpha: 40.0,
            lambda: 0.01,
            sweeps: 15,
            seed: 0,
        }
    }
}

impl AlsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.factors == 0 || self.sweeps == 0 {
            return Err(Error::InvalidConfig(
                "als: factors and sweeps must be at least 1".into(),
            ));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "als: bad alpha {}",
                self.alpha
            )));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "als: bad lambda {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// Solves one playlist (or track) subproblem against the fixed factors.
///
/// `gram` must be `fixedᵀ fixed`. An empty lane has the zero vector as its
/// minimizer and is returned without factorizing.
pub(crate) fn solve_lane(
    gram: &[f64],
    fixed: &FactorMatrix,
    lane: SparseView<'_>,
    alpha: f64,
    lambda: f64,
    out: &mut [f64],
) -> Result<()> {
    out.iter_mut().for_each(|v| *v = 0.0);
    if lane.is_empty() {
        return Ok(());
    }
    let f = fixed.cols();
    let mut a = gram.to_vec();
    for i in 0..f {
        a[i * f + i] += lambda;
    }
    for (j, x) in lane.iter() {
        let y = fixed.row(j);
        let c = 1.0 + alpha * x;
        add_outer(c - 1.0, y, &mut a);
        axpy(c, y, out);
    }
    cholesky_solve(&mut a, out)
}

fn solve_side<'m, L>(
    lanes: L,
    fixed: &FactorMatrix,
    out: &mut FactorMatrix,
    alpha: f64,
    lambda: f64,
) -> Result<()>
where
    L: Fn(usize) -> SparseView<'m> + Sync,
{
    let g = gram(fixed.as_slice(), fixed.cols());
    let f = out.cols();
    out.as_mut_slice()
        .par_chunks_mut(f)
        .enumerate()
        .try_for_each(|(i, row)| solve_lane(&g, fixed, lanes(i), alpha, lambda, row))
}

/// Step-wise trainer; [`als_train`] runs it for the configured sweeps.
pub struct AlsTrainer<'a> {
    matrix: &'a InteractionMatrix,
    config: AlsConfig,
    model: FactorModel,
}

impl<'a> AlsTrainer<'a> {
    pub fn new(matrix: &'a InteractionMatrix, config: &AlsConfig) -> Result<Self> {
        config.validate()?;
        if matrix.num_playlists() == 0 || matrix.num_tracks() == 0 {
            return Err(Error::DegenerateDimensions {
                rows: matrix.num_playlists(),
                cols: matrix.num_tracks(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let f = config.factors;
        let playlist_factors =
            FactorMatrix::gaussian(matrix.num_playlists(), f, INIT_STD_DEV, &mut rng);
        let track_factors = FactorMatrix::gaussian(matrix.num_tracks(), f, INIT_STD_DEV, &mut rng);
        Ok(AlsTrainer {
            matrix,
            config: config.clone(),
            model: FactorModel {
                playlist_factors,
                track_factors,
            },
        })
    }

    /// Replaces the current factors (e.g. to start from a chosen point).
    pub fn with_model(mut self, model: FactorModel) -> Self {
        self.model = model;
        self
    }

    pub fn solve_playlists(&mut self) -> Result<()> {
        let m = self.matrix;
        solve_side(
            |p| m.row_unchecked(p),
            &self.model.track_factors,
            &mut self.model.playlist_factors,
            self.config.alpha,
            self.config.lambda,
        )
    }

    pub fn solve_tracks(&mut self) -> Result<()> {
        let m = self.matrix;
        solve_side(
            |t| m.column_unchecked(t),
            &self.model.playlist_factors,
            &mut self.model.track_factors,
            self.config.alpha,
            self.config.lambda,
        )
    }

    pub fn sweep(&mut self) -> Result<()> {
        self.solve_playlists()?;
        self.solve_tracks()
    }

    pub fn model(&self) -> &FactorModel {
        &self.model
    }

    pub fn into_model(self) -> FactorModel {
        self.model
    }
}

pub fn als_train(matrix: &InteractionMatrix, config: &AlsConfig) -> Result<FactorModel> {
    let mut trainer = AlsTrainer::new(matrix, config)?;
    for _ in 0..config.sweeps {
        trainer.sweep()?;
    }
    let model = trainer.into_model();
    if !model.is_finite() {
        return Err(Error::Training("als produced non-finite factors".into()));
    }
    Ok(model)
}

/// Playlist factor for an unseen playlist: one playlist solve against the
/// trained track factors.
pub fn als_fold_in(
    model: &FactorModel,
    query: &SparseVector,
    config: &AlsConfig,
) -> Result<Vec<f64>> {
    let g = gram(model.track_factors.as_slice(), model.factors());
    fold_in_with_gram(&g, model, query, config.alpha, config.lambda)
}

pub(crate) fn fold_in_with_gram(
    gram: &[f64],
    model: &FactorModel,
    query: &SparseVector,
    alpha: f64,
    lambda: f64,
) -> Result<Vec<f64>> {
    let n = model.track_factors.rows();
    let known = query.indices().partition_point(|&t| t < n);
    let lane = SparseView {
        indices: &query.indices()[..known],
        values: &query.values()[..known],
    };
    let mut out = vec![0.0; model.factors()];
    solve_lane(gram, &model.track_factors, lane, alpha, lambda, &mut out)?;
    Ok(out)
}

/// Ranks candidates by `f_tᵀ f_p`.
pub fn als_score(model: &FactorModel, folded: &[f64], candidates: &[usize]) -> ScoredRanking {
    ScoredRanking::from_scores(candidates, |t| {
        if t < model.track_factors.rows() {
            dot(folded, model.track_factors.row(t))
        } else {
            0.0
        }
    })
}

/// Trained factor model that folds queries in by a confidence-weighted
/// least-squares solve.
#[derive(Debug, Clone)]
pub struct FoldInScorer {
    model: FactorModel,
    gram: Vec<f64>,
    alpha: f64,
    lambda: f64,
}

impl FoldInScorer {
    pub fn new(model: FactorModel, alpha: f64, lambda: f64) -> Self {
        let gram = gram(model.track_factors.as_slice(), model.factors());
        FoldInScorer {
            model,
            gram,
            alpha,
            lambda,
        }
    }

    pub fn model(&self) -> &FactorModel {
        &self.model
    }

    pub fn fold_in(&self, query: &SparseVector) -> Result<Vec<f64>> {
        fold_in_with_gram(&self.gram, &self.model, query, self.alpha, self.lambda)
    }
}

impl Scorer for FoldInScorer {
    fn score(&self, query: &SparseVector, candidates: &[usize], _seed: u64) -> ScoredRanking {
        let folded = self.fold_in(query).unwrap_or_else(|e| {
            warn!("fold-in failed ({e}); scoring with a zero factor");
            vec![0.0; self.model.factors()]
        });
        als_score(&self.model, &folded, candidates).with_empty_query(query.is_empty())
    }
}

pub type AlsScorer = FoldInScorer;
