//! Scorers over a restricted candidate set.
//!
//! Every scorer is trained on an [`InteractionMatrix`] and then ranks a set
//! of candidate tracks for a query playlist given as a sparse track vector.
//! Rankings are ordered by descending score, ties broken by ascending track
//! index.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interactions::{InteractionMatrix, SparseVector};

pub mod als;
pub mod baselines;
pub mod bpr;
pub mod factors;
pub mod iin;

pub use als::{als_fold_in, als_score, als_train, AlsConfig, AlsTrainer};
pub use baselines::{popularity_score, random_score};
pub use bpr::{bpr_score, bpr_train, BprConfig};
pub use factors::{FactorMatrix, FactorModel};
pub use iin::iin_score;

/// Candidate tracks ordered from best to worst.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredRanking {
    entries: Vec<(usize, f64)>,
    /// Set when the scorer received an empty query and fell back to its
    /// convention (all-zero scores for similarity and factor models).
    pub empty_query: bool,
}

impl ScoredRanking {
    /// Ranks `candidates` by `score`. Duplicate candidates are dropped.
    pub fn from_scores<F: FnMut(usize) -> f64>(candidates: &[usize], mut score: F) -> Self {
        let mut entries: Vec<(usize, f64)> = candidates.iter().map(|&t| (t, score(t))).collect();
        entries.sort_by_key(|e| e.0);
        entries.dedup_by_key(|e| e.0);
        entries.sort_by(|a, b| compare_desc(a.1, b.1).then(a.0.cmp(&b.0)));
        ScoredRanking {
            entries,
            empty_query: false,
        }
    }

    pub fn with_empty_query(mut self, flag: bool) -> Self {
        self.empty_query = flag;
        self
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    /// Track indices in rank order.
    pub fn tracks(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.0).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn compare_desc(a: f64, b: f64) -> Ordering {
    b.total_cmp(&a)
}

/// A trained model that ranks candidates for a query playlist.
pub trait Scorer: Send + Sync {
    /// Ranks `candidates` for `query`. `seed` feeds scorers that are random
    /// per query; deterministic scorers ignore it.
    fn score(&self, query: &SparseVector, candidates: &[usize], seed: u64) -> ScoredRanking;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Iin,
    Als,
    Bpr,
    Random,
    Popularity,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Iin,
        ModelKind::Als,
        ModelKind::Bpr,
        ModelKind::Random,
        ModelKind::Popularity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Iin => "iin",
            ModelKind::Als => "als",
            ModelKind::Bpr => "bpr",
            ModelKind::Random => "random",
            ModelKind::Popularity => "popularity",
        }
    }

    /// Label used in the human-readable tables.
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Iin => "Item-Item",
            ModelKind::Als => "ALS",
            ModelKind::Bpr => "BPR",
            ModelKind::Random => "Random",
            ModelKind::Popularity => "Popular",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "iin" | "item-item" | "itemitem" => Ok(ModelKind::Iin),
            "als" | "wrmf" => Ok(ModelKind::Als),
            "bpr" => Ok(ModelKind::Bpr),
            "random" => Ok(ModelKind::Random),
            "popularity" | "popular" | "pop" => Ok(ModelKind::Popularity),
            other => Err(Error::UnknownModel(other.to_string())),
        }
    }
}

/// Hyperparameters for every trainable model.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfigs {
    pub als: AlsConfig,
    pub bpr: BprConfig,
}

impl ModelConfigs {
    pub fn validate(&self) -> Result<()> {
        self.als.validate()?;
        self.bpr.validate()
    }
}

/// Trains `kind` on `matrix`. `seed` replaces the seed in the model config.
pub fn fit(
    kind: ModelKind,
    matrix: &Arc<InteractionMatrix>,
    configs: &ModelConfigs,
    seed: u64,
) -> Result<Box<dyn Scorer>> {
    Ok(match kind {
        ModelKind::Iin => Box::new(iin::IinScorer::new(Arc::clone(matrix))),
        ModelKind::Als => {
            let config = AlsConfig {
                seed,
                ..configs.als.clone()
            };
            let model = als_train(matrix, &config)?;
            Box::new(als::AlsScorer::new(model, config.alpha, config.lambda))
        }
        ModelKind::Bpr => {
            let config = BprConfig {
                seed,
                ..configs.bpr.clone()
            };
            let model = bpr_train(matrix, &config)?;
            Box::new(bpr::BprScorer::new(model, config.lambda_theta))
        }
        ModelKind::Random => Box::new(baselines::RandomScorer),
        ModelKind::Popularity => Box::new(baselines::PopularityScorer::new(matrix)),
    })
}

/// Wraps an already trained factor model as a scorer, folding queries in the
/// way `kind` does after training.
pub fn factor_scorer(
    kind: ModelKind,
    model: FactorModel,
    configs: &ModelConfigs,
) -> Result<Box<dyn Scorer>> {
    match kind {
        ModelKind::Als => Ok(Box::new(als::AlsScorer::new(
            model,
            configs.als.alpha,
            configs.als.lambda,
        ))),
        ModelKind::Bpr => Ok(Box::new(bpr::BprScorer::new(
            model,
            configs.bpr.lambda_theta,
        ))),
        other => Err(Error::InvalidConfig(format!(
            "{other} is not a factor model"
        ))),
    }
}
