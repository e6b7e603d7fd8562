//! Restricted-candidate cross-evaluation.
//!
//! For a city, the playlists holding at least one local track are split into
//! `k` folds. Each fold in turn is held out: models train on every other
//! playlist (full rows, local and non-local), and each held-out playlist is
//! split into its non-local tracks (the query) and its local tracks (the
//! truth). Only the city's local tracks are ranked. Metrics are averaged over
//! the playlists of a fold, then mean and standard error are taken over the
//! fold means.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use log::{debug, info, warn};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geo::LocalityTable;
use crate::ingest::local_playlists;
use crate::interactions::{Catalog, InteractionMatrix, SparseVector};
use crate::metrics::{evaluate_all, Level, Metric};
use crate::recommenders::{self, FactorModel, ModelConfigs, ModelKind, Scorer};
use crate::seed::{derive, hash_str};

pub const DEFAULT_FOLDS: usize = 5;

/// Disjoint playlist groups covering every local playlist of a city.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub city: String,
    pub folds: Vec<Vec<usize>>,
    pub seed: u64,
}

/// Seeded shuffle of the local playlists, then round-robin assignment.
pub fn make_folds(city: &str, local_playlists: &[usize], k: usize, seed: u64) -> Result<FoldPlan> {
    if k == 0 {
        return Err(Error::InvalidConfig("fold count must be at least 1".into()));
    }
    let mut order: Vec<usize> = local_playlists.to_vec();
    order.sort_unstable();
    order.dedup();
    if order.len() < k {
        return Err(Error::InsufficientData(format!(
            "{city}: {} local playlists for {k} folds",
            order.len()
        )));
    }
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![Vec::new(); k];
    for (i, p) in order.into_iter().enumerate() {
        folds[i % k].push(p);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(FoldPlan {
        city: city.to_string(),
        folds,
        seed,
    })
}

/// A held-out playlist split into query and ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPlaylist {
    pub playlist: usize,
    pub non_local: SparseVector,
    pub local_truth: BTreeSet<usize>,
}

/// Training matrix and evaluation set of one fold.
#[derive(Debug, Clone)]
pub struct FoldData {
    pub train: Arc<InteractionMatrix>,
    /// Source playlist of every training row.
    pub train_playlists: Vec<usize>,
    /// Trailing training rows that hold the non-local halves of evaluation
    /// playlists (only with `include_nonlocal_in_train`).
    pub augmented_rows: usize,
    pub eval: Vec<SplitPlaylist>,
}

pub fn split_playlist(
    matrix: &InteractionMatrix,
    local_tracks: &BTreeSet<usize>,
    playlist: usize,
) -> Result<SplitPlaylist> {
    let row = matrix.row(playlist)?;
    let (local, non_local): (Vec<_>, Vec<_>) =
        row.iter().partition(|(t, _)| local_tracks.contains(t));
    Ok(SplitPlaylist {
        playlist,
        non_local: SparseVector::from_pairs(non_local),
        local_truth: local.into_iter().map(|(t, _)| t).collect(),
    })
}

pub fn build_fold_matrices(
    matrix: &InteractionMatrix,
    local_tracks: &BTreeSet<usize>,
    plan: &FoldPlan,
    fold_index: usize,
    include_nonlocal_in_train: bool,
) -> Result<FoldData> {
    let held_out = plan.folds.get(fold_index).ok_or(Error::IndexOutOfRange {
        kind: "fold",
        index: fold_index,
        size: plan.folds.len(),
    })?;
    let held: BTreeSet<usize> = held_out.iter().copied().collect();
    let train_playlists: Vec<usize> = (0..matrix.num_playlists())
        .filter(|p| !held.contains(p))
        .collect();
    let eval = held_out
        .iter()
        .map(|&p| split_playlist(matrix, local_tracks, p))
        .collect::<Result<Vec<_>>>()?;

    let mut rows: Vec<Vec<(usize, f64)>> = train_playlists
        .iter()
        .map(|&p| matrix.row_unchecked(p).iter().collect())
        .collect();
    let mut augmented_rows = 0;
    if include_nonlocal_in_train {
        for split in &eval {
            rows.push(split.non_local.iter().collect());
            augmented_rows += 1;
        }
    }
    let train = InteractionMatrix::from_rows(matrix.num_tracks(), rows)?;
    Ok(FoldData {
        train: Arc::new(train),
        train_playlists,
        augmented_rows,
        eval,
    })
}

/// Local tracks that appear in at least one training playlist, ascending.
pub fn candidates(train: &InteractionMatrix, local_tracks: &BTreeSet<usize>) -> Vec<usize> {
    local_tracks
        .iter()
        .copied()
        .filter(|&t| t < train.num_tracks() && train.column_count(t) > 0)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub folds: usize,
    pub seed: u64,
    pub include_nonlocal_in_train: bool,
    /// Directory of saved factor models, reused when present.
    pub model_cache: Option<PathBuf>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            folds: DEFAULT_FOLDS,
            seed: 0,
            include_nonlocal_in_train: false,
            model_cache: None,
        }
    }
}

pub fn fold_seed(seed: u64, city: &str, fold: usize) -> u64 {
    derive(seed, &[hash_str(city), fold as u64])
}

pub fn model_seed(fold_seed: u64, model: ModelKind) -> u64 {
    derive(fold_seed, &[hash_str(model.name())])
}

pub fn query_seed(model_seed: u64, playlist: usize) -> u64 {
    derive(model_seed, &[playlist as u64])
}

/// Mean and standard error across fold values for one report cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricCell {
    pub city: String,
    pub model: ModelKind,
    pub level: Level,
    pub metric: Metric,
    pub mean: f64,
    pub se: f64,
    pub folds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellFailure {
    pub city: String,
    pub model: ModelKind,
    pub fold: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldDiagnostics {
    pub eval_playlists: usize,
    /// Playlists with at least one scoreable relevant track.
    pub evaluated: usize,
    pub candidates: usize,
    /// Relevant tracks dropped because no training playlist contains them.
    pub excluded_truth_tracks: usize,
    /// Evaluated playlists with no non-local tracks.
    pub empty_queries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CityReport {
    pub city: String,
    pub local_playlists: usize,
    pub cells: Vec<MetricCell>,
    pub failures: Vec<CellFailure>,
    pub diagnostics: Vec<FoldDiagnostics>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EvalReport {
    pub cities: Vec<CityReport>,
}

impl EvalReport {
    pub fn cells(&self) -> impl Iterator<Item = &MetricCell> {
        self.cities.iter().flat_map(|c| c.cells.iter())
    }

    pub fn failures(&self) -> impl Iterator<Item = &CellFailure> {
        self.cities.iter().flat_map(|c| c.failures.iter())
    }

    pub fn cell(
        &self,
        city: &str,
        model: ModelKind,
        level: Level,
        metric: Metric,
    ) -> Option<&MetricCell> {
        self.cells()
            .find(|c| c.city == city && c.model == model && c.level == level && c.metric == metric)
    }
}

/// Sample mean and standard error (sample std / sqrt(n)).
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Per-playlist metric values for one trained scorer on one fold.
pub struct FoldScores {
    /// Rows in `Level::ALL x Metric::ALL` order.
    pub per_playlist: Vec<[f64; 6]>,
    pub empty_queries: usize,
}

impl FoldScores {
    pub fn mean(&self) -> Option<[f64; 6]> {
        if self.per_playlist.is_empty() {
            return None;
        }
        let n = self.per_playlist.len() as f64;
        let mut out = [0.0; 6];
        for row in &self.per_playlist {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        Some(out.map(|v| v / n))
    }
}

/// Scores every evaluation playlist of a fold with `scorer`.
pub fn score_fold(
    scorer: &dyn Scorer,
    eval: &[SplitPlaylist],
    candidates: &[usize],
    track_artist: &[usize],
    model_seed: u64,
) -> Result<FoldScores> {
    let cand: BTreeSet<usize> = candidates.iter().copied().collect();
    let mut per_playlist = Vec::new();
    let mut empty_queries = 0;
    for split in eval {
        let truth: BTreeSet<usize> = split.local_truth.intersection(&cand).copied().collect();
        if truth.is_empty() {
            continue;
        }
        let ranking = scorer.score(
            &split.non_local,
            candidates,
            query_seed(model_seed, split.playlist),
        );
        if split.non_local.is_empty() {
            empty_queries += 1;
        }
        per_playlist.push(evaluate_all(&ranking.tracks(), &truth, track_artist)?);
    }
    Ok(FoldScores {
        per_playlist,
        empty_queries,
    })
}

fn cache_path(dir: &Path, city: &str, kind: ModelKind, fold: usize, fingerprint: u64) -> PathBuf {
    let slug: String = city
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '_'
            }
        })
        .collect();
    dir.join(format!("{slug}-{kind}-fold{fold}-{fingerprint:016x}.ltrc"))
}

fn model_fingerprint(
    kind: ModelKind,
    configs: &ModelConfigs,
    seed: u64,
    train: &InteractionMatrix,
) -> u64 {
    let config = match kind {
        ModelKind::Als => format!("{:?}", configs.als),
        ModelKind::Bpr => format!("{:?}", configs.bpr),
        _ => String::new(),
    };
    derive(
        hash_str(&config),
        &[
            seed,
            train.num_playlists() as u64,
            train.num_tracks() as u64,
            train.nnz() as u64,
        ],
    )
}

/// Trains a model, or loads it from the cache for factor models.
fn fit_cached(
    kind: ModelKind,
    train: &Arc<InteractionMatrix>,
    configs: &ModelConfigs,
    seed: u64,
    cache: Option<(&Path, &str, usize)>,
) -> Result<Box<dyn Scorer>> {
    let Some((dir, city, fold)) = cache.filter(|_| matches!(kind, ModelKind::Als | ModelKind::Bpr))
    else {
        return recommenders::fit(kind, train, configs, seed);
    };
    let path = cache_path(
        dir,
        city,
        kind,
        fold,
        model_fingerprint(kind, configs, seed, train),
    );
    if path.exists() {
        let model = FactorModel::read_from(BufReader::new(File::open(&path)?))?;
        if model.playlist_factors.rows() == train.num_playlists()
            && model.track_factors.rows() == train.num_tracks()
        {
            debug!("loaded {}", path.display());
            return recommenders::factor_scorer(kind, model, configs);
        }
        warn!("{} has mismatched dimensions; retraining", path.display());
    }
    let model = match kind {
        ModelKind::Als => recommenders::als_train(
            train,
            &recommenders::AlsConfig {
                seed,
                ..configs.als.clone()
            },
        )?,
        _ => recommenders::bpr_train(
            train,
            &recommenders::BprConfig {
                seed,
                ..configs.bpr.clone()
            },
        )?,
    };
    std::fs::create_dir_all(dir)?;
    model.write_to(BufWriter::new(File::create(&path)?))?;
    recommenders::factor_scorer(kind, model, configs)
}

pub fn run_city(
    matrix: &InteractionMatrix,
    catalog: &Catalog,
    locality: &LocalityTable,
    city: &str,
    models: &[ModelKind],
    configs: &ModelConfigs,
    options: &EvalOptions,
) -> Result<CityReport> {
    if options.folds < 2 {
        return Err(Error::InvalidConfig("at least 2 folds are required".into()));
    }
    let local = &locality.city(city)?.tracks;
    let in_matrix = local
        .iter()
        .filter(|&&t| t < matrix.num_tracks() && matrix.column_count(t) > 0)
        .count();
    if in_matrix < 2 {
        return Err(Error::InsufficientData(format!(
            "{city}: {in_matrix} local tracks present in playlists, need at least 2"
        )));
    }
    let playlists = local_playlists(matrix, local);
    let plan = make_folds(
        city,
        &playlists,
        options.folds,
        derive(options.seed, &[hash_str(city)]),
    )?;
    info!(
        "{city}: {} local playlists, {in_matrix} local tracks",
        playlists.len()
    );

    let folds: Vec<FoldData> = (0..options.folds)
        .into_par_iter()
        .map(|f| build_fold_matrices(matrix, local, &plan, f, options.include_nonlocal_in_train))
        .collect::<Result<_>>()?;
    let fold_candidates: Vec<Vec<usize>> =
        folds.iter().map(|d| candidates(&d.train, local)).collect();

    let jobs: Vec<(usize, ModelKind)> = (0..options.folds)
        .flat_map(|f| models.iter().map(move |&m| (f, m)))
        .collect();
    let results: Vec<Result<FoldScores>> = jobs
        .par_iter()
        .map(|&(f, kind)| {
            let seed = model_seed(fold_seed(options.seed, city, f), kind);
            let cache = options.model_cache.as_deref().map(|d| (d, city, f));
            let scorer = fit_cached(kind, &folds[f].train, configs, seed, cache)?;
            score_fold(
                scorer.as_ref(),
                &folds[f].eval,
                &fold_candidates[f],
                catalog.track_artists(),
                seed,
            )
        })
        .collect();

    let diagnostics: Vec<FoldDiagnostics> = folds
        .iter()
        .zip(&fold_candidates)
        .map(|(data, cand)| {
            let cand: BTreeSet<usize> = cand.iter().copied().collect();
            let mut d = FoldDiagnostics {
                eval_playlists: data.eval.len(),
                evaluated: 0,
                candidates: cand.len(),
                excluded_truth_tracks: 0,
                empty_queries: 0,
            };
            for split in &data.eval {
                let kept = split.local_truth.intersection(&cand).count();
                d.excluded_truth_tracks += split.local_truth.len() - kept;
                if kept > 0 {
                    d.evaluated += 1;
                    d.empty_queries += usize::from(split.non_local.is_empty());
                }
            }
            d
        })
        .collect();
    for (f, d) in diagnostics.iter().enumerate() {
        if d.excluded_truth_tracks > 0 {
            debug!(
                "{city}: fold {f}: {} relevant tracks unscoreable",
                d.excluded_truth_tracks
            );
        }
    }

    let mut cells = Vec::new();
    let mut failures = Vec::new();
    for &kind in models {
        let mut fold_means = Vec::with_capacity(options.folds);
        for (&(fold, _), result) in jobs.iter().zip(&results).filter(|(j, _)| j.1 == kind) {
            match result {
                Ok(scores) => match scores.mean() {
                    Some(m) => fold_means.push(m),
                    None => failures.push(CellFailure {
                        city: city.to_string(),
                        model: kind,
                        fold: Some(fold),
                        message: "no evaluable playlists in fold".into(),
                    }),
                },
                Err(e) => failures.push(CellFailure {
                    city: city.to_string(),
                    model: kind,
                    fold: Some(fold),
                    message: e.to_string(),
                }),
            }
        }
        if fold_means.len() != options.folds {
            warn!("{city}/{kind}: cell skipped after fold failures");
            continue;
        }
        for (li, level) in Level::ALL.into_iter().enumerate() {
            for (mi, metric) in Metric::ALL.into_iter().enumerate() {
                let values: Vec<f64> = fold_means.iter().map(|m| m[li * 3 + mi]).collect();
                let (mean, se) = mean_and_se(&values);
                cells.push(MetricCell {
                    city: city.to_string(),
                    model: kind,
                    level,
                    metric,
                    mean,
                    se,
                    folds: values,
                });
            }
        }
    }
    Ok(CityReport {
        city: city.to_string(),
        local_playlists: playlists.len(),
        cells,
        failures,
        diagnostics,
    })
}

/// Runs every requested city. A city without enough data is recorded as a
/// failure for each model rather than aborting the run.
pub fn run_all(
    matrix: &InteractionMatrix,
    catalog: &Catalog,
    locality: &LocalityTable,
    cities: &[String],
    models: &[ModelKind],
    configs: &ModelConfigs,
    options: &EvalOptions,
) -> Result<EvalReport> {
    configs.validate()?;
    let mut report = EvalReport::default();
    for city in cities {
        locality.city(city)?;
        match run_city(matrix, catalog, locality, city, models, configs, options) {
            Ok(r) => report.cities.push(r),
            Err(e @ Error::InsufficientData(_)) => {
                warn!("{e}");
                report.cities.push(CityReport {
                    city: city.clone(),
                    local_playlists: 0,
                    cells: Vec::new(),
                    failures: models
                        .iter()
                        .map(|&model| CellFailure {
                            city: city.clone(),
                            model,
                            fold: None,
                            message: e.to_string(),
                        })
                        .collect(),
                    diagnostics: Vec::new(),
                });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(report)
}
