//! Ranking metrics with binary relevance.
//!
//! Every metric takes a ranking (item ids, best first) and the set of
//! relevant items. NDCG uses the `1 / log2(i + 1)` discount over the full
//! ranking.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn discount(position: usize) -> f64 {
    1.0 / ((position + 1) as f64).log2()
}

pub fn ndcg(ranking: &[usize], relevant: &BTreeSet<usize>) -> Result<f64> {
    if relevant.is_empty() {
        return Err(Error::EmptyRelevantSet);
    }
    let dcg: f64 = ranking
        .iter()
        .enumerate()
        .filter(|(_, t)| relevant.contains(t))
        .map(|(i, _)| discount(i + 1))
        .sum();
    let idcg: f64 = (1..=relevant.len()).map(discount).sum();
    Ok(dcg / idcg)
}

/// Fraction of the top-R ranked items that are relevant, R = |relevant|.
pub fn r_precision(ranking: &[usize], relevant: &BTreeSet<usize>) -> Result<f64> {
    if relevant.is_empty() {
        return Err(Error::EmptyRelevantSet);
    }
    let r = relevant.len();
    let hits = ranking
        .iter()
        .take(r)
        .filter(|t| relevant.contains(t))
        .count();
    Ok(hits as f64 / r as f64)
}

pub fn precision_at_1(ranking: &[usize], relevant: &BTreeSet<usize>) -> Result<f64> {
    match ranking.first() {
        None => Err(Error::EmptyRanking),
        Some(t) => Ok(if relevant.contains(t) { 1.0 } else { 0.0 }),
    }
}

/// Reduces a track ranking to the order of first occurrence of each artist,
/// and the relevant tracks to the artists owning them.
pub fn artist_level(
    ranking: &[usize],
    relevant: &BTreeSet<usize>,
    track_artist: &[usize],
) -> Result<(Vec<usize>, BTreeSet<usize>)> {
    let artist = |t: usize| track_artist.get(t).copied().ok_or(Error::MissingArtist(t));
    let mut seen = HashSet::new();
    let mut order = Vec::new();
    for &t in ranking {
        let a = artist(t)?;
        if seen.insert(a) {
            order.push(a);
        }
    }
    let truth = relevant.iter().map(|&t| artist(t)).collect::<Result<_>>()?;
    Ok((order, truth))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Track,
    Artist,
}

impl Level {
    pub const ALL: [Level; 2] = [Level::Track, Level::Artist];

    pub fn name(self) -> &'static str {
        match self {
            Level::Track => "track",
            Level::Artist => "artist",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "ndcg")]
    Ndcg,
    #[serde(rename = "rprec")]
    RPrecision,
    #[serde(rename = "prec1")]
    PrecisionAt1,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Ndcg, Metric::RPrecision, Metric::PrecisionAt1];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Ndcg => "ndcg",
            Metric::RPrecision => "rprec",
            Metric::PrecisionAt1 => "prec1",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Metric::Ndcg => "NDCG",
            Metric::RPrecision => "RPrec",
            Metric::PrecisionAt1 => "Prec@1",
        }
    }

    pub fn compute(self, ranking: &[usize], relevant: &BTreeSet<usize>) -> Result<f64> {
        match self {
            Metric::Ndcg => ndcg(ranking, relevant),
            Metric::RPrecision => r_precision(ranking, relevant),
            Metric::PrecisionAt1 => precision_at_1(ranking, relevant),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// All six (level, metric) values for one ranked playlist, in
/// `Level::ALL x Metric::ALL` order.
pub fn evaluate_all(
    ranking: &[usize],
    relevant: &BTreeSet<usize>,
    track_artist: &[usize],
) -> Result<[f64; 6]> {
    let (artists, artist_truth) = artist_level(ranking, relevant, track_artist)?;
    let mut out = [0.0; 6];
    for (i, metric) in Metric::ALL.into_iter().enumerate() {
        out[i] = metric.compute(ranking, relevant)?;
        out[3 + i] = metric.compute(&artists, &artist_truth)?;
    }
    Ok(out)
}
