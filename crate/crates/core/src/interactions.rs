//! Sparse playlist x track interaction store and the id bookkeeping around it.
//!
//! The matrix keeps both a row-major (playlist) and a column-major (track)
//! copy of the same triples. Every stored rating is strictly positive; zeros
//! are never stored.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

/// Borrowed sparse vector: sorted indices with parallel values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparseView<'a> {
    pub indices: &'a [usize],
    pub values: &'a [f64],
}

impl<'a> SparseView<'a> {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + 'a {
        self.indices
            .iter()
            .copied()
            .zip(self.values.iter().copied())
    }

    pub fn to_owned(&self) -> SparseVector {
        SparseVector {
            indices: self.indices.to_vec(),
            values: self.values.to_vec(),
        }
    }

    /// Binary search for a stored index.
    pub fn get(&self, index: usize) -> Option<f64> {
        self.indices
            .binary_search(&index)
            .ok()
            .map(|pos| self.values[pos])
    }
}

/// Owned sparse vector with sorted, distinct indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a vector from arbitrary-order pairs. Later duplicates overwrite
    /// earlier ones and non-positive values are dropped.
    pub fn from_pairs<I: IntoIterator<Item = (usize, f64)>>(pairs: I) -> Self {
        let map: BTreeMap<usize, f64> = pairs.into_iter().collect();
        let (indices, values) = map.into_iter().filter(|&(_, v)| v > 0.0).unzip();
        SparseVector { indices, values }
    }

    /// Indicator vector (all values 1.0) over the given indices.
    pub fn indicator<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        Self::from_pairs(indices.into_iter().map(|i| (i, 1.0)))
    }

    pub fn view(&self) -> SparseView<'_> {
        SparseView {
            indices: &self.indices,
            values: &self.values,
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.view().iter()
    }
}

/// One compressed axis (CSR or CSC) of the matrix.
#[derive(Debug, Clone, PartialEq)]
struct Compressed {
    offsets: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl Compressed {
    fn from_lanes(lanes: &[Vec<(usize, f64)>]) -> Self {
        let mut offsets = Vec::with_capacity(lanes.len() + 1);
        let nnz = lanes.iter().map(Vec::len).sum();
        let mut indices = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        offsets.push(0);
        for lane in lanes {
            for &(i, v) in lane {
                indices.push(i);
                values.push(v);
            }
            offsets.push(indices.len());
        }
        Compressed {
            offsets,
            indices,
            values,
        }
    }

    fn lane(&self, i: usize) -> SparseView<'_> {
        let (start, end) = (self.offsets[i], self.offsets[i + 1]);
        SparseView {
            indices: &self.indices[start..end],
            values: &self.values[start..end],
        }
    }
}

/// Sparse m x n playlist-track matrix with row and column access.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix {
    num_playlists: usize,
    num_tracks: usize,
    rows: Compressed,
    cols: Compressed,
}

impl InteractionMatrix {
    /// An m x n matrix with no entries.
    pub fn empty(num_playlists: usize, num_tracks: usize) -> Self {
        Self::from_rows(num_tracks, vec![Vec::new(); num_playlists])
            .expect("empty rows are always valid")
    }

    /// Builds a matrix from (playlist, track, rating) triples.
    ///
    /// Ratings must be finite and strictly positive, indices in range and
    /// pairs distinct.
    pub fn from_triples<I>(num_playlists: usize, num_tracks: usize, triples: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut rows = vec![Vec::new(); num_playlists];
        for (p, t, x) in triples {
            if p >= num_playlists {
                return Err(Error::IndexOutOfRange {
                    kind: "playlist",
                    index: p,
                    size: num_playlists,
                });
            }
            rows[p].push((t, x));
        }
        Self::from_rows(num_tracks, rows)
    }

    /// Builds a matrix from per-playlist lists of (track, rating).
    pub fn from_rows(num_tracks: usize, mut rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let num_playlists = rows.len();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); num_tracks];
        for (p, row) in rows.iter_mut().enumerate() {
            row.sort_by_key(|&(t, _)| t);
            for (i, &(t, x)) in row.iter().enumerate() {
                if t >= num_tracks {
                    return Err(Error::IndexOutOfRange {
                        kind: "track",
                        index: t,
                        size: num_tracks,
                    });
                }
                if !(x.is_finite() && x > 0.0) {
                    return Err(Error::InvalidEntry {
                        row: p,
                        col: t,
                        reason: "rating must be finite and strictly positive",
                    });
                }
                if i > 0 && row[i - 1].0 == t {
                    return Err(Error::InvalidEntry {
                        row: p,
                        col: t,
                        reason: "duplicate entry",
                    });
                }
                cols[t].push((p, x));
            }
        }
        Ok(InteractionMatrix {
            num_playlists,
            num_tracks,
            rows: Compressed::from_lanes(&rows),
            cols: Compressed::from_lanes(&cols),
        })
    }

    pub fn num_playlists(&self) -> usize {
        self.num_playlists
    }

    pub fn num_tracks(&self) -> usize {
        self.num_tracks
    }

    pub fn nnz(&self) -> usize {
        self.rows.indices.len()
    }

    /// Tracks of playlist `p`.
    pub fn row(&self, p: usize) -> Result<SparseView<'_>> {
        if p >= self.num_playlists {
            return Err(Error::IndexOutOfRange {
                kind: "playlist",
                index: p,
                size: self.num_playlists,
            });
        }
        Ok(self.rows.lane(p))
    }

    /// Playlists containing track `t`.
    pub fn column(&self, t: usize) -> Result<SparseView<'_>> {
        if t >= self.num_tracks {
            return Err(Error::IndexOutOfRange {
                kind: "track",
                index: t,
                size: self.num_tracks,
            });
        }
        Ok(self.cols.lane(t))
    }

    /// Unchecked row access for hot loops; panics on out-of-range.
    pub(crate) fn row_unchecked(&self, p: usize) -> SparseView<'_> {
        self.rows.lane(p)
    }

    pub(crate) fn column_unchecked(&self, t: usize) -> SparseView<'_> {
        self.cols.lane(t)
    }

    /// Number of playlists containing track `t`.
    pub fn column_count(&self, t: usize) -> usize {
        self.cols.offsets[t + 1] - self.cols.offsets[t]
    }

    /// All stored (playlist, track, rating) triples in row-major order.
    pub fn triples(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.num_playlists)
            .flat_map(move |p| self.rows.lane(p).iter().map(move |(t, x)| (p, t, x)))
    }

    /// Fraction of zero cells, `1 - nnz / (m * n)`.
    pub fn sparsity(&self) -> Result<f64> {
        let cells = self.num_playlists * self.num_tracks;
        if cells == 0 {
            return Err(Error::DegenerateDimensions {
                rows: self.num_playlists,
                cols: self.num_tracks,
            });
        }
        Ok(1.0 - self.nnz() as f64 / cells as f64)
    }

    /// Submatrix keeping the listed playlists (in the given order) over the
    /// full track space.
    pub fn select_rows(&self, playlists: &[usize]) -> Result<Self> {
        let rows = playlists
            .iter()
            .map(|&p| self.row(p).map(|r| r.iter().collect()))
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(self.num_tracks, rows)
    }
}

/// Bidirectional id maps for playlists, tracks and artists.
///
/// Indices are assigned by sorting the external ids, so the same input
/// always yields the same indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Catalog {
    playlist_ids: Vec<String>,
    track_ids: Vec<String>,
    artist_ids: Vec<String>,
    track_artist: Vec<usize>,
}

impl Catalog {
    /// Builds a catalog from playlist ids and a track -> artist map.
    pub fn new<P, S>(playlist_ids: P, track_artists: &BTreeMap<String, String>) -> Self
    where
        P: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let playlist_ids: Vec<String> = playlist_ids
            .into_iter()
            .map(Into::into)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let artist_ids: Vec<String> = track_artists
            .values()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let track_ids: Vec<String> = track_artists.keys().cloned().collect();
        let track_artist = track_artists
            .values()
            .map(|a| artist_ids.binary_search(a).expect("artist collected above"))
            .collect();
        Catalog {
            playlist_ids,
            track_ids,
            artist_ids,
            track_artist,
        }
    }

    pub fn num_playlists(&self) -> usize {
        self.playlist_ids.len()
    }

    pub fn num_tracks(&self) -> usize {
        self.track_ids.len()
    }

    pub fn num_artists(&self) -> usize {
        self.artist_ids.len()
    }

    pub fn playlist_ids(&self) -> &[String] {
        &self.playlist_ids
    }

    pub fn track_ids(&self) -> &[String] {
        &self.track_ids
    }

    pub fn artist_ids(&self) -> &[String] {
        &self.artist_ids
    }

    /// Artist index for every track index.
    pub fn track_artists(&self) -> &[usize] {
        &self.track_artist
    }

    pub fn playlist_index(&self, id: &str) -> Option<usize> {
        self.playlist_ids
            .binary_search_by(|p| p.as_str().cmp(id))
            .ok()
    }

    pub fn track_index(&self, id: &str) -> Option<usize> {
        self.track_ids.binary_search_by(|t| t.as_str().cmp(id)).ok()
    }

    pub fn artist_index(&self, id: &str) -> Option<usize> {
        self.artist_ids
            .binary_search_by(|a| a.as_str().cmp(id))
            .ok()
    }

    pub fn artist_of(&self, track: usize) -> Option<usize> {
        self.track_artist.get(track).copied()
    }
}

/// Builds the binary interaction matrix from (playlist id, track id) pairs.
///
/// Repeated pairs collapse to a single rating of 1.0. Every track gets a
/// placeholder artist equal to its own id; use [`Catalog::new`] directly when
/// artist ownership is known.
pub fn build_matrix<I, P, T>(interactions: I) -> (InteractionMatrix, Catalog)
where
    I: IntoIterator<Item = (P, T)>,
    P: Into<String>,
    T: Into<String>,
{
    let pairs: BTreeSet<(String, String)> = interactions
        .into_iter()
        .map(|(p, t)| (p.into(), t.into()))
        .collect();
    let track_artists: BTreeMap<String, String> =
        pairs.iter().map(|(_, t)| (t.clone(), t.clone())).collect();
    let catalog = Catalog::new(pairs.iter().map(|(p, _)| p.clone()), &track_artists);
    let matrix = matrix_for_catalog(
        &catalog,
        pairs.iter().map(|(p, t)| (p.as_str(), t.as_str())),
    );
    (matrix, catalog)
}

/// Builds the matrix for pairs whose ids are all known to `catalog`.
pub(crate) fn matrix_for_catalog<'a, I>(catalog: &Catalog, pairs: I) -> InteractionMatrix
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    let mut rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); catalog.num_playlists()];
    for (p, t) in pairs {
        let p = catalog.playlist_index(p).expect("playlist in catalog");
        let t = catalog.track_index(t).expect("track in catalog");
        rows[p].insert(t);
    }
    let rows = rows
        .into_iter()
        .map(|r| r.into_iter().map(|t| (t, 1.0)).collect())
        .collect();
    InteractionMatrix::from_rows(catalog.num_tracks(), rows).expect("catalog indices are valid")
}
