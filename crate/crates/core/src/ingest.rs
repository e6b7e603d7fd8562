//! File loading for playlists, events and city centers.
//!
//! Formats:
//! - playlists: JSON lines, one `{"playlist_id": .., "tracks": [{"track_id": .., "artist_id": ..}]}` per line;
//! - events: CSV with header `event_id,artist_id,venue_lat,venue_lon`;
//! - cities: CSV with header `name,lat,lon[,radius_miles]`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{
    build_locality_table, CityCenter, EventRecord, LatLon, LocalityRule, LocalityTable,
    DEFAULT_RADIUS_MILES,
};
use crate::interactions::{matrix_for_catalog, Catalog, InteractionMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackRecord {
    pub track_id: String,
    pub artist_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaylistRecord {
    pub playlist_id: String,
    #[serde(default)]
    pub tracks: Vec<TrackRecord>,
}

#[derive(Debug, Deserialize, Serialize)]
struct EventRow {
    event_id: String,
    artist_id: String,
    venue_lat: f64,
    venue_lon: f64,
}

#[derive(Debug, Deserialize, Serialize)]
struct CityRow {
    name: String,
    lat: f64,
    lon: f64,
    #[serde(default)]
    radius_miles: Option<f64>,
}

fn parse_error(path: &Path, line: u64, message: impl ToString) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.to_string(),
    }
}

fn csv_error(path: &Path, err: csv::Error) -> Error {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    match err.kind() {
        csv::ErrorKind::Io(_) => Error::Csv(err),
        _ => parse_error(path, line, err),
    }
}

/// Deserializes every record, pairing it with its 1-based line number.
fn csv_rows<T: serde::de::DeserializeOwned>(
    path: &Path,
    reader: &mut csv::Reader<File>,
) -> Result<Vec<(u64, T)>> {
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row = record
            .deserialize(Some(&headers))
            .map_err(|e| parse_error(path, line, e))?;
        out.push((line, row));
    }
    Ok(out)
}

pub fn read_playlists(path: &Path) -> Result<Vec<PlaylistRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PlaylistRecord =
            serde_json::from_str(&line).map_err(|e| parse_error(path, i as u64 + 1, e))?;
        out.push(record);
    }
    Ok(out)
}

pub fn write_playlists(path: &Path, playlists: &[PlaylistRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for p in playlists {
        serde_json::to_writer(&mut w, p)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_events(path: &Path) -> Result<Vec<EventRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut out = Vec::new();
    for (line, row) in csv_rows::<EventRow>(path, &mut reader)? {
        let venue =
            LatLon::new(row.venue_lat, row.venue_lon).map_err(|e| parse_error(path, line, e))?;
        out.push(EventRecord {
            event_id: row.event_id,
            artist_id: row.artist_id,
            venue,
        });
    }
    Ok(out)
}

pub fn write_events(path: &Path, events: &[EventRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for e in events {
        w.serialize(EventRow {
            event_id: e.event_id.clone(),
            artist_id: e.artist_id.clone(),
            venue_lat: e.venue.lat,
            venue_lon: e.venue.lon,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_cities(path: &Path) -> Result<Vec<CityCenter>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut out = Vec::new();
    for (line, row) in csv_rows::<CityRow>(path, &mut reader)? {
        let city = CityCenter::new(
            row.name,
            row.lat,
            row.lon,
            row.radius_miles.unwrap_or(DEFAULT_RADIUS_MILES),
        )
        .map_err(|e| parse_error(path, line, e))?;
        out.push(city);
    }
    Ok(out)
}

pub fn write_cities(path: &Path, cities: &[CityCenter]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for c in cities {
        w.serialize(CityRow {
            name: c.name.clone(),
            lat: c.center.lat,
            lon: c.center.lon,
            radius_miles: Some(c.radius_miles),
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Everything the evaluation needs, loaded from disk.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub matrix: InteractionMatrix,
    pub catalog: Catalog,
    pub locality: LocalityTable,
    pub cities: Vec<CityCenter>,
    /// Event records whose artist owns no track in the playlist file.
    pub unknown_event_artists: usize,
}

/// Builds matrix and catalog from parsed playlist records.
pub fn assemble(playlists: &[PlaylistRecord]) -> Result<(InteractionMatrix, Catalog)> {
    let mut track_artists: BTreeMap<String, String> = BTreeMap::new();
    for p in playlists {
        for t in &p.tracks {
            match track_artists.get(&t.track_id) {
                Some(a) if *a != t.artist_id => {
                    return Err(Error::InconsistentArtist {
                        track: t.track_id.clone(),
                        first: a.clone(),
                        second: t.artist_id.clone(),
                    })
                }
                Some(_) => {}
                None => {
                    track_artists.insert(t.track_id.clone(), t.artist_id.clone());
                }
            }
        }
    }
    let catalog = Catalog::new(
        playlists.iter().map(|p| p.playlist_id.clone()),
        &track_artists,
    );
    let matrix = matrix_for_catalog(
        &catalog,
        playlists.iter().flat_map(|p| {
            p.tracks
                .iter()
                .map(move |t| (p.playlist_id.as_str(), t.track_id.as_str()))
        }),
    );
    Ok((matrix, catalog))
}

pub fn load_dataset(playlists: &Path, events: &Path, cities: &Path) -> Result<Dataset> {
    let records = read_playlists(playlists)?;
    let events = read_events(events)?;
    let cities = read_cities(cities)?;
    let (matrix, catalog) = assemble(&records)?;
    let unknown_event_artists = events
        .iter()
        .filter(|e| catalog.artist_index(&e.artist_id).is_none())
        .count();
    if unknown_event_artists > 0 {
        warn!("{unknown_event_artists} event records reference artists with no tracks; ignored");
    }
    let locality = build_locality_table(&events, &cities, &catalog, LocalityRule::default());
    Ok(Dataset {
        matrix,
        catalog,
        locality,
        cities,
        unknown_event_artists,
    })
}

/// Per-city summary statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CitySummary {
    pub city: String,
    /// Playlists holding at least one local track.
    pub local_playlists: usize,
    /// Local artists owning at least one catalog track.
    pub local_artists: usize,
    pub local_tracks: usize,
    /// Fraction of zero cells in the (all playlists) x (local tracks) block.
    pub sparsity: f64,
    /// Set when the block has no cells and `sparsity` is the 1.0 convention.
    pub empty_block: bool,
}

/// Playlists containing at least one of `tracks`, ascending.
pub fn local_playlists(matrix: &InteractionMatrix, tracks: &BTreeSet<usize>) -> Vec<usize> {
    let rows: BTreeSet<usize> = tracks
        .iter()
        .filter(|&&t| t < matrix.num_tracks())
        .flat_map(|&t| matrix.column_unchecked(t).indices.iter().copied())
        .collect();
    rows.into_iter().collect()
}

pub fn summarize(
    matrix: &InteractionMatrix,
    catalog: &Catalog,
    locality: &LocalityTable,
    city: &str,
) -> Result<CitySummary> {
    let local = locality.city(city)?;
    let local_artists = local
        .artists
        .iter()
        .filter_map(|a| catalog.artist_index(a))
        .filter(|&a| catalog.track_artists().contains(&a))
        .count();
    let cells = matrix.num_playlists() * local.tracks.len();
    let nnz: usize = local.tracks.iter().map(|&t| matrix.column_count(t)).sum();
    let (sparsity, empty_block) = if cells == 0 {
        (1.0, true)
    } else {
        (1.0 - nnz as f64 / cells as f64, false)
    };
    Ok(CitySummary {
        city: city.to_string(),
        local_playlists: local_playlists(matrix, &local.tracks).len(),
        local_artists,
        local_tracks: local.tracks.len(),
        sparsity,
        empty_block,
    })
}
