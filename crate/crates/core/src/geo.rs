//! Locality classification of artists from live-event records.
//!
//! An artist is local to a city when it has at least `min_events` distinct
//! events and at least `threshold` of them lie within the city's radius.
//! Both bounds are inclusive.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interactions::Catalog;

/// Mean Earth radius in statute miles.
pub const EARTH_RADIUS_MILES: f64 = 3958.7613;

pub const DEFAULT_RADIUS_MILES: f64 = 10.0;
pub const DEFAULT_MIN_EVENTS: usize = 2;
pub const DEFAULT_LOCAL_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

impl LatLon {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        let p = LatLon { lat, lon };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if (-90.0..=90.0).contains(&self.lat) && (-180.0..=180.0).contains(&self.lon) {
            Ok(())
        } else {
            Err(Error::InvalidCoordinate {
                lat: self.lat,
                lon: self.lon,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub event_id: String,
    pub artist_id: String,
    pub venue: LatLon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CityCenter {
    pub name: String,
    pub center: LatLon,
    pub radius_miles: f64,
}

impl CityCenter {
    pub fn new(name: impl Into<String>, lat: f64, lon: f64, radius_miles: f64) -> Result<Self> {
        let center = LatLon::new(lat, lon)?;
        if !(radius_miles.is_finite() && radius_miles > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "city radius must be positive, got {radius_miles}"
            )));
        }
        Ok(CityCenter {
            name: name.into(),
            center,
            radius_miles,
        })
    }

    pub fn contains(&self, point: LatLon) -> bool {
        haversine(self.center, point) <= self.radius_miles
    }
}

/// Haversine distance in miles between two points on a spherical Earth.
pub fn great_circle_miles(a: LatLon, b: LatLon) -> Result<f64> {
    a.validate()?;
    b.validate()?;
    Ok(haversine(a, b))
}

fn haversine(a: LatLon, b: LatLon) -> f64 {
    let (lat1, lat2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlat = lat2 - lat1;
    let dlon = (b.lon - a.lon).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_MILES * h.sqrt().min(1.0).asin()
}

/// Thresholds of the locality rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalityRule {
    pub min_events: usize,
    pub threshold: f64,
}

impl Default for LocalityRule {
    fn default() -> Self {
        LocalityRule {
            min_events: DEFAULT_MIN_EVENTS,
            threshold: DEFAULT_LOCAL_FRACTION,
        }
    }
}

/// Distinct events per artist. Records sharing an (artist, event id) pair
/// are one event; if their coordinates disagree the smallest (lat, lon) is
/// kept so the result does not depend on record order.
fn distinct_events(events: &[EventRecord]) -> BTreeMap<&str, BTreeMap<&str, LatLon>> {
    let mut by_artist: BTreeMap<&str, BTreeMap<&str, LatLon>> = BTreeMap::new();
    for e in events {
        let slot = by_artist
            .entry(e.artist_id.as_str())
            .or_default()
            .entry(e.event_id.as_str())
            .or_insert(e.venue);
        if (e.venue.lat, e.venue.lon) < (slot.lat, slot.lon) {
            *slot = e.venue;
        }
    }
    by_artist
}

/// Artists local to `city` under `rule`.
pub fn classify_local(
    events: &[EventRecord],
    city: &CityCenter,
    rule: LocalityRule,
) -> BTreeSet<String> {
    distinct_events(events)
        .into_iter()
        .filter(|(_, evs)| {
            let total = evs.len();
            let inside = evs.values().filter(|&&v| city.contains(v)).count();
            total >= rule.min_events && inside as f64 / total as f64 >= rule.threshold
        })
        .map(|(artist, _)| artist.to_string())
        .collect()
}

/// Local artists and tracks of a single city.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CityLocality {
    pub artists: BTreeSet<String>,
    pub tracks: BTreeSet<usize>,
}

/// Per-city local artists (external ids) and local tracks (catalog indices).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LocalityTable {
    cities: BTreeMap<String, CityLocality>,
}

impl LocalityTable {
    pub fn city(&self, name: &str) -> Result<&CityLocality> {
        self.cities
            .get(name)
            .ok_or_else(|| Error::UnknownCity(name.to_string()))
    }

    pub fn city_names(&self) -> impl Iterator<Item = &str> {
        self.cities.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &CityLocality)> {
        self.cities.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn insert(&mut self, name: impl Into<String>, locality: CityLocality) {
        self.cities.insert(name.into(), locality);
    }
}

pub fn build_locality_table(
    events: &[EventRecord],
    cities: &[CityCenter],
    catalog: &Catalog,
    rule: LocalityRule,
) -> LocalityTable {
    let mut table = LocalityTable::default();
    for city in cities {
        let artists = classify_local(events, city, rule);
        let artist_idx: BTreeSet<usize> = artists
            .iter()
            .filter_map(|a| catalog.artist_index(a))
            .collect();
        let tracks = catalog
            .track_artists()
            .iter()
            .enumerate()
            .filter(|(_, a)| artist_idx.contains(a))
            .map(|(t, _)| t)
            .collect();
        table.insert(city.name.clone(), CityLocality { artists, tracks });
    }
    table
}
