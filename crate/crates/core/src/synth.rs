//! Synthetic datasets with planted structure.
//!
//! Non-local tracks follow a power-law popularity and belong to one of a few
//! genres; every playlist has a genre and draws most of its tracks from it.
//! Each city owns a set of local artists spread over the genres. A local
//! playlist of genre `g` adds tracks from the city's local artists of genre
//! `g`, so co-occurrence links local tracks to the non-local tracks of their
//! genre. Local artists play nearly all events near their city center.

use std::collections::BTreeSet;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{CityCenter, EventRecord, LatLon};
use crate::ingest::{write_cities, write_events, write_playlists, PlaylistRecord, TrackRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub playlists: usize,
    pub nonlocal_tracks: usize,
    pub tracks_per_artist: usize,
    pub genres: usize,
    pub cities: usize,
    pub local_artists_per_city: usize,
    pub min_playlist_length: usize,
    pub max_playlist_length: usize,
    /// Zipf exponent of non-local track popularity.
    pub popularity_exponent: f64,
    /// Zipf exponent of local track popularity within a genre cluster.
    pub local_popularity_exponent: f64,
    /// Probability that a non-local pick comes from the playlist's genre.
    pub genre_affinity: f64,
    pub local_tracks_per_playlist: usize,
    /// Requested sparsity of the (all playlists) x (local tracks) block of
    /// each city; sets the number of local playlists.
    pub target_local_sparsity: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            playlists: 1200,
            nonlocal_tracks: 800,
            tracks_per_artist: 5,
            genres: 6,
            cities: 2,
            local_artists_per_city: 12,
            min_playlist_length: 10,
            max_playlist_length: 30,
            popularity_exponent: 0.9,
            local_popularity_exponent: 0.7,
            genre_affinity: 0.85,
            local_tracks_per_playlist: 1,
            target_local_sparsity: 0.996,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn local_tracks_per_city(&self) -> usize {
        self.local_artists_per_city * self.tracks_per_artist
    }

    /// Local playlists per city needed to hit the sparsity target.
    pub fn local_playlists_per_city(&self) -> usize {
        let entries = (1.0 - self.target_local_sparsity)
            * self.playlists as f64
            * self.local_tracks_per_city() as f64;
        (entries / self.local_tracks_per_playlist as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("playlists", self.playlists),
            ("nonlocal_tracks", self.nonlocal_tracks),
            ("tracks_per_artist", self.tracks_per_artist),
            ("genres", self.genres),
            ("cities", self.cities),
            ("local_artists_per_city", self.local_artists_per_city),
            ("min_playlist_length", self.min_playlist_length),
            ("local_tracks_per_playlist", self.local_tracks_per_playlist),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidConfig(format!(
                    "synth: {name} must be positive"
                )));
            }
        }
        if self.cities > CITY_SITES.len() {
            return Err(Error::InvalidConfig(format!(
                "synth: at most {} cities supported",
                CITY_SITES.len()
            )));
        }
        if self.max_playlist_length < self.min_playlist_length
            || self.max_playlist_length > self.nonlocal_tracks
        {
            return Err(Error::InvalidConfig(
                "synth: bad playlist length range".into(),
            ));
        }
        if self.nonlocal_tracks < self.genres {
            return Err(Error::InvalidConfig(
                "synth: fewer non-local tracks than genres".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.target_local_sparsity) {
            return Err(Error::InvalidConfig(
                "synth: target sparsity must be in [0, 1)".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.genre_affinity) {
            return Err(Error::InvalidConfig(
                "synth: genre affinity must be in [0, 1]".into(),
            ));
        }
        if self.popularity_exponent < 0.0 || self.local_popularity_exponent < 0.0 {
            return Err(Error::InvalidConfig(
                "synth: negative popularity exponent".into(),
            ));
        }
        if self.local_tracks_per_playlist > self.tracks_per_artist {
            return Err(Error::InvalidConfig(
                "synth: local_tracks_per_playlist exceeds one genre cluster".into(),
            ));
        }
        let needed = self.local_playlists_per_city() * self.cities;
        if needed == 0 || needed > self.playlists {
            return Err(Error::InvalidConfig(format!(
                "synth: sparsity target needs {needed} local playlists out of {}",
                self.playlists
            )));
        }
        Ok(())
    }
}

/// Fictional city centers used by the generator.
const CITY_SITES: [(&str, f64, f64); 4] = [
    ("alder", 39.9526, -75.1652),
    ("birch", 33.7490, -84.3880),
    ("cedar", 41.8781, -87.6298),
    ("dogwood", 36.1627, -86.7816),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthSummary {
    pub config: SynthConfig,
    pub local_playlists_per_city: usize,
    pub local_tracks_per_city: usize,
    pub total_tracks: usize,
}

#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub playlists: Vec<PlaylistRecord>,
    pub events: Vec<EventRecord>,
    pub cities: Vec<CityCenter>,
    pub summary: SynthSummary,
}

impl SynthDataset {
    /// Writes `playlists.jsonl`, `events.csv`, `cities.csv` and the
    /// `synth_params.json` sidecar into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_playlists(&dir.join("playlists.jsonl"), &self.playlists)?;
        write_events(&dir.join("events.csv"), &self.events)?;
        write_cities(&dir.join("cities.csv"), &self.cities)?;
        let sidecar = serde_json::to_string_pretty(&self.summary)?;
        std::fs::write(dir.join("synth_params.json"), sidecar + "\n")?;
        Ok(())
    }
}

fn zipf_weights(n: usize, exponent: f64) -> Vec<f64> {
    (0..n)
        .map(|r| 1.0 / ((r + 1) as f64).powf(exponent))
        .collect()
}

/// Point roughly `miles` away from `center` in a random direction.
fn offset<R: Rng>(center: LatLon, miles: f64, rng: &mut R) -> LatLon {
    let angle = rng.random_range(0.0..std::f64::consts::TAU);
    let dlat = miles * angle.sin() / 69.0;
    let dlon = miles * angle.cos() / (69.0 * center.lat.to_radians().cos());
    LatLon {
        lat: (center.lat + dlat).clamp(-90.0, 90.0),
        lon: (center.lon + dlon).clamp(-180.0, 180.0),
    }
}

struct Track {
    id: String,
    artist: String,
}

pub fn generate(config: &SynthConfig) -> Result<SynthDataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let g = config.genres;

    let cities: Vec<CityCenter> = CITY_SITES[..config.cities]
        .iter()
        .map(|&(name, lat, lon)| CityCenter::new(name, lat, lon, 10.0))
        .collect::<Result<_>>()?;

    // non-local tracks: rank r has zipf weight, genre r % g
    let nonlocal: Vec<Track> = (0..config.nonlocal_tracks)
        .map(|r| Track {
            id: format!("tn{r:06}"),
            artist: format!("an{:05}", r / config.tracks_per_artist),
        })
        .collect();
    let weights = zipf_weights(config.nonlocal_tracks, config.popularity_exponent);
    let global = WeightedIndex::new(&weights).expect("positive weights");
    let by_genre: Vec<(Vec<usize>, WeightedIndex<f64>)> = (0..g)
        .map(|k| {
            let members: Vec<usize> = (k..config.nonlocal_tracks).step_by(g).collect();
            let w: Vec<f64> = members.iter().map(|&r| weights[r]).collect();
            (members, WeightedIndex::new(&w).expect("non-empty genre"))
        })
        .collect();

    // local clusters: clusters[city][genre] = track positions in `local`
    let mut local: Vec<Track> = Vec::new();
    let mut clusters: Vec<Vec<Vec<usize>>> = vec![vec![Vec::new(); g]; config.cities];
    for (c, city) in cities.iter().enumerate() {
        for a in 0..config.local_artists_per_city {
            let artist = format!("al-{}-{a:03}", city.name);
            for k in 0..config.tracks_per_artist {
                clusters[c][a % g].push(local.len());
                local.push(Track {
                    id: format!("tl-{}-{a:03}-{k:02}", city.name),
                    artist: artist.clone(),
                });
            }
        }
    }
    let local_weights: Vec<Vec<Option<WeightedIndex<f64>>>> = clusters
        .iter()
        .map(|per_genre| {
            per_genre
                .iter()
                .map(|members| {
                    (!members.is_empty()).then(|| {
                        WeightedIndex::new(zipf_weights(
                            members.len(),
                            config.local_popularity_exponent,
                        ))
                        .expect("positive weights")
                    })
                })
                .collect()
        })
        .collect();

    // which playlists are local to which city
    let per_city = config.local_playlists_per_city();
    let mut order: Vec<usize> = (0..config.playlists).collect();
    order.shuffle(&mut rng);
    // (city, slot): the first slots of each city each carry a distinct local
    // track so that every local track is played at least once
    let mut home: Vec<Option<(usize, usize)>> = vec![None; config.playlists];
    for (i, &p) in order.iter().take(per_city * config.cities).enumerate() {
        home[p] = Some((i / per_city, i % per_city));
    }
    let coverage: Vec<Vec<usize>> = clusters
        .iter()
        .map(|per_genre| {
            let mut all: Vec<usize> = per_genre.iter().flatten().copied().collect();
            all.shuffle(&mut rng);
            all
        })
        .collect();

    let mut playlists = Vec::with_capacity(config.playlists);
    for (p, city) in home.iter().enumerate() {
        let mut genre = rng.random_range(0..g);
        let mut forced = None;
        if let Some((c, slot)) = *city {
            if let Some(&i) = coverage[c].get(slot) {
                forced = Some(i);
                genre = (0..g)
                    .find(|&k| clusters[c][k].contains(&i))
                    .expect("track in a cluster");
            }
            // local playlists only take genres that have local artists in the city
            while clusters[c][genre].is_empty() {
                genre = rng.random_range(0..g);
            }
        }
        let length = rng.random_range(config.min_playlist_length..=config.max_playlist_length);
        let mut picked = BTreeSet::new();
        let mut attempts = 0;
        while picked.len() < length && attempts < 50 * length {
            attempts += 1;
            let r = if rng.random_bool(config.genre_affinity) {
                let (members, dist) = &by_genre[genre];
                members[dist.sample(&mut rng)]
            } else {
                global.sample(&mut rng)
            };
            picked.insert(r);
        }
        let mut tracks: Vec<TrackRecord> = picked
            .into_iter()
            .map(|r| TrackRecord {
                track_id: nonlocal[r].id.clone(),
                artist_id: nonlocal[r].artist.clone(),
            })
            .collect();
        if let Some((c, _)) = *city {
            let members = &clusters[c][genre];
            let dist = local_weights[c][genre].as_ref().expect("non-empty cluster");
            let want = config.local_tracks_per_playlist.min(members.len());
            let mut chosen: BTreeSet<usize> = forced.into_iter().collect();
            while chosen.len() < want {
                chosen.insert(members[dist.sample(&mut rng)]);
            }
            tracks.extend(chosen.into_iter().map(|i| TrackRecord {
                track_id: local[i].id.clone(),
                artist_id: local[i].artist.clone(),
            }));
        }
        playlists.push(PlaylistRecord {
            playlist_id: format!("p{p:06}"),
            tracks,
        });
    }

    // events
    let mut events = Vec::new();
    let mut next_event = 0usize;
    let mut push = |artist: &str, venue: LatLon, events: &mut Vec<EventRecord>| {
        events.push(EventRecord {
            event_id: format!("e{next_event:07}"),
            artist_id: artist.to_string(),
            venue,
        });
        next_event += 1;
    };
    for (c, city) in cities.iter().enumerate() {
        for a in 0..config.local_artists_per_city {
            let artist = format!("al-{}-{a:03}", city.name);
            // 2..=5 shows at home; artists with 4 or 5 also play one away show
            let home_shows = rng.random_range(2..=5);
            for _ in 0..home_shows {
                let miles = rng.random_range(0.0..6.0);
                push(&artist, offset(city.center, miles, &mut rng), &mut events);
            }
            if home_shows >= 4 {
                let away = &cities[(c + 1) % cities.len()];
                let away_point = if cities.len() > 1 {
                    offset(away.center, 2.0, &mut rng)
                } else {
                    offset(city.center, 300.0, &mut rng)
                };
                push(&artist, away_point, &mut events);
            }
        }
    }
    let nonlocal_artists = config.nonlocal_tracks.div_ceil(config.tracks_per_artist);
    for a in (0..nonlocal_artists).step_by(3) {
        let artist = format!("an{a:05}");
        // touring artists: at most half their shows near any one city
        for city in &cities {
            push(
                &artist,
                offset(city.center, rng.random_range(0.0..5.0), &mut rng),
                &mut events,
            );
        }
        for _ in 0..cities.len() {
            push(
                &artist,
                offset(cities[0].center, 400.0, &mut rng),
                &mut events,
            );
        }
    }
    // an artist with a single show, which is not enough to be local
    push("an-single", cities[0].center, &mut events);

    let summary = SynthSummary {
        config: config.clone(),
        local_playlists_per_city: per_city,
        local_tracks_per_city: config.local_tracks_per_city(),
        total_tracks: config.nonlocal_tracks + local.len(),
    };
    Ok(SynthDataset {
        playlists,
        events,
        cities,
        summary,
    })
}
