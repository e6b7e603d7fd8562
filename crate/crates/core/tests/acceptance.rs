//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any fails.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use longtail::eval::{
    build_fold_matrices, candidates, make_folds, run_all, EvalOptions, EvalReport,
};
use longtail::geo::{
    classify_local, great_circle_miles, CityCenter, EventRecord, LatLon, LocalityRule,
};
use longtail::ingest::{
    assemble, load_dataset, local_playlists, summarize, Dataset, PlaylistRecord, TrackRecord,
};
use longtail::metrics::{Level, Metric};
use longtail::recommenders::bpr::{triple_gradient, triple_objective};
use longtail::recommenders::{iin_score, AlsConfig, AlsTrainer, ModelConfigs, ModelKind};
use longtail::report::write_cells_csv;
use longtail::seed::{derive, hash_str};
use longtail::synth::{generate, SynthConfig};
use longtail::SparseVector;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use common::{
    als_cost, dot, max_solve_error, random_binary, random_model, rng, to_dense, transpose,
    weighted_ridge,
};

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Duration, Box<dyn Fn() -> Outcome + 'a>);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn metric_oracle() -> Outcome {
    let (worst, cases) = common::metric_oracle_sweep();
    check(
        worst <= 1e-12,
        format!("{cases} rankings, max deviation {worst:.1e}"),
    )
}

fn iin_brute_force() -> Outcome {
    let mut r = rng(101);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let m = r.random_range(2..=12);
        let n = r.random_range(2..=15);
        let (matrix, dense) = random_binary(m, n, r.random_range(0.15..0.6), &mut r);
        let query: Vec<usize> = (0..n).filter(|_| r.random_bool(0.3)).collect();
        let cands: Vec<usize> = (0..n).filter(|t| !query.contains(t)).collect();
        let ranking = iin_score(
            &matrix,
            &SparseVector::indicator(query.iter().copied()),
            &cands,
        );
        for &(t, s) in ranking.entries() {
            // O(m n²) dense reference: one cosine per (candidate, query) pair
            let expected: f64 = query
                .iter()
                .map(|&q| {
                    let (mut xy, mut xx, mut yy) = (0.0, 0.0, 0.0);
                    for row in &dense {
                        xy += row[t] * row[q];
                        xx += row[t] * row[t];
                        yy += row[q] * row[q];
                    }
                    if xx == 0.0 || yy == 0.0 {
                        0.0
                    } else {
                        xy / (xx.sqrt() * yy.sqrt())
                    }
                })
                .sum();
            worst = worst.max((s - expected).abs());
        }
    }
    check(
        worst <= 1e-12,
        format!("50 matrices, max deviation {worst:.1e}"),
    )
}

fn als_correctness() -> Outcome {
    let mut r = rng(102);
    // (a) every solve against the dense oracle
    let mut solve_err: f64 = 0.0;
    for _ in 0..5 {
        let (matrix, dense) = random_binary(8, 10, 0.35, &mut r);
        let alpha = r.random_range(0.0..40.0);
        let cfg = AlsConfig {
            factors: 4,
            alpha,
            lambda: 0.1,
            sweeps: 15,
            seed: 0,
        };
        let mut trainer = AlsTrainer::new(&matrix, &cfg)
            .unwrap()
            .with_model(random_model(8, 10, 4, &mut r));
        for _ in 0..cfg.sweeps {
            let tracks = trainer.model().track_factors.clone();
            trainer.solve_playlists().map_err(|e| e.to_string())?;
            solve_err = solve_err.max(max_solve_error(
                &trainer.model().playlist_factors,
                &tracks,
                &dense,
                alpha,
                0.1,
            ));
            let playlists = trainer.model().playlist_factors.clone();
            trainer.solve_tracks().map_err(|e| e.to_string())?;
            solve_err = solve_err.max(max_solve_error(
                &trainer.model().track_factors,
                &playlists,
                &transpose(&dense),
                alpha,
                0.1,
            ));
        }
    }
    // (b) cost is non-increasing after every half-sweep
    let mut worst_rise = f64::NEG_INFINITY;
    for _ in 0..10 {
        let (matrix, dense) = random_binary(8, 10, 0.35, &mut r);
        let cfg = AlsConfig {
            factors: 3,
            alpha: 10.0,
            lambda: 0.05,
            sweeps: 15,
            seed: r.random(),
        };
        let mut trainer = AlsTrainer::new(&matrix, &cfg).unwrap();
        let mut last = als_cost(trainer.model(), &dense, cfg.alpha, cfg.lambda);
        for _ in 0..cfg.sweeps {
            for half in 0..2 {
                if half == 0 {
                    trainer.solve_playlists().map_err(|e| e.to_string())?;
                } else {
                    trainer.solve_tracks().map_err(|e| e.to_string())?;
                }
                let c = als_cost(trainer.model(), &dense, cfg.alpha, cfg.lambda);
                worst_rise = worst_rise.max(c - last);
                last = c;
            }
        }
    }
    // (c) alpha = 0 is ordinary ridge regression
    let mut ridge_err: f64 = 0.0;
    for _ in 0..5 {
        let (matrix, dense) = random_binary(8, 10, 0.35, &mut r);
        let cfg = AlsConfig {
            factors: 4,
            alpha: 0.0,
            lambda: 0.3,
            sweeps: 1,
            seed: 0,
        };
        let mut trainer = AlsTrainer::new(&matrix, &cfg)
            .unwrap()
            .with_model(random_model(8, 10, 4, &mut r));
        let tracks = trainer.model().track_factors.clone();
        trainer.solve_playlists().map_err(|e| e.to_string())?;
        let ys: Vec<&[f64]> = (0..10).map(|t| tracks.row(t)).collect();
        for (p, row) in dense.iter().enumerate() {
            let expected = weighted_ridge(&ys, &[1.0; 10], row, 0.3);
            for (a, b) in trainer
                .model()
                .playlist_factors
                .row(p)
                .iter()
                .zip(&expected)
            {
                ridge_err = ridge_err.max((a - b).abs());
            }
        }
    }
    check(
        solve_err <= 1e-8 && worst_rise <= 1e-9 && ridge_err <= 1e-8,
        format!("(a) solve error {solve_err:.1e}, (b) largest cost rise {worst_rise:.1e}, (c) ridge error {ridge_err:.1e}"),
    )
}

fn bpr_gradient() -> Outcome {
    let mut r = rng(103);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let f = r.random_range(1..=10);
        let lambda = r.random_range(0.0..0.5);
        let mut params: Vec<f64> = (0..3 * f).map(|_| normal.sample(&mut r)).collect();
        let (dp, da, db) =
            triple_gradient(&params[..f], &params[f..2 * f], &params[2 * f..], lambda);
        let analytic: Vec<f64> = dp.into_iter().chain(da).chain(db).collect();
        let mut numeric = Vec::with_capacity(3 * f);
        for i in 0..3 * f {
            let orig = params[i];
            params[i] = orig + h;
            let up = triple_objective(&params[..f], &params[f..2 * f], &params[2 * f..], lambda);
            params[i] = orig - h;
            let down = triple_objective(&params[..f], &params[f..2 * f], &params[2 * f..], lambda);
            params[i] = orig;
            numeric.push((up - down) / (2.0 * h));
        }
        let diff: f64 = analytic
            .iter()
            .zip(&numeric)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let scale = dot(&analytic, &analytic)
            .sqrt()
            .max(dot(&numeric, &numeric).sqrt());
        worst = worst.max(diff / scale);
    }
    check(
        worst < 1e-4,
        format!("100 points, max relative error {worst:.1e}"),
    )
}

/// Writes a seeded synthetic dataset to disk and loads it back.
fn synth_fixture(dir: &std::path::Path) -> Result<(SynthConfig, Dataset), String> {
    let config = SynthConfig {
        seed: 20,
        ..SynthConfig::default()
    };
    let synth = generate(&config).map_err(|e| e.to_string())?;
    synth.write_to(dir).map_err(|e| e.to_string())?;
    let data = load_dataset(
        &dir.join("playlists.jsonl"),
        &dir.join("events.csv"),
        &dir.join("cities.csv"),
    )
    .map_err(|e| e.to_string())?;
    Ok((config, data))
}

fn cities(data: &Dataset) -> Vec<String> {
    data.locality.city_names().map(str::to_string).collect()
}

const TREND_MODELS: [ModelKind; 3] = [ModelKind::Iin, ModelKind::Random, ModelKind::Popularity];

fn run(data: &Dataset, options: &EvalOptions) -> Result<EvalReport, String> {
    run_all(
        &data.matrix,
        &data.catalog,
        &data.locality,
        &cities(data),
        &TREND_MODELS,
        &ModelConfigs::default(),
        options,
    )
    .map_err(|e| e.to_string())
}

fn planted_trend(data: &Dataset) -> Outcome {
    let shape_ok = data.matrix.num_playlists() >= 400
        && data.matrix.num_tracks() >= 600
        && cities(data).len() == 2;
    let mut details = vec![format!(
        "{} playlists, {} tracks",
        data.matrix.num_playlists(),
        data.matrix.num_tracks()
    )];
    let mut ok = shape_ok;
    let options = EvalOptions::default();
    let report = run(data, &options)?;
    for city in cities(data) {
        let summary = summarize(&data.matrix, &data.catalog, &data.locality, &city)
            .map_err(|e| e.to_string())?;
        let prec = |kind| {
            report
                .cell(&city, kind, Level::Track, Metric::PrecisionAt1)
                .map(|c| c.mean)
                .unwrap_or(f64::NAN)
        };
        let (iin, random, pop) = (
            prec(ModelKind::Iin),
            prec(ModelKind::Random),
            prec(ModelKind::Popularity),
        );

        // pooled random hits against the per-playlist chance |truth| / |candidates|
        let local = &data.locality.city(&city).unwrap().tracks;
        let plan = make_folds(
            &city,
            &local_playlists(&data.matrix, local),
            options.folds,
            derive(options.seed, &[hash_str(&city)]),
        )
        .map_err(|e| e.to_string())?;
        let cell = report
            .cell(&city, ModelKind::Random, Level::Track, Metric::PrecisionAt1)
            .ok_or("random cell missing")?;
        let (mut hits, mut expected, mut variance) = (0.0, 0.0, 0.0);
        for f in 0..options.folds {
            let fold = build_fold_matrices(&data.matrix, local, &plan, f, false)
                .map_err(|e| e.to_string())?;
            let cands: BTreeSet<usize> = candidates(&fold.train, local).into_iter().collect();
            let mut evaluated = 0.0;
            for split in &fold.eval {
                let kept = split.local_truth.intersection(&cands).count();
                if kept > 0 {
                    let p = kept as f64 / cands.len() as f64;
                    expected += p;
                    variance += p * (1.0 - p);
                    evaluated += 1.0;
                }
            }
            hits += cell.folds[f] * evaluated;
        }
        let z = (hits - expected) / variance.sqrt();
        let city_ok = summary.sparsity >= 0.995 && iin > random && iin > pop && z.abs() < 5.0;
        ok &= city_ok;
        details.push(format!(
            "{city}: sparsity {:.2}%, prec@1 iin {iin:.3} random {random:.3} popular {pop:.3}, random z {z:+.2}",
            100.0 * summary.sparsity
        ));
    }
    check(ok, details.join("; "))
}

fn protocol_integrity(data: &Dataset) -> Outcome {
    let options = EvalOptions::default();
    let mut problems = Vec::new();
    let mut folds_checked = 0;
    for city in cities(data) {
        let local = &data.locality.city(&city).unwrap().tracks;
        let playlists = local_playlists(&data.matrix, local);
        let plan = make_folds(&city, &playlists, options.folds, 7).map_err(|e| e.to_string())?;
        let sizes: Vec<usize> = plan.folds.iter().map(Vec::len).collect();
        if sizes.iter().max().unwrap() - sizes.iter().min().unwrap() > 1 {
            problems.push(format!("{city}: fold sizes {sizes:?}"));
        }
        let covered: BTreeSet<usize> = plan.folds.iter().flatten().copied().collect();
        if covered.len() != playlists.len() || sizes.iter().sum::<usize>() != playlists.len() {
            problems.push(format!(
                "{city}: folds do not partition the local playlists"
            ));
        }
        for f in 0..options.folds {
            let fold = build_fold_matrices(&data.matrix, local, &plan, f, false)
                .map_err(|e| e.to_string())?;
            let held: BTreeSet<usize> = plan.folds[f].iter().copied().collect();
            for (i, &p) in fold.train_playlists.iter().enumerate() {
                if held.contains(&p) || fold.train.row(i).unwrap() != data.matrix.row(p).unwrap() {
                    problems.push(format!(
                        "{city} fold {f}: training row {i} leaks or differs"
                    ));
                }
            }
            if fold.train.num_playlists() + held.len() != data.matrix.num_playlists() {
                problems.push(format!("{city} fold {f}: wrong training row count"));
            }
            for t in candidates(&fold.train, local) {
                if !local.contains(&t) {
                    problems.push(format!("{city} fold {f}: non-local candidate {t}"));
                }
            }
            folds_checked += 1;
        }
    }

    let csv = |threads: usize| -> Result<Vec<u8>, String> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| e.to_string())?;
        let report = pool.install(|| {
            run(
                data,
                &EvalOptions {
                    seed: 11,
                    ..EvalOptions::default()
                },
            )
        })?;
        let mut out = Vec::new();
        write_cells_csv(&report, &mut out).map_err(|e| e.to_string())?;
        Ok(out)
    };
    let first = csv(1)?;
    if first != csv(1)? || first != csv(3)? {
        problems.push("reruns differ".into());
    }
    check(
        problems.is_empty(),
        if problems.is_empty() {
            format!(
                "{folds_checked} folds clean, reruns byte-identical ({} bytes)",
                first.len()
            )
        } else {
            problems.join("; ")
        },
    )
}

fn geo_rule() -> Outcome {
    let mut r = rng(104);
    let city = CityCenter::new("home", 39.9526, -75.1652, 10.0).unwrap();
    let near = |r: &mut rand_chacha::ChaCha8Rng| LatLon {
        lat: 39.9526 + r.random_range(-0.05..0.05),
        lon: -75.1652 + r.random_range(-0.05..0.05),
    };
    let far = |r: &mut rand_chacha::ChaCha8Rng| LatLon {
        lat: r.random_range(30.0..45.0),
        lon: r.random_range(-90.0..-80.0),
    };
    let mut events = Vec::new();
    let push = |events: &mut Vec<EventRecord>, artist: usize, k: usize, venue: LatLon| {
        events.push(EventRecord {
            event_id: format!("e{artist}-{k}"),
            artist_id: format!("a{artist:03}"),
            venue,
        });
    };
    // (inside, outside) boundary plants for the first artists
    let plants = [
        (4, 1),
        (8, 2),
        (3, 1),
        (2, 0),
        (1, 1),
        (1, 0),
        (0, 2),
        (12, 3),
        (7, 2),
        (0, 0),
    ];
    for (a, &(inside, outside)) in plants.iter().enumerate() {
        for k in 0..inside {
            push(&mut events, a, k, near(&mut r));
        }
        for k in 0..outside {
            push(&mut events, a, inside + k, far(&mut r));
        }
    }
    for a in plants.len()..200 {
        let total = r.random_range(0..8);
        let bias = r.random_range(0.0..1.0);
        for k in 0..total {
            let venue = if r.random_bool(bias) {
                near(&mut r)
            } else {
                far(&mut r)
            };
            push(&mut events, a, k, venue);
            if r.random_bool(0.1) {
                push(&mut events, a, k, venue);
            }
        }
    }
    events.shuffle(&mut r);
    let got = classify_local(&events, &city, LocalityRule::default());

    // exhaustive: every artist id, count distinct events, integer threshold
    let mut expected = BTreeSet::new();
    for a in 0..200 {
        let id = format!("a{a:03}");
        let mut seen = BTreeSet::new();
        let (mut total, mut inside) = (0, 0);
        for e in events.iter().filter(|e| e.artist_id == id) {
            if seen.insert(e.event_id.clone()) {
                total += 1;
                if great_circle_miles(city.center, e.venue).unwrap() <= city.radius_miles {
                    inside += 1;
                }
            }
        }
        if total >= 2 && 5 * inside >= 4 * total {
            expected.insert(id);
        }
    }
    let boundary_ok = ["a000", "a001", "a003", "a007"]
        .iter()
        .all(|a| got.contains(*a))
        && ["a002", "a004", "a005", "a006", "a008", "a009"]
            .iter()
            .all(|a| !got.contains(*a));
    check(
        got == expected && boundary_ok,
        format!(
            "200 artists, {} local, boundary plants {}",
            got.len(),
            if boundary_ok { "ok" } else { "wrong" }
        ),
    )
}

fn sparsity_statistic() -> Outcome {
    // 10 playlists; the local artist owns 2 tracks, each played once
    let track = |t: &str, a: &str| TrackRecord {
        track_id: t.into(),
        artist_id: a.into(),
    };
    let mut records: Vec<PlaylistRecord> = (0..10)
        .map(|p| PlaylistRecord {
            playlist_id: format!("p{p}"),
            tracks: vec![track(&format!("n{p}"), "other")],
        })
        .collect();
    records[2].tracks.push(track("l1", "local"));
    records[7].tracks.push(track("l2", "local"));
    let (matrix, catalog) = assemble(&records).map_err(|e| e.to_string())?;
    let city = CityCenter::new("home", 39.9526, -75.1652, 10.0).unwrap();
    let events: Vec<EventRecord> = (0..2)
        .map(|k| EventRecord {
            event_id: format!("e{k}"),
            artist_id: "local".into(),
            venue: city.center,
        })
        .collect();
    let locality =
        longtail::geo::build_locality_table(&events, &[city], &catalog, LocalityRule::default());
    let s = summarize(&matrix, &catalog, &locality, "home").map_err(|e| e.to_string())?;
    let expected = 1.0 - 2.0 / 20.0;
    check(
        s.sparsity == expected
            && s.local_tracks == 2
            && s.local_playlists == 2
            && to_dense(&matrix).len() == 10,
        format!("sparsity {} (expected {expected})", s.sparsity),
    )
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let fixture = synth_fixture(dir.path());

    let fx = &fixture;
    let with_fixture = |f: fn(&Dataset) -> Outcome| -> Box<dyn Fn() -> Outcome + '_> {
        Box::new(move || match fx {
            Ok((_, data)) => f(data),
            Err(e) => Err(format!("fixture: {e}")),
        })
    };
    let criteria: Vec<Criterion<'_>> = vec![
        (
            "metric oracle equivalence",
            Duration::from_secs(10),
            Box::new(metric_oracle),
        ),
        (
            "IIN brute-force equivalence",
            Duration::from_secs(10),
            Box::new(iin_brute_force),
        ),
        (
            "ALS correctness",
            Duration::from_secs(30),
            Box::new(als_correctness),
        ),
        (
            "BPR gradient check",
            Duration::from_secs(10),
            Box::new(bpr_gradient),
        ),
        (
            "planted-structure trend",
            Duration::from_secs(300),
            with_fixture(planted_trend),
        ),
        (
            "protocol integrity",
            Duration::from_secs(600),
            with_fixture(protocol_integrity),
        ),
        ("geo rule", Duration::from_secs(10), Box::new(geo_rule)),
        (
            "sparsity statistic",
            Duration::from_secs(10),
            Box::new(sparsity_statistic),
        ),
    ];

    let mut failed = 0;
    for (name, budget, run) in &criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (status, detail) = match outcome {
            Ok(d) if elapsed <= *budget => ("PASS", d),
            Ok(d) => ("FAIL", format!("{d}; over time budget {budget:?}")),
            Err(d) => ("FAIL", d),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!(
            "{status}  {name:<30} {detail} [{:.2}s]",
            elapsed.as_secs_f64()
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
