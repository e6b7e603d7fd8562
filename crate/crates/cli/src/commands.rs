use std::fs::File;
use std::io::BufWriter;

use log::info;
use longtail::eval::{run_all, EvalOptions};
use longtail::ingest::{load_dataset, summarize, Dataset};
use longtail::report::{render_table, write_cells_csv, write_failures_csv, write_summary_csv};
use longtail::synth::generate;
use longtail::Error;

use crate::config::{read_toml, synth_config, CliError, FileConfig, RunConfig};
use crate::{DataArgs, EvaluateArgs, LocalizeArgs, SynthArgs};

/// Requested cities, or every city in the cities file.
fn selected_cities(data: &Dataset, filter: &[String]) -> Result<Vec<String>, CliError> {
    if filter.is_empty() {
        return Ok(data.locality.city_names().map(str::to_string).collect());
    }
    let mut out = Vec::new();
    for name in filter {
        data.locality.city(name)?;
        if !out.contains(name) {
            out.push(name.clone());
        }
    }
    Ok(out)
}

fn load(args: &DataArgs) -> Result<Dataset, CliError> {
    let data = load_dataset(&args.playlists, &args.events, &args.cities)?;
    info!(
        "loaded {} playlists, {} tracks, {} artists",
        data.catalog.num_playlists(),
        data.catalog.num_tracks(),
        data.catalog.num_artists()
    );
    Ok(data)
}

pub fn localize(args: LocalizeArgs) -> Result<(), CliError> {
    let data = load(&args.data)?;
    let cities = selected_cities(&data, &args.data.city)?;
    let summaries = cities
        .iter()
        .map(|c| summarize(&data.matrix, &data.catalog, &data.locality, c))
        .collect::<Result<Vec<_>, Error>>()?;
    std::fs::create_dir_all(&args.data.out)?;
    write_summary_csv(
        &summaries,
        BufWriter::new(File::create(args.data.out.join("locality.csv"))?),
    )?;
    println!(
        "{:<16}{:>16}{:>14}{:>13}{:>12}",
        "city", "local playlists", "local artists", "local tracks", "sparsity"
    );
    for s in &summaries {
        let sparsity = if s.empty_block {
            "n/a".to_string()
        } else {
            format!("{:.4}%", 100.0 * s.sparsity)
        };
        println!(
            "{:<16}{:>16}{:>14}{:>13}{:>12}",
            s.city, s.local_playlists, s.local_artists, s.local_tracks, sparsity
        );
    }
    Ok(())
}

pub fn evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    let file = match &args.config {
        Some(path) => read_toml(path)?,
        None => FileConfig::default(),
    };
    let run = RunConfig::resolve(file, &args.models, args.folds, args.seed)?;
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let data = load(&args.data)?;
    let cities = selected_cities(&data, &args.data.city)?;
    let options = EvalOptions {
        folds: run.folds,
        seed: run.seed,
        include_nonlocal_in_train: args.include_nonlocal_in_train,
        model_cache: args.model_cache.clone(),
    };
    let report = run_all(
        &data.matrix,
        &data.catalog,
        &data.locality,
        &cities,
        &run.models,
        &run.configs,
        &options,
    )?;

    let out = &args.data.out;
    std::fs::create_dir_all(out)?;
    write_cells_csv(
        &report,
        BufWriter::new(File::create(out.join("report.csv"))?),
    )?;
    write_failures_csv(
        &report,
        BufWriter::new(File::create(out.join("failures.csv"))?),
    )?;
    let table = render_table(&report, &run.models);
    std::fs::write(out.join("report.txt"), &table)?;
    let diagnostics: Vec<_> = report
        .cities
        .iter()
        .map(|c| (c.city.as_str(), c.local_playlists, &c.diagnostics))
        .collect();
    std::fs::write(
        out.join("diagnostics.json"),
        serde_json::to_string_pretty(&diagnostics).map_err(Error::from)? + "\n",
    )?;
    print!("{table}");
    Ok(())
}

pub fn synth(args: SynthArgs) -> Result<(), CliError> {
    let config = synth_config(args.config.as_deref(), |c| {
        if let Some(v) = args.playlists {
            c.playlists = v;
        }
        if let Some(v) = args.tracks {
            c.nonlocal_tracks = v;
        }
        if let Some(v) = args.cities {
            c.cities = v;
        }
        if let Some(v) = args.local_artists {
            c.local_artists_per_city = v;
        }
        if let Some(v) = args.target_sparsity {
            c.target_local_sparsity = v;
        }
        if let Some(v) = args.seed {
            c.seed = v;
        }
    })?;
    let dataset = generate(&config)?;
    dataset.write_to(&args.out)?;
    println!(
        "wrote {} playlists, {} tracks, {} events to {}",
        dataset.playlists.len(),
        dataset.summary.total_tracks,
        dataset.events.len(),
        args.out.display()
    );
    Ok(())
}
