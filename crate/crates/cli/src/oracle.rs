use std::path::Path;

use anyhow::{anyhow, Context};
use serde::Serialize;
use sonotrace::io;
use sonotrace::metrics::{deltas, FactorDeltas, MetricsReport};
use sonotrace::pipeline::analyse;
use sonotrace::rir::Filterbank;
use sonotrace::shoebox::{
    compare, enumerate, MatchReport, OracleImageSource, OracleSettings, ShoeBox,
};
use sonotrace::{Error, ImageSource, Material, MaterialTable, Vec3};

use crate::config::OracleConfig;
use crate::failure::{Classify, Failure};
use crate::output::Staging;
use crate::report::RunReport;
use crate::OracleArgs;

#[derive(Debug, Serialize)]
struct Comparison {
    traced: String,
    #[serde(flatten)]
    matches: MatchReport,
    /// Traced parameters relative to the oracle's, per band and "mid".
    metric_deltas: serde_json::Map<String, serde_json::Value>,
}

fn room(config: &OracleConfig) -> anyhow::Result<ShoeBox> {
    let table = MaterialTable::load(&config.materials)?;
    let names = config.walls.names();
    let walls: Vec<Material> = names
        .iter()
        .map(|n| {
            table.get(n).cloned().ok_or_else(|| {
                anyhow!(
                    "wall material `{n}` is not in {}",
                    config.materials.display()
                )
            })
        })
        .collect::<anyhow::Result<_>>()?;
    let walls: [Material; 6] = walls.try_into().expect("six walls");
    Ok(ShoeBox::new(config.dims, walls)?)
}

fn close(a: Vec3, b: Vec3, tol: f64) -> bool {
    a.distance(b) <= tol
}

/// Refuses traced runs made with a different room, source or receiver.
fn check_same_setup(
    config: &OracleConfig,
    traced_path: &Path,
    traced: &[ImageSource],
    oracle: &[OracleImageSource],
) -> Result<(), Error> {
    let tol = 1e-9 * (1.0 + config.dims.iter().fold(0.0f64, |m, d| m.max(*d)));
    let report_path = traced_path.with_file_name("run_report.json");
    if report_path.exists() {
        let report: RunReport = io::read_json(&report_path)?;
        let s = &report.scene;
        let mut problems = Vec::new();
        if !close(s.source, config.source, tol) {
            problems.push(format!(
                "source {:?} vs {:?}",
                s.source.to_array(),
                config.source.to_array()
            ));
        }
        if !close(s.receiver, config.receiver, tol) {
            problems.push(format!(
                "receiver {:?} vs {:?}",
                s.receiver.to_array(),
                config.receiver.to_array()
            ));
        }
        if (s.receiver_radius - config.receiver_radius).abs() > tol {
            problems.push(format!(
                "receiver radius {} vs {}",
                s.receiver_radius, config.receiver_radius
            ));
        }
        let dims = Vec3::new(config.dims[0], config.dims[1], config.dims[2]);
        if !close(s.bounds_min, Vec3::ZERO, tol) || !close(s.bounds_max, dims, tol) {
            problems.push(format!(
                "room bounds {:?}..{:?} vs [0, {:?}]",
                s.bounds_min.to_array(),
                s.bounds_max.to_array(),
                config.dims
            ));
        }
        if !problems.is_empty() {
            return Err(Error::ConfigMismatch(format!(
                "{}: {}",
                report_path.display(),
                problems.join("; ")
            )));
        }
        return Ok(());
    }
    log::warn!(
        "{} not found; checking the direct sound only",
        report_path.display()
    );
    let direct_ok = traced.iter().find(|s| s.order == 0).is_some_and(|s| {
        oracle
            .first()
            .is_some_and(|o| close(s.position, o.position, config.position_tolerance_m))
    });
    if direct_ok {
        Ok(())
    } else {
        Err(Error::ConfigMismatch(format!(
            "{}: direct sound does not come from the oracle source",
            traced_path.display()
        )))
    }
}

fn metric_deltas(
    oracle: &MetricsReport,
    traced: &MetricsReport,
) -> serde_json::Map<String, serde_json::Value> {
    let mut map = serde_json::Map::new();
    let mut put = |key: String, d: FactorDeltas| {
        map.insert(key, serde_json::to_value(d).expect("plain numbers"));
    };
    for (b, (o, t)) in oracle.bands.iter().zip(&traced.bands).enumerate() {
        put(MetricsReport::band_key(b), deltas(o, t));
    }
    put("mid".into(), deltas(&oracle.mid, &traced.mid));
    map
}

pub fn run(args: &OracleArgs) -> Result<(), Failure> {
    let mut config = OracleConfig::load(&args.config).config()?;
    if let Some(out) = &args.output {
        config.output_dir = out.clone();
    }
    config.validate().config()?;
    let room = room(&config).config()?;
    let reach = config.reach().config()?;
    let filterbank = Filterbank::new(config.sample_rate).config()?;
    let traced = match &args.traced {
        Some(p) => Some(
            io::read_json::<Vec<ImageSource>>(p)
                .with_context(|| format!("traced set {}", p.display()))
                .config()?,
        ),
        None => None,
    };

    let settings = OracleSettings {
        receiver_radius: config.receiver_radius,
        max_distance: reach,
        air: &config.air,
    };
    let oracle = enumerate(&room, config.source, config.receiver, &settings).config()?;
    if let (Some(path), Some(traced)) = (&args.traced, &traced) {
        check_same_setup(&config, path, traced, &oracle).config()?;
    }

    let as_traced: Vec<ImageSource> = oracle
        .iter()
        .map(|o| o.to_image_source(&room.walls))
        .collect();
    let analysis = analyse(&as_traced, config.speed_of_sound, &filterbank).runtime()?;

    let staging = Staging::new(&config.output_dir).runtime()?;
    (|| -> sonotrace::Result<()> {
        io::write_json_array(staging.path("oracle_image_sources.json"), &oracle)?;
        io::write_oracle_csv(staging.path("oracle_image_sources.csv"), &oracle)?;
        io::write_json(staging.path("oracle_metrics.json"), &analysis.metrics)?;
        Ok(())
    })()
    .runtime()?;

    if let (Some(path), Some(traced)) = (&args.traced, &traced) {
        let matches = compare(
            &oracle,
            traced,
            config.position_tolerance_m,
            config.energy_tolerance_db,
        );
        let traced_analysis = analyse(traced, config.speed_of_sound, &filterbank).runtime()?;
        eprintln!(
            "matched {} of {} traced image-sources ({} unmatched), max position error {:.3e} m, max early energy delta {:.3} dB",
            matches.matched_count,
            matches.traced_count,
            matches.unmatched_traced.len(),
            matches.max_position_error_m,
            matches.max_early_energy_delta_db
        );
        let comparison = Comparison {
            traced: path.display().to_string(),
            metric_deltas: metric_deltas(&analysis.metrics, &traced_analysis.metrics),
            matches,
        };
        io::write_json(staging.path("comparison.json"), &comparison).runtime()?;
    }
    let files = staging.commit().runtime()?;
    eprintln!(
        "{} oracle image-sources within {:.2} m; wrote {} files to {}",
        oracle.len(),
        reach,
        files.len(),
        config.output_dir.display()
    );
    Ok(())
}
