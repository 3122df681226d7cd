use std::time::Instant;

use anyhow::Context;
use sonotrace::geometry::load_obj;
use sonotrace::io;
use sonotrace::metrics::MetricsReport;
use sonotrace::pipeline::{self, PipelineConfig};
use sonotrace::rir::auralize;
use sonotrace::{MaterialTable, Scene, TraceConfig};

use crate::config::{RunConfig, TraceOverrides};
use crate::failure::{Classify, Failure};
use crate::output::Staging;
use crate::report::{RunReport, RunTimings, SceneSummary};
use crate::TraceArgs;

fn overrides(args: &TraceArgs) -> TraceOverrides {
    TraceOverrides {
        rays: args.rays,
        radius: args.radius,
        d_max: args.d_max,
        max_iterations: args.max_iterations,
        sample_rate: args.sample_rate,
        output_dir: args.output.clone(),
        no_air: args.no_air,
        deterministic: args.deterministic,
    }
}

pub fn run(args: &TraceArgs) -> Result<(), Failure> {
    let started = Instant::now();
    let mut config = RunConfig::load(&args.config).config()?;
    overrides(args).apply(&mut config);
    config.validate().config()?;

    let materials = MaterialTable::load(&config.materials).config()?;
    let loaded = load_obj(&config.mesh, &materials).config()?;
    if loaded.degenerate_faces > 0 {
        log::warn!(
            "{}: dropped {} degenerate faces",
            config.mesh.display(),
            loaded.degenerate_faces
        );
    }
    let audio = config
        .audio
        .as_ref()
        .map(|p| io::read_wav(p).with_context(|| format!("audio {}", p.display())))
        .transpose()
        .config()?;
    let load_s = started.elapsed().as_secs_f64();

    let t = Instant::now();
    let scene = Scene::new(loaded.mesh).runtime()?;
    let tree_s = t.elapsed().as_secs_f64();
    let bounds = scene
        .mesh
        .bounds()
        .expect("a tree was built, so the mesh has faces");

    let pipeline_config = PipelineConfig {
        trace: TraceConfig {
            max_iterations: config.max_iterations,
            speed_of_sound: config.speed_of_sound,
            d_max: config.d_max,
            parallel: !config.deterministic,
        },
        air: config.air,
        sample_rate: config.sample_rate,
        coplanar_merge: config.coplanar_merge,
    };
    let out =
        pipeline::run(&scene, &config.source, &config.receiver, &pipeline_config).runtime()?;
    if out.trace.report.truncated {
        log::warn!(
            "iteration cap reached with {} rays alive; see run_report.json",
            out.trace.report.live_rays
        );
    }

    let t = Instant::now();
    let staging = Staging::new(&config.output_dir).runtime()?;
    let analysis = &out.analysis;
    (|| -> sonotrace::Result<()> {
        io::write_json_array(staging.path("image_sources.json"), &out.image_sources)?;
        io::write_image_sources_csv(staging.path("image_sources.csv"), &out.image_sources)?;
        io::write_wav(
            staging.path("rir.wav"),
            &analysis.rir.samples,
            analysis.rir.sample_rate,
        )?;
        io::write_band_trains_csv(staging.path("band_trains.csv"), &analysis.trains)?;
        io::write_json(staging.path("metrics.json"), &analysis.metrics)?;
        for (band, curve) in analysis.decays.iter().enumerate() {
            let name = format!("decay_{}.csv", MetricsReport::band_key(band));
            io::write_decay_csv(staging.path(&name), curve)?;
        }
        if args.export_captures {
            io::write_captures(staging.path("captures.jsonl"), &out.trace.captures)?;
        }
        if args.tree_stats {
            let mut stats = scene.tree.stats();
            stats.build_time_s = tree_s;
            io::write_json(staging.path("tree_stats.json"), &stats)?;
        }
        if let Some((samples, rate)) = &audio {
            let wet = auralize(&analysis.rir, samples, *rate)?;
            io::write_wav(staging.path("auralized.wav"), &wet, *rate)?;
        }
        Ok(())
    })()
    .runtime()?;
    let write_s = t.elapsed().as_secs_f64();

    let mut tree = scene.tree.stats();
    tree.build_time_s = tree_s;
    let report = RunReport {
        scene: SceneSummary {
            mesh: config.mesh.display().to_string(),
            faces: scene.mesh.face_count(),
            degenerate_faces: loaded.degenerate_faces,
            bounds_min: bounds.min,
            bounds_max: bounds.max,
            source: config.source.position,
            ray_count: config.source.ray_count,
            receiver: config.receiver.center,
            receiver_radius: config.receiver.radius,
            speed_of_sound: config.speed_of_sound,
            sample_rate: config.sample_rate,
        },
        trace: out.trace.report.clone(),
        tree,
        image_source_count: out.image_sources.len(),
        air_db_per_m: io::band_map(&config.air.band_db_per_m().runtime()?),
        air_beta_per_m: io::band_map(&config.air.band_betas().runtime()?),
        deterministic: config.deterministic,
        threads: if config.deterministic {
            1
        } else {
            rayon::current_num_threads()
        },
        timings: RunTimings {
            load_s,
            tree_s,
            trace_s: out.timings.trace_s,
            image_sources_s: out.timings.image_sources_s,
            synthesis_s: out.timings.synthesis_s,
            metrics_s: out.timings.metrics_s,
            write_s,
            total_s: started.elapsed().as_secs_f64(),
        },
    };
    io::write_json(staging.path("run_report.json"), &report).runtime()?;
    let files = staging.commit().runtime()?;

    let mid = &analysis.metrics.mid;
    eprintln!(
        "{} rays, {} captures, {} image-sources in {:.2} s; wrote {} files to {}",
        report.trace.ray_count,
        report.trace.captures,
        report.image_source_count,
        report.timings.total_s,
        files.len(),
        config.output_dir.display()
    );
    eprintln!(
        "mid: EDT {} s, T30 {} s, C80 {:.2} dB, D50 {:.1} %, Ts {:.1} ms",
        fmt_opt(mid.edt_s),
        fmt_opt(mid.t30_s),
        mid.c80_db,
        mid.d50_pct,
        mid.ts_ms
    );
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{x:.3}"))
}
