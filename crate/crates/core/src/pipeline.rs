//! End-to-end run: trace, image-sources, impulse response and parameters.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::accel::HitFinder;
use crate::air::AirModel;
use crate::emission::SourceConfig;
use crate::error::Result;
use crate::image_source::{build_image_sources, ClusterOptions, ImageSource, ImageSourceSettings};
use crate::metrics::{energy_response, schroeder_energy, DecayCurve, MetricsReport};
use crate::rir::{build_pulse_trains, synthesize, BandPulseTrain, Filterbank, RoomImpulseResponse};
use crate::tracer::{trace, Receiver, TraceConfig, TraceOutput};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub trace: TraceConfig,
    pub air: AirModel,
    pub sample_rate: u32,
    pub coplanar_merge: bool,
}

/// Wall-clock seconds per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub trace_s: f64,
    pub image_sources_s: f64,
    pub synthesis_s: f64,
    pub metrics_s: f64,
}

/// Everything derived from a set of image-sources.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub trains: Vec<BandPulseTrain>,
    pub rir: RoomImpulseResponse,
    pub metrics: MetricsReport,
    /// One Schroeder curve per band, from the band energy response.
    pub decays: Vec<DecayCurve>,
    pub synthesis_s: f64,
    pub metrics_s: f64,
}

/// Pulse trains, broadband response, per-band decay curves and parameters.
pub fn analyse(
    sources: &[ImageSource],
    speed_of_sound: f64,
    filterbank: &Filterbank,
) -> Result<Analysis> {
    let fs = filterbank.sample_rate();
    let start = Instant::now();
    let trains = build_pulse_trains(sources, speed_of_sound)?;
    let rir = synthesize(&trains, filterbank);
    let synthesis_s = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let metrics = MetricsReport::from_trains(&trains, fs)?;
    let decays = trains
        .iter()
        .map(|t| schroeder_energy(&energy_response(t, fs), fs))
        .collect::<Result<Vec<_>>>()?;
    Ok(Analysis {
        trains,
        rir,
        metrics,
        decays,
        synthesis_s,
        metrics_s: start.elapsed().as_secs_f64(),
    })
}

pub struct PipelineOutput {
    pub trace: TraceOutput,
    pub image_sources: Vec<ImageSource>,
    pub analysis: Analysis,
    pub timings: StageTimings,
}

pub fn run<F: HitFinder>(
    finder: &F,
    source: &SourceConfig,
    receiver: &Receiver,
    config: &PipelineConfig,
) -> Result<PipelineOutput> {
    config.air.validate()?;
    let filterbank = Filterbank::new(config.sample_rate)?;

    let start = Instant::now();
    let traced = trace(finder, source, receiver, &config.trace)?;
    let trace_s = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let settings = ImageSourceSettings {
        total_rays: source.ray_count,
        air: &config.air,
        source_energy: &source.band_energy,
        cluster: ClusterOptions::for_mesh(finder.mesh()).with_coplanar_merge(config.coplanar_merge),
    };
    let image_sources = build_image_sources(&traced.captures, finder, receiver.center, &settings)?;
    let image_sources_s = start.elapsed().as_secs_f64();

    let analysis = analyse(&image_sources, config.trace.speed_of_sound, &filterbank)?;
    let timings = StageTimings {
        trace_s,
        image_sources_s,
        synthesis_s: analysis.synthesis_s,
        metrics_s: analysis.metrics_s,
    };
    Ok(PipelineOutput {
        trace: traced,
        image_sources,
        analysis,
        timings,
    })
}
