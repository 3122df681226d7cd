//! run_report.json: what was run, how long each stage took and what the
//! tracer saw.

use serde::{Deserialize, Serialize};
use sonotrace::accel::TreeStats;
use sonotrace::tracer::TraceReport;
use sonotrace::Vec3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSummary {
    pub mesh: String,
    pub faces: usize,
    pub degenerate_faces: usize,
    pub bounds_min: Vec3,
    pub bounds_max: Vec3,
    pub source: Vec3,
    pub ray_count: usize,
    pub receiver: Vec3,
    pub receiver_radius: f64,
    pub speed_of_sound: f64,
    pub sample_rate: u32,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTimings {
    pub load_s: f64,
    pub tree_s: f64,
    pub trace_s: f64,
    pub image_sources_s: f64,
    pub synthesis_s: f64,
    pub metrics_s: f64,
    pub write_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scene: SceneSummary,
    pub trace: TraceReport,
    pub tree: TreeStats,
    pub image_source_count: usize,
    /// Air attenuation per band center, dB/m and energy 1/m.
    pub air_db_per_m: serde_json::Map<String, serde_json::Value>,
    pub air_beta_per_m: serde_json::Map<String, serde_json::Value>,
    pub deterministic: bool,
    pub threads: usize,
    pub timings: RunTimings,
}
