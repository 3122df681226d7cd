//! Run configurations: JSON documents whose relative paths resolve against
//! the document's own directory.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use sonotrace::air::AirModel;
use sonotrace::emission::SourceConfig;
use sonotrace::rir::DEFAULT_SAMPLE_RATE;
use sonotrace::tracer::{Receiver, DEFAULT_MAX_ITERATIONS, DEFAULT_SPEED_OF_SOUND};
use sonotrace::Vec3;

fn default_speed_of_sound() -> f64 {
    DEFAULT_SPEED_OF_SOUND
}
fn default_sample_rate() -> u32 {
    DEFAULT_SAMPLE_RATE
}
fn default_max_iterations() -> usize {
    DEFAULT_MAX_ITERATIONS
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mesh: PathBuf,
    pub materials: PathBuf,
    pub source: SourceConfig,
    pub receiver: Receiver,
    #[serde(default)]
    pub air: AirModel,
    #[serde(default = "default_speed_of_sound")]
    pub speed_of_sound: f64,
    #[serde(default = "default_sample_rate")]
    pub sample_rate: u32,
    #[serde(default)]
    pub d_max: Option<f64>,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_true")]
    pub coplanar_merge: bool,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub deterministic: bool,
    /// Optional dry recording to convolve with the impulse response.
    #[serde(default)]
    pub audio: Option<PathBuf>,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}

fn read_document<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
}

fn check_positive(value: f64, field: &str) -> Result<()> {
    ensure!(
        value.is_finite() && value > 0.0,
        "{field} must be positive, got {value}"
    );
    Ok(())
}

fn check_exists(path: &Path, field: &str) -> Result<()> {
    ensure!(path.exists(), "{field}: {} does not exist", path.display());
    Ok(())
}

impl RunConfig {
    /// Reads the document and makes its paths absolute or relative to the
    /// working directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut config: RunConfig = read_document(path)?;
        let base = base_dir(path);
        config.mesh = resolve(&base, &config.mesh);
        config.materials = resolve(&base, &config.materials);
        config.output_dir = resolve(&base, &config.output_dir);
        config.audio = config.audio.map(|a| resolve(&base, &a));
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        check_exists(&self.mesh, "mesh")?;
        check_exists(&self.materials, "materials")?;
        if let Some(audio) = &self.audio {
            check_exists(audio, "audio")?;
        }
        ensure!(
            self.source.ray_count >= 1,
            "source.ray_count must be at least 1, got 0"
        );
        self.source.validate().context("source")?;
        check_positive(self.receiver.radius, "receiver.radius")?;
        ensure!(
            self.receiver
                .center
                .to_array()
                .iter()
                .all(|c| c.is_finite()),
            "receiver.center must be finite"
        );
        check_positive(self.speed_of_sound, "speed_of_sound")?;
        if let Some(d) = self.d_max {
            check_positive(d, "d_max")?;
        }
        ensure!(
            self.max_iterations >= 1,
            "max_iterations must be at least 1"
        );
        self.air.validate().context("air")?;
        sonotrace::rir::Filterbank::new(self.sample_rate).context("sample_rate")?;
        Ok(())
    }
}

/// Values given on the command line take precedence over the document.
#[derive(Debug, Clone, Default)]
pub struct TraceOverrides {
    pub rays: Option<usize>,
    pub radius: Option<f64>,
    pub d_max: Option<f64>,
    pub max_iterations: Option<usize>,
    pub sample_rate: Option<u32>,
    pub output_dir: Option<PathBuf>,
    pub no_air: bool,
    pub deterministic: bool,
}

impl TraceOverrides {
    pub fn apply(&self, config: &mut RunConfig) {
        if let Some(n) = self.rays {
            config.source.ray_count = n;
        }
        if let Some(r) = self.radius {
            config.receiver.radius = r;
        }
        if self.d_max.is_some() {
            config.d_max = self.d_max;
        }
        if let Some(m) = self.max_iterations {
            config.max_iterations = m;
        }
        if let Some(fs) = self.sample_rate {
            config.sample_rate = fs;
        }
        if let Some(dir) = &self.output_dir {
            config.output_dir = dir.clone();
        }
        if self.no_air {
            config.air = AirModel::Disabled;
        }
        config.deterministic |= self.deterministic;
    }
}

/// Wall names mapped to material names, in the order x0, x1, y0, y1, z0, z1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WallMaterials {
    pub x0: String,
    pub x1: String,
    pub y0: String,
    pub y1: String,
    pub z0: String,
    pub z1: String,
}

impl WallMaterials {
    pub fn names(&self) -> [&str; 6] {
        [&self.x0, &self.x1, &self.y0, &self.y1, &self.z0, &self.z1]
    }
}

fn default_position_tolerance() -> f64 {
    1e-9
}
fn default_energy_tolerance() -> f64 {
    1.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub dims: [f64; 3],
    pub materials: PathBuf,
    pub walls: WallMaterials,
    pub source: Vec3,
    pub receiver: Vec3,
    pub receiver_radius: f64,
    /// Used to derive the default reach, (r/2)·√N + r.
    #[serde(default)]
    pub ray_count: Option<usize>,
    #[serde(default)]
    pub max_distance: Option<f64>,
    #[serde(default)]
    pub air: AirModel,
    #[serde(default = "default_speed_of_sound")]
    pub speed_of_sound: f64,
    #[serde(default = "default_sample_rate")]
    pub sample_rate: u32,
    #[serde(default = "default_position_tolerance")]
    pub position_tolerance_m: f64,
    #[serde(default = "default_energy_tolerance")]
    pub energy_tolerance_db: f64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl OracleConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let mut config: OracleConfig = read_document(path)?;
        let base = base_dir(path);
        config.materials = resolve(&base, &config.materials);
        config.output_dir = resolve(&base, &config.output_dir);
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        check_exists(&self.materials, "materials")?;
        for (d, name) in self.dims.iter().zip(["dims[0]", "dims[1]", "dims[2]"]) {
            check_positive(*d, name)?;
        }
        check_positive(self.receiver_radius, "receiver_radius")?;
        check_positive(self.speed_of_sound, "speed_of_sound")?;
        if self.ray_count == Some(0) {
            bail!("ray_count must be at least 1, got 0");
        }
        if let Some(d) = self.max_distance {
            check_positive(d, "max_distance")?;
        }
        check_positive(self.position_tolerance_m, "position_tolerance_m")?;
        check_positive(self.energy_tolerance_db, "energy_tolerance_db")?;
        self.air.validate().context("air")?;
        sonotrace::rir::Filterbank::new(self.sample_rate).context("sample_rate")?;
        Ok(())
    }

    /// Explicit max_distance, else the tracer's range plus the receiver radius.
    pub fn reach(&self) -> Result<f64> {
        match (self.max_distance, self.ray_count) {
            (Some(d), _) => Ok(d),
            (None, Some(n)) => {
                Ok(sonotrace::tracer::max_range(self.receiver_radius, n) + self.receiver_radius)
            }
            (None, None) => bail!("oracle config needs max_distance or ray_count"),
        }
    }
}
