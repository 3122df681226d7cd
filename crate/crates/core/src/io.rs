//! File formats: JSON, CSV and WAV readers and writers for run artifacts.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::complexity::BenchRow;
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::image_source::ImageSource;
use crate::material::{Bands, BAND_CENTERS, NUM_BANDS};
use crate::metrics::DecayCurve;
use crate::rir::{BandPulseTrain, PulseEvent};
use crate::shoebox::OracleImageSource;
use crate::tracer::Capture;

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn finish(path: &Path, mut w: impl Write) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// One JSON object per line.
/// Writes a JSON array with one compact element per line.
pub fn write_json_array<T: Serialize>(path: impl AsRef<Path>, items: &[T]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    w.write_all(b"[").map_err(|e| Error::io(path, e))?;
    for (i, item) in items.iter().enumerate() {
        let sep: &[u8] = if i == 0 { b"\n" } else { b",\n" };
        w.write_all(sep).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(&mut w, item)?;
    }
    w.write_all(b"\n]\n").map_err(|e| Error::io(path, e))?;
    finish(path, w)
}

pub fn write_json_lines<T: Serialize>(path: impl AsRef<Path>, items: &[T]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    finish(path, w)
}

pub fn write_captures(path: impl AsRef<Path>, captures: &[Capture]) -> Result<()> {
    write_json_lines(path, captures)
}

fn energy_headers(prefix: &str) -> Vec<String> {
    BAND_CENTERS
        .iter()
        .map(|c| format!("{prefix}{c}"))
        .collect()
}

fn parse_f64(field: Option<&str>, what: &str) -> Result<f64> {
    let s = field.ok_or_else(|| Error::invalid(format!("missing CSV column {what}")))?;
    s.parse()
        .map_err(|_| Error::invalid(format!("bad number `{s}` in column {what}")))
}

fn parse_usize(field: Option<&str>, what: &str) -> Result<usize> {
    let s = field.ok_or_else(|| Error::invalid(format!("missing CSV column {what}")))?;
    s.parse()
        .map_err(|_| Error::invalid(format!("bad integer `{s}` in column {what}")))
}

fn opt_field(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per image-source. The face path is `;`-separated.
pub fn write_image_sources_csv(path: impl AsRef<Path>, sources: &[ImageSource]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header: Vec<String> = ["x", "y", "z", "distance_m", "order", "ray_count"]
        .map(String::from)
        .to_vec();
    header.extend(energy_headers("energy_"));
    header.extend(["proj_x", "proj_y", "proj_z", "face_path"].map(String::from));
    w.write_record(&header)?;
    for s in sources {
        let mut row = vec![
            s.position.x.to_string(),
            s.position.y.to_string(),
            s.position.z.to_string(),
            s.distance.to_string(),
            s.order.to_string(),
            s.ray_count.to_string(),
        ];
        row.extend(s.band_energy.iter().map(f64::to_string));
        row.push(opt_field(s.projection.map(|p| p.x)));
        row.push(opt_field(s.projection.map(|p| p.y)));
        row.push(opt_field(s.projection.map(|p| p.z)));
        row.push(
            s.face_path
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(";"),
        );
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads [`write_image_sources_csv`] output. Band multipliers are not part
/// of the CSV and come back as 1.
pub fn read_image_sources_csv(path: impl AsRef<Path>) -> Result<Vec<ImageSource>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for record in r.records() {
        let rec = record?;
        let f = |i: usize, what: &str| parse_f64(rec.get(i), what);
        let mut band_energy = [0.0; NUM_BANDS];
        for (b, e) in band_energy.iter_mut().enumerate() {
            *e = f(6 + b, "energy")?;
        }
        let p = 6 + NUM_BANDS;
        let projection = match rec.get(p) {
            Some("") | None => None,
            Some(_) => Some(Vec3::new(
                f(p, "proj_x")?,
                f(p + 1, "proj_y")?,
                f(p + 2, "proj_z")?,
            )),
        };
        let face_path = match rec.get(p + 3) {
            Some("") | None => vec![],
            Some(s) => s
                .split(';')
                .map(|v| parse_usize(Some(v), "face_path"))
                .collect::<Result<_>>()?,
        };
        out.push(ImageSource {
            position: Vec3::new(f(0, "x")?, f(1, "y")?, f(2, "z")?),
            distance: f(3, "distance_m")?,
            order: parse_usize(rec.get(4), "order")?,
            ray_count: parse_usize(rec.get(5), "ray_count")?,
            band_energy,
            band_multiplier: [1.0; NUM_BANDS],
            face_path,
            projection,
        });
    }
    Ok(out)
}

pub fn write_oracle_csv(path: impl AsRef<Path>, sources: &[OracleImageSource]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header: Vec<String> = ["x", "y", "z", "distance_m", "order"]
        .map(String::from)
        .to_vec();
    header.extend(
        crate::meshgen::WALL_NAMES
            .iter()
            .map(|n| format!("hits_{n}")),
    );
    header.extend(energy_headers("energy_"));
    w.write_record(&header)?;
    for s in sources {
        let mut row = vec![
            s.position.x.to_string(),
            s.position.y.to_string(),
            s.position.z.to_string(),
            s.distance.to_string(),
            s.order.to_string(),
        ];
        row.extend(s.wall_hits.iter().map(usize::to_string));
        row.extend(s.band_energy.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Rows of (band, time_s, amplitude); `band` is the band index 0–7.
pub fn write_band_trains_csv(path: impl AsRef<Path>, trains: &[BandPulseTrain]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["band", "time_s", "amplitude"])?;
    for t in trains {
        for e in &t.events {
            w.write_record([
                t.band.to_string(),
                e.time_s.to_string(),
                e.amplitude.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Always returns all bands, some possibly empty.
pub fn read_band_trains_csv(path: impl AsRef<Path>) -> Result<Vec<BandPulseTrain>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path)?;
    let mut trains: Vec<BandPulseTrain> = (0..NUM_BANDS)
        .map(|band| BandPulseTrain {
            band,
            events: vec![],
        })
        .collect();
    for record in r.records() {
        let rec = record?;
        let band = parse_usize(rec.get(0), "band")?;
        if band >= NUM_BANDS {
            return Err(Error::invalid(format!(
                "band index {band} out of range in {}",
                path.display()
            )));
        }
        let time_s = parse_f64(rec.get(1), "time_s")?;
        let amplitude = parse_f64(rec.get(2), "amplitude")?;
        if time_s < 0.0 || amplitude < 0.0 {
            return Err(Error::invalid(format!(
                "negative time or amplitude in {}",
                path.display()
            )));
        }
        trains[band].events.push(PulseEvent { time_s, amplitude });
    }
    trains.iter_mut().for_each(BandPulseTrain::sort);
    Ok(trains)
}

/// Rows of (time_s, level_db) for the finite part of the curve.
pub fn write_decay_csv(path: impl AsRef<Path>, curve: &DecayCurve) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["time_s", "level_db"])?;
    for (t, l) in curve.points() {
        w.write_record([t.to_string(), l.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_bench_csv(path: impl AsRef<Path>, rows: &[BenchRow]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(create(path)?);
    write_bench_rows(&mut w, rows)?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Header (k, M, t_tree_s, t_brute_s) and one row per size.
pub fn write_bench_rows<W: Write>(w: &mut csv::Writer<W>, rows: &[BenchRow]) -> Result<()> {
    w.write_record(["k", "M", "t_tree_s", "t_brute_s"])?;
    for r in rows {
        w.write_record([
            r.k.to_string(),
            r.faces.to_string(),
            r.t_tree_s.to_string(),
            opt_field(r.t_brute_s),
        ])?;
    }
    Ok(())
}

/// Mono 32-bit float WAV.
pub fn write_wav(path: impl AsRef<Path>, samples: &[f64], sample_rate: u32) -> Result<()> {
    let path = path.as_ref();
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let mut w = hound::WavWriter::new(create(path)?, spec)?;
    for &s in samples {
        w.write_sample(s as f32)?;
    }
    w.finalize()?;
    Ok(())
}

/// Reads any PCM or float WAV; multi-channel files are averaged to mono.
pub fn read_wav(path: impl AsRef<Path>) -> Result<(Vec<f64>, u32)> {
    let path = path.as_ref();
    let mut r = hound::WavReader::open(path)?;
    let spec = r.spec();
    let interleaved: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Float => r
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()?,
        hound::SampleFormat::Int => {
            let scale = (1u64 << (spec.bits_per_sample - 1)) as f64;
            r.samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<Result<_, _>>()?
        }
    };
    let channels = spec.channels.max(1) as usize;
    let mono = interleaved
        .chunks(channels)
        .map(|frame| frame.iter().sum::<f64>() / channels as f64)
        .collect();
    Ok((mono, spec.sample_rate))
}

/// Band energies keyed like the metrics report.
pub fn band_map(values: &Bands) -> serde_json::Map<String, serde_json::Value> {
    (0..NUM_BANDS)
        .map(|b| {
            (
                crate::metrics::MetricsReport::band_key(b),
                serde_json::json!(values[b]),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::schroeder;

    fn sample_sources() -> Vec<ImageSource> {
        vec![
            ImageSource {
                position: Vec3::new(4.0, 2.0, 1.7),
                distance: 2.0,
                order: 0,
                ray_count: 250,
                band_energy: [0.0025; NUM_BANDS],
                band_multiplier: [1.0; NUM_BANDS],
                face_path: vec![],
                projection: None,
            },
            ImageSource {
                position: Vec3::new(-4.0, 2.0, 1.7),
                distance: 6.0,
                order: 1,
                ray_count: 25,
                band_energy: [1.0 / 3.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7],
                band_multiplier: [1.0; NUM_BANDS],
                face_path: vec![0],
                projection: Some(Vec3::new(0.0, 2.0, 1.7)),
            },
        ]
    }

    #[test]
    fn image_sources_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let sources = sample_sources();
        let json = dir.path().join("is.json");
        write_json(&json, &sources).unwrap();
        let back: Vec<ImageSource> = read_json(&json).unwrap();
        assert_eq!(back, sources);
        let value: serde_json::Value = read_json(&json).unwrap();
        let first = &value.as_array().unwrap()[1];
        for key in [
            "position",
            "distance_m",
            "order",
            "ray_count",
            "band_energy",
            "projection",
        ] {
            assert!(first.get(key).is_some(), "{key}");
        }
        let csv = dir.path().join("is.csv");
        write_image_sources_csv(&csv, &sources).unwrap();
        assert_eq!(read_image_sources_csv(&csv).unwrap(), sources);
    }

    #[test]
    fn compact_array_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let sources = sample_sources();
        let path = dir.path().join("is.json");
        write_json_array(&path, &sources).unwrap();
        assert_eq!(read_json::<Vec<ImageSource>>(&path).unwrap(), sources);
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 4);
        write_json_array::<ImageSource>(&path, &[]).unwrap();
        assert!(read_json::<Vec<ImageSource>>(&path).unwrap().is_empty());
    }

    #[test]
    fn band_trains_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let trains: Vec<BandPulseTrain> = (0..NUM_BANDS)
            .map(|band| BandPulseTrain {
                band,
                events: vec![PulseEvent {
                    time_s: 0.1 * band as f64,
                    amplitude: 0.05,
                }],
            })
            .collect();
        let path = dir.path().join("trains.csv");
        write_band_trains_csv(&path, &trains).unwrap();
        assert_eq!(read_band_trains_csv(&path).unwrap(), trains);
    }

    #[test]
    fn wav_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.wav");
        let samples = [0.0, 0.5, -0.25, 1.0];
        write_wav(&path, &samples, 44_100).unwrap();
        let (back, fs) = read_wav(&path).unwrap();
        assert_eq!(fs, 44_100);
        assert_eq!(back, samples);
    }

    #[test]
    fn decay_csv_skips_silence() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("decay.csv");
        let curve = schroeder(&[1.0, 0.5, 0.0, 0.0], 10).unwrap();
        write_decay_csv(&path, &curve).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("time_s,level_db\n0,0\n0.1,"));
    }

    #[test]
    fn empty_bench_has_header() {
        let mut w = csv::Writer::from_writer(Vec::new());
        write_bench_rows(&mut w, &[]).unwrap();
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        assert_eq!(text, "k,M,t_tree_s,t_brute_s\n");
    }

    #[test]
    fn missing_file_names_path() {
        let err = read_json::<Vec<ImageSource>>("/nonexistent/is.json").unwrap_err();
        assert!(err.to_string().contains("/nonexistent/is.json"));
    }
}
