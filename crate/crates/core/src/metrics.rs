//! Schroeder decay and room-acoustic parameters (EDT, T30, SPL, C80, D50, Ts).

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::material::{BAND_CENTERS, NUM_BANDS};
use crate::rir::BandPulseTrain;

/// C80 reported when one side of the 80 ms split holds no energy.
pub const C80_CLAMP_DB: f64 = 99.0;
/// Bands averaged into the "mid" figure: 500 Hz and 1 kHz.
pub const MID_BANDS: [usize; 2] = [3, 4];

/// Normalised backward-integrated energy in dB, one level per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayCurve {
    pub sample_rate: u32,
    pub levels_db: Vec<f64>,
}

impl DecayCurve {
    pub fn time_s(&self, index: usize) -> f64 {
        index as f64 / self.sample_rate as f64
    }

    /// Finite (time, level) points.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.levels_db
            .iter()
            .enumerate()
            .filter(|(_, l)| l.is_finite())
            .map(|(i, &l)| (self.time_s(i), l))
    }

    /// Least-squares slope (dB/s) over samples with `low <= L <= high`.
    /// `None` with fewer than two points.
    fn slope_between(&self, high: f64, low: f64) -> Option<f64> {
        let (mut n, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (t, l) in self.points().filter(|&(_, l)| l <= high && l >= low) {
            n += 1.0;
            sx += t;
            sy += l;
            sxx += t * t;
            sxy += t * l;
        }
        let denom = n * sxx - sx * sx;
        (n >= 2.0 && denom > 0.0).then(|| (n * sxy - sx * sy) / denom)
    }

    fn lowest_level(&self) -> f64 {
        self.points().map(|(_, l)| l).fold(f64::INFINITY, f64::min)
    }

    /// −60 / slope over [high, low] dB, with a flag telling whether the
    /// curve actually spans the range.
    fn reverberation_time(&self, high: f64, low: f64) -> (Option<f64>, bool) {
        // an exact 0 dB start sample counts for the EDT segment
        let spans = self.lowest_level() <= low;
        match self.slope_between(high, low) {
            Some(s) if s < 0.0 => (Some(-60.0 / s), spans),
            _ => (None, false),
        }
    }
}

/// Backward integration of an energy signal (already squared).
pub fn schroeder_energy(energy: &[f64], sample_rate: u32) -> Result<DecayCurve> {
    let total: f64 = energy.iter().sum();
    if energy.is_empty() || !(total > 0.0) {
        return Err(Error::UndefinedDecay);
    }
    let mut levels_db = vec![0.0; energy.len()];
    let mut tail = 0.0;
    for i in (0..energy.len()).rev() {
        tail += energy[i];
        levels_db[i] = 10.0 * (tail / total).log10();
    }
    // rounding can leave the running sum a hair away from monotone
    for i in 1..levels_db.len() {
        if levels_db[i] > levels_db[i - 1] {
            levels_db[i] = levels_db[i - 1];
        }
    }
    Ok(DecayCurve {
        sample_rate,
        levels_db,
    })
}

/// Backward integration of a pressure signal.
pub fn schroeder(samples: &[f64], sample_rate: u32) -> Result<DecayCurve> {
    let energy: Vec<f64> = samples.iter().map(|p| p * p).collect();
    schroeder_energy(&energy, sample_rate)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Reliability {
    pub edt: bool,
    pub t30: bool,
    pub spl: bool,
    pub c80: bool,
    pub d50: bool,
    pub ts: bool,
}

impl Reliability {
    pub fn all(&self) -> bool {
        self.edt && self.t30 && self.spl && self.c80 && self.d50 && self.ts
    }

    fn and(&self, o: &Reliability) -> Reliability {
        Reliability {
            edt: self.edt && o.edt,
            t30: self.t30 && o.t30,
            spl: self.spl && o.spl,
            c80: self.c80 && o.c80,
            d50: self.d50 && o.d50,
            ts: self.ts && o.ts,
        }
    }
}

/// Room-acoustic parameters of one band (or the mid average).
/// `None` marks a value that could not be estimated at all.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerceptiveFactors {
    pub edt_s: Option<f64>,
    pub t30_s: Option<f64>,
    pub spl_db: f64,
    pub c80_db: f64,
    pub d50_pct: f64,
    pub ts_ms: f64,
    pub reliable: Reliability,
}

/// Onset index for pressure signals: first sample within 20 dB of the peak.
pub fn onset_index(samples: &[f64]) -> Option<usize> {
    let peak = samples.iter().fold(0.0f64, |m, v| m.max(v * v));
    if peak <= 0.0 {
        return None;
    }
    samples.iter().position(|v| v * v >= peak * 0.01)
}

/// Parameters of an energy signal with the direct sound at sample `t0`.
/// `total_energy` is the band energy used for SPL (Σ E, re 1).
pub fn factors_from_energy(
    energy: &[f64],
    sample_rate: u32,
    t0: usize,
    total_energy: f64,
) -> Result<PerceptiveFactors> {
    let decay = schroeder_energy(energy, sample_rate)?;
    let fs = sample_rate as f64;
    let (edt_s, edt_ok) = decay.reverberation_time(0.0, -10.0);
    let (t30_s, t30_ok) = decay.reverberation_time(-5.0, -35.0);

    let after = &energy[t0.min(energy.len())..];
    let sum = |range: std::ops::Range<usize>| -> f64 {
        after[range.start.min(after.len())..range.end.min(after.len())]
            .iter()
            .sum()
    };
    let n50 = (0.050 * fs).round() as usize;
    let n80 = (0.080 * fs).round() as usize;
    let total: f64 = after.iter().sum();
    let early80 = sum(0..n80);
    let late80 = total - early80;

    let (c80_db, c80_ok) = if early80 <= 0.0 {
        (-C80_CLAMP_DB, false)
    } else if late80 <= 0.0 {
        (C80_CLAMP_DB, false)
    } else {
        let c = 10.0 * (early80 / late80).log10();
        (c.clamp(-C80_CLAMP_DB, C80_CLAMP_DB), c.abs() < C80_CLAMP_DB)
    };
    let energy_ok = total > 0.0;
    let d50_pct = if energy_ok {
        100.0 * sum(0..n50) / total
    } else {
        0.0
    };
    let ts_ms = if energy_ok {
        1000.0
            * after
                .iter()
                .enumerate()
                .map(|(i, e)| i as f64 / fs * e)
                .sum::<f64>()
            / total
    } else {
        0.0
    };
    let spl_ok = total_energy > 0.0;
    Ok(PerceptiveFactors {
        edt_s,
        t30_s,
        spl_db: if spl_ok {
            10.0 * total_energy.log10()
        } else {
            f64::NEG_INFINITY
        },
        c80_db,
        d50_pct,
        ts_ms,
        reliable: Reliability {
            edt: edt_ok,
            t30: t30_ok,
            spl: spl_ok,
            c80: c80_ok,
            d50: energy_ok,
            ts: energy_ok,
        },
    })
}

/// Parameters of a sampled pressure response (e.g. a broadband WAV).
/// SPL is the level of Σ p².
pub fn factors_from_samples(samples: &[f64], sample_rate: u32) -> Result<PerceptiveFactors> {
    let t0 = onset_index(samples).ok_or(Error::UndefinedDecay)?;
    let energy: Vec<f64> = samples.iter().map(|p| p * p).collect();
    let total = energy.iter().sum();
    factors_from_energy(&energy, sample_rate, t0, total)
}

/// Squared pulse amplitudes binned at their nearest sample.
pub fn energy_response(train: &BandPulseTrain, sample_rate: u32) -> Vec<f64> {
    let fs = sample_rate as f64;
    let len = train
        .events
        .iter()
        .map(|e| (e.time_s * fs).round() as usize + 1)
        .max()
        .unwrap_or(0);
    let mut out = vec![0.0; len];
    for e in &train.events {
        out[(e.time_s * fs).round() as usize] += e.amplitude * e.amplitude;
    }
    out
}

/// Parameters of a band pulse train, measured from its first non-zero event.
pub fn factors(train: &BandPulseTrain, sample_rate: u32) -> Result<PerceptiveFactors> {
    let energy = energy_response(train, sample_rate);
    let t0 = energy
        .iter()
        .position(|&e| e > 0.0)
        .ok_or(Error::UndefinedDecay)?;
    let total = train.events.iter().map(|e| e.amplitude * e.amplitude).sum();
    factors_from_energy(&energy, sample_rate, t0, total)
}

fn mean_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    Some((a? + b?) / 2.0)
}

/// Arithmetic mean of two bands' parameters; a flag holds only if it holds
/// in both.
pub fn average(a: &PerceptiveFactors, b: &PerceptiveFactors) -> PerceptiveFactors {
    PerceptiveFactors {
        edt_s: mean_opt(a.edt_s, b.edt_s),
        t30_s: mean_opt(a.t30_s, b.t30_s),
        spl_db: (a.spl_db + b.spl_db) / 2.0,
        c80_db: (a.c80_db + b.c80_db) / 2.0,
        d50_pct: (a.d50_pct + b.d50_pct) / 2.0,
        ts_ms: (a.ts_ms + b.ts_ms) / 2.0,
        reliable: a.reliable.and(&b.reliable),
    }
}

/// Per-band parameters plus the 500 Hz / 1 kHz average.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub bands: Vec<PerceptiveFactors>,
    pub mid: PerceptiveFactors,
}

impl MetricsReport {
    pub fn from_trains(trains: &[BandPulseTrain], sample_rate: u32) -> Result<Self> {
        if trains.len() != NUM_BANDS {
            return Err(Error::invalid(format!(
                "expected {NUM_BANDS} band trains, got {}",
                trains.len()
            )));
        }
        let bands = trains
            .iter()
            .map(|t| factors(t, sample_rate))
            .collect::<Result<Vec<_>>>()?;
        let mid = average(&bands[MID_BANDS[0]], &bands[MID_BANDS[1]]);
        Ok(MetricsReport { bands, mid })
    }

    pub fn band_key(band: usize) -> String {
        let c = BAND_CENTERS[band];
        if c.fract() == 0.0 {
            format!("{}", c as u64)
        } else {
            format!("{c}")
        }
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let mut map: serde_json::Map<String, serde_json::Value> = serde_json::from_str(s)?;
        let mut take = |key: &str| -> Result<PerceptiveFactors> {
            let v = map
                .remove(key)
                .ok_or_else(|| Error::invalid(format!("metrics JSON lacks key \"{key}\"")))?;
            Ok(serde_json::from_value(v)?)
        };
        let bands = (0..NUM_BANDS)
            .map(|b| take(&Self::band_key(b)))
            .collect::<Result<Vec<_>>>()?;
        let mid = take("mid")?;
        Ok(MetricsReport { bands, mid })
    }
}

impl Serialize for MetricsReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.bands.len() + 1))?;
        for (b, f) in self.bands.iter().enumerate() {
            map.serialize_entry(&Self::band_key(b), f)?;
        }
        map.serialize_entry("mid", &self.mid)?;
        map.end()
    }
}

/// Differences between two parameter sets, `b` relative to `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorDeltas {
    /// Relative differences, e.g. 0.05 for 5 %.
    pub edt_rel: Option<f64>,
    pub t30_rel: Option<f64>,
    pub spl_db: f64,
    pub c80_db: f64,
    pub d50_pts: f64,
    pub ts_ms: f64,
}

fn rel(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    let (a, b) = (a?, b?);
    (a != 0.0).then(|| (b - a) / a)
}

pub fn deltas(a: &PerceptiveFactors, b: &PerceptiveFactors) -> FactorDeltas {
    FactorDeltas {
        edt_rel: rel(a.edt_s, b.edt_s),
        t30_rel: rel(a.t30_s, b.t30_s),
        spl_db: b.spl_db - a.spl_db,
        c80_db: b.c80_db - a.c80_db,
        d50_pts: b.d50_pct - a.d50_pct,
        ts_ms: b.ts_ms - a.ts_ms,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rir::PulseEvent;
    use proptest::prelude::*;

    const FS: u32 = 44_100;

    /// Energy of a pressure decay reaching −60 dB at `rt60` seconds.
    fn exponential_energy(rt60: f64, length_s: f64) -> Vec<f64> {
        let n = (length_s * FS as f64) as usize;
        let rate = 6.0 * std::f64::consts::LN_10 / rt60;
        (0..n)
            .map(|i| (-rate * i as f64 / FS as f64).exp())
            .collect()
    }

    fn train(events: &[(f64, f64)]) -> BandPulseTrain {
        BandPulseTrain {
            band: 0,
            events: events
                .iter()
                .map(|&(time_s, amplitude)| PulseEvent { time_s, amplitude })
                .collect(),
        }
    }

    #[test]
    fn exponential_decay_is_linear_in_db() {
        // p(t) = exp(−6.9077 t / 2): 60 dB energy drop at 2 s
        let samples: Vec<f64> = (0..(6 * FS))
            .map(|i| (-6.9077 * (i as f64 / FS as f64) / 2.0).exp())
            .collect();
        let curve = schroeder(&samples, FS).unwrap();
        let at_1s = curve.levels_db[FS as usize];
        assert!((at_1s + 30.0).abs() <= 0.1, "{at_1s}");
    }

    #[test]
    fn single_impulse_decay() {
        let curve = schroeder(&[0.0, 0.0, 1.0, 0.0, 0.0], FS).unwrap();
        assert_eq!(&curve.levels_db[..3], &[0.0, 0.0, 0.0]);
        assert!(curve.levels_db[3..].iter().all(|l| *l == f64::NEG_INFINITY));
    }

    #[test]
    fn silent_signal_has_no_decay() {
        assert!(matches!(
            schroeder(&[0.0; 16], FS),
            Err(Error::UndefinedDecay)
        ));
        assert!(matches!(schroeder(&[], FS), Err(Error::UndefinedDecay)));
    }

    proptest! {
        #[test]
        fn decay_is_monotone(signal in proptest::collection::vec(-1.0f64..1.0, 1..400)) {
            prop_assume!(signal.iter().any(|v| *v != 0.0));
            let curve = schroeder(&signal, FS).unwrap();
            for w in curve.levels_db.windows(2) {
                prop_assert!(w[1] <= w[0]);
            }
            prop_assert!(curve.levels_db[0].abs() < 1e-12);
        }
    }

    #[test]
    fn reverberation_times_of_exponential_decays() {
        for rt60 in [0.5, 2.0, 3.5] {
            let energy = exponential_energy(rt60, 1.5 * rt60);
            let total = energy.iter().sum();
            let f = factors_from_energy(&energy, FS, 0, total).unwrap();
            let t30 = f.t30_s.unwrap();
            let edt = f.edt_s.unwrap();
            assert!((t30 - rt60).abs() <= 0.02 * rt60, "T30 {t30} for {rt60}");
            assert!((edt - rt60).abs() <= 0.05 * rt60, "EDT {edt} for {rt60}");
            assert!(f.reliable.t30 && f.reliable.edt);
        }
    }

    #[test]
    fn two_equal_pulses() {
        let f = factors(&train(&[(0.0, 1.0), (0.1, 1.0)]), FS).unwrap();
        assert!(f.c80_db.abs() <= 0.01);
        assert!((f.d50_pct - 50.0).abs() <= 0.1);
        assert!((f.ts_ms - 50.0).abs() <= 0.1);
        assert!((f.spl_db - 10.0 * 2f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn windows_start_at_first_arrival() {
        let f = factors(&train(&[(0.25, 1.0), (0.35, 1.0)]), FS).unwrap();
        assert!(f.c80_db.abs() <= 0.01);
        assert!((f.ts_ms - 50.0).abs() <= 0.1);
    }

    #[test]
    fn lone_direct_pulse() {
        let f = factors(&train(&[(0.01, 0.5)]), FS).unwrap();
        assert_eq!(f.d50_pct, 100.0);
        assert_eq!(f.c80_db, C80_CLAMP_DB);
        assert!(!f.reliable.c80);
        assert!(!f.reliable.t30);
        assert_eq!(f.ts_ms, 0.0);
    }

    #[test]
    fn short_decay_flags_t30() {
        // reaches only about -20 dB
        let energy: Vec<f64> = (0..100).map(|i| 1.0 - i as f64 * 0.0099).collect();
        let f = factors_from_energy(&energy, FS, 0, 1.0).unwrap();
        assert!(!f.reliable.t30);
        assert!(f.reliable.edt);
    }

    #[test]
    fn spl_ignores_sampling() {
        let t = train(&[(0.0, 0.3), (0.01234567, 0.2), (0.0123457, 0.1)]);
        let coarse = factors(&t, 8_000).unwrap();
        let fine = factors(&t, 96_000).unwrap();
        assert_eq!(coarse.spl_db, fine.spl_db);
    }

    #[test]
    fn broadband_onset() {
        let mut samples = vec![0.0; 100];
        samples[10] = 0.01;
        samples[20] = 1.0;
        samples[30] = 0.5;
        assert_eq!(onset_index(&samples), Some(20));
        let f = factors_from_samples(&samples, FS).unwrap();
        assert!(f.d50_pct > 99.0);
    }

    #[test]
    fn deltas_are_relative_to_first() {
        let a = factors(&train(&[(0.0, 1.0), (0.1, 1.0)]), FS).unwrap();
        let mut b = a;
        b.t30_s = a.t30_s.map(|t| t * 1.1);
        b.c80_db += 0.25;
        let d = deltas(&a, &b);
        if a.t30_s.is_some() {
            assert!((d.t30_rel.unwrap() - 0.1).abs() < 1e-12);
        }
        assert!((d.c80_db - 0.25).abs() < 1e-12);
        assert_eq!(d.d50_pts, 0.0);
    }

    #[test]
    fn report_json_keys_and_round_trip() {
        let trains: Vec<BandPulseTrain> = (0..NUM_BANDS)
            .map(|b| BandPulseTrain {
                band: b,
                events: vec![
                    PulseEvent {
                        time_s: 0.0,
                        amplitude: 1.0,
                    },
                    PulseEvent {
                        time_s: 0.1,
                        amplitude: 0.5,
                    },
                ],
            })
            .collect();
        let report = MetricsReport::from_trains(&trains, FS).unwrap();
        let json = report.to_json_string().unwrap();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        let keys: Vec<&String> = value.as_object().unwrap().keys().collect();
        assert_eq!(
            keys,
            ["62.5", "125", "250", "500", "1000", "2000", "4000", "8000", "mid"]
        );
        let back = MetricsReport::from_json_str(&json).unwrap();
        assert_eq!(back.bands.len(), NUM_BANDS);
        assert_eq!(back.mid.d50_pct, report.mid.d50_pct);
    }
}
