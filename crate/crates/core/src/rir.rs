//! Multi-band pulse trains, octave filterbank and impulse-response synthesis.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image_source::ImageSource;
use crate::material::{band_edges, BAND_CENTERS, NUM_BANDS};

pub const DEFAULT_SAMPLE_RATE: u32 = 44_100;
/// Odd FIR length so the group delay is a whole number of samples.
pub const FILTER_LEN: usize = 1023;
pub const FILTER_DELAY: usize = (FILTER_LEN - 1) / 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseEvent {
    pub time_s: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BandPulseTrain {
    pub band: usize,
    pub events: Vec<PulseEvent>,
}

impl BandPulseTrain {
    pub fn center_hz(&self) -> f64 {
        BAND_CENTERS[self.band]
    }

    pub fn sort(&mut self) {
        self.events.sort_by(|a, b| {
            a.time_s
                .total_cmp(&b.time_s)
                .then(a.amplitude.total_cmp(&b.amplitude))
        });
    }
}

/// One event per image-source per band at t = d/c with pressure √E.
pub fn build_pulse_trains(
    sources: &[ImageSource],
    speed_of_sound: f64,
) -> Result<Vec<BandPulseTrain>> {
    if !(speed_of_sound > 0.0) {
        return Err(Error::invalid(format!(
            "speed of sound must be positive, got {speed_of_sound}"
        )));
    }
    let mut trains: Vec<BandPulseTrain> = (0..NUM_BANDS)
        .map(|band| BandPulseTrain {
            band,
            events: Vec::with_capacity(sources.len()),
        })
        .collect();
    for s in sources {
        let time_s = s.distance / speed_of_sound;
        for (train, e) in trains.iter_mut().zip(s.band_energy) {
            train.events.push(PulseEvent {
                time_s,
                amplitude: e.max(0.0).sqrt(),
            });
        }
    }
    trains.iter_mut().for_each(BandPulseTrain::sort);
    Ok(trains)
}

/// Windowed-sinc lowpass with cutoff `fc`, centred on [`FILTER_DELAY`].
fn lowpass(fc: f64, sample_rate: f64, window: &[f64]) -> Vec<f64> {
    let wc = 2.0 * fc / sample_rate;
    (0..FILTER_LEN)
        .map(|n| {
            let k = n as f64 - FILTER_DELAY as f64;
            let sinc = if k == 0.0 {
                1.0
            } else {
                (PI * wc * k).sin() / (PI * wc * k)
            };
            wc * sinc * window[n]
        })
        .collect()
}

fn hann(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / (len - 1) as f64).cos())
        .collect()
}

/// Linear-phase octave band-pass kernels, one per band.
#[derive(Debug, Clone)]
pub struct Filterbank {
    sample_rate: u32,
    kernels: Vec<Vec<f64>>,
}

impl Filterbank {
    pub fn new(sample_rate: u32) -> Result<Self> {
        let (_, top) = band_edges(BAND_CENTERS[NUM_BANDS - 1]);
        if (sample_rate as f64) < 2.0 * top {
            return Err(Error::invalid(format!(
                "sample rate {sample_rate} Hz is below twice the top band edge ({:.0} Hz)",
                2.0 * top
            )));
        }
        let fs = sample_rate as f64;
        let window = hann(FILTER_LEN);
        let kernels = BAND_CENTERS
            .iter()
            .map(|&fc| {
                let (lo, hi) = band_edges(fc);
                let upper = lowpass(hi, fs, &window);
                let lower = lowpass(lo, fs, &window);
                upper.iter().zip(&lower).map(|(u, l)| u - l).collect()
            })
            .collect();
        Ok(Filterbank {
            sample_rate,
            kernels,
        })
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn kernel(&self, band: usize) -> &[f64] {
        &self.kernels[band]
    }

    /// Sum of all band kernels.
    pub fn summed_kernel(&self) -> Vec<f64> {
        (0..FILTER_LEN)
            .map(|n| self.kernels.iter().map(|k| k[n]).sum())
            .collect()
    }

    /// Magnitude of the summed filterbank at `freq_hz`, in dB.
    pub fn summed_response_db(&self, freq_hz: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / self.sample_rate as f64;
        let (re, im) =
            self.summed_kernel()
                .iter()
                .enumerate()
                .fold((0.0, 0.0), |(re, im), (n, h)| {
                    let phase = w * n as f64;
                    (re + h * phase.cos(), im - h * phase.sin())
                });
        20.0 * (re * re + im * im).sqrt().log10()
    }

    /// Places each event at its nearest sample and convolves with the band
    /// kernel, with the group delay removed.
    pub fn render(&self, train: &BandPulseTrain, len: usize) -> Vec<f64> {
        let kernel = &self.kernels[train.band];
        let fs = self.sample_rate as f64;
        let mut out = vec![0.0; len];
        for e in &train.events {
            let at = (e.time_s * fs).round() as usize;
            for (k, h) in kernel.iter().enumerate() {
                let Some(idx) = (at + k).checked_sub(FILTER_DELAY) else {
                    continue;
                };
                if idx >= len {
                    break;
                }
                out[idx] += e.amplitude * h;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoomImpulseResponse {
    pub sample_rate: u32,
    pub samples: Vec<f64>,
    pub band_trains: Vec<BandPulseTrain>,
}

/// Band-filters every train and sums the bands in order 0 → 7.
pub fn synthesize(trains: &[BandPulseTrain], filterbank: &Filterbank) -> RoomImpulseResponse {
    let fs = filterbank.sample_rate() as f64;
    let last = trains
        .iter()
        .flat_map(|t| t.events.iter())
        .map(|e| (e.time_s * fs).round() as usize)
        .max();
    let len = last.map_or(0, |i| i + FILTER_LEN);
    let bands: Vec<Vec<f64>> = trains
        .par_iter()
        .map(|t| filterbank.render(t, len))
        .collect();
    let mut samples = vec![0.0; len];
    for band in &bands {
        for (s, v) in samples.iter_mut().zip(band) {
            *s += v;
        }
    }
    RoomImpulseResponse {
        sample_rate: filterbank.sample_rate(),
        samples,
        band_trains: trains.to_vec(),
    }
}

/// Full linear convolution through the FFT; output length a + b − 1.
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let out_len = a.len() + b.len() - 1;
    let n = out_len.next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd: Arc<dyn rustfft::Fft<f64>> = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let pad = |x: &[f64]| {
        let mut v: Vec<Complex<f64>> = x.iter().map(|&r| Complex::new(r, 0.0)).collect();
        v.resize(n, Complex::new(0.0, 0.0));
        v
    };
    let mut fa = pad(a);
    let mut fb = pad(b);
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    inv.process(&mut fa);
    fa.truncate(out_len);
    fa.into_iter().map(|c| c.re / n as f64).collect()
}

/// Peak level of auralized output, dBFS.
pub const AURALIZE_PEAK_DBFS: f64 = -1.0;

/// Convolves `audio` with the broadband response and peak-normalises to
/// −1 dBFS.
pub fn auralize(rir: &RoomImpulseResponse, audio: &[f64], audio_rate: u32) -> Result<Vec<f64>> {
    if rir.sample_rate != audio_rate {
        return Err(Error::SampleRateMismatch {
            rir: rir.sample_rate,
            audio: audio_rate,
        });
    }
    if audio.is_empty() || rir.samples.is_empty() {
        return Err(Error::invalid(
            "auralization needs a non-empty signal and impulse response",
        ));
    }
    let mut out = convolve(audio, &rir.samples);
    let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        let gain = 10f64.powf(AURALIZE_PEAK_DBFS / 20.0) / peak;
        out.iter_mut().for_each(|v| *v *= gain);
    }
    Ok(out)
}
