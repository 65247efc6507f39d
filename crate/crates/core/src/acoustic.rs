//! Frame-level acoustic descriptors: smoothed f0, RMS energy, loudness,
//! voicing probability and harmonics-to-noise ratio, computed on 20 ms
//! frames with a 10 ms hop.

use crate::error::{Error, Result};
use crate::wav::AudioSignal;

pub const FRAME_LEN: f64 = 0.020;
pub const HOP: f64 = 0.010;
pub const N_ACOUSTIC: usize = 5;

pub const MIN_F0: f64 = 50.0;
pub const MAX_F0: f64 = 500.0;
pub const VOICING_THRESHOLD: f64 = 0.45;
pub const HNR_MIN: f64 = -10.0;
pub const HNR_MAX: f64 = 40.0;
const LOUDNESS_EXPONENT: f64 = 0.3;
/// A later lag only wins over an earlier local peak if it is this much stronger.
const OCTAVE_RATIO: f64 = 0.95;

/// Raw (unnormalized) descriptors of one frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FrameFeatures {
    /// Hz, 0 when unvoiced.
    pub f0: f64,
    pub rms: f64,
    pub loudness: f64,
    pub voicing: f64,
    /// dB in [HNR_MIN, HNR_MAX].
    pub hnr: f64,
}

impl FrameFeatures {
    pub fn to_array(&self) -> [f64; N_ACOUSTIC] {
        [self.f0, self.rms, self.loudness, self.voicing, self.hnr]
    }

    pub fn is_voiced(&self) -> bool {
        self.f0 > 0.0
    }
}

/// Per-utterance z-scored features, one row per frame, in the column order
/// f0, rms, loudness, voicing, hnr.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    pub features: Vec<[f32; N_ACOUSTIC]>,
    pub frame_len: f64,
    pub hop: f64,
}

impl FrameSequence {
    pub fn new(features: Vec<[f32; N_ACOUSTIC]>) -> Self {
        FrameSequence {
            features,
            frame_len: FRAME_LEN,
            hop: HOP,
        }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchEstimate {
    pub f0: f64,
    pub voicing: f64,
    pub hnr: f64,
}

pub fn frame_geometry(sample_rate: u32) -> (usize, usize) {
    let frame = (FRAME_LEN * sample_rate as f64).round() as usize;
    let hop = (HOP * sample_rate as f64).round() as usize;
    (frame, hop)
}

pub fn frame_count(n_samples: usize, sample_rate: u32) -> usize {
    let (frame, hop) = frame_geometry(sample_rate);
    if n_samples <= frame {
        1
    } else {
        (n_samples - frame) / hop + 1
    }
}

/// Splits the signal into overlapping windows. A signal shorter than one
/// frame yields a single zero-padded window.
pub fn frame_signal(signal: &AudioSignal) -> Result<Vec<Vec<f32>>> {
    if signal.samples.is_empty() {
        return Err(Error::EmptySignal);
    }
    if signal.sample_rate < 8000 {
        return Err(Error::SampleRateTooLow(signal.sample_rate));
    }
    let (frame, hop) = frame_geometry(signal.sample_rate);
    let n = frame_count(signal.samples.len(), signal.sample_rate);
    Ok((0..n)
        .map(|i| {
            let start = i * hop;
            let end = (start + frame).min(signal.samples.len());
            let mut w = signal.samples[start..end].to_vec();
            w.resize(frame, 0.0);
            w
        })
        .collect())
}

fn unvoiced(voicing: f64) -> PitchEstimate {
    PitchEstimate {
        f0: 0.0,
        voicing: voicing.clamp(0.0, 1.0),
        hnr: HNR_MIN,
    }
}

/// Normalized autocorrelation pitch estimate.
///
/// `r(lag)` is the normalized correlation between the window and its copy
/// shifted by `lag`, over the overlapping part. Lags span 50 to 500 Hz, capped
/// at half the window so at least half the samples overlap. The first local
/// peak within 5% of the global maximum is taken, which avoids picking a
/// multiple of the true period.
pub fn autocorrelation_pitch(window: &[f32], rate: u32) -> PitchEstimate {
    let n = window.len();
    if n < 4 {
        return unvoiced(0.0);
    }
    let mean = window.iter().map(|&x| x as f64).sum::<f64>() / n as f64;
    let x: Vec<f64> = window.iter().map(|&v| v as f64 - mean).collect();

    // prefix[i] = sum of x[..i]^2
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in &x {
        prefix.push(prefix.last().unwrap() + v * v);
    }
    if prefix[n] <= 1e-20 {
        return unvoiced(0.0);
    }

    let rate_f = rate as f64;
    let min_lag = ((rate_f / MAX_F0).ceil() as usize).max(1);
    let max_lag = ((rate_f / MIN_F0).floor() as usize).min(n / 2);
    if min_lag > max_lag {
        return unvoiced(0.0);
    }

    let r: Vec<f64> = (min_lag..=max_lag)
        .map(|lag| {
            let m = n - lag;
            let num: f64 = x[..m].iter().zip(&x[lag..]).map(|(a, b)| a * b).sum();
            let e0 = prefix[m];
            let e1 = prefix[n] - prefix[lag];
            let den = (e0 * e1).sqrt();
            if den <= 1e-20 {
                0.0
            } else {
                num / den
            }
        })
        .collect();

    let global = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let is_peak = |i: usize| {
        let left = i == 0 || r[i] >= r[i - 1];
        let right = i + 1 == r.len() || r[i] >= r[i + 1];
        left && right
    };
    let best = (0..r.len())
        .find(|&i| is_peak(i) && r[i] >= OCTAVE_RATIO * global)
        .unwrap_or_else(|| r.iter().position(|&v| v == global).unwrap());
    let peak = r[best];

    if peak < VOICING_THRESHOLD {
        return unvoiced(peak);
    }
    let hnr = if peak >= 1.0 {
        HNR_MAX
    } else {
        (10.0 * (peak / (1.0 - peak)).log10()).clamp(HNR_MIN, HNR_MAX)
    };
    PitchEstimate {
        f0: rate_f / (min_lag + best) as f64,
        voicing: peak.clamp(0.0, 1.0),
        hnr,
    }
}

/// RMS energy and a power-law loudness approximation.
pub fn frame_energy(window: &[f32]) -> (f64, f64) {
    if window.is_empty() {
        return (0.0, 0.0);
    }
    let ms = window.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>() / window.len() as f64;
    let rms = ms.sqrt();
    (rms, rms.powf(LOUDNESS_EXPONENT))
}

/// Width-5 median filter applied independently to each voiced run; the
/// window shrinks symmetrically near run edges and unvoiced zeros stay put.
pub fn smooth_f0(track: &[f64]) -> Vec<f64> {
    let mut out = track.to_vec();
    let mut i = 0;
    while i < track.len() {
        if track[i] <= 0.0 {
            i += 1;
            continue;
        }
        let start = i;
        while i < track.len() && track[i] > 0.0 {
            i += 1;
        }
        let run = &track[start..i];
        for (j, slot) in out[start..i].iter_mut().enumerate() {
            let half = 2.min(j).min(run.len() - 1 - j);
            let mut w = run[j - half..=j + half].to_vec();
            w.sort_by(|a, b| a.total_cmp(b));
            *slot = w[half];
        }
    }
    out
}

/// Raw descriptors for every frame, with f0 smoothed.
pub fn describe_frames(signal: &AudioSignal) -> Result<Vec<FrameFeatures>> {
    let windows = frame_signal(signal)?;
    let mut frames: Vec<FrameFeatures> = windows
        .iter()
        .map(|w| {
            let p = autocorrelation_pitch(w, signal.sample_rate);
            let (rms, loudness) = frame_energy(w);
            FrameFeatures {
                f0: p.f0,
                rms,
                loudness,
                voicing: p.voicing,
                hnr: p.hnr,
            }
        })
        .collect();
    let f0: Vec<f64> = frames.iter().map(|f| f.f0).collect();
    for (f, s) in frames.iter_mut().zip(smooth_f0(&f0)) {
        f.f0 = s;
    }
    Ok(frames)
}

/// Z-scores each descriptor over the utterance; a constant column becomes zeros.
pub fn normalize(frames: &[FrameFeatures]) -> FrameSequence {
    let n = frames.len().max(1) as f64;
    let mut mean = [0.0; N_ACOUSTIC];
    let mut var = [0.0; N_ACOUSTIC];
    for f in frames {
        for (m, v) in mean.iter_mut().zip(f.to_array()) {
            *m += v / n;
        }
    }
    for f in frames {
        for ((s, m), v) in var.iter_mut().zip(&mean).zip(f.to_array()) {
            *s += (v - m) * (v - m) / n;
        }
    }
    let std: Vec<f64> = var.iter().map(|v| v.sqrt()).collect();
    let features = frames
        .iter()
        .map(|f| {
            let mut row = [0.0f32; N_ACOUSTIC];
            for (k, v) in f.to_array().into_iter().enumerate() {
                if std[k] > 1e-9 {
                    row[k] = ((v - mean[k]) / std[k]) as f32;
                }
            }
            row
        })
        .collect();
    FrameSequence::new(features)
}

pub fn extract_features(signal: &AudioSignal) -> Result<FrameSequence> {
    Ok(normalize(&describe_frames(signal)?))
}
