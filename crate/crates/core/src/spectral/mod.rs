//! Spectrograms, time smoothing, SNR maps and sweep-vs-static enhancement.

mod window;

use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::chirp::{ChirpSpec, TimeSeries};
use crate::error::{Error, Result};

pub use window::{windows, Blackman, Hamming, Hann, Rectangular, WindowFunction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StftParams {
    pub window_len: usize,
    /// Fractional overlap of consecutive frames, in [0, 1).
    pub overlap: f64,
    pub window: String,
}

impl Default for StftParams {
    fn default() -> Self {
        Self {
            window_len: 4096,
            overlap: 0.5,
            window: "hann".into(),
        }
    }
}

/// Everything needed to recompute a spectrogram from the same record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowMeta {
    pub len: usize,
    pub hop: usize,
    pub overlap: f64,
    pub window: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// One-sided PSD, units^2/Hz.
    Psd,
    /// (signal - background) / background.
    Snr,
}

/// Time x frequency map, stored row-major with one row per time slice.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub time_bins_s: Vec<f64>,
    pub freq_bins_hz: Vec<f64>,
    pub power: Vec<f64>,
    pub meta: WindowMeta,
    pub quantity: Quantity,
    pub config_digest: Option<String>,
}

impl Spectrogram {
    pub fn n_times(&self) -> usize {
        self.time_bins_s.len()
    }

    pub fn n_freqs(&self) -> usize {
        self.freq_bins_hz.len()
    }

    pub fn row(&self, t: usize) -> &[f64] {
        let n = self.n_freqs();
        &self.power[t * n..(t + 1) * n]
    }

    pub fn df(&self) -> f64 {
        self.freq_bins_hz[1] - self.freq_bins_hz[0]
    }

    pub fn bin_of(&self, freq_hz: f64) -> usize {
        ((freq_hz / self.df()).round().max(0.0) as usize).min(self.n_freqs() - 1)
    }

    fn same_axes(&self, other: &Spectrogram) -> Result<()> {
        if self.time_bins_s != other.time_bins_s || self.freq_bins_hz != other.freq_bins_hz {
            return Err(Error::AxisMismatch("time or frequency bins differ".into()));
        }
        if self.meta != other.meta {
            return Err(Error::AxisMismatch(format!(
                "window metadata differs: {:?} vs {:?}",
                self.meta, other.meta
            )));
        }
        if self.config_digest != other.config_digest {
            return Err(Error::AxisMismatch("inputs come from different configurations".into()));
        }
        Ok(())
    }
}

/// Short-time one-sided PSD using the named window from [`windows`].
pub fn spectrogram(ts: &TimeSeries, params: &StftParams) -> Result<Spectrogram> {
    let win = windows().get(&params.window)?;
    spectrogram_with(ts, params.window_len, params.overlap, &*win)
}

pub fn spectrogram_with(
    ts: &TimeSeries,
    window_len: usize,
    overlap: f64,
    window: &dyn WindowFunction,
) -> Result<Spectrogram> {
    if window_len < 2 || window_len > ts.len() {
        return Err(Error::invalid(
            "window_len",
            format!("must lie in [2, {}], got {window_len}", ts.len()),
        ));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::invalid("overlap", format!("must lie in [0, 1), got {overlap}")));
    }
    let hop = ((window_len as f64) * (1.0 - overlap)).round().max(1.0) as usize;
    let n_frames = (ts.len() - window_len) / hop + 1;
    let n_freqs = window_len / 2 + 1;
    let fs = ts.fs_hz;
    let w = window.coefficients(window_len);
    let norm = 1.0 / (fs * w.iter().map(|v| v * v).sum::<f64>());
    let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_forward(window_len);

    let mut power = vec![0.0; n_frames * n_freqs];
    power
        .par_chunks_mut(n_freqs)
        .enumerate()
        .for_each_init(
            || (vec![C64::default(); window_len], vec![C64::default(); fft.get_inplace_scratch_len()]),
            |(buf, scratch), (i, row)| {
                let frame = &ts.samples[i * hop..i * hop + window_len];
                for ((b, x), c) in buf.iter_mut().zip(frame).zip(&w) {
                    *b = C64::new(x * c, 0.0);
                }
                fft.process_with_scratch(buf, scratch);
                for (k, p) in row.iter_mut().enumerate() {
                    let edge = k == 0 || (window_len % 2 == 0 && k == window_len / 2);
                    *p = buf[k].norm_sqr() * norm * if edge { 1.0 } else { 2.0 };
                }
            },
        );

    Ok(Spectrogram {
        time_bins_s: (0..n_frames)
            .map(|i| (i * hop) as f64 / fs + 0.5 * window_len as f64 / fs)
            .collect(),
        freq_bins_hz: (0..n_freqs).map(|k| k as f64 * fs / window_len as f64).collect(),
        power,
        meta: WindowMeta {
            len: window_len,
            hop,
            overlap,
            window: window.name().to_string(),
        },
        quantity: Quantity::Psd,
        config_digest: ts.provenance.config_digest.clone(),
    })
}

/// Centered running mean over `window` time slices, truncated at the edges.
pub fn moving_average_time(spec: &Spectrogram, window: usize) -> Result<Spectrogram> {
    let nt = spec.n_times();
    if window == 0 || window > nt {
        return Err(Error::invalid(
            "moving_average",
            format!("window must lie in [1, {nt}], got {window}"),
        ));
    }
    if window == 1 {
        return Ok(spec.clone());
    }
    let nf = spec.n_freqs();
    let before = (window - 1) / 2;
    let after = window - 1 - before;
    let mut power = vec![0.0; spec.power.len()];
    power.par_chunks_mut(nf).enumerate().for_each(|(t, row)| {
        let lo = t.saturating_sub(before);
        let hi = (t + after).min(nt - 1);
        for s in lo..=hi {
            for (o, v) in row.iter_mut().zip(spec.row(s)) {
                *o += v;
            }
        }
        let inv = 1.0 / (hi - lo + 1) as f64;
        row.iter_mut().for_each(|o| *o *= inv);
    });
    Ok(Spectrogram {
        power,
        ..spec.clone()
    })
}

/// `(S - B) / B` bin by bin.
pub fn snr_map(signal: &Spectrogram, background: &Spectrogram) -> Result<Spectrogram> {
    signal.same_axes(background)?;
    if let Some(i) = background.power.iter().position(|&b| !(b > 0.0)) {
        let nf = background.n_freqs();
        return Err(Error::Domain(format!(
            "background bin ({} s, {} Hz) is {}",
            background.time_bins_s[i / nf],
            background.freq_bins_hz[i % nf],
            background.power[i]
        )));
    }
    let power = signal
        .power
        .iter()
        .zip(&background.power)
        .map(|(s, b)| (s - b) / b)
        .collect();
    Ok(Spectrogram {
        power,
        quantity: Quantity::Snr,
        ..signal.clone()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrTrack {
    pub time_bins_s: Vec<f64>,
    pub track_freq_hz: Vec<f64>,
    pub snr: Vec<f64>,
    pub config_digest: Option<String>,
}

impl SnrTrack {
    /// Track frequency at the largest SNR (first one on ties).
    pub fn argmax_freq_hz(&self) -> f64 {
        let i = (0..self.snr.len())
            .rev()
            .max_by(|a, b| self.snr[*a].total_cmp(&self.snr[*b]))
            .expect("nonempty track");
        self.track_freq_hz[i]
    }

    /// Midpoint of the span where the SNR is at least half its maximum.
    ///
    /// The moving average and the band maximum give the track a flat top, so
    /// this locates a peak more stably than the argmax.
    pub fn peak_freq_hz(&self) -> f64 {
        let max = self.snr.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let above: Vec<usize> = (0..self.snr.len()).filter(|&i| self.snr[i] >= 0.5 * max).collect();
        let (lo, hi) = (above[0], above[above.len() - 1]);
        0.5 * (self.track_freq_hz[lo] + self.track_freq_hz[hi])
    }
}

/// Per slice, the maximum of `map` within `half_band_hz` of `track(t)`.
pub fn track_max(
    map: &Spectrogram,
    track: impl Fn(f64) -> f64,
    half_band_hz: f64,
) -> Result<SnrTrack> {
    let df = map.df();
    if !(half_band_hz >= df * (1.0 - 1e-12)) {
        return Err(Error::invalid(
            "half_band",
            format!("{half_band_hz} Hz is narrower than one bin ({df} Hz)"),
        ));
    }
    let f_max = *map.freq_bins_hz.last().expect("nonempty axis");
    let mut freqs = Vec::with_capacity(map.n_times());
    let mut snr = Vec::with_capacity(map.n_times());
    for (t, &time) in map.time_bins_s.iter().enumerate() {
        let f = track(time);
        if !(f >= 0.0 && f <= f_max) {
            return Err(Error::invalid(
                "track",
                format!("track frequency {f} Hz at {time} s outside [0, {f_max}] Hz"),
            ));
        }
        let lo = ((f - half_band_hz) / df - 1e-9).ceil().max(0.0) as usize;
        let hi = (((f + half_band_hz) / df + 1e-9).floor() as usize).min(map.n_freqs() - 1);
        let best = map.row(t)[lo..=hi]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        if !best.is_finite() {
            return Err(Error::NonFinite(format!("SNR at {time} s")));
        }
        freqs.push(f);
        snr.push(best);
    }
    Ok(SnrTrack {
        time_bins_s: map.time_bins_s.clone(),
        track_freq_hz: freqs,
        snr,
        config_digest: map.config_digest.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Enhancement {
    pub time_s: Vec<f64>,
    pub freq_hz: Vec<f64>,
    /// Sweep over static SNR; `None` where the static SNR is not positive.
    pub ratio: Vec<Option<f64>>,
    pub mean: f64,
    pub max: f64,
    pub argmax_freq_hz: f64,
    pub excluded_count: usize,
}

pub fn enhancement(sweep: &SnrTrack, static_track: &SnrTrack) -> Result<Enhancement> {
    if sweep.time_bins_s != static_track.time_bins_s {
        return Err(Error::AxisMismatch("sweep and static tracks have different time bins".into()));
    }
    if sweep.config_digest != static_track.config_digest {
        return Err(Error::AxisMismatch("tracks come from different configurations".into()));
    }
    let ratio: Vec<Option<f64>> = sweep
        .snr
        .iter()
        .zip(&static_track.snr)
        .map(|(s, st)| (*st > 0.0).then(|| s / st))
        .collect();
    let kept: Vec<(usize, f64)> = ratio
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.map(|v| (i, v)))
        .collect();
    if kept.is_empty() {
        return Err(Error::Domain("static SNR is nonpositive in every slice".into()));
    }
    let mean = kept.iter().map(|(_, v)| v).sum::<f64>() / kept.len() as f64;
    let (imax, max) = kept
        .iter()
        .copied()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    Ok(Enhancement {
        time_s: sweep.time_bins_s.clone(),
        freq_hz: sweep.track_freq_hz.clone(),
        excluded_count: ratio.len() - kept.len(),
        ratio,
        mean,
        max,
        argmax_freq_hz: sweep.track_freq_hz[imax],
    })
}

/// Settings for turning a signal/background pair into an SNR track.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisParams {
    pub window_len: usize,
    pub overlap: f64,
    pub window: String,
    /// Moving-average length in time slices.
    pub moving_average: usize,
    /// Track search half-width in frequency bins.
    pub half_band_bins: usize,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        let stft = StftParams::default();
        Self {
            window_len: stft.window_len,
            overlap: stft.overlap,
            window: stft.window,
            moving_average: 100,
            half_band_bins: 5,
        }
    }
}

impl AnalysisParams {
    pub fn stft(&self) -> StftParams {
        StftParams {
            window_len: self.window_len,
            overlap: self.overlap,
            window: self.window.clone(),
        }
    }
}

/// Spectrogram, smoothing, SNR map and track maximum along the chirp.
pub fn chirp_snr_track(
    signal: &TimeSeries,
    background: &TimeSeries,
    chirp: &ChirpSpec,
    params: &AnalysisParams,
) -> Result<SnrTrack> {
    if signal.provenance.schedule_digest != background.provenance.schedule_digest {
        return Err(Error::AxisMismatch("signal and background used different schedules".into()));
    }
    let stft = params.stft();
    let s = moving_average_time(&spectrogram(signal, &stft)?, params.moving_average)?;
    let b = moving_average_time(&spectrogram(background, &stft)?, params.moving_average)?;
    let map = snr_map(&s, &b)?;
    let half_band = params.half_band_bins as f64 * map.df();
    track_max(&map, |t| chirp.instantaneous_freq(t), half_band)
}
