//! Welch power spectral density and band-power quality indices.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Finite stand-in for an infinite SNR in serialized output.
pub const SNR_SATURATION_DB: f64 = 999.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    Hann,
    Rectangular,
}

impl WindowKind {
    /// Periodic (DFT-even) window of length `n`.
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            WindowKind::Hann => (0..n)
                .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
                .collect(),
            WindowKind::Rectangular => vec![1.0; n],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WelchConfig {
    pub nperseg: usize,
    pub overlap: f64,
    pub window: WindowKind,
    /// Subtract each sub-window's mean before the transform.
    #[serde(default)]
    pub detrend: bool,
}

impl Default for WelchConfig {
    fn default() -> Self {
        Self {
            nperseg: 250,
            overlap: 0.5,
            window: WindowKind::Hann,
            detrend: false,
        }
    }
}

/// One-sided power spectral density.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsdEstimate {
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
}

impl PsdEstimate {
    pub fn bin_width(&self) -> f64 {
        match self.freqs.as_slice() {
            [a, b, ..] => b - a,
            _ => 0.0,
        }
    }

    /// Integrated power of the bins whose centers lie in `[low, high]`.
    pub fn band_power(&self, low: f64, high: f64) -> f64 {
        self.freqs
            .iter()
            .zip(&self.power)
            .filter(|(f, _)| **f >= low && **f <= high)
            .map(|(_, p)| p)
            .sum::<f64>()
            * self.bin_width()
    }

    /// Integrated power of the bins outside `[low, high]`.
    pub fn out_of_band_power(&self, low: f64, high: f64) -> f64 {
        self.freqs
            .iter()
            .zip(&self.power)
            .filter(|(f, _)| **f < low || **f > high)
            .map(|(_, p)| p)
            .sum::<f64>()
            * self.bin_width()
    }

    pub fn total_power(&self) -> f64 {
        self.power.iter().sum::<f64>() * self.bin_width()
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }
}

/// Averaged modified periodogram with density scaling, so that
/// `sum(power) * bin_width` approximates the signal's mean square.
pub fn welch_psd(samples: &[f64], fs: f64, config: &WelchConfig) -> Result<PsdEstimate> {
    let nperseg = config.nperseg;
    if nperseg < 2 {
        return Err(Error::InvalidWelch(format!("nperseg {nperseg} < 2")));
    }
    if !(0.0..1.0).contains(&config.overlap) {
        return Err(Error::InvalidWelch(format!(
            "overlap fraction {} outside [0, 1)",
            config.overlap
        )));
    }
    if nperseg > samples.len() {
        return Err(Error::SegmentTooShort {
            len: samples.len(),
            nperseg,
        });
    }

    let window = config.window.coefficients(nperseg);
    let win_sq: f64 = window.iter().map(|w| w * w).sum();
    let noverlap = ((nperseg as f64) * config.overlap).floor() as usize;
    let step = (nperseg - noverlap).max(1);
    let n_windows = (samples.len() - nperseg) / step + 1;
    let n_bins = nperseg / 2 + 1;

    let fft = FftPlanner::<f64>::new().plan_fft_forward(nperseg);
    let mut buf = vec![Complex64::default(); nperseg];
    let mut power = vec![0.0; n_bins];
    for w in 0..n_windows {
        let chunk = &samples[w * step..w * step + nperseg];
        let offset = if config.detrend {
            chunk.iter().sum::<f64>() / nperseg as f64
        } else {
            0.0
        };
        for ((b, x), win) in buf.iter_mut().zip(chunk).zip(&window) {
            *b = Complex64::new((x - offset) * win, 0.0);
        }
        fft.process(&mut buf);
        for (p, c) in power.iter_mut().zip(&buf) {
            *p += c.norm_sqr();
        }
    }

    let scale = 1.0 / (fs * win_sq * n_windows as f64);
    for (k, p) in power.iter_mut().enumerate() {
        *p *= scale;
        let nyquist_bin = nperseg.is_multiple_of(2) && k == nperseg / 2;
        if k != 0 && !nyquist_bin {
            *p *= 2.0;
        }
    }
    let freqs = (0..n_bins).map(|k| k as f64 * fs / nperseg as f64).collect();
    Ok(PsdEstimate { freqs, power })
}

/// Band-power signal quality of one window.
///
/// `snr_db` is `+inf` when there is no out-of-band power and `-inf` when
/// the spectrum is identically zero; both serialize as
/// `±SNR_SATURATION_DB` with `snr_saturated = true`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityIndices {
    pub snr_db: f64,
    pub sqi: f64,
}

impl QualityIndices {
    pub fn snr_saturated(&self) -> bool {
        self.snr_db.is_infinite()
    }

    /// SNR with infinities replaced by the saturation sentinel.
    pub fn snr_db_finite(&self) -> f64 {
        if self.snr_db.is_infinite() {
            SNR_SATURATION_DB.copysign(self.snr_db)
        } else {
            self.snr_db
        }
    }
}

#[derive(Serialize, Deserialize)]
struct QualityRepr {
    snr_db: f64,
    sqi: f64,
    snr_saturated: bool,
}

impl Serialize for QualityIndices {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        QualityRepr {
            snr_db: self.snr_db_finite(),
            sqi: self.sqi,
            snr_saturated: self.snr_saturated(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for QualityIndices {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = QualityRepr::deserialize(d)?;
        let snr_db = if r.snr_saturated {
            f64::INFINITY.copysign(r.snr_db)
        } else {
            r.snr_db
        };
        Ok(Self { snr_db, sqi: r.sqi })
    }
}

/// SNR and SQI of `samples`, treating `band` as signal and every other bin
/// (DC included) as noise.
pub fn quality_indices(
    samples: &[f64],
    fs: f64,
    band: (f64, f64),
    welch: &WelchConfig,
) -> Result<QualityIndices> {
    let psd = welch_psd(samples, fs, welch)?;
    Ok(quality_from_psd(&psd, band))
}

pub fn quality_from_psd(psd: &PsdEstimate, band: (f64, f64)) -> QualityIndices {
    let in_band = psd.band_power(band.0, band.1);
    let out_band = psd.out_of_band_power(band.0, band.1);
    let total = in_band + out_band;
    if total <= 0.0 {
        return QualityIndices {
            snr_db: f64::NEG_INFINITY,
            sqi: 0.0,
        };
    }
    let snr_db = if out_band <= 0.0 {
        f64::INFINITY
    } else if in_band <= 0.0 {
        f64::NEG_INFINITY
    } else {
        10.0 * (in_band / out_band).log10()
    };
    QualityIndices {
        snr_db,
        sqi: (in_band / total).clamp(0.0, 1.0),
    }
}
