//! Synthetic four-wavelength PPG with known hemoglobin.
//!
//! Each channel follows an exponential absorption model
//!
//! ```text
//! I(t) = i0 * exp(-w * hb * (d0 + dd * pulse(t))) + drift(t) + noise
//! pulse(t) = sin(2 pi f t) + 0.3 sin(4 pi f t)
//! ```
//!
//! with a fixed per-wavelength weight `w`. The weights are synthetic
//! constants, not physiological extinction coefficients; 660 nm is the most
//! hemoglobin-sensitive channel.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Sex, HB_SANITY_G_L};
use crate::error::{Error, Result};
use crate::signal::{PpgRecord, Wavelength};

/// Synthetic absorption weights per wavelength (660, 730, 850, 940 nm), per g/L.
pub const SYNTH_EXTINCTION: [f64; 4] = [0.0040, 0.0030, 0.0022, 0.0018];

/// Second-harmonic weight of the pulse waveform.
pub const HARMONIC_WEIGHT: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_subjects: usize,
    pub fs: f64,
    pub duration_s: f64,
    pub hb_range: (f64, f64),
    pub heart_rate_range_hz: (f64, f64),
    pub extinction: [f64; 4],
    pub i0: f64,
    pub d0: f64,
    pub delta_d: f64,
    /// Additive white noise, intensity units.
    pub noise_sd: f64,
    /// Amplitude of a slow sinusoidal baseline wander, intensity units.
    pub drift_amplitude: f64,
    pub age_range: (f64, f64),
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_subjects: 100,
            fs: 100.0,
            duration_s: 30.0,
            hb_range: (80.0, 180.0),
            heart_rate_range_hz: (1.0, 1.6),
            extinction: SYNTH_EXTINCTION,
            i0: 1000.0,
            d0: 1.0,
            delta_d: 0.02,
            noise_sd: 0.0,
            drift_amplitude: 0.0,
            age_range: (18.0, 80.0),
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSynthConfig(msg));
        let (lo, hi) = self.hb_range;
        if !(lo >= HB_SANITY_G_L.0 && hi <= HB_SANITY_G_L.1 && lo <= hi) {
            return bad(format!(
                "hb_range [{lo}, {hi}] must lie within [{}, {}]",
                HB_SANITY_G_L.0, HB_SANITY_G_L.1
            ));
        }
        let (lo, hi) = self.heart_rate_range_hz;
        if !(lo >= 0.5 && hi <= 3.0 && lo <= hi) {
            return bad(format!("heart_rate_range_hz [{lo}, {hi}] must lie within [0.5, 3]"));
        }
        if self.n_subjects == 0 {
            return bad("n_subjects must be positive".into());
        }
        if !(self.fs.is_finite() && self.fs > 10.0) {
            return bad(format!("fs {} must exceed 10 Hz", self.fs));
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return bad(format!("duration_s {} must be positive", self.duration_s));
        }
        if self.extinction.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return bad("extinction weights must be finite and non-negative".into());
        }
        if !(self.i0 > 0.0 && self.d0.is_finite() && self.delta_d.is_finite()) {
            return bad("i0 must be positive, d0 and delta_d finite".into());
        }
        if !(self.noise_sd >= 0.0 && self.drift_amplitude >= 0.0) {
            return bad("noise_sd and drift_amplitude must be non-negative".into());
        }
        let (lo, hi) = self.age_range;
        if !(lo > 0.0 && lo <= hi) {
            return bad(format!("age_range [{lo}, {hi}] must be positive"));
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        (self.duration_s * self.fs).round() as usize
    }

    /// Noise-free intensity of channel `wavelength` at pulse value `pulse`.
    pub fn intensity(&self, wavelength: Wavelength, hb: f64, pulse: f64) -> f64 {
        let w = self.extinction[wavelength.index()];
        self.i0 * (-w * hb * (self.d0 + self.delta_d * pulse)).exp()
    }

    /// Half the peak-to-peak pulsatile swing of a channel at `hb`; a natural
    /// scale for `noise_sd`.
    pub fn pulse_amplitude(&self, wavelength: Wavelength, hb: f64) -> f64 {
        let (lo, hi) = pulse_extrema();
        (self.intensity(wavelength, hb, lo) - self.intensity(wavelength, hb, hi)).abs() / 2.0
    }
}

pub fn pulse(heart_rate_hz: f64, t: f64) -> f64 {
    (2.0 * PI * heart_rate_hz * t).sin() + HARMONIC_WEIGHT * (4.0 * PI * heart_rate_hz * t).sin()
}

/// Minimum and maximum of the unit-rate pulse over one period.
pub fn pulse_extrema() -> (f64, f64) {
    // sin(x) + a sin(2x) is extremal where cos(x) + 2a cos(2x) = 0,
    // i.e. 4a c^2 + c - 2a = 0 with c = cos(x)
    let a = HARMONIC_WEIGHT;
    let disc = (1.0 + 32.0 * a * a).sqrt();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for c in [(-1.0 + disc) / (8.0 * a), (-1.0 - disc) / (8.0 * a)] {
        if c.abs() > 1.0 {
            continue;
        }
        for x in [c.acos(), -c.acos()] {
            let v = x.sin() + a * (2.0 * x).sin();
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    (lo, hi)
}

/// Per-subject draws, exposed so tests can evaluate the closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubjectDraw {
    pub hb: f64,
    pub heart_rate_hz: f64,
    pub sex: Sex,
    pub age: f64,
    pub drift_hz: f64,
    pub drift_phase: f64,
}

fn subject_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn draw(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> SubjectDraw {
    let range = |rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)| if lo == hi { lo } else { rng.random_range(lo..hi) };
    SubjectDraw {
        hb: range(rng, cfg.hb_range),
        heart_rate_hz: range(rng, cfg.heart_rate_range_hz),
        sex: if rng.random_bool(0.5) { Sex::Male } else { Sex::Female },
        age: range(rng, cfg.age_range).round(),
        drift_hz: rng.random_range(0.02..0.1),
        drift_phase: rng.random_range(0.0..2.0 * PI),
    }
}

pub fn subject_id(index: usize) -> String {
    format!("syn{:04}", index + 1)
}

/// Renders one subject's record from its draw.
pub fn render_subject(cfg: &SynthConfig, id: String, d: &SubjectDraw, rng: &mut ChaCha8Rng) -> Result<PpgRecord> {
    let n = cfg.n_samples();
    let noise = Normal::new(0.0, cfg.noise_sd).map_err(|e| Error::InvalidSynthConfig(e.to_string()))?;
    let mut channels: [Vec<f64>; 4] = Default::default();
    for w in Wavelength::ALL {
        channels[w.index()] = (0..n)
            .map(|i| {
                let t = i as f64 / cfg.fs;
                let drift = cfg.drift_amplitude * (2.0 * PI * d.drift_hz * t + d.drift_phase).sin();
                let eps = if cfg.noise_sd > 0.0 { noise.sample(rng) } else { 0.0 };
                cfg.intensity(w, d.hb, pulse(d.heart_rate_hz, t)) + drift + eps
            })
            .collect();
    }
    PpgRecord::new(id, cfg.fs, channels, d.age, d.sex, Some(d.hb))
}

/// Generates the corpus; subject `k` uses stream `k` of the seeded
/// generator, so output does not depend on thread scheduling.
pub fn generate(cfg: &SynthConfig) -> Result<Vec<PpgRecord>> {
    cfg.validate()?;
    (0..cfg.n_subjects)
        .into_par_iter()
        .map(|k| {
            let mut rng = subject_rng(cfg.seed, k);
            let d = draw(cfg, &mut rng);
            render_subject(cfg, subject_id(k), &d, &mut rng)
        })
        .collect()
}

/// The draws `generate` would make, without rendering signals.
pub fn draws(cfg: &SynthConfig) -> Result<Vec<SubjectDraw>> {
    cfg.validate()?;
    Ok((0..cfg.n_subjects)
        .map(|k| draw(cfg, &mut subject_rng(cfg.seed, k)))
        .collect())
}
