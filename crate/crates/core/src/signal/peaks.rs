//! Systolic peak and diastolic trough detection on bandpassed pulses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PeakConfig {
    /// Highest pulse rate accepted; sets the minimum peak spacing `fs / max_rate_hz`.
    pub max_rate_hz: f64,
    /// Minimum prominence as a multiple of the window's standard deviation.
    pub prominence_sd: f64,
}

impl Default for PeakConfig {
    fn default() -> Self {
        Self {
            max_rate_hz: 3.0,
            prominence_sd: 0.25,
        }
    }
}

/// Peak indices and the single trough between each consecutive pair.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PulseLandmarks {
    pub peaks: Vec<usize>,
    pub troughs: Vec<usize>,
}

impl PulseLandmarks {
    /// Mean pulse rate implied by the peak spacing.
    pub fn rate_hz(&self, fs: f64) -> f64 {
        let (Some(first), Some(last)) = (self.peaks.first(), self.peaks.last()) else {
            return 0.0;
        };
        let intervals = (self.peaks.len() - 1) as f64;
        fs * intervals / (last - first) as f64
    }
}

/// Finds systolic peaks in a zero-mean filtered window.
///
/// Returns [`Error::InsufficientPulses`] when fewer than two peaks survive
/// the prominence and spacing rules.
pub fn detect_peaks_troughs(x: &[f64], fs: f64, config: &PeakConfig) -> Result<PulseLandmarks> {
    let n = x.len();
    if n < 3 {
        return Err(Error::InsufficientPulses { found: 0 });
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    if !(sd.is_finite() && sd > 0.0) {
        return Err(Error::InsufficientPulses { found: 0 });
    }

    let min_prominence = config.prominence_sd * sd;
    let candidates: Vec<usize> = local_maxima(x)
        .into_iter()
        .filter(|&p| prominence(x, p) >= min_prominence)
        .collect();

    let distance = (fs / config.max_rate_hz).ceil().max(1.0) as usize;
    let peaks = enforce_distance(x, &candidates, distance);
    if peaks.len() < 2 {
        return Err(Error::InsufficientPulses { found: peaks.len() });
    }

    let troughs = peaks
        .windows(2)
        .map(|w| {
            (w[0] + 1..w[1])
                .min_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)))
                .expect("peaks are at least one sample apart")
        })
        .collect();
    Ok(PulseLandmarks { peaks, troughs })
}

/// Strict local maxima; flat tops report their middle sample.
fn local_maxima(x: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    let last = x.len() - 1;
    let mut i = 1;
    while i < last {
        if x[i] > x[i - 1] {
            let mut j = i;
            while j < last && x[j + 1] == x[i] {
                j += 1;
            }
            if j < last && x[j + 1] < x[i] {
                out.push((i + j) / 2);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

/// Height above the higher of the two bases reached before climbing past the peak.
fn prominence(x: &[f64], peak: usize) -> f64 {
    let h = x[peak];
    let mut left_min = h;
    for &v in x[..peak].iter().rev() {
        if v > h {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = h;
    for &v in &x[peak + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

/// Keeps the tallest peaks, discarding any closer than `distance` to a kept one.
fn enforce_distance(x: &[f64], candidates: &[usize], distance: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        x[candidates[b]]
            .total_cmp(&x[candidates[a]])
            .then(candidates[a].cmp(&candidates[b]))
    });
    let mut keep = vec![true; candidates.len()];
    for &i in &order {
        if !keep[i] {
            continue;
        }
        for (j, k) in keep.iter_mut().enumerate() {
            if j != i && candidates[i].abs_diff(candidates[j]) < distance {
                *k = false;
            }
        }
    }
    candidates
        .iter()
        .zip(keep)
        .filter_map(|(&c, k)| k.then_some(c))
        .collect()
}
