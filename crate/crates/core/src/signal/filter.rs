//! Butterworth bandpass design (bilinear transform with pre-warping) and
//! zero-phase application over cascaded second-order sections.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Segment, BAND_HIGH_HZ, BAND_LOW_HZ};
use crate::error::{Error, Result};

/// Bandpass request: edges in Hz and prototype order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterSpec {
    pub low_hz: f64,
    pub high_hz: f64,
    pub order: usize,
}

impl Default for FilterSpec {
    fn default() -> Self {
        Self {
            low_hz: BAND_LOW_HZ,
            high_hz: BAND_HIGH_HZ,
            order: 3,
        }
    }
}

/// Second-order section, `a[0]` normalized to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    fn response(&self, zinv: Complex64) -> Complex64 {
        let zinv2 = zinv * zinv;
        let num = self.b[0] + zinv * self.b[1] + zinv2 * self.b[2];
        let den = self.a[0] + zinv * self.a[1] + zinv2 * self.a[2];
        num / den
    }

    fn dc_gain(&self) -> f64 {
        self.b.iter().sum::<f64>() / self.a.iter().sum::<f64>()
    }

    /// Direct form II transposed state reached after a constant input `u`.
    fn steady_state(&self, u: f64) -> [f64; 2] {
        let y = u * self.dc_gain();
        [
            (self.b[1] + self.b[2]) * u - (self.a[1] + self.a[2]) * y,
            self.b[2] * u - self.a[2] * y,
        ]
    }

    fn run(&self, x: &mut [f64], mut state: [f64; 2]) {
        let [b0, b1, b2] = self.b;
        let [_, a1, a2] = self.a;
        for v in x.iter_mut() {
            let input = *v;
            let y = b0 * input + state[0];
            state[0] = b1 * input - a1 * y + state[1];
            state[1] = b2 * input - a2 * y;
            *v = y;
        }
    }
}

/// A designed digital bandpass: sampling rate, request and SOS cascade.
#[derive(Debug, Clone, PartialEq)]
pub struct BandpassDesign {
    pub fs: f64,
    pub spec: FilterSpec,
    pub sections: Vec<Biquad>,
    poles: Vec<Complex64>,
}

/// Designs a digital Butterworth bandpass of `spec.order` (the analog
/// lowpass prototype order; the digital filter has twice that many poles).
pub fn design_bandpass(fs: f64, spec: FilterSpec) -> Result<BandpassDesign> {
    let nyquist = fs / 2.0;
    if !(spec.low_hz > 0.0 && spec.low_hz < spec.high_hz && spec.high_hz < nyquist) {
        return Err(Error::InvalidBand {
            low: spec.low_hz,
            high: spec.high_hz,
            nyquist,
        });
    }
    let order = spec.order;
    if order == 0 {
        return Err(Error::InvalidOrder(order));
    }

    // pre-warped analog edges, rad/s
    let fs2 = 2.0 * fs;
    let warp = |f: f64| fs2 * (PI * f / fs).tan();
    let (wl, wh) = (warp(spec.low_hz), warp(spec.high_hz));
    let bw = wh - wl;
    let w0_sq = wl * wh;

    // lowpass prototype poles on the left half of the unit circle
    let prototype = (0..order).map(|k| {
        let m = 2.0 * k as f64 - order as f64 + 1.0;
        -Complex64::from_polar(1.0, PI * m / (2.0 * order as f64))
    });

    let mut analog = Vec::with_capacity(2 * order);
    for p in prototype {
        let scaled = p * (bw / 2.0);
        let disc = (scaled * scaled - w0_sq).sqrt();
        analog.push(scaled + disc);
        analog.push(scaled - disc);
    }

    // bilinear map; the N analog zeros at s = 0 land on z = 1 and the N at
    // infinity on z = -1
    let poles: Vec<Complex64> = analog.iter().map(|&s| (fs2 + s) / (fs2 - s)).collect();
    let denom: Complex64 = analog.iter().map(|&s| fs2 - s).product();
    let gain = (bw.powi(order as i32) * fs2.powi(order as i32) / denom).re;

    let mut sections = pair_poles(&poles)
        .into_iter()
        .map(|a| Biquad {
            b: [1.0, 0.0, -1.0],
            a,
        })
        .collect::<Vec<_>>();
    debug_assert_eq!(sections.len(), order);
    for b in sections[0].b.iter_mut() {
        *b *= gain;
    }

    Ok(BandpassDesign {
        fs,
        spec,
        sections,
        poles,
    })
}

/// Groups conjugate pairs (and leftover real poles two at a time) into
/// denominator polynomials `[1, a1, a2]`.
fn pair_poles(poles: &[Complex64]) -> Vec<[f64; 3]> {
    let tol = 1e-12;
    let mut out = Vec::new();
    let mut reals = Vec::new();
    for p in poles {
        if p.im.abs() <= tol * p.norm().max(1.0) {
            reals.push(p.re);
        } else if p.im > 0.0 {
            out.push([1.0, -2.0 * p.re, p.norm_sqr()]);
        }
    }
    reals.sort_by(f64::total_cmp);
    for pair in reals.chunks(2) {
        match pair {
            [p1, p2] => out.push([1.0, -(p1 + p2), p1 * p2]),
            [p] => out.push([1.0, -p, 0.0]),
            _ => unreachable!(),
        }
    }
    out
}

impl BandpassDesign {
    /// Complex single-pass frequency response at `f_hz`.
    pub fn response(&self, f_hz: f64) -> Complex64 {
        let zinv = Complex64::from_polar(1.0, -2.0 * PI * f_hz / self.fs);
        self.sections.iter().map(|s| s.response(zinv)).product()
    }

    /// Single-pass magnitude response at `f_hz`.
    pub fn magnitude(&self, f_hz: f64) -> f64 {
        self.response(f_hz).norm()
    }

    pub fn poles(&self) -> &[Complex64] {
        &self.poles
    }

    /// Samples needed for the slowest pole to decay by 60 dB.
    pub fn impulse_len(&self) -> usize {
        let r = self.poles.iter().map(|p| p.norm()).fold(0.0_f64, f64::max);
        if r <= 0.0 {
            return 1;
        }
        ((1e-3_f64).ln() / r.ln()).ceil().max(1.0) as usize
    }

    /// Causal single pass from a zero state.
    pub fn filter_forward(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        for s in &self.sections {
            s.run(&mut y, [0.0; 2]);
        }
        y
    }

    /// One pass with each section started in the steady state of a constant
    /// input equal to the first sample.
    fn filter_steady(&self, x: &mut [f64]) {
        let Some(&first) = x.first() else { return };
        let mut u = first;
        for s in &self.sections {
            let state = s.steady_state(u);
            u *= s.dc_gain();
            s.run(x, state);
        }
    }

    /// Zero-phase forward-backward filtering with odd reflective padding of
    /// `min(3 * impulse_len, len - 1)` samples at both ends.
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        if n < 2 {
            return x.iter().map(|_| 0.0).collect();
        }
        let pad = (3 * self.impulse_len()).min(n - 1);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

        self.filter_steady(&mut ext);
        ext.reverse();
        self.filter_steady(&mut ext);
        ext.reverse();
        ext[pad..pad + n].to_vec()
    }
}

/// Fills `segment.filtered` with the zero-phase bandpassed window.
///
/// Panics if the design was made for a different sampling rate.
pub fn filter_segment(mut segment: Segment, design: &BandpassDesign) -> Segment {
    assert!(
        (design.fs - segment.fs).abs() <= 1e-9 * segment.fs,
        "filter designed for {} Hz applied to a {} Hz segment",
        design.fs,
        segment.fs
    );
    segment.filtered = Some(design.filtfilt(&segment.raw));
    segment
}
