//! Independent reference implementations used by the integration and
//! acceptance tests. Nothing here calls into the library's numeric code.

#![allow(dead_code)]

use std::f64::consts::PI;

use ppghb::gbm::{GbmModel, GbmParams, TreeNode, MODEL_FORMAT_VERSION};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn sine(freq: f64, fs: f64, n: usize, amp: f64, offset: f64, phase: f64) -> Vec<f64> {
    (0..n)
        .map(|i| offset + amp * (2.0 * PI * freq * i as f64 / fs + phase).sin())
        .collect()
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

// Filter design

/// Magnitude of the analog Butterworth bandpass prototype evaluated at the
/// pre-warped frequency; this is exactly the digital response of a
/// bilinear-transformed design.
pub fn butterworth_bandpass_gain(f: f64, fs: f64, low: f64, high: f64, order: usize) -> f64 {
    let warp = |hz: f64| 2.0 * fs * (PI * hz / fs).tan();
    let (w, wl, wh) = (warp(f), warp(low), warp(high));
    let w0_sq = wl * wh;
    let bw = wh - wl;
    let x = (w * w - w0_sq) / (w * bw);
    1.0 / (1.0 + x.powi(2 * order as i32)).sqrt()
}

pub fn db(gain: f64) -> f64 {
    20.0 * gain.log10()
}

// Spectral estimation

pub fn hann_periodic(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// `|X_k|^2` for `k = 0..=n/2` by direct summation.
pub fn dft_power(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, v) in x.iter().enumerate() {
                let ang = -2.0 * PI * (k * t % n) as f64 / n as f64;
                re += v * ang.cos();
                im += v * ang.sin();
            }
            re * re + im * im
        })
        .collect()
}

/// One-sided Welch density with a periodic Hann window, no detrending.
pub fn naive_welch(x: &[f64], fs: f64, nperseg: usize, noverlap: usize) -> (Vec<f64>, Vec<f64>) {
    let win = hann_periodic(nperseg);
    let wss: f64 = win.iter().map(|w| w * w).sum();
    let step = nperseg - noverlap;
    let mut acc = vec![0.0; nperseg / 2 + 1];
    let mut count = 0;
    let mut start = 0;
    while start + nperseg <= x.len() {
        let seg: Vec<f64> = x[start..start + nperseg].iter().zip(&win).map(|(v, w)| v * w).collect();
        for (a, p) in acc.iter_mut().zip(dft_power(&seg)) {
            *a += p;
        }
        count += 1;
        start += step;
    }
    let last = acc.len() - 1;
    let power = acc
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let one_sided = if k == 0 || (nperseg.is_multiple_of(2) && k == last) { 1.0 } else { 2.0 };
            one_sided * a / (count as f64 * fs * wss)
        })
        .collect();
    let freqs = (0..=last).map(|k| k as f64 * fs / nperseg as f64).collect();
    (freqs, power)
}

/// `(in-band power, total power)` with bins whose centers are in `[lo, hi]`.
pub fn band_and_total(freqs: &[f64], power: &[f64], lo: f64, hi: f64) -> (f64, f64) {
    let df = freqs[1] - freqs[0];
    let band = freqs
        .iter()
        .zip(power)
        .filter(|(f, _)| **f >= lo && **f <= hi)
        .map(|(_, p)| p)
        .sum::<f64>()
        * df;
    (band, power.iter().sum::<f64>() * df)
}

/// Power in bins whose centers fall outside `[lo, hi]`.
pub fn out_of_band(freqs: &[f64], power: &[f64], lo: f64, hi: f64) -> f64 {
    let df = freqs[1] - freqs[0];
    freqs
        .iter()
        .zip(power)
        .filter(|(f, _)| **f < lo || **f > hi)
        .map(|(_, p)| p)
        .sum::<f64>()
        * df
}

pub fn normalized_entropy(power: &[f64]) -> f64 {
    let total: f64 = power.iter().sum();
    let mut h = 0.0;
    for p in power {
        if *p > 0.0 {
            let q = p / total;
            h -= q * q.ln();
        }
    }
    h / (power.len() as f64).ln()
}

// Time-domain features

/// `[mean, std, rms, ptp, variance, energy]` by plain loops.
pub fn direct_time_features(x: &[f64]) -> [f64; 6] {
    let n = x.len() as f64;
    let mut sum = 0.0;
    let mut sq = 0.0;
    let mut lo = x[0];
    let mut hi = x[0];
    for &v in x {
        sum += v;
        sq += v * v;
        if v < lo {
            lo = v;
        }
        if v > hi {
            hi = v;
        }
    }
    let mean = sum / n;
    let mut dev = 0.0;
    for &v in x {
        dev += (v - mean) * (v - mean);
    }
    let variance = dev / n;
    [mean, variance.sqrt(), (sq / n).sqrt(), hi - lo, variance, sq]
}

// Tree ensembles

/// Expected output of `node` when features in `known` (bit mask) follow `x`
/// and every other split averages its children by training cover.
pub fn path_conditional_value(node: &TreeNode, x: &[f64], known: u32) -> f64 {
    match node {
        TreeNode::Leaf { value, .. } => *value,
        TreeNode::Split {
            feature_index,
            threshold,
            left,
            right,
            ..
        } => {
            if known & (1 << feature_index) != 0 {
                let child = if x[*feature_index] <= *threshold { left } else { right };
                path_conditional_value(child, x, known)
            } else {
                let (cl, cr) = (left.cover() as f64, right.cover() as f64);
                (cl * path_conditional_value(left, x, known) + cr * path_conditional_value(right, x, known))
                    / (cl + cr)
            }
        }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Shapley values of one tree by enumerating every feature subset.
pub fn brute_force_shap(tree: &TreeNode, x: &[f64]) -> Vec<f64> {
    let m = x.len();
    assert!(m <= 16);
    let mut phi = vec![0.0; m];
    let total = factorial(m);
    for (i, p) in phi.iter_mut().enumerate() {
        for s in 0u32..(1 << m) {
            if s & (1 << i) != 0 {
                continue;
            }
            let size = s.count_ones() as usize;
            let weight = factorial(size) * factorial(m - size - 1) / total;
            *p += weight * (path_conditional_value(tree, x, s | (1 << i)) - path_conditional_value(tree, x, s));
        }
    }
    phi
}

pub fn brute_force_ensemble(model: &GbmModel, x: &[f64]) -> (f64, Vec<f64>) {
    let mut phi = vec![0.0; x.len()];
    let mut base = model.base_score;
    for tree in &model.trees {
        for (p, t) in phi.iter_mut().zip(brute_force_shap(tree, x)) {
            *p += model.learning_rate * t;
        }
        base += model.learning_rate * path_conditional_value(tree, x, 0);
    }
    (base, phi)
}

/// Random tree with consistent covers; features may repeat along a path.
pub fn random_tree(rng: &mut ChaCha8Rng, n_features: usize, depth: usize, cover: usize) -> TreeNode {
    if depth == 0 || cover < 2 || rng.random_bool(0.2) {
        return TreeNode::Leaf {
            value: rng.random_range(-5.0..5.0),
            cover,
        };
    }
    let left_cover = rng.random_range(1..cover);
    TreeNode::Split {
        feature_index: rng.random_range(0..n_features),
        threshold: rng.random_range(0.0..1.0),
        split_gain: rng.random_range(0.0..1.0),
        cover,
        left: Box::new(random_tree(rng, n_features, depth - 1, left_cover)),
        right: Box::new(random_tree(rng, n_features, depth - 1, cover - left_cover)),
    }
}

pub fn random_model(rng: &mut ChaCha8Rng, n_features: usize, n_trees: usize, max_depth: usize) -> GbmModel {
    GbmModel {
        version: MODEL_FORMAT_VERSION,
        base_score: rng.random_range(80.0..180.0),
        learning_rate: rng.random_range(0.05..1.0),
        feature_names: (0..n_features).map(|i| format!("f{i}")).collect(),
        params: GbmParams::default(),
        trees: (0..n_trees)
            .map(|_| {
                let cover = rng.random_range(2..60);
                random_tree(rng, n_features, max_depth, cover)
            })
            .collect(),
    }
}

fn sse(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|r| (r - m).powi(2)).sum()
}

fn collect_gains(node: &TreeNode, rows: &[usize], x: &[Vec<f64>], resid: &[f64], out: &mut Vec<(f64, f64)>) {
    if let TreeNode::Split {
        feature_index,
        threshold,
        split_gain,
        left,
        right,
        ..
    } = node
    {
        let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x[i][*feature_index] <= *threshold);
        let vals = |idx: &[usize]| idx.iter().map(|&i| resid[i]).collect::<Vec<_>>();
        let reduction = sse(&vals(rows)) - sse(&vals(&l)) - sse(&vals(&r));
        out.push((*split_gain, reduction));
        collect_gains(left, &l, x, resid, out);
        collect_gains(right, &r, x, resid, out);
    }
}

/// Replays boosting on the training data and returns, for every internal
/// node, `(recorded split_gain, recomputed squared-error reduction)`.
pub fn replay_split_gains(model: &GbmModel, x: &[Vec<f64>], y: &[f64]) -> Vec<(f64, f64)> {
    let mut pred = vec![model.base_score; y.len()];
    let rows: Vec<usize> = (0..y.len()).collect();
    let mut out = Vec::new();
    for tree in &model.trees {
        let resid: Vec<f64> = y.iter().zip(&pred).map(|(a, b)| a - b).collect();
        collect_gains(tree, &rows, x, &resid, &mut out);
        for (p, row) in pred.iter_mut().zip(x) {
            *p += model.learning_rate * tree.predict(row);
        }
    }
    out
}

pub fn random_regression(rng: &mut ChaCha8Rng, n: usize, width: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let x: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..width)
                .map(|_| {
                    // a few repeated values to exercise threshold ties
                    if rng.random_bool(0.2) {
                        rng.random_range(0..3) as f64
                    } else {
                        rng.random_range(-2.0..2.0)
                    }
                })
                .collect()
        })
        .collect();
    let coef: Vec<f64> = (0..width).map(|_| rng.random_range(-10.0..10.0)).collect();
    let y = x
        .iter()
        .map(|r| 130.0 + r.iter().zip(&coef).map(|(a, b)| a * b).sum::<f64>() + rng.random_range(-3.0..3.0))
        .collect();
    (x, y)
}

// Signals for the quality property

/// In-band pulse plus out-of-band interference: baseline offset, slow
/// wander, a high-frequency tone and white-ish noise.
pub fn contaminated_pulse(rng: &mut ChaCha8Rng, fs: f64, n: usize) -> Vec<f64> {
    let hr = rng.random_range(0.8..2.5);
    let amp = rng.random_range(0.5..2.0);
    let offset = rng.random_range(-50.0..50.0);
    let wander_f = rng.random_range(0.02..0.3);
    let wander_a = rng.random_range(0.0..3.0);
    let tone_f = rng.random_range(8.0..fs / 2.0 - 1.0);
    let tone_a = rng.random_range(0.0..1.5);
    let noise = rng.random_range(0.0..0.5);
    let p1 = rng.random_range(0.0..2.0 * PI);
    let p2 = rng.random_range(0.0..2.0 * PI);
    (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            offset
                + amp * ((2.0 * PI * hr * t).sin() + 0.3 * (4.0 * PI * hr * t + p1).sin())
                + wander_a * (2.0 * PI * wander_f * t + p2).sin()
                + tone_a * (2.0 * PI * tone_f * t).sin()
                + noise * rng.random_range(-1.0..1.0)
        })
        .collect()
}
