//! Per-segment feature extraction and the segment-level feature table.
//!
//! Every window yields 13 scalar features per wavelength (time-domain,
//! optical and spectral), 18 cross-wavelength ratios and 8 quality columns:
//!
//! | group        | features                                                  |
//! |--------------|-----------------------------------------------------------|
//! | time-domain  | `mean std rms ptp variance energy` (raw window)           |
//! | optical      | `ac dc ac_dc log_attenuation`                             |
//! | spectral     | `dom_freq band_power spec_entropy` (filtered window)      |
//! | cross        | `mean_ratio ac_dc_ratio attenuation_ratio` per nm pair    |
//! | quality      | `sqi snr_db` of the raw window                            |
//!
//! DC is taken from the raw window and AC from the filtered one; the
//! bandpassed signal has no baseline left to measure.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{
    detect_peaks_troughs, welch_psd, PeakConfig, QualityIndices, Segment, SegmentGroup,
    WelchConfig, Wavelength, BAND_HIGH_HZ, BAND_LOW_HZ,
};

/// Per-wavelength feature names, in column order within a wavelength block.
pub const CHANNEL_FEATURES: [&str; 13] = [
    "mean",
    "std",
    "rms",
    "ptp",
    "variance",
    "energy",
    "ac",
    "dc",
    "ac_dc",
    "log_attenuation",
    "dom_freq",
    "band_power",
    "spec_entropy",
];

/// Cross-wavelength ratio groups.
pub const RATIO_GROUPS: [&str; 3] = ["mean", "ac_dc", "attenuation"];

/// Denominators smaller than this make a ratio absent.
const RATIO_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub band: (f64, f64),
    pub welch: WelchConfig,
    pub peaks: PeakConfig,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            band: (BAND_LOW_HZ, BAND_HIGH_HZ),
            welch: WelchConfig::default(),
            peaks: PeakConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeDomain {
    pub mean: f64,
    pub std: f64,
    pub rms: f64,
    pub ptp: f64,
    pub variance: f64,
    pub energy: f64,
}

impl TimeDomain {
    /// Population statistics of `x` (divisor N). `x` must be non-empty.
    pub fn from_samples(x: &[f64]) -> Self {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let variance = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let energy = x.iter().map(|v| v * v).sum::<f64>();
        let (lo, hi) = x
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let std = variance.sqrt();
        Self {
            mean,
            std,
            rms: (energy / n).sqrt(),
            ptp: hi - lo,
            variance: std * std,
            energy,
        }
    }
}

/// Time-domain statistics of a segment's raw samples.
pub fn time_domain_features(segment: &Segment) -> Result<TimeDomain> {
    if segment.raw.is_empty() || segment.raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::CorruptSegment {
            subject: segment.subject_id.clone(),
            index: segment.index,
        });
    }
    Ok(TimeDomain::from_samples(&segment.raw))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Optical {
    pub ac: Option<f64>,
    pub dc: Option<f64>,
    pub ac_dc: Option<f64>,
    pub log_attenuation: Option<f64>,
}

/// Pulsatile (AC) and baseline (DC) components of one channel window.
///
/// All four values are absent when fewer than two pulses are found.
pub fn optical_features(raw: &[f64], filtered: &[f64], fs: f64, peaks: &PeakConfig) -> Optical {
    let Ok(landmarks) = detect_peaks_troughs(filtered, fs, peaks) else {
        return Optical::default();
    };
    let mean_at = |idx: &[usize]| idx.iter().map(|&i| filtered[i]).sum::<f64>() / idx.len() as f64;
    let ac = mean_at(&landmarks.peaks) - mean_at(&landmarks.troughs);
    let dc = raw.iter().sum::<f64>() / raw.len() as f64;
    let ac_dc = (dc.abs() >= RATIO_EPS).then(|| ac / dc);
    let log_attenuation = (dc > 0.0 && ac > 0.0).then(|| (dc / ac).ln());
    Optical {
        ac: Some(ac),
        dc: Some(dc),
        ac_dc,
        log_attenuation,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Spectral {
    pub dom_freq: Option<f64>,
    pub band_power: Option<f64>,
    pub spec_entropy: Option<f64>,
}

/// Dominant in-band frequency, in-band power fraction and normalized
/// Shannon entropy of the Welch spectrum.
pub fn spectral_features(
    filtered: &[f64],
    fs: f64,
    band: (f64, f64),
    welch: &WelchConfig,
) -> Result<Spectral> {
    let psd = welch_psd(filtered, fs, welch)?;
    let total: f64 = psd.power.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Ok(Spectral::default());
    }
    let dom_freq = psd
        .freqs
        .iter()
        .zip(&psd.power)
        .filter(|(f, _)| **f >= band.0 && **f <= band.1)
        .fold(None, |best: Option<(f64, f64)>, (&f, &p)| match best {
            Some((_, bp)) if bp >= p => best,
            _ => Some((f, p)),
        })
        .map(|(f, _)| f);
    let band_power = (psd.band_power(band.0, band.1) / psd.total_power()).clamp(0.0, 1.0);
    let entropy: f64 = psd
        .power
        .iter()
        .filter(|p| **p > 0.0)
        .map(|p| {
            let q = p / total;
            -q * q.ln()
        })
        .sum();
    let spec_entropy = if psd.len() > 1 {
        (entropy / (psd.len() as f64).ln()).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(Spectral {
        dom_freq,
        band_power: Some(band_power),
        spec_entropy: Some(spec_entropy),
    })
}

/// Everything computed for one channel of one window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelFeatures {
    pub time: TimeDomain,
    pub optical: Optical,
    pub spectral: Spectral,
    /// Quality of the raw (unfiltered) window.
    pub quality: QualityIndices,
}

impl ChannelFeatures {
    /// Value for a name in [`CHANNEL_FEATURES`].
    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "mean" => Some(self.time.mean),
            "std" => Some(self.time.std),
            "rms" => Some(self.time.rms),
            "ptp" => Some(self.time.ptp),
            "variance" => Some(self.time.variance),
            "energy" => Some(self.time.energy),
            "ac" => self.optical.ac,
            "dc" => self.optical.dc,
            "ac_dc" => self.optical.ac_dc,
            "log_attenuation" => self.optical.log_attenuation,
            "dom_freq" => self.spectral.dom_freq,
            "band_power" => self.spectral.band_power,
            "spec_entropy" => self.spectral.spec_entropy,
            _ => None,
        }
    }
}

/// Features of one channel window; `segment.filtered` must be populated.
pub fn channel_features(segment: &Segment, config: &FeatureConfig) -> Result<ChannelFeatures> {
    let time = time_domain_features(segment)?;
    let filtered = segment.filtered.as_deref().ok_or_else(|| Error::InvalidRecord {
        subject: segment.subject_id.clone(),
        reason: format!("segment {} was not filtered", segment.index),
    })?;
    let optical = optical_features(&segment.raw, filtered, segment.fs, &config.peaks);
    let spectral = spectral_features(filtered, segment.fs, config.band, &config.welch)?;
    let raw_psd = welch_psd(&segment.raw, segment.fs, &config.welch)?;
    let quality = crate::signal::quality_from_psd(&raw_psd, config.band);
    Ok(ChannelFeatures {
        time,
        optical,
        spectral,
        quality,
    })
}

/// `num / den`, absent if either side is absent or the denominator is ~0.
pub fn feature_ratio(num: Option<f64>, den: Option<f64>) -> Option<f64> {
    let (n, d) = (num?, den?);
    (d.abs() >= RATIO_EPS).then(|| n / d)
}

/// `ln(dc_i / dc_j)`, absent unless the ratio is positive and finite.
pub fn attenuation_ratio(dc_i: Option<f64>, dc_j: Option<f64>) -> Option<f64> {
    let r = feature_ratio(dc_i, dc_j)?;
    (r > 0.0 && r.is_finite()).then(|| r.ln())
}

/// Cross ratio of `group` for the ordered wavelength pair `(i, j)`.
pub fn cross_ratio(
    channels: &[ChannelFeatures; 4],
    group: &str,
    i: Wavelength,
    j: Wavelength,
) -> Option<f64> {
    let (a, b) = (&channels[i.index()], &channels[j.index()]);
    match group {
        "mean" => feature_ratio(Some(a.time.mean), Some(b.time.mean)),
        "ac_dc" => feature_ratio(a.optical.ac_dc, b.optical.ac_dc),
        "attenuation" => attenuation_ratio(a.optical.dc, b.optical.dc),
        _ => None,
    }
}

/// Wavelength pairs `i < j` in lexicographic order.
pub fn wavelength_pairs() -> impl Iterator<Item = (Wavelength, Wavelength)> {
    Wavelength::ALL.into_iter().enumerate().flat_map(|(k, i)| {
        Wavelength::ALL[k + 1..].iter().map(move |&j| (i, j))
    })
}

/// All cross-wavelength ratios in column order (pair-major, then group).
pub fn cross_wavelength_features(channels: &[ChannelFeatures; 4]) -> Vec<Option<f64>> {
    wavelength_pairs()
        .flat_map(|(i, j)| RATIO_GROUPS.iter().map(move |g| cross_ratio(channels, g, i, j)))
        .collect()
}

/// Column names of a segment feature table, without the id columns.
pub fn feature_columns() -> Vec<String> {
    let mut cols = Vec::with_capacity(78);
    for w in Wavelength::ALL {
        cols.extend(CHANNEL_FEATURES.iter().map(|f| format!("{f}_{w}")));
    }
    for (i, j) in wavelength_pairs() {
        cols.extend(RATIO_GROUPS.iter().map(|g| format!("{g}_ratio_{i}_{j}")));
    }
    for w in Wavelength::ALL {
        cols.push(format!("sqi_{w}"));
        cols.push(format!("snr_db_{w}"));
    }
    cols
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub subject_id: String,
    pub segment_index: usize,
    pub values: Vec<Option<f64>>,
}

/// Extracts one table row from a filtered four-channel window.
pub fn extract_row(group: &SegmentGroup, config: &FeatureConfig) -> Result<FeatureRow> {
    let mut per_channel = Vec::with_capacity(4);
    for seg in &group.channels {
        per_channel.push(channel_features(seg, config)?);
    }
    let channels: [ChannelFeatures; 4] = per_channel.try_into().expect("four channels");

    let mut values = Vec::with_capacity(78);
    for ch in &channels {
        values.extend(CHANNEL_FEATURES.iter().map(|f| ch.get(f)));
    }
    values.extend(cross_wavelength_features(&channels));
    for ch in &channels {
        values.push(Some(ch.quality.sqi));
        values.push(Some(ch.quality.snr_db_finite()));
    }
    Ok(FeatureRow {
        subject_id: group.subject_id.clone(),
        segment_index: group.index,
        values,
    })
}

/// Rectangular table of segment features; `None` marks a missing value.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub columns: Vec<String>,
    pub rows: Vec<FeatureRow>,
}

impl FeatureTable {
    pub fn new(columns: Vec<String>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, idx: usize) -> impl Iterator<Item = Option<f64>> + '_ {
        self.rows.iter().map(move |r| r.values[idx])
    }

    /// Fraction of missing entries per column (0 for an empty table).
    pub fn missing_fractions(&self) -> Vec<f64> {
        (0..self.columns.len())
            .map(|c| {
                if self.rows.is_empty() {
                    0.0
                } else {
                    self.column(c).filter(Option::is_none).count() as f64 / self.rows.len() as f64
                }
            })
            .collect()
    }

    /// Sorts rows by `(subject_id, segment_index)`.
    pub fn sort_rows(&mut self) {
        self.rows.sort_by(|a, b| {
            a.subject_id
                .cmp(&b.subject_id)
                .then(a.segment_index.cmp(&b.segment_index))
        });
    }

    /// CSV with `subject_id,segment_index` followed by the feature columns;
    /// missing values are empty fields.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["subject_id".to_string(), "segment_index".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![row.subject_id.clone(), row.segment_index.to_string()];
            rec.extend(
                row.values
                    .iter()
                    .map(|v| v.map(|x| x.to_string()).unwrap_or_default()),
            );
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, path: &std::path::Path) -> Result<Self> {
        let malformed = |reason: String| Error::MalformedCsv {
            path: path.to_path_buf(),
            reason,
        };
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        if header.len() < 2 || &header[0] != "subject_id" || &header[1] != "segment_index" {
            return Err(malformed(
                "header must start with subject_id,segment_index".into(),
            ));
        }
        let mut table = FeatureTable::new(header.iter().skip(2).map(String::from).collect());
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let segment_index = rec[1]
                .parse()
                .map_err(|_| malformed(format!("row {}: bad segment_index", line + 2)))?;
            let values = rec
                .iter()
                .skip(2)
                .map(|f| {
                    if f.is_empty() {
                        Ok(None)
                    } else {
                        f.parse::<f64>()
                            .map(Some)
                            .map_err(|_| malformed(format!("row {}: bad number {f:?}", line + 2)))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            table.rows.push(FeatureRow {
                subject_id: rec[0].to_string(),
                segment_index,
                values,
            });
        }
        Ok(table)
    }
}

/// One row per `(subject, segment)`, sorted; column order from [`feature_columns`].
pub fn build_feature_table(groups: &[SegmentGroup], config: &FeatureConfig) -> Result<FeatureTable> {
    let rows = groups
        .par_iter()
        .map(|g| extract_row(g, config))
        .collect::<Result<Vec<_>>>()?;
    let mut table = FeatureTable {
        columns: feature_columns(),
        rows,
    };
    table.sort_rows();
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CleaningConfig {
    pub nan_frac_max: f64,
    pub var_min: f64,
}

impl Default for CleaningConfig {
    fn default() -> Self {
        Self {
            nan_frac_max: 0.2,
            var_min: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DropReason {
    NanHeavy,
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedColumn {
    pub name: String,
    pub reason: DropReason,
    pub missing_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CleaningReport {
    pub dropped: Vec<DroppedColumn>,
    /// Imputed cell count per retained column (only non-zero entries).
    pub imputed: BTreeMap<String, usize>,
}

/// Drops missing-heavy and constant columns and median-imputes the rest.
///
/// The constant test runs on the imputed column, so cleaning a cleaned
/// table changes nothing.
pub fn clean_feature_table(
    table: &FeatureTable,
    config: &CleaningConfig,
) -> Result<(FeatureTable, CleaningReport)> {
    let missing = table.missing_fractions();
    let mut report = CleaningReport::default();
    let mut kept: Vec<(usize, Vec<f64>)> = Vec::new();

    for (c, name) in table.columns.iter().enumerate() {
        if missing[c] > config.nan_frac_max {
            report.dropped.push(DroppedColumn {
                name: name.clone(),
                reason: DropReason::NanHeavy,
                missing_fraction: missing[c],
            });
            continue;
        }
        let observed: Vec<f64> = table.column(c).flatten().collect();
        let fill = median(&observed).unwrap_or(0.0);
        let imputed: Vec<f64> = table.column(c).map(|v| v.unwrap_or(fill)).collect();
        if population_variance(&imputed) < config.var_min {
            report.dropped.push(DroppedColumn {
                name: name.clone(),
                reason: DropReason::Constant,
                missing_fraction: missing[c],
            });
            continue;
        }
        let n_imputed = table.column(c).filter(Option::is_none).count();
        if n_imputed > 0 {
            report.imputed.insert(name.clone(), n_imputed);
        }
        kept.push((c, imputed));
    }

    if kept.is_empty() {
        return Err(Error::DegenerateFeatureTable);
    }
    let columns = kept.iter().map(|(c, _)| table.columns[*c].clone()).collect();
    let rows = table
        .rows
        .iter()
        .enumerate()
        .map(|(r, row)| FeatureRow {
            subject_id: row.subject_id.clone(),
            segment_index: row.segment_index,
            values: kept.iter().map(|(_, col)| Some(col[r])).collect(),
        })
        .collect();
    Ok((FeatureTable { columns, rows }, report))
}

/// Median of `x` (mean of the two middle values for even length).
pub fn median(x: &[f64]) -> Option<f64> {
    if x.is_empty() {
        return None;
    }
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len().is_multiple_of(2) {
        (v[mid - 1] + v[mid]) / 2.0
    } else {
        v[mid]
    })
}

fn population_variance(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
}
