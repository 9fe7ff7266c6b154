//! Anemia screening from predicted hemoglobin: WHO cut-offs, severity
//! grading, threshold-offset sensitivity and Bland-Altman agreement.
//!
//! Hemoglobin is handled in g/L throughout. The WHO severity table is kept
//! in g/dL exactly as published and converted when used.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::Sex;
use crate::error::{Error, Result};

/// Adult male anemia cut-off, g/L.
pub const ADULT_MALE_THRESHOLD_G_L: f64 = 130.0;
/// Adult female anemia cut-off, g/L.
pub const ADULT_FEMALE_THRESHOLD_G_L: f64 = 120.0;

pub fn g_dl_to_g_l(g_dl: f64) -> f64 {
    g_dl * 10.0
}

pub fn g_l_to_g_dl(g_l: f64) -> f64 {
    g_l / 10.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Population {
    #[serde(rename = "child_6_59m")]
    Child6To59Months,
    #[serde(rename = "child_5_11y")]
    Child5To11Years,
    #[serde(rename = "child_12_14y")]
    Child12To14Years,
    #[serde(rename = "nonpregnant_woman_15plus")]
    NonPregnantWoman15Plus,
    PregnantWoman,
    AdultMale,
    AdultFemale,
}

impl Population {
    pub const ALL: [Population; 7] = [
        Population::Child6To59Months,
        Population::Child5To11Years,
        Population::Child12To14Years,
        Population::NonPregnantWoman15Plus,
        Population::PregnantWoman,
        Population::AdultMale,
        Population::AdultFemale,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Population::Child6To59Months => "child_6_59m",
            Population::Child5To11Years => "child_5_11y",
            Population::Child12To14Years => "child_12_14y",
            Population::NonPregnantWoman15Plus => "nonpregnant_woman_15plus",
            Population::PregnantWoman => "pregnant_woman",
            Population::AdultMale => "adult_male",
            Population::AdultFemale => "adult_female",
        }
    }

    pub fn adult(sex: Sex) -> Self {
        match sex {
            Sex::Male => Population::AdultMale,
            Sex::Female => Population::AdultFemale,
        }
    }
}

impl fmt::Display for Population {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Population {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Population::ALL
            .into_iter()
            .find(|p| p.code() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown population {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnemiaStatus {
    NonAnemic,
    Anemic,
    Mild,
    Moderate,
    Severe,
}

impl AnemiaStatus {
    pub fn code(self) -> &'static str {
        match self {
            AnemiaStatus::NonAnemic => "non_anemic",
            AnemiaStatus::Anemic => "anemic",
            AnemiaStatus::Mild => "mild",
            AnemiaStatus::Moderate => "moderate",
            AnemiaStatus::Severe => "severe",
        }
    }

    pub fn is_anemic(self) -> bool {
        self != AnemiaStatus::NonAnemic
    }
}

impl fmt::Display for AnemiaStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// One row of the WHO severity table, g/dL as printed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeverityBands {
    pub mild: (f64, f64),
    pub moderate: (f64, f64),
    /// Severe is anything below this.
    pub severe_below: f64,
}

impl SeverityBands {
    /// Lowest non-anemic value in g/L: one printed decimal above the mild top.
    pub fn non_anemic_from_g_l(&self) -> f64 {
        g_dl_to_g_l(self.mild.1) + 1.0
    }
}

pub fn severity_bands(population: Population) -> Option<SeverityBands> {
    let row = |mild, moderate, severe_below| {
        Some(SeverityBands {
            mild,
            moderate,
            severe_below,
        })
    };
    match population {
        Population::Child6To59Months => row((10.0, 10.9), (7.0, 9.9), 7.0),
        Population::Child5To11Years => row((11.0, 11.4), (8.0, 10.9), 8.0),
        Population::Child12To14Years => row((11.0, 11.9), (8.0, 10.9), 8.0),
        Population::NonPregnantWoman15Plus => row((11.0, 11.9), (8.0, 10.9), 8.0),
        Population::PregnantWoman => row((10.0, 10.9), (7.0, 9.9), 7.0),
        Population::AdultMale | Population::AdultFemale => None,
    }
}

/// Binary adult rule; exactly-at-threshold is non-anemic.
pub fn screen_adult(hb_g_l: f64, sex: Sex) -> AnemiaStatus {
    if hb_g_l < adult_threshold(sex) {
        AnemiaStatus::Anemic
    } else {
        AnemiaStatus::NonAnemic
    }
}

pub fn adult_threshold(sex: Sex) -> f64 {
    match sex {
        Sex::Male => ADULT_MALE_THRESHOLD_G_L,
        Sex::Female => ADULT_FEMALE_THRESHOLD_G_L,
    }
}

/// Severity grade of `hb_g_l` for a population with a severity row.
///
/// Bands are half-open in g/L: `[lower, next lower)`, so a printed upper
/// edge such as 10.9 g/dL stays in its own band and the 0.1 g/dL gap to the
/// next band belongs to the lower one.
pub fn grade_severity(hb_g_l: f64, population: Population) -> Result<AnemiaStatus> {
    let bands = severity_bands(population).ok_or_else(|| Error::NoSeverityBands(population.to_string()))?;
    let status = if hb_g_l < g_dl_to_g_l(bands.severe_below) {
        AnemiaStatus::Severe
    } else if hb_g_l < g_dl_to_g_l(bands.mild.0) {
        AnemiaStatus::Moderate
    } else if hb_g_l < bands.non_anemic_from_g_l() {
        AnemiaStatus::Mild
    } else {
        AnemiaStatus::NonAnemic
    };
    Ok(status)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningResult {
    pub subject_id: String,
    pub predicted_hb_g_l: f64,
    pub sex: Sex,
    pub population: Population,
    pub status: AnemiaStatus,
}

/// Screens adults by sex-specific cut-off.
pub fn screen_subjects(predictions: &[(String, f64, Sex)]) -> Vec<ScreeningResult> {
    predictions
        .iter()
        .map(|(id, hb, sex)| ScreeningResult {
            subject_id: id.clone(),
            predicted_hb_g_l: *hb,
            sex: *sex,
            population: Population::adult(*sex),
            status: screen_adult(*hb, *sex),
        })
        .collect()
}

pub fn write_screening_csv<W: std::io::Write>(results: &[ScreeningResult], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["subject_id", "predicted_hb_g_l", "sex", "status"])?;
    for r in results {
        w.write_record([
            r.subject_id.as_str(),
            &r.predicted_hb_g_l.to_string(),
            r.sex.code(),
            r.status.code(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Default threshold offsets, g/L: -10 to +10 in steps of 2.5.
pub fn default_offsets() -> Vec<f64> {
    (-4..=4).map(|k| k as f64 * 2.5).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityPoint {
    pub offset_g_l: f64,
    pub anemic_count: usize,
}

/// Anemic count when every adult cut-off is shifted by each offset.
pub fn threshold_sensitivity(predictions: &[(f64, Sex)], offsets: &[f64]) -> Vec<SensitivityPoint> {
    offsets
        .iter()
        .map(|&offset| SensitivityPoint {
            offset_g_l: offset,
            anemic_count: predictions
                .iter()
                .filter(|(hb, sex)| *hb < adult_threshold(*sex) + offset)
                .count(),
        })
        .collect()
}

pub fn write_sensitivity_csv<W: std::io::Write>(points: &[SensitivityPoint], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["offset_g_l", "anemic_count"])?;
    for p in points {
        w.write_record([p.offset_g_l.to_string(), p.anemic_count.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlandAltman {
    pub bias: f64,
    pub sd: f64,
    pub loa_low: f64,
    pub loa_high: f64,
    /// `(mean of pair, predicted - reference)`.
    pub pairs: Vec<(f64, f64)>,
}

pub fn bland_altman(predicted: &[f64], reference: &[f64]) -> Result<BlandAltman> {
    if predicted.len() != reference.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: reference.len(),
        });
    }
    let n = predicted.len();
    if n < 2 {
        return Err(Error::TooFewPairs(n));
    }
    let pairs: Vec<(f64, f64)> = predicted
        .iter()
        .zip(reference)
        .map(|(p, r)| ((p + r) / 2.0, p - r))
        .collect();
    let bias = pairs.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let ss: f64 = pairs.iter().map(|p| (p.1 - bias).powi(2)).sum();
    let sd = (ss / (n - 1) as f64).sqrt();
    Ok(BlandAltman {
        bias,
        sd,
        loa_low: bias - 1.96 * sd,
        loa_high: bias + 1.96 * sd,
        pairs,
    })
}

pub fn write_bland_altman_csv<W: std::io::Write>(ba: &BlandAltman, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["mean", "diff"])?;
    for (m, d) in &ba.pairs {
        w.write_record([m.to_string(), d.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
