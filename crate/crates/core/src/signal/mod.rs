//! Raw multichannel PPG handling: records, segmentation, bandpass filtering,
//! spectral estimation, quality indices and pulse landmarks.

mod filter;
mod peaks;
mod spectrum;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::Sex;
use crate::error::{Error, Result};

pub use filter::{design_bandpass, filter_segment, BandpassDesign, Biquad, FilterSpec};
pub use peaks::{detect_peaks_troughs, PeakConfig, PulseLandmarks};
pub use spectrum::{
    quality_from_psd, quality_indices, welch_psd, PsdEstimate, QualityIndices, WelchConfig, WindowKind,
    SNR_SATURATION_DB,
};

/// Default analysis window, in samples.
pub const WINDOW_LEN: usize = 500;

/// Lower edge of the physiological pulse band, Hz.
pub const BAND_LOW_HZ: f64 = 0.5;
/// Upper edge of the physiological pulse band, Hz.
pub const BAND_HIGH_HZ: f64 = 5.0;

/// One of the four sensing wavelengths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum Wavelength {
    Nm660,
    Nm730,
    Nm850,
    Nm940,
}

impl Wavelength {
    /// All wavelengths in ascending nm order; channel arrays are indexed this way.
    pub const ALL: [Wavelength; 4] = [
        Wavelength::Nm660,
        Wavelength::Nm730,
        Wavelength::Nm850,
        Wavelength::Nm940,
    ];

    pub fn nm(self) -> u32 {
        match self {
            Wavelength::Nm660 => 660,
            Wavelength::Nm730 => 730,
            Wavelength::Nm850 => 850,
            Wavelength::Nm940 => 940,
        }
    }

    pub fn from_nm(nm: u32) -> Option<Self> {
        Self::ALL.into_iter().find(|w| w.nm() == nm)
    }

    /// Position in [`Wavelength::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Wavelength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.nm())
    }
}

impl TryFrom<u32> for Wavelength {
    type Error = String;

    fn try_from(nm: u32) -> std::result::Result<Self, Self::Error> {
        Wavelength::from_nm(nm).ok_or_else(|| format!("unsupported wavelength {nm} nm"))
    }
}

impl From<Wavelength> for u32 {
    fn from(w: Wavelength) -> u32 {
        w.nm()
    }
}

/// One subject's raw four-channel recording.
#[derive(Debug, Clone, PartialEq)]
pub struct PpgRecord {
    subject_id: String,
    fs: f64,
    channels: [Vec<f64>; 4],
    pub age: f64,
    pub sex: Sex,
    /// Reference hemoglobin in g/L; absent at inference time.
    pub hb_ref: Option<f64>,
}

impl PpgRecord {
    /// Builds a record, checking that the channels have equal length and that
    /// the sampling rate leaves margin above the 5 Hz band edge.
    pub fn new(
        subject_id: impl Into<String>,
        fs: f64,
        channels: [Vec<f64>; 4],
        age: f64,
        sex: Sex,
        hb_ref: Option<f64>,
    ) -> Result<Self> {
        let subject_id = subject_id.into();
        let invalid = |reason: String| Error::InvalidRecord {
            subject: subject_id.clone(),
            reason,
        };
        if !(fs.is_finite() && fs > 10.0) {
            return Err(invalid(format!("sampling rate {fs} Hz must exceed 10 Hz")));
        }
        let len = channels[0].len();
        if let Some(w) = Wavelength::ALL
            .into_iter()
            .find(|w| channels[w.index()].len() != len)
        {
            return Err(invalid(format!(
                "channel {w} nm has {} samples, 660 nm has {len}",
                channels[w.index()].len()
            )));
        }
        Ok(Self {
            subject_id,
            fs,
            channels,
            age,
            sex,
            hb_ref,
        })
    }

    pub fn subject_id(&self) -> &str {
        &self.subject_id
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn channel(&self, wavelength: Wavelength) -> &[f64] {
        &self.channels[wavelength.index()]
    }

    pub fn channels(&self) -> &[Vec<f64>; 4] {
        &self.channels
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A fixed-length window of one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub subject_id: String,
    pub index: usize,
    pub wavelength: Wavelength,
    /// First sample of the window in the source channel.
    pub start: usize,
    pub raw: Vec<f64>,
    pub filtered: Option<Vec<f64>>,
    pub fs: f64,
}

/// Segment `index` of all four channels; every member spans the same samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentGroup {
    pub subject_id: String,
    pub index: usize,
    pub channels: [Segment; 4],
}

impl SegmentGroup {
    pub fn channel(&self, wavelength: Wavelength) -> &Segment {
        &self.channels[wavelength.index()]
    }

    pub fn fs(&self) -> f64 {
        self.channels[0].fs
    }

    /// Applies the bandpass to each channel independently.
    pub fn filter(mut self, design: &BandpassDesign) -> Self {
        self.channels = self.channels.map(|s| filter_segment(s, design));
        self
    }
}

/// Cuts every channel into non-overlapping windows of `window_len` samples.
///
/// The trailing partial window is discarded. Segment `k` covers samples
/// `[k * window_len, (k + 1) * window_len)` in all four channels.
pub fn segment_record(record: &PpgRecord, window_len: usize) -> Result<Vec<SegmentGroup>> {
    if window_len < 2 {
        return Err(Error::InvalidRecord {
            subject: record.subject_id.clone(),
            reason: format!("window length {window_len} must be at least 2"),
        });
    }
    let len = record.len();
    if len < window_len {
        return Err(Error::RecordTooShort {
            subject: record.subject_id.clone(),
            len,
            window: window_len,
        });
    }
    let groups = (0..len / window_len)
        .map(|index| {
            let start = index * window_len;
            let channels = Wavelength::ALL.map(|w| Segment {
                subject_id: record.subject_id.clone(),
                index,
                wavelength: w,
                start,
                raw: record.channel(w)[start..start + window_len].to_vec(),
                filtered: None,
                fs: record.fs,
            });
            SegmentGroup {
                subject_id: record.subject_id.clone(),
                index,
                channels,
            }
        })
        .collect();
    Ok(groups)
}
