//! Subject metadata, subject-level aggregation of segment features and the
//! leakage-free subject-wise train/test split.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{median, FeatureTable};

/// Plausible range for a reference hemoglobin value, g/L.
pub const HB_SANITY_G_L: (f64, f64) = (40.0, 250.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sex {
    #[serde(rename = "F")]
    Female,
    #[serde(rename = "M")]
    Male,
}

impl Sex {
    /// 0 = female, 1 = male.
    pub fn encoded(self) -> f64 {
        match self {
            Sex::Female => 0.0,
            Sex::Male => 1.0,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Sex::Female => "F",
            Sex::Male => "M",
        }
    }
}

impl fmt::Display for Sex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Sex {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "m" | "male" | "1" => Ok(Sex::Male),
            "f" | "female" | "0" => Ok(Sex::Female),
            other => Err(format!("unknown sex {other:?}, expected M or F")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectMeta {
    pub subject_id: String,
    pub age: f64,
    pub sex: Sex,
    pub hb_ref: Option<f64>,
}

impl SubjectMeta {
    pub fn validate(&self) -> Result<()> {
        let invalid = |reason: String| Error::InvalidMetadata {
            subject: self.subject_id.clone(),
            reason,
        };
        if !(self.age.is_finite() && self.age > 0.0) {
            return Err(invalid(format!("age {} must be positive", self.age)));
        }
        if let Some(hb) = self.hb_ref {
            if !(HB_SANITY_G_L.0..=HB_SANITY_G_L.1).contains(&hb) {
                return Err(invalid(format!(
                    "hemoglobin {hb} g/L outside [{}, {}]",
                    HB_SANITY_G_L.0, HB_SANITY_G_L.1
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregateOp {
    Mean,
    Median,
}

impl AggregateOp {
    pub fn suffix(self) -> &'static str {
        match self {
            AggregateOp::Mean => "mean",
            AggregateOp::Median => "median",
        }
    }

    /// `NaN` when `values` is empty.
    pub fn apply(self, values: &[f64]) -> f64 {
        match self {
            AggregateOp::Mean if values.is_empty() => f64::NAN,
            AggregateOp::Mean => values.iter().sum::<f64>() / values.len() as f64,
            AggregateOp::Median => median(values).unwrap_or(f64::NAN),
        }
    }
}

/// One subject's aggregated features plus demographics.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectFeatureVector {
    pub subject_id: String,
    /// Aligned with [`SubjectTable::feature_names`].
    pub features: Vec<f64>,
    pub age: f64,
    pub sex: Sex,
    pub n_segments: usize,
    pub hb_ref: Option<f64>,
}

impl SubjectFeatureVector {
    /// Model input: aggregated features, then age, then encoded sex.
    pub fn model_input(&self) -> Vec<f64> {
        let mut x = self.features.clone();
        x.push(self.age);
        x.push(self.sex.encoded());
        x
    }
}

/// Subject-level table, one vector per subject sorted by id.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectTable {
    pub feature_names: Vec<String>,
    pub subjects: Vec<SubjectFeatureVector>,
}

impl SubjectTable {
    /// Column names of [`SubjectFeatureVector::model_input`].
    pub fn model_feature_names(&self) -> Vec<String> {
        let mut names = self.feature_names.clone();
        names.push("age".into());
        names.push("sex".into());
        names
    }

    pub fn get(&self, subject_id: &str) -> Option<&SubjectFeatureVector> {
        self.subjects.iter().find(|s| s.subject_id == subject_id)
    }

    /// Subjects whose ids are in `ids`, in table order.
    pub fn select<'a>(&'a self, ids: &'a BTreeSet<String>) -> impl Iterator<Item = &'a SubjectFeatureVector> {
        self.subjects.iter().filter(move |s| ids.contains(&s.subject_id))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["subject_id".to_string()];
        header.extend(self.feature_names.iter().cloned());
        header.extend(["age", "sex", "n_segments", "hb_g_per_l"].map(String::from));
        w.write_record(&header)?;
        for s in &self.subjects {
            let mut rec = vec![s.subject_id.clone()];
            rec.extend(s.features.iter().map(|v| v.to_string()));
            rec.push(s.age.to_string());
            rec.push(s.sex.code().into());
            rec.push(s.n_segments.to_string());
            rec.push(s.hb_ref.map(|h| h.to_string()).unwrap_or_default());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, path: &Path) -> Result<Self> {
        let malformed = |reason: String| Error::MalformedCsv {
            path: path.to_path_buf(),
            reason,
        };
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        let n = header.len();
        let tail = ["age", "sex", "n_segments", "hb_g_per_l"];
        if n < 5 || &header[0] != "subject_id" || header.iter().skip(n - 4).ne(tail) {
            return Err(malformed(
                "expected subject_id,<features...>,age,sex,n_segments,hb_g_per_l".into(),
            ));
        }
        let feature_names = header.iter().skip(1).take(n - 5).map(String::from).collect();
        let mut subjects = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let row = line + 2;
            let num = |f: &str| {
                f.parse::<f64>()
                    .map_err(|_| malformed(format!("row {row}: bad number {f:?}")))
            };
            let features = (1..n - 4).map(|i| num(&rec[i])).collect::<Result<Vec<_>>>()?;
            let sex = rec[n - 3]
                .parse()
                .map_err(|e| malformed(format!("row {row}: {e}")))?;
            let n_segments = rec[n - 2]
                .parse()
                .map_err(|_| malformed(format!("row {row}: bad n_segments")))?;
            let hb_ref = match &rec[n - 1] {
                "" => None,
                f => Some(num(f)?),
            };
            subjects.push(SubjectFeatureVector {
                subject_id: rec[0].to_string(),
                features,
                age: num(&rec[n - 4])?,
                sex,
                n_segments,
                hb_ref,
            });
        }
        Ok(Self {
            feature_names,
            subjects,
        })
    }
}

/// Collapses segment rows into one vector per subject.
///
/// Missing entries are left out of each statistic. Metadata subjects without
/// any segment are skipped with a warning; table subjects without metadata
/// are an error.
pub fn aggregate_subjects(
    table: &FeatureTable,
    meta: &[SubjectMeta],
    ops: &[AggregateOp],
) -> Result<SubjectTable> {
    if ops.is_empty() {
        return Err(Error::InvalidConfig("no aggregation operator".into()));
    }
    let meta_by_id: BTreeMap<&str, &SubjectMeta> =
        meta.iter().map(|m| (m.subject_id.as_str(), m)).collect();

    let mut rows_by_subject: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, row) in table.rows.iter().enumerate() {
        rows_by_subject.entry(&row.subject_id).or_default().push(i);
    }
    for rows in rows_by_subject.values_mut() {
        rows.sort_by_key(|&r| table.rows[r].segment_index);
    }
    if let Some(id) = rows_by_subject.keys().find(|id| !meta_by_id.contains_key(*id)) {
        return Err(Error::MissingMetadata(id.to_string()));
    }
    for m in meta {
        if !rows_by_subject.contains_key(m.subject_id.as_str()) {
            log::warn!("subject {} has no segments; excluded", m.subject_id);
        }
    }

    let feature_names = table
        .columns
        .iter()
        .flat_map(|c| ops.iter().map(move |op| format!("{c}_{}", op.suffix())))
        .collect();

    let subjects = rows_by_subject
        .into_iter()
        .map(|(id, rows)| {
            let m = meta_by_id[id];
            let features = (0..table.columns.len())
                .flat_map(|c| {
                    let values: Vec<f64> = rows.iter().filter_map(|&r| table.rows[r].values[c]).collect();
                    ops.iter().map(move |op| op.apply(&values))
                })
                .collect();
            SubjectFeatureVector {
                subject_id: id.to_string(),
                features,
                age: m.age,
                sex: m.sex,
                n_segments: rows.len(),
                hb_ref: m.hb_ref,
            }
        })
        .collect();
    Ok(SubjectTable {
        feature_names,
        subjects,
    })
}

/// Disjoint subject-id sets; ids are sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub seed: u64,
    pub train: Vec<String>,
    pub test: Vec<String>,
}

impl SplitAssignment {
    pub fn train_set(&self) -> BTreeSet<String> {
        self.train.iter().cloned().collect()
    }

    pub fn test_set(&self) -> BTreeSet<String> {
        self.test.iter().cloned().collect()
    }
}

pub const MIN_SPLIT_SUBJECTS: usize = 5;

/// Seeded subject-wise split, stratified by reference-Hb quartile.
///
/// `round(test_fraction * n)` labeled subjects go to test; each quartile
/// contributes in proportion to its size with largest-remainder rounding.
pub fn split_subjects(
    subjects: &[SubjectFeatureVector],
    test_fraction: f64,
    seed: u64,
) -> Result<SplitAssignment> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "test fraction {test_fraction} outside (0, 1)"
        )));
    }
    let mut labeled: Vec<(f64, &str)> = subjects
        .iter()
        .filter_map(|s| s.hb_ref.map(|hb| (hb, s.subject_id.as_str())))
        .collect();
    let n = labeled.len();
    if n < MIN_SPLIT_SUBJECTS {
        return Err(Error::TooFewSubjects {
            found: n,
            required: MIN_SPLIT_SUBJECTS,
        });
    }
    labeled.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(b.1)));
    let n_test = (test_fraction * n as f64).round() as usize;

    let mut strata: [Vec<&str>; 4] = Default::default();
    for (rank, (_, id)) in labeled.iter().enumerate() {
        strata[rank * 4 / n].push(id);
    }
    let quotas = largest_remainder(n_test, &strata.each_ref().map(Vec::len));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut test = Vec::with_capacity(n_test);
    let mut train = Vec::with_capacity(n - n_test);
    for (stratum, quota) in strata.iter_mut().zip(quotas) {
        stratum.shuffle(&mut rng);
        test.extend(stratum[..quota].iter().map(|s| s.to_string()));
        train.extend(stratum[quota..].iter().map(|s| s.to_string()));
    }
    test.sort();
    train.sort();
    Ok(SplitAssignment { seed, train, test })
}

/// Apportions `total` over groups proportionally to `sizes`; leftover units
/// go to the largest fractional parts, lowest index first on ties.
fn largest_remainder(total: usize, sizes: &[usize]) -> Vec<usize> {
    let n: usize = sizes.iter().sum();
    if n == 0 {
        return vec![0; sizes.len()];
    }
    let mut quotas: Vec<usize> = sizes.iter().map(|s| total * s / n).collect();
    let mut remainders: Vec<(usize, usize)> =
        sizes.iter().enumerate().map(|(i, s)| ((total * s) % n, i)).collect();
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let assigned: usize = quotas.iter().sum();
    for &(_, i) in remainders.iter().take(total - assigned) {
        quotas[i] += 1;
    }
    quotas
}
