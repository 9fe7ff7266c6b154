//! File formats: per-subject signal CSVs, metadata CSV, JSON artifacts and
//! the plot-data CSVs written by the evaluation stages.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::dataset::{Sex, SubjectMeta};
use crate::error::{Error, Result};
use crate::signal::{PpgRecord, Wavelength};

pub const METADATA_HEADER: [&str; 4] = ["subject_id", "age", "sex", "hb_g_per_l"];

fn malformed(path: &Path, reason: impl Into<String>) -> Error {
    Error::MalformedCsv {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Opens an input file; a missing file becomes [`Error::MissingInput`].
pub fn open_input(path: &Path) -> Result<BufReader<File>> {
    match File::open(path) {
        Ok(f) => Ok(BufReader::new(f)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(Error::MissingInput(path.to_path_buf())),
        Err(e) => Err(e.into()),
    }
}

/// Creates an output file, making parent directories as needed.
pub fn create_output(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_reader(open_input(path)?).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = create_output(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn signal_column(nm: Wavelength) -> String {
    format!("ppg_{nm}")
}

/// Location of a subject's signal file inside a signals directory.
pub fn signal_path(dir: &Path, subject_id: &str) -> PathBuf {
    dir.join(format!("{subject_id}.csv"))
}

/// Reads a four-channel signal CSV. Columns `ppg_660 .. ppg_940` are
/// required in any order; a leading `t` column is allowed and ignored.
pub fn read_signal_csv(path: &Path, meta: &SubjectMeta, fs: f64) -> Result<PpgRecord> {
    let mut r = csv::Reader::from_reader(open_input(path)?);
    let header = r.headers().map_err(|e| malformed(path, e.to_string()))?.clone();
    let mut positions = [usize::MAX; 4];
    for (i, name) in header.iter().enumerate() {
        let name = name.trim();
        if name == "t" {
            continue;
        }
        match Wavelength::ALL.iter().find(|w| signal_column(**w) == name) {
            Some(w) if positions[w.index()] == usize::MAX => positions[w.index()] = i,
            Some(_) => return Err(malformed(path, format!("duplicate column {name}"))),
            None => return Err(malformed(path, format!("unexpected column {name:?}"))),
        }
    }
    if let Some(w) = Wavelength::ALL.into_iter().find(|w| positions[w.index()] == usize::MAX) {
        return Err(malformed(path, format!("missing column {}", signal_column(w))));
    }
    let mut channels: [Vec<f64>; 4] = Default::default();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| malformed(path, e.to_string()))?;
        for w in Wavelength::ALL {
            let field = &rec[positions[w.index()]];
            let v: f64 = field.trim().parse().map_err(|_| {
                malformed(path, format!("row {}: {} value {field:?} is not a number", line + 2, signal_column(w)))
            })?;
            channels[w.index()].push(v);
        }
    }
    PpgRecord::new(meta.subject_id.clone(), fs, channels, meta.age, meta.sex, meta.hb_ref)
}

/// Writes a signal CSV with a time column derived from the sampling rate.
pub fn write_signal_csv<W: Write>(record: &PpgRecord, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["t".to_string()];
    header.extend(Wavelength::ALL.map(signal_column));
    w.write_record(&header)?;
    for i in 0..record.len() {
        let mut rec = vec![(i as f64 / record.fs()).to_string()];
        rec.extend(Wavelength::ALL.map(|wl| record.channel(wl)[i].to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads and validates the metadata CSV; subject ids must be unique.
pub fn read_metadata_csv(path: &Path) -> Result<Vec<SubjectMeta>> {
    let mut r = csv::Reader::from_reader(open_input(path)?);
    let header = r.headers().map_err(|e| malformed(path, e.to_string()))?.clone();
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    if names != METADATA_HEADER {
        return Err(malformed(
            path,
            format!("header must be {}, got {}", METADATA_HEADER.join(","), names.join(",")),
        ));
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| malformed(path, e.to_string()))?;
        let row = line + 2;
        let id = rec[0].trim().to_string();
        if id.is_empty() {
            return Err(malformed(path, format!("row {row}: empty subject_id")));
        }
        if !seen.insert(id.clone()) {
            return Err(malformed(path, format!("row {row}: duplicate subject_id {id}")));
        }
        let age: f64 = rec[1]
            .trim()
            .parse()
            .map_err(|_| malformed(path, format!("row {row}: age {:?} is not a number", &rec[1])))?;
        let sex: Sex = rec[2].parse().map_err(|e: String| malformed(path, format!("row {row}: {e}")))?;
        let hb = rec[3].trim();
        let hb_ref = if hb.is_empty() {
            None
        } else {
            Some(
                hb.parse()
                    .map_err(|_| malformed(path, format!("row {row}: hb {hb:?} is not a number")))?,
            )
        };
        let meta = SubjectMeta {
            subject_id: id,
            age,
            sex,
            hb_ref,
        };
        meta.validate()?;
        out.push(meta);
    }
    Ok(out)
}

pub fn write_metadata_csv<W: Write>(meta: &[SubjectMeta], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(METADATA_HEADER)?;
    for m in meta {
        w.write_record([
            m.subject_id.clone(),
            m.age.to_string(),
            m.sex.code().to_string(),
            m.hb_ref.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Loads every subject listed in the metadata from `signals_dir`.
pub fn load_records(signals_dir: &Path, meta: &[SubjectMeta], fs: f64) -> Result<Vec<PpgRecord>> {
    meta.iter()
        .map(|m| read_signal_csv(&signal_path(signals_dir, &m.subject_id), m, fs))
        .collect()
}

/// Writes one signal CSV per record into `signals_dir` plus the metadata CSV.
pub fn write_corpus(metadata_path: &Path, signals_dir: &Path, records: &[PpgRecord]) -> Result<()> {
    std::fs::create_dir_all(signals_dir)?;
    for rec in records {
        write_signal_csv(rec, create_output(&signal_path(signals_dir, rec.subject_id()))?)?;
    }
    let meta: Vec<SubjectMeta> = records
        .iter()
        .map(|r| SubjectMeta {
            subject_id: r.subject_id().to_string(),
            age: r.age,
            sex: r.sex,
            hb_ref: r.hb_ref,
        })
        .collect();
    write_metadata_csv(&meta, create_output(metadata_path)?)
}

/// One held-out or training prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub subject_id: String,
    pub hb_pred: f64,
    pub hb_ref: Option<f64>,
    pub split: Option<String>,
}

pub fn write_predictions_csv<W: Write>(rows: &[PredictionRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["subject_id", "hb_pred_g_l", "hb_ref_g_l", "split"])?;
    for r in rows {
        w.write_record([
            r.subject_id.clone(),
            r.hb_pred.to_string(),
            r.hb_ref.map(|v| v.to_string()).unwrap_or_default(),
            r.split.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_predictions_csv(path: &Path) -> Result<Vec<PredictionRow>> {
    let mut r = csv::Reader::from_reader(open_input(path)?);
    let header = r.headers().map_err(|e| malformed(path, e.to_string()))?.clone();
    let expected = ["subject_id", "hb_pred_g_l", "hb_ref_g_l", "split"];
    if header.iter().map(str::trim).collect::<Vec<_>>() != expected {
        return Err(malformed(path, format!("header must be {}", expected.join(","))));
    }
    let num = |s: &str, row: usize| -> Result<Option<f64>> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(None);
        }
        s.parse()
            .map(Some)
            .map_err(|_| malformed(path, format!("row {row}: {s:?} is not a number")))
    };
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| malformed(path, e.to_string()))?;
        let row = line + 2;
        let hb_pred = num(&rec[1], row)?.ok_or_else(|| malformed(path, format!("row {row}: empty prediction")))?;
        out.push(PredictionRow {
            subject_id: rec[0].to_string(),
            hb_pred,
            hb_ref: num(&rec[2], row)?,
            split: Some(rec[3].to_string()).filter(|s| !s.is_empty()),
        });
    }
    Ok(out)
}

/// Scatter data `hb_ref,hb_pred,split` for labeled rows.
pub fn write_scatter_csv<W: Write>(rows: &[PredictionRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["hb_ref", "hb_pred", "split"])?;
    for r in rows {
        if let Some(reference) = r.hb_ref {
            w.write_record([
                reference.to_string(),
                r.hb_pred.to_string(),
                r.split.clone().unwrap_or_default(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Two-column `name,value` CSV.
pub fn write_named_values_csv<W: Write>(header: [&str; 2], rows: &[(String, f64)], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header)?;
    for (name, v) in rows {
        w.write_record([name.clone(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
