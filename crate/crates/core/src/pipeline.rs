//! Stage orchestration: in-memory stage functions plus file-level wrappers
//! that read and write the artifacts in the output directory.

use std::collections::BTreeSet;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::dataset::{aggregate_subjects, split_subjects, SplitAssignment, SubjectMeta, SubjectTable};
use crate::error::{Error, Result};
use crate::explain::{dependence_data, global_importance, tree_shap, waterfall_data, GlobalImportance, ShapExplanation, WaterfallStep};
use crate::features::{build_feature_table, clean_feature_table, CleaningReport, FeatureTable};
use crate::gbm::{evaluate, gain_importance, train, GbmModel, RegressionMetrics, TrainOutput};
use crate::io::{
    create_output, load_records, open_input, read_json, read_metadata_csv, read_predictions_csv,
    write_corpus, write_json, write_named_values_csv, write_predictions_csv, write_scatter_csv, PredictionRow,
};
use crate::screening::{
    bland_altman, screen_subjects, threshold_sensitivity, write_bland_altman_csv, write_screening_csv,
    write_sensitivity_csv, BlandAltman, ScreeningResult, SensitivityPoint,
};
use crate::signal::{design_bandpass, quality_indices, segment_record, PpgRecord, QualityIndices, SegmentGroup, Wavelength};
use crate::synth::generate;

pub const QUALITY_JSON: &str = "quality.json";
pub const RAW_FEATURES_CSV: &str = "segment_features_raw.csv";
pub const FEATURES_CSV: &str = "segment_features.csv";
pub const CLEANING_JSON: &str = "cleaning_report.json";
pub const SUBJECTS_CSV: &str = "subject_features.csv";
pub const SPLIT_JSON: &str = "split.json";
pub const MODEL_JSON: &str = "model.json";
pub const TRACE_CSV: &str = "training_trace.csv";
pub const AUDIT_JSON: &str = "audit.json";
pub const GAIN_CSV: &str = "gain_importance.csv";
pub const PREDICTIONS_CSV: &str = "predictions.csv";
pub const EXPLANATIONS_JSON: &str = "explanations.json";
pub const SHAP_CSV: &str = "shap_importance.csv";
pub const SCREENING_CSV: &str = "screening.csv";
pub const SENSITIVITY_CSV: &str = "sensitivity.csv";
pub const METRICS_JSON: &str = "metrics.json";
pub const SCATTER_CSV: &str = "scatter.csv";
pub const BLAND_ALTMAN_CSV: &str = "bland_altman.csv";

pub const TRAIN_LABEL: &str = "train";
pub const TEST_LABEL: &str = "test";

pub fn meta_from_records(records: &[PpgRecord]) -> Vec<SubjectMeta> {
    records
        .iter()
        .map(|r| SubjectMeta {
            subject_id: r.subject_id().to_string(),
            age: r.age,
            sex: r.sex,
            hb_ref: r.hb_ref,
        })
        .collect()
}

/// Segments every record and bandpasses each window.
pub fn segment_and_filter(records: &[PpgRecord], cfg: &PipelineConfig) -> Result<Vec<SegmentGroup>> {
    let design = design_bandpass(cfg.fs, cfg.filter)?;
    let per_record = records
        .par_iter()
        .map(|rec| {
            Ok(segment_record(rec, cfg.window_len)?
                .into_iter()
                .map(|g| g.filter(&design))
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_record.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelQuality {
    pub wavelength: Wavelength,
    pub raw: QualityIndices,
    pub filtered: QualityIndices,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentQuality {
    pub subject_id: String,
    pub index: usize,
    pub channels: Vec<ChannelQuality>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualitySummary {
    /// Channel windows assessed.
    pub n_windows: usize,
    pub sqi_improved_fraction: f64,
    pub snr_improved_fraction: f64,
    pub mean_raw_sqi: f64,
    pub mean_filtered_sqi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub summary: QualitySummary,
    pub segments: Vec<SegmentQuality>,
}

/// SQI and SNR of every channel window before and after filtering.
pub fn assess_quality(groups: &[SegmentGroup], cfg: &PipelineConfig) -> Result<QualityReport> {
    let band = cfg.features.band;
    let welch = &cfg.features.welch;
    let segments = groups
        .par_iter()
        .map(|g| {
            let channels = g
                .channels
                .iter()
                .map(|s| {
                    let filtered = s.filtered.as_deref().unwrap_or(&s.raw);
                    Ok(ChannelQuality {
                        wavelength: s.wavelength,
                        raw: quality_indices(&s.raw, s.fs, band, welch)?,
                        filtered: quality_indices(filtered, s.fs, band, welch)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SegmentQuality {
                subject_id: g.subject_id.clone(),
                index: g.index,
                channels,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let all: Vec<&ChannelQuality> = segments.iter().flat_map(|s| &s.channels).collect();
    let n = all.len();
    let frac = |count: usize| if n == 0 { 0.0 } else { count as f64 / n as f64 };
    let mean = |f: &dyn Fn(&ChannelQuality) -> f64| {
        if n == 0 {
            0.0
        } else {
            all.iter().map(|c| f(c)).sum::<f64>() / n as f64
        }
    };
    let summary = QualitySummary {
        n_windows: n,
        sqi_improved_fraction: frac(all.iter().filter(|c| c.filtered.sqi >= c.raw.sqi).count()),
        snr_improved_fraction: frac(all.iter().filter(|c| c.filtered.snr_db >= c.raw.snr_db).count()),
        mean_raw_sqi: mean(&|c| c.raw.sqi),
        mean_filtered_sqi: mean(&|c| c.filtered.sqi),
    };
    Ok(QualityReport { summary, segments })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStage {
    pub raw: FeatureTable,
    pub cleaned: FeatureTable,
    pub report: CleaningReport,
}

pub fn extract_features(groups: &[SegmentGroup], cfg: &PipelineConfig) -> Result<FeatureStage> {
    let raw = build_feature_table(groups, &cfg.features)?;
    let (cleaned, report) = clean_feature_table(&raw, &cfg.cleaning)?;
    Ok(FeatureStage { raw, cleaned, report })
}

/// Records through to the subject table.
pub fn prepare_subjects(records: &[PpgRecord], cfg: &PipelineConfig) -> Result<(FeatureStage, SubjectTable)> {
    let groups = segment_and_filter(records, cfg)?;
    let features = extract_features(&groups, cfg)?;
    let subjects = aggregate_subjects(&features.cleaned, &meta_from_records(records), &cfg.aggregation)?;
    Ok((features, subjects))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditRole {
    /// Label-driven partitioning; sees every labeled id.
    Split,
    /// Rows that entered model fitting.
    Training,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub stage: String,
    pub role: AuditRole,
    pub subject_ids: Vec<String>,
}

/// Subject ids consumed per stage.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AuditLog {
    pub entries: Vec<AuditEntry>,
}

impl AuditLog {
    pub fn record(&mut self, stage: &str, role: AuditRole, ids: impl IntoIterator<Item = String>) {
        self.entries.push(AuditEntry {
            stage: stage.to_string(),
            role,
            subject_ids: ids.into_iter().collect(),
        });
    }

    /// Every id seen by a training-role stage.
    pub fn training_ids(&self) -> BTreeSet<String> {
        self.entries
            .iter()
            .filter(|e| e.role == AuditRole::Training)
            .flat_map(|e| e.subject_ids.iter().cloned())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRun {
    pub split: SplitAssignment,
    pub output: TrainOutput,
    pub audit: AuditLog,
}

/// Splits the subjects and fits the model on the training side only.
pub fn fit(subjects: &SubjectTable, cfg: &PipelineConfig) -> Result<TrainingRun> {
    fit_with_seed(subjects, cfg, cfg.split.seed)
}

pub fn fit_with_seed(subjects: &SubjectTable, cfg: &PipelineConfig, seed: u64) -> Result<TrainingRun> {
    let mut audit = AuditLog::default();
    let split = split_subjects(&subjects.subjects, cfg.split.test_fraction, seed)?;
    audit.record(
        "split",
        AuditRole::Split,
        split.train.iter().chain(&split.test).cloned(),
    );
    let train_ids = split.train_set();
    let mut ids = Vec::new();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for s in subjects.select(&train_ids) {
        let hb = s.hb_ref.ok_or_else(|| {
            Error::InvalidTrainingData(format!("training subject {} has no reference Hb", s.subject_id))
        })?;
        ids.push(s.subject_id.clone());
        x.push(s.model_input());
        y.push(hb);
    }
    audit.record("fit", AuditRole::Training, ids);
    let output = train(&x, &y, subjects.model_feature_names(), &cfg.gbm)?;
    Ok(TrainingRun { split, output, audit })
}

/// Predicts every subject; rows are tagged with their split side when known.
pub fn predict_subjects(
    model: &GbmModel,
    subjects: &SubjectTable,
    split: Option<&SplitAssignment>,
) -> Result<Vec<PredictionRow>> {
    model.check_names(&subjects.model_feature_names())?;
    let (train_ids, test_ids) = match split {
        Some(s) => (s.train_set(), s.test_set()),
        None => Default::default(),
    };
    subjects
        .subjects
        .iter()
        .map(|s| {
            let split = if test_ids.contains(&s.subject_id) {
                Some(TEST_LABEL.to_string())
            } else if train_ids.contains(&s.subject_id) {
                Some(TRAIN_LABEL.to_string())
            } else {
                None
            };
            Ok(PredictionRow {
                subject_id: s.subject_id.clone(),
                hb_pred: model.predict_row(&s.model_input()),
                hb_ref: s.hb_ref,
                split,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectExplanation {
    pub subject_id: String,
    #[serde(flatten)]
    pub explanation: ShapExplanation,
    pub efficiency_gap: f64,
    pub waterfall: Vec<WaterfallStep>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplainOutput {
    pub subjects: Vec<SubjectExplanation>,
    pub global: GlobalImportance,
    pub dependence: Vec<(String, Vec<(f64, f64)>)>,
}

pub fn explain_subjects(model: &GbmModel, subjects: &SubjectTable, cfg: &PipelineConfig) -> Result<ExplainOutput> {
    model.check_names(&subjects.model_feature_names())?;
    let rows: Vec<Vec<f64>> = subjects.subjects.iter().map(|s| s.model_input()).collect();
    let explained = subjects
        .subjects
        .par_iter()
        .zip(&rows)
        .map(|(s, x)| {
            let e = tree_shap(model, x)?;
            Ok(SubjectExplanation {
                subject_id: s.subject_id.clone(),
                efficiency_gap: e.efficiency_gap(),
                waterfall: waterfall_data(&e),
                explanation: e,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let global = global_importance(model, &rows)?;
    let names: Vec<String> = if cfg.explain.dependence_features.is_empty() {
        global
            .entries
            .iter()
            .take(cfg.explain.top_dependence)
            .map(|(n, _)| n.clone())
            .collect()
    } else {
        cfg.explain.dependence_features.clone()
    };
    let dependence = names
        .into_iter()
        .map(|n| {
            let d = dependence_data(model, &rows, &n)?;
            Ok((n, d))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExplainOutput {
        subjects: explained,
        global,
        dependence,
    })
}

/// Screens each prediction with the sex-specific adult rule.
pub fn screen_predictions(
    predictions: &[PredictionRow],
    subjects: &SubjectTable,
    offsets: &[f64],
) -> Result<(Vec<ScreeningResult>, Vec<SensitivityPoint>)> {
    let rows = predictions
        .iter()
        .map(|p| {
            let s = subjects
                .get(&p.subject_id)
                .ok_or_else(|| Error::MissingMetadata(p.subject_id.clone()))?;
            Ok((p.subject_id.clone(), p.hb_pred, s.sex))
        })
        .collect::<Result<Vec<_>>>()?;
    let results = screen_subjects(&rows);
    let pairs: Vec<_> = rows.iter().map(|(_, hb, sex)| (*hb, *sex)).collect();
    Ok((results, threshold_sensitivity(&pairs, offsets)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgreementSummary {
    pub bias: f64,
    pub sd: f64,
    pub loa_low: f64,
    pub loa_high: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatedSplitSummary {
    pub seeds: Vec<u64>,
    pub test_mae: Vec<f64>,
    pub test_rmse: Vec<f64>,
    pub mae_mean: f64,
    pub mae_sd: f64,
    pub rmse_mean: f64,
    pub rmse_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub train: Option<RegressionMetrics>,
    pub test: Option<RegressionMetrics>,
    /// Agreement on the test side, or on all labeled rows without a split.
    pub bland_altman: Option<AgreementSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub repeated_splits: Option<RepeatedSplitSummary>,
}

fn labeled(rows: &[PredictionRow], split: Option<&str>) -> (Vec<f64>, Vec<f64>) {
    rows.iter()
        .filter(|r| split.is_none() || r.split.as_deref() == split)
        .filter_map(|r| r.hb_ref.map(|y| (r.hb_pred, y)))
        .unzip()
}

fn metrics_or_none(pred: &[f64], reference: &[f64]) -> Result<Option<RegressionMetrics>> {
    if pred.len() < 2 {
        Ok(None)
    } else {
        evaluate(pred, reference).map(Some)
    }
}

pub fn evaluate_predictions(rows: &[PredictionRow]) -> Result<(EvaluationReport, Option<BlandAltman>)> {
    let (p_train, y_train) = labeled(rows, Some(TRAIN_LABEL));
    let (p_test, y_test) = labeled(rows, Some(TEST_LABEL));
    let (p_ba, y_ba) = if p_test.is_empty() {
        labeled(rows, None)
    } else {
        (p_test.clone(), y_test.clone())
    };
    let ba = if p_ba.len() >= 2 {
        Some(bland_altman(&p_ba, &y_ba)?)
    } else {
        None
    };
    let report = EvaluationReport {
        train: metrics_or_none(&p_train, &y_train)?,
        test: metrics_or_none(&p_test, &y_test)?,
        bland_altman: ba.as_ref().map(|b| AgreementSummary {
            bias: b.bias,
            sd: b.sd,
            loa_low: b.loa_low,
            loa_high: b.loa_high,
            n: b.pairs.len(),
        }),
        repeated_splits: None,
    };
    Ok((report, ba))
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = if v.len() > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

/// Test MAE/RMSE over `n` further split seeds following the configured one.
pub fn repeated_splits(subjects: &SubjectTable, cfg: &PipelineConfig, n: usize) -> Result<RepeatedSplitSummary> {
    let seeds: Vec<u64> = (1..=n as u64).map(|k| cfg.split.seed.wrapping_add(k)).collect();
    let runs = seeds
        .par_iter()
        .map(|&seed| {
            let run = fit_with_seed(subjects, cfg, seed)?;
            let rows = predict_subjects(&run.output.model, subjects, Some(&run.split))?;
            let (p, y) = labeled(&rows, Some(TEST_LABEL));
            evaluate(&p, &y)
        })
        .collect::<Result<Vec<_>>>()?;
    let test_mae: Vec<f64> = runs.iter().map(|m| m.mae).collect();
    let test_rmse: Vec<f64> = runs.iter().map(|m| m.rmse).collect();
    let (mae_mean, mae_sd) = mean_sd(&test_mae);
    let (rmse_mean, rmse_sd) = mean_sd(&test_rmse);
    Ok(RepeatedSplitSummary {
        seeds,
        test_mae,
        test_rmse,
        mae_mean,
        mae_sd,
        rmse_mean,
        rmse_sd,
    })
}

// File-level stages.

fn load_inputs(cfg: &PipelineConfig) -> Result<Vec<PpgRecord>> {
    let meta = read_metadata_csv(&cfg.data.metadata)?;
    load_records(&cfg.data.signals_dir, &meta, cfg.fs)
}

fn read_feature_table(path: &Path) -> Result<FeatureTable> {
    FeatureTable::read_csv(open_input(path)?, path)
}

fn read_subject_table(path: &Path) -> Result<SubjectTable> {
    SubjectTable::read_csv(open_input(path)?, path)
}

pub fn stage_synth(cfg: &PipelineConfig) -> Result<usize> {
    let records = generate(&cfg.synth)?;
    write_corpus(&cfg.data.metadata, &cfg.data.signals_dir, &records)?;
    Ok(records.len())
}

pub fn stage_quality(cfg: &PipelineConfig) -> Result<QualityReport> {
    let records = load_inputs(cfg)?;
    let report = assess_quality(&segment_and_filter(&records, cfg)?, cfg)?;
    write_json(&cfg.out(QUALITY_JSON), &report)?;
    Ok(report)
}

pub fn stage_features(cfg: &PipelineConfig) -> Result<FeatureStage> {
    let records = load_inputs(cfg)?;
    let stage = extract_features(&segment_and_filter(&records, cfg)?, cfg)?;
    stage.raw.write_csv(create_output(&cfg.out(RAW_FEATURES_CSV))?)?;
    stage.cleaned.write_csv(create_output(&cfg.out(FEATURES_CSV))?)?;
    write_json(&cfg.out(CLEANING_JSON), &stage.report)?;
    Ok(stage)
}

pub fn stage_aggregate(cfg: &PipelineConfig) -> Result<SubjectTable> {
    let table = read_feature_table(&cfg.out(FEATURES_CSV))?;
    let meta = read_metadata_csv(&cfg.data.metadata)?;
    let subjects = aggregate_subjects(&table, &meta, &cfg.aggregation)?;
    subjects.write_csv(create_output(&cfg.out(SUBJECTS_CSV))?)?;
    Ok(subjects)
}

pub fn stage_train(cfg: &PipelineConfig) -> Result<TrainingRun> {
    let subjects = read_subject_table(&cfg.out(SUBJECTS_CSV))?;
    let run = fit(&subjects, cfg)?;
    write_json(&cfg.out(SPLIT_JSON), &run.split)?;
    run.output.model.save(&cfg.out(MODEL_JSON))?;
    write_json(&cfg.out(AUDIT_JSON), &run.audit)?;
    let trace: Vec<(String, f64)> = run
        .output
        .rmse_trace
        .iter()
        .enumerate()
        .map(|(i, r)| (i.to_string(), *r))
        .collect();
    write_named_values_csv(["n_trees", "train_rmse"], &trace, create_output(&cfg.out(TRACE_CSV))?)?;
    write_named_values_csv(
        ["feature", "gain"],
        &gain_importance(&run.output.model),
        create_output(&cfg.out(GAIN_CSV))?,
    )?;
    Ok(run)
}

pub fn stage_predict(cfg: &PipelineConfig) -> Result<Vec<PredictionRow>> {
    let model = GbmModel::load(&cfg.out(MODEL_JSON))?;
    let subjects = read_subject_table(&cfg.out(SUBJECTS_CSV))?;
    let split_path = cfg.out(SPLIT_JSON);
    let split: Option<SplitAssignment> = if split_path.exists() {
        Some(read_json(&split_path)?)
    } else {
        None
    };
    let rows = predict_subjects(&model, &subjects, split.as_ref())?;
    write_predictions_csv(&rows, create_output(&cfg.out(PREDICTIONS_CSV))?)?;
    Ok(rows)
}

fn file_safe(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect()
}

pub fn dependence_file(feature: &str) -> String {
    format!("dependence_{}.csv", file_safe(feature))
}

pub fn stage_explain(cfg: &PipelineConfig) -> Result<ExplainOutput> {
    let model = GbmModel::load(&cfg.out(MODEL_JSON))?;
    let subjects = read_subject_table(&cfg.out(SUBJECTS_CSV))?;
    let out = explain_subjects(&model, &subjects, cfg)?;
    write_json(&cfg.out(EXPLANATIONS_JSON), &out.subjects)?;
    write_named_values_csv(
        ["feature", "mean_abs_shap"],
        &out.global.entries,
        create_output(&cfg.out(SHAP_CSV))?,
    )?;
    for (name, pairs) in &out.dependence {
        let mut w = csv::Writer::from_writer(create_output(&cfg.out(&dependence_file(name)))?);
        w.write_record(["value", "shap"])?;
        for (v, phi) in pairs {
            w.write_record([v.to_string(), phi.to_string()])?;
        }
        w.flush()?;
    }
    Ok(out)
}

pub fn stage_screen(cfg: &PipelineConfig) -> Result<(Vec<ScreeningResult>, Vec<SensitivityPoint>)> {
    let predictions = read_predictions_csv(&cfg.out(PREDICTIONS_CSV))?;
    let subjects = read_subject_table(&cfg.out(SUBJECTS_CSV))?;
    let (results, sensitivity) = screen_predictions(&predictions, &subjects, &cfg.screening_offsets_g_l)?;
    write_screening_csv(&results, create_output(&cfg.out(SCREENING_CSV))?)?;
    write_sensitivity_csv(&sensitivity, create_output(&cfg.out(SENSITIVITY_CSV))?)?;
    Ok((results, sensitivity))
}

pub fn stage_evaluate(cfg: &PipelineConfig) -> Result<EvaluationReport> {
    let rows = read_predictions_csv(&cfg.out(PREDICTIONS_CSV))?;
    let (mut report, ba) = evaluate_predictions(&rows)?;
    if cfg.evaluation.repeat_splits > 0 {
        let subjects = read_subject_table(&cfg.out(SUBJECTS_CSV))?;
        report.repeated_splits = Some(repeated_splits(&subjects, cfg, cfg.evaluation.repeat_splits)?);
    }
    write_json(&cfg.out(METRICS_JSON), &report)?;
    write_scatter_csv(&rows, create_output(&cfg.out(SCATTER_CSV))?)?;
    if let Some(ba) = &ba {
        write_bland_altman_csv(ba, create_output(&cfg.out(BLAND_ALTMAN_CSV))?)?;
    }
    Ok(report)
}

/// Runs every stage after `synth` in order.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<EvaluationReport> {
    let quality = stage_quality(cfg)?;
    log::info!(
        "quality: {} windows, filtered SQI >= raw in {:.1}%",
        quality.summary.n_windows,
        100.0 * quality.summary.sqi_improved_fraction
    );
    let features = stage_features(cfg)?;
    log::info!(
        "features: {} rows, {} columns kept, {} dropped",
        features.cleaned.rows.len(),
        features.cleaned.columns.len(),
        features.report.dropped.len()
    );
    let subjects = stage_aggregate(cfg)?;
    log::info!("aggregate: {} subjects", subjects.subjects.len());
    let run = stage_train(cfg)?;
    log::info!(
        "train: {} train / {} test subjects, {} trees",
        run.split.train.len(),
        run.split.test.len(),
        run.output.model.trees.len()
    );
    stage_predict(cfg)?;
    stage_explain(cfg)?;
    stage_screen(cfg)?;
    stage_evaluate(cfg)
}
