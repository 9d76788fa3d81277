//! Command orchestration, configuration and on-disk artifacts.
//!
//! Every command takes a [`PipelineConfig`]; the `mgmt` binary builds one
//! from a JSON file plus command-line overrides.
//!
//! `run` writes to `out_dir`:
//! - `selection_report.csv`: one rule per feature (`feature_name,threshold,p_value,selected`)
//! - `eval_report.json`: the [`EvalReport`]
//! - `oof_scores.csv`: `subject_id,label,score`, score empty when the subject's fold was skipped
//! - `bundle/`: `bundle.json`, one `model_NNN.json` per fold, and the selection rules

use std::fs::File;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{predict_members, repeated_cv, CvConfig, CvEnsemble, EvalReport, FoldMember, OofScore, SelectionMode};
use crate::forest::{grid_search, ForestModel, ForestParams, Grid, GridSearchResult};
use crate::latent::{load_latent_csv, merge_tables, DEFAULT_LATENT_DIM};
use crate::nifti::{read_label_mask, read_volume, Modality};
use crate::radiomics::{all_feature_names, extract_all, RadiomicsConfig};
use crate::seed;
use crate::selection::{select_and_binarize, SelectionReport};
use crate::synth::{write_cohort, CohortFiles, SyntheticSpec};
use crate::table::{format_value, FeatureTable, Labels};

pub const BUNDLE_FORMAT: &str = "mgmt-bundle/1";

/// All pipeline settings. Every key is optional in the JSON file.
///
/// `forest.seed` is not used by `run`: forests are seeded from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Gray levels for texture discretization.
    pub bin_count: usize,
    pub gldm_alpha: u16,
    /// Significance level for feature selection.
    pub p_min: f64,
    /// Subjects held out per cross-validation fold.
    pub holdout: usize,
    /// Cross-validation repeats with reshuffled folds.
    pub repeats: usize,
    pub selection: SelectionMode,
    pub oof: OofScore,
    pub forest: ForestParams,
    /// When set, `run` first picks `max_depth` and `min_samples_split` by
    /// cross-validated AUC over this grid.
    pub grid_search: Option<Grid>,
    pub seed: u64,
    /// Worker threads; `None` uses all cores. Never changes results.
    pub workers: Option<usize>,
    pub latent_dim: usize,
    /// Subject manifest CSV `subject_id,t1,t1ce,t2,flair,mask`; relative
    /// image paths are resolved against the manifest's directory.
    pub manifest: Option<PathBuf>,
    /// Radiomic feature table written by `extract`.
    pub features: Option<PathBuf>,
    /// Latent vectors CSV `subject_id,l000,...`.
    pub latent: Option<PathBuf>,
    /// Labels CSV `subject_id,mgmt`.
    pub labels: Option<PathBuf>,
    /// Model bundle directory read by `predict`.
    pub bundle: Option<PathBuf>,
    /// Predictions CSV `subject_id,probability` read by `evaluate`.
    pub predictions: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub synthetic: SyntheticSpec,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            bin_count: 32,
            gldm_alpha: 0,
            p_min: 5e-4,
            holdout: 5,
            repeats: 10,
            selection: SelectionMode::Global,
            oof: OofScore::VoteFraction,
            forest: ForestParams::default(),
            grid_search: None,
            seed: 0,
            workers: None,
            latent_dim: DEFAULT_LATENT_DIM,
            manifest: None,
            features: None,
            latent: None,
            labels: None,
            bundle: None,
            predictions: None,
            out_dir: PathBuf::from("out"),
            synthetic: SyntheticSpec::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_json(s: &str) -> Result<PipelineConfig> {
        serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        PipelineConfig::from_json(&text)
    }

    pub fn radiomics(&self) -> RadiomicsConfig {
        RadiomicsConfig {
            bin_count: self.bin_count,
            gldm_alpha: self.gldm_alpha,
        }
    }

    pub fn cv(&self) -> CvConfig {
        CvConfig {
            holdout: self.holdout,
            p_min: self.p_min,
            selection: self.selection,
            oof: self.oof,
            repeats: self.repeats,
            seed: seed::derive(self.seed, "cv"),
        }
    }

    pub fn forest_params(&self) -> ForestParams {
        ForestParams {
            seed: seed::derive(self.seed, "forest"),
            ..self.forest.clone()
        }
    }

    /// The settings that determine a run's results, without paths or the
    /// worker count.
    pub fn echo(&self) -> PipelineConfig {
        PipelineConfig {
            workers: None,
            manifest: None,
            features: None,
            latent: None,
            labels: None,
            bundle: None,
            predictions: None,
            out_dir: PipelineConfig::default().out_dir,
            ..self.clone()
        }
    }

    fn require<'a>(&self, path: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
        path.as_deref().ok_or_else(|| Error::Config(format!("`{key}` is not set")))
    }

    /// Run `f` on a worker pool of the configured size.
    pub fn with_workers<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        match self.workers {
            None => Ok(f()),
            Some(0) => Err(Error::Config("workers must be at least 1".into())),
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Error::Config(e.to_string()))?;
                Ok(pool.install(f))
            }
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// One manifest row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub subject_id: String,
    /// Ordered as [`Modality::ALL`].
    pub images: [PathBuf; 4],
    pub mask: PathBuf,
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let expected = ["subject_id", "t1", "t1ce", "t2", "flair", "mask"];
    if rdr.headers()?.iter().ne(expected) {
        return Err(Error::InvalidData(format!("manifest header must be `{}`", expected.join(","))));
    }
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            Ok(ManifestEntry {
                subject_id: rec[0].to_string(),
                images: std::array::from_fn(|k| resolve(base, &rec[k + 1])),
                mask: resolve(base, &rec[5]),
            })
        })
        .collect()
}

fn extract_subject(entry: &ManifestEntry, config: &RadiomicsConfig) -> Result<crate::radiomics::FeatureVector> {
    let mut volumes = Vec::with_capacity(4);
    for (path, modality) in entry.images.iter().zip(Modality::ALL) {
        let volume = read_volume(path).map_err(|e| Error::InvalidData(format!("{}: {e}", path.display())))?;
        volumes.push(volume.with_modality(modality));
    }
    let mask = read_label_mask(&entry.mask).map_err(|e| Error::InvalidData(format!("{}: {e}", entry.mask.display())))?;
    let volumes: [_; 4] = volumes.try_into().expect("four modalities");
    extract_all(&volumes, &mask, config)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractOutcome {
    pub table: FeatureTable,
    /// `(subject_id, reason)` for subjects that could not be extracted.
    pub skipped: Vec<(String, String)>,
    pub path: PathBuf,
}

/// Extract features for every manifest subject into
/// `out_dir/features.csv` (plus its missing-flag sidecar). Subjects that
/// fail are skipped and reported; callers should treat a nonempty
/// `skipped` as failure.
pub fn cmd_extract(config: &PipelineConfig) -> Result<ExtractOutcome> {
    let manifest = config.require(&config.manifest, "manifest")?;
    let entries = read_manifest(manifest)?;
    let radiomics = config.radiomics();
    let results = config.with_workers(|| {
        entries
            .par_iter()
            .map(|e| extract_subject(e, &radiomics))
            .collect::<Vec<_>>()
    })?;

    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (entry, result) in entries.iter().zip(results) {
        match result {
            Ok(fv) => rows.push((entry.subject_id.clone(), fv)),
            Err(e) => {
                eprintln!("skipped {}: {e}", entry.subject_id);
                skipped.push((entry.subject_id.clone(), e.to_string()));
            }
        }
    }
    let table = if rows.is_empty() {
        FeatureTable::new(Vec::new(), all_feature_names(), Vec::new())?
    } else {
        FeatureTable::from_vectors(rows)?
    };
    eprintln!(
        "extracted {} subjects ({} skipped), {} features, {} missing values",
        table.n_rows(),
        skipped.len(),
        table.n_cols(),
        table.missing_count()
    );
    create_dir(&config.out_dir)?;
    let path = config.out_dir.join("features.csv");
    table.write_csv(&path)?;
    Ok(ExtractOutcome { table, skipped, path })
}

/// The feature table `run` trains on: radiomics, latent, or both merged.
pub fn load_training_table(config: &PipelineConfig) -> Result<FeatureTable> {
    let radiomics = config.features.as_deref().map(FeatureTable::read_csv).transpose()?;
    let latent = config
        .latent
        .as_deref()
        .map(|p| load_latent_csv(p, config.latent_dim))
        .transpose()?;
    match (radiomics, latent) {
        (Some(r), Some(l)) => {
            let (merged, report) = merge_tables(&r, &l.table)?;
            let dropped = report.dropped();
            if !dropped.is_empty() {
                eprintln!("merge dropped {} subjects: {}", dropped.len(), dropped.join(", "));
            }
            Ok(merged)
        }
        (Some(r), None) => Ok(r),
        (None, Some(l)) => Ok(l.table),
        (None, None) => Err(Error::Config("set `features`, `latent`, or both".into())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct BundleMember {
    fold: usize,
    model: String,
    selection: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct BundleIndex {
    format: String,
    p_min: f64,
    selection: SelectionMode,
    members: Vec<BundleMember>,
    config: PipelineConfig,
}

/// Fold models plus the rules that binarize their inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub members: Vec<FoldMember>,
    /// Rules shared by all members (global selection).
    pub selection: Option<SelectionReport>,
    pub config: PipelineConfig,
}

impl ModelBundle {
    pub fn from_ensemble(ens: &CvEnsemble, config: &PipelineConfig) -> ModelBundle {
        ModelBundle {
            members: ens.members.clone(),
            selection: ens.selection.clone(),
            config: config.echo(),
        }
    }

    pub fn predict_table(&self, raw: &FeatureTable) -> Result<Vec<f64>> {
        predict_members(&self.members, self.selection.as_ref(), raw)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        create_dir(dir)?;
        if let Some(report) = &self.selection {
            report.write_csv(&dir.join("selection.csv"))?;
        }
        let mut members = Vec::with_capacity(self.members.len());
        for m in &self.members {
            let model = format!("model_{:03}.json", m.fold);
            write_file(&dir.join(&model), m.model.to_json()?)?;
            let selection = match &m.selection {
                Some(report) => {
                    let name = format!("selection_{:03}.csv", m.fold);
                    report.write_csv(&dir.join(&name))?;
                    name
                }
                None => "selection.csv".to_string(),
            };
            members.push(BundleMember { fold: m.fold, model, selection });
        }
        let index = BundleIndex {
            format: BUNDLE_FORMAT.to_string(),
            p_min: self.config.p_min,
            selection: self.config.selection,
            members,
            config: self.config.clone(),
        };
        write_file(&dir.join("bundle.json"), serde_json::to_string_pretty(&index)? + "\n")
    }

    pub fn read(dir: &Path) -> Result<ModelBundle> {
        let index_path = dir.join("bundle.json");
        let text = std::fs::read_to_string(&index_path).map_err(|e| Error::io(&index_path, e))?;
        let index: BundleIndex = serde_json::from_str(&text)?;
        if index.format != BUNDLE_FORMAT {
            return Err(Error::InvalidData(format!("unsupported bundle format `{}`", index.format)));
        }
        let shared = match index.selection {
            SelectionMode::Global => Some(SelectionReport::read_csv(&dir.join("selection.csv"), index.p_min)?),
            SelectionMode::InFold => None,
        };
        let members = index
            .members
            .iter()
            .map(|m| {
                let path = dir.join(&m.model);
                let json = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                let selection = match index.selection {
                    SelectionMode::Global => None,
                    SelectionMode::InFold => Some(SelectionReport::read_csv(&dir.join(&m.selection), index.p_min)?),
                };
                Ok(FoldMember {
                    fold: m.fold,
                    model: ForestModel::from_json(&json)?,
                    selection,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ModelBundle {
            members,
            selection: shared,
            config: index.config,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    /// Selection on the full table (the rules used for training in global mode).
    pub selection: SelectionReport,
    pub report: EvalReport,
    pub grid: Option<GridSearchResult>,
    pub ensemble: CvEnsemble,
    pub subjects: Vec<String>,
    pub labels: Vec<u8>,
}

fn oof_csv(subjects: &[String], labels: &[u8], scores: &[Option<f64>]) -> String {
    let mut s = String::from("subject_id,label,score\n");
    for ((id, l), score) in subjects.iter().zip(labels).zip(scores) {
        let v = score.map(format_value).unwrap_or_default();
        s.push_str(&format!("{id},{l},{v}\n"));
    }
    s
}

/// Select features, cross-validate, and persist the reports and bundle.
pub fn cmd_run(config: &PipelineConfig) -> Result<RunOutcome> {
    let labels = Labels::read_csv(config.require(&config.labels, "labels")?)?;
    let table = load_training_table(config)?;
    let (table, y, unlabelled) = labels.align(&table);
    if !unlabelled.is_empty() {
        eprintln!("{} subjects without labels ignored", unlabelled.len());
    }
    if table.n_rows() == 0 {
        return Err(Error::EmptyIntersection);
    }
    let cv = config.cv();
    let (selection, grid, ensemble, report) = config.with_workers(|| -> Result<_> {
        let (selection, _) = select_and_binarize(&table, &y, config.p_min)?;
        if config.selection == SelectionMode::Global && selection.n_selected() == 0 {
            return Err(Error::EmptySelection { p_min: config.p_min });
        }
        let mut params = config.forest_params();
        let grid = match &config.grid_search {
            Some(g) => {
                let result = grid_search(&table, &y, g, &params, &cv)?;
                params = result.best.clone();
                Some(result)
            }
            None => None,
        };
        let (ensemble, report) = repeated_cv(&table, &y, &params, &cv)?;
        Ok((selection, grid, ensemble, report))
    })??;

    eprint!("{}", selection.describe_selected());
    eprintln!("mean cross-validated AUC over {} repeats: {:.4}", report.repeat_aucs.len(), report.auc);

    let out = &config.out_dir;
    create_dir(out)?;
    selection.write_csv(&out.join("selection_report.csv"))?;
    write_file(&out.join("eval_report.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    write_file(&out.join("oof_scores.csv"), oof_csv(table.subjects(), &y, &ensemble.oof_scores))?;
    if let Some(g) = &grid {
        write_file(&out.join("grid_search.json"), serde_json::to_string_pretty(g)? + "\n")?;
    }
    ModelBundle::from_ensemble(&ensemble, config).write(&out.join("bundle"))?;
    Ok(RunOutcome {
        selection,
        report,
        grid,
        ensemble,
        subjects: table.subjects().to_vec(),
        labels: y,
    })
}

/// Ensemble probabilities for the subjects of the configured feature
/// table(s), written to `out_dir/predictions.csv` as `subject_id,probability`.
pub fn cmd_predict(config: &PipelineConfig) -> Result<Vec<(String, f64)>> {
    let bundle = ModelBundle::read(config.require(&config.bundle, "bundle")?)?;
    let table = load_training_table(config)?;
    let probs = config.with_workers(|| bundle.predict_table(&table))??;
    let rows: Vec<(String, f64)> = table.subjects().iter().cloned().zip(probs).collect();
    let mut s = String::from("subject_id,probability\n");
    for (id, p) in &rows {
        s.push_str(&format!("{id},{}\n", format_value(*p)));
    }
    create_dir(&config.out_dir)?;
    write_file(&config.out_dir.join("predictions.csv"), s)?;
    Ok(rows)
}

/// Read a `subject_id,probability` CSV.
pub fn read_predictions(path: &Path) -> Result<Vec<(String, f64)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    if rdr.headers()?.iter().ne(["subject_id", "probability"]) {
        return Err(Error::InvalidData("predictions header must be `subject_id,probability`".into()));
    }
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            let p: f64 = rec[1]
                .parse()
                .map_err(|_| Error::InvalidData(format!("{}: `{}` is not a number", &rec[0], &rec[1])))?;
            Ok((rec[0].to_string(), p))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateOutcome {
    pub auc: f64,
    pub n_scored: usize,
    /// Predicted subjects without a label.
    pub unlabelled: Vec<String>,
}

/// AUC of a predictions CSV against a labels CSV, over subjects in both.
pub fn cmd_evaluate(config: &PipelineConfig) -> Result<EvaluateOutcome> {
    let preds = read_predictions(config.require(&config.predictions, "predictions")?)?;
    let labels = Labels::read_csv(config.require(&config.labels, "labels")?)?;
    let lookup: std::collections::HashMap<&str, u8> =
        labels.subjects.iter().map(String::as_str).zip(labels.values.iter().copied()).collect();
    let mut scores = Vec::new();
    let mut y = Vec::new();
    let mut unlabelled = Vec::new();
    for (id, p) in &preds {
        match lookup.get(id.as_str()) {
            Some(&l) => {
                scores.push(*p);
                y.push(l);
            }
            None => unlabelled.push(id.clone()),
        }
    }
    let auc = crate::evaluation::auc(&scores, &y)?;
    Ok(EvaluateOutcome {
        auc,
        n_scored: scores.len(),
        unlabelled,
    })
}

/// Write the configured synthetic cohort into `out_dir`.
pub fn cmd_synth(config: &PipelineConfig) -> Result<CohortFiles> {
    let spec = SyntheticSpec {
        seed: config.seed,
        ..config.synthetic.clone()
    };
    config.with_workers(|| write_cohort(&spec, &config.out_dir))?
}
