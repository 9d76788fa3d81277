//! Leave-h-out cross-validation, fold ensembles and AUC.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::{fit_forest, predict_forest, ForestModel, ForestParams};
use crate::seed;
use crate::selection::{apply_rules, select_and_binarize, SelectionReport, ThresholdRule};
use crate::table::FeatureTable;

/// Where feature selection and binarization happen relative to the folds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    /// Once on the full table, before splitting.
    Global,
    /// Separately on each fold's training subjects.
    InFold,
}

/// What a fold model reports for its held-out subjects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OofScore {
    /// Fraction of trees voting for class 1 (graded).
    VoteFraction,
    /// The forest's majority class, 0 or 1.
    HardLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvConfig {
    /// Subjects held out per fold.
    pub holdout: usize,
    pub p_min: f64,
    pub selection: SelectionMode,
    pub oof: OofScore,
    pub repeats: usize,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            holdout: 5,
            p_min: 5e-4,
            selection: SelectionMode::Global,
            oof: OofScore::VoteFraction,
            repeats: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub holdout: usize,
    pub k: usize,
    /// Fold index of every subject.
    pub assignments: Vec<usize>,
}

impl FoldPlan {
    pub fn members(&self, fold: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter_map(|(i, &f)| (f == fold).then_some(i))
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Shuffle subjects with `seed` and cut the order into `ceil(n / h)`
/// contiguous folds of `h` subjects; the last fold may be smaller.
pub fn kfold_splits(n: usize, holdout: usize, seed_value: u64) -> Result<FoldPlan> {
    if holdout == 0 {
        return Err(Error::InvalidArgument("holdout size must be at least 1".into()));
    }
    if holdout >= n {
        return Err(Error::InvalidArgument(format!(
            "holdout size {holdout} must be smaller than the number of subjects {n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed_value, "folds"));
    let mut assignments = vec![0; n];
    for (pos, &subject) in order.iter().enumerate() {
        assignments[subject] = pos / holdout;
    }
    Ok(FoldPlan {
        holdout,
        k: n.div_ceil(holdout),
        assignments,
    })
}

/// Area under the ROC curve in Mann-Whitney form: the fraction of
/// (positive, negative) pairs where the positive scores higher, ties
/// counting one half.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch(format!("{} scores, {} labels", scores.len(), labels.len())));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument("scores must be finite".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count() as u64;
    let n_neg = labels.iter().filter(|&&l| l == 0).count() as u64;
    if n_pos + n_neg != labels.len() as u64 {
        return Err(Error::InvalidArgument("labels must be 0 or 1".into()));
    }
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[i].total_cmp(&scores[j]));
    // twice the concordance count, so ties stay integral
    let (mut twice, mut neg_below) = (0u64, 0u64);
    let mut k = 0;
    while k < order.len() {
        let s = scores[order[k]];
        let (mut pos_g, mut neg_g) = (0u64, 0u64);
        while k < order.len() && scores[order[k]] == s {
            if labels[order[k]] == 1 {
                pos_g += 1;
            } else {
                neg_g += 1;
            }
            k += 1;
        }
        twice += 2 * pos_g * neg_below + pos_g * neg_g;
        neg_below += neg_g;
    }
    Ok(twice as f64 / (2 * n_pos * n_neg) as f64)
}

/// One trained fold model.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldMember {
    pub fold: usize,
    pub model: ForestModel,
    /// Fold-specific rules in [`SelectionMode::InFold`].
    pub selection: Option<SelectionReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvEnsemble {
    pub members: Vec<FoldMember>,
    pub plan: FoldPlan,
    /// Out-of-fold forest vote fraction per subject; `None` when the
    /// subject's fold was skipped.
    pub oof_scores: Vec<Option<f64>>,
    /// Rules shared by all members in [`SelectionMode::Global`].
    pub selection: Option<SelectionReport>,
    pub skipped: Vec<(usize, String)>,
}

struct CompiledMember<'a> {
    model: &'a ForestModel,
    columns: Vec<(usize, &'a ThresholdRule)>,
}

fn compile<'a>(
    members: &'a [FoldMember],
    shared: Option<&'a SelectionReport>,
    raw: &FeatureTable,
) -> Result<Vec<CompiledMember<'a>>> {
    members
        .iter()
        .map(|m| {
            let report = m
                .selection
                .as_ref()
                .or(shared)
                .ok_or_else(|| Error::InvalidData(format!("fold {} has no selection rules", m.fold)))?;
            let rules: HashMap<&str, &ThresholdRule> =
                report.selected().map(|r| (r.feature_name.as_str(), r)).collect();
            let columns = m
                .model
                .feature_names
                .iter()
                .map(|name| {
                    let rule = rules
                        .get(name.as_str())
                        .ok_or_else(|| Error::InvalidData(format!("no rule for model feature `{name}`")))?;
                    let col = raw.column_index(name).ok_or_else(|| Error::MissingFeature(name.clone()))?;
                    Ok((col, *rule))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(CompiledMember { model: &m.model, columns })
        })
        .collect()
}

/// Ensemble probability for every row of an unbinarized table: each member
/// binarizes the row with its rules (its own, or `shared`) and the result
/// is the mean of the members' hard 0/1 predictions.
pub fn predict_members(members: &[FoldMember], shared: Option<&SelectionReport>, raw: &FeatureTable) -> Result<Vec<f64>> {
    if members.is_empty() {
        return Err(Error::InvalidData("ensemble has no trained members".into()));
    }
    let compiled = compile(members, shared, raw)?;
    (0..raw.n_rows())
        .map(|row| {
            let mut positive = 0usize;
            for m in &compiled {
                let x: Vec<f64> = m.columns.iter().map(|&(c, rule)| rule.apply(raw.get(row, c))).collect();
                positive += usize::from(predict_forest(m.model, &x)?.0);
            }
            Ok(positive as f64 / compiled.len() as f64)
        })
        .collect()
}

impl CvEnsemble {
    /// See [`predict_members`].
    pub fn predict_table(&self, raw: &FeatureTable) -> Result<Vec<f64>> {
        predict_members(&self.members, self.selection.as_ref(), raw)
    }
}

/// Ensemble probability for one row of an unbinarized table.
pub fn ensemble_predict(ens: &CvEnsemble, raw: &FeatureTable, row: usize) -> Result<f64> {
    if row >= raw.n_rows() {
        return Err(Error::InvalidArgument(format!("row {row} out of range")));
    }
    Ok(ens.predict_table(&raw.select_rows(&[row]))?[0])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Mean of `repeat_aucs`.
    pub auc: f64,
    pub repeat_aucs: Vec<f64>,
    pub n_subjects: usize,
    /// Subjects with an out-of-fold score in the first repeat.
    pub n_scored: usize,
    pub folds: usize,
    pub holdout: usize,
    pub selection: SelectionMode,
    pub oof: OofScore,
    pub p_min: f64,
    /// Features selected globally; for in-fold selection, the mean per fold
    /// in the first repeat.
    pub n_features: f64,
    pub skipped_folds: usize,
    pub params: ForestParams,
    pub seed: u64,
}

fn check_binary_labels(n: usize, labels: &[u8]) -> Result<()> {
    if labels.len() != n {
        return Err(Error::DimensionMismatch(format!("{n} subjects, {} labels", labels.len())));
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::InvalidArgument("labels must be 0 or 1".into()));
    }
    if !(labels.contains(&0) && labels.contains(&1)) {
        return Err(Error::SingleClass);
    }
    Ok(())
}

enum FoldOutcome {
    Trained(FoldMember, Vec<(usize, f64)>),
    Skipped(String),
}

#[allow(clippy::too_many_arguments)]
fn run_fold(
    raw: &FeatureTable,
    global: Option<&FeatureTable>,
    labels: &[u8],
    params: &ForestParams,
    cv: &CvConfig,
    cv_seed: u64,
    plan: &FoldPlan,
    fold: usize,
) -> Result<FoldOutcome> {
    let test = plan.members(fold);
    let train: Vec<usize> = (0..raw.n_rows()).filter(|&i| plan.assignments[i] != fold).collect();
    let y_train: Vec<u8> = train.iter().map(|&i| labels[i]).collect();
    if !(y_train.contains(&0) && y_train.contains(&1)) {
        return Ok(FoldOutcome::Skipped("training subjects contain one class".into()));
    }
    let (x_train, x_test, selection) = match global {
        Some(binary) => (binary.select_rows(&train), binary.select_rows(&test), None),
        None => {
            let (report, x_train) = select_and_binarize(&raw.select_rows(&train), &y_train, cv.p_min)?;
            if report.n_selected() == 0 {
                return Ok(FoldOutcome::Skipped("no features passed selection".into()));
            }
            let x_test = apply_rules(&report, &raw.select_rows(&test))?;
            (x_train, x_test, Some(report))
        }
    };
    let fold_params = ForestParams {
        seed: seed::derive(params.seed, &format!("cv:{cv_seed}:fold:{fold}")),
        ..params.clone()
    };
    let model = fit_forest(&x_train, &y_train, &fold_params)?;
    let scores = test
        .iter()
        .enumerate()
        .map(|(r, &subject)| {
            let (class, votes) = predict_forest(&model, x_test.row(r))?;
            let score = match cv.oof {
                OofScore::VoteFraction => votes,
                OofScore::HardLabel => f64::from(class),
            };
            Ok((subject, score))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FoldOutcome::Trained(FoldMember { fold, model, selection }, scores))
}

fn cross_validate_inner(
    raw: &FeatureTable,
    global: Option<(&SelectionReport, &FeatureTable)>,
    labels: &[u8],
    params: &ForestParams,
    cv: &CvConfig,
    cv_seed: u64,
) -> Result<(CvEnsemble, f64)> {
    let plan = kfold_splits(raw.n_rows(), cv.holdout, cv_seed)?;
    let outcomes = (0..plan.k)
        .into_par_iter()
        .map(|fold| run_fold(raw, global.map(|g| g.1), labels, params, cv, cv_seed, &plan, fold))
        .collect::<Result<Vec<_>>>()?;

    let mut oof_scores = vec![None; raw.n_rows()];
    let mut members = Vec::new();
    let mut skipped = Vec::new();
    for (fold, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            FoldOutcome::Trained(member, scores) => {
                for (subject, s) in scores {
                    oof_scores[subject] = Some(s);
                }
                members.push(member);
            }
            FoldOutcome::Skipped(reason) => skipped.push((fold, reason)),
        }
    }
    let (s, y): (Vec<f64>, Vec<u8>) = oof_scores
        .iter()
        .zip(labels)
        .filter_map(|(s, &l)| s.map(|s| (s, l)))
        .unzip();
    let value = auc(&s, &y)?;
    Ok((
        CvEnsemble {
            members,
            plan,
            oof_scores,
            selection: global.map(|g| g.0.clone()),
            skipped,
        },
        value,
    ))
}

fn global_selection(raw: &FeatureTable, labels: &[u8], cv: &CvConfig) -> Result<Option<(SelectionReport, FeatureTable)>> {
    match cv.selection {
        SelectionMode::InFold => Ok(None),
        SelectionMode::Global => {
            let (report, binary) = select_and_binarize(raw, labels, cv.p_min)?;
            if report.n_selected() == 0 {
                return Err(Error::EmptySelection { p_min: cv.p_min });
            }
            Ok(Some((report, binary)))
        }
    }
}

fn n_features(ens: &CvEnsemble) -> f64 {
    match &ens.selection {
        Some(r) => r.n_selected() as f64,
        None if ens.members.is_empty() => 0.0,
        None => {
            ens.members.iter().map(|m| m.model.feature_names.len()).sum::<usize>() as f64 / ens.members.len() as f64
        }
    }
}

/// Train one forest per fold on the other folds and score the held-out
/// subjects with the forest's vote fraction. Folds whose training part has
/// a single class (or, in in-fold mode, no selected features) are skipped
/// and their subjects left unscored.
pub fn cross_validate(raw: &FeatureTable, labels: &[u8], params: &ForestParams, cv: &CvConfig) -> Result<(CvEnsemble, EvalReport)> {
    check_binary_labels(raw.n_rows(), labels)?;
    params.validate()?;
    let global = global_selection(raw, labels, cv)?;
    let (ens, value) = cross_validate_inner(raw, global.as_ref().map(|g| (&g.0, &g.1)), labels, params, cv, cv.seed)?;
    let report = EvalReport {
        auc: value,
        repeat_aucs: vec![value],
        n_subjects: raw.n_rows(),
        n_scored: ens.oof_scores.iter().flatten().count(),
        folds: ens.plan.k,
        holdout: cv.holdout,
        selection: cv.selection,
        oof: cv.oof,
        p_min: cv.p_min,
        n_features: n_features(&ens),
        skipped_folds: ens.skipped.len(),
        params: params.clone(),
        seed: cv.seed,
    };
    Ok((ens, report))
}

/// Seed of repeat `r` in [`repeated_cv`].
pub fn repeat_seed(root: u64, r: usize) -> u64 {
    seed::derive(root, &format!("repeat:{r}"))
}

/// Cross-validate `cv.repeats` times with reshuffled folds and report the
/// mean AUC. Returns the first repeat's ensemble.
pub fn repeated_cv(raw: &FeatureTable, labels: &[u8], params: &ForestParams, cv: &CvConfig) -> Result<(CvEnsemble, EvalReport)> {
    if cv.repeats == 0 {
        return Err(Error::Config("repeats must be at least 1".into()));
    }
    check_binary_labels(raw.n_rows(), labels)?;
    params.validate()?;
    let global = global_selection(raw, labels, cv)?;
    let global_ref = global.as_ref().map(|g| (&g.0, &g.1));
    let mut runs = (0..cv.repeats)
        .into_par_iter()
        .map(|r| cross_validate_inner(raw, global_ref, labels, params, cv, repeat_seed(cv.seed, r)))
        .collect::<Result<Vec<_>>>()?;
    let repeat_aucs: Vec<f64> = runs.iter().map(|r| r.1).collect();
    let (first, _) = runs.swap_remove(0);
    let report = EvalReport {
        auc: repeat_aucs.iter().sum::<f64>() / repeat_aucs.len() as f64,
        n_subjects: raw.n_rows(),
        n_scored: first.oof_scores.iter().flatten().count(),
        folds: first.plan.k,
        holdout: cv.holdout,
        selection: cv.selection,
        oof: cv.oof,
        p_min: cv.p_min,
        n_features: n_features(&first),
        skipped_folds: first.skipped.len(),
        params: params.clone(),
        seed: cv.seed,
        repeat_aucs,
    };
    Ok((first, report))
}
