//! Leave-h-out cross-validation with a fold-model ensemble, repeated
//! reshuffles, and the two selection modes.
//!
//! ```text
//! cargo run --release --example cross_validation
//! ```

use mgmt_predict::synth::{extract_cohort, SyntheticSpec};
use mgmt_predict::{
    auc, cross_validate, kfold_splits, repeated_cv, CvConfig, ForestParams, RadiomicsConfig, SelectionMode,
};

fn main() -> mgmt_predict::Result<()> {
    let plan = kfold_splits(23, 5, 0)?;
    println!("23 subjects, 5 held out per fold: K = {}, sizes {:?}", plan.k, plan.fold_sizes());

    let spec = SyntheticSpec { n_subjects: 60, ..SyntheticSpec::default() };
    let (table, labels) = extract_cohort(&spec, &RadiomicsConfig::default())?;
    println!("\ncohort: {} subjects x {} radiomic features", table.n_rows(), table.n_cols());

    let params = ForestParams { n_trees: 50, ..ForestParams::default() };
    let cv = CvConfig { repeats: 1, ..CvConfig::default() };
    let (ensemble, report) = cross_validate(&table, &labels, &params, &cv)?;
    println!("one pass: {} folds, {} scored, AUC {:.3}", report.folds, report.n_scored, report.auc);
    let scores: Vec<f64> = ensemble.oof_scores.iter().map(|s| s.unwrap_or(0.5)).collect();
    assert_eq!(auc(&scores, &labels)?, report.auc);

    // every fold model votes on a subject; the probability is the vote mean
    let probabilities = ensemble.predict_table(&table.select_rows(&[0, 1, 2]))?;
    for (id, p) in table.subjects().iter().zip(&probabilities) {
        println!("  {id}: ensemble probability {p:.3}");
    }

    for selection in [SelectionMode::Global, SelectionMode::InFold] {
        let cv = CvConfig { selection, repeats: 5, ..CvConfig::default() };
        let (_, report) = repeated_cv(&table, &labels, &params, &cv)?;
        let aucs: Vec<String> = report.repeat_aucs.iter().map(|a| format!("{a:.3}")).collect();
        println!("{selection:?} selection, 5 repeats: mean AUC {:.3} [{}]", report.auc, aucs.join(" "));
    }
    Ok(())
}
