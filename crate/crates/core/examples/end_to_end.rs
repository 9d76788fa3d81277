//! The full file-based pipeline on a synthetic cohort: synth, extract, run
//! for three feature sets (radiomics, latent, both), predict and evaluate.
//!
//! ```text
//! cargo run --release --example end_to_end
//! ```

use mgmt_predict::pipeline::{cmd_evaluate, cmd_extract, cmd_predict, cmd_run, cmd_synth, PipelineConfig};

fn main() -> mgmt_predict::Result<()> {
    let tmp = tempfile::tempdir().expect("temporary directory");
    let root = tmp.path();
    let base = PipelineConfig { repeats: 3, seed: 42, ..PipelineConfig::default() };

    let mut synth = base.clone();
    synth.synthetic.n_subjects = 60;
    synth.out_dir = root.join("cohort");
    let cohort = cmd_synth(&synth)?;

    let extract = PipelineConfig { manifest: Some(cohort.manifest.clone()), out_dir: root.join("features"), ..base.clone() };
    let features = cmd_extract(&extract)?;
    println!("extracted {} subjects x {} features", features.table.n_rows(), features.table.n_cols());

    let ablations = [
        ("radiomics", Some(features.path.clone()), None),
        ("latent", None, Some(cohort.latent.clone())),
        ("radiomics+latent", Some(features.path.clone()), Some(cohort.latent.clone())),
    ];
    println!("\n{:<18} {:>9} {:>7} {:>9}", "features", "selected", "folds", "mean AUC");
    for (name, radiomics, latent) in ablations {
        let config = PipelineConfig {
            features: radiomics,
            latent,
            labels: Some(cohort.labels.clone()),
            out_dir: root.join(name),
            ..base.clone()
        };
        let outcome = cmd_run(&config)?;
        println!(
            "{name:<18} {:>9} {:>7} {:>9.3}",
            outcome.selection.n_selected(),
            outcome.report.folds,
            outcome.report.auc
        );

        let predict = PipelineConfig { bundle: Some(config.out_dir.join("bundle")), ..config.clone() };
        cmd_predict(&predict)?;
        let evaluate = PipelineConfig {
            predictions: Some(config.out_dir.join("predictions.csv")),
            ..config
        };
        let scored = cmd_evaluate(&evaluate)?;
        println!("{:<18} resubstitution AUC {:.3} on {} subjects", "", scored.auc, scored.n_scored);
    }
    Ok(())
}
