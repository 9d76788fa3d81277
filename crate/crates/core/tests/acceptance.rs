//! Acceptance checks: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the verdict lines always reach
//! stdout; the process fails if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use common::oracle::{auc_oracle, fisher_oracle};
use common::{compare_case, library_features, random_case};
use mgmt_predict::pipeline::{cmd_extract, cmd_run, PipelineConfig};
use mgmt_predict::radiomics::{first_order, shape_features};
use mgmt_predict::selection::best_threshold;
use mgmt_predict::synth::{cohort_labels, extract_cohort, latent_table, synth_subject, write_cohort, SyntheticSpec};
use mgmt_predict::{
    auc, cross_validate, derive_regions, fisher_exact_two_sided, repeated_cv, select_and_binarize, CvConfig,
    FeatureTable, ForestParams, Modality, RadiomicsConfig, RegionKind, SelectionMode, Volume,
};
use rand::Rng;

type Verdict = (bool, String);
/// `eval_report.json` bytes plus every bundle file's name and bytes.
type RunBytes = (Vec<u8>, Vec<(String, Vec<u8>)>);

fn fisher_sweep() -> Verdict {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut tables = 0u64;
    for n in 0..=40u64 {
        for a in 0..=n {
            for b in 0..=n - a {
                for c in 0..=n - a - b {
                    let d = n - a - b - c;
                    worst = worst.max((fisher_exact_two_sided(a, b, c, d) - fisher_oracle(a, b, c, d)).abs());
                    tables += 1;
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    (
        worst <= 1e-10 && secs < 10.0,
        format!("{tables} tables with N <= 40, max |p - oracle| = {worst:.2e}, {secs:.2} s"),
    )
}

fn auc_instances() -> Verdict {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut ties = 0;
    for seed in 0..1000 {
        let mut r = common::rng(seed);
        let n = r.random_range(2..=50);
        let mut labels: Vec<u8> = (0..n).map(|_| r.random_range(0..2u8)).collect();
        labels[0] = 0;
        labels[1] = 1;
        let levels = r.random_range(1..=n) as u32;
        let scores: Vec<f64> = (0..n).map(|_| f64::from(r.random_range(0..levels))).collect();
        let mut distinct = scores.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        ties += usize::from(distinct.len() < n);
        worst = worst.max((auc(&scores, &labels).unwrap() - auc_oracle(&scores, &labels)).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    (
        worst <= 1e-12 && secs < 1.0,
        format!("1000 instances ({ties} with tied scores), max |AUC - oracle| = {worst:.2e}, {secs:.3} s"),
    )
}

fn radiomics_oracle() -> Verdict {
    let start = Instant::now();
    let mut compared = 0;
    let mut mismatches = Vec::new();
    for seed in 0..50 {
        let (n, m) = compare_case(10_000 + seed, 1e-9);
        compared += n;
        mismatches.extend(m);
    }
    let secs = start.elapsed().as_secs_f64();
    let first = mismatches.first().cloned().unwrap_or_default();
    (
        mismatches.is_empty() && secs < 30.0,
        format!("50 volumes, {compared} values, {} mismatches beyond 1e-9, {secs:.2} s {first}", mismatches.len()),
    )
}

fn protocol_constants() -> Verdict {
    let spec = SyntheticSpec { n_subjects: 585, ..SyntheticSpec::default() };
    let labels = cohort_labels(&spec);
    let latent = latent_table(&spec, &labels).unwrap();
    let params = ForestParams { n_trees: 20, max_depth: 4, min_samples_split: 2, ..ForestParams::default() };
    let cv = CvConfig { holdout: 5, repeats: 1, ..CvConfig::default() };
    let (ens, _) = cross_validate(&latent, &labels, &params, &cv).unwrap();
    let sizes = ens.plan.fold_sizes();
    let scored = ens.oof_scores.iter().flatten().count();
    let mut structural = true;
    let mut deepest = 0;
    let mut smallest_split = u64::MAX;
    for member in &ens.members {
        structural &= member.model.check_constraints().is_ok();
        for tree in &member.model.trees {
            deepest = deepest.max(tree.max_depth());
            for node in (0..tree.n_nodes()).filter(|&v| !tree.is_leaf(v)) {
                smallest_split = smallest_split.min(tree.count0[node] + tree.count1[node]);
            }
        }
    }
    let ok = ens.plan.k == 117
        && sizes.iter().all(|&s| s == 5)
        && scored == 585
        && ens.members.len() == 117
        && structural
        && deepest <= 4
        && smallest_split >= 2;
    (
        ok,
        format!(
            "K = {}, fold sizes {:?}, {scored}/585 OOF scores, {} fold models, deepest tree {deepest}, smallest split node {smallest_split}",
            ens.plan.k,
            sizes.iter().min().zip(sizes.iter().max()).map(|(a, b)| (*a, *b)).unwrap_or_default(),
            ens.members.len()
        ),
    )
}

const DIAMETER: &str = "shape__Maximum3DDiameter__na__whole";
const CORE_MEAN: &str = "firstorder__Mean__t1ce__core";

/// p-values of the two planted features for one synthetic cohort.
fn planted_p_values(spec: &SyntheticSpec) -> (f64, f64) {
    let labels = cohort_labels(spec);
    let mut diameter = Vec::with_capacity(labels.len());
    let mut core_mean = Vec::with_capacity(labels.len());
    for (i, &label) in labels.iter().enumerate() {
        let subject = synth_subject(spec, i, label).unwrap();
        let regions = derive_regions(&subject.mask);
        diameter.push(shape_features(regions.get(RegionKind::Whole)).unwrap().get("Maximum3DDiameter").unwrap());
        let t1ce: &Volume = &subject.volumes[Modality::ALL.iter().position(|&m| m == Modality::T1ce).unwrap()];
        core_mean.push(first_order(t1ce, regions.get(RegionKind::Core), 32).unwrap().get("Mean").unwrap());
    }
    (
        best_threshold(DIAMETER, &diameter, &labels).unwrap().p_value,
        best_threshold(CORE_MEAN, &core_mean, &labels).unwrap().p_value,
    )
}

fn planted_signal() -> Verdict {
    let seeds = 20;
    let (mut diameter_hits, mut core_hits) = (0, 0);
    let mut worst = (0.0f64, 0.0f64);
    for seed in 0..seeds {
        let (pd, pc) = planted_p_values(&SyntheticSpec { seed, ..SyntheticSpec::default() });
        diameter_hits += usize::from(pd < 5e-4);
        core_hits += usize::from(pc < 5e-4);
        worst = (worst.0.max(pd), worst.1.max(pc));
    }

    let start = Instant::now();
    let spec = SyntheticSpec { seed: 100, ..SyntheticSpec::default() };
    let (table, labels) = extract_cohort(&spec, &RadiomicsConfig::default()).unwrap();
    let (selection, _) = select_and_binarize(&table, &labels, 5e-4).unwrap();
    let cv = CvConfig { seed: 100, ..CvConfig::default() };
    let (_, report) = repeated_cv(&table, &labels, &ForestParams::default(), &cv).unwrap();
    let secs = start.elapsed().as_secs_f64();

    let need = (0.95 * seeds as f64).ceil() as usize;
    let ok = diameter_hits >= need && core_hits >= need && report.auc >= 0.85 && report.repeat_aucs.len() == 10 && secs < 300.0;
    (
        ok,
        format!(
            "p < 5e-4 in {diameter_hits}/{seeds} ({DIAMETER}, worst {:.1e}) and {core_hits}/{seeds} ({CORE_MEAN}, worst {:.1e}) seeds; \
             200 subjects x {} features, {} selected, 10-repeat mean AUC {:.3}, {secs:.1} s",
            worst.0,
            worst.1,
            table.n_cols(),
            selection.n_selected(),
            report.auc
        ),
    )
}

/// Mean cross-validated AUC over ten null cohorts under one selection mode.
fn null_mean(selection: SelectionMode, tables: &[(FeatureTable, Vec<u8>)]) -> (f64, Vec<f64>) {
    let per_seed: Vec<f64> = tables
        .iter()
        .enumerate()
        .map(|(seed, (x, y))| {
            let cv = CvConfig { selection, repeats: 1, seed: seed as u64, ..CvConfig::default() };
            match cross_validate(x, y, &ForestParams { seed: seed as u64, ..ForestParams::default() }, &cv) {
                Ok((_, report)) => report.auc,
                // nothing significant anywhere: the classifier has no input
                // and is uninformative by construction
                Err(mgmt_predict::Error::EmptySelection { .. }) => 0.5,
                Err(e) => panic!("seed {seed}: {e}"),
            }
        })
        .collect();
    (per_seed.iter().sum::<f64>() / per_seed.len() as f64, per_seed)
}

fn null_cohorts() -> Vec<(FeatureTable, Vec<u8>)> {
    (0..10)
        .map(|seed| {
            let spec = SyntheticSpec { seed, ..SyntheticSpec::default() }.null();
            extract_cohort(&spec, &RadiomicsConfig::default()).unwrap()
        })
        .collect()
}

fn null_control(tables: &[(FeatureTable, Vec<u8>)]) -> Verdict {
    let (mean, per_seed) = null_mean(SelectionMode::InFold, tables);
    let spread = per_seed.iter().map(|a| format!("{a:.3}")).collect::<Vec<_>>().join(" ");
    (
        (0.4..=0.6).contains(&mean),
        format!("in-fold selection, 10 null cohorts of 200: mean AUC {mean:.3} (per seed {spread})"),
    )
}

fn null_control_global(tables: &[(FeatureTable, Vec<u8>)]) -> String {
    let (mean, _) = null_mean(SelectionMode::Global, tables);
    format!("global selection on the same cohorts: mean AUC {mean:.3} (selection sees held-out labels, so this is optimistic)")
}

fn run_in(dir: &Path, cohort: &Path, out: &str, workers: usize) -> PipelineConfig {
    let config = PipelineConfig {
        features: Some(cohort.join("features.csv")),
        latent: Some(cohort.join("latent.csv")),
        labels: Some(cohort.join("labels.csv")),
        repeats: 3,
        seed: 11,
        workers: Some(workers),
        out_dir: dir.join(out),
        ..PipelineConfig::default()
    };
    cmd_run(&config).unwrap();
    config
}

fn tree_bytes(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(root)
        .unwrap()
        .map(|e| {
            let path = e.unwrap().path();
            (path.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&path).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let cohort = dir.path().join("cohort");
    let spec = SyntheticSpec { n_subjects: 40, seed: 5, ..SyntheticSpec::default() };
    write_cohort(&spec, &cohort).unwrap();
    let extract = PipelineConfig {
        manifest: Some(cohort.join("manifest.csv")),
        out_dir: cohort.clone(),
        ..PipelineConfig::default()
    };
    cmd_extract(&extract).unwrap();

    let runs = [("a", 1), ("b", 1), ("c", 3)];
    let outputs: Vec<RunBytes> = runs
        .iter()
        .map(|&(name, workers)| {
            let config = run_in(dir.path(), &cohort, name, workers);
            (std::fs::read(config.out_dir.join("eval_report.json")).unwrap(), tree_bytes(&config.out_dir.join("bundle")))
        })
        .collect();
    let same = outputs.windows(2).all(|w| w[0] == w[1]);
    (
        same,
        format!(
            "3 runs (workers 1, 1, 3): eval_report.json {} bytes and {} bundle files {}",
            outputs[0].0.len(),
            outputs[0].1.len(),
            if same { "byte-identical" } else { "DIFFER" }
        ),
    )
}

fn texture_families(features: &common::oracle::Features) -> Vec<(String, Option<f64>)> {
    features
        .iter()
        .filter(|(k, _)| ["glcm__", "glrlm__", "glszm__", "gldm__", "ngtdm__"].iter().any(|p| k.starts_with(p)))
        .map(|(k, v)| (k.clone(), *v))
        .collect()
}

fn invariance() -> Verdict {
    let cases = 256;
    let mut failures = Vec::new();

    // positive-affine intensity changes leave texture features untouched
    let mut texture_values = 0;
    for seed in 0..cases {
        let (volume, mask, bins) = random_case(20_000 + seed);
        let mut r = common::rng(seed);
        let (a, b) = (r.random_range(0.01..100.0), r.random_range(-1000.0..1000.0));
        let moved = Volume::new(volume.grid, volume.data.iter().map(|v| a * v + b).collect()).unwrap();
        for kind in RegionKind::ALL {
            let region = derive_regions(&mask).get(kind).clone();
            if region.is_empty() {
                continue;
            }
            let before = texture_families(&library_features(&volume, &region, bins));
            let after = texture_families(&library_features(&moved, &region, bins));
            texture_values += before.len();
            if before != after {
                failures.push(format!("texture seed {seed} {kind:?}"));
            }
        }
    }

    // strictly increasing transforms leave selection untouched
    for seed in 0..cases {
        let mut r = common::rng(30_000 + seed);
        let n = r.random_range(4..60);
        let values: Vec<f64> = (0..n).map(|_| f64::from(r.random_range(-6..6i32))).collect();
        let labels: Vec<u8> = (0..n).map(|_| r.random_range(0..2u8)).collect();
        let moved: Vec<f64> = values.iter().map(|v| (v / 3.0).exp() + 0.5 * v).collect();
        let ids: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
        let t1 = FeatureTable::new(ids.clone(), vec!["f".into()], values).unwrap();
        let t2 = FeatureTable::new(ids, vec!["f".into()], moved).unwrap();
        let (r1, b1) = select_and_binarize(&t1, &labels, 1.1).unwrap();
        let (r2, b2) = select_and_binarize(&t2, &labels, 1.1).unwrap();
        if r1.rules[0].p_value != r2.rules[0].p_value || b1.column(0) != b2.column(0) {
            failures.push(format!("selection seed {seed}"));
        }
    }

    // strictly increasing transforms leave the AUC untouched
    for seed in 0..cases {
        let mut r = common::rng(40_000 + seed);
        let n = r.random_range(2..50);
        let mut labels: Vec<u8> = (0..n).map(|_| r.random_range(0..2u8)).collect();
        labels[0] = 0;
        labels[1] = 1;
        let scores: Vec<f64> = (0..n).map(|_| f64::from(r.random_range(0..10u8)) / 10.0).collect();
        let moved: Vec<f64> = scores.iter().map(|s| s.powi(3) + 2.0 * s - 7.0).collect();
        if auc(&scores, &labels).unwrap() != auc(&moved, &labels).unwrap() {
            failures.push(format!("auc seed {seed}"));
        }
    }

    (
        failures.is_empty(),
        format!(
            "{cases} cases each: texture ({texture_values} values), selection p-values + binarized columns, AUC; {} failures {}",
            failures.len(),
            failures.first().cloned().unwrap_or_default()
        ),
    )
}

fn verdict(id: u32, f: impl FnOnce() -> Verdict) -> bool {
    let (ok, detail) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(v) => v,
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        }
    };
    println!("criterion {id}: {} — {detail}", if ok { "PASS" } else { "FAIL" });
    ok
}

fn main() -> ExitCode {
    let mut ok = true;
    ok &= verdict(1, fisher_sweep);
    ok &= verdict(2, auc_instances);
    ok &= verdict(3, radiomics_oracle);
    ok &= verdict(4, protocol_constants);
    ok &= verdict(5, planted_signal);
    let tables = null_cohorts();
    ok &= verdict(6, || null_control(&tables));
    println!("criterion 6 (info): {}", null_control_global(&tables));
    ok &= verdict(7, determinism);
    ok &= verdict(8, invariance);
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
