//! Train a Gini random forest, inspect its trees, round-trip it through
//! JSON and tune depth / split size with a small grid search.
//!
//! ```text
//! cargo run --example random_forest
//! ```

use mgmt_predict::forest::{grid_search, predict_table, Grid};
use mgmt_predict::{fit_forest, CvConfig, FeatureTable, ForestModel, ForestParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> mgmt_predict::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 80;
    let y: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
    let mut data = Vec::new();
    for &label in &y {
        // binary features as produced by selection: two informative, two noise
        let flip = |p: f64, rng: &mut ChaCha8Rng| f64::from(u8::from(rng.random_bool(p)));
        let p = if label == 1 { 0.8 } else { 0.2 };
        data.extend([flip(p, &mut rng), flip(p, &mut rng), flip(0.5, &mut rng), flip(0.5, &mut rng)]);
    }
    let x = FeatureTable::new(
        (0..n).map(|i| format!("s{i:02}")).collect(),
        ["a", "b", "noise1", "noise2"].map(String::from).to_vec(),
        data,
    )?;

    let params = ForestParams { n_trees: 50, max_depth: 4, min_samples_split: 2, seed: 1, ..ForestParams::default() };
    let model = fit_forest(&x, &y, &params)?;
    model.check_constraints()?;
    let nodes: usize = model.trees.iter().map(|t| t.n_nodes()).sum();
    let deepest = model.trees.iter().map(|t| t.max_depth()).max().unwrap_or(0);
    println!("{} trees, {nodes} nodes, deepest {deepest}", model.trees.len());

    let predictions = predict_table(&model, &x)?;
    let correct = predictions.iter().zip(&y).filter(|((class, _), &label)| *class == label).count();
    println!("training accuracy {correct}/{n}");
    for (r, (class, vote)) in predictions.iter().take(4).enumerate() {
        println!("  {} features {:?} -> class {class} (vote {vote:.2})", x.subjects()[r], x.row(r));
    }

    let json = model.to_json()?;
    assert_eq!(ForestModel::from_json(&json)?, model);
    println!("JSON model: {} bytes, round-trips exactly", json.len());

    let grid = Grid { max_depth: vec![1, 2, 4], min_samples_split: vec![2, 8] };
    let cv = CvConfig { holdout: 8, p_min: 1.1, repeats: 2, ..CvConfig::default() };
    let result = grid_search(&x, &y, &grid, &ForestParams { n_trees: 25, ..ForestParams::default() }, &cv)?;
    for point in &result.points {
        println!("  max_depth {:>1}  min_samples_split {:>2}  AUC {:.3}", point.max_depth, point.min_samples_split, point.auc);
    }
    println!("best: max_depth {} min_samples_split {}", result.best.max_depth, result.best.min_samples_split);
    Ok(())
}
