//! Fisher-exact feature selection: the test itself, the best-threshold
//! search for one column, and selection plus binarization of a table.
//!
//! ```text
//! cargo run --example fisher_selection
//! ```

use mgmt_predict::selection::{apply_rules, best_threshold};
use mgmt_predict::{fisher_exact_two_sided, select_and_binarize, FeatureTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> mgmt_predict::Result<()> {
    // rows: above / below threshold; columns: class 1 / class 0
    for (a, b, c, d) in [(3, 1, 1, 3), (8, 2, 1, 9), (20, 5, 4, 21)] {
        println!("[[{a:>2},{b:>2}],[{c:>2},{d:>2}]]  p = {:.3e}", fisher_exact_two_sided(a, b, c, d));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 60;
    let labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
    let informative: Vec<f64> = labels.iter().map(|&l| f64::from(l) * 1.5 + rng.random_range(0.0..2.0)).collect();
    let rule = best_threshold("informative", &informative, &labels)?;
    println!("\nbest split of `informative`: value > {:.3}, p = {:.3e}", rule.threshold, rule.p_value);

    let mut data = Vec::with_capacity(n * 3);
    for (i, &v) in informative.iter().enumerate() {
        data.extend([v, rng.random_range(0.0..1.0), (i % 7) as f64]);
    }
    let table = FeatureTable::new(
        (0..n).map(|i| format!("s{i:02}")).collect(),
        vec!["informative".into(), "noise".into(), "periodic".into()],
        data,
    )?;
    let (report, binary) = select_and_binarize(&table, &labels, 5e-4)?;
    println!("\n{}", report.to_csv_string());
    println!("selected {:?}", report.selected_names());
    println!("binarized first rows: {:?}", (0..5).map(|r| binary.row(r).to_vec()).collect::<Vec<_>>());

    // stored rules turn new raw rows into the same binary features
    assert_eq!(apply_rules(&report, &table)?, binary);
    Ok(())
}
