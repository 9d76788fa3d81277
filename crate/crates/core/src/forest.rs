//! Gini random forest.
//!
//! Each tree is grown on a bootstrap sample (n draws with replacement).
//! At every node a seeded random subset of `features_per_split` features
//! (default `floor(sqrt(d))`, at least 1) is searched for the split with
//! the largest Gini gain; ties go to the lowest feature index, then the
//! smallest threshold. Splits are `value <= threshold` left, `> threshold`
//! right, with thresholds at midpoints between distinct values (0.5 on
//! binarized features). Leaves predict the majority class, class 0 on ties.
//!
//! Every tree draws from its own stream derived from `seed` and the tree
//! index, so results do not depend on how training is scheduled.
//!
//! Serialized JSON schema:
//!
//! ```text
//! { "format": "mgmt-forest/1",
//!   "params": { "n_trees", "max_depth", "min_samples_split", "features_per_split", "seed" },
//!   "feature_names": [..],
//!   "trees": [ { "feature": [i64], "threshold": [f64], "left": [i64], "right": [i64],
//!                "count0": [u64], "count1": [u64] } ] }
//! ```
//!
//! Nodes are stored in preorder; node 0 is the root. Leaves have
//! `feature = left = right = -1`. `count0/count1` are the class counts of
//! the bootstrap samples reaching the node.

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{repeated_cv, CvConfig};
use crate::seed;
use crate::table::FeatureTable;

pub const FORMAT: &str = "mgmt-forest/1";

/// Minimum Gini gain for a split to be kept.
const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Maximum number of edges from root to leaf; 0 is unlimited.
    pub max_depth: usize,
    pub min_samples_split: usize,
    /// Features searched per node; `None` means `floor(sqrt(d))`, at least 1.
    pub features_per_split: Option<usize>,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: 4,
            min_samples_split: 2,
            features_per_split: None,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Config("n_trees must be at least 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(Error::Config("min_samples_split must be at least 2".into()));
        }
        if self.features_per_split == Some(0) {
            return Err(Error::Config("features_per_split must be at least 1".into()));
        }
        Ok(())
    }

    pub fn split_features(&self, n_features: usize) -> usize {
        self.features_per_split
            .unwrap_or_else(|| (n_features as f64).sqrt().floor() as usize)
            .clamp(1, n_features.max(1))
    }
}

/// One tree as parallel node arrays (see module docs).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub feature: Vec<i64>,
    pub threshold: Vec<f64>,
    pub left: Vec<i64>,
    pub right: Vec<i64>,
    pub count0: Vec<u64>,
    pub count1: Vec<u64>,
}

impl Tree {
    pub fn n_nodes(&self) -> usize {
        self.feature.len()
    }

    pub fn is_leaf(&self, node: usize) -> bool {
        self.feature[node] < 0
    }

    pub fn leaf_class(&self, node: usize) -> u8 {
        u8::from(self.count1[node] > self.count0[node])
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        let mut node = 0;
        while !self.is_leaf(node) {
            node = if x[self.feature[node] as usize] <= self.threshold[node] {
                self.left[node]
            } else {
                self.right[node]
            } as usize;
        }
        self.leaf_class(node)
    }

    /// Depth (edges from the root) of every node.
    pub fn depths(&self) -> Vec<usize> {
        let mut depth = vec![0; self.n_nodes()];
        for node in 0..self.n_nodes() {
            if !self.is_leaf(node) {
                depth[self.left[node] as usize] = depth[node] + 1;
                depth[self.right[node] as usize] = depth[node] + 1;
            }
        }
        depth
    }

    pub fn max_depth(&self) -> usize {
        self.depths().into_iter().max().unwrap_or(0)
    }

    fn push_leaf(&mut self, counts: [u64; 2]) -> usize {
        self.feature.push(-1);
        self.threshold.push(0.0);
        self.left.push(-1);
        self.right.push(-1);
        self.count0.push(counts[0]);
        self.count1.push(counts[1]);
        self.n_nodes() - 1
    }

    fn check(&self, n_features: usize) -> Result<()> {
        let n = self.n_nodes();
        let lens = [self.threshold.len(), self.left.len(), self.right.len(), self.count0.len(), self.count1.len()];
        if n == 0 || lens.iter().any(|&l| l != n) {
            return Err(Error::InvalidData("tree node arrays are empty or of unequal length".into()));
        }
        for node in 0..n {
            if self.feature[node] < 0 {
                continue;
            }
            let (l, r) = (self.left[node], self.right[node]);
            // preorder: children follow their parent
            if self.feature[node] as usize >= n_features || l <= node as i64 || r <= node as i64 || l as usize >= n || r as usize >= n {
                return Err(Error::InvalidData(format!("tree node {node} has invalid links")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub format: String,
    pub params: ForestParams,
    pub feature_names: Vec<String>,
    pub trees: Vec<Tree>,
}

impl ForestModel {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<ForestModel> {
        let m: ForestModel = serde_json::from_str(s)?;
        if m.format != FORMAT {
            return Err(Error::InvalidData(format!("unknown model format `{}`", m.format)));
        }
        if m.trees.is_empty() {
            return Err(Error::InvalidData("model has no trees".into()));
        }
        for t in &m.trees {
            t.check(m.feature_names.len())?;
        }
        Ok(m)
    }

    /// Check depth and split-size limits on every tree.
    pub fn check_constraints(&self) -> Result<()> {
        for (t, tree) in self.trees.iter().enumerate() {
            let depths = tree.depths();
            for node in 0..tree.n_nodes() {
                if self.params.max_depth > 0 && depths[node] > self.params.max_depth {
                    return Err(Error::InvalidData(format!("tree {t} node {node} exceeds max_depth")));
                }
                let n = tree.count0[node] + tree.count1[node];
                if !tree.is_leaf(node) && (n as usize) < self.params.min_samples_split {
                    return Err(Error::InvalidData(format!(
                        "tree {t} node {node} split {n} samples, below min_samples_split"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn gini(c: [u64; 2]) -> f64 {
    let n = (c[0] + c[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let (p0, p1) = (c[0] as f64 / n, c[1] as f64 / n);
    1.0 - p0 * p0 - p1 * p1
}

struct Grower<'a> {
    x: &'a FeatureTable,
    y: &'a [u8],
    params: &'a ForestParams,
    k: usize,
    rng: ChaCha8Rng,
    tree: Tree,
}

impl Grower<'_> {
    fn counts(&self, rows: &[usize]) -> [u64; 2] {
        let mut c = [0u64; 2];
        for &r in rows {
            c[usize::from(self.y[r])] += 1;
        }
        c
    }

    /// Best `(gain, feature, threshold)` over a random feature subset.
    fn best_split(&mut self, rows: &[usize], parent: [u64; 2]) -> Option<(f64, usize, f64)> {
        let d = self.x.n_cols();
        let mut feats = sample(&mut self.rng, d, self.k).into_vec();
        feats.sort_unstable();
        let n = rows.len() as f64;
        let g_parent = gini(parent);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut sorted: Vec<(f64, u8)> = Vec::with_capacity(rows.len());
        for f in feats {
            sorted.clear();
            sorted.extend(rows.iter().map(|&r| (self.x.get(r, f), self.y[r])));
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left = [0u64; 2];
            for i in 0..sorted.len() - 1 {
                left[usize::from(sorted[i].1)] += 1;
                let (v, next) = (sorted[i].0, sorted[i + 1].0);
                if v == next {
                    continue;
                }
                let right = [parent[0] - left[0], parent[1] - left[1]];
                let nl = (left[0] + left[1]) as f64;
                let gain = g_parent - nl / n * gini(left) - (n - nl) / n * gini(right);
                if best.is_none_or(|b| gain > b.0) {
                    let mid = v + (next - v) / 2.0;
                    let t = if mid < next { mid } else { v };
                    best = Some((gain, f, t));
                }
            }
        }
        best.filter(|b| b.0 > MIN_GAIN)
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let counts = self.counts(&rows);
        let node = self.tree.push_leaf(counts);
        let depth_capped = self.params.max_depth > 0 && depth >= self.params.max_depth;
        if depth_capped || rows.len() < self.params.min_samples_split || counts[0] == 0 || counts[1] == 0 {
            return node;
        }
        let Some((_, f, t)) = self.best_split(&rows, counts) else {
            return node;
        };
        let (l_rows, r_rows): (Vec<usize>, Vec<usize>) = rows.into_iter().partition(|&r| self.x.get(r, f) <= t);
        self.tree.feature[node] = f as i64;
        self.tree.threshold[node] = t;
        let l = self.grow(l_rows, depth + 1);
        self.tree.left[node] = l as i64;
        let r = self.grow(r_rows, depth + 1);
        self.tree.right[node] = r as i64;
        node
    }
}

fn draw_bootstrap(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

fn fit_tree(x: &FeatureTable, y: &[u8], params: &ForestParams, index: usize) -> Tree {
    let mut rng = seed::rng(params.seed, &format!("tree:{index}"));
    let rows = draw_bootstrap(&mut rng, x.n_rows());
    let mut g = Grower {
        x,
        y,
        params,
        k: params.split_features(x.n_cols()),
        rng,
        tree: Tree::default(),
    };
    g.grow(rows, 0);
    g.tree
}

/// Bootstrap rows drawn for tree `index`; exposed for diagnostics.
pub fn bootstrap_rows(n: usize, params: &ForestParams, index: usize) -> Vec<usize> {
    draw_bootstrap(&mut seed::rng(params.seed, &format!("tree:{index}")), n)
}

pub fn fit_forest(x: &FeatureTable, y: &[u8], params: &ForestParams) -> Result<ForestModel> {
    params.validate()?;
    if y.len() != x.n_rows() {
        return Err(Error::DimensionMismatch(format!("{} rows but {} labels", x.n_rows(), y.len())));
    }
    if x.n_rows() < 2 {
        return Err(Error::InvalidArgument("a forest needs at least 2 subjects".into()));
    }
    if x.n_cols() == 0 {
        return Err(Error::InvalidArgument("a forest needs at least 1 feature".into()));
    }
    if y.iter().any(|&l| l > 1) {
        return Err(Error::InvalidArgument("labels must be 0 or 1".into()));
    }
    if y.iter().all(|&l| l == y[0]) {
        return Err(Error::SingleClass);
    }
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|i| fit_tree(x, y, params, i))
        .collect();
    Ok(ForestModel {
        format: FORMAT.to_string(),
        params: params.clone(),
        feature_names: x.features().to_vec(),
        trees,
    })
}

/// `(class, fraction of trees voting 1)`; class is 1 when the fraction is
/// at least 0.5. `x` is ordered as `model.feature_names`.
pub fn predict_forest(model: &ForestModel, x: &[f64]) -> Result<(u8, f64)> {
    if x.len() != model.feature_names.len() {
        return Err(Error::DimensionMismatch(format!(
            "model expects {} features, got {}",
            model.feature_names.len(),
            x.len()
        )));
    }
    let votes: usize = model.trees.iter().map(|t| usize::from(t.predict(x))).sum();
    let proba = votes as f64 / model.trees.len() as f64;
    Ok((u8::from(proba >= 0.5), proba))
}

/// Predict every row of `table`, matching columns by name.
pub fn predict_table(model: &ForestModel, table: &FeatureTable) -> Result<Vec<(u8, f64)>> {
    let cols = model
        .feature_names
        .iter()
        .map(|n| table.column_index(n).ok_or_else(|| Error::MissingFeature(n.clone())))
        .collect::<Result<Vec<_>>>()?;
    let mut x = vec![0.0; cols.len()];
    (0..table.n_rows())
        .map(|r| {
            for (slot, &c) in x.iter_mut().zip(&cols) {
                *slot = table.get(r, c);
            }
            predict_forest(model, &x)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub max_depth: Vec<usize>,
    pub min_samples_split: Vec<usize>,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            max_depth: vec![2, 3, 4, 6, 8, 0],
            min_samples_split: vec![2, 4, 8, 16],
        }
    }
}

impl Grid {
    pub fn points(&self) -> Vec<(usize, usize)> {
        self.max_depth
            .iter()
            .flat_map(|&d| self.min_samples_split.iter().map(move |&s| (d, s)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best: ForestParams,
    pub best_auc: f64,
    pub points: Vec<GridPoint>,
}

/// Ordering key for tie-breaking: shallower first (0 = unlimited is
/// deepest), then smaller split size.
fn tie_key(p: &GridPoint) -> (usize, usize) {
    let depth = if p.max_depth == 0 { usize::MAX } else { p.max_depth };
    (depth, p.min_samples_split)
}

/// Evaluate every grid point by repeated cross-validated AUC on the raw
/// table and return the best; other parameters come from `base`.
pub fn grid_search(x: &FeatureTable, y: &[u8], grid: &Grid, base: &ForestParams, cv: &CvConfig) -> Result<GridSearchResult> {
    let pts = grid.points();
    if pts.is_empty() {
        return Err(Error::Config("grid search needs at least one grid point".into()));
    }
    let points = pts
        .iter()
        .map(|&(d, s)| {
            let params = ForestParams {
                max_depth: d,
                min_samples_split: s,
                ..base.clone()
            };
            let (_, report) = repeated_cv(x, y, &params, cv)?;
            Ok(GridPoint {
                max_depth: d,
                min_samples_split: s,
                auc: report.auc,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = points
        .iter()
        .max_by(|a, b| a.auc.total_cmp(&b.auc).then_with(|| tie_key(b).cmp(&tie_key(a))))
        .expect("nonempty grid");
    Ok(GridSearchResult {
        best: ForestParams {
            max_depth: best.max_depth,
            min_samples_split: best.min_samples_split,
            ..base.clone()
        },
        best_auc: best.auc,
        points,
    })
}
