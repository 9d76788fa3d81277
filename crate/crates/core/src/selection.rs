//! Univariate threshold selection with Fisher's exact test.
//!
//! For every feature the subjects are split at each midpoint between
//! consecutive distinct values; the split whose 2x2 table (side of
//! threshold x label) has the smallest two-sided Fisher p-value becomes the
//! feature's rule. Features with `p < p_min` are kept and binarized:
//! `value > threshold -> 1`, otherwise 0.

use std::collections::HashMap;
use std::path::Path;

use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::nifti::{Modality, RegionKind};
use crate::radiomics::Family;
use crate::table::{format_value, FeatureTable};

/// Relative slack when comparing table probabilities against the observed one.
const RELATIVE_TOLERANCE: f64 = 1e-7;

/// `ln(k!)` for `k = 0..=n`.
struct LogFactorials(Vec<f64>);

impl LogFactorials {
    fn new(n: u64) -> Self {
        LogFactorials((0..=n).map(|k| if k < 2 { 0.0 } else { ln_gamma(k as f64 + 1.0) }).collect())
    }

    #[inline]
    fn ln_choose(&self, n: u64, k: u64) -> f64 {
        self.0[n as usize] - self.0[k as usize] - self.0[(n - k) as usize]
    }

    /// Two-sided p for `[[a, b], [c, d]]` by the point-probability method.
    fn two_sided(&self, a: u64, b: u64, c: u64, d: u64) -> f64 {
        let (r1, r2, c1) = (a + b, c + d, a + c);
        let n = r1 + r2;
        if n == 0 {
            return 1.0;
        }
        let lo = c1.saturating_sub(r2);
        let hi = r1.min(c1);
        let denom = self.ln_choose(n, c1);
        let log_p = |x: u64| self.ln_choose(r1, x) + self.ln_choose(r2, c1 - x) - denom;
        let cutoff = log_p(a) + RELATIVE_TOLERANCE.ln_1p();
        let p: f64 = (lo..=hi)
            .map(log_p)
            .filter(|&lp| lp <= cutoff)
            .map(f64::exp)
            .sum();
        p.clamp(0.0, 1.0)
    }
}

/// Two-sided Fisher exact test on the table `[[a, b], [c, d]]`.
///
/// Sums the hypergeometric probabilities (margins fixed) of every table
/// no more likely than the observed one, with a relative tolerance of
/// 1e-7 on that comparison. The all-zero table has p = 1.
pub fn fisher_exact_two_sided(a: u64, b: u64, c: u64, d: u64) -> f64 {
    LogFactorials::new(a + b + c + d).two_sided(a, b, c, d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdRule {
    pub feature_name: String,
    pub threshold: f64,
    pub p_value: f64,
}

impl ThresholdRule {
    #[inline]
    pub fn apply(&self, value: f64) -> f64 {
        if value > self.threshold {
            1.0
        } else {
            0.0
        }
    }
}

fn check_labels(n: usize, labels: &[u8]) -> Result<()> {
    if labels.len() != n {
        return Err(Error::DimensionMismatch(format!("{n} values but {} labels", labels.len())));
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::InvalidArgument("labels must be 0 or 1".into()));
    }
    Ok(())
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid >= lo && mid < hi {
        mid
    } else {
        lo
    }
}

fn search(
    name: &str,
    values: &[f64],
    labels: &[u8],
    lf: &LogFactorials,
    memo: &mut HashMap<(u64, u64), f64>,
) -> ThresholdRule {
    let n = values.len() as u64;
    let n_pos: u64 = labels.iter().map(|&l| u64::from(l)).sum();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));

    let mut best: Option<(f64, f64)> = None;
    let (mut below, mut below_pos) = (0u64, 0u64);
    let mut k = 0;
    while k < order.len() {
        let v = values[order[k]];
        while k < order.len() && values[order[k]] == v {
            below += 1;
            below_pos += u64::from(labels[order[k]]);
            k += 1;
        }
        if k == order.len() {
            break;
        }
        let t = midpoint(v, values[order[k]]);
        let above = n - below;
        let a = n_pos - below_pos;
        let p = *memo
            .entry((a, above))
            .or_insert_with(|| lf.two_sided(a, above - a, below_pos, below - below_pos));
        if best.is_none_or(|(_, bp)| p < bp) {
            best = Some((t, p));
        }
    }
    let (threshold, p_value) = best.unwrap_or((values.first().copied().unwrap_or(0.0), 1.0));
    ThresholdRule {
        feature_name: name.to_string(),
        threshold,
        p_value,
    }
}

/// Threshold with the smallest Fisher p-value; ties go to the smaller
/// threshold. A constant feature yields `threshold = value, p = 1`.
pub fn best_threshold(feature_name: &str, values: &[f64], labels: &[u8]) -> Result<ThresholdRule> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("no subjects".into()));
    }
    check_labels(values.len(), labels)?;
    let lf = LogFactorials::new(values.len() as u64);
    Ok(search(feature_name, values, labels, &lf, &mut HashMap::new()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionReport {
    /// One rule per input feature, in table column order.
    pub rules: Vec<ThresholdRule>,
    pub p_min: f64,
}

impl SelectionReport {
    pub fn selected(&self) -> impl Iterator<Item = &ThresholdRule> {
        self.rules.iter().filter(move |r| r.p_value < self.p_min)
    }

    pub fn selected_names(&self) -> Vec<String> {
        self.selected().map(|r| r.feature_name.clone()).collect()
    }

    pub fn n_selected(&self) -> usize {
        self.selected().count()
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("feature_name,threshold,p_value,selected\n");
        for r in &self.rules {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.feature_name,
                format_value(r.threshold),
                format_value(r.p_value),
                u8::from(r.p_value < self.p_min)
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }

    /// Read a report; `p_min` is not stored in the CSV, so the `selected`
    /// column must agree with the supplied value.
    pub fn read_csv(path: &Path, p_min: f64) -> Result<SelectionReport> {
        let mut rdr = csv::Reader::from_path(path)?;
        let mut rules = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let num = |i: usize| -> Result<f64> {
                rec[i]
                    .parse()
                    .map_err(|_| Error::InvalidData(format!("selection report: bad number `{}`", &rec[i])))
            };
            let rule = ThresholdRule {
                feature_name: rec[0].to_string(),
                threshold: num(1)?,
                p_value: num(2)?,
            };
            if (&rec[3] == "1") != (rule.p_value < p_min) {
                return Err(Error::InvalidData(format!(
                    "selection report flag for `{}` disagrees with p_min {p_min}",
                    rule.feature_name
                )));
            }
            rules.push(rule);
        }
        Ok(SelectionReport { rules, p_min })
    }

    /// Selected features as a fixed-width table: category, feature,
    /// modality, region, p-value.
    pub fn describe_selected(&self) -> String {
        let rows: Vec<[String; 5]> = self
            .selected()
            .map(|r| {
                let (cat, feat, modality, region) = describe_feature(&r.feature_name);
                [cat, feat, modality, region, format!("{:.3e}", r.p_value)]
            })
            .collect();
        let header = ["Category", "Feature name", "Modality", "Region", "P-value"].map(String::from);
        let mut widths = header.clone().map(|h| h.len());
        for row in &rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let fmt_row = |row: &[String; 5]| {
            row.iter()
                .zip(widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        let mut out = fmt_row(&header);
        out.push('\n');
        out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 8));
        out.push('\n');
        for row in &rows {
            out.push_str(&fmt_row(row));
            out.push('\n');
        }
        out
    }
}

/// Split a `<family>__<feature>__<modality>__<region>` name into display
/// columns. Unknown tokens are shown verbatim.
pub fn describe_feature(name: &str) -> (String, String, String, String) {
    let parts: Vec<&str> = name.split("__").collect();
    if parts.len() != 4 {
        return ("-".into(), name.into(), "-".into(), "-".into());
    }
    let category = if parts[0] == "latent" {
        "Latent".to_string()
    } else {
        Family::from_token(parts[0]).map_or(parts[0].to_string(), |f| f.label().to_string())
    };
    let modality = Modality::ALL
        .into_iter()
        .find(|m| m.token() == parts[2])
        .map_or("-".to_string(), |m| m.label().to_string());
    let region = RegionKind::ALL
        .into_iter()
        .find(|r| r.token() == parts[3])
        .map_or("-".to_string(), |r| r.label().to_string());
    (category, parts[1].to_string(), modality, region)
}

/// Fit one rule per feature, keep those with `p < p_min`, and binarize the
/// kept columns. Zero selected features is a valid (empty) result.
pub fn select_and_binarize(table: &FeatureTable, labels: &[u8], p_min: f64) -> Result<(SelectionReport, FeatureTable)> {
    if table.n_rows() == 0 || table.n_cols() == 0 {
        return Err(Error::InvalidArgument("selection needs a nonempty table".into()));
    }
    check_labels(table.n_rows(), labels)?;
    let lf = LogFactorials::new(table.n_rows() as u64);
    let rules: Vec<ThresholdRule> = (0..table.n_cols())
        .into_par_iter()
        .map_init(HashMap::new, |memo, c| {
            search(&table.features()[c], &table.column(c), labels, &lf, memo)
        })
        .collect();
    let report = SelectionReport { rules, p_min };
    let binary = apply_rules(&report, table)?;
    Ok((report, binary))
}

/// Binarize `table` with stored rules; thresholds are never re-estimated.
pub fn apply_rules(report: &SelectionReport, table: &FeatureTable) -> Result<FeatureTable> {
    let selected: Vec<&ThresholdRule> = report.selected().collect();
    let cols = selected
        .iter()
        .map(|r| {
            table
                .column_index(&r.feature_name)
                .ok_or_else(|| Error::MissingFeature(r.feature_name.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut data = Vec::with_capacity(table.n_rows() * cols.len());
    for row in 0..table.n_rows() {
        for (rule, &c) in selected.iter().zip(&cols) {
            data.push(rule.apply(table.get(row, c)));
        }
    }
    FeatureTable::new(
        table.subjects().to_vec(),
        selected.iter().map(|r| r.feature_name.clone()).collect(),
        data,
    )
}
