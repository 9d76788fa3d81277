//! Precomputed latent shape vectors and table merging.
//!
//! Latent CSV: header `subject_id,l000,l001,...` with one column per latent
//! dimension. Column `l007` becomes feature `latent__l007__na__na`.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use crate::error::{Error, Result};
use crate::table::FeatureTable;

pub const DEFAULT_LATENT_DIM: usize = 64;

pub fn latent_feature_name(column: &str) -> String {
    format!("latent__{column}__na__na")
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatentTable {
    pub dim: usize,
    pub table: FeatureTable,
}

impl LatentTable {
    pub fn from_csv_reader<R: std::io::Read>(reader: R, expected_dim: usize) -> Result<LatentTable> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.get(0) != Some("subject_id") {
            return Err(Error::InvalidData("latent CSV must start with `subject_id`".into()));
        }
        let columns: Vec<&str> = header.iter().skip(1).collect();
        if columns.len() != expected_dim {
            return Err(Error::DimensionMismatch(format!(
                "latent CSV has {} latent columns, expected {expected_dim}",
                columns.len()
            )));
        }
        let features: Vec<String> = columns.iter().map(|c| latent_feature_name(c)).collect();
        let mut subjects = Vec::new();
        let mut seen = HashSet::new();
        let mut data = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != expected_dim + 1 {
                return Err(Error::DimensionMismatch(format!(
                    "latent row {} has {} values, expected {expected_dim}",
                    line + 2,
                    rec.len().saturating_sub(1)
                )));
            }
            let id = rec[0].to_string();
            if !seen.insert(id.clone()) {
                return Err(Error::DuplicateSubject(id));
            }
            for (k, field) in rec.iter().skip(1).enumerate() {
                let v: f64 = field
                    .parse()
                    .map_err(|_| Error::InvalidData(format!("{id}, {}: `{field}` is not a number", columns[k])))?;
                if !v.is_finite() {
                    return Err(Error::InvalidData(format!("{id}, {}: non-finite latent value", columns[k])));
                }
                data.push(v);
            }
            subjects.push(id);
        }
        Ok(LatentTable {
            dim: expected_dim,
            table: FeatureTable::new(subjects, features, data)?,
        })
    }
}

pub fn load_latent_csv(path: &Path, expected_dim: usize) -> Result<LatentTable> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    LatentTable::from_csv_reader(file, expected_dim)
}

/// Subjects dropped by an inner join.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MergeReport {
    pub only_in_a: Vec<String>,
    pub only_in_b: Vec<String>,
}

impl MergeReport {
    /// Union of dropped subjects, sorted.
    pub fn dropped(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.only_in_a.iter().chain(&self.only_in_b).collect();
        set.into_iter().cloned().collect()
    }
}

/// Inner join on subject id. Rows follow `a`'s order; columns are `a`'s
/// followed by `b`'s.
pub fn merge_tables(a: &FeatureTable, b: &FeatureTable) -> Result<(FeatureTable, MergeReport)> {
    let a_names: HashSet<&str> = a.features().iter().map(String::as_str).collect();
    if let Some(name) = b.features().iter().find(|f| a_names.contains(f.as_str())) {
        return Err(Error::NameCollision(name.clone()));
    }
    let b_rows: HashMap<&str, usize> = b.subjects().iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let a_set: HashSet<&str> = a.subjects().iter().map(String::as_str).collect();

    let mut report = MergeReport::default();
    let mut pairs = Vec::new();
    for (ra, s) in a.subjects().iter().enumerate() {
        match b_rows.get(s.as_str()) {
            Some(&rb) => pairs.push((ra, rb)),
            None => report.only_in_a.push(s.clone()),
        }
    }
    report.only_in_b = b
        .subjects()
        .iter()
        .filter(|s| !a_set.contains(s.as_str()))
        .cloned()
        .collect();
    if pairs.is_empty() {
        return Err(Error::EmptyIntersection);
    }

    let features: Vec<String> = a.features().iter().chain(b.features()).cloned().collect();
    let mut data = Vec::with_capacity(pairs.len() * features.len());
    let mut subjects = Vec::with_capacity(pairs.len());
    for &(ra, rb) in &pairs {
        subjects.push(a.subjects()[ra].clone());
        data.extend_from_slice(a.row(ra));
        data.extend_from_slice(b.row(rb));
    }
    let mut merged = FeatureTable::new(subjects, features, data)?;
    let wa = a.n_cols();
    for (r, &(ra, rb)) in pairs.iter().enumerate() {
        for c in 0..wa {
            if a.is_missing(ra, c) {
                merged.set_missing(r, c);
            }
        }
        for c in 0..b.n_cols() {
            if b.is_missing(rb, c) {
                merged.set_missing(r, wa + c);
            }
        }
    }
    Ok((merged, report))
}
