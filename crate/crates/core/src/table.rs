//! Subjects x named features, with CSV persistence.
//!
//! Table CSV: header `subject_id,<feature>...`, one row per subject, values
//! in scientific notation with 17 significant digits. Missing-value flags
//! live in a sidecar CSV with header `subject_id,feature_name`.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::radiomics::FeatureVector;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    subjects: Vec<String>,
    features: Vec<String>,
    /// Row-major values.
    data: Vec<f64>,
    /// `(row, column)` cells whose value was imputed.
    missing: BTreeSet<(usize, usize)>,
}

impl FeatureTable {
    pub fn new(subjects: Vec<String>, features: Vec<String>, data: Vec<f64>) -> Result<Self> {
        if data.len() != subjects.len() * features.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} subjects x {} features",
                data.len(),
                subjects.len(),
                features.len()
            )));
        }
        let mut seen = HashSet::new();
        if let Some(s) = subjects.iter().find(|s| !seen.insert(s.as_str())) {
            return Err(Error::DuplicateSubject(s.clone()));
        }
        let mut seen = HashSet::new();
        if let Some(f) = features.iter().find(|f| !seen.insert(f.as_str())) {
            return Err(Error::NameCollision(f.clone()));
        }
        Ok(FeatureTable {
            subjects,
            features,
            data,
            missing: BTreeSet::new(),
        })
    }

    /// Build from per-subject feature vectors that share one name order.
    pub fn from_vectors(rows: Vec<(String, FeatureVector)>) -> Result<Self> {
        let features: Vec<String> = rows
            .first()
            .map(|(_, fv)| fv.entries.keys().cloned().collect())
            .unwrap_or_default();
        let mut subjects = Vec::with_capacity(rows.len());
        let mut data = Vec::with_capacity(rows.len() * features.len());
        let mut missing = BTreeSet::new();
        for (r, (id, fv)) in rows.into_iter().enumerate() {
            if fv.entries.len() != features.len() || fv.entries.keys().zip(&features).any(|(a, b)| a != b) {
                return Err(Error::DimensionMismatch(format!("subject {id} has a different feature set")));
            }
            for (c, name) in features.iter().enumerate() {
                if fv.missing.contains(name) {
                    missing.insert((r, c));
                }
            }
            data.extend(fv.entries.values());
            subjects.push(id);
        }
        let mut t = FeatureTable::new(subjects, features, data)?;
        t.missing = missing;
        Ok(t)
    }

    pub fn subjects(&self) -> &[String] {
        &self.subjects
    }

    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn n_rows(&self) -> usize {
        self.subjects.len()
    }

    pub fn n_cols(&self) -> usize {
        self.features.len()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.features.len() + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let w = self.features.len();
        &self.data[row * w..(row + 1) * w]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|r| self.get(r, col)).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f == name)
    }

    pub fn row_index(&self, subject: &str) -> Option<usize> {
        self.subjects.iter().position(|s| s == subject)
    }

    pub fn is_missing(&self, row: usize, col: usize) -> bool {
        self.missing.contains(&(row, col))
    }

    pub fn missing_count(&self) -> usize {
        self.missing.len()
    }

    pub fn set_missing(&mut self, row: usize, col: usize) {
        assert!(row < self.n_rows() && col < self.n_cols(), "cell out of range");
        self.missing.insert((row, col));
    }

    /// Keep the named columns, in the given order.
    pub fn select_columns(&self, names: &[String]) -> Result<FeatureTable> {
        let idx = names
            .iter()
            .map(|n| self.column_index(n).ok_or_else(|| Error::MissingFeature(n.clone())))
            .collect::<Result<Vec<_>>>()?;
        let mut data = Vec::with_capacity(self.n_rows() * idx.len());
        let mut missing = BTreeSet::new();
        for r in 0..self.n_rows() {
            for (c, &src) in idx.iter().enumerate() {
                data.push(self.get(r, src));
                if self.is_missing(r, src) {
                    missing.insert((r, c));
                }
            }
        }
        let mut t = FeatureTable::new(self.subjects.clone(), names.to_vec(), data)?;
        t.missing = missing;
        Ok(t)
    }

    /// Keep the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> FeatureTable {
        let mut data = Vec::with_capacity(rows.len() * self.n_cols());
        let mut missing = BTreeSet::new();
        for (r, &src) in rows.iter().enumerate() {
            data.extend_from_slice(self.row(src));
            for c in 0..self.n_cols() {
                if self.is_missing(src, c) {
                    missing.insert((r, c));
                }
            }
        }
        FeatureTable {
            subjects: rows.iter().map(|&r| self.subjects[r].clone()).collect(),
            features: self.features.clone(),
            data,
            missing,
        }
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("subject_id");
        for f in &self.features {
            out.push(',');
            out.push_str(f);
        }
        out.push('\n');
        for r in 0..self.n_rows() {
            out.push_str(&self.subjects[r]);
            for &v in self.row(r) {
                out.push(',');
                out.push_str(&format_value(v));
            }
            out.push('\n');
        }
        out
    }

    pub fn missing_csv_string(&self) -> String {
        let mut out = String::from("subject_id,feature_name\n");
        for &(r, c) in &self.missing {
            out.push_str(&format!("{},{}\n", self.subjects[r], self.features[c]));
        }
        out
    }

    /// Write the table and its missing-flag sidecar (see [`missing_sidecar_path`]).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))?;
        let side = missing_sidecar_path(path);
        std::fs::write(&side, self.missing_csv_string()).map_err(|e| Error::io(side, e))
    }

    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<FeatureTable> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.get(0) != Some("subject_id") {
            return Err(Error::InvalidData("first CSV column must be `subject_id`".into()));
        }
        let features: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut subjects = Vec::new();
        let mut data = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != features.len() + 1 {
                return Err(Error::InvalidData(format!(
                    "row {} has {} fields, expected {}",
                    line + 2,
                    rec.len(),
                    features.len() + 1
                )));
            }
            subjects.push(rec[0].to_string());
            for (c, field) in rec.iter().skip(1).enumerate() {
                let v: f64 = field.parse().map_err(|_| {
                    Error::InvalidData(format!("row {}, column `{}`: `{field}` is not a number", line + 2, features[c]))
                })?;
                if !v.is_finite() {
                    return Err(Error::InvalidData(format!(
                        "row {}, column `{}`: non-finite value",
                        line + 2,
                        features[c]
                    )));
                }
                data.push(v);
            }
        }
        FeatureTable::new(subjects, features, data)
    }

    /// Read a table CSV; the missing-flag sidecar is loaded when present.
    pub fn read_csv(path: &Path) -> Result<FeatureTable> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut t = FeatureTable::from_csv_reader(file)?;
        let side = missing_sidecar_path(path);
        if side.exists() {
            let mut rdr = csv::Reader::from_path(&side)?;
            for rec in rdr.records() {
                let rec = rec?;
                if let (Some(r), Some(c)) = (t.row_index(&rec[0]), t.column_index(&rec[1])) {
                    t.missing.insert((r, c));
                }
            }
        }
        Ok(t)
    }
}

/// `features.csv` -> `features.missing.csv`.
pub fn missing_sidecar_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.missing.csv"))
}

pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Binary labels keyed by subject, in file order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Labels {
    pub subjects: Vec<String>,
    pub values: Vec<u8>,
}

impl Labels {
    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Labels> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.len() < 2 || &header[0] != "subject_id" {
            return Err(Error::InvalidData("labels CSV header must be `subject_id,<label>`".into()));
        }
        let mut out = Labels::default();
        let mut seen = HashSet::new();
        for rec in rdr.records() {
            let rec = rec?;
            let id = rec[0].to_string();
            let v = match &rec[1] {
                "0" => 0,
                "1" => 1,
                other => return Err(Error::InvalidData(format!("label `{other}` for {id} is not 0 or 1"))),
            };
            if !seen.insert(id.clone()) {
                return Err(Error::DuplicateSubject(id));
            }
            out.subjects.push(id);
            out.values.push(v);
        }
        Ok(out)
    }

    pub fn read_csv(path: &Path) -> Result<Labels> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Labels::from_csv_reader(file)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("subject_id,mgmt\n");
        for (s, v) in self.subjects.iter().zip(&self.values) {
            out.push_str(&format!("{s},{v}\n"));
        }
        out
    }

    /// Restrict `table` to labelled subjects (table order kept) and return
    /// the aligned label vector plus the ids of unlabelled subjects.
    pub fn align(&self, table: &FeatureTable) -> (FeatureTable, Vec<u8>, Vec<String>) {
        let lookup: HashMap<&str, u8> = self
            .subjects
            .iter()
            .map(String::as_str)
            .zip(self.values.iter().copied())
            .collect();
        let mut rows = Vec::new();
        let mut y = Vec::new();
        let mut dropped = Vec::new();
        for (r, s) in table.subjects().iter().enumerate() {
            match lookup.get(s.as_str()) {
                Some(&v) => {
                    rows.push(r);
                    y.push(v);
                }
                None => dropped.push(s.clone()),
            }
        }
        (table.select_rows(&rows), y, dropped)
    }
}
