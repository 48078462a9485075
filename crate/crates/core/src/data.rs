//! Categorical datasets: CSV ingestion, stratified splitting, per-category
//! statistics and intersectional (concatenated) columns.
//!
//! Storage is column-major. Every column holds string category labels and the
//! target is a `0/1` vector; `1` is the positive class.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::seeded_rng;

/// Separator placed between the two labels of a concatenated column.
pub const CONCAT_SEPARATOR: char = '|';

const SPLIT_STREAM: u64 = 0x5eed_0001;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub name: String,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    columns: Vec<Column>,
    target: Vec<u8>,
}

impl Dataset {
    pub fn new(columns: Vec<Column>, target: Vec<u8>) -> Result<Self> {
        if target.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if let Some(&bad) = target.iter().find(|&&t| t > 1) {
            return Err(Error::InvalidLabel(bad));
        }
        let mut seen = std::collections::HashSet::new();
        for column in &columns {
            if !seen.insert(column.name.as_str()) {
                return Err(Error::ColumnExists(column.name.clone()));
            }
            if column.values.len() != target.len() {
                return Err(Error::LengthMismatch {
                    column: column.name.clone(),
                    expected: target.len(),
                    found: column.values.len(),
                });
            }
        }
        Ok(Dataset { columns, target })
    }

    /// Number of rows.
    pub fn n(&self) -> usize {
        self.target.len()
    }

    pub fn target(&self) -> &[u8] {
        &self.target
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.columns.iter().any(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Result<&[String]> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.values.as_slice())
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    /// New dataset holding the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let columns = self
            .columns
            .iter()
            .map(|c| Column {
                name: c.name.clone(),
                values: rows.iter().map(|&r| c.values[r].clone()).collect(),
            })
            .collect();
        let target = rows.iter().map(|&r| self.target[r]).collect();
        Dataset { columns, target }
    }

    /// Drops the named columns; unknown names are ignored.
    pub fn without_columns(&self, names: &[&str]) -> Dataset {
        Dataset {
            columns: self
                .columns
                .iter()
                .filter(|c| !names.contains(&c.name.as_str()))
                .cloned()
                .collect(),
            target: self.target.clone(),
        }
    }

    /// Renders the dataset in the format accepted by [`load_csv`]. The target
    /// column is written last, with `1` mapped to `positive_label` and `0` to
    /// `negative_label`.
    pub fn to_csv_string(&self, target_column: &str, positive_label: &str, negative_label: &str) -> String {
        let mut out = String::new();
        for c in &self.columns {
            out.push_str(&c.name);
            out.push(',');
        }
        out.push_str(target_column);
        out.push('\n');
        for row in 0..self.n() {
            for c in &self.columns {
                out.push_str(&c.values[row]);
                out.push(',');
            }
            let label = if self.target[row] == 1 {
                positive_label
            } else {
                negative_label
            };
            let _ = writeln!(out, "{label}");
        }
        out
    }

    pub fn write_csv(
        &self,
        path: impl AsRef<Path>,
        target_column: &str,
        positive_label: &str,
        negative_label: &str,
    ) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(
            path,
            self.to_csv_string(target_column, positive_label, negative_label),
        )
        .map_err(|e| Error::io(path, e))
    }
}

/// Reads a header-first, comma-delimited UTF-8 file. Every column except
/// `target_column` becomes a categorical column.
pub fn load_csv(path: impl AsRef<Path>, target_column: &str, positive_label: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, target_column, positive_label)
}

/// In-memory counterpart of [`load_csv`].
pub fn parse_csv(text: &str, target_column: &str, positive_label: &str) -> Result<Dataset> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.is_empty());

    let (header_line, header) = lines.next().ok_or(Error::EmptyFile)?;
    if header.contains('"') {
        return Err(Error::QuotedField { line: header_line });
    }
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let target_idx = names
        .iter()
        .position(|&n| n == target_column)
        .ok_or_else(|| Error::MissingColumn(target_column.to_string()))?;

    let mut values: Vec<Vec<String>> = vec![Vec::new(); names.len()];
    let mut raw_target: Vec<String> = Vec::new();
    for (line, record) in lines {
        if record.contains('"') {
            return Err(Error::QuotedField { line });
        }
        let fields: Vec<&str> = record.split(',').collect();
        if fields.len() != names.len() {
            return Err(Error::RaggedRow {
                line,
                expected: names.len(),
                found: fields.len(),
            });
        }
        for (i, field) in fields.into_iter().enumerate() {
            let field = field.trim();
            if i == target_idx {
                raw_target.push(field.to_string());
            } else {
                if field.contains(CONCAT_SEPARATOR) {
                    return Err(Error::ReservedSeparator {
                        line,
                        value: field.to_string(),
                    });
                }
                values[i].push(field.to_string());
            }
        }
    }
    if raw_target.is_empty() {
        return Err(Error::EmptyFile);
    }

    let mut distinct: Vec<&str> = raw_target.iter().map(String::as_str).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() > 2 {
        return Err(Error::NonBinaryTarget(
            distinct.into_iter().map(str::to_string).collect(),
        ));
    }
    let target = raw_target
        .iter()
        .map(|t| u8::from(t == positive_label))
        .collect();

    let columns = names
        .iter()
        .zip(values)
        .enumerate()
        .filter(|(i, _)| *i != target_idx)
        .map(|(_, (name, values))| Column {
            name: name.to_string(),
            values,
        })
        .collect();
    Dataset::new(columns, target)
}

#[derive(Debug, Clone)]
pub struct SplitPair {
    pub train: Dataset,
    pub test: Dataset,
    pub seed: u64,
    /// Source row indices of `train`, ascending.
    pub train_rows: Vec<usize>,
    /// Source row indices of `test`, ascending.
    pub test_rows: Vec<usize>,
}

/// Number of rows of a category of size `n` that go to the training side.
///
/// Proportional allocation rounded to nearest; a singleton category always
/// goes to train.
pub fn train_allocation(n: usize, fraction: f64) -> usize {
    if n == 1 {
        return 1;
    }
    ((fraction * n as f64).round() as usize).min(n)
}

/// Splits `d` so that every category of `column` keeps its train/test ratio.
/// Within a category the rows sent to train are chosen by a seeded shuffle;
/// both halves keep the source row order.
pub fn stratified_split(d: &Dataset, column: &str, fraction: f64, seed: u64) -> Result<SplitPair> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidFraction(fraction));
    }
    let values = d.column(column)?;
    let mut by_category: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (row, v) in values.iter().enumerate() {
        by_category.entry(v.as_str()).or_default().push(row);
    }

    let mut rng = seeded_rng(seed, SPLIT_STREAM);
    let mut in_train = vec![false; d.n()];
    for rows in by_category.values_mut() {
        let k = train_allocation(rows.len(), fraction);
        rows.shuffle(&mut rng);
        for &r in &rows[..k] {
            in_train[r] = true;
        }
    }
    let (train_rows, test_rows): (Vec<usize>, Vec<usize>) = (0..d.n()).partition(|&r| in_train[r]);
    if test_rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(SplitPair {
        train: d.select_rows(&train_rows),
        test: d.select_rows(&test_rows),
        seed,
        train_rows,
        test_rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CategoryCount {
    /// Rows in the category.
    pub n: u64,
    /// Positive rows in the category.
    pub n_pos: u64,
}

impl CategoryCount {
    /// Observed positive rate; zero for an empty category.
    pub fn p_hat(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.n_pos as f64 / self.n as f64
        }
    }
}

/// Per-category sufficient statistics of one column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupStats {
    pub column: String,
    pub groups: BTreeMap<String, CategoryCount>,
    pub n: u64,
    pub n_pos: u64,
}

impl GroupStats {
    /// Global positive rate `n_Y / n`.
    pub fn prior(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.n_pos as f64 / self.n as f64
        }
    }

    pub fn get(&self, category: &str) -> Option<CategoryCount> {
        self.groups.get(category).copied()
    }

    pub fn cardinality(&self) -> usize {
        self.groups.len()
    }
}

pub fn group_stats(d: &Dataset, column: &str) -> Result<GroupStats> {
    let values = d.column(column)?;
    let mut groups: BTreeMap<String, CategoryCount> = BTreeMap::new();
    let mut index: HashMap<&str, u64> = HashMap::new();
    // two passes keep string allocation to one per category
    for v in values {
        *index.entry(v.as_str()).or_default() += 1;
    }
    for (&v, &n) in &index {
        groups.insert(v.to_string(), CategoryCount { n, n_pos: 0 });
    }
    let mut n_pos = 0;
    for (v, &t) in values.iter().zip(d.target()) {
        if t == 1 {
            groups.get_mut(v.as_str()).expect("counted above").n_pos += 1;
            n_pos += 1;
        }
    }
    Ok(GroupStats {
        column: column.to_string(),
        groups,
        n: d.n() as u64,
        n_pos,
    })
}

/// Adds a column whose value is `"{a}|{b}"` for every row.
pub fn concat_columns(d: &Dataset, a: &str, b: &str, new_name: &str) -> Result<Dataset> {
    if d.has_column(new_name) {
        return Err(Error::ColumnExists(new_name.to_string()));
    }
    let left = d.column(a)?;
    let right = d.column(b)?;
    let values = left
        .iter()
        .zip(right)
        .map(|(x, y)| format!("{x}{CONCAT_SEPARATOR}{y}"))
        .collect();
    let mut columns = d.columns.clone();
    columns.push(Column {
        name: new_name.to_string(),
        values,
    });
    Dataset::new(columns, d.target.clone())
}
