//! One-hot and target encoders for a single categorical column.
//!
//! Both are fit on training data only and then frozen. The target encoder
//! replaces a category with its smoothed positive rate
//!
//! ```text
//! w(n_i) * n_iY / n_i + (1 - w(n_i)) * n_Y / n,    w(n_i) = n_i / (n_i + m)
//! ```
//!
//! and can additionally be regularized with Gaussian noise of standard
//! deviation `noise_sigma`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use rand_distr::{Distribution, StandardNormal};

use crate::data::{group_stats, CategoryCount, Dataset};
use crate::error::{Error, Result};
use crate::seeded_rng;

const NOISE_STREAM: u64 = 0x5eed_0002;

/// Weight given to the category's own rate: `n_i / (n_i + m)`.
///
/// An empty category gets weight 0 (this includes `n_i = m = 0`), and any
/// non-empty category gets exactly 1 when `m = 0`.
pub fn smoothing_weight(n_i: u64, m: f64) -> f64 {
    if n_i == 0 {
        return 0.0;
    }
    if m == 0.0 {
        return 1.0;
    }
    let n = n_i as f64;
    n / (n + m)
}

/// Smoothed positive-rate estimate for one category.
pub fn smoothed_estimate(count: CategoryCount, prior: f64, m: f64) -> f64 {
    if count.n == 0 {
        return prior;
    }
    let w = smoothing_weight(count.n, m);
    w * count.p_hat() + (1.0 - w) * prior
}

/// Where Gaussian regularization noise is injected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum NoiseScope {
    /// One draw per category, baked into the mapping at fit time. Every row of
    /// a category, train or test, sees the same perturbed value.
    Category,
    /// One draw per training row, produced by
    /// [`FittedTargetEncoder::transform_training`]. The mapping itself stays
    /// clean, so scoring data is encoded without noise.
    #[default]
    Row,
}

impl NoiseScope {
    pub fn as_str(self) -> &'static str {
        match self {
            NoiseScope::Category => "category",
            NoiseScope::Row => "row",
        }
    }
}

impl FromStr for NoiseScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "category" => Ok(NoiseScope::Category),
            "row" => Ok(NoiseScope::Row),
            other => Err(Error::param("noise_scope", format!("unknown scope `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetEncoderConfig {
    pub m: f64,
    pub noise_sigma: f64,
    pub noise_scope: NoiseScope,
    pub seed: u64,
}

impl Default for TargetEncoderConfig {
    fn default() -> Self {
        TargetEncoderConfig {
            m: 0.0,
            noise_sigma: 0.0,
            noise_scope: NoiseScope::default(),
            seed: 0,
        }
    }
}

impl TargetEncoderConfig {
    fn validate(&self) -> Result<()> {
        if !(self.m >= 0.0) || self.m.is_infinite() {
            return Err(Error::param("m", format!("must be finite and >= 0, got {}", self.m)));
        }
        if !(self.noise_sigma >= 0.0) || self.noise_sigma.is_infinite() {
            return Err(Error::param(
                "noise_sigma",
                format!("must be finite and >= 0, got {}", self.noise_sigma),
            ));
        }
        Ok(())
    }

    pub fn fit(&self, train: &Dataset, column: &str) -> Result<FittedTargetEncoder> {
        self.validate()?;
        let stats = group_stats(train, column)?;
        let prior = stats.prior();
        let mut mapping: BTreeMap<String, f64> = stats
            .groups
            .iter()
            .map(|(cat, &count)| (cat.clone(), smoothed_estimate(count, prior, self.m)))
            .collect();
        if self.noise_scope == NoiseScope::Category && self.noise_sigma > 0.0 {
            let mut rng = seeded_rng(self.seed, NOISE_STREAM);
            for value in mapping.values_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *value += self.noise_sigma * z;
            }
        }
        Ok(FittedTargetEncoder {
            column: column.to_string(),
            mapping,
            prior,
            config: *self,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedTargetEncoder {
    column: String,
    mapping: BTreeMap<String, f64>,
    prior: f64,
    config: TargetEncoderConfig,
}

/// Fits a target encoder on `train` with the default noise scope.
pub fn fit_target_encoder(
    train: &Dataset,
    column: &str,
    m: f64,
    noise_sigma: f64,
    seed: u64,
) -> Result<FittedTargetEncoder> {
    TargetEncoderConfig {
        m,
        noise_sigma,
        seed,
        ..Default::default()
    }
    .fit(train, column)
}

impl FittedTargetEncoder {
    pub fn column(&self) -> &str {
        &self.column
    }

    pub fn prior(&self) -> f64 {
        self.prior
    }

    pub fn config(&self) -> &TargetEncoderConfig {
        &self.config
    }

    pub fn mapping(&self) -> &BTreeMap<String, f64> {
        &self.mapping
    }

    /// Encoded value of a category seen during fitting.
    pub fn value(&self, category: &str) -> Option<f64> {
        self.mapping.get(category).copied()
    }

    /// Encoded value, with unseen categories mapped to the prior.
    pub fn encode(&self, category: &str) -> f64 {
        self.value(category).unwrap_or(self.prior)
    }

    /// Deterministic encoding, used for any data that is scored.
    pub fn transform(&self, d: &Dataset) -> Result<EncodedMatrix> {
        let values = d.column(&self.column)?;
        Ok(EncodedMatrix {
            n_rows: values.len(),
            n_cols: 1,
            values: values.iter().map(|v| self.encode(v)).collect(),
            provenance: vec![ColumnOrigin {
                source: self.column.clone(),
                feature: "target".into(),
            }],
        })
    }

    /// Encoding of the training rows. With [`NoiseScope::Row`] and a positive
    /// sigma every row gets its own seeded Gaussian draw on top of the mapping;
    /// otherwise identical to [`transform`](Self::transform).
    pub fn transform_training(&self, d: &Dataset) -> Result<EncodedMatrix> {
        let mut out = self.transform(d)?;
        if self.config.noise_scope == NoiseScope::Row && self.config.noise_sigma > 0.0 {
            let mut rng = seeded_rng(self.config.seed, NOISE_STREAM);
            for v in &mut out.values {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v += self.config.noise_sigma * z;
            }
        }
        Ok(out)
    }

    /// Plain-text dump: `#`-prefixed metadata lines, then one
    /// `category<TAB>value` line per category. Values use the shortest
    /// representation that parses back to the same `f64`.
    pub fn to_audit_string(&self) -> String {
        let mut out = String::new();
        let c = &self.config;
        let _ = writeln!(out, "# column={}", self.column);
        let _ = writeln!(out, "# prior={}", self.prior);
        let _ = writeln!(out, "# m={}", c.m);
        let _ = writeln!(out, "# noise_sigma={}", c.noise_sigma);
        let _ = writeln!(out, "# noise_scope={}", c.noise_scope.as_str());
        let _ = writeln!(out, "# seed={}", c.seed);
        for (cat, v) in &self.mapping {
            let _ = writeln!(out, "{cat}\t{v}");
        }
        out
    }

    pub fn from_audit_str(text: &str) -> Result<Self> {
        let mut meta: BTreeMap<&str, &str> = BTreeMap::new();
        let mut mapping = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let parse_err = |reason: &str| Error::Parse {
                line: line_no,
                reason: reason.to_string(),
            };
            if let Some(rest) = line.strip_prefix("# ") {
                let (k, v) = rest.split_once('=').ok_or_else(|| parse_err("metadata without `=`"))?;
                meta.insert(k, v);
            } else if !line.is_empty() {
                let (cat, v) = line.rsplit_once('\t').ok_or_else(|| parse_err("missing tab"))?;
                let v: f64 = v.parse().map_err(|_| parse_err("bad number"))?;
                mapping.insert(cat.to_string(), v);
            }
        }
        let get = |k: &str| {
            meta.get(k).copied().ok_or_else(|| Error::Parse {
                line: 0,
                reason: format!("missing metadata `{k}`"),
            })
        };
        let num = |k: &str| -> Result<f64> {
            get(k)?.parse().map_err(|_| Error::Parse {
                line: 0,
                reason: format!("bad value for `{k}`"),
            })
        };
        Ok(FittedTargetEncoder {
            column: get("column")?.to_string(),
            mapping,
            prior: num("prior")?,
            config: TargetEncoderConfig {
                m: num("m")?,
                noise_sigma: num("noise_sigma")?,
                noise_scope: get("noise_scope")?.parse()?,
                seed: get("seed")?.parse().map_err(|_| Error::Parse {
                    line: 0,
                    reason: "bad seed".into(),
                })?,
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FittedOneHotEncoder {
    column: String,
    index: BTreeMap<String, usize>,
}

pub fn fit_one_hot(train: &Dataset, column: &str) -> Result<FittedOneHotEncoder> {
    let mut cats: Vec<&String> = train.column(column)?.iter().collect();
    cats.sort_unstable();
    cats.dedup();
    Ok(FittedOneHotEncoder {
        column: column.to_string(),
        index: cats.into_iter().enumerate().map(|(i, c)| (c.clone(), i)).collect(),
    })
}

impl FittedOneHotEncoder {
    pub fn column(&self) -> &str {
        &self.column
    }

    pub fn width(&self) -> usize {
        self.index.len()
    }

    pub fn index_of(&self, category: &str) -> Option<usize> {
        self.index.get(category).copied()
    }

    /// Indicator columns in category order; unseen categories give a zero row.
    pub fn transform(&self, d: &Dataset) -> Result<EncodedMatrix> {
        let values = d.column(&self.column)?;
        let width = self.width();
        let mut out = vec![0.0; values.len() * width];
        for (r, v) in values.iter().enumerate() {
            if let Some(c) = self.index_of(v) {
                out[r * width + c] = 1.0;
            }
        }
        Ok(EncodedMatrix {
            n_rows: values.len(),
            n_cols: width,
            values: out,
            provenance: self
                .index
                .keys()
                .map(|cat| ColumnOrigin {
                    source: self.column.clone(),
                    feature: format!("onehot={cat}"),
                })
                .collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FittedEncoder {
    Target(FittedTargetEncoder),
    OneHot(FittedOneHotEncoder),
}

impl FittedEncoder {
    pub fn transform(&self, d: &Dataset) -> Result<EncodedMatrix> {
        match self {
            FittedEncoder::Target(e) => e.transform(d),
            FittedEncoder::OneHot(e) => e.transform(d),
        }
    }

    pub fn transform_training(&self, d: &Dataset) -> Result<EncodedMatrix> {
        match self {
            FittedEncoder::Target(e) => e.transform_training(d),
            FittedEncoder::OneHot(e) => e.transform(d),
        }
    }
}

pub fn transform(encoder: &FittedEncoder, d: &Dataset) -> Result<EncodedMatrix> {
    encoder.transform(d)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnOrigin {
    /// Source column in the dataset.
    pub source: String,
    /// What the encoder put in this column.
    pub feature: String,
}

/// Dense row-major numeric matrix produced by encoders and consumed by models.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedMatrix {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
    provenance: Vec<ColumnOrigin>,
}

impl EncodedMatrix {
    /// Builds a matrix from explicit rows, with anonymous provenance.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != n_cols) {
            return Err(Error::WidthMismatch {
                expected: n_cols,
                found: bad.len(),
            });
        }
        Ok(EncodedMatrix {
            n_rows: rows.len(),
            n_cols,
            values: rows.iter().flatten().copied().collect(),
            provenance: (0..n_cols)
                .map(|i| ColumnOrigin {
                    source: format!("x{i}"),
                    feature: "raw".into(),
                })
                .collect(),
        })
    }

    /// Single-column matrix.
    pub fn from_column(values: Vec<f64>) -> Self {
        EncodedMatrix {
            n_rows: values.len(),
            n_cols: 1,
            values,
            provenance: vec![ColumnOrigin {
                source: "x0".into(),
                feature: "raw".into(),
            }],
        }
    }

    /// Column-wise concatenation. All parts must have the same row count.
    pub fn hstack(parts: &[EncodedMatrix]) -> Result<Self> {
        let n_rows = parts.first().map_or(0, |p| p.n_rows);
        if let Some(bad) = parts.iter().find(|p| p.n_rows != n_rows) {
            return Err(Error::LengthMismatch {
                column: bad.provenance.first().map_or_else(String::new, |o| o.source.clone()),
                expected: n_rows,
                found: bad.n_rows,
            });
        }
        let n_cols = parts.iter().map(|p| p.n_cols).sum();
        let mut values = Vec::with_capacity(n_rows * n_cols);
        for r in 0..n_rows {
            for p in parts {
                values.extend_from_slice(p.row(r));
            }
        }
        Ok(EncodedMatrix {
            n_rows,
            n_cols,
            values,
            provenance: parts.iter().flat_map(|p| p.provenance.iter().cloned()).collect(),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.n_cols..(r + 1) * self.n_cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.n_cols + c]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn provenance(&self) -> &[ColumnOrigin] {
        &self.provenance
    }
}
