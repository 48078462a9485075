//! Regularization sweeps: split, encode, train and evaluate across a grid of
//! encoders, regularization strengths, models and seeds.
//!
//! For every seed the data is split (stratified on the protected column),
//! every non-protected column is one-hot encoded, and the protected column is
//! encoded with each grid point's encoder. Metrics are computed on the test
//! half only.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::data::{concat_columns, group_stats, load_csv, stratified_split, Dataset};
use crate::encoders::{fit_one_hot, EncodedMatrix, FittedEncoder, NoiseScope, TargetEncoderConfig};
use crate::error::{Error, Result};
use crate::metrics::{self, aggregate_fairness, FairnessMetric, GroupOutcome};
use crate::models::{score, train, ModelKind, TrainConfig};
use crate::synth::{ScenarioKind, ETHNIC, MARITAL};

pub const DEFAULT_SIGMA_GRID: [f64; 8] = [0.0, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0];
pub const DEFAULT_M_GRID: [f64; 6] = [0.0, 1.0, 10.0, 100.0, 1000.0, 10000.0];

pub const CSV_HEADER: &str =
    "encoder,reg_param,model,seed,auc_global,auc_protected,auc_reference,eof,sdp,aao,L_eof,L_sdp,L_aao,warnings";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EncoderFamily {
    OneHot,
    /// Target encoding regularized by the smoothing parameter `m`.
    TargetSmoothing,
    /// Target encoding regularized by Gaussian noise of width `sigma`.
    TargetNoise,
}

impl EncoderFamily {
    pub const ALL: [EncoderFamily; 3] = [
        EncoderFamily::OneHot,
        EncoderFamily::TargetSmoothing,
        EncoderFamily::TargetNoise,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EncoderFamily::OneHot => "one_hot",
            EncoderFamily::TargetSmoothing => "target_m",
            EncoderFamily::TargetNoise => "target_sigma",
        }
    }
}

impl FromStr for EncoderFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one_hot" | "one-hot" | "onehot" => Ok(EncoderFamily::OneHot),
            "target_m" | "target-m" => Ok(EncoderFamily::TargetSmoothing),
            "target_sigma" | "target-sigma" => Ok(EncoderFamily::TargetNoise),
            other => Err(Error::param("encoder", format!("unknown encoder `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Csv {
        path: PathBuf,
        target_column: String,
        positive_label: String,
    },
    /// Regenerated from each sweep seed.
    Scenario(ScenarioKind),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub source: DataSource,
    pub protected_column: String,
    /// Group compared against the reference in the pairwise columns; the most
    /// frequent non-reference category when unset.
    pub protected_group: Option<String>,
    pub reference_group: String,
    /// Builds `protected_column` by concatenating these two columns, which are
    /// then dropped from the features.
    pub concat: Option<(String, String)>,
    pub encoders: Vec<EncoderFamily>,
    pub m_grid: Vec<f64>,
    pub sigma_grid: Vec<f64>,
    pub noise_scope: NoiseScope,
    pub models: Vec<ModelKind>,
    pub seeds: Vec<u64>,
    pub split: f64,
    pub threshold: f64,
    pub train: TrainConfig,
}

impl SweepConfig {
    /// Full default grid for a synthetic scenario, with its protected and
    /// reference groups.
    pub fn for_scenario(kind: ScenarioKind) -> Self {
        let (column, protected, reference) = kind.default_groups();
        SweepConfig {
            source: DataSource::Scenario(kind),
            protected_column: column.to_string(),
            protected_group: Some(protected.to_string()),
            reference_group: reference.to_string(),
            concat: (kind == ScenarioKind::Intersectional).then(|| (ETHNIC.to_string(), MARITAL.to_string())),
            encoders: EncoderFamily::ALL.to_vec(),
            m_grid: DEFAULT_M_GRID.to_vec(),
            sigma_grid: DEFAULT_SIGMA_GRID.to_vec(),
            noise_scope: NoiseScope::default(),
            models: ModelKind::ALL.to_vec(),
            seeds: (0..20).collect(),
            split: 0.5,
            threshold: metrics::DEFAULT_THRESHOLD,
            train: TrainConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::param("seeds", "at least one seed is required"));
        }
        if self.models.is_empty() {
            return Err(Error::param("models", "at least one model is required"));
        }
        if self.encoders.is_empty() {
            return Err(Error::param("encoder", "at least one encoder is required"));
        }
        if !(self.split > 0.0 && self.split < 1.0) {
            return Err(Error::InvalidFraction(self.split));
        }
        if !self.threshold.is_finite() {
            return Err(Error::param("threshold", "must be finite"));
        }
        let bad = |v: &f64| !(v.is_finite() && *v >= 0.0);
        if self.encoders.contains(&EncoderFamily::TargetSmoothing) && (self.m_grid.is_empty() || self.m_grid.iter().any(bad)) {
            return Err(Error::param("m_grid", "must be non-empty, finite and >= 0"));
        }
        if self.encoders.contains(&EncoderFamily::TargetNoise) && (self.sigma_grid.is_empty() || self.sigma_grid.iter().any(bad)) {
            return Err(Error::param("sigma_grid", "must be non-empty, finite and >= 0"));
        }
        self.train.validate()
    }

    /// Grid points in output order.
    pub fn grid(&self) -> Vec<(EncoderFamily, f64)> {
        let mut encoders = self.encoders.clone();
        encoders.sort();
        encoders.dedup();
        encoders
            .into_iter()
            .flat_map(|family| match family {
                EncoderFamily::OneHot => vec![(family, 0.0)],
                EncoderFamily::TargetSmoothing => self.m_grid.iter().map(|&m| (family, m)).collect(),
                EncoderFamily::TargetNoise => self.sigma_grid.iter().map(|&s| (family, s)).collect(),
            })
            .collect()
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone)]
pub struct TradeoffRecord {
    pub encoder: EncoderFamily,
    pub reg_param: f64,
    pub model: ModelKind,
    pub seed: u64,
    pub auc_global: f64,
    pub auc_protected: f64,
    pub auc_reference: f64,
    /// `TPR_reference - TPR_protected`.
    pub eof: f64,
    pub sdp: f64,
    pub aao: f64,
    pub l_eof: f64,
    pub l_sdp: f64,
    pub l_aao: f64,
    pub warnings: Vec<String>,
}

fn same_f64(a: f64, b: f64) -> bool {
    a == b || (a.is_nan() && b.is_nan())
}

impl PartialEq for TradeoffRecord {
    fn eq(&self, o: &Self) -> bool {
        self.encoder == o.encoder
            && self.model == o.model
            && self.seed == o.seed
            && self.warnings == o.warnings
            && self
                .metric_values()
                .iter()
                .zip(o.metric_values())
                .all(|(&a, b)| same_f64(a, b))
    }
}

impl TradeoffRecord {
    fn metric_values(&self) -> [f64; 10] {
        [
            self.reg_param,
            self.auc_global,
            self.auc_protected,
            self.auc_reference,
            self.eof,
            self.sdp,
            self.aao,
            self.l_eof,
            self.l_sdp,
            self.l_aao,
        ]
    }

    pub fn sort_key_cmp(&self, o: &Self) -> Ordering {
        self.encoder
            .cmp(&o.encoder)
            .then(self.reg_param.total_cmp(&o.reg_param))
            .then(self.model.cmp(&o.model))
            .then(self.seed.cmp(&o.seed))
    }
}

/// Data prepared once per seed and shared by all grid points.
struct SeedContext {
    seed: u64,
    train: Dataset,
    test: Dataset,
    other_train: EncodedMatrix,
    other_test: EncodedMatrix,
    test_groups: Vec<String>,
}

fn load_source(config: &SweepConfig, seed: u64, cached: Option<&Dataset>) -> Result<Dataset> {
    let mut d = match (&config.source, cached) {
        (_, Some(d)) => d.clone(),
        (DataSource::Scenario(kind), None) => kind.generate(seed),
        (
            DataSource::Csv {
                path,
                target_column,
                positive_label,
            },
            None,
        ) => load_csv(path, target_column, positive_label)?,
    };
    if let Some((a, b)) = &config.concat {
        d = concat_columns(&d, a, b, &config.protected_column)?.without_columns(&[a.as_str(), b.as_str()]);
    }
    Ok(d)
}

fn resolve_protected_group(config: &SweepConfig, d: &Dataset) -> Result<String> {
    let stats = group_stats(d, &config.protected_column)?;
    if !stats.groups.contains_key(&config.reference_group) {
        return Err(Error::MissingGroup(config.reference_group.clone()));
    }
    match &config.protected_group {
        Some(g) if stats.groups.contains_key(g) => Ok(g.clone()),
        Some(g) => Err(Error::MissingGroup(g.clone())),
        None => stats
            .groups
            .iter()
            .filter(|(label, _)| **label != config.reference_group)
            .max_by(|a, b| a.1.n.cmp(&b.1.n).then(b.0.cmp(a.0)))
            .map(|(label, _)| label.clone())
            .ok_or(Error::TooFewGroups(1)),
    }
}

fn prepare_seed(config: &SweepConfig, seed: u64, cached: Option<&Dataset>) -> Result<(SeedContext, String)> {
    let d = load_source(config, seed, cached)?;
    let protected = resolve_protected_group(config, &d)?;
    let split = stratified_split(&d, &config.protected_column, config.split, seed)?;
    let mut train_parts = Vec::new();
    let mut test_parts = Vec::new();
    for name in d.column_names().filter(|&n| n != config.protected_column) {
        let enc = fit_one_hot(&split.train, name)?;
        train_parts.push(enc.transform(&split.train)?);
        test_parts.push(enc.transform(&split.test)?);
    }
    let n_train = split.train.n();
    let n_test = split.test.n();
    let stack = |parts: Vec<EncodedMatrix>, n: usize| {
        if parts.is_empty() {
            EncodedMatrix::from_rows(&vec![Vec::new(); n])
        } else {
            EncodedMatrix::hstack(&parts)
        }
    };
    let test_groups = split.test.column(&config.protected_column)?.to_vec();
    Ok((
        SeedContext {
            seed,
            other_train: stack(train_parts, n_train)?,
            other_test: stack(test_parts, n_test)?,
            train: split.train,
            test: split.test,
            test_groups,
        },
        protected,
    ))
}

fn sanitize(label: &str) -> String {
    label.replace([',', ';'], "_")
}

fn evaluate_point(
    config: &SweepConfig,
    ctx: &SeedContext,
    protected: &str,
    family: EncoderFamily,
    reg: f64,
    model: ModelKind,
) -> Result<TradeoffRecord> {
    let column = &config.protected_column;
    let encoder = match family {
        EncoderFamily::OneHot => FittedEncoder::OneHot(fit_one_hot(&ctx.train, column)?),
        EncoderFamily::TargetSmoothing | EncoderFamily::TargetNoise => {
            let (m, noise_sigma) = if family == EncoderFamily::TargetSmoothing {
                (reg, 0.0)
            } else {
                (0.0, reg)
            };
            let cfg = TargetEncoderConfig {
                m,
                noise_sigma,
                noise_scope: config.noise_scope,
                seed: ctx.seed,
            };
            FittedEncoder::Target(cfg.fit(&ctx.train, column)?)
        }
    };
    let x_train = EncodedMatrix::hstack(&[encoder.transform_training(&ctx.train)?, ctx.other_train.clone()])?;
    let x_test = EncodedMatrix::hstack(&[encoder.transform(&ctx.test)?, ctx.other_test.clone()])?;
    let trained = train(model, &x_train, ctx.train.target(), &config.train, ctx.seed)?;
    let scores = score(&trained, &x_test)?;
    let labels = ctx.test.target();

    let mut warnings = Vec::new();
    let auc_global = metrics::auc(&scores, labels).unwrap_or_else(|_| {
        warnings.push("auc_global_undefined".to_string());
        0.5
    });
    let outcomes = metrics::group_outcomes(&ctx.test_groups, &scores, labels, config.threshold)?;
    let find = |label: &str| outcomes.iter().find(|g| g.label == label);
    let reference = &config.reference_group;

    let mut group_auc = |g: Option<&GroupOutcome>, name: &str| match g.map(GroupOutcome::auc) {
        Some(Ok(v)) => v,
        _ => {
            warnings.push(format!("auc_{name}_undefined"));
            0.5
        }
    };
    let auc_protected = group_auc(find(protected), "protected");
    let auc_reference = group_auc(find(reference), "reference");

    let mut pairwise = [f64::NAN; 3];
    match (find(reference), find(protected)) {
        (Some(r), Some(p)) => {
            for (slot, metric) in pairwise.iter_mut().zip(FairnessMetric::ALL) {
                match metric.pairwise(r, p) {
                    Ok(v) => *slot = v,
                    Err(_) => warnings.push(format!("{}_undefined", metric.short_name())),
                }
            }
        }
        _ => warnings.push("pair_missing_in_test".to_string()),
    }

    let mut aggregate = [f64::NAN; 3];
    for (slot, metric) in aggregate.iter_mut().zip(FairnessMetric::ALL) {
        match aggregate_fairness(&outcomes, reference, metric) {
            Ok(a) => {
                *slot = a.value;
                for (label, _) in a.excluded {
                    warnings.push(format!("L_{}_excluded={}", metric.short_name(), sanitize(&label)));
                }
            }
            Err(_) => warnings.push(format!("L_{}_undefined", metric.short_name())),
        }
    }

    Ok(TradeoffRecord {
        encoder: family,
        reg_param: reg,
        model,
        seed: ctx.seed,
        auc_global,
        auc_protected,
        auc_reference,
        eof: pairwise[0],
        sdp: pairwise[1],
        aao: pairwise[2],
        l_eof: aggregate[0],
        l_sdp: aggregate[1],
        l_aao: aggregate[2],
        warnings,
    })
}

/// Runs every (grid point, model, seed) combination. Work is spread across
/// threads and the records are returned sorted by
/// (encoder, regularization, model, seed).
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<TradeoffRecord>> {
    config.validate()?;
    let cached = match &config.source {
        DataSource::Csv {
            path,
            target_column,
            positive_label,
        } => Some(load_csv(path, target_column, positive_label)?),
        DataSource::Scenario(_) => None,
    };
    let grid = config.grid();
    let jobs: Vec<(EncoderFamily, f64, ModelKind)> = grid
        .iter()
        .flat_map(|&(f, r)| config.models.iter().map(move |&m| (f, r, m)))
        .collect();

    let per_seed: Vec<Vec<TradeoffRecord>> = config
        .seeds
        .par_iter()
        .map(|&seed| {
            let (ctx, protected) = prepare_seed(config, seed, cached.as_ref())?;
            jobs.par_iter()
                .map(|&(family, reg, model)| evaluate_point(config, &ctx, &protected, family, reg, model))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut records: Vec<TradeoffRecord> = per_seed.into_iter().flatten().collect();
    records.sort_by(TradeoffRecord::sort_key_cmp);
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" | "markdown-table" => Ok(ReportFormat::Markdown),
            other => Err(Error::param("format", format!("unknown format `{other}`"))),
        }
    }
}

pub fn render_csv(records: &[TradeoffRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.encoder.as_str(),
            r.reg_param,
            r.model,
            r.seed,
            r.auc_global,
            r.auc_protected,
            r.auc_reference,
            r.eof,
            r.sdp,
            r.aao,
            r.l_eof,
            r.l_sdp,
            r.l_aao,
            r.warnings.join(";")
        );
    }
    out
}

pub fn render_markdown(records: &[TradeoffRecord]) -> String {
    let columns: Vec<&str> = CSV_HEADER.split(',').collect();
    let mut out = format!("| {} |\n", columns.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(columns.len()));
    for r in records {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} | {} |",
            r.encoder.as_str(),
            r.reg_param,
            r.model,
            r.seed,
            r.auc_global,
            r.auc_protected,
            r.auc_reference,
            r.eof,
            r.sdp,
            r.aao,
            r.l_eof,
            r.l_sdp,
            r.l_aao,
            r.warnings.join("; ")
        );
    }
    out
}

pub fn render_report(records: &[TradeoffRecord], format: ReportFormat) -> Result<String> {
    if records.is_empty() {
        return Err(Error::EmptyReport);
    }
    Ok(match format {
        ReportFormat::Csv => render_csv(records),
        ReportFormat::Markdown => render_markdown(records),
    })
}

pub fn emit_report(records: &[TradeoffRecord], path: impl AsRef<Path>, format: ReportFormat) -> Result<()> {
    let text = render_report(records, format)?;
    let path = path.as_ref();
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Parses the CSV produced by [`render_csv`].
pub fn parse_report_csv(text: &str) -> Result<Vec<TradeoffRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == CSV_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                reason: "unexpected header".into(),
            })
        }
    }
    lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, line)| {
            let err = |reason: String| Error::Parse { line: i + 1, reason };
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 14 {
                return Err(err(format!("expected 14 fields, found {}", f.len())));
            }
            let num = |k: usize| f[k].parse::<f64>().map_err(|_| err(format!("bad number `{}`", f[k])));
            Ok(TradeoffRecord {
                encoder: f[0].parse()?,
                reg_param: num(1)?,
                model: f[2].parse()?,
                seed: f[3].parse().map_err(|_| err(format!("bad seed `{}`", f[3])))?,
                auc_global: num(4)?,
                auc_protected: num(5)?,
                auc_reference: num(6)?,
                eof: num(7)?,
                sdp: num(8)?,
                aao: num(9)?,
                l_eof: num(10)?,
                l_sdp: num(11)?,
                l_aao: num(12)?,
                warnings: if f[13].is_empty() {
                    Vec::new()
                } else {
                    f[13].split(';').map(str::to_string).collect()
                },
            })
        })
        .collect()
}
