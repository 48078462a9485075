//! Binary classifiers that emit probability scores: logistic regression,
//! a CART decision tree and gradient-boosted trees.

mod gbdt;
mod logistic;
mod tree;

use std::fmt;
use std::str::FromStr;

pub use gbdt::{GbdtConfig, GbdtModel};
pub use logistic::{log_loss_and_gradient, sigmoid, LogisticConfig, LogisticModel};
pub use tree::{Criterion, Node, Tree, TreeConfig};

use crate::encoders::EncodedMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Logistic,
    Tree,
    Gbdt,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Logistic, ModelKind::Tree, ModelKind::Gbdt];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Logistic => "logistic",
            ModelKind::Tree => "tree",
            ModelKind::Gbdt => "gbdt",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic" => Ok(ModelKind::Logistic),
            "tree" => Ok(ModelKind::Tree),
            "gbdt" => Ok(ModelKind::Gbdt),
            other => Err(Error::param("model", format!("unknown model `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrainConfig {
    pub logistic: LogisticConfig,
    pub tree: TreeConfig,
    pub gbdt: GbdtConfig,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.logistic.validate()?;
        self.tree.validate()?;
        self.gbdt.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    Logistic(LogisticModel),
    Tree(Tree),
    Gbdt(GbdtModel),
    /// Fallback for single-class training labels.
    Constant(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub kind: ModelKind,
    pub params: ModelParams,
    pub config: TrainConfig,
    pub seed: u64,
    pub n_features: usize,
}

/// Trains a model of the given kind. If `y` holds a single class the result
/// is a constant model scoring that class's prior.
pub fn train(kind: ModelKind, x: &EncodedMatrix, y: &[u8], config: &TrainConfig, seed: u64) -> Result<TrainedModel> {
    if x.n_rows() != y.len() {
        return Err(Error::InputLengthMismatch {
            scores: x.n_rows(),
            labels: y.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::EmptyInput);
    }
    config.validate()?;
    let positives = y.iter().filter(|&&v| v == 1).count();
    let params = if positives == 0 || positives == y.len() {
        ModelParams::Constant(positives as f64 / y.len() as f64)
    } else {
        match kind {
            ModelKind::Logistic => ModelParams::Logistic(LogisticModel::fit(x, y, &config.logistic)),
            ModelKind::Tree => ModelParams::Tree(Tree::fit_classifier(x, y, &config.tree)),
            ModelKind::Gbdt => ModelParams::Gbdt(GbdtModel::fit(x, y, &config.gbdt)),
        }
    };
    Ok(TrainedModel {
        kind,
        params,
        config: *config,
        seed,
        n_features: x.n_cols(),
    })
}

impl TrainedModel {
    pub fn score_row(&self, row: &[f64]) -> f64 {
        match &self.params {
            ModelParams::Logistic(m) => m.predict_row(row),
            ModelParams::Tree(t) => t.predict_row(row),
            ModelParams::Gbdt(m) => m.predict_row(row),
            ModelParams::Constant(p) => *p,
        }
    }
}

/// Scores every row of `x`, in order.
pub fn score(model: &TrainedModel, x: &EncodedMatrix) -> Result<Vec<f64>> {
    if x.n_cols() != model.n_features {
        return Err(Error::WidthMismatch {
            expected: model.n_features,
            found: x.n_cols(),
        });
    }
    Ok((0..x.n_rows()).map(|r| model.score_row(x.row(r))).collect())
}
