use super::logistic::sigmoid;
use super::tree::{Tree, TreeConfig};
use crate::encoders::EncodedMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbdtConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_leaf: usize,
}

impl Default for GbdtConfig {
    fn default() -> Self {
        GbdtConfig {
            n_trees: 100,
            max_depth: 3,
            learning_rate: 0.1,
            min_leaf: 20,
        }
    }
}

impl GbdtConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::param("gbdt.learning_rate", "must be positive"));
        }
        TreeConfig {
            max_depth: self.max_depth,
            min_leaf: self.min_leaf,
        }
        .validate()
    }
}

/// Stagewise boosting of regression trees on the log-loss gradient. Scores
/// are `sigmoid(base + lr * sum(tree outputs))`.
#[derive(Debug, Clone, PartialEq)]
pub struct GbdtModel {
    /// Log-odds of the training base rate.
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
}

const MIN_HESSIAN: f64 = 1e-12;

impl GbdtModel {
    pub fn fit(x: &EncodedMatrix, y: &[u8], config: &GbdtConfig) -> Self {
        let n = y.len() as f64;
        let rate = y.iter().map(|&v| f64::from(v)).sum::<f64>() / n;
        let base_score = (rate / (1.0 - rate)).ln();
        let tree_config = TreeConfig {
            max_depth: config.max_depth,
            min_leaf: config.min_leaf,
        };

        let mut margin = vec![base_score; y.len()];
        let mut trees = Vec::with_capacity(config.n_trees);
        for _ in 0..config.n_trees {
            let probs: Vec<f64> = margin.iter().map(|&z| sigmoid(z)).collect();
            let residuals: Vec<f64> = y.iter().zip(&probs).map(|(&t, p)| f64::from(t) - p).collect();
            let hessians: Vec<f64> = probs.iter().map(|p| p * (1.0 - p)).collect();
            // one Newton step per leaf
            let leaf = |rows: &[u32]| {
                let g: f64 = rows.iter().map(|&r| residuals[r as usize]).sum();
                let h: f64 = rows.iter().map(|&r| hessians[r as usize]).sum();
                g / h.max(MIN_HESSIAN)
            };
            let tree = Tree::fit_regression(x, &residuals, &tree_config, &leaf);
            for (r, m) in margin.iter_mut().enumerate() {
                *m += config.learning_rate * tree.predict_row(x.row(r));
            }
            trees.push(tree);
        }
        GbdtModel {
            base_score,
            learning_rate: config.learning_rate,
            trees,
        }
    }

    pub fn margin_row(&self, row: &[f64]) -> f64 {
        self.base_score + self.learning_rate * self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>()
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        sigmoid(self.margin_row(row))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (EncodedMatrix, Vec<u8>) {
        let rows: Vec<Vec<f64>> = (0..400).map(|i| vec![(i % 20) as f64, (i % 7) as f64]).collect();
        let y = (0..400).map(|i| u8::from((i % 20) > 12 || (i % 7) == 3)).collect();
        (EncodedMatrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn no_trees_scores_base_rate() {
        let (x, y) = toy();
        let cfg = GbdtConfig {
            n_trees: 0,
            ..Default::default()
        };
        let m = GbdtModel::fit(&x, &y, &cfg);
        let rate = y.iter().filter(|&&v| v == 1).count() as f64 / y.len() as f64;
        for r in 0..x.n_rows() {
            assert!((m.predict_row(x.row(r)) - rate).abs() < 1e-12);
        }
    }

    #[test]
    fn boosting_separates_toy_rule() {
        let (x, y) = toy();
        let m = GbdtModel::fit(&x, &y, &GbdtConfig::default());
        let correct = (0..x.n_rows())
            .filter(|&r| (m.predict_row(x.row(r)) >= 0.5) == (y[r] == 1))
            .count();
        assert!(correct as f64 / y.len() as f64 > 0.95);
    }
}
