use crate::encoders::EncodedMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// L2 penalty on the weights (not the bias).
    pub l2: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            learning_rate: 0.1,
            epochs: 500,
            l2: 1e-4,
        }
    }
}

impl LogisticConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::param("logistic.learning_rate", "must be positive"));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::param("logistic.l2", "must be >= 0"));
        }
        Ok(())
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Mean log-loss plus `l2 / 2 * |w|^2`, and its gradient with respect to
/// `(weights, bias)`.
pub fn log_loss_and_gradient(x: &EncodedMatrix, y: &[u8], weights: &[f64], bias: f64, l2: f64) -> (f64, Vec<f64>, f64) {
    let n = x.n_rows() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; weights.len()];
    let mut grad_b = 0.0;
    for (r, &label) in y.iter().enumerate() {
        let row = x.row(r);
        let z = bias + row.iter().zip(weights).map(|(a, w)| a * w).sum::<f64>();
        // -log p = softplus(-z) for y = 1, -log(1-p) = softplus(z) for y = 0
        loss += if label == 1 { softplus(-z) } else { softplus(z) };
        let residual = sigmoid(z) - f64::from(label);
        for (g, a) in grad.iter_mut().zip(row) {
            *g += residual * a;
        }
        grad_b += residual;
    }
    loss /= n;
    loss += 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>();
    for (g, w) in grad.iter_mut().zip(weights) {
        *g = *g / n + l2 * w;
    }
    (loss, grad, grad_b / n)
}

/// Logistic regression trained by full-batch gradient descent on
/// standardized inputs. Weights are stored in the standardized space.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    /// Training loss after each epoch.
    pub loss_history: Vec<f64>,
}

fn column_moments(x: &EncodedMatrix) -> (Vec<f64>, Vec<f64>) {
    let (n, d) = (x.n_rows() as f64, x.n_cols());
    let mut means = vec![0.0; d];
    for r in 0..x.n_rows() {
        for (m, v) in means.iter_mut().zip(x.row(r)) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    let mut vars = vec![0.0; d];
    for r in 0..x.n_rows() {
        for ((s, v), m) in vars.iter_mut().zip(x.row(r)).zip(&means) {
            *s += (v - m) * (v - m);
        }
    }
    let scales = vars
        .into_iter()
        .map(|s| {
            let sd = (s / n).sqrt();
            if sd > 1e-12 {
                sd
            } else {
                1.0
            }
        })
        .collect();
    (means, scales)
}

impl LogisticModel {
    pub fn fit(x: &EncodedMatrix, y: &[u8], config: &LogisticConfig) -> Self {
        let (means, scales) = column_moments(x);
        let rows: Vec<Vec<f64>> = (0..x.n_rows())
            .map(|r| {
                x.row(r)
                    .iter()
                    .zip(means.iter().zip(&scales))
                    .map(|(v, (m, s))| (v - m) / s)
                    .collect()
            })
            .collect();
        let z = EncodedMatrix::from_rows(&rows).expect("rows share a width");
        let mut weights = vec![0.0; x.n_cols()];
        let mut bias = 0.0;
        let mut loss_history = Vec::with_capacity(config.epochs + 1);
        for _ in 0..config.epochs {
            let (loss, grad, grad_b) = log_loss_and_gradient(&z, y, &weights, bias, config.l2);
            loss_history.push(loss);
            for (w, g) in weights.iter_mut().zip(&grad) {
                *w -= config.learning_rate * g;
            }
            bias -= config.learning_rate * grad_b;
        }
        loss_history.push(log_loss_and_gradient(&z, y, &weights, bias, config.l2).0);
        LogisticModel {
            weights,
            bias,
            means,
            scales,
            loss_history,
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let z = self.bias
            + row
                .iter()
                .zip(&self.weights)
                .zip(self.means.iter().zip(&self.scales))
                .map(|((v, w), (m, s))| w * (v - m) / s)
                .sum::<f64>();
        sigmoid(z)
    }
}
