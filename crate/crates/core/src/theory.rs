//! Closed-form analysis of a single categorical predictor `X` and a binary
//! target, comparing the Bayes-optimal classifier (which knows the true rates
//! `p_i`) with classifiers built from target-encoded estimates and with a
//! randomized classifier.
//!
//! Equal opportunity here is taken as `P(Ŷ=+ | Y=+, x_1) - P(Ŷ=+ | Y=+, x_2)`
//! with `x_1` the protected group and `x_2` the reference group.

use rand::Rng;

use crate::encoders::smoothing_weight;
use crate::error::{Error, Result};
use crate::seeded_rng;

const MC_STREAM: u64 = 0x5eed_0003;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    Positive,
    Negative,
}

impl Decision {
    pub fn is_positive(self) -> bool {
        self == Decision::Positive
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationGroup {
    pub label: String,
    /// `P(X = x_i)`.
    pub weight: f64,
    /// `P(Y = + | X = x_i)`.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSpec {
    groups: Vec<PopulationGroup>,
    threshold: f64,
}

impl PopulationSpec {
    pub fn new(groups: Vec<PopulationGroup>, threshold: f64) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::InvalidPopulation("no groups".into()));
        }
        if let Some(g) = groups.iter().find(|g| !(0.0..=1.0).contains(&g.rate)) {
            return Err(Error::InvalidPopulation(format!("rate of `{}` outside [0, 1]", g.label)));
        }
        if let Some(g) = groups.iter().find(|g| !(g.weight >= 0.0)) {
            return Err(Error::InvalidPopulation(format!("negative weight for `{}`", g.label)));
        }
        let total: f64 = groups.iter().map(|g| g.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidPopulation(format!("weights sum to {total}")));
        }
        if !threshold.is_finite() {
            return Err(Error::InvalidPopulation("threshold must be finite".into()));
        }
        Ok(PopulationSpec { groups, threshold })
    }

    /// Builds a population from `(weight, rate)` pairs labelled `g0, g1, ...`,
    /// with threshold 0.5.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        let groups = pairs
            .iter()
            .enumerate()
            .map(|(i, &(weight, rate))| PopulationGroup {
                label: format!("g{i}"),
                weight,
                rate,
            })
            .collect();
        Self::new(groups, 0.5)
    }

    pub fn groups(&self) -> &[PopulationGroup] {
        &self.groups
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// `p = sum_i P(X = x_i) p_i`.
    pub fn prior(&self) -> f64 {
        self.groups.iter().map(|g| g.weight * g.rate).sum()
    }
}

/// How a classifier decides for each group.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassifierSpec {
    /// Thresholds the true rate `p_i`.
    Bayes,
    /// Thresholds a per-group estimate (for example a target-encoded value).
    Encoded { estimates: Vec<f64> },
    /// Predicts `+` with probability `p_i`.
    Randomized,
}

impl ClassifierSpec {
    /// Per group, the probability of predicting `+`.
    pub fn positive_probabilities(&self, pop: &PopulationSpec) -> Result<Vec<f64>> {
        let t = pop.threshold;
        match self {
            ClassifierSpec::Bayes => Ok(pop.groups.iter().map(|g| indicator(g.rate > t)).collect()),
            ClassifierSpec::Randomized => Ok(pop.groups.iter().map(|g| g.rate).collect()),
            ClassifierSpec::Encoded { estimates } => {
                if estimates.len() != pop.groups.len() {
                    return Err(Error::InvalidPopulation(format!(
                        "{} estimates for {} groups",
                        estimates.len(),
                        pop.groups.len()
                    )));
                }
                Ok(estimates.iter().map(|&e| indicator(e > t)).collect())
            }
        }
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// `+` iff `p_i > threshold`.
pub fn bayes_decision(p_i: f64, threshold: f64) -> Decision {
    if p_i > threshold {
        Decision::Positive
    } else {
        Decision::Negative
    }
}

/// Population classification error.
///
/// For the Bayes classifier at threshold 0.5 this is
/// `sum_i P(X=x_i) min(p_i, 1 - p_i)`; for the randomized one it is
/// `sum_i P(X=x_i) 2 p_i (1 - p_i)`.
pub fn classification_error(pop: &PopulationSpec, clf: &ClassifierSpec) -> Result<f64> {
    if matches!(clf, ClassifierSpec::Bayes) && pop.threshold == 0.5 {
        return Ok(pop.groups.iter().map(|g| g.weight * g.rate.min(1.0 - g.rate)).sum());
    }
    let q = clf.positive_probabilities(pop)?;
    Ok(pop
        .groups
        .iter()
        .zip(q)
        .map(|(g, q)| g.weight * (q * (1.0 - g.rate) + (1.0 - q) * g.rate))
        .sum())
}

/// Equal opportunity of the Bayes classifier for protected rate `p1` and
/// reference rate `p2`: 0 when both fall on the same side of the threshold,
/// -1 when only the reference group is predicted positive, +1 when only the
/// protected group is.
pub fn perfect_encoding_eof(p1: f64, p2: f64, threshold: f64) -> f64 {
    let tpr = |p: f64| indicator(bayes_decision(p, threshold).is_positive());
    tpr(p1) - tpr(p2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncodedDecision {
    /// Expected smoothed estimate `w(n_i) p_i + (1 - w(n_i)) p`.
    pub estimate: f64,
    pub decision: Decision,
    pub bayes: Decision,
    /// True when the encoded decision differs from the Bayes decision.
    pub flipped: bool,
}

/// Expected target-encoded estimate and resulting decision for each group,
/// given group sample sizes and smoothing `m`.
pub fn encoded_classifier_decisions(pop: &PopulationSpec, group_sizes: &[u64], m: f64) -> Result<Vec<EncodedDecision>> {
    if group_sizes.len() != pop.groups.len() {
        return Err(Error::InvalidPopulation(format!(
            "{} sizes for {} groups",
            group_sizes.len(),
            pop.groups.len()
        )));
    }
    if !(m >= 0.0) {
        return Err(Error::param("m", "must be >= 0"));
    }
    let prior = pop.prior();
    Ok(pop
        .groups
        .iter()
        .zip(group_sizes)
        .map(|(g, &n)| {
            let w = if m.is_infinite() { 0.0 } else { smoothing_weight(n, m) };
            let estimate = w * g.rate + (1.0 - w) * prior;
            let decision = bayes_decision(estimate, pop.threshold);
            let bayes = bayes_decision(g.rate, pop.threshold);
            EncodedDecision {
                estimate,
                decision,
                bayes,
                flipped: decision != bayes,
            }
        })
        .collect())
}

/// How target encoding changes the equal-opportunity picture for a protected
/// group compared with the Bayes classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EoImpact {
    /// The protected group's decision matches the Bayes decision.
    Unchanged,
    /// Flipped, and now on the same side of the threshold as the reference.
    FlippedAligned,
    /// Flipped, and now on the opposite side from the reference.
    FlippedOpposed,
}

pub fn eo_impact(decisions: &[EncodedDecision], protected: usize, reference: usize) -> EoImpact {
    let p = &decisions[protected];
    if !p.flipped {
        EoImpact::Unchanged
    } else if p.decision == decisions[reference].decision {
        EoImpact::FlippedAligned
    } else {
        EoImpact::FlippedOpposed
    }
}

/// Smallest `m` at which the expected smoothed estimate of a group of size
/// `n_i` reaches the threshold, if it ever crosses it for some `m > 0`.
///
/// Solves `w p_i + (1 - w) p = t` for `w = n_i / (n_i + m)`.
pub fn flip_point_m(p_i: f64, prior: f64, n_i: u64, threshold: f64) -> Option<f64> {
    if n_i == 0 || p_i == prior {
        return None;
    }
    let w = (threshold - prior) / (p_i - prior);
    if !(w > 0.0 && w < 1.0) {
        return None;
    }
    Some(n_i as f64 * (1.0 - w) / w)
}

/// Equal opportunity of the randomized classifier: `p1 - p2`.
pub fn randomized_eof(p1: f64, p2: f64) -> f64 {
    p1 - p2
}

/// Simulates `n` rows per group (labels and randomized predictions drawn
/// independently with each group's rate) and returns the empirical
/// `TPR_1 - TPR_2`.
pub fn randomized_eof_monte_carlo(p1: f64, p2: f64, n: usize, seed: u64) -> f64 {
    let mut rng = seeded_rng(seed, MC_STREAM);
    let mut tpr = |p: f64| {
        let (mut pos, mut hit) = (0u64, 0u64);
        for _ in 0..n {
            if rng.random::<f64>() < p {
                pos += 1;
                if rng.random::<f64>() < p {
                    hit += 1;
                }
            }
        }
        if pos == 0 {
            0.0
        } else {
            hit as f64 / pos as f64
        }
    };
    let t1 = tpr(p1);
    t1 - tpr(p2)
}

/// `Var[n_iY / n_i] = p_i (1 - p_i) / n_i`.
pub fn estimator_variance(p_i: f64, n_i: u64) -> Result<f64> {
    if n_i == 0 {
        return Err(Error::param("n_i", "must be >= 1"));
    }
    Ok(p_i * (1.0 - p_i) / n_i as f64)
}
