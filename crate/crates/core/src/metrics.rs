//! Performance and group-fairness metrics over model scores.
//!
//! All pairwise fairness metrics compare a reference group `j` with another
//! group `i`, and every aggregate is oriented so that lower means fairer:
//!
//! * equal opportunity (EOF): `TPR_j - TPR_i`, signed
//! * statistical parity (SDP): Wasserstein-1 distance between score
//!   distributions, independent of the decision threshold
//! * average absolute odds (AAO): `|TPR_j - FPR_j| + |TPR_i - FPR_i|`
//!
//! A score at or above the threshold is a positive prediction.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::error::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl Confusion {
    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> u64 {
        self.fp + self.tn
    }

    /// `TP / (TP + FN)`, or `None` without positive labels.
    pub fn tpr(&self) -> Option<f64> {
        (self.positives() > 0).then(|| self.tp as f64 / self.positives() as f64)
    }

    /// `FP / (FP + TN)`, or `None` without negative labels.
    pub fn fpr(&self) -> Option<f64> {
        (self.negatives() > 0).then(|| self.fp as f64 / self.negatives() as f64)
    }
}

fn check_lengths(scores: &[f64], labels: &[u8]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::InputLengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    if scores.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

pub fn confusion(scores: &[f64], labels: &[u8], threshold: f64) -> Result<Confusion> {
    check_lengths(scores, labels)?;
    if !threshold.is_finite() {
        return Err(Error::param("threshold", "must be finite"));
    }
    let mut c = Confusion::default();
    for (&s, &y) in scores.iter().zip(labels) {
        match (s >= threshold, y == 1) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

/// Scores and labels of one group, with its confusion counts at `threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupOutcome {
    pub label: String,
    pub scores: Vec<f64>,
    pub labels: Vec<u8>,
    pub threshold: f64,
    pub confusion: Confusion,
}

impl GroupOutcome {
    pub fn new(label: impl Into<String>, scores: Vec<f64>, labels: Vec<u8>, threshold: f64) -> Result<Self> {
        let confusion = confusion(&scores, &labels, threshold)?;
        Ok(GroupOutcome {
            label: label.into(),
            scores,
            labels,
            threshold,
            confusion,
        })
    }

    pub fn tpr(&self) -> Result<f64> {
        self.confusion
            .tpr()
            .ok_or_else(|| Error::UndefinedTpr(self.label.clone()))
    }

    pub fn fpr(&self) -> Result<f64> {
        self.confusion
            .fpr()
            .ok_or_else(|| Error::UndefinedFpr(self.label.clone()))
    }

    pub fn auc(&self) -> Result<f64> {
        auc(&self.scores, &self.labels)
    }
}

/// Splits scores and labels by a parallel vector of group labels. Groups come
/// out in label order.
pub fn group_outcomes(groups: &[String], scores: &[f64], labels: &[u8], threshold: f64) -> Result<Vec<GroupOutcome>> {
    check_lengths(scores, labels)?;
    if groups.len() != scores.len() {
        return Err(Error::InputLengthMismatch {
            scores: scores.len(),
            labels: groups.len(),
        });
    }
    let mut split: BTreeMap<&str, (Vec<f64>, Vec<u8>)> = BTreeMap::new();
    for ((g, &s), &y) in groups.iter().zip(scores).zip(labels) {
        let e = split.entry(g.as_str()).or_default();
        e.0.push(s);
        e.1.push(y);
    }
    split
        .into_iter()
        .map(|(g, (s, y))| GroupOutcome::new(g, s, y, threshold))
        .collect()
}

/// `TPR_reference - TPR_group`. Negative when the model finds the actual
/// positives of `grp` more often than those of the reference group.
pub fn equal_opportunity(reference: &GroupOutcome, grp: &GroupOutcome) -> Result<f64> {
    Ok(reference.tpr()? - grp.tpr()?)
}

pub fn average_absolute_odds(reference: &GroupOutcome, grp: &GroupOutcome) -> Result<f64> {
    Ok((reference.tpr()? - reference.fpr()?).abs() + (grp.tpr()? - grp.fpr()?).abs())
}

/// Wasserstein-1 distance between two empirical distributions, as the
/// integral of `|F_a(x) - F_b(x)|` over the merged support. Returns 0 when
/// either sample is empty.
pub fn wasserstein1(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable_by(f64::total_cmp);
    b.sort_unstable_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);

    let (mut i, mut j) = (0usize, 0usize);
    let mut x = a[0].min(b[0]);
    let mut total = 0.0;
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&u), Some(&v)) => u.min(v),
            (Some(&u), None) => u,
            (None, Some(&v)) => v,
            (None, None) => unreachable!(),
        };
        let cdf_gap = (i as f64 / na - j as f64 / nb).abs();
        total += cdf_gap * (next - x);
        x = next;
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
    }
    total
}

pub fn statistical_parity_wasserstein(scores_ref: &[f64], scores_grp: &[f64]) -> Result<f64> {
    if scores_ref.is_empty() || scores_grp.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(wasserstein1(scores_ref, scores_grp))
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half.
///
/// Computed by sorting and walking tie blocks; the Mann-Whitney count is kept
/// doubled in integer arithmetic so the only rounding is the final division.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    check_lengths(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let (mut pos_total, mut neg_below, mut twice_u) = (0u128, 0u128, 0u128);
    let mut start = 0;
    while start < order.len() {
        let s = scores[order[start]];
        let mut end = start;
        let (mut p, mut n) = (0u128, 0u128);
        while end < order.len() && scores[order[end]].total_cmp(&s) == Ordering::Equal {
            if labels[order[end]] == 1 {
                p += 1;
            } else {
                n += 1;
            }
            end += 1;
        }
        twice_u += 2 * p * neg_below + p * n;
        pos_total += p;
        neg_below += n;
        start = end;
    }
    if pos_total == 0 || neg_below == 0 {
        return Err(Error::SingleClass);
    }
    Ok(twice_u as f64 / (2 * pos_total * neg_below) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FairnessMetric {
    EqualOpportunity,
    StatisticalParity,
    AverageAbsoluteOdds,
}

impl FairnessMetric {
    pub const ALL: [FairnessMetric; 3] = [
        FairnessMetric::EqualOpportunity,
        FairnessMetric::StatisticalParity,
        FairnessMetric::AverageAbsoluteOdds,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            FairnessMetric::EqualOpportunity => "eof",
            FairnessMetric::StatisticalParity => "sdp",
            FairnessMetric::AverageAbsoluteOdds => "aao",
        }
    }

    pub fn pairwise(self, reference: &GroupOutcome, grp: &GroupOutcome) -> Result<f64> {
        match self {
            FairnessMetric::EqualOpportunity => equal_opportunity(reference, grp),
            FairnessMetric::StatisticalParity => statistical_parity_wasserstein(&reference.scores, &grp.scores),
            FairnessMetric::AverageAbsoluteOdds => average_absolute_odds(reference, grp),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub value: f64,
    /// Groups left out because the metric is undefined for them, with the reason.
    pub excluded: Vec<(String, String)>,
}

/// `L = sum over i != j of |metric(group_j, group_i)|`.
///
/// A group for which the metric is undefined is excluded and reported. If the
/// reference group itself fails the preconditions every other group is
/// excluded and `L` is 0.
pub fn aggregate_fairness(groups: &[GroupOutcome], reference: &str, metric: FairnessMetric) -> Result<Aggregate> {
    if groups.len() < 2 {
        return Err(Error::TooFewGroups(groups.len()));
    }
    let reference = groups
        .iter()
        .find(|g| g.label == reference)
        .ok_or_else(|| Error::MissingGroup(reference.to_string()))?;
    let mut value = 0.0;
    let mut excluded = Vec::new();
    for g in groups.iter().filter(|g| g.label != reference.label) {
        match metric.pairwise(reference, g) {
            Ok(v) => value += v.abs(),
            Err(e) => excluded.push((g.label.clone(), e.to_string())),
        }
    }
    Ok(Aggregate { value, excluded })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupPerformance {
    pub label: String,
    pub n: usize,
    pub auc: Option<f64>,
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseFairness {
    pub label: String,
    pub eof: Option<f64>,
    pub sdp: Option<f64>,
    pub aao: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FairnessReport {
    pub reference: String,
    pub per_group: Vec<GroupPerformance>,
    /// Every non-reference group compared against the reference.
    pub pairwise: Vec<PairwiseFairness>,
    pub aggregate: BTreeMap<FairnessMetric, Aggregate>,
}

impl FairnessReport {
    pub fn build(groups: &[GroupOutcome], reference: &str) -> Result<Self> {
        let ref_group = groups
            .iter()
            .find(|g| g.label == reference)
            .ok_or_else(|| Error::MissingGroup(reference.to_string()))?;
        let per_group = groups
            .iter()
            .map(|g| GroupPerformance {
                label: g.label.clone(),
                n: g.scores.len(),
                auc: g.auc().ok(),
                tpr: g.tpr().ok(),
                fpr: g.fpr().ok(),
            })
            .collect();
        let pairwise = groups
            .iter()
            .filter(|g| g.label != reference)
            .map(|g| PairwiseFairness {
                label: g.label.clone(),
                eof: equal_opportunity(ref_group, g).ok(),
                sdp: statistical_parity_wasserstein(&ref_group.scores, &g.scores).ok(),
                aao: average_absolute_odds(ref_group, g).ok(),
            })
            .collect();
        let aggregate = FairnessMetric::ALL
            .iter()
            .map(|&m| aggregate_fairness(groups, reference, m).map(|a| (m, a)))
            .collect::<Result<_>>()?;
        Ok(FairnessReport {
            reference: reference.to_string(),
            per_group,
            pairwise,
            aggregate,
        })
    }

    pub fn group(&self, label: &str) -> Option<&GroupPerformance> {
        self.per_group.iter().find(|g| g.label == label)
    }

    pub fn pair(&self, label: &str) -> Option<&PairwiseFairness> {
        self.pairwise.iter().find(|g| g.label == label)
    }

    /// One row per (group, metric) plus one aggregate row per metric, with
    /// header `group,metric,value`. Undefined values are written as `NaN`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("group,metric,value\n");
        let fmt = |v: Option<f64>| v.map_or_else(|| "NaN".to_string(), |v| v.to_string());
        for g in &self.per_group {
            out.push_str(&format!("{},auc,{}\n", g.label, fmt(g.auc)));
            out.push_str(&format!("{},tpr,{}\n", g.label, fmt(g.tpr)));
            out.push_str(&format!("{},fpr,{}\n", g.label, fmt(g.fpr)));
        }
        for p in &self.pairwise {
            out.push_str(&format!("{},eof,{}\n", p.label, fmt(p.eof)));
            out.push_str(&format!("{},sdp,{}\n", p.label, fmt(p.sdp)));
            out.push_str(&format!("{},aao,{}\n", p.label, fmt(p.aao)));
        }
        for (m, a) in &self.aggregate {
            out.push_str(&format!("*aggregate*,L_{},{}\n", m.short_name(), a.value));
        }
        out
    }
}
