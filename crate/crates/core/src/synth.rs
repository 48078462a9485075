//! Seeded synthetic datasets for the three encoding-bias scenarios.
//!
//! * irreducible: two large groups with different positive rates (0.43 and
//!   0.25), so target encoding separates them even with unlimited data;
//! * reducible: one large group and a 50-row sample of it relabeled as a new
//!   category, so any encoded difference is sampling noise;
//! * intersectional: ethnicity crossed with marital status, where the
//!   concatenated groups are more extreme (0.46 vs 0.10) and often small.
//!
//! Every dataset also carries a few weakly predictive categorical columns so
//! that models have something besides the protected attribute to learn from.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::data::{Column, Dataset};
use crate::models::sigmoid;
use crate::seeded_rng;

const GEN_STREAM: u64 = 0x5eed_0004;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScenarioKind {
    Irreducible,
    Reducible,
    Intersectional,
}

impl ScenarioKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::Irreducible => "irreducible",
            ScenarioKind::Reducible => "reducible",
            ScenarioKind::Intersectional => "intersectional",
        }
    }

    pub fn generate(self, seed: u64) -> Dataset {
        match self {
            ScenarioKind::Irreducible => gen_irreducible(seed),
            ScenarioKind::Reducible => gen_reducible(seed),
            ScenarioKind::Intersectional => gen_intersectional(seed),
        }
    }

    /// Column, protected group and reference group studied in the scenario.
    pub fn default_groups(self) -> (&'static str, &'static str, &'static str) {
        match self {
            ScenarioKind::Irreducible => (ETHNIC, AFRICAN_AMERICAN, CAUCASIAN),
            ScenarioKind::Reducible => (ETHNIC, SAMPLED_GROUP, AFRICAN_AMERICAN),
            ScenarioKind::Intersectional => (
                INTERSECTIONAL_COLUMN,
                "African-American|Single",
                "Caucasian|Married",
            ),
        }
    }
}

impl std::str::FromStr for ScenarioKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "irreducible" => Ok(ScenarioKind::Irreducible),
            "reducible" => Ok(ScenarioKind::Reducible),
            "intersectional" => Ok(ScenarioKind::Intersectional),
            other => Err(crate::Error::param("scenario", format!("unknown scenario `{other}`"))),
        }
    }
}

pub const ETHNIC: &str = "ethnic";
pub const MARITAL: &str = "marital";
/// Name used for the ethnic x marital column of the intersectional scenario.
pub const INTERSECTIONAL_COLUMN: &str = "ethnic_marital";
pub const AFRICAN_AMERICAN: &str = "African-American";
pub const CAUCASIAN: &str = "Caucasian";
pub const SAMPLED_GROUP: &str = "African-American-sample";

/// Weakly predictive categorical columns `f1, f2, ...`. Category `k` of a
/// column shifts the log-odds of the target by an amount spread evenly over
/// `[-strength, +strength]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseColumns {
    pub count: usize,
    pub cardinality: usize,
    pub strength: f64,
}

impl Default for NoiseColumns {
    fn default() -> Self {
        NoiseColumns {
            count: 3,
            cardinality: 5,
            strength: 0.2,
        }
    }
}

impl NoiseColumns {
    fn effect(&self, k: usize) -> f64 {
        if self.cardinality < 2 {
            return 0.0;
        }
        self.strength * (2.0 * k as f64 / (self.cardinality - 1) as f64 - 1.0)
    }

    /// All combinations of per-column effects, summed.
    fn combined_effects(&self) -> Vec<f64> {
        let mut sums = vec![0.0];
        for _ in 0..self.count {
            sums = sums
                .iter()
                .flat_map(|s| (0..self.cardinality).map(move |k| (s, k)))
                .map(|(s, k)| s + self.effect(k))
                .collect();
        }
        sums
    }

    /// Log-odds offset making the expected positive rate, averaged over
    /// uniformly drawn noise categories, equal to `rate`.
    fn calibrate(&self, rate: f64) -> f64 {
        let effects = self.combined_effects();
        let mean_rate = |b: f64| effects.iter().map(|e| sigmoid(b + e)).sum::<f64>() / effects.len() as f64;
        let (mut lo, mut hi) = (-40.0, 40.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mean_rate(mid) < rate {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// A block of rows sharing the same protected-attribute values.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSpec {
    /// One label per attribute column.
    pub labels: Vec<String>,
    pub n: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    /// Names of the protected attribute columns.
    pub attributes: Vec<String>,
    pub cells: Vec<CellSpec>,
    pub noise: NoiseColumns,
    pub seed: u64,
}

/// Draws a dataset from `spec`. Rows are shuffled; the result depends only on
/// the spec and its seed.
pub fn generate(spec: &ScenarioSpec) -> Dataset {
    let mut rng = seeded_rng(spec.seed, GEN_STREAM);
    let noise = spec.noise;
    let n: usize = spec.cells.iter().map(|c| c.n).sum();

    let mut attr_values: Vec<Vec<String>> = vec![Vec::with_capacity(n); spec.attributes.len()];
    let mut noise_values: Vec<Vec<String>> = vec![Vec::with_capacity(n); noise.count];
    let mut target = Vec::with_capacity(n);
    for cell in &spec.cells {
        let offset = noise.calibrate(cell.rate);
        for _ in 0..cell.n {
            for (col, label) in attr_values.iter_mut().zip(&cell.labels) {
                col.push(label.clone());
            }
            let mut logit = offset;
            for col in noise_values.iter_mut() {
                let k = rng.random_range(0..noise.cardinality);
                logit += noise.effect(k);
                col.push(format!("c{k}"));
            }
            let p = if cell.rate <= 0.0 {
                0.0
            } else if cell.rate >= 1.0 {
                1.0
            } else {
                sigmoid(logit)
            };
            target.push(u8::from(rng.random::<f64>() < p));
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut columns: Vec<Column> = spec
        .attributes
        .iter()
        .zip(attr_values)
        .map(|(name, values)| Column {
            name: name.clone(),
            values,
        })
        .collect();
    columns.extend(noise_values.into_iter().enumerate().map(|(i, values)| Column {
        name: format!("f{}", i + 1),
        values,
    }));
    Dataset::new(columns, target)
        .expect("generated columns are consistent")
        .select_rows(&order)
}

fn cell(labels: &[&str], n: usize, rate: f64) -> CellSpec {
    CellSpec {
        labels: labels.iter().map(|s| s.to_string()).collect(),
        n,
        rate,
    }
}

pub fn irreducible_spec(seed: u64) -> ScenarioSpec {
    ScenarioSpec {
        kind: ScenarioKind::Irreducible,
        attributes: vec![ETHNIC.into()],
        cells: vec![
            cell(&[AFRICAN_AMERICAN], 13_000, 0.43),
            cell(&[CAUCASIAN], 10_000, 0.25),
        ],
        noise: NoiseColumns::default(),
        seed,
    }
}

pub fn gen_irreducible(seed: u64) -> Dataset {
    generate(&irreducible_spec(seed))
}

/// The sampled group shares the parent's rate; only its realized mean differs.
/// The other ethnic groups keep their marginal sizes and rates, so the
/// encoded column has more than two values.
pub fn reducible_spec(seed: u64) -> ScenarioSpec {
    let mut cells = vec![
        cell(&[AFRICAN_AMERICAN], 27_000, 0.43),
        cell(&[SAMPLED_GROUP], 50, 0.43),
    ];
    for (ethnic, rate, counts) in ETHNIC_TABLE.iter().skip(1) {
        cells.push(cell(&[ethnic], counts.iter().sum(), *rate));
    }
    ScenarioSpec {
        kind: ScenarioKind::Reducible,
        attributes: vec![ETHNIC.into()],
        cells,
        noise: NoiseColumns::default(),
        seed,
    }
}

pub fn gen_reducible(seed: u64) -> Dataset {
    generate(&reducible_spec(seed))
}

pub const MARITAL_STATUSES: [&str; 7] = [
    "Single",
    "Married",
    "Divorced",
    "Separated",
    "Widowed",
    "Significant-Other",
    "Unknown",
];

/// Relative risk of each marital status inside an ethnic group, in the order
/// of [`MARITAL_STATUSES`].
const MARITAL_MULTIPLIER: [f64; 7] = [1.15, 0.65, 0.95, 1.05, 0.7, 1.1, 1.0];

/// `(ethnic group, marginal rate, counts per marital status)`; a zero count
/// means the combination never occurs.
const ETHNIC_TABLE: [(&str, f64, [usize; 7]); 9] = [
    (AFRICAN_AMERICAN, 0.43, [9100, 1560, 910, 390, 130, 650, 260]),
    (CAUCASIAN, 0.25, [5500, 2200, 1200, 400, 200, 300, 200]),
    ("Hispanic", 0.30, [1800, 600, 270, 120, 60, 90, 60]),
    ("Other", 0.28, [960, 320, 144, 64, 32, 48, 32]),
    ("Asian", 0.20, [70, 40, 15, 0, 0, 15, 10]),
    ("Native-American", 0.40, [55, 25, 12, 8, 0, 0, 0]),
    ("Arabic", 0.25, [30, 20, 10, 0, 0, 0, 0]),
    ("Oriental", 0.22, [25, 15, 0, 0, 0, 0, 10]),
    ("Unknown", 0.30, [20, 12, 0, 0, 0, 0, 8]),
];

/// Cells with a fixed rate; the other cells of the same ethnic group absorb
/// the difference so that the group keeps its marginal rate.
const PINNED_CELLS: [(&str, &str, f64); 2] = [(AFRICAN_AMERICAN, "Single", 0.46), (CAUCASIAN, "Married", 0.10)];

/// Cell rates for the intersectional scenario. Unpinned cells of ethnic group
/// `g` get `s_g * multiplier(marital)`, with `s_g` solved so that the
/// count-weighted mean over the group equals its marginal rate.
pub fn intersectional_cells() -> Vec<CellSpec> {
    let mut cells = Vec::new();
    for (ethnic, marginal, counts) in ETHNIC_TABLE {
        let pinned = |marital: &str| {
            PINNED_CELLS
                .iter()
                .find(|(e, m, _)| *e == ethnic && *m == marital)
                .map(|&(_, _, r)| r)
        };
        let total: usize = counts.iter().sum();
        let mut fixed_mass = 0.0;
        let mut free_weight = 0.0;
        for (i, &n) in counts.iter().enumerate() {
            match pinned(MARITAL_STATUSES[i]) {
                Some(r) => fixed_mass += n as f64 * r,
                None => free_weight += n as f64 * MARITAL_MULTIPLIER[i],
            }
        }
        let scale = (marginal * total as f64 - fixed_mass) / free_weight;
        for (i, &n) in counts.iter().enumerate() {
            if n == 0 {
                continue;
            }
            let marital = MARITAL_STATUSES[i];
            let rate = pinned(marital).unwrap_or(scale * MARITAL_MULTIPLIER[i]);
            cells.push(cell(&[ethnic, marital], n, rate));
        }
    }
    cells
}

pub fn intersectional_spec(seed: u64) -> ScenarioSpec {
    ScenarioSpec {
        kind: ScenarioKind::Intersectional,
        attributes: vec![ETHNIC.into(), MARITAL.into()],
        cells: intersectional_cells(),
        noise: NoiseColumns::default(),
        seed,
    }
}

/// Ethnic and marital columns, not yet concatenated.
pub fn gen_intersectional(seed: u64) -> Dataset {
    generate(&intersectional_spec(seed))
}
