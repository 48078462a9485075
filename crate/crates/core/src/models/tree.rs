use crate::encoders::EncodedMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeConfig {
    pub max_depth: usize,
    /// Minimum number of training rows in each child of a split.
    pub min_leaf: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: 6,
            min_leaf: 20,
        }
    }
}

impl TreeConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.max_depth == 0 {
            return Err(Error::param("tree.max_depth", "must be positive"));
        }
        if self.min_leaf == 0 {
            return Err(Error::param("tree.min_leaf", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    /// Gini impurity of 0/1 labels.
    Gini,
    /// Sum of squared deviations of real-valued targets.
    SquaredError,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf {
        value: f64,
        /// Training rows that reached the leaf.
        n: usize,
        /// Sum of their targets; the positive count for a classifier.
        target_sum: f64,
    },
    Split {
        feature: usize,
        /// Rows with `x[feature] <= threshold` go left.
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Binary tree with axis-aligned threshold splits. Node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Greedy CART on Gini impurity; each leaf scores the positive fraction of
    /// its training rows.
    pub fn fit_classifier(x: &EncodedMatrix, y: &[u8], config: &TreeConfig) -> Tree {
        let targets: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
        let leaf = |rows: &[u32]| rows.iter().map(|&r| targets[r as usize]).sum::<f64>() / rows.len() as f64;
        Builder::new(x, &targets, Criterion::Gini, config).build(&leaf)
    }

    /// Regression tree on `targets` with squared-error splits; leaf values come
    /// from `leaf_value` applied to the rows of the leaf.
    pub fn fit_regression(
        x: &EncodedMatrix,
        targets: &[f64],
        config: &TreeConfig,
        leaf_value: &dyn Fn(&[u32]) -> f64,
    ) -> Tree {
        Builder::new(x, targets, Criterion::SquaredError, config).build(leaf_value)
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value, .. } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    /// Index of the leaf a row lands in.
    pub fn leaf_index(&self, row: &[f64]) -> usize {
        let mut i = 0;
        while let Node::Split {
            feature,
            threshold,
            left,
            right,
        } = &self.nodes[i]
        {
            i = if row[*feature] <= *threshold { *left } else { *right };
        }
        i
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

/// Depth-first builder over per-feature presorted row lists. Each node keeps
/// its rows sorted by every feature, and children inherit the order through a
/// stable partition, so the data is sorted once per tree.
struct Builder<'a> {
    x: &'a EncodedMatrix,
    targets: &'a [f64],
    criterion: Criterion,
    config: TreeConfig,
    go_left: Vec<bool>,
    nodes: Vec<Node>,
}

impl<'a> Builder<'a> {
    fn new(x: &'a EncodedMatrix, targets: &'a [f64], criterion: Criterion, config: &TreeConfig) -> Self {
        Builder {
            x,
            targets,
            criterion,
            config: *config,
            go_left: vec![false; x.n_rows()],
            nodes: Vec::new(),
        }
    }

    fn build(mut self, leaf_value: &dyn Fn(&[u32]) -> f64) -> Tree {
        let n = self.x.n_rows() as u32;
        let sorted: Vec<Vec<u32>> = (0..self.x.n_cols())
            .map(|f| {
                let mut rows: Vec<u32> = (0..n).collect();
                rows.sort_by(|&a, &b| self.x.get(a as usize, f).total_cmp(&self.x.get(b as usize, f)));
                rows
            })
            .collect();
        let all: Vec<u32> = (0..n).collect();
        self.grow(all, sorted, 0, leaf_value);
        Tree { nodes: self.nodes }
    }

    fn impurity(&self, n: f64, sum: f64, sum_sq: f64) -> f64 {
        match self.criterion {
            Criterion::Gini => {
                let p = sum / n;
                2.0 * p * (1.0 - p)
            }
            Criterion::SquaredError => (sum_sq - sum * sum / n) / n,
        }
    }

    fn grow(&mut self, rows: Vec<u32>, sorted: Vec<Vec<u32>>, depth: usize, leaf_value: &dyn Fn(&[u32]) -> f64) -> usize {
        let id = self.nodes.len();
        let n = rows.len();
        let (sum, sum_sq) = rows.iter().fold((0.0, 0.0), |(s, q), &r| {
            let t = self.targets[r as usize];
            (s + t, q + t * t)
        });
        self.nodes.push(Node::Leaf {
            value: leaf_value(&rows),
            n,
            target_sum: sum,
        });

        let parent = self.impurity(n as f64, sum, sum_sq);
        if depth >= self.config.max_depth || n < 2 * self.config.min_leaf || parent <= 0.0 {
            return id;
        }
        let Some(best) = self.best_split(&sorted, n, sum, sum_sq, parent) else {
            return id;
        };

        for &r in &rows {
            self.go_left[r as usize] = self.x.get(r as usize, best.feature) <= best.threshold;
        }
        let (left_rows, right_rows): (Vec<u32>, Vec<u32>) = rows.iter().partition(|&&r| self.go_left[r as usize]);
        let mut left_sorted = Vec::with_capacity(sorted.len());
        let mut right_sorted = Vec::with_capacity(sorted.len());
        for list in sorted {
            let (l, r): (Vec<u32>, Vec<u32>) = list.into_iter().partition(|&r| self.go_left[r as usize]);
            left_sorted.push(l);
            right_sorted.push(r);
        }
        drop(rows);
        let left = self.grow(left_rows, left_sorted, depth + 1, leaf_value);
        let right = self.grow(right_rows, right_sorted, depth + 1, leaf_value);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }

    /// Highest-gain split over all features; ties go to the lower feature
    /// index, then the lower threshold.
    fn best_split(&self, sorted: &[Vec<u32>], n: usize, sum: f64, sum_sq: f64, parent: f64) -> Option<Candidate> {
        let min_leaf = self.config.min_leaf;
        let nf = n as f64;
        let mut best: Option<Candidate> = None;
        for (feature, list) in sorted.iter().enumerate() {
            let (mut left_sum, mut left_sq) = (0.0, 0.0);
            for k in 0..n - 1 {
                let r = list[k] as usize;
                let t = self.targets[r];
                left_sum += t;
                left_sq += t * t;
                let n_left = k + 1;
                if n_left < min_leaf {
                    continue;
                }
                if n - n_left < min_leaf {
                    break;
                }
                let here = self.x.get(r, feature);
                let next = self.x.get(list[k + 1] as usize, feature);
                if next <= here {
                    continue;
                }
                let (nl, nr) = (n_left as f64, (n - n_left) as f64);
                let child = (nl * self.impurity(nl, left_sum, left_sq)
                    + nr * self.impurity(nr, sum - left_sum, sum_sq - left_sq))
                    / nf;
                let gain = parent - child;
                if best.as_ref().is_none_or(|b| gain > b.gain) {
                    let mut threshold = 0.5 * (here + next);
                    if threshold >= next {
                        threshold = here;
                    }
                    best = Some(Candidate {
                        gain,
                        feature,
                        threshold,
                    });
                }
            }
        }
        best
    }
}
