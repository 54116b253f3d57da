//! Greedy Gini decision trees and bagged forests.

use rand::RngExt;
use rand_chacha::ChaCha8Rng;

use crate::array::Mat;
use crate::dataio::ParamArray;
use crate::error::{Error, Result};
use crate::rng::{chacha, derive_seed};

/// Flattened binary tree. `feature[i] < 0` marks node `i` as a leaf scoring
/// `value[i]` (the positive fraction of its training rows); internal nodes
/// send `row[feature] <= threshold` to `left[i]`, otherwise `right[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    feature: Vec<i64>,
    threshold: Vec<f64>,
    left: Vec<usize>,
    right: Vec<usize>,
    value: Vec<f64>,
}

impl Tree {
    pub fn score(&self, row: &[f64]) -> f64 {
        let mut node = 0;
        loop {
            let f = self.feature[node];
            if f < 0 {
                return self.value[node];
            }
            node = if row[f as usize] <= self.threshold[node] {
                self.left[node]
            } else {
                self.right[node]
            };
        }
    }

    pub fn node_count(&self) -> usize {
        self.feature.len()
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, node: usize) -> usize {
            if t.feature[node] < 0 {
                0
            } else {
                1 + walk(t, t.left[node]).max(walk(t, t.right[node]))
            }
        }
        walk(self, 0)
    }

    pub(crate) fn to_param_arrays(&self, prefix: &str) -> Vec<ParamArray> {
        let n = self.node_count();
        vec![
            ParamArray::new(
                format!("{prefix}.feature"),
                vec![n],
                self.feature.iter().map(|&v| v as f64).collect(),
            ),
            ParamArray::new(format!("{prefix}.threshold"), vec![n], self.threshold.clone()),
            ParamArray::new(
                format!("{prefix}.left"),
                vec![n],
                self.left.iter().map(|&v| v as f64).collect(),
            ),
            ParamArray::new(
                format!("{prefix}.right"),
                vec![n],
                self.right.iter().map(|&v| v as f64).collect(),
            ),
            ParamArray::new(format!("{prefix}.value"), vec![n], self.value.clone()),
        ]
    }

    pub(crate) fn from_param_arrays(prefix: &str, params: &[ParamArray]) -> Result<Tree> {
        let find = |suffix: &str| -> Result<&ParamArray> {
            let name = format!("{prefix}.{suffix}");
            params
                .iter()
                .find(|p| p.name == name)
                .ok_or_else(|| Error::data(format!("artifact missing parameter array {name:?}")))
        };
        Ok(Tree {
            feature: find("feature")?.data.iter().map(|&v| v as i64).collect(),
            threshold: find("threshold")?.data.clone(),
            left: find("left")?.data.iter().map(|&v| v as usize).collect(),
            right: find("right")?.data.iter().map(|&v| v as usize).collect(),
            value: find("value")?.data.clone(),
        })
    }
}

struct Builder<'a> {
    x: &'a Mat,
    y: &'a [bool],
    max_depth: Option<u32>,
    /// Per-split feature subsampling: (rng, pool size). `None` scans every
    /// feature, which makes the build fully deterministic.
    sampling: Option<(ChaCha8Rng, usize)>,
    tree: Tree,
}

/// Grows a tree on the full data. `sampling` carries the forest's per-split
/// feature pool; plain decision trees pass `None`.
pub(crate) fn grow(
    x: &Mat,
    y: &[bool],
    max_depth: Option<u32>,
    sampling: Option<(ChaCha8Rng, usize)>,
) -> Tree {
    let indices: Vec<usize> = (0..x.rows()).collect();
    grow_on(x, y, &indices, max_depth, sampling)
}

fn grow_on(
    x: &Mat,
    y: &[bool],
    indices: &[usize],
    max_depth: Option<u32>,
    sampling: Option<(ChaCha8Rng, usize)>,
) -> Tree {
    let mut b = Builder {
        x,
        y,
        max_depth,
        sampling,
        tree: Tree {
            feature: Vec::new(),
            threshold: Vec::new(),
            left: Vec::new(),
            right: Vec::new(),
            value: Vec::new(),
        },
    };
    let mut work = indices.to_vec();
    b.build(&mut work, 0);
    b.tree
}

impl Builder<'_> {
    fn new_node(&mut self, value: f64) -> usize {
        self.tree.feature.push(-1);
        self.tree.threshold.push(0.0);
        self.tree.left.push(0);
        self.tree.right.push(0);
        self.tree.value.push(value);
        self.tree.feature.len() - 1
    }

    fn build(&mut self, indices: &mut Vec<usize>, depth: u32) -> usize {
        let n = indices.len();
        let positives = indices.iter().filter(|&&i| self.y[i]).count();
        let value = positives as f64 / n as f64;
        let node = self.new_node(value);

        let pure = positives == 0 || positives == n;
        let depth_ok = self.max_depth.is_none_or(|d| depth < d);
        if pure || !depth_ok || n < 2 {
            return node;
        }

        let Some((feature, threshold)) = self.best_split(indices) else {
            return node;
        };

        let (mut left_idx, mut right_idx): (Vec<usize>, Vec<usize>) = indices
            .drain(..)
            .partition(|&i| self.x.get(i, feature) <= threshold);
        let left = self.build(&mut left_idx, depth + 1);
        let right = self.build(&mut right_idx, depth + 1);
        self.tree.feature[node] = feature as i64;
        self.tree.threshold[node] = threshold;
        self.tree.left[node] = left;
        self.tree.right[node] = right;
        node
    }

    /// Minimum weighted Gini split over the feature pool; ties keep the first
    /// candidate in scan order. Splits land midway between adjacent distinct
    /// values; a node with no distinct values anywhere returns `None`.
    fn best_split(&mut self, indices: &[usize]) -> Option<(usize, f64)> {
        let d = self.x.cols();
        let pool: Vec<usize> = match &mut self.sampling {
            None => (0..d).collect(),
            Some((rng, m)) => {
                // partial Fisher-Yates, then sorted for a canonical scan order
                let mut all: Vec<usize> = (0..d).collect();
                let m = (*m).min(d);
                for i in 0..m {
                    let j = i + rng.random_range(0..(d - i));
                    all.swap(i, j);
                }
                let mut pool = all[..m].to_vec();
                pool.sort_unstable();
                pool
            }
        };

        let n = indices.len() as f64;
        let mut best: Option<(f64, usize, f64)> = None;
        let mut column: Vec<(f64, bool)> = Vec::with_capacity(indices.len());
        for &f in &pool {
            column.clear();
            column.extend(indices.iter().map(|&i| (self.x.get(i, f), self.y[i])));
            column.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

            let total_pos = column.iter().filter(|&&(_, l)| l).count() as f64;
            let mut left_pos = 0.0;
            for (i, &(v, label)) in column.iter().enumerate().take(column.len() - 1) {
                if label {
                    left_pos += 1.0;
                }
                let next = column[i + 1].0;
                if v == next {
                    continue;
                }
                let nl = (i + 1) as f64;
                let nr = n - nl;
                let pl = left_pos / nl;
                let pr = (total_pos - left_pos) / nr;
                let gini = nl / n * 2.0 * pl * (1.0 - pl) + nr / n * 2.0 * pr * (1.0 - pr);
                if best.as_ref().is_none_or(|&(g, _, _)| gini < g) {
                    best = Some((gini, f, (v + next) / 2.0));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

/// Bagged forest. Each tree gets its own derived seed for the bootstrap draw
/// and per-split feature pools, so one cohort seed pins the whole ensemble.
pub(crate) fn grow_forest(
    x: &Mat,
    y: &[bool],
    trees: usize,
    max_depth: Option<u32>,
    bootstrap: bool,
    all_features: bool,
    seed: u64,
) -> Vec<Tree> {
    let n = x.rows();
    let d = x.cols();
    let m_features = (d as f64).sqrt().floor().max(1.0) as usize;
    (0..trees)
        .map(|t| {
            let mut rng = chacha(derive_seed(seed, 0x5254_0000 + t as u64));
            let indices: Vec<usize> = if bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let sampling = if all_features {
                None
            } else {
                Some((rng, m_features))
            };
            grow_on(x, y, &indices, max_depth, sampling)
        })
        .collect()
}
