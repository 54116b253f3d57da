//! Classical binary classifiers with soft scores.
//!
//! Seven algorithms, all trained from scratch: logistic regression, linear
//! SVM, linear discriminant analysis, Gaussian naive Bayes, k-nearest
//! neighbors, decision trees and random forests. Every model scores a row
//! with a monotone confidence in [0, 1] suitable for AUC ranking, and fitting
//! is deterministic for a fixed seed.

mod gnb;
mod grid;
mod knn;
mod lda;
mod linear;
mod tree;

pub use grid::{default_grid, grid_search_cv, GridCvRow, GridSearchOutcome};
pub use tree::Tree;

use serde::{Deserialize, Serialize};

use crate::array::Mat;
use crate::dataio::ParamArray;
use crate::error::{Error, Result};

/// Algorithm identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Lr,
    Svm,
    Lda,
    Gnb,
    Knn,
    Dt,
    Rf,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::Lr,
        Algorithm::Svm,
        Algorithm::Lda,
        Algorithm::Gnb,
        Algorithm::Knn,
        Algorithm::Dt,
        Algorithm::Rf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Lr => "lr",
            Algorithm::Svm => "svm",
            Algorithm::Lda => "lda",
            Algorithm::Gnb => "gnb",
            Algorithm::Knn => "knn",
            Algorithm::Dt => "dt",
            Algorithm::Rf => "rf",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::config(format!("unknown algorithm {s:?}")))
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Algorithm plus hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "snake_case")]
pub enum ClassifierSpec {
    Lr {
        l2: f64,
    },
    Svm {
        c: f64,
    },
    Lda {
        ridge: f64,
    },
    Gnb {
        var_floor: f64,
    },
    Knn {
        k: usize,
    },
    Dt {
        max_depth: Option<u32>,
    },
    Rf {
        trees: usize,
        max_depth: Option<u32>,
        /// Draw a bootstrap sample per tree (the default forest behavior).
        bootstrap: bool,
        /// Per-split feature pool: sqrt(d) when false, every feature when
        /// true. `trees = 1, bootstrap = false, all_features = true`
        /// reproduces a plain decision tree exactly.
        all_features: bool,
    },
}

impl ClassifierSpec {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            ClassifierSpec::Lr { .. } => Algorithm::Lr,
            ClassifierSpec::Svm { .. } => Algorithm::Svm,
            ClassifierSpec::Lda { .. } => Algorithm::Lda,
            ClassifierSpec::Gnb { .. } => Algorithm::Gnb,
            ClassifierSpec::Knn { .. } => Algorithm::Knn,
            ClassifierSpec::Dt { .. } => Algorithm::Dt,
            ClassifierSpec::Rf { .. } => Algorithm::Rf,
        }
    }

    pub fn rf(trees: usize, max_depth: Option<u32>) -> Self {
        ClassifierSpec::Rf {
            trees,
            max_depth,
            bootstrap: true,
            all_features: false,
        }
    }

    /// Compact text form for report rows.
    pub fn describe(&self) -> String {
        match self {
            ClassifierSpec::Lr { l2 } => format!("lr(l2={l2})"),
            ClassifierSpec::Svm { c } => format!("svm(c={c})"),
            ClassifierSpec::Lda { ridge } => format!("lda(ridge={ridge})"),
            ClassifierSpec::Gnb { var_floor } => format!("gnb(var_floor={var_floor})"),
            ClassifierSpec::Knn { k } => format!("knn(k={k})"),
            ClassifierSpec::Dt { max_depth } => match max_depth {
                Some(d) => format!("dt(max_depth={d})"),
                None => "dt(max_depth=none)".to_string(),
            },
            ClassifierSpec::Rf {
                trees, max_depth, ..
            } => match max_depth {
                Some(d) => format!("rf(trees={trees},max_depth={d})"),
                None => format!("rf(trees={trees},max_depth=none)"),
            },
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::config(msg));
        match *self {
            ClassifierSpec::Lr { l2 } if !(l2 >= 0.0) => bad(format!("lr l2 must be >= 0, got {l2}")),
            ClassifierSpec::Svm { c } if !(c > 0.0) => bad(format!("svm c must be > 0, got {c}")),
            ClassifierSpec::Lda { ridge } if !(ridge > 0.0) => {
                bad(format!("lda ridge must be > 0, got {ridge}"))
            }
            ClassifierSpec::Gnb { var_floor } if !(var_floor > 0.0) => {
                bad(format!("gnb variance floor must be > 0, got {var_floor}"))
            }
            ClassifierSpec::Knn { k: 0 } => bad("knn needs k >= 1".into()),
            ClassifierSpec::Rf { trees: 0, .. } => bad("rf needs at least one tree".into()),
            _ => Ok(()),
        }
    }
}

/// Learned parameters, one variant per model family.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Model {
    /// LR, SVM and LDA all reduce to `sigmoid(w . x + b)`.
    Linear { w: Vec<f64>, b: f64 },
    Gnb {
        mean: [Vec<f64>; 2],
        var: [Vec<f64>; 2],
        log_prior: [f64; 2],
    },
    Knn { x: Mat, y: Vec<bool>, k: usize },
    Tree(Tree),
    Forest(Vec<Tree>),
}

/// A fitted classifier bound to its feature dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedClassifier {
    spec: ClassifierSpec,
    dim: usize,
    pub(crate) model: Model,
}

impl TrainedClassifier {
    pub fn spec(&self) -> &ClassifierSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

fn validate_training_data(x: &Mat, y: &[bool]) -> Result<()> {
    if x.rows() != y.len() {
        return Err(Error::data(format!(
            "{} rows but {} labels",
            x.rows(),
            y.len()
        )));
    }
    if x.rows() < 2 {
        return Err(Error::data("need at least 2 training rows"));
    }
    if !x.is_finite() {
        return Err(Error::numeric("training matrix contains non-finite values"));
    }
    let n_pos = y.iter().filter(|&&l| l).count();
    if n_pos == 0 || n_pos == y.len() {
        return Err(Error::data(
            "training labels contain a single class; need both",
        ));
    }
    Ok(())
}

/// Fits a classifier. `seed` drives any internal randomness (forest
/// bootstraps and feature pools); deterministic algorithms ignore it.
pub fn fit(spec: &ClassifierSpec, x: &Mat, y: &[bool], seed: u64) -> Result<TrainedClassifier> {
    spec.validate()?;
    validate_training_data(x, y)?;
    let model = match *spec {
        ClassifierSpec::Lr { l2 } => linear::fit_logistic(x, y, l2),
        ClassifierSpec::Svm { c } => linear::fit_svm(x, y, c),
        ClassifierSpec::Lda { ridge } => lda::fit(x, y, ridge)?,
        ClassifierSpec::Gnb { var_floor } => gnb::fit(x, y, var_floor),
        // oversized k is capped at the stored sample count when scoring, so
        // grid points larger than a CV fold degrade instead of failing
        ClassifierSpec::Knn { k } => Model::Knn {
            x: x.clone(),
            y: y.to_vec(),
            k,
        },
        ClassifierSpec::Dt { max_depth } => Model::Tree(tree::grow(x, y, max_depth, None)),
        ClassifierSpec::Rf {
            trees,
            max_depth,
            bootstrap,
            all_features,
        } => Model::Forest(tree::grow_forest(
            x,
            y,
            trees,
            max_depth,
            bootstrap,
            all_features,
            seed,
        )),
    };
    Ok(TrainedClassifier {
        spec: spec.clone(),
        dim: x.cols(),
        model,
    })
}

/// Soft scores in [0, 1], one per row of `x`.
pub fn predict_scores(model: &TrainedClassifier, x: &Mat) -> Result<Vec<f64>> {
    if x.cols() != model.dim {
        return Err(Error::data(format!(
            "model expects {} features, input has {}",
            model.dim,
            x.cols()
        )));
    }
    if !x.is_finite() {
        return Err(Error::numeric("input matrix contains non-finite values"));
    }
    let scores = match &model.model {
        Model::Linear { w, b } => (0..x.rows())
            .map(|r| linear::sigmoid(linear::dot(w, x.row(r)) + b))
            .collect(),
        Model::Gnb {
            mean,
            var,
            log_prior,
        } => (0..x.rows())
            .map(|r| gnb::posterior_positive(x.row(r), mean, var, log_prior))
            .collect(),
        Model::Knn { x: train, y, k } => (0..x.rows())
            .map(|r| knn::score(train, y, *k, x.row(r)))
            .collect(),
        Model::Tree(tree) => (0..x.rows()).map(|r| tree.score(x.row(r))).collect(),
        Model::Forest(trees) => (0..x.rows())
            .map(|r| {
                let row = x.row(r);
                trees.iter().map(|t| t.score(row)).sum::<f64>() / trees.len() as f64
            })
            .collect(),
    };
    Ok(scores)
}

/// Learned parameters as named arrays for persistence.
pub fn to_param_arrays(model: &TrainedClassifier) -> Vec<ParamArray> {
    let mut params = vec![ParamArray::new(
        "feature_dim",
        vec![1],
        vec![model.dim as f64],
    )];
    match &model.model {
        Model::Linear { w, b } => {
            params.push(ParamArray::new("weights", vec![w.len()], w.clone()));
            params.push(ParamArray::new("bias", vec![1], vec![*b]));
        }
        Model::Gnb {
            mean,
            var,
            log_prior,
        } => {
            let d = mean[0].len();
            params.push(ParamArray::new(
                "mean",
                vec![2, d],
                [mean[0].clone(), mean[1].clone()].concat(),
            ));
            params.push(ParamArray::new(
                "var",
                vec![2, d],
                [var[0].clone(), var[1].clone()].concat(),
            ));
            params.push(ParamArray::new("log_prior", vec![2], log_prior.to_vec()));
        }
        Model::Knn { x, y, k } => {
            params.push(ParamArray::new(
                "train_x",
                vec![x.rows(), x.cols()],
                x.data().to_vec(),
            ));
            params.push(ParamArray::new(
                "train_y",
                vec![y.len()],
                y.iter().map(|&l| l as u8 as f64).collect(),
            ));
            params.push(ParamArray::new("k", vec![1], vec![*k as f64]));
        }
        Model::Tree(tree) => params.extend(tree.to_param_arrays("tree")),
        Model::Forest(trees) => {
            params.push(ParamArray::new("n_trees", vec![1], vec![trees.len() as f64]));
            for (i, t) in trees.iter().enumerate() {
                params.extend(t.to_param_arrays(&format!("tree.{i}")));
            }
        }
    }
    params
}

/// Rebuilds a classifier from its spec and persisted arrays.
pub fn from_param_arrays(spec: &ClassifierSpec, params: &[ParamArray]) -> Result<TrainedClassifier> {
    let find = |name: &str| -> Result<&ParamArray> {
        params
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| Error::data(format!("artifact missing parameter array {name:?}")))
    };
    let dim = find("feature_dim")?.data[0] as usize;
    let model = match spec {
        ClassifierSpec::Lr { .. } | ClassifierSpec::Svm { .. } | ClassifierSpec::Lda { .. } => {
            Model::Linear {
                w: find("weights")?.data.clone(),
                b: find("bias")?.data[0],
            }
        }
        ClassifierSpec::Gnb { .. } => {
            let mean = find("mean")?;
            let var = find("var")?;
            let d = mean.data.len() / 2;
            Model::Gnb {
                mean: [mean.data[..d].to_vec(), mean.data[d..].to_vec()],
                var: [var.data[..d].to_vec(), var.data[d..].to_vec()],
                log_prior: [find("log_prior")?.data[0], find("log_prior")?.data[1]],
            }
        }
        ClassifierSpec::Knn { .. } => {
            let tx = find("train_x")?;
            Model::Knn {
                x: Mat::from_vec(tx.shape[0], tx.shape[1], tx.data.clone()),
                y: find("train_y")?.data.iter().map(|&v| v != 0.0).collect(),
                k: find("k")?.data[0] as usize,
            }
        }
        ClassifierSpec::Dt { .. } => Model::Tree(Tree::from_param_arrays("tree", params)?),
        ClassifierSpec::Rf { .. } => {
            let n = find("n_trees")?.data[0] as usize;
            let trees = (0..n)
                .map(|i| Tree::from_param_arrays(&format!("tree.{i}"), params))
                .collect::<Result<_>>()?;
            Model::Forest(trees)
        }
    };
    Ok(TrainedClassifier {
        spec: spec.clone(),
        dim,
        model,
    })
}
