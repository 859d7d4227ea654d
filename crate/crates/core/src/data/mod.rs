//! Datasets: in-memory representation, seeded toy generators, CSV I/O and
//! subsampling.

mod csv_io;
mod toy;

pub use csv_io::{load_csv, load_descriptor, save_csv, CsvSchema, DatasetDescriptor};
pub use toy::{gen_1d_regression_shift, gen_rotated_gaussians, GaussianToy, RegressionToy};

use ndarray::{Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Regression,
    Classification,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    Source,
    Target,
}

/// Supervision attached to a dataset.
#[derive(Debug, Clone, PartialEq)]
pub enum Labels {
    /// Class indices in `0..n_classes`.
    Classes { indices: Vec<usize>, n_classes: usize },
    /// Real-valued targets, one row per sample.
    Values(Array2<f64>),
}

impl Labels {
    pub fn len(&self) -> usize {
        match self {
            Labels::Classes { indices, .. } => indices.len(),
            Labels::Values(y) => y.nrows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn task(&self) -> Task {
        match self {
            Labels::Classes { .. } => Task::Classification,
            Labels::Values(_) => Task::Regression,
        }
    }

    /// Output dimension: number of regression targets or number of classes.
    pub fn output_dim(&self) -> usize {
        match self {
            Labels::Classes { n_classes, .. } => *n_classes,
            Labels::Values(y) => y.ncols(),
        }
    }

    /// One-hot matrix for classes, the target matrix itself for regression.
    pub fn to_matrix(&self) -> Array2<f64> {
        match self {
            Labels::Classes { indices, n_classes } => {
                let mut p = Array2::zeros((indices.len(), *n_classes));
                for (i, &k) in indices.iter().enumerate() {
                    p[[i, k]] = 1.0;
                }
                p
            }
            Labels::Values(y) => y.clone(),
        }
    }

    fn select(&self, rows: &[usize]) -> Labels {
        match self {
            Labels::Classes { indices, n_classes } => Labels::Classes {
                indices: rows.iter().map(|&r| indices[r]).collect(),
                n_classes: *n_classes,
            },
            Labels::Values(y) => Labels::Values(y.select(Axis(0), rows)),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Labels::Classes { indices, n_classes } => {
                if *n_classes == 0 {
                    return Err(Error::invalid("classification needs at least one class"));
                }
                if let Some((i, &k)) = indices.iter().enumerate().find(|(_, &k)| k >= *n_classes) {
                    return Err(Error::invalid(format!(
                        "label {k} of sample {i} out of range for {n_classes} classes"
                    )));
                }
            }
            Labels::Values(y) => {
                if y.ncols() == 0 {
                    return Err(Error::invalid("regression targets need at least one column"));
                }
                check_finite(y.view(), "labels")?;
            }
        }
        Ok(())
    }
}

/// Feature matrix with optional labels and a domain tag.
///
/// Target datasets may carry labels; they are only ever used for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    x: Array2<f64>,
    labels: Option<Labels>,
    domain: Domain,
}

impl LabeledDataset {
    pub fn new(x: Array2<f64>, labels: Option<Labels>, domain: Domain) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::invalid("dataset must contain at least one sample"));
        }
        if x.ncols() == 0 {
            return Err(Error::invalid("dataset must have at least one feature"));
        }
        check_finite(x.view(), "features")?;
        if let Some(labels) = &labels {
            if labels.len() != x.nrows() {
                return Err(Error::DimensionMismatch {
                    context: "labels vs samples",
                    expected: x.nrows(),
                    actual: labels.len(),
                });
            }
            labels.validate()?;
        }
        Ok(Self { x, labels, domain })
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn labels(&self) -> Option<&Labels> {
        self.labels.as_ref()
    }

    /// Labels, or a schema error naming the dataset's domain.
    pub fn require_labels(&self) -> Result<&Labels> {
        self.labels
            .as_ref()
            .ok_or_else(|| Error::Schema(format!("{:?} dataset has no labels", self.domain)))
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.nrows() == 0
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    /// Rows `rows`, in the given order.
    pub fn select(&self, rows: &[usize]) -> Self {
        Self {
            x: self.x.select(Axis(0), rows),
            labels: self.labels.as_ref().map(|l| l.select(rows)),
            domain: self.domain,
        }
    }
}

/// Uniform subsample without replacement of `floor(fraction·N)` rows, kept in
/// their original order.
pub fn subsample(ds: &LabeledDataset, fraction: f64, seed: u64) -> Result<LabeledDataset> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!("fraction must be in (0, 1], got {fraction}")));
    }
    let n = ds.len();
    let k = (fraction * n as f64).floor() as usize;
    if k == 0 {
        return Err(Error::invalid(format!(
            "fraction {fraction} of {n} samples selects nothing"
        )));
    }
    if k == n {
        return Ok(ds.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = rand::seq::index::sample(&mut rng, n, k).into_vec();
    rows.sort_unstable();
    Ok(ds.select(&rows))
}

pub(crate) fn check_finite(m: ArrayView2<'_, f64>, what: &'static str) -> Result<()> {
    match m.indexed_iter().find(|(_, v)| !v.is_finite()) {
        Some(((row, col), _)) => Err(Error::NonFinite { what, row, col }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn ten_rows() -> LabeledDataset {
        let x = Array2::from_shape_fn((10, 2), |(i, j)| (i * 2 + j) as f64);
        let y = Labels::Classes {
            indices: (0..10).map(|i| i % 3).collect(),
            n_classes: 3,
        };
        LabeledDataset::new(x, Some(y), Domain::Source).unwrap()
    }

    #[test]
    fn subsample_full_fraction_is_identity() {
        let ds = ten_rows();
        assert_eq!(subsample(&ds, 1.0, 9).unwrap(), ds);
    }

    #[test]
    fn subsample_sixty_percent_of_ten() {
        let ds = ten_rows();
        let a = subsample(&ds, 0.6, 4).unwrap();
        let b = subsample(&ds, 0.6, 4).unwrap();
        assert_eq!(a.len(), 6);
        assert_eq!(a, b);
        // original order is kept
        let firsts: Vec<f64> = a.x().column(0).to_vec();
        assert!(firsts.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn subsample_rejects_empty_selection() {
        assert!(subsample(&ten_rows(), 0.05, 1).is_err());
        assert!(subsample(&ten_rows(), 0.0, 1).is_err());
    }

    #[test]
    fn dataset_invariants() {
        assert!(LabeledDataset::new(array![[f64::NAN]], None, Domain::Target).is_err());
        let bad = Labels::Classes {
            indices: vec![3],
            n_classes: 3,
        };
        assert!(LabeledDataset::new(array![[1.0]], Some(bad), Domain::Source).is_err());
        let short = Labels::Values(array![[1.0], [2.0]]);
        assert!(LabeledDataset::new(array![[1.0]], Some(short), Domain::Source).is_err());
    }
}
