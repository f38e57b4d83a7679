//! Factor-analytic exploration of the word set: principal components of
//! the word correlation matrix, loadings, and variance explained.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::vsm::{pearson_similarity, OccurrenceMatrix, SquareMatrix};

const EIGEN_EPS: f64 = 1e-10;

/// Factor retention rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Retention {
    /// Keep factors whose eigenvalue exceeds 1.
    Kaiser,
    /// Keep exactly k factors (capped at the word count).
    Fixed(usize),
}

impl std::fmt::Display for Retention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Retention::Kaiser => write!(f, "kaiser"),
            Retention::Fixed(k) => write!(f, "fixed-{k}"),
        }
    }
}

/// Principal-component decomposition of a correlation matrix.
#[derive(Debug, Clone)]
pub struct FactorModel {
    pub labels: Vec<String>,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// loadings[word][factor] = eigenvector · sqrt(eigenvalue); the
    /// largest-magnitude loading of each factor is made positive.
    pub loadings: Vec<Vec<f64>>,
    /// Retained factor count under the retention rule.
    pub k: usize,
    /// eigenvalue / word count, per factor.
    pub variance_explained: Vec<f64>,
    pub retention: Retention,
}

/// Word×word Pearson correlations; unit diagonal. Errors on a constant
/// column, naming the word — the caller should drop such columns first.
pub fn correlation_matrix(m: &OccurrenceMatrix) -> Result<SquareMatrix<f64>> {
    pearson_similarity(m).map(|s| s.matrix)
}

/// Eigendecomposition of a correlation matrix into a factor model.
pub fn factor_analysis(corr: &SquareMatrix<f64>, retention: Retention) -> Result<FactorModel> {
    let p = corr.n();
    for i in 0..p {
        if (corr.get(i, i) - 1.0).abs() > 1e-8 {
            return Err(Error::NotACorrelationMatrix);
        }
        for j in (i + 1)..p {
            if (corr.get(i, j) - corr.get(j, i)).abs() > 1e-10 {
                return Err(Error::NotACorrelationMatrix);
            }
        }
    }
    let mat = DMatrix::from_fn(p, p, |i, j| corr.get(i, j));
    let eigen = nalgebra::SymmetricEigen::try_new(mat.clone(), EIGEN_EPS, 0)
        .unwrap_or_else(|| nalgebra::SymmetricEigen::new(mat));

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| {
        eigen.eigenvalues[b]
            .partial_cmp(&eigen.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    let eigenvalues: Vec<f64> = order.iter().map(|&i| eigen.eigenvalues[i]).collect();
    let mut loadings = vec![vec![0.0f64; p]; p];
    for (f, &src) in order.iter().enumerate() {
        let scale = eigenvalues[f].max(0.0).sqrt();
        let mut column: Vec<f64> = (0..p)
            .map(|w| eigen.eigenvectors[(w, src)] * scale)
            .collect();
        // sign convention: largest-magnitude loading positive
        let mut peak = 0usize;
        for (w, &v) in column.iter().enumerate() {
            if v.abs() > column[peak].abs() {
                peak = w;
            }
        }
        if column[peak] < 0.0 {
            for v in &mut column {
                *v = -*v;
            }
        }
        for w in 0..p {
            loadings[w][f] = column[w];
        }
    }

    let k = match retention {
        Retention::Kaiser => eigenvalues.iter().filter(|&&ev| ev > 1.0).count(),
        Retention::Fixed(k) => k.min(p),
    };
    let variance_explained = eigenvalues.iter().map(|&ev| ev / p as f64).collect();

    Ok(FactorModel {
        labels: corr.labels.clone(),
        eigenvalues,
        loadings,
        k,
        variance_explained,
        retention,
    })
}
