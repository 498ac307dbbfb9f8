//! Weighted principal component analysis for initialization and plotting.

use nalgebra::{DMatrix, DVector};

use crate::energy::DataSet;
use crate::error::{Error, Result};

/// Leading principal axes of a weighted dataset.
#[derive(Debug, Clone)]
pub struct PrincipalAxes {
    pub mean: Vec<f64>,
    /// `(variance, unit direction)` pairs, sorted by decreasing variance.
    /// Directions carry a deterministic sign: the first coordinate of
    /// magnitude above 1e-12 is positive.
    pub axes: Vec<(f64, Vec<f64>)>,
}

impl PrincipalAxes {
    /// Coordinates of `point` in the plane of axes `(a, b)`, relative to
    /// the weighted mean.
    pub fn project2(&self, point: &[f64], a: usize, b: usize) -> (f64, f64) {
        let centered: Vec<f64> = point.iter().zip(&self.mean).map(|(x, m)| x - m).collect();
        let dot = |axis: &[f64]| centered.iter().zip(axis).map(|(c, u)| c * u).sum::<f64>();
        (dot(&self.axes[a].1), dot(&self.axes[b].1))
    }
}

pub fn weighted_mean(data: &DataSet) -> Vec<f64> {
    let m = data.dim();
    let mut mean = vec![0.0; m];
    for p in 0..data.len() {
        let w = data.weight(p);
        for (acc, x) in mean.iter_mut().zip(data.point(p)) {
            *acc += w * x;
        }
    }
    let total = data.total_weight();
    for v in &mut mean {
        *v /= total;
    }
    mean
}

/// Weighted covariance matrix `sum_x w(x) (x - mean)(x - mean)^T / sum_x w(x)`.
pub fn weighted_covariance(data: &DataSet, mean: &[f64]) -> DMatrix<f64> {
    let m = data.dim();
    let mut cov = DMatrix::zeros(m, m);
    for p in 0..data.len() {
        let w = data.weight(p);
        let x = data.point(p);
        for i in 0..m {
            let di = x[i] - mean[i];
            for j in i..m {
                cov[(i, j)] += w * di * (x[j] - mean[j]);
            }
        }
    }
    let total = data.total_weight();
    for i in 0..m {
        for j in i..m {
            cov[(i, j)] /= total;
            cov[(j, i)] = cov[(i, j)];
        }
    }
    cov
}

/// Top-`k` principal axes via symmetric eigendecomposition of the weighted
/// covariance. Ties and signs are resolved deterministically.
pub fn principal_axes(data: &DataSet, k: usize) -> Result<PrincipalAxes> {
    let m = data.dim();
    if k > m {
        return Err(Error::InvalidArgument(format!(
            "requested {k} axes from {m}-dimensional data"
        )));
    }
    let mean = weighted_mean(data);
    let cov = weighted_covariance(data, &mean);
    let eig = cov.symmetric_eigen();

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });

    let axes = order
        .into_iter()
        .take(k)
        .map(|idx| {
            let mut axis: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
            fix_sign(&mut axis);
            (eig.eigenvalues[idx].max(0.0), axis)
        })
        .collect();
    Ok(PrincipalAxes { mean, axes })
}

/// Flips the axis so its first coordinate of magnitude above 1e-12 is
/// positive.
fn fix_sign(axis: &mut [f64]) {
    if let Some(&lead) = axis.iter().find(|x| x.abs() > 1e-12) {
        if lead < 0.0 {
            for x in axis.iter_mut() {
                *x = -*x;
            }
        }
    }
}

/// Residual of the covariance eigenpair equation, used by tests to check
/// the decomposition against an independent criterion.
pub fn eigenpair_residual(cov: &DMatrix<f64>, value: f64, axis: &[f64]) -> f64 {
    let v = DVector::from_column_slice(axis);
    (cov * &v - value * &v).norm()
}
