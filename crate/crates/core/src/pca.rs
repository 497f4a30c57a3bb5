//! PCA baseline: sample covariance, cyclic Jacobi eigendecomposition, and
//! projection onto the leading components.

#![allow(clippy::needless_range_loop)]

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Row-major `D x D`; column `k` is the `k`-th eigenvector.
    pub eigenvectors: Vec<Vec<f64>>,
    /// Descending.
    pub eigenvalues: Vec<f64>,
}

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn eigenvector(&self, k: usize) -> Vec<f64> {
        self.eigenvectors.iter().map(|row| row[k]).collect()
    }

    /// Projection of one centered vector onto the first `n_components` eigenvectors.
    pub fn project(&self, x: &[f64], n_components: usize) -> Vec<f64> {
        (0..n_components)
            .map(|k| {
                x.iter()
                    .zip(&self.mean)
                    .zip(&self.eigenvectors)
                    .map(|((xi, mi), row)| (xi - mi) * row[k])
                    .sum()
            })
            .collect()
    }
}

/// Unbiased (`1/(N-1)`) sample covariance.
pub fn sample_covariance(data: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let first = data.first().ok_or(Error::EmptyInput)?;
    let d = first.len();
    let n = data.len();
    if n < 2 {
        return Err(Error::TooFewSamples { got: n, min: 2 });
    }
    let mut mean = vec![0.0; d];
    for row in data {
        if row.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: row.len(),
            });
        }
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let mut cov = vec![vec![0.0; d]; d];
    for row in data {
        for i in 0..d {
            let di = row[i] - mean[i];
            for j in i..d {
                cov[i][j] += di * (row[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            cov[i][j] /= (n - 1) as f64;
            cov[j][i] = cov[i][j];
        }
    }
    Ok((mean, cov))
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Sweeps rotate every off-diagonal pair to zero until the off-diagonal
/// Frobenius norm drops below `1e-12` relative to the full norm. Returns
/// eigenvalues (unsorted) and eigenvectors as columns of a row-major matrix.
pub fn jacobi_eigen(matrix: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let total: f64 = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum::<f64>()
            .sqrt();
        if off <= JACOBI_TOL * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

/// Fits PCA: center, form the sample covariance, eigendecompose, sort descending.
pub fn pca_fit(data: &[Vec<f64>]) -> Result<PcaModel> {
    let d = data.first().map(Vec::len).ok_or(Error::EmptyInput)?;
    if data.len() <= d {
        return Err(Error::TooFewSamples {
            got: data.len(),
            min: d + 1,
        });
    }
    let (mean, cov) = sample_covariance(data)?;
    let (values, vectors) = jacobi_eigen(&cov);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    let eigenvalues = order.iter().map(|&i| values[i].max(0.0)).collect();
    let eigenvectors = vectors
        .iter()
        .map(|row| order.iter().map(|&i| row[i]).collect())
        .collect();
    Ok(PcaModel {
        mean,
        eigenvectors,
        eigenvalues,
    })
}

/// Projects onto the top `D - 1` components (compositions have `D - 1` degrees of freedom).
pub fn pca_transform(model: &PcaModel, data: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let d = model.dim();
    data.iter()
        .map(|row| {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: row.len(),
                });
            }
            Ok(model.project(row, d - 1))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{sample_dirichlet, DirichletParams};
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn dirichlet_rows(n: usize, seed: u64) -> Vec<Vec<f64>> {
        let p = DirichletParams::new(vec![2.0, 5.0, 6.0, 3.0, 7.0]).unwrap();
        sample_dirichlet(&p, n, seed)
            .unwrap()
            .into_iter()
            .map(|c| c.into_values())
            .collect()
    }

    #[test]
    fn line_data_is_rank_one() {
        let data: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![i as f64, 2.0 * i as f64 + 1.0])
            .collect();
        let m = pca_fit(&data).unwrap();
        assert!(m.eigenvalues[1].abs() < 1e-10 * m.eigenvalues[0]);
    }

    #[test]
    fn isotropic_data_has_similar_eigenvalues() {
        let mut rng = rng_from_seed(1);
        let data: Vec<Vec<f64>> = (0..20_000)
            .map(|_| (0..3).map(|_| rng.random::<f64>()).collect())
            .collect();
        let m = pca_fit(&data).unwrap();
        let ratio = m.eigenvalues[2] / m.eigenvalues[0];
        assert!(ratio > 0.9, "ratio {ratio}");
    }

    #[test]
    fn covariance_reconstruction_and_orthonormality() {
        let data = dirichlet_rows(500, 3);
        let m = pca_fit(&data).unwrap();
        let (_, cov) = sample_covariance(&data).unwrap();
        let d = m.dim();
        for i in 0..d {
            for j in 0..d {
                let rebuilt: f64 = (0..d)
                    .map(|k| m.eigenvectors[i][k] * m.eigenvalues[k] * m.eigenvectors[j][k])
                    .sum();
                assert!((rebuilt - cov[i][j]).abs() < 1e-10);
                let dot: f64 = (0..d)
                    .map(|k| m.eigenvectors[k][i] * m.eigenvectors[k][j])
                    .sum();
                let id = if i == j { 1.0 } else { 0.0 };
                assert!((dot - id).abs() < 1e-10);
            }
        }
        let trace: f64 = (0..d).map(|i| cov[i][i]).sum();
        assert!((m.eigenvalues.iter().sum::<f64>() - trace).abs() < 1e-10);
        assert!(m.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        assert!(m.eigenvalues[d - 1] < 1e-10 * m.eigenvalues[0]);
    }

    #[test]
    fn transform_decorrelates_and_centers() {
        let data = dirichlet_rows(800, 4);
        let m = pca_fit(&data).unwrap();
        let z = pca_transform(&m, &data).unwrap();
        assert_eq!(z[0].len(), 4);
        let n = z.len() as f64;
        for a in 0..4 {
            for b in a + 1..4 {
                let ma = z.iter().map(|r| r[a]).sum::<f64>() / n;
                let mb = z.iter().map(|r| r[b]).sum::<f64>() / n;
                let cov: f64 = z.iter().map(|r| (r[a] - ma) * (r[b] - mb)).sum();
                let va: f64 = z.iter().map(|r| (r[a] - ma).powi(2)).sum();
                let vb: f64 = z.iter().map(|r| (r[b] - mb).powi(2)).sum();
                assert!((cov / (va * vb).sqrt()).abs() < 1e-10);
            }
        }
        let origin = m.project(&m.mean, 4);
        assert!(origin.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn too_few_samples() {
        let data = vec![vec![0.2, 0.8], vec![0.5, 0.5]];
        assert_eq!(pca_fit(&data), Err(Error::TooFewSamples { got: 2, min: 3 }));
    }
}
