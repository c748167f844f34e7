//! Principal component analysis over the population covariance, factored
//! with cyclic Jacobi rotations for dependency-free, bitwise-deterministic
//! results.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;

/// How many components to keep after the eigendecomposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Retain {
    /// Exactly this many components.
    Components(usize),
    /// The smallest k whose cumulative explained variance reaches the
    /// fraction, which must lie in (0, 1].
    VarianceFraction(f64),
}

impl Default for Retain {
    fn default() -> Self {
        Retain::VarianceFraction(0.95)
    }
}

/// Fitted projection: row-orthonormal components sorted by non-increasing
/// eigenvalue, with the training mean used for centering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean_vector: Vec<f64>,
    /// k x d; row i is the i-th principal axis.
    pub components: Mat,
    /// Population variance captured by each kept component.
    pub eigenvalues: Vec<f64>,
    /// `eigenvalues[i] / total variance`, each in [0, 1].
    pub explained_variance_ratio: Vec<f64>,
}

impl PcaModel {
    pub fn input_dim(&self) -> usize {
        self.components.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.components.rows()
    }

    /// Checks structural invariants (used after deserializing model files).
    pub fn validate(&self) -> Result<()> {
        let k = self.components.rows();
        let d = self.components.cols();
        if self.mean_vector.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: self.mean_vector.len(),
            });
        }
        if self.eigenvalues.len() != k || self.explained_variance_ratio.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                actual: self.eigenvalues.len(),
            });
        }
        for w in self.eigenvalues.windows(2) {
            if w[1] > w[0] {
                return Err(Error::SchemaMismatch(
                    "eigenvalues are not non-increasing".into(),
                ));
            }
        }
        if self.eigenvalues.iter().any(|&l| l < 0.0) {
            return Err(Error::SchemaMismatch("negative eigenvalue".into()));
        }
        for i in 0..k {
            for j in 0..k {
                let dot: f64 = (0..d)
                    .map(|c| self.components.get(i, c) * self.components.get(j, c))
                    .sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                if (dot - expected).abs() >= 1e-8 {
                    return Err(Error::SchemaMismatch(format!(
                        "components are not orthonormal (rows {i}, {j})"
                    )));
                }
            }
        }
        Ok(())
    }
}

const JACOBI_OFF_DIAG_TOLERANCE: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 256;

/// Diagonalizes a symmetric matrix with cyclic Jacobi sweeps. Returns the
/// unsorted eigenvalues and the eigenvector matrix (eigenvectors in
/// columns).
fn jacobi_eigen(sym: &Mat) -> Result<(Vec<f64>, Mat)> {
    let d = sym.rows();
    let mut a = sym.clone();
    let mut v = Mat::zeros(d, d);
    for i in 0..d {
        v.set(i, i, 1.0);
    }
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off_max = 0.0f64;
        for p in 0..d {
            for q in (p + 1)..d {
                off_max = off_max.max(a.get(p, q).abs());
            }
        }
        if off_max < JACOBI_OFF_DIAG_TOLERANCE {
            let eigenvalues = (0..d).map(|i| a.get(i, i)).collect();
            return Ok((eigenvalues, v));
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                // Smaller root of t^2 + 2t*theta - 1 = 0, for stability.
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    1.0 / (theta - (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                let app = a.get(p, p);
                let aqq = a.get(q, q);
                a.set(p, p, app - t * apq);
                a.set(q, q, aqq + t * apq);
                a.set(p, q, 0.0);
                a.set(q, p, 0.0);
                for r in 0..d {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a.get(r, p);
                    let arq = a.get(r, q);
                    a.set(r, p, arp - s * (arq + tau * arp));
                    a.set(p, r, a.get(r, p));
                    a.set(r, q, arq + s * (arp - tau * arq));
                    a.set(q, r, a.get(r, q));
                }
                for r in 0..d {
                    let vrp = v.get(r, p);
                    let vrq = v.get(r, q);
                    v.set(r, p, vrp - s * (vrq + tau * vrp));
                    v.set(r, q, vrq + s * (vrp - tau * vrq));
                }
            }
        }
    }
    Err(Error::DegenerateInput(format!(
        "eigendecomposition did not reach off-diagonal tolerance in {JACOBI_MAX_SWEEPS} sweeps"
    )))
}

/// Fits PCA on the rows of `matrix`: mean-centers, forms the population
/// covariance, diagonalizes it, and keeps components per `retain`. Ties in
/// eigenvalue order are broken by original column index; each kept
/// component's largest-magnitude entry is made positive (first such entry
/// on ties).
pub fn fit_pca(matrix: &Mat, retain: Retain) -> Result<PcaModel> {
    let n = matrix.rows();
    let d = matrix.cols();
    if n < 2 {
        return Err(Error::DegenerateInput(format!(
            "PCA needs at least 2 rows, got {n}"
        )));
    }
    if d == 0 {
        return Err(Error::EmptyInput("PCA needs at least one column".into()));
    }
    if matrix.data().iter().any(|x| x.is_nan()) {
        return Err(Error::MissingValues("PCA input contains NaN".into()));
    }
    match retain {
        Retain::Components(k) if k == 0 || k > d => {
            return Err(Error::InvalidConfig(format!(
                "component count {k} outside 1..={d}"
            )))
        }
        Retain::VarianceFraction(v) if !(v > 0.0 && v <= 1.0) => {
            return Err(Error::InvalidConfig(format!(
                "variance fraction {v} outside (0, 1]"
            )))
        }
        _ => {}
    }

    let mut mean_vector = vec![0.0; d];
    for i in 0..n {
        for (j, m) in mean_vector.iter_mut().enumerate() {
            *m += matrix.get(i, j);
        }
    }
    for m in &mut mean_vector {
        *m /= n as f64;
    }
    let mut centered = matrix.clone();
    for i in 0..n {
        for (v, m) in centered.row_mut(i).iter_mut().zip(&mean_vector) {
            *v -= m;
        }
    }

    let mut cov = Mat::zeros(d, d);
    for i in 0..n {
        let row = centered.row(i);
        for p in 0..d {
            for q in p..d {
                let val = cov.get(p, q) + row[p] * row[q];
                cov.set(p, q, val);
            }
        }
    }
    for p in 0..d {
        for q in p..d {
            let val = cov.get(p, q) / n as f64;
            cov.set(p, q, val);
            cov.set(q, p, val);
        }
    }

    let (raw_eigenvalues, vectors) = jacobi_eigen(&cov)?;
    let eigenvalues: Vec<f64> = raw_eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    let mut order: Vec<usize> = (0..d).collect();
    // Stable sort keeps original column index order among exact ties.
    order.sort_by(|&i, &j| eigenvalues[j].partial_cmp(&eigenvalues[i]).unwrap());

    let total: f64 = eigenvalues.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateInput(
            "PCA input has zero total variance".into(),
        ));
    }
    let k = match retain {
        Retain::Components(k) => k,
        Retain::VarianceFraction(v) => {
            let mut cumulative = 0.0;
            let mut k = d;
            for (count, &idx) in order.iter().enumerate() {
                cumulative += eigenvalues[idx];
                if cumulative / total >= v - 1e-12 {
                    k = count + 1;
                    break;
                }
            }
            k
        }
    };

    let mut components = Mat::zeros(k, d);
    let mut kept_eigenvalues = Vec::with_capacity(k);
    let mut ratio = Vec::with_capacity(k);
    for (row, &idx) in order.iter().take(k).enumerate() {
        kept_eigenvalues.push(eigenvalues[idx]);
        ratio.push((eigenvalues[idx] / total).clamp(0.0, 1.0));
        let mut best = 0;
        for c in 0..d {
            if vectors.get(c, idx).abs() > vectors.get(best, idx).abs() {
                best = c;
            }
        }
        let flip = if vectors.get(best, idx) < 0.0 {
            -1.0
        } else {
            1.0
        };
        for c in 0..d {
            components.set(row, c, flip * vectors.get(c, idx));
        }
    }

    Ok(PcaModel {
        mean_vector,
        components,
        eigenvalues: kept_eigenvalues,
        explained_variance_ratio: ratio,
    })
}

/// Projects rows onto the principal axes: `(x - mean) . components^T`.
pub fn project(model: &PcaModel, matrix: &Mat) -> Result<Mat> {
    let d = model.input_dim();
    if matrix.cols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: matrix.cols(),
        });
    }
    let k = model.output_dim();
    let mut out = Mat::zeros(matrix.rows(), k);
    for i in 0..matrix.rows() {
        let row = matrix.row(i);
        for j in 0..k {
            let comp = model.components.row(j);
            let mut acc = 0.0;
            for c in 0..d {
                acc += (row[c] - model.mean_vector[c]) * comp[c];
            }
            out.set(i, j, acc);
        }
    }
    Ok(out)
}

/// Maps projected rows back to the original space: `z . components + mean`.
pub fn reconstruct(model: &PcaModel, projected: &Mat) -> Result<Mat> {
    let k = model.output_dim();
    if projected.cols() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            actual: projected.cols(),
        });
    }
    let d = model.input_dim();
    let mut out = Mat::zeros(projected.rows(), d);
    for i in 0..projected.rows() {
        let z = projected.row(i);
        for c in 0..d {
            let mut acc = model.mean_vector[c];
            for (j, &zj) in z.iter().enumerate() {
                acc += zj * model.components.get(j, c);
            }
            out.set(i, c, acc);
        }
    }
    Ok(out)
}
