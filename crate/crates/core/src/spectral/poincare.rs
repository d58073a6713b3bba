//! Poincaré constant of the discrete nonlocal Dirichlet form.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::kernel::{Kernel, KernelMatrix};
use crate::scalar::Real;

/// Largest grid for the dense Poincaré eigensolve.
pub const POINCARE_CAP: usize = 500;

/// Evaluates both sides of `⟨(diag d - K) f, f⟩_w = ½ Σ_ij w_i K_ij (f_j - f_i)²`.
#[derive(Debug, Clone)]
pub struct FormChecker {
    weights: Vec<f64>,
    degree: Vec<f64>,
    kernel: DMatrix<f64>,
}

impl FormChecker {
    /// `Σ w_i f_i ((diag d - K) f)_i`
    pub fn operator_form(&self, f: &[f64]) -> f64 {
        let fv = DVector::from_column_slice(f);
        let kf = &self.kernel * &fv;
        (0..f.len()).map(|i| self.weights[i] * f[i] * (self.degree[i] * f[i] - kf[i])).sum()
    }

    /// `½ Σ_ij w_i K_ij (f_j - f_i)²`
    pub fn double_sum(&self, f: &[f64]) -> f64 {
        let n = f.len();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let diff = f[j] - f[i];
                acc += self.weights[i] * self.kernel[(i, j)] * diff * diff;
            }
        }
        0.5 * acc
    }

    /// `|operator_form - double_sum|`
    pub fn identity_residual(&self, f: &[f64]) -> f64 {
        (self.operator_form(f) - self.double_sum(f)).abs()
    }

    /// `Σ w_i f_i²`
    pub fn norm_sq(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v * v).sum()
    }

    /// Remove the weighted mean so that `Σ w_i f_i = 0`.
    pub fn project_mean_zero(&self, f: &[f64]) -> Vec<f64> {
        let total: f64 = self.weights.iter().sum();
        let mean = self.weights.iter().zip(f).map(|(w, v)| w * v).sum::<f64>() / total;
        f.iter().map(|v| v - mean).collect()
    }
}

/// Largest `C` with `½ Σ w_i K_ij (f_j - f_i)² >= C Σ w_i f_i²` for every
/// `f` of weighted mean zero, from a dense symmetric eigensolve.
pub fn poincare_constant<T: Real>(domain: &Domain<T>, kernel: &Kernel<T>, sigma: T) -> Result<(f64, FormChecker)> {
    if !kernel.componentwise_symmetric() {
        return Err(Error::KernelNotSymmetric);
    }
    let n = domain.len();
    if n > POINCARE_CAP {
        return Err(Error::TooLarge { n, cap: POINCARE_CAP });
    }
    let km = KernelMatrix::assemble(domain, kernel, sigma)?;
    let weights: Vec<f64> = domain.weights().iter().map(|w| w.to_f64_lossy()).collect();
    let degree: Vec<f64> = km.degree().iter().map(|d| d.to_f64_lossy()).collect();
    let dense = km.to_dense();
    let k = DMatrix::from_fn(n, n, |i, j| dense[i][j].to_f64_lossy());

    // S = W^{1/2} (diag d - K) W^{-1/2} is symmetric because w_i K_ij = w_j K_ji;
    // its kernel is spanned by u = W^{1/2} 1, which the rank-one lift removes.
    let root: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let mut s = DMatrix::from_fn(n, n, |i, j| {
        let diag = if i == j { degree[i] } else { 0.0 };
        root[i] * (diag - k[(i, j)]) / root[j]
    });
    s = (&s + s.transpose()) * 0.5;
    let u = DVector::from_vec(root.clone()).normalize();
    let beta = 2.0 * degree.iter().cloned().fold(0.0, f64::max) + 1.0;
    s += &u * u.transpose() * beta;
    let c = SymmetricEigen::new(s).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok((c, FormChecker { weights, degree, kernel: k }))
}
