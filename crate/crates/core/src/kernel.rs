//! Compactly supported dispersal kernels and their discrete convolution matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::scalar::Real;

/// Kernel shapes. Each is normalised analytically to unit mass on the whole
/// space and scaled by the half-width `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    /// `3/(4γ) (1 - (z/γ)^2)` on `|z| < γ`.
    Epanechnikov1d,
    /// `(1 - |z|/γ)/γ` on `|z| < γ`.
    Tent1d,
    /// Product of two Epanechnikov profiles on the square `|z_i| < γ`.
    ProductEpanechnikov2d,
    /// Radial biweight `3/(πγ²) (1 - |z/γ|²)²` on the disc `|z| < γ`.
    RadialBump2d,
    /// Tent centred at `γ/2`. Not even; exists to exercise the symmetry checks.
    SkewTent1d,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 5] = [
        KernelFamily::Epanechnikov1d,
        KernelFamily::Tent1d,
        KernelFamily::ProductEpanechnikov2d,
        KernelFamily::RadialBump2d,
        KernelFamily::SkewTent1d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Epanechnikov1d => "epanechnikov1d",
            KernelFamily::Tent1d => "tent1d",
            KernelFamily::ProductEpanechnikov2d => "product_epanechnikov2d",
            KernelFamily::RadialBump2d => "radial_bump2d",
            KernelFamily::SkewTent1d => "skew_tent1d",
        }
    }

    pub fn dimension(self) -> usize {
        match self {
            KernelFamily::Epanechnikov1d | KernelFamily::Tent1d | KernelFamily::SkewTent1d => 1,
            KernelFamily::ProductEpanechnikov2d | KernelFamily::RadialBump2d => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel<T> {
    family: KernelFamily,
    gamma: T,
}

impl<T: Real> Kernel<T> {
    pub fn new(family: KernelFamily, gamma: T) -> Result<Self> {
        if !(gamma > T::zero()) || !gamma.is_finite() {
            return Err(Error::InvalidParameter {
                name: "gamma",
                reason: format!("must be positive and finite, got {gamma}"),
            });
        }
        Ok(Kernel { family, gamma })
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn dimension(&self) -> usize {
        self.family.dimension()
    }

    /// Radius of the smallest origin-centred ball outside which `J` vanishes.
    pub fn support_radius(&self) -> T {
        match self.family {
            KernelFamily::ProductEpanechnikov2d => self.gamma * T::SQRT_2(),
            KernelFamily::SkewTent1d => self.gamma * T::lit(1.5),
            _ => self.gamma,
        }
    }

    /// Analytic constant making the kernel integrate to one.
    pub fn normalization(&self) -> T {
        let g = self.gamma;
        match self.family {
            KernelFamily::Epanechnikov1d => T::lit(0.75) / g,
            KernelFamily::Tent1d | KernelFamily::SkewTent1d => T::one() / g,
            KernelFamily::ProductEpanechnikov2d => T::lit(9.0 / 16.0) / (g * g),
            KernelFamily::RadialBump2d => T::lit(3.0) / (T::PI() * g * g),
        }
    }

    /// `J(-z) = J(z)` coordinate by coordinate.
    pub fn componentwise_symmetric(&self) -> bool {
        !matches!(self.family, KernelFamily::SkewTent1d)
    }

    pub fn radial(&self) -> bool {
        match self.family {
            KernelFamily::RadialBump2d => true,
            // in one dimension evenness is radial symmetry
            KernelFamily::Epanechnikov1d | KernelFamily::Tent1d => true,
            KernelFamily::ProductEpanechnikov2d | KernelFamily::SkewTent1d => false,
        }
    }

    pub fn eval(&self, z: &[T]) -> T {
        let c = self.normalization();
        let u: [T; 2] = [z[0] / self.gamma, z.get(1).map_or(T::zero(), |&v| v / self.gamma)];
        let one = T::one();
        match self.family {
            KernelFamily::Epanechnikov1d => {
                if u[0].abs() < one {
                    c * (one - u[0] * u[0])
                } else {
                    T::zero()
                }
            }
            KernelFamily::Tent1d => (c * (one - u[0].abs())).max(T::zero()),
            KernelFamily::SkewTent1d => (c * (one - (u[0] - T::lit(0.5)).abs())).max(T::zero()),
            KernelFamily::ProductEpanechnikov2d => {
                if u[0].abs() < one && u[1].abs() < one {
                    c * (one - u[0] * u[0]) * (one - u[1] * u[1])
                } else {
                    T::zero()
                }
            }
            KernelFamily::RadialBump2d => {
                let r2 = u[0] * u[0] + u[1] * u[1];
                if r2 < one {
                    c * (one - r2) * (one - r2)
                } else {
                    T::zero()
                }
            }
        }
    }
}

pub fn eval_kernel<T: Real>(kernel: &Kernel<T>, z: &[T]) -> T {
    kernel.eval(z)
}

/// Discrete convolution `K_ij = σ^{-N} J((x_i - x_j)/σ) w_j` in CSR form,
/// with its row sums `d_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix<T> {
    n: usize,
    sigma: T,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
    degree: Vec<T>,
    diag: Vec<T>,
}

pub fn build_kernel_matrix<T: Real>(domain: &Domain<T>, kernel: &Kernel<T>, sigma: T) -> Result<KernelMatrix<T>> {
    KernelMatrix::assemble(domain, kernel, sigma)
}

/// Checks `h <= support * sigma`; on failure reports the cell counts that fix it.
pub fn check_resolvable<T: Real>(domain: &Domain<T>, kernel: &Kernel<T>, sigma: T) -> Result<()> {
    let reach = kernel.support_radius() * sigma;
    if domain.h() > reach {
        return Err(Error::GridTooCoarse {
            h: domain.h().to_f64_lossy(),
            reach: reach.to_f64_lossy(),
            min_cells: domain.cells_for_diameter(reach),
        });
    }
    Ok(())
}

impl<T: Real> KernelMatrix<T> {
    pub fn assemble(domain: &Domain<T>, kernel: &Kernel<T>, sigma: T) -> Result<Self> {
        if kernel.dimension() != domain.dimension() {
            return Err(Error::DimensionMismatch { kernel: kernel.dimension(), domain: domain.dimension() });
        }
        if !(sigma > T::zero()) || !sigma.is_finite() {
            return Err(Error::InvalidParameter {
                name: "sigma",
                reason: format!("must be positive and finite, got {sigma}"),
            });
        }
        check_resolvable(domain, kernel, sigma)?;

        let n = domain.len();
        let dim = domain.dimension();
        let reach = kernel.support_radius() * sigma;
        let scale = T::one() / sigma.powi(dim as i32);
        let window: Vec<usize> = domain
            .spacing()
            .iter()
            .map(|&s| (reach / s).floor().to_usize().unwrap_or(usize::MAX).saturating_add(1))
            .collect();
        let cells = domain.cells();
        let weights = domain.weights();

        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut degree = Vec::with_capacity(n);
        let mut diag = Vec::with_capacity(n);
        row_ptr.push(0);
        let mut z = [T::zero(); 2];
        for i in 0..n {
            let xi = domain.point(i);
            let gi = domain.grid_index(i);
            let range = |axis: usize| {
                let lo = gi[axis].saturating_sub(window[axis]);
                let hi = (gi[axis] + window[axis]).min(cells[axis] - 1);
                lo..=hi
            };
            let second = if dim == 2 { range(1) } else { 0..=0 };
            let mut row_sum = T::zero();
            let mut self_entry = T::zero();
            for a in range(0) {
                for b in second.clone() {
                    let j = domain.flat_index([a, b]);
                    let xj = domain.point(j);
                    for k in 0..dim {
                        z[k] = (xi[k] - xj[k]) / sigma;
                    }
                    let jv = kernel.eval(&z[..dim]);
                    if jv > T::zero() {
                        let v = scale * jv * weights[j];
                        cols.push(j);
                        vals.push(v);
                        row_sum += v;
                        if j == i {
                            self_entry = v;
                        }
                    }
                }
            }
            degree.push(row_sum);
            diag.push(self_entry);
            row_ptr.push(cols.len());
        }
        Ok(KernelMatrix { n, sigma, row_ptr, cols, vals, degree, diag })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    /// Row sums `d_i = Σ_j K_ij`.
    pub fn degree(&self) -> &[T] {
        &self.degree
    }

    pub fn diagonal(&self) -> &[T] {
        &self.diag
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[span.clone()].binary_search(&j) {
            Ok(pos) => self.vals[span.start + pos],
            Err(_) => T::zero(),
        }
    }

    /// `out = K v`
    pub fn apply_into(&self, v: &[T], out: &mut [T]) {
        for (i, o) in out.iter_mut().enumerate() {
            let span = self.row_ptr[i]..self.row_ptr[i + 1];
            *o = self.cols[span.clone()].iter().zip(&self.vals[span]).map(|(&j, &k)| k * v[j]).sum();
        }
    }

    pub fn apply(&self, v: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.n];
        self.apply_into(v, &mut out);
        out
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut dense = vec![vec![T::zero(); self.n]; self.n];
        for (i, row) in dense.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        dense
    }
}
