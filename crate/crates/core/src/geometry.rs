//! Uniform cell-centre grids on intervals and rectangles.
//!
//! Every integral in the crate is a midpoint rule over these cells: the
//! weight of a point is the measure of its cell, so constants and affine
//! functions are integrated exactly. Points are stored row-major (last axis
//! fastest) and the ordering never changes, which keeps every assembled
//! matrix reproducible.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A discretised bounded domain in one or two dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain<T> {
    dimension: usize,
    bounds: Vec<(T, T)>,
    cells: Vec<usize>,
    spacing: Vec<T>,
    /// Flat coordinates, `dimension` entries per point.
    coords: Vec<T>,
    weights: Vec<T>,
    h: T,
    volume: T,
}

/// Build a uniform cell-centre grid.
pub fn build_domain<T: Real>(dimension: usize, bounds: &[(T, T)], cells: &[usize]) -> Result<Domain<T>> {
    Domain::new(dimension, bounds, cells)
}

/// Midpoint-rule integral of a grid function.
pub fn integrate<T: Real>(domain: &Domain<T>, values: &[T]) -> Result<T> {
    domain.integrate(values)
}

impl<T: Real> Domain<T> {
    pub fn new(dimension: usize, bounds: &[(T, T)], cells: &[usize]) -> Result<Self> {
        if !(1..=2).contains(&dimension) {
            return Err(Error::UnsupportedDimension(dimension));
        }
        if bounds.len() != dimension {
            return Err(Error::ShapeMismatch { expected: dimension, found: bounds.len() });
        }
        if cells.len() != dimension {
            return Err(Error::ShapeMismatch { expected: dimension, found: cells.len() });
        }
        for (axis, &(lo, hi)) in bounds.iter().enumerate() {
            if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::DegenerateBounds { axis, lo: lo.to_f64_lossy(), hi: hi.to_f64_lossy() });
            }
        }
        for (axis, &n) in cells.iter().enumerate() {
            if n < 2 {
                return Err(Error::TooFewCells { axis, cells: n });
            }
        }

        let spacing: Vec<T> =
            bounds.iter().zip(cells).map(|(&(lo, hi), &n)| (hi - lo) / T::from_usize_lossy(n)).collect();
        let half = T::lit(0.5);
        let centre = |axis: usize, i: usize| -> T { bounds[axis].0 + (T::from_usize_lossy(i) + half) * spacing[axis] };

        let count: usize = cells.iter().product();
        let mut coords = Vec::with_capacity(count * dimension);
        match dimension {
            1 => {
                for i in 0..cells[0] {
                    coords.push(centre(0, i));
                }
            }
            _ => {
                for i in 0..cells[0] {
                    for j in 0..cells[1] {
                        coords.push(centre(0, i));
                        coords.push(centre(1, j));
                    }
                }
            }
        }

        let cell_measure = spacing.iter().fold(T::one(), |acc, &s| acc * s);
        let weights = vec![cell_measure; count];
        let volume = bounds.iter().fold(T::one(), |acc, &(lo, hi)| acc * (hi - lo));
        let h = match dimension {
            1 => spacing[0],
            _ => spacing[0].hypot(spacing[1]),
        };

        Ok(Domain { dimension, bounds: bounds.to_vec(), cells: cells.to_vec(), spacing, coords, weights, h, volume })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn bounds(&self) -> &[(T, T)] {
        &self.bounds
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    /// Cell width along each axis.
    pub fn spacing(&self) -> &[T] {
        &self.spacing
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[T] {
        &self.coords[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn points(&self) -> impl Iterator<Item = &[T]> {
        self.coords.chunks_exact(self.dimension)
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Maximum cell diameter: the spacing in 1D, the cell diagonal in 2D.
    pub fn h(&self) -> T {
        self.h
    }

    pub fn volume(&self) -> T {
        self.volume
    }

    /// Per-axis grid index of point `i`.
    pub fn grid_index(&self, i: usize) -> [usize; 2] {
        match self.dimension {
            1 => [i, 0],
            _ => [i / self.cells[1], i % self.cells[1]],
        }
    }

    pub fn flat_index(&self, idx: [usize; 2]) -> usize {
        match self.dimension {
            1 => idx[0],
            _ => idx[0] * self.cells[1] + idx[1],
        }
    }

    /// Euclidean distance from point `i` to the boundary of the box.
    pub fn distance_to_boundary(&self, i: usize) -> T {
        self.point(i).iter().zip(&self.bounds).fold(T::infinity(), |d, (&x, &(lo, hi))| d.min(x - lo).min(hi - x))
    }

    /// Half of the shortest side: no interior point is farther from the boundary.
    pub fn inradius(&self) -> T {
        self.bounds.iter().fold(T::infinity(), |d, &(lo, hi)| d.min((hi - lo) * T::lit(0.5)))
    }

    pub fn integrate(&self, values: &[T]) -> Result<T> {
        if values.len() != self.len() {
            return Err(Error::ShapeMismatch { expected: self.len(), found: values.len() });
        }
        Ok(self.weights.iter().zip(values).map(|(&w, &v)| w * v).sum())
    }

    /// Same bounds, different resolution.
    pub fn with_cells(&self, cells: &[usize]) -> Result<Self> {
        Domain::new(self.dimension, &self.bounds, cells)
    }

    /// Smallest per-axis cell counts (never fewer than the current ones) for
    /// which the maximum cell diameter does not exceed `target_h`.
    pub fn cells_for_diameter(&self, target_h: T) -> Vec<usize> {
        cells_for_diameter(&self.bounds, &self.cells, target_h)
    }
}

pub(crate) fn cells_for_diameter<T: Real>(bounds: &[(T, T)], start: &[usize], target_h: T) -> Vec<usize> {
    let lengths: Vec<T> = bounds.iter().map(|&(lo, hi)| hi - lo).collect();
    let diameter = |cells: &[usize]| -> T {
        lengths
            .iter()
            .zip(cells)
            .map(|(&l, &n)| {
                let s = l / T::from_usize_lossy(n);
                s * s
            })
            .sum::<T>()
            .sqrt()
    };
    let mut cells: Vec<usize> = start.iter().map(|&n| n.max(2)).collect();
    let current = diameter(&cells);
    if current > target_h {
        let scale = current / target_h;
        for n in cells.iter_mut() {
            let scaled = (T::from_usize_lossy(*n) * scale).ceil().to_usize().unwrap_or(usize::MAX);
            *n = scaled.max(*n);
        }
    }
    // Shrink back greedily: scaling overshoots in 2D.
    loop {
        let mut improved = false;
        for axis in 0..cells.len() {
            if cells[axis] > start[axis].max(2) {
                cells[axis] -= 1;
                if diameter(&cells) <= target_h {
                    improved = true;
                } else {
                    cells[axis] += 1;
                }
            }
        }
        if !improved {
            break;
        }
    }
    while diameter(&cells) > target_h {
        let axis = (0..cells.len())
            .max_by(|&a, &b| {
                let sa = lengths[a] / T::from_usize_lossy(cells[a]);
                let sb = lengths[b] / T::from_usize_lossy(cells[b]);
                sa.partial_cmp(&sb).unwrap()
            })
            .unwrap();
        cells[axis] += 1;
    }
    cells
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unit_interval_ten_cells() {
        let d = build_domain::<f64>(1, &[(0.0, 1.0)], &[10]).unwrap();
        assert_eq!(d.len(), 10);
        for (i, p) in d.points().enumerate() {
            assert_relative_eq!(p[0], (i as f64 + 0.5) / 10.0, epsilon = 1e-15);
        }
        assert!(d.weights().iter().all(|&w| (w - 0.1).abs() < 1e-15));
        assert_eq!(d.volume(), 1.0);
        assert_relative_eq!(d.h(), 0.1);
    }

    #[test]
    fn unit_square_eight_by_eight() {
        let d = build_domain::<f64>(2, &[(0.0, 1.0), (0.0, 1.0)], &[8, 8]).unwrap();
        assert_eq!(d.len(), 64);
        assert!(d.weights().iter().all(|&w| (w - 1.0 / 64.0).abs() < 1e-16));
        assert_relative_eq!(d.volume(), 1.0);
        assert_relative_eq!(d.h(), (2.0f64).sqrt() / 8.0);
        // row-major, last axis fastest
        assert_eq!(d.point(1), &[1.0 / 16.0, 3.0 / 16.0]);
        assert_eq!(d.grid_index(9), [1, 1]);
        assert_eq!(d.flat_index([1, 1]), 9);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(build_domain(1, &[(1.0, 1.0)], &[10]), Err(Error::DegenerateBounds { axis: 0, .. })));
        assert!(matches!(build_domain::<f64>(1, &[(0.0, 1.0)], &[1]), Err(Error::TooFewCells { axis: 0, cells: 1 })));
        assert!(matches!(build_domain::<f64>(3, &[(0.0, 1.0); 3], &[4; 3]), Err(Error::UnsupportedDimension(3))));
    }

    #[test]
    fn midpoint_values() {
        let d = build_domain::<f64>(1, &[(0.0, 1.0)], &[10]).unwrap();
        let ones = vec![1.0; 10];
        let x: Vec<f64> = d.points().map(|p| p[0]).collect();
        let x2: Vec<f64> = x.iter().map(|v| v * v).collect();
        assert_relative_eq!(integrate(&d, &ones).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(integrate(&d, &x).unwrap(), 0.5, epsilon = 1e-15);
        // sum_{i=1}^{10} ((i - 0.5)/10)^2 * 0.1 = 332.5 / 1000
        assert_relative_eq!(integrate(&d, &x2).unwrap(), 0.3325, epsilon = 1e-14);
        assert!(matches!(integrate(&d, &ones[..3]), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn quadrature_error_is_second_order() {
        let err = |n: usize| {
            let d = build_domain::<f64>(1, &[(0.0, 1.0)], &[n]).unwrap();
            let f: Vec<f64> = d.points().map(|p| p[0] * p[0]).collect();
            (integrate(&d, &f).unwrap() - 1.0 / 3.0).abs()
        };
        for n in [10, 20, 40, 80] {
            let ratio = err(n) / err(2 * n);
            assert!((3.5..=4.5).contains(&ratio), "n = {n}, ratio = {ratio}");
        }
    }

    #[test]
    fn boundary_distance_and_refinement() {
        let d = build_domain::<f64>(2, &[(0.0, 2.0), (0.0, 1.0)], &[4, 4]).unwrap();
        assert_relative_eq!(d.distance_to_boundary(0), 0.125);
        assert_relative_eq!(d.inradius(), 0.5);
        let cells = d.cells_for_diameter(0.1);
        let refined = d.with_cells(&cells).unwrap();
        assert!(refined.h() <= 0.1);
        // one fewer cell on either axis breaks the bound
        for axis in 0..2 {
            let mut fewer = cells.clone();
            fewer[axis] -= 1;
            assert!(d.with_cells(&fewer).unwrap().h() > 0.1, "{cells:?}");
        }
    }

    #[test]
    fn single_precision_grid() {
        let d = build_domain::<f32>(1, &[(0.0, 2.0)], &[8]).unwrap();
        assert!((d.integrate(&[1.0; 8]).unwrap() - 2.0).abs() < 1e-6);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn weights_sum_to_volume(lo in -3.0..3.0f64, len in 0.1..5.0f64, n in 2usize..60, m in 2usize..30) {
                let d = build_domain(2, &[(lo, lo + len), (0.0, 1.5)], &[n, m]).unwrap();
                let total: f64 = d.weights().iter().sum();
                prop_assert!((total - d.volume()).abs() <= 1e-12 * d.volume());
                prop_assert!(d.points().all(|p| p[0] > lo && p[0] < lo + len && p[1] > 0.0 && p[1] < 1.5));
            }

            #[test]
            fn integrate_is_linear(vals in prop::collection::vec(-10.0..10.0f64, 24), other in prop::collection::vec(-10.0..10.0f64, 24), a in -3.0..3.0f64, b in -3.0..3.0f64) {
                let d = build_domain::<f64>(1, &[(0.0, 2.0)], &[24]).unwrap();
                let combo: Vec<f64> = vals.iter().zip(&other).map(|(f, g)| a * f + b * g).collect();
                let lhs = d.integrate(&combo).unwrap();
                let rhs = a * d.integrate(&vals).unwrap() + b * d.integrate(&other).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
            }
        }
    }
}
