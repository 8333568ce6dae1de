use ndarray::Array2;

use crate::geometry::{ImageGrid, Point};

/// Real-valued image on an [`ImageGrid`], stored `values[[iy, ix]]` with
/// `iy = 0` at `y = −L + h/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub grid: ImageGrid,
    pub values: Array2<f64>,
}

impl Raster {
    pub fn zeros(grid: ImageGrid) -> Self {
        Self {
            grid,
            values: Array2::zeros((grid.n(), grid.n())),
        }
    }

    pub fn from_fn(grid: ImageGrid, f: impl Fn(Point) -> f64) -> Self {
        let n = grid.n();
        let values = Array2::from_shape_fn((n, n), |(iy, ix)| f(grid.center(ix, iy)));
        Self { grid, values }
    }

    /// Bilinear interpolation between pixel centers; zero outside the lattice.
    #[inline]
    pub fn sample(&self, p: Point) -> f64 {
        let n = self.grid.n() as isize;
        let u = self.grid.fractional_index(p[0]);
        let v = self.grid.fractional_index(p[1]);
        if u <= -1.0 || v <= -1.0 || u >= n as f64 || v >= n as f64 {
            return 0.0;
        }
        let i0 = u.floor() as isize;
        let j0 = v.floor() as isize;
        let fu = u - i0 as f64;
        let fv = v - j0 as f64;
        let at = |i: isize, j: isize| -> f64 {
            if i < 0 || j < 0 || i >= n || j >= n {
                0.0
            } else {
                self.values[[j as usize, i as usize]]
            }
        };
        (1.0 - fv) * ((1.0 - fu) * at(i0, j0) + fu * at(i0 + 1, j0))
            + fv * ((1.0 - fu) * at(i0, j0 + 1) + fu * at(i0 + 1, j0 + 1))
    }

    /// `Σ f · h²`.
    pub fn integral(&self) -> f64 {
        let h = self.grid.spacing();
        self.values.sum() * h * h
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bilinear_reproduces_affine_functions_inside() {
        let grid = ImageGrid::new(16, 1.0).unwrap();
        let r = Raster::from_fn(grid, |p| 2.0 * p[0] - 0.5 * p[1] + 0.25);
        for p in [[0.1, 0.2], [-0.4, 0.77], [0.0, 0.0]] {
            let exact = 2.0 * p[0] - 0.5 * p[1] + 0.25;
            assert!((r.sample(p) - exact).abs() < 1e-12);
        }
        // at a pixel center interpolation is exact
        let c = grid.center(3, 5);
        assert_eq!(r.sample(c), r.values[[5, 3]]);
    }

    #[test]
    fn zero_outside() {
        let grid = ImageGrid::new(8, 1.0).unwrap();
        let r = Raster::from_fn(grid, |_| 1.0);
        assert_eq!(r.sample([1.5, 0.0]), 0.0);
        assert_eq!(r.sample([0.0, -3.0]), 0.0);
        // half a pixel beyond the last center the value tapers linearly
        assert!((r.sample([1.0, 0.0]) - 0.5).abs() < 1e-12);
    }
}
