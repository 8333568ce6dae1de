//! Strictly positive weights `μ(x, θ)`, `ν(x, θ)` for the forward transform and
//! the back-projection.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{direction, dot, perp, ImageGrid, Point};

/// Which projection of `x` enters an exponential weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExponentMode {
    /// `exp(λ · x·θ⊥)`: varies along each line, attenuation-like.
    Along,
    /// `exp(λ · x·θ)`: constant along each line.
    Across,
}

/// Samples of a weight on an image lattice × uniform angles over `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    grid: ImageGrid,
    n_phi: usize,
    /// `values[(a * n + iy) * n + ix]`
    values: Vec<f64>,
}

impl WeightTable {
    pub fn new(grid: ImageGrid, n_phi: usize, values: Vec<f64>) -> Result<Self> {
        let n = grid.n();
        if n_phi == 0 || values.len() != n_phi * n * n {
            return Err(Error::InvalidWeight(format!(
                "table has {} values, expected {n_phi} x {n} x {n}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidWeight(format!(
                "tabulated weight must be strictly positive, found {v}"
            )));
        }
        Ok(Self { grid, n_phi, values })
    }

    pub fn from_fn(grid: ImageGrid, n_phi: usize, f: impl Fn(Point, f64) -> f64) -> Result<Self> {
        let n = grid.n();
        let mut values = Vec::with_capacity(n_phi * n * n);
        for a in 0..n_phi {
            let phi = a as f64 * TAU / n_phi as f64;
            for iy in 0..n {
                for ix in 0..n {
                    values.push(f(grid.center(ix, iy), phi));
                }
            }
        }
        Self::new(grid, n_phi, values)
    }

    fn at(&self, a: usize, ix: usize, iy: usize) -> f64 {
        let n = self.grid.n();
        self.values[(a * n + iy) * n + ix]
    }

    fn bilinear(&self, a: usize, p: Point) -> f64 {
        let n = self.grid.n();
        let clamp = |u: f64| u.clamp(0.0, (n - 1) as f64);
        let u = clamp(self.grid.fractional_index(p[0]));
        let v = clamp(self.grid.fractional_index(p[1]));
        let i0 = (u.floor() as usize).min(n - 2);
        let j0 = (v.floor() as usize).min(n - 2);
        let fu = u - i0 as f64;
        let fv = v - j0 as f64;
        (1.0 - fv) * ((1.0 - fu) * self.at(a, i0, j0) + fu * self.at(a, i0 + 1, j0))
            + fv * ((1.0 - fu) * self.at(a, i0, j0 + 1) + fu * self.at(a, i0 + 1, j0 + 1))
    }

    fn eval(&self, p: Point, phi: f64) -> f64 {
        let t = phi.rem_euclid(TAU) / TAU * self.n_phi as f64;
        let a0 = (t.floor() as usize) % self.n_phi;
        let a1 = (a0 + 1) % self.n_phi;
        let f = t - t.floor();
        (1.0 - f) * self.bilinear(a0, p) + f * self.bilinear(a1, p)
    }
}

type WeightFn = dyn Fn(Point, f64) -> f64 + Send + Sync;

/// A strictly positive weight evaluated pointwise at `(x, φ)`.
#[derive(Clone)]
pub enum WeightFunction {
    Constant(f64),
    Exponential { lambda: f64, mode: ExponentMode },
    Tabulated(Arc<WeightTable>),
    Custom(Arc<WeightFn>),
}

impl fmt::Debug for WeightFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightFunction::Constant(c) => write!(f, "Constant({c})"),
            WeightFunction::Exponential { lambda, mode } => {
                write!(f, "Exponential {{ lambda: {lambda}, mode: {mode:?} }}")
            }
            WeightFunction::Tabulated(t) => write!(f, "Tabulated({} angles)", t.n_phi),
            WeightFunction::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl Default for WeightFunction {
    fn default() -> Self {
        WeightFunction::Constant(1.0)
    }
}

impl WeightFunction {
    pub fn constant(c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidWeight(format!(
                "constant weight must be strictly positive, got {c}"
            )));
        }
        Ok(WeightFunction::Constant(c))
    }

    pub fn exponential(lambda: f64, mode: ExponentMode) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(Error::InvalidWeight("exponential rate must be finite".into()));
        }
        Ok(WeightFunction::Exponential { lambda, mode })
    }

    pub fn tabulated(table: WeightTable) -> Self {
        WeightFunction::Tabulated(Arc::new(table))
    }

    /// Caller guarantees smoothness and strict positivity.
    pub fn custom(f: impl Fn(Point, f64) -> f64 + Send + Sync + 'static) -> Self {
        WeightFunction::Custom(Arc::new(f))
    }

    #[inline]
    pub fn eval(&self, x: Point, phi: f64) -> f64 {
        match self {
            WeightFunction::Constant(c) => *c,
            WeightFunction::Exponential { lambda, mode } => {
                let theta = direction(phi);
                let proj = match mode {
                    ExponentMode::Along => dot(x, perp(theta)),
                    ExponentMode::Across => dot(x, theta),
                };
                (lambda * proj).exp()
            }
            WeightFunction::Tabulated(t) => t.eval(x, phi),
            WeightFunction::Custom(f) => f(x, phi),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            WeightFunction::Constant(c) => Some(*c),
            WeightFunction::Exponential { lambda, .. } if *lambda == 0.0 => Some(1.0),
            _ => None,
        }
    }

    /// Spot-check strict positivity on a coarse lattice of the image extent.
    pub fn check_positive(&self, grid: &ImageGrid) -> Result<()> {
        let n = 9;
        let l = grid.extent();
        for a in 0..16 {
            let phi = a as f64 * TAU / 16.0;
            for i in 0..n {
                for j in 0..n {
                    let x = [
                        -l + 2.0 * l * i as f64 / (n - 1) as f64,
                        -l + 2.0 * l * j as f64 / (n - 1) as f64,
                    ];
                    let v = self.eval(x, phi);
                    if !(v.is_finite() && v > 0.0) {
                        return Err(Error::InvalidWeight(format!(
                            "weight is not strictly positive at x = {x:?}, phi = {phi}: {v}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_modes() {
        let along = WeightFunction::exponential(0.5, ExponentMode::Along).unwrap();
        let across = WeightFunction::exponential(0.5, ExponentMode::Across).unwrap();
        // φ = 0: θ = (1, 0), θ⊥ = (0, 1)
        let x = [0.3, -0.4];
        assert!((along.eval(x, 0.0) - (0.5f64 * -0.4).exp()).abs() < 1e-15);
        assert!((across.eval(x, 0.0) - (0.5f64 * 0.3).exp()).abs() < 1e-15);
    }

    #[test]
    fn tabulated_reproduces_affine_in_x_and_phi_nodes() {
        let grid = ImageGrid::new(8, 1.0).unwrap();
        let t = WeightTable::from_fn(grid, 8, |p, phi| 2.0 + 0.1 * p[0] + 0.2 * p[1] + 0.01 * phi)
            .unwrap();
        let w = WeightFunction::tabulated(t);
        let p = [0.1, -0.3];
        let phi = TAU / 8.0 * 3.0;
        let exact = 2.0 + 0.1 * p[0] + 0.2 * p[1] + 0.01 * phi;
        assert!((w.eval(p, phi) - exact).abs() < 1e-12);
        // halfway between angle nodes: linear in φ
        let phi = TAU / 8.0 * 3.5;
        let exact = 2.0 + 0.1 * p[0] + 0.2 * p[1] + 0.01 * phi;
        assert!((w.eval(p, phi) - exact).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(WeightFunction::constant(0.0).is_err());
        let grid = ImageGrid::new(8, 1.0).unwrap();
        assert!(WeightTable::from_fn(grid, 2, |_, _| -1.0).is_err());
        let bad = WeightFunction::custom(|x, _| x[0]);
        assert!(bad.check_positive(&grid).is_err());
        assert!(WeightFunction::Constant(1.0).check_positive(&grid).is_ok());
    }
}
