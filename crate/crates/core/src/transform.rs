//! Forward weighted X-ray transform `R_μ` and weighted back-projection `R*_ν`.

use ndarray::{Array2, Axis};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{AngularSupport, ImageGrid, PhiRange, Point, SinogramGrid};
use crate::phantom::{analytic_line_integral, Phantom};
use crate::raster::Raster;
use crate::weight::WeightFunction;

/// Samples `g(φ_i, s_j)` stored `values[[i, j]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    pub grid: SinogramGrid,
    pub values: Array2<f64>,
}

impl Sinogram {
    pub fn zeros(grid: SinogramGrid) -> Self {
        Self {
            grid,
            values: Array2::zeros((grid.n_phi(), grid.n_s())),
        }
    }

    pub fn from_fn(grid: SinogramGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values =
            Array2::from_shape_fn((grid.n_phi(), grid.n_s()), |(i, j)| f(grid.phi(i), grid.s(j)));
        Self { grid, values }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Row `i` linearly interpolated at offset `s`; zero outside `[−s_max, s_max]`.
    #[inline]
    pub fn interp_row(&self, i: usize, s: f64) -> f64 {
        let u = (s + self.grid.s_max()) / self.grid.ds();
        let n_s = self.grid.n_s();
        if u < 0.0 || u > (n_s - 1) as f64 {
            return 0.0;
        }
        let j0 = (u.floor() as usize).min(n_s - 2);
        let f = u - j0 as f64;
        let row = self.values.row(i);
        (1.0 - f) * row[j0] + f * row[j0 + 1]
    }

    /// `⟨g, h⟩ = Σ_i w_i Σ_j g_ij h_ij Δs` with the grid's φ quadrature weights.
    pub fn inner(&self, other: &Sinogram) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("sinogram grids differ".into()));
        }
        let w = self.grid.phi_weights();
        let ds = self.grid.ds();
        let total = self
            .values
            .outer_iter()
            .zip(other.values.outer_iter())
            .zip(&w)
            .map(|((a, b), wi)| wi * a.iter().zip(b.iter()).map(|(x, y)| x * y).sum::<f64>())
            .sum::<f64>();
        Ok(total * ds)
    }
}

/// Input of [`forward`].
#[derive(Debug, Clone, Copy)]
pub enum Source<'a> {
    /// Closed-form chords (adaptive quadrature for non-constant `μ`).
    Phantom(&'a Phantom),
    /// Trapezoid rule along each line with bilinear interpolation.
    Raster(&'a Raster),
}

/// Parameter interval of the line `sθ + tθ⊥` inside the square `[−b, b]²`.
fn square_interval(theta: Point, s: f64, b: f64) -> Option<(f64, f64)> {
    let tp = [-theta[1], theta[0]];
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for k in 0..2 {
        let base = s * theta[k];
        if tp[k].abs() < 1e-15 {
            if base.abs() > b {
                return None;
            }
        } else {
            let a = (-b - base) / tp[k];
            let c = (b - base) / tp[k];
            lo = lo.max(a.min(c));
            hi = hi.min(a.max(c));
        }
    }
    (hi > lo).then_some((lo, hi))
}

fn raster_line_integral(f: &Raster, mu: &WeightFunction, phi: f64, s: f64) -> f64 {
    let grid = f.grid;
    let h = grid.spacing();
    let theta = crate::geometry::direction(phi);
    let tp = [-theta[1], theta[0]];
    // bilinear samples vanish one pixel beyond the outermost centers
    let Some((t0, t1)) = square_interval(theta, s, grid.extent() + 0.5 * h) else {
        return 0.0;
    };
    let m = ((t1 - t0) / (0.5 * h)).ceil().max(1.0) as usize;
    let dt = (t1 - t0) / m as f64;
    let constant = mu.as_constant();
    let mut acc = 0.0;
    for q in 0..=m {
        let t = t0 + q as f64 * dt;
        let x = [s * theta[0] + t * tp[0], s * theta[1] + t * tp[1]];
        let v = f.sample(x);
        if v == 0.0 {
            continue;
        }
        let w = if q == 0 || q == m { 0.5 } else { 1.0 };
        let mu_x = constant.unwrap_or_else(|| mu.eval(x, phi));
        acc += w * v * mu_x;
    }
    acc * dt
}

/// `R_μ f(φ, s)` on every sample of `sgrid`.
pub fn forward(source: Source<'_>, mu: &WeightFunction, sgrid: SinogramGrid) -> Result<Sinogram> {
    let support = match source {
        Source::Phantom(p) => p.bounding_radius(),
        Source::Raster(r) => std::f64::consts::SQRT_2 * r.grid.extent(),
    };
    if sgrid.s_max() < support * (1.0 - 1e-12) {
        return Err(Error::GridMismatch(format!(
            "s_max = {} does not cover the source support radius {support}",
            sgrid.s_max()
        )));
    }
    let mut out = Sinogram::zeros(sgrid);
    out.values
        .axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(i, mut row)| {
            let phi = sgrid.phi(i);
            for (j, v) in row.iter_mut().enumerate() {
                let s = sgrid.s(j);
                *v = match source {
                    Source::Phantom(p) => analytic_line_integral(p, mu, phi, s),
                    Source::Raster(r) => raster_line_integral(r, mu, phi, s),
                };
            }
        });
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BackprojectOptions {
    /// For `[0, π)` sinograms, double the φ weights to stand in for the
    /// antipodal half. Only valid when the integrand is even in θ.
    pub antipodal_doubling: bool,
}

/// `x ↦ Σ_i w_i κ(φ_i) ν(x, φ_i) g(φ_i, x·θ_i)` (trapezoid rule in φ, linear
/// interpolation in s).
pub fn backproject(
    g: &Sinogram,
    nu: &WeightFunction,
    support: &AngularSupport,
    igrid: ImageGrid,
) -> Result<Raster> {
    backproject_with(g, nu, support, igrid, BackprojectOptions::default())
}

pub fn backproject_with(
    g: &Sinogram,
    nu: &WeightFunction,
    support: &AngularSupport,
    igrid: ImageGrid,
    opts: BackprojectOptions,
) -> Result<Raster> {
    if !g.is_finite() {
        return Err(Error::Precondition("sinogram contains non-finite values".into()));
    }
    let sgrid = g.grid;
    if igrid.max_center_radius() > sgrid.s_max() {
        return Err(Error::GridMismatch(format!(
            "pixel centers reach |x.theta| = {} beyond s_max = {}",
            igrid.max_center_radius(),
            sgrid.s_max()
        )));
    }
    if let Some(w) = support.window() {
        if !sgrid.covers(w) {
            return Err(Error::GridMismatch(
                "sinogram angles do not cover the angular window".into(),
            ));
        }
    }
    let doubling = if opts.antipodal_doubling && sgrid.range() == PhiRange::Half {
        2.0
    } else {
        1.0
    };
    // (row, cos φ, sin φ, φ, w κ)
    let angles: Vec<(usize, f64, f64, f64, f64)> = sgrid
        .phi_weights()
        .into_iter()
        .enumerate()
        .filter_map(|(i, w)| {
            let phi = sgrid.phi(i);
            let weight = doubling * w * support.kappa(phi);
            (weight != 0.0).then(|| {
                let (s, c) = phi.sin_cos();
                (i, c, s, phi, weight)
            })
        })
        .collect();
    let constant = nu.as_constant();
    let n = igrid.n();
    let mut out = Raster::zeros(igrid);
    out.values
        .axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(iy, mut row)| {
            let y = igrid.coord(iy);
            for ix in 0..n {
                let x = igrid.coord(ix);
                let mut acc = 0.0;
                for &(i, c, s, phi, weight) in &angles {
                    let value = g.interp_row(i, x * c + y * s);
                    if value == 0.0 {
                        continue;
                    }
                    let nu_x = constant.unwrap_or_else(|| nu.eval([x, y], phi));
                    acc += weight * nu_x * value;
                }
                row[ix] = acc;
            }
        });
    Ok(out)
}
