//! Image and sinogram lattices, scan directions and the angular cutoff family.
//!
//! Directions are parametrized as `θ(φ) = (cos φ, sin φ)` with
//! `θ⊥(φ) = (−sin φ, cos φ)` everywhere in the crate.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fit::least_squares_slope;

pub type Point = [f64; 2];

#[inline]
pub fn direction(phi: f64) -> Point {
    let (s, c) = phi.sin_cos();
    [c, s]
}

#[inline]
pub fn perp(v: Point) -> Point {
    [-v[1], v[0]]
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

/// Square pixel lattice on `[−L, L]²`, origin-centered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageGrid {
    n: usize,
    extent: f64,
}

impl ImageGrid {
    pub fn new(n: usize, extent: f64) -> Result<Self> {
        if n < 8 {
            return Err(Error::InvalidGrid(format!(
                "image grid needs at least 8 pixels per axis, got {n}"
            )));
        }
        if !(extent.is_finite() && extent > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "image extent must be positive, got {extent}"
            )));
        }
        Ok(Self { n, extent })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Half-width `L` of the square.
    pub fn extent(&self) -> f64 {
        self.extent
    }

    /// Pixel spacing `h = 2L/n`.
    pub fn spacing(&self) -> f64 {
        2.0 * self.extent / self.n as f64
    }

    /// Coordinate of the center of pixel index `i` along either axis.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        -self.extent + (i as f64 + 0.5) * self.spacing()
    }

    /// Center of pixel `(ix, iy)`.
    #[inline]
    pub fn center(&self, ix: usize, iy: usize) -> Point {
        [self.coord(ix), self.coord(iy)]
    }

    /// Fractional pixel index of coordinate `x`: pixel centers sit at integers.
    #[inline]
    pub fn fractional_index(&self, x: f64) -> f64 {
        (x + self.extent) / self.spacing() - 0.5
    }

    /// Largest `|x·θ|` over all pixel centers and directions.
    pub fn max_center_radius(&self) -> f64 {
        let c = self.extent - 0.5 * self.spacing();
        c * std::f64::consts::SQRT_2
    }
}

/// Angular coverage of a sinogram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhiRange {
    /// `[0, 2π)`, periodic.
    Full,
    /// `[0, π)`, periodic modulo the antipodal map.
    Half,
    /// Closed interval `[start, end] ⊂ [0, π]`, endpoints sampled.
    Interval { start: f64, end: f64 },
}

/// Uniform `(φ, s)` lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinogramGrid {
    n_phi: usize,
    range: PhiRange,
    n_s: usize,
    s_max: f64,
}

impl SinogramGrid {
    pub fn new(range: PhiRange, n_phi: usize, n_s: usize, s_max: f64) -> Result<Self> {
        if n_phi < 2 {
            return Err(Error::InvalidGrid(format!("n_phi must be at least 2, got {n_phi}")));
        }
        if n_s < 3 {
            return Err(Error::InvalidGrid(format!("n_s must be at least 3, got {n_s}")));
        }
        if !(s_max.is_finite() && s_max > 0.0) {
            return Err(Error::InvalidGrid(format!("s_max must be positive, got {s_max}")));
        }
        if let PhiRange::Interval { start, end } = range {
            if !(0.0 <= start && start < end && end <= PI) {
                return Err(Error::InvalidGrid(format!(
                    "phi interval [{start}, {end}] must satisfy 0 <= start < end <= pi"
                )));
            }
        }
        Ok(Self {
            n_phi,
            range,
            n_s,
            s_max,
        })
    }

    pub fn full(n_phi: usize, n_s: usize, s_max: f64) -> Result<Self> {
        Self::new(PhiRange::Full, n_phi, n_s, s_max)
    }

    /// Sinogram grid whose offsets have the same spacing as the image pixels
    /// and whose `s_max` is the smallest admissible value `√2·L`.
    pub fn matched(range: PhiRange, n_phi: usize, image: &ImageGrid) -> Result<Self> {
        let s_max = std::f64::consts::SQRT_2 * image.extent();
        let half = (s_max / image.spacing()).ceil() as usize;
        Self::new(range, n_phi, 2 * half + 1, s_max)
    }

    /// Rebuild a grid from the `(n_phi, phi0, dphi, n_s, s_max)` file header.
    pub fn from_header(n_phi: usize, phi0: f64, dphi: f64, n_s: usize, s_max: f64) -> Result<Self> {
        let tol = 1e-9;
        let range = if phi0.abs() < tol && (n_phi as f64 * dphi - TAU).abs() < tol {
            PhiRange::Full
        } else if phi0.abs() < tol && (n_phi as f64 * dphi - PI).abs() < tol {
            PhiRange::Half
        } else {
            PhiRange::Interval {
                start: phi0,
                end: phi0 + (n_phi.saturating_sub(1)) as f64 * dphi,
            }
        };
        Self::new(range, n_phi, n_s, s_max)
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    pub fn range(&self) -> PhiRange {
        self.range
    }

    pub fn phi0(&self) -> f64 {
        match self.range {
            PhiRange::Full | PhiRange::Half => 0.0,
            PhiRange::Interval { start, .. } => start,
        }
    }

    pub fn dphi(&self) -> f64 {
        match self.range {
            PhiRange::Full => TAU / self.n_phi as f64,
            PhiRange::Half => PI / self.n_phi as f64,
            PhiRange::Interval { start, end } => (end - start) / (self.n_phi - 1) as f64,
        }
    }

    #[inline]
    pub fn phi(&self, i: usize) -> f64 {
        self.phi0() + i as f64 * self.dphi()
    }

    pub fn ds(&self) -> f64 {
        2.0 * self.s_max / (self.n_s - 1) as f64
    }

    #[inline]
    pub fn s(&self, j: usize) -> f64 {
        -self.s_max + j as f64 * self.ds()
    }

    /// Quadrature weights in φ: uniform for periodic ranges, trapezoid for intervals.
    pub fn phi_weights(&self) -> Vec<f64> {
        let d = self.dphi();
        let mut w = vec![d; self.n_phi];
        if let PhiRange::Interval { .. } = self.range {
            w[0] *= 0.5;
            w[self.n_phi - 1] *= 0.5;
        }
        w
    }

    /// True when every direction of `window` is sampled.
    pub fn covers(&self, window: &AngularWindow) -> bool {
        match self.range {
            PhiRange::Full | PhiRange::Half => true,
            PhiRange::Interval { start, end } => start <= window.phi1() && end >= window.phi2(),
        }
    }

    /// Check `s_max ≥ √2·L` against an image grid.
    pub fn check_image(&self, image: &ImageGrid) -> Result<()> {
        let need = std::f64::consts::SQRT_2 * image.extent();
        if self.s_max < need * (1.0 - 1e-12) {
            return Err(Error::GridMismatch(format!(
                "s_max = {} is below sqrt(2)*L = {need}",
                self.s_max
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutoffKind {
    Indicator,
    FiniteOrder,
    InfiniteOrder,
}

impl fmt::Display for CutoffKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CutoffKind::Indicator => "indicator",
            CutoffKind::FiniteOrder => "finite-order",
            CutoffKind::InfiniteOrder => "infinite-order",
        })
    }
}

impl FromStr for CutoffKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "indicator" => Ok(CutoffKind::Indicator),
            "finite-order" | "finite" => Ok(CutoffKind::FiniteOrder),
            "infinite-order" | "infinite" => Ok(CutoffKind::InfiniteOrder),
            other => Err(Error::InvalidWindow(format!("unknown cutoff kind {other:?}"))),
        }
    }
}

/// Accessible directions `φ₁ < φ < φ₂` together with the cutoff `κ`.
///
/// Finite order: `κ(φ) = sin(π(φ−φ₁)/(φ₂−φ₁))^k`. Infinite order: the bump
/// `exp(1 − 1/(1 − u²))`, `u = 2(φ − φ_mid)/(φ₂ − φ₁)`. Both peak at 1 at the
/// midpoint. `κ` is zero outside `[φ₁, φ₂]` (taken modulo 2π).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularWindow {
    phi1: f64,
    phi2: f64,
    kind: CutoffKind,
    k: u32,
}

impl AngularWindow {
    pub fn new(phi1: f64, phi2: f64, kind: CutoffKind, k: u32) -> Result<Self> {
        if !(phi1.is_finite() && phi2.is_finite()) {
            return Err(Error::InvalidWindow("window endpoints must be finite".into()));
        }
        if phi1 >= phi2 {
            return Err(Error::InvalidWindow("phi1 < phi2 required".into()));
        }
        if phi1 <= 0.0 || phi2 >= PI {
            return Err(Error::InvalidWindow(format!(
                "window endpoints must lie in (0, pi), got ({phi1}, {phi2})"
            )));
        }
        if kind == CutoffKind::FiniteOrder && k < 1 {
            return Err(Error::InvalidWindow(
                "finite-order cutoff needs vanishing order k >= 1".into(),
            ));
        }
        Ok(Self {
            phi1,
            phi2,
            kind,
            k,
        })
    }

    pub fn finite(phi1: f64, phi2: f64, k: u32) -> Result<Self> {
        Self::new(phi1, phi2, CutoffKind::FiniteOrder, k)
    }

    pub fn indicator(phi1: f64, phi2: f64) -> Result<Self> {
        Self::new(phi1, phi2, CutoffKind::Indicator, 0)
    }

    pub fn infinite(phi1: f64, phi2: f64) -> Result<Self> {
        Self::new(phi1, phi2, CutoffKind::InfiniteOrder, 0)
    }

    /// Same endpoints, finite order `k`.
    pub fn with_order(&self, k: u32) -> Result<Self> {
        Self::finite(self.phi1, self.phi2, k)
    }

    pub fn phi1(&self) -> f64 {
        self.phi1
    }

    pub fn phi2(&self) -> f64 {
        self.phi2
    }

    pub fn kind(&self) -> CutoffKind {
        self.kind
    }

    /// Vanishing order; meaningful only for the finite-order kind.
    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn width(&self) -> f64 {
        self.phi2 - self.phi1
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.phi1 + self.phi2)
    }

    /// Boundary direction `e_j`, `j ∈ {1, 2}`.
    pub fn boundary_direction(&self, j: u8) -> Point {
        match j {
            1 => direction(self.phi1),
            2 => direction(self.phi2),
            _ => panic!("boundary index must be 1 or 2, got {j}"),
        }
    }

    /// `κ(φ)` for any real angle.
    pub fn kappa(&self, phi: f64) -> f64 {
        let phi = phi.rem_euclid(TAU);
        match self.kind {
            CutoffKind::Indicator => {
                if phi >= self.phi1 && phi <= self.phi2 {
                    1.0
                } else {
                    0.0
                }
            }
            CutoffKind::FiniteOrder => {
                if phi <= self.phi1 || phi >= self.phi2 {
                    return 0.0;
                }
                let t = PI * (phi - self.phi1) / self.width();
                t.sin().powi(self.k as i32)
            }
            CutoffKind::InfiniteOrder => {
                if phi <= self.phi1 || phi >= self.phi2 {
                    return 0.0;
                }
                let u = 2.0 * (phi - self.midpoint()) / self.width();
                let q = 1.0 - u * u;
                if q <= 0.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / q).exp()
                }
            }
        }
    }

    /// True when `φ` (mod 2π) lies in the open window.
    pub fn contains(&self, phi: f64) -> bool {
        let phi = phi.rem_euclid(TAU);
        phi > self.phi1 && phi < self.phi2
    }

    /// Visibility of a frequency direction: `ξ/|ξ| ∈ S_V` or `−ξ/|ξ| ∈ S_V`.
    pub fn is_visible(&self, xi: Point) -> bool {
        let a = xi[1].atan2(xi[0]);
        self.contains(a) || self.contains(a + PI)
    }
}

/// Either the full circle (`κ ≡ 1`) or a limited window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AngularSupport {
    Full,
    Window(AngularWindow),
}

impl AngularSupport {
    #[inline]
    pub fn kappa(&self, phi: f64) -> f64 {
        match self {
            AngularSupport::Full => 1.0,
            AngularSupport::Window(w) => w.kappa(phi),
        }
    }

    pub fn window(&self) -> Option<&AngularWindow> {
        match self {
            AngularSupport::Full => None,
            AngularSupport::Window(w) => Some(w),
        }
    }
}

impl From<AngularWindow> for AngularSupport {
    fn from(w: AngularWindow) -> Self {
        AngularSupport::Window(w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Estimate the vanishing order of `κ` at one endpoint from the log–log slope
/// of `κ(φ₁ + h)` (or `κ(φ₂ − h)`) against `h`.
pub fn vanishing_order_probe(window: &AngularWindow, side: Side, h_list: &[f64]) -> Result<f64> {
    if h_list.len() < 3 {
        return Err(Error::Precondition(format!(
            "vanishing-order probe needs at least 3 offsets, got {}",
            h_list.len()
        )));
    }
    let mut xs = Vec::with_capacity(h_list.len());
    let mut ys = Vec::with_capacity(h_list.len());
    for &h in h_list {
        if !(h > 0.0 && h < window.width()) {
            return Err(Error::Precondition(format!(
                "probe offset {h} must lie in (0, window width)"
            )));
        }
        let phi = match side {
            Side::Left => window.phi1() + h,
            Side::Right => window.phi2() - h,
        };
        let value = window.kappa(phi);
        if value <= 0.0 {
            return Err(Error::Precondition(format!(
                "kappa underflows to zero at offset {h}"
            )));
        }
        xs.push(h.ln());
        ys.push(value.ln());
    }
    least_squares_slope(&xs, &ys)
        .ok_or_else(|| Error::Precondition("probe offsets must be distinct".into()))
}
