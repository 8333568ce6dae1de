//! Piecewise-constant test objects with closed-form chords, boundary normals
//! and curvatures.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{direction, dot, norm, perp, AngularWindow, ImageGrid, Point};
use crate::quadrature::adaptive_simpson;
use crate::raster::Raster;
use crate::weight::WeightFunction;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Disk {
        center: Point,
        radius: f64,
    },
    /// `semi_axes[0]` lies along the direction `angle`.
    Ellipse {
        center: Point,
        semi_axes: [f64; 2],
        angle: f64,
    },
    /// The part of a disk with `(x − center)·normal ≤ offset`.
    ClippedDisk {
        center: Point,
        radius: f64,
        normal: Point,
        offset: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    /// Point on a smooth curved arc.
    Smooth,
    /// Point on a straight boundary segment (zero curvature).
    Flat,
    /// Corner of a clipped disk; its normal cone contains the reported normal.
    Corner,
}

/// Boundary point whose outward normal is parallel to a window edge `e_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeSingularity {
    pub point: Point,
    /// Outward unit normal, equal to `±e_j`.
    pub normal: Point,
    /// `1/radius of curvature`; zero on flat segments, infinite at corners.
    pub boundary_curvature: f64,
    pub j: u8,
    pub shape_index: usize,
    pub kind: EdgeKind,
}

#[inline]
fn rotate(v: Point, angle: f64) -> Point {
    let (s, c) = angle.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1]]
}

#[inline]
fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
fn add_scaled(a: Point, b: Point, t: f64) -> Point {
    [a[0] + t * b[0], a[1] + t * b[1]]
}

fn normalize(v: Point) -> Point {
    let n = norm(v);
    [v[0] / n, v[1] / n]
}

/// Wrap an angle difference into `(−π, π]`.
fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// Root interval of `A t² + 2B t + C ≤ 0` with `A > 0`.
fn quadratic_interval(a: f64, b: f64, c: f64) -> Option<(f64, f64)> {
    let disc = b * b - a * c;
    if disc <= 0.0 {
        return None;
    }
    let r = disc.sqrt();
    Some(((-b - r) / a, (-b + r) / a))
}

fn ellipse_interval(q0: Point, d: Point, a: f64, b: f64) -> Option<(f64, f64)> {
    let (ia, ib) = (1.0 / (a * a), 1.0 / (b * b));
    quadratic_interval(
        d[0] * d[0] * ia + d[1] * d[1] * ib,
        q0[0] * d[0] * ia + q0[1] * d[1] * ib,
        q0[0] * q0[0] * ia + q0[1] * q0[1] * ib - 1.0,
    )
}

/// Distance from `(y0, y1)`, both nonnegative, to the ellipse with semi-axes
/// `e0 ≥ e1 > 0`, by bisection on the Lagrange multiplier.
fn distance_to_ellipse_quadrant(e0: f64, e1: f64, y0: f64, y1: f64) -> f64 {
    if y1 > 0.0 {
        if y0 > 0.0 {
            let z0 = y0 / e0;
            let z1 = y1 / e1;
            let g = z0 * z0 + z1 * z1 - 1.0;
            if g == 0.0 {
                return 0.0;
            }
            let r0 = (e0 / e1) * (e0 / e1);
            let n0 = r0 * z0;
            let mut s0 = z1 - 1.0;
            let mut s1 = if g < 0.0 { 0.0 } else { n0.hypot(z1) - 1.0 };
            let mut s = 0.0;
            for _ in 0..200 {
                s = 0.5 * (s0 + s1);
                if s == s0 || s == s1 {
                    break;
                }
                let ratio0 = n0 / (s + r0);
                let ratio1 = z1 / (s + 1.0);
                let gs = ratio0 * ratio0 + ratio1 * ratio1 - 1.0;
                if gs > 0.0 {
                    s0 = s;
                } else if gs < 0.0 {
                    s1 = s;
                } else {
                    break;
                }
            }
            let x0 = r0 * y0 / (s + r0);
            let x1 = y1 / (s + 1.0);
            (x0 - y0).hypot(x1 - y1)
        } else {
            (y1 - e1).abs()
        }
    } else {
        let numer0 = e0 * y0;
        let denom0 = e0 * e0 - e1 * e1;
        if numer0 < denom0 {
            let xde0 = numer0 / denom0;
            let x0 = e0 * xde0;
            let x1 = e1 * (1.0 - xde0 * xde0).max(0.0).sqrt();
            (x0 - y0).hypot(x1)
        } else {
            (y0 - e0).abs()
        }
    }
}

fn distance_to_segment(p: Point, a: Point, b: Point) -> f64 {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    let t = if len2 > 0.0 {
        (dot(sub(p, a), ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    norm(sub(p, add_scaled(a, ab, t)))
}

impl Shape {
    pub fn disk(center: Point, radius: f64) -> Self {
        Shape::Disk { center, radius }
    }

    pub fn ellipse(center: Point, semi_axes: [f64; 2], angle: f64) -> Self {
        Shape::Ellipse {
            center,
            semi_axes,
            angle,
        }
    }

    /// Disk cut by the half-plane `(x − center)·normal ≤ offset`; `normal` is
    /// normalized on validation.
    pub fn clipped_disk(center: Point, radius: f64, normal: Point, offset: f64) -> Self {
        Shape::ClippedDisk {
            center,
            radius,
            normal,
            offset,
        }
    }

    pub fn center(&self) -> Point {
        match *self {
            Shape::Disk { center, .. }
            | Shape::Ellipse { center, .. }
            | Shape::ClippedDisk { center, .. } => center,
        }
    }

    fn validated(self) -> Result<Self> {
        let c = self.center();
        if !(c[0].is_finite() && c[1].is_finite()) {
            return Err(Error::InvalidPhantom("shape center must be finite".into()));
        }
        match self {
            Shape::Disk { radius, .. } => {
                if !(radius.is_finite() && radius > 0.0) {
                    return Err(Error::InvalidPhantom(format!(
                        "disk radius must be positive, got {radius}"
                    )));
                }
                Ok(self)
            }
            Shape::Ellipse {
                semi_axes, angle, ..
            } => {
                if !semi_axes.iter().all(|a| a.is_finite() && *a > 0.0) || !angle.is_finite() {
                    return Err(Error::InvalidPhantom(format!(
                        "ellipse semi-axes must be positive, got {semi_axes:?}"
                    )));
                }
                Ok(self)
            }
            Shape::ClippedDisk {
                center,
                radius,
                normal,
                offset,
            } => {
                if !(radius.is_finite() && radius > 0.0) {
                    return Err(Error::InvalidPhantom(format!(
                        "clipped disk radius must be positive, got {radius}"
                    )));
                }
                let nn = norm(normal);
                if !(nn.is_finite() && nn > 0.0) {
                    return Err(Error::InvalidPhantom("clip normal must be nonzero".into()));
                }
                if !(offset.abs() < radius) {
                    return Err(Error::InvalidPhantom(format!(
                        "clip offset {offset} must lie strictly within the radius {radius}"
                    )));
                }
                Ok(Shape::ClippedDisk {
                    center,
                    radius,
                    normal: normalize(normal),
                    offset,
                })
            }
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        match *self {
            Shape::Disk { center, radius } => {
                let d = sub(p, center);
                dot(d, d) <= radius * radius
            }
            Shape::Ellipse {
                center,
                semi_axes: [a, b],
                angle,
            } => {
                let q = rotate(sub(p, center), -angle);
                (q[0] / a).powi(2) + (q[1] / b).powi(2) <= 1.0
            }
            Shape::ClippedDisk {
                center,
                radius,
                normal,
                offset,
            } => {
                let d = sub(p, center);
                dot(d, d) <= radius * radius && dot(d, normal) <= offset
            }
        }
    }

    /// Half-widths of the axis-aligned bounding box.
    pub fn half_widths(&self) -> [f64; 2] {
        match *self {
            Shape::Disk { radius, .. } | Shape::ClippedDisk { radius, .. } => [radius, radius],
            Shape::Ellipse {
                semi_axes: [a, b],
                angle,
                ..
            } => {
                let (s, c) = angle.sin_cos();
                [
                    (a * a * c * c + b * b * s * s).sqrt(),
                    (a * a * s * s + b * b * c * c).sqrt(),
                ]
            }
        }
    }

    /// Radius of an origin-centered disk containing the shape.
    pub fn bounding_radius(&self) -> f64 {
        let r = match *self {
            Shape::Disk { radius, .. } | Shape::ClippedDisk { radius, .. } => radius,
            Shape::Ellipse { semi_axes, .. } => semi_axes[0].max(semi_axes[1]),
        };
        norm(self.center()) + r
    }

    pub fn area(&self) -> f64 {
        match *self {
            Shape::Disk { radius, .. } => PI * radius * radius,
            Shape::Ellipse { semi_axes, .. } => PI * semi_axes[0] * semi_axes[1],
            Shape::ClippedDisk { radius, offset, .. } => {
                let cap = radius * radius * (offset / radius).acos()
                    - offset * (radius * radius - offset * offset).sqrt();
                PI * radius * radius - cap
            }
        }
    }

    /// Parameter interval of the line `x = sθ + tθ⊥` inside the shape.
    pub fn chord(&self, phi: f64, s: f64) -> Option<(f64, f64)> {
        let theta = direction(phi);
        let tp = perp(theta);
        let base = [s * theta[0], s * theta[1]];
        match *self {
            Shape::Disk { center, radius } => {
                ellipse_interval(sub(base, center), tp, radius, radius)
            }
            Shape::Ellipse {
                center,
                semi_axes: [a, b],
                angle,
            } => ellipse_interval(
                rotate(sub(base, center), -angle),
                rotate(tp, -angle),
                a,
                b,
            ),
            Shape::ClippedDisk {
                center,
                radius,
                normal,
                offset,
            } => {
                let (mut t0, mut t1) = ellipse_interval(sub(base, center), tp, radius, radius)?;
                // (base − c)·n + t (θ⊥·n) ≤ offset
                let a = dot(sub(base, center), normal);
                let rate = dot(tp, normal);
                if rate == 0.0 {
                    if a > offset {
                        return None;
                    }
                } else {
                    let t_cut = (offset - a) / rate;
                    if rate > 0.0 {
                        t1 = t1.min(t_cut);
                    } else {
                        t0 = t0.max(t_cut);
                    }
                }
                (t1 > t0).then_some((t0, t1))
            }
        }
    }

    /// Unsigned distance from `p` to the shape boundary.
    pub fn boundary_distance(&self, p: Point) -> f64 {
        match *self {
            Shape::Disk { center, radius } => (norm(sub(p, center)) - radius).abs(),
            Shape::Ellipse {
                center,
                semi_axes: [a, b],
                angle,
            } => {
                let q = rotate(sub(p, center), -angle);
                let (y0, y1) = (q[0].abs(), q[1].abs());
                if a >= b {
                    distance_to_ellipse_quadrant(a, b, y0, y1)
                } else {
                    distance_to_ellipse_quadrant(b, a, y1, y0)
                }
            }
            Shape::ClippedDisk {
                center,
                radius,
                normal,
                offset,
            } => {
                let [c0, c1] = self.corners().expect("clipped disk has corners");
                let chord = distance_to_segment(p, c0, c1);
                let d = sub(p, center);
                let r = norm(d);
                let arc = if r > 0.0 {
                    let q = add_scaled(center, d, radius / r);
                    if dot(sub(q, center), normal) <= offset {
                        (r - radius).abs()
                    } else {
                        norm(sub(p, c0)).min(norm(sub(p, c1)))
                    }
                } else {
                    radius
                };
                chord.min(arc)
            }
        }
    }

    fn corners(&self) -> Option<[Point; 2]> {
        match *self {
            Shape::ClippedDisk {
                center,
                radius,
                normal,
                offset,
            } => {
                let foot = add_scaled(center, normal, offset);
                let half = (radius * radius - offset * offset).sqrt();
                let along = perp(normal);
                Some([add_scaled(foot, along, -half), add_scaled(foot, along, half)])
            }
            _ => None,
        }
    }

    /// Boundary samples `(point, outward normal)` at spacing at most `step`.
    pub fn boundary_samples(&self, step: f64) -> Vec<(Point, Point)> {
        match *self {
            Shape::Disk { center, radius } => {
                let m = ((TAU * radius / step).ceil() as usize).max(16);
                (0..m)
                    .map(|i| {
                        let n = direction(TAU * i as f64 / m as f64);
                        (add_scaled(center, n, radius), n)
                    })
                    .collect()
            }
            Shape::Ellipse {
                center,
                semi_axes: [a, b],
                angle,
            } => {
                let m = ((TAU * a.max(b) / step).ceil() as usize).max(16);
                (0..m)
                    .map(|i| {
                        let t = TAU * i as f64 / m as f64;
                        let (s, c) = t.sin_cos();
                        let p = add_scaled(center, rotate([a * c, b * s], angle), 1.0);
                        let n = normalize(rotate([c / a, s / b], angle));
                        (p, n)
                    })
                    .collect()
            }
            Shape::ClippedDisk {
                center,
                radius,
                normal,
                ..
            } => {
                let m = ((TAU * radius / step).ceil() as usize).max(16);
                let mut out: Vec<(Point, Point)> = (0..m)
                    .filter_map(|i| {
                        let n = direction(TAU * i as f64 / m as f64);
                        let p = add_scaled(center, n, radius);
                        self.contains(p).then_some((p, n))
                    })
                    .collect();
                let [c0, c1] = self.corners().expect("clipped disk has corners");
                let len = norm(sub(c1, c0));
                let k = ((len / step).ceil() as usize).max(2);
                for i in 0..=k {
                    let t = i as f64 / k as f64;
                    out.push((add_scaled(c0, sub(c1, c0), t), normal));
                }
                out
            }
        }
    }

    fn edges_for(&self, e: Point, j: u8, tol: f64, shape_index: usize, out: &mut Vec<EdgeSingularity>) {
        let mut push = |point: Point, normal: Point, curvature: f64, kind: EdgeKind| {
            out.push(EdgeSingularity {
                point,
                normal,
                boundary_curvature: curvature,
                j,
                shape_index,
                kind,
            })
        };
        match *self {
            Shape::Disk { center, radius } => {
                for sign in [1.0, -1.0] {
                    let n = [sign * e[0], sign * e[1]];
                    push(add_scaled(center, n, radius), n, 1.0 / radius, EdgeKind::Smooth);
                }
            }
            Shape::Ellipse {
                center,
                semi_axes: [a, b],
                angle,
            } => {
                let local = rotate(e, -angle);
                let t0 = (b * local[1]).atan2(a * local[0]);
                for t in [t0, t0 + PI] {
                    let (s, c) = t.sin_cos();
                    let p = add_scaled(center, rotate([a * c, b * s], angle), 1.0);
                    let n = normalize(rotate([c / a, s / b], angle));
                    // snap to the exact boundary direction, sign from the normal map
                    let sign = dot(n, e).signum();
                    let n = [sign * e[0], sign * e[1]];
                    let curvature = a * b / (a * a * s * s + b * b * c * c).powf(1.5);
                    push(p, n, curvature, EdgeKind::Smooth);
                }
            }
            Shape::ClippedDisk {
                center,
                radius,
                normal,
                offset,
            } => {
                let slack = 1e-12 * radius;
                for sign in [1.0, -1.0] {
                    let n = [sign * e[0], sign * e[1]];
                    if radius * dot(n, normal) < offset - slack {
                        push(add_scaled(center, n, radius), n, 1.0 / radius, EdgeKind::Smooth);
                    }
                }
                let cross = normal[0] * e[1] - normal[1] * e[0];
                if cross.abs() <= tol.sin() {
                    let sign = dot(normal, e).signum();
                    push(
                        add_scaled(center, normal, offset),
                        [sign * e[0], sign * e[1]],
                        0.0,
                        EdgeKind::Flat,
                    );
                }
                let corners = self.corners().expect("clipped disk has corners");
                let a_chord = normal[1].atan2(normal[0]);
                for corner in corners {
                    let arc_normal = normalize(sub(corner, center));
                    let span = wrap_angle(arc_normal[1].atan2(arc_normal[0]) - a_chord);
                    for sign in [1.0, -1.0] {
                        let n = [sign * e[0], sign * e[1]];
                        let rel = wrap_angle(n[1].atan2(n[0]) - a_chord);
                        let inside = if span >= 0.0 {
                            rel > tol && rel < span - tol
                        } else {
                            rel < -tol && rel > span + tol
                        };
                        if inside {
                            push(corner, n, f64::INFINITY, EdgeKind::Corner);
                        }
                    }
                }
            }
        }
    }
}

/// Ordered list of `(shape, density)`; densities add where shapes overlap.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Phantom {
    shapes: Vec<(Shape, f64)>,
}

impl Phantom {
    pub fn new(shapes: Vec<(Shape, f64)>) -> Result<Self> {
        let shapes = shapes
            .into_iter()
            .map(|(s, d)| {
                if !d.is_finite() {
                    return Err(Error::InvalidPhantom(format!("density must be finite, got {d}")));
                }
                Ok((s.validated()?, d))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { shapes })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn unit_disk() -> Self {
        Self::new(vec![(Shape::disk([0.0, 0.0], 1.0), 1.0)]).expect("unit disk is valid")
    }

    pub fn shapes(&self) -> &[(Shape, f64)] {
        &self.shapes
    }

    pub fn is_empty(&self) -> bool {
        self.shapes.is_empty()
    }

    pub fn value_at(&self, p: Point) -> f64 {
        self.shapes
            .iter()
            .filter(|(s, _)| s.contains(p))
            .map(|(_, d)| d)
            .sum()
    }

    pub fn bounding_radius(&self) -> f64 {
        self.shapes
            .iter()
            .map(|(s, _)| s.bounding_radius())
            .fold(0.0, f64::max)
    }

    /// `Σ density · area`.
    pub fn mass(&self) -> f64 {
        self.shapes.iter().map(|(s, d)| d * s.area()).sum()
    }

    pub fn boundary_distance(&self, p: Point) -> f64 {
        self.shapes
            .iter()
            .map(|(s, _)| s.boundary_distance(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Every shape must lie strictly inside `[−L, L]²`.
    pub fn check_inside(&self, grid: &ImageGrid) -> Result<()> {
        let l = grid.extent();
        for (i, (s, _)) in self.shapes.iter().enumerate() {
            let c = s.center();
            let [wx, wy] = s.half_widths();
            if c[0].abs() + wx >= l || c[1].abs() + wy >= l {
                return Err(Error::InvalidPhantom(format!(
                    "shape {i} exceeds the image extent [-{l}, {l}]^2"
                )));
            }
        }
        Ok(())
    }
}

/// Pixel value = sum of densities of the shapes containing the pixel center,
/// or the mean over a 2×2 sub-pixel pattern when `supersample` is set.
pub fn rasterize(phantom: &Phantom, grid: ImageGrid, supersample: bool) -> Result<Raster> {
    phantom.check_inside(&grid)?;
    let n = grid.n();
    let h = grid.spacing();
    let mut raster = Raster::zeros(grid);
    raster
        .values
        .axis_iter_mut(ndarray::Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(iy, mut row)| {
            for ix in 0..n {
                let c = grid.center(ix, iy);
                row[ix] = if supersample {
                    let q = 0.25 * h;
                    [[-q, -q], [q, -q], [-q, q], [q, q]]
                        .iter()
                        .map(|o| phantom.value_at([c[0] + o[0], c[1] + o[1]]))
                        .sum::<f64>()
                        / 4.0
                } else {
                    phantom.value_at(c)
                };
            }
        });
    Ok(raster)
}

/// Absolute tolerance of the adaptive quadrature used for non-constant weights.
pub const LINE_QUADRATURE_TOL: f64 = 1e-9;

/// `∫_{x·θ=s} μ(x, θ) f(x) dx` for the phantom `f`.
pub fn analytic_line_integral(phantom: &Phantom, mu: &WeightFunction, phi: f64, s: f64) -> f64 {
    let theta = direction(phi);
    let tp = perp(theta);
    let base = [s * theta[0], s * theta[1]];
    let constant = mu.as_constant();
    phantom
        .shapes
        .iter()
        .filter_map(|(shape, density)| {
            let (t0, t1) = shape.chord(phi, s)?;
            let weighted = match constant {
                Some(c) => c * (t1 - t0),
                None => adaptive_simpson(
                    |t| mu.eval(add_scaled(base, tp, t), phi),
                    t0,
                    t1,
                    LINE_QUADRATURE_TOL,
                ),
            };
            Some(density * weighted)
        })
        .sum()
}

/// Boundary points whose outward normal is `±e_j` (within `tol` radians),
/// for `j = 1, 2`.
pub fn edge_singularities(phantom: &Phantom, window: &AngularWindow, tol: f64) -> Vec<EdgeSingularity> {
    let mut out = Vec::new();
    for (idx, (shape, _)) in phantom.shapes.iter().enumerate() {
        for j in [1u8, 2] {
            shape.edges_for(window.boundary_direction(j), j, tol.max(0.0), idx, &mut out);
        }
    }
    out
}

pub const DEFAULT_EDGE_TOL: f64 = 1e-9;
