//! Principal symbols, predicted artifact lines and pixel-domain measurements of
//! visible edges, streaks and directional frequency decay.
//!
//! An edge singularity `(x, ξ)` with `ξ ∥ e_j` can only spread along the line
//! through `x` with direction `e_j⊥`; every other measurement here is a proxy
//! for wavefront-set membership or Sobolev order at fixed resolution.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::filter::{reconstruct, Operator, ReconstructionConfig};
use crate::fit::least_squares_slope;
use crate::geometry::{dot, norm, perp, AngularSupport, AngularWindow, ImageGrid, Point, SinogramGrid};
use crate::phantom::{edge_singularities, EdgeSingularity, Phantom, DEFAULT_EDGE_TOL};
use crate::raster::Raster;
use crate::transform::{forward, Sinogram, Source};

/// Principal symbol of `B_κ` (degree 0) or `Λ_κ` (degree 1) at `(x, ξ)`.
///
/// `½[κ(ξ̂) ν(x, ξ̂) μ(x, ξ̂) + κ(−ξ̂) ν(x, −ξ̂) μ(x, −ξ̂)]`, times `|ξ|` for `Λ`;
/// the weights are read at the angle of `±ξ`.
pub fn symbol_eval(cfg: &ReconstructionConfig, x: Point, xi: Point) -> Result<f64> {
    let magnitude = norm(xi);
    if !(magnitude > 0.0 && magnitude.is_finite()) {
        return Err(Error::Precondition("symbol needs a nonzero finite frequency".into()));
    }
    let a = xi[1].atan2(xi[0]);
    let term = |phi: f64| cfg.support.kappa(phi) * cfg.nu.eval(x, phi) * cfg.mu.eval(x, phi);
    let sym = 0.5 * (term(a) + term(a + PI));
    Ok(match cfg.operator {
        Operator::B => sym,
        Operator::Lambda => magnitude * sym,
    })
}

/// Line through an edge singularity, orthogonal to its window edge `e_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArtifactLine {
    #[serde(skip)]
    pub generator: EdgeSingularity,
    pub j: u8,
    pub point_on_line: Point,
    pub direction: Point,
}

impl ArtifactLine {
    pub fn distance(&self, p: Point) -> f64 {
        let d = [p[0] - self.point_on_line[0], p[1] - self.point_on_line[1]];
        (d[0] * self.direction[1] - d[1] * self.direction[0]).abs()
    }
}

pub fn predicted_artifact_lines(phantom: &Phantom, window: &AngularWindow) -> Vec<ArtifactLine> {
    edge_singularities(phantom, window, DEFAULT_EDGE_TOL)
        .into_iter()
        .map(|e| ArtifactLine {
            generator: e,
            j: e.j,
            point_on_line: e.point,
            direction: perp(window.boundary_direction(e.j)),
        })
        .collect()
}

/// Windowed directional Fourier decay measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct WavefrontProbe {
    pub point: Point,
    /// Frequency direction `ξ/|ξ|`.
    pub direction: Point,
    pub window_radius: f64,
    /// Frequency magnitudes `|ξ|` in radians per unit length, increasing.
    pub scales: Vec<f64>,
}

impl WavefrontProbe {
    pub fn new(point: Point, direction: Point, window_radius: f64, scales: Vec<f64>) -> Self {
        let n = norm(direction);
        Self {
            point,
            direction: [direction[0] / n, direction[1] / n],
            window_radius,
            scales,
        }
    }

    /// Calibrated radius and default scales on `grid`.
    pub fn calibrated(grid: &ImageGrid, point: Point, direction: Point) -> Self {
        Self::new(
            point,
            direction,
            CALIBRATED_PROBE_PIXELS * grid.spacing(),
            Self::default_scales(grid, DEFAULT_PROBE_SCALES),
        )
    }

    /// `count` scales spaced geometrically from 8 to `n/4` cycles per image extent.
    pub fn default_scales(grid: &ImageGrid, count: usize) -> Vec<f64> {
        geometric_scales(grid, 8.0, grid.n() as f64 / 4.0, count)
    }
}

/// Geometric sequence of `|ξ|` between `lo` and `hi` cycles per extent `2L`.
pub fn geometric_scales(grid: &ImageGrid, lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let to_rad = TAU / (2.0 * grid.extent());
    let count = count.max(2);
    (0..count)
        .map(|i| {
            let t = i as f64 / (count - 1) as f64;
            to_rad * lo * (hi / lo).powf(t)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbeOutcome {
    /// Least-squares slope of `log|F|` against `log|ξ|`.
    Slope(f64),
    /// Every sampled magnitude was below `1e−12`.
    NoSignal,
}

impl ProbeOutcome {
    pub fn slope(self) -> Option<f64> {
        match self {
            ProbeOutcome::Slope(s) => Some(s),
            ProbeOutcome::NoSignal => None,
        }
    }
}

/// Probe window radius, in pixels, at which the jump and Gaussian oracles
/// calibrate (slopes ≈ −1.1 and ≤ −4); smaller windows bias both upward.
pub const CALIBRATED_PROBE_PIXELS: f64 = 32.0;
pub const DEFAULT_PROBE_SCALES: usize = 12;

/// Relative half-width of the radial band averaged around each scale.
const PROBE_BAND: f64 = 0.15;
const PROBE_BAND_SAMPLES: usize = 7;

/// `|F(ξ)|` of the raised-cosine-windowed image for each `ξ` in `freqs`.
pub fn windowed_spectrum(img: &Raster, center: Point, radius: f64, freqs: &[Point]) -> Vec<f64> {
    let grid = img.grid;
    let h = grid.spacing();
    let mut taps: Vec<(f64, f64, f64)> = Vec::new();
    let lo = |c: f64| (grid.fractional_index(c - radius).floor().max(0.0)) as usize;
    let hi = |c: f64| (grid.fractional_index(c + radius).ceil() as usize).min(grid.n() - 1);
    for iy in lo(center[1])..=hi(center[1]) {
        for ix in lo(center[0])..=hi(center[0]) {
            let p = grid.center(ix, iy);
            let d = [p[0] - center[0], p[1] - center[1]];
            let r = norm(d);
            if r < radius {
                let w = 0.5 * (1.0 + (PI * r / radius).cos());
                let v = w * img.values[[iy, ix]];
                if v != 0.0 {
                    taps.push((d[0], d[1], v));
                }
            }
        }
    }
    freqs
        .iter()
        .map(|xi| {
            let (mut re, mut im) = (0.0, 0.0);
            for &(dx, dy, v) in &taps {
                let (s, c) = (dx * xi[0] + dy * xi[1]).sin_cos();
                re += v * c;
                im -= v * s;
            }
            re.hypot(im) * h * h
        })
        .collect()
}

/// Decay exponent of the windowed spectrum along `probe.direction`.
///
/// Each scale is represented by the RMS magnitude over a narrow radial band
/// (±15%) around it, which suppresses the zeros of oscillating spectra.
pub fn wavefront_probe(img: &Raster, probe: &WavefrontProbe) -> Result<ProbeOutcome> {
    let grid = img.grid;
    let h = grid.spacing();
    if probe.scales.len() < 2 || probe.scales.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition(
            "probe scales must be strictly increasing with at least 2 entries".into(),
        ));
    }
    if probe.scales[0] <= 0.0 {
        return Err(Error::Precondition("probe scales must be positive".into()));
    }
    if probe.window_radius < 4.0 * h {
        return Err(Error::Precondition(format!(
            "probe window radius {} is below 4 pixels",
            probe.window_radius
        )));
    }
    let l = grid.extent();
    let r = probe.window_radius;
    if probe.point.iter().any(|c| c - r < -l || c + r > l) {
        return Err(Error::Precondition("probe window leaves the image grid".into()));
    }
    let mut freqs = Vec::with_capacity(probe.scales.len() * PROBE_BAND_SAMPLES);
    for &scale in &probe.scales {
        for q in 0..PROBE_BAND_SAMPLES {
            let t = q as f64 / (PROBE_BAND_SAMPLES - 1) as f64;
            let m = scale * (1.0 + PROBE_BAND * (2.0 * t - 1.0));
            freqs.push([m * probe.direction[0], m * probe.direction[1]]);
        }
    }
    let mags = windowed_spectrum(img, probe.point, r, &freqs);
    let banded: Vec<f64> = mags
        .chunks(PROBE_BAND_SAMPLES)
        .map(|c| (c.iter().map(|m| m * m).sum::<f64>() / c.len() as f64).sqrt())
        .collect();
    if banded.iter().all(|m| *m < 1e-12) {
        return Ok(ProbeOutcome::NoSignal);
    }
    let xs: Vec<f64> = probe.scales.iter().map(|s| s.ln()).collect();
    let ys: Vec<f64> = banded.iter().map(|m| m.max(1e-300).ln()).collect();
    least_squares_slope(&xs, &ys)
        .map(ProbeOutcome::Slope)
        .ok_or_else(|| Error::Precondition("degenerate probe scales".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeStrength {
    pub shape_index: usize,
    pub strength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportMetadata {
    pub n: usize,
    pub extent: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub cutoff: String,
    pub exclusion_radius: f64,
    pub edge_tube_radius: f64,
    pub config_hash: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArtifactReport {
    pub lines: Vec<ArtifactLine>,
    /// Peak `|recon|` along each line, away from boundaries and the generator.
    pub per_line_strength: Vec<f64>,
    /// Peak `|recon|` in a tube around each shape's visible boundary arcs.
    pub edge_strengths: Vec<EdgeStrength>,
    pub k: Option<u32>,
    pub metadata: ReportMetadata,
}

impl ArtifactReport {
    pub fn max_line_strength(&self) -> f64 {
        self.per_line_strength.iter().cloned().fold(0.0, f64::max)
    }

    pub fn max_edge_strength(&self) -> f64 {
        self.edge_strengths.iter().map(|e| e.strength).fold(0.0, f64::max)
    }

    /// Artifact-to-edge peak ratio; zero when no edge is visible.
    pub fn ratio(&self) -> f64 {
        let edge = self.max_edge_strength();
        if edge > 0.0 {
            self.max_line_strength() / edge
        } else {
            0.0
        }
    }
}

pub const DEFAULT_EXCLUSION_PIXELS: f64 = 4.0;
/// Radius, in pixels, of the tube around visible arcs used for edge strengths.
pub const EDGE_TUBE_PIXELS: f64 = 2.0;

/// Peak of `|img|` over pixel centers within `radius` of any point of `points`.
fn tube_peak(img: &Raster, points: &[Point], radius: f64) -> f64 {
    let grid = img.grid;
    let n = grid.n() as isize;
    let reach = (radius / grid.spacing()).ceil() as isize;
    let mut peak = 0.0f64;
    for p in points {
        let cx = grid.fractional_index(p[0]).round() as isize;
        let cy = grid.fractional_index(p[1]).round() as isize;
        for iy in (cy - reach).max(0)..=(cy + reach).min(n - 1) {
            for ix in (cx - reach).max(0)..=(cx + reach).min(n - 1) {
                let c = grid.center(ix as usize, iy as usize);
                if (c[0] - p[0]).hypot(c[1] - p[1]) <= radius {
                    peak = peak.max(img.values[[iy as usize, ix as usize]].abs());
                }
            }
        }
    }
    peak
}

/// Sample points of `line` inside the image at pixel spacing.
fn line_samples(line: &ArtifactLine, grid: &ImageGrid) -> Vec<Point> {
    let h = grid.spacing();
    let b = grid.extent() - 0.5 * h;
    let (p0, d) = (line.point_on_line, line.direction);
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for k in 0..2 {
        if d[k].abs() < 1e-15 {
            if p0[k].abs() > b {
                return Vec::new();
            }
        } else {
            let a = (-b - p0[k]) / d[k];
            let c = (b - p0[k]) / d[k];
            lo = lo.max(a.min(c));
            hi = hi.min(a.max(c));
        }
    }
    if hi <= lo {
        return Vec::new();
    }
    let first = (lo / h).ceil() as i64;
    let last = (hi / h).floor() as i64;
    (first..=last)
        .map(|q| {
            let t = q as f64 * h;
            [p0[0] + t * d[0], p0[1] + t * d[1]]
        })
        .collect()
}

pub fn artifact_report(
    recon: &Raster,
    phantom: &Phantom,
    window: &AngularWindow,
    exclusion_radius: f64,
) -> Result<ArtifactReport> {
    let grid = recon.grid;
    let h = grid.spacing();
    if exclusion_radius < 2.0 * h * (1.0 - 1e-12) {
        return Err(Error::Precondition(format!(
            "exclusion radius {exclusion_radius} is below 2 pixels ({})",
            2.0 * h
        )));
    }
    if !recon.is_finite() {
        return Err(Error::Precondition("reconstruction contains non-finite values".into()));
    }
    phantom.check_inside(&grid)?;
    let lines = predicted_artifact_lines(phantom, window);
    let per_line_strength = lines
        .iter()
        .map(|line| {
            line_samples(line, &grid)
                .into_iter()
                .filter(|p| {
                    let g = line.generator.point;
                    (p[0] - g[0]).hypot(p[1] - g[1]) >= exclusion_radius
                        && phantom.boundary_distance(*p) >= exclusion_radius
                })
                .map(|p| recon.sample(p).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let tube = EDGE_TUBE_PIXELS * h;
    let edge_strengths = phantom
        .shapes()
        .iter()
        .enumerate()
        .map(|(shape_index, (shape, _))| {
            let visible: Vec<Point> = shape
                .boundary_samples(0.5 * h)
                .into_iter()
                .filter(|(_, n)| window.is_visible(*n))
                .map(|(p, _)| p)
                .collect();
            EdgeStrength {
                shape_index,
                strength: tube_peak(recon, &visible, tube),
            }
        })
        .collect();
    Ok(ArtifactReport {
        lines,
        per_line_strength,
        edge_strengths,
        k: match window.kind() {
            crate::geometry::CutoffKind::FiniteOrder => Some(window.k()),
            _ => None,
        },
        metadata: ReportMetadata {
            n: grid.n(),
            extent: grid.extent(),
            phi1: window.phi1(),
            phi2: window.phi2(),
            cutoff: window.kind().to_string(),
            exclusion_radius,
            edge_tube_radius: tube,
            config_hash: None,
        },
    })
}

/// Fraction of `Σ recon²` over pixels farther than `boundary_tube` from the
/// phantom boundary that lies within `line_tube` of some line.
pub fn line_energy_fraction(
    recon: &Raster,
    phantom: &Phantom,
    lines: &[ArtifactLine],
    boundary_tube: f64,
    line_tube: f64,
) -> f64 {
    let grid = recon.grid;
    let n = grid.n();
    let (total, near) = (0..n)
        .into_par_iter()
        .map(|iy| {
            let mut total = 0.0;
            let mut near = 0.0;
            for ix in 0..n {
                let p = grid.center(ix, iy);
                if phantom.boundary_distance(p) <= boundary_tube {
                    continue;
                }
                let e = recon.values[[iy, ix]].powi(2);
                total += e;
                if lines.iter().any(|l| l.distance(p) <= line_tube) {
                    near += e;
                }
            }
            (total, near)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0.0, 0.0), |(a, b), (c, d)| (a + c, b + d));
    if total > 0.0 {
        near / total
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StudyRow {
    pub k: u32,
    pub max_line_strength: f64,
    pub max_edge_strength: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyResult {
    pub operator: String,
    pub rows: Vec<StudyRow>,
    pub reports: Vec<ArtifactReport>,
}

/// Reconstruct the phantom with cutoffs of order `k` for each `k` in `k_list`
/// (same grids and weights) and tabulate artifact and edge strengths.
pub fn strength_vs_order_study(
    phantom: &Phantom,
    base_cfg: &ReconstructionConfig,
    k_list: &[u32],
    igrid: ImageGrid,
    sgrid: SinogramGrid,
    exclusion_radius: f64,
) -> Result<StudyResult> {
    if k_list.is_empty() {
        return Err(Error::Precondition("k_list must not be empty".into()));
    }
    if k_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("k_list must be strictly increasing".into()));
    }
    let window = *base_cfg.support.window().ok_or_else(|| {
        Error::Precondition("order study needs an angular window, not full data".into())
    })?;
    let sino: Sinogram = forward(Source::Phantom(phantom), &base_cfg.mu, sgrid)?;
    let outcomes: Vec<Result<ArtifactReport>> = k_list
        .par_iter()
        .map(|&k| {
            let w = window.with_order(k)?;
            let mut cfg = base_cfg.clone();
            cfg.support = AngularSupport::Window(w);
            let recon = reconstruct(&sino, &cfg, igrid)?;
            artifact_report(&recon, phantom, &w, exclusion_radius)
        })
        .collect();
    let reports = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    let rows = k_list
        .iter()
        .zip(&reports)
        .map(|(&k, r)| StudyRow {
            k,
            max_line_strength: r.max_line_strength(),
            max_edge_strength: r.max_edge_strength(),
            ratio: r.ratio(),
        })
        .collect();
    Ok(StudyResult {
        operator: base_cfg.operator.to_string(),
        rows,
        reports,
    })
}

/// Outward normal direction check used by tests and diagnostics.
pub fn is_tangent(line: &ArtifactLine, center: Point, radius: f64) -> bool {
    (line.distance(center) - radius).abs() < 1e-12 && dot(line.direction, line.generator.normal).abs() < 1e-12
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{direction, PhiRange};
    use crate::phantom::{rasterize, Shape};
    use crate::weight::{ExponentMode, WeightFunction};
    use std::f64::consts::FRAC_PI_4;

    fn quarter(k: u32) -> AngularWindow {
        AngularWindow::finite(FRAC_PI_4, 3.0 * FRAC_PI_4, k).unwrap()
    }

    #[test]
    fn symbol_examples() {
        let ind = AngularWindow::indicator(FRAC_PI_4, 3.0 * FRAC_PI_4).unwrap();
        let cfg = ReconstructionConfig::new(Operator::B, ind.into());
        assert_eq!(symbol_eval(&cfg, [0.1, 0.2], [0.0, 2.0]).unwrap(), 0.5);
        let full = ReconstructionConfig::new(Operator::B, AngularSupport::Full);
        assert_eq!(symbol_eval(&full, [0.0, 0.0], [1.0, -3.0]).unwrap(), 1.0);
        let lam = ReconstructionConfig::new(Operator::Lambda, AngularSupport::Full);
        assert!((symbol_eval(&lam, [0.0, 0.0], [3.0, 0.0]).unwrap() - 3.0).abs() < 1e-15);
        assert!(symbol_eval(&full, [0.0, 0.0], [0.0, 0.0]).is_err());
    }

    #[test]
    fn symbol_homogeneity() {
        let w = quarter(2);
        let mu = WeightFunction::exponential(0.3, ExponentMode::Along).unwrap();
        let nu = WeightFunction::exponential(-0.2, ExponentMode::Across).unwrap();
        for op in [Operator::B, Operator::Lambda] {
            let cfg = ReconstructionConfig::new(op, w.into()).with_weights(mu.clone(), nu.clone());
            for a in 0..36 {
                let xi = direction(a as f64 * TAU / 36.0);
                let base = symbol_eval(&cfg, [0.3, -0.1], xi).unwrap();
                for t in [0.5, 2.0, 1024.0] {
                    let scaled = symbol_eval(&cfg, [0.3, -0.1], [t * xi[0], t * xi[1]]).unwrap();
                    let expect = if op == Operator::B { base } else { t * base };
                    assert_eq!(scaled, expect);
                }
                for t in [0.3, 3.0, 7.25] {
                    let scaled = symbol_eval(&cfg, [0.3, -0.1], [t * xi[0], t * xi[1]]).unwrap();
                    let expect = if op == Operator::B { base } else { t * base };
                    assert!((scaled - expect).abs() <= 1e-12 * expect.abs());
                }
            }
        }
    }

    #[test]
    fn symbol_positive_on_visible_directions() {
        let w = quarter(3);
        let cfg = ReconstructionConfig::new(Operator::B, w.into());
        for a in 0..360 {
            let xi = direction(a as f64 * TAU / 360.0);
            let v = symbol_eval(&cfg, [0.0, 0.0], xi).unwrap();
            if w.is_visible(xi) {
                assert!(v > 0.0, "angle {a}");
            } else {
                assert_eq!(v, 0.0, "angle {a}");
            }
        }
    }

    #[test]
    fn disk_artifact_lines_are_tangent() {
        let lines = predicted_artifact_lines(&Phantom::unit_disk(), &quarter(1));
        assert_eq!(lines.len(), 4);
        for l in &lines {
            assert!(is_tangent(l, [0.0, 0.0], 1.0));
            let ej = quarter(1).boundary_direction(l.j);
            assert!(dot(l.direction, ej).abs() < 1e-12);
        }
        assert!(predicted_artifact_lines(&Phantom::empty(), &quarter(1)).is_empty());
    }

    #[test]
    fn shifted_disk_lines() {
        let p = Phantom::new(vec![(Shape::disk([0.3, 0.0], 0.5), 1.0)]).unwrap();
        let w = AngularWindow::finite(PI / 3.0, 2.0 * PI / 3.0, 2).unwrap();
        let lines = predicted_artifact_lines(&p, &w);
        assert_eq!(lines.len(), 4);
        for l in &lines {
            assert!((l.distance([0.3, 0.0]) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn probe_rejects_bad_input() {
        let grid = ImageGrid::new(64, 1.0).unwrap();
        let img = Raster::zeros(grid);
        let h = grid.spacing();
        let bad_scales = WavefrontProbe::new([0.0, 0.0], [1.0, 0.0], 8.0 * h, vec![10.0]);
        assert!(wavefront_probe(&img, &bad_scales).is_err());
        let small = WavefrontProbe::new([0.0, 0.0], [1.0, 0.0], 2.0 * h, vec![10.0, 20.0]);
        assert!(wavefront_probe(&img, &small).is_err());
        let outside = WavefrontProbe::new([0.95, 0.0], [1.0, 0.0], 8.0 * h, vec![10.0, 20.0]);
        assert!(wavefront_probe(&img, &outside).is_err());
        let ok = WavefrontProbe::new([0.0, 0.0], [1.0, 0.0], 8.0 * h, vec![10.0, 20.0]);
        assert_eq!(wavefront_probe(&img, &ok).unwrap(), ProbeOutcome::NoSignal);
    }

    #[test]
    fn probe_calibrates_on_jumps_and_gaussians() {
        let grid = ImageGrid::new(512, 1.25).unwrap();
        for n in [[1.0, 0.0], [0.6, 0.8], [0.0, -1.0]] {
            let jump = Raster::from_fn(grid, |p| if dot(p, n) < 0.0 { 1.0 } else { 0.0 });
            let slope = wavefront_probe(&jump, &WavefrontProbe::calibrated(&grid, [0.0, 0.0], n))
                .unwrap()
                .slope()
                .unwrap();
            assert!((slope + 1.0).abs() <= 0.3, "normal {n:?}: slope {slope}");
        }
        let sigma: f64 = 0.02;
        let bump = Raster::from_fn(grid, |p| (-dot(p, p) / (2.0 * sigma * sigma)).exp());
        let slope = wavefront_probe(&bump, &WavefrontProbe::calibrated(&grid, [0.0, 0.0], [1.0, 0.0]))
            .unwrap()
            .slope()
            .unwrap();
        assert!(slope <= -4.0, "gaussian slope {slope}");
    }

    fn disk_recon(op: Operator, support: AngularSupport, n: usize, n_phi: usize) -> Raster {
        let igrid = ImageGrid::new(n, 1.25).unwrap();
        let sgrid = SinogramGrid::matched(PhiRange::Full, n_phi, &igrid).unwrap();
        let g = forward(Source::Phantom(&Phantom::unit_disk()), &WeightFunction::default(), sgrid).unwrap();
        reconstruct(&g, &ReconstructionConfig::new(op, support), igrid).unwrap()
    }

    #[test]
    fn lambda_report_sees_all_four_lines() {
        let r = disk_recon(Operator::Lambda, quarter(1).into(), 256, 360);
        let rep = artifact_report(&r, &Phantom::unit_disk(), &quarter(1), 4.0 * r.grid.spacing()).unwrap();
        assert_eq!(rep.lines.len(), 4);
        assert!(rep.per_line_strength.iter().all(|s| *s > 0.0 && s.is_finite()));
        assert!(rep.max_edge_strength() > 0.0);
    }

    #[test]
    fn full_data_control_has_weak_lines() {
        let r = disk_recon(Operator::B, AngularSupport::Full, 256, 360);
        let rep = artifact_report(&r, &Phantom::unit_disk(), &quarter(1), 4.0 * r.grid.spacing()).unwrap();
        assert!(rep.max_line_strength() < 0.05 * rep.max_edge_strength(), "{rep:?}");
    }

    #[test]
    fn report_of_zero_recon_is_zero() {
        let grid = ImageGrid::new(64, 1.25).unwrap();
        let r = artifact_report(&Raster::zeros(grid), &Phantom::unit_disk(), &quarter(1), 4.0 * grid.spacing())
            .unwrap();
        assert_eq!(r.lines.len(), 4);
        assert!(r.per_line_strength.iter().all(|s| *s == 0.0));
        assert_eq!(r.max_edge_strength(), 0.0);
        assert_eq!(r.ratio(), 0.0);
        assert!(artifact_report(&Raster::zeros(grid), &Phantom::unit_disk(), &quarter(1), grid.spacing())
            .is_err());
    }

    #[test]
    fn edge_strength_sees_only_visible_arcs() {
        // image equal to 1 only near the invisible points (±1, 0)
        let grid = ImageGrid::new(128, 1.25).unwrap();
        let img = Raster::from_fn(grid, |p| {
            if (p[0].abs() - 1.0).abs() < 0.05 && p[1].abs() < 0.05 {
                1.0
            } else {
                0.0
            }
        });
        let r = artifact_report(&img, &Phantom::unit_disk(), &quarter(1), 4.0 * grid.spacing()).unwrap();
        assert_eq!(r.max_edge_strength(), 0.0);
    }

    #[test]
    fn study_rejects_bad_k_lists() {
        let igrid = ImageGrid::new(32, 1.25).unwrap();
        let sgrid = SinogramGrid::matched(PhiRange::Full, 16, &igrid).unwrap();
        let cfg = ReconstructionConfig::new(Operator::Lambda, quarter(1).into());
        let disk = Phantom::unit_disk();
        let h = igrid.spacing();
        assert!(strength_vs_order_study(&disk, &cfg, &[2, 2], igrid, sgrid, 4.0 * h).is_err());
        assert!(strength_vs_order_study(&disk, &cfg, &[], igrid, sgrid, 4.0 * h).is_err());
        let full = ReconstructionConfig::new(Operator::Lambda, AngularSupport::Full);
        assert!(strength_vs_order_study(&disk, &full, &[1], igrid, sgrid, 4.0 * h).is_err());
    }

    #[test]
    fn energy_fraction_counts_line_tubes() {
        let grid = ImageGrid::new(64, 1.25).unwrap();
        let lines = predicted_artifact_lines(&Phantom::unit_disk(), &quarter(1));
        let on_line = Raster::from_fn(grid, |p| if lines[0].distance(p) < 0.02 { 1.0 } else { 0.0 });
        let f = line_energy_fraction(&on_line, &Phantom::empty(), &lines, 0.0, 0.05);
        assert_eq!(f, 1.0);
        let img = rasterize(&Phantom::new(vec![(Shape::disk([0.0, 0.0], 0.3), 1.0)]).unwrap(), grid, false)
            .unwrap();
        assert_eq!(line_energy_fraction(&img, &Phantom::empty(), &lines, 0.0, 0.05), 0.0);
    }
}
