//! Raster and sinogram containers, PGM previews and report files.
//!
//! Raw rasters: 16-byte header (`LTR1`, `n` as u32, `L` as f32, reserved u32)
//! followed by `n²` little-endian f32 values, row-major with row 0 at `y = −L`.
//! Sinograms: 40-byte header (`LTS1`, `n_phi`, `n_s`, reserved as u32, then
//! `phi0`, `dphi`, `s_max` as f64) followed by `n_phi·n_s` little-endian f32.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{ImageGrid, SinogramGrid};
use crate::microlocal::{ArtifactReport, StudyResult};
use crate::raster::Raster;
use crate::transform::Sinogram;

const RASTER_MAGIC: &[u8; 4] = b"LTR1";
const SINOGRAM_MAGIC: &[u8; 4] = b"LTS1";
pub const RASTER_HEADER_LEN: usize = 16;
pub const SINOGRAM_HEADER_LEN: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RasterFormat {
    #[serde(rename = "raw-f32")]
    RawF32,
    #[serde(rename = "pgm16")]
    Pgm16,
}

impl RasterFormat {
    pub fn extension(self) -> &'static str {
        match self {
            RasterFormat::RawF32 => "f32",
            RasterFormat::Pgm16 => "pgm",
        }
    }
}

impl fmt::Display for RasterFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RasterFormat::RawF32 => "raw-f32",
            RasterFormat::Pgm16 => "pgm16",
        })
    }
}

impl FromStr for RasterFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw-f32" | "raw" => Ok(RasterFormat::RawF32),
            "pgm16" | "pgm" => Ok(RasterFormat::Pgm16),
            other => Err(Error::Config(format!("unknown raster format {other:?}"))),
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    f.write_all(bytes).map_err(|e| Error::io(path, e))?;
    f.flush().map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    Ok(bytes)
}

fn format_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().expect("4 bytes"))
}

fn f64_at(b: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(b[at..at + 8].try_into().expect("8 bytes"))
}

fn push_f32s<'a>(out: &mut Vec<u8>, values: impl Iterator<Item = &'a f64>) {
    for v in values {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
}

fn f32s(b: &[u8]) -> Vec<f64> {
    b.chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
        .collect()
}

pub fn raster_bytes(img: &Raster) -> Vec<u8> {
    let n = img.grid.n();
    let mut out = Vec::with_capacity(RASTER_HEADER_LEN + 4 * n * n);
    out.extend_from_slice(RASTER_MAGIC);
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&(img.grid.extent() as f32).to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    push_f32s(&mut out, img.values.iter());
    out
}

/// 16-bit binary PGM, min–max normalized, top row at `y = +L`.
/// A constant image maps to 0 everywhere.
pub fn pgm16_bytes(img: &Raster) -> Vec<u8> {
    let n = img.grid.n();
    let lo = img.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = img.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let mut out = format!("P5\n{n} {n}\n65535\n").into_bytes();
    for iy in (0..n).rev() {
        for ix in 0..n {
            let v = if span > 0.0 {
                ((img.values[[iy, ix]] - lo) / span * 65535.0).round() as u16
            } else {
                0
            };
            out.extend_from_slice(&v.to_be_bytes());
        }
    }
    out
}

pub fn write_raster(img: &Raster, path: impl AsRef<Path>, format: RasterFormat) -> Result<()> {
    let path = path.as_ref();
    if !img.is_finite() {
        return Err(Error::Precondition(format!(
            "refusing to write non-finite raster to {}",
            path.display()
        )));
    }
    let bytes = match format {
        RasterFormat::RawF32 => raster_bytes(img),
        RasterFormat::Pgm16 => pgm16_bytes(img),
    };
    write_file(path, &bytes)
}

pub fn read_raster(path: impl AsRef<Path>) -> Result<Raster> {
    let path = path.as_ref();
    let b = read_file(path)?;
    if b.len() < RASTER_HEADER_LEN || &b[..4] != RASTER_MAGIC {
        return Err(format_err(path, "not a raw-f32 raster (bad magic)"));
    }
    let n = u32_at(&b, 4) as usize;
    let extent = f32::from_le_bytes(b[8..12].try_into().expect("4 bytes")) as f64;
    if b.len() != RASTER_HEADER_LEN + 4 * n * n {
        return Err(format_err(
            path,
            format!("expected {} bytes for n = {n}, found {}", RASTER_HEADER_LEN + 4 * n * n, b.len()),
        ));
    }
    let grid = ImageGrid::new(n, extent).map_err(|e| format_err(path, e.to_string()))?;
    let values = Array2::from_shape_vec((n, n), f32s(&b[RASTER_HEADER_LEN..])).expect("shape checked");
    Ok(Raster { grid, values })
}

pub fn sinogram_bytes(g: &Sinogram) -> Vec<u8> {
    let sg = g.grid;
    let mut out = Vec::with_capacity(SINOGRAM_HEADER_LEN + 4 * sg.n_phi() * sg.n_s());
    out.extend_from_slice(SINOGRAM_MAGIC);
    out.extend_from_slice(&(sg.n_phi() as u32).to_le_bytes());
    out.extend_from_slice(&(sg.n_s() as u32).to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    for v in [sg.phi0(), sg.dphi(), sg.s_max()] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    push_f32s(&mut out, g.values.iter());
    out
}

pub fn write_sinogram(g: &Sinogram, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if !g.is_finite() {
        return Err(Error::Precondition(format!(
            "refusing to write non-finite sinogram to {}",
            path.display()
        )));
    }
    write_file(path, &sinogram_bytes(g))
}

pub fn read_sinogram(path: impl AsRef<Path>) -> Result<Sinogram> {
    let path = path.as_ref();
    let b = read_file(path)?;
    if b.len() < SINOGRAM_HEADER_LEN || &b[..4] != SINOGRAM_MAGIC {
        return Err(format_err(path, "not a sinogram container (bad magic)"));
    }
    let n_phi = u32_at(&b, 4) as usize;
    let n_s = u32_at(&b, 8) as usize;
    let expected = SINOGRAM_HEADER_LEN + 4 * n_phi * n_s;
    if b.len() != expected {
        return Err(format_err(path, format!("expected {expected} bytes, found {}", b.len())));
    }
    let grid = SinogramGrid::from_header(n_phi, f64_at(&b, 16), f64_at(&b, 24), n_s, f64_at(&b, 32))
        .map_err(|e| format_err(path, e.to_string()))?;
    let values =
        Array2::from_shape_vec((n_phi, n_s), f32s(&b[SINOGRAM_HEADER_LEN..])).expect("shape checked");
    Ok(Sinogram { grid, values })
}

pub const REPORT_CSV_HEADER: &str = "k,line_id,generator_x,generator_y,j,strength,edge_strength,ratio";

/// One CSV row per artifact line of every report; `k` is empty for cutoffs
/// without a finite order.
pub fn reports_csv(reports: &[ArtifactReport]) -> String {
    let mut out = String::from(REPORT_CSV_HEADER);
    out.push('\n');
    for r in reports {
        let k = r.k.map(|k| k.to_string()).unwrap_or_default();
        let edge = r.max_edge_strength();
        for (id, (line, strength)) in r.lines.iter().zip(&r.per_line_strength).enumerate() {
            let ratio = if edge > 0.0 { strength / edge } else { 0.0 };
            out.push_str(&format!(
                "{k},{id},{:.9e},{:.9e},{},{strength:.9e},{edge:.9e},{ratio:.9e}\n",
                line.point_on_line[0], line.point_on_line[1], line.j
            ));
        }
    }
    out
}

pub fn write_reports_csv(reports: &[ArtifactReport], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_file(path, reports_csv(reports).as_bytes())
}

pub fn study_csv(study: &StudyResult) -> String {
    let mut out = String::from("k,max_line_strength,max_edge_strength,ratio\n");
    for r in &study.rows {
        out.push_str(&format!(
            "{},{:.9e},{:.9e},{:.9e}\n",
            r.k, r.max_line_strength, r.max_edge_strength, r.ratio
        ));
    }
    out
}

pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(value).map_err(|e| format_err(path, e.to_string()))?;
    write_file(path, text.as_bytes())
}

pub fn write_text(text: &str, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_file(path, text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PhiRange;

    #[test]
    fn zero_raster_file_size() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("z.f32");
        write_raster(&Raster::zeros(ImageGrid::new(8, 1.0).unwrap()), &p, RasterFormat::RawF32).unwrap();
        assert_eq!(std::fs::metadata(&p).unwrap().len(), 16 + 256);
    }

    #[test]
    fn raw_round_trip_is_bit_identical() {
        let grid = ImageGrid::new(16, 1.25).unwrap();
        let img = Raster::from_fn(grid, |p| ((p[0] * 7.0).sin() * p[1]) as f32 as f64);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.f32");
        write_raster(&img, &p, RasterFormat::RawF32).unwrap();
        let back = read_raster(&p).unwrap();
        assert_eq!(back.grid, grid);
        for (a, b) in img.values.iter().zip(back.values.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn constant_pgm_maps_to_zero() {
        let img = Raster::from_fn(ImageGrid::new(8, 1.0).unwrap(), |_| 3.5);
        let b = pgm16_bytes(&img);
        let header = b"P5\n8 8\n65535\n";
        assert_eq!(&b[..header.len()], header);
        assert_eq!(b.len(), header.len() + 128);
        assert!(b[header.len()..].iter().all(|v| *v == 0));
    }

    #[test]
    fn pgm_puts_positive_y_on_top() {
        let img = Raster::from_fn(ImageGrid::new(8, 1.0).unwrap(), |p| p[1]);
        let b = pgm16_bytes(&img);
        let data = &b[b.len() - 128..];
        assert_eq!(&data[..2], &[0xff, 0xff]);
        assert_eq!(&data[126..], &[0, 0]);
    }

    #[test]
    fn sinogram_round_trip() {
        for range in [PhiRange::Full, PhiRange::Half, PhiRange::Interval { start: 0.5, end: 2.0 }] {
            let grid = SinogramGrid::new(range, 12, 9, 1.5).unwrap();
            let g = Sinogram::from_fn(grid, |phi, s| (phi + s) as f32 as f64);
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("g.lts");
            write_sinogram(&g, &p).unwrap();
            assert_eq!(std::fs::metadata(&p).unwrap().len() as usize, 40 + 4 * 12 * 9);
            let back = read_sinogram(&p).unwrap();
            for i in 0..12 {
                assert!((back.grid.phi(i) - grid.phi(i)).abs() < 1e-12);
            }
            assert_eq!(back.values, g.values);
        }
    }

    #[test]
    fn rejects_bad_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad");
        std::fs::write(&p, b"nope").unwrap();
        assert!(matches!(read_raster(&p), Err(Error::Format { .. })));
        assert!(matches!(read_sinogram(&p), Err(Error::Format { .. })));
        let missing = dir.path().join("missing");
        match read_raster(&missing) {
            Err(Error::Io { path, .. }) => assert_eq!(path, missing),
            other => panic!("unexpected {other:?}"),
        }
        let mut img = Raster::zeros(ImageGrid::new(8, 1.0).unwrap());
        img.values[[0, 0]] = f64::NAN;
        assert!(write_raster(&img, dir.path().join("nan"), RasterFormat::RawF32).is_err());
    }

    #[test]
    fn format_names() {
        assert_eq!("raw-f32".parse::<RasterFormat>().unwrap(), RasterFormat::RawF32);
        assert_eq!(RasterFormat::Pgm16.to_string(), "pgm16");
        assert!("png".parse::<RasterFormat>().is_err());
    }
}
