//! Run configuration: a TOML file with flat sections and `[[phantom]]` entries.
//!
//! ```toml
//! [image]
//! n = 512
//! extent = 1.25
//!
//! [window]
//! cutoff = "finite-order"   # full | indicator | finite-order | infinite-order
//! phi1_deg = 45
//! phi2_deg = 135
//! k = 1
//!
//! [reconstruction]
//! operator = "Lambda"
//!
//! [[phantom]]
//! shape = "disk"
//! center = [0.0, 0.0]
//! radius = 1.0
//! ```
//!
//! Missing keys take their defaults; [`RunConfig::normalized`] echoes every
//! value back, including the derived sinogram offsets.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::filter::{FilterImpl, Operator, ReconstructionConfig, DEFAULT_PAD_FACTOR};
use crate::geometry::{AngularSupport, AngularWindow, CutoffKind, ImageGrid, PhiRange, SinogramGrid};
use crate::io::RasterFormat;
use crate::microlocal::DEFAULT_EXCLUSION_PIXELS;
use crate::phantom::{Phantom, Shape};
use crate::weight::{ExponentMode, WeightFunction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImageSection {
    pub n: usize,
    pub extent: f64,
}

impl Default for ImageSection {
    fn default() -> Self {
        Self { n: 512, extent: 1.25 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SinogramSection {
    pub n_phi: usize,
    /// `full` for `[0, 2π)` or `half` for `[0, π)`.
    pub range: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_s: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_max: Option<f64>,
}

impl Default for SinogramSection {
    fn default() -> Self {
        Self {
            n_phi: 720,
            range: "full".into(),
            n_s: None,
            s_max: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowSection {
    pub cutoff: String,
    pub phi1_deg: f64,
    pub phi2_deg: f64,
    pub k: u32,
}

impl Default for WindowSection {
    fn default() -> Self {
        Self {
            cutoff: "full".into(),
            phi1_deg: 45.0,
            phi2_deg: 135.0,
            k: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeightSection {
    /// `constant` or `exponential`.
    pub kind: String,
    pub value: f64,
    pub lambda: f64,
    /// `along` (`x·θ⊥`) or `across` (`x·θ`).
    pub mode: String,
}

impl Default for WeightSection {
    fn default() -> Self {
        Self {
            kind: "constant".into(),
            value: 1.0,
            lambda: 0.0,
            mode: "along".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReconstructionSection {
    pub operator: String,
    pub filter_impl: String,
    pub pad_factor: usize,
    pub apodize: bool,
}

impl Default for ReconstructionSection {
    fn default() -> Self {
        Self {
            operator: "B".into(),
            filter_impl: "spectral".into(),
            pad_factor: DEFAULT_PAD_FACTOR,
            apodize: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    pub exclusion_px: f64,
    pub k_list: Vec<u32>,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            exclusion_px: DEFAULT_EXCLUSION_PIXELS,
            k_list: vec![1, 2, 3, 4],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub raster_format: String,
    /// Also write 16-bit PGM previews next to the raw rasters.
    pub preview: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            raster_format: "raw-f32".into(),
            preview: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeEntry {
    /// `disk`, `ellipse` or `clipped-disk`.
    pub shape: String,
    #[serde(default)]
    pub center: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub semi_axes: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normal: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<f64>,
    #[serde(default = "one")]
    pub density: f64,
}

fn one() -> f64 {
    1.0
}

/// File contents with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    /// Reserved; the pipeline is deterministic.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub image: ImageSection,
    #[serde(default)]
    pub sinogram: SinogramSection,
    #[serde(default)]
    pub window: WindowSection,
    #[serde(default)]
    pub mu: WeightSection,
    #[serde(default)]
    pub nu: WeightSection,
    #[serde(default)]
    pub reconstruction: ReconstructionSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub phantom: Vec<ShapeEntry>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub file: ConfigFile,
    pub phantom: Phantom,
    pub image: ImageGrid,
    pub sinogram: SinogramGrid,
    pub recon: ReconstructionConfig,
    /// Exclusion radius of artifact reports, in length units.
    pub exclusion_radius: f64,
    pub k_list: Vec<u32>,
    pub output_dir: PathBuf,
    pub raster_format: RasterFormat,
    pub preview: bool,
}

impl RunConfig {
    pub fn window(&self) -> Option<AngularWindow> {
        self.recon.support.window().copied()
    }

    /// Normalized TOML dump with all defaults filled in.
    pub fn normalized(&self) -> String {
        toml::to_string(&self.file).expect("config sections serialize")
    }

    /// SHA-256 of the normalized dump, hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.normalized().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

fn field_err(field: &str, e: Error) -> Error {
    let msg = match e {
        Error::InvalidWindow(m)
        | Error::InvalidGrid(m)
        | Error::InvalidPhantom(m)
        | Error::InvalidWeight(m)
        | Error::Precondition(m)
        | Error::GridMismatch(m)
        | Error::Config(m) => m,
        other => other.to_string(),
    };
    Error::Config(format!("{field}: {msg}"))
}

fn weight(section: &WeightSection, name: &str) -> Result<WeightFunction> {
    match section.kind.as_str() {
        "constant" => WeightFunction::constant(section.value).map_err(|e| field_err(&format!("{name}.value"), e)),
        "exponential" => {
            let mode = match section.mode.as_str() {
                "along" => ExponentMode::Along,
                "across" => ExponentMode::Across,
                other => {
                    return Err(Error::Config(format!(
                        "{name}.mode: expected \"along\" or \"across\", got {other:?}"
                    )))
                }
            };
            WeightFunction::exponential(section.lambda, mode).map_err(|e| field_err(&format!("{name}.lambda"), e))
        }
        other => Err(Error::Config(format!(
            "{name}.kind: expected \"constant\" or \"exponential\", got {other:?}"
        ))),
    }
}

fn shape(entry: &ShapeEntry, i: usize) -> Result<Shape> {
    let need = |v: Option<f64>, key: &str| {
        v.ok_or_else(|| Error::Config(format!("phantom[{i}].{key} is required for shape {:?}", entry.shape)))
    };
    match entry.shape.as_str() {
        "disk" => Ok(Shape::disk(entry.center, need(entry.radius, "radius")?)),
        "ellipse" => {
            let axes = entry
                .semi_axes
                .ok_or_else(|| Error::Config(format!("phantom[{i}].semi_axes is required for shape \"ellipse\"")))?;
            Ok(Shape::ellipse(entry.center, axes, entry.angle_deg.unwrap_or(0.0).to_radians()))
        }
        "clipped-disk" => {
            let normal = entry
                .normal
                .ok_or_else(|| Error::Config(format!("phantom[{i}].normal is required for shape \"clipped-disk\"")))?;
            Ok(Shape::clipped_disk(
                entry.center,
                need(entry.radius, "radius")?,
                normal,
                need(entry.offset, "offset")?,
            ))
        }
        other => Err(Error::Config(format!(
            "phantom[{i}].shape: expected disk, ellipse or clipped-disk, got {other:?}"
        ))),
    }
}

fn validate(mut file: ConfigFile) -> Result<RunConfig> {
    let image = ImageGrid::new(file.image.n, file.image.extent).map_err(|e| field_err("image", e))?;
    let h = image.spacing();
    let min_s_max = std::f64::consts::SQRT_2 * image.extent();

    let range = match file.sinogram.range.as_str() {
        "full" => PhiRange::Full,
        "half" => PhiRange::Half,
        other => {
            return Err(Error::Config(format!(
                "sinogram.range: expected \"full\" or \"half\", got {other:?}"
            )))
        }
    };
    let s_max = file.sinogram.s_max.unwrap_or(min_s_max);
    if !(s_max >= min_s_max * (1.0 - 1e-12)) {
        return Err(Error::Config(format!(
            "sinogram.s_max = {s_max} is below sqrt(2)*L = {min_s_max}; lines through the image corners would be missing"
        )));
    }
    let n_s = file
        .sinogram
        .n_s
        .unwrap_or(2 * (s_max / h).ceil() as usize + 1);
    let sinogram = SinogramGrid::new(range, file.sinogram.n_phi, n_s, s_max).map_err(|e| field_err("sinogram", e))?;
    file.sinogram.s_max = Some(s_max);
    file.sinogram.n_s = Some(n_s);

    let support = match file.window.cutoff.as_str() {
        "full" => AngularSupport::Full,
        name => {
            let kind: CutoffKind = name.parse().map_err(|e| field_err("window.cutoff", e))?;
            let w = AngularWindow::new(
                file.window.phi1_deg.to_radians(),
                file.window.phi2_deg.to_radians(),
                kind,
                file.window.k,
            )
            .map_err(|e| field_err("window", e))?;
            if range == PhiRange::Half {
                return Err(Error::Config(
                    "sinogram.range: a limited-angle window needs the full [0, 2pi) sinogram".into(),
                ));
            }
            AngularSupport::Window(w)
        }
    };

    let operator: Operator = file
        .reconstruction
        .operator
        .parse()
        .map_err(|e| field_err("reconstruction.operator", e))?;
    let filter_impl: FilterImpl = file
        .reconstruction
        .filter_impl
        .parse()
        .map_err(|e| field_err("reconstruction.filter_impl", e))?;
    let mut recon = ReconstructionConfig::new(operator, support)
        .with_filter_impl(filter_impl)
        .with_weights(weight(&file.mu, "mu")?, weight(&file.nu, "nu")?);
    recon.pad_factor = file.reconstruction.pad_factor;
    recon.apodize = file.reconstruction.apodize;
    recon.validate().map_err(|e| field_err("reconstruction.pad_factor", e))?;

    if file.phantom.is_empty() {
        return Err(Error::Config("at least one [[phantom]] entry is required".into()));
    }
    let shapes = file
        .phantom
        .iter()
        .enumerate()
        .map(|(i, e)| shape(e, i).map(|s| (s, e.density)))
        .collect::<Result<Vec<_>>>()?;
    let phantom = Phantom::new(shapes).map_err(|e| field_err("phantom", e))?;
    phantom.check_inside(&image).map_err(|e| field_err("phantom", e))?;

    if !(file.analysis.exclusion_px >= 2.0) {
        return Err(Error::Config(format!(
            "analysis.exclusion_px = {} must be at least 2",
            file.analysis.exclusion_px
        )));
    }
    if file.analysis.k_list.is_empty() || file.analysis.k_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("analysis.k_list must be nonempty and strictly increasing".into()));
    }
    if file.analysis.k_list[0] < 1 {
        return Err(Error::Config("analysis.k_list entries must be at least 1".into()));
    }
    let raster_format: RasterFormat = file
        .output
        .raster_format
        .parse()
        .map_err(|e| field_err("output.raster_format", e))?;

    Ok(RunConfig {
        phantom,
        image,
        sinogram,
        recon,
        exclusion_radius: file.analysis.exclusion_px * h,
        k_list: file.analysis.k_list.clone(),
        output_dir: file.output.dir.clone(),
        raster_format,
        preview: file.output.preview,
        file,
    })
}

/// Parse and validate configuration text.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
            .unwrap_or(0);
        Error::Parse {
            line,
            msg: e.message().trim().to_string(),
        }
    })?;
    validate(file)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}
