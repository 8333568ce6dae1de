//! Phantom → sinogram → reconstruction → artifact report, writing every
//! intermediate into the configured output directory.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::Error;
use crate::filter::reconstruct;
use crate::io::{
    study_csv, write_json, write_raster, write_reports_csv, write_sinogram, write_text, RasterFormat,
};
use crate::microlocal::{artifact_report, strength_vs_order_study, ArtifactReport, StudyResult};
use crate::phantom::rasterize;
use crate::raster::Raster;
use crate::transform::{forward, Sinogram, Source};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Phantom,
    Forward,
    Reconstruct,
    Analyze,
    Write,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Phantom => "phantom",
            Stage::Forward => "forward",
            Stage::Reconstruct => "reconstruct",
            Stage::Analyze => "analyze",
            Stage::Write => "write",
        })
    }
}

#[derive(Debug, thiserror::Error)]
#[error("stage {stage}: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T, PipelineError>;
}

impl<T> StageExt<T> for crate::error::Result<T> {
    fn stage(self, stage: Stage) -> Result<T, PipelineError> {
        self.map_err(|source| PipelineError { stage, source })
    }
}

pub const CONFIG_FILE: &str = "config.toml";
pub const SINOGRAM_FILE: &str = "sinogram.lts";
pub const REPORT_CSV: &str = "report.csv";
pub const REPORT_JSON: &str = "report.json";
pub const SUMMARY_JSON: &str = "summary.json";
pub const STUDY_CSV: &str = "study.csv";
pub const STUDY_JSON: &str = "study.json";

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub config_hash: String,
    pub operator: String,
    pub cutoff: String,
    pub n: usize,
    pub n_phi: usize,
    pub n_s: usize,
    pub recon_min: f64,
    pub recon_max: f64,
    pub max_line_strength: Option<f64>,
    pub max_edge_strength: Option<f64>,
    pub ratio: Option<f64>,
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct PipelineOutputs {
    pub recon: Raster,
    pub report: Option<ArtifactReport>,
    pub summary: RunSummary,
}

fn raster_path(dir: &Path, stem: &str, format: RasterFormat) -> PathBuf {
    dir.join(format!("{stem}.{}", format.extension()))
}

struct Writer<'a> {
    cfg: &'a RunConfig,
    files: Vec<PathBuf>,
}

impl<'a> Writer<'a> {
    fn open(cfg: &'a RunConfig) -> Result<Self, PipelineError> {
        let dir = &cfg.output_dir;
        std::fs::create_dir_all(dir)
            .map_err(|e| Error::io(dir.as_path(), e))
            .stage(Stage::Write)?;
        let mut w = Writer { cfg, files: Vec::new() };
        let path = dir.join(CONFIG_FILE);
        write_text(&cfg.normalized(), &path).stage(Stage::Write)?;
        w.files.push(path);
        Ok(w)
    }

    fn raster(&mut self, img: &Raster, stem: &str) -> Result<(), PipelineError> {
        let path = raster_path(&self.cfg.output_dir, stem, self.cfg.raster_format);
        write_raster(img, &path, self.cfg.raster_format).stage(Stage::Write)?;
        self.files.push(path);
        if self.cfg.preview && self.cfg.raster_format != RasterFormat::Pgm16 {
            let path = raster_path(&self.cfg.output_dir, stem, RasterFormat::Pgm16);
            write_raster(img, &path, RasterFormat::Pgm16).stage(Stage::Write)?;
            self.files.push(path);
        }
        Ok(())
    }

    fn sinogram(&mut self, g: &Sinogram) -> Result<(), PipelineError> {
        let path = self.cfg.output_dir.join(SINOGRAM_FILE);
        write_sinogram(g, &path).stage(Stage::Write)?;
        self.files.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, value: &T, name: &str) -> Result<(), PipelineError> {
        let path = self.cfg.output_dir.join(name);
        write_json(value, &path).stage(Stage::Write)?;
        self.files.push(path);
        Ok(())
    }

    fn reports_csv(&mut self, reports: &[ArtifactReport], name: &str) -> Result<(), PipelineError> {
        let path = self.cfg.output_dir.join(name);
        write_reports_csv(reports, &path).stage(Stage::Write)?;
        self.files.push(path);
        Ok(())
    }

    fn text(&mut self, text: &str, name: &str) -> Result<(), PipelineError> {
        let path = self.cfg.output_dir.join(name);
        write_text(text, &path).stage(Stage::Write)?;
        self.files.push(path);
        Ok(())
    }
}

/// Run every stage for `cfg`. Outputs are deterministic given the config.
pub fn run_pipeline(cfg: &RunConfig) -> Result<PipelineOutputs, PipelineError> {
    let mut out = Writer::open(cfg)?;
    let hash = cfg.hash();

    log::info!("rasterizing phantom on a {0}x{0} grid", cfg.image.n());
    let truth = rasterize(&cfg.phantom, cfg.image, true).stage(Stage::Phantom)?;
    out.raster(&truth, "phantom")?;

    log::info!("forward transform: {} angles x {} offsets", cfg.sinogram.n_phi(), cfg.sinogram.n_s());
    let sino = forward(Source::Phantom(&cfg.phantom), &cfg.recon.mu, cfg.sinogram).stage(Stage::Forward)?;
    out.sinogram(&sino)?;

    log::info!("reconstructing with {}", cfg.recon.operator);
    let recon = reconstruct(&sino, &cfg.recon, cfg.image).stage(Stage::Reconstruct)?;
    out.raster(&recon, "recon")?;

    let report = match cfg.window() {
        Some(window) => {
            log::info!("analyzing artifacts");
            let mut r = artifact_report(&recon, &cfg.phantom, &window, cfg.exclusion_radius)
                .stage(Stage::Analyze)?;
            r.metadata.config_hash = Some(hash.clone());
            out.reports_csv(std::slice::from_ref(&r), REPORT_CSV)?;
            out.json(&r, REPORT_JSON)?;
            Some(r)
        }
        None => None,
    };

    let lo = recon.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = recon.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut summary = RunSummary {
        config_hash: hash,
        operator: cfg.recon.operator.to_string(),
        cutoff: cfg.window().map(|w| w.kind().to_string()).unwrap_or_else(|| "full".into()),
        n: cfg.image.n(),
        n_phi: cfg.sinogram.n_phi(),
        n_s: cfg.sinogram.n_s(),
        recon_min: lo,
        recon_max: hi,
        max_line_strength: report.as_ref().map(|r| r.max_line_strength()),
        max_edge_strength: report.as_ref().map(|r| r.max_edge_strength()),
        ratio: report.as_ref().map(|r| r.ratio()),
        files: Vec::new(),
    };
    summary.files = out.files.clone();
    summary.files.push(cfg.output_dir.join(SUMMARY_JSON));
    out.json(&summary, SUMMARY_JSON)?;
    Ok(PipelineOutputs { recon, report, summary })
}

/// Strength-versus-order study over `cfg.k_list`: one report per `k`, a
/// combined CSV of all lines and the summary table.
pub fn run_study(cfg: &RunConfig) -> Result<StudyResult, PipelineError> {
    if cfg.window().is_none() {
        return Err(PipelineError {
            stage: Stage::Analyze,
            source: Error::Config("the study needs a limited-angle window, not cutoff = \"full\"".into()),
        });
    }
    let mut out = Writer::open(cfg)?;
    let hash = cfg.hash();
    log::info!("order study over k = {:?}", cfg.k_list);
    let mut study = strength_vs_order_study(
        &cfg.phantom,
        &cfg.recon,
        &cfg.k_list,
        cfg.image,
        cfg.sinogram,
        cfg.exclusion_radius,
    )
    .stage(Stage::Analyze)?;
    for r in &mut study.reports {
        r.metadata.config_hash = Some(hash.clone());
    }
    for (k, r) in cfg.k_list.iter().zip(&study.reports) {
        out.json(r, &format!("report_k{k}.json"))?;
    }
    out.reports_csv(&study.reports, REPORT_CSV)?;
    out.text(&study_csv(&study), STUDY_CSV)?;
    out.json(&study.rows, STUDY_JSON)?;
    Ok(study)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn small(dir: &Path, extra: &str) -> RunConfig {
        parse_config(&format!(
            "[image]\nn = 48\n[sinogram]\nn_phi = 64\n{extra}\n[output]\ndir = {:?}\n[[phantom]]\nshape = \"disk\"\nradius = 1.0\n",
            dir
        ))
        .unwrap()
    }

    #[test]
    fn baseline_run_writes_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(&dir.path().join("run"), "");
        let out = run_pipeline(&cfg).unwrap();
        assert!(out.report.is_none());
        for f in &out.summary.files {
            assert!(f.exists(), "{}", f.display());
        }
        assert!(dir.path().join("run/recon.f32").exists());
    }

    #[test]
    fn limited_angle_run_writes_report() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(dir.path(), "[window]\ncutoff = \"finite-order\"\n[reconstruction]\noperator = \"Lambda\"");
        let out = run_pipeline(&cfg).unwrap();
        let report = out.report.unwrap();
        assert_eq!(report.lines.len(), 4);
        assert_eq!(report.metadata.config_hash.as_deref(), Some(cfg.hash().as_str()));
        let csv = std::fs::read_to_string(dir.path().join(REPORT_CSV)).unwrap();
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn unwritable_output_fails_in_write_stage() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, b"x").unwrap();
        let cfg = small(&blocker.join("sub"), "");
        let err = run_pipeline(&cfg).unwrap_err();
        assert_eq!(err.stage, Stage::Write);
        assert!(err.to_string().starts_with("stage write"));
    }

    #[test]
    fn study_writes_one_report_per_k() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(
            dir.path(),
            "[window]\ncutoff = \"finite-order\"\n[analysis]\nk_list = [1, 2, 3]",
        );
        let study = run_study(&cfg).unwrap();
        assert_eq!(study.rows.len(), 3);
        for k in 1..=3 {
            assert!(dir.path().join(format!("report_k{k}.json")).exists());
        }
        let table = std::fs::read_to_string(dir.path().join(STUDY_CSV)).unwrap();
        assert_eq!(table.lines().count(), 4);
        let full = small(dir.path(), "");
        assert_eq!(run_study(&full).unwrap_err().stage, Stage::Analyze);
    }

    #[test]
    fn runs_are_deterministic() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let extra = "[window]\ncutoff = \"finite-order\"";
        run_pipeline(&small(a.path(), extra)).unwrap();
        run_pipeline(&small(b.path(), extra)).unwrap();
        for f in ["recon.f32", SINOGRAM_FILE, REPORT_CSV] {
            let x = std::fs::read(a.path().join(f)).unwrap();
            let y = std::fs::read(b.path().join(f)).unwrap();
            assert_eq!(x, y, "{f}");
        }
    }
}
