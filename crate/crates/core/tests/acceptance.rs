//! Acceptance criteria, one printed line each.
//!
//! Runs without the libtest harness so every line is visible in `cargo test`
//! output. The process exits 0 after reporting; set LIMITOMO_ACCEPTANCE_STRICT=1
//! to turn any failed criterion into a nonzero exit.

use std::f64::consts::{FRAC_PI_4, PI, TAU};
use std::time::Instant;

use limitomo::filter::{apply_multipliers, hilbert, Multiplier};
use limitomo::geometry::{direction, dot, vanishing_order_probe, Side};
use limitomo::microlocal::{
    line_energy_fraction, predicted_artifact_lines, strength_vs_order_study, symbol_eval, wavefront_probe,
    StudyResult, WavefrontProbe,
};
use limitomo::phantom::rasterize;
use limitomo::selftest::selftest;
use limitomo::transform::backproject;
use limitomo::weight::ExponentMode;
use limitomo::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

const EXTENT: f64 = 1.25;
const N_PHI: usize = 720;

fn grids(n: usize, n_phi: usize) -> (ImageGrid, SinogramGrid) {
    let igrid = ImageGrid::new(n, EXTENT).unwrap();
    let sgrid = SinogramGrid::matched(PhiRange::Full, n_phi, &igrid).unwrap();
    (igrid, sgrid)
}

fn disk_sinogram(sgrid: SinogramGrid) -> Sinogram {
    forward(Source::Phantom(&Phantom::unit_disk()), &WeightFunction::default(), sgrid).unwrap()
}

fn quarter_window(k: u32) -> AngularWindow {
    AngularWindow::finite(FRAC_PI_4, 3.0 * FRAC_PI_4, k).unwrap()
}

/// Relative L2 error of full-data `B` against the supersampled disk on the
/// interior eroded by two pixels.
fn exact_inversion_error(n: usize) -> f64 {
    let (igrid, sgrid) = grids(n, N_PHI);
    let recon = reconstruct(
        &disk_sinogram(sgrid),
        &ReconstructionConfig::new(Operator::B, AngularSupport::Full),
        igrid,
    )
    .unwrap();
    let disk = Phantom::unit_disk();
    let truth = rasterize(&disk, igrid, true).unwrap();
    let (mut num, mut den) = (0.0, 0.0);
    for iy in 0..n {
        for ix in 0..n {
            let p = igrid.center(ix, iy);
            if disk.value_at(p) > 0.0 && disk.boundary_distance(p) > 2.0 * igrid.spacing() {
                num += (recon.values[[iy, ix]] - truth.values[[iy, ix]]).powi(2);
                den += truth.values[[iy, ix]].powi(2);
            }
        }
    }
    (num / den).sqrt()
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let e512 = exact_inversion_error(512);
    let secs = t.elapsed().as_secs_f64();
    let e1024 = exact_inversion_error(1024);
    outcome(
        e512 < 0.05 && e1024 < e512,
        format!(
            "relative L2 error {e512:.3e} at n=512 ({secs:.1} s), {e1024:.3e} at n=1024 (h halved); need < 5e-2 and decreasing"
        ),
    )
}

fn envelope(s: f64) -> f64 {
    (-s * s / (2.0 * 0.2 * 0.2)).exp()
}

fn criterion_2() -> Outcome {
    let grid = SinogramGrid::new(PhiRange::Full, 3, 513, 1.0).unwrap();
    let omega = |phi: f64| 8.0 * PI + 2.0 * phi;
    let g = Sinogram::from_fn(grid, |phi, s| envelope(s) * (omega(phi) * s).cos());
    let h = hilbert(&g, 2).unwrap();
    let hh = hilbert(&h, 2).unwrap();
    let (mut e_h, mut e_hh) = (0.0f64, 0.0f64);
    for i in 0..grid.n_phi() {
        let phi = grid.phi(i);
        for j in 0..grid.n_s() {
            let s = grid.s(j);
            if s.abs() <= 0.9 {
                e_h = e_h.max((h.values[[i, j]] - envelope(s) * (omega(phi) * s).sin()).abs());
                e_hh = e_hh.max((hh.values[[i, j]] + g.values[[i, j]]).abs());
            }
        }
    }
    let rough = Sinogram::from_fn(grid, |phi, s| {
        (3.0 * s + phi).sin() + (s * s - 0.5).abs() + if s > 0.3 { 1.0 } else { 0.0 }
    });
    let chained = apply_multipliers(&rough, &[Multiplier::Hilbert, Multiplier::Derivative], 2, false).unwrap();
    let fused = apply_multipliers(&rough, &[Multiplier::Ramp], 2, false).unwrap();
    let e_fused = chained
        .values
        .iter()
        .zip(fused.values.iter())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    outcome(
        e_h < 1e-3 && e_hh < 1e-3 && e_fused < 1e-10,
        format!("max |H(w cos) - w sin| = {e_h:.2e}, max |H^2 g + g| = {e_hh:.2e}, fused vs H then d/ds {e_fused:.2e}"),
    )
}

fn criterion_3() -> Outcome {
    let mut worst = 0.0f64;
    let mut slopes = Vec::new();
    for k in 1..=4 {
        let w = quarter_window(k);
        let hs: Vec<f64> = [1e-2, 1e-3, 1e-4].iter().map(|f| f * w.width()).collect();
        for side in [Side::Left, Side::Right] {
            let slope = vanishing_order_probe(&w, side, &hs).unwrap();
            worst = worst.max((slope - k as f64).abs());
            slopes.push(format!("{slope:.4}"));
        }
    }
    outcome(
        worst <= 0.05,
        format!("slopes (left, right) for k=1..4: [{}]; max deviation {worst:.2e}", slopes.join(", ")),
    )
}

fn criterion_4() -> Outcome {
    let mut windows = vec![AngularWindow::indicator(FRAC_PI_4, 3.0 * FRAC_PI_4).unwrap()];
    windows.extend((1..=4).map(quarter_window));
    windows.push(AngularWindow::finite(0.3, 2.0, 2).unwrap());
    let weights = [
        (WeightFunction::default(), WeightFunction::default()),
        (
            WeightFunction::exponential(0.4, ExponentMode::Along).unwrap(),
            WeightFunction::exponential(-0.3, ExponentMode::Across).unwrap(),
        ),
    ];
    let x = [0.25, -0.4];
    let (mut homog_fail, mut pos_fail, mut checked) = (0, 0, 0);
    for w in &windows {
        for (mu, nu) in &weights {
            for op in [Operator::B, Operator::Lambda] {
                let cfg = ReconstructionConfig::new(op, (*w).into()).with_weights(mu.clone(), nu.clone());
                for a in 0..360 {
                    let xi = direction(a as f64 * TAU / 360.0);
                    let base = symbol_eval(&cfg, x, xi).unwrap();
                    for t in [0.25, 2.0, 64.0] {
                        let scaled = symbol_eval(&cfg, x, [t * xi[0], t * xi[1]]).unwrap();
                        let expect = if op == Operator::B { base } else { t * base };
                        homog_fail += (scaled != expect) as usize;
                    }
                    if w.is_visible(xi) || w.is_visible([-xi[0], -xi[1]]) {
                        checked += 1;
                        pos_fail += (base <= 0.0) as usize;
                    }
                }
            }
        }
    }
    outcome(
        homog_fail == 0 && pos_fail == 0 && checked > 0,
        format!(
            "{homog_fail} homogeneity mismatches (exact, t = 1/4, 2, 64), {pos_fail} non-positive of {checked} visible directions"
        ),
    )
}

fn lambda_fd(support: AngularSupport) -> ReconstructionConfig {
    ReconstructionConfig::new(Operator::Lambda, support).with_filter_impl(FilterImpl::FiniteDifference)
}

fn criterion_5() -> Outcome {
    let (igrid, sgrid) = grids(512, N_PHI);
    let w = quarter_window(1);
    let recon = reconstruct(&disk_sinogram(sgrid), &lambda_fd(w.into()), igrid).unwrap();
    let lines = predicted_artifact_lines(&Phantom::unit_disk(), &w);
    let h = igrid.spacing();
    let fraction = line_energy_fraction(&recon, &Phantom::unit_disk(), &lines, 3.0 * h, 3.0 * h);
    outcome(
        fraction >= 0.90 && lines.len() == 4,
        format!(
            "{:.1}% of energy outside the 3-px boundary tube lies within 3 px of the {} predicted lines; need >= 90%",
            100.0 * fraction,
            lines.len()
        ),
    )
}

fn criterion_6() -> Outcome {
    let igrid = ImageGrid::new(512, EXTENT).unwrap();
    let mut calib = Vec::new();
    for n in [[1.0, 0.0], [0.0, 1.0], [0.6, 0.8]] {
        let jump = Raster::from_fn(igrid, |p| if dot(p, n) < 0.0 { 1.0 } else { 0.0 });
        let probe = WavefrontProbe::calibrated(&igrid, [0.0, 0.0], n);
        calib.push(wavefront_probe(&jump, &probe).unwrap().slope().unwrap_or(f64::NAN));
    }
    let bump = Raster::from_fn(igrid, |p| (-dot(p, p) / (2.0 * 0.02f64.powi(2))).exp());
    let gauss = wavefront_probe(&bump, &WavefrontProbe::calibrated(&igrid, [0.0, 0.0], [1.0, 0.0]))
        .unwrap()
        .slope()
        .unwrap_or(f64::NAN);
    let calibrated = calib.iter().all(|s| (s + 1.0).abs() <= 0.3) && gauss <= -4.0;

    let (igrid, sgrid) = grids(512, N_PHI);
    let w = AngularWindow::infinite(FRAC_PI_4, 3.0 * FRAC_PI_4).unwrap();
    let recon = reconstruct(&disk_sinogram(sgrid), &lambda_fd(w.into()), igrid).unwrap();
    let visible = WavefrontProbe::calibrated(&igrid, [0.0, 1.0], [0.0, 1.0]);
    let invisible = WavefrontProbe::calibrated(&igrid, [1.0, 0.0], [1.0, 0.0]);
    // the invisible probe must sit off the tangent lines of the window edges
    let lines = predicted_artifact_lines(&Phantom::unit_disk(), &w);
    let clear = lines.iter().all(|l| l.distance(invisible.point) > invisible.window_radius)
        && !w.is_visible(invisible.direction)
        && !w.is_visible([-invisible.direction[0], -invisible.direction[1]]);
    let v = wavefront_probe(&recon, &visible).unwrap().slope().unwrap_or(f64::NAN);
    let i = wavefront_probe(&recon, &invisible).unwrap().slope().unwrap_or(f64::NAN);
    outcome(
        calibrated && clear && i <= v - 1.0,
        format!(
            "calibration: jump slopes [{:.3}, {:.3}, {:.3}] (need -1 +/- 0.3), gaussian {gauss:.3} (need <= -4); Lambda with infinite-order cutoff: visible {v:.3}, invisible {i:.3}, gap {:.3} (need >= 1)",
            calib[0],
            calib[1],
            calib[2],
            v - i
        ),
    )
}

fn strictly_decreasing(study: &StudyResult) -> bool {
    study.rows.windows(2).all(|r| r[1].ratio < r[0].ratio)
}

fn ratios(study: &StudyResult) -> String {
    study
        .rows
        .iter()
        .map(|r| format!("{:.4e}", r.ratio))
        .collect::<Vec<_>>()
        .join(", ")
}

fn criterion_7() -> Outcome {
    let (igrid, sgrid) = grids(512, N_PHI);
    let disk = Phantom::unit_disk();
    let excl = 4.0 * igrid.spacing();
    let w = quarter_window(1);
    let ks = [1, 2, 3, 4];
    let b = strength_vs_order_study(&disk, &ReconstructionConfig::new(Operator::B, w.into()), &ks, igrid, sgrid, excl)
        .unwrap();
    let lam = strength_vs_order_study(&disk, &lambda_fd(w.into()), &ks, igrid, sgrid, excl).unwrap();
    outcome(
        strictly_decreasing(&b) && strictly_decreasing(&lam),
        format!(
            "artifact/edge ratio for k=1..4: B [{}] {}, Lambda [{}] {}",
            ratios(&b),
            if strictly_decreasing(&b) { "decreasing" } else { "NOT decreasing" },
            ratios(&lam),
            if strictly_decreasing(&lam) { "decreasing" } else { "NOT decreasing" },
        ),
    )
}

/// Smooth, positive, 2π-periodic in φ and concentrated in s, so the pairing
/// with a nonnegative phantom cannot cancel.
fn random_smooth(grid: SinogramGrid, rng: &mut ChaCha8Rng) -> Sinogram {
    let terms: Vec<(f64, f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.random_range(0.2..1.0),
                rng.random_range(0..4) as f64,
                rng.random_range(0.0..TAU),
                rng.random_range(-0.8..0.8),
                rng.random_range(0.1..0.4),
            )
        })
        .collect();
    Sinogram::from_fn(grid, |phi, s| {
        terms
            .iter()
            .map(|(a, m, c, s0, w)| a * (1.0 + 0.5 * (m * phi + c).cos()) * (-(s - s0).powi(2) / (2.0 * w * w)).exp())
            .sum()
    })
}

fn criterion_8() -> Outcome {
    let (igrid, sgrid) = grids(256, N_PHI);
    let mu = WeightFunction::exponential(0.3, ExponentMode::Along).unwrap();
    let phantoms = [
        Phantom::unit_disk(),
        Phantom::new(vec![
            (Shape::ellipse([0.1, -0.2], [0.7, 0.4], 0.5), 1.0),
            (Shape::clipped_disk([-0.3, 0.3], 0.4, [1.0, 1.0], 0.1), 0.5),
        ])
        .unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(20240607);
    let mut worst = 0.0f64;
    for f in &phantoms {
        let rf = forward(Source::Phantom(f), &mu, sgrid).unwrap();
        let raster = rasterize(f, igrid, true).unwrap();
        for _ in 0..3 {
            let g = random_smooth(sgrid, &mut rng);
            let lhs = rf.inner(&g).unwrap();
            let bp = backproject(&g, &mu, &AngularSupport::Full, igrid).unwrap();
            let h2 = igrid.spacing().powi(2);
            let rhs: f64 = raster.values.iter().zip(bp.values.iter()).map(|(a, b)| a * b).sum::<f64>() * h2;
            worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()));
        }
    }
    outcome(
        worst < 0.01,
        format!("max relative duality gap {worst:.3e} over 2 phantoms x 3 smooth g (n=256, n_phi=720); need < 1e-2"),
    )
}

fn criterion_9() -> Outcome {
    let out = selftest();
    let failed: Vec<&str> = out.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    outcome(
        out.passed(),
        format!(
            "selftest reran {} checks twice: {} raw bytes {}; failed checks: {:?}",
            out.checks.len(),
            out.raw_len,
            if out.deterministic { "identical" } else { "DIFFER" },
            failed
        ),
    )
}

fn main() {
    // `cargo test -- --list` and filters are passed through by cargo; honour listing only
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("exact inversion, full data", criterion_1),
        ("Hilbert oracle and fused filter", criterion_2),
        ("cutoff vanishing order", criterion_3),
        ("symbol homogeneity and positivity", criterion_4),
        ("artifact geometry", criterion_5),
        ("visible vs invisible decay", criterion_6),
        ("strength vs order", criterion_7),
        ("discrete adjointness", criterion_8),
        ("determinism", criterion_9),
    ];
    let start = Instant::now();
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = run();
        failures += (!o.passed) as usize;
        println!(
            "criterion {} [{}]: {} ({:.1} s) {}",
            i + 1,
            name,
            if o.passed { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!(
        "acceptance: {} of {} criteria passed in {:.1} s",
        criteria.len() - failures,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failures > 0 && std::env::var_os("LIMITOMO_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
