//! Built-in checks of the Hilbert filter, the cutoff vanishing orders and the
//! principal symbols, each run twice with the raw outputs compared byte for byte.

use std::f64::consts::{FRAC_PI_4, PI, TAU};

use crate::filter::{apply_multipliers, hilbert, Multiplier, Operator, ReconstructionConfig};
use crate::geometry::{direction, vanishing_order_probe, AngularWindow, PhiRange, Side, SinogramGrid};
use crate::microlocal::symbol_eval;
use crate::transform::Sinogram;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelftestOutcome {
    pub checks: Vec<Check>,
    /// Both runs produced identical bytes.
    pub deterministic: bool,
    pub raw_len: usize,
}

impl SelftestOutcome {
    pub fn passed(&self) -> bool {
        self.deterministic && self.checks.iter().all(|c| c.passed)
    }
}

pub const HILBERT_TOL: f64 = 1e-3;
pub const FUSED_TOL: f64 = 1e-10;
pub const ORDER_TOL: f64 = 0.05;

const ENVELOPE_WIDTH: f64 = 0.2;
const CARRIER: f64 = 8.0 * PI;

fn envelope(s: f64) -> f64 {
    (-s * s / (2.0 * ENVELOPE_WIDTH * ENVELOPE_WIDTH)).exp()
}

/// Rows `w(s)·cos(ω_i s + φ)` for a few carriers, sampled on `[−1, 1]`.
pub fn oracle_rows() -> Sinogram {
    let grid = SinogramGrid::new(PhiRange::Full, 4, 513, 1.0).expect("valid grid");
    Sinogram::from_fn(grid, |phi, s| envelope(s) * (CARRIER * (1.0 + phi / TAU) * s).cos())
}

fn oracle_sin(phi: f64, s: f64) -> f64 {
    envelope(s) * (CARRIER * (1.0 + phi / TAU) * s).sin()
}

fn max_interior_error(g: &Sinogram, exact: impl Fn(f64, f64) -> f64) -> f64 {
    let grid = g.grid;
    let mut worst = 0.0f64;
    for i in 0..grid.n_phi() {
        for j in 0..grid.n_s() {
            let s = grid.s(j);
            if s.abs() <= 0.9 * grid.s_max() {
                worst = worst.max((g.values[[i, j]] - exact(grid.phi(i), s)).abs());
            }
        }
    }
    worst
}

fn push(raw: &mut Vec<u8>, values: impl IntoIterator<Item = f64>) {
    for v in values {
        raw.extend_from_slice(&v.to_le_bytes());
    }
}

fn run_once() -> (Vec<Check>, Vec<u8>) {
    let mut checks = Vec::new();
    let mut raw = Vec::new();

    let g = oracle_rows();
    let h = hilbert(&g, 2).expect("finite rows");
    let hh = hilbert(&h, 2).expect("finite rows");
    let e1 = max_interior_error(&h, oracle_sin);
    let e2 = max_interior_error(&hh, |phi, s| -envelope(s) * (CARRIER * (1.0 + phi / TAU) * s).cos());
    let chained = apply_multipliers(&g, &[Multiplier::Hilbert, Multiplier::Derivative], 2, false).expect("finite rows");
    let fused = apply_multipliers(&g, &[Multiplier::Ramp], 2, false).expect("finite rows");
    let e3 = chained
        .values
        .iter()
        .zip(fused.values.iter())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    push(&mut raw, h.values.iter().chain(hh.values.iter()).chain(fused.values.iter()).copied());
    checks.push(Check {
        name: "hilbert",
        passed: e1 < HILBERT_TOL && e2 < HILBERT_TOL && e3 < FUSED_TOL,
        detail: format!("H(cos) err {e1:.2e}, H^2+I err {e2:.2e}, fused-vs-chain {e3:.2e}"),
    });

    let mut worst = 0.0f64;
    let mut slopes = Vec::new();
    for k in 1..=4u32 {
        let w = AngularWindow::finite(FRAC_PI_4, 3.0 * FRAC_PI_4, k).expect("valid window");
        let hs: Vec<f64> = [1e-2, 1e-3, 1e-4].iter().map(|f| f * w.width()).collect();
        for side in [Side::Left, Side::Right] {
            let slope = vanishing_order_probe(&w, side, &hs).expect("valid offsets");
            worst = worst.max((slope - k as f64).abs());
            slopes.push(slope);
        }
    }
    push(&mut raw, slopes.iter().copied());
    checks.push(Check {
        name: "vanishing-order",
        passed: worst < ORDER_TOL,
        detail: format!("max |slope - k| = {worst:.2e} over k = 1..4, both ends"),
    });

    let w = AngularWindow::finite(FRAC_PI_4, 3.0 * FRAC_PI_4, 2).expect("valid window");
    let mut ok = true;
    let mut symbols = Vec::new();
    for op in [Operator::B, Operator::Lambda] {
        let cfg = ReconstructionConfig::new(op, w.into());
        for a in 0..360 {
            let xi = direction(a as f64 * TAU / 360.0);
            let base = symbol_eval(&cfg, [0.2, -0.1], xi).expect("nonzero xi");
            let scaled = symbol_eval(&cfg, [0.2, -0.1], [4.0 * xi[0], 4.0 * xi[1]]).expect("nonzero xi");
            // scaling by a power of two leaves the angle bit-identical
            let degree = if op == Operator::B { 1.0 } else { 4.0 };
            ok &= scaled == degree * base;
            ok &= !w.is_visible(xi) && !w.is_visible([-xi[0], -xi[1]]) || base > 0.0;
            symbols.push(base);
        }
    }
    push(&mut raw, symbols.iter().copied());
    checks.push(Check {
        name: "symbol",
        passed: ok,
        detail: "homogeneity of degree 0 (B) and 1 (Lambda), positivity on visible directions, 360 directions".into(),
    });
    (checks, raw)
}

pub fn selftest() -> SelftestOutcome {
    let (checks, first) = run_once();
    let (again, second) = run_once();
    SelftestOutcome {
        deterministic: first == second && checks == again,
        raw_len: first.len(),
        checks,
    }
}
