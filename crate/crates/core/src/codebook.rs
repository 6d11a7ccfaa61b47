//! Hierarchical constant-amplitude beamforming codebooks.
//!
//! Layer `k` of an `(N, M)` codebook holds `M^k` codewords; codeword `(k, n)`
//! covers the slice `[-1 + 2n/M^k, -1 + 2(n+1)/M^k)` and its `M` children at
//! layer `k + 1` tile that slice. Every active weight has amplitude `1/√N`.
//!
//! Two generators are provided:
//!
//! * [`build_deact`] widens beams by switching antennas off: codeword `(k, n)`
//!   drives only the first `M^k` elements.
//! * [`build_bmw_ss`] keeps all `N` antennas on and shapes the wide beam with
//!   phase only. The layer-`k` prototype is found by alternating projection
//!   between a flat-top target over the slice and the unit-modulus set, seeded
//!   from quadratic-phase (chirp) profiles; the other codewords of the layer are
//!   phase-ramped copies, so all beams of a layer share one pattern shape.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::array_channel::{check_angle, steering_unchecked, ArrayGeometry};
use crate::error::{Error, Result};

/// Grid used by the codebook quality checks.
pub const CHECK_GRID: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CodebookKind {
    #[serde(rename = "deact")]
    Deact,
    #[serde(rename = "bmw-ss")]
    BmwSs,
}

impl CodebookKind {
    pub fn build(self, n_antennas: usize, branching: usize) -> Result<HierCodebook> {
        match self {
            CodebookKind::Deact => build_deact(n_antennas, branching),
            CodebookKind::BmwSs => build_bmw_ss(n_antennas, branching),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CodebookKind::Deact => "deact",
            CodebookKind::BmwSs => "bmw-ss",
        }
    }
}

impl std::fmt::Display for CodebookKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for CodebookKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "deact" => Ok(CodebookKind::Deact),
            "bmw-ss" | "bmwss" => Ok(CodebookKind::BmwSs),
            other => Err(Error::domain(
                "codebook kind",
                format!("unknown codebook `{other}` (expected deact or bmw-ss)"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Codeword {
    pub weights: DVector<Complex64>,
    pub active_mask: Vec<bool>,
    pub layer: usize,
    pub index: usize,
}

impl Codeword {
    pub fn n_antennas(&self) -> usize {
        self.weights.len()
    }

    pub fn n_active(&self) -> usize {
        self.active_mask.iter().filter(|&&a| a).count()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.weights.norm_squared()
    }

    /// Linear beam gain `|√N a(N, ω)^H w|²` at one angle (half-wavelength ULA).
    pub fn gain(&self, omega: f64) -> f64 {
        array_factor(self.weights.as_slice(), omega).norm_sqr()
    }
}

/// `Σ_n w_n e^{-iπnω}`.
fn array_factor(w: &[Complex64], omega: f64) -> Complex64 {
    let step = Complex64::from_polar(1.0, -PI * omega);
    // Horner from the last element keeps this a single pass
    w.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &x| acc * step + x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HierCodebook {
    n_antennas: usize,
    branching: usize,
    layers: Vec<Vec<Codeword>>,
}

impl HierCodebook {
    pub fn n_antennas(&self) -> usize {
        self.n_antennas
    }

    pub fn branching(&self) -> usize {
        self.branching
    }

    /// `S = log_M N`, the index of the bottom (pencil-beam) layer.
    pub fn depth(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn layers(&self) -> &[Vec<Codeword>] {
        &self.layers
    }

    pub fn layer(&self, k: usize) -> &[Codeword] {
        &self.layers[k]
    }

    pub fn codeword(&self, k: usize, n: usize) -> &Codeword {
        &self.layers[k][n]
    }

    pub fn bottom(&self) -> &[Codeword] {
        &self.layers[self.depth()]
    }

    /// Indices of the children of `(k, n)` at layer `k + 1`.
    pub fn children(&self, n: usize) -> std::ops::Range<usize> {
        n * self.branching..(n + 1) * self.branching
    }

    pub fn geometry(&self) -> ArrayGeometry {
        ArrayGeometry::ula(self.n_antennas).expect("codebooks have at least one antenna")
    }
}

/// Returns `S` with `M^S = N`, or a domain error when `N` is not a power of `M`.
pub fn layer_count(n_antennas: usize, branching: usize) -> Result<usize> {
    if branching < 2 {
        return Err(Error::domain("codebook", format!("branching M must be >= 2, got {branching}")));
    }
    if n_antennas == 0 {
        return Err(Error::domain("codebook", "N must be >= 1"));
    }
    let mut s = 0;
    let mut p = 1usize;
    while p < n_antennas {
        p = p
            .checked_mul(branching)
            .ok_or_else(|| Error::domain("codebook", "N too large"))?;
        s += 1;
    }
    if p != n_antennas {
        return Err(Error::domain(
            "codebook",
            format!("N = {n_antennas} is not a power of M = {branching}"),
        ));
    }
    Ok(s)
}

/// `[lo, hi)` covered by codeword `n` of a layer with `width_count` codewords.
pub fn coverage_slice(width_count: usize, n: usize) -> (f64, f64) {
    let k = width_count as f64;
    (-1.0 + 2.0 * n as f64 / k, -1.0 + 2.0 * (n + 1) as f64 / k)
}

pub fn slice_center(width_count: usize, n: usize) -> f64 {
    -1.0 + (2 * n + 1) as f64 / width_count as f64
}

/// Index of the slice containing `omega` among `width_count` equal slices.
pub fn slice_index(omega: f64, width_count: usize) -> usize {
    let i = ((omega + 1.0) * width_count as f64 / 2.0).floor();
    (i.max(0.0) as usize).min(width_count - 1)
}

/// Bottom-layer index whose steering angle is nearest to `omega`.
pub fn nearest_grid_index(omega: f64, n_antennas: usize) -> usize {
    slice_index(omega, n_antennas)
}

fn steered(n_antennas: usize, active: usize, center: f64, proto: Option<&[Complex64]>) -> DVector<Complex64> {
    let amp = 1.0 / (n_antennas as f64).sqrt();
    DVector::from_fn(n_antennas, |i, _| {
        if i >= active {
            return Complex64::new(0.0, 0.0);
        }
        let ramp = Complex64::from_polar(amp, PI * i as f64 * center);
        match proto {
            Some(p) => ramp * p[i],
            None => ramp,
        }
    })
}

pub fn build_deact(n_antennas: usize, branching: usize) -> Result<HierCodebook> {
    let depth = layer_count(n_antennas, branching)?;
    let mut layers = Vec::with_capacity(depth + 1);
    let mut width = 1usize;
    for k in 0..=depth {
        let layer = (0..width)
            .map(|n| Codeword {
                weights: steered(n_antennas, width, slice_center(width, n), None),
                active_mask: (0..n_antennas).map(|i| i < width).collect(),
                layer: k,
                index: n,
            })
            .collect();
        layers.push(layer);
        width *= branching;
    }
    Ok(HierCodebook {
        n_antennas,
        branching,
        layers,
    })
}

pub fn build_bmw_ss(n_antennas: usize, branching: usize) -> Result<HierCodebook> {
    let depth = layer_count(n_antennas, branching)?;
    let mut layers = Vec::with_capacity(depth + 1);
    let mut width = 1usize;
    for k in 0..=depth {
        let proto = if width == n_antennas {
            vec![Complex64::new(1.0, 0.0); n_antennas]
        } else {
            WideBeamDesigner::new(n_antennas, width).design()
        };
        let layer = (0..width)
            .map(|n| Codeword {
                weights: steered(n_antennas, n_antennas, slice_center(width, n), Some(&proto)),
                active_mask: vec![true; n_antennas],
                layer: k,
                index: n,
            })
            .collect();
        layers.push(layer);
        width *= branching;
    }
    Ok(HierCodebook {
        n_antennas,
        branching,
        layers,
    })
}

/// Phase-only synthesis of a flat-top beam of width `2/width_count` centred at 0.
///
/// Works on the de-steered unit-modulus profile `v`; the pattern over the
/// offset grid `Δ_i = -1 + 2i/G` is `A(Δ_i) = Σ_n v_n (-1)^n e^{-2πi·n·i/G}`,
/// i.e. a zero-padded FFT.
struct WideBeamDesigner {
    n: usize,
    grid: usize,
    inside: Vec<bool>,
    target_amp: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl WideBeamDesigner {
    const ITERATIONS: usize = 200;
    const CHIRP_RATES: [f64; 8] = [0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0];
    const LEAKAGE_WEIGHTS: [f64; 2] = [0.0, 0.3];

    fn new(n: usize, width_count: usize) -> Self {
        let grid = 8 * n;
        let half_width = 1.0 / width_count as f64;
        let inside = (0..grid)
            .map(|i| (-1.0 + 2.0 * i as f64 / grid as f64).abs() <= half_width + 1e-12)
            .collect();
        let mut planner = FftPlanner::new();
        Self {
            n,
            grid,
            inside,
            // flat level that spends all of the array power inside the slice
            target_amp: ((width_count * n) as f64).sqrt(),
            fwd: planner.plan_fft_forward(grid),
            inv: planner.plan_fft_inverse(grid),
        }
    }

    fn pattern(&self, v: &[Complex64], buf: &mut [Complex64]) {
        buf.fill(Complex64::new(0.0, 0.0));
        for (i, x) in v.iter().enumerate() {
            buf[i] = if i % 2 == 0 { *x } else { -*x };
        }
        self.fwd.process(buf);
    }

    /// min in-slice gain over peak gain, both linear.
    fn score(&self, pattern: &[Complex64]) -> f64 {
        let mut min_in = f64::INFINITY;
        let mut peak = 0.0f64;
        for (a, &inside) in pattern.iter().zip(&self.inside) {
            let g = a.norm_sqr();
            peak = peak.max(g);
            if inside {
                min_in = min_in.min(g);
            }
        }
        if peak > 0.0 {
            min_in / peak
        } else {
            0.0
        }
    }

    fn run(&self, init: Vec<Complex64>, symmetric: bool, leakage: f64) -> (f64, Vec<Complex64>) {
        let mut v = init;
        let mut buf = vec![Complex64::new(0.0, 0.0); self.grid];
        let mut best = (f64::NEG_INFINITY, v.clone());
        for _ in 0..Self::ITERATIONS {
            self.pattern(&v, &mut buf);
            for (a, &inside) in buf.iter_mut().zip(&self.inside) {
                *a = if inside {
                    let mag = a.norm();
                    if mag > 0.0 {
                        *a * (self.target_amp / mag)
                    } else {
                        Complex64::new(self.target_amp, 0.0)
                    }
                } else {
                    *a * leakage
                };
            }
            // least-squares fit of the first N taps, then project to unit modulus
            self.inv.process(&mut buf);
            let mut next: Vec<Complex64> = (0..self.n)
                .map(|i| if i % 2 == 0 { buf[i] } else { -buf[i] })
                .collect();
            if symmetric {
                let rev: Vec<Complex64> = next.iter().rev().copied().collect();
                for (x, r) in next.iter_mut().zip(rev) {
                    *x = (*x + r) * 0.5;
                }
            }
            for x in next.iter_mut() {
                *x = if x.norm() > 0.0 {
                    *x / x.norm()
                } else {
                    Complex64::new(1.0, 0.0)
                };
            }
            v = next;
            self.pattern(&v, &mut buf);
            let s = self.score(&buf);
            if s > best.0 {
                best = (s, v.clone());
            }
        }
        best
    }

    fn design(&self) -> Vec<Complex64> {
        let n = self.n as f64;
        let width = (self.target_amp * self.target_amp) / n;
        let mid = (n - 1.0) / 2.0;
        let mut best: Option<(f64, Vec<Complex64>)> = None;
        for &rate in &Self::CHIRP_RATES {
            let init: Vec<Complex64> = (0..self.n)
                .map(|i| {
                    let x = i as f64 - mid;
                    Complex64::from_polar(1.0, PI * rate * x * x / (width * n))
                })
                .collect();
            for symmetric in [false, true] {
                for &leakage in &Self::LEAKAGE_WEIGHTS {
                    let cand = self.run(init.clone(), symmetric, leakage);
                    if best.as_ref().map_or(true, |b| cand.0 > b.0) {
                        best = Some(cand);
                    }
                }
            }
        }
        best.expect("at least one candidate").1
    }
}

/// Sampled gain pattern over a uniform grid of `[-1, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamPattern {
    pub angle_grid: Vec<f64>,
    pub gain_db: Vec<f64>,
}

impl BeamPattern {
    pub fn peak_db(&self) -> f64 {
        self.gain_db.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// CSV with header `omega,gain_db`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("omega,gain_db\n");
        for (w, g) in self.angle_grid.iter().zip(&self.gain_db) {
            out.push_str(&format!("{w},{g}\n"));
        }
        out
    }
}

pub fn uniform_grid(grid_size: usize) -> Vec<f64> {
    (0..grid_size)
        .map(|i| -1.0 + 2.0 * i as f64 / grid_size as f64)
        .collect()
}

fn to_db(g: f64) -> f64 {
    if g > 0.0 {
        10.0 * g.log10()
    } else {
        f64::NEG_INFINITY
    }
}

pub fn beam_pattern(w: &Codeword, grid_size: usize) -> Result<BeamPattern> {
    if grid_size < 2 * w.n_antennas() {
        return Err(Error::domain(
            "beam pattern",
            format!("grid_size {grid_size} < 2N = {}", 2 * w.n_antennas()),
        ));
    }
    let angle_grid = uniform_grid(grid_size);
    let gain_db = angle_grid.iter().map(|&o| to_db(w.gain(o))).collect();
    Ok(BeamPattern { angle_grid, gain_db })
}

fn linear_gains(w: &Codeword, grid: &[f64]) -> Vec<f64> {
    grid.iter().map(|&o| w.gain(o)).collect()
}

/// Worst in-coverage statistics of one layer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SinkReport {
    pub layer: usize,
    /// Lowest in-slice gain over all codewords of the layer, dB.
    pub min_in_coverage_db: f64,
    /// Largest peak gain over the layer, dB.
    pub peak_db: f64,
    /// Worst (min in-slice − own peak) over the layer, dB. Non-positive.
    pub worst_dip_db: f64,
}

/// Deep-sink survey of every layer on a `grid_size`-point grid.
pub fn sink_report(cb: &HierCodebook, grid_size: usize) -> Vec<SinkReport> {
    let grid = uniform_grid(grid_size);
    cb.layers()
        .iter()
        .enumerate()
        .map(|(k, layer)| {
            let width = layer.len();
            let mut min_in = f64::INFINITY;
            let mut peak = f64::NEG_INFINITY;
            let mut dip = f64::INFINITY;
            for cw in layer {
                let gains = linear_gains(cw, &grid);
                let own_peak = gains.iter().copied().fold(0.0, f64::max);
                let own_min = grid
                    .iter()
                    .zip(&gains)
                    .filter(|(o, _)| slice_index(**o, width) == cw.index)
                    .map(|(_, g)| *g)
                    .fold(f64::INFINITY, f64::min);
                min_in = min_in.min(own_min);
                peak = peak.max(own_peak);
                dip = dip.min(to_db(own_min) - to_db(own_peak));
            }
            SinkReport {
                layer: k,
                min_in_coverage_db: to_db(min_in),
                peak_db: to_db(peak),
                worst_dip_db: dip,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnionLayerReport {
    pub layer: usize,
    /// Parent with the largest ripple at this layer.
    pub worst_parent: usize,
    /// (mean child peak − min parent gain in its slice), dB.
    pub worst_ripple_db: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnionReport {
    pub ripple_db: f64,
    pub layers: Vec<UnionLayerReport>,
}

impl UnionReport {
    pub fn pass(&self) -> bool {
        self.layers.iter().all(|l| l.pass)
    }

    pub fn worst_ripple_db(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| l.worst_ripple_db)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Checks that every parent beam covers its slice to within `ripple_db` of the
/// average peak of its children. The bottom layer has no children and is
/// omitted from the report.
pub fn coverage_union_check(cb: &HierCodebook, ripple_db: f64) -> UnionReport {
    coverage_union_check_on(cb, ripple_db, CHECK_GRID)
}

pub fn coverage_union_check_on(cb: &HierCodebook, ripple_db: f64, grid_size: usize) -> UnionReport {
    let grid = uniform_grid(grid_size);
    let mut layers = Vec::new();
    for k in 0..cb.depth() {
        let parents = cb.layer(k);
        let children = cb.layer(k + 1);
        let child_peaks: Vec<f64> = children
            .iter()
            .map(|c| to_db(linear_gains(c, &grid).into_iter().fold(0.0, f64::max)))
            .collect();
        let mut worst = (0usize, f64::NEG_INFINITY);
        for p in parents {
            let mean_child_peak = cb.children(p.index).map(|c| child_peaks[c]).sum::<f64>()
                / cb.branching() as f64;
            let min_parent = grid
                .iter()
                .filter(|&&o| slice_index(o, parents.len()) == p.index)
                .map(|&o| p.gain(o))
                .fold(f64::INFINITY, f64::min);
            let ripple = mean_child_peak - to_db(min_parent);
            if ripple > worst.1 {
                worst = (p.index, ripple);
            }
        }
        layers.push(UnionLayerReport {
            layer: k,
            worst_parent: worst.0,
            worst_ripple_db: worst.1,
            pass: worst.1 <= ripple_db,
        });
    }
    UnionReport { ripple_db, layers }
}

/// Largest relative deviation of any active weight from `1/√N`, and whether
/// inactive weights are exactly zero and agree with the mask.
pub fn ca_violation(cb: &HierCodebook) -> f64 {
    let amp = 1.0 / (cb.n_antennas() as f64).sqrt();
    let mut worst = 0.0f64;
    for cw in cb.layers().iter().flatten() {
        for (w, &active) in cw.weights.iter().zip(&cw.active_mask) {
            if active {
                worst = worst.max((w.norm() - amp).abs() / amp);
            } else if *w != Complex64::new(0.0, 0.0) {
                worst = f64::INFINITY;
            }
        }
    }
    worst
}

/// Max entrywise deviation of the bottom-layer Gram matrix from the identity.
pub fn bottom_gram_error(cb: &HierCodebook) -> f64 {
    let bottom = cb.bottom();
    let mut worst = 0.0f64;
    for (i, a) in bottom.iter().enumerate() {
        for (j, b) in bottom.iter().enumerate() {
            let g = a.weights.dotc(&b.weights);
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g - Complex64::new(want, 0.0)).norm());
        }
    }
    worst
}

/// Per-layer count of grid angles whose strongest child-layer codeword is not
/// a child of the parent covering that angle. Ties within `1e-9` relative count
/// as contained.
pub fn containment_violations(cb: &HierCodebook, grid_size: usize) -> Vec<usize> {
    let grid = uniform_grid(grid_size);
    (0..cb.depth())
        .map(|k| {
            let parents = cb.layer(k).len();
            let child_gains: Vec<Vec<f64>> =
                cb.layer(k + 1).iter().map(|c| linear_gains(c, &grid)).collect();
            grid.iter()
                .enumerate()
                .filter(|&(i, &o)| {
                    let parent = slice_index(o, parents);
                    let best_all = child_gains.iter().map(|g| g[i]).fold(0.0, f64::max);
                    let best_child = cb
                        .children(parent)
                        .map(|c| child_gains[c][i])
                        .fold(0.0, f64::max);
                    best_child < best_all * (1.0 - 1e-9)
                })
                .count()
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct CodewordJson {
    layer: usize,
    index: usize,
    weights: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct CodebookJson {
    n_antennas: usize,
    branching: usize,
    layers: Vec<Vec<CodewordJson>>,
}

impl HierCodebook {
    pub fn to_json(&self) -> String {
        let doc = CodebookJson {
            n_antennas: self.n_antennas,
            branching: self.branching,
            layers: self
                .layers
                .iter()
                .map(|layer| {
                    layer
                        .iter()
                        .map(|cw| CodewordJson {
                            layer: cw.layer,
                            index: cw.index,
                            weights: cw.weights.iter().map(|w| [w.re, w.im]).collect(),
                        })
                        .collect()
                })
                .collect(),
        };
        serde_json::to_string(&doc).expect("codebook serializes")
    }

    /// Parses and validates a codebook exported by [`HierCodebook::to_json`].
    pub fn from_json(s: &str) -> Result<Self> {
        let doc: CodebookJson =
            serde_json::from_str(s).map_err(|e| Error::InvalidCodebook(e.to_string()))?;
        let depth = layer_count(doc.n_antennas, doc.branching)
            .map_err(|e| Error::InvalidCodebook(e.to_string()))?;
        if doc.layers.len() != depth + 1 {
            return Err(Error::InvalidCodebook(format!(
                "expected {} layers, found {}",
                depth + 1,
                doc.layers.len()
            )));
        }
        let amp = 1.0 / (doc.n_antennas as f64).sqrt();
        let mut layers = Vec::with_capacity(depth + 1);
        for (k, layer) in doc.layers.into_iter().enumerate() {
            let want = doc.branching.pow(k as u32);
            if layer.len() != want {
                return Err(Error::InvalidCodebook(format!(
                    "layer {k} has {} codewords, expected {want}",
                    layer.len()
                )));
            }
            let mut out = Vec::with_capacity(want);
            for (n, cw) in layer.into_iter().enumerate() {
                if cw.layer != k || cw.index != n {
                    return Err(Error::InvalidCodebook(format!(
                        "codeword at ({k}, {n}) is labelled ({}, {})",
                        cw.layer, cw.index
                    )));
                }
                if cw.weights.len() != doc.n_antennas {
                    return Err(Error::InvalidCodebook(format!(
                        "codeword ({k}, {n}) has {} weights",
                        cw.weights.len()
                    )));
                }
                let weights = DVector::from_iterator(
                    doc.n_antennas,
                    cw.weights.iter().map(|[re, im]| Complex64::new(*re, *im)),
                );
                let active_mask: Vec<bool> = weights.iter().map(|w| w.norm() != 0.0).collect();
                if weights
                    .iter()
                    .any(|w| w.norm() != 0.0 && ((w.norm() - amp).abs() / amp) > 1e-9)
                {
                    return Err(Error::InvalidCodebook(format!(
                        "codeword ({k}, {n}) violates the constant-amplitude constraint"
                    )));
                }
                out.push(Codeword {
                    weights,
                    active_mask,
                    layer: k,
                    index: n,
                });
            }
            layers.push(out);
        }
        Ok(HierCodebook {
            n_antennas: doc.n_antennas,
            branching: doc.branching,
            layers,
        })
    }
}

/// Pencil codeword steered exactly at `omega` (not necessarily on the grid).
pub fn pencil(n_antennas: usize, omega: f64) -> Result<Codeword> {
    check_angle("pencil codeword", omega)?;
    let geom = ArrayGeometry::ula(n_antennas)?;
    Ok(Codeword {
        weights: steering_unchecked(&geom, omega),
        active_mask: vec![true; n_antennas],
        layer: 0,
        index: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array_channel::steering_vector;

    #[test]
    fn power_checks() {
        assert_eq!(layer_count(16, 2).unwrap(), 4);
        assert_eq!(layer_count(27, 3).unwrap(), 3);
        assert_eq!(layer_count(1, 2).unwrap(), 0);
        assert!(layer_count(24, 2).is_err());
        assert!(layer_count(16, 1).is_err());
        assert!(build_deact(12, 2).is_err());
        assert!(build_bmw_ss(10, 3).is_err());
    }

    #[test]
    fn deact_shape() {
        let cb = build_deact(16, 2).unwrap();
        assert_eq!(cb.depth(), 4);
        assert_eq!(cb.layer(4).len(), 16);
        assert!(cb.layer(4).iter().all(|c| c.n_active() == 16));
        assert_eq!(cb.layer(0).len(), 1);
        assert_eq!(cb.codeword(0, 0).n_active(), 1);
        // 0-indexed n = 0 is the first codeword of layer 2
        let cw = cb.codeword(2, 0);
        assert_eq!(cw.n_active(), 4);
        assert!((slice_center(4, 0) + 0.75).abs() < 1e-15);
    }

    #[test]
    fn deact_layer2_edge_gain() {
        // 4-element Dirichlet beam: edge of slice is 1/K from centre, where the
        // gain drops by (K sin(π/2K))^-2 = -3.70 dB; the grid never goes lower.
        let cb = build_deact(16, 2).unwrap();
        let cw = cb.codeword(2, 0);
        let grid = uniform_grid(4096);
        let peak = cw.gain(-0.75);
        let worst = grid
            .iter()
            .filter(|&&o| slice_index(o, 4) == 0)
            .map(|&o| cw.gain(o))
            .fold(f64::INFINITY, f64::min);
        let oracle = 1.0 / (4.0 * (PI / 8.0).sin()).powi(2);
        assert!((worst / peak - oracle).abs() < 1e-12);
        assert!((10.0 * oracle.log10() + 3.70).abs() < 0.01);
    }

    #[test]
    fn bmw_all_active_unit_norm() {
        let cb = build_bmw_ss(32, 2).unwrap();
        for cw in cb.layers().iter().flatten() {
            assert_eq!(cw.n_active(), 32);
            assert!((cw.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bottom_layers_coincide_with_steering() {
        let d = build_deact(16, 2).unwrap();
        let b = build_bmw_ss(16, 2).unwrap();
        let g = ArrayGeometry::ula(16).unwrap();
        for n in 0..16 {
            let a = steering_vector(&g, slice_center(16, n)).unwrap();
            assert!((&d.bottom()[n].weights - &a).norm() < 1e-12);
            assert!((&b.bottom()[n].weights - &a).norm() < 1e-12);
        }
    }

    #[test]
    fn pencil_peak_and_flat_omni() {
        let cb = build_deact(16, 2).unwrap();
        let p = beam_pattern(&cb.bottom()[5], 256).unwrap();
        assert!((p.peak_db() - 10.0 * 16f64.log10()).abs() < 1e-9);
        let cw = &cb.bottom()[5];
        assert!((cw.gain(slice_center(16, 5)) - 16.0).abs() < 1e-9);

        let omni = beam_pattern(cb.codeword(0, 0), 64).unwrap();
        let first = omni.gain_db[0];
        assert!(omni.gain_db.iter().all(|g| (g - first).abs() < 1e-12));
        assert!((first - 10.0 * (1.0f64 / 16.0).log10()).abs() < 1e-12);
    }

    #[test]
    fn pattern_grid_precondition() {
        let cb = build_deact(16, 2).unwrap();
        assert!(beam_pattern(cb.codeword(1, 0), 31).is_err());
        assert!(beam_pattern(cb.codeword(1, 0), 32).is_ok());
    }

    #[test]
    fn pattern_csv_header() {
        let cb = build_deact(4, 2).unwrap();
        let csv = beam_pattern(cb.codeword(1, 1), 8).unwrap().to_csv();
        assert!(csv.starts_with("omega,gain_db\n-1,"));
        assert_eq!(csv.lines().count(), 9);
    }

    #[test]
    fn slices_tile_the_domain() {
        for width in [1usize, 2, 3, 8, 27] {
            let (lo, _) = coverage_slice(width, 0);
            let (_, hi) = coverage_slice(width, width - 1);
            assert_eq!(lo, -1.0);
            assert!((hi - 1.0).abs() < 1e-15);
            for n in 0..width - 1 {
                assert_eq!(coverage_slice(width, n).1, coverage_slice(width, n + 1).0);
            }
        }
        assert_eq!(slice_index(-1.0, 4), 0);
        assert_eq!(slice_index(-0.5, 4), 1);
        assert_eq!(slice_index(0.9999, 4), 3);
    }

    #[test]
    fn union_check_bottom_layer_absent() {
        let cb = build_deact(4, 2).unwrap();
        let r = coverage_union_check(&cb, 12.0);
        assert_eq!(r.layers.len(), 2);
        let single = build_deact(1, 2).unwrap();
        assert!(coverage_union_check(&single, 0.0).pass());
    }

    #[test]
    fn json_rejects_broken_codebooks() {
        let cb = build_deact(4, 2).unwrap();
        let good = cb.to_json();
        assert_eq!(HierCodebook::from_json(&good).unwrap(), cb);
        let bad = good.replacen("\"n_antennas\":4", "\"n_antennas\":6", 1);
        assert!(HierCodebook::from_json(&bad).is_err());
        assert!(HierCodebook::from_json("{}").is_err());
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("bmw-ss".parse::<CodebookKind>().unwrap(), CodebookKind::BmwSs);
        assert_eq!("deact".parse::<CodebookKind>().unwrap(), CodebookKind::Deact);
        assert!("sparse".parse::<CodebookKind>().is_err());
    }
}
