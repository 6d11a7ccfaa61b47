//! Joint Tx/Rx beam alignment over hierarchical codebooks.
//!
//! The BS combines with `w` (rows of `H`), the MS transmits with `f`
//! (columns of `H`); one measurement occupies one training slot.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array_channel::{sample_mpcs_with, share_bs_aoa, synth_channel, ArrayGeometry};
use crate::codebook::{nearest_grid_index, CodebookKind, Codeword, HierCodebook};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream, trial_rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementModel {
    /// Per-measurement pre-beamforming SNR ρ (linear).
    pub snr_linear: f64,
    pub rng_seed: u64,
    /// Drops the noise term entirely.
    #[serde(default)]
    pub noiseless: bool,
}

impl MeasurementModel {
    pub fn new(snr_linear: f64, rng_seed: u64) -> Result<Self> {
        if !(snr_linear >= 0.0 && snr_linear.is_finite()) {
            return Err(Error::domain("measurement model", format!("snr must be >= 0, got {snr_linear}")));
        }
        Ok(Self {
            snr_linear,
            rng_seed,
            noiseless: false,
        })
    }

    pub fn noiseless(snr_linear: f64) -> Self {
        Self {
            snr_linear,
            rng_seed: 0,
            noiseless: true,
        }
    }
}

/// `y = √ρ · w^H H f + w^H n`, with `n ~ CN(0, I)` drawn from the stream
/// `(rng_seed, counter)`.
pub fn measure(
    h: &DMatrix<Complex64>,
    w_rx: &Codeword,
    f_tx: &Codeword,
    model: &MeasurementModel,
    counter: u64,
) -> Result<Complex64> {
    if w_rx.n_antennas() != h.nrows() {
        return Err(Error::DimensionMismatch {
            what: "rx codeword vs channel rows",
            expected: h.nrows(),
            got: w_rx.n_antennas(),
        });
    }
    if f_tx.n_antennas() != h.ncols() {
        return Err(Error::DimensionMismatch {
            what: "tx codeword vs channel columns",
            expected: h.ncols(),
            got: f_tx.n_antennas(),
        });
    }
    let hf = h * &f_tx.weights;
    Ok(observe(&w_rx.weights, &hf, model, counter))
}

/// Measurement given the precomputed transmit-side product `H f`.
fn observe(
    w: &DVector<Complex64>,
    hf: &DVector<Complex64>,
    model: &MeasurementModel,
    counter: u64,
) -> Complex64 {
    let signal = w.dotc(hf) * model.snr_linear.sqrt();
    if model.noiseless {
        return signal;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(model.rng_seed);
    rng.set_stream(counter);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let noise = w.iter().fold(Complex64::new(0.0, 0.0), |acc, wi| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        acc + wi.conj() * Complex64::new(re * scale, im * scale)
    });
    signal + noise
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SearchResult {
    /// Bottom-layer MS (transmit) codeword index.
    pub tx_index: usize,
    /// Bottom-layer BS (receive) codeword index.
    pub rx_index: usize,
    pub slots_used: usize,
    /// `(layer, tx, rx)` chosen at each step of the descent.
    pub layer_trace: Vec<(usize, usize, usize)>,
}

fn check_pair(h: &DMatrix<Complex64>, cb_bs: &HierCodebook, cb_ms: &HierCodebook) -> Result<()> {
    if cb_bs.n_antennas() != h.nrows() {
        return Err(Error::DimensionMismatch {
            what: "BS codebook vs channel rows",
            expected: h.nrows(),
            got: cb_bs.n_antennas(),
        });
    }
    if cb_ms.n_antennas() != h.ncols() {
        return Err(Error::DimensionMismatch {
            what: "MS codebook vs channel columns",
            expected: h.ncols(),
            got: cb_ms.n_antennas(),
        });
    }
    Ok(())
}

/// Tests every bottom-layer pair, one slot each.
pub fn exhaustive_search(
    h: &DMatrix<Complex64>,
    cb_bs: &HierCodebook,
    cb_ms: &HierCodebook,
    model: &MeasurementModel,
) -> Result<SearchResult> {
    check_pair(h, cb_bs, cb_ms)?;
    let mut counter = 0u64;
    let mut best = (f64::NEG_INFINITY, 0, 0);
    for (tx, f) in cb_ms.bottom().iter().enumerate() {
        let hf = h * &f.weights;
        for (rx, w) in cb_bs.bottom().iter().enumerate() {
            let y = observe(&w.weights, &hf, model, counter);
            counter += 1;
            let p = y.norm_sqr();
            if p > best.0 {
                best = (p, tx, rx);
            }
        }
    }
    let depth = cb_bs.depth();
    Ok(SearchResult {
        tx_index: best.1,
        rx_index: best.2,
        slots_used: counter as usize,
        layer_trace: vec![(depth, best.1, best.2)],
    })
}

/// Descends both trees together, testing all `M × M` child pairs per layer.
pub fn hierarchical_search(
    h: &DMatrix<Complex64>,
    cb_bs: &HierCodebook,
    cb_ms: &HierCodebook,
    model: &MeasurementModel,
) -> Result<SearchResult> {
    check_pair(h, cb_bs, cb_ms)?;
    if cb_bs.depth() != cb_ms.depth() || cb_bs.branching() != cb_ms.branching() {
        return Err(Error::domain(
            "hierarchical search",
            format!(
                "codebook trees differ: BS depth {} (M={}), MS depth {} (M={})",
                cb_bs.depth(),
                cb_bs.branching(),
                cb_ms.depth(),
                cb_ms.branching()
            ),
        ));
    }
    let depth = cb_bs.depth();
    if depth == 0 {
        // single-antenna arrays: the lone pair still costs one slot
        let ex = exhaustive_search(h, cb_bs, cb_ms, model)?;
        return Ok(ex);
    }
    let mut tx = 0usize;
    let mut rx = 0usize;
    let mut counter = 0u64;
    let mut trace = Vec::with_capacity(depth);
    for k in 1..=depth {
        let mut best = (f64::NEG_INFINITY, 0, 0);
        for ct in cb_ms.children(tx) {
            let f = &cb_ms.codeword(k, ct).weights;
            let hf = h * f;
            for cr in cb_bs.children(rx) {
                let w = &cb_bs.codeword(k, cr).weights;
                let y = observe(w, &hf, model, counter);
                counter += 1;
                let p = y.norm_sqr();
                if p > best.0 {
                    best = (p, ct, cr);
                }
            }
        }
        tx = best.1;
        rx = best.2;
        trace.push((k, tx, rx));
    }
    Ok(SearchResult {
        tx_index: tx,
        rx_index: rx,
        slots_used: counter as usize,
        layer_trace: trace,
    })
}

pub fn exhaustive_slots(n_bs: usize, n_ms: usize) -> usize {
    n_bs * n_ms
}

/// `M² · log_M(N_A)` training slots.
pub fn hierarchical_slots(n_antennas: usize, branching: usize) -> Result<usize> {
    let depth = crate::codebook::layer_count(n_antennas, branching)?;
    Ok((branching * branching * depth).max(1))
}

/// Bottom-layer neighbours `[i-1, i, i+1]`, saturating at the grid ends.
pub fn tracking_shortlist(cb: &HierCodebook, current_index: usize) -> Result<Vec<usize>> {
    let n = cb.bottom().len();
    if current_index >= n {
        return Err(Error::domain(
            "tracking shortlist",
            format!("index {current_index} outside bottom layer of {n}"),
        ));
    }
    let lo = current_index.saturating_sub(1);
    let hi = (current_index + 1).min(n - 1);
    Ok((lo..=hi).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchScenario {
    pub n_antennas: usize,
    pub branching: usize,
    pub l_paths: usize,
    pub nlos_offset_db: f64,
    pub codebook: CodebookKind,
    #[serde(default)]
    pub shared_bs_aoa: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuccessPoint {
    pub snr_db: f64,
    pub successes: u64,
    pub trials: u64,
}

impl SuccessPoint {
    pub fn rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }

    /// Binomial standard error of [`rate`](Self::rate).
    pub fn std_err(&self) -> f64 {
        let p = self.rate();
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// Monte-Carlo LOS acquisition rate of hierarchical search per SNR point.
///
/// Trial `t` draws its channel and its noise from streams derived from
/// `(master_seed, t)`, so every SNR point sees the same channels and noise
/// realizations (common random numbers).
pub fn success_rate(
    scenario: &SearchScenario,
    snr_grid_db: &[f64],
    trials: u64,
    master_seed: u64,
) -> Result<Vec<SuccessPoint>> {
    if trials == 0 {
        return Err(Error::domain("success rate", "trials must be >= 1"));
    }
    let cb = scenario.codebook.build(scenario.n_antennas, scenario.branching)?;
    success_rate_with(&cb, scenario, snr_grid_db, trials, master_seed)
}

/// [`success_rate`] with a prebuilt codebook shared by both ends.
pub fn success_rate_with(
    cb: &HierCodebook,
    scenario: &SearchScenario,
    snr_grid_db: &[f64],
    trials: u64,
    master_seed: u64,
) -> Result<Vec<SuccessPoint>> {
    let geom = ArrayGeometry::ula(scenario.n_antennas)?;
    let n = scenario.n_antennas;
    let hits: Vec<Vec<bool>> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<Vec<bool>> {
            let mut rng = trial_rng(master_seed, t, stream::CHANNEL);
            let mut mpcs = sample_mpcs_with(&mut rng, scenario.l_paths, scenario.nlos_offset_db)?;
            if scenario.shared_bs_aoa {
                share_bs_aoa(&mut mpcs);
            }
            let ch = synth_channel(&geom, &geom, &mpcs)?;
            let want_rx = nearest_grid_index(ch.los().aoa_bs, n);
            let want_tx = nearest_grid_index(ch.los().aod_ms, n);
            let noise_seed = derive_seed(master_seed, &[t, stream::NOISE]);
            snr_grid_db
                .iter()
                .map(|&snr_db| {
                    let model = MeasurementModel::new(10f64.powf(snr_db / 10.0), noise_seed)?;
                    let r = hierarchical_search(&ch.h, cb, cb, &model)?;
                    Ok(r.rx_index == want_rx && r.tx_index == want_tx)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(snr_grid_db
        .iter()
        .enumerate()
        .map(|(i, &snr_db)| SuccessPoint {
            snr_db,
            successes: hits.iter().filter(|h| h[i]).count() as u64,
            trials,
        })
        .collect())
}
