//! Spatial-division multiple access over the BS beam grid.
//!
//! Users are grouped by the bottom-layer BS codeword their beam search lands on;
//! users sharing a group never transmit in the same slot. For `U` scheduled
//! users the BS sees the effective uplink channel
//! `H_E[i, j] = w_i^H H_j f_j`, decoded with MMSE plus successive interference
//! cancellation.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array_channel::{
    db_to_linear, friis_rx_snr_db, sample_mpcs_with, steering_vector, synth_channel,
    ArrayGeometry, ChannelRealization, LinkBudget, Mpc,
};
use crate::beamsearch::{hierarchical_search, MeasurementModel};
use crate::codebook::{pencil, slice_center, CodebookKind, Codeword, HierCodebook};
use crate::error::{Error, Result};
use crate::quadrature::GaussLaguerre;
use crate::rng::{derive_seed, stream, trial_rng};

/// Simultaneous users the low-frequency reference system can separate.
pub const LF_MAX_USERS: usize = 4;

/// Gauss–Laguerre order used for the Rayleigh expectation.
pub const LF_QUADRATURE_NODES: usize = 128;

#[derive(Debug, Clone, PartialEq)]
pub struct UserLink {
    pub user_id: usize,
    pub channel: ChannelRealization,
    /// MS-side beamformer `f_u`.
    pub tx_codeword: Codeword,
    /// BS-side combiner `w_u`.
    pub rx_codeword: Codeword,
    /// Bottom-layer BS codeword index (AoD grid cluster).
    pub group_index: usize,
}

/// Greedy first-fit schedule: each user joins the first slot that has no
/// other user of its group. Returns user ids per slot.
pub fn group_users(links: &[UserLink]) -> Vec<Vec<usize>> {
    group_users_limited(links, usize::MAX)
}

/// [`group_users`] with at most `n_rf` users per slot.
pub fn group_users_limited(links: &[UserLink], n_rf: usize) -> Vec<Vec<usize>> {
    first_fit(links.iter().map(|l| (l.user_id, l.group_index)), n_rf)
}

fn first_fit(users: impl Iterator<Item = (usize, usize)>, n_rf: usize) -> Vec<Vec<usize>> {
    let mut slots: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for (id, group) in users {
        match slots
            .iter_mut()
            .find(|(ids, groups)| ids.len() < n_rf && !groups.contains(&group))
        {
            Some((ids, groups)) => {
                ids.push(id);
                groups.push(group);
            }
            None => slots.push((vec![id], vec![group])),
        }
    }
    slots.into_iter().map(|(ids, _)| ids).collect()
}

/// `H_E[i, j] = w_i^H H_j f_j`.
pub fn effective_channel(links: &[UserLink]) -> Result<DMatrix<Complex64>> {
    let u = links.len();
    let mut hf = Vec::with_capacity(u);
    for l in links {
        let h = &l.channel.h;
        if l.tx_codeword.n_antennas() != h.ncols() {
            return Err(Error::DimensionMismatch {
                what: "tx codeword vs user channel columns",
                expected: h.ncols(),
                got: l.tx_codeword.n_antennas(),
            });
        }
        if l.rx_codeword.n_antennas() != h.nrows() {
            return Err(Error::DimensionMismatch {
                what: "rx codeword vs user channel rows",
                expected: h.nrows(),
                got: l.rx_codeword.n_antennas(),
            });
        }
        hf.push(h * &l.tx_codeword.weights);
    }
    let mut he = DMatrix::zeros(u, u);
    for (i, li) in links.iter().enumerate() {
        for (j, hfj) in hf.iter().enumerate() {
            if li.rx_codeword.n_antennas() != hfj.len() {
                return Err(Error::DimensionMismatch {
                    what: "rx codeword vs other user's channel",
                    expected: hfj.len(),
                    got: li.rx_codeword.n_antennas(),
                });
            }
            he[(i, j)] = li.rx_codeword.weights.dotc(hfj);
        }
    }
    Ok(he)
}

/// One scheduled SDMA group with its effective channel.
#[derive(Debug, Clone, PartialEq)]
pub struct SdmaSetup {
    pub users: Vec<UserLink>,
    pub h_eff: DMatrix<Complex64>,
    pub snr_per_user: f64,
}

impl SdmaSetup {
    pub fn new(users: Vec<UserLink>, snr_per_user: f64, n_rf: usize) -> Result<Self> {
        if users.len() > n_rf {
            return Err(Error::domain(
                "sdma setup",
                format!("{} users exceed {n_rf} RF chains", users.len()),
            ));
        }
        for (i, a) in users.iter().enumerate() {
            if users[..i].iter().any(|b| b.group_index == a.group_index) {
                return Err(Error::domain(
                    "sdma setup",
                    format!("group {} scheduled twice", a.group_index),
                ));
            }
        }
        check_snr(snr_per_user)?;
        let h_eff = effective_channel(&users)?;
        Ok(Self {
            users,
            h_eff,
            snr_per_user,
        })
    }

    pub fn mmse_sic(&self, order: &DecodingOrder) -> Result<SicRates> {
        mmse_sic_sum_rate(&self.h_eff, self.snr_per_user, order)
    }
}

fn check_snr(snr: f64) -> Result<()> {
    if snr >= 0.0 && snr.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("snr", format!("must be finite and >= 0, got {snr}")))
    }
}

fn check_square(h: &DMatrix<Complex64>) -> Result<()> {
    if h.is_square() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what: "effective channel must be square",
            expected: h.nrows(),
            got: h.ncols(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecodingOrder {
    /// Strongest diagonal gain `|H_E[u, u]|` first.
    #[default]
    DescendingDiagonal,
    /// Users `U, U-1, …, 1`.
    Reverse,
    /// Explicit permutation of user positions, first decoded first.
    Custom(Vec<usize>),
}

impl DecodingOrder {
    pub fn resolve(&self, h_eff: &DMatrix<Complex64>) -> Result<Vec<usize>> {
        let u = h_eff.ncols();
        let order = match self {
            DecodingOrder::DescendingDiagonal => {
                let mut idx: Vec<usize> = (0..u).collect();
                // stable: ties keep index order
                idx.sort_by(|&a, &b| {
                    h_eff[(b, b)]
                        .norm()
                        .partial_cmp(&h_eff[(a, a)].norm())
                        .unwrap_or(std::cmp::Ordering::Equal)
                });
                idx
            }
            DecodingOrder::Reverse => (0..u).rev().collect(),
            DecodingOrder::Custom(p) => {
                let mut seen = vec![false; u];
                if p.len() != u || p.iter().any(|&i| i >= u || std::mem::replace(&mut seen[i], true)) {
                    return Err(Error::domain(
                        "decoding order",
                        format!("{p:?} is not a permutation of 0..{u}"),
                    ));
                }
                p.clone()
            }
        };
        Ok(order)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SicRates {
    /// Rate of each user (indexed by position in `H_E`), bps/Hz.
    pub per_user: Vec<f64>,
    pub sum: f64,
    /// Positions in the order they were decoded.
    pub order: Vec<usize>,
}

/// `ρ h^H R^{-1} h` for `R = I + ρ Σ_{j ∈ interferers} h_j h_j^H`.
fn mmse_sinr(h_eff: &DMatrix<Complex64>, snr: f64, user: usize, interferers: &[usize]) -> f64 {
    let u = h_eff.nrows();
    let mut r = DMatrix::<Complex64>::identity(u, u);
    for &j in interferers {
        let hj = h_eff.column(j);
        r += (&hj * hj.adjoint()) * Complex64::new(snr, 0.0);
    }
    let h: DVector<Complex64> = h_eff.column(user).into_owned();
    let chol = r
        .cholesky()
        .expect("identity plus PSD terms is positive definite");
    let x = chol.solve(&h);
    (h.dotc(&x).re * snr).max(0.0)
}

/// MMSE-SIC rates: the user decoded at stage `t` treats every user not yet
/// decoded as noise. The sum equals `log2 det(I + ρ H_E H_E^H)` for any order.
pub fn mmse_sic_sum_rate(
    h_eff: &DMatrix<Complex64>,
    snr_per_user: f64,
    order: &DecodingOrder,
) -> Result<SicRates> {
    check_square(h_eff)?;
    check_snr(snr_per_user)?;
    let order = order.resolve(h_eff)?;
    let mut per_user = vec![0.0; h_eff.ncols()];
    for (t, &user) in order.iter().enumerate() {
        let sinr = mmse_sinr(h_eff, snr_per_user, user, &order[t + 1..]);
        per_user[user] = (1.0 + sinr).log2();
    }
    Ok(SicRates {
        sum: per_user.iter().sum(),
        per_user,
        order,
    })
}

/// Per-user linear MMSE rates without cancellation (everyone else is noise).
pub fn mmse_rates_no_sic(h_eff: &DMatrix<Complex64>, snr_per_user: f64) -> Result<Vec<f64>> {
    check_square(h_eff)?;
    check_snr(snr_per_user)?;
    let u = h_eff.ncols();
    Ok((0..u)
        .map(|user| {
            let others: Vec<usize> = (0..u).filter(|&j| j != user).collect();
            (1.0 + mmse_sinr(h_eff, snr_per_user, user, &others)).log2()
        })
        .collect())
}

/// `log2 det(I + ρ H_E H_E^H)` via LU.
pub fn log_det_rate(h_eff: &DMatrix<Complex64>, snr_per_user: f64) -> Result<f64> {
    check_square(h_eff)?;
    let u = h_eff.nrows();
    let m = DMatrix::<Complex64>::identity(u, u)
        + (h_eff * h_eff.adjoint()) * Complex64::new(snr_per_user, 0.0);
    Ok(m.determinant().re.log2())
}

/// Sum rate with inter-user interference forced to zero.
pub fn bound_rate(h_eff: &DMatrix<Complex64>, snr_per_user: f64) -> Result<f64> {
    check_square(h_eff)?;
    check_snr(snr_per_user)?;
    Ok((0..h_eff.nrows())
        .map(|u| (1.0 + snr_per_user * h_eff[(u, u)].norm_sqr()).log2())
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityParams {
    pub bandwidth_hz: f64,
    pub snr_linear: f64,
    pub n_users: usize,
}

impl CapacityParams {
    pub fn new(bandwidth_hz: f64, snr_linear: f64, n_users: usize) -> Result<Self> {
        if !(bandwidth_hz > 0.0 && bandwidth_hz.is_finite()) {
            return Err(Error::domain("capacity", format!("bandwidth must be > 0, got {bandwidth_hz}")));
        }
        check_snr(snr_linear)?;
        if n_users == 0 {
            return Err(Error::domain("capacity", "n_users must be >= 1"));
        }
        Ok(Self {
            bandwidth_hz,
            snr_linear,
            n_users,
        })
    }
}

/// `U · B · log2(1 + ρ / U)`, bits/s.
pub fn capacity_mm(p: &CapacityParams) -> f64 {
    let u = p.n_users as f64;
    u * p.bandwidth_hz * (1.0 + p.snr_linear / u).log2()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "method")]
pub enum LfExpectation {
    Quadrature { nodes: usize },
    MonteCarlo { samples: usize, seed: u64 },
}

impl Default for LfExpectation {
    fn default() -> Self {
        LfExpectation::Quadrature {
            nodes: LF_QUADRATURE_NODES,
        }
    }
}

/// Ergodic `E{U · B · log2(1 + ρ|h|²/U)}` with `h ~ CN(0, 1)`.
pub fn capacity_lf(p: &CapacityParams, method: &LfExpectation) -> Result<f64> {
    let u = p.n_users as f64;
    let a = p.snr_linear / u;
    if a == 0.0 {
        return Ok(0.0);
    }
    let mean_log = match *method {
        LfExpectation::Quadrature { nodes } => {
            GaussLaguerre::new(nodes)?.integrate(|x| (1.0 + a * x).log2())
        }
        LfExpectation::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::domain("capacity_lf", "Monte-Carlo needs samples >= 1"));
            }
            const BLOCK: usize = 1 << 14;
            let blocks = samples.div_ceil(BLOCK);
            let partial: Vec<f64> = (0..blocks)
                .into_par_iter()
                .map(|b| {
                    let mut rng = trial_rng(seed, b as u64, stream::CHANNEL);
                    let n = BLOCK.min(samples - b * BLOCK);
                    (0..n)
                        .map(|_| {
                            let re: f64 = StandardNormal.sample(&mut rng);
                            let im: f64 = StandardNormal.sample(&mut rng);
                            (1.0 + a * 0.5 * (re * re + im * im)).log2()
                        })
                        .sum::<f64>()
                })
                .collect();
            partial.iter().sum::<f64>() / samples as f64
        }
    };
    Ok(u * p.bandwidth_hz * mean_log)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapacityPoint {
    pub tx_power_dbm: f64,
    /// mmWave received SNR ρ_MM, dB.
    pub snr_db: f64,
    pub snr_lf_db: f64,
    pub c_mm_bps: f64,
    pub c_lf_bps: f64,
}

impl CapacityPoint {
    pub fn ratio(&self) -> f64 {
        self.c_mm_bps / self.c_lf_bps
    }
}

/// Sweeps a common transmit power through both link budgets.
pub fn capacity_comparison(
    mm: &LinkBudget,
    lf: &LinkBudget,
    mm_users: usize,
    lf_users: usize,
    tx_powers_dbm: &[f64],
    method: &LfExpectation,
) -> Result<Vec<CapacityPoint>> {
    mm.validate()?;
    lf.validate()?;
    tx_powers_dbm
        .iter()
        .map(|&p| {
            let snr_mm = friis_rx_snr_db(&mm.with_tx_power(p));
            let snr_lf = friis_rx_snr_db(&lf.with_tx_power(p));
            let c_mm = capacity_mm(&CapacityParams::new(mm.bandwidth_hz, db_to_linear(snr_mm), mm_users)?);
            let c_lf = capacity_lf(
                &CapacityParams::new(lf.bandwidth_hz, db_to_linear(snr_lf), lf_users)?,
                method,
            )?;
            Ok(CapacityPoint {
                tx_power_dbm: p,
                snr_db: snr_mm,
                snr_lf_db: snr_lf,
                c_mm_bps: c_mm,
                c_lf_bps: c_lf,
            })
        })
        .collect()
}

/// Multi-user uplink scenario behind the sum-rate vs. SNR curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdmaScenario {
    pub n_bs: usize,
    pub n_ms: usize,
    pub branching: usize,
    pub n_users: usize,
    pub l_paths: usize,
    pub nlos_offset_db: f64,
    pub codebook: CodebookKind,
    /// Minimum distance between users' BS grid cells (circular, in cells).
    pub min_group_separation: usize,
    /// Place every LOS angle exactly on a bottom-layer grid centre.
    pub grid_aligned: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SdmaPoint {
    pub snr_db: f64,
    pub sum_rate: f64,
    pub bound_rate: f64,
    pub n_users: usize,
}

fn circular_gap(a: usize, b: usize, n: usize) -> usize {
    let d = a.abs_diff(b);
    d.min(n - d)
}

/// Draws BS grid cells for `u` users, pairwise at least `sep` cells apart.
fn draw_cells<R: Rng + ?Sized>(rng: &mut R, n: usize, u: usize, sep: usize) -> Result<Vec<usize>> {
    let mut cells: Vec<usize> = (0..n).collect();
    for _ in 0..1000 {
        cells.shuffle(rng);
        let mut picked: Vec<usize> = Vec::with_capacity(u);
        for &c in &cells {
            if picked.iter().all(|&p| circular_gap(p, c, n) >= sep.max(1)) {
                picked.push(c);
                if picked.len() == u {
                    return Ok(picked);
                }
            }
        }
    }
    Err(Error::domain(
        "sdma scenario",
        format!("cannot place {u} users {sep} cells apart on a {n}-beam grid"),
    ))
}

fn user_channels<R: Rng + ?Sized>(
    rng: &mut R,
    sc: &SdmaScenario,
    bs: &ArrayGeometry,
    ms: &ArrayGeometry,
) -> Result<Vec<ChannelRealization>> {
    let cells = draw_cells(rng, sc.n_bs, sc.n_users, sc.min_group_separation)?;
    cells
        .iter()
        .map(|&cell| {
            let mut mpcs: Vec<Mpc> = sample_mpcs_with(rng, sc.l_paths, sc.nlos_offset_db)?;
            if sc.grid_aligned {
                mpcs[0].aoa_bs = slice_center(sc.n_bs, cell);
                mpcs[0].aod_ms = slice_center(sc.n_ms, rng.random_range(0..sc.n_ms));
            } else {
                let lo = -1.0 + 2.0 * cell as f64 / sc.n_bs as f64;
                mpcs[0].aoa_bs = lo + rng.random_range(0.0..2.0 / sc.n_bs as f64);
            }
            synth_channel(bs, ms, &mpcs)
        })
        .collect()
}

/// Beam search per user, AoD-grid grouping and MMSE-SIC throughput averaged
/// over the resulting schedule; the bound uses exact LOS steering with
/// interference removed.
pub fn sdma_rate_curve(
    sc: &SdmaScenario,
    snr_grid_db: &[f64],
    trials: u64,
    master_seed: u64,
) -> Result<Vec<SdmaPoint>> {
    if trials == 0 {
        return Err(Error::domain("sdma", "trials must be >= 1"));
    }
    if sc.n_users == 0 {
        return Err(Error::domain("sdma", "n_users must be >= 1"));
    }
    let bs = ArrayGeometry::ula(sc.n_bs)?;
    let ms = ArrayGeometry::ula(sc.n_ms)?;
    let cb_bs = sc.codebook.build(sc.n_bs, sc.branching)?;
    let cb_ms = sc.codebook.build(sc.n_ms, sc.branching)?;
    if cb_bs.depth() != cb_ms.depth() {
        return Err(Error::domain("sdma", "BS and MS codebooks must have equal depth"));
    }
    let per_trial: Vec<Vec<(f64, f64)>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(master_seed, t, stream::GEOMETRY);
            let channels = user_channels(&mut rng, sc, &bs, &ms)?;
            let ideal: Vec<UserLink> = channels
                .iter()
                .enumerate()
                .map(|(u, ch)| {
                    Ok(UserLink {
                        user_id: u,
                        channel: ch.clone(),
                        tx_codeword: pencil(sc.n_ms, ch.los().aod_ms)?,
                        rx_codeword: pencil(sc.n_bs, ch.los().aoa_bs)?,
                        group_index: u,
                    })
                })
                .collect::<Result<_>>()?;
            let h_ideal = effective_channel(&ideal)?;
            snr_grid_db
                .iter()
                .map(|&snr_db| {
                    let rho = db_to_linear(snr_db);
                    let links = searched_links(&channels, &cb_bs, &cb_ms, rho, master_seed, t)?;
                    let slots = group_users(&links);
                    let mut total = 0.0;
                    for slot in &slots {
                        let members: Vec<UserLink> =
                            slot.iter().map(|&id| links[id].clone()).collect();
                        let setup = SdmaSetup::new(members, rho, usize::MAX)?;
                        total += setup.mmse_sic(&DecodingOrder::default())?.sum;
                    }
                    Ok((total / slots.len() as f64, bound_rate(&h_ideal, rho)?))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(snr_grid_db
        .iter()
        .enumerate()
        .map(|(i, &snr_db)| {
            let (s, b) = per_trial
                .iter()
                .fold((0.0, 0.0), |acc, r| (acc.0 + r[i].0, acc.1 + r[i].1));
            SdmaPoint {
                snr_db,
                sum_rate: s / trials as f64,
                bound_rate: b / trials as f64,
                n_users: sc.n_users,
            }
        })
        .collect())
}

fn searched_links(
    channels: &[ChannelRealization],
    cb_bs: &HierCodebook,
    cb_ms: &HierCodebook,
    rho: f64,
    master_seed: u64,
    trial: u64,
) -> Result<Vec<UserLink>> {
    channels
        .iter()
        .enumerate()
        .map(|(u, ch)| {
            let seed = derive_seed(master_seed, &[trial, stream::NOISE, u as u64]);
            let r = hierarchical_search(&ch.h, cb_bs, cb_ms, &MeasurementModel::new(rho, seed)?)?;
            Ok(UserLink {
                user_id: u,
                channel: ch.clone(),
                tx_codeword: cb_ms.bottom()[r.tx_index].clone(),
                rx_codeword: cb_bs.bottom()[r.rx_index].clone(),
                group_index: r.rx_index,
            })
        })
        .collect()
}

/// Convenience: LOS-only channel whose BS angle sits on grid cell `cell`.
pub fn grid_los_channel(
    bs: &ArrayGeometry,
    ms: &ArrayGeometry,
    cell: usize,
    ms_cell: usize,
    gain: Complex64,
) -> Result<ChannelRealization> {
    let mpc = Mpc::new(
        gain,
        slice_center(bs.n_elements(), cell),
        slice_center(ms.n_elements(), ms_cell),
    )?;
    synth_channel(bs, ms, &[mpc])
}

/// Steering-vector codeword helper for the MS side (exact angle, not gridded).
pub fn steering_codeword(geom: &ArrayGeometry, omega: f64) -> Result<Codeword> {
    let weights = steering_vector(geom, omega)?;
    Ok(Codeword {
        active_mask: vec![true; weights.len()],
        weights,
        layer: 0,
        index: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::build_bmw_ss;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn link(id: usize, group: usize) -> UserLink {
        let g = ArrayGeometry::ula(2).unwrap();
        let ch = grid_los_channel(&g, &g, 0, 0, c(1.0, 0.0)).unwrap();
        let cw = steering_codeword(&g, 0.0).unwrap();
        UserLink {
            user_id: id,
            channel: ch,
            tx_codeword: cw.clone(),
            rx_codeword: cw,
            group_index: group,
        }
    }

    #[test]
    fn grouping_examples() {
        let three: Vec<_> = [2, 7, 11].iter().enumerate().map(|(i, &g)| link(i, g)).collect();
        assert_eq!(group_users(&three), vec![vec![0, 1, 2]]);

        let clash = vec![link(0, 5), link(1, 5)];
        assert_eq!(group_users(&clash), vec![vec![0], vec![1]]);

        let five: Vec<_> = [1, 1, 2, 2, 3].iter().enumerate().map(|(i, &g)| link(i, g)).collect();
        assert_eq!(group_users(&five), vec![vec![0, 2, 4], vec![1, 3]]);

        assert_eq!(group_users_limited(&three, 2), vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn single_user_matched_pencils() {
        let n = 8;
        let g = ArrayGeometry::ula(n).unwrap();
        let cb = build_bmw_ss(n, 2).unwrap();
        let lam = c(0.6, -0.3);
        let ch = grid_los_channel(&g, &g, 2, 5, lam).unwrap();
        let l = UserLink {
            user_id: 0,
            channel: ch,
            tx_codeword: cb.bottom()[5].clone(),
            rx_codeword: cb.bottom()[2].clone(),
            group_index: 2,
        };
        let he = effective_channel(&[l]).unwrap();
        assert!((he[(0, 0)].norm() - n as f64 * lam.norm()).abs() < 1e-12);
    }

    #[test]
    fn grid_users_are_orthogonal() {
        let n = 16;
        let g = ArrayGeometry::ula(n).unwrap();
        let cb = build_bmw_ss(n, 2).unwrap();
        let links: Vec<UserLink> = [(1, 3), (6, 9), (12, 0)]
            .iter()
            .enumerate()
            .map(|(u, &(bs_cell, ms_cell))| UserLink {
                user_id: u,
                channel: grid_los_channel(&g, &g, bs_cell, ms_cell, c(1.0, 0.0)).unwrap(),
                tx_codeword: cb.bottom()[ms_cell].clone(),
                rx_codeword: cb.bottom()[bs_cell].clone(),
                group_index: bs_cell,
            })
            .collect();
        let he = effective_channel(&links).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(he[(i, j)].norm() < 1e-10 * he[(i, i)].norm());
                }
            }
        }
    }

    #[test]
    fn zero_channel_gives_zero_matrix() {
        let mut l = link(0, 0);
        l.channel.h.fill(c(0.0, 0.0));
        let he = effective_channel(&[l.clone(), l]).unwrap();
        assert!(he.iter().all(|x| *x == c(0.0, 0.0)));
    }

    #[test]
    fn effective_channel_dimension_check() {
        let mut l = link(0, 0);
        l.tx_codeword = steering_codeword(&ArrayGeometry::ula(4).unwrap(), 0.0).unwrap();
        assert!(effective_channel(&[l]).is_err());
    }

    #[test]
    fn scalar_rate() {
        let h = DMatrix::from_element(1, 1, c(1.0, 0.0));
        let r = mmse_sic_sum_rate(&h, 1.0, &DecodingOrder::default()).unwrap();
        assert!((r.sum - 1.0).abs() < 1e-15);
    }

    #[test]
    fn diagonal_channel_decouples() {
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 2.0), c(-0.5, 0.5)]));
        let rho = 3.0;
        let r = mmse_sic_sum_rate(&h, rho, &DecodingOrder::Reverse).unwrap();
        for u in 0..3 {
            let want = (1.0 + rho * h[(u, u)].norm_sqr()).log2();
            assert!((r.per_user[u] - want).abs() < 1e-12);
        }
        assert!((bound_rate(&h, rho).unwrap() - r.sum).abs() < 1e-12);
    }

    #[test]
    fn equal_gain_bound() {
        let g = 1.7;
        let h = DMatrix::from_diagonal_element(4, 4, c(g, 0.0));
        let b = bound_rate(&h, 2.0).unwrap();
        assert!((b - 4.0 * (1.0 + 2.0 * g * g).log2()).abs() < 1e-12);
    }

    #[test]
    fn decoding_order_validation() {
        let h = DMatrix::from_element(2, 2, c(1.0, 0.0));
        assert!(mmse_sic_sum_rate(&h, 1.0, &DecodingOrder::Custom(vec![0, 0])).is_err());
        assert!(mmse_sic_sum_rate(&h, 1.0, &DecodingOrder::Custom(vec![1])).is_err());
        assert!(mmse_sic_sum_rate(&h, 1.0, &DecodingOrder::Custom(vec![1, 0])).is_ok());
        let rect = DMatrix::from_element(2, 3, c(1.0, 0.0));
        assert!(mmse_sic_sum_rate(&rect, 1.0, &DecodingOrder::default()).is_err());
    }

    #[test]
    fn default_order_strongest_first() {
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![c(0.5, 0.0), c(3.0, 0.0), c(1.0, 0.0)]));
        let r = mmse_sic_sum_rate(&h, 1.0, &DecodingOrder::default()).unwrap();
        assert_eq!(r.order, vec![1, 2, 0]);
    }

    #[test]
    fn capacity_mm_values() {
        let one = CapacityParams::new(100e6, 1.0, 1).unwrap();
        assert!((capacity_mm(&one) - 100e6).abs() < 1e-6);
        let eight = CapacityParams::new(100e6, 1e3, 8).unwrap();
        // 8 · 1e8 · log2(126), evaluated directly
        let want = 8e8 * 126f64.ln() / 2f64.ln();
        assert!((capacity_mm(&eight) - want).abs() < 1e-3);
        assert!((capacity_mm(&eight) / 1e9 - 5.58).abs() < 0.005);
        assert!(CapacityParams::new(0.0, 1.0, 1).is_err());
        assert!(CapacityParams::new(1.0, -1.0, 1).is_err());
        assert!(CapacityParams::new(1.0, 1.0, 0).is_err());
    }

    #[test]
    fn capacity_mm_grows_with_users() {
        let mut last = 0.0;
        for u in 1..=16 {
            let c = capacity_mm(&CapacityParams::new(100e6, 50.0, u).unwrap());
            assert!(c > last);
            last = c;
        }
    }

    #[test]
    fn capacity_lf_zero_snr() {
        let p = CapacityParams::new(5e6, 0.0, LF_MAX_USERS).unwrap();
        assert_eq!(capacity_lf(&p, &LfExpectation::default()).unwrap(), 0.0);
    }

    #[test]
    fn sdma_curve_rejects_bad_input() {
        let sc = SdmaScenario {
            n_bs: 8,
            n_ms: 8,
            branching: 2,
            n_users: 9,
            l_paths: 1,
            nlos_offset_db: 20.0,
            codebook: CodebookKind::BmwSs,
            min_group_separation: 1,
            grid_aligned: true,
        };
        assert!(sdma_rate_curve(&sc, &[0.0], 1, 0).is_err());
        assert!(sdma_rate_curve(&SdmaScenario { n_users: 2, ..sc.clone() }, &[0.0], 0, 0).is_err());
    }
}
