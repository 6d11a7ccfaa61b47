//! Uniform linear arrays, the narrowband multipath channel, link budgets and
//! mobility analytics.
//!
//! Angles are normalized spatial angles `ω = cos(φ)` in `[-1, 1)`. With
//! half-wavelength spacing the steering phase of element `n` is `π·n·ω`, so a
//! grid of `N` beams spaced `2/N` apart is orthogonal.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::trial_rng;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Thermal noise density at 290 K, dBm/Hz.
pub const THERMAL_NOISE_DBM_HZ: f64 = -174.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    n_elements: usize,
    spacing_wavelengths: f64,
}

impl ArrayGeometry {
    pub fn new(n_elements: usize, spacing_wavelengths: f64) -> Result<Self> {
        if n_elements == 0 {
            return Err(Error::domain("array geometry", "n_elements must be >= 1"));
        }
        if !(spacing_wavelengths > 0.0 && spacing_wavelengths.is_finite()) {
            return Err(Error::domain(
                "array geometry",
                format!("spacing must be positive, got {spacing_wavelengths}"),
            ));
        }
        Ok(Self {
            n_elements,
            spacing_wavelengths,
        })
    }

    /// Half-wavelength ULA with `n_elements` antennas.
    pub fn ula(n_elements: usize) -> Result<Self> {
        Self::new(n_elements, 0.5)
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    pub fn spacing_wavelengths(&self) -> f64 {
        self.spacing_wavelengths
    }
}

pub(crate) fn check_angle(what: &'static str, omega: f64) -> Result<()> {
    if (-1.0..1.0).contains(&omega) {
        Ok(())
    } else {
        Err(Error::domain(
            what,
            format!("normalized angle {omega} outside [-1, 1)"),
        ))
    }
}

/// Maps any real angle onto `[-1, 1)` (the half-wavelength steering period).
pub fn wrap_angle(omega: f64) -> f64 {
    let w = (omega + 1.0).rem_euclid(2.0) - 1.0;
    if w >= 1.0 {
        -1.0
    } else {
        w
    }
}

/// Unit-norm steering vector `a(N, ω)`.
pub fn steering_vector(geom: &ArrayGeometry, omega: f64) -> Result<DVector<Complex64>> {
    check_angle("steering vector", omega)?;
    Ok(steering_unchecked(geom, omega))
}

pub(crate) fn steering_unchecked(geom: &ArrayGeometry, omega: f64) -> DVector<Complex64> {
    let n = geom.n_elements;
    let amp = 1.0 / (n as f64).sqrt();
    let step = 2.0 * PI * geom.spacing_wavelengths * omega;
    DVector::from_fn(n, |i, _| Complex64::from_polar(amp, step * i as f64))
}

/// One multipath component: complex gain, BS-side AoA and MS-side AoD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mpc {
    pub gain: Complex64,
    pub aoa_bs: f64,
    pub aod_ms: f64,
}

impl Mpc {
    pub fn new(gain: Complex64, aoa_bs: f64, aod_ms: f64) -> Result<Self> {
        check_angle("mpc aoa", aoa_bs)?;
        check_angle("mpc aod", aod_ms)?;
        Ok(Self {
            gain,
            aoa_bs,
            aod_ms,
        })
    }
}

/// Multipath list together with the synthesized `N_BS × N_MS` channel matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub mpcs: Vec<Mpc>,
    pub h: DMatrix<Complex64>,
}

impl ChannelRealization {
    pub fn n_bs(&self) -> usize {
        self.h.nrows()
    }

    pub fn n_ms(&self) -> usize {
        self.h.ncols()
    }

    /// The first path, which [`sample_mpcs`] always makes the LOS component.
    pub fn los(&self) -> &Mpc {
        &self.mpcs[0]
    }
}

/// `H = √(N_MS·N_BS) Σ_ℓ λ_ℓ a(N_BS, ψ_ℓ) a(N_MS, Ω_ℓ)^H`.
pub fn synth_channel(
    bs: &ArrayGeometry,
    ms: &ArrayGeometry,
    mpcs: &[Mpc],
) -> Result<ChannelRealization> {
    if mpcs.is_empty() {
        return Err(Error::domain("synth_channel", "empty MPC list"));
    }
    let scale = ((bs.n_elements * ms.n_elements) as f64).sqrt();
    let mut h = DMatrix::<Complex64>::zeros(bs.n_elements, ms.n_elements);
    for mpc in mpcs {
        let a_bs = steering_vector(bs, mpc.aoa_bs)?;
        let a_ms = steering_vector(ms, mpc.aod_ms)?;
        h += (a_bs * a_ms.adjoint()) * (mpc.gain * scale);
    }
    Ok(ChannelRealization {
        mpcs: mpcs.to_vec(),
        h,
    })
}

/// Draws one LOS path with unit power and `l_paths - 1` Rayleigh NLOS paths,
/// each `nlos_power_offset_db` below the LOS component. All angles are uniform.
pub fn sample_mpcs_with<R: Rng + ?Sized>(
    rng: &mut R,
    l_paths: usize,
    nlos_power_offset_db: f64,
) -> Result<Vec<Mpc>> {
    if l_paths == 0 {
        return Err(Error::domain("sample_mpcs", "l_paths must be >= 1"));
    }
    let nlos_power = 10f64.powf(-nlos_power_offset_db / 10.0);
    let sigma = (nlos_power / 2.0).sqrt();
    let mut out = Vec::with_capacity(l_paths);
    for l in 0..l_paths {
        let gain = if l == 0 {
            Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI))
        } else {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(sigma * re, sigma * im)
        };
        out.push(Mpc {
            gain,
            aoa_bs: rng.random_range(-1.0..1.0),
            aod_ms: rng.random_range(-1.0..1.0),
        });
    }
    Ok(out)
}

/// Seeded form of [`sample_mpcs_with`].
pub fn sample_mpcs(rng_seed: u64, l_paths: usize, nlos_power_offset_db: f64) -> Result<Vec<Mpc>> {
    let mut rng = trial_rng(rng_seed, 0, crate::rng::stream::CHANNEL);
    sample_mpcs_with(&mut rng, l_paths, nlos_power_offset_db)
}

/// Collapses every path's BS-side angle onto the LOS angle (the single-ψ reading
/// of the narrowband model).
pub fn share_bs_aoa(mpcs: &mut [Mpc]) {
    if let Some(first) = mpcs.first().map(|m| m.aoa_bs) {
        for m in mpcs.iter_mut() {
            m.aoa_bs = first;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobilityParams {
    pub speed_mps: f64,
    pub wavelength_m: f64,
    /// Angle between the direction of motion and the UAV–MS link.
    pub angle_rad: f64,
}

impl MobilityParams {
    pub fn new(speed_mps: f64, wavelength_m: f64, angle_rad: f64) -> Result<Self> {
        if !(wavelength_m > 0.0) {
            return Err(Error::domain("mobility", "wavelength_m must be > 0"));
        }
        if !(speed_mps >= 0.0) {
            return Err(Error::domain("mobility", "speed_mps must be >= 0"));
        }
        Ok(Self {
            speed_mps,
            wavelength_m,
            angle_rad,
        })
    }

    fn radial_speed(&self) -> f64 {
        let c = self.angle_rad.cos();
        // cos(π/2) is 6e-17, not 0
        if c.abs() < 1e-12 {
            0.0
        } else {
            self.speed_mps * c
        }
    }
}

/// `λ / (v cos θ)`, infinite when there is no radial motion.
pub fn coherence_time_s(m: &MobilityParams) -> f64 {
    let radial = m.radial_speed().abs();
    if radial == 0.0 {
        f64::INFINITY
    } else {
        m.wavelength_m / radial
    }
}

/// `v |cos θ| / λ`.
pub fn doppler_spread_hz(m: &MobilityParams) -> f64 {
    m.radial_speed().abs() / m.wavelength_m
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkBudget {
    pub carrier_hz: f64,
    pub distance_m: f64,
    pub tx_array_gain_db: f64,
    pub rx_array_gain_db: f64,
    pub tx_power_dbm: f64,
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
}

impl Default for LinkBudget {
    fn default() -> Self {
        Self::mmwave_reference()
    }
}

impl LinkBudget {
    /// 30 GHz, 100 MHz, 24 dB BS / 12 dB MS array gain at 1 km.
    pub fn mmwave_reference() -> Self {
        Self {
            carrier_hz: 30e9,
            distance_m: 1000.0,
            tx_array_gain_db: 24.0,
            rx_array_gain_db: 12.0,
            tx_power_dbm: 30.0,
            bandwidth_hz: 100e6,
            noise_figure_db: 5.0,
        }
    }

    /// 5 GHz, 5 MHz, 6 dB BS / 0 dB MS array gain at 1 km.
    pub fn low_frequency_reference() -> Self {
        Self {
            carrier_hz: 5e9,
            distance_m: 1000.0,
            tx_array_gain_db: 6.0,
            rx_array_gain_db: 0.0,
            tx_power_dbm: 30.0,
            bandwidth_hz: 5e6,
            noise_figure_db: 5.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("carrier_hz", self.carrier_hz),
            ("distance_m", self.distance_m),
            ("bandwidth_hz", self.bandwidth_hz),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain("link budget", format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn with_distance(mut self, distance_m: f64) -> Self {
        self.distance_m = distance_m;
        self
    }

    pub fn with_tx_power(mut self, tx_power_dbm: f64) -> Self {
        self.tx_power_dbm = tx_power_dbm;
        self
    }

    pub fn path_loss_db(&self) -> f64 {
        free_space_path_loss_db(self.carrier_hz, self.distance_m)
    }

    pub fn noise_power_dbm(&self) -> f64 {
        THERMAL_NOISE_DBM_HZ + 10.0 * self.bandwidth_hz.log10() + self.noise_figure_db
    }
}

/// Friis free-space loss `20 log10(4π d f / c)`.
pub fn free_space_path_loss_db(carrier_hz: f64, distance_m: f64) -> f64 {
    20.0 * (4.0 * PI * distance_m * carrier_hz / SPEED_OF_LIGHT).log10()
}

pub fn friis_rx_snr_db(lb: &LinkBudget) -> f64 {
    lb.tx_power_dbm + lb.tx_array_gain_db + lb.rx_array_gain_db - lb.path_loss_db()
        - lb.noise_power_dbm()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
