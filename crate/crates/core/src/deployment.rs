//! Air-to-ground link states, user discovery and UAV repositioning.
//!
//! A UAV sweeps coarse directional beams to discover nearby users, then moves
//! to the ground centroid of everyone it knows about if the gain in total
//! mmWave capacity beats the cost of moving. Discovery, move and repeat.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::array_channel::{db_to_linear, friis_rx_snr_db, LinkBudget};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream, trial_rng};
use crate::sdma::{capacity_mm, CapacityParams};

pub type Position = [f64; 3];

/// Elevation-angle LOS model plus blockage parameters.
///
/// `p_LOS(θ) = 1 / (1 + a·exp(-b·(θ° - a)))`; `a = 0` makes every link LOS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvironmentProfile {
    pub los_sigmoid_a: f64,
    pub los_sigmoid_b: f64,
    /// Amplitude reflection coefficient of one bounce.
    pub reflection_amp_coeff: f64,
    /// Extra loss per bounce on top of the reflection term, dB.
    pub excess_loss_db_per_bounce: f64,
    pub outage_range_m: f64,
}

impl Default for EnvironmentProfile {
    fn default() -> Self {
        Self::urban()
    }
}

impl EnvironmentProfile {
    pub fn urban() -> Self {
        Self {
            los_sigmoid_a: 9.61,
            los_sigmoid_b: 0.16,
            reflection_amp_coeff: 0.896,
            excess_loss_db_per_bounce: 0.0,
            outage_range_m: 1000.0,
        }
    }

    pub fn rural() -> Self {
        Self {
            los_sigmoid_a: 4.88,
            los_sigmoid_b: 0.43,
            ..Self::urban()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "urban" => Ok(Self::urban()),
            "rural" | "suburban" => Ok(Self::rural()),
            other => Err(Error::domain(
                "environment preset",
                format!("unknown preset {other:?} (expected urban or rural)"),
            )),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.reflection_amp_coeff) {
            return Err(Error::domain(
                "environment",
                format!("reflection_amp_coeff must be in [0, 1], got {}", self.reflection_amp_coeff),
            ));
        }
        if !(self.los_sigmoid_a >= 0.0 && self.los_sigmoid_b >= 0.0) {
            return Err(Error::domain("environment", "LOS sigmoid parameters must be >= 0"));
        }
        if !(self.outage_range_m > 0.0) {
            return Err(Error::domain("environment", "outage_range_m must be > 0"));
        }
        if !(self.excess_loss_db_per_bounce >= 0.0) {
            return Err(Error::domain("environment", "excess loss must be >= 0 dB"));
        }
        Ok(())
    }
}

pub fn los_probability(elevation_rad: f64, env: &EnvironmentProfile) -> f64 {
    let deg = elevation_rad.to_degrees();
    let a = env.los_sigmoid_a;
    1.0 / (1.0 + a * (-env.los_sigmoid_b * (deg - a)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "UPPERCASE")]
pub enum LinkState {
    Los,
    Nlos { nlos_order: u8 },
    Outage,
}

/// Loss of an `order`-bounce reflected path relative to the direct path, dB.
pub fn nlos_penalty_db(order: u32, env: &EnvironmentProfile) -> f64 {
    let o = order as f64;
    -20.0 * o * env.reflection_amp_coeff.log10() + o * env.excess_loss_db_per_bounce
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct User {
    pub id: u32,
    pub pos: Position,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeploymentScene {
    #[serde(rename = "uav")]
    pub uav_pos: Position,
    pub users: Vec<User>,
    #[serde(default)]
    pub env: EnvironmentProfile,
    pub discovery_range_m: f64,
    /// Minimum utility gain (Gbit/s) that justifies a move; `"inf"` pins the UAV.
    #[serde(with = "extended_f64")]
    pub signaling_cost: f64,
    pub sweep_sectors: usize,
    /// Per-user budget; the distance field is replaced by the actual range.
    #[serde(default)]
    pub link: LinkBudget,
}

impl DeploymentScene {
    pub fn validate(&self) -> Result<()> {
        if !(self.uav_pos[2] > 0.0) {
            return Err(Error::domain("scene", format!("uav altitude must be > 0, got {}", self.uav_pos[2])));
        }
        if !(self.discovery_range_m > 0.0) {
            return Err(Error::domain("scene", "discovery_range_m must be > 0"));
        }
        if !(self.signaling_cost >= 0.0) {
            return Err(Error::domain("scene", "signaling_cost must be >= 0"));
        }
        if self.sweep_sectors == 0 {
            return Err(Error::domain("scene", "sweep_sectors must be >= 1"));
        }
        for (i, u) in self.users.iter().enumerate() {
            if self.users[..i].iter().any(|v| v.id == u.id) {
                return Err(Error::domain("scene", format!("duplicate user id {}", u.id)));
            }
        }
        self.env.validate()?;
        self.link.validate()
    }

    fn user(&self, id: u32) -> Result<&User> {
        self.users
            .iter()
            .find(|u| u.id == id)
            .ok_or_else(|| Error::domain("scene", format!("no user with id {id}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene is always serializable")
    }
}

/// Serializes non-finite reals as the strings `"inf"`, `"-inf"`, `"nan"`.
pub mod extended_f64 {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Str(s) => match s.to_ascii_lowercase().as_str() {
                "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
                "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                _ => s.parse().map_err(serde::de::Error::custom),
            },
        }
    }
}

fn distance(a: &Position, b: &Position) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn elevation_rad(uav: &Position, user: &Position) -> f64 {
    let ground = ((uav[0] - user[0]).powi(2) + (uav[1] - user[1]).powi(2)).sqrt();
    (uav[2] - user[2]).atan2(ground).clamp(0.0, std::f64::consts::FRAC_PI_2)
}

/// Outage beyond the outage range, otherwise LOS with the elevation-dependent
/// probability, otherwise a first- or second-order reflection.
pub fn link_state<R: Rng + ?Sized>(scene: &DeploymentScene, user_id: u32, rng: &mut R) -> Result<LinkState> {
    let u = scene.user(user_id)?;
    Ok(draw_state(&scene.uav_pos, &u.pos, &scene.env, rng))
}

fn draw_state<R: Rng + ?Sized>(uav: &Position, user: &Position, env: &EnvironmentProfile, rng: &mut R) -> LinkState {
    if distance(uav, user) > env.outage_range_m {
        return LinkState::Outage;
    }
    let p = los_probability(elevation_rad(uav, user), env);
    if rng.random::<f64>() < p {
        LinkState::Los
    } else {
        LinkState::Nlos {
            nlos_order: rng.random_range(1..=2),
        }
    }
}

/// Draws every user's state with its own derived stream.
pub fn link_states(scene: &DeploymentScene, seed: u64, iteration: u64) -> Vec<(u32, LinkState)> {
    scene
        .users
        .par_iter()
        .map(|u| {
            let s = derive_seed(seed, &[iteration, stream::LINK_STATE]);
            let mut rng = trial_rng(s, u.id as u64, stream::LINK_STATE);
            (u.id, draw_state(&scene.uav_pos, &u.pos, &scene.env, &mut rng))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Discovery {
    pub found: Vec<u32>,
    pub slots_used: usize,
}

/// Coarse sweep: users inside both the discovery range and the outage range
/// answer; each sector costs one slot.
pub fn discover(scene: &DeploymentScene) -> Discovery {
    let reach = scene.discovery_range_m.min(scene.env.outage_range_m);
    Discovery {
        found: scene
            .users
            .iter()
            .filter(|u| distance(&scene.uav_pos, &u.pos) <= reach)
            .map(|u| u.id)
            .collect(),
        slots_used: scene.sweep_sectors,
    }
}

/// Sum of single-user mmWave capacities, Gbit/s, with free-space range-dependent SNR.
pub fn utility(scene: &DeploymentScene, uav: &Position, users: &[u32]) -> Result<f64> {
    let mut total = 0.0;
    for &id in users {
        let u = scene.user(id)?;
        let lb = scene.link.with_distance(distance(uav, &u.pos).max(1e-3));
        let snr = db_to_linear(friis_rx_snr_db(&lb));
        total += capacity_mm(&CapacityParams::new(lb.bandwidth_hz, snr, 1)?);
    }
    Ok(total / 1e9)
}

/// Ground centroid of `users` at altitude `altitude`.
pub fn centroid(scene: &DeploymentScene, users: &[u32], altitude: f64) -> Result<Position> {
    if users.is_empty() {
        return Err(Error::domain("centroid", "no users"));
    }
    let mut c = [0.0, 0.0, altitude];
    for &id in users {
        let p = scene.user(id)?.pos;
        c[0] += p[0];
        c[1] += p[1];
    }
    let n = users.len() as f64;
    c[0] /= n;
    c[1] /= n;
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RepositionOutcome {
    pub position: Position,
    pub moved: bool,
    /// `utility(candidate) - utility(current)`.
    pub utility_delta: f64,
}

/// Moves to the centroid iff the utility gain strictly exceeds the signaling cost.
pub fn reposition_step(scene: &DeploymentScene, found_users: &[u32]) -> Result<RepositionOutcome> {
    let candidate = centroid(scene, found_users, scene.uav_pos[2])?;
    let delta = utility(scene, &candidate, found_users)? - utility(scene, &scene.uav_pos, found_users)?;
    let moved = delta > scene.signaling_cost;
    Ok(RepositionOutcome {
        position: if moved { candidate } else { scene.uav_pos },
        moved,
        utility_delta: delta,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryStep {
    pub iter: usize,
    pub position: Position,
    /// Every user discovered so far.
    pub known: Vec<u32>,
    pub utility: f64,
    pub slots_used: usize,
    pub moved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub steps: Vec<TrajectoryStep>,
    pub final_position: Position,
}

impl Trajectory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,x,y,z,n_found,utility,moved\n");
        for s in &self.steps {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                s.iter,
                s.position[0],
                s.position[1],
                s.position[2],
                s.known.len(),
                s.utility,
                s.moved
            ));
        }
        out
    }
}

/// Alternates discovery and repositioning until a step declines to move or
/// `max_iters` steps have run. Users stay known once discovered.
pub fn iterate_positioning(scene: &DeploymentScene, max_iters: usize) -> Result<Trajectory> {
    if max_iters == 0 {
        return Err(Error::domain("iterate_positioning", "max_iters must be >= 1"));
    }
    scene.validate()?;
    let mut s = scene.clone();
    let mut known: Vec<u32> = Vec::new();
    let mut steps = Vec::new();
    for iter in 0..max_iters {
        let d = discover(&s);
        for id in d.found {
            if !known.contains(&id) {
                known.push(id);
            }
        }
        known.sort_unstable();
        let here = s.uav_pos;
        let util = utility(&s, &here, &known)?;
        let outcome = if known.is_empty() {
            None
        } else {
            Some(reposition_step(&s, &known)?)
        };
        let moved = outcome.is_some_and(|o| o.moved);
        steps.push(TrajectoryStep {
            iter,
            position: here,
            known: known.clone(),
            utility: util,
            slots_used: d.slots_used,
            moved,
        });
        match outcome {
            Some(o) if o.moved => s.uav_pos = o.position,
            _ => break,
        }
    }
    Ok(Trajectory {
        steps,
        final_position: s.uav_pos,
    })
}
