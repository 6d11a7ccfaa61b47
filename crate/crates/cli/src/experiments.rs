//! One config struct per subcommand. Each validates itself and renders its CSV.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use mmuav_core::array_channel::{coherence_time_s, doppler_spread_hz, LinkBudget, MobilityParams};
use mmuav_core::beamsearch::{exhaustive_slots, hierarchical_slots, success_rate, SearchScenario};
use mmuav_core::codebook::{
    beam_pattern, bottom_gram_error, ca_violation, containment_violations, coverage_union_check_on,
    layer_count, sink_report, CodebookKind,
};
use mmuav_core::deployment::{iterate_positioning, DeploymentScene, EnvironmentProfile, User};
use mmuav_core::sdma::{capacity_comparison, sdma_rate_curve, LfExpectation, SdmaScenario};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::sweep::Sweep;

pub trait Experiment: Serialize + DeserializeOwned + Default {
    const NAME: &'static str;

    /// Makes relative paths inside the config absolute against `base`.
    fn resolve(&mut self, _base: &Path) -> Result<(), CliError> {
        Ok(())
    }

    fn validate(&self) -> Result<(), CliError>;

    fn run(&self) -> Result<String, CliError>;
}

fn check_tree(field: &str, n: usize, m: usize) -> Result<usize, CliError> {
    layer_count(n, m).map_err(|e| CliError::field(field, e))
}

fn positive(field: &str, v: usize) -> Result<(), CliError> {
    if v == 0 {
        Err(CliError::field(field, "must be >= 1"))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PatternConfig {
    pub codebook: CodebookKind,
    pub n: usize,
    pub m: usize,
    pub layer: usize,
    pub index: usize,
    pub grid: usize,
}

impl Default for PatternConfig {
    fn default() -> Self {
        Self {
            codebook: CodebookKind::BmwSs,
            n: 32,
            m: 2,
            layer: 2,
            index: 1,
            grid: 1024,
        }
    }
}

impl Experiment for PatternConfig {
    const NAME: &'static str = "pattern";

    fn validate(&self) -> Result<(), CliError> {
        let depth = check_tree("n", self.n, self.m)?;
        if self.layer > depth {
            return Err(CliError::field("layer", format!("must be <= {depth} for N={} M={}", self.n, self.m)));
        }
        let width = self.m.pow(self.layer as u32);
        if self.index >= width {
            return Err(CliError::field("index", format!("layer {} has only {width} codewords", self.layer)));
        }
        if self.grid < 2 * self.n {
            return Err(CliError::field("grid", format!("must be >= 2N = {}", 2 * self.n)));
        }
        Ok(())
    }

    fn run(&self) -> Result<String, CliError> {
        let cb = self.codebook.build(self.n, self.m)?;
        Ok(beam_pattern(cb.codeword(self.layer, self.index), self.grid)?.to_csv())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodebookCheckConfig {
    pub codebook: CodebookKind,
    pub n: usize,
    pub m: usize,
    pub grid: usize,
    pub ripple_db: f64,
}

impl Default for CodebookCheckConfig {
    fn default() -> Self {
        Self {
            codebook: CodebookKind::BmwSs,
            n: 32,
            m: 2,
            grid: 1024,
            ripple_db: 10.0,
        }
    }
}

impl Experiment for CodebookCheckConfig {
    const NAME: &'static str = "codebook-check";

    fn validate(&self) -> Result<(), CliError> {
        check_tree("n", self.n, self.m)?;
        if self.grid < 2 * self.n {
            return Err(CliError::field("grid", format!("must be >= 2N = {}", 2 * self.n)));
        }
        if !(self.ripple_db >= 0.0) {
            return Err(CliError::field("ripple_db", "must be >= 0"));
        }
        Ok(())
    }

    fn run(&self) -> Result<String, CliError> {
        let cb = self.codebook.build(self.n, self.m)?;
        let sinks = sink_report(&cb, self.grid);
        let union = coverage_union_check_on(&cb, self.ripple_db, self.grid);
        let contain = containment_violations(&cb, self.grid);
        let ca = ca_violation(&cb);
        let gram = bottom_gram_error(&cb);
        let mut out = String::from(
            "layer,n_codewords,min_in_coverage_db,peak_db,worst_dip_db,union_ripple_db,union_pass,containment_violations,ca_violation,gram_error\n",
        );
        for s in &sinks {
            let (ripple, pass) = match union.layers.iter().find(|l| l.layer == s.layer) {
                Some(l) => (l.worst_ripple_db.to_string(), l.pass),
                None => (String::new(), true),
            };
            let viol = contain.get(s.layer).map(|v| v.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                s.layer,
                cb.layer(s.layer).len(),
                s.min_in_coverage_db,
                s.peak_db,
                s.worst_dip_db,
                ripple,
                pass,
                viol,
                ca,
                gram
            )
            .unwrap();
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComplexityConfig {
    pub n_antennas: Vec<usize>,
    pub m: usize,
}

impl Default for ComplexityConfig {
    fn default() -> Self {
        Self {
            n_antennas: vec![16, 32, 64, 128],
            m: 2,
        }
    }
}

impl Experiment for ComplexityConfig {
    const NAME: &'static str = "complexity";

    fn validate(&self) -> Result<(), CliError> {
        if self.n_antennas.is_empty() {
            return Err(CliError::field("n_antennas", "must list at least one size"));
        }
        for (i, &n) in self.n_antennas.iter().enumerate() {
            check_tree(&format!("n_antennas[{i}]"), n, self.m)?;
        }
        Ok(())
    }

    fn run(&self) -> Result<String, CliError> {
        let mut out = String::from("n_antennas,exhaustive_slots,hierarchical_slots\n");
        for &n in &self.n_antennas {
            writeln!(out, "{n},{},{}", exhaustive_slots(n, n), hierarchical_slots(n, self.m)?).unwrap();
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSimConfig {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub nlos_offset_db: f64,
    pub snr: Sweep,
    pub trials: u64,
    pub seed: u64,
    pub codebooks: Vec<CodebookKind>,
    pub shared_bs_aoa: bool,
}

impl Default for SearchSimConfig {
    fn default() -> Self {
        Self {
            n: 32,
            m: 2,
            l: 3,
            nlos_offset_db: 20.0,
            snr: "-30:2:10".parse().expect("valid literal"),
            trials: 2000,
            seed: 7,
            codebooks: vec![CodebookKind::BmwSs, CodebookKind::Deact],
            shared_bs_aoa: false,
        }
    }
}

impl Experiment for SearchSimConfig {
    const NAME: &'static str = "search-sim";

    fn validate(&self) -> Result<(), CliError> {
        check_tree("n", self.n, self.m)?;
        positive("l", self.l)?;
        positive("trials", self.trials as usize)?;
        if self.codebooks.is_empty() {
            return Err(CliError::field("codebooks", "must list at least one codebook"));
        }
        if !self.nlos_offset_db.is_finite() {
            return Err(CliError::field("nlos_offset_db", "must be finite"));
        }
        Ok(())
    }

    fn run(&self) -> Result<String, CliError> {
        let snr = self.snr.values();
        let mut out = String::from("snr_db,success_rate,trials,codebook\n");
        for &kind in &self.codebooks {
            let sc = SearchScenario {
                n_antennas: self.n,
                branching: self.m,
                l_paths: self.l,
                nlos_offset_db: self.nlos_offset_db,
                codebook: kind,
                shared_bs_aoa: self.shared_bs_aoa,
            };
            for p in success_rate(&sc, &snr, self.trials, self.seed)? {
                writeln!(out, "{},{},{},{}", p.snr_db, p.rate(), p.trials, kind).unwrap();
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SdmaSimConfig {
    pub n_bs: usize,
    pub n_ms: usize,
    pub m: usize,
    pub users: usize,
    pub l: usize,
    pub nlos_offset_db: f64,
    pub codebook: CodebookKind,
    pub min_group_separation: usize,
    pub grid_aligned: bool,
    pub snr: Sweep,
    pub trials: u64,
    pub seed: u64,
}

impl Default for SdmaSimConfig {
    fn default() -> Self {
        Self {
            n_bs: 32,
            n_ms: 32,
            m: 2,
            users: 4,
            l: 3,
            nlos_offset_db: 20.0,
            codebook: CodebookKind::BmwSs,
            min_group_separation: 1,
            grid_aligned: false,
            snr: "-10:5:40".parse().expect("valid literal"),
            trials: 200,
            seed: 7,
        }
    }
}

impl Experiment for SdmaSimConfig {
    const NAME: &'static str = "sdma-sim";

    fn validate(&self) -> Result<(), CliError> {
        let d_bs = check_tree("n_bs", self.n_bs, self.m)?;
        let d_ms = check_tree("n_ms", self.n_ms, self.m)?;
        if d_bs != d_ms {
            return Err(CliError::field("n_ms", "BS and MS codebooks need the same depth"));
        }
        positive("users", self.users)?;
        positive("l", self.l)?;
        positive("trials", self.trials as usize)?;
        let sep = self.min_group_separation.max(1);
        if self.users > 1 && self.users * sep > self.n_bs {
            return Err(CliError::field(
                "min_group_separation",
                format!("{} users cannot be {sep} cells apart on {} beams", self.users, self.n_bs),
            ));
        }
        Ok(())
    }

    fn run(&self) -> Result<String, CliError> {
        let sc = SdmaScenario {
            n_bs: self.n_bs,
            n_ms: self.n_ms,
            branching: self.m,
            n_users: self.users,
            l_paths: self.l,
            nlos_offset_db: self.nlos_offset_db,
            codebook: self.codebook,
            min_group_separation: self.min_group_separation,
            grid_aligned: self.grid_aligned,
        };
        let mut out = String::from("snr_db,sum_rate,bound_rate,n_users\n");
        for p in sdma_rate_curve(&sc, &self.snr.values(), self.trials, self.seed)? {
            writeln!(out, "{},{},{},{}", p.snr_db, p.sum_rate, p.bound_rate, p.n_users).unwrap();
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapacityConfig {
    pub mm: LinkBudget,
    pub lf: LinkBudget,
    pub n_users: usize,
    pub lf_users: usize,
    /// Common transmit power, dBm; the CSV reports the resulting mmWave SNR.
    pub tx_power_dbm: Sweep,
    pub lf_method: LfExpectation,
}

impl CapacityConfig {
    pub fn reference_sweep() -> Self {
        Self {
            mm: LinkBudget::mmwave_reference(),
            lf: LinkBudget::low_frequency_reference(),
            n_users: 4,
            lf_users: 4,
            tx_power_dbm: "-10:5:40".parse().expect("valid literal"),
            lf_method: LfExpectation::default(),
        }
    }
}

impl Default for CapacityConfig {
    fn default() -> Self {
        Self::reference_sweep()
    }
}

impl Experiment for CapacityConfig {
    const NAME: &'static str = "capacity";

    fn validate(&self) -> Result<(), CliError> {
        self.mm.validate().map_err(|e| CliError::field("mm", e))?;
        self.lf.validate().map_err(|e| CliError::field("lf", e))?;
        positive("n_users", self.n_users)?;
        positive("lf_users", self.lf_users)?;
        match self.lf_method {
            LfExpectation::Quadrature { nodes } => positive("lf_method.nodes", nodes),
            LfExpectation::MonteCarlo { samples, .. } => positive("lf_method.samples", samples),
        }
    }

    fn run(&self) -> Result<String, CliError> {
        let pts = capacity_comparison(
            &self.mm,
            &self.lf,
            self.n_users,
            self.lf_users,
            &self.tx_power_dbm.values(),
            &self.lf_method,
        )?;
        let mut out = String::from("snr_db,c_mm_bps,c_lf_bps,ratio\n");
        for p in pts {
            writeln!(out, "{},{},{},{}", p.snr_db, p.c_mm_bps, p.c_lf_bps, p.ratio()).unwrap();
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DopplerConfig {
    pub speed_mps: Sweep,
    pub wavelength_m: f64,
    pub angle_rad: f64,
}

impl Default for DopplerConfig {
    fn default() -> Self {
        Self {
            speed_mps: Sweep::single(20.0),
            wavelength_m: 0.005,
            angle_rad: PI / 3.0,
        }
    }
}

impl Experiment for DopplerConfig {
    const NAME: &'static str = "doppler";

    fn validate(&self) -> Result<(), CliError> {
        if !(self.wavelength_m > 0.0) {
            return Err(CliError::field("wavelength_m", "must be > 0"));
        }
        if self.speed_mps.start < 0.0 {
            return Err(CliError::field("speed_mps", "must be >= 0"));
        }
        if !self.angle_rad.is_finite() {
            return Err(CliError::field("angle_rad", "must be finite"));
        }
        Ok(())
    }

    fn run(&self) -> Result<String, CliError> {
        let mut out = String::from("speed_mps,wavelength_m,angle_rad,coherence_time_s,doppler_spread_hz\n");
        for v in self.speed_mps.values() {
            let m = MobilityParams::new(v, self.wavelength_m, self.angle_rad)?;
            writeln!(
                out,
                "{v},{},{},{},{}",
                self.wavelength_m,
                self.angle_rad,
                coherence_time_s(&m),
                doppler_spread_hz(&m)
            )
            .unwrap();
        }
        Ok(out)
    }
}

/// Scene given inline or as a path to a scene JSON file.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum SceneSource {
    Path(PathBuf),
    Inline(Box<DeploymentScene>),
}

// Hand-written so errors inside an inline scene keep their field path.
impl<'de> Deserialize<'de> for SceneSource {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> serde::de::Visitor<'de> for V {
            type Value = SceneSource;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a scene object or a path to a scene file")
            }

            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<SceneSource, E> {
                Ok(SceneSource::Path(PathBuf::from(v)))
            }

            fn visit_map<A: serde::de::MapAccess<'de>>(self, map: A) -> Result<SceneSource, A::Error> {
                let scene = DeploymentScene::deserialize(serde::de::value::MapAccessDeserializer::new(map))?;
                Ok(SceneSource::Inline(Box::new(scene)))
            }
        }
        d.deserialize_any(V)
    }
}

impl SceneSource {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("scene {}: {e}", path.display())))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        let scene: DeploymentScene = serde_path_to_error::deserialize(de).map_err(|e| {
            CliError::Config(format!("scene {}: at `{}`: {}", path.display(), e.path(), e.inner()))
        })?;
        Ok(SceneSource::Inline(Box::new(scene)))
    }

    pub fn scene(&self) -> Result<&DeploymentScene, CliError> {
        match self {
            SceneSource::Inline(s) => Ok(s),
            SceneSource::Path(p) => Err(CliError::Config(format!("scene {} was not loaded", p.display()))),
        }
    }
}

/// UAV at A, MS 1 and 2 in range, MS 3 only reachable after the first move.
pub fn three_user_scene() -> DeploymentScene {
    DeploymentScene {
        uav_pos: [0.0, -80.0, 50.0],
        users: vec![
            User { id: 1, pos: [-60.0, 0.0, 0.0] },
            User { id: 2, pos: [60.0, 0.0, 0.0] },
            User { id: 3, pos: [0.0, 120.0, 0.0] },
        ],
        env: EnvironmentProfile::urban(),
        discovery_range_m: 150.0,
        signaling_cost: 0.0,
        sweep_sectors: 16,
        link: LinkBudget::mmwave_reference(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeploySimConfig {
    pub scene: SceneSource,
    pub max_iters: usize,
}

impl Default for DeploySimConfig {
    fn default() -> Self {
        Self {
            scene: SceneSource::Inline(Box::new(three_user_scene())),
            max_iters: 10,
        }
    }
}

impl DeploySimConfig {
    pub fn scene_mut(&mut self) -> Result<&mut DeploymentScene, CliError> {
        match &mut self.scene {
            SceneSource::Inline(s) => Ok(s),
            SceneSource::Path(p) => Err(CliError::Config(format!("scene {} was not loaded", p.display()))),
        }
    }
}

impl Experiment for DeploySimConfig {
    const NAME: &'static str = "deploy-sim";

    fn resolve(&mut self, base: &Path) -> Result<(), CliError> {
        if let SceneSource::Path(p) = &self.scene {
            let full = base.join(p);
            self.scene = SceneSource::load(&full)?;
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), CliError> {
        positive("max_iters", self.max_iters)?;
        self.scene()?.validate().map_err(|e| CliError::field("scene", e))
    }

    fn run(&self) -> Result<String, CliError> {
        Ok(iterate_positioning(self.scene()?, self.max_iters)?.to_csv())
    }
}

impl DeploySimConfig {
    fn scene(&self) -> Result<&DeploymentScene, CliError> {
        self.scene.scene()
    }
}
