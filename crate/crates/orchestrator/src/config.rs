//! Campaign config: a single TOML file with `[campaign]`, `[vehicle]`,
//! `[scene]`, `[matrix]` and `[[profiles]]` sections, plus optional
//! `[planner]`, `[conditions]`, `[sensors]` and `[scheduler]` overrides.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use pground_core::dynamics::VehicleParams;
use pground_core::scenario::{expand_matrix, make_batches, BatchPlan, ConditionTables, Scene, SceneSpec, TestCase, TestMatrix};
use pground_core::sensors::{CameraConfig, EncoderConfig, LidarConfig, NoiseModel};
use pground_core::sut::{AebPlannerConfig, DetectorProfile};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// File name of the resolved config written into each campaign directory.
pub const RESOLVED_CONFIG: &str = "resolved_config.toml";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    /// KPI log and verdict only.
    #[default]
    Headless,
    /// Adds the per-tick trace.
    #[serde(alias = "record")]
    RecordReplay,
    /// Adds the trace and publishes every record on the stream server.
    #[serde(alias = "stream")]
    LiveStream,
}

impl RunMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RunMode::Headless => "headless",
            RunMode::RecordReplay => "record",
            RunMode::LiveStream => "stream",
        }
    }

    pub fn records_trace(self) -> bool {
        !matches!(self, RunMode::Headless)
    }
}

impl fmt::Display for RunMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RunMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "headless" => Ok(RunMode::Headless),
            "record" | "record_replay" => Ok(RunMode::RecordReplay),
            "stream" | "live_stream" => Ok(RunMode::LiveStream),
            _ => Err(Error::Config(format!("unknown mode `{s}` (headless, record, stream)"))),
        }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_workers() -> usize {
    1
}
fn default_dt() -> f64 {
    pground_core::dynamics::DEFAULT_DT
}
fn default_fos() -> f64 {
    1.0
}
fn default_max_time() -> f64 {
    120.0
}
fn default_stop_hold() -> f64 {
    3.0
}
fn default_resource_rate() -> f64 {
    0.2
}
fn default_stream_addr() -> String {
    "127.0.0.1:7878".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignSection {
    pub name: String,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub mode: RunMode,
    /// Simulation tick, s.
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Factor-of-safety distance, m.
    #[serde(default = "default_fos")]
    pub fos: f64,
    /// Simulated-time budget per case, s.
    #[serde(default = "default_max_time")]
    pub max_time: f64,
    /// Run on for this long after the ego stops post-trigger or collides, s.
    #[serde(default = "default_stop_hold")]
    pub stop_hold: f64,
    /// Run exactly this many ticks instead of using the stop condition.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_ticks: Option<usize>,
    /// Let cases of later batches start while a batch is still running.
    #[serde(default)]
    pub cross_batch: bool,
    /// Resource sampling rate, Hz.
    #[serde(default = "default_resource_rate")]
    pub resource_rate: f64,
    #[serde(default = "default_stream_addr")]
    pub stream_addr: String,
    /// Start each case at the lane target speed instead of at rest.
    #[serde(default = "yes")]
    pub rolling_start: bool,
}

fn yes() -> bool {
    true
}

fn default_seed_salt() -> u64 {
    0x5EED
}

/// A SUT variant implemented by an external program speaking the
/// line protocol of [`pground_core::sut::ExternalSut`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalSutConfig {
    pub name: String,
    /// Program and arguments.
    pub command: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorsConfig {
    pub camera: CameraConfig,
    pub lidar: LidarConfig,
    pub lidar_enabled: bool,
    pub encoder: EncoderConfig,
    pub ins_noise: NoiseModel,
    pub lidar_noise: NoiseModel,
    /// Mixed with each case seed to seed the sensor noise streams.
    #[serde(default = "default_seed_salt")]
    pub seed_salt: u64,
}

impl Default for SensorsConfig {
    fn default() -> Self {
        SensorsConfig {
            camera: CameraConfig::default(),
            lidar: LidarConfig::default(),
            lidar_enabled: true,
            encoder: EncoderConfig::default(),
            ins_noise: NoiseModel::default(),
            lidar_noise: NoiseModel::default(),
            seed_salt: default_seed_salt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchedulerConfig {
    /// Program invoked by each array task.
    pub binary: String,
    /// Config path as seen from the cluster nodes. Defaults to the path the
    /// config was loaded from.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_path: Option<String>,
    pub cpus_per_task: usize,
    pub mem_gb: usize,
    pub walltime: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partition: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub queue: Option<String>,
    pub log_dir: String,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig {
            binary: "pground".into(),
            config_path: None,
            cpus_per_task: 8,
            mem_gb: 16,
            walltime: "01:00:00".into(),
            partition: None,
            queue: None,
            log_dir: "logs".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub campaign: CampaignSection,
    pub vehicle: VehicleParams,
    pub scene: SceneSpec,
    pub matrix: TestMatrix,
    pub profiles: Vec<DetectorProfile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub external: Vec<ExternalSutConfig>,
    #[serde(default)]
    pub planner: AebPlannerConfig,
    #[serde(default)]
    pub conditions: ConditionTables,
    #[serde(default)]
    pub sensors: SensorsConfig,
    #[serde(default)]
    pub scheduler: SchedulerConfig,
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        let c = &self.campaign;
        if c.name.is_empty() || c.name.contains(['/', '\\']) || c.name == "." || c.name == ".." {
            return Err(Error::Config(format!("campaign.name `{}` is not a valid directory name", c.name)));
        }
        if c.workers == 0 {
            return Err(Error::Config("campaign.workers must be >= 1".into()));
        }
        let positive = [("dt", c.dt), ("max_time", c.max_time), ("resource_rate", c.resource_rate)];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("campaign.{key} must be a finite value > 0, got {v}")));
            }
        }
        if !(c.fos >= 0.0) || !(c.stop_hold >= 0.0) {
            return Err(Error::Config("campaign.fos and campaign.stop_hold must be >= 0".into()));
        }
        if c.fixed_ticks == Some(0) {
            return Err(Error::Config("campaign.fixed_ticks must be >= 1".into()));
        }
        self.vehicle.validate()?;
        self.matrix.validate()?;
        self.planner.validate()?;
        self.conditions.validate()?;
        self.sensors.camera.intrinsics.validate()?;
        self.sensors.lidar.validate()?;
        self.sensors.encoder.validate()?;
        self.sensors.ins_noise.validate()?;
        self.sensors.lidar_noise.validate()?;
        let mut names = BTreeSet::new();
        for p in &self.profiles {
            p.validate()?;
            if !names.insert(p.name.as_str()) {
                return Err(Error::Config(format!("duplicate SUT name `{}`", p.name)));
            }
        }
        for e in &self.external {
            if e.command.is_empty() {
                return Err(Error::Config(format!("external SUT `{}` has an empty command", e.name)));
            }
            if !names.insert(e.name.as_str()) {
                return Err(Error::Config(format!("duplicate SUT name `{}`", e.name)));
            }
        }
        let unknown: Vec<&str> = self
            .matrix
            .sut_variants
            .iter()
            .map(String::as_str)
            .filter(|s| !names.contains(s))
            .collect();
        if !unknown.is_empty() {
            return Err(Error::Config(format!("matrix.sut_variants references unknown profiles: {}", unknown.join(", "))));
        }
        self.scene.build()?;
        Ok(())
    }

    pub fn build_scene(&self) -> Result<Scene> {
        Ok(self.scene.build()?)
    }

    pub fn cases(&self) -> Result<Vec<TestCase>> {
        let scene = self.build_scene()?;
        Ok(expand_matrix(&self.matrix, &self.conditions, &scene.name, self.campaign.max_time))
    }

    pub fn batches(&self) -> Result<BatchPlan> {
        Ok(make_batches(&self.cases()?, self.matrix.batch_size)?)
    }

    pub fn profile(&self, name: &str) -> Option<&DetectorProfile> {
        self.profiles.iter().find(|p| p.name == name)
    }

    pub fn external_sut(&self, name: &str) -> Option<&ExternalSutConfig> {
        self.external.iter().find(|e| e.name == name)
    }

    /// Directory that holds every output of this campaign.
    pub fn campaign_dir(&self) -> PathBuf {
        self.campaign.output_dir.join(&self.campaign.name)
    }

    /// Config with every default filled in, as TOML.
    pub fn to_resolved_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(format!("cannot serialize resolved config: {e}")))
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

fn located(text: &str, origin: &str, e: toml::de::Error) -> Error {
    let msg = e.message().trim().to_string();
    match e.span() {
        Some(span) => Error::Config(format!("{origin}:{}: {msg}", line_of(text, span.start))),
        None => Error::Config(format!("{origin}: {msg}")),
    }
}

/// Keys of a default-serialized value, used to name missing required keys.
fn required_keys<T: Serialize>(value: &T) -> Vec<String> {
    match toml::Table::try_from(value) {
        Ok(t) => t.keys().cloned().collect(),
        Err(_) => Vec::new(),
    }
}

fn missing_keys(root: &toml::Table) -> Vec<String> {
    let mut missing = Vec::new();
    let mut section = |name: &str, keys: &[String]| match root.get(name) {
        None => missing.push(name.to_string()),
        Some(toml::Value::Table(t)) => {
            for k in keys {
                if !t.contains_key(k) {
                    missing.push(format!("{name}.{k}"));
                }
            }
        }
        Some(_) => {}
    };
    section("campaign", &["name".to_string()]);
    section("vehicle", &required_keys(&VehicleParams::default()));
    section("scene", &[]);
    section("matrix", &["sut_variants", "times", "weathers", "batch_size", "base_seed"].map(String::from));
    if !root.contains_key("profiles") {
        missing.push("profiles".into());
    }
    missing
}

/// Parses and validates config text. `origin` names the source in errors.
pub fn parse_config(text: &str, origin: &str) -> Result<CampaignConfig> {
    let root: toml::Table = text.parse().map_err(|e| located(text, origin, e))?;
    let missing = missing_keys(&root);
    if !missing.is_empty() {
        return Err(Error::Config(format!("{origin}: missing required keys: {}", missing.join(", "))));
    }
    let cfg: CampaignConfig = toml::from_str(text).map_err(|e| located(text, origin, e))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<CampaignConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut cfg = parse_config(&text, &path.display().to_string())?;
    if cfg.scheduler.config_path.is_none() {
        cfg.scheduler.config_path = Some(path.display().to_string());
    }
    Ok(cfg)
}

/// Writes the resolved config into the campaign directory and returns its path.
pub fn write_resolved(cfg: &CampaignConfig) -> Result<PathBuf> {
    let dir = cfg.campaign_dir();
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let path = dir.join(RESOLVED_CONFIG);
    std::fs::write(&path, cfg.to_resolved_toml()?).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
