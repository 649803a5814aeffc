//! Scenario configuration: TOML schema, defaults and validation.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::net::{ModelError, Position, RadioParams};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("unknown strategy `{0}` (expected one of link-ptx, random-pc, lic, hcc, heed, gpsr)")]
    UnknownStrategy(String),
    #[error("`{0}` is not a sweepable parameter")]
    NotSweepable(String),
}

impl ConfigError {
    fn invalid(key: &str, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            key: key.to_string(),
            reason: reason.into(),
        }
    }

    /// Key path the error refers to, when there is one.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::Invalid { key, .. } => Some(key),
            _ => None,
        }
    }
}

/// Clusterhead/gateway selection strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Passive clustering with PTX-derived candidate priority.
    LinkPtx,
    /// Passive clustering with uniformly random candidate backoff.
    RandomPc,
    /// Lowest id wins contention.
    Lic,
    /// Highest degree wins contention.
    Hcc,
    /// Residual-energy probabilistic self-election.
    Heed,
    /// Greedy geographic forwarding without clustering.
    Gpsr,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::LinkPtx,
        Strategy::RandomPc,
        Strategy::Lic,
        Strategy::Hcc,
        Strategy::Heed,
        Strategy::Gpsr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::LinkPtx => "link-ptx",
            Strategy::RandomPc => "random-pc",
            Strategy::Lic => "lic",
            Strategy::Hcc => "hcc",
            Strategy::Heed => "heed",
            Strategy::Gpsr => "gpsr",
        }
    }

    pub fn uses_clustering(self) -> bool {
        self != Strategy::Gpsr
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s.trim())
            .ok_or_else(|| ConfigError::UnknownStrategy(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    #[default]
    UniformRandom,
    Grid,
}

/// Ground-truth delivery probability of each directed link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LinkProbability {
    Fixed(f64),
    Uniform { min: f64, max: f64 },
}

impl Default for LinkProbability {
    fn default() -> Self {
        LinkProbability::Fixed(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Region {
    pub fn contains(&self, p: &Position) -> bool {
        (self.x_min..=self.x_max).contains(&p.x) && (self.y_min..=self.y_max).contains(&p.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadioConfig {
    pub e_elec: f64,
    pub eps_fs: f64,
    pub eps_mp: f64,
    /// Must equal `sqrt(eps_fs / eps_mp)` when given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d0: Option<f64>,
}

impl Default for RadioConfig {
    fn default() -> Self {
        let rp = RadioParams::default();
        Self {
            e_elec: rp.e_elec,
            eps_fs: rp.eps_fs,
            eps_mp: rp.eps_mp,
            d0: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PacketSizes {
    pub report_bits: u64,
    pub probe_bits: u64,
    pub query_bits: u64,
    pub ack_bits: u64,
}

impl Default for PacketSizes {
    fn default() -> Self {
        Self {
            report_bits: 1000,
            probe_bits: 128,
            query_bits: 256,
            ack_bits: 64,
        }
    }
}

fn d_field() -> f64 {
    200.0
}
fn d_range() -> f64 {
    30.0
}
fn d_true() -> bool {
    true
}
fn d_e_ini() -> f64 {
    0.5
}
fn d_n_req() -> f64 {
    1.0
}
fn d_t_slot() -> f64 {
    0.01
}
fn d_one() -> f64 {
    1.0
}
fn d_c_prob() -> f64 {
    0.05
}
fn d_duration() -> f64 {
    300.0
}
fn d_window() -> usize {
    10
}
fn d_query_start() -> f64 {
    5.0
}
fn d_retries() -> u32 {
    3
}
fn d_hop_delay() -> f64 {
    0.001
}
fn d_zero_windows() -> u32 {
    10
}
fn d_drain() -> f64 {
    10.0
}

/// Everything needed to reproduce one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub node_count: usize,
    pub seed: u64,
    pub strategy: Strategy,

    #[serde(default = "d_field")]
    pub field_width: f64,
    #[serde(default = "d_field")]
    pub field_height: f64,
    #[serde(default = "d_range")]
    pub comm_range: f64,
    #[serde(default)]
    pub placement: Placement,
    /// Redraw random placements until the graph is connected.
    #[serde(default = "d_true")]
    pub require_connected: bool,
    /// Put the sink (node 0) at the field center.
    #[serde(default = "d_true")]
    pub sink_at_center: bool,
    /// The sink draws no battery energy.
    #[serde(default = "d_true")]
    pub sink_mains_powered: bool,

    #[serde(default = "d_e_ini")]
    pub e_ini: f64,
    /// Report requirement: minimum delivered reports per second, also the PTX threshold.
    #[serde(default = "d_n_req")]
    pub n_req: f64,
    #[serde(default = "d_t_slot")]
    pub t_slot: f64,
    /// Numerator of the backoff slot count, `floor(scale / rho)`.
    #[serde(default = "d_one")]
    pub backoff_scale: f64,
    #[serde(default = "d_c_prob")]
    pub heed_c_prob: f64,

    #[serde(default = "d_duration")]
    pub duration: f64,
    #[serde(default)]
    pub link_p_true: LinkProbability,
    #[serde(default = "d_one")]
    pub probe_period: f64,
    /// Probe periods remembered per link direction.
    #[serde(default = "d_window")]
    pub link_window: usize,
    #[serde(default = "d_one")]
    pub sampling_interval: f64,
    #[serde(default = "d_query_start")]
    pub query_start: f64,
    /// Re-flood the query this often; a single query when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query_period: Option<f64>,
    #[serde(default = "d_one")]
    pub report_interval: f64,
    #[serde(default = "d_retries")]
    pub max_retries: u32,
    #[serde(default = "d_hop_delay")]
    pub hop_delay: f64,
    /// Stop after this many consecutive sampling windows without a delivery.
    #[serde(default = "d_zero_windows")]
    pub zero_delivery_windows: u32,
    /// Simulated seconds allowed after `duration` for in-flight reports to settle.
    #[serde(default = "d_drain")]
    pub drain_limit: f64,
    #[serde(default)]
    pub trace_routes: bool,

    #[serde(default)]
    pub radio: RadioConfig,
    #[serde(default)]
    pub packets: PacketSizes,
    /// Area of interest for the query; the whole field when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<Region>,
}

/// Parameters that `sweep` may vary.
pub const SWEEPABLE: &[&str] = &[
    "node_count",
    "seed",
    "comm_range",
    "field_width",
    "field_height",
    "e_ini",
    "n_req",
    "t_slot",
    "backoff_scale",
    "duration",
    "probe_period",
    "report_interval",
    "max_retries",
    "link_window",
];

impl ScenarioConfig {
    /// Minimal config with every optional key at its default.
    pub fn new(node_count: usize, seed: u64, strategy: Strategy) -> Self {
        let text = format!("node_count = {node_count}\nseed = {seed}\nstrategy = \"{strategy}\"\n");
        toml::from_str(&text).expect("minimal config always parses")
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn radio_params(&self) -> Result<RadioParams, ModelError> {
        let mut rp = RadioParams::new(self.radio.e_elec, self.radio.eps_fs, self.radio.eps_mp, self.packets.report_bits)?;
        if let Some(d0) = self.radio.d0 {
            rp.d0 = d0;
            rp.validate()?;
        }
        Ok(rp)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        fn positive(key: &str, v: f64) -> Result<(), ConfigError> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::invalid(key, format!("must be positive and finite, got {v}")))
            }
        }
        fn non_negative(key: &str, v: f64) -> Result<(), ConfigError> {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::invalid(key, format!("must be non-negative and finite, got {v}")))
            }
        }

        if self.node_count == 0 {
            return Err(ConfigError::invalid("node_count", "must be at least 1"));
        }
        positive("field_width", self.field_width)?;
        positive("field_height", self.field_height)?;
        positive("comm_range", self.comm_range)?;
        positive("e_ini", self.e_ini)?;
        positive("n_req", self.n_req)?;
        positive("t_slot", self.t_slot)?;
        positive("backoff_scale", self.backoff_scale)?;
        if !(self.heed_c_prob > 0.0 && self.heed_c_prob <= 1.0) {
            return Err(ConfigError::invalid("heed_c_prob", format!("must lie in (0, 1], got {}", self.heed_c_prob)));
        }
        positive("duration", self.duration)?;
        positive("probe_period", self.probe_period)?;
        positive("sampling_interval", self.sampling_interval)?;
        positive("report_interval", self.report_interval)?;
        non_negative("query_start", self.query_start)?;
        if let Some(p) = self.query_period {
            positive("query_period", p)?;
        }
        positive("hop_delay", self.hop_delay)?;
        non_negative("drain_limit", self.drain_limit)?;
        if self.link_window == 0 {
            return Err(ConfigError::invalid("link_window", "must be at least 1"));
        }
        if self.zero_delivery_windows == 0 {
            return Err(ConfigError::invalid("zero_delivery_windows", "must be at least 1"));
        }
        match self.link_p_true {
            LinkProbability::Fixed(p) if !(p > 0.0 && p <= 1.0) => {
                return Err(ConfigError::invalid("link_p_true", format!("must lie in (0, 1], got {p}")));
            }
            LinkProbability::Uniform { min, max } if !(min > 0.0 && min <= max && max <= 1.0) => {
                return Err(ConfigError::invalid(
                    "link_p_true",
                    format!("range must satisfy 0 < min <= max <= 1, got [{min}, {max}]"),
                ));
            }
            _ => {}
        }
        for (key, bits) in [
            ("packets.report_bits", self.packets.report_bits),
            ("packets.probe_bits", self.packets.probe_bits),
            ("packets.query_bits", self.packets.query_bits),
            ("packets.ack_bits", self.packets.ack_bits),
        ] {
            if bits == 0 {
                return Err(ConfigError::invalid(key, "must be at least 1 bit"));
            }
        }
        for (key, v) in [
            ("radio.e_elec", self.radio.e_elec),
            ("radio.eps_fs", self.radio.eps_fs),
            ("radio.eps_mp", self.radio.eps_mp),
        ] {
            positive(key, v)?;
        }
        if let Some(d0) = self.radio.d0 {
            positive("radio.d0", d0)?;
        }
        self.radio_params()
            .map_err(|e| ConfigError::invalid("radio.d0", e.to_string()))?;
        if let Some(r) = &self.region {
            for (key, v) in [
                ("region.x_min", r.x_min),
                ("region.y_min", r.y_min),
                ("region.x_max", r.x_max),
                ("region.y_max", r.y_max),
            ] {
                if !v.is_finite() {
                    return Err(ConfigError::invalid(key, "must be finite"));
                }
            }
            if r.x_min > r.x_max || r.y_min > r.y_max {
                return Err(ConfigError::invalid("region", "min corner must not exceed max corner"));
            }
        }
        Ok(())
    }

    /// Returns a copy with one sweepable parameter set from its textual value.
    pub fn with_param(&self, name: &str, value: &str) -> Result<Self, ConfigError> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
            v.trim()
                .parse()
                .map_err(|_| ConfigError::invalid(key, format!("cannot parse `{v}`")))
        }
        let mut c = self.clone();
        match name {
            "node_count" => c.node_count = num(name, value)?,
            "seed" => c.seed = num(name, value)?,
            "comm_range" => c.comm_range = num(name, value)?,
            "field_width" => c.field_width = num(name, value)?,
            "field_height" => c.field_height = num(name, value)?,
            "e_ini" => c.e_ini = num(name, value)?,
            "n_req" => c.n_req = num(name, value)?,
            "t_slot" => c.t_slot = num(name, value)?,
            "backoff_scale" => c.backoff_scale = num(name, value)?,
            "duration" => c.duration = num(name, value)?,
            "probe_period" => c.probe_period = num(name, value)?,
            "report_interval" => c.report_interval = num(name, value)?,
            "max_retries" => c.max_retries = num(name, value)?,
            "link_window" => c.link_window = num(name, value)?,
            other => return Err(ConfigError::NotSweepable(other.to_string())),
        }
        c.validate()?;
        Ok(c)
    }
}

/// Reads and validates a config file.
pub fn parse_config(path: impl AsRef<Path>) -> Result<ScenarioConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ScenarioConfig::from_toml_str(&text)
}
