//! Run configuration: a flat key=value file format plus CLI overrides, all
//! mapping onto the core `RunSettings`. Unknown keys are rejected so typos
//! fail loudly instead of silently running defaults.

use std::fmt::Write as _;

use cogent_core::controller::DecisionTree;
use cogent_core::engine::{Architecture, CpuModel, LatencyMode, LatencyModel, RunSettings};
use cogent_core::genhit::CostModel;
use cogent_core::judgment::ShieldConfig;
use cogent_core::policy::PolicyKind;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {0}: expected `key=value`, found `{1}`")]
    Syntax(usize, String),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: `{value}` ({detail})")]
    BadValue { key: String, value: String, detail: String },
}

/// The scenario keys, in cost-model index order.
const SCENARIOS: [&str; 5] = ["disassemble", "combine", "reshape", "reformat", "revise"];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub architecture: Architecture,
    pub policy: PolicyKind,
    pub capacity_bytes: u64,
    pub two_pronged: bool,
    pub window_us: u64,
    pub record_events: bool,
    pub latency_mode: LatencyMode,
    pub hit_us: u64,
    pub origin_fetch_us: u64,
    pub write_us: u64,
    pub send_us: u64,
    pub judgment_us: u64,
    pub pseudo_send_us: u64,
    pub gen_base_us: [u64; 5],
    pub gen_per_byte_us: [f64; 5],
    pub cpu_cores_per_generation: f64,
    pub cpu_cores: f64,
    pub cpu_utilization_cap: f64,
    pub hamming_threshold: u32,
    pub scenario_enabled: [bool; 5],
    pub time_check: bool,
    pub cpu_check: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let latency = LatencyModel::default();
        let cost = CostModel::default();
        let cpu = CpuModel::default();
        let shield = ShieldConfig::default();
        RunConfig {
            architecture: Architecture::Cogent,
            policy: PolicyKind::Lru,
            capacity_bytes: 64 << 30,
            two_pronged: false,
            window_us: 1_000_000,
            record_events: false,
            latency_mode: latency.mode,
            hit_us: latency.hit_us,
            origin_fetch_us: latency.origin_fetch_us,
            write_us: latency.write_us,
            send_us: latency.send_us,
            judgment_us: latency.judgment_us,
            pseudo_send_us: latency.pseudo_send_us,
            gen_base_us: cost.base_us,
            gen_per_byte_us: cost.per_byte_us,
            cpu_cores_per_generation: cost.cpu_cores_per_generation,
            cpu_cores: cpu.cores,
            cpu_utilization_cap: cpu.utilization_cap,
            hamming_threshold: shield.hamming_threshold,
            scenario_enabled: shield.scenario_enabled,
            time_check: shield.time_check,
            cpu_check: shield.cpu_check,
        }
    }
}

fn parse_as<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: ToString,
{
    value.parse().map_err(|e: T::Err| ConfigError::BadValue {
        key: key.into(),
        value: value.into(),
        detail: e.to_string(),
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "1" | "on" => Ok(true),
        "false" | "0" | "off" => Ok(false),
        _ => Err(ConfigError::BadValue {
            key: key.into(),
            value: value.into(),
            detail: "expected true/false".into(),
        }),
    }
}

pub fn parse_architecture(value: &str) -> Option<Architecture> {
    match value {
        "original" => Some(Architecture::Original),
        "cogent" => Some(Architecture::Cogent),
        _ => None,
    }
}

pub fn architecture_name(a: Architecture) -> &'static str {
    match a {
        Architecture::Original => "original",
        Architecture::Cogent => "cogent",
    }
}

impl RunConfig {
    /// Applies one `key=value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "architecture" => {
                self.architecture =
                    parse_architecture(value).ok_or_else(|| ConfigError::BadValue {
                        key: key.into(),
                        value: value.into(),
                        detail: "expected original|cogent".into(),
                    })?;
            }
            "policy" => {
                self.policy = PolicyKind::parse(value).ok_or_else(|| ConfigError::BadValue {
                    key: key.into(),
                    value: value.into(),
                    detail: "expected lru|arc|lhd|lru-mad".into(),
                })?;
            }
            "capacity_bytes" => self.capacity_bytes = parse_as(key, value)?,
            "two_pronged" => self.two_pronged = parse_bool(key, value)?,
            "window_us" => self.window_us = parse_as(key, value)?,
            "record_events" => self.record_events = parse_bool(key, value)?,
            "latency_mode" => {
                self.latency_mode = match value {
                    "idealized" => LatencyMode::IdealizedHitZero,
                    "measured" => LatencyMode::Measured,
                    _ => {
                        return Err(ConfigError::BadValue {
                            key: key.into(),
                            value: value.into(),
                            detail: "expected idealized|measured".into(),
                        })
                    }
                };
            }
            "hit_us" => self.hit_us = parse_as(key, value)?,
            "origin_fetch_us" => self.origin_fetch_us = parse_as(key, value)?,
            "write_us" => self.write_us = parse_as(key, value)?,
            "send_us" => self.send_us = parse_as(key, value)?,
            "judgment_us" => self.judgment_us = parse_as(key, value)?,
            "pseudo_send_us" => self.pseudo_send_us = parse_as(key, value)?,
            "cpu_cores_per_generation" => self.cpu_cores_per_generation = parse_as(key, value)?,
            "cpu_cores" => self.cpu_cores = parse_as(key, value)?,
            "cpu_utilization_cap" => self.cpu_utilization_cap = parse_as(key, value)?,
            "hamming_threshold" => self.hamming_threshold = parse_as(key, value)?,
            "time_check" => self.time_check = parse_bool(key, value)?,
            "cpu_check" => self.cpu_check = parse_bool(key, value)?,
            _ => {
                for (i, s) in SCENARIOS.iter().enumerate() {
                    if key == format!("gen_base_us.{s}") {
                        self.gen_base_us[i] = parse_as(key, value)?;
                        return Ok(());
                    }
                    if key == format!("gen_per_byte_us.{s}") {
                        self.gen_per_byte_us[i] = parse_as(key, value)?;
                        return Ok(());
                    }
                    if key == format!("scenario.{s}") {
                        self.scenario_enabled[i] = parse_bool(key, value)?;
                        return Ok(());
                    }
                }
                return Err(ConfigError::UnknownKey(key.into()));
            }
        }
        Ok(())
    }

    /// Parses a config file body: one `key=value` per line, `#` comments.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax(i + 1, line.into()))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Deterministic listing of every setting, parseable by [`apply_text`].
    ///
    /// [`apply_text`]: RunConfig::apply_text
    pub fn echo(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("architecture", architecture_name(self.architecture).into());
        kv("policy", self.policy.as_str().into());
        kv("capacity_bytes", self.capacity_bytes.to_string());
        kv("two_pronged", self.two_pronged.to_string());
        kv("window_us", self.window_us.to_string());
        kv("record_events", self.record_events.to_string());
        kv(
            "latency_mode",
            match self.latency_mode {
                LatencyMode::IdealizedHitZero => "idealized".into(),
                LatencyMode::Measured => "measured".into(),
            },
        );
        kv("hit_us", self.hit_us.to_string());
        kv("origin_fetch_us", self.origin_fetch_us.to_string());
        kv("write_us", self.write_us.to_string());
        kv("send_us", self.send_us.to_string());
        kv("judgment_us", self.judgment_us.to_string());
        kv("pseudo_send_us", self.pseudo_send_us.to_string());
        for (i, s) in SCENARIOS.iter().enumerate() {
            kv(&format!("gen_base_us.{s}"), self.gen_base_us[i].to_string());
            kv(&format!("gen_per_byte_us.{s}"), self.gen_per_byte_us[i].to_string());
            kv(&format!("scenario.{s}"), self.scenario_enabled[i].to_string());
        }
        kv("cpu_cores_per_generation", self.cpu_cores_per_generation.to_string());
        kv("cpu_cores", self.cpu_cores.to_string());
        kv("cpu_utilization_cap", self.cpu_utilization_cap.to_string());
        kv("hamming_threshold", self.hamming_threshold.to_string());
        kv("time_check", self.time_check.to_string());
        kv("cpu_check", self.cpu_check.to_string());
        out
    }

    pub fn to_settings(&self, tree: Option<DecisionTree>) -> RunSettings {
        RunSettings {
            architecture: self.architecture,
            policy: self.policy,
            capacity_bytes: self.capacity_bytes,
            latency: LatencyModel {
                mode: self.latency_mode,
                hit_us: self.hit_us,
                origin_fetch_us: self.origin_fetch_us,
                write_us: self.write_us,
                send_us: self.send_us,
                judgment_us: self.judgment_us,
                pseudo_send_us: self.pseudo_send_us,
            },
            cost: CostModel {
                base_us: self.gen_base_us,
                per_byte_us: self.gen_per_byte_us,
                cpu_cores_per_generation: self.cpu_cores_per_generation,
            },
            cpu: CpuModel::new(self.cpu_cores, self.cpu_utilization_cap),
            shield: ShieldConfig {
                hamming_threshold: self.hamming_threshold,
                scenario_enabled: self.scenario_enabled,
                time_check: self.time_check,
                cpu_check: self.cpu_check,
            },
            two_pronged: self.two_pronged,
            tree,
            window_us: self.window_us,
            record_events: self.record_events,
            warm: Vec::new(),
        }
    }
}
