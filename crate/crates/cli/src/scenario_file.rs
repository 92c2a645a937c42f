//! Scenario files: TOML documents whose keys carry their units
//! (`*_hz`, `*_dbm`, `*_bps`, `*_s`). Unknown keys are rejected.
//!
//! ```toml
//! name = "scenario2"
//! seeds = [1, 2, 3]
//!
//! [nodes]
//! ue = [0.0, 0.0, 0.0]
//! uav = [30.0, 0.0, 10.0]
//!
//! [[buildings]]
//! min = [10.0, 0.0, -30.0]
//! max = [20.0, 50.0, 30.0]
//!
//! [radio]
//! frequency_hz = 5e9
//! ```
//!
//! Only `nodes.ue`, `nodes.uav` and `radio.frequency_hz` are required; every
//! other key falls back to the library defaults.

use std::path::Path;

use aglink_core::{
    Aabb, ErrorModelParams, ObstacleLossParams, Point3, RadioConfig, Scenario, TcpParams,
    TrafficMode,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: Option<String>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    pub nodes: NodesSection,
    #[serde(default)]
    pub buildings: Vec<BuildingSection>,
    pub radio: RadioSection,
    #[serde(default)]
    pub mac: MacSection,
    #[serde(default)]
    pub obstacle_params: ObstacleSection,
    #[serde(default)]
    pub error_params: ErrorSection,
    #[serde(default)]
    pub traffic: TrafficSection,
    #[serde(default)]
    pub timing: TimingSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodesSection {
    pub ue: [f64; 3],
    pub uav: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildingSection {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioSection {
    pub frequency_hz: f64,
    pub tx_power_dbm: Option<f64>,
    pub antenna_gain_tx_dbi: Option<f64>,
    pub antenna_gain_rx_dbi: Option<f64>,
    pub channel_width_hz: Option<f64>,
    pub noise_figure_db: Option<f64>,
    pub phy_rate_bps: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MacSection {
    pub per_attempt_overhead_s: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleSection {
    pub wall_loss_db: Option<f64>,
    pub walls_per_building: Option<u32>,
    pub shadowing_sigma_los_db: Option<f64>,
    pub shadowing_sigma_nlos_db: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorSection {
    pub snr_mid_db: Option<f64>,
    pub steepness_db: Option<f64>,
    pub max_retries: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficSection {
    pub mode: Option<TrafficMode>,
    pub offered_load_bps: Option<f64>,
    pub packet_bytes: Option<u32>,
    pub queue_capacity_packets: Option<usize>,
    pub tcp_window_packets: Option<u32>,
    pub tcp_rto_multiplier: Option<f64>,
    pub tcp_max_retransmissions: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingSection {
    pub warmup_s: Option<f64>,
    pub measure_s: Option<f64>,
}

fn point([x, y, z]: [f64; 3]) -> Point3 {
    Point3::new(x, y, z)
}

impl ScenarioFile {
    /// Builds and validates the scenario; `fallback_name` is used when the
    /// file has no `name` key.
    pub fn to_scenario(&self, fallback_name: &str) -> Result<Scenario> {
        let d = Scenario::default();
        let buildings = self
            .buildings
            .iter()
            .enumerate()
            .map(|(i, b)| {
                Aabb::new(point(b.min), point(b.max))
                    .map_err(|e| CliError::Validation(format!("buildings[{i}]: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let r = &self.radio;
        let rd = RadioConfig::default();
        let o = &self.obstacle_params;
        let od = ObstacleLossParams::default();
        let e = &self.error_params;
        let ed = ErrorModelParams::default();
        let t = &self.traffic;
        let td = TcpParams::default();
        let scenario = Scenario {
            name: self
                .name
                .clone()
                .unwrap_or_else(|| fallback_name.to_string()),
            ue_pos: point(self.nodes.ue),
            uav_pos: point(self.nodes.uav),
            buildings,
            radio: RadioConfig {
                frequency_hz: r.frequency_hz,
                tx_power_dbm: r.tx_power_dbm.unwrap_or(rd.tx_power_dbm),
                antenna_gain_tx_dbi: r.antenna_gain_tx_dbi.unwrap_or(rd.antenna_gain_tx_dbi),
                antenna_gain_rx_dbi: r.antenna_gain_rx_dbi.unwrap_or(rd.antenna_gain_rx_dbi),
                channel_width_hz: r.channel_width_hz.unwrap_or(rd.channel_width_hz),
                noise_figure_db: r.noise_figure_db.unwrap_or(rd.noise_figure_db),
                phy_rate_bps: r.phy_rate_bps.unwrap_or(rd.phy_rate_bps),
            },
            obstacle_params: ObstacleLossParams {
                wall_loss_db: o.wall_loss_db.unwrap_or(od.wall_loss_db),
                walls_per_building: o.walls_per_building.unwrap_or(od.walls_per_building),
                shadowing_sigma_los_db: o
                    .shadowing_sigma_los_db
                    .unwrap_or(od.shadowing_sigma_los_db),
                shadowing_sigma_nlos_db: o
                    .shadowing_sigma_nlos_db
                    .unwrap_or(od.shadowing_sigma_nlos_db),
            },
            error_params: ErrorModelParams {
                snr_mid_db: e.snr_mid_db.unwrap_or(ed.snr_mid_db),
                steepness_db: e.steepness_db.unwrap_or(ed.steepness_db),
                max_retries: e.max_retries.unwrap_or(ed.max_retries),
            },
            per_attempt_overhead_s: self
                .mac
                .per_attempt_overhead_s
                .unwrap_or(d.per_attempt_overhead_s),
            offered_load_bps: t.offered_load_bps.unwrap_or(d.offered_load_bps),
            packet_bytes: t.packet_bytes.unwrap_or(d.packet_bytes),
            warmup_s: self.timing.warmup_s.unwrap_or(d.warmup_s),
            measure_s: self.timing.measure_s.unwrap_or(d.measure_s),
            queue_capacity_packets: t.queue_capacity_packets.unwrap_or(d.queue_capacity_packets),
            mode: t.mode.unwrap_or(d.mode),
            tcp: TcpParams {
                window_packets: t.tcp_window_packets.unwrap_or(td.window_packets),
                rto_multiplier: t.tcp_rto_multiplier.unwrap_or(td.rto_multiplier),
                max_retransmissions: t.tcp_max_retransmissions.unwrap_or(td.max_retransmissions),
            },
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub seeds: Vec<u64>,
}

/// Parses without validating.
pub fn parse_str(text: &str, path: &Path) -> Result<ScenarioFile> {
    let de = toml::Deserializer::parse(text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner().to_string();
        CliError::Parse {
            path: path.to_path_buf(),
            message: if field == "." {
                inner
            } else {
                format!("field `{field}`: {inner}")
            },
        }
    })
}

pub fn load_str(text: &str, path: &Path) -> Result<LoadedScenario> {
    let file = parse_str(text, path)?;
    let fallback = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("scenario");
    Ok(LoadedScenario {
        scenario: file.to_scenario(fallback)?,
        seeds: file.seeds.clone(),
    })
}

pub fn load(path: &Path) -> Result<LoadedScenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
    load_str(&text, path)
}
