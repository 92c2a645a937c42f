//! Propagation loss and link budget.
//!
//! Clear paths use free-space (Friis) loss. Blocked paths add a fixed
//! penetration loss for every wall of every building the direct segment
//! crosses. Both cases add one log-normal shadowing term whose spread
//! depends on whether the path is clear.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{positive, Error, Result};
use crate::geom::{distance, line_of_sight, Aabb, Point3};

pub const SPEED_OF_LIGHT_M_PER_S: f64 = 299_792_458.0;

/// Thermal noise density at 290 K, rounded.
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioConfig {
    pub frequency_hz: f64,
    pub tx_power_dbm: f64,
    pub antenna_gain_tx_dbi: f64,
    pub antenna_gain_rx_dbi: f64,
    pub channel_width_hz: f64,
    pub noise_figure_db: f64,
    pub phy_rate_bps: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            frequency_hz: 5e9,
            tx_power_dbm: 20.0,
            antenna_gain_tx_dbi: 0.0,
            antenna_gain_rx_dbi: 0.0,
            channel_width_hz: 80e6,
            noise_figure_db: 7.0,
            phy_rate_bps: 150e6,
        }
    }
}

impl RadioConfig {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("radio.frequency_hz", self.frequency_hz),
            ("radio.channel_width_hz", self.channel_width_hz),
            ("radio.phy_rate_bps", self.phy_rate_bps),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(field, format!("must be positive, got {v}")));
            }
        }
        for (field, v) in [
            ("radio.tx_power_dbm", self.tx_power_dbm),
            ("radio.antenna_gain_tx_dbi", self.antenna_gain_tx_dbi),
            ("radio.antenna_gain_rx_dbi", self.antenna_gain_rx_dbi),
            ("radio.noise_figure_db", self.noise_figure_db),
        ] {
            if !v.is_finite() {
                return Err(Error::config(field, format!("must be finite, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstacleLossParams {
    /// Penetration loss per wall crossed.
    pub wall_loss_db: f64,
    pub walls_per_building: u32,
    pub shadowing_sigma_los_db: f64,
    pub shadowing_sigma_nlos_db: f64,
}

impl Default for ObstacleLossParams {
    fn default() -> Self {
        Self {
            wall_loss_db: 7.0,
            walls_per_building: 2,
            shadowing_sigma_los_db: 0.0,
            shadowing_sigma_nlos_db: 7.0,
        }
    }
}

impl ObstacleLossParams {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("obstacle_params.wall_loss_db", self.wall_loss_db),
            (
                "obstacle_params.shadowing_sigma_los_db",
                self.shadowing_sigma_los_db,
            ),
            (
                "obstacle_params.shadowing_sigma_nlos_db",
                self.shadowing_sigma_nlos_db,
            ),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(field, format!("must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Extra loss for a path crossing `blockers` buildings.
    pub fn penetration_db(&self, blockers: usize) -> f64 {
        blockers as f64 * f64::from(self.walls_per_building) * self.wall_loss_db
    }

    pub fn shadowing_sigma_db(&self, los_clear: bool) -> f64 {
        if los_clear {
            self.shadowing_sigma_los_db
        } else {
            self.shadowing_sigma_nlos_db
        }
    }
}

/// Free-space loss `20·log10(4π·d·f/c)`.
pub fn friis_path_loss_db(distance_m: f64, frequency_hz: f64) -> Result<f64> {
    let d = positive("distance_m", distance_m)?;
    let f = positive("frequency_hz", frequency_hz)?;
    let k = 20.0 * (4.0 * std::f64::consts::PI / SPEED_OF_LIGHT_M_PER_S).log10();
    Ok(20.0 * d.log10() + 20.0 * f.log10() + k)
}

/// Deterministic part of the path loss between two points, plus the number of
/// buildings crossed.
pub fn deterministic_path_loss_db(
    a: Point3,
    b: Point3,
    buildings: &[Aabb],
    frequency_hz: f64,
    params: &ObstacleLossParams,
) -> Result<(f64, usize)> {
    if !a.is_finite() || !b.is_finite() {
        return Err(crate::error::GeomError::NonFinite.into());
    }
    let free_space = friis_path_loss_db(distance(a, b), frequency_hz)?;
    let blockers = line_of_sight(a, b, buildings).blockers().len();
    Ok((free_space + params.penetration_db(blockers), blockers))
}

/// Friis loss plus wall penetration for every crossed building, plus the
/// supplied shadowing sample `shadow_db`.
pub fn obstacle_aware_path_loss_db(
    a: Point3,
    b: Point3,
    buildings: &[Aabb],
    frequency_hz: f64,
    params: &ObstacleLossParams,
    shadow_db: f64,
) -> Result<f64> {
    let (loss, _) = deterministic_path_loss_db(a, b, buildings, frequency_hz, params)?;
    Ok(loss + shadow_db)
}

/// One zero-mean Gaussian draw (dB) with standard deviation `sigma_db`.
/// `sigma_db == 0` returns exactly zero without consuming the stream.
///
/// Panics if `sigma_db` is negative or not finite.
pub fn sample_shadowing_db<R: Rng + ?Sized>(rng: &mut R, sigma_db: f64) -> f64 {
    assert!(
        sigma_db >= 0.0 && sigma_db.is_finite(),
        "shadowing sigma must be finite and >= 0, got {sigma_db}"
    );
    if sigma_db == 0.0 {
        return 0.0;
    }
    Normal::new(0.0, sigma_db)
        .expect("validated sigma")
        .sample(rng)
}

/// `-174 dBm/Hz + 10·log10(B) + NF`.
pub fn noise_floor_dbm(channel_width_hz: f64, noise_figure_db: f64) -> Result<f64> {
    let b = positive("channel_width_hz", channel_width_hz)?;
    Ok(THERMAL_NOISE_DBM_PER_HZ + 10.0 * b.log10() + noise_figure_db)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    /// Friis plus penetration, without shadowing.
    pub path_loss_db: f64,
    pub shadowing_db: f64,
    pub rx_power_dbm: f64,
    pub noise_dbm: f64,
    pub snr_db: f64,
    pub los_clear: bool,
    pub blockers: usize,
}

/// Full budget with one shadowing draw from `rng`.
pub fn link_budget<R: Rng + ?Sized>(
    a: Point3,
    b: Point3,
    buildings: &[Aabb],
    radio: &RadioConfig,
    params: &ObstacleLossParams,
    rng: &mut R,
) -> Result<LinkBudget> {
    let (path_loss_db, blockers) =
        deterministic_path_loss_db(a, b, buildings, radio.frequency_hz, params)?;
    let los_clear = blockers == 0;
    let shadowing_db = sample_shadowing_db(rng, params.shadowing_sigma_db(los_clear));
    budget_from_loss(radio, path_loss_db, shadowing_db, los_clear, blockers)
}

/// Budget for a known loss and shadowing value.
pub fn budget_from_loss(
    radio: &RadioConfig,
    path_loss_db: f64,
    shadowing_db: f64,
    los_clear: bool,
    blockers: usize,
) -> Result<LinkBudget> {
    let noise_dbm = noise_floor_dbm(radio.channel_width_hz, radio.noise_figure_db)?;
    let rx_power_dbm = radio.tx_power_dbm + radio.antenna_gain_tx_dbi + radio.antenna_gain_rx_dbi
        - path_loss_db
        - shadowing_db;
    Ok(LinkBudget {
        path_loss_db,
        shadowing_db,
        rx_power_dbm,
        noise_dbm,
        snr_db: rx_power_dbm - noise_dbm,
        los_clear,
        blockers,
    })
}
