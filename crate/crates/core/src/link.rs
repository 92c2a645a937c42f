//! Constant-rate PHY/MAC abstraction: a logistic SNR→PER curve, per-attempt
//! airtime and a bounded retry loop.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{positive, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorModelParams {
    /// SNR at which a single attempt fails half the time.
    pub snr_mid_db: f64,
    /// Logistic width; larger is a gentler curve.
    pub steepness_db: f64,
    pub max_retries: u32,
}

impl Default for ErrorModelParams {
    fn default() -> Self {
        Self {
            snr_mid_db: 12.0,
            steepness_db: 1.5,
            max_retries: 7,
        }
    }
}

impl ErrorModelParams {
    pub fn validate(&self) -> Result<()> {
        if !self.snr_mid_db.is_finite() {
            return Err(Error::config("error_params.snr_mid_db", "must be finite"));
        }
        if !(self.steepness_db > 0.0 && self.steepness_db.is_finite()) {
            return Err(Error::config(
                "error_params.steepness_db",
                format!("must be positive, got {}", self.steepness_db),
            ));
        }
        Ok(())
    }

    pub fn max_attempts(&self) -> u32 {
        self.max_retries.saturating_add(1)
    }
}

/// `1 / (1 + exp((snr − mid) / steepness))`.
pub fn packet_error_rate(snr_db: f64, params: &ErrorModelParams) -> f64 {
    1.0 / (1.0 + ((snr_db - params.snr_mid_db) / params.steepness_db).exp())
}

/// Time one attempt occupies the channel.
pub fn airtime_s(
    payload_bytes: u32,
    phy_rate_bps: f64,
    per_attempt_overhead_s: f64,
) -> Result<f64> {
    if payload_bytes == 0 {
        return Err(Error::Domain {
            quantity: "payload_bytes",
            value: 0.0,
        });
    }
    let rate = positive("phy_rate_bps", phy_rate_bps)?;
    if !(per_attempt_overhead_s >= 0.0 && per_attempt_overhead_s.is_finite()) {
        return Err(Error::Domain {
            quantity: "per_attempt_overhead_s",
            value: per_attempt_overhead_s,
        });
    }
    Ok(per_attempt_overhead_s + 8.0 * f64::from(payload_bytes) / rate)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TxOutcome {
    pub attempts: u32,
    pub delivered: bool,
    /// Channel time across all attempts.
    pub airtime_s: f64,
}

/// A link with its per-attempt failure probability already resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transmitter {
    pub per: f64,
    pub max_retries: u32,
    pub attempt_airtime_s: f64,
}

impl Transmitter {
    pub fn new(
        packet_bytes: u32,
        snr_db: f64,
        params: &ErrorModelParams,
        phy_rate_bps: f64,
        per_attempt_overhead_s: f64,
    ) -> Result<Self> {
        Ok(Self {
            per: packet_error_rate(snr_db, params),
            max_retries: params.max_retries,
            attempt_airtime_s: airtime_s(packet_bytes, phy_rate_bps, per_attempt_overhead_s)?,
        })
    }

    /// Number of attempts used and whether the last one succeeded. Each
    /// attempt consumes exactly one uniform draw.
    pub fn attempts<R: Rng + ?Sized>(&self, rng: &mut R) -> (u32, bool) {
        let limit = self.max_retries.saturating_add(1);
        for attempt in 1..=limit {
            let failed = rng.random::<f64>() < self.per;
            if !failed {
                return (attempt, true);
            }
        }
        (limit, false)
    }

    pub fn send<R: Rng + ?Sized>(&self, rng: &mut R) -> TxOutcome {
        let (attempts, delivered) = self.attempts(rng);
        TxOutcome {
            attempts,
            delivered,
            airtime_s: f64::from(attempts) * self.attempt_airtime_s,
        }
    }
}

pub fn transmit<R: Rng + ?Sized>(
    packet_bytes: u32,
    snr_db: f64,
    params: &ErrorModelParams,
    phy_rate_bps: f64,
    per_attempt_overhead_s: f64,
    rng: &mut R,
) -> Result<TxOutcome> {
    Ok(Transmitter::new(
        packet_bytes,
        snr_db,
        params,
        phy_rate_bps,
        per_attempt_overhead_s,
    )?
    .send(rng))
}
