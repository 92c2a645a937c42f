//! Obstacle-aware UAV repositioning.
//!
//! Every point of a regular grid is scored by its expected path loss to the
//! user (shadowing at its 0 dB mean). Candidates with a clear line of sight
//! always beat blocked ones; among equals the lower loss wins, then the
//! lexicographically smallest `(x, y, z)`. The ranking is a total order, so
//! the parallel reduction returns the same point as a sequential scan.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{deterministic_path_loss_db, ObstacleLossParams, RadioConfig};
use crate::error::{Error, Result};
use crate::geom::{Aabb, Point3};
use crate::sim::{run_batch, BatchReport, Scenario};

/// Upper limit on grid size, to catch accidental sub-millimeter steps.
pub const MAX_CANDIDATES: usize = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchRegion {
    /// Allowed UAV positions.
    pub bounds: Aabb,
    pub grid_step: f64,
    pub altitude_min: f64,
    pub altitude_max: f64,
}

impl SearchRegion {
    pub fn new(bounds: Aabb, grid_step: f64, altitude_min: f64, altitude_max: f64) -> Result<Self> {
        let region = Self {
            bounds,
            grid_step,
            altitude_min,
            altitude_max,
        };
        region.validate()?;
        Ok(region)
    }

    /// `x, y ∈ [-50, 50]` m at a fixed 10 m altitude, 1 m step.
    pub fn default_square() -> Self {
        let bounds = Aabb::new(
            Point3::new(-50.0, -50.0, 10.0),
            Point3::new(50.0, 50.0, 10.0),
        )
        .expect("static bounds");
        Self {
            bounds,
            grid_step: 1.0,
            altitude_min: 10.0,
            altitude_max: 10.0,
        }
    }

    /// A region holding exactly one point.
    pub fn single(p: Point3) -> Result<Self> {
        Self::new(Aabb::point(p)?, 1.0, p.z, p.z)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.grid_step > 0.0 && self.grid_step.is_finite()) {
            return Err(Error::config(
                "region.grid_step",
                format!("must be positive, got {}", self.grid_step),
            ));
        }
        if !(self.altitude_min.is_finite() && self.altitude_max.is_finite()) {
            return Err(Error::config("region.altitude", "must be finite"));
        }
        if self.altitude_min > self.altitude_max {
            return Err(Error::config(
                "region.altitude",
                format!(
                    "min {} exceeds max {}",
                    self.altitude_min, self.altitude_max
                ),
            ));
        }
        let (lo, hi) = (self.bounds.min().z, self.bounds.max().z);
        if self.altitude_min < lo || self.altitude_max > hi {
            return Err(Error::config(
                "region.altitude",
                format!(
                    "[{}, {}] lies outside the region bounds z ∈ [{lo}, {hi}]",
                    self.altitude_min, self.altitude_max
                ),
            ));
        }
        let count = axis_len(self.bounds.min().x, self.bounds.max().x, self.grid_step)
            .saturating_mul(axis_len(
                self.bounds.min().y,
                self.bounds.max().y,
                self.grid_step,
            ))
            .saturating_mul(axis_len(
                self.altitude_min,
                self.altitude_max,
                self.grid_step,
            ));
        if count > MAX_CANDIDATES {
            return Err(Error::config(
                "region.grid_step",
                format!("grid would hold {count} candidates (limit {MAX_CANDIDATES})"),
            ));
        }
        Ok(())
    }

    /// Grid points, x-major then y then z.
    pub fn candidates(&self) -> Vec<Point3> {
        let xs = axis_points(self.bounds.min().x, self.bounds.max().x, self.grid_step);
        let ys = axis_points(self.bounds.min().y, self.bounds.max().y, self.grid_step);
        let zs = axis_points(self.altitude_min, self.altitude_max, self.grid_step);
        let mut out = Vec::with_capacity(xs.len() * ys.len() * zs.len());
        for &x in &xs {
            for &y in &ys {
                for &z in &zs {
                    out.push(Point3::new(x, y, z));
                }
            }
        }
        out
    }
}

fn axis_len(lo: f64, hi: f64, step: f64) -> usize {
    ((hi - lo) / step + 1e-9).floor() as usize + 1
}

/// `lo, lo + step, …` up to `hi`; each point is `lo + i·step`, never
/// accumulated, so halving the step yields a superset of the points.
fn axis_points(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    (0..axis_len(lo, hi, step))
        .map(|i| (lo + i as f64 * step).min(hi))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlacementResult {
    pub position: Point3,
    pub predicted_path_loss_db: f64,
    pub los_clear: bool,
    pub candidates_evaluated: usize,
}

#[derive(Debug, Clone, Copy)]
struct Scored {
    position: Point3,
    loss: f64,
    clear: bool,
}

fn rank(a: &Scored, b: &Scored) -> Ordering {
    b.clear
        .cmp(&a.clear)
        .then(a.loss.total_cmp(&b.loss))
        .then(a.position.lex_cmp(&b.position))
}

/// Best grid position for serving `ue`.
pub fn find_position(
    ue: Point3,
    buildings: &[Aabb],
    region: &SearchRegion,
    radio: &RadioConfig,
    params: &ObstacleLossParams,
) -> Result<PlacementResult> {
    region.validate()?;
    find_position_among(ue, buildings, &region.candidates(), radio, params)
}

/// Ranks an explicit candidate list. Candidates coinciding with `ue` are
/// skipped since their loss is undefined.
pub fn find_position_among(
    ue: Point3,
    buildings: &[Aabb],
    candidates: &[Point3],
    radio: &RadioConfig,
    params: &ObstacleLossParams,
) -> Result<PlacementResult> {
    radio.validate()?;
    params.validate()?;
    let scored = candidates
        .par_iter()
        .filter(|&&p| p != ue)
        .map(|&position| {
            let (loss, blockers) =
                deterministic_path_loss_db(ue, position, buildings, radio.frequency_hz, params)?;
            Ok(Scored {
                position,
                loss,
                clear: blockers == 0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = scored
        .par_iter()
        .copied()
        .min_by(rank)
        .ok_or(Error::EmptyGrid)?;
    Ok(PlacementResult {
        position: best.position,
        predicted_path_loss_db: best.loss,
        los_clear: best.clear,
        candidates_evaluated: scored.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepositionOutcome {
    pub before_position: Point3,
    pub placement: PlacementResult,
    pub before: BatchReport,
    pub after: BatchReport,
}

/// Runs the batch at the scenario's UAV position, moves the UAV to the
/// placement result and runs the same seeds again.
pub fn reposition_experiment(
    scenario: &Scenario,
    region: &SearchRegion,
    seeds: &[u64],
) -> Result<RepositionOutcome> {
    let placement = find_position(
        scenario.ue_pos,
        &scenario.buildings,
        region,
        &scenario.radio,
        &scenario.obstacle_params,
    )?;
    let before = run_batch(scenario, seeds)?;
    let moved = Scenario {
        uav_pos: placement.position,
        ..scenario.clone()
    };
    let after = run_batch(&moved, seeds)?;
    Ok(RepositionOutcome {
        before_position: scenario.uav_pos,
        placement,
        before,
        after,
    })
}
