//! Deterministic packet-level simulation of an air-to-ground link between a
//! ground user and a UAV-mounted access point, with building blockage,
//! obstacle-aware path loss and UAV repositioning.
//!
//! - [`geom`]: points, boxes, segment/box intersection, line of sight
//! - [`channel`]: Friis loss, wall penetration, shadowing, link budget
//! - [`link`]: SNR→PER curve, airtime, MAC retry loop
//! - [`sim`]: discrete-event engine and batch runner
//! - [`metrics`]: reports, aggregation, histograms
//! - [`placement`]: grid search for a LoS-clear UAV position

pub mod channel;
pub mod error;
pub mod geom;
pub mod link;
pub mod metrics;
pub mod placement;
pub mod rng;
pub mod sim;

pub use channel::{
    friis_path_loss_db, link_budget, noise_floor_dbm, obstacle_aware_path_loss_db,
    sample_shadowing_db, LinkBudget, ObstacleLossParams, RadioConfig, SPEED_OF_LIGHT_M_PER_S,
};
pub use error::{Error, GeomError, Result};
pub use geom::{distance, line_of_sight, segment_intersects_box, Aabb, LosResult, Point3};
pub use link::{airtime_s, packet_error_rate, transmit, ErrorModelParams, Transmitter, TxOutcome};
pub use metrics::{AggregateReport, HistogramBin, MetricsReport, RunSummary, Stat};
pub use placement::{
    find_position, reposition_experiment, PlacementResult, RepositionOutcome, SearchRegion,
};
pub use sim::{
    run, run_batch, run_traced, tcp_lite_run, BatchReport, DropReason, PacketRecord, RunTrace,
    Scenario, SimOptions, TcpParams, TrafficMode,
};
