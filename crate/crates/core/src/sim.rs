//! Discrete-event packet engine for a single stationary air-to-ground link.
//!
//! A constant-bit-rate source at the ground user feeds a drop-tail FIFO in
//! front of one transmitter; the UAV is the sink. The channel is resolved
//! once per run (one shadowing draw), after which every head-of-line packet
//! goes through the MAC retry loop in [`crate::link`]. Time is kept in
//! integer nanoseconds and ties are broken by scheduling order, so a given
//! `(scenario, seed)` always replays the same event sequence.
//!
//! Only packets created inside `[warmup, warmup + measure)` contribute to the
//! report; they are followed until delivered or dropped even if that happens
//! after the window closes.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    link_budget, LinkBudget, ObstacleLossParams, RadioConfig, SPEED_OF_LIGHT_M_PER_S,
};
use crate::error::{Error, Result};
use crate::geom::{distance, Aabb, Point3};
use crate::link::{airtime_s, ErrorModelParams, Transmitter};
use crate::metrics::{
    histogram, AggregateReport, MetricsReport, HISTOGRAM_BINS, SAMPLE_INTERVAL_NS,
};
use crate::rng::RunStreams;

const NS_PER_S: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrafficMode {
    Udp,
    #[default]
    TcpLite,
}

impl std::fmt::Display for TrafficMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TrafficMode::Udp => "udp",
            TrafficMode::TcpLite => "tcp_lite",
        })
    }
}

/// Window-limited reliable transport on top of the MAC.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TcpParams {
    /// Packets that may be unacknowledged at once.
    pub window_packets: u32,
    /// Retransmission timeout as a multiple of the smoothed RTT.
    pub rto_multiplier: f64,
    /// Transport retransmissions before a packet is abandoned.
    pub max_retransmissions: u32,
}

impl Default for TcpParams {
    fn default() -> Self {
        Self {
            window_packets: 16,
            rto_multiplier: 3.0,
            max_retransmissions: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub ue_pos: Point3,
    pub uav_pos: Point3,
    pub buildings: Vec<Aabb>,
    pub radio: RadioConfig,
    pub obstacle_params: ObstacleLossParams,
    pub error_params: ErrorModelParams,
    /// MAC/PHY framing plus ack turnaround, charged once per attempt.
    pub per_attempt_overhead_s: f64,
    pub offered_load_bps: f64,
    pub packet_bytes: u32,
    pub warmup_s: f64,
    pub measure_s: f64,
    pub queue_capacity_packets: usize,
    pub mode: TrafficMode,
    pub tcp: TcpParams,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            ue_pos: Point3::ORIGIN,
            uav_pos: Point3::new(30.0, 0.0, 10.0),
            buildings: Vec::new(),
            radio: RadioConfig::default(),
            obstacle_params: ObstacleLossParams::default(),
            error_params: ErrorModelParams::default(),
            per_attempt_overhead_s: 100e-6,
            offered_load_bps: 100e6,
            packet_bytes: 1024,
            warmup_s: 10.0,
            measure_s: 1.0,
            queue_capacity_packets: 1000,
            mode: TrafficMode::TcpLite,
            tcp: TcpParams::default(),
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if !self.ue_pos.is_finite() {
            return Err(Error::config("nodes.ue", "coordinates must be finite"));
        }
        if !self.uav_pos.is_finite() {
            return Err(Error::config("nodes.uav", "coordinates must be finite"));
        }
        if self.ue_pos == self.uav_pos {
            return Err(Error::config(
                "nodes.uav",
                "must differ from the ue position",
            ));
        }
        self.radio.validate()?;
        self.obstacle_params.validate()?;
        self.error_params.validate()?;
        if !(self.per_attempt_overhead_s >= 0.0 && self.per_attempt_overhead_s.is_finite()) {
            return Err(Error::config("mac.per_attempt_overhead_s", "must be >= 0"));
        }
        if !(self.offered_load_bps > 0.0 && self.offered_load_bps.is_finite()) {
            return Err(Error::config(
                "traffic.offered_load_bps",
                "must be positive",
            ));
        }
        if self.packet_bytes == 0 {
            return Err(Error::config("traffic.packet_bytes", "must be positive"));
        }
        if !(self.warmup_s >= 0.0 && self.warmup_s.is_finite()) {
            return Err(Error::config("timing.warmup_s", "must be >= 0"));
        }
        if !(self.measure_s > 0.0 && self.measure_s.is_finite()) {
            return Err(Error::config("timing.measure_s", "must be positive"));
        }
        if self.mode == TrafficMode::TcpLite {
            if self.tcp.window_packets == 0 {
                return Err(Error::config(
                    "traffic.tcp_window_packets",
                    "must be positive",
                ));
            }
            if !(self.tcp.rto_multiplier > 0.0 && self.tcp.rto_multiplier.is_finite()) {
                return Err(Error::config(
                    "traffic.tcp_rto_multiplier",
                    "must be positive",
                ));
            }
        }
        Ok(())
    }

    pub fn link_distance_m(&self) -> f64 {
        distance(self.ue_pos, self.uav_pos)
    }

    /// Lower bound on any delivered packet's delay.
    pub fn min_delay_s(&self) -> f64 {
        self.link_distance_m() / SPEED_OF_LIGHT_M_PER_S
            + 8.0 * f64::from(self.packet_bytes) / self.radio.phy_rate_bps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    QueueOverflow,
    RetryExhausted,
}

/// Lifecycle of one application packet, times in nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PacketRecord {
    pub id: u64,
    pub created_at_ns: u64,
    /// Last time the packet reached the head of the queue.
    pub dequeued_at_ns: Option<u64>,
    pub delivered_at_ns: Option<u64>,
    /// MAC attempts over all transport (re)transmissions.
    pub attempts: u32,
    /// Transport retransmissions (tcp_lite only).
    pub retransmissions: u32,
    pub dropped: Option<DropReason>,
}

impl PacketRecord {
    pub fn delay_ns(&self) -> Option<u64> {
        self.delivered_at_ns.map(|d| d - self.created_at_ns)
    }
}

/// Test and experiment hooks.
#[derive(Debug, Clone, Default)]
pub struct SimOptions {
    /// Packet ids whose first MAC service fails outright, without drawing
    /// from the random stream.
    pub forced_mac_failures: BTreeSet<u64>,
}

#[derive(Debug, Clone)]
pub struct RunTrace {
    pub report: MetricsReport,
    pub budget: LinkBudget,
    pub packets: Vec<PacketRecord>,
    pub window_start_ns: u64,
    pub window_end_ns: u64,
}

pub fn run(scenario: &Scenario, seed: u64) -> Result<MetricsReport> {
    Ok(run_traced(scenario, seed, &SimOptions::default())?.report)
}

/// Same as [`run`] but insists on the window-limited transport.
pub fn tcp_lite_run(scenario: &Scenario, seed: u64) -> Result<MetricsReport> {
    if scenario.mode != TrafficMode::TcpLite {
        return Err(Error::config(
            "traffic.mode",
            "tcp_lite_run needs mode = tcp_lite",
        ));
    }
    run(scenario, seed)
}

pub fn run_traced(scenario: &Scenario, seed: u64, options: &SimOptions) -> Result<RunTrace> {
    scenario.validate()?;
    let mut streams = RunStreams::new(seed);
    let budget = link_budget(
        scenario.ue_pos,
        scenario.uav_pos,
        &scenario.buildings,
        &scenario.radio,
        &scenario.obstacle_params,
        &mut streams.shadowing,
    )?;
    let tx = Transmitter::new(
        scenario.packet_bytes,
        budget.snr_db,
        &scenario.error_params,
        scenario.radio.phy_rate_bps,
        scenario.per_attempt_overhead_s,
    )?;
    let mut engine = Engine::new(scenario, tx, options, streams);
    engine.simulate();
    let report = engine.report(seed, &budget);
    Ok(RunTrace {
        report,
        budget,
        window_start_ns: engine.window_start,
        window_end_ns: engine.window_end,
        packets: engine.packets,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    /// In the order the seeds were given.
    pub runs: Vec<MetricsReport>,
    pub aggregate: AggregateReport,
}

/// Runs every seed (in parallel) and aggregates.
pub fn run_batch(scenario: &Scenario, seeds: &[u64]) -> Result<BatchReport> {
    if seeds.is_empty() {
        return Err(Error::config("seeds", "at least one seed is required"));
    }
    scenario.validate()?;
    let runs = seeds
        .par_iter()
        .map(|&seed| run(scenario, seed))
        .collect::<Result<Vec<_>>>()?;
    let aggregate = AggregateReport::from_reports(&runs);
    Ok(BatchReport { runs, aggregate })
}

fn secs_to_ns_ceil(s: f64) -> u64 {
    (s * NS_PER_S).ceil() as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Event {
    /// Next CBR tick of the source.
    Tick,
    /// The MAC finished with a packet (success or exhaustion).
    TxDone(u64),
    /// The packet reached the sink.
    Arrive(u64),
    /// The sink's acknowledgement reached the source.
    Ack(u64),
    /// Transport retransmission timer fired.
    Retransmit(u64),
}

struct Engine<'a> {
    scenario: &'a Scenario,
    options: &'a SimOptions,
    tx: Transmitter,
    rng: crate::rng::Stream,

    attempt_ns: u64,
    prop_ns: u64,
    interval_ns: f64,
    window_start: u64,
    window_end: u64,
    tcp: bool,

    now: u64,
    seq: u64,
    events: BinaryHeap<Reverse<(u64, u64, Event)>>,
    queue: VecDeque<u64>,
    busy: bool,
    packets: Vec<PacketRecord>,
    /// Outcome decided at dequeue, applied at `TxDone`.
    in_service: Option<bool>,

    next_tick: i64,
    source_blocked: bool,
    in_flight: u32,
    srtt_ns: u64,
}

impl<'a> Engine<'a> {
    fn new(
        scenario: &'a Scenario,
        tx: Transmitter,
        options: &'a SimOptions,
        streams: RunStreams,
    ) -> Self {
        let window_start = secs_to_ns_ceil(scenario.warmup_s);
        let window_end = window_start + secs_to_ns_ceil(scenario.measure_s);
        let interval_ns =
            8.0 * f64::from(scenario.packet_bytes) / scenario.offered_load_bps * NS_PER_S;
        let attempt_ns = secs_to_ns_ceil(
            airtime_s(
                scenario.packet_bytes,
                scenario.radio.phy_rate_bps,
                scenario.per_attempt_overhead_s,
            )
            .expect("validated scenario"),
        )
        .max(1);
        let prop_ns = secs_to_ns_ceil(scenario.link_distance_m() / SPEED_OF_LIGHT_M_PER_S);
        let mut engine = Engine {
            scenario,
            options,
            tx,
            rng: streams.packet_errors,
            attempt_ns,
            prop_ns,
            interval_ns,
            window_start,
            window_end,
            tcp: scenario.mode == TrafficMode::TcpLite,
            now: 0,
            seq: 0,
            events: BinaryHeap::new(),
            queue: VecDeque::new(),
            busy: false,
            packets: Vec::new(),
            in_service: None,
            next_tick: 0,
            source_blocked: false,
            in_flight: 0,
            srtt_ns: attempt_ns + 2 * prop_ns,
        };
        engine.next_tick = engine.first_tick_index();
        if let Some(t) = engine.tick_time(engine.next_tick) {
            engine.schedule(t, Event::Tick);
        }
        engine
    }

    /// Ticks sit on a grid anchored at the start of the measurement window,
    /// so the window's arrivals do not depend on the warmup length.
    fn grid(&self, index: i64) -> i64 {
        self.window_start as i64 + (index as f64 * self.interval_ns).round() as i64
    }

    fn first_tick_index(&self) -> i64 {
        let mut k = -((self.window_start as f64 / self.interval_ns).floor() as i64);
        while self.grid(k) < 0 {
            k += 1;
        }
        while self.grid(k - 1) >= 0 {
            k -= 1;
        }
        k
    }

    fn tick_time(&self, index: i64) -> Option<u64> {
        let t = self.grid(index);
        (t >= 0 && (t as u64) < self.window_end).then_some(t as u64)
    }

    fn schedule(&mut self, at: u64, event: Event) {
        self.seq += 1;
        self.events.push(Reverse((at, self.seq, event)));
    }

    fn simulate(&mut self) {
        while let Some(Reverse((at, _, event))) = self.events.pop() {
            debug_assert!(at >= self.now);
            self.now = at;
            match event {
                Event::Tick => self.on_tick(),
                Event::TxDone(id) => self.on_tx_done(id),
                Event::Arrive(id) => self.on_arrive(id),
                Event::Ack(id) => self.on_ack(id),
                Event::Retransmit(id) => self.on_retransmit(id),
            }
        }
    }

    fn on_tick(&mut self) {
        if self.tcp && self.in_flight >= self.scenario.tcp.window_packets {
            self.source_blocked = true;
            return;
        }
        self.generate();
    }

    /// Creates the packet for the current tick index and schedules the next.
    fn generate(&mut self) {
        let id = self.packets.len() as u64;
        self.packets.push(PacketRecord {
            id,
            created_at_ns: self.now,
            dequeued_at_ns: None,
            delivered_at_ns: None,
            attempts: 0,
            retransmissions: 0,
            dropped: None,
        });
        if self.tcp {
            self.in_flight += 1;
        }
        self.next_tick += 1;
        if let Some(t) = self.tick_time(self.next_tick) {
            self.schedule(t.max(self.now), Event::Tick);
        }
        self.enqueue(id);
    }

    fn enqueue(&mut self, id: u64) {
        if self.queue.len() >= self.scenario.queue_capacity_packets {
            if self.tcp {
                self.transport_loss(id, DropReason::QueueOverflow);
            } else {
                self.packets[id as usize].dropped = Some(DropReason::QueueOverflow);
            }
            return;
        }
        self.queue.push_back(id);
        self.start_service();
    }

    fn start_service(&mut self) {
        if self.busy {
            return;
        }
        let Some(id) = self.queue.pop_front() else {
            return;
        };
        let forced = self.packets[id as usize].attempts == 0
            && self.options.forced_mac_failures.contains(&id);
        let (attempts, delivered) = if forced {
            (self.tx.max_retries.saturating_add(1), false)
        } else {
            self.tx.attempts(&mut self.rng)
        };
        let record = &mut self.packets[id as usize];
        record.dequeued_at_ns = Some(self.now);
        record.attempts += attempts;
        self.busy = true;
        self.in_service = Some(delivered);
        let done = self.now + u64::from(attempts) * self.attempt_ns;
        self.schedule(done, Event::TxDone(id));
    }

    fn on_tx_done(&mut self, id: u64) {
        self.busy = false;
        let delivered = self.in_service.take().expect("a packet was in service");
        if delivered {
            self.schedule(self.now + self.prop_ns, Event::Arrive(id));
        } else if self.tcp {
            self.transport_loss(id, DropReason::RetryExhausted);
        } else {
            self.packets[id as usize].dropped = Some(DropReason::RetryExhausted);
        }
        self.start_service();
    }

    fn on_arrive(&mut self, id: u64) {
        self.packets[id as usize].delivered_at_ns = Some(self.now);
        if self.tcp {
            self.schedule(self.now + self.prop_ns, Event::Ack(id));
        }
    }

    fn on_ack(&mut self, id: u64) {
        let record = &self.packets[id as usize];
        let sent = record.dequeued_at_ns.expect("acked packets were dequeued");
        let sample = self.now - sent;
        self.srtt_ns = (7 * self.srtt_ns + sample) / 8;
        self.release_slot();
    }

    fn transport_loss(&mut self, id: u64, reason: DropReason) {
        let retries = self.packets[id as usize].retransmissions;
        if retries >= self.scenario.tcp.max_retransmissions {
            self.packets[id as usize].dropped = Some(reason);
            self.release_slot();
            return;
        }
        let backoff = 1u64 << retries.min(16);
        let rto = (self.scenario.tcp.rto_multiplier * self.srtt_ns as f64).ceil() as u64;
        self.schedule(self.now + rto.max(1) * backoff, Event::Retransmit(id));
    }

    fn on_retransmit(&mut self, id: u64) {
        self.packets[id as usize].retransmissions += 1;
        self.enqueue(id);
    }

    fn release_slot(&mut self) {
        self.in_flight -= 1;
        if self.source_blocked {
            self.source_blocked = false;
            if self.tick_time(self.next_tick).is_some() && self.now < self.window_end {
                self.generate();
            }
        }
    }

    fn report(&self, seed: u64, budget: &LinkBudget) -> MetricsReport {
        let sc = self.scenario;
        let in_window = |p: &&PacketRecord| {
            p.created_at_ns >= self.window_start && p.created_at_ns < self.window_end
        };
        let measure_ns = self.window_end - self.window_start;
        let slices = measure_ns.div_ceil(SAMPLE_INTERVAL_NS) as usize;
        let mut slice_bits = vec![0.0_f64; slices];

        let (mut generated, mut delivered, mut overflow, mut exhausted) = (0u64, 0u64, 0u64, 0u64);
        let mut delay_sum_ns: u128 = 0;
        let bits = 8.0 * f64::from(sc.packet_bytes);
        for p in self.packets.iter().filter(in_window) {
            generated += 1;
            match (p.delay_ns(), p.dropped) {
                (Some(delay), _) => {
                    delivered += 1;
                    delay_sum_ns += u128::from(delay);
                    let slice =
                        ((p.created_at_ns - self.window_start) / SAMPLE_INTERVAL_NS) as usize;
                    slice_bits[slice] += bits;
                }
                (None, Some(DropReason::QueueOverflow)) => overflow += 1,
                (None, Some(DropReason::RetryExhausted)) => exhausted += 1,
                (None, None) => unreachable!("packet {} neither delivered nor dropped", p.id),
            }
        }

        let interval_throughput_bps: Vec<f64> = slice_bits
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let start = i as u64 * SAMPLE_INTERVAL_NS;
                let len = (measure_ns - start).min(SAMPLE_INTERVAL_NS);
                b / (len as f64 / NS_PER_S)
            })
            .collect();

        let pdr = if generated == 0 {
            0.0
        } else {
            delivered as f64 / generated as f64
        };
        let mean_delay_s = if delivered == 0 {
            0.0
        } else {
            (delay_sum_ns as f64 / delivered as f64) / NS_PER_S
        };
        MetricsReport {
            seed,
            snr_db: budget.snr_db,
            shadowing_db: budget.shadowing_db,
            los_clear: budget.los_clear,
            throughput_bps: delivered as f64 * bits / (measure_ns as f64 / NS_PER_S),
            pdr,
            loss_ratio: 1.0 - pdr,
            mean_delay_s,
            delivered_count: delivered,
            generated_count: generated,
            queue_overflow_count: overflow,
            retry_exhausted_count: exhausted,
            histogram: histogram(
                &interval_throughput_bps,
                0.0,
                sc.offered_load_bps,
                HISTOGRAM_BINS,
            ),
            interval_throughput_bps,
        }
    }
}
