//! Results CSV: one row per run plus one `seed=AGG` row per
//! (scenario, frequency) block holding the block means and count totals.
//! Floats are written in shortest round-trip form, so reading a file back and
//! re-aggregating reproduces its `AGG` rows bit for bit.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use aglink_core::metrics::histogram;
use aglink_core::{AggregateReport, HistogramBin, MetricsReport, RunSummary};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const HEADER: [&str; 9] = [
    "scenario",
    "seed",
    "frequency_hz",
    "throughput_bps",
    "pdr",
    "loss_ratio",
    "mean_delay_s",
    "delivered",
    "generated",
];

pub const AGG_SEED: &str = "AGG";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RowKind {
    Run(u64),
    Aggregate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scenario: String,
    pub kind: RowKind,
    pub frequency_hz: f64,
    pub throughput_bps: f64,
    pub pdr: f64,
    pub loss_ratio: f64,
    pub mean_delay_s: f64,
    pub delivered: u64,
    pub generated: u64,
}

impl ResultRow {
    pub fn from_run(scenario: &str, frequency_hz: f64, r: &MetricsReport) -> Self {
        let s = r.summary();
        Self {
            scenario: scenario.to_string(),
            kind: RowKind::Run(s.seed),
            frequency_hz,
            throughput_bps: s.throughput_bps,
            pdr: s.pdr,
            loss_ratio: s.loss_ratio,
            mean_delay_s: s.mean_delay_s,
            delivered: s.delivered,
            generated: s.generated,
        }
    }

    pub fn from_aggregate(scenario: &str, frequency_hz: f64, a: &AggregateReport) -> Self {
        Self {
            scenario: scenario.to_string(),
            kind: RowKind::Aggregate,
            frequency_hz,
            throughput_bps: a.throughput_bps.mean,
            pdr: a.pdr.mean,
            loss_ratio: a.loss_ratio.mean,
            mean_delay_s: a.mean_delay_s.mean,
            delivered: a.delivered_total,
            generated: a.generated_total,
        }
    }

    pub fn summary(&self) -> Option<RunSummary> {
        match self.kind {
            RowKind::Run(seed) => Some(RunSummary {
                seed,
                throughput_bps: self.throughput_bps,
                pdr: self.pdr,
                loss_ratio: self.loss_ratio,
                mean_delay_s: self.mean_delay_s,
                delivered: self.delivered,
                generated: self.generated,
            }),
            RowKind::Aggregate => None,
        }
    }

    fn fields(&self) -> [String; 9] {
        [
            self.scenario.clone(),
            match self.kind {
                RowKind::Run(seed) => seed.to_string(),
                RowKind::Aggregate => AGG_SEED.to_string(),
            },
            self.frequency_hz.to_string(),
            self.throughput_bps.to_string(),
            self.pdr.to_string(),
            self.loss_ratio.to_string(),
            self.mean_delay_s.to_string(),
            self.delivered.to_string(),
            self.generated.to_string(),
        ]
    }
}

/// Rows for one batch: runs sorted by seed, then the aggregate.
pub fn block_rows(
    scenario: &str,
    frequency_hz: f64,
    runs: &[MetricsReport],
    aggregate: &AggregateReport,
) -> Vec<ResultRow> {
    let mut rows: Vec<ResultRow> = runs
        .iter()
        .map(|r| ResultRow::from_run(scenario, frequency_hz, r))
        .collect();
    rows.sort_by_key(|r| match r.kind {
        RowKind::Run(seed) => seed,
        RowKind::Aggregate => u64::MAX,
    });
    rows.push(ResultRow::from_aggregate(scenario, frequency_hz, aggregate));
    rows
}

pub fn write_rows<W: Write>(out: W, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let wrap = |e: csv::Error| CliError::io("writing results", std::io::Error::other(e));
    w.write_record(HEADER).map_err(wrap)?;
    for row in rows {
        w.write_record(row.fields()).map_err(wrap)?;
    }
    w.flush().map_err(|e| CliError::io("writing results", e))
}

pub fn read_rows<R: Read>(input: R, source: &str) -> Result<Vec<ResultRow>> {
    let parse_err = |line: u64, message: String| CliError::Parse {
        path: source.into(),
        message: format!("line {line}: {message}"),
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header = rdr
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(parse_err(
            1,
            format!("expected header `{}`", HEADER.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let num = |i: usize| -> Result<f64> {
            record[i]
                .parse::<f64>()
                .map_err(|e| parse_err(line, format!("column `{}`: {e}", HEADER[i])))
        };
        let int = |i: usize| -> Result<u64> {
            record[i]
                .parse::<u64>()
                .map_err(|e| parse_err(line, format!("column `{}`: {e}", HEADER[i])))
        };
        let kind = if &record[1] == AGG_SEED {
            RowKind::Aggregate
        } else {
            RowKind::Run(int(1)?)
        };
        rows.push(ResultRow {
            scenario: record[0].to_string(),
            kind,
            frequency_hz: num(2)?,
            throughput_bps: num(3)?,
            pdr: num(4)?,
            loss_ratio: num(5)?,
            mean_delay_s: num(6)?,
            delivered: int(7)?,
            generated: int(8)?,
        });
    }
    Ok(rows)
}

/// Recomputes the aggregate row of every `(scenario, frequency)` group from
/// its run rows, in `(scenario, frequency)` order.
pub fn reaggregate(rows: &[ResultRow]) -> Vec<ResultRow> {
    let mut groups: BTreeMap<(String, u64), Vec<RunSummary>> = BTreeMap::new();
    for row in rows {
        if let Some(s) = row.summary() {
            groups
                .entry((row.scenario.clone(), row.frequency_hz.to_bits()))
                .or_default()
                .push(s);
        }
    }
    groups
        .into_iter()
        .map(|((scenario, f), runs)| {
            ResultRow::from_aggregate(
                &scenario,
                f64::from_bits(f),
                &AggregateReport::from_summaries(&runs),
            )
        })
        .collect()
}

/// Histogram of the per-run throughput values over `[0, max]`.
pub fn throughput_histogram(rows: &[ResultRow], bins: usize) -> Result<Vec<HistogramBin>> {
    if bins == 0 {
        return Err(CliError::Usage("--bins must be at least 1".into()));
    }
    let samples: Vec<f64> = rows
        .iter()
        .filter(|r| matches!(r.kind, RowKind::Run(_)))
        .map(|r| r.throughput_bps)
        .collect();
    if samples.is_empty() {
        return Err(CliError::Validation(
            "results file holds no run rows".into(),
        ));
    }
    let top = samples.iter().copied().fold(0.0_f64, f64::max);
    let upper = if top > 0.0 { top } else { 1.0 };
    Ok(histogram(&samples, 0.0, upper, bins))
}

pub fn write_histogram<W: Write>(out: W, bins: &[HistogramBin]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let wrap = |e: csv::Error| CliError::io("writing histogram", std::io::Error::other(e));
    w.write_record(["bin_lower", "bin_upper", "count"])
        .map_err(wrap)?;
    for b in bins {
        w.write_record([
            b.lower.to_string(),
            b.upper.to_string(),
            b.count.to_string(),
        ])
        .map_err(wrap)?;
    }
    w.flush().map_err(|e| CliError::io("writing histogram", e))
}
