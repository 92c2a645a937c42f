//! Per-run reports, order-independent aggregation and throughput histograms.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

/// Default number of histogram bins over `[0, offered_load]`.
pub const HISTOGRAM_BINS: usize = 20;

/// Length of one throughput sample inside the measurement window.
pub const SAMPLE_INTERVAL_NS: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub count: u64,
}

/// Equal-width bins over `[lower, upper]`. Values outside the range are
/// clamped into the first or last bin; a value equal to `upper` lands in
/// the last bin.
pub fn histogram(samples: &[f64], lower: f64, upper: f64, bins: usize) -> Vec<HistogramBin> {
    assert!(bins > 0, "histogram needs at least one bin");
    assert!(upper > lower, "histogram range must be non-empty");
    let width = (upper - lower) / bins as f64;
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|i| HistogramBin {
            lower: lower + width * i as f64,
            upper: if i + 1 == bins {
                upper
            } else {
                lower + width * (i + 1) as f64
            },
            count: 0,
        })
        .collect();
    for &s in samples {
        let idx = ((s - lower) / width).floor();
        let idx = if idx.is_nan() || idx < 0.0 {
            0
        } else {
            (idx as usize).min(bins - 1)
        };
        out[idx].count += 1;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub seed: u64,
    pub snr_db: f64,
    pub shadowing_db: f64,
    pub los_clear: bool,
    pub throughput_bps: f64,
    pub pdr: f64,
    pub loss_ratio: f64,
    /// Zero when nothing was delivered.
    pub mean_delay_s: f64,
    pub delivered_count: u64,
    pub generated_count: u64,
    pub queue_overflow_count: u64,
    pub retry_exhausted_count: u64,
    /// Throughput of each 100 ms slice of the measurement window.
    pub interval_throughput_bps: Vec<f64>,
    pub histogram: Vec<HistogramBin>,
}

impl MetricsReport {
    pub fn dropped_count(&self) -> u64 {
        self.queue_overflow_count + self.retry_exhausted_count
    }

    pub fn summary(&self) -> RunSummary {
        RunSummary {
            seed: self.seed,
            throughput_bps: self.throughput_bps,
            pdr: self.pdr,
            loss_ratio: self.loss_ratio,
            mean_delay_s: self.mean_delay_s,
            delivered: self.delivered_count,
            generated: self.generated_count,
        }
    }
}

/// The scalar columns of a report; enough to rebuild an aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub throughput_bps: f64,
    pub pdr: f64,
    pub loss_ratio: f64,
    pub mean_delay_s: f64,
    pub delivered: u64,
    pub generated: u64,
}

impl RunSummary {
    fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.seed
            .cmp(&other.seed)
            .then(self.throughput_bps.total_cmp(&other.throughput_bps))
            .then(self.pdr.total_cmp(&other.pdr))
            .then(self.loss_ratio.total_cmp(&other.loss_ratio))
            .then(self.mean_delay_s.total_cmp(&other.mean_delay_s))
            .then(self.delivered.cmp(&other.delivered))
            .then(self.generated.cmp(&other.generated))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Stat {
    fn over(values: impl Iterator<Item = f64>) -> Stat {
        let (mut sum, mut min, mut max, mut n) = (0.0, f64::INFINITY, f64::NEG_INFINITY, 0usize);
        for v in values {
            sum += v;
            min = min.min(v);
            max = max.max(v);
            n += 1;
        }
        Stat {
            mean: sum / n as f64,
            min,
            max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub runs: usize,
    pub throughput_bps: Stat,
    pub pdr: Stat,
    pub loss_ratio: Stat,
    pub mean_delay_s: Stat,
    pub delivered_total: u64,
    pub generated_total: u64,
    /// Bin-wise sum of the per-run histograms; empty when built from
    /// summaries alone.
    pub histogram: Vec<HistogramBin>,
}

impl AggregateReport {
    /// Aggregates in a canonical (seed-sorted) order so that the result does
    /// not depend on the order runs were supplied or completed in.
    ///
    /// Panics on an empty slice.
    pub fn from_summaries(runs: &[RunSummary]) -> Self {
        assert!(!runs.is_empty(), "cannot aggregate zero runs");
        let mut sorted = runs.to_vec();
        sorted.sort_by(RunSummary::canonical_cmp);
        AggregateReport {
            runs: sorted.len(),
            throughput_bps: Stat::over(sorted.iter().map(|r| r.throughput_bps)),
            pdr: Stat::over(sorted.iter().map(|r| r.pdr)),
            loss_ratio: Stat::over(sorted.iter().map(|r| r.loss_ratio)),
            mean_delay_s: Stat::over(sorted.iter().map(|r| r.mean_delay_s)),
            delivered_total: sorted.iter().map(|r| r.delivered).sum(),
            generated_total: sorted.iter().map(|r| r.generated).sum(),
            histogram: Vec::new(),
        }
    }

    pub fn from_reports(reports: &[MetricsReport]) -> Self {
        let summaries: Vec<RunSummary> = reports.iter().map(MetricsReport::summary).collect();
        let mut agg = Self::from_summaries(&summaries);
        agg.histogram = reports
            .iter()
            .map(|r| r.histogram.clone())
            .reduce(|mut acc, h| {
                for (a, b) in acc.iter_mut().zip(h) {
                    a.count += b.count;
                }
                acc
            })
            .unwrap_or_default();
        agg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_counts_everything() {
        let samples = [0.0, 5.0, 9.99, 10.0, 25.0, -3.0];
        let h = histogram(&samples, 0.0, 10.0, 2);
        assert_eq!(h.len(), 2);
        assert_eq!(h[0].count, 2);
        assert_eq!(h[1].count, 4);
        assert_eq!(h[1].upper, 10.0);
        assert_eq!(h.iter().map(|b| b.count).sum::<u64>(), samples.len() as u64);
    }

    #[test]
    fn single_sample_single_bin() {
        let h = histogram(&[42.0], 0.0, 100.0, 20);
        assert_eq!(h.iter().filter(|b| b.count > 0).count(), 1);
        assert_eq!(h[8].count, 1);
    }

    fn summary(seed: u64, t: f64) -> RunSummary {
        RunSummary {
            seed,
            throughput_bps: t,
            pdr: 0.9,
            loss_ratio: 1.0 - 0.9,
            mean_delay_s: 1e-3 * t,
            delivered: 9,
            generated: 10,
        }
    }

    #[test]
    fn one_run_aggregate_equals_run() {
        let r = summary(3, 1.25e7);
        let a = AggregateReport::from_summaries(&[r]);
        assert_eq!(
            a.throughput_bps,
            Stat {
                mean: r.throughput_bps,
                min: r.throughput_bps,
                max: r.throughput_bps
            }
        );
        assert_eq!(a.pdr.mean, r.pdr);
        assert_eq!(a.mean_delay_s.mean, r.mean_delay_s);
        assert_eq!((a.delivered_total, a.generated_total), (9, 10));
    }

    #[test]
    fn aggregate_is_order_independent() {
        let runs: Vec<RunSummary> = (1..=10)
            .map(|s| summary(s, 0.1 * s as f64 + 1e7 / s as f64))
            .collect();
        let mut shuffled = runs.clone();
        shuffled.reverse();
        shuffled.swap(2, 7);
        assert_eq!(
            AggregateReport::from_summaries(&runs),
            AggregateReport::from_summaries(&shuffled)
        );
    }
}
