//! The experiment commands, independent of argument parsing and file I/O so
//! they can be driven from tests.

use aglink_core::{
    reposition_experiment, run_batch, Aabb, BatchReport, HistogramBin, Point3, RepositionOutcome,
    Scenario, SearchRegion,
};
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::results::{block_rows, throughput_histogram, ResultRow};
use crate::scenario_file::LoadedScenario;

/// Parses `N`, `a..b` (inclusive) or `a,b,c`.
pub fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    let bad = |why: &str| CliError::Usage(format!("bad seed list `{spec}`: {why}"));
    let spec = spec.trim();
    if let Some((a, b)) = spec.split_once("..") {
        let a: u64 = a
            .trim()
            .parse()
            .map_err(|_| bad("range start is not an integer"))?;
        let b: u64 = b
            .trim()
            .trim_start_matches('=')
            .parse()
            .map_err(|_| bad("range end is not an integer"))?;
        if a > b {
            return Err(bad("range start exceeds end"));
        }
        return Ok((a..=b).collect());
    }
    let seeds = spec
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<u64>()
                .map_err(|_| bad("expected integers"))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(seeds)
}

pub fn parse_frequencies(spec: &str) -> Result<Vec<f64>> {
    let freqs = spec
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|f| *f > 0.0 && f.is_finite())
                .ok_or_else(|| CliError::Usage(format!("bad frequency `{s}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    if freqs.is_empty() {
        return Err(CliError::Usage(
            "--frequencies needs at least one value".into(),
        ));
    }
    Ok(freqs)
}

fn parse_floats<const N: usize>(spec: &str, what: &str) -> Result<[f64; N]> {
    let values: Vec<f64> = spec
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("{what}: expected {N} comma-separated numbers")))?;
    values
        .try_into()
        .map_err(|_| CliError::Usage(format!("{what}: expected {N} comma-separated numbers")))
}

/// `xmin,xmax,ymin,ymax,zmin,zmax`; the altitude band defaults to the full
/// z range of the bounds.
pub fn parse_region(bounds: &str, altitude: Option<&str>, step: f64) -> Result<SearchRegion> {
    let [x0, x1, y0, y1, z0, z1] = parse_floats::<6>(bounds, "--region")?;
    let bounds = Aabb::new(Point3::new(x0, y0, z0), Point3::new(x1, y1, z1))
        .map_err(|e| CliError::Validation(format!("region bounds: {e}")))?;
    let (lo, hi) = match altitude {
        Some(spec) => {
            let [lo, hi] = parse_floats::<2>(spec, "--altitude")?;
            (lo, hi)
        }
        None => (z0, z1),
    };
    Ok(SearchRegion::new(bounds, step, lo, hi)?)
}

/// CLI seeds win over the file's list.
pub fn resolve_seeds(cli: Option<&[u64]>, loaded: &LoadedScenario) -> Result<Vec<u64>> {
    let seeds = match cli {
        Some(s) => s.to_vec(),
        None => loaded.seeds.clone(),
    };
    if seeds.is_empty() {
        return Err(CliError::Usage(
            "no seeds: pass --seed/--seeds or add `seeds = [...]` to the scenario".into(),
        ));
    }
    Ok(seeds)
}

#[derive(Debug, Clone, Serialize)]
pub struct FrequencyBlock {
    pub frequency_hz: f64,
    pub batch: BatchReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunOutput {
    pub scenario: Scenario,
    pub seeds: Vec<u64>,
    pub blocks: Vec<FrequencyBlock>,
    #[serde(skip)]
    pub rows: Vec<ResultRow>,
}

pub fn cmd_run(loaded: &LoadedScenario, seeds: &[u64]) -> Result<RunOutput> {
    cmd_sweep(loaded, &[loaded.scenario.radio.frequency_hz], seeds)
}

/// One batch per frequency, blocks in ascending frequency order.
pub fn cmd_sweep(loaded: &LoadedScenario, frequencies: &[f64], seeds: &[u64]) -> Result<RunOutput> {
    if frequencies.is_empty() {
        return Err(CliError::Usage(
            "--frequencies needs at least one value".into(),
        ));
    }
    if seeds.is_empty() {
        return Err(CliError::Usage("at least one seed is required".into()));
    }
    let mut freqs = frequencies.to_vec();
    freqs.sort_by(f64::total_cmp);
    freqs.dedup();
    let base = &loaded.scenario;
    let mut blocks = Vec::with_capacity(freqs.len());
    let mut rows = Vec::new();
    for f in freqs {
        let mut scenario = base.clone();
        scenario.radio.frequency_hz = f;
        let batch = run_batch(&scenario, seeds)?;
        rows.extend(block_rows(&base.name, f, &batch.runs, &batch.aggregate));
        blocks.push(FrequencyBlock {
            frequency_hz: f,
            batch,
        });
    }
    Ok(RunOutput {
        scenario: base.clone(),
        seeds: seeds.to_vec(),
        blocks,
        rows,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PlaceOutput {
    pub region: SearchRegion,
    pub outcome: RepositionOutcome,
    /// Whether the starting position already had line of sight.
    pub already_clear: bool,
    #[serde(skip)]
    pub rows: Vec<ResultRow>,
}

impl PlaceOutput {
    pub fn summary(&self) -> String {
        let o = &self.outcome;
        let p = &o.placement;
        let mut s = format!(
            "position {} (predicted loss {:.2} dB, los_clear={}, {} candidates)\n\
             before {}: throughput {:.4} Mb/s, mean delay {:.4} ms, pdr {:.4}\n\
             after  {}: throughput {:.4} Mb/s, mean delay {:.4} ms, pdr {:.4}\n",
            p.position,
            p.predicted_path_loss_db,
            p.los_clear,
            p.candidates_evaluated,
            o.before_position,
            o.before.aggregate.throughput_bps.mean / 1e6,
            o.before.aggregate.mean_delay_s.mean * 1e3,
            o.before.aggregate.pdr.mean,
            p.position,
            o.after.aggregate.throughput_bps.mean / 1e6,
            o.after.aggregate.mean_delay_s.mean * 1e3,
            o.after.aggregate.pdr.mean,
        );
        if self.already_clear {
            s.push_str("note: line of sight was already clear at the starting position\n");
        }
        if !p.los_clear {
            s.push_str("note: no candidate in the region has line of sight to the user\n");
        }
        s
    }
}

/// Searches `region` for a better UAV position and reruns `seeds` there.
/// Rows are labelled `<name>:before` and `<name>:after`.
pub fn cmd_place(
    loaded: &LoadedScenario,
    region: &SearchRegion,
    seeds: &[u64],
) -> Result<PlaceOutput> {
    let sc = &loaded.scenario;
    let outcome = reposition_experiment(sc, region, seeds)?;
    let f = sc.radio.frequency_hz;
    let mut rows = block_rows(
        &format!("{}:before", sc.name),
        f,
        &outcome.before.runs,
        &outcome.before.aggregate,
    );
    rows.extend(block_rows(
        &format!("{}:after", sc.name),
        f,
        &outcome.after.runs,
        &outcome.after.aggregate,
    ));
    let already_clear = aglink_core::line_of_sight(sc.ue_pos, sc.uav_pos, &sc.buildings).is_clear();
    Ok(PlaceOutput {
        region: *region,
        outcome,
        already_clear,
        rows,
    })
}

pub fn cmd_hist(rows: &[ResultRow], bins: usize) -> Result<Vec<HistogramBin>> {
    throughput_histogram(rows, bins)
}
