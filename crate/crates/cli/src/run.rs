//! Single runs: CSV samples plus a JSON summary.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use eep_core::{Baseline, DriftAccumulator, DriftSummary, Propagator, SampleRecord, State};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub const CSV_HEADER: &str = "t,x1,x2,x3,v1,v2,v3,energy,moment,rel_energy_err,rel_moment_err,fp_iters";

/// Drift of one conserved quantity; `None` when the window holds too few steps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantityDrift {
    pub full: Option<DriftSummary>,
    pub second_half: Option<DriftSummary>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointStats {
    pub steps: usize,
    pub mean: f64,
    pub median: usize,
    pub max: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: BTreeMap<String, String>,
    pub steps: usize,
    pub rows: usize,
    pub sample_every: usize,
    /// `h |B| / eps`.
    pub h_omega: f64,
    pub cos_half_h_omega: f64,
    pub energy: QuantityDrift,
    pub moment: QuantityDrift,
    /// Present for the implicit method only.
    pub fixed_point: Option<FixedPointStats>,
    pub final_state: State,
    pub wall_time_s: f64,
}

/// Summary sidecar next to a CSV: `run.csv` -> `run.summary.json`.
pub fn summary_path(csv: &Path) -> PathBuf {
    csv.with_extension("summary.json")
}

fn write_row(w: &mut impl Write, r: &SampleRecord) -> std::io::Result<()> {
    let values = [
        r.t,
        r.x[0],
        r.x[1],
        r.x[2],
        r.v[0],
        r.v[1],
        r.v[2],
        r.energy,
        r.moment,
        r.rel_energy_err,
        r.rel_moment_err,
    ];
    for value in values {
        write!(w, "{value:.16e},")?;
    }
    writeln!(w, "{}", r.fp_iters)
}

struct Tracker {
    full: DriftAccumulator,
    second_half: DriftAccumulator,
}

impl Tracker {
    fn new(t0: f64, t_end: f64) -> Self {
        Tracker {
            full: DriftAccumulator::new((t0, t_end)),
            second_half: DriftAccumulator::new((t0 + 0.5 * (t_end - t0), t_end)),
        }
    }

    fn push(&mut self, t: f64, y: f64) {
        self.full.push(t, y);
        self.second_half.push(t, y);
    }

    fn finish(&self) -> QuantityDrift {
        QuantityDrift {
            full: self.full.finish().ok(),
            second_half: self.second_half.finish().ok(),
        }
    }
}

/// Runs `cfg`, writing CSV rows to `csv`. Drift statistics use every step,
/// not only the written rows.
pub fn run_to_writer(cfg: &RunConfig, csv: &mut impl Write) -> Result<RunSummary> {
    cfg.validate()?;
    let started = Instant::now();
    let prop = Propagator::new(cfg.method, cfg.field, cfg.epsilon, cfg.h, &cfg.potential)?
        .with_rule(cfg.rule()?)
        .with_fp(cfg.fp_settings())?;
    let s0 = State::new(0.0, cfg.x0, cfg.v0);
    let baseline = Baseline::new(&s0, &cfg.potential, cfg.field)?;
    let stride = cfg.effective_sample_every();
    let steps = prop.steps(s0, cfg.t_end)?;
    let total = steps.total();

    let io_err = |e| CliError::io(&cfg.out, e);
    writeln!(csv, "{CSV_HEADER}").map_err(io_err)?;
    let mut energy = Tracker::new(0.0, cfg.t_end);
    let mut moment = Tracker::new(0.0, cfg.t_end);
    let mut fp_histogram = vec![0usize; cfg.fp_max_iter + 1];
    let mut rows = 0;
    let mut final_state = s0;
    for item in steps {
        let sample = item?;
        let state = sample.report.state;
        let record =
            SampleRecord::new(&state, sample.report.fp_iters, &cfg.potential, cfg.field, &baseline).map_err(|e| {
                CliError::StepFailed {
                    step: sample.step,
                    t: state.t,
                    source: e,
                }
            })?;
        energy.push(record.t, record.rel_energy_err);
        moment.push(record.t, record.rel_moment_err);
        if sample.step > 0 {
            fp_histogram[sample.report.fp_iters.min(cfg.fp_max_iter)] += 1;
        }
        if sample.step % stride == 0 || sample.step == total {
            write_row(csv, &record).map_err(io_err)?;
            rows += 1;
        }
        final_state = state;
    }
    csv.flush().map_err(io_err)?;

    let fixed_point = (cfg.method == eep_core::Method::Eep && total > 0).then(|| fp_stats(&fp_histogram, total));
    Ok(RunSummary {
        config: cfg.to_pairs(),
        steps: total,
        rows,
        sample_every: stride,
        h_omega: cfg.h_omega(),
        cos_half_h_omega: prop.rotor().cos_half_theta(),
        energy: energy.finish(),
        moment: moment.finish(),
        fixed_point,
        final_state,
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

fn fp_stats(histogram: &[usize], steps: usize) -> FixedPointStats {
    let total_iters: usize = histogram.iter().enumerate().map(|(k, c)| k * c).sum();
    let mut seen = 0;
    let mut median = 0;
    for (k, c) in histogram.iter().enumerate() {
        seen += c;
        if 2 * seen >= steps {
            median = k;
            break;
        }
    }
    let max = histogram.iter().rposition(|&c| c > 0).unwrap_or(0);
    FixedPointStats {
        steps,
        mean: total_iters as f64 / steps as f64,
        median,
        max,
    }
}

/// Runs `cfg`, writing `cfg.out` and its summary sidecar.
pub fn run(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate()?;
    if let Some(parent) = cfg.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    let file = File::create(&cfg.out).map_err(|e| CliError::io(&cfg.out, e))?;
    let summary = run_to_writer(cfg, &mut BufWriter::new(file))?;
    write_json(&summary_path(&cfg.out), &summary)?;
    Ok(summary)
}

pub(crate) fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("summaries serialize");
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}
