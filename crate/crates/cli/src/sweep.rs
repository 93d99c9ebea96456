//! Convergence tables against an RK4 reference.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use eep_core::{rk4_reference, Propagator, State};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, SweepConfig};
use crate::error::{CliError, Result};
use crate::run::write_json;

pub const TABLE_HEADER: &str = "h,global_x_error,global_v_error,observed_order";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub h: f64,
    /// Euclidean norm of the position error at `t_end`.
    pub global_x_error: f64,
    pub global_v_error: f64,
    /// `log(e_prev / e) / log(h_prev / h)` on the position error; absent on the first row.
    pub observed_order: Option<f64>,
}

/// One table per scaling `epsilon`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub epsilon: f64,
    pub h_ref: f64,
    pub t_end: f64,
    pub reference: State,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{TABLE_HEADER}\n");
        for r in &self.rows {
            let order = r.observed_order.map_or(String::new(), |p| format!("{p:.16e}"));
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{order}",
                r.h, r.global_x_error, r.global_v_error
            )
            .expect("writing to a String");
        }
        out
    }
}

enum Job {
    Reference { epsilon: f64, h_ref: f64 },
    Member { epsilon: f64, h: f64 },
}

enum Outcome {
    Reference(State),
    Member(State),
}

fn member_config(base: &RunConfig, epsilon: f64, h: f64) -> RunConfig {
    RunConfig {
        epsilon,
        h,
        ..base.clone()
    }
}

fn final_state(cfg: &RunConfig) -> Result<State> {
    let prop = Propagator::new(cfg.method, cfg.field, cfg.epsilon, cfg.h, &cfg.potential)?
        .with_rule(cfg.rule()?)
        .with_fp(cfg.fp_settings())?;
    let mut last = State::new(0.0, cfg.x0, cfg.v0);
    for item in prop.steps(last, cfg.t_end)? {
        last = item?.report.state;
    }
    Ok(last)
}

/// Runs every member and reference, in parallel, and builds one table per epsilon.
pub fn sweep(cfg: &SweepConfig) -> Result<Vec<SweepTable>> {
    cfg.validate()?;
    let base = &cfg.base;
    let epsilons = cfg.epsilons();
    let hs = cfg.stepsizes();
    let h_refs: Vec<f64> = epsilons
        .iter()
        .map(|&e| cfg.h_ref.unwrap_or_else(|| cfg.default_h_ref(e)))
        .collect();
    let mut jobs = Vec::new();
    for (&epsilon, &h_ref) in epsilons.iter().zip(&h_refs) {
        jobs.push(Job::Reference { epsilon, h_ref });
        jobs.extend(hs.iter().map(|&h| Job::Member { epsilon, h }));
    }
    let outcomes: Vec<Outcome> = jobs
        .par_iter()
        .map(|job| match *job {
            Job::Reference { epsilon, h_ref } => {
                let s0 = State::new(0.0, base.x0, base.v0);
                rk4_reference(&s0, base.field, epsilon, &base.potential, base.t_end, h_ref)
                    .map(Outcome::Reference)
                    .map_err(CliError::from)
            }
            Job::Member { epsilon, h } => final_state(&member_config(base, epsilon, h)).map(Outcome::Member),
        })
        .collect::<Result<_>>()?;

    let mut tables = Vec::new();
    for (chunk, (&epsilon, &h_ref)) in outcomes.chunks(hs.len() + 1).zip(epsilons.iter().zip(&h_refs)) {
        let Outcome::Reference(reference) = chunk[0] else {
            unreachable!("reference leads each chunk")
        };
        let mut rows: Vec<SweepRow> = Vec::new();
        for (outcome, &h) in chunk[1..].iter().zip(&hs) {
            let Outcome::Member(s) = outcome else {
                unreachable!("members follow the reference")
            };
            let global_x_error = (s.x - reference.x).norm();
            let observed_order = rows
                .last()
                .map(|prev| (prev.global_x_error / global_x_error).ln() / (prev.h / h).ln());
            rows.push(SweepRow {
                h,
                global_x_error,
                global_v_error: (s.v - reference.v).norm(),
                observed_order,
            });
        }
        tables.push(SweepTable {
            epsilon,
            h_ref,
            t_end: base.t_end,
            reference,
            rows,
        });
    }
    Ok(tables)
}

/// Output path of the table for `epsilon`: `out` itself for a single table,
/// otherwise `out` with an `-eps<epsilon>` suffix.
pub fn table_path(out: &Path, epsilon: f64, tables: usize) -> PathBuf {
    if tables == 1 {
        return out.to_path_buf();
    }
    let stem = out
        .file_stem()
        .map_or("sweep".into(), |s| s.to_string_lossy().into_owned());
    let ext = out
        .extension()
        .map_or("csv".into(), |e| e.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}-eps{epsilon}.{ext}"))
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    config: std::collections::BTreeMap<String, String>,
    tables: &'a [SweepTable],
    wall_time_s: f64,
}

/// Runs the sweep and writes its tables plus a `.summary.json` sidecar next to `out`.
pub fn run_sweep(cfg: &SweepConfig) -> Result<(Vec<SweepTable>, Vec<PathBuf>)> {
    let started = Instant::now();
    let tables = sweep(cfg)?;
    let out = &cfg.base.out;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    let mut paths = Vec::new();
    for table in &tables {
        let path = table_path(out, table.epsilon, tables.len());
        std::fs::write(&path, table.to_csv()).map_err(|e| CliError::io(&path, e))?;
        paths.push(path);
    }
    let mut config = cfg.base.to_pairs();
    config.insert("h_list".into(), join(&cfg.stepsizes()));
    config.insert("epsilon_list".into(), join(&cfg.epsilons()));
    let summary = SweepSummary {
        config,
        tables: &tables,
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    write_json(&crate::run::summary_path(out), &summary)?;
    Ok((tables, paths))
}

fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(", ")
}
