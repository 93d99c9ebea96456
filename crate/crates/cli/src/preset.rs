//! Built-in experiment presets.
//!
//! All presets share the axial inverse-distance potential `0.01 / rho`,
//! `B = (0, 0, 1)`, `x0 = (0.7, 1, 0.1)`, `v0 = (0.9, 0.5, 0.4)`, 4-point
//! Gauss-Legendre quadrature and fixed-point tolerance `1e-16` with at most
//! 50 iterations.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use eep_core::Method;
use rayon::prelude::*;

use crate::config::{RunConfig, SweepConfig};
use crate::error::Result;
use crate::run::{run, RunSummary};
use crate::sweep::{run_sweep, SweepTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, ValueEnum)]
pub enum Preset {
    /// EEP energy errors, eps = 0.01 and 0.0001, h = 0.01, T = 10000.
    #[value(name = "paper-fig1")]
    PaperFig1,
    /// EEP magnetic-moment errors, same runs as paper-fig1.
    #[value(name = "paper-fig2")]
    PaperFig2,
    /// Boris errors, eps = 0.0001, h = 0.01, T = 10000.
    #[value(name = "paper-fig3")]
    PaperFig3,
    /// EEP global errors, eps = 0.05, T = 10, 100, 1000, h = 1/(50 * 2^i), i = 0..3.
    #[value(name = "paper-fig4")]
    PaperFig4,
}

/// One member of a preset.
#[derive(Clone, Debug, PartialEq)]
pub enum Job {
    Run(RunConfig),
    Sweep(SweepConfig),
}

impl Job {
    fn base_mut(&mut self) -> &mut RunConfig {
        match self {
            Job::Run(cfg) => cfg,
            Job::Sweep(cfg) => &mut cfg.base,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum JobOutput {
    Run { csv: PathBuf, summary: Box<RunSummary> },
    Sweep { tables: Vec<SweepTable>, csv: Vec<PathBuf> },
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::PaperFig1 => "paper-fig1",
            Preset::PaperFig2 => "paper-fig2",
            Preset::PaperFig3 => "paper-fig3",
            Preset::PaperFig4 => "paper-fig4",
        }
    }

    /// The member runs, writing into `out_dir`.
    pub fn jobs(&self, out_dir: &Path) -> Vec<Job> {
        let name = self.name();
        let long_run = |method: Method, epsilon: f64| RunConfig {
            method,
            epsilon,
            h: 0.01,
            t_end: 10_000.0,
            out: out_dir.join(format!("{name}-{method}-eps{epsilon}.csv")),
            ..RunConfig::default()
        };
        match self {
            Preset::PaperFig1 | Preset::PaperFig2 => {
                vec![
                    Job::Run(long_run(Method::Eep, 0.01)),
                    Job::Run(long_run(Method::Eep, 0.0001)),
                ]
            }
            Preset::PaperFig3 => vec![Job::Run(long_run(Method::Boris, 0.0001))],
            Preset::PaperFig4 => [10.0, 100.0, 1000.0]
                .into_iter()
                .map(|t_end| {
                    let base = RunConfig {
                        epsilon: 0.05,
                        t_end,
                        out: out_dir.join(format!("{name}-T{t_end}.csv")),
                        ..RunConfig::default()
                    };
                    let mut sweep = SweepConfig::new(base);
                    sweep.h_list = (0..4).map(|i| 1.0 / (50.0 * 2f64.powi(i))).collect();
                    Job::Sweep(sweep)
                })
                .collect(),
        }
    }
}

/// Applies `key = value` overrides to every member, except `out`, which
/// is the preset's output directory.
pub fn apply_overrides(jobs: &mut [Job], overrides: &[(String, String)]) -> Result<()> {
    for job in jobs {
        for (key, value) in overrides {
            job.base_mut().set(key, value)?;
        }
    }
    Ok(())
}

/// Runs all members of a preset, in parallel.
pub fn run_preset(preset: Preset, out_dir: &Path, overrides: &[(String, String)]) -> Result<Vec<JobOutput>> {
    let mut jobs = preset.jobs(out_dir);
    apply_overrides(&mut jobs, overrides)?;
    jobs.par_iter()
        .map(|job| match job {
            Job::Run(cfg) => run(cfg).map(|summary| JobOutput::Run {
                csv: cfg.out.clone(),
                summary: Box::new(summary),
            }),
            Job::Sweep(cfg) => run_sweep(cfg).map(|(tables, csv)| JobOutput::Sweep { tables, csv }),
        })
        .collect()
}
