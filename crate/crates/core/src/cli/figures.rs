//! Hard-coded sweeps behind `reproduce`.
//!
//! Every Monte Carlo point gets its own stream: its index in the figure's
//! point list. Changing the worker count therefore never changes a value.

use serde::Serialize;

use super::config::half_full;
use super::output::{Row, ValueKind};
use super::{point_config, run_points, SimKind, SimOptions};
use crate::channel::snr_threshold;
use crate::markov::max_total_full;
use crate::outage::iid_curve;
use crate::selection::Scheme;
use crate::sim::{BufferMode, SimConfig, SimReport};
use crate::Result;

const RATE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    /// Outage vs buffer size at 20 dB, N = 2, 3.
    Fig2,
    /// Outage vs full elements per relay, L_b = 100, 20 dB.
    Fig3,
    /// Outage vs SNR, N = 1, 2, 3, 5, HRS with L_b = 30.
    Fig4,
    /// Mean delay vs buffer size at 15 dB.
    Fig5,
}

impl Figure {
    pub fn as_str(self) -> &'static str {
        match self {
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FigureOptions {
    pub trials: u64,
    pub seed: u64,
    pub buffer_mode: BufferMode,
    pub burn_in: Option<u64>,
}

/// Resolved preset, embedded in the output document.
#[derive(Debug, Clone, Serialize)]
pub struct Preset {
    pub figure: Figure,
    pub n: Vec<usize>,
    pub lb: Vec<u32>,
    /// `"half_full"` (ceil(N L_b / 2), capped) or `"all"` feasible values.
    pub ne: &'static str,
    pub snr_db: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub rate: f64,
    pub threshold: f64,
    pub trials: u64,
    pub seed: u64,
    pub buffer_mode: BufferMode,
    pub burn_in: Option<u64>,
}

pub struct FigureOutput {
    pub preset: Preset,
    pub rows: Vec<Row>,
    pub reports: Vec<SimReport>,
}

/// Analytic value (if any) and simulation point for one figure entry.
struct Entry {
    scheme: Scheme,
    n: usize,
    snr_db: f64,
    /// Buffer size shown on the x axis (BRS/MMRS rows in fig2 repeat their
    /// single simulation across it).
    lb: Option<u32>,
    buffers: Option<(u32, u64)>,
    analytic: Option<f64>,
    /// Index into the simulated points.
    sim: usize,
}

pub fn build(figure: Figure, opts: &FigureOptions, workers: usize) -> Result<FigureOutput> {
    let threshold = snr_threshold(RATE)?;
    let sim_opts = SimOptions {
        trials: opts.trials,
        seed: opts.seed,
        rate: RATE,
        buffer_mode: opts.buffer_mode,
        burn_in: opts.burn_in,
    };
    let analytic_hrs_valid = opts.buffer_mode == BufferMode::AnalysisMatched;
    let mut configs: Vec<SimConfig> = Vec::new();
    let mut entries = Vec::new();
    let add_sim = |configs: &mut Vec<SimConfig>, scheme, n, db, buffers| -> Result<usize> {
        let stream = configs.len() as u64;
        configs.push(point_config(&sim_opts, scheme, n, db, buffers, stream)?);
        Ok(configs.len() - 1)
    };
    let analytic = |scheme, n, buffers: Option<(u32, u64)>, db: f64| -> Result<Option<f64>> {
        if scheme == Scheme::Hrs && !analytic_hrs_valid {
            return Ok(None);
        }
        Ok(Some(
            iid_curve(scheme, n, buffers, &[db], threshold)?.points[0].probability,
        ))
    };

    let (ns, lbs, ne_rule, snrs, schemes, kind): (
        Vec<usize>,
        Vec<u32>,
        _,
        Vec<f64>,
        Vec<Scheme>,
        _,
    ) = match figure {
        Figure::Fig2 => {
            let lbs: Vec<u32> = (1..=50).collect();
            for n in [2, 3] {
                let brs = add_sim(&mut configs, Scheme::Brs, n, 20.0, None)?;
                let mmrs = add_sim(&mut configs, Scheme::Mmrs, n, 20.0, None)?;
                let a_brs = analytic(Scheme::Brs, n, None, 20.0)?;
                let a_mmrs = analytic(Scheme::Mmrs, n, None, 20.0)?;
                for &lb in &lbs {
                    let b = Some((lb, half_full(n, lb)));
                    let hrs = add_sim(&mut configs, Scheme::Hrs, n, 20.0, b)?;
                    let base = Entry {
                        scheme: Scheme::Brs,
                        n,
                        snr_db: 20.0,
                        lb: Some(lb),
                        buffers: None,
                        analytic: a_brs,
                        sim: brs,
                    };
                    entries.push(base);
                    entries.push(Entry {
                        scheme: Scheme::Mmrs,
                        n,
                        snr_db: 20.0,
                        lb: Some(lb),
                        buffers: None,
                        analytic: a_mmrs,
                        sim: mmrs,
                    });
                    entries.push(Entry {
                        scheme: Scheme::Hrs,
                        n,
                        snr_db: 20.0,
                        lb: Some(lb),
                        buffers: b,
                        analytic: analytic(Scheme::Hrs, n, b, 20.0)?,
                        sim: hrs,
                    });
                }
            }
            (
                vec![2, 3],
                lbs,
                "half_full",
                vec![20.0],
                Scheme::ALL.to_vec(),
                SimKind::Outage,
            )
        }
        Figure::Fig3 => {
            let lb = 100;
            for n in [2, 3] {
                for ne in 0..=max_total_full(n, lb) {
                    let b = Some((lb, ne));
                    let sim = add_sim(&mut configs, Scheme::Hrs, n, 20.0, b)?;
                    entries.push(Entry {
                        scheme: Scheme::Hrs,
                        n,
                        snr_db: 20.0,
                        lb: Some(lb),
                        buffers: b,
                        analytic: analytic(Scheme::Hrs, n, b, 20.0)?,
                        sim,
                    });
                }
            }
            (
                vec![2, 3],
                vec![lb],
                "all",
                vec![20.0],
                vec![Scheme::Hrs],
                SimKind::Outage,
            )
        }
        Figure::Fig4 => {
            let lb = 30;
            let snrs: Vec<f64> = (0..=20).map(|k| 2.0 * k as f64).collect();
            for n in [1, 2, 3, 5] {
                for scheme in Scheme::ALL {
                    let b = (scheme == Scheme::Hrs).then(|| (lb, half_full(n, lb)));
                    for &db in &snrs {
                        let sim = add_sim(&mut configs, scheme, n, db, b)?;
                        entries.push(Entry {
                            scheme,
                            n,
                            snr_db: db,
                            lb: b.map(|b| b.0),
                            buffers: b,
                            analytic: analytic(scheme, n, b, db)?,
                            sim,
                        });
                    }
                }
            }
            (
                vec![1, 2, 3, 5],
                vec![lb],
                "half_full",
                snrs,
                Scheme::ALL.to_vec(),
                SimKind::Outage,
            )
        }
        Figure::Fig5 => {
            let lbs: Vec<u32> = std::iter::once(1).chain((5..=50).step_by(5)).collect();
            for n in [2, 3, 5] {
                let brs = add_sim(&mut configs, Scheme::Brs, n, 15.0, None)?;
                entries.push(Entry {
                    scheme: Scheme::Brs,
                    n,
                    snr_db: 15.0,
                    lb: None,
                    buffers: None,
                    analytic: None,
                    sim: brs,
                });
                for &lb in &lbs {
                    let b = Some((lb, half_full(n, lb)));
                    let sim = add_sim(&mut configs, Scheme::Hrs, n, 15.0, b)?;
                    entries.push(Entry {
                        scheme: Scheme::Hrs,
                        n,
                        snr_db: 15.0,
                        lb: Some(lb),
                        buffers: b,
                        analytic: None,
                        sim,
                    });
                }
            }
            (
                vec![2, 3, 5],
                lbs,
                "half_full",
                vec![15.0],
                vec![Scheme::Brs, Scheme::Hrs],
                SimKind::Delay,
            )
        }
    };

    let reports = run_points(configs, workers, kind)?;
    let mut rows = Vec::new();
    for e in &entries {
        let mut base =
            Row::analytic(e.scheme, e.n, ValueKind::OutageAnalytic, 0.0, RATE).at_snr(e.snr_db);
        base.lb = e.lb;
        base.ne = e.buffers.map(|b| b.1);
        if let Some(v) = e.analytic {
            rows.push(Row {
                value: v,
                ..base.clone()
            });
        }
        let rep = &reports[e.sim];
        let row = match kind {
            SimKind::Delay => Row {
                value_kind: ValueKind::DelaySim,
                value: rep.average_delay.unwrap_or(0.0),
                ..base
            },
            _ => Row {
                value_kind: ValueKind::OutageSim,
                value: rep.outage_estimate,
                ..base
            },
        };
        let stderr = match kind {
            SimKind::Delay => None,
            _ => Some(rep.stderr),
        };
        rows.push(row.simulated(stderr, rep.intervals, opts.seed));
    }

    let preset = Preset {
        figure,
        n: ns,
        lb: lbs,
        ne: ne_rule,
        snr_db: snrs,
        schemes,
        rate: RATE,
        threshold,
        trials: opts.trials,
        seed: opts.seed,
        buffer_mode: opts.buffer_mode,
        burn_in: opts.burn_in,
    };
    Ok(FigureOutput {
        preset,
        rows,
        reports,
    })
}
