use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use bautin_core::cycles::{bisect_threshold, classify_amplitude, make_history, sweep, sweep_csv, PortraitClass};
use bautin_core::integrator::integrate;
use bautin_core::normalform::{zone_grid, zones_csv};
use bautin_core::spectrum::{hopf_curve, hopf_curve_csv, leading_eigenvalue, HopfFamily};
use bautin_core::{Error, Params};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ConfigError, ExperimentConfig};
use crate::plot::{self, Axes, Marker, Series};

/// Shared by every command.
pub struct Ctx {
    pub config: ExperimentConfig,
    pub out: PathBuf,
    pub jobs: usize,
}

/// Number of failed computations; nonzero maps to exit code 1.
pub type Failures = usize;

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn tag(params: &Params, c: Option<f64>) -> String {
    match c {
        Some(c) => format!("delta{}_r{}_c{}", params.delta, params.r, c),
        None => format!("delta{}_r{}", params.delta, params.r),
    }
}

fn invalid_input(e: Error) -> anyhow::Error {
    ConfigError(e.to_string()).into()
}

fn point(config: &ExperimentConfig, label: &str, delta: f64, r: f64) -> Result<Params> {
    config
        .model
        .with_delta_r(delta, r)
        .map_err(|e| ConfigError(format!("point {label}: {e}")).into())
}

fn in_pool<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> R {
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

pub fn hopf_curve_cmd(ctx: &Ctx) -> Result<Failures> {
    let cfg = &ctx.config;
    let family = HopfFamily::from(&cfg.model);
    let samples = hopf_curve(cfg.hopf.delta_lo, cfg.hopf.delta_hi, cfg.hopf.samples, &family).map_err(invalid_input)?;
    let curve: Vec<(f64, f64)> = samples
        .iter()
        .filter_map(|s| s.point.as_ref().ok().map(|p| (p.delta, p.r_star)))
        .collect();
    if curve.is_empty() {
        let reason = samples
            .iter()
            .find_map(|s| s.point.as_ref().err())
            .map(|e| e.to_string())
            .unwrap_or_default();
        anyhow::bail!(
            "no Hopf point for delta in [{}, {}]: {reason}",
            cfg.hopf.delta_lo,
            cfg.hopf.delta_hi
        );
    }
    let skipped = samples.len() - curve.len();
    if skipped > 0 {
        eprintln!("note: {skipped} samples have no Hopf point and are left blank in the CSV");
    }
    write(&ctx.out.join("hopf_curve.csv"), &hopf_curve_csv(&samples))?;

    let markers: Vec<Marker> = cfg
        .hopf
        .markers
        .iter()
        .map(|m| Marker {
            label: &m.label,
            at: (m.delta, m.r),
        })
        .collect();
    let svg = plot::lines(
        &Axes {
            title: "Hopf curve r*(delta)",
            x_label: "delta",
            y_label: "r",
            x_range: None,
            y_range: None,
        },
        &[Series {
            label: "Re lambda = 0",
            points: curve,
        }],
        &markers,
    )?;
    write(&ctx.out.join("hopf_curve.svg"), &svg)?;
    Ok(0)
}

/// CSV text and the `(t, x, ẋ)` rows it was rendered from.
type SimRun = (String, Vec<(f64, f64, f64)>);

pub fn simulate_cmd(ctx: &Ctx) -> Result<Failures> {
    let cfg = &ctx.config;
    let params = cfg.model;
    let x2 = params.x2()?;
    let eig = leading_eigenvalue(&params)?;
    let spacing = 2.0 * PI / eig.omega / cfg.plot.samples_per_period;

    let runs: Vec<(f64, Result<SimRun>)> = in_pool(ctx.jobs, || {
        cfg.history
            .c
            .par_iter()
            .map(|&c| {
                let run = || -> Result<_> {
                    let history = make_history(&params, &eig, c)?;
                    let traj = integrate(params, history, &cfg.integration)?;
                    let rows = traj
                        .sample_times(spacing)
                        .into_iter()
                        .map(|t| Ok((t, traj.eval(t)?, traj.eval_derivative(t)?)))
                        .collect::<std::result::Result<Vec<_>, Error>>()?;
                    Ok((traj.to_csv(spacing)?, rows))
                };
                (c, run())
            })
            .collect()
    });

    let mut failures = 0;
    for (c, run) in runs {
        let (csv, rows) = match run {
            Ok(ok) => ok,
            Err(e) => {
                eprintln!(
                    "error: simulate at delta={}, r={}, c={c}: {e:#}",
                    params.delta, params.r
                );
                failures += 1;
                continue;
            }
        };
        let name = format!("simulate_{}", tag(&params, Some(c)));
        write(&ctx.out.join(format!("{name}.csv")), &csv)?;

        let (t0, t1) = (rows[0].0, rows[rows.len() - 1].0);
        let title = format!("delta = {}, r = {}, c = {c}", params.delta, params.r);
        let series = [
            Series {
                label: "x(t)",
                points: rows.iter().map(|r| (r.0, r.1)).collect(),
            },
            Series {
                label: "x2",
                points: vec![(t0, x2), (t1, x2)],
            },
        ];
        let svg = plot::lines(
            &Axes {
                title: &title,
                x_label: "t",
                y_label: "x",
                x_range: cfg.plot.t_range,
                y_range: cfg.plot.x_range,
            },
            &series,
            &[],
        )?;
        write(&ctx.out.join(format!("{name}_timeseries.svg")), &svg)?;

        let phase = [Series {
            label: "",
            points: rows.iter().map(|r| (r.1, r.2)).collect(),
        }];
        let svg = plot::lines(
            &Axes {
                title: &title,
                x_label: "x",
                y_label: "dx/dt",
                x_range: cfg.plot.x_range,
                y_range: cfg.plot.xdot_range,
            },
            &phase,
            &[Marker {
                label: "x2",
                at: (x2, 0.0),
            }],
        )?;
        write(&ctx.out.join(format!("{name}_phase.svg")), &svg)?;
    }
    Ok(failures)
}

#[derive(Serialize)]
struct ClassifyRow {
    label: String,
    delta: f64,
    r: f64,
    c: f64,
    #[serde(flatten)]
    class: Option<PortraitClass<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

pub fn classify_cmd(ctx: &Ctx) -> Result<Failures> {
    let cfg = &ctx.config;
    let mut jobs: Vec<(String, Params, f64)> = Vec::new();
    if cfg.classify.runs.is_empty() {
        for &c in &cfg.history.c {
            jobs.push(("model".into(), cfg.model, c));
        }
    } else {
        for run in &cfg.classify.runs {
            let params = point(cfg, &run.label, run.delta, run.r)?;
            for &c in &run.c {
                jobs.push((run.label.clone(), params, c));
            }
        }
    }

    let rows: Vec<ClassifyRow> = in_pool(ctx.jobs, || {
        jobs.par_iter()
            .map(|(label, params, c)| {
                let outcome = leading_eigenvalue(params)
                    .and_then(|eig| classify_amplitude(params, &eig, *c, &cfg.integration, &cfg.classification));
                let (class, error) = match outcome {
                    Ok(class) => (Some(class), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                ClassifyRow {
                    label: label.clone(),
                    delta: params.delta,
                    r: params.r,
                    c: *c,
                    class,
                    error,
                }
            })
            .collect()
    });

    let mut failures = 0;
    for row in &rows {
        match (&row.class, &row.error) {
            (Some(class), _) => println!(
                "{:<6} delta={} r={} c={}: {}",
                row.label, row.delta, row.r, row.c, class.verdict
            ),
            (None, Some(e)) => {
                failures += 1;
                eprintln!("error: {} delta={} r={} c={}: {e}", row.label, row.delta, row.r, row.c);
            }
            (None, None) => unreachable!("a row has a class or an error"),
        }
    }
    let json = serde_json::to_string_pretty(&rows)? + "\n";
    write(&ctx.out.join("classify.json"), &json)?;
    Ok(failures)
}

pub fn threshold_cmd(ctx: &Ctx) -> Result<Failures> {
    let cfg = &ctx.config;
    let t = &cfg.threshold;
    let result = bisect_threshold(
        &cfg.model,
        t.c_lo,
        t.c_hi,
        t.tol_c,
        &cfg.integration,
        &cfg.classification,
    )
    .map_err(|e| match e {
        Error::InvalidInterval(_) => invalid_input(e),
        other => {
            anyhow::Error::from(other).context(format!("threshold at delta={}, r={}", cfg.model.delta, cfg.model.r))
        }
    })?;
    println!("threshold bracket: [{}, {}]", result.c_lo, result.c_hi);
    write(
        &ctx.out.join(format!("threshold_{}.json", tag(&cfg.model, None))),
        &(result.to_json() + "\n"),
    )?;
    Ok(0)
}

pub fn sweep_cmd(ctx: &Ctx) -> Result<Failures> {
    let cfg = &ctx.config;
    let grid: Vec<Params> = if cfg.sweep.points.is_empty() {
        vec![cfg.model]
    } else {
        cfg.sweep
            .points
            .iter()
            .map(|p| point(cfg, &p.label, p.delta, p.r))
            .collect::<Result<_>>()?
    };
    let cs = if cfg.sweep.c.is_empty() {
        &cfg.history.c
    } else {
        &cfg.sweep.c
    };
    let cells = sweep(&grid, cs, &cfg.integration, &cfg.classification, ctx.jobs);
    let mut failures = 0;
    for cell in &cells {
        if let Err(e) = &cell.outcome {
            failures += 1;
            eprintln!(
                "error: sweep cell delta={}, r={}, c={}: {e}",
                cell.params.delta, cell.params.r, cell.c
            );
        }
    }
    write(&ctx.out.join("sweep.csv"), &sweep_csv(&cells))?;
    Ok(failures)
}

pub fn zones_cmd(ctx: &Ctx) -> Result<Failures> {
    let z = &ctx.config.zones;
    let b1 = (z.b1_lo, z.b1_hi);
    let b2 = (z.b2_lo, z.b2_hi);
    let cells = zone_grid(b1, b2, z.n_b1, z.n_b2).map_err(invalid_input)?;
    write(&ctx.out.join("zones.csv"), &zones_csv(b1, b2, z.n_b1, z.n_b2)?)?;
    write(&ctx.out.join("zones.svg"), &plot::zones(&cells, z.n_b1, z.n_b2)?)?;
    Ok(0)
}
