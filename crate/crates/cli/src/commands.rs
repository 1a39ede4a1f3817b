//! Subcommand implementations. Each writes its CSVs under `out` and returns
//! the in-memory results so callers and tests can inspect them.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ridesim_core::choice::{calibrate_random_probability, delta_p, sensitivity_sweep, Attribute, Calibration};
use ridesim_core::metrics::{trend_stats, Metric, Partition, TrendReport};
use ridesim_core::netgraph::Router;
use ridesim_core::output;
use ridesim_core::scenario::{run_sweep, CellResult, ScenarioConfig};
use ridesim_core::seed::{derive, Domain};
use ridesim_core::{run, summarize, MetricsError, SimOutput};

use crate::config::Loaded;
use crate::error::CliError;
use crate::plot;

/// `# seed=...,config_digest=...` payload.
pub fn provenance(seed: u64, loaded: &Loaded) -> String {
    format!("seed={seed},config_digest={}", loaded.config.digest())
}

fn write_file<F>(dir: &Path, name: &str, body: F) -> Result<PathBuf, CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<(), String>,
{
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    let path = dir.join(name);
    let file = File::create(&path).map_err(|source| CliError::Io { path: path.clone(), source })?;
    let mut w = BufWriter::new(file);
    body(&mut w).map_err(|message| CliError::Output { path: path.clone(), message })?;
    w.flush().map_err(|source| CliError::Io { path: path.clone(), source })?;
    Ok(path)
}

fn csv_err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

pub fn calibration_seeds(loaded: &Loaded) -> Vec<u64> {
    let s = &loaded.config.sweep;
    (0..s.calibration_seeds as u64).map(|i| derive(s.master_seed, Domain::Calibration, i)).collect()
}

pub fn calibrate(loaded: &Loaded, router: &Router) -> Result<Calibration, CliError> {
    Ok(calibrate_random_probability(&loaded.config.scenario(), router, &calibration_seeds(loaded))?)
}

/// Scenario with the random-class probability filled in, calibrating when
/// `needed` and none is configured.
pub fn resolved_scenario(
    loaded: &Loaded,
    router: &Router,
    needed: bool,
) -> Result<(ScenarioConfig, Option<Calibration>), CliError> {
    let mut scenario = loaded.config.scenario();
    if scenario.random_accept_prob.is_some() || !needed {
        return Ok((scenario, None));
    }
    let cal = calibrate(loaded, router)?;
    scenario.random_accept_prob = Some(cal.probability());
    Ok((scenario, Some(cal)))
}

fn write_calibration(out: &Path, cal: &Calibration, loaded: &Loaded) -> Result<PathBuf, CliError> {
    let prov = provenance(loaded.config.sweep.master_seed, loaded);
    write_file(out, "calibration.csv", |w| output::write_calibration(cal, w, Some(&prov)).map_err(csv_err))
}

pub fn cmd_run(loaded: &Loaded, out: &Path) -> Result<SimOutput, CliError> {
    let router = loaded.router()?;
    let needs_p = loaded.config.scenario().n_behavioural() < loaded.config.n_drivers;
    let (scenario, cal) = resolved_scenario(loaded, &router, needs_p)?;
    let seed = loaded.config.seed;
    let mut result = run(&scenario, &router, seed)?;
    result.meta.config_digest = Some(loaded.config.digest());
    let prov = provenance(seed, loaded);
    write_file(out, "trips.csv", |w| output::write_trips(&result, w, Some(&prov)).map_err(csv_err))?;
    write_file(out, "drivers.csv", |w| output::write_drivers(&result, w, Some(&prov)).map_err(csv_err))?;
    write_file(out, "offers.csv", |w| output::write_offers(&result, w, Some(&prov)).map_err(csv_err))?;
    let summary = summarize(&result);
    write_file(out, "summary.csv", |w| {
        output::write_summary(std::slice::from_ref(&summary), w, Some(&prov)).map_err(csv_err)
    })?;
    if let Some(cal) = cal {
        write_calibration(out, &cal, loaded)?;
    }
    Ok(result)
}

pub fn cmd_calibrate(loaded: &Loaded, out: &Path) -> Result<Calibration, CliError> {
    let router = loaded.router()?;
    let cal = calibrate(loaded, &router)?;
    write_calibration(out, &cal, loaded)?;
    Ok(cal)
}

/// Results of a full share x replication sweep.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub scenario: ScenarioConfig,
    pub calibration: Option<Calibration>,
    pub cells: Vec<CellResult>,
    /// Absent when the plan has too few shares or replications.
    pub trend: Option<TrendReport>,
}

impl Sweep {
    pub fn cells_at(&self, share: f64) -> impl Iterator<Item = &CellResult> {
        self.cells.iter().filter(move |c| c.cell.share == share)
    }
}

/// Runs calibration (if needed) and every cell, without writing files.
pub fn sweep(loaded: &Loaded, router: &Router) -> Result<Sweep, CliError> {
    let plan = loaded.config.plan()?;
    let n = loaded.config.n_drivers;
    let needs_p = plan.shares.iter().any(|&s| ridesim_core::scenario::behavioural_count(s, n) < n);
    let (scenario, calibration) = resolved_scenario(loaded, router, needs_p)?;
    let cells = run_sweep(&plan, &scenario, router, loaded.config.jobs())?;
    let summaries: Vec<_> = cells.iter().map(|c| c.summary.clone()).collect();
    let trend = match trend_stats(&summaries) {
        Ok(t) => Some(t),
        Err(MetricsError::Config(_)) => None,
        Err(e) => return Err(e.into()),
    };
    Ok(Sweep { scenario, calibration, cells, trend })
}

pub fn cmd_sweep(loaded: &Loaded, out: &Path, plots: bool) -> Result<Sweep, CliError> {
    let router = loaded.router()?;
    let result = sweep(loaded, &router)?;
    let prov = provenance(loaded.config.sweep.master_seed, loaded);
    let summaries: Vec<_> = result.cells.iter().map(|c| c.summary.clone()).collect();
    write_file(out, "summary.csv", |w| output::write_summary(&summaries, w, Some(&prov)).map_err(csv_err))?;
    if let Some(cal) = &result.calibration {
        write_calibration(out, cal, loaded)?;
    }
    if let Some(trend) = &result.trend {
        write_file(out, "trend.csv", |w| output::write_trend(trend, w, Some(&prov)).map_err(csv_err))?;
        write_file(out, "trend_means.csv", |w| output::write_trend_means(trend, w, Some(&prov)).map_err(csv_err))?;
    } else {
        eprintln!("note: trend statistics need at least 3 shares and 2 replications; trend.csv not written");
    }
    let share = loaded.config.sweep.distribution_share;
    let at_share: Vec<&CellResult> = result.cells_at(share).collect();
    if at_share.is_empty() {
        eprintln!("note: share {share} is not in the sweep; distribution.csv not written");
    } else {
        write_file(out, "distribution.csv", |w| {
            output::write_distribution(at_share.iter().copied(), w, Some(&prov)).map_err(csv_err)
        })?;
    }
    if plots {
        if let Some(trend) = &result.trend {
            for (metric, name, label) in [
                (Metric::Income, "trend_income.svg", "mean income [EUR]"),
                (Metric::Waiting, "trend_waiting.svg", "mean traveller waiting [s]"),
            ] {
                let series: Vec<(&str, Vec<(f64, f64)>)> = Partition::ALL
                    .iter()
                    .map(|&p| {
                        let row = trend.row(metric, p);
                        (p.label(), row.per_share.iter().filter_map(|&(s, m)| m.map(|m| (s, m))).collect())
                    })
                    .collect();
                let svg = plot::line_chart(label, "behavioural share", &series);
                write_file(out, name, |w| w.write_all(svg.as_bytes()).map_err(csv_err))?;
            }
        }
        if !at_share.is_empty() {
            for (name, label, pick) in [
                (
                    "distribution_income.svg",
                    "driver income [EUR]",
                    (|d: &ridesim_core::engine::DriverRecord| d.income_eur) as fn(&_) -> f64,
                ),
                ("distribution_idle.svg", "driver idle time [s]", |d| d.timeline.idle.as_secs_f64()),
            ] {
                let groups: Vec<(&str, Vec<f64>)> = [Partition::Behavioural, Partition::Random]
                    .iter()
                    .map(|&p| {
                        let values = at_share
                            .iter()
                            .flat_map(|c| c.output.drivers.iter())
                            .filter(|d| p.includes(d.class))
                            .map(pick)
                            .collect();
                        (p.label(), values)
                    })
                    .collect();
                let svg = plot::histogram(label, &groups, 12);
                write_file(out, name, |w| w.write_all(svg.as_bytes()).map_err(csv_err))?;
            }
        }
    }
    Ok(result)
}

/// Acceptance-probability curves per attribute and their spread ranking.
#[derive(Debug, Clone)]
pub struct Sensitivity {
    pub curves: Vec<(Attribute, Vec<(f64, f64)>)>,
    /// Attributes by descending spread.
    pub ranking: Vec<(Attribute, f64)>,
}

pub fn sensitivity(loaded: &Loaded) -> Result<Sensitivity, CliError> {
    let cfg = &loaded.config;
    let reference = cfg.sensitivity.reference();
    let mut curves = Vec::new();
    for a in Attribute::ALL {
        let grid = cfg.sensitivity.range(a).values().map_err(CliError::config)?;
        curves.push((a, sensitivity_sweep(&cfg.choice, a, &grid, &reference)?));
    }
    let mut ranking: Vec<(Attribute, f64)> = curves.iter().map(|(a, c)| (*a, delta_p(c))).collect();
    ranking.sort_by(|x, y| y.1.total_cmp(&x.1));
    Ok(Sensitivity { curves, ranking })
}

pub fn cmd_sensitivity(loaded: &Loaded, out: &Path, plots: bool) -> Result<Sensitivity, CliError> {
    let result = sensitivity(loaded)?;
    let prov = provenance(loaded.config.seed, loaded);
    for (a, curve) in &result.curves {
        let one = [(*a, curve.clone())];
        write_file(out, &format!("sensitivity_{}.csv", a.id()), |w| {
            output::write_sensitivity(&one, w, Some(&prov)).map_err(csv_err)
        })?;
    }
    write_file(out, "sensitivity_ranking.csv", |w| {
        output::write_ranking(&result.ranking, w, Some(&prov)).map_err(csv_err)
    })?;
    if plots {
        for (a, curve) in &result.curves {
            let svg = plot::line_chart("acceptance probability", a.id(), &[(a.id(), curve.clone())]);
            write_file(out, &format!("sensitivity_{}.svg", a.id()), |w| w.write_all(svg.as_bytes()).map_err(csv_err))?;
        }
    }
    Ok(result)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphReport {
    pub nodes: usize,
    pub edges: usize,
    pub central_edges: usize,
    pub cached: bool,
}

pub fn cmd_validate_graph(loaded: &Loaded) -> Result<GraphReport, CliError> {
    let router = loaded.router()?;
    let g = router.graph();
    let central = ridesim_core::netgraph::kmh_to_mps(loaded.config.central_speed_kmh);
    Ok(GraphReport {
        nodes: g.node_count(),
        edges: g.edge_count(),
        central_edges: g.edges().iter().filter(|e| e.speed_mps == central).count(),
        cached: router.is_cached(),
    })
}
