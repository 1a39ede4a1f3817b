//! CSV serialisation of run outputs and KPI tables.
//!
//! Each file may start with one `#` provenance line. Floats use Rust's
//! shortest round-trip formatting.

use std::io::Write;

use crate::choice::{Attribute, Calibration};
use crate::engine::SimOutput;
use crate::metrics::{KpiSummary, Metric, Partition, Stats, TrendReport};
use crate::scenario::CellResult;

pub const TRIPS_HEADER: [&str; 8] = [
    "request_id",
    "traveller_id",
    "driver_id",
    "request_time_s",
    "pickup_time_s",
    "completion_time_s",
    "distance_m",
    "status",
];
pub const DRIVERS_HEADER: [&str; 9] =
    ["driver_id", "policy", "income_eur", "idle_s", "enroute_s", "inservice_s", "n_trips", "n_offers", "n_accepts"];
pub const OFFERS_HEADER: [&str; 10] = [
    "offer_id",
    "request_id",
    "driver_id",
    "pickup_min",
    "waiting_min",
    "time1loc",
    "rlrd",
    "utility",
    "probability",
    "decision",
];
pub const SUMMARY_HEADER: [&str; 9] = ["share", "replication", "class", "metric", "n", "mean", "median", "std", "gini"];
pub const TREND_HEADER: [&str; 4] = ["metric", "class", "spearman_rho", "cv_of_means"];
pub const SENSITIVITY_HEADER: [&str; 3] = ["attribute", "value", "probability"];
pub const RANKING_HEADER: [&str; 3] = ["rank", "attribute", "delta_p"];
pub const CALIBRATION_HEADER: [&str; 4] = ["seed", "offers", "accepts", "rate"];
pub const DISTRIBUTION_HEADER: [&str; 6] = ["share", "replication", "driver_id", "policy", "income_eur", "idle_s"];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn writer<W: Write>(mut w: W, provenance: Option<&str>, header: &[&str]) -> csv::Result<csv::Writer<W>> {
    if let Some(p) = provenance {
        writeln!(w, "# {p}")?;
    }
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header)?;
    Ok(out)
}

pub fn write_trips<W: Write>(out: &SimOutput, w: W, provenance: Option<&str>) -> csv::Result<()> {
    let mut csv = writer(w, provenance, &TRIPS_HEADER)?;
    for t in &out.trips {
        csv.write_record([
            t.request_id.to_string(),
            t.traveller_id.to_string(),
            opt(t.driver_id),
            t.request_time.to_string(),
            opt(t.pickup_time),
            opt(t.completion_time),
            t.distance_m.to_string(),
            t.status.label().to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_drivers<W: Write>(out: &SimOutput, w: W, provenance: Option<&str>) -> csv::Result<()> {
    let mut csv = writer(w, provenance, &DRIVERS_HEADER)?;
    for d in &out.drivers {
        csv.write_record([
            d.driver_id.to_string(),
            d.class.label().to_string(),
            d.income_eur.to_string(),
            d.timeline.idle.to_string(),
            d.timeline.enroute.to_string(),
            d.timeline.inservice.to_string(),
            d.n_trips.to_string(),
            d.n_offers.to_string(),
            d.n_accepts.to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_offers<W: Write>(out: &SimOutput, w: W, provenance: Option<&str>) -> csv::Result<()> {
    let mut csv = writer(w, provenance, &OFFERS_HEADER)?;
    for o in &out.offers {
        csv.write_record([
            o.offer_id.to_string(),
            o.request_id.to_string(),
            o.driver_id.to_string(),
            o.context.pickup_time_min.to_string(),
            o.context.waiting_time_min.to_string(),
            u8::from(o.context.time1_loc).to_string(),
            o.context.rlrd.to_string(),
            opt(o.utility),
            o.probability.to_string(),
            o.decision.to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

fn stats_fields(s: Option<&Stats>) -> [String; 5] {
    match s {
        Some(s) => [s.n.to_string(), s.mean.to_string(), s.median.to_string(), s.std.to_string(), s.gini.to_string()],
        None => ["0".into(), String::new(), String::new(), String::new(), String::new()],
    }
}

/// One row per (run, class, metric), plus acceptance and abandonment rates.
pub fn write_summary<W: Write>(summaries: &[KpiSummary], w: W, provenance: Option<&str>) -> csv::Result<()> {
    let mut csv = writer(w, provenance, &SUMMARY_HEADER)?;
    for s in summaries {
        let share = s.share.to_string();
        let rep = opt(s.replication);
        for p in Partition::ALL {
            let class = s.class(p);
            for m in Metric::ALL {
                let [n, mean, median, std, gini] = stats_fields(class.stats(m));
                csv.write_record([&share, &rep, p.label(), m.label(), &n, &mean, &median, &std, &gini])?;
            }
            csv.write_record([
                &share,
                &rep,
                p.label(),
                "acceptance_rate",
                &class.n_offers.to_string(),
                &opt(class.acceptance_rate()),
                "",
                "",
                "",
            ])?;
        }
        csv.write_record([
            &share,
            &rep,
            "all",
            "abandonment_rate",
            &s.requests.to_string(),
            &opt(s.abandonment_rate()),
            "",
            "",
            "",
        ])?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_trend<W: Write>(report: &TrendReport, w: W, provenance: Option<&str>) -> csv::Result<()> {
    let mut csv = writer(w, provenance, &TREND_HEADER)?;
    for r in &report.rows {
        csv.write_record([r.metric.label(), r.partition.label(), &opt(r.spearman_rho), &opt(r.cv_of_means)])?;
    }
    csv.flush()?;
    Ok(())
}

/// Per-share replication means, long format, for plotting.
pub fn write_trend_means<W: Write>(report: &TrendReport, w: W, provenance: Option<&str>) -> csv::Result<()> {
    let mut csv = writer(w, provenance, &["metric", "class", "share", "mean"])?;
    for r in &report.rows {
        for (share, mean) in &r.per_share {
            csv.write_record([r.metric.label(), r.partition.label(), &share.to_string(), &opt(*mean)])?;
        }
    }
    csv.flush()?;
    Ok(())
}

pub fn write_sensitivity<W: Write>(
    curves: &[(Attribute, Vec<(f64, f64)>)],
    w: W,
    provenance: Option<&str>,
) -> csv::Result<()> {
    let mut csv = writer(w, provenance, &SENSITIVITY_HEADER)?;
    for (attr, curve) in curves {
        for (value, p) in curve {
            csv.write_record([attr.id(), &value.to_string(), &p.to_string()])?;
        }
    }
    csv.flush()?;
    Ok(())
}

/// Ranking rows in the given order, ranks starting at 1.
pub fn write_ranking<W: Write>(ranking: &[(Attribute, f64)], w: W, provenance: Option<&str>) -> csv::Result<()> {
    let mut csv = writer(w, provenance, &RANKING_HEADER)?;
    for (i, (attr, dp)) in ranking.iter().enumerate() {
        csv.write_record([&(i + 1).to_string(), attr.id(), &dp.to_string()])?;
    }
    csv.flush()?;
    Ok(())
}

/// Per-seed rows followed by a `pooled` row.
pub fn write_calibration<W: Write>(cal: &Calibration, w: W, provenance: Option<&str>) -> csv::Result<()> {
    let mut csv = writer(w, provenance, &CALIBRATION_HEADER)?;
    for r in &cal.per_seed {
        csv.write_record([r.seed.to_string(), r.offers.to_string(), r.accepts.to_string(), opt(r.rate())])?;
    }
    csv.write_record([
        "pooled".to_string(),
        cal.pooled_offers.to_string(),
        cal.pooled_accepts.to_string(),
        cal.probability().to_string(),
    ])?;
    csv.flush()?;
    Ok(())
}

/// Agent-level income and idle time for every driver of the given cells.
pub fn write_distribution<'a, W: Write>(
    cells: impl IntoIterator<Item = &'a CellResult>,
    w: W,
    provenance: Option<&str>,
) -> csv::Result<()> {
    let mut csv = writer(w, provenance, &DISTRIBUTION_HEADER)?;
    for c in cells {
        let share = c.cell.share.to_string();
        let rep = c.cell.replication.to_string();
        for d in &c.output.drivers {
            csv.write_record([
                &share,
                &rep,
                &d.driver_id.to_string(),
                d.class.label(),
                &d.income_eur.to_string(),
                &d.timeline.idle.to_string(),
            ])?;
        }
    }
    csv.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run, RequestStatus};
    use crate::netgraph::{RoadGraph, Router};
    use crate::scenario::ScenarioConfig;

    #[test]
    fn trips_csv_shape() {
        let cfg = ScenarioConfig { n_travellers: 30, n_drivers: 4, behavioural_share: 1.0, ..Default::default() };
        let router = Router::new(cfg.classify(RoadGraph::generate_grid(6, 6, 300.0).unwrap()).unwrap(), 100);
        let out = run(&cfg, &router, 1).unwrap();
        let mut buf = Vec::new();
        write_trips(&out, &mut buf, Some("seed=1")).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# seed=1"));
        assert_eq!(lines.next(), Some(TRIPS_HEADER.join(",").as_str()));
        assert_eq!(lines.count(), 30);
        let completed = out.count(RequestStatus::Completed);
        assert_eq!(text.matches(",completed").count(), completed);
    }

    #[test]
    fn empty_output_is_header_only() {
        let cfg = ScenarioConfig { n_travellers: 0, n_drivers: 2, behavioural_share: 1.0, ..Default::default() };
        let router = Router::new(cfg.classify(RoadGraph::generate_grid(3, 3, 300.0).unwrap()).unwrap(), 100);
        let out = run(&cfg, &router, 1).unwrap();
        let mut buf = Vec::new();
        write_trips(&out, &mut buf, None).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{}\n", TRIPS_HEADER.join(",")));
    }
}
