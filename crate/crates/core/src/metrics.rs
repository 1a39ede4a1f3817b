//! KPIs per driver class, inequality, and trends across behavioural shares.

use std::collections::BTreeMap;
use std::fmt;

use crate::choice::{Decision, DriverClass};
use crate::engine::{RequestStatus, SimOutput};
use crate::error::MetricsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Income,
    Idle,
    Waiting,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Income, Metric::Idle, Metric::Waiting];

    pub fn label(self) -> &'static str {
        match self {
            Metric::Income => "income_eur",
            Metric::Idle => "idle_s",
            Metric::Waiting => "waiting_s",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Partition of agents. Travellers are keyed by the class of the driver who served them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Partition {
    Behavioural,
    Random,
    All,
}

impl Partition {
    pub const ALL: [Partition; 3] = [Partition::Behavioural, Partition::Random, Partition::All];

    pub fn label(self) -> &'static str {
        match self {
            Partition::Behavioural => "behavioural",
            Partition::Random => "random",
            Partition::All => "all",
        }
    }

    pub fn includes(self, class: DriverClass) -> bool {
        match self {
            Partition::Behavioural => class == DriverClass::Behavioural,
            Partition::Random => class == DriverClass::Random,
            Partition::All => true,
        }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Descriptive statistics of a nonempty sample. `std` is the population form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub std: f64,
    pub gini: f64,
}

impl Stats {
    /// `None` for an empty sample.
    pub fn of(values: &[f64]) -> Option<Stats> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let median = if n % 2 == 1 { sorted[n / 2] } else { (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0 };
        Some(Stats { n, mean, median, std: var.sqrt(), gini: gini_sorted(&sorted) })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassKpis {
    pub n_drivers: usize,
    pub completed: usize,
    pub n_offers: usize,
    pub n_accepts: usize,
    pub income: Option<Stats>,
    pub idle: Option<Stats>,
    pub waiting: Option<Stats>,
}

impl ClassKpis {
    pub fn stats(&self, metric: Metric) -> Option<&Stats> {
        match metric {
            Metric::Income => self.income.as_ref(),
            Metric::Idle => self.idle.as_ref(),
            Metric::Waiting => self.waiting.as_ref(),
        }
    }

    pub fn acceptance_rate(&self) -> Option<f64> {
        (self.n_offers > 0).then(|| self.n_accepts as f64 / self.n_offers as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KpiSummary {
    pub share: f64,
    pub replication: Option<usize>,
    pub requests: usize,
    pub abandoned: usize,
    pub classes: BTreeMap<Partition, ClassKpis>,
}

impl KpiSummary {
    pub fn class(&self, p: Partition) -> &ClassKpis {
        &self.classes[&p]
    }

    pub fn mean(&self, p: Partition, metric: Metric) -> Option<f64> {
        self.class(p).stats(metric).map(|s| s.mean)
    }

    pub fn abandonment_rate(&self) -> Option<f64> {
        (self.requests > 0).then(|| self.abandoned as f64 / self.requests as f64)
    }
}

/// KPIs of one run. Waiting time covers completed trips only.
pub fn summarize(output: &SimOutput) -> KpiSummary {
    let class_of: Vec<DriverClass> = output.drivers.iter().map(|d| d.class).collect();
    let classes = Partition::ALL
        .into_iter()
        .map(|p| {
            let drivers: Vec<_> = output.drivers.iter().filter(|d| p.includes(d.class)).collect();
            let income: Vec<f64> = drivers.iter().map(|d| d.income_eur).collect();
            let idle: Vec<f64> = drivers.iter().map(|d| d.timeline.idle.as_secs_f64()).collect();
            let waiting: Vec<f64> = output
                .trips
                .iter()
                .filter(|t| t.status == RequestStatus::Completed)
                .filter(|t| t.driver_id.is_some_and(|d| p.includes(class_of[d])))
                .filter_map(|t| t.waiting_time().map(|w| w.as_secs_f64()))
                .collect();
            let offers: Vec<_> = output.offers.iter().filter(|o| p.includes(o.class)).collect();
            let kpis = ClassKpis {
                n_drivers: drivers.len(),
                completed: waiting.len(),
                n_offers: offers.len(),
                n_accepts: offers.iter().filter(|o| o.decision == Decision::Accept).count(),
                income: Stats::of(&income),
                idle: Stats::of(&idle),
                waiting: Stats::of(&waiting),
            };
            (p, kpis)
        })
        .collect();
    KpiSummary {
        share: output.meta.behavioural_share,
        replication: output.meta.replication,
        requests: output.trips.len(),
        abandoned: output.count(RequestStatus::Abandoned),
        classes,
    }
}

/// Mean absolute difference over all ordered pairs divided by twice the mean.
/// All-zero input gives 0.
pub fn gini(values: &[f64]) -> Result<f64, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::Input("gini of an empty list".into()));
    }
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(MetricsError::Input(format!("gini needs finite nonnegative values, got {v}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(gini_sorted(&sorted))
}

/// Sorted-order form: sum_i (2i - n - 1) x_(i) / (n * sum x), i from 1.
fn gini_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len() as f64;
    let total: f64 = sorted.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let weighted: f64 = sorted.iter().enumerate().map(|(i, x)| (2.0 * (i as f64 + 1.0) - n - 1.0) * x).sum();
    (weighted / (n * total)).clamp(0.0, 1.0)
}

/// Average ranks, ties sharing the mean of their positions (1-based).
fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman's rank correlation (Pearson on average ranks). A constant series
/// has no rank variation and yields 0.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, MetricsError> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(MetricsError::Input(format!(
            "spearman needs two equal-length series of at least 2 points, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        return Ok(0.0);
    }
    Ok(cov / (vx * vy).sqrt())
}

/// Population coefficient of variation; 0 for a zero-mean series.
pub fn coefficient_of_variation(values: &[f64]) -> f64 {
    match Stats::of(values) {
        Some(s) if s.mean != 0.0 => s.std / s.mean.abs(),
        _ => 0.0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendRow {
    pub metric: Metric,
    pub partition: Partition,
    /// Replication mean per share; `None` where every replication lacked the partition.
    pub per_share: Vec<(f64, Option<f64>)>,
    pub spearman_rho: Option<f64>,
    pub cv_of_means: Option<f64>,
}

impl TrendRow {
    pub fn mean_at(&self, share: f64) -> Option<f64> {
        self.per_share.iter().find(|(s, _)| *s == share).and_then(|(_, m)| *m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendReport {
    pub shares: Vec<f64>,
    pub rows: Vec<TrendRow>,
}

impl TrendReport {
    pub fn row(&self, metric: Metric, partition: Partition) -> &TrendRow {
        self.rows
            .iter()
            .find(|r| r.metric == metric && r.partition == partition)
            .expect("every metric/partition pair is reported")
    }
}

/// Mean over replications of the per-run class mean, for each share in order.
pub fn replication_means(summaries: &[KpiSummary], metric: Metric, partition: Partition) -> Vec<(f64, Option<f64>)> {
    let mut by_share: Vec<(f64, Vec<f64>)> = Vec::new();
    for s in summaries {
        let slot = match by_share.iter_mut().find(|(share, _)| *share == s.share) {
            Some(slot) => slot,
            None => {
                by_share.push((s.share, Vec::new()));
                by_share.last_mut().expect("just pushed")
            }
        };
        if let Some(m) = s.mean(partition, metric) {
            slot.1.push(m);
        }
    }
    by_share.sort_by(|a, b| a.0.total_cmp(&b.0));
    by_share
        .into_iter()
        .map(|(share, v)| (share, (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)))
        .collect()
}

/// Per-share replication means, rank correlation with the share, and spread
/// of the means, for every metric and partition.
pub fn trend_stats(summaries: &[KpiSummary]) -> Result<TrendReport, MetricsError> {
    let mut reps: BTreeMap<u64, usize> = BTreeMap::new();
    for s in summaries {
        *reps.entry(s.share.to_bits()).or_default() += 1;
    }
    if reps.len() < 3 {
        return Err(MetricsError::Config(format!("trend needs at least 3 distinct shares, got {}", reps.len())));
    }
    if let Some((share, n)) = reps.iter().find(|(_, &n)| n < 2) {
        return Err(MetricsError::Config(format!(
            "trend needs at least 2 replications per share; share {} has {n}",
            f64::from_bits(*share)
        )));
    }
    let mut rows = Vec::new();
    for metric in Metric::ALL {
        for partition in Partition::ALL {
            let per_share = replication_means(summaries, metric, partition);
            let (xs, ys): (Vec<f64>, Vec<f64>) = per_share.iter().filter_map(|(s, m)| m.map(|m| (*s, m))).unzip();
            let spearman_rho = spearman(&xs, &ys).ok();
            let cv_of_means = (!ys.is_empty()).then(|| coefficient_of_variation(&ys));
            rows.push(TrendRow { metric, partition, per_share, spearman_rho, cv_of_means });
        }
    }
    let shares = replication_means(summaries, Metric::Income, Partition::All).into_iter().map(|(s, _)| s).collect();
    Ok(TrendReport { shares, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_gini(x: &[f64]) -> f64 {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        if mean == 0.0 {
            return 0.0;
        }
        let mut s = 0.0;
        for a in x {
            for b in x {
                s += (a - b).abs();
            }
        }
        s / (2.0 * n * n * mean)
    }

    #[test]
    fn gini_examples() {
        assert_eq!(gini(&[1.0, 1.0, 1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(brute_gini(&[0.0, 0.0, 0.0, 1.0]), 0.75);
        assert!((gini(&[0.0, 0.0, 0.0, 1.0]).unwrap() - 0.75).abs() < 1e-12);
        assert_eq!(gini(&[5.0]).unwrap(), 0.0);
        assert_eq!(gini(&[0.0, 0.0]).unwrap(), 0.0);
        assert!(gini(&[]).is_err());
        assert!(gini(&[1.0, -1.0]).is_err());
    }

    #[test]
    fn stats_examples() {
        let s = Stats::of(&[60.0, 120.0]).unwrap();
        assert_eq!((s.n, s.mean, s.median, s.std), (2, 90.0, 90.0, 30.0));
        assert_eq!(Stats::of(&[3.0, 1.0, 2.0]).unwrap().median, 2.0);
        assert!(Stats::of(&[]).is_none());
    }

    #[test]
    fn weighted_recombination() {
        let b = [10.0; 5];
        let r = [6.0; 5];
        let all: Vec<f64> = b.iter().chain(&r).copied().collect();
        let (sb, sr, sa) = (Stats::of(&b).unwrap(), Stats::of(&r).unwrap(), Stats::of(&all).unwrap());
        assert_eq!(sa.mean, 8.0);
        assert_eq!((sb.mean * sb.n as f64 + sr.mean * sr.n as f64) / (sb.n + sr.n) as f64, sa.mean);
    }

    #[test]
    fn spearman_examples() {
        let shares = [0.0, 0.5, 1.0];
        assert_eq!(spearman(&shares, &[3.0, 2.0, 1.0]).unwrap(), -1.0);
        assert_eq!(spearman(&shares, &[2.0, 2.0, 2.0]).unwrap(), 0.0);
        // d = (2, -1, -1), 1 - 6*6/(3*8)
        assert!((spearman(&shares, &[3.0, 1.0, 2.0]).unwrap() + 0.5).abs() < 1e-12);
        assert_eq!(coefficient_of_variation(&[2.0, 2.0, 2.0]), 0.0);
        assert!(spearman(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(ranks(&[10.0, 20.0, 20.0, 5.0]), vec![2.0, 3.5, 3.5, 1.0]);
    }

    proptest! {
        #[test]
        fn gini_matches_pairwise_oracle(x in prop::collection::vec(0.0f64..1000.0, 1..100)) {
            let g = gini(&x).unwrap();
            prop_assert!((g - brute_gini(&x)).abs() < 1e-9);
            prop_assert!((0.0..=1.0).contains(&g));
        }

        #[test]
        fn gini_scale_invariant(x in prop::collection::vec(0.0f64..1000.0, 1..60), c in 0.01f64..100.0) {
            let scaled: Vec<f64> = x.iter().map(|v| v * c).collect();
            prop_assert!((gini(&x).unwrap() - gini(&scaled).unwrap()).abs() < 1e-9);
        }
    }
}
