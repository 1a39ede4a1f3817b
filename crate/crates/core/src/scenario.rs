//! Demand and supply generation, class mix, and the share x replication sweep.

use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::choice::{CentralZone, ChoiceModel};
use crate::clock::SimTime;
use crate::engine::{self, DriverAgent, RunSeeds, SimOutput, TripRequest};
use crate::error::{GraphError, ScenarioError};
use crate::metrics::{self, KpiSummary};
use crate::netgraph::{RoadGraph, Router};
use crate::registry::{AcceptanceRegistry, ArrivalRegistry, RuleParams};
use crate::seed::{self, Domain};

/// Rejection-sampling budget per trip when drawing origin/destination pairs.
const MAX_OD_ATTEMPTS: usize = 10_000;

/// Traveller rating distribution, fixed per traveller at generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum RatingDistribution {
    Uniform { min: f64, max: f64 },
    Fixed { value: f64 },
}

impl Default for RatingDistribution {
    fn default() -> Self {
        RatingDistribution::Uniform { min: 3.0, max: 5.0 }
    }
}

impl RatingDistribution {
    fn validate(&self) -> Result<(), ScenarioError> {
        let ok = match *self {
            RatingDistribution::Uniform { min, max } => {
                (0.0..=5.0).contains(&min) && (0.0..=5.0).contains(&max) && min <= max
            }
            RatingDistribution::Fixed { value } => (0.0..=5.0).contains(&value),
        };
        if ok {
            Ok(())
        } else {
            Err(ScenarioError::Config(format!("rating distribution {self:?} must lie within [0, 5]")))
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            RatingDistribution::Uniform { min, max } if min < max => rng.gen_range(min..max),
            RatingDistribution::Uniform { min, .. } => min,
            RatingDistribution::Fixed { value } => value,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub horizon_s: u64,
    pub n_drivers: usize,
    pub n_travellers: usize,
    pub behavioural_share: f64,
    pub fare_per_km_eur: f64,
    /// Centre of the congested zone; the graph's bounding-box centre when unset.
    pub central_centre: Option<(f64, f64)>,
    pub central_radius_m: f64,
    pub central_speed_kmh: f64,
    pub outer_speed_kmh: f64,
    pub rating: RatingDistribution,
    pub max_offer_rounds: u32,
    /// Traveller patience; off by default.
    pub max_wait_s: Option<f64>,
    pub offer_response_s: f64,
    pub min_trip_m: f64,
    /// Acceptance probability of the random class, normally from calibration.
    pub random_accept_prob: Option<f64>,
    pub choice: ChoiceModel,
    pub behavioural_rule: String,
    pub baseline_rule: String,
    pub dispatch: String,
    pub arrivals: String,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            horizon_s: 5 * 3600,
            n_drivers: 20,
            n_travellers: 500,
            behavioural_share: 0.5,
            fare_per_km_eur: 2.0,
            central_centre: None,
            central_radius_m: 1500.0,
            central_speed_kmh: 18.0,
            outer_speed_kmh: 36.0,
            rating: RatingDistribution::default(),
            max_offer_rounds: 5,
            max_wait_s: None,
            offer_response_s: 0.0,
            min_trip_m: 500.0,
            random_accept_prob: None,
            choice: ChoiceModel::default(),
            behavioural_rule: "behavioural".into(),
            baseline_rule: "random".into(),
            dispatch: "first-dispatch".into(),
            arrivals: "uniform".into(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |msg: String| Err(ScenarioError::Config(msg));
        if self.horizon_s == 0 {
            return bad("horizon_s must be positive".into());
        }
        if self.n_drivers == 0 {
            return bad("n_drivers must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.behavioural_share) {
            return bad(format!("behavioural_share {} outside [0, 1]", self.behavioural_share));
        }
        for (name, v) in [
            ("fare_per_km_eur", self.fare_per_km_eur),
            ("central_radius_m", self.central_radius_m),
            ("central_speed_kmh", self.central_speed_kmh),
            ("outer_speed_kmh", self.outer_speed_kmh),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.min_trip_m.is_finite() && self.min_trip_m >= 0.0) {
            return bad(format!("min_trip_m must be >= 0, got {}", self.min_trip_m));
        }
        if !(self.offer_response_s.is_finite() && self.offer_response_s >= 0.0) {
            return bad(format!("offer_response_s must be >= 0, got {}", self.offer_response_s));
        }
        if self.max_offer_rounds == 0 {
            return bad("max_offer_rounds must be positive".into());
        }
        if let Some(w) = self.max_wait_s {
            if !(w.is_finite() && w > 0.0) {
                return bad(format!("max_wait_s must be positive, got {w}"));
            }
        }
        if let Some(p) = self.random_accept_prob {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("random_accept_prob {p} outside [0, 1]"));
            }
        }
        self.rating.validate()?;
        self.choice.validate()?;
        Ok(())
    }

    pub fn n_behavioural(&self) -> usize {
        behavioural_count(self.behavioural_share, self.n_drivers)
    }

    pub fn zone(&self, graph: &RoadGraph) -> CentralZone {
        CentralZone {
            centre: self.central_centre.unwrap_or_else(|| graph.bbox_centre()),
            radius_m: self.central_radius_m,
        }
    }

    /// Assigns central and outer speeds to `graph`.
    pub fn classify(&self, graph: RoadGraph) -> Result<RoadGraph, GraphError> {
        let zone = self.zone(&graph);
        graph.classify_speeds(zone.centre, zone.radius_m, self.central_speed_kmh, self.outer_speed_kmh)
    }
}

/// `round(share * n)`, halves rounded away from zero.
pub fn behavioural_count(share: f64, n_drivers: usize) -> usize {
    ((share * n_drivers as f64).round() as usize).min(n_drivers)
}

/// Arrival-time generator, registered by name.
pub trait ArrivalProcess: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    /// Sorted request times in `[0, horizon)`.
    fn sample(&self, n: usize, horizon: SimTime, rng: &mut dyn rand::RngCore) -> Vec<SimTime>;
}

/// `n` i.i.d. uniform times over the horizon.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformArrivals;

impl ArrivalProcess for UniformArrivals {
    fn name(&self) -> &str {
        "uniform"
    }

    fn sample(&self, n: usize, horizon: SimTime, rng: &mut dyn rand::RngCore) -> Vec<SimTime> {
        let mut times: Vec<SimTime> = (0..n).map(|_| SimTime(rng.gen_range(0..horizon.as_millis()))).collect();
        times.sort();
        times
    }
}

/// Poisson process with rate `n / horizon`, truncated at the horizon.
/// The realised count varies around `n`.
#[derive(Debug, Clone, Copy, Default)]
pub struct PoissonArrivals;

impl ArrivalProcess for PoissonArrivals {
    fn name(&self) -> &str {
        "poisson"
    }

    fn sample(&self, n: usize, horizon: SimTime, rng: &mut dyn rand::RngCore) -> Vec<SimTime> {
        if n == 0 {
            return Vec::new();
        }
        let mean_gap_ms = horizon.as_millis() as f64 / n as f64;
        let mut t = 0.0;
        let mut times = Vec::new();
        loop {
            let u: f64 = rng.gen();
            t += -(1.0 - u).ln() * mean_gap_ms;
            let ms = t.floor();
            if ms >= horizon.as_millis() as f64 {
                break;
            }
            times.push(SimTime(ms as u64));
        }
        times
    }
}

/// Trip requests for one run, ordered by request time with ids `0..n`.
pub fn generate_demand<R: Rng>(
    config: &ScenarioConfig,
    router: &Router,
    rng: &mut R,
) -> Result<Vec<TripRequest>, ScenarioError> {
    let arrivals = ArrivalRegistry::with_builtins().create(&config.arrivals)?;
    let horizon = SimTime::from_secs(config.horizon_s);
    let times = arrivals.sample(config.n_travellers, horizon, rng);
    let n_nodes = router.graph().node_count();
    if n_nodes < 2 && !times.is_empty() {
        return Err(ScenarioError::Generation("graph needs at least two nodes".into()));
    }
    let mut requests = Vec::with_capacity(times.len());
    for (id, time) in times.into_iter().enumerate() {
        let mut drawn = None;
        for _ in 0..MAX_OD_ATTEMPTS {
            let o = rng.gen_range(0..n_nodes);
            let d = rng.gen_range(0..n_nodes);
            if o == d {
                continue;
            }
            let route = router.route(o, d)?;
            if route.distance_m >= config.min_trip_m {
                drawn = Some((o, d, route));
                break;
            }
        }
        let (o, d, route) = drawn.ok_or_else(|| {
            ScenarioError::Generation(format!(
                "no origin/destination pair at least {} m apart found after {MAX_OD_ATTEMPTS} draws",
                config.min_trip_m
            ))
        })?;
        let rating = config.rating.sample(rng);
        requests.push(TripRequest::new(id, o, d, time, rating, route.distance_m, route.time_s));
    }
    Ok(requests)
}

/// Drivers at uniformly random nodes; the first `round(share * n)` are
/// behavioural, the rest use the baseline rule with `calibrated_p`.
///
/// Start positions depend only on `rng`, never on the share.
pub fn generate_supply<R: Rng>(
    config: &ScenarioConfig,
    router: &Router,
    rng: &mut R,
    calibrated_p: Option<f64>,
) -> Result<Vec<DriverAgent>, ScenarioError> {
    let n_nodes = router.graph().node_count();
    let nodes: Vec<usize> = (0..config.n_drivers).map(|_| rng.gen_range(0..n_nodes)).collect();
    let n_behavioural = config.n_behavioural();
    let registry = AcceptanceRegistry::with_builtins();
    let params = RuleParams { model: config.choice, accept_prob: calibrated_p };
    let behavioural = registry.create(&config.behavioural_rule, &params)?;
    let baseline = if n_behavioural < config.n_drivers {
        if calibrated_p.is_none() {
            return Err(ScenarioError::Config(
                "random-class acceptance probability is required when behavioural_share < 1; run calibration first"
                    .into(),
            ));
        }
        Some(registry.create(&config.baseline_rule, &params)?)
    } else {
        None
    };
    let shift = SimTime::from_secs(config.horizon_s);
    Ok(nodes
        .into_iter()
        .enumerate()
        .map(|(id, node)| {
            let policy = if id < n_behavioural {
                behavioural.clone()
            } else {
                baseline.clone().expect("baseline rule built above")
            };
            DriverAgent::new(id, policy, node, SimTime::ZERO, shift)
        })
        .collect())
}

pub struct Population {
    pub requests: Vec<TripRequest>,
    pub drivers: Vec<DriverAgent>,
}

/// Demand and supply from a population seed.
pub fn generate_population(
    config: &ScenarioConfig,
    router: &Router,
    population_seed: u64,
) -> Result<Population, ScenarioError> {
    let mut demand_rng = ChaCha8Rng::seed_from_u64(seed::derive(population_seed, Domain::Demand, 0));
    let mut supply_rng = ChaCha8Rng::seed_from_u64(seed::derive(population_seed, Domain::Supply, 0));
    let requests = generate_demand(config, router, &mut demand_rng)?;
    let drivers = generate_supply(config, router, &mut supply_rng, config.random_accept_prob)?;
    Ok(Population { requests, drivers })
}

/// Nearest-rank 80th percentile of trip distances.
pub fn long_trip_threshold(requests: &[TripRequest]) -> Result<f64, ScenarioError> {
    if requests.is_empty() {
        return Err(ScenarioError::Input("long-trip threshold of an empty demand set".into()));
    }
    let mut d: Vec<f64> = requests.iter().map(|r| r.distance_m).collect();
    d.sort_by(f64::total_cmp);
    Ok(d[nearest_rank(d.len(), 4, 5) - 1])
}

/// `ceil(n * num / den)`, at least 1.
fn nearest_rank(n: usize, num: usize, den: usize) -> usize {
    ((n * num).div_ceil(den)).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub share_index: usize,
    pub share: f64,
    pub replication: usize,
    /// Seed of the per-driver decision streams.
    pub seed: u64,
    /// Seed of demand and driver placement; shared by all shares of a replication.
    pub population_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub master_seed: u64,
    pub shares: Vec<f64>,
    pub replications: usize,
    pub cells: Vec<Cell>,
}

impl ExperimentPlan {
    /// Shares `0, 0.1, ..., 1.0`.
    pub fn default_shares() -> Vec<f64> {
        (0..=10).map(|i| f64::from(i) / 10.0).collect()
    }

    pub fn new(shares: Vec<f64>, replications: usize, master_seed: u64) -> Result<Self, ScenarioError> {
        if shares.is_empty() {
            return Err(ScenarioError::Config("sweep needs at least one share".into()));
        }
        if let Some(s) = shares.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(ScenarioError::Config(format!("share {s} outside [0, 1]")));
        }
        if replications == 0 {
            return Err(ScenarioError::Config("replications must be positive".into()));
        }
        let cells = shares
            .iter()
            .enumerate()
            .flat_map(|(share_index, &share)| {
                (0..replications).map(move |replication| Cell {
                    share_index,
                    share,
                    replication,
                    seed: seed::cell_seed(master_seed, share_index, replication),
                    population_seed: seed::population_seed(master_seed, replication),
                })
            })
            .collect();
        Ok(Self { master_seed, shares, replications, cells })
    }
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub cell: Cell,
    pub output: SimOutput,
    pub summary: KpiSummary,
}

/// Runs one cell of a plan.
pub fn run_cell(cell: &Cell, base: &ScenarioConfig, router: &Router) -> Result<CellResult, ScenarioError> {
    let mut config = base.clone();
    config.behavioural_share = cell.share;
    let mut output =
        engine::run_seeded(&config, router, RunSeeds { population: cell.population_seed, decisions: cell.seed })?;
    output.meta.seed = cell.seed;
    output.meta.replication = Some(cell.replication);
    let summary = metrics::summarize(&output);
    Ok(CellResult { cell: *cell, output, summary })
}

/// Runs every cell, `jobs` at a time. Results are in plan order regardless of `jobs`.
pub fn run_sweep(
    plan: &ExperimentPlan,
    base: &ScenarioConfig,
    router: &Router,
    jobs: usize,
) -> Result<Vec<CellResult>, ScenarioError> {
    base.validate()?;
    let needs_p = plan.cells.iter().any(|c| behavioural_count(c.share, base.n_drivers) < base.n_drivers);
    if needs_p && base.random_accept_prob.is_none() {
        return Err(ScenarioError::Config("sweep needs a calibrated random-class probability".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| ScenarioError::Config(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<CellResult, ScenarioError>> =
        pool.install(|| plan.cells.par_iter().map(|cell| run_cell(cell, base, router)).collect());
    results
        .into_iter()
        .zip(&plan.cells)
        .map(|(r, cell)| {
            r.map_err(|e| ScenarioError::Cell { share: cell.share, replication: cell.replication, source: Box::new(e) })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::DriverClass;

    fn router() -> Router {
        let cfg = ScenarioConfig::default();
        Router::new(cfg.classify(RoadGraph::generate_grid(8, 8, 250.0).unwrap()).unwrap(), 2000)
    }

    fn req(id: usize, distance_m: f64) -> TripRequest {
        TripRequest::new(id, 0, 1, SimTime::ZERO, 4.0, distance_m, distance_m / 10.0)
    }

    #[test]
    fn empty_demand() {
        let cfg = ScenarioConfig { n_travellers: 0, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(generate_demand(&cfg, &router(), &mut rng).unwrap().is_empty());
    }

    #[test]
    fn demand_respects_horizon_and_min_distance() {
        let cfg = ScenarioConfig::default();
        let r = router();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let demand = generate_demand(&cfg, &r, &mut rng).unwrap();
        assert_eq!(demand.len(), 500);
        for (i, q) in demand.iter().enumerate() {
            assert_eq!(q.id, i);
            assert!(q.request_time < SimTime::from_secs(cfg.horizon_s));
            assert_ne!(q.origin, q.dest);
            assert!(q.distance_m >= 500.0);
            assert!((3.0..5.0).contains(&q.rating));
            assert_eq!(q.distance_m, r.route(q.origin, q.dest).unwrap().distance_m);
        }
        assert!(demand.windows(2).all(|w| w[0].request_time <= w[1].request_time));
    }

    #[test]
    fn demand_is_deterministic() {
        let cfg = ScenarioConfig::default();
        let r = router();
        let a = generate_demand(&cfg, &r, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = generate_demand(&cfg, &r, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let key = |v: &[TripRequest]| {
            v.iter().map(|q| (q.request_time, q.origin, q.dest, q.rating.to_bits())).collect::<Vec<_>>()
        };
        assert_eq!(key(&a), key(&b));
    }

    #[test]
    fn unreachable_min_distance_is_generation_error() {
        let cfg = ScenarioConfig { min_trip_m: 1e9, n_travellers: 1, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(generate_demand(&cfg, &router(), &mut rng), Err(ScenarioError::Generation(_))));
    }

    #[test]
    fn poisson_arrivals_stay_in_horizon() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let t = PoissonArrivals.sample(500, SimTime::from_secs(18_000), &mut rng);
        assert!(t.iter().all(|&x| x < SimTime::from_secs(18_000)));
        assert!(t.windows(2).all(|w| w[0] <= w[1]));
        assert!((400..600).contains(&t.len()), "{}", t.len());
    }

    #[test]
    fn supply_class_mix() {
        let r = router();
        let classes = |share: f64| {
            let cfg = ScenarioConfig { behavioural_share: share, ..Default::default() };
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            generate_supply(&cfg, &r, &mut rng, Some(0.7)).unwrap().iter().map(|d| d.class()).collect::<Vec<_>>()
        };
        let count = |v: &[DriverClass], c| v.iter().filter(|&&x| x == c).count();
        let half = classes(0.5);
        assert_eq!((count(&half, DriverClass::Behavioural), count(&half, DriverClass::Random)), (10, 10));
        let all = classes(1.0);
        assert_eq!(count(&all, DriverClass::Behavioural), 20);
        let few = classes(0.05);
        assert_eq!((count(&few, DriverClass::Behavioural), count(&few, DriverClass::Random)), (1, 19));
        assert_eq!(few[0], DriverClass::Behavioural);
    }

    #[test]
    fn supply_positions_independent_of_share() {
        let r = router();
        let nodes = |share: f64| {
            let cfg = ScenarioConfig { behavioural_share: share, ..Default::default() };
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            generate_supply(&cfg, &r, &mut rng, Some(0.5)).unwrap().iter().map(|d| d.node).collect::<Vec<_>>()
        };
        assert_eq!(nodes(0.0), nodes(1.0));
    }

    #[test]
    fn supply_without_probability_fails_for_mixed_fleet() {
        let cfg = ScenarioConfig { behavioural_share: 0.5, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(generate_supply(&cfg, &router(), &mut rng, None).is_err());
        let cfg = ScenarioConfig { behavioural_share: 1.0, ..Default::default() };
        assert!(generate_supply(&cfg, &router(), &mut rng, None).is_ok());
    }

    #[test]
    fn rounding_rule() {
        assert_eq!(behavioural_count(0.05, 20), 1);
        assert_eq!(behavioural_count(0.5, 20), 10);
        assert_eq!(behavioural_count(0.1, 20), 2);
        assert_eq!(behavioural_count(0.3, 20), 6);
        assert_eq!(behavioural_count(1.0, 20), 20);
        assert_eq!(behavioural_count(0.0, 20), 0);
    }

    #[test]
    fn threshold_nearest_rank() {
        let km: Vec<TripRequest> = (1..=10).map(|k| req(k - 1, k as f64 * 1000.0)).collect();
        let t = long_trip_threshold(&km).unwrap();
        assert_eq!(t, 8000.0);
        let flagged: Vec<f64> = km.iter().map(|r| r.distance_m).filter(|&d| d > t).collect();
        assert_eq!(flagged, vec![9000.0, 10000.0]);

        let equal: Vec<TripRequest> = (0..7).map(|i| req(i, 1234.0)).collect();
        let t = long_trip_threshold(&equal).unwrap();
        assert!(equal.iter().all(|r| r.distance_m <= t));

        let single = [req(0, 777.0)];
        assert_eq!(long_trip_threshold(&single).unwrap(), 777.0);
        assert!(long_trip_threshold(&[]).is_err());
    }

    #[test]
    fn plan_shape_and_seeds() {
        let plan = ExperimentPlan::new(ExperimentPlan::default_shares(), 10, 42).unwrap();
        assert_eq!(plan.cells.len(), 110);
        let mut seeds: Vec<u64> = plan.cells.iter().map(|c| c.seed).collect();
        seeds.sort();
        seeds.dedup();
        assert_eq!(seeds.len(), 110);
        // population seeds are shared across shares within a replication
        for c in &plan.cells {
            assert_eq!(c.population_seed, plan.cells[c.replication].population_seed);
        }
        assert!(ExperimentPlan::new(vec![], 1, 0).is_err());
        assert!(ExperimentPlan::new(vec![1.5], 1, 0).is_err());
        assert!(ExperimentPlan::new(vec![0.5], 0, 0).is_err());
    }

    #[test]
    fn validation_catches_bad_values() {
        let bad = [
            ScenarioConfig { n_drivers: 0, ..Default::default() },
            ScenarioConfig { behavioural_share: 1.2, ..Default::default() },
            ScenarioConfig { fare_per_km_eur: -1.0, ..Default::default() },
            ScenarioConfig { max_offer_rounds: 0, ..Default::default() },
            ScenarioConfig { rating: RatingDistribution::Uniform { min: 4.0, max: 6.0 }, ..Default::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
        assert!(ScenarioConfig::default().validate().is_ok());
    }
}
