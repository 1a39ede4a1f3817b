//! Driver ride-acceptance decisions.
//!
//! A behavioural driver evaluates a binary logit over {accept, reject} where
//! the reject alternative carries zero utility. A random driver accepts with a
//! fixed probability, calibrated so both classes accept equally often on
//! average.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::clock::SimTime;
use crate::engine::{DriverAgent, DriverState, TripRequest};
use crate::error::{ChoiceError, ScenarioError};
use crate::netgraph::{NodeIx, RoadGraph, Router};
use crate::scenario::ScenarioConfig;

/// Logit coefficients. Time attributes are per minute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChoiceModel {
    pub beta_asc: f64,
    pub beta_pickup: f64,
    pub beta_waiting: f64,
    pub beta_time1loc: f64,
    pub beta_rlrd: f64,
}

impl Default for ChoiceModel {
    fn default() -> Self {
        Self { beta_asc: 1.5, beta_pickup: -0.0491, beta_waiting: -0.0173, beta_time1loc: -0.265, beta_rlrd: 0.0909 }
    }
}

impl ChoiceModel {
    pub fn validate(&self) -> Result<(), ChoiceError> {
        for (name, b) in self.named() {
            if !b.is_finite() {
                return Err(ChoiceError::Config(format!("{name} must be finite, got {b}")));
            }
        }
        Ok(())
    }

    fn named(&self) -> [(&'static str, f64); 5] {
        [
            ("beta_asc", self.beta_asc),
            ("beta_pickup", self.beta_pickup),
            ("beta_waiting", self.beta_waiting),
            ("beta_time1loc", self.beta_time1loc),
            ("beta_rlrd", self.beta_rlrd),
        ]
    }

    pub fn beta(&self, attribute: Attribute) -> f64 {
        match attribute {
            Attribute::Pickup => self.beta_pickup,
            Attribute::Waiting => self.beta_waiting,
            Attribute::Time1Loc => self.beta_time1loc,
            Attribute::Rlrd => self.beta_rlrd,
        }
    }
}

/// Attribute values of one offer as perceived by one driver.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DecisionContext {
    pub pickup_time_min: f64,
    pub waiting_time_min: f64,
    /// Early in the shift and inside the central zone.
    pub time1_loc: bool,
    /// non-shared x long trip x traveller rating x previous offer declined.
    pub rlrd: f64,
}

impl DecisionContext {
    fn check_finite(&self) -> Result<(), ChoiceError> {
        if !self.pickup_time_min.is_finite() {
            return Err(ChoiceError::NonFinite("pickup_time_min"));
        }
        if !self.waiting_time_min.is_finite() {
            return Err(ChoiceError::NonFinite("waiting_time_min"));
        }
        if !self.rlrd.is_finite() {
            return Err(ChoiceError::NonFinite("rlrd"));
        }
        Ok(())
    }

    pub fn get(&self, attribute: Attribute) -> f64 {
        match attribute {
            Attribute::Pickup => self.pickup_time_min,
            Attribute::Waiting => self.waiting_time_min,
            Attribute::Time1Loc => f64::from(u8::from(self.time1_loc)),
            Attribute::Rlrd => self.rlrd,
        }
    }

    /// Copy with one attribute replaced, checking the attribute's legal range.
    pub fn with(&self, attribute: Attribute, value: f64) -> Result<Self, ChoiceError> {
        let (lo, hi) = attribute.legal_range();
        if !(value.is_finite() && value >= lo && value <= hi) {
            return Err(ChoiceError::Config(format!("{attribute} value {value} outside legal range [{lo}, {hi}]")));
        }
        let mut ctx = *self;
        match attribute {
            Attribute::Pickup => ctx.pickup_time_min = value,
            Attribute::Waiting => ctx.waiting_time_min = value,
            Attribute::Time1Loc => {
                if value != 0.0 && value != 1.0 {
                    return Err(ChoiceError::Config(format!("time1_loc must be 0 or 1, got {value}")));
                }
                ctx.time1_loc = value == 1.0;
            }
            Attribute::Rlrd => ctx.rlrd = value,
        }
        Ok(ctx)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    Accept,
    Reject,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Accept => "accept",
            Decision::Reject => "reject",
        })
    }
}

/// Reporting class of a driver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriverClass {
    Behavioural,
    Random,
}

impl DriverClass {
    pub fn label(self) -> &'static str {
        match self {
            DriverClass::Behavioural => "behavioural",
            DriverClass::Random => "random",
        }
    }
}

impl fmt::Display for DriverClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Sweepable decision attributes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Attribute {
    Pickup,
    Waiting,
    Time1Loc,
    Rlrd,
}

impl Attribute {
    pub const ALL: [Attribute; 4] = [Attribute::Pickup, Attribute::Waiting, Attribute::Time1Loc, Attribute::Rlrd];

    pub fn id(self) -> &'static str {
        match self {
            Attribute::Pickup => "pickup",
            Attribute::Waiting => "waiting",
            Attribute::Time1Loc => "time1_loc",
            Attribute::Rlrd => "rlrd",
        }
    }

    pub fn legal_range(self) -> (f64, f64) {
        match self {
            Attribute::Pickup | Attribute::Waiting => (0.0, f64::INFINITY),
            Attribute::Time1Loc => (0.0, 1.0),
            Attribute::Rlrd => (0.0, 5.0),
        }
    }

    /// Default sweep grid: pickup 0..30 min, waiting 0..60 min, time1_loc {0,1}, rlrd 0..5.
    pub fn default_grid(self) -> Vec<f64> {
        match self {
            Attribute::Pickup => (0..=30).map(f64::from).collect(),
            Attribute::Waiting => (0..=60).map(f64::from).collect(),
            Attribute::Time1Loc => vec![0.0, 1.0],
            Attribute::Rlrd => (0..=10).map(|i| f64::from(i) * 0.5).collect(),
        }
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Attribute {
    type Err = ChoiceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Attribute::ALL
            .into_iter()
            .find(|a| a.id() == s)
            .ok_or_else(|| ChoiceError::Config(format!("unknown attribute `{s}`")))
    }
}

/// Systematic utility of accepting.
pub fn systematic_utility(model: &ChoiceModel, ctx: &DecisionContext) -> Result<f64, ChoiceError> {
    ctx.check_finite()?;
    Ok(model.beta_asc
        + model.beta_pickup * ctx.pickup_time_min
        + model.beta_waiting * ctx.waiting_time_min
        + model.beta_time1loc * f64::from(u8::from(ctx.time1_loc))
        + model.beta_rlrd * ctx.rlrd)
}

/// Probability of accepting given utility `v`; rejecting has utility zero.
pub fn acceptance_probability(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// Complement of [`acceptance_probability`].
pub fn rejection_probability(v: f64) -> f64 {
    1.0 - acceptance_probability(v)
}

/// An acceptance strategy. Implementations are registered by name in
/// [`crate::registry::AcceptanceRegistry`].
pub trait AcceptanceRule: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    fn class(&self) -> DriverClass;

    /// Utility of accepting, where the rule has one.
    fn utility(&self, ctx: &DecisionContext) -> Result<Option<f64>, ChoiceError>;

    fn probability(&self, ctx: &DecisionContext) -> Result<f64, ChoiceError>;
}

pub type AcceptancePolicy = Arc<dyn AcceptanceRule>;

/// Logit rule.
#[derive(Debug, Clone)]
pub struct Behavioural {
    pub model: ChoiceModel,
}

impl AcceptanceRule for Behavioural {
    fn name(&self) -> &str {
        "behavioural"
    }

    fn class(&self) -> DriverClass {
        DriverClass::Behavioural
    }

    fn utility(&self, ctx: &DecisionContext) -> Result<Option<f64>, ChoiceError> {
        systematic_utility(&self.model, ctx).map(Some)
    }

    fn probability(&self, ctx: &DecisionContext) -> Result<f64, ChoiceError> {
        Ok(acceptance_probability(systematic_utility(&self.model, ctx)?))
    }
}

/// Accepts with a fixed probability, ignoring the offer.
#[derive(Debug, Clone)]
pub struct RandomAcceptance {
    accept_prob: f64,
}

impl RandomAcceptance {
    pub fn new(accept_prob: f64) -> Result<Self, ChoiceError> {
        if !(0.0..=1.0).contains(&accept_prob) {
            return Err(ChoiceError::Config(format!("accept probability {accept_prob} outside [0, 1]")));
        }
        Ok(Self { accept_prob })
    }

    pub fn accept_prob(&self) -> f64 {
        self.accept_prob
    }
}

impl AcceptanceRule for RandomAcceptance {
    fn name(&self) -> &str {
        "random"
    }

    fn class(&self) -> DriverClass {
        DriverClass::Random
    }

    fn utility(&self, _ctx: &DecisionContext) -> Result<Option<f64>, ChoiceError> {
        Ok(None)
    }

    fn probability(&self, _ctx: &DecisionContext) -> Result<f64, ChoiceError> {
        Ok(self.accept_prob)
    }
}

/// Outcome of one offer evaluation, kept for the offer log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub utility: Option<f64>,
    pub probability: f64,
    pub decision: Decision,
}

/// Evaluates `policy` and draws exactly one uniform from `rng`.
pub fn evaluate<R: Rng + ?Sized>(
    policy: &dyn AcceptanceRule,
    ctx: &DecisionContext,
    rng: &mut R,
) -> Result<Evaluation, ChoiceError> {
    let utility = policy.utility(ctx)?;
    let probability = policy.probability(ctx)?;
    let u: f64 = rng.gen();
    let decision = if u < probability { Decision::Accept } else { Decision::Reject };
    Ok(Evaluation { utility, probability, decision })
}

pub fn decide<R: Rng + ?Sized>(
    policy: &dyn AcceptanceRule,
    ctx: &DecisionContext,
    rng: &mut R,
) -> Result<Decision, ChoiceError> {
    evaluate(policy, ctx, rng).map(|e| e.decision)
}

/// Circular central zone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CentralZone {
    pub centre: (f64, f64),
    pub radius_m: f64,
}

impl CentralZone {
    pub fn contains(&self, graph: &RoadGraph, node: NodeIx) -> bool {
        let n = graph.node(node);
        (n.x_m - self.centre.0).hypot(n.y_m - self.centre.1) <= self.radius_m
    }
}

/// Attribute values for offering `request` to `driver` at `now`.
pub fn build_context(
    driver: &DriverAgent,
    request: &TripRequest,
    now: SimTime,
    router: &Router,
    zone: &CentralZone,
    long_trip_threshold_m: f64,
) -> Result<DecisionContext, ChoiceError> {
    if driver.state != DriverState::Idle {
        return Err(ChoiceError::State(format!("driver {} is {:?}, not idle", driver.id, driver.state)));
    }
    let pickup_s = router.time(driver.node, request.origin).map_err(|e| ChoiceError::Config(e.to_string()))?;
    let waiting = now.saturating_sub(driver.last_dropoff);
    let elapsed = now.saturating_sub(driver.shift_start);
    // elapsed < shift / 3, without rounding the third
    let early = elapsed.as_millis() * 3 < driver.shift_length.as_millis();
    let time1_loc = early && zone.contains(router.graph(), driver.node);
    let long_trip = request.distance_m > long_trip_threshold_m;
    let non_shared = true;
    let rlrd = if non_shared && long_trip && driver.prev_declined { request.rating } else { 0.0 };
    Ok(DecisionContext { pickup_time_min: pickup_s / 60.0, waiting_time_min: waiting.as_mins_f64(), time1_loc, rlrd })
}

/// Acceptance probability over `grid` with `attribute` overridden and all
/// other attributes held at `reference`.
pub fn sensitivity_sweep(
    model: &ChoiceModel,
    attribute: Attribute,
    grid: &[f64],
    reference: &DecisionContext,
) -> Result<Vec<(f64, f64)>, ChoiceError> {
    if grid.is_empty() {
        return Err(ChoiceError::Config(format!("empty sweep grid for {attribute}")));
    }
    grid.iter()
        .map(|&value| {
            let ctx = reference.with(attribute, value)?;
            Ok((value, acceptance_probability(systematic_utility(model, &ctx)?)))
        })
        .collect()
}

/// Spread of acceptance probability over a sweep.
pub fn delta_p(curve: &[(f64, f64)]) -> f64 {
    let (lo, hi) = curve.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, p)| (lo.min(p), hi.max(p)));
    hi - lo
}

/// Per-seed and pooled acceptance counts from all-behavioural runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub per_seed: Vec<CalibrationRun>,
    pub pooled_offers: u64,
    pub pooled_accepts: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationRun {
    pub seed: u64,
    pub offers: u64,
    pub accepts: u64,
}

impl CalibrationRun {
    pub fn rate(&self) -> Option<f64> {
        (self.offers > 0).then(|| self.accepts as f64 / self.offers as f64)
    }
}

impl Calibration {
    pub fn probability(&self) -> f64 {
        self.pooled_accepts as f64 / self.pooled_offers as f64
    }
}

/// Pooled acceptance rate of behavioural drivers. The scenario's share is
/// forced to 1 for the calibration runs.
pub fn calibrate_random_probability(
    scenario: &ScenarioConfig,
    router: &Router,
    seeds: &[u64],
) -> Result<Calibration, ScenarioError> {
    if seeds.is_empty() {
        return Err(ChoiceError::Calibration("no calibration seeds".into()).into());
    }
    let mut all_behavioural = scenario.clone();
    all_behavioural.behavioural_share = 1.0;
    let mut per_seed = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let out = crate::engine::run(&all_behavioural, router, seed)?;
        let offers = out.offers.len() as u64;
        let accepts = out.offers.iter().filter(|o| o.decision == Decision::Accept).count() as u64;
        per_seed.push(CalibrationRun { seed, offers, accepts });
    }
    let pooled_offers = per_seed.iter().map(|r| r.offers).sum::<u64>();
    let pooled_accepts = per_seed.iter().map(|r| r.accepts).sum::<u64>();
    if pooled_offers == 0 {
        return Err(ChoiceError::Calibration("calibration runs generated zero offers".into()).into());
    }
    Ok(Calibration { per_seed, pooled_offers, pooled_accepts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{any, prop_assert, prop_assert_eq, proptest};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Scalar logistic evaluated exactly as written: e^v / (e^v + 1).
    fn oracle_p(v: f64) -> f64 {
        v.exp() / (v.exp() + 1.0)
    }

    fn ctx(pickup: f64, waiting: f64, t1: bool, rlrd: f64) -> DecisionContext {
        DecisionContext { pickup_time_min: pickup, waiting_time_min: waiting, time1_loc: t1, rlrd }
    }

    #[test]
    fn default_betas() {
        let m = ChoiceModel::default();
        assert_eq!(
            (m.beta_asc, m.beta_pickup, m.beta_waiting, m.beta_time1loc, m.beta_rlrd),
            (1.5, -0.0491, -0.0173, -0.265, 0.0909)
        );
    }

    #[test]
    fn utility_examples() {
        let m = ChoiceModel::default();
        assert_eq!(systematic_utility(&m, &DecisionContext::default()).unwrap(), 1.5);
        // 1.5 - 0.491 - 0.0865
        assert!((systematic_utility(&m, &ctx(10.0, 5.0, false, 0.0)).unwrap() - 0.9225).abs() < 1e-12);
        // 0.9225 - 0.265 + 0.3636
        assert!((systematic_utility(&m, &ctx(10.0, 5.0, true, 4.0)).unwrap() - 1.0211).abs() < 1e-12);
    }

    #[test]
    fn non_finite_attribute_rejected() {
        let m = ChoiceModel::default();
        assert!(matches!(
            systematic_utility(&m, &ctx(f64::NAN, 0.0, false, 0.0)),
            Err(ChoiceError::NonFinite("pickup_time_min"))
        ));
        assert!(systematic_utility(&m, &ctx(0.0, f64::INFINITY, false, 0.0)).is_err());
    }

    #[test]
    fn probability_examples() {
        assert_eq!(acceptance_probability(0.0), 0.5);
        assert!((acceptance_probability(1.5) - 0.8176).abs() < 1e-4);
        assert!((acceptance_probability(0.9225) - 0.7156).abs() < 1e-4);
        for v in [-20.0, -3.0, -0.1, 0.0, 0.1, 1.5, 3.0, 20.0] {
            assert!((acceptance_probability(v) - oracle_p(v)).abs() < 1e-15);
        }
    }

    #[test]
    fn stable_at_extremes() {
        assert_eq!(acceptance_probability(1e6), 1.0);
        assert_eq!(acceptance_probability(-1e6), 0.0);
        assert!(acceptance_probability(-745.0) >= 0.0);
        assert!(acceptance_probability(800.0).is_finite());
    }

    #[test]
    fn degenerate_random_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let always = RandomAcceptance::new(1.0).unwrap();
        let never = RandomAcceptance::new(0.0).unwrap();
        for _ in 0..1000 {
            assert_eq!(decide(&always, &ctx(30.0, 60.0, true, 0.0), &mut rng).unwrap(), Decision::Accept);
            assert_eq!(decide(&never, &DecisionContext::default(), &mut rng).unwrap(), Decision::Reject);
        }
        assert!(RandomAcceptance::new(1.2).is_err());
    }

    #[test]
    fn behavioural_empirical_rate() {
        let rule = Behavioural { model: ChoiceModel::default() };
        let c = ctx(10.0, 5.0, false, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 10_000;
        let accepted = (0..n).filter(|_| decide(&rule, &c, &mut rng).unwrap() == Decision::Accept).count();
        let rate = accepted as f64 / n as f64;
        assert!((rate - 0.7156).abs() < 0.015, "rate {rate}");
    }

    #[test]
    fn decide_consumes_one_draw() {
        let rule = Behavioural { model: ChoiceModel::default() };
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let mut b = ChaCha8Rng::seed_from_u64(9);
        decide(&rule, &DecisionContext::default(), &mut a).unwrap();
        let _: f64 = b.gen();
        assert_eq!(a.gen::<u64>(), b.gen::<u64>());
    }

    #[test]
    fn sensitivity_examples() {
        let m = ChoiceModel::default();
        let zero = DecisionContext::default();
        let check = |attr: Attribute, grid: &[f64], expected: &[f64]| {
            let curve = sensitivity_sweep(&m, attr, grid, &zero).unwrap();
            for ((_, p), e) in curve.iter().zip(expected) {
                assert!((p - e).abs() < 1e-4, "{attr}: {p} vs {e}");
            }
        };
        check(Attribute::Pickup, &[0.0, 30.0], &[0.8176, 0.5067]);
        check(Attribute::Waiting, &[0.0, 60.0], &[0.8176, 0.6135]);
        check(Attribute::Time1Loc, &[0.0, 1.0], &[0.8176, 0.7747]);
    }

    #[test]
    fn default_grid_delta_ranking() {
        let m = ChoiceModel::default();
        let zero = DecisionContext::default();
        let dp = |a: Attribute| delta_p(&sensitivity_sweep(&m, a, &a.default_grid(), &zero).unwrap());
        let expect = [
            (Attribute::Pickup, oracle_p(1.5) - oracle_p(1.5 - 0.0491 * 30.0)),
            (Attribute::Waiting, oracle_p(1.5) - oracle_p(1.5 - 0.0173 * 60.0)),
            (Attribute::Rlrd, oracle_p(1.5 + 0.0909 * 5.0) - oracle_p(1.5)),
            (Attribute::Time1Loc, oracle_p(1.5) - oracle_p(1.5 - 0.265)),
        ];
        for (a, e) in expect {
            assert!((dp(a) - e).abs() < 1e-12);
        }
        assert!(dp(Attribute::Pickup) > dp(Attribute::Waiting));
        assert!(dp(Attribute::Waiting) > dp(Attribute::Rlrd));
        assert!(dp(Attribute::Rlrd) > dp(Attribute::Time1Loc));
    }

    #[test]
    fn sweep_errors() {
        let m = ChoiceModel::default();
        let zero = DecisionContext::default();
        assert!("speed".parse::<Attribute>().is_err());
        assert!(sensitivity_sweep(&m, Attribute::Pickup, &[], &zero).is_err());
        assert!(sensitivity_sweep(&m, Attribute::Rlrd, &[6.0], &zero).is_err());
        assert!(sensitivity_sweep(&m, Attribute::Time1Loc, &[0.5], &zero).is_err());
        assert!(sensitivity_sweep(&m, Attribute::Pickup, &[-1.0], &zero).is_err());
    }

    #[test]
    fn grids_are_monotone_in_beta_sign() {
        let m = ChoiceModel::default();
        let zero = DecisionContext::default();
        for a in Attribute::ALL {
            let curve = sensitivity_sweep(&m, a, &a.default_grid(), &zero).unwrap();
            for w in curve.windows(2) {
                if m.beta(a) < 0.0 {
                    assert!(w[1].1 < w[0].1, "{a}");
                } else {
                    assert!(w[1].1 > w[0].1, "{a}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn complement_sums_to_one(v in -800.0f64..800.0) {
            prop_assert_eq!(acceptance_probability(v) + rejection_probability(v), 1.0);
        }

        #[test]
        fn strictly_increasing(v in -30.0f64..30.0, dv in 1e-6f64..5.0) {
            prop_assert!(acceptance_probability(v + dv) > acceptance_probability(v));
        }

        #[test]
        fn matches_scalar_form(v in -30.0f64..30.0) {
            prop_assert!((acceptance_probability(v) - oracle_p(v)).abs() < 1e-14);
        }

        #[test]
        fn utility_is_linear(
            p1 in 0.0f64..60.0, w1 in 0.0f64..120.0, r1 in 0.0f64..2.5, t1 in any::<bool>(),
            p2 in 0.0f64..60.0, w2 in 0.0f64..120.0, r2 in 0.0f64..2.5,
        ) {
            let m = ChoiceModel::default();
            let a = ctx(p1, w1, t1, r1);
            let b = ctx(p2, w2, false, r2);
            let sum = ctx(p1 + p2, w1 + w2, t1, r1 + r2);
            let v0 = systematic_utility(&m, &DecisionContext::default()).unwrap();
            let lhs = systematic_utility(&m, &a).unwrap() + systematic_utility(&m, &b).unwrap() - v0;
            let rhs = systematic_utility(&m, &sum).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-9);
        }
    }
}
