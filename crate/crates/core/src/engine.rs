//! Discrete-event core.
//!
//! One run is single-threaded. Events are ordered by `(time, seq)` where `seq`
//! is a global counter assigned at scheduling time. Offers go to one driver at
//! a time; a rejected request is immediately re-dispatched to the next
//! candidate that has not declined it.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap, VecDeque};
use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::choice::{build_context, evaluate, AcceptancePolicy, CentralZone, Decision, DecisionContext, DriverClass};
use crate::clock::SimTime;
use crate::error::{EngineError, ScenarioError};
use crate::netgraph::{NodeIx, Router};
use crate::scenario::{self, ScenarioConfig};
use crate::seed::{self, Domain};

pub type DriverId = usize;
pub type RequestId = usize;
pub type OfferId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriverState {
    Idle,
    EnRoutePickup,
    InService,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Timeline {
    pub idle: SimTime,
    pub enroute: SimTime,
    pub inservice: SimTime,
}

impl Timeline {
    pub fn total(&self) -> SimTime {
        self.idle + self.enroute + self.inservice
    }
}

#[derive(Debug, Clone)]
pub struct DriverAgent {
    pub id: DriverId,
    pub policy: AcceptancePolicy,
    pub node: NodeIx,
    pub state: DriverState,
    pub shift_start: SimTime,
    pub shift_length: SimTime,
    pub last_dropoff: SimTime,
    pub prev_declined: bool,
    pub income_eur: f64,
    pub trips: Vec<RequestId>,
    pub n_offers: u32,
    pub n_accepts: u32,
    pub timeline: Timeline,
    state_since: SimTime,
    outstanding_offer: Option<OfferId>,
}

impl DriverAgent {
    pub fn new(
        id: DriverId,
        policy: AcceptancePolicy,
        node: NodeIx,
        shift_start: SimTime,
        shift_length: SimTime,
    ) -> Self {
        Self {
            id,
            policy,
            node,
            state: DriverState::Idle,
            shift_start,
            shift_length,
            last_dropoff: shift_start,
            prev_declined: false,
            income_eur: 0.0,
            trips: Vec::new(),
            n_offers: 0,
            n_accepts: 0,
            timeline: Timeline::default(),
            state_since: shift_start,
            outstanding_offer: None,
        }
    }

    pub fn class(&self) -> DriverClass {
        self.policy.class()
    }

    /// Idle and not holding an offer.
    pub fn is_available(&self) -> bool {
        self.state == DriverState::Idle && self.outstanding_offer.is_none()
    }

    fn transition(&mut self, to: DriverState, now: SimTime) {
        self.close_interval(now);
        self.state = to;
    }

    fn close_interval(&mut self, now: SimTime) {
        let spent = now - self.state_since;
        match self.state {
            DriverState::Idle => self.timeline.idle = self.timeline.idle + spent,
            DriverState::EnRoutePickup => self.timeline.enroute = self.timeline.enroute + spent,
            DriverState::InService => self.timeline.inservice = self.timeline.inservice + spent,
        }
        self.state_since = now;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RequestStatus {
    Pending,
    Offered,
    Assigned,
    PickedUp,
    Completed,
    Abandoned,
}

impl RequestStatus {
    pub fn label(self) -> &'static str {
        match self {
            RequestStatus::Pending => "pending",
            RequestStatus::Offered => "offered",
            RequestStatus::Assigned => "assigned",
            RequestStatus::PickedUp => "picked_up",
            RequestStatus::Completed => "completed",
            RequestStatus::Abandoned => "abandoned",
        }
    }

    fn is_unassigned(self) -> bool {
        matches!(self, RequestStatus::Pending | RequestStatus::Offered)
    }
}

#[derive(Debug, Clone)]
pub struct TripRequest {
    pub id: RequestId,
    pub traveller_id: usize,
    pub origin: NodeIx,
    pub dest: NodeIx,
    pub request_time: SimTime,
    pub rating: f64,
    /// Distance of the time-shortest origin-destination route.
    pub distance_m: f64,
    pub trip_time_s: f64,
    pub status: RequestStatus,
    pub decline_set: BTreeSet<DriverId>,
    pub driver: Option<DriverId>,
    pub pickup_time: Option<SimTime>,
    pub completion_time: Option<SimTime>,
    outstanding_offer: Option<OfferId>,
    patience_expired: bool,
}

impl TripRequest {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: RequestId,
        origin: NodeIx,
        dest: NodeIx,
        request_time: SimTime,
        rating: f64,
        distance_m: f64,
        trip_time_s: f64,
    ) -> Self {
        Self {
            id,
            traveller_id: id,
            origin,
            dest,
            request_time,
            rating,
            distance_m,
            trip_time_s,
            status: RequestStatus::Pending,
            decline_set: BTreeSet::new(),
            driver: None,
            pickup_time: None,
            completion_time: None,
            outstanding_offer: None,
            patience_expired: false,
        }
    }

    pub fn waiting_time(&self) -> Option<SimTime> {
        self.pickup_time.map(|p| p - self.request_time)
    }

    fn set_status(&mut self, to: RequestStatus) -> Result<(), EngineError> {
        let ok = match (self.status, to) {
            (RequestStatus::Pending, RequestStatus::Offered) => true,
            (RequestStatus::Offered, RequestStatus::Assigned) => true,
            (RequestStatus::Assigned, RequestStatus::PickedUp) => true,
            (RequestStatus::PickedUp, RequestStatus::Completed) => true,
            (s, RequestStatus::Abandoned) => s.is_unassigned(),
            _ => false,
        };
        if !ok {
            return Err(EngineError::Consistency(format!(
                "request {} cannot move from {:?} to {:?}",
                self.id, self.status, to
            )));
        }
        self.status = to;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    RequestArrival(RequestId),
    OfferResponse(OfferId),
    PickupArrival { driver: DriverId, request: RequestId },
    DropoffArrival { driver: DriverId, request: RequestId },
    AbandonCheck(RequestId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub time: SimTime,
    pub seq: u64,
    pub kind: EventKind,
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.time, self.seq).cmp(&(other.time, other.seq))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// An idle driver eligible for an offer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub driver: DriverId,
    pub pickup_time_s: f64,
}

/// Matching rule choosing which eligible driver receives an offer.
pub trait DispatchStrategy: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    /// `candidates` are ordered by driver id.
    fn select(&self, request: &TripRequest, candidates: &[Candidate]) -> Option<DriverId>;
}

/// Closest idle driver by predicted pick-up time; lowest driver id on ties.
#[derive(Debug, Clone, Copy, Default)]
pub struct FirstDispatch;

impl DispatchStrategy for FirstDispatch {
    fn name(&self) -> &str {
        "first-dispatch"
    }

    fn select(&self, _request: &TripRequest, candidates: &[Candidate]) -> Option<DriverId> {
        candidates
            .iter()
            .min_by(|a, b| a.pickup_time_s.total_cmp(&b.pickup_time_s).then(a.driver.cmp(&b.driver)))
            .map(|c| c.driver)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OfferRecord {
    pub offer_id: OfferId,
    pub request_id: RequestId,
    pub driver_id: DriverId,
    pub time: SimTime,
    pub class: DriverClass,
    pub context: DecisionContext,
    pub utility: Option<f64>,
    pub probability: f64,
    pub decision: Decision,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripRecord {
    pub request_id: RequestId,
    pub traveller_id: usize,
    pub driver_id: Option<DriverId>,
    pub request_time: SimTime,
    pub pickup_time: Option<SimTime>,
    pub completion_time: Option<SimTime>,
    pub distance_m: f64,
    pub status: RequestStatus,
}

impl TripRecord {
    pub fn waiting_time(&self) -> Option<SimTime> {
        self.pickup_time.map(|p| p - self.request_time)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriverRecord {
    pub driver_id: DriverId,
    pub class: DriverClass,
    pub policy: String,
    pub income_eur: f64,
    pub timeline: Timeline,
    /// Time worked past the horizon to finish an in-flight trip.
    pub overtime: SimTime,
    pub n_trips: u32,
    pub n_offers: u32,
    pub n_accepts: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMeta {
    pub seed: u64,
    pub decision_seed: u64,
    pub horizon: SimTime,
    pub behavioural_share: f64,
    pub replication: Option<usize>,
    pub long_trip_threshold_m: f64,
    pub config_digest: Option<String>,
    pub events_processed: u64,
    pub end_time: SimTime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub meta: RunMeta,
    pub trips: Vec<TripRecord>,
    pub drivers: Vec<DriverRecord>,
    pub offers: Vec<OfferRecord>,
}

impl SimOutput {
    pub fn count(&self, status: RequestStatus) -> usize {
        self.trips.iter().filter(|t| t.status == status).count()
    }
}

/// Seeds for one run: population covers demand and driver placement,
/// decisions cover the per-driver acceptance streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSeeds {
    pub population: u64,
    pub decisions: u64,
}

impl RunSeeds {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            population: seed::derive(seed, Domain::Population, 0),
            decisions: seed::derive(seed, Domain::Decisions, 0),
        }
    }
}

/// Generates demand and supply from `seed` and simulates to completion.
pub fn run(scenario: &ScenarioConfig, router: &Router, seed: u64) -> Result<SimOutput, ScenarioError> {
    let mut out = run_seeded(scenario, router, RunSeeds::from_seed(seed))?;
    out.meta.seed = seed;
    Ok(out)
}

pub fn run_seeded(scenario: &ScenarioConfig, router: &Router, seeds: RunSeeds) -> Result<SimOutput, ScenarioError> {
    scenario.validate()?;
    let population = scenario::generate_population(scenario, router, seeds.population)?;
    let sim = Simulation::new(scenario, router, population.requests, population.drivers, seeds.decisions)?;
    let mut out = sim.run()?;
    out.meta.seed = seeds.population;
    Ok(out)
}

pub struct Simulation<'a> {
    cfg: &'a ScenarioConfig,
    router: &'a Router,
    zone: CentralZone,
    dispatcher: Arc<dyn DispatchStrategy>,
    long_trip_threshold_m: f64,
    horizon: SimTime,
    response_delay: SimTime,
    drivers: Vec<DriverAgent>,
    requests: Vec<TripRequest>,
    rngs: Vec<ChaCha8Rng>,
    events: BinaryHeap<Reverse<Event>>,
    next_seq: u64,
    now: SimTime,
    pending: VecDeque<RequestId>,
    offers: Vec<OfferRecord>,
    processed: u64,
    decision_seed: u64,
}

impl<'a> Simulation<'a> {
    /// `requests` must be indexed by id, `drivers` likewise.
    pub fn new(
        cfg: &'a ScenarioConfig,
        router: &'a Router,
        requests: Vec<TripRequest>,
        drivers: Vec<DriverAgent>,
        decision_seed: u64,
    ) -> Result<Self, EngineError> {
        for (i, r) in requests.iter().enumerate() {
            if r.id != i {
                return Err(EngineError::Consistency(format!("request at position {i} has id {}", r.id)));
            }
            if r.origin == r.dest {
                return Err(EngineError::Consistency(format!("request {i} has origin == destination")));
            }
        }
        for (i, d) in drivers.iter().enumerate() {
            if d.id != i {
                return Err(EngineError::Consistency(format!("driver at position {i} has id {}", d.id)));
            }
        }
        let long_trip_threshold_m = if requests.is_empty() {
            f64::INFINITY
        } else {
            scenario::long_trip_threshold(&requests).map_err(|e| EngineError::Consistency(e.to_string()))?
        };
        let dispatcher = crate::registry::DispatchRegistry::with_builtins()
            .create(&cfg.dispatch)
            .map_err(|e| EngineError::State(e.to_string()))?;
        let rngs = drivers
            .iter()
            .map(|d| ChaCha8Rng::seed_from_u64(seed::derive(decision_seed, Domain::Decisions, d.id as u64)))
            .collect();
        let mut sim = Self {
            cfg,
            router,
            zone: cfg.zone(router.graph()),
            dispatcher,
            long_trip_threshold_m,
            horizon: SimTime::from_secs(cfg.horizon_s),
            response_delay: SimTime::from_secs_f64(cfg.offer_response_s),
            drivers,
            requests,
            rngs,
            events: BinaryHeap::new(),
            next_seq: 0,
            now: SimTime::ZERO,
            pending: VecDeque::new(),
            offers: Vec::new(),
            processed: 0,
            decision_seed,
        };
        let arrivals: Vec<(SimTime, RequestId)> = sim.requests.iter().map(|r| (r.request_time, r.id)).collect();
        for (t, id) in arrivals {
            sim.schedule(t, EventKind::RequestArrival(id))?;
            if let Some(w) = cfg.max_wait_s {
                sim.schedule(t + SimTime::from_secs_f64(w), EventKind::AbandonCheck(id))?;
            }
        }
        Ok(sim)
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn drivers(&self) -> &[DriverAgent] {
        &self.drivers
    }

    pub fn requests(&self) -> &[TripRequest] {
        &self.requests
    }

    pub fn offers(&self) -> &[OfferRecord] {
        &self.offers
    }

    pub fn pending_queue(&self) -> impl Iterator<Item = RequestId> + '_ {
        self.pending.iter().copied()
    }

    pub fn long_trip_threshold_m(&self) -> f64 {
        self.long_trip_threshold_m
    }

    pub fn schedule(&mut self, time: SimTime, kind: EventKind) -> Result<(), EngineError> {
        if time < self.now {
            return Err(EngineError::PastEvent { at_ms: time.as_millis(), now_ms: self.now.as_millis() });
        }
        self.events.push(Reverse(Event { time, seq: self.next_seq, kind }));
        self.next_seq += 1;
        Ok(())
    }

    /// Next event without removing it.
    pub fn peek(&self) -> Option<&Event> {
        self.events.peek().map(|Reverse(e)| e)
    }

    /// Processes one event. Returns `None` once the queue is empty.
    pub fn step(&mut self) -> Result<Option<Event>, EngineError> {
        let Some(Reverse(event)) = self.events.pop() else {
            return Ok(None);
        };
        if event.time < self.now {
            return Err(EngineError::PastEvent { at_ms: event.time.as_millis(), now_ms: self.now.as_millis() });
        }
        self.now = event.time;
        self.processed += 1;
        match event.kind {
            EventKind::RequestArrival(r) => self.on_arrival(r)?,
            EventKind::OfferResponse(o) => self.handle_response(o)?,
            EventKind::PickupArrival { driver, request } => self.complete_pickup(driver, request)?,
            EventKind::DropoffArrival { driver, request } => self.complete_dropoff(driver, request)?,
            EventKind::AbandonCheck(r) => self.on_patience_expired(r)?,
        }
        Ok(Some(event))
    }

    pub fn run(mut self) -> Result<SimOutput, EngineError> {
        while self.step()?.is_some() {}
        self.finish()
    }

    fn on_arrival(&mut self, r: RequestId) -> Result<(), EngineError> {
        if self.dispatch(r)?.is_none() {
            self.pending.push_back(r);
        }
        Ok(())
    }

    /// Offers `r` to the best eligible idle driver. `None` leaves the request
    /// for the caller to queue.
    pub fn dispatch(&mut self, r: RequestId) -> Result<Option<OfferId>, EngineError> {
        let req = &self.requests[r];
        if !req.status.is_unassigned() || req.outstanding_offer.is_some() {
            return Err(EngineError::Consistency(format!("request {r} is not awaiting dispatch")));
        }
        if self.now >= self.horizon {
            return Ok(None);
        }
        let candidates = self.candidates(req)?;
        let Some(driver_id) = self.dispatcher.select(req, &candidates) else {
            return Ok(None);
        };
        if !candidates.iter().any(|c| c.driver == driver_id) {
            return Err(EngineError::Consistency(format!(
                "dispatcher `{}` chose ineligible driver {driver_id}",
                self.dispatcher.name()
            )));
        }
        let driver = &self.drivers[driver_id];
        let ctx = build_context(driver, req, self.now, self.router, &self.zone, self.long_trip_threshold_m)?;
        let eval = evaluate(driver.policy.as_ref(), &ctx, &mut self.rngs[driver_id])?;
        let offer_id = self.offers.len();
        self.offers.push(OfferRecord {
            offer_id,
            request_id: r,
            driver_id,
            time: self.now,
            class: driver.class(),
            context: ctx,
            utility: eval.utility,
            probability: eval.probability,
            decision: eval.decision,
        });
        let req = &mut self.requests[r];
        if req.status == RequestStatus::Pending {
            req.set_status(RequestStatus::Offered)?;
        }
        req.outstanding_offer = Some(offer_id);
        let driver = &mut self.drivers[driver_id];
        driver.outstanding_offer = Some(offer_id);
        driver.n_offers += 1;
        self.schedule(self.now + self.response_delay, EventKind::OfferResponse(offer_id))?;
        Ok(Some(offer_id))
    }

    fn candidates(&self, req: &TripRequest) -> Result<Vec<Candidate>, EngineError> {
        let times = self.router.times_to(req.origin)?;
        Ok(self
            .drivers
            .iter()
            .filter(|d| d.is_available() && !req.decline_set.contains(&d.id))
            .map(|d| Candidate { driver: d.id, pickup_time_s: times[d.node] })
            .collect())
    }

    /// Applies the driver's answer to an outstanding offer.
    pub fn handle_response(&mut self, offer_id: OfferId) -> Result<(), EngineError> {
        let offer =
            self.offers.get(offer_id).ok_or_else(|| EngineError::Consistency(format!("unknown offer {offer_id}")))?;
        let (r, d, decision) = (offer.request_id, offer.driver_id, offer.decision);
        if self.requests[r].outstanding_offer != Some(offer_id) || self.drivers[d].outstanding_offer != Some(offer_id) {
            return Err(EngineError::Consistency(format!("offer {offer_id} is not outstanding")));
        }
        if self.drivers[d].state != DriverState::Idle {
            return Err(EngineError::Consistency(format!("driver {d} answered an offer while not idle")));
        }
        self.requests[r].outstanding_offer = None;
        self.drivers[d].outstanding_offer = None;
        match decision {
            Decision::Accept => {
                let now = self.now;
                let pickup_s = self.router.time(self.drivers[d].node, self.requests[r].origin)?;
                let driver = &mut self.drivers[d];
                driver.prev_declined = false;
                driver.n_accepts += 1;
                driver.transition(DriverState::EnRoutePickup, now);
                let req = &mut self.requests[r];
                req.set_status(RequestStatus::Assigned)?;
                req.driver = Some(d);
                self.schedule(
                    now + SimTime::from_secs_f64(pickup_s),
                    EventKind::PickupArrival { driver: d, request: r },
                )?;
                // the request may have been sitting in the queue while this offer was out
                self.pending.retain(|&q| q != r);
            }
            Decision::Reject => {
                self.drivers[d].prev_declined = true;
                let req = &mut self.requests[r];
                req.decline_set.insert(d);
                let exhausted = req.decline_set.len() >= self.cfg.max_offer_rounds as usize
                    || req.decline_set.len() >= self.drivers.len()
                    || req.patience_expired;
                if exhausted {
                    self.abandon(r)?;
                } else if self.dispatch(r)?.is_none() && !self.pending.contains(&r) {
                    self.pending.push_back(r);
                }
                // the decliner is free again
                self.drain_pending()?;
            }
        }
        Ok(())
    }

    pub fn complete_pickup(&mut self, d: DriverId, r: RequestId) -> Result<(), EngineError> {
        let now = self.now;
        let (origin, trip_s) = (self.requests[r].origin, self.requests[r].trip_time_s);
        let driver = &mut self.drivers[d];
        if driver.state != DriverState::EnRoutePickup || self.requests[r].driver != Some(d) {
            return Err(EngineError::Consistency(format!(
                "pickup of request {r} by driver {d} in state {:?}",
                driver.state
            )));
        }
        driver.node = origin;
        driver.transition(DriverState::InService, now);
        let req = &mut self.requests[r];
        req.set_status(RequestStatus::PickedUp)?;
        req.pickup_time = Some(now);
        self.schedule(now + SimTime::from_secs_f64(trip_s), EventKind::DropoffArrival { driver: d, request: r })
    }

    pub fn complete_dropoff(&mut self, d: DriverId, r: RequestId) -> Result<(), EngineError> {
        let now = self.now;
        let fare = self.cfg.fare_per_km_eur;
        let (dest, distance_m) = (self.requests[r].dest, self.requests[r].distance_m);
        let driver = &mut self.drivers[d];
        if driver.state != DriverState::InService || self.requests[r].driver != Some(d) {
            return Err(EngineError::Consistency(format!(
                "drop-off of request {r} by driver {d} in state {:?}",
                driver.state
            )));
        }
        driver.node = dest;
        driver.transition(DriverState::Idle, now);
        driver.last_dropoff = now;
        driver.income_eur += fare * distance_m / 1000.0;
        driver.trips.push(r);
        let req = &mut self.requests[r];
        req.set_status(RequestStatus::Completed)?;
        req.completion_time = Some(now);
        self.drain_pending()
    }

    fn on_patience_expired(&mut self, r: RequestId) -> Result<(), EngineError> {
        let req = &mut self.requests[r];
        if !req.status.is_unassigned() {
            return Ok(());
        }
        if req.outstanding_offer.is_some() {
            // resolved when the driver answers
            req.patience_expired = true;
            return Ok(());
        }
        self.abandon(r)
    }

    fn abandon(&mut self, r: RequestId) -> Result<(), EngineError> {
        self.requests[r].set_status(RequestStatus::Abandoned)?;
        self.requests[r].completion_time = Some(self.now);
        self.pending.retain(|&q| q != r);
        Ok(())
    }

    /// Re-examines the waiting queue in FIFO order.
    fn drain_pending(&mut self) -> Result<(), EngineError> {
        if self.now >= self.horizon || !self.drivers.iter().any(DriverAgent::is_available) {
            return Ok(());
        }
        let queued: Vec<RequestId> = self.pending.iter().copied().collect();
        for r in queued {
            if self.requests[r].outstanding_offer.is_some() || !self.requests[r].status.is_unassigned() {
                continue;
            }
            if self.dispatch(r)?.is_some() {
                self.pending.retain(|&q| q != r);
            }
            if !self.drivers.iter().any(DriverAgent::is_available) {
                break;
            }
        }
        Ok(())
    }

    fn finish(mut self) -> Result<SimOutput, EngineError> {
        let end_time = self.now;
        // never matched before the horizon
        for r in 0..self.requests.len() {
            if self.requests[r].status.is_unassigned() {
                self.abandon(r)?;
            }
        }
        let mut drivers = Vec::with_capacity(self.drivers.len());
        for d in self.drivers.iter_mut() {
            if d.state != DriverState::Idle || d.outstanding_offer.is_some() {
                return Err(EngineError::Consistency(format!("driver {} still busy at end of run", d.id)));
            }
            let shift_end = d.shift_start + d.shift_length;
            let end = shift_end.max(d.state_since);
            d.close_interval(end);
            drivers.push(DriverRecord {
                driver_id: d.id,
                class: d.class(),
                policy: d.policy.name().to_string(),
                income_eur: d.income_eur,
                timeline: d.timeline,
                overtime: end - shift_end,
                n_trips: d.trips.len() as u32,
                n_offers: d.n_offers,
                n_accepts: d.n_accepts,
            });
        }
        let trips = self
            .requests
            .iter()
            .map(|r| TripRecord {
                request_id: r.id,
                traveller_id: r.traveller_id,
                driver_id: if r.status == RequestStatus::Completed { r.driver } else { None },
                request_time: r.request_time,
                pickup_time: r.pickup_time,
                completion_time: r.completion_time,
                distance_m: r.distance_m,
                status: r.status,
            })
            .collect();
        Ok(SimOutput {
            meta: RunMeta {
                seed: 0,
                decision_seed: self.decision_seed,
                horizon: self.horizon,
                behavioural_share: self.cfg.behavioural_share,
                replication: None,
                long_trip_threshold_m: self.long_trip_threshold_m,
                config_digest: None,
                events_processed: self.processed,
                end_time,
            },
            trips,
            drivers,
            offers: self.offers,
        })
    }
}
