//! Agent-based simulator of a two-sided ride-sourcing platform.
//!
//! Drivers accept or reject trip offers either through a binary logit model
//! (behavioural class) or with a fixed probability (random class). The
//! platform dispatches each request to the closest idle driver; KPIs cover
//! driver income, idle time and traveller waiting time per class.

pub mod choice;
pub mod clock;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod netgraph;
pub mod output;
pub mod registry;
pub mod scenario;
pub mod seed;

pub use choice::{
    acceptance_probability, decide, systematic_utility, AcceptancePolicy, AcceptanceRule, Attribute, ChoiceModel,
    Decision, DecisionContext, DriverClass,
};
pub use clock::SimTime;
pub use engine::{run, SimOutput};
pub use error::{ChoiceError, EngineError, GraphError, MetricsError, ScenarioError};
pub use metrics::{gini, summarize, KpiSummary};
pub use netgraph::{RoadGraph, Route, Router};
pub use scenario::{ExperimentPlan, ScenarioConfig};
