//! Name-keyed registries for the interchangeable strategies: acceptance
//! rules, dispatch rules and arrival processes.
//!
//! Configuration refers to strategies by name; each registry resolves a name
//! to a trait object at run start.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::choice::{AcceptancePolicy, Behavioural, ChoiceModel, RandomAcceptance};
use crate::engine::{DispatchStrategy, FirstDispatch};
use crate::error::{ChoiceError, ScenarioError};
use crate::scenario::{ArrivalProcess, PoissonArrivals, UniformArrivals};

/// Ordered name -> factory map.
pub struct Registry<F> {
    kind: &'static str,
    entries: BTreeMap<String, F>,
}

impl<F> Registry<F> {
    pub fn new(kind: &'static str) -> Self {
        Self { kind, entries: BTreeMap::new() }
    }

    /// Adds or replaces `name`.
    pub fn register(&mut self, name: impl Into<String>, factory: F) -> &mut Self {
        self.entries.insert(name.into(), factory);
        self
    }

    pub fn get(&self, name: &str) -> Option<&F> {
        self.entries.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    fn unknown(&self, name: &str) -> String {
        let known: Vec<&str> = self.names().collect();
        format!("unknown {} `{name}` (known: {})", self.kind, known.join(", "))
    }
}

/// Inputs available to acceptance-rule factories.
#[derive(Debug, Clone, Copy)]
pub struct RuleParams {
    pub model: ChoiceModel,
    pub accept_prob: Option<f64>,
}

pub type RuleFactory = Box<dyn Fn(&RuleParams) -> Result<AcceptancePolicy, ChoiceError> + Send + Sync>;

pub struct AcceptanceRegistry(Registry<RuleFactory>);

impl AcceptanceRegistry {
    pub fn empty() -> Self {
        Self(Registry::new("acceptance rule"))
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register("behavioural", |p: &RuleParams| {
            p.model.validate()?;
            Ok(Arc::new(Behavioural { model: p.model }) as AcceptancePolicy)
        });
        r.register("random", |p: &RuleParams| {
            let prob = p
                .accept_prob
                .ok_or_else(|| ChoiceError::Config("random rule needs an acceptance probability".into()))?;
            Ok(Arc::new(RandomAcceptance::new(prob)?) as AcceptancePolicy)
        });
        r
    }

    pub fn register<F>(&mut self, name: &str, factory: F) -> &mut Self
    where
        F: Fn(&RuleParams) -> Result<AcceptancePolicy, ChoiceError> + Send + Sync + 'static,
    {
        self.0.register(name, Box::new(factory));
        self
    }

    pub fn create(&self, name: &str, params: &RuleParams) -> Result<AcceptancePolicy, ChoiceError> {
        let factory = self.0.get(name).ok_or_else(|| ChoiceError::Config(self.0.unknown(name)))?;
        factory(params)
    }

    pub fn names(&self) -> Vec<&str> {
        self.0.names().collect()
    }
}

pub struct DispatchRegistry(Registry<Arc<dyn DispatchStrategy>>);

impl DispatchRegistry {
    pub fn with_builtins() -> Self {
        let mut r = Registry::new("dispatch strategy");
        r.register("first-dispatch", Arc::new(FirstDispatch) as Arc<dyn DispatchStrategy>);
        Self(r)
    }

    pub fn register(&mut self, strategy: Arc<dyn DispatchStrategy>) -> &mut Self {
        self.0.register(strategy.name().to_string(), strategy);
        self
    }

    pub fn create(&self, name: &str) -> Result<Arc<dyn DispatchStrategy>, ScenarioError> {
        self.0.get(name).cloned().ok_or_else(|| ScenarioError::Config(self.0.unknown(name)))
    }

    pub fn names(&self) -> Vec<&str> {
        self.0.names().collect()
    }
}

pub struct ArrivalRegistry(Registry<Arc<dyn ArrivalProcess>>);

impl ArrivalRegistry {
    pub fn with_builtins() -> Self {
        let mut r = Registry::new("arrival process");
        r.register("uniform", Arc::new(UniformArrivals) as Arc<dyn ArrivalProcess>);
        r.register("poisson", Arc::new(PoissonArrivals) as Arc<dyn ArrivalProcess>);
        Self(r)
    }

    pub fn create(&self, name: &str) -> Result<Arc<dyn ArrivalProcess>, ScenarioError> {
        self.0.get(name).cloned().ok_or_else(|| ScenarioError::Config(self.0.unknown(name)))
    }

    pub fn names(&self) -> Vec<&str> {
        self.0.names().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::{DecisionContext, DriverClass};

    #[test]
    fn builtin_names() {
        assert_eq!(AcceptanceRegistry::with_builtins().names(), vec!["behavioural", "random"]);
        assert_eq!(DispatchRegistry::with_builtins().names(), vec!["first-dispatch"]);
        assert_eq!(ArrivalRegistry::with_builtins().names(), vec!["poisson", "uniform"]);
    }

    #[test]
    fn creates_rules_by_name() {
        let reg = AcceptanceRegistry::with_builtins();
        let params = RuleParams { model: ChoiceModel::default(), accept_prob: Some(0.25) };
        let b = reg.create("behavioural", &params).unwrap();
        let r = reg.create("random", &params).unwrap();
        assert_eq!(b.class(), DriverClass::Behavioural);
        assert_eq!(r.class(), DriverClass::Random);
        assert_eq!(r.probability(&DecisionContext::default()).unwrap(), 0.25);
    }

    #[test]
    fn unknown_name_lists_known_ones() {
        let reg = AcceptanceRegistry::with_builtins();
        let params = RuleParams { model: ChoiceModel::default(), accept_prob: None };
        let err = reg.create("greedy", &params).unwrap_err().to_string();
        assert!(err.contains("greedy") && err.contains("behavioural"), "{err}");
        assert!(reg.create("random", &params).is_err());
        assert!(DispatchRegistry::with_builtins().create("batch").is_err());
    }

    #[test]
    fn custom_rule_can_be_registered() {
        let mut reg = AcceptanceRegistry::with_builtins();
        reg.register("always", |_p: &RuleParams| Ok(Arc::new(RandomAcceptance::new(1.0)?) as AcceptancePolicy));
        let params = RuleParams { model: ChoiceModel::default(), accept_prob: None };
        assert_eq!(reg.create("always", &params).unwrap().probability(&DecisionContext::default()).unwrap(), 1.0);
    }
}
