//! Parametric activity models: closed-form evaluation and fitting behind an
//! open model registry.
//!
//! The three built-in kinds (`Sinusoidal`, `Linear`, `Constant`) cover the
//! activity shapes used by the bundled scenarios. Additional models can be
//! registered at runtime through [`ModelRegistry::register`]; activity
//! categories refer to models by [`ModelKind`] name only.

pub mod closed_form;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use closed_form::{Constant, Linear, Sinusoidal};

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("time {t} outside model domain [{}, {}]", fmt_bound(.lo), fmt_bound(.hi))]
    OutOfDomain { t: f64, lo: Option<f64>, hi: Option<f64> },
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("unknown model kind `{0}`")]
    UnknownKind(String),
    #[error("parameter set does not match schema: {0}")]
    SchemaMismatch(String),
    #[error("degenerate samples: {0}")]
    DegenerateSamples(String),
    #[error("non-finite value")]
    NonFinite,
}

fn fmt_bound(b: &Option<f64>) -> String {
    match b {
        Some(v) => v.to_string(),
        None => "..".into(),
    }
}

/// Whether evaluating outside the model's time domain errors or clamps to the
/// nearest boundary. Errors by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DomainPolicy {
    #[default]
    Error,
    Clamp,
}

/// Name of a registered model. Activity categories store this; the registry
/// resolves it to an implementation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModelKind(String);

impl ModelKind {
    pub fn new(name: impl Into<String>) -> Self {
        Self(name.into())
    }

    pub fn sinusoidal() -> Self {
        Self::new("Sinusoidal")
    }

    pub fn linear() -> Self {
        Self::new("Linear")
    }

    pub fn constant() -> Self {
        Self::new("Constant")
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A model kind plus concrete parameter values, e.g. the `A`, `T`, `t0`, `z0`
/// of one braking activity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub kind: ModelKind,
    pub values: BTreeMap<String, f64>,
}

impl ModelParams {
    pub fn new(kind: ModelKind, values: impl IntoIterator<Item = (impl Into<String>, f64)>) -> Self {
        Self {
            kind,
            values: values.into_iter().map(|(k, v)| (k.into(), v)).collect(),
        }
    }

    fn get(&self, name: &str) -> Result<f64, DynamicsError> {
        self.values
            .get(name)
            .copied()
            .ok_or_else(|| DynamicsError::SchemaMismatch(format!("missing parameter `{name}`")))
    }
}

/// Result of [`ModelDef::fit`]: recovered parameters and the RMS residual.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: ModelParams,
    pub residual: f64,
}

/// One registered model: schema, closed-form evaluation, and fitting.
pub trait ModelDef: Send + Sync {
    fn kind(&self) -> ModelKind;

    /// Parameter names, in schema order.
    fn parameter_schema(&self) -> &'static [&'static str];

    /// Validates parameter values against model invariants (beyond schema
    /// coverage, which [`ModelRegistry::check_params`] handles).
    fn check(&self, params: &ModelParams) -> Result<(), DynamicsError>;

    fn state(&self, params: &ModelParams, t: f64, policy: DomainPolicy) -> Result<f64, DynamicsError>;

    fn derivative(&self, params: &ModelParams, t: f64, policy: DomainPolicy) -> Result<f64, DynamicsError>;

    /// Exact `∫ z(τ) dτ` over `[t_a, t_b]`.
    fn displacement(&self, params: &ModelParams, t_a: f64, t_b: f64) -> Result<f64, DynamicsError>;

    fn fit(&self, samples: &[(f64, f64)]) -> Result<FitResult, DynamicsError>;

    /// Inclusive time domain bounds, if the model has any.
    fn domain(&self, params: &ModelParams) -> (Option<f64>, Option<f64>);
}

struct SinusoidalDef;

impl SinusoidalDef {
    fn build(params: &ModelParams) -> Result<Sinusoidal<f64>, DynamicsError> {
        Sinusoidal::new(params.get("A")?, params.get("T")?, params.get("t0")?, params.get("z0")?)
    }
}

impl ModelDef for SinusoidalDef {
    fn kind(&self) -> ModelKind {
        ModelKind::sinusoidal()
    }

    fn parameter_schema(&self) -> &'static [&'static str] {
        &["A", "T", "t0", "z0"]
    }

    fn check(&self, params: &ModelParams) -> Result<(), DynamicsError> {
        Self::build(params).map(|_| ())
    }

    fn state(&self, params: &ModelParams, t: f64, policy: DomainPolicy) -> Result<f64, DynamicsError> {
        Self::build(params)?.state_with(t, policy)
    }

    fn derivative(&self, params: &ModelParams, t: f64, policy: DomainPolicy) -> Result<f64, DynamicsError> {
        Self::build(params)?.derivative_with(t, policy)
    }

    fn displacement(&self, params: &ModelParams, t_a: f64, t_b: f64) -> Result<f64, DynamicsError> {
        Self::build(params)?.displacement(t_a, t_b)
    }

    fn fit(&self, samples: &[(f64, f64)]) -> Result<FitResult, DynamicsError> {
        let (m, residual) = Sinusoidal::fit(samples)?;
        Ok(FitResult {
            params: ModelParams::new(
                self.kind(),
                [("A", m.amplitude), ("T", m.duration), ("t0", m.start_time), ("z0", m.start_value)],
            ),
            residual,
        })
    }

    fn domain(&self, params: &ModelParams) -> (Option<f64>, Option<f64>) {
        match Self::build(params) {
            Ok(m) => (Some(m.start_time), Some(m.end_time())),
            Err(_) => (None, None),
        }
    }
}

struct LinearDef;

impl LinearDef {
    fn build(params: &ModelParams) -> Result<Linear<f64>, DynamicsError> {
        Linear::new(params.get("s")?, params.get("t0")?, params.get("z0")?)
    }
}

impl ModelDef for LinearDef {
    fn kind(&self) -> ModelKind {
        ModelKind::linear()
    }

    fn parameter_schema(&self) -> &'static [&'static str] {
        &["s", "t0", "z0"]
    }

    fn check(&self, params: &ModelParams) -> Result<(), DynamicsError> {
        Self::build(params).map(|_| ())
    }

    fn state(&self, params: &ModelParams, t: f64, policy: DomainPolicy) -> Result<f64, DynamicsError> {
        Self::build(params)?.state_with(t, policy)
    }

    fn derivative(&self, params: &ModelParams, t: f64, policy: DomainPolicy) -> Result<f64, DynamicsError> {
        Self::build(params)?.derivative_with(t, policy)
    }

    fn displacement(&self, params: &ModelParams, t_a: f64, t_b: f64) -> Result<f64, DynamicsError> {
        Self::build(params)?.displacement(t_a, t_b)
    }

    fn fit(&self, samples: &[(f64, f64)]) -> Result<FitResult, DynamicsError> {
        let (m, residual) = Linear::fit(samples)?;
        Ok(FitResult {
            params: ModelParams::new(
                self.kind(),
                [("s", m.slope), ("t0", m.start_time), ("z0", m.start_value)],
            ),
            residual,
        })
    }

    fn domain(&self, params: &ModelParams) -> (Option<f64>, Option<f64>) {
        match Self::build(params) {
            Ok(m) => (Some(m.start_time), None),
            Err(_) => (None, None),
        }
    }
}

struct ConstantDef;

impl ConstantDef {
    fn build(params: &ModelParams) -> Result<Constant<f64>, DynamicsError> {
        Constant::new(params.get("z0")?)
    }
}

impl ModelDef for ConstantDef {
    fn kind(&self) -> ModelKind {
        ModelKind::constant()
    }

    fn parameter_schema(&self) -> &'static [&'static str] {
        &["z0"]
    }

    fn check(&self, params: &ModelParams) -> Result<(), DynamicsError> {
        Self::build(params).map(|_| ())
    }

    fn state(&self, params: &ModelParams, t: f64, _policy: DomainPolicy) -> Result<f64, DynamicsError> {
        Self::build(params)?.state(t)
    }

    fn derivative(&self, params: &ModelParams, t: f64, _policy: DomainPolicy) -> Result<f64, DynamicsError> {
        Self::build(params)?.derivative(t)
    }

    fn displacement(&self, params: &ModelParams, t_a: f64, t_b: f64) -> Result<f64, DynamicsError> {
        Self::build(params)?.displacement(t_a, t_b)
    }

    fn fit(&self, samples: &[(f64, f64)]) -> Result<FitResult, DynamicsError> {
        let (m, residual) = Constant::fit(samples)?;
        Ok(FitResult {
            params: ModelParams::new(self.kind(), [("z0", m.value)]),
            residual,
        })
    }

    fn domain(&self, _params: &ModelParams) -> (Option<f64>, Option<f64>) {
        (None, None)
    }
}

/// Registry of model implementations keyed by kind name.
#[derive(Clone)]
pub struct ModelRegistry {
    models: BTreeMap<String, Arc<dyn ModelDef>>,
}

impl ModelRegistry {
    /// Registry with the three built-in models.
    pub fn builtin() -> Self {
        let mut reg = Self { models: BTreeMap::new() };
        reg.register(Arc::new(SinusoidalDef));
        reg.register(Arc::new(LinearDef));
        reg.register(Arc::new(ConstantDef));
        reg
    }

    /// Adds or replaces a model implementation.
    pub fn register(&mut self, def: Arc<dyn ModelDef>) {
        self.models.insert(def.kind().as_str().to_owned(), def);
    }

    pub fn get(&self, kind: &ModelKind) -> Result<&Arc<dyn ModelDef>, DynamicsError> {
        self.models
            .get(kind.as_str())
            .ok_or_else(|| DynamicsError::UnknownKind(kind.as_str().to_owned()))
    }

    pub fn contains(&self, kind: &ModelKind) -> bool {
        self.models.contains_key(kind.as_str())
    }

    /// Checks that the values exactly cover the kind's schema (no missing, no
    /// extras) and satisfy the model's own invariants.
    pub fn check_params(&self, params: &ModelParams) -> Result<(), DynamicsError> {
        let def = self.get(&params.kind)?;
        let schema = def.parameter_schema();
        for name in schema {
            if !params.values.contains_key(*name) {
                return Err(DynamicsError::SchemaMismatch(format!(
                    "missing parameter `{name}` for model {}",
                    params.kind
                )));
            }
        }
        for name in params.values.keys() {
            if !schema.contains(&name.as_str()) {
                return Err(DynamicsError::SchemaMismatch(format!(
                    "unexpected parameter `{name}` for model {}",
                    params.kind
                )));
            }
        }
        def.check(params)
    }

    pub fn state(&self, params: &ModelParams, t: f64) -> Result<f64, DynamicsError> {
        self.get(&params.kind)?.state(params, t, DomainPolicy::Error)
    }

    pub fn state_with(&self, params: &ModelParams, t: f64, policy: DomainPolicy) -> Result<f64, DynamicsError> {
        self.get(&params.kind)?.state(params, t, policy)
    }

    pub fn derivative(&self, params: &ModelParams, t: f64) -> Result<f64, DynamicsError> {
        self.get(&params.kind)?.derivative(params, t, DomainPolicy::Error)
    }

    pub fn derivative_with(&self, params: &ModelParams, t: f64, policy: DomainPolicy) -> Result<f64, DynamicsError> {
        self.get(&params.kind)?.derivative(params, t, policy)
    }

    pub fn displacement(&self, params: &ModelParams, t_a: f64, t_b: f64) -> Result<f64, DynamicsError> {
        self.get(&params.kind)?.displacement(params, t_a, t_b)
    }

    /// Least-squares fit of the given kind to `(t, z)` samples.
    pub fn fit(&self, kind: &ModelKind, samples: &[(f64, f64)]) -> Result<FitResult, DynamicsError> {
        self.get(kind)?.fit(samples)
    }
}

impl Default for ModelRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl fmt::Debug for ModelRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelRegistry")
            .field("kinds", &self.models.keys().collect::<Vec<_>>())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn braking_params() -> ModelParams {
        ModelParams::new(
            ModelKind::sinusoidal(),
            [("A", -8.0), ("T", 4.0), ("t0", 0.0), ("z0", 8.0)],
        )
    }

    #[test]
    fn registry_dispatches_builtin_models() {
        let reg = ModelRegistry::builtin();
        assert_eq!(reg.state(&braking_params(), 4.0).unwrap(), 0.0);
        let lin = ModelParams::new(ModelKind::linear(), [("s", 1.5), ("t0", 7.0), ("z0", 0.0)]);
        assert!((reg.state(&lin, 12.0).unwrap() - 7.5).abs() < 1e-12);
        let cst = ModelParams::new(ModelKind::constant(), [("z0", 0.0)]);
        assert_eq!(reg.displacement(&cst, 0.0, 100.0).unwrap(), 0.0);
    }

    #[test]
    fn check_params_requires_exact_schema_coverage() {
        let reg = ModelRegistry::builtin();
        assert!(reg.check_params(&braking_params()).is_ok());

        let missing = ModelParams::new(ModelKind::sinusoidal(), [("A", -8.0), ("T", 4.0)]);
        assert!(matches!(reg.check_params(&missing), Err(DynamicsError::SchemaMismatch(_))));

        let extra = ModelParams::new(ModelKind::constant(), [("z0", 1.0), ("q", 2.0)]);
        assert!(matches!(reg.check_params(&extra), Err(DynamicsError::SchemaMismatch(_))));

        let bad_duration = ModelParams::new(
            ModelKind::sinusoidal(),
            [("A", -8.0), ("T", -1.0), ("t0", 0.0), ("z0", 8.0)],
        );
        assert!(matches!(reg.check_params(&bad_duration), Err(DynamicsError::InvalidParams(_))));
    }

    #[test]
    fn unknown_kind_is_an_error() {
        let reg = ModelRegistry::builtin();
        let params = ModelParams::new(ModelKind::new("Spline"), [("z0", 0.0)]);
        assert!(matches!(reg.state(&params, 0.0), Err(DynamicsError::UnknownKind(_))));
    }

    #[test]
    fn custom_models_can_be_registered() {
        struct QuadraticDef;
        impl ModelDef for QuadraticDef {
            fn kind(&self) -> ModelKind {
                ModelKind::new("Quadratic")
            }
            fn parameter_schema(&self) -> &'static [&'static str] {
                &["c"]
            }
            fn check(&self, _: &ModelParams) -> Result<(), DynamicsError> {
                Ok(())
            }
            fn state(&self, p: &ModelParams, t: f64, _: DomainPolicy) -> Result<f64, DynamicsError> {
                Ok(p.values["c"] * t * t)
            }
            fn derivative(&self, p: &ModelParams, t: f64, _: DomainPolicy) -> Result<f64, DynamicsError> {
                Ok(2.0 * p.values["c"] * t)
            }
            fn displacement(&self, p: &ModelParams, a: f64, b: f64) -> Result<f64, DynamicsError> {
                Ok(p.values["c"] * (b.powi(3) - a.powi(3)) / 3.0)
            }
            fn fit(&self, _: &[(f64, f64)]) -> Result<FitResult, DynamicsError> {
                Err(DynamicsError::DegenerateSamples("unsupported".into()))
            }
            fn domain(&self, _: &ModelParams) -> (Option<f64>, Option<f64>) {
                (None, None)
            }
        }

        let mut reg = ModelRegistry::builtin();
        reg.register(Arc::new(QuadraticDef));
        let params = ModelParams::new(ModelKind::new("Quadratic"), [("c", 2.0)]);
        assert_eq!(reg.state(&params, 3.0).unwrap(), 18.0);
    }

    #[test]
    fn fit_via_registry() {
        let reg = ModelRegistry::builtin();
        let truth = braking_params();
        let samples: Vec<(f64, f64)> = (0..=40)
            .map(|i| {
                let t = 0.1 * i as f64;
                (t, reg.state(&truth, t).unwrap())
            })
            .collect();
        let fit = reg.fit(&ModelKind::sinusoidal(), &samples).unwrap();
        assert!((fit.params.values["A"] + 8.0).abs() < 1e-6);
        assert!((fit.params.values["z0"] - 8.0).abs() < 1e-6);
        assert!(fit.residual < 1e-6);
    }
}
