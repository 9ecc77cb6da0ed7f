//! Bias strategies, selectable by name.

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::network::{to_weight, BuilderSource, NetworkBuilder, NeuronId};
use crate::neuron::{NeuronModel, NOISE_DISABLED};

/// Extra source a strategy added for a layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BiasSource {
    /// Must be fired by the runner on every step.
    Axon(String),
    Neuron(String),
}

pub trait BiasStrategy: Send + Sync {
    fn name(&self) -> &'static str;

    /// Threshold of a neuron with quantized threshold `theta` and bias `bias`.
    fn threshold(&self, theta: i64, bias: i64) -> i64 {
        let _ = bias;
        theta
    }

    /// Adds whatever the strategy needs to deliver `biases[i]` to `targets[i]`.
    fn attach(
        &self,
        b: &mut NetworkBuilder,
        layer: usize,
        targets: &[NeuronId],
        biases: &[i64],
    ) -> Result<Option<BiasSource>>;
}

/// Folds the bias into the threshold: `V > θ - b`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ThresholdShift;

impl BiasStrategy for ThresholdShift {
    fn name(&self) -> &'static str {
        "threshold_shift"
    }

    fn threshold(&self, theta: i64, bias: i64) -> i64 {
        theta - bias
    }

    fn attach(&self, _: &mut NetworkBuilder, _: usize, _: &[NeuronId], _: &[i64]) -> Result<Option<BiasSource>> {
        Ok(None)
    }
}

fn bias_synapses(targets: &[NeuronId], biases: &[i64]) -> Result<Vec<(NeuronId, i64)>> {
    targets
        .iter()
        .zip(biases)
        .filter(|(_, &w)| w != 0)
        .map(|(&t, &w)| to_weight(w).map(|w| (t, i64::from(w))))
        .collect()
}

/// One axon per layer, `L{l}:bias`, carrying weight-`b` synapses.
#[derive(Debug, Clone, Copy, Default)]
pub struct BiasAxon;

impl BiasStrategy for BiasAxon {
    fn name(&self) -> &'static str {
        "bias_axon"
    }

    fn attach(
        &self,
        b: &mut NetworkBuilder,
        layer: usize,
        targets: &[NeuronId],
        biases: &[i64],
    ) -> Result<Option<BiasSource>> {
        let syns = bias_synapses(targets, biases)?;
        if syns.is_empty() {
            return Ok(None);
        }
        let key = format!("L{layer}:bias");
        let id = b.add_axon(&key);
        for (t, w) in syns {
            b.connect(BuilderSource::Axon(id), t, w);
        }
        Ok(Some(BiasSource::Axon(key)))
    }
}

pub const ALWAYS_ON_MODEL: &str = "always_on";

/// One ANN neuron per layer with threshold -1, so it fires on every step.
#[derive(Debug, Clone, Copy, Default)]
pub struct AlwaysOnNeuron;

impl BiasStrategy for AlwaysOnNeuron {
    fn name(&self) -> &'static str {
        "always_on_neuron"
    }

    fn attach(
        &self,
        b: &mut NetworkBuilder,
        layer: usize,
        targets: &[NeuronId],
        biases: &[i64],
    ) -> Result<Option<BiasSource>> {
        let syns = bias_synapses(targets, biases)?;
        if syns.is_empty() {
            return Ok(None);
        }
        if !b.has_model(ALWAYS_ON_MODEL) {
            b.model(ALWAYS_ON_MODEL, NeuronModel::ann(-1, NOISE_DISABLED)?);
        }
        let key = format!("L{layer}:bias");
        let id = b.add_neuron(&key, ALWAYS_ON_MODEL);
        for (t, w) in syns {
            b.connect(BuilderSource::Neuron(id), t, w);
        }
        Ok(Some(BiasSource::Neuron(key)))
    }
}

pub struct BiasRegistry {
    strategies: IndexMap<&'static str, Box<dyn BiasStrategy>>,
}

impl Default for BiasRegistry {
    fn default() -> Self {
        let mut r = Self {
            strategies: IndexMap::new(),
        };
        r.register(Box::new(ThresholdShift));
        r.register(Box::new(BiasAxon));
        r.register(Box::new(AlwaysOnNeuron));
        r
    }
}

impl BiasRegistry {
    pub fn register(&mut self, strategy: Box<dyn BiasStrategy>) {
        self.strategies.insert(strategy.name(), strategy);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.strategies.keys().copied()
    }

    pub fn get(&self, name: &str) -> Result<&dyn BiasStrategy> {
        self.strategies
            .get(name)
            .map(|s| s.as_ref())
            .ok_or_else(|| Error::UnknownStrategy {
                kind: "bias strategy",
                name: name.to_string(),
            })
    }
}
