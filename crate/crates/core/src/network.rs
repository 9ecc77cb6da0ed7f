//! Network definition, validation and simulation state.
//!
//! Networks are assembled with [`NetworkBuilder`] and frozen into a
//! [`Network`] by [`NetworkBuilder::build`]. Building assigns dense indices:
//! axons in insertion order, neurons grouped by model (models in declaration
//! order, neurons in insertion order within a model). Every backend and the
//! compiled image share this indexing, so the noise stream lines up.
//!
//! Synapse lists are stored sorted by postsynaptic index and outputs are
//! stored as an ascending, duplicate-free index list.

use std::collections::HashMap;
use std::ops::Range;

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::neuron::{NeuronModel, NoiseRng, Overflow};

pub const DEFAULT_MAX_FAN_OUT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EngineConfig {
    pub max_fan_out: usize,
    pub overflow: Overflow,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            max_fan_out: DEFAULT_MAX_FAN_OUT,
            overflow: Overflow::Saturate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Source {
    Axon(u32),
    Neuron(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Synapse {
    pub post: u32,
    pub weight: i16,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelDef {
    pub name: String,
    pub model: NeuronModel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    config: EngineConfig,
    models: Vec<ModelDef>,
    model_groups: Vec<Range<u32>>,
    neuron_model: Vec<u16>,
    axon_keys: Vec<String>,
    neuron_keys: Vec<String>,
    axon_index: HashMap<String, u32>,
    neuron_index: HashMap<String, u32>,
    axon_synapses: Vec<Vec<Synapse>>,
    neuron_synapses: Vec<Vec<Synapse>>,
    outputs: Vec<u32>,
}

impl Network {
    pub fn builder() -> NetworkBuilder {
        NetworkBuilder::default()
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn num_axons(&self) -> usize {
        self.axon_keys.len()
    }

    pub fn num_neurons(&self) -> usize {
        self.neuron_keys.len()
    }

    pub fn num_synapses(&self) -> usize {
        self.axon_synapses.iter().map(Vec::len).sum::<usize>()
            + self.neuron_synapses.iter().map(Vec::len).sum::<usize>()
    }

    pub fn models(&self) -> &[ModelDef] {
        &self.models
    }

    /// Contiguous neuron index range for each model, in model order.
    pub fn model_groups(&self) -> &[Range<u32>] {
        &self.model_groups
    }

    pub fn model_index_of(&self, neuron: u32) -> usize {
        self.neuron_model[neuron as usize] as usize
    }

    pub fn model_of(&self, neuron: u32) -> &NeuronModel {
        &self.models[self.model_index_of(neuron)].model
    }

    pub fn axon_keys(&self) -> &[String] {
        &self.axon_keys
    }

    pub fn neuron_keys(&self) -> &[String] {
        &self.neuron_keys
    }

    pub fn axon_key(&self, idx: u32) -> &str {
        &self.axon_keys[idx as usize]
    }

    pub fn neuron_key(&self, idx: u32) -> &str {
        &self.neuron_keys[idx as usize]
    }

    pub fn axon_idx(&self, key: &str) -> Option<u32> {
        self.axon_index.get(key).copied()
    }

    pub fn neuron_idx(&self, key: &str) -> Option<u32> {
        self.neuron_index.get(key).copied()
    }

    /// Resolves a presynaptic key, axons first.
    pub fn source_of(&self, key: &str) -> Option<Source> {
        self.axon_idx(key)
            .map(Source::Axon)
            .or_else(|| self.neuron_idx(key).map(Source::Neuron))
    }

    pub fn source_key(&self, src: Source) -> &str {
        match src {
            Source::Axon(i) => self.axon_key(i),
            Source::Neuron(i) => self.neuron_key(i),
        }
    }

    pub fn axon_synapses(&self, idx: u32) -> &[Synapse] {
        &self.axon_synapses[idx as usize]
    }

    pub fn neuron_synapses(&self, idx: u32) -> &[Synapse] {
        &self.neuron_synapses[idx as usize]
    }

    pub fn synapses(&self, src: Source) -> &[Synapse] {
        match src {
            Source::Axon(i) => self.axon_synapses(i),
            Source::Neuron(i) => self.neuron_synapses(i),
        }
    }

    pub fn outputs(&self) -> &[u32] {
        &self.outputs
    }

    pub fn is_output(&self, neuron: u32) -> bool {
        self.outputs.binary_search(&neuron).is_ok()
    }

    pub fn weight(&self, src: Source, post: u32) -> Option<i16> {
        let syns = self.synapses(src);
        syns.binary_search_by_key(&post, |s| s.post)
            .ok()
            .map(|i| syns[i].weight)
    }

    /// Overwrites an existing synapse's weight. Topology never changes.
    pub fn set_weight(&mut self, src: Source, post: u32, weight: i16) -> Result<()> {
        let syns = match src {
            Source::Axon(i) => &mut self.axon_synapses[i as usize],
            Source::Neuron(i) => &mut self.neuron_synapses[i as usize],
        };
        match syns.binary_search_by_key(&post, |s| s.post) {
            Ok(i) => {
                syns[i].weight = weight;
                Ok(())
            }
            Err(_) => Err(Error::NoSuchSynapse {
                pre: self.source_key(src).to_string(),
                post: self.neuron_key(post).to_string(),
            }),
        }
    }

    pub fn read_synapse(&self, pre: &str, post: &str) -> Result<i16> {
        let (src, post_idx) = self.resolve_pair(pre, post)?;
        Ok(self.weight(src, post_idx).expect("resolve_pair checks existence"))
    }

    pub fn write_synapse(&mut self, pre: &str, post: &str, weight: i64) -> Result<()> {
        let w = to_weight(weight)?;
        let (src, post_idx) = self.resolve_pair(pre, post)?;
        self.set_weight(src, post_idx, w)
    }

    /// Resolves `(pre, post)` to indices, failing unless the synapse exists.
    pub fn resolve_pair(&self, pre: &str, post: &str) -> Result<(Source, u32)> {
        let missing = || Error::NoSuchSynapse {
            pre: pre.to_string(),
            post: post.to_string(),
        };
        let src = self.source_of(pre).ok_or_else(missing)?;
        let post_idx = self.neuron_idx(post).ok_or_else(missing)?;
        self.weight(src, post_idx).ok_or_else(missing)?;
        Ok((src, post_idx))
    }

    /// Maps axon keys to a sorted, duplicate-free index list.
    pub fn resolve_inputs<S: AsRef<str>>(&self, keys: &[S]) -> Result<Vec<u32>> {
        let mut idx = keys
            .iter()
            .map(|k| {
                self.axon_idx(k.as_ref())
                    .ok_or_else(|| Error::UnknownAxonKey(k.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        idx.sort_unstable();
        idx.dedup();
        Ok(idx)
    }

    pub fn resolve_neurons<S: AsRef<str>>(&self, keys: &[S]) -> Result<Vec<u32>> {
        keys.iter()
            .map(|k| {
                self.neuron_idx(k.as_ref())
                    .ok_or_else(|| Error::UnknownNeuronKey(k.as_ref().to_string()))
            })
            .collect()
    }

    /// Rebuilds a builder holding the same network, in index order.
    pub fn to_builder(&self) -> NetworkBuilder {
        let mut b = NetworkBuilder::default().with_config(self.config);
        for m in &self.models {
            b.model(&m.name, m.model);
        }
        let neuron_ids: Vec<NeuronId> = (0..self.num_neurons() as u32)
            .map(|i| b.add_neuron(self.neuron_key(i), &self.models[self.model_index_of(i)].name))
            .collect();
        for a in 0..self.num_axons() as u32 {
            let id = b.add_axon(self.axon_key(a));
            for s in self.axon_synapses(a) {
                b.connect(BuilderSource::Axon(id), neuron_ids[s.post as usize], s.weight.into());
            }
        }
        for n in 0..self.num_neurons() as u32 {
            for s in self.neuron_synapses(n) {
                b.connect(
                    BuilderSource::Neuron(neuron_ids[n as usize]),
                    neuron_ids[s.post as usize],
                    s.weight.into(),
                );
            }
        }
        b.outputs(self.outputs.iter().map(|&o| self.neuron_key(o)));
        b
    }
}

pub fn to_weight(w: i64) -> Result<i16> {
    i16::try_from(w).map_err(|_| Error::WeightOverflow { weight: w })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AxonId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NeuronId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuilderSource {
    Axon(AxonId),
    Neuron(NeuronId),
}

#[derive(Debug, Clone)]
struct PendingNeuron {
    key: String,
    model: Option<String>,
    synapses: Vec<(u32, i64)>,
}

/// Incremental network definition.
///
/// Targets may be referenced before they are declared; anything still
/// undeclared at [`build`](Self::build) time is reported as a dangling target.
/// Definition errors are deferred and the first one is returned by `build`.
#[derive(Debug, Clone, Default)]
pub struct NetworkBuilder {
    config: EngineConfig,
    models: IndexMap<String, NeuronModel>,
    axons: IndexMap<String, Vec<(u32, i64)>>,
    neurons: Vec<PendingNeuron>,
    neuron_ids: HashMap<String, u32>,
    outputs: Vec<String>,
    error: Option<Error>,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_config(mut self, config: EngineConfig) -> Self {
        self.config = config;
        self
    }

    fn fail(&mut self, e: Error) {
        if self.error.is_none() {
            self.error = Some(e);
        }
    }

    pub fn model(&mut self, name: &str, model: NeuronModel) -> &mut Self {
        if self.models.insert(name.to_string(), model).is_some() {
            self.fail(Error::DuplicateKey(name.to_string()));
        }
        self
    }

    pub fn has_model(&self, name: &str) -> bool {
        self.models.contains_key(name)
    }

    fn intern(&mut self, key: &str) -> u32 {
        if let Some(&id) = self.neuron_ids.get(key) {
            return id;
        }
        let id = self.neurons.len() as u32;
        self.neurons.push(PendingNeuron {
            key: key.to_string(),
            model: None,
            synapses: Vec::new(),
        });
        self.neuron_ids.insert(key.to_string(), id);
        id
    }

    pub fn add_axon(&mut self, key: &str) -> AxonId {
        let (id, prev) = self.axons.insert_full(key.to_string(), Vec::new());
        if prev.is_some() {
            self.fail(Error::DuplicateKey(key.to_string()));
        }
        AxonId(id as u32)
    }

    pub fn add_neuron(&mut self, key: &str, model: &str) -> NeuronId {
        let id = self.intern(key);
        let slot = &mut self.neurons[id as usize];
        if slot.model.is_some() {
            self.fail(Error::DuplicateKey(key.to_string()));
        } else {
            slot.model = Some(model.to_string());
        }
        NeuronId(id)
    }

    /// Reserves an id for a neuron key without defining it.
    pub fn neuron_ref(&mut self, key: &str) -> NeuronId {
        NeuronId(self.intern(key))
    }

    pub fn connect(&mut self, src: BuilderSource, dst: NeuronId, weight: i64) -> &mut Self {
        match src {
            BuilderSource::Axon(AxonId(a)) => self.axons[a as usize].push((dst.0, weight)),
            BuilderSource::Neuron(NeuronId(n)) => self.neurons[n as usize].synapses.push((dst.0, weight)),
        }
        self
    }

    pub fn axon<I, S>(&mut self, key: &str, synapses: I) -> &mut Self
    where
        I: IntoIterator<Item = (S, i64)>,
        S: AsRef<str>,
    {
        let id = self.add_axon(key);
        for (post, w) in synapses {
            let dst = self.neuron_ref(post.as_ref());
            self.connect(BuilderSource::Axon(id), dst, w);
        }
        self
    }

    pub fn neuron<I, S>(&mut self, key: &str, model: &str, synapses: I) -> &mut Self
    where
        I: IntoIterator<Item = (S, i64)>,
        S: AsRef<str>,
    {
        let id = self.add_neuron(key, model);
        for (post, w) in synapses {
            let dst = self.neuron_ref(post.as_ref());
            self.connect(BuilderSource::Neuron(id), dst, w);
        }
        self
    }

    pub fn outputs<I, S>(&mut self, keys: I) -> &mut Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        self.outputs.extend(keys.into_iter().map(|k| k.as_ref().to_string()));
        self
    }

    pub fn num_neurons(&self) -> usize {
        self.neurons.len()
    }

    pub fn build(&self) -> Result<Network> {
        if let Some(e) = &self.error {
            return Err(e.clone());
        }

        // Every referenced neuron must be defined.
        let undefined: Vec<bool> = self.neurons.iter().map(|n| n.model.is_none()).collect();
        if undefined.iter().any(|&u| u) {
            let dangling = |syns: &[(u32, i64)]| syns.iter().find(|(t, _)| undefined[*t as usize]).map(|(t, _)| *t);
            for (key, syns) in &self.axons {
                if let Some(t) = dangling(syns) {
                    return Err(Error::DanglingTarget {
                        source_key: key.clone(),
                        target: self.neurons[t as usize].key.clone(),
                    });
                }
            }
            for n in &self.neurons {
                if let Some(t) = dangling(&n.synapses) {
                    return Err(Error::DanglingTarget {
                        source_key: n.key.clone(),
                        target: self.neurons[t as usize].key.clone(),
                    });
                }
            }
            let n = &self.neurons[undefined.iter().position(|&u| u).unwrap()];
            return Err(Error::UnknownNeuronKey(n.key.clone()));
        }

        for n in &self.neurons {
            if self.axons.contains_key(&n.key) {
                return Err(Error::DuplicateKey(n.key.clone()));
            }
        }

        // Group neurons by model, declaration order.
        let mut model_of = Vec::with_capacity(self.neurons.len());
        for n in &self.neurons {
            let name = n.model.as_deref().unwrap();
            let m = self
                .models
                .get_index_of(name)
                .ok_or_else(|| Error::UnknownModel(name.to_string()))?;
            model_of.push(m);
        }
        let mut order: Vec<u32> = (0..self.neurons.len() as u32).collect();
        order.sort_by_key(|&i| model_of[i as usize]);
        let mut remap = vec![0u32; self.neurons.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old as usize] = new as u32;
        }
        let mut model_groups = vec![0u32..0u32; self.models.len()];
        let mut start = 0u32;
        for (m, group) in model_groups.iter_mut().enumerate() {
            let count = model_of.iter().filter(|&&x| x == m).count() as u32;
            *group = start..start + count;
            start += count;
        }

        let neuron_keys: Vec<String> = order.iter().map(|&o| self.neurons[o as usize].key.clone()).collect();
        let neuron_model: Vec<u16> = order.iter().map(|&o| model_of[o as usize] as u16).collect();

        let finish = |key: &str, raw: &[(u32, i64)]| -> Result<Vec<Synapse>> {
            if raw.len() > self.config.max_fan_out {
                return Err(Error::FanOutExceeded {
                    source_key: key.to_string(),
                    fan_out: raw.len(),
                    limit: self.config.max_fan_out,
                });
            }
            let mut syns = raw
                .iter()
                .map(|&(t, w)| {
                    Ok(Synapse {
                        post: remap[t as usize],
                        weight: to_weight(w)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            syns.sort_by_key(|s| s.post);
            if let Some(pair) = syns.windows(2).find(|p| p[0].post == p[1].post) {
                return Err(Error::DuplicateSynapse {
                    source_key: key.to_string(),
                    target: neuron_keys[pair[0].post as usize].clone(),
                });
            }
            Ok(syns)
        };

        let axon_synapses = self
            .axons
            .iter()
            .map(|(k, s)| finish(k, s))
            .collect::<Result<Vec<_>>>()?;
        let mut neuron_synapses = Vec::with_capacity(order.len());
        for &o in &order {
            let n = &self.neurons[o as usize];
            neuron_synapses.push(finish(&n.key, &n.synapses)?);
        }

        let mut outputs = Vec::with_capacity(self.outputs.len());
        for k in &self.outputs {
            let id = self
                .neuron_ids
                .get(k)
                .ok_or_else(|| Error::UnknownOutputKey(k.clone()))?;
            outputs.push(remap[*id as usize]);
        }
        outputs.sort_unstable();
        outputs.dedup();

        let axon_keys: Vec<String> = self.axons.keys().cloned().collect();
        Ok(Network {
            config: self.config,
            models: self
                .models
                .iter()
                .map(|(name, model)| ModelDef {
                    name: name.clone(),
                    model: *model,
                })
                .collect(),
            model_groups,
            neuron_model,
            axon_index: axon_keys
                .iter()
                .enumerate()
                .map(|(i, k)| (k.clone(), i as u32))
                .collect(),
            neuron_index: neuron_keys
                .iter()
                .enumerate()
                .map(|(i, k)| (k.clone(), i as u32))
                .collect(),
            axon_keys,
            neuron_keys,
            axon_synapses,
            neuron_synapses,
            outputs,
        })
    }
}

/// Mutable simulation state for one network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimState {
    pub membrane: Vec<i32>,
    pub fired_neurons: Vec<bool>,
    pub fired_axons: Vec<bool>,
    pub t: u64,
    pub rng: NoiseRng,
}

impl SimState {
    pub fn new(num_axons: usize, num_neurons: usize, seed: u64) -> Self {
        Self {
            membrane: vec![0; num_neurons],
            fired_neurons: vec![false; num_neurons],
            fired_axons: vec![false; num_axons],
            t: 0,
            rng: NoiseRng::new(seed),
        }
    }

    pub fn for_network(net: &Network, seed: u64) -> Self {
        Self::new(net.num_axons(), net.num_neurons(), seed)
    }

    pub fn check_dims(&self, num_axons: usize, num_neurons: usize) -> Result<()> {
        if self.membrane.len() != num_neurons
            || self.fired_neurons.len() != num_neurons
            || self.fired_axons.len() != num_axons
        {
            return Err(Error::DimensionMismatch(format!(
                "state has {} neurons / {} axons, network has {num_neurons} / {num_axons}",
                self.membrane.len(),
                self.fired_axons.len()
            )));
        }
        Ok(())
    }
}

/// Seed under which the noisy ANN neuron `d` of [`example_network`] stays
/// below threshold for the first three steps.
pub const EXAMPLE_SEED: u64 = 42;

/// The four-neuron, two-axon demonstration network.
pub fn example_network() -> Network {
    let mut b = NetworkBuilder::new();
    b.model("N1", NeuronModel::lif(3, -17, 63).unwrap())
        .model("N2", NeuronModel::lif(4, -17, 2).unwrap())
        .model("N3", NeuronModel::ann(5, 2).unwrap())
        .axon("alpha", [("a", 3), ("c", 2)])
        .axon("beta", [("b", 3)])
        .neuron("a", "N1", [("b", 1), ("d", 2)])
        .neuron("b", "N1", Vec::<(&str, i64)>::new())
        .neuron("c", "N2", Vec::<(&str, i64)>::new())
        .neuron("d", "N3", [("c", 1)])
        .outputs(["a", "b"]);
    b.build().expect("example network is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty() -> Vec<(&'static str, i64)> {
        Vec::new()
    }

    #[test]
    fn example_network_shape() {
        let net = example_network();
        assert_eq!(net.num_axons(), 2);
        assert_eq!(net.num_neurons(), 4);
        assert_eq!(net.neuron_keys(), ["a", "b", "c", "d"]);
        assert_eq!(net.model_groups(), [0..2, 2..3, 3..4]);
        assert_eq!(net.outputs(), [0, 1]);
    }

    #[test]
    fn empty_network_is_valid() {
        let net = NetworkBuilder::new().build().unwrap();
        assert_eq!(net.num_axons(), 0);
        assert_eq!(net.num_neurons(), 0);
    }

    #[test]
    fn dangling_target() {
        let mut b = NetworkBuilder::new();
        b.model("m", NeuronModel::ann(0, -17).unwrap())
            .axon("alpha", [("z", 1)]);
        assert_eq!(
            b.build().unwrap_err(),
            Error::DanglingTarget {
                source_key: "alpha".into(),
                target: "z".into()
            }
        );
    }

    #[test]
    fn duplicate_keys_and_synapses() {
        let mut b = NetworkBuilder::new();
        b.model("m", NeuronModel::ann(0, -17).unwrap())
            .neuron("a", "m", empty())
            .neuron("a", "m", empty());
        assert_eq!(b.build().unwrap_err(), Error::DuplicateKey("a".into()));

        let mut b = NetworkBuilder::new();
        b.model("m", NeuronModel::ann(0, -17).unwrap())
            .neuron("a", "m", empty())
            .axon("x", [("a", 1), ("a", 2)]);
        assert!(matches!(b.build().unwrap_err(), Error::DuplicateSynapse { .. }));
    }

    #[test]
    fn weight_and_fan_out_limits() {
        let mut b = NetworkBuilder::new();
        b.model("m", NeuronModel::ann(0, -17).unwrap())
            .neuron("a", "m", empty())
            .axon("x", [("a", 1 << 15)]);
        assert_eq!(b.build().unwrap_err(), Error::WeightOverflow { weight: 32768 });

        let mut b = NetworkBuilder::new().with_config(EngineConfig {
            max_fan_out: 1,
            ..Default::default()
        });
        b.model("m", NeuronModel::ann(0, -17).unwrap())
            .neuron("a", "m", empty())
            .neuron("b", "m", empty())
            .axon("x", [("a", 1), ("b", 1)]);
        assert!(matches!(
            b.build().unwrap_err(),
            Error::FanOutExceeded { fan_out: 2, .. }
        ));
    }

    #[test]
    fn unknown_output_and_model() {
        let mut b = NetworkBuilder::new();
        b.model("m", NeuronModel::ann(0, -17).unwrap()).outputs(["q"]);
        assert_eq!(b.build().unwrap_err(), Error::UnknownOutputKey("q".into()));

        let mut b = NetworkBuilder::new();
        b.neuron("a", "nope", empty());
        assert_eq!(b.build().unwrap_err(), Error::UnknownModel("nope".into()));
    }

    #[test]
    fn neurons_are_grouped_by_model() {
        let mut b = NetworkBuilder::new();
        b.model("x", NeuronModel::ann(0, -17).unwrap())
            .model("y", NeuronModel::ann(1, -17).unwrap())
            .neuron("p", "y", [("q", 1)])
            .neuron("q", "x", empty())
            .neuron("r", "y", empty());
        let net = b.build().unwrap();
        assert_eq!(net.neuron_keys(), ["q", "p", "r"]);
        assert_eq!(net.neuron_synapses(1), [Synapse { post: 0, weight: 1 }]);
    }

    #[test]
    fn read_write_synapse() {
        let mut net = example_network();
        assert_eq!(net.read_synapse("alpha", "a").unwrap(), 3);
        assert_eq!(net.read_synapse("a", "b").unwrap(), 1);
        assert!(matches!(net.read_synapse("b", "a"), Err(Error::NoSuchSynapse { .. })));
        net.write_synapse("a", "b", 2).unwrap();
        assert_eq!(net.read_synapse("a", "b").unwrap(), 2);
        assert_eq!(
            net.write_synapse("a", "b", 1 << 15).unwrap_err(),
            Error::WeightOverflow { weight: 32768 }
        );
        assert!(net.write_synapse("b", "a", 1).is_err());
    }

    #[test]
    fn builder_round_trip() {
        let net = example_network();
        assert_eq!(net.to_builder().build().unwrap(), net);
    }
}
