//! Execution backends and the user-facing session API.
//!
//! A backend advances a [`SimState`] by one timestep. Backends are registered
//! by name in a [`BackendRegistry`]; the default registry holds the dense
//! `oracle` and the event-driven `engine` over a compiled HBM image.

use indexmap::IndexMap;

use crate::cost::{CostConfig, CostReport, StepCounters};
use crate::engine::EventEngine;
use crate::error::{Error, Result};
use crate::hbm::{compile, decompile, HbmImage};
use crate::network::{to_weight, Network, SimState, Source};
use crate::oracle::OracleBackend;
use crate::schedule::Schedule;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StepResult {
    /// Every neuron that fired this step, ascending index.
    pub fired: Vec<u32>,
    pub counters: StepCounters,
}

pub trait Backend: Send {
    fn name(&self) -> &'static str;

    /// Runs one timestep with the given sorted, duplicate-free axon indices.
    fn step(&mut self, state: &mut SimState, inputs: &[u32]) -> Result<StepResult>;

    fn weight(&self, src: Source, post: u32) -> Option<i16>;

    fn set_weight(&mut self, src: Source, post: u32, weight: i16) -> Result<()>;
}

pub type BackendFactory = fn(&Network) -> Result<Box<dyn Backend>>;

pub struct BackendRegistry {
    factories: IndexMap<&'static str, BackendFactory>,
}

impl Default for BackendRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register("oracle", |net| Ok(Box::new(OracleBackend::new(net))));
        r.register("engine", |net| Ok(Box::new(EventEngine::new(compile(net)?)?)));
        r
    }
}

impl BackendRegistry {
    pub fn empty() -> Self {
        Self {
            factories: IndexMap::new(),
        }
    }

    pub fn register(&mut self, name: &'static str, factory: BackendFactory) {
        self.factories.insert(name, factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.factories.keys().copied()
    }

    pub fn create(&self, name: &str, net: &Network) -> Result<Box<dyn Backend>> {
        let factory = self.factories.get(name).ok_or_else(|| Error::UnknownStrategy {
            kind: "backend",
            name: name.to_string(),
        })?;
        factory(net)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    /// Output spikes per step.
    pub trace: Vec<Vec<String>>,
    pub report: CostReport,
}

/// A network bound to a backend and its simulation state.
pub struct Session {
    net: Network,
    backend: Box<dyn Backend>,
    state: SimState,
}

impl Session {
    pub fn new(net: Network, backend: Box<dyn Backend>, seed: u64) -> Self {
        let state = SimState::for_network(&net, seed);
        Self { net, backend, state }
    }

    /// Builds a session using a backend from the default registry.
    pub fn with_backend(net: Network, backend: &str, seed: u64) -> Result<Self> {
        let b = BackendRegistry::default().create(backend, &net)?;
        Ok(Self::new(net, b, seed))
    }

    /// Runs the event engine directly on a compiled image.
    pub fn from_image(image: HbmImage, seed: u64) -> Result<Self> {
        let net = decompile(&image)?;
        let engine = EventEngine::new(image)?;
        Ok(Self::new(net, Box::new(engine), seed))
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn backend_name(&self) -> &'static str {
        self.backend.name()
    }

    pub fn reset(&mut self, seed: u64) {
        self.state = SimState::for_network(&self.net, seed);
    }

    /// Runs one step and returns the full backend result.
    pub fn step_raw(&mut self, inputs: &[u32]) -> Result<StepResult> {
        self.backend.step(&mut self.state, inputs)
    }

    /// Activates the given axons for one timestep; returns output keys that fired.
    pub fn step<S: AsRef<str>>(&mut self, inputs: &[S]) -> Result<Vec<String>> {
        Ok(self.step_counted(inputs)?.0)
    }

    pub fn step_counted<S: AsRef<str>>(&mut self, inputs: &[S]) -> Result<(Vec<String>, StepCounters)> {
        let idx = self.net.resolve_inputs(inputs)?;
        let r = self.step_raw(&idx)?;
        Ok((self.output_keys(&r.fired), r.counters))
    }

    /// Like [`step`](Self::step), also returning every membrane potential.
    pub fn step_with_membrane<S: AsRef<str>>(&mut self, inputs: &[S]) -> Result<(Vec<String>, Vec<i32>)> {
        let spikes = self.step(inputs)?;
        Ok((spikes, self.state.membrane.clone()))
    }

    pub fn output_keys(&self, fired: &[u32]) -> Vec<String> {
        fired
            .iter()
            .filter(|&&i| self.net.is_output(i))
            .map(|&i| self.net.neuron_key(i).to_string())
            .collect()
    }

    pub fn read_synapse(&self, pre: &str, post: &str) -> Result<i16> {
        let (src, post_idx) = self.net.resolve_pair(pre, post)?;
        self.backend.weight(src, post_idx).ok_or_else(|| Error::NoSuchSynapse {
            pre: pre.to_string(),
            post: post.to_string(),
        })
    }

    pub fn write_synapse(&mut self, pre: &str, post: &str, weight: i64) -> Result<()> {
        let w = to_weight(weight)?;
        let (src, post_idx) = self.net.resolve_pair(pre, post)?;
        self.backend.set_weight(src, post_idx, w)?;
        self.net.set_weight(src, post_idx, w)
    }

    pub fn read_membrane<S: AsRef<str>>(&self, keys: &[S]) -> Result<Vec<i32>> {
        Ok(self
            .net
            .resolve_neurons(keys)?
            .into_iter()
            .map(|i| self.state.membrane[i as usize])
            .collect())
    }

    /// Runs `steps` timesteps of `schedule` (idle steps past its end) and
    /// aggregates the cost counters.
    pub fn run(&mut self, schedule: &Schedule, steps: usize, cost: CostConfig) -> Result<RunOutcome> {
        let inputs = schedule
            .steps()
            .map(|s| self.net.resolve_inputs(s))
            .collect::<Result<Vec<_>>>()?;
        let mut trace = Vec::with_capacity(steps);
        let mut per_step = Vec::with_capacity(steps);
        for t in 0..steps {
            let r = self.step_raw(inputs.get(t).map_or(&[][..], Vec::as_slice))?;
            trace.push(self.output_keys(&r.fired));
            per_step.push(r.counters);
        }
        let report = CostReport::new(cost, per_step, &schedule.block_lens(steps));
        Ok(RunOutcome { trace, report })
    }
}
