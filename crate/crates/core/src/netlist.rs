//! JSON netlist format.
//!
//! ```json
//! {
//!   "version": 1,
//!   "config": { "max_fan_out": 4096, "overflow": "saturate" },
//!   "models": {
//!     "N1": { "kind": "lif", "theta": 3, "nu": -17, "lambda": 63 },
//!     "N3": { "kind": "ann", "theta": 5, "nu": 2 }
//!   },
//!   "axons": { "alpha": [["a", 3], ["c", 2]] },
//!   "neurons": { "a": { "model": "N1", "synapses": [["b", 1]] } },
//!   "outputs": ["a"]
//! }
//! ```
//!
//! `config` is optional. Object order is significant: it fixes index
//! assignment. `lambda` is ignored (and omitted on output) for ANN models.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{EngineConfig, Network, NetworkBuilder, DEFAULT_MAX_FAN_OUT};
use crate::neuron::{NeuronKind, NeuronModel, Overflow};

pub const NETLIST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: NeuronKind,
    pub theta: i32,
    pub nu: i8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeuronSpec {
    pub model: String,
    #[serde(default)]
    pub synapses: Vec<(String, i64)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigSpec {
    #[serde(default = "default_fan_out")]
    pub max_fan_out: usize,
    #[serde(default)]
    pub overflow: Overflow,
}

fn default_fan_out() -> usize {
    DEFAULT_MAX_FAN_OUT
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Netlist {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<ConfigSpec>,
    #[serde(default)]
    pub models: IndexMap<String, ModelSpec>,
    #[serde(default)]
    pub axons: IndexMap<String, Vec<(String, i64)>>,
    #[serde(default)]
    pub neurons: IndexMap<String, NeuronSpec>,
    #[serde(default)]
    pub outputs: Vec<String>,
}

impl Netlist {
    pub fn parse(text: &str) -> Result<Self> {
        let n: Self = serde_json::from_str(text)?;
        if n.version != NETLIST_VERSION {
            return Err(Error::Parse(format!("unsupported netlist version {}", n.version)));
        }
        Ok(n)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("netlist serializes")
    }

    pub fn to_network(&self) -> Result<Network> {
        let config = self
            .config
            .as_ref()
            .map_or_else(EngineConfig::default, |c| EngineConfig {
                max_fan_out: c.max_fan_out,
                overflow: c.overflow,
            });
        let mut b = NetworkBuilder::new().with_config(config);
        for (name, m) in &self.models {
            let model = match m.kind {
                NeuronKind::Lif => NeuronModel::lif(m.theta, m.nu, m.lambda.unwrap_or(0)),
                NeuronKind::Ann => NeuronModel::ann(m.theta, m.nu),
            }
            .map_err(|e| match e {
                Error::InvalidModel { reason, .. } => Error::InvalidModel {
                    name: name.clone(),
                    reason,
                },
                e => e,
            })?;
            b.model(name, model);
        }
        for (key, n) in &self.neurons {
            b.add_neuron(key, &n.model);
        }
        for (key, syns) in &self.axons {
            b.axon(key, syns.iter().map(|(k, w)| (k.as_str(), *w)));
        }
        for (key, n) in &self.neurons {
            let id = b.neuron_ref(key);
            for (post, w) in &n.synapses {
                let dst = b.neuron_ref(post);
                b.connect(crate::network::BuilderSource::Neuron(id), dst, *w);
            }
        }
        b.outputs(&self.outputs);
        b.build()
    }

    pub fn from_network(net: &Network) -> Self {
        let syn_list = |syns: &[crate::network::Synapse]| -> Vec<(String, i64)> {
            syns.iter()
                .map(|s| (net.neuron_key(s.post).to_string(), s.weight.into()))
                .collect()
        };
        let config = *net.config();
        Self {
            version: NETLIST_VERSION,
            config: (config != EngineConfig::default()).then_some(ConfigSpec {
                max_fan_out: config.max_fan_out,
                overflow: config.overflow,
            }),
            models: net
                .models()
                .iter()
                .map(|m| {
                    (
                        m.name.clone(),
                        ModelSpec {
                            kind: m.model.kind,
                            theta: m.model.theta,
                            nu: m.model.nu,
                            lambda: (m.model.kind == NeuronKind::Lif).then_some(m.model.lambda),
                        },
                    )
                })
                .collect(),
            axons: (0..net.num_axons() as u32)
                .map(|a| (net.axon_key(a).to_string(), syn_list(net.axon_synapses(a))))
                .collect(),
            neurons: (0..net.num_neurons() as u32)
                .map(|n| {
                    (
                        net.neuron_key(n).to_string(),
                        NeuronSpec {
                            model: net.models()[net.model_index_of(n)].name.clone(),
                            synapses: syn_list(net.neuron_synapses(n)),
                        },
                    )
                })
                .collect(),
            outputs: net.outputs().iter().map(|&o| net.neuron_key(o).to_string()).collect(),
        }
    }
}

pub fn parse_network(text: &str) -> Result<Network> {
    Netlist::parse(text)?.to_network()
}

pub fn network_to_json(net: &Network) -> String {
    Netlist::from_network(net).to_json()
}
