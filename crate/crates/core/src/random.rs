//! Seeded random networks and schedules for cross-checking backends.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::network::{BuilderSource, Network, NetworkBuilder};
use crate::neuron::{NeuronModel, LAMBDA_MAX, NOISE_DISABLED, NU_MAX};
use crate::schedule::Schedule;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomSpec {
    pub max_neurons: usize,
    pub max_axons: usize,
    pub max_fan_out: usize,
    pub max_models: usize,
    /// Gives every model a random noise shift; otherwise noise is off.
    pub noisy: bool,
    pub steps: usize,
    /// Probability that an axon is active on a step.
    pub input_rate: f64,
}

impl Default for RandomSpec {
    fn default() -> Self {
        Self {
            max_neurons: 512,
            max_axons: 64,
            max_fan_out: 8,
            max_models: 4,
            noisy: false,
            steps: 100,
            input_rate: 0.3,
        }
    }
}

/// Mixed LIF/ANN network with random int16 weights, random (possibly
/// recurrent) wiring, and a matching schedule.
pub fn random_network(seed: u64, spec: &RandomSpec) -> (Network, Schedule) {
    let mut rng = SplitMix64::seed_from_u64(seed);
    let n_models = rng.random_range(1..=spec.max_models.max(1));
    let mut b = NetworkBuilder::new();
    for m in 0..n_models {
        let theta = rng.random_range(-4..=60_000);
        let nu = if spec.noisy {
            rng.random_range(-20..=NU_MAX.min(12))
        } else {
            NOISE_DISABLED
        };
        let nu = nu.max(NOISE_DISABLED);
        let model = if rng.random_bool(0.5) {
            NeuronModel::lif(theta, nu, rng.random_range(0..=LAMBDA_MAX))
        } else {
            NeuronModel::ann(theta, nu)
        };
        b.model(&format!("m{m}"), model.expect("parameters in range"));
    }
    let n = rng.random_range(1..=spec.max_neurons.max(1));
    let a = rng.random_range(1..=spec.max_axons.max(1));
    let neurons: Vec<_> = (0..n)
        .map(|i| {
            let m = rng.random_range(0..n_models);
            b.add_neuron(&format!("n{i}"), &format!("m{m}"))
        })
        .collect();
    let axons: Vec<_> = (0..a).map(|i| b.add_axon(&format!("x{i}"))).collect();
    let sources = axons
        .iter()
        .map(|&x| BuilderSource::Axon(x))
        .chain(neurons.iter().map(|&x| BuilderSource::Neuron(x)))
        .collect::<Vec<_>>();
    for src in sources {
        let fan_out = rng.random_range(0..=spec.max_fan_out.min(n));
        for t in sample(&mut rng, n, fan_out) {
            b.connect(src, neurons[t], rng.random_range(i16::MIN..=i16::MAX).into());
        }
    }
    b.outputs((0..n).filter(|_| rng.random_bool(0.25)).map(|i| format!("n{i}")));
    let net = b.build().expect("random network is valid");
    let schedule = Schedule::from_steps((0..spec.steps).map(|_| {
        (0..a)
            .filter(|_| rng.random_bool(spec.input_rate))
            .map(|i| format!("x{i}"))
            .collect::<Vec<_>>()
    }));
    (net, schedule)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounded_and_reproducible() {
        let spec = RandomSpec {
            noisy: true,
            ..Default::default()
        };
        for seed in 0..20 {
            let (net, sched) = random_network(seed, &spec);
            assert!(net.num_neurons() <= 512 && net.num_axons() <= 64);
            for i in 0..net.num_axons() as u32 {
                assert!(net.axon_synapses(i).len() <= 8);
            }
            assert_eq!(sched.len(), 100);
            assert_eq!(random_network(seed, &spec), (net, sched));
        }
    }
}
