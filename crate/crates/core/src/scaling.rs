//! Linear scaling analysis: run a family of networks of growing size and fit
//! HBM accesses and cycles against neuron count by least squares.

use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::backend::Session;
use crate::cost::CostConfig;
use crate::error::{Error, Result};
use crate::network::{BuilderSource, Network, NetworkBuilder};
use crate::neuron::NeuronModel;
use crate::schedule::Schedule;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination; `None` when every y is equal.
    pub r2: Option<f64>,
}

/// Ordinary least squares on `(x, y)` pairs.
pub fn fit_line(points: &[(f64, f64)]) -> Result<LinearFit> {
    if points.len() < 3 {
        return Err(Error::DegenerateInput(format!(
            "{} points, need at least 3",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateInput("all x values are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let ss_res: f64 = points.iter().map(|p| (p.1 - (slope * p.0 + intercept)).powi(2)).sum();
    let r2 = (ss_tot > 0.0).then(|| 1.0 - ss_res / ss_tot);
    Ok(LinearFit { slope, intercept, r2 })
}

/// `copies` disjoint replicas of `net`; replica `i` suffixes every key with `#i`.
pub fn replicate(net: &Network, copies: usize) -> Result<Network> {
    let mut b = NetworkBuilder::new().with_config(*net.config());
    for m in net.models() {
        b.model(&m.name, m.model);
    }
    for c in 0..copies {
        let key = |k: &str| format!("{k}#{c}");
        let ids: Vec<_> = (0..net.num_neurons() as u32)
            .map(|n| b.add_neuron(&key(net.neuron_key(n)), &net.models()[net.model_index_of(n)].name))
            .collect();
        for a in 0..net.num_axons() as u32 {
            let id = b.add_axon(&key(net.axon_key(a)));
            for s in net.axon_synapses(a) {
                b.connect(BuilderSource::Axon(id), ids[s.post as usize], s.weight.into());
            }
        }
        for n in 0..net.num_neurons() as u32 {
            for s in net.neuron_synapses(n) {
                b.connect(
                    BuilderSource::Neuron(ids[n as usize]),
                    ids[s.post as usize],
                    s.weight.into(),
                );
            }
        }
        b.outputs(net.outputs().iter().map(|&o| key(net.neuron_key(o))));
    }
    b.build()
}

/// The schedule driving every replica made by [`replicate`] identically.
pub fn replicate_schedule(schedule: &Schedule, copies: usize) -> Schedule {
    Schedule {
        version: schedule.version,
        blocks: schedule
            .blocks
            .iter()
            .map(|block| {
                block
                    .iter()
                    .map(|step| {
                        (0..copies)
                            .flat_map(|c| step.iter().map(move |k| format!("{k}#{c}")))
                            .collect()
                    })
                    .collect()
            })
            .collect(),
    }
}

/// Feed-forward network whose layer widths scale with `factor`.
///
/// Widths are `[32, 64, 64, 16] * factor` (inputs first). Every source
/// connects to 16 distinct random neurons of the next layer, so per-source
/// routing cost is independent of size. Neurons are noiseless ANN units. The
/// schedule drives a fixed random half of the inputs on each of `steps` steps.
pub fn feedforward_family(factor: usize, steps: usize, seed: u64) -> (Network, Schedule) {
    const WIDTHS: [usize; 4] = [32, 64, 64, 16];
    const FAN_OUT: usize = 16;
    let mut rng = SplitMix64::seed_from_u64(seed ^ factor as u64);
    let widths: Vec<usize> = WIDTHS.iter().map(|w| w * factor).collect();
    let mut b = NetworkBuilder::new();
    b.model("unit", NeuronModel::ann(6, -17).expect("valid model"));
    let layers: Vec<Vec<_>> = widths[1..]
        .iter()
        .enumerate()
        .map(|(l, &w)| {
            (0..w)
                .map(|i| b.add_neuron(&format!("l{}_{i}", l + 1), "unit"))
                .collect()
        })
        .collect();
    let axons: Vec<_> = (0..widths[0]).map(|i| b.add_axon(&format!("in_{i}"))).collect();
    let sources: Vec<Vec<BuilderSource>> = std::iter::once(axons.iter().map(|&a| BuilderSource::Axon(a)).collect())
        .chain(
            layers
                .iter()
                .map(|l| l.iter().map(|&n| BuilderSource::Neuron(n)).collect()),
        )
        .collect();
    for (l, srcs) in sources.iter().enumerate().take(layers.len()) {
        let next = &layers[l];
        for &src in srcs {
            for idx in rand::seq::index::sample(&mut rng, next.len(), FAN_OUT.min(next.len())) {
                b.connect(src, next[idx], rng.random_range(-2..=8));
            }
        }
    }
    b.outputs((0..widths[3]).map(|i| format!("l{}_{i}", layers.len())));
    let net = b.build().expect("family network is valid");
    let active: Vec<String> = (0..widths[0])
        .filter(|_| rng.random_bool(0.5))
        .map(|i| format!("in_{i}"))
        .collect();
    let schedule = Schedule::from_steps(std::iter::repeat_n(active, steps));
    (net, schedule)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub label: String,
    pub neurons: usize,
    pub hbm_accesses: u64,
    pub cycles: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub points: Vec<ScalingPoint>,
    pub access_fit: LinearFit,
    pub cycle_fit: LinearFit,
}

impl ScalingReport {
    /// Tab-separated table for plotting.
    pub fn to_table(&self) -> String {
        let mut s = String::from("label\tneurons\thbm_accesses\tcycles\n");
        for p in &self.points {
            s.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                p.label, p.neurons, p.hbm_accesses, p.cycles
            ));
        }
        s
    }
}

/// Runs each member on the event engine for `steps` steps and fits both lines.
pub fn scaling_study(
    family: &[(String, Network, Schedule)],
    steps: usize,
    seed: u64,
    cost: CostConfig,
) -> Result<ScalingReport> {
    let mut points = Vec::with_capacity(family.len());
    for (label, net, schedule) in family {
        let mut session = Session::with_backend(net.clone(), "engine", seed)?;
        let out = session.run(schedule, steps, cost)?;
        points.push(ScalingPoint {
            label: label.clone(),
            neurons: net.num_neurons(),
            hbm_accesses: out.report.totals.hbm_accesses(),
            cycles: out.report.total_cycles,
        });
    }
    let xy = |f: fn(&ScalingPoint) -> u64| -> Vec<(f64, f64)> {
        points.iter().map(|p| (p.neurons as f64, f(p) as f64)).collect()
    };
    Ok(ScalingReport {
        access_fit: fit_line(&xy(|p| p.hbm_accesses))?,
        cycle_fit: fit_line(&xy(|p| p.cycles))?,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::example_network;

    #[test]
    fn perfect_fit() {
        let f = fit_line(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0), (5.0, 11.0)]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r2.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(
            fit_line(&[(1.0, 1.0), (2.0, 2.0)]),
            Err(Error::DegenerateInput(_))
        ));
        assert!(matches!(
            fit_line(&[(1.0, 1.0), (1.0, 2.0), (1.0, 3.0)]),
            Err(Error::DegenerateInput(_))
        ));
        let flat = fit_line(&[(1.0, 4.0), (2.0, 4.0), (3.0, 4.0)]).unwrap();
        assert_eq!(flat.slope, 0.0);
        assert_eq!(flat.r2, None);
    }

    #[test]
    fn replicas_are_disjoint_copies() {
        let net = example_network();
        let r = replicate(&net, 3).unwrap();
        assert_eq!(r.num_neurons(), 12);
        assert_eq!(r.num_axons(), 6);
        assert_eq!(r.num_synapses(), 3 * net.num_synapses());
        assert_eq!(r.read_synapse("a#2", "d#2").unwrap(), 2);
        assert_eq!(r.outputs().len(), 6);
    }

    #[test]
    fn family_sizes_scale() {
        let (n1, s1) = feedforward_family(1, 4, 0);
        let (n3, _) = feedforward_family(3, 4, 0);
        assert_eq!(n1.num_neurons(), 144);
        assert_eq!(n3.num_neurons(), 432);
        assert_eq!(n1.num_axons(), 32);
        assert_eq!(n1.outputs().len(), 16);
        assert_eq!(s1.len(), 4);
    }
}
