//! Lock-step comparison of two sessions.

use serde::Serialize;

use crate::backend::Session;
use crate::error::{Error, Result};
use crate::schedule::Schedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mismatch {
    Spike,
    Membrane,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Divergence {
    pub step: usize,
    pub neuron: String,
    pub mismatch: Mismatch,
}

/// Steps both sessions through `schedule` and returns the first step and
/// lowest-index neuron whose spike or post-step membrane differs.
pub fn first_divergence(
    a: &mut Session,
    b: &mut Session,
    schedule: &Schedule,
    steps: usize,
) -> Result<Option<Divergence>> {
    let (na, nb) = (a.network(), b.network());
    if na.num_neurons() != nb.num_neurons() || na.num_axons() != nb.num_axons() {
        return Err(Error::DimensionMismatch(format!(
            "{} axons / {} neurons vs {} axons / {} neurons",
            na.num_axons(),
            na.num_neurons(),
            nb.num_axons(),
            nb.num_neurons()
        )));
    }
    let inputs = schedule
        .steps()
        .map(|s| na.resolve_inputs(s))
        .collect::<Result<Vec<_>>>()?;
    let n = na.num_neurons();
    let mut fired_a = vec![false; n];
    let mut fired_b = vec![false; n];
    for t in 0..steps {
        let idx = inputs.get(t).map_or(&[][..], Vec::as_slice);
        let ra = a.step_raw(idx)?;
        let rb = b.step_raw(idx)?;
        fired_a.fill(false);
        fired_b.fill(false);
        ra.fired.iter().for_each(|&i| fired_a[i as usize] = true);
        rb.fired.iter().for_each(|&i| fired_b[i as usize] = true);
        let (ma, mb) = (&a.state().membrane, &b.state().membrane);
        let hit = (0..n).find_map(|i| {
            if fired_a[i] != fired_b[i] {
                Some((i, Mismatch::Spike))
            } else if ma[i] != mb[i] {
                Some((i, Mismatch::Membrane))
            } else {
                None
            }
        });
        if let Some((i, mismatch)) = hit {
            return Ok(Some(Divergence {
                step: t,
                neuron: a.network().neuron_key(i as u32).to_string(),
                mismatch,
            }));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::example_network;

    #[test]
    fn equal_backends_agree_and_patched_weight_diverges() {
        let schedule = Schedule::from_steps(vec![vec!["alpha", "beta"]; 4]);
        let mut a = Session::with_backend(example_network(), "oracle", 9).unwrap();
        let mut b = Session::with_backend(example_network(), "engine", 9).unwrap();
        assert_eq!(first_divergence(&mut a, &mut b, &schedule, 6).unwrap(), None);
        let mut a = Session::with_backend(example_network(), "oracle", 9).unwrap();
        let mut b = Session::with_backend(example_network(), "engine", 9).unwrap();
        b.write_synapse("beta", "b", 1).unwrap();
        let d = first_divergence(&mut a, &mut b, &schedule, 6).unwrap().unwrap();
        assert_eq!((d.step, d.neuron.as_str(), d.mismatch), (0, "b", Mismatch::Membrane));
    }
}
