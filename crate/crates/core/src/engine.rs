//! Event-driven execution over a compiled HBM image.
//!
//! Each step first updates every neuron in groups of 16 lanes (noise,
//! threshold and reset, leak or clear). Routing then runs in two phases:
//! phase 1 reads the pointer of every driven axon and every fired neuron into
//! a queue (axons first, then neurons, ascending index); phase 2 walks each
//! queued region row by row and adds the weight of every real synapse slot to
//! its postsynaptic membrane. Effects of a spike land in the step it fires
//! and are seen by the threshold test of the next step.
//!
//! The engine only reads the image; it never consults the source network.

use crate::backend::{Backend, StepResult};
use crate::cost::StepCounters;
use crate::error::{Error, Result};
use crate::hbm::{check_invariants, compile::patch_weight_idx, HbmImage, PointerSlot, SynapseSlot, SLOTS_PER_SEGMENT};
use crate::network::{SimState, Source};
use crate::neuron::{pre_integrate, shape_noise, NeuronModel, Overflow};

#[derive(Debug, Clone)]
pub struct EventEngine {
    image: HbmImage,
    models: Vec<NeuronModel>,
    outputs: Vec<u32>,
    overflow: Overflow,
    queue: Vec<PointerSlot>,
}

impl EventEngine {
    /// Validates the image and decodes its model section.
    pub fn new(image: HbmImage) -> Result<Self> {
        check_invariants(&image)?;
        let mut models = Vec::with_capacity(image.num_neurons());
        for (m, g) in image.symtab.model_groups.iter().enumerate() {
            let model = image.model(m)?;
            models.extend(g.clone().map(|_| model));
        }
        let syn = image.geometry.synapse_section;
        let mut outputs: Vec<u32> = (syn.start..syn.end())
            .flat_map(|r| image.rows[r as usize])
            .map(SynapseSlot::decode)
            .filter(|s| s.valid && s.output)
            .map(|s| s.post)
            .collect();
        outputs.sort_unstable();
        outputs.dedup();
        Ok(Self {
            overflow: image.config.overflow,
            image,
            models,
            outputs,
            queue: Vec::new(),
        })
    }

    pub fn image(&self) -> &HbmImage {
        &self.image
    }

    /// Neurons carrying an output flag, ascending.
    pub fn output_neurons(&self) -> &[u32] {
        &self.outputs
    }

    pub fn engine_step(&mut self, state: &mut SimState, inputs: &[u32]) -> Result<StepResult> {
        let n = self.models.len();
        state.check_dims(self.image.num_axons(), n)?;
        let mut counters = StepCounters {
            neuron_scan_cycles: n.div_ceil(SLOTS_PER_SEGMENT) as u64,
            ..Default::default()
        };

        let mut fired = Vec::new();
        for group in (0..n).step_by(SLOTS_PER_SEGMENT) {
            for i in group..(group + SLOTS_PER_SEGMENT).min(n) {
                let model = &self.models[i];
                let noise = shape_noise(state.rng.draw_raw(), model.nu);
                let (spiked, v) = pre_integrate(model, state.membrane[i], noise, self.overflow);
                state.membrane[i] = v;
                state.fired_neurons[i] = spiked;
                if spiked {
                    fired.push(i as u32);
                }
            }
        }

        state.fired_axons.iter_mut().for_each(|f| *f = false);
        self.queue.clear();
        for &a in inputs {
            if a as usize >= state.fired_axons.len() {
                return Err(Error::IndexOutOfRange(format!("axon {a}")));
            }
            state.fired_axons[a as usize] = true;
            self.queue.push(self.fetch_pointer(Source::Axon(a))?);
            counters.pointer_row_reads += 1;
        }
        for &i in &fired {
            self.queue.push(self.fetch_pointer(Source::Neuron(i))?);
            counters.pointer_row_reads += 1;
        }

        for ptr in &self.queue {
            counters.synapse_row_reads += ptr.row_count as u64;
            for row in ptr.rows() {
                let row = self
                    .image
                    .rows
                    .get(row as usize)
                    .ok_or_else(|| Error::IndexOutOfRange(format!("synapse row {row}")))?;
                for &raw in row {
                    let s = SynapseSlot::decode(raw);
                    if !s.valid || s.dummy {
                        continue;
                    }
                    let v = state
                        .membrane
                        .get_mut(s.post as usize)
                        .ok_or_else(|| Error::IndexOutOfRange(format!("neuron {}", s.post)))?;
                    *v = self.overflow.add(*v, s.weight as i64);
                }
            }
        }
        state.t += 1;
        Ok(StepResult { fired, counters })
    }

    fn fetch_pointer(&self, src: Source) -> Result<PointerSlot> {
        let p = self.image.pointer(src)?;
        if !p.valid {
            return Err(Error::IndexOutOfRange(format!("{src:?} has no pointer")));
        }
        Ok(p)
    }
}

impl Backend for EventEngine {
    fn name(&self) -> &'static str {
        "engine"
    }

    fn step(&mut self, state: &mut SimState, inputs: &[u32]) -> Result<StepResult> {
        self.engine_step(state, inputs)
    }

    fn weight(&self, src: Source, post: u32) -> Option<i16> {
        self.image
            .find_synapse(src, post)
            .ok()
            .flatten()
            .map(|(_, _, s)| s.weight)
    }

    fn set_weight(&mut self, src: Source, post: u32, weight: i16) -> Result<()> {
        patch_weight_idx(&mut self.image, src, post, weight)?.ok_or_else(|| Error::NoSuchSynapse {
            pre: format!("{src:?}"),
            post: post.to_string(),
        })
    }
}
