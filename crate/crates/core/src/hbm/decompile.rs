use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::network::{BuilderSource, Network, NetworkBuilder, NeuronId, Source};

use super::{HbmImage, PointerSlot, SynapseSlot, ROWS_PER_SEGMENT, SLOTS_PER_ROW, SLOTS_PER_SEGMENT};

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptImage(msg.into())
}

/// Checks every structural invariant of an image.
///
/// Sections are ordered, disjoint and segment aligned; every source has a
/// valid pointer to a whole-segment region inside the synapse section;
/// regions are pairwise disjoint; every valid synapse slot lies inside a
/// region, sits in lane `post mod 16` and targets an existing neuron unless it
/// is a dummy.
pub fn check_invariants(image: &HbmImage) -> Result<()> {
    let g = &image.geometry;
    let mut prev_end = 0;
    for s in g.sections() {
        if s.start != prev_end {
            return Err(corrupt("sections are not contiguous and ordered"));
        }
        if s.start % ROWS_PER_SEGMENT as u64 != 0 || s.rows % ROWS_PER_SEGMENT as u64 != 0 {
            return Err(corrupt("section not aligned to segments"));
        }
        prev_end = s.end();
    }
    if g.used_rows() != image.rows.len() as u64 {
        return Err(corrupt(format!(
            "geometry covers {} rows, image holds {}",
            g.used_rows(),
            image.rows.len()
        )));
    }
    if g.used_rows() > g.capacity_rows {
        return Err(corrupt("image exceeds its capacity"));
    }

    let occupied = |section: super::Section, n: usize, what: &str| -> Result<()> {
        for i in 0..(section.rows as usize * SLOTS_PER_ROW) {
            let raw = image.rows[section.start as usize + i / SLOTS_PER_ROW][i % SLOTS_PER_ROW];
            if (raw >> 63 == 1) != (i < n) {
                return Err(corrupt(format!("{what} slot {i} occupancy mismatch")));
            }
        }
        Ok(())
    };
    occupied(g.model_section, image.num_models(), "model")?;
    occupied(g.axon_ptr_section, image.num_axons(), "axon pointer")?;
    occupied(g.neuron_ptr_section, image.num_neurons(), "neuron pointer")?;
    for m in 0..image.num_models() {
        image.model(m)?;
    }

    let syn = g.synapse_section;
    let mut regions: Vec<(PointerSlot, Source)> = Vec::with_capacity(image.num_axons() + image.num_neurons());
    for src in image.sources() {
        let p = image.pointer(src)?;
        if !p.valid {
            return Err(corrupt(format!("{src:?} has no valid pointer")));
        }
        if p.row_count == 0
            || !(p.row_count as usize).is_multiple_of(ROWS_PER_SEGMENT)
            || !(p.base_row as u64 - syn.start.min(p.base_row as u64)).is_multiple_of(ROWS_PER_SEGMENT as u64)
        {
            return Err(corrupt(format!("{src:?} region is not whole segments")));
        }
        let rows = p.rows();
        if rows.start < syn.start || rows.end > syn.end() {
            return Err(corrupt(format!("{src:?} region lies outside the synapse section")));
        }
        regions.push((p, src));
    }
    regions.sort_by_key(|(p, _)| p.base_row);
    for w in regions.windows(2) {
        if w[0].0.rows().end > w[1].0.rows().start {
            return Err(corrupt(format!("regions of {:?} and {:?} overlap", w[0].1, w[1].1)));
        }
    }

    let mut covered = vec![false; syn.rows as usize];
    for (p, src) in &regions {
        let mut seen = HashSet::new();
        for row in p.rows() {
            covered[(row - syn.start) as usize] = true;
            for (slot, &raw) in image.rows[row as usize].iter().enumerate() {
                let s = SynapseSlot::decode(raw);
                if !s.valid {
                    continue;
                }
                let lane = ((row - p.base_row as u64) as usize % ROWS_PER_SEGMENT) * SLOTS_PER_ROW + slot;
                if s.post as usize % SLOTS_PER_SEGMENT != lane {
                    return Err(corrupt(format!("synapse to {} misaligned in lane {lane}", s.post)));
                }
                if s.dummy {
                    if s.weight != 0 {
                        return Err(corrupt("dummy synapse with nonzero weight"));
                    }
                    if s.output && s.post as usize >= image.num_neurons() {
                        return Err(corrupt(format!("output flag on missing neuron {}", s.post)));
                    }
                    continue;
                }
                if s.post as usize >= image.num_neurons() {
                    return Err(corrupt(format!("synapse targets missing neuron {}", s.post)));
                }
                if !seen.insert(s.post) {
                    return Err(corrupt(format!("{src:?} has two synapses onto {}", s.post)));
                }
            }
        }
    }
    for (i, c) in covered.iter().enumerate() {
        if !c && image.rows[(syn.start as usize) + i].iter().any(|&raw| raw >> 63 == 1) {
            return Err(corrupt(format!(
                "valid slot outside any region at row {}",
                syn.start as usize + i
            )));
        }
    }
    Ok(())
}

/// Reconstructs the network an image was compiled from.
///
/// Padding and flag-carrying dummies are dropped; outputs come from the
/// output flags.
pub fn decompile(image: &HbmImage) -> Result<Network> {
    check_invariants(image)?;
    let st = &image.symtab;
    let mut b = NetworkBuilder::new().with_config(image.config);
    for (m, name) in st.model_names.iter().enumerate() {
        b.model(name, image.model(m)?);
    }
    let ids: Vec<NeuronId> = st
        .neuron_keys
        .iter()
        .enumerate()
        .map(|(i, k)| {
            let m = st.model_index_of(i as u32).expect("groups cover all neurons");
            b.add_neuron(k, &st.model_names[m])
        })
        .collect();
    let axon_ids: Vec<_> = st.axon_keys.iter().map(|k| b.add_axon(k)).collect();

    let mut outputs = Vec::new();
    for src in image.sources() {
        let from = match src {
            Source::Axon(a) => BuilderSource::Axon(axon_ids[a as usize]),
            Source::Neuron(n) => BuilderSource::Neuron(ids[n as usize]),
        };
        for row in image.pointer(src)?.rows() {
            for &raw in &image.rows[row as usize] {
                let s = SynapseSlot::decode(raw);
                if !s.valid {
                    continue;
                }
                if s.output {
                    outputs.push(s.post);
                }
                if !s.dummy {
                    b.connect(from, ids[s.post as usize], s.weight.into());
                }
            }
        }
    }
    outputs.sort_unstable();
    outputs.dedup();
    b.outputs(outputs.iter().map(|&o| st.neuron_keys[o as usize].as_str()));
    b.build().map_err(|e| corrupt(e.to_string()))
}
