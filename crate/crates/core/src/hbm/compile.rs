use crate::error::{Error, Result};
use crate::network::{Network, Source, Synapse};

use super::{
    encode_model, lane_of, section_rows, HbmGeometry, HbmImage, PointerSlot, Row, Section, SymbolTable, SynapseSlot,
    DEFAULT_CAPACITY_ROWS, MAX_POST_INDEX, MAX_ROW_COUNT, ROWS_PER_SEGMENT, SLOTS_PER_ROW, SLOTS_PER_SEGMENT,
};

/// One 16-lane segment of a synapse region. Empty lanes are invalid slots.
pub type Segment = [SynapseSlot; SLOTS_PER_SEGMENT];

fn padding_segment() -> Segment {
    std::array::from_fn(|lane| SynapseSlot::dummy(lane as u32))
}

/// Lays out one source's synapses as lane-aligned segments.
///
/// Greedy first-fit in ascending postsynaptic order: each synapse goes to the
/// first segment whose lane is free. The segment count equals the largest
/// number of targets sharing a lane, the minimum for a fixed neuron indexing.
/// A source without synapses gets one segment of 16 zero-weight dummies.
pub fn place_source_synapses(targets: &[Synapse], max_fan_out: usize) -> Result<Vec<Segment>> {
    if targets.len() > max_fan_out {
        return Err(Error::FanOutExceeded {
            source_key: String::new(),
            fan_out: targets.len(),
            limit: max_fan_out,
        });
    }
    if targets.is_empty() {
        return Ok(vec![padding_segment()]);
    }
    let mut sorted = targets.to_vec();
    sorted.sort_by_key(|s| s.post);
    let mut segments: Vec<Segment> = Vec::new();
    let mut depth = [0usize; SLOTS_PER_SEGMENT];
    for s in sorted {
        let lane = lane_of(s.post);
        let seg = depth[lane];
        depth[lane] += 1;
        if seg == segments.len() {
            segments.push([SynapseSlot::default(); SLOTS_PER_SEGMENT]);
        }
        segments[seg][lane] = SynapseSlot::real(s.post, s.weight);
    }
    Ok(segments)
}

pub fn compile(net: &Network) -> Result<HbmImage> {
    compile_with(net, DEFAULT_CAPACITY_ROWS)
}

/// Compiles a validated network into an image with the given row capacity.
pub fn compile_with(net: &Network, capacity_rows: u64) -> Result<HbmImage> {
    let n_axons = net.num_axons();
    let n_neurons = net.num_neurons();
    if n_neurons > MAX_POST_INDEX as usize + 1 {
        return Err(Error::CapacityExceeded(format!(
            "{n_neurons} neurons exceed the 22-bit neuron index"
        )));
    }

    let sources: Vec<Source> = (0..n_axons as u32)
        .map(Source::Axon)
        .chain((0..n_neurons as u32).map(Source::Neuron))
        .collect();

    let mut regions = Vec::with_capacity(sources.len());
    // First real synapse onto each neuron, in compile order: (region, segment).
    let mut first_inbound: Vec<Option<(usize, usize)>> = vec![None; n_neurons];
    for (r, &src) in sources.iter().enumerate() {
        let segs = place_source_synapses(net.synapses(src), net.config().max_fan_out).map_err(|e| match e {
            Error::FanOutExceeded { fan_out, limit, .. } => Error::FanOutExceeded {
                source_key: net.source_key(src).to_string(),
                fan_out,
                limit,
            },
            e => e,
        })?;
        for (si, seg) in segs.iter().enumerate() {
            for slot in seg.iter().filter(|s| s.valid && !s.dummy) {
                first_inbound[slot.post as usize].get_or_insert((r, si));
            }
        }
        regions.push(segs);
    }

    for &out in net.outputs() {
        let lane = lane_of(out);
        if let Some((r, si)) = first_inbound[out as usize] {
            regions[r][si][lane].output = true;
            continue;
        }
        // No inbound synapse: carry the flag on a dummy in the neuron's own region.
        let own = &mut regions[n_axons + out as usize];
        let flag = SynapseSlot {
            output: true,
            ..SynapseSlot::dummy(out)
        };
        match own
            .iter_mut()
            .find(|seg| !seg[lane].valid || (seg[lane].dummy && !seg[lane].output))
        {
            Some(seg) => seg[lane] = flag,
            None => {
                let mut seg = [SynapseSlot::default(); SLOTS_PER_SEGMENT];
                seg[lane] = flag;
                own.push(seg);
            }
        }
    }

    let model_section = Section {
        start: 0,
        rows: section_rows(net.models().len()),
    };
    let axon_ptr_section = Section {
        start: model_section.end(),
        rows: section_rows(n_axons),
    };
    let neuron_ptr_section = Section {
        start: axon_ptr_section.end(),
        rows: section_rows(n_neurons),
    };
    let synapse_rows: u64 = regions.iter().map(|r| (r.len() * ROWS_PER_SEGMENT) as u64).sum();
    let synapse_section = Section {
        start: neuron_ptr_section.end(),
        rows: synapse_rows,
    };
    let geometry = HbmGeometry {
        capacity_rows,
        model_section,
        axon_ptr_section,
        neuron_ptr_section,
        synapse_section,
    };
    let used = geometry.used_rows();
    if used > capacity_rows {
        return Err(Error::CapacityExceeded(format!(
            "image needs {used} rows, capacity is {capacity_rows}"
        )));
    }
    if used > u32::MAX as u64 {
        return Err(Error::CapacityExceeded(format!(
            "{used} rows exceed the 32-bit base row"
        )));
    }

    let mut rows: Vec<Row> = vec![[0; SLOTS_PER_ROW]; used as usize];
    let mut put = |row: u64, slot: usize, v: u64| rows[row as usize][slot] = v;

    for (m, def) in net.models().iter().enumerate() {
        put(
            model_section.start + (m / SLOTS_PER_ROW) as u64,
            m % SLOTS_PER_ROW,
            encode_model(&def.model),
        );
    }

    let mut next_row = synapse_section.start;
    for (r, (&src, segs)) in sources.iter().zip(&regions).enumerate() {
        let row_count = (segs.len() * ROWS_PER_SEGMENT) as u64;
        if row_count > MAX_ROW_COUNT as u64 {
            return Err(Error::CapacityExceeded(format!(
                "region of `{}` needs {row_count} rows, a pointer addresses at most {MAX_ROW_COUNT}",
                net.source_key(src)
            )));
        }
        let ptr = PointerSlot {
            valid: true,
            base_row: next_row as u32,
            row_count: row_count as u16,
        };
        let (section, idx) = if r < n_axons {
            (axon_ptr_section, r)
        } else {
            (neuron_ptr_section, r - n_axons)
        };
        put(
            section.start + (idx / SLOTS_PER_ROW) as u64,
            idx % SLOTS_PER_ROW,
            ptr.encode(),
        );
        for seg in segs {
            for (lane, s) in seg.iter().enumerate().filter(|(_, s)| s.valid) {
                put(
                    next_row + (lane / SLOTS_PER_ROW) as u64,
                    lane % SLOTS_PER_ROW,
                    s.encode(),
                );
            }
            next_row += ROWS_PER_SEGMENT as u64;
        }
    }

    let symtab = SymbolTable::new(
        net.axon_keys().to_vec(),
        net.neuron_keys().to_vec(),
        net.models().iter().map(|m| m.name.clone()).collect(),
        net.model_groups().to_vec(),
    )?;
    Ok(HbmImage {
        geometry,
        config: *net.config(),
        rows,
        symtab,
    })
}

/// Rewrites the weight field of an existing synapse slot in place.
pub fn patch_weight(image: &mut HbmImage, pre: &str, post: &str, weight: i16) -> Result<()> {
    let missing = || Error::NoSuchSynapse {
        pre: pre.to_string(),
        post: post.to_string(),
    };
    let src = image.symtab.source_of(pre).ok_or_else(missing)?;
    let post_idx = image.symtab.neuron_idx(post).ok_or_else(missing)?;
    patch_weight_idx(image, src, post_idx, weight)?.ok_or_else(missing)
}

pub(crate) fn patch_weight_idx(image: &mut HbmImage, src: Source, post: u32, weight: i16) -> Result<Option<()>> {
    let Some((row, slot, s)) = image.find_synapse(src, post)? else {
        return Ok(None);
    };
    image.set_slot(row, slot, SynapseSlot { weight, ..s }.encode());
    Ok(Some(()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::example_network;

    fn syn(posts: &[u32]) -> Vec<Synapse> {
        posts.iter().map(|&post| Synapse { post, weight: 1 }).collect()
    }

    #[test]
    fn placement_examples() {
        let full = place_source_synapses(&syn(&(0..16).collect::<Vec<_>>()), 4096).unwrap();
        assert_eq!(full.len(), 1);
        assert!(full[0].iter().all(|s| s.valid && !s.dummy));

        let collide = place_source_synapses(&syn(&[0, 16]), 4096).unwrap();
        assert_eq!(collide.len(), 2);
        assert_eq!((collide[0][0].post, collide[1][0].post), (0, 16));

        let lane1 = place_source_synapses(&syn(&[33, 1, 17]), 4096).unwrap();
        assert_eq!(lane1.len(), 3);
        for (i, seg) in lane1.iter().enumerate() {
            assert_eq!(seg[1].post, 1 + 16 * i as u32);
            assert_eq!(seg.iter().filter(|s| s.valid).count(), 1);
        }

        let pad = place_source_synapses(&[], 4096).unwrap();
        assert_eq!(pad.len(), 1);
        assert!(pad[0].iter().all(|s| s.valid && s.dummy && s.weight == 0));

        let one = place_source_synapses(&syn(&[5]), 4096).unwrap();
        assert_eq!(one.len(), 1);
        assert!(one[0][5].valid);
        assert_eq!(one[0].iter().filter(|s| s.valid).count(), 1);

        assert!(matches!(
            place_source_synapses(&syn(&[1, 2]), 1),
            Err(Error::FanOutExceeded { fan_out: 2, .. })
        ));
    }

    #[test]
    fn example_network_layout() {
        let net = example_network();
        let img = compile(&net).unwrap();
        let [models, axon_ptrs, neuron_ptrs, _] = img.occupancy();
        assert_eq!((models, axon_ptrs, neuron_ptrs), (3, 2, 4));
        assert_eq!(img.symtab.model_groups, [0..2, 2..3, 3..4]);
        // alpha, beta, a, d each fit in one segment; b and c are padding.
        for src in img.sources() {
            assert_eq!(img.pointer(src).unwrap().row_count, 2, "{src:?}");
        }
        let b_region = img.pointer(Source::Neuron(1)).unwrap();
        let pad: Vec<_> = b_region
            .rows()
            .flat_map(|r| img.rows[r as usize])
            .map(SynapseSlot::decode)
            .collect();
        assert!(pad.iter().all(|s| s.valid && s.dummy && s.weight == 0));
        // a is flagged through alpha -> a, b through beta -> b.
        let (_, _, s) = img.find_synapse(Source::Axon(0), 0).unwrap().unwrap();
        assert!(s.output);
        let (_, _, s) = img.find_synapse(Source::Axon(1), 1).unwrap().unwrap();
        assert!(s.output);
    }

    #[test]
    fn flag_without_inbound_synapse() {
        let mut b = crate::network::NetworkBuilder::new();
        b.model("m", crate::neuron::NeuronModel::ann(0, -17).unwrap())
            .neuron("lonely", "m", [("other", 4)])
            .neuron("other", "m", Vec::<(&str, i64)>::new())
            .outputs(["lonely"]);
        let net = b.build().unwrap();
        let img = compile(&net).unwrap();
        let p = img.pointer(Source::Neuron(0)).unwrap();
        let slots: Vec<_> = p
            .rows()
            .flat_map(|r| img.rows[r as usize])
            .map(SynapseSlot::decode)
            .collect();
        // lane 0 is free in the single segment, so the flag lands there.
        assert_eq!(p.row_count, 2);
        assert!(slots[0].output && slots[0].dummy && slots[0].post == 0);
        assert!(slots[1].valid && !slots[1].dummy && slots[1].weight == 4);
    }

    #[test]
    fn patching() {
        let mut img = compile(&example_network()).unwrap();
        let before = img.clone();
        patch_weight(&mut img, "a", "b", 2).unwrap();
        assert_eq!(img.find_synapse(Source::Neuron(0), 1).unwrap().unwrap().2.weight, 2);
        let changed: Vec<_> = img
            .rows
            .iter()
            .flatten()
            .zip(before.rows.iter().flatten())
            .filter(|(a, b)| a != b)
            .collect();
        assert_eq!(changed.len(), 1);

        let snapshot = img.clone();
        patch_weight(&mut img, "a", "b", 2).unwrap();
        assert_eq!(img, snapshot);
        assert!(matches!(
            patch_weight(&mut img, "b", "a", 1),
            Err(Error::NoSuchSynapse { .. })
        ));
        assert!(matches!(
            patch_weight(&mut img, "q", "a", 1),
            Err(Error::NoSuchSynapse { .. })
        ));
    }

    #[test]
    fn capacity_limits() {
        let net = example_network();
        assert!(matches!(compile_with(&net, 4), Err(Error::CapacityExceeded(_))));
        let img = compile(&net).unwrap();
        assert!(compile_with(&net, img.geometry.used_rows()).is_ok());
    }
}
