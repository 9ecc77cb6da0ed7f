//! Emulated HBM routing table.
//!
//! Memory is an array of rows, each row eight 64-bit slots; two rows form a
//! 16-slot segment. The image has four sections, in order: neuron model
//! definitions, axon pointers, neuron pointers and synapses. Every section
//! starts on a segment boundary.
//!
//! Pointer `i` of a pointer section lives at slot `i mod 16` of segment
//! `i div 16`. A synapse targeting neuron `n` must sit in lane `n mod 16` of
//! its segment (see [`lane_of`]), so one segment can update up to 16 neurons
//! in parallel.
//!
//! Slot layouts (image format v1, bit 63 is the MSB):
//!
//! | slot    | fields                                                                    |
//! |---------|---------------------------------------------------------------------------|
//! | synapse | valid 63, output 62, post 40..62 (22b), weight 24..40 (i16), dummy 23     |
//! | pointer | valid 63, base_row 31..63 (32b), row_count 19..31 (12b)                   |
//! | model   | valid 63, kind 62 (1 = ANN), nu 56..62 (i6), lambda 50..56, theta 18..50  |
//!
//! Dummy synapses (padding and output-flag carriers) always have weight 0
//! and are skipped by the engine.

pub(crate) mod compile;
mod decompile;
mod file;

pub use compile::{compile, compile_with, patch_weight, place_source_synapses, Segment};
pub use decompile::{check_invariants, decompile};
pub use file::{read_image, write_image, IMAGE_MAGIC, IMAGE_VERSION};

use std::collections::HashMap;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::network::{EngineConfig, Source};
use crate::neuron::{NeuronKind, NeuronModel};

pub const SLOT_BITS: u32 = 64;
pub const SLOTS_PER_ROW: usize = 8;
pub const ROWS_PER_SEGMENT: usize = 2;
pub const SLOTS_PER_SEGMENT: usize = SLOTS_PER_ROW * ROWS_PER_SEGMENT;
/// 8 GiB of 64-byte rows.
pub const DEFAULT_CAPACITY_ROWS: u64 = (8u64 << 30) / (SLOTS_PER_ROW as u64 * 8);
pub const MAX_POST_INDEX: u32 = (1 << 22) - 1;
pub const MAX_ROW_COUNT: u32 = (1 << 12) - 1;

pub type Row = [u64; SLOTS_PER_ROW];

/// Lane a synapse onto neuron `post` must occupy within its segment.
#[inline]
pub fn lane_of(post: u32) -> usize {
    post as usize % SLOTS_PER_SEGMENT
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Section {
    pub start: u64,
    pub rows: u64,
}

impl Section {
    pub fn end(&self) -> u64 {
        self.start + self.rows
    }

    pub fn contains(&self, row: u64) -> bool {
        (self.start..self.end()).contains(&row)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HbmGeometry {
    pub capacity_rows: u64,
    pub model_section: Section,
    pub axon_ptr_section: Section,
    pub neuron_ptr_section: Section,
    pub synapse_section: Section,
}

impl HbmGeometry {
    pub fn sections(&self) -> [Section; 4] {
        [
            self.model_section,
            self.axon_ptr_section,
            self.neuron_ptr_section,
            self.synapse_section,
        ]
    }

    pub fn used_rows(&self) -> u64 {
        self.synapse_section.end()
    }
}

/// Rows needed for `n` slots, rounded up to whole segments.
pub(crate) fn section_rows(n: usize) -> u64 {
    (n.div_ceil(SLOTS_PER_SEGMENT) * ROWS_PER_SEGMENT) as u64
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SynapseSlot {
    pub valid: bool,
    pub output: bool,
    pub dummy: bool,
    pub post: u32,
    pub weight: i16,
}

impl SynapseSlot {
    pub fn real(post: u32, weight: i16) -> Self {
        Self {
            valid: true,
            output: false,
            dummy: false,
            post,
            weight,
        }
    }

    pub fn dummy(post: u32) -> Self {
        Self {
            valid: true,
            output: false,
            dummy: true,
            post,
            weight: 0,
        }
    }

    pub fn encode(&self) -> u64 {
        (self.valid as u64) << 63
            | (self.output as u64) << 62
            | (self.post as u64 & MAX_POST_INDEX as u64) << 40
            | (self.weight as u16 as u64) << 24
            | (self.dummy as u64) << 23
    }

    pub fn decode(raw: u64) -> Self {
        Self {
            valid: raw >> 63 & 1 == 1,
            output: raw >> 62 & 1 == 1,
            post: (raw >> 40) as u32 & MAX_POST_INDEX,
            weight: (raw >> 24) as u16 as i16,
            dummy: raw >> 23 & 1 == 1,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PointerSlot {
    pub valid: bool,
    pub base_row: u32,
    pub row_count: u16,
}

impl PointerSlot {
    pub fn encode(&self) -> u64 {
        (self.valid as u64) << 63 | (self.base_row as u64) << 31 | (self.row_count as u64 & MAX_ROW_COUNT as u64) << 19
    }

    pub fn decode(raw: u64) -> Self {
        Self {
            valid: raw >> 63 & 1 == 1,
            base_row: (raw >> 31) as u32,
            row_count: (raw >> 19) as u16 & MAX_ROW_COUNT as u16,
        }
    }

    pub fn rows(&self) -> Range<u64> {
        self.base_row as u64..self.base_row as u64 + self.row_count as u64
    }
}

pub fn encode_model(m: &NeuronModel) -> u64 {
    1u64 << 63
        | ((m.kind == NeuronKind::Ann) as u64) << 62
        | (m.nu as u8 as u64 & 0x3f) << 56
        | (m.lambda as u64 & 0x3f) << 50
        | (m.theta as u32 as u64) << 18
}

pub fn decode_model(raw: u64) -> Result<NeuronModel> {
    if raw >> 63 & 1 == 0 {
        return Err(Error::CorruptImage("empty model slot".into()));
    }
    // Sign-extend the 6-bit noise shift.
    let nu = (((raw >> 56) as u8 & 0x3f) << 2) as i8 >> 2;
    let lambda = (raw >> 50) as u8 & 0x3f;
    let theta = (raw >> 18) as u32 as i32;
    let m = if raw >> 62 & 1 == 1 {
        NeuronModel::ann(theta, nu)
    } else {
        NeuronModel::lif(theta, nu, lambda)
    };
    m.map_err(|e| Error::CorruptImage(e.to_string()))
}

/// Key and model bookkeeping carried alongside the rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolTable {
    pub axon_keys: Vec<String>,
    pub neuron_keys: Vec<String>,
    pub model_names: Vec<String>,
    /// Neuron index range per model; contiguous and in model order.
    pub model_groups: Vec<Range<u32>>,
    axon_index: HashMap<String, u32>,
    neuron_index: HashMap<String, u32>,
}

impl SymbolTable {
    pub fn new(
        axon_keys: Vec<String>,
        neuron_keys: Vec<String>,
        model_names: Vec<String>,
        model_groups: Vec<Range<u32>>,
    ) -> Result<Self> {
        let axon_index: HashMap<_, _> = axon_keys
            .iter()
            .enumerate()
            .map(|(i, k)| (k.clone(), i as u32))
            .collect();
        let neuron_index: HashMap<_, _> = neuron_keys
            .iter()
            .enumerate()
            .map(|(i, k)| (k.clone(), i as u32))
            .collect();
        if axon_index.len() != axon_keys.len() || neuron_index.len() != neuron_keys.len() {
            return Err(Error::CorruptImage("duplicate key in symbol table".into()));
        }
        if model_names.len() != model_groups.len() {
            return Err(Error::CorruptImage("model name/group count mismatch".into()));
        }
        let mut next = 0;
        for g in &model_groups {
            if g.start != next || g.end < g.start {
                return Err(Error::CorruptImage("model groups are not contiguous".into()));
            }
            next = g.end;
        }
        if next as usize != neuron_keys.len() {
            return Err(Error::CorruptImage("model groups do not cover all neurons".into()));
        }
        Ok(Self {
            axon_keys,
            neuron_keys,
            model_names,
            model_groups,
            axon_index,
            neuron_index,
        })
    }

    pub fn axon_idx(&self, key: &str) -> Option<u32> {
        self.axon_index.get(key).copied()
    }

    pub fn neuron_idx(&self, key: &str) -> Option<u32> {
        self.neuron_index.get(key).copied()
    }

    pub fn source_of(&self, key: &str) -> Option<Source> {
        self.axon_idx(key)
            .map(Source::Axon)
            .or_else(|| self.neuron_idx(key).map(Source::Neuron))
    }

    pub fn model_index_of(&self, neuron: u32) -> Option<usize> {
        self.model_groups.iter().position(|g| g.contains(&neuron))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HbmImage {
    pub geometry: HbmGeometry,
    pub config: EngineConfig,
    pub rows: Vec<Row>,
    pub symtab: SymbolTable,
}

impl HbmImage {
    pub fn num_axons(&self) -> usize {
        self.symtab.axon_keys.len()
    }

    pub fn num_neurons(&self) -> usize {
        self.symtab.neuron_keys.len()
    }

    pub fn num_models(&self) -> usize {
        self.symtab.model_names.len()
    }

    fn row(&self, row: u64) -> Result<&Row> {
        self.rows
            .get(row as usize)
            .ok_or_else(|| Error::IndexOutOfRange(format!("row {row} beyond image end {}", self.rows.len())))
    }

    pub fn slot(&self, row: u64, slot: usize) -> Result<u64> {
        Ok(self.row(row)?[slot])
    }

    pub fn set_slot(&mut self, row: u64, slot: usize, value: u64) {
        self.rows[row as usize][slot] = value;
    }

    /// Row and slot of a source's pointer.
    pub fn pointer_location(&self, src: Source) -> (u64, usize) {
        let (section, idx) = match src {
            Source::Axon(a) => (self.geometry.axon_ptr_section, a as usize),
            Source::Neuron(n) => (self.geometry.neuron_ptr_section, n as usize),
        };
        (section.start + (idx / SLOTS_PER_ROW) as u64, idx % SLOTS_PER_ROW)
    }

    pub fn pointer(&self, src: Source) -> Result<PointerSlot> {
        let (row, slot) = self.pointer_location(src);
        Ok(PointerSlot::decode(self.slot(row, slot)?))
    }

    pub fn model(&self, m: usize) -> Result<NeuronModel> {
        let s = self.geometry.model_section.start + (m / SLOTS_PER_ROW) as u64;
        decode_model(self.slot(s, m % SLOTS_PER_ROW)?)
    }

    pub fn sources(&self) -> impl Iterator<Item = Source> {
        (0..self.num_axons() as u32)
            .map(Source::Axon)
            .chain((0..self.num_neurons() as u32).map(Source::Neuron))
    }

    /// Locates the non-dummy synapse `src -> post`: (row, slot, decoded).
    pub fn find_synapse(&self, src: Source, post: u32) -> Result<Option<(u64, usize, SynapseSlot)>> {
        let ptr = self.pointer(src)?;
        if !ptr.valid {
            return Ok(None);
        }
        let lane = lane_of(post);
        // Only lane-aligned slots can hold the synapse: one candidate per segment.
        for seg_row in ptr.rows().step_by(ROWS_PER_SEGMENT) {
            let row = seg_row + (lane / SLOTS_PER_ROW) as u64;
            let slot = lane % SLOTS_PER_ROW;
            let s = SynapseSlot::decode(self.slot(row, slot)?);
            if s.valid && !s.dummy && s.post == post {
                return Ok(Some((row, slot, s)));
            }
        }
        Ok(None)
    }

    /// Number of occupied slots per section: (models, axon pointers, neuron pointers, synapse slots).
    pub fn occupancy(&self) -> [usize; 4] {
        let count = |sec: Section| {
            (sec.start..sec.end())
                .flat_map(|r| self.rows[r as usize])
                .filter(|&s| s >> 63 & 1 == 1)
                .count()
        };
        let g = &self.geometry;
        [
            count(g.model_section),
            count(g.axon_ptr_section),
            count(g.neuron_ptr_section),
            count(g.synapse_section),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn synapse_slot_codec(valid in any::<bool>(), output in any::<bool>(), dummy in any::<bool>(),
                              post in 0u32..=MAX_POST_INDEX, weight in any::<i16>()) {
            let s = SynapseSlot { valid, output, dummy, post, weight };
            prop_assert_eq!(SynapseSlot::decode(s.encode()), s);
        }

        #[test]
        fn pointer_slot_codec(valid in any::<bool>(), base_row in any::<u32>(), row_count in 0u16..=4095) {
            let p = PointerSlot { valid, base_row, row_count };
            prop_assert_eq!(PointerSlot::decode(p.encode()), p);
        }

        #[test]
        fn model_slot_codec(theta in any::<i32>(), nu in -32i8..=31, lambda in 0u8..=63, lif in any::<bool>()) {
            let m = if lif { NeuronModel::lif(theta, nu, lambda).unwrap() } else { NeuronModel::ann(theta, nu).unwrap() };
            prop_assert_eq!(decode_model(encode_model(&m)).unwrap(), m);
        }
    }

    #[test]
    fn default_capacity_is_eight_gib() {
        assert_eq!(DEFAULT_CAPACITY_ROWS * 64, 8 << 30);
    }
}
