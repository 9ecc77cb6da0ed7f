//! HBM access accounting and the energy/latency cost model.
//!
//! The engine counts row fetches. A pointer fetch is one row read per fired
//! source (no coalescing of the eight pointers sharing a row); a source's
//! synapse region costs its row count. The neuron update pass costs
//! `ceil(N / 16)` cycles per step.
//!
//! ```text
//! accesses     = pointer_row_reads + synapse_row_reads
//! total_cycles = neuron_scan_cycles + cycles_per_row * accesses
//! energy       = energy_per_access * accesses
//! latency      = clock_period * total_cycles
//! ```
//!
//! Defaults are all 1, so an unconfigured report carries raw counts.

use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepCounters {
    pub pointer_row_reads: u64,
    pub synapse_row_reads: u64,
    pub neuron_scan_cycles: u64,
}

impl StepCounters {
    pub fn hbm_accesses(&self) -> u64 {
        self.pointer_row_reads + self.synapse_row_reads
    }

    pub fn total_cycles(&self, cycles_per_row: u64) -> u64 {
        self.neuron_scan_cycles + cycles_per_row * self.hbm_accesses()
    }
}

impl Add for StepCounters {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            pointer_row_reads: self.pointer_row_reads + o.pointer_row_reads,
            synapse_row_reads: self.synapse_row_reads + o.synapse_row_reads,
            neuron_scan_cycles: self.neuron_scan_cycles + o.neuron_scan_cycles,
        }
    }
}

impl AddAssign for StepCounters {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl std::iter::Sum for StepCounters {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostConfig {
    /// Energy of one HBM row access, in µJ.
    pub energy_per_access: f64,
    pub cycles_per_row: u64,
    /// Duration of one cycle, in µs.
    pub clock_period: f64,
}

impl Default for CostConfig {
    fn default() -> Self {
        Self {
            energy_per_access: 1.0,
            cycles_per_row: 1,
            clock_period: 1.0,
        }
    }
}

impl CostConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.energy_per_access.is_finite()
            && self.energy_per_access > 0.0
            && self.clock_period.is_finite()
            && self.clock_period > 0.0
            && self.cycles_per_row > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::Parse(format!("cost constants must be positive: {self:?}")))
        }
    }

    pub fn energy(&self, c: &StepCounters) -> f64 {
        self.energy_per_access * c.hbm_accesses() as f64
    }

    pub fn latency(&self, c: &StepCounters) -> f64 {
        self.clock_period * c.total_cycles(self.cycles_per_row) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    /// Population mean and standard deviation; `None` for an empty sample.
    pub fn of(xs: &[f64]) -> Option<Self> {
        if xs.is_empty() {
            return None;
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Some(Self { mean, sd: var.sqrt() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub config: CostConfig,
    pub totals: StepCounters,
    pub total_cycles: u64,
    pub energy: f64,
    pub latency: f64,
    pub per_step: Vec<StepCounters>,
    /// Per-inference energy and latency, when the run was split into blocks.
    pub per_inference_energy: Option<MeanSd>,
    pub per_inference_latency: Option<MeanSd>,
}

impl CostReport {
    /// Aggregates per-step counters. `block_lens` gives the number of steps in
    /// each inference block and must sum to `per_step.len()` when non-empty.
    pub fn new(config: CostConfig, per_step: Vec<StepCounters>, block_lens: &[usize]) -> Self {
        let totals: StepCounters = per_step.iter().copied().sum();
        let mut energies = Vec::with_capacity(block_lens.len());
        let mut latencies = Vec::with_capacity(block_lens.len());
        let mut at = 0;
        for &len in block_lens {
            let end = (at + len).min(per_step.len());
            let block: StepCounters = per_step[at..end].iter().copied().sum();
            energies.push(config.energy(&block));
            latencies.push(config.latency(&block));
            at = end;
        }
        Self {
            total_cycles: totals.total_cycles(config.cycles_per_row),
            energy: config.energy(&totals),
            latency: config.latency(&totals),
            config,
            totals,
            per_step,
            per_inference_energy: MeanSd::of(&energies),
            per_inference_latency: MeanSd::of(&latencies),
        }
    }
}
