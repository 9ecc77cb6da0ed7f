//! Whole-network reference step.
//!
//! Weights live in two column-compressed matrices (neurons x axons and
//! neurons x neurons). A step is the vector form of the neuron update
//! followed by two sparse matrix-vector products against the fired-axon and
//! fired-neuron indicator vectors. This is the ground truth the event engine
//! is checked against; it favours transparency over speed.
//!
//! Accumulation order is fixed: fired axons by ascending index, then fired
//! neurons by ascending index, each contribution applied with the configured
//! overflow rule. Saturation makes the order observable, so the engine
//! follows the same order.

use crate::backend::{Backend, StepResult};
use crate::cost::StepCounters;
use crate::error::{Error, Result};
use crate::network::{Network, SimState, Source};
use crate::neuron::{pre_integrate, shape_noise, NeuronModel, Overflow};

/// Column-compressed sparse matrix of `i16` weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CscMatrix {
    rows: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<u32>,
    values: Vec<i16>,
}

impl CscMatrix {
    /// Builds from per-column `(row, value)` lists sorted by row.
    pub fn from_columns<'a, I>(rows: usize, columns: I) -> Self
    where
        I: IntoIterator<Item = &'a [crate::network::Synapse]>,
    {
        let mut col_ptr = vec![0];
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        for col in columns {
            for s in col {
                row_idx.push(s.post);
                values.push(s.weight);
            }
            col_ptr.push(row_idx.len());
        }
        Self {
            rows,
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.col_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    fn find(&self, row: u32, col: usize) -> Option<usize> {
        let range = self.col_ptr[col]..self.col_ptr[col + 1];
        self.row_idx[range.clone()]
            .binary_search(&row)
            .ok()
            .map(|i| range.start + i)
    }

    /// Entry `(row, col)`, zero when absent.
    pub fn get(&self, row: u32, col: usize) -> i16 {
        self.find(row, col).map_or(0, |i| self.values[i])
    }

    pub fn contains(&self, row: u32, col: usize) -> bool {
        self.find(row, col).is_some()
    }

    /// Rewrites an existing entry; returns false if the entry is structurally absent.
    pub fn set(&mut self, row: u32, col: usize, value: i16) -> bool {
        match self.find(row, col) {
            Some(i) => {
                self.values[i] = value;
                true
            }
            None => false,
        }
    }

    /// `acc += M * x` for a 0/1 vector `x`, column by column in ascending order.
    pub fn accumulate_fired(&self, fired: &[bool], acc: &mut [i32], overflow: Overflow) {
        for (col, _) in fired.iter().enumerate().filter(|(_, &f)| f) {
            for i in self.col_ptr[col]..self.col_ptr[col + 1] {
                let r = self.row_idx[i] as usize;
                acc[r] = overflow.add(acc[r], self.values[i] as i64);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenseWeights {
    pub axon_matrix: CscMatrix,
    pub neuron_matrix: CscMatrix,
}

impl DenseWeights {
    pub fn from_network(net: &Network) -> Self {
        let n = net.num_neurons();
        Self {
            axon_matrix: CscMatrix::from_columns(n, (0..net.num_axons() as u32).map(|a| net.axon_synapses(a))),
            neuron_matrix: CscMatrix::from_columns(n, (0..n as u32).map(|i| net.neuron_synapses(i))),
        }
    }

    pub fn num_neurons(&self) -> usize {
        self.neuron_matrix.rows()
    }

    pub fn num_axons(&self) -> usize {
        self.axon_matrix.cols()
    }

    pub fn get(&self, src: Source, post: u32) -> Option<i16> {
        let (m, col) = self.column(src);
        m.contains(post, col).then(|| m.get(post, col))
    }

    fn column(&self, src: Source) -> (&CscMatrix, usize) {
        match src {
            Source::Axon(a) => (&self.axon_matrix, a as usize),
            Source::Neuron(n) => (&self.neuron_matrix, n as usize),
        }
    }
}

/// One reference timestep. `inputs` are axon indices; returns the indices of
/// every neuron that fired, ascending.
pub fn oracle_step(
    weights: &DenseWeights,
    models: &[NeuronModel],
    overflow: Overflow,
    state: &mut SimState,
    inputs: &[u32],
) -> Result<Vec<u32>> {
    let n = weights.num_neurons();
    if models.len() != n || weights.axon_matrix.rows() != n || weights.neuron_matrix.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} models for a {n}-neuron weight matrix",
            models.len()
        )));
    }
    state.check_dims(weights.num_axons(), n)?;

    // Noise for every neuron, drawn in index order.
    let noise: Vec<i64> = models.iter().map(|m| shape_noise(state.rng.draw_raw(), m.nu)).collect();

    let mut fired = Vec::new();
    for (i, (model, v)) in models.iter().zip(state.membrane.iter_mut()).enumerate() {
        let (spiked, next) = pre_integrate(model, *v, noise[i], overflow);
        *v = next;
        state.fired_neurons[i] = spiked;
        if spiked {
            fired.push(i as u32);
        }
    }

    state.fired_axons.iter_mut().for_each(|f| *f = false);
    for &a in inputs {
        let slot = state
            .fired_axons
            .get_mut(a as usize)
            .ok_or_else(|| Error::DimensionMismatch(format!("axon {a} out of range")))?;
        *slot = true;
    }

    weights
        .axon_matrix
        .accumulate_fired(&state.fired_axons, &mut state.membrane, overflow);
    weights
        .neuron_matrix
        .accumulate_fired(&state.fired_neurons, &mut state.membrane, overflow);
    state.t += 1;
    Ok(fired)
}

/// Backend wrapper around [`oracle_step`].
#[derive(Debug, Clone)]
pub struct OracleBackend {
    weights: DenseWeights,
    models: Vec<NeuronModel>,
    overflow: Overflow,
}

impl OracleBackend {
    pub fn new(net: &Network) -> Self {
        Self {
            weights: DenseWeights::from_network(net),
            models: (0..net.num_neurons() as u32).map(|i| *net.model_of(i)).collect(),
            overflow: net.config().overflow,
        }
    }

    pub fn weights(&self) -> &DenseWeights {
        &self.weights
    }
}

impl Backend for OracleBackend {
    fn name(&self) -> &'static str {
        "oracle"
    }

    fn step(&mut self, state: &mut SimState, inputs: &[u32]) -> Result<StepResult> {
        let fired = oracle_step(&self.weights, &self.models, self.overflow, state, inputs)?;
        Ok(StepResult {
            fired,
            counters: StepCounters::default(),
        })
    }

    fn weight(&self, src: Source, post: u32) -> Option<i16> {
        self.weights.get(src, post)
    }

    fn set_weight(&mut self, src: Source, post: u32, weight: i16) -> Result<()> {
        let (m, col) = match src {
            Source::Axon(a) => (&mut self.weights.axon_matrix, a as usize),
            Source::Neuron(n) => (&mut self.weights.neuron_matrix, n as usize),
        };
        if m.set(post, col, weight) {
            Ok(())
        } else {
            Err(Error::NoSuchSynapse {
                pre: format!("{src:?}"),
                post: post.to_string(),
            })
        }
    }
}
