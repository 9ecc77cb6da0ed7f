//! Conversion of layered models (conv / max-pool / fully-connected stacks)
//! into spiking networks.
//!
//! Each layer's output cells become neurons, flattened channel-major then
//! row-major. Convolutions are unrolled: every window position gets its own
//! synapses carrying the shared kernel weights. Max pooling over binary spikes
//! is an OR: one ANN neuron with threshold 0 per pooled cell, fed by weight-1
//! synapses from its window.
//!
//! Key scheme: input axons `in:{c}:{r}:{x}`, conv and pool neurons
//! `L{l}:{c}:{r}:{x}`, fully-connected neurons `L{l}:{u}`.

mod archive;
mod bias;
mod input;
pub mod zoo;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{BuilderSource, Network, NetworkBuilder, NeuronId};
use crate::neuron::{NeuronKind, NeuronModel, NOISE_DISABLED};

pub use archive::{read_archive, write_archive, LayerEntry, Manifest, MANIFEST_FILE};
pub use bias::{AlwaysOnNeuron, BiasAxon, BiasRegistry, BiasSource, BiasStrategy, ThresholdShift};
pub use input::{axon_key, binarize_indices, binarize_input, membrane_argmax, rate_argmax, Binarize};

/// `(channels, height, width)`; serialized as a three-element array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 3]", into = "[usize; 3]")]
pub struct Shape {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl Shape {
    pub const fn new(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
        }
    }

    pub const fn size(&self) -> usize {
        self.channels * self.height * self.width
    }

    /// Flat channel-major, row-major index.
    pub const fn index(&self, c: usize, r: usize, x: usize) -> usize {
        (c * self.height + r) * self.width + x
    }
}

impl From<[usize; 3]> for Shape {
    fn from([c, h, w]: [usize; 3]) -> Self {
        Self::new(c, h, w)
    }
}

impl From<Shape> for [usize; 3] {
    fn from(s: Shape) -> Self {
        [s.channels, s.height, s.width]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LayerKind {
    Conv {
        out_channels: usize,
        kernel: (usize, usize),
        stride: usize,
        #[serde(default)]
        padding: usize,
    },
    MaxPool {
        kernel: (usize, usize),
        stride: usize,
    },
    Fc {
        out_units: usize,
    },
}

/// Neuron parameters of a layer, in real units before quantization. Missing
/// fields take the [`Default`] values: noiseless ANN with threshold 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayerNeuron {
    pub kind: NeuronKind,
    pub threshold: f64,
    pub nu: i8,
    pub lambda: u8,
}

impl Default for LayerNeuron {
    fn default() -> Self {
        Self {
            kind: NeuronKind::Ann,
            threshold: 0.0,
            nu: NOISE_DISABLED,
            lambda: 0,
        }
    }
}

/// One layer. Conv weights are laid out `[out][in][kh][kw]`, FC weights
/// `[out][in]`. Pool layers carry no weights, no bias and ignore `neuron`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub in_shape: Shape,
    pub weights: Vec<f32>,
    pub bias: Option<Vec<f32>>,
    pub neuron: LayerNeuron,
}

impl LayerSpec {
    pub fn conv(in_shape: Shape, out_channels: usize, kernel: (usize, usize), stride: usize, padding: usize) -> Self {
        Self::new(
            LayerKind::Conv {
                out_channels,
                kernel,
                stride,
                padding,
            },
            in_shape,
        )
    }

    pub fn max_pool(in_shape: Shape, kernel: (usize, usize), stride: usize) -> Self {
        Self::new(LayerKind::MaxPool { kernel, stride }, in_shape)
    }

    pub fn fc(in_shape: Shape, out_units: usize) -> Self {
        Self::new(LayerKind::Fc { out_units }, in_shape)
    }

    fn new(kind: LayerKind, in_shape: Shape) -> Self {
        Self {
            kind,
            in_shape,
            weights: Vec::new(),
            bias: None,
            neuron: LayerNeuron::default(),
        }
    }

    pub fn with_weights(mut self, weights: Vec<f32>) -> Self {
        self.weights = weights;
        self
    }

    pub fn with_bias(mut self, bias: Vec<f32>) -> Self {
        self.bias = Some(bias);
        self
    }

    pub fn with_neuron(mut self, neuron: LayerNeuron) -> Self {
        self.neuron = neuron;
        self
    }

    /// Number of unique trainable weights (biases excluded).
    pub fn param_count(&self) -> usize {
        match self.kind {
            LayerKind::Conv {
                out_channels, kernel, ..
            } => out_channels * self.in_shape.channels * kernel.0 * kernel.1,
            LayerKind::MaxPool { .. } => 0,
            LayerKind::Fc { out_units } => out_units * self.in_shape.size(),
        }
    }

    fn bias_len(&self) -> usize {
        match self.kind {
            LayerKind::Conv { out_channels, .. } => out_channels,
            LayerKind::MaxPool { .. } => 0,
            LayerKind::Fc { out_units } => out_units,
        }
    }

    pub fn out_shape(&self, layer: usize) -> Result<Shape> {
        let bad = |reason: String| Error::ShapeMismatch { layer, reason };
        let window = |kernel: (usize, usize), stride: usize, padding: usize| -> Result<Shape> {
            if kernel.0 == 0 || kernel.1 == 0 || stride == 0 {
                return Err(bad("kernel and stride must be positive".into()));
            }
            let (h, w) = (self.in_shape.height + 2 * padding, self.in_shape.width + 2 * padding);
            if h < kernel.0 || w < kernel.1 {
                return Err(bad(format!(
                    "kernel {}x{} larger than padded input {h}x{w}",
                    kernel.0, kernel.1
                )));
            }
            Ok(Shape::new(0, (h - kernel.0) / stride + 1, (w - kernel.1) / stride + 1))
        };
        match self.kind {
            LayerKind::Conv {
                out_channels,
                kernel,
                stride,
                padding,
            } => {
                if padding >= kernel.0.max(kernel.1) {
                    return Err(bad(format!("padding {padding} leaves empty windows")));
                }
                Ok(Shape {
                    channels: out_channels,
                    ..window(kernel, stride, padding)?
                })
            }
            LayerKind::MaxPool { kernel, stride } => Ok(Shape {
                channels: self.in_shape.channels,
                ..window(kernel, stride, 0)?
            }),
            LayerKind::Fc { out_units } => Ok(Shape::new(out_units, 1, 1)),
        }
    }

    /// Checks tensor lengths against the declared shapes.
    pub fn validate(&self, layer: usize) -> Result<Shape> {
        let out = self.out_shape(layer)?;
        let bad = |reason: String| Error::ShapeMismatch { layer, reason };
        if self.weights.len() != self.param_count() {
            return Err(bad(format!(
                "expected {} weights, got {}",
                self.param_count(),
                self.weights.len()
            )));
        }
        if let Some(b) = &self.bias {
            if b.len() != self.bias_len() || matches!(self.kind, LayerKind::MaxPool { .. }) {
                return Err(bad(format!("expected {} biases, got {}", self.bias_len(), b.len())));
            }
        }
        if out.size() == 0 {
            return Err(bad("layer has no outputs".into()));
        }
        Ok(out)
    }
}

/// Per-layer symmetric 16-bit quantization. Without `alpha` the scale is
/// chosen so the largest magnitude maps to 32767.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct QuantSpec {
    pub alpha: Option<f64>,
}

impl QuantSpec {
    pub const BITS: u32 = 16;

    pub fn dynamic() -> Self {
        Self { alpha: None }
    }

    pub fn fixed(alpha: f64) -> Self {
        Self { alpha: Some(alpha) }
    }
}

fn check_finite(values: &[f32]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::InvalidTensor(format!("non-finite value at index {i}"))),
        None => Ok(()),
    }
}

fn scaled(v: f64, scale: f64) -> i64 {
    (v * scale).round_ties_even().clamp(i64::MIN as f64, i64::MAX as f64) as i64
}

/// Quantizes `weights` to int16, returning the values and the scale used.
/// An all-zero tensor (with no alpha) yields zeros and scale 1.
pub fn quantize(weights: &[f32], q: &QuantSpec) -> Result<(Vec<i16>, f64)> {
    check_finite(weights)?;
    let scale = match q.alpha {
        Some(a) if a.is_finite() && a > 0.0 => a,
        Some(a) => {
            return Err(Error::InvalidTensor(format!(
                "alpha must be positive and finite, got {a}"
            )))
        }
        None => {
            let max = weights.iter().fold(0.0f64, |m, &w| m.max(f64::from(w).abs()));
            if max == 0.0 {
                1.0
            } else {
                f64::from(i16::MAX) / max
            }
        }
    };
    let values = weights
        .iter()
        .map(|&w| scaled(f64::from(w), scale).clamp(i16::MIN.into(), i16::MAX.into()) as i16)
        .collect();
    Ok((values, scale))
}

/// A synapse between flat indices of consecutive layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Wire {
    pub src: u32,
    pub dst: u32,
    pub weight: i16,
}

fn conv_geometry(spec: &LayerSpec) -> ((usize, usize), usize, usize) {
    match spec.kind {
        LayerKind::Conv {
            kernel,
            stride,
            padding,
            ..
        } => (kernel, stride, padding),
        LayerKind::MaxPool { kernel, stride } => (kernel, stride, 0),
        LayerKind::Fc { .. } => unreachable!("not a windowed layer"),
    }
}

/// Sliding-window wiring of a convolution. Windows cells falling in the
/// zero padding produce no synapse.
pub fn map_conv_layer(spec: &LayerSpec, wq: &[i16], layer: usize) -> Result<Vec<Wire>> {
    if !matches!(spec.kind, LayerKind::Conv { .. }) {
        return Err(Error::ShapeMismatch {
            layer,
            reason: "not a convolution".into(),
        });
    }
    let out = spec.out_shape(layer)?;
    let ((kh, kw), stride, pad) = conv_geometry(spec);
    let inp = spec.in_shape;
    let mut wires = Vec::new();
    for oc in 0..out.channels {
        for r in 0..out.height {
            for x in 0..out.width {
                let dst = out.index(oc, r, x) as u32;
                for ic in 0..inp.channels {
                    for kr in 0..kh {
                        for kc in 0..kw {
                            let (ir, ix) = ((r * stride + kr).wrapping_sub(pad), (x * stride + kc).wrapping_sub(pad));
                            if ir >= inp.height || ix >= inp.width {
                                continue;
                            }
                            wires.push(Wire {
                                src: inp.index(ic, ir, ix) as u32,
                                dst,
                                weight: wq[((oc * inp.channels + ic) * kh + kr) * kw + kc],
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(wires)
}

/// OR-pool wiring: weight 1 from every cell of each window, per channel.
pub fn map_pool_layer(spec: &LayerSpec, layer: usize) -> Result<Vec<Wire>> {
    if !matches!(spec.kind, LayerKind::MaxPool { .. }) {
        return Err(Error::ShapeMismatch {
            layer,
            reason: "not a pooling layer".into(),
        });
    }
    let out = spec.out_shape(layer)?;
    let ((kh, kw), stride, _) = conv_geometry(spec);
    let inp = spec.in_shape;
    let mut wires = Vec::new();
    for c in 0..out.channels {
        for r in 0..out.height {
            for x in 0..out.width {
                for kr in 0..kh {
                    for kc in 0..kw {
                        wires.push(Wire {
                            src: inp.index(c, r * stride + kr, x * stride + kc) as u32,
                            dst: out.index(c, r, x) as u32,
                            weight: 1,
                        });
                    }
                }
            }
        }
    }
    Ok(wires)
}

/// Complete bipartite wiring; source order is the flattened input.
pub fn map_fc_layer(spec: &LayerSpec, wq: &[i16], layer: usize) -> Result<Vec<Wire>> {
    let LayerKind::Fc { out_units } = spec.kind else {
        return Err(Error::ShapeMismatch {
            layer,
            reason: "not a fully-connected layer".into(),
        });
    };
    let n_in = spec.in_shape.size();
    Ok((0..out_units)
        .flat_map(|u| {
            (0..n_in).map(move |i| Wire {
                src: i as u32,
                dst: u as u32,
                weight: wq[u * n_in + i],
            })
        })
        .collect())
}

/// Neuron keys of layer `layer`, in flat index order.
pub fn layer_keys(spec: &LayerSpec, layer: usize) -> Result<Vec<String>> {
    let out = spec.out_shape(layer)?;
    Ok(match spec.kind {
        LayerKind::Fc { out_units } => (0..out_units).map(|u| format!("L{layer}:{u}")).collect(),
        _ => grid_keys(out, |c, r, x| format!("L{layer}:{c}:{r}:{x}")),
    })
}

fn grid_keys(shape: Shape, key: impl Fn(usize, usize, usize) -> String) -> Vec<String> {
    let mut keys = Vec::with_capacity(shape.size());
    for c in 0..shape.channels {
        for r in 0..shape.height {
            for x in 0..shape.width {
                keys.push(key(c, r, x));
            }
        }
    }
    keys
}

/// Axon, neuron and parameter counts; bias sources are reported separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StructuralReport {
    pub axons: usize,
    pub neurons: usize,
    pub params: usize,
    pub synapses: usize,
    pub bias_axons: usize,
    pub bias_neurons: usize,
}

impl StructuralReport {
    /// `(axons, neurons, params)` as a tuple for comparisons.
    pub fn counts(&self) -> (usize, usize, usize) {
        (self.axons, self.neurons, self.params)
    }
}

#[derive(Debug, Clone)]
pub struct Converted {
    pub network: Network,
    pub report: StructuralReport,
    /// Per-layer quantization scale (1 for pooling layers).
    pub scales: Vec<f64>,
    /// Axons the runner must fire on every step.
    pub always_on: Vec<String>,
    pub input_shape: Shape,
}

impl Converted {
    /// Inputs for one step: the frame's active axons plus the always-on axons.
    pub fn step_inputs(&self, active: &[String]) -> Vec<String> {
        active.iter().chain(&self.always_on).cloned().collect()
    }
}

/// Checks the layer chain and returns every layer's output shape.
pub fn check_chain(layers: &[LayerSpec]) -> Result<Vec<Shape>> {
    if layers.is_empty() {
        return Err(Error::ShapeMismatch {
            layer: 0,
            reason: "model has no layers".into(),
        });
    }
    let mut shapes: Vec<Shape> = Vec::with_capacity(layers.len());
    for (l, spec) in layers.iter().enumerate() {
        if let Some(prev) = shapes.last() {
            let ok = match spec.kind {
                LayerKind::Fc { .. } => spec.in_shape.size() == prev.size(),
                _ => spec.in_shape == *prev,
            };
            if !ok {
                return Err(Error::ShapeMismatch {
                    layer: l,
                    reason: format!(
                        "input shape {:?} does not match previous output {:?}",
                        spec.in_shape, prev
                    ),
                });
            }
        }
        shapes.push(spec.validate(l)?);
    }
    Ok(shapes)
}

/// Counts implied by the layer shapes alone: input cells, output cells of
/// every layer, and kernel or matrix sizes.
pub fn closed_form_counts(layers: &[LayerSpec]) -> Result<(usize, usize, usize)> {
    let shapes = check_chain(layers)?;
    Ok((
        layers[0].in_shape.size(),
        shapes.iter().map(Shape::size).sum(),
        layers.iter().map(LayerSpec::param_count).sum(),
    ))
}

fn layer_model(spec: &LayerSpec, theta: i64, layer: usize) -> Result<NeuronModel> {
    let theta = i32::try_from(theta).map_err(|_| Error::InvalidModel {
        name: format!("L{layer}"),
        reason: format!("quantized threshold {theta} does not fit 32 bits"),
    })?;
    let n = spec.neuron;
    match n.kind {
        NeuronKind::Lif => NeuronModel::lif(theta, n.nu, n.lambda),
        NeuronKind::Ann => NeuronModel::ann(theta, n.nu),
    }
}

/// Converts a layer stack into a network. The last layer's neurons are the
/// outputs.
pub fn convert_model(layers: &[LayerSpec], q: &QuantSpec, bias: &dyn BiasStrategy) -> Result<Converted> {
    let shapes = check_chain(layers)?;
    let input_shape = layers[0].in_shape;
    let mut b = NetworkBuilder::new();
    let mut sources: Vec<BuilderSource> = grid_keys(input_shape, axon_key)
        .iter()
        .map(|k| BuilderSource::Axon(b.add_axon(k)))
        .collect();
    let mut report = StructuralReport {
        axons: sources.len(),
        ..Default::default()
    };
    let mut scales = Vec::with_capacity(layers.len());
    let mut always_on = Vec::new();
    let mut last_keys = Vec::new();
    for (l, spec) in layers.iter().enumerate() {
        let keys = layer_keys(spec, l)?;
        let per_cell = shapes[l].size() / spec.bias_len().max(1);
        let (wires, thetas, biases, scale) = if matches!(spec.kind, LayerKind::MaxPool { .. }) {
            (map_pool_layer(spec, l)?, vec![0i64; keys.len()], Vec::new(), 1.0)
        } else {
            let (wq, scale) = quantize(&spec.weights, q)?;
            let wires = match spec.kind {
                LayerKind::Conv { .. } => map_conv_layer(spec, &wq, l)?,
                _ => map_fc_layer(spec, &wq, l)?,
            };
            if !spec.neuron.threshold.is_finite() {
                return Err(Error::InvalidTensor(format!("layer {l} threshold is not finite")));
            }
            let theta = scaled(spec.neuron.threshold, scale);
            let biases: Vec<i64> = match &spec.bias {
                Some(bv) => {
                    check_finite(bv)?;
                    (0..keys.len())
                        .map(|i| scaled(f64::from(bv[i / per_cell]), scale))
                        .collect()
                }
                None => Vec::new(),
            };
            let thetas = (0..keys.len())
                .map(|i| bias.threshold(theta, biases.get(i).copied().unwrap_or(0)))
                .collect();
            (wires, thetas, biases, scale)
        };
        scales.push(scale);

        let uniform = thetas.iter().all(|&t| t == thetas[0]);
        let ids: Vec<NeuronId> = keys
            .iter()
            .zip(&thetas)
            .map(|(key, &t)| {
                let name = if uniform { format!("L{l}") } else { format!("L{l}:t{t}") };
                if !b.has_model(&name) {
                    let model = if matches!(spec.kind, LayerKind::MaxPool { .. }) {
                        NeuronModel::ann(0, NOISE_DISABLED)
                    } else {
                        layer_model(spec, t, l)
                    }?;
                    b.model(&name, model);
                }
                Ok(b.add_neuron(key, &name))
            })
            .collect::<Result<_>>()?;
        for w in wires {
            b.connect(sources[w.src as usize], ids[w.dst as usize], w.weight.into());
        }
        if !biases.is_empty() {
            match bias.attach(&mut b, l, &ids, &biases)? {
                Some(BiasSource::Axon(k)) => {
                    report.bias_axons += 1;
                    always_on.push(k);
                }
                Some(BiasSource::Neuron(_)) => report.bias_neurons += 1,
                None => {}
            }
        }
        report.neurons += ids.len();
        report.params += spec.weights.len();
        sources = ids.into_iter().map(BuilderSource::Neuron).collect();
        last_keys = keys;
    }
    b.outputs(&last_keys);
    let network = b.build()?;
    report.synapses = network.num_synapses();
    debug_assert_eq!(network.num_axons(), report.axons + report.bias_axons);
    debug_assert_eq!(network.num_neurons(), report.neurons + report.bias_neurons);
    Ok(Converted {
        network,
        report,
        scales,
        always_on,
        input_shape,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::Session;

    fn no_bias() -> ThresholdShift {
        ThresholdShift
    }

    #[test]
    fn quantize_examples() {
        let (q, s) = quantize(&[-1.0, 0.5, 1.0], &QuantSpec::dynamic()).unwrap();
        assert_eq!(q, vec![-32767, 16384, 32767]);
        assert_eq!(s, 32767.0);
        assert_eq!(quantize(&[0.0; 4], &QuantSpec::dynamic()).unwrap(), (vec![0; 4], 1.0));
        let ints: Vec<f32> = (-100..=100).map(|v| v as f32).collect();
        let (q, _) = quantize(&ints, &QuantSpec::fixed(1.0)).unwrap();
        assert_eq!(q, (-100..=100).collect::<Vec<i16>>());
        assert_eq!(quantize(&[1e6], &QuantSpec::fixed(1.0)).unwrap().0, vec![i16::MAX]);
        assert!(quantize(&[f32::NAN], &QuantSpec::dynamic()).is_err());
        assert!(quantize(&[1.0], &QuantSpec::fixed(0.0)).is_err());
    }

    #[test]
    fn conv_output_size_and_fan_in() {
        let spec = LayerSpec::conv(Shape::new(1, 28, 28), 6, (5, 5), 2, 0).with_weights(vec![1.0; 150]);
        assert_eq!(spec.out_shape(0).unwrap(), Shape::new(6, 12, 12));
        let wires = map_conv_layer(&spec, &[1; 150], 0).unwrap();
        assert_eq!(wires.len(), 864 * 25);
        let dst = Shape::new(6, 12, 12).index(0, 5, 5) as u32;
        assert_eq!(wires.iter().filter(|w| w.dst == dst).count(), 25);
    }

    #[test]
    fn unit_kernel_is_identity() {
        let spec = LayerSpec::conv(Shape::new(1, 4, 3), 1, (1, 1), 1, 0);
        let wires = map_conv_layer(&spec, &[7], 0).unwrap();
        assert_eq!(wires.len(), 12);
        assert!(wires.iter().all(|w| w.src == w.dst && w.weight == 7));
    }

    #[test]
    fn padding_skips_outside_cells() {
        let spec = LayerSpec::conv(Shape::new(1, 3, 3), 1, (3, 3), 1, 1);
        assert_eq!(spec.out_shape(0).unwrap(), Shape::new(1, 3, 3));
        let wires = map_conv_layer(&spec, &[1; 9], 0).unwrap();
        let corner = wires.iter().filter(|w| w.dst == 0).count();
        assert_eq!(corner, 4);
        assert_eq!(wires.iter().filter(|w| w.dst == 4).count(), 9);
    }

    #[test]
    fn fc_single_weight() {
        let spec = LayerSpec::fc(Shape::new(1, 1, 1), 1).with_weights(vec![0.25]);
        let c = convert_model(&[spec], &QuantSpec::fixed(8.0), &no_bias()).unwrap();
        assert_eq!(c.network.read_synapse("in:0:0:0", "L0:0").unwrap(), 2);
        assert_eq!(c.report.counts(), (1, 1, 1));
    }

    #[test]
    fn pool_window_examples() {
        let pool = LayerSpec::max_pool(Shape::new(1, 2, 2), (2, 2), 2);
        let c = convert_model(&[pool], &QuantSpec::dynamic(), &no_bias()).unwrap();
        let mut s = Session::with_backend(c.network, "oracle", 0).unwrap();
        s.step::<&str>(&[]).unwrap();
        assert!(s.step::<&str>(&[]).unwrap().is_empty());
        s.step(&["in:0:1:0"]).unwrap();
        assert_eq!(s.step::<&str>(&[]).unwrap(), vec!["L0:0:0:0"]);
    }

    #[test]
    fn chain_errors_name_the_layer() {
        let a = LayerSpec::fc(Shape::new(4, 1, 1), 3).with_weights(vec![0.0; 12]);
        let b = LayerSpec::fc(Shape::new(5, 1, 1), 2).with_weights(vec![0.0; 10]);
        let err = convert_model(&[a.clone(), b], &QuantSpec::dynamic(), &no_bias()).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch { layer: 1, .. }), "{err}");
        let short = LayerSpec::fc(Shape::new(4, 1, 1), 3).with_weights(vec![0.0; 11]);
        assert!(matches!(
            check_chain(&[short]),
            Err(Error::ShapeMismatch { layer: 0, .. })
        ));
        let big = LayerSpec::conv(Shape::new(1, 2, 2), 1, (3, 3), 1, 0).with_weights(vec![0.0; 9]);
        assert!(check_chain(&[big]).is_err());
        assert!(check_chain(&[]).is_err());
        let flat = LayerSpec::fc(Shape::new(1, 3, 1), 2).with_weights(vec![0.0; 6]);
        assert!(check_chain(&[a, flat]).is_ok());
    }

    #[test]
    fn threshold_is_scaled_with_weights() {
        let spec = LayerSpec::fc(Shape::new(2, 1, 1), 1)
            .with_weights(vec![0.5, -0.25])
            .with_neuron(LayerNeuron {
                threshold: 0.3,
                ..Default::default()
            });
        let c = convert_model(&[spec], &QuantSpec::fixed(100.0), &no_bias()).unwrap();
        assert_eq!(c.network.models()[0].model.theta, 30);
        assert_eq!(c.scales, vec![100.0]);
    }
}
