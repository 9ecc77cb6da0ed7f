//! Reference architectures with seeded random weights, uniform in [-1, 1].

use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

use super::{LayerSpec, Shape};

fn random(rng: &mut SplitMix64, n: usize) -> Vec<f32> {
    (0..n).map(|_| rng.random_range(-1.0f32..=1.0)).collect()
}

fn fill(layers: Vec<LayerSpec>, seed: u64) -> Vec<LayerSpec> {
    let mut rng = SplitMix64::seed_from_u64(seed);
    layers
        .into_iter()
        .map(|l| {
            let n = l.param_count();
            l.with_weights(random(&mut rng, n))
        })
        .collect()
}

/// Fully-connected stack over a flat input; `widths[0]` is the input size.
pub fn mlp(widths: &[usize], seed: u64) -> Vec<LayerSpec> {
    fill(
        widths
            .windows(2)
            .map(|w| LayerSpec::fc(Shape::new(w[0], 1, 1), w[1]))
            .collect(),
        seed,
    )
}

/// MNIST MLP over a 28x28 image: 784 -> 128 -> 10.
pub fn mlp_128_10(seed: u64) -> Vec<LayerSpec> {
    let mut layers = mlp(&[784, 128, 10], seed);
    layers[0].in_shape = Shape::new(1, 28, 28);
    layers
}

/// MNIST MLP over a 28x28 image: 784 -> 2000 -> 1000 -> 10.
pub fn mlp_2k_1k_10(seed: u64) -> Vec<LayerSpec> {
    let mut layers = mlp(&[784, 2000, 1000, 10], seed);
    layers[0].in_shape = Shape::new(1, 28, 28);
    layers
}

fn fc_head(in_shape: Shape, units: &[usize]) -> Vec<LayerSpec> {
    let mut prev = in_shape;
    units
        .iter()
        .map(|&u| {
            let l = LayerSpec::fc(prev, u);
            prev = Shape::new(u, 1, 1);
            l
        })
        .collect()
}

/// LeNet-5 with stride-2 convolutions in place of pooling.
pub fn lenet5_stride2(seed: u64) -> Vec<LayerSpec> {
    let mut layers = vec![
        LayerSpec::conv(Shape::new(1, 28, 28), 6, (5, 5), 2, 0),
        LayerSpec::conv(Shape::new(6, 12, 12), 16, (5, 5), 2, 0),
    ];
    layers.extend(fc_head(Shape::new(16, 4, 4), &[120, 84, 10]));
    fill(layers, seed)
}

/// LeNet-5 with valid convolutions each followed by 2x2 max pooling.
pub fn lenet5_maxpool(seed: u64) -> Vec<LayerSpec> {
    let mut layers = vec![
        LayerSpec::conv(Shape::new(1, 28, 28), 6, (5, 5), 1, 0),
        LayerSpec::max_pool(Shape::new(6, 24, 24), (2, 2), 2),
        LayerSpec::conv(Shape::new(6, 12, 12), 16, (5, 5), 1, 0),
        LayerSpec::max_pool(Shape::new(16, 8, 8), (2, 2), 2),
    ];
    layers.extend(fc_head(Shape::new(16, 4, 4), &[120, 84, 10]));
    fill(layers, seed)
}

/// Gesture classifier on 2x63x63 event frames: one 5x5 stride-2 conv to a
/// single feature map, then three fully-connected layers.
pub fn dvs_c1_3fc(seed: u64) -> Vec<LayerSpec> {
    let mut layers = vec![LayerSpec::conv(Shape::new(2, 63, 63), 1, (5, 5), 2, 0)];
    layers.extend(fc_head(Shape::new(1, 30, 30), &[120, 84, 11]));
    fill(layers, seed)
}
