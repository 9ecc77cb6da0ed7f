//! Input binarization and output readouts.

use super::Shape;
use crate::error::{Error, Result};

/// Key of the input axon at `(channel, row, column)`.
pub fn axon_key(c: usize, r: usize, x: usize) -> String {
    format!("in:{c}:{r}:{x}")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Binarize {
    /// A cell is active when its value exceeds the threshold.
    Threshold(f32),
    /// Each channel becomes `bits` binary channels holding the bits of the
    /// value quantized over `[0, max]`, most significant first. Channel `c`
    /// maps to channels `c * bits .. (c + 1) * bits`.
    BitSlice { bits: u8, max: f32 },
}

impl Binarize {
    /// Shape of the axon grid produced from a frame of shape `frame`.
    pub fn grid_shape(&self, frame: Shape) -> Shape {
        match *self {
            Binarize::Threshold(_) => frame,
            Binarize::BitSlice { bits, .. } => Shape {
                channels: frame.channels * bits as usize,
                ..frame
            },
        }
    }
}

/// Flat indices of active axons, ascending.
pub fn binarize_indices(frame: &[f32], shape: Shape, policy: Binarize) -> Result<Vec<usize>> {
    if frame.len() != shape.size() {
        return Err(Error::ShapeMismatch {
            layer: 0,
            reason: format!(
                "frame has {} values, shape {:?} needs {}",
                frame.len(),
                shape,
                shape.size()
            ),
        });
    }
    let plane = shape.height * shape.width;
    Ok(match policy {
        Binarize::Threshold(t) => (0..frame.len()).filter(|&i| frame[i] > t).collect(),
        Binarize::BitSlice { bits, max } => {
            if bits == 0 || bits > 16 || max.is_nan() || max <= 0.0 {
                return Err(Error::InvalidTensor(format!(
                    "bad bit-slice policy: {bits} bits over [0, {max}]"
                )));
            }
            let levels = (1u32 << bits) - 1;
            let mut out = Vec::new();
            for c in 0..shape.channels {
                for b in 0..bits as usize {
                    let bit = bits as usize - 1 - b;
                    for p in 0..plane {
                        let v = frame[c * plane + p];
                        let q = ((v / max).clamp(0.0, 1.0) * levels as f32).round() as u32;
                        if q >> bit & 1 == 1 {
                            out.push((c * bits as usize + b) * plane + p);
                        }
                    }
                }
            }
            out
        }
    })
}

/// Keys of active axons for `frame` under `policy`.
pub fn binarize_input(frame: &[f32], shape: Shape, policy: Binarize) -> Result<Vec<String>> {
    let grid = policy.grid_shape(shape);
    let plane = grid.height * grid.width;
    Ok(binarize_indices(frame, shape, policy)?
        .into_iter()
        .map(|i| axon_key(i / plane, i % plane / grid.width, i % grid.width))
        .collect())
}

fn argmax<T: PartialOrd + Copy>(values: &[T]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        if best.is_none_or(|b| *v > values[b]) {
            best = Some(i);
        }
    }
    best
}

/// Index of the highest membrane potential; ties go to the lowest index.
pub fn membrane_argmax(membranes: &[i32]) -> Option<usize> {
    argmax(membranes)
}

/// Index of the highest spike count; ties go to the lowest index.
pub fn rate_argmax(counts: &[u64]) -> Option<usize> {
    argmax(counts)
}
