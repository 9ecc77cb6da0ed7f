//! Integer neuron dynamics.
//!
//! One timestep of a neuron runs in a fixed order: add noise, threshold and
//! reset, leak (LIF) or clear (ANN), then integrate the synaptic input that
//! arrived this step. Every quantity is an integer; potentials are `i32`.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Noise shifts at or below this value disable noise entirely.
pub const NOISE_DISABLED: i8 = -17;
pub const NU_MIN: i8 = -32;
pub const NU_MAX: i8 = 31;
pub const LAMBDA_MAX: u8 = 63;

/// Raw noise draws live in `[-2^16, 2^16)`.
pub const NOISE_HALF_RANGE: i64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NeuronKind {
    Lif,
    Ann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NeuronModel {
    pub kind: NeuronKind,
    pub theta: i32,
    pub nu: i8,
    /// Leak shift. Always 0 for ANN models.
    pub lambda: u8,
}

impl NeuronModel {
    pub fn lif(theta: i32, nu: i8, lambda: u8) -> Result<Self> {
        check_nu(nu)?;
        if lambda > LAMBDA_MAX {
            return Err(Error::InvalidModel {
                name: "lif".into(),
                reason: format!("lambda {lambda} exceeds {LAMBDA_MAX}"),
            });
        }
        Ok(Self {
            kind: NeuronKind::Lif,
            theta,
            nu,
            lambda,
        })
    }

    pub fn ann(theta: i32, nu: i8) -> Result<Self> {
        check_nu(nu)?;
        Ok(Self {
            kind: NeuronKind::Ann,
            theta,
            nu,
            lambda: 0,
        })
    }

    pub fn is_noisy(&self) -> bool {
        self.nu > NOISE_DISABLED
    }
}

fn check_nu(nu: i8) -> Result<()> {
    if !(NU_MIN..=NU_MAX).contains(&nu) {
        return Err(Error::InvalidModel {
            name: "nu".into(),
            reason: format!("noise shift {nu} outside [{NU_MIN}, {NU_MAX}]"),
        });
    }
    Ok(())
}

/// How membrane arithmetic behaves at the 32-bit bounds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Overflow {
    #[default]
    Saturate,
    Wrap,
}

impl Overflow {
    #[inline]
    pub fn add(self, v: i32, x: i64) -> i32 {
        let sum = v as i64 + x;
        match self {
            Overflow::Saturate => sum.clamp(i32::MIN as i64, i32::MAX as i64) as i32,
            Overflow::Wrap => sum as i32,
        }
    }
}

/// Noise source shared by every backend.
///
/// SplitMix64, one 64-bit draw per neuron per timestep in ascending neuron
/// order, reduced modulo 2^17 and offset into `[-2^16, 2^16)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoiseRng {
    seed: u64,
    inner: SplitMix64,
}

impl NoiseRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: SplitMix64::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Draws one raw sample from `[-2^16, 2^16)`.
    #[inline]
    pub fn draw_raw(&mut self) -> i32 {
        let u = self.inner.next_u64() % (2 * NOISE_HALF_RANGE as u64);
        (u as i64 - NOISE_HALF_RANGE) as i32
    }
}

/// Shapes a raw draw by the model's noise shift.
///
/// The LSB is forced to one before shifting, so a right shift may clear it
/// again. `nu <= -17` yields exactly zero.
#[inline]
pub fn shape_noise(raw: i32, nu: i8) -> i64 {
    if nu <= NOISE_DISABLED {
        return 0;
    }
    let r = (raw | 1) as i64;
    match nu {
        n if n > 0 => r << n,
        n if n < 0 => r >> (-n),
        _ => r,
    }
}

/// Draws and shapes one noise sample; the stream always advances by one draw.
pub fn noise_sample(nu: i8, rng: &mut NoiseRng) -> i64 {
    shape_noise(rng.draw_raw(), nu)
}

/// Strict `v > theta` threshold with reset to zero.
#[inline]
pub fn threshold_and_reset(v: i32, theta: i32) -> (bool, i32) {
    if v > theta {
        (true, 0)
    } else {
        (false, v)
    }
}

/// `v - floor(v / 2^lambda)`.
///
/// Division rounds toward negative infinity, so negative potentials decay
/// toward -1 and then hold once the shift exceeds their magnitude.
#[inline]
pub fn leak(v: i32, lambda: u8) -> i32 {
    // An arithmetic shift is floor division by a power of two; shifts past 31
    // collapse to 0 or -1 for any i32.
    let shift = u32::from(lambda.min(31));
    v.wrapping_sub(v >> shift)
}

/// Noise, threshold/reset and leak/clear: everything before integration.
#[inline]
pub fn pre_integrate(model: &NeuronModel, v: i32, noise: i64, overflow: Overflow) -> (bool, i32) {
    let v = overflow.add(v, noise);
    let (spiked, v) = threshold_and_reset(v, model.theta);
    let v = match model.kind {
        NeuronKind::Lif => leak(v, model.lambda),
        NeuronKind::Ann => 0,
    };
    (spiked, v)
}

/// Full single-neuron timestep given the already summed synaptic input.
pub fn step_neuron(
    model: &NeuronModel,
    v: i32,
    synaptic_input: i64,
    rng: &mut NoiseRng,
    overflow: Overflow,
) -> (bool, i32) {
    let noise = noise_sample(model.nu, rng);
    let (spiked, v) = pre_integrate(model, v, noise, overflow);
    (spiked, overflow.add(v, synaptic_input))
}
