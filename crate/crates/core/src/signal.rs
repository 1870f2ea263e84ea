//! Ground-truth exponential signals, noise and sampling patterns.
//!
//! A model is a sum of `R` separable exponentials,
//! `y[i_1..i_N] = Σ_r d_r ∏_n z_{n,r}^{i_n}` with
//! `z_{n,r} = exp(-1/τ_{n,r} + 2πj f_{n,r})` and zero-based `i_n`.

use std::f64::consts::PI;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{complex_normal, stream, Stream};
use crate::tensor::{CMatrix, ComplexTensor, CpFactors, SamplingMask, C64};

/// One separable exponential component.
#[derive(Clone, Debug, PartialEq)]
pub struct Component {
    pub amplitude: C64,
    /// Per-mode frequency in cycles/sample, in `[0, 1)`.
    pub freqs: Vec<f64>,
    /// Per-mode damping time constant in samples; `f64::INFINITY` when undamped.
    pub taus: Vec<f64>,
}

impl Component {
    /// Pole `z_n = exp(-1/τ_n + 2πj f_n)` for mode `n`.
    pub fn pole(&self, n: usize) -> C64 {
        C64::new(-1.0 / self.taus[n], 2.0 * PI * self.freqs[n]).exp()
    }

    /// `[1, z, z², …]` of length `len` for mode `n`.
    pub fn factor_vector(&self, n: usize, len: usize) -> Vec<C64> {
        let log_z = C64::new(-1.0 / self.taus[n], 2.0 * PI * self.freqs[n]);
        (0..len).map(|k| (log_z * k as f64).exp()).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExponentialModel {
    pub dims: Vec<usize>,
    pub components: Vec<Component>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComponentDoc {
    amplitude_re: f64,
    amplitude_im: f64,
    freqs: Vec<f64>,
    /// `null` encodes an undamped mode.
    taus: Vec<Option<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    dims: Vec<usize>,
    components: Vec<ComponentDoc>,
}

impl ExponentialModel {
    pub fn new(dims: Vec<usize>, components: Vec<Component>) -> Result<Self> {
        let m = Self { dims, components };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        if self.dims.is_empty() || self.dims.contains(&0) {
            return Err(Error::Shape(format!("invalid model dims {:?}", self.dims)));
        }
        if self.components.is_empty() {
            return Err(Error::param("components", "model needs at least one component"));
        }
        let order = self.dims.len();
        for (r, c) in self.components.iter().enumerate() {
            if c.freqs.len() != order || c.taus.len() != order {
                return Err(Error::Shape(format!("component {r} does not have {order} modes")));
            }
            if c.freqs.iter().any(|f| !(0.0..1.0).contains(f)) {
                return Err(Error::param("freqs", format!("component {r} has a frequency outside [0, 1)")));
            }
            if c.taus.iter().any(|t| t.is_nan() || *t <= 0.0) {
                return Err(Error::param("taus", format!("component {r} has a non-positive damping")));
            }
            if !c.amplitude.re.is_finite() || !c.amplitude.im.is_finite() {
                return Err(Error::NonFinite("component amplitude"));
            }
        }
        Ok(())
    }

    pub fn rank(&self) -> usize {
        self.components.len()
    }

    /// Direct evaluation of the exponential sum on the sampling grid.
    pub fn synthesize(&self) -> ComplexTensor {
        // powers[r][n][i] = z_{n,r}^i
        let powers: Vec<Vec<Vec<C64>>> = self
            .components
            .iter()
            .map(|c| (0..self.dims.len()).map(|n| c.factor_vector(n, self.dims[n])).collect())
            .collect();
        ComplexTensor::from_fn(&self.dims, |idx| {
            self.components
                .iter()
                .zip(&powers)
                .map(|(c, p)| idx.iter().enumerate().fold(c.amplitude, |acc, (n, &i)| acc * p[n][i]))
                .sum()
        })
        .expect("validated dims")
    }

    /// Vandermonde factor matrices with the amplitudes as CP weights.
    pub fn factors(&self) -> CpFactors {
        let factors = (0..self.dims.len())
            .map(|n| {
                let cols: Vec<Vec<C64>> =
                    self.components.iter().map(|c| c.factor_vector(n, self.dims[n])).collect();
                CMatrix::from_fn(self.dims[n], self.rank(), |i, r| cols[r][i])
            })
            .collect();
        let weights = self.components.iter().map(|c| c.amplitude).collect();
        CpFactors::with_weights(factors, weights).expect("validated model")
    }

    /// Per-component frequency tuples.
    pub fn frequencies(&self) -> Vec<Vec<f64>> {
        self.components.iter().map(|c| c.freqs.clone()).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ModelDoc {
            dims: self.dims.clone(),
            components: self
                .components
                .iter()
                .map(|c| ComponentDoc {
                    amplitude_re: c.amplitude.re,
                    amplitude_im: c.amplitude.im,
                    freqs: c.freqs.clone(),
                    taus: c.taus.iter().map(|&t| t.is_finite().then_some(t)).collect(),
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ModelDoc = serde_json::from_str(s)?;
        let components = doc
            .components
            .into_iter()
            .map(|c| Component {
                amplitude: C64::new(c.amplitude_re, c.amplitude_im),
                freqs: c.freqs,
                taus: c.taus.into_iter().map(|t| t.unwrap_or(f64::INFINITY)).collect(),
            })
            .collect();
        Self::new(doc.dims, components)
    }
}

/// Amplitude `1 + 10^{0.5 m}` for `m ∈ [0, 1]`.
pub fn amplitude_from_uniform(m: f64) -> f64 {
    1.0 + 10f64.powf(0.5 * m)
}

/// Damping `10 + 30 g` for `g ∈ [0, 1]`.
pub fn damping_from_uniform(g: f64) -> f64 {
    10.0 + 30.0 * g
}

/// Random model with uniform frequencies, amplitudes `1 + 10^{0.5 m}` and,
/// when `damped`, dampings `10 + 30 g`.
pub fn random_model(dims: &[usize], rank: usize, damped: bool, seed: u64) -> Result<ExponentialModel> {
    if rank == 0 {
        return Err(Error::param("R", "number of exponentials must be at least 1"));
    }
    let mut rng = stream(seed, Stream::Model);
    let components = (0..rank)
        .map(|_| {
            let m: f64 = rng.random_range(0.0..=1.0);
            let freqs = dims.iter().map(|_| rng.random_range(0.0..1.0)).collect();
            let taus = dims
                .iter()
                .map(|_| {
                    if damped {
                        damping_from_uniform(rng.random_range(0.0..=1.0))
                    } else {
                        f64::INFINITY
                    }
                })
                .collect();
            Component { amplitude: C64::new(amplitude_from_uniform(m), 0.0), freqs, taus }
        })
        .collect();
    ExponentialModel::new(dims.to_vec(), components)
}

/// Divides by the largest entry modulus; returns the tensor and the divisor.
pub fn normalize_max(x: &ComplexTensor) -> Result<(ComplexTensor, f64)> {
    let scale = x.max_abs();
    if scale == 0.0 {
        return Err(Error::ZeroReference);
    }
    if !scale.is_finite() {
        return Err(Error::NonFinite("tensor to normalize"));
    }
    Ok((x.scaled(C64::new(1.0 / scale, 0.0)), scale))
}

/// Adds independent `N(0, σ²)` noise to the real and imaginary part of every entry.
pub fn add_noise(x: &ComplexTensor, sigma: f64, seed: u64) -> Result<ComplexTensor> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::param("sigma", format!("noise level must be non-negative, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(x.clone());
    }
    let mut rng = stream(seed, Stream::Noise);
    let mut out = x.clone();
    for z in out.data_mut() {
        *z += complex_normal(&mut rng) * sigma;
    }
    Ok(out)
}

/// `⌊sr·∏I_n⌋` distinct entries drawn uniformly without replacement.
pub fn sample_uniform(dims: &[usize], sr: f64, seed: u64) -> Result<SamplingMask> {
    if !(sr > 0.0 && sr <= 1.0) {
        return Err(Error::param("sr", format!("sampling ratio must lie in (0, 1], got {sr}")));
    }
    let total: usize = dims.iter().product();
    if sr == 1.0 {
        return SamplingMask::full(dims);
    }
    let count = ((sr * total as f64).floor() as usize).min(total);
    let mut rng = stream(seed, Stream::Mask);
    let picked = index::sample(&mut rng, total, count).into_vec();
    SamplingMask::from_linear(dims, picked)
}

/// Observes everything except `⌊fraction·I_mode⌋` randomly chosen slices along `mode`.
pub fn drop_slices(dims: &[usize], mode: usize, fraction: f64, seed: u64) -> Result<SamplingMask> {
    if mode >= dims.len() {
        return Err(Error::OutOfRange(format!("mode {mode} for dims {dims:?}")));
    }
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::param("fraction", format!("slice fraction must lie in [0, 1), got {fraction}")));
    }
    let size = dims[mode];
    let count = (fraction * size as f64).floor() as usize;
    let mut rng = stream(seed, Stream::Mask);
    let mut dropped = vec![false; size];
    for s in index::sample(&mut rng, size, count) {
        dropped[s] = true;
    }
    let stride: usize = dims[..mode].iter().product();
    let total: usize = dims.iter().product();
    let kept = (0..total).filter(|l| !dropped[(l / stride) % size]).collect();
    SamplingMask::from_linear(dims, kept)
}
