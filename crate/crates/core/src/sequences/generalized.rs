//! Generalized UDD modulation in the θ domain, `t = T sin²(θ/2)`, and its
//! odd-harmonics test.

use std::f64::consts::PI;

use super::{modulation, PulseSequence};
use crate::error::{invalid, Error, Result};

pub const DEFAULT_THETA_GRID: usize = 4096;
/// Largest admissible forbidden-harmonic coefficient, relative to the largest one.
pub const HARMONIC_TOLERANCE: f64 = 1e-6;

const ENDPOINT_TOLERANCE: f64 = 1e-12;

/// Smallest multiple of `2(N+1)` that is at least `requested`. Jumps at `jπ/(N+1)` then
/// fall between midpoints and every symmetry axis maps the grid onto itself.
fn aligned_grid_size(order: usize, requested: usize) -> usize {
    let q = 2 * (order + 1);
    requested.max(1).div_ceil(q) * q
}

fn midpoint_grid(m: usize) -> Vec<f64> {
    (0..m).map(|i| (i as f64 + 0.5) * PI / m as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModulationComponent {
    Plus,
    Minus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedModulation {
    order: usize,
    free_segment: Vec<f64>,
    theta: Vec<f64>,
    f_plus: Vec<f64>,
    f_minus: Vec<f64>,
}

/// Extends `free_segment`, uniform samples of `f⁺` on `[0, π/(2N+2)]`, to `[0, π]` by
/// periodicity `2π/(N+1)`, anti-symmetry about `jπ/(N+1)` and symmetry about
/// `(j+½)π/(N+1)`. `f⁻ = ±√(1 - (f⁺)²)` follows the same sign pattern, which keeps it
/// continuous with `f⁻(0) = 0`. The grid is rounded up to a multiple of `2(N+1)`.
pub fn build_generalized_modulation(
    order: usize,
    free_segment: &[f64],
    grid_size: usize,
) -> Result<GeneralizedModulation> {
    if order == 0 {
        return Err(invalid("generalized modulation order N must be at least 1"));
    }
    if free_segment.len() < 2 {
        return Err(invalid("the free segment needs at least two samples"));
    }
    if let Some((i, v)) = free_segment
        .iter()
        .enumerate()
        .find(|(_, v)| !v.is_finite() || v.abs() > 1.0)
    {
        return Err(invalid(format!(
            "free segment sample {i} = {v} lies outside [-1, 1]"
        )));
    }
    let first = free_segment[0];
    let last = free_segment[free_segment.len() - 1];
    if (first - 1.0).abs() > ENDPOINT_TOLERANCE || (last - 1.0).abs() > ENDPOINT_TOLERANCE {
        return Err(invalid(format!(
            "free segment must start and end at +1, got {first} and {last}"
        )));
    }
    let m = aligned_grid_size(order, grid_size);
    let mut modulation = GeneralizedModulation {
        order,
        free_segment: free_segment.to_vec(),
        theta: midpoint_grid(m),
        f_plus: Vec::new(),
        f_minus: Vec::new(),
    };
    let (plus, minus): (Vec<f64>, Vec<f64>) =
        modulation.theta.iter().map(|&th| modulation.evaluate(th)).unzip();
    modulation.f_plus = plus;
    modulation.f_minus = minus;
    Ok(modulation)
}

impl GeneralizedModulation {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn f_plus(&self) -> &[f64] {
        &self.f_plus
    }

    pub fn f_minus(&self) -> &[f64] {
        &self.f_minus
    }

    fn half_period(&self) -> f64 {
        PI / (2 * self.order + 2) as f64
    }

    fn free_value(&self, x: f64) -> f64 {
        let n = self.free_segment.len() - 1;
        let pos = (x / self.half_period() * n as f64).clamp(0.0, n as f64);
        let k = (pos.floor() as usize).min(n - 1);
        let w = pos - k as f64;
        self.free_segment[k] * (1.0 - w) + self.free_segment[k + 1] * w
    }

    /// `(f⁺(θ), f⁻(θ))` for any real θ.
    pub fn evaluate(&self, theta: f64) -> (f64, f64) {
        let h = self.half_period();
        let r = theta.rem_euclid(4.0 * h);
        let (sign, u) = if r < 2.0 * h {
            (1.0, r)
        } else {
            (-1.0, 4.0 * h - r)
        };
        let x = if u <= h { u } else { 2.0 * h - u };
        let g = self.free_value(x);
        (sign * g, sign * (1.0 - g * g).max(0.0).sqrt())
    }

    /// `max |(f⁺)² + (f⁻)² − 1|` over the grid.
    pub fn normalization_residual(&self) -> f64 {
        self.f_plus
            .iter()
            .zip(&self.f_minus)
            .map(|(p, m)| (p * p + m * m - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest violation of the three θ symmetries over both components, checked by
    /// pairing grid samples that the reflections and the period shift map onto each other.
    pub fn symmetry_residual(&self) -> f64 {
        let m = self.theta.len();
        // grid cells per half period h
        let a = m / (2 * self.order + 2);
        let mut worst: f64 = 0.0;
        for samples in [&self.f_plus, &self.f_minus] {
            for i in 0..m {
                if i + 4 * a < m {
                    worst = worst.max((samples[i + 4 * a] - samples[i]).abs());
                }
                // reflection about θ = k·h maps cell i to cell 2ka - 1 - i
                for k in 1..=(m / a) {
                    let Some(j) = (2 * k * a).checked_sub(i + 1) else {
                        continue;
                    };
                    if j >= m {
                        continue;
                    }
                    let expected = if k % 2 == 0 { -samples[i] } else { samples[i] };
                    worst = worst.max((samples[j] - expected).abs());
                }
            }
        }
        worst
    }

    pub fn samples(&self, component: ModulationComponent) -> ThetaSamples {
        let values = match component {
            ModulationComponent::Plus => self.f_plus.clone(),
            ModulationComponent::Minus => self.f_minus.clone(),
        };
        ThetaSamples {
            order: self.order,
            theta: self.theta.clone(),
            values,
        }
    }
}

/// A function on the midpoint grid `θ_i = (i + ½)π/M` together with the order `N`
/// whose harmonics `(N+1)`, `3(N+1)`, … are the only ones allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaSamples {
    order: usize,
    theta: Vec<f64>,
    values: Vec<f64>,
}

impl ThetaSamples {
    /// `F(T sin²(θ/2))` for a single-axis sequence, with `N` its pulse count.
    pub fn from_sequence(seq: &PulseSequence, grid_size: usize) -> Result<Self> {
        let f = modulation(seq)?;
        let order = seq.len();
        let m = aligned_grid_size(order, grid_size);
        let theta = midpoint_grid(m);
        let total = seq.total_time();
        let values = theta
            .iter()
            .map(|&th| {
                let s = (0.5 * th).sin();
                f.value(total * s * s)
            })
            .collect();
        Ok(Self { order, theta, values })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicReport {
    pub order: usize,
    /// `c_1 … c_{m_max}` of `Σ_m c_m sin(mθ)`.
    pub coefficients: Vec<f64>,
    pub largest: f64,
    /// Largest forbidden coefficient divided by `largest`.
    pub worst_relative: f64,
    pub worst_harmonic: Option<usize>,
    pub pass: bool,
}

impl HarmonicReport {
    pub fn coefficient(&self, m: usize) -> Option<f64> {
        m.checked_sub(1).and_then(|i| self.coefficients.get(i)).copied()
    }

    pub fn max_harmonic(&self) -> usize {
        self.coefficients.len()
    }
}

fn is_allowed(m: usize, order: usize) -> bool {
    m.is_multiple_of(order + 1) && !(m / (order + 1)).is_multiple_of(2)
}

/// Sine-series analysis `c_m = (2/M) Σ_i f(θ_i) sin(mθ_i)` for `m = 1 … max_harmonic`.
/// Passes when every coefficient other than odd multiples of `N+1` stays below
/// [`HARMONIC_TOLERANCE`] times the largest coefficient. The default harmonic range is
/// `8(N+1)` limited to `M/4`; an explicit range above `M/4` is a resolution error.
pub fn odd_harmonics_check(samples: &ThetaSamples, max_harmonic: Option<usize>) -> Result<HarmonicReport> {
    let m_grid = samples.values.len();
    let m_max = match max_harmonic {
        Some(0) => return Err(invalid("harmonic range must include m = 1")),
        Some(k) if 4 * k > m_grid => {
            return Err(Error::Resolution(format!(
                "{m_grid} θ samples cannot resolve harmonics up to {k}; need at least {}",
                4 * k
            )))
        }
        Some(k) => k,
        None => (8 * (samples.order + 1)).min(m_grid / 4),
    };
    if m_max == 0 {
        return Err(Error::Resolution(format!("{m_grid} θ samples are too few")));
    }
    let scale = 2.0 / m_grid as f64;
    let coefficients: Vec<f64> = (1..=m_max)
        .map(|m| {
            let mf = m as f64;
            scale
                * samples
                    .theta
                    .iter()
                    .zip(&samples.values)
                    .map(|(th, v)| v * (mf * th).sin())
                    .sum::<f64>()
        })
        .collect();
    let largest = coefficients.iter().map(|c| c.abs()).fold(0.0, f64::max);
    let mut worst_relative: f64 = 0.0;
    let mut worst_harmonic = None;
    for (i, c) in coefficients.iter().enumerate() {
        let m = i + 1;
        if is_allowed(m, samples.order) {
            continue;
        }
        let rel = if largest > 0.0 { c.abs() / largest } else { 0.0 };
        if rel > worst_relative {
            worst_relative = rel;
            worst_harmonic = Some(m);
        }
    }
    Ok(HarmonicReport {
        order: samples.order,
        coefficients,
        largest,
        worst_relative,
        worst_harmonic,
        pass: largest > 0.0 && worst_relative <= HARMONIC_TOLERANCE,
    })
}
