//! Semiclassical dephasing by a stationary Gaussian field `Z(t)`.
//!
//! `S` is one-sided with autocovariance `C(τ) = (1/π) ∫_0^∞ S(ω) cos(ωτ) dω`, so that
//! the phase `φ = 2∫F Z dt` has `⟨φ²⟩ = (4/π) ∫ S |f|² dω` and `⟨e^{-iφ}⟩ = e^{-χ}`
//! with `χ = (2/π) ∫ S |f|² dω`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::format::{parse_numeric_csv, sig17};
use crate::sequences::{filter_function, modulation, PulseSequence, MERGE_TOLERANCE};

/// Default regularizer of the soft spectrum, in units of `1/T`.
pub const DEFAULT_OMEGA_MIN_T: f64 = 0.05;
/// Synthesis frequency step `Δω = π / (FREQ_STEPS_PER_T · T)` (upper bound).
pub const FREQ_STEPS_PER_T: f64 = 64.0;
/// The soft spectrum additionally uses `Δω ≤ ω_min / SOFT_STEPS_PER_OMEGA_MIN`, since its
/// weight is concentrated just above `ω_min`.
pub const SOFT_STEPS_PER_OMEGA_MIN: f64 = 16.0;
/// Default Monte Carlo time step `dt = π / (TIME_STEPS_PER_CUTOFF · ω_c)` (upper bound).
pub const TIME_STEPS_PER_CUTOFF: f64 = 64.0;
pub const MIN_REALIZATIONS: usize = 100;
/// Relative accuracy of the filter integral.
pub const QUADRATURE_TOLERANCE: f64 = 1e-8;

const MAX_MODES: usize = 1 << 20;
const MAX_QUADRATURE_INTERVALS: usize = 200_000;

#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumKind {
    /// `A ω` up to `ω_c`.
    OhmicSharp,
    /// `A / ω⁴` on `[ω_min, ω_c]`, held at `A / ω_min⁴` below `ω_min`.
    InverseQuarticSoft { omega_min: f64 },
    /// Linear interpolation of `(ω, S)` samples, zero outside the table.
    Tabulated { omega: Vec<f64>, density: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpectrum {
    kind: SpectrumKind,
    amplitude: f64,
    cutoff: f64,
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

fn check_amplitude(a: f64) -> Result<()> {
    if a.is_finite() && a >= 0.0 {
        Ok(())
    } else {
        Err(invalid(format!(
            "amplitude must be finite and non-negative, got {a}"
        )))
    }
}

impl NoiseSpectrum {
    pub fn ohmic_sharp(amplitude: f64, cutoff: f64) -> Result<Self> {
        check_amplitude(amplitude)?;
        check_positive("cutoff", cutoff)?;
        Ok(Self {
            kind: SpectrumKind::OhmicSharp,
            amplitude,
            cutoff,
        })
    }

    /// `omega_min = 0` makes the spectrum non-integrable and is rejected.
    pub fn inverse_quartic_soft(amplitude: f64, cutoff: f64, omega_min: f64) -> Result<Self> {
        check_amplitude(amplitude)?;
        check_positive("cutoff", cutoff)?;
        if omega_min == 0.0 {
            return Err(Error::NonIntegrable(
                "1/ω⁴ needs a positive low-frequency regularizer ω_min".into(),
            ));
        }
        check_positive("omega_min", omega_min)?;
        if omega_min >= cutoff {
            return Err(invalid(format!(
                "omega_min {omega_min} must lie below the cutoff {cutoff}"
            )));
        }
        Ok(Self {
            kind: SpectrumKind::InverseQuarticSoft { omega_min },
            amplitude,
            cutoff,
        })
    }

    /// Soft spectrum with `ω_min = 0.05 / T`.
    pub fn inverse_quartic_soft_for(amplitude: f64, cutoff: f64, total_time: f64) -> Result<Self> {
        check_positive("total time", total_time)?;
        Self::inverse_quartic_soft(amplitude, cutoff, DEFAULT_OMEGA_MIN_T / total_time)
    }

    pub fn tabulated(omega: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        if omega.len() < 2 || omega.len() != density.len() {
            return Err(invalid("a tabulated spectrum needs at least two (ω, S) rows"));
        }
        if omega[0] < 0.0 || omega.windows(2).any(|w| !(w[1] > w[0])) || !omega.iter().all(|w| w.is_finite())
        {
            return Err(invalid(
                "tabulated frequencies must be finite, non-negative and increasing",
            ));
        }
        if density.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(invalid("tabulated densities must be finite and non-negative"));
        }
        let cutoff = *omega.last().expect("two rows");
        Ok(Self {
            kind: SpectrumKind::Tabulated { omega, density },
            amplitude: 1.0,
            cutoff,
        })
    }

    /// Reads a tabulated spectrum with header `omega,S`.
    pub fn from_csv(text: &str) -> Result<Self> {
        let rows = parse_numeric_csv(text, &["omega", "S"])?;
        let (omega, density) = rows.into_iter().map(|r| (r[0], r[1])).unzip();
        Self::tabulated(omega, density)
    }

    /// `omega,S` rows at the given frequencies.
    pub fn to_csv(&self, omegas: &[f64]) -> String {
        let mut out = String::from("omega,S\n");
        for &w in omegas {
            let _ = writeln!(out, "{},{}", sig17(w), sig17(self.density(w)));
        }
        out
    }

    pub fn kind(&self) -> &SpectrumKind {
        &self.kind
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Band edge: `S = 0` above it.
    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn is_zero(&self) -> bool {
        match &self.kind {
            SpectrumKind::Tabulated { density, .. } => density.iter().all(|s| *s == 0.0),
            _ => self.amplitude == 0.0,
        }
    }

    pub fn density(&self, omega: f64) -> f64 {
        if !(0.0..=self.cutoff).contains(&omega) {
            return 0.0;
        }
        match &self.kind {
            SpectrumKind::OhmicSharp => self.amplitude * omega,
            SpectrumKind::InverseQuarticSoft { omega_min } => self.amplitude / omega.max(*omega_min).powi(4),
            SpectrumKind::Tabulated { omega: w, density: s } => {
                if omega < w[0] {
                    return 0.0;
                }
                let k = w.partition_point(|&x| x <= omega).clamp(1, w.len() - 1);
                let (w0, w1) = (w[k - 1], w[k]);
                let t = (omega - w0) / (w1 - w0);
                s[k - 1] + t * (s[k] - s[k - 1])
            }
        }
    }

    /// Points where `S` has a kink; quadrature panels are split there.
    fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            SpectrumKind::OhmicSharp => vec![0.0, self.cutoff],
            SpectrumKind::InverseQuarticSoft { omega_min } => vec![0.0, *omega_min, self.cutoff],
            SpectrumKind::Tabulated { omega, .. } => {
                let mut b = vec![0.0];
                b.extend(omega.iter().copied().filter(|&w| w > 0.0));
                b
            }
        }
    }

    /// Midpoint synthesis grid `ω_k = (k + ½)Δω` on `[0, ω_c]`.
    fn synthesis_grid(&self, total_time: f64) -> Result<(Vec<f64>, f64)> {
        let mut step = PI / (FREQ_STEPS_PER_T * total_time);
        if let SpectrumKind::InverseQuarticSoft { omega_min } = self.kind {
            step = step.min(omega_min / SOFT_STEPS_PER_OMEGA_MIN);
        }
        let count = (self.cutoff / step).ceil();
        if !(count.is_finite() && count <= MAX_MODES as f64) {
            return Err(Error::Resolution(format!(
                "synthesis would need {count} frequency modes (limit {MAX_MODES})"
            )));
        }
        let count = (count as usize).max(1);
        let dw = self.cutoff / count as f64;
        Ok(((0..count).map(|k| (k as f64 + 0.5) * dw).collect(), dw))
    }
}

/// One realization of `Z(t)` together with the seed that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseTrajectory {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub seed: u64,
}

/// Random-phase cosine sum `Z(t) = Σ_k √(2 S(ω_k) Δω / π) cos(ω_k t + φ_k)`.
#[derive(Debug, Clone)]
struct Synthesis {
    omega: Vec<f64>,
    weight: Vec<f64>,
}

impl Synthesis {
    fn new(spec: &NoiseSpectrum, total_time: f64) -> Result<Self> {
        let (omega, dw) = spec.synthesis_grid(total_time)?;
        let weight = omega
            .iter()
            .map(|&w| (2.0 * spec.density(w) * dw / PI).sqrt())
            .collect();
        Ok(Self { omega, weight })
    }

    /// Phases for realization `stream` of `seed`.
    fn phases(&self, seed: u64, stream: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        (0..self.omega.len())
            .map(|_| rng.random::<f64>() * 2.0 * PI)
            .collect()
    }
}

fn uniform_grid(total_time: f64, dt: f64) -> Vec<f64> {
    let steps = (total_time / dt).ceil().max(1.0) as usize;
    (0..=steps)
        .map(|k| total_time * k as f64 / steps as f64)
        .collect()
}

/// Samples `Z` on a uniform grid of step at most `dt` over `[0, T]`.
pub fn sample_trajectory(
    spec: &NoiseSpectrum,
    total_time: f64,
    dt: f64,
    seed: u64,
) -> Result<NoiseTrajectory> {
    check_positive("total time", total_time)?;
    check_positive("dt", dt)?;
    sample_trajectory_on(spec, total_time, &uniform_grid(total_time, dt), seed)
}

/// Samples `Z` at the given times. The frequency grid is fixed by `total_time`.
pub fn sample_trajectory_on(
    spec: &NoiseSpectrum,
    total_time: f64,
    times: &[f64],
    seed: u64,
) -> Result<NoiseTrajectory> {
    check_positive("total time", total_time)?;
    let max_dt = PI / (4.0 * spec.cutoff());
    if let Some(w) = times.windows(2).find(|w| w[1] - w[0] > max_dt * (1.0 + 1e-12)) {
        return Err(Error::Resolution(format!(
            "time step {} exceeds π/(4ω_c) = {max_dt}",
            w[1] - w[0]
        )));
    }
    let synth = Synthesis::new(spec, total_time)?;
    let phases = synth.phases(seed, 0);
    let values = times
        .iter()
        .map(|&t| {
            synth
                .omega
                .iter()
                .zip(&synth.weight)
                .zip(&phases)
                .map(|((w, a), p)| a * (w * t + p).cos())
                .sum()
        })
        .collect();
    Ok(NoiseTrajectory {
        times: times.to_vec(),
        values,
        seed,
    })
}

/// Trapezoid weights of `φ = 2∫_0^T F(t) Z(t) dt` on `times`, which must span `[0, T]`
/// and contain every pulse time.
fn phase_weights(times: &[f64], seq: &PulseSequence) -> Result<Vec<f64>> {
    let f = modulation(seq)?;
    let total = seq.total_time();
    let tol = MERGE_TOLERANCE * total;
    let (Some(&first), Some(&last)) = (times.first(), times.last()) else {
        return Err(Error::Coverage("empty time grid".into()));
    };
    if first.abs() > tol || (last - total).abs() > tol {
        return Err(Error::Coverage(format!(
            "grid spans [{first}, {last}], need [0, {total}]"
        )));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("time grid must be non-decreasing"));
    }
    for t in seq.times() {
        let k = times.partition_point(|&g| g < t - tol);
        if times.get(k).is_none_or(|&g| (g - t).abs() > tol) {
            return Err(Error::Coverage(format!(
                "pulse time {t} is missing from the grid"
            )));
        }
    }
    let mut w = vec![0.0; times.len()];
    for i in 0..times.len() - 1 {
        let (a, b) = (times[i], times[i + 1]);
        let half = (b - a) * f.value(0.5 * (a + b));
        w[i] += half;
        w[i + 1] += half;
    }
    Ok(w)
}

/// `φ = 2∫_0^T F(t) Z(t) dt` by the trapezoid rule, split exactly at pulse times.
pub fn accumulated_phase(traj: &NoiseTrajectory, seq: &PulseSequence) -> Result<f64> {
    let w = phase_weights(&traj.times, seq)?;
    Ok(w.iter().zip(&traj.values).map(|(w, z)| w * z).sum())
}

/// Uniform grid of step `≤ π/(64 ω_c)` with the pulse times merged in.
pub fn simulation_grid(spec: &NoiseSpectrum, seq: &PulseSequence) -> Vec<f64> {
    let total = seq.total_time();
    let mut grid = uniform_grid(total, PI / (TIME_STEPS_PER_CUTOFF * spec.cutoff()));
    grid.extend(seq.times());
    grid.sort_by(f64::total_cmp);
    let tol = MERGE_TOLERANCE * total;
    grid.dedup_by(|b, a| (*b - *a).abs() <= tol);
    grid
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub coherence: f64,
    pub stderr: f64,
    pub realizations: usize,
}

/// `|⟨e^{-iφ}⟩|` over `n` realizations, with a jackknife standard error.
///
/// Realization `r` draws its phases from stream `r` of `ChaCha8(seed)`, so the estimate
/// is independent of scheduling and different sequences see common random numbers.
/// Each phase equals [`accumulated_phase`] of the trajectory sampled on
/// [`simulation_grid`]; the linear map from mode amplitudes to phase is precomputed.
pub fn mc_coherence(spec: &NoiseSpectrum, seq: &PulseSequence, n: usize, seed: u64) -> Result<McEstimate> {
    if n < MIN_REALIZATIONS {
        return Err(invalid(format!(
            "need at least {MIN_REALIZATIONS} realizations, got {n}"
        )));
    }
    if spec.is_zero() {
        modulation(seq)?;
        return Ok(McEstimate {
            coherence: 1.0,
            stderr: 0.0,
            realizations: n,
        });
    }
    let grid = simulation_grid(spec, seq);
    let weights = phase_weights(&grid, seq)?;
    let synth = Synthesis::new(spec, seq.total_time())?;
    // φ = Σ_k a_k [cos p_k · g_k − sin p_k · h_k]
    let (g, h): (Vec<f64>, Vec<f64>) = synth
        .omega
        .par_iter()
        .zip(&synth.weight)
        .map(|(&w, &a)| {
            let (mut gc, mut hs) = (0.0, 0.0);
            for (&t, &wt) in grid.iter().zip(&weights) {
                let (s, c) = (w * t).sin_cos();
                gc += wt * c;
                hs += wt * s;
            }
            (a * gc, a * hs)
        })
        .unzip();
    let samples: Vec<Complex64> = (0..n as u64)
        .into_par_iter()
        .map(|r| {
            let phases = synth.phases(seed, r);
            let phi: f64 = phases
                .iter()
                .zip(g.iter().zip(&h))
                .map(|(p, (gk, hk))| {
                    let (s, c) = p.sin_cos();
                    c * gk - s * hk
                })
                .sum();
            Complex64::from_polar(1.0, -phi)
        })
        .collect();
    let (coherence, stderr) = jackknife_magnitude(&samples);
    Ok(McEstimate {
        coherence,
        stderr,
        realizations: n,
    })
}

/// `|mean|` and its jackknife standard error.
fn jackknife_magnitude(z: &[Complex64]) -> (f64, f64) {
    let n = z.len() as f64;
    let total: Complex64 = z.iter().sum();
    let full = (total / n).norm();
    let loo: Vec<f64> = z.iter().map(|zi| ((total - zi) / (n - 1.0)).norm()).collect();
    let mean = loo.iter().sum::<f64>() / n;
    let var = loo.iter().map(|x| (x - mean).powi(2)).sum::<f64>() * (n - 1.0) / n;
    (full, var.sqrt())
}

// Gauss–Kronrod 7–15 on [-1, 1].
const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_KRONROD: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GK_GAUSS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = GK_KRONROD[7] * fc;
    let mut gauss = GK_GAUSS[3] * fc;
    for (j, &x) in GK_NODES[..7].iter().enumerate() {
        let s = f(c - h * x) + f(c + h * x);
        kronrod += GK_KRONROD[j] * s;
        if j % 2 == 1 {
            gauss += GK_GAUSS[j / 2] * s;
        }
    }
    Panel {
        a,
        b,
        value: kronrod * h,
        error: ((kronrod - gauss) * h).abs(),
    }
}

/// Globally adaptive Gauss–Kronrod integration over consecutive `breaks`.
pub(crate) fn integrate(f: impl Fn(f64) -> f64, breaks: &[f64], rel_tol: f64) -> Result<f64> {
    let mut heap: BinaryHeap<Panel> = breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gk15(&f, w[0], w[1]))
        .collect();
    let mut count = heap.len();
    loop {
        let value: f64 = heap.iter().map(|p| p.value).sum();
        let error: f64 = heap.iter().map(|p| p.error).sum();
        if !value.is_finite() {
            return Err(Error::Numeric("integrand is not finite".into()));
        }
        if error <= rel_tol * value.abs() || error <= f64::MIN_POSITIVE {
            return Ok(value);
        }
        if count >= MAX_QUADRATURE_INTERVALS {
            return Err(Error::Numeric(format!(
                "quadrature did not reach relative accuracy {rel_tol:e} (estimate {value:e} ± {error:e})"
            )));
        }
        let worst = heap.pop().expect("non-empty while error > 0");
        let mid = 0.5 * (worst.a + worst.b);
        heap.push(gk15(&f, worst.a, mid));
        heap.push(gk15(&f, mid, worst.b));
        count += 1;
    }
}

/// `χ = (2/π) ∫_0^{ω_c} S(ω) |f(ω)|² dω`.
pub fn chi(spec: &NoiseSpectrum, seq: &PulseSequence) -> Result<f64> {
    modulation(seq)?;
    if spec.is_zero() {
        return Ok(0.0);
    }
    // panels no wider than a quarter of the filter's oscillation period 2π/T
    let width = 0.5 * PI / seq.total_time();
    let mut breaks = Vec::new();
    for w in spec.breakpoints().windows(2) {
        let pieces = ((w[1] - w[0]) / width).ceil().max(1.0) as usize;
        for k in 0..pieces {
            breaks.push(w[0] + (w[1] - w[0]) * k as f64 / pieces as f64);
        }
    }
    breaks.push(spec.cutoff());
    let integrand = |w: f64| {
        let f = filter_function(seq, w).expect("single-axis checked above");
        spec.density(w) * f.norm_sqr()
    };
    Ok(2.0 / PI * integrate(integrand, &breaks, QUADRATURE_TOLERANCE)?)
}

/// Gaussian average `⟨e^{-iφ}⟩ = e^{-χ}`.
pub fn analytic_coherence(spec: &NoiseSpectrum, seq: &PulseSequence) -> Result<f64> {
    Ok((-chi(spec, seq)?).exp())
}

pub fn comparison_csv_header() -> &'static str {
    "sequence,N,T,chi_analytic,coherence_mc,stderr"
}

pub fn comparison_csv_row(seq: &PulseSequence, chi: f64, mc: &McEstimate) -> String {
    format!(
        "{},{},{},{},{},{}",
        seq.label(),
        seq.len(),
        sig17(seq.total_time()),
        sig17(chi),
        sig17(mc.coherence),
        sig17(mc.stderr)
    )
}
