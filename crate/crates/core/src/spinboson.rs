//! Pure dephasing of a qubit coupled to independent boson modes, solved exactly with
//! coherent-state trajectories.
//!
//! For qubit state `±` each mode amplitude rotates clockwise about `∓κ/(2ω)`; a flip
//! exchanges the two centres. Coherence is the overlap of the two bath branches.

use std::fmt::Write as _;

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::format::{parse_numeric_csv, sig17};
use crate::sequences::{filter_function, PulseSequence, MERGE_TOLERANCE};

/// `c` in `L = exp(-c Σ_l |P_{l,+} - P_{l,-}|²)`. The textbook coherent-state overlap
/// magnitude corresponds to `0.5`.
pub const OVERLAP_EXPONENT: f64 = 1.0;

const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BosonMode {
    omega: f64,
    kappa: f64,
}

impl BosonMode {
    pub fn new(omega: f64, kappa: f64) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(invalid(format!("mode frequency must be positive, got {omega}")));
        }
        if !kappa.is_finite() {
            return Err(invalid(format!("mode coupling must be finite, got {kappa}")));
        }
        Ok(Self { omega, kappa })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    fn center(&self) -> f64 {
        self.kappa / (2.0 * self.omega)
    }
}

pub fn modes_from_csv(text: &str) -> Result<Vec<BosonMode>> {
    parse_numeric_csv(text, &["omega", "kappa"])?
        .into_iter()
        .map(|r| BosonMode::new(r[0], r[1]))
        .collect()
}

pub fn modes_to_csv(modes: &[BosonMode]) -> String {
    let mut out = String::from("omega,kappa\n");
    for m in modes {
        let _ = writeln!(out, "{},{}", sig17(m.omega), sig17(m.kappa));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoherentTrajectoryPair {
    pub times: Vec<f64>,
    /// `p_plus[l][k]` is mode `l` at `times[k]` on the branch whose qubit is up at that
    /// time; each pulse swaps the two branches.
    pub p_plus: Vec<Vec<Complex64>>,
    pub p_minus: Vec<Vec<Complex64>>,
}

impl CoherentTrajectoryPair {
    pub fn delta(&self, mode: usize, k: usize) -> Complex64 {
        self.p_plus[mode][k] - self.p_minus[mode][k]
    }

    /// `Σ_l |P_{l,+}(t_k) - P_{l,-}(t_k)|²`.
    pub fn separation(&self, k: usize) -> f64 {
        (0..self.p_plus.len()).map(|l| self.delta(l, k).norm_sqr()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceTrace {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl CoherenceTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,L\n");
        for (t, l) in self.times.iter().zip(&self.values) {
            let _ = writeln!(out, "{},{}", sig17(*t), sig17(*l));
        }
        out
    }
}

fn check_grid(seq: &PulseSequence, grid: &[f64]) -> Result<()> {
    if !seq.is_single_axis() {
        return Err(invalid("spin-boson evolution needs a single-axis sequence"));
    }
    let total = seq.total_time();
    let tol = MERGE_TOLERANCE * total;
    if grid
        .iter()
        .any(|t| !t.is_finite() || *t < -tol || *t > total + tol)
    {
        return Err(Error::Coverage(format!("grid leaves [0, {total}]")));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("time grid must be non-decreasing"));
    }
    for t in seq.times() {
        let k = grid.partition_point(|&g| g < t - tol);
        if grid.get(k).is_none_or(|&g| (g - t).abs() > tol) {
            return Err(Error::Coverage(format!(
                "pulse time {t} is missing from the grid"
            )));
        }
    }
    Ok(())
}

/// Branch amplitudes `(P_+, P_-)` of one mode at every pulse time, starting from `p0`.
fn anchors(mode: &BosonMode, seq: &PulseSequence, p0: Complex64) -> Vec<(f64, Complex64, Complex64)> {
    let c = mode.center();
    let mut out = Vec::with_capacity(seq.len() + 1);
    let (mut t_a, mut plus, mut minus) = (0.0, p0, p0);
    out.push((t_a, plus, minus));
    for t in seq.times() {
        let (p, m) = rotate(mode, plus, minus, t - t_a, c);
        // the flip exchanges which branch is qubit-up
        (plus, minus) = (m, p);
        t_a = t;
        out.push((t_a, plus, minus));
    }
    out
}

/// Rotation over `dt`: `+` (qubit up) circles `-c`, `-` circles `+c`.
fn rotate(mode: &BosonMode, plus: Complex64, minus: Complex64, dt: f64, c: f64) -> (Complex64, Complex64) {
    // (P ± c) e^{-iωdt} ∓ c = P e^{-iωdt} ± c (e^{-iωdt} − 1), with e^{-iθ} − 1 formed without cancellation
    let theta = mode.omega * dt;
    let phase = Complex64::from_polar(1.0, -theta);
    let half = (0.5 * theta).sin();
    let phase_m1 = Complex64::new(-2.0 * half * half, -theta.sin());
    (plus * phase + c * phase_m1, minus * phase - c * phase_m1)
}

/// Exact branch trajectories on `grid`, which must contain every pulse time.
pub fn evolve_pair(
    modes: &[BosonMode],
    seq: &PulseSequence,
    p0: &[Complex64],
    grid: &[f64],
) -> Result<CoherentTrajectoryPair> {
    if p0.len() != modes.len() {
        return Err(invalid(format!(
            "{} initial amplitudes for {} modes",
            p0.len(),
            modes.len()
        )));
    }
    check_grid(seq, grid)?;
    let pulse_times: Vec<f64> = seq.times().collect();
    let segment: Vec<usize> = grid
        .iter()
        .map(|&t| pulse_times.partition_point(|&s| s <= t))
        .collect();
    let mut p_plus = Vec::with_capacity(modes.len());
    let mut p_minus = Vec::with_capacity(modes.len());
    for (mode, &init) in modes.iter().zip(p0) {
        let a = anchors(mode, seq, init);
        let c = mode.center();
        let (pp, pm): (Vec<_>, Vec<_>) = grid
            .iter()
            .zip(&segment)
            .map(|(&t, &j)| {
                let (t_a, plus, minus) = a[j];
                rotate(mode, plus, minus, t - t_a, c)
            })
            .unzip();
        p_plus.push(pp);
        p_minus.push(pm);
    }
    Ok(CoherentTrajectoryPair {
        times: grid.to_vec(),
        p_plus,
        p_minus,
    })
}

/// `Δ_{N+1} = P_+(T) - P_-(T) = i(-1)^{N+1} e^{-iωT} κ f(ω)`.
pub fn delta_final(mode: &BosonMode, seq: &PulseSequence) -> Result<Complex64> {
    let f = filter_function(seq, mode.omega)?;
    let sign = if (seq.len() + 1).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    };
    let rot = Complex64::from_polar(1.0, -mode.omega * seq.total_time());
    Ok(Complex64::i() * sign * rot * mode.kappa * f)
}

/// Coherence from the vacuum bath state.
pub fn coherence(modes: &[BosonMode], seq: &PulseSequence, grid: &[f64]) -> Result<CoherenceTrace> {
    let p0 = vec![Complex64::new(0.0, 0.0); modes.len()];
    coherence_from(modes, seq, &p0, grid)
}

/// Coherence from the coherent bath state `Π_l |p0_l⟩`.
pub fn coherence_from(
    modes: &[BosonMode],
    seq: &PulseSequence,
    p0: &[Complex64],
    grid: &[f64],
) -> Result<CoherenceTrace> {
    let pair = evolve_pair(modes, seq, p0, grid)?;
    let values = (0..grid.len())
        .map(|k| (-OVERLAP_EXPONENT * pair.separation(k)).exp())
        .collect();
    Ok(CoherenceTrace {
        times: grid.to_vec(),
        values,
    })
}

/// `1 - L(T)` from the closed form, accurate when the deficit is tiny.
pub fn coherence_deficit(modes: &[BosonMode], seq: &PulseSequence) -> Result<f64> {
    let mut sep = 0.0;
    for m in modes {
        sep += delta_final(m, seq)?.norm_sqr();
    }
    Ok(-(-OVERLAP_EXPONENT * sep).exp_m1())
}

/// Reduced qubit state with populations `|C_±|²` and coherence `C_+ C_-^* L e^{-iφ}`.
pub fn qubit_density_matrix(
    c_plus: Complex64,
    c_minus: Complex64,
    coherence: f64,
    phase: f64,
) -> Result<Matrix2<Complex64>> {
    let norm = c_plus.norm_sqr() + c_minus.norm_sqr();
    if !((norm - 1.0).abs() <= NORMALIZATION_TOLERANCE) {
        return Err(invalid(format!(
            "amplitudes are not normalized: |C+|² + |C-|² = {norm}"
        )));
    }
    if !(0.0..=1.0).contains(&coherence) {
        return Err(invalid(format!("coherence {coherence} lies outside [0, 1]")));
    }
    let off = c_plus * c_minus.conj() * coherence * Complex64::from_polar(1.0, -phase);
    Ok(Matrix2::new(
        Complex64::new(c_plus.norm_sqr(), 0.0),
        off,
        off.conj(),
        Complex64::new(c_minus.norm_sqr(), 0.0),
    ))
}
