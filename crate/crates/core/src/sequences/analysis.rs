//! Modulation function, Λ_p moments and the filter function of single-axis sequences.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::PulseSequence;
use crate::error::{invalid, Error, Result};

/// Agreement required between the two routes to Λ_p in [`filter_taylor_check`].
pub const TAYLOR_CHECK_TOLERANCE: f64 = 1e-9;

const CAUCHY_POINTS: usize = 128;

fn require_single_axis(seq: &PulseSequence) -> Result<()> {
    if seq.is_single_axis() {
        Ok(())
    } else {
        Err(invalid(format!(
            "sequence '{}' mixes pulse axes; its modulation function is undefined",
            seq.label()
        )))
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Piecewise-constant `F(t) = (-1)^j` on `[T_j, T_{j+1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationFunction {
    switch_times: Vec<f64>,
}

impl ModulationFunction {
    pub fn total_time(&self) -> f64 {
        *self
            .switch_times
            .last()
            .expect("switch times always hold 0 and T")
    }

    /// `[0, T_1, …, T_N, T]`.
    pub fn switch_times(&self) -> &[f64] {
        &self.switch_times
    }

    pub fn flips(&self) -> usize {
        self.switch_times.len() - 2
    }

    /// Sign on the segment containing `t`; the value at a pulse time is the one after the flip.
    /// Times outside `[0, T]` are clamped.
    pub fn value(&self, t: f64) -> f64 {
        let interior = &self.switch_times[1..self.switch_times.len() - 1];
        let j = interior.partition_point(|&s| s <= t);
        if j.is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    /// Sign on segment `j` (`0 ≤ j ≤ N`).
    pub fn segment_sign(j: usize) -> f64 {
        if j.is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }
}

pub fn modulation(seq: &PulseSequence) -> Result<ModulationFunction> {
    require_single_axis(seq)?;
    Ok(ModulationFunction {
        switch_times: seq.switch_times(),
    })
}

/// `Λ_p = Σ_j (-1)^j [(T_{j+1}/T)^p - (T_j/T)^p]`.
pub fn lambda_p(seq: &PulseSequence, p: u32) -> Result<f64> {
    if p == 0 {
        return Err(invalid("Λ_p is defined for p ≥ 1"));
    }
    require_single_axis(seq)?;
    Ok(lambda_unchecked(seq, p))
}

/// `[Λ_1, …, Λ_max_p]`.
pub fn lambda_series(seq: &PulseSequence, max_p: u32) -> Result<Vec<f64>> {
    if max_p == 0 {
        return Err(invalid("max_p must be at least 1"));
    }
    require_single_axis(seq)?;
    Ok((1..=max_p).map(|p| lambda_unchecked(seq, p)).collect())
}

// Telescoped form: Λ_p = (-1)^N + 2 Σ_{k=1}^{N} (-1)^{k-1} (T_k/T)^p.
fn lambda_unchecked(seq: &PulseSequence, p: u32) -> f64 {
    let total = seq.total_time();
    let n = seq.len();
    let exp = i32::try_from(p).unwrap_or(i32::MAX);
    let mut acc = NeumaierSum::default();
    acc.add(if n.is_multiple_of(2) { 1.0 } else { -1.0 });
    for (k, pulse) in seq.pulses().iter().enumerate() {
        let term = 2.0 * (pulse.time / total).powi(exp);
        acc.add(if k % 2 == 0 { term } else { -term });
    }
    acc.value()
}

/// `sin(w)/w` for complex `w`, with a series near zero.
fn sinc(w: Complex64) -> Complex64 {
    if w.norm() < 0.1 {
        let w2 = w * w;
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for k in 1..=5u32 {
            term *= -w2 / f64::from((2 * k) * (2 * k + 1));
            sum += term;
        }
        sum
    } else {
        w.sin() / w
    }
}

/// `∫_a^b e^{izt} dt`, stable for small `z(b-a)`.
fn segment_integral(z: Complex64, a: f64, b: f64) -> Complex64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (Complex64::i() * z * mid).exp() * (b - a) * sinc(z * half)
}

/// `f(ω) = ∫_0^T F(t) e^{iωt} dt`.
pub fn filter_function(seq: &PulseSequence, omega: f64) -> Result<Complex64> {
    filter_function_complex(seq, Complex64::new(omega, 0.0))
}

/// [`filter_function`] continued to complex frequency.
pub fn filter_function_complex(seq: &PulseSequence, omega: Complex64) -> Result<Complex64> {
    require_single_axis(seq)?;
    Ok(filter_unchecked(seq, omega))
}

pub(crate) fn filter_unchecked(seq: &PulseSequence, omega: Complex64) -> Complex64 {
    let st = seq.switch_times();
    st.windows(2)
        .enumerate()
        .map(|(j, w)| segment_integral(omega, w[0], w[1]) * ModulationFunction::segment_sign(j))
        .sum()
}

/// Returns `Λ_1 … Λ_max_n` after checking them against Taylor coefficients of `f`
/// extracted numerically by a Cauchy integral around `ω = 0`:
/// `f(ω) = T Σ_n (iωT)^n Λ_{n+1} / (n+1)!`.
pub fn filter_taylor_check(seq: &PulseSequence, max_n: u32) -> Result<Vec<f64>> {
    let direct = lambda_series(seq, max_n)?;
    let total = seq.total_time();
    for (idx, &lam) in direct.iter().enumerate() {
        let n = idx as i32;
        let radius = f64::from(n + 1);
        let points = CAUCHY_POINTS.max(4 * (idx + 1));
        let mut coeff = Complex64::new(0.0, 0.0);
        for k in 0..points {
            let phase = 2.0 * PI * k as f64 / points as f64;
            let u = Complex64::from_polar(radius, phase);
            coeff += filter_unchecked(seq, u / total) / total * u.powi(-n);
        }
        coeff /= points as f64;
        let factorial: f64 = (1..=idx + 1).map(|k| k as f64).product();
        let recovered = coeff * factorial / Complex64::i().powi(n);
        let scale = lam.abs().max(1.0);
        let diff = (recovered - lam).norm();
        if diff > TAYLOR_CHECK_TOLERANCE * scale {
            return Err(Error::Consistency(format!(
                "Λ_{} from the filter expansion is {} but direct evaluation gives {lam} (|Δ| = {diff:e})",
                idx + 1,
                recovered.re
            )));
        }
    }
    Ok(direct)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::Pauli;
    use crate::sequences::{generate_cpmg, generate_periodic, generate_qdd, generate_udd, Pulse};
    use proptest::prelude::*;

    /// Literal evaluation of the defining sum with exact rational inputs.
    fn lambda_oracle(times: &[f64], p: i32) -> f64 {
        let mut x = vec![0.0];
        x.extend_from_slice(times);
        x.push(1.0);
        (0..x.len() - 1)
            .map(|j| {
                let s = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
                s * (x[j + 1].powi(p) - x[j].powi(p))
            })
            .sum()
    }

    #[test]
    fn lambda_examples() {
        let u1 = generate_udd(1, 1.0).unwrap();
        assert_eq!(lambda_p(&u1, 1).unwrap(), 0.0);
        assert_eq!(lambda_p(&u1, 2).unwrap(), -0.5);
        let u2 = generate_udd(2, 1.0).unwrap();
        assert!((lambda_p(&u2, 3).unwrap() - 3.0 / 16.0).abs() < 1e-15);
        assert!((lambda_oracle(&[0.25, 0.75], 3) - 3.0 / 16.0).abs() < 1e-15);
        assert!(lambda_p(&u2, 0).is_err());
        let free = PulseSequence::free(2.0).unwrap();
        assert_eq!(lambda_p(&free, 1).unwrap(), 1.0);
    }

    #[test]
    fn lambda_rejects_mixed_axes() {
        let q = generate_qdd(1, 1, 1.0).unwrap();
        assert!(lambda_p(&q, 1).is_err());
        assert!(filter_function(&q, 1.0).is_err());
    }

    #[test]
    fn udd_lambda_identities() {
        for n in 1..=20usize {
            let s = generate_udd(n, 1.0).unwrap();
            for p in 1..=n as u32 {
                let l = lambda_p(&s, p).unwrap();
                assert!(l.abs() < 1e-12, "N={n} p={p} Λ={l:e}");
            }
            // closed form of the first non-vanishing moment: |Λ_{N+1}| = (N+1)/4^N
            let next = lambda_p(&s, n as u32 + 1).unwrap();
            let exact = (n + 1) as f64 / 4f64.powi(n as i32);
            assert!((next.abs() - exact).abs() < 1e-12, "N={n}: {next}");
            assert!(next.abs() > 1e-4 || n >= 9);
        }
    }

    #[test]
    fn modulation_examples() {
        let free = modulation(&PulseSequence::free(1.0).unwrap()).unwrap();
        for t in [0.0, 0.3, 1.0] {
            assert_eq!(free.value(t), 1.0);
        }
        let u1 = modulation(&generate_udd(1, 2.0).unwrap()).unwrap();
        assert_eq!(u1.value(0.0), 1.0);
        assert_eq!(u1.value(1.5), -1.0);
        let u2 = modulation(&generate_udd(2, 1.0).unwrap()).unwrap();
        assert_eq!(u2.value(0.5), -1.0);
        assert_eq!(u2.value(0.9), 1.0);
        assert_eq!(u2.flips(), 2);
    }

    #[test]
    fn filter_examples() {
        let free = PulseSequence::free(1.7).unwrap();
        assert!((filter_function(&free, 0.0).unwrap() - 1.7).norm() < 1e-15);
        assert!(
            filter_function(&generate_udd(1, 1.0).unwrap(), 0.0)
                .unwrap()
                .norm()
                < 1e-15
        );

        let i = Complex64::i();
        for &(w, t) in &[(1.0, 1.0), (3.3, 0.7), (40.0, 2.0), (1e-5, 1.0)] {
            let s = generate_udd(1, t).unwrap();
            let oracle = -((i * w * t / 2.0).exp() - 1.0).powi(2) / (i * w);
            let got = filter_function(&s, w).unwrap();
            assert!(
                (got - oracle).norm() <= 1e-13 * oracle.norm().max(1e-300) + 1e-18,
                "ω={w}"
            );
        }
    }

    #[test]
    fn filter_matches_closed_form_sum() {
        // (1/iω) Σ (-1)^j (e^{iωT_{j+1}} - e^{iωT_j}) away from ω = 0.
        let i = Complex64::i();
        let s = generate_udd(5, 2.0).unwrap();
        let x = s.switch_times();
        for &w in &[0.7, 2.0, 11.0, -3.0] {
            let mut oracle = Complex64::new(0.0, 0.0);
            for j in 0..x.len() - 1 {
                let sign = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
                oracle += sign * ((i * w * x[j + 1]).exp() - (i * w * x[j]).exp());
            }
            oracle /= i * w;
            assert!((filter_function(&s, w).unwrap() - oracle).norm() < 1e-13);
        }
    }

    #[test]
    fn taylor_check_examples() {
        let u4 = generate_udd(4, 1.0).unwrap();
        let l = filter_taylor_check(&u4, 5).unwrap();
        assert!(l[..4].iter().all(|x| x.abs() < 1e-12));
        assert!(l[4].abs() > 1e-3);

        let c1 = generate_cpmg(1, 1.0).unwrap();
        let l = filter_taylor_check(&c1, 3).unwrap();
        assert!(l[0].abs() < 1e-15 && l[1].abs() < 1e-15);
        assert!((l[2] - 0.1875).abs() < 1e-15);
    }

    #[test]
    fn taylor_check_over_families() {
        for n in 1..=12 {
            let s = generate_udd(n, 3.0).unwrap();
            filter_taylor_check(&s, n.max(8) as u32).unwrap();
            let s = generate_periodic(n, 0.5).unwrap();
            filter_taylor_check(&s, n.max(8) as u32).unwrap();
        }
    }

    proptest! {
        #[test]
        fn lambda_matches_oracle(mut xs in prop::collection::vec(0.001f64..0.999, 0..12), p in 1i32..10) {
            xs.sort_by(f64::total_cmp);
            xs.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
            let pulses = xs.iter().map(|&t| Pulse::new(t * 2.0, Pauli::X)).collect();
            let s = PulseSequence::new(2.0, pulses, Pauli::I, "rand").unwrap();
            let got = lambda_p(&s, p as u32).unwrap();
            prop_assert!((got - lambda_oracle(&xs, p)).abs() < 1e-12);
        }

        #[test]
        fn filter_at_zero_is_t_lambda1(mut xs in prop::collection::vec(0.001f64..0.999, 0..12), t in 0.1f64..10.0) {
            xs.sort_by(f64::total_cmp);
            xs.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
            let pulses = xs.iter().map(|&x| Pulse::new(x * t, Pauli::Y)).collect();
            let s = PulseSequence::new(t, pulses, Pauli::I, "rand").unwrap();
            let f0 = filter_function(&s, 0.0).unwrap();
            prop_assert!((f0 - t * lambda_p(&s, 1).unwrap()).norm() < 1e-12 * t);
            let n = s.len().max(8) as u32;
            prop_assert!(filter_taylor_check(&s, n).is_ok());
        }
    }
}
