//! Sequence families. Operator strings are expanded in physical time order
//! (the rightmost factor of a propagator product acts first).

use super::{Pulse, PulseSequence};
use crate::error::{invalid, Result};
use crate::pauli::Pauli;

const MAX_DEPHASING_CDD_LEVEL: u32 = 24;
const MAX_GENERAL_CDD_LEVEL: u32 = 12;

/// `sin²(jπ / (2(N+1)))`, the fractional position of the j-th UDD pulse.
///
/// The upper half is mirrored from the lower half so that `T_j + T_{N+1-j} = T`
/// holds to rounding. `cos(jπ/(N+1))` is rational only at `j/(N+1) ∈ {1/3, 1/2, 2/3}`;
/// those fractions are returned exactly.
pub fn udd_fraction(j: usize, n: usize) -> f64 {
    let m = n + 1;
    if 2 * j == m {
        return 0.5;
    }
    if 2 * j > m {
        return 1.0 - udd_fraction(m - j, n);
    }
    if 3 * j == m {
        return 0.25;
    }
    let s = (std::f64::consts::PI * j as f64 / (2 * m) as f64).sin();
    s * s
}

fn check_duration(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!(
            "{name} must be positive and finite, got {value}"
        )))
    }
}

/// N-pulse Uhrig sequence on the X axis.
pub fn generate_udd(n: usize, total_time: f64) -> Result<PulseSequence> {
    if n == 0 {
        return Err(invalid("UDD order N must be at least 1"));
    }
    check_duration("total time", total_time)?;
    let pulses = (1..=n)
        .map(|j| Pulse::new(total_time * udd_fraction(j, n), Pauli::X))
        .collect();
    PulseSequence::new(total_time, pulses, Pauli::I, format!("udd:{n}"))
}

/// CPMG: `n_blocks` repetitions of the 4τ block with X pulses at τ and 3τ.
pub fn generate_cpmg(n_blocks: usize, total_time: f64) -> Result<PulseSequence> {
    if n_blocks == 0 {
        return Err(invalid("CPMG needs at least one block"));
    }
    check_duration("total time", total_time)?;
    let quarters = (4 * n_blocks) as f64;
    let pulses = (0..n_blocks)
        .flat_map(|k| [4 * k + 1, 4 * k + 3])
        .map(|q| Pulse::new(total_time * (q as f64 / quarters), Pauli::X))
        .collect();
    PulseSequence::new(total_time, pulses, Pauli::I, format!("cpmg:{n_blocks}"))
}

/// Periodic DD: N equally spaced X pulses at `jT/(N+1)`.
pub fn generate_periodic(n: usize, total_time: f64) -> Result<PulseSequence> {
    if n == 0 {
        return Err(invalid("periodic DD needs at least one pulse"));
    }
    check_duration("total time", total_time)?;
    let pulses = (1..=n)
        .map(|j| Pulse::new(total_time * (j as f64 / (n + 1) as f64), Pauli::X))
        .collect();
    PulseSequence::new(total_time, pulses, Pauli::I, format!("pdd:{n}"))
}

type TickEvents = Vec<(u64, Pauli)>;

fn merge_ticks(mut ev: TickEvents) -> TickEvents {
    ev.sort_by_key(|e| e.0);
    let mut out: TickEvents = Vec::with_capacity(ev.len());
    for (t, p) in ev {
        match out.last_mut() {
            Some(last) if last.0 == t => last.1 = last.1 * p,
            _ => out.push((t, p)),
        }
    }
    out.retain(|e| !e.1.is_identity());
    out
}

/// `U_n = σx U_{n-1} σx U_{n-1}` on a grid of `2^n` ticks, boundary events kept.
fn cdd_dephasing_ticks(level: u32) -> TickEvents {
    if level == 0 {
        return Vec::new();
    }
    let inner = cdd_dephasing_ticks(level - 1);
    let half = 1u64 << (level - 1);
    let mut ev = inner.clone();
    ev.push((half, Pauli::X));
    ev.extend(inner.iter().map(|&(t, p)| (t + half, p)));
    ev.push((2 * half, Pauli::X));
    merge_ticks(ev)
}

/// `U_n = [σz U σz][σy U σy][σx U σx] U` (time order) on `4^n` ticks.
fn cdd_general_ticks(level: u32) -> TickEvents {
    if level == 0 {
        return Vec::new();
    }
    let inner = cdd_general_ticks(level - 1);
    let q = 1u64 << (2 * (level - 1));
    let mut ev = Vec::with_capacity(4 * inner.len() + 6);
    let shifted = |k: u64| inner.iter().map(move |&(t, p)| (t + k * q, p));
    ev.push((0, Pauli::Z));
    ev.extend(shifted(0));
    ev.push((q, Pauli::Z));
    ev.push((q, Pauli::Y));
    ev.extend(shifted(1));
    ev.push((2 * q, Pauli::Y));
    ev.push((2 * q, Pauli::X));
    ev.extend(shifted(2));
    ev.push((3 * q, Pauli::X));
    ev.extend(shifted(3));
    merge_ticks(ev)
}

fn from_ticks(ticks: TickEvents, tau: f64, n_ticks: u64, label: String) -> Result<PulseSequence> {
    let total = tau * n_ticks as f64;
    let events = ticks
        .into_iter()
        .map(|(t, p)| Pulse::new(tau * t as f64, p))
        .collect();
    PulseSequence::from_events(total, events, label)
}

/// Concatenated DD against pure dephasing, level `n`, total time `2^n τ`.
pub fn generate_cdd_dephasing(level: u32, tau: f64) -> Result<PulseSequence> {
    check_duration("tau", tau)?;
    if level > MAX_DEPHASING_CDD_LEVEL {
        return Err(invalid(format!(
            "CDD level {level} exceeds the supported maximum {MAX_DEPHASING_CDD_LEVEL}"
        )));
    }
    from_ticks(
        cdd_dephasing_ticks(level),
        tau,
        1u64 << level,
        format!("cdd:{level}"),
    )
}

/// Four-segment concatenated DD against general decoherence, total time `4^n τ`.
pub fn generate_cdd_general(level: u32, tau: f64) -> Result<PulseSequence> {
    check_duration("tau", tau)?;
    if level > MAX_GENERAL_CDD_LEVEL {
        return Err(invalid(format!(
            "general CDD level {level} exceeds the supported maximum {MAX_GENERAL_CDD_LEVEL}"
        )));
    }
    from_ticks(
        cdd_general_ticks(level),
        tau,
        1u64 << (2 * level),
        format!("cdd4:{level}"),
    )
}

/// Concatenated UDD: Z-axis UDD-N blocks of length `tau_inner` used as the
/// building block of an `m`-level `σx(·)σx(·)` concatenation.
pub fn generate_cudd(n: usize, level: u32, tau_inner: f64) -> Result<PulseSequence> {
    if n == 0 {
        return Err(invalid("CUDD inner order N must be at least 1"));
    }
    check_duration("tau_inner", tau_inner)?;
    if level > MAX_DEPHASING_CDD_LEVEL {
        return Err(invalid(format!("CUDD level {level} is too large")));
    }
    let blocks = 1u64 << level;
    let mut events: Vec<Pulse> = Vec::with_capacity(blocks as usize * (n + 1));
    for b in 0..blocks {
        let offset = b as f64;
        events.extend((1..=n).map(|j| Pulse::new(tau_inner * (offset + udd_fraction(j, n)), Pauli::Z)));
    }
    events.extend(
        cdd_dephasing_ticks(level)
            .into_iter()
            .map(|(t, p)| Pulse::new(tau_inner * t as f64, p)),
    );
    PulseSequence::from_events(tau_inner * blocks as f64, events, format!("cudd:{n},{level}"))
}

/// Quadratic DD: outer X-axis UDD-M, each outer interval filled with a Z-axis
/// UDD-N scaled to that interval. `N = 0` leaves the intervals empty.
pub fn generate_qdd(outer: usize, inner: usize, total_time: f64) -> Result<PulseSequence> {
    if outer == 0 {
        return Err(invalid("QDD outer order M must be at least 1"));
    }
    check_duration("total time", total_time)?;
    let mut bounds = Vec::with_capacity(outer + 2);
    bounds.push(0.0);
    bounds.extend((1..=outer).map(|j| total_time * udd_fraction(j, outer)));
    bounds.push(total_time);

    let mut events = Vec::with_capacity(outer + (outer + 1) * inner);
    events.extend(bounds[1..=outer].iter().map(|&t| Pulse::new(t, Pauli::X)));
    for w in bounds.windows(2) {
        let (a, b) = (w[0], w[1]);
        events.extend((1..=inner).map(|k| Pulse::new(a + (b - a) * udd_fraction(k, inner), Pauli::Z)));
    }
    PulseSequence::from_events(total_time, events, format!("qdd:{outer},{inner}"))
}
