//! Instantaneous-pulse decoupling sequences.
//!
//! A [`PulseSequence`] stores only the pulses strictly inside `(0, T)`. Operators
//! that the recursive constructions leave on the boundaries are multiplied into
//! a single [`Pauli`] parity; every error metric in this crate is invariant under
//! such boundary frame changes.

mod analysis;
mod generalized;
mod generate;

use std::fmt::Write as _;

pub use analysis::{
    filter_function, filter_function_complex, filter_taylor_check, lambda_p, lambda_series, modulation,
    ModulationFunction,
};
pub use generalized::{
    build_generalized_modulation, odd_harmonics_check, GeneralizedModulation, HarmonicReport,
    ModulationComponent, ThetaSamples, DEFAULT_THETA_GRID, HARMONIC_TOLERANCE,
};
pub use generate::{
    generate_cdd_dephasing, generate_cdd_general, generate_cpmg, generate_cudd, generate_periodic,
    generate_qdd, generate_udd, udd_fraction,
};

use crate::error::{invalid, Error, Result};
use crate::format::sig17;
use crate::pauli::{self, Pauli};

/// Relative tolerance (in units of the total time) below which two pulse times coincide.
pub const MERGE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse {
    pub time: f64,
    pub axis: Pauli,
}

impl Pulse {
    pub fn new(time: f64, axis: Pauli) -> Self {
        Self { time, axis }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseSequence {
    total_time: f64,
    pulses: Vec<Pulse>,
    parity: Pauli,
    label: String,
}

impl PulseSequence {
    /// Free evolution over `[0, T]`.
    pub fn free(total_time: f64) -> Result<Self> {
        check_total_time(total_time)?;
        Ok(Self {
            total_time,
            pulses: Vec::new(),
            parity: Pauli::I,
            label: "free".into(),
        })
    }

    /// Builds a sequence from already-canonical interior pulses.
    pub fn new(total_time: f64, pulses: Vec<Pulse>, parity: Pauli, label: impl Into<String>) -> Result<Self> {
        check_total_time(total_time)?;
        let mut prev = 0.0;
        for (k, p) in pulses.iter().enumerate() {
            if !p.time.is_finite() || p.time <= 0.0 || p.time >= total_time {
                return Err(invalid(format!(
                    "pulse {k} at t={} is not strictly inside (0, {total_time})",
                    p.time
                )));
            }
            if k > 0 && p.time <= prev {
                return Err(invalid(format!("pulse times must strictly increase (pulse {k})")));
            }
            if p.axis.is_identity() {
                return Err(invalid(format!("pulse {k} has identity axis")));
            }
            prev = p.time;
        }
        Ok(Self {
            total_time,
            pulses,
            parity,
            label: label.into(),
        })
    }

    /// Canonicalizes an arbitrary operator string.
    ///
    /// Events are sorted by time, events closer than [`MERGE_TOLERANCE`]·T are
    /// multiplied together modulo phase, identities are dropped, and events at
    /// `t = 0` or `t = T` are folded into the parity.
    pub fn from_events(total_time: f64, mut events: Vec<Pulse>, label: impl Into<String>) -> Result<Self> {
        check_total_time(total_time)?;
        let tol = MERGE_TOLERANCE * total_time;
        if let Some(bad) = events
            .iter()
            .find(|e| !e.time.is_finite() || e.time < -tol || e.time > total_time + tol)
        {
            return Err(invalid(format!(
                "event at t={} lies outside [0, {total_time}]",
                bad.time
            )));
        }
        events.sort_by(|a, b| a.time.total_cmp(&b.time));

        let mut merged: Vec<Pulse> = Vec::with_capacity(events.len());
        for e in events {
            match merged.last_mut() {
                Some(last) if (e.time - last.time).abs() <= tol => last.axis = last.axis * e.axis,
                _ => merged.push(e),
            }
        }

        let mut parity = Pauli::I;
        let mut pulses = Vec::with_capacity(merged.len());
        for p in merged {
            if p.time <= tol || p.time >= total_time - tol {
                parity = parity * p.axis;
            } else if !p.axis.is_identity() {
                pulses.push(p);
            }
        }
        Ok(Self {
            total_time,
            pulses,
            parity,
            label: label.into(),
        })
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn pulses(&self) -> &[Pulse] {
        &self.pulses
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    pub fn parity(&self) -> Pauli {
        self.parity
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.pulses.iter().map(|p| p.time)
    }

    /// `T_0 = 0, T_1, …, T_N, T_{N+1} = T`.
    pub fn switch_times(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.pulses.len() + 2);
        out.push(0.0);
        out.extend(self.times());
        out.push(self.total_time);
        out
    }

    /// The common axis when every pulse uses the same one. Free evolution has none.
    pub fn single_axis(&self) -> Option<Pauli> {
        let first = self.pulses.first()?.axis;
        self.pulses.iter().all(|p| p.axis == first).then_some(first)
    }

    pub fn is_single_axis(&self) -> bool {
        self.pulses.is_empty() || self.single_axis().is_some()
    }

    /// Product of all interior pulses, modulo phase.
    pub fn frame(&self) -> Pauli {
        pauli::product(self.pulses.iter().map(|p| p.axis))
    }

    /// Same timing with every pulse, and a non-trivial parity, moved to `axis`.
    pub fn with_axis(&self, axis: Pauli) -> Result<Self> {
        if axis.is_identity() {
            return Err(invalid("cannot rotate a sequence onto the identity axis"));
        }
        Ok(Self {
            total_time: self.total_time,
            pulses: self.pulses.iter().map(|p| Pulse::new(p.time, axis)).collect(),
            parity: if self.parity.is_identity() { Pauli::I } else { axis },
            label: self.label.clone(),
        })
    }

    /// Same pulse pattern stretched to a new total time.
    pub fn rescaled(&self, total_time: f64) -> Result<Self> {
        check_total_time(total_time)?;
        let s = total_time / self.total_time;
        Ok(Self {
            total_time,
            pulses: self
                .pulses
                .iter()
                .map(|p| Pulse::new(p.time * s, p.axis))
                .collect(),
            parity: self.parity,
            label: self.label.clone(),
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// CSV with a `# total_time=… parity=… label=…` comment line and an
    /// `index,time,axis` header; times carry 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# total_time={} parity={} label={}",
            sig17(self.total_time),
            self.parity,
            self.label
        );
        out.push_str("index,time,axis\n");
        for (k, p) in self.pulses.iter().enumerate() {
            let _ = writeln!(out, "{k},{},{}", sig17(p.time), p.axis);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut total_time = None;
        let mut parity = Pauli::I;
        let mut label = String::new();
        let mut pulses = Vec::new();
        let mut seen_header = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let parse_err = |message: String| Error::Parse {
                line: lineno + 1,
                message,
            };
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                if let Some((head, rest)) = meta.trim().split_once("label=") {
                    label = rest.to_string();
                    for kv in head.split_whitespace() {
                        match kv.split_once('=') {
                            Some(("total_time", v)) => {
                                total_time = Some(
                                    v.parse::<f64>()
                                        .map_err(|e| parse_err(format!("bad total_time '{v}': {e}")))?,
                                )
                            }
                            Some(("parity", v)) => parity = v.parse()?,
                            _ => {}
                        }
                    }
                }
                continue;
            }
            if !seen_header {
                if line != "index,time,axis" {
                    return Err(parse_err(format!(
                        "expected header 'index,time,axis', got '{line}'"
                    )));
                }
                seen_header = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(parse_err(format!("expected 3 fields, got {}", fields.len())));
            }
            let time = fields[1]
                .parse::<f64>()
                .map_err(|e| parse_err(format!("bad time '{}': {e}", fields[1])))?;
            pulses.push(Pulse::new(time, fields[2].parse()?));
        }
        let total_time = total_time.ok_or_else(|| invalid("sequence CSV lacks a total_time comment line"))?;
        Self::new(total_time, pulses, parity, label)
    }
}

fn check_total_time(total_time: f64) -> Result<()> {
    if total_time.is_finite() && total_time > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!(
            "total time must be positive and finite, got {total_time}"
        )))
    }
}
