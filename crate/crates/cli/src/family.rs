use clap::ValueEnum;
use ddkit::sequences::{
    generate_cdd_dephasing, generate_cdd_general, generate_cpmg, generate_cudd, generate_periodic,
    generate_qdd, generate_udd,
};
use ddkit::{Pauli, PulseSequence};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Free,
    Udd,
    Cpmg,
    Pdd,
    Cdd,
    Cdd4,
    Cudd,
    Qdd,
}

/// A sequence family with its integer parameters.
///
/// `n` is the UDD order, CPMG block count, PDD pulse count, CDD level, CUDD
/// inner order or QDD inner order. `m` is the CUDD level or QDD outer order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceSpec {
    pub family: Family,
    #[serde(default)]
    pub n: usize,
    #[serde(default)]
    pub m: Option<usize>,
    /// Replaces the axis of every pulse of a single-axis family.
    #[serde(default)]
    pub axis: Option<String>,
}

impl SequenceSpec {
    pub fn new(family: Family, n: usize, m: Option<usize>) -> Self {
        Self {
            family,
            n,
            m,
            axis: None,
        }
    }

    pub fn build(&self, total_time: f64) -> ddkit::Result<PulseSequence> {
        let level = |x: usize| -> ddkit::Result<u32> {
            u32::try_from(x).map_err(|_| ddkit::Error::InvalidArgument(format!("level {x} is too large")))
        };
        let need_m = || {
            self.m
                .ok_or_else(|| ddkit::Error::InvalidArgument(format!("family {:?} needs --m", self.family)))
        };
        let seq = match self.family {
            Family::Free => PulseSequence::free(total_time)?,
            Family::Udd => generate_udd(self.n, total_time)?,
            Family::Cpmg => generate_cpmg(self.n, total_time)?,
            Family::Pdd => generate_periodic(self.n, total_time)?,
            Family::Cdd => generate_cdd_dephasing(level(self.n)?, 1.0)?.rescaled(total_time)?,
            Family::Cdd4 => generate_cdd_general(level(self.n)?, 1.0)?.rescaled(total_time)?,
            Family::Cudd => generate_cudd(self.n, level(need_m()?)?, 1.0)?.rescaled(total_time)?,
            Family::Qdd => generate_qdd(need_m()?, self.n, total_time)?,
        };
        match &self.axis {
            None => Ok(seq),
            Some(a) => seq.with_axis(a.parse::<Pauli>()?),
        }
    }
}
