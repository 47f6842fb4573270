//! JSON experiment configuration and its validation.

use std::path::{Path, PathBuf};

use ddkit::classicalnoise::NoiseSpectrum;
use ddkit::finitebath::{random_hamiltonian, QubitBathHamiltonian};
use ddkit::orderfit::{make_time_grid, DEFAULT_CEILING, DEFAULT_FLOOR};
use ddkit::spinboson::{modes_from_csv, BosonMode};
use ddkit::stateprotect::{random_protected_system, ProtectedSystem};
use ddkit::PulseSequence;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::family::{Family, SequenceSpec};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Spinboson,
    Finitebath,
    Noise,
    Protect,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Spinboson => "spinboson",
            Engine::Finitebath => "finitebath",
            Engine::Noise => "noise",
            Engine::Protect => "protect",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub engine: Engine,
    pub sequence: SequenceSpec,
    /// Engine-specific; see [`SpinBosonInstance`], [`FiniteBathInstance`],
    /// [`NoiseInstance`] and [`ProtectInstance`].
    pub instance: Value,
    pub sweep: SweepSpec,
    #[serde(default)]
    pub fit: Option<FitSpec>,
    pub outputs: OutputSpec,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub times: Option<Vec<f64>>,
    #[serde(default)]
    pub t_max: Option<f64>,
    #[serde(default)]
    pub points: Option<usize>,
    #[serde(default)]
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMode {
    /// `|slope − claimed| ≤ tolerance`
    #[default]
    Band,
    /// `slope ≥ claimed − tolerance`
    AtLeast,
    /// `slope ≤ claimed + tolerance`
    AtMost,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSpec {
    pub metric: String,
    pub claimed_order: f64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub mode: FitMode,
    #[serde(default = "default_floor")]
    pub floor: f64,
    #[serde(default = "default_ceiling")]
    pub ceiling: f64,
}

fn default_tolerance() -> f64 {
    0.3
}
fn default_floor() -> f64 {
    DEFAULT_FLOOR
}
fn default_ceiling() -> f64 {
    DEFAULT_CEILING
}

impl FitSpec {
    pub fn passes(&self, slope: f64) -> bool {
        match self.mode {
            FitMode::Band => (slope - self.claimed_order).abs() <= self.tolerance,
            FitMode::AtLeast => slope >= self.claimed_order - self.tolerance,
            FitMode::AtMost => slope <= self.claimed_order + self.tolerance,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub csv: PathBuf,
    #[serde(default)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinBosonInstance {
    /// CSV file with an `omega,kappa` header.
    #[serde(default)]
    pub modes_file: Option<PathBuf>,
    /// Inline `[omega, kappa]` pairs.
    #[serde(default)]
    pub modes: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteBathInstance {
    pub dim: usize,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default = "one")]
    pub beta: f64,
    /// Drop the X and Y couplings.
    #[serde(default)]
    pub pure_dephasing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKindSpec {
    OhmicSharp,
    InverseQuarticSoft,
    Tabulated,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSpec {
    pub kind: SpectrumKindSpec,
    #[serde(default)]
    pub amplitude: Option<f64>,
    #[serde(default)]
    pub cutoff: Option<f64>,
    /// Soft spectrum only; defaults to `0.05 / T_max` of the sweep.
    #[serde(default)]
    pub omega_min: Option<f64>,
    /// Tabulated spectrum: CSV with an `omega,S` header.
    #[serde(default)]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseInstance {
    pub spectrum: SpectrumSpec,
    #[serde(default = "default_realizations")]
    pub realizations: usize,
}

fn default_realizations() -> usize {
    2000
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtectInstance {
    pub dim: usize,
    #[serde(default = "one")]
    pub norm: f64,
    #[serde(default = "yes")]
    pub final_pulse: bool,
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}

/// A validated, fully resolved experiment.
pub struct Plan {
    pub engine: Engine,
    pub sequence: SequenceSpec,
    pub instance: Instance,
    pub times: Vec<f64>,
    pub sequences: Vec<PulseSequence>,
    pub fit: Option<FitSpec>,
    pub csv_path: PathBuf,
    pub report_path: Option<PathBuf>,
    pub seed: u64,
    pub config_sha256: String,
}

pub enum Instance {
    SpinBoson(Vec<BosonMode>),
    FiniteBath(QubitBathHamiltonian),
    Noise {
        spectrum: NoiseSpectrum,
        realizations: usize,
    },
    Protect {
        system: ProtectedSystem,
        final_pulse: bool,
    },
}

/// Names of the numeric columns each engine writes, in CSV order.
pub fn metric_columns(engine: Engine) -> &'static [&'static str] {
    match engine {
        Engine::Spinboson => &["T", "coherence", "deficit"],
        Engine::Finitebath => &[
            "T",
            "dephasing_error",
            "relaxation_error",
            "generator_dephasing",
            "generator_relaxation",
        ],
        Engine::Noise => &["N", "T", "chi_analytic", "coherence_mc", "stderr"],
        Engine::Protect => &["T", "commutator_error", "leakage"],
    }
}

fn usage(msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(msg.to_string())
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn read_input(base: &Path, p: &Path) -> Result<String, CliError> {
    let path = resolve(base, p);
    std::fs::read_to_string(&path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn instance<T: serde::de::DeserializeOwned>(value: &Value, engine: Engine) -> Result<T, CliError> {
    serde_json::from_value(value.clone()).map_err(|e| usage(format!("invalid {engine:?} instance: {e}")))
}

impl SweepSpec {
    pub fn times(&self) -> Result<Vec<f64>, CliError> {
        let times = match (&self.times, self.t_max) {
            (Some(t), None) => t.clone(),
            (None, Some(t_max)) => make_time_grid(
                t_max,
                self.points.unwrap_or(12),
                self.ratio.unwrap_or(std::f64::consts::SQRT_2),
            )
            .map_err(usage)?,
            _ => return Err(usage("sweep needs exactly one of `times` or `t_max`")),
        };
        if times.is_empty() {
            return Err(usage("sweep has no times"));
        }
        if !times.iter().all(|t| t.is_finite() && *t > 0.0) || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(usage("sweep times must be positive and strictly increasing"));
        }
        Ok(times)
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| usage(format!("invalid config: {e}")))
    }

    /// Checks every parameter and loads every referenced file. Nothing is computed
    /// beyond what is needed to build the sequences and the instance.
    ///
    /// Relative paths are taken relative to `base`, the config file's directory.
    pub fn plan(&self, base: &Path, config_sha256: String) -> Result<Plan, CliError> {
        let times = self.sweep.times()?;
        let sequences = times
            .iter()
            .map(|&t| self.sequence.build(t))
            .collect::<ddkit::Result<Vec<_>>>()
            .map_err(usage)?;

        let instance = match self.engine {
            Engine::Spinboson => {
                let spec: SpinBosonInstance = instance(&self.instance, self.engine)?;
                let modes = match (&spec.modes_file, &spec.modes) {
                    (Some(f), None) => modes_from_csv(&read_input(base, f)?).map_err(usage)?,
                    (None, Some(m)) => m
                        .iter()
                        .map(|&[w, k]| BosonMode::new(w, k))
                        .collect::<ddkit::Result<_>>()
                        .map_err(usage)?,
                    _ => {
                        return Err(usage(
                            "spinboson instance needs exactly one of `modes_file` or `modes`",
                        ))
                    }
                };
                Instance::SpinBoson(modes)
            }
            Engine::Finitebath => {
                let spec: FiniteBathInstance = instance(&self.instance, self.engine)?;
                let h = random_hamiltonian(spec.dim, spec.alpha, spec.beta, self.seed).map_err(usage)?;
                Instance::FiniteBath(if spec.pure_dephasing {
                    h.pure_dephasing()
                } else {
                    h
                })
            }
            Engine::Noise => {
                let spec: NoiseInstance = instance(&self.instance, self.engine)?;
                if spec.realizations < ddkit::classicalnoise::MIN_REALIZATIONS {
                    return Err(usage(format!(
                        "noise needs at least {} realizations",
                        ddkit::classicalnoise::MIN_REALIZATIONS
                    )));
                }
                let t_max = *times.last().expect("non-empty sweep");
                let spectrum = spectrum(&spec.spectrum, base, t_max)?;
                Instance::Noise {
                    spectrum,
                    realizations: spec.realizations,
                }
            }
            Engine::Protect => {
                let spec: ProtectInstance = instance(&self.instance, self.engine)?;
                if !matches!(self.sequence.family, Family::Udd | Family::Free) || self.sequence.axis.is_some()
                {
                    return Err(usage(
                        "protect engine uses UDD timing: family must be `udd` or `free`",
                    ));
                }
                let system = random_protected_system(spec.dim, spec.norm, self.seed).map_err(usage)?;
                Instance::Protect {
                    system,
                    final_pulse: spec.final_pulse,
                }
            }
        };

        if let Some(fit) = &self.fit {
            let columns = metric_columns(self.engine);
            if fit.metric == "T" || !columns.contains(&fit.metric.as_str()) {
                return Err(usage(format!(
                    "fit metric '{}' is not one of {:?}",
                    fit.metric,
                    &columns[1..]
                )));
            }
            if !(fit.tolerance >= 0.0 && fit.floor >= 0.0 && fit.ceiling > fit.floor) {
                return Err(usage("fit needs tolerance ≥ 0 and 0 ≤ floor < ceiling"));
            }
            if times.len() < ddkit::orderfit::MIN_INPUT_PAIRS {
                return Err(usage(format!(
                    "a fit needs at least {} sweep points",
                    ddkit::orderfit::MIN_INPUT_PAIRS
                )));
            }
        }

        Ok(Plan {
            engine: self.engine,
            sequence: self.sequence.clone(),
            instance,
            times,
            sequences,
            fit: self.fit.clone(),
            csv_path: resolve(base, &self.outputs.csv),
            report_path: self.outputs.report.as_ref().map(|p| resolve(base, p)),
            seed: self.seed,
            config_sha256,
        })
    }
}

fn spectrum(spec: &SpectrumSpec, base: &Path, t_max: f64) -> Result<NoiseSpectrum, CliError> {
    let need = |v: Option<f64>, name: &str| v.ok_or_else(|| usage(format!("spectrum needs `{name}`")));
    let built = match spec.kind {
        SpectrumKindSpec::OhmicSharp => {
            NoiseSpectrum::ohmic_sharp(need(spec.amplitude, "amplitude")?, need(spec.cutoff, "cutoff")?)
        }
        SpectrumKindSpec::InverseQuarticSoft => {
            let (a, wc) = (need(spec.amplitude, "amplitude")?, need(spec.cutoff, "cutoff")?);
            match spec.omega_min {
                Some(w) => NoiseSpectrum::inverse_quartic_soft(a, wc, w),
                None => NoiseSpectrum::inverse_quartic_soft_for(a, wc, t_max),
            }
        }
        SpectrumKindSpec::Tabulated => {
            let file = spec
                .file
                .as_ref()
                .ok_or_else(|| usage("tabulated spectrum needs `file`"))?;
            NoiseSpectrum::from_csv(&read_input(base, file)?)
        }
    };
    built.map_err(usage)
}
