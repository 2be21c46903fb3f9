//! Scenario files.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! [system]            # every SystemConfig field; `inf` for perfect CSIR
//! [sweep]             # parameter = "tx_power_dbm" | "xi" | "phi" | "kappa"
//!                     # start, stop, step; tx_power_dbm when not sweeping power
//! [mc]                # n_samples, seed, modes (all optional)
//! [output]            # metrics, schemes (optional)
//! [rsma]              # overrides applied to the RSMA scheme
//! [noma]              # alpha_far and overrides applied to the NOMA scheme
//! [[variant]]         # label plus optional [variant.system], [variant.rsma],
//!                     # [variant.noma] override tables
//! ```
//!
//! Unknown keys are errors. Sweeping `kappa` sets `kappa_t_sq` and every
//! `kappa_r_sq` to the grid value; `xi` and `phi` set every user's entry.

use std::path::{Path, PathBuf};

use rsma_core::{McMode, NomaConfig, SystemConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Environment variable holding the default Monte-Carlo sample count.
pub const SAMPLES_ENV: &str = "RSMA_MC_SAMPLES";
pub const DEFAULT_SAMPLES: u64 = 1_000_000;
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    TxPowerDbm,
    Xi,
    Phi,
    Kappa,
}

impl SweepParameter {
    pub const ALL: [SweepParameter; 4] = [
        SweepParameter::TxPowerDbm,
        SweepParameter::Xi,
        SweepParameter::Phi,
        SweepParameter::Kappa,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::TxPowerDbm => "tx_power_dbm",
            SweepParameter::Xi => "xi",
            SweepParameter::Phi => "phi",
            SweepParameter::Kappa => "kappa",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Rsma,
    Noma,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Rsma => "rsma",
            Scheme::Noma => "noma",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [Scheme::Rsma, Scheme::Noma].into_iter().find(|s| s.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Rate,
    SumRate,
    Ee,
    Jfi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    /// Fixed transmit power when another parameter is swept.
    #[serde(default)]
    pub tx_power_dbm: Option<f64>,
}

impl SweepSpec {
    /// `start, start + step, ...` up to `stop` inclusive.
    pub fn grid(&self) -> Vec<f64> {
        if !(self.step > 0.0) || !(self.stop >= self.start) {
            return Vec::new();
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|k| self.start + k as f64 * self.step).collect()
    }

    /// Transmit power at a grid value.
    pub fn power_at(&self, value: f64) -> f64 {
        match self.parameter {
            SweepParameter::TxPowerDbm => value,
            _ => self.tx_power_dbm.unwrap_or(f64::NAN),
        }
    }
}

/// Sets the swept parameter on a copy of `config`.
pub fn apply_sweep(config: &SystemConfig, parameter: SweepParameter, value: f64) -> SystemConfig {
    let mut cfg = config.clone();
    let n = cfg.n_users;
    match parameter {
        SweepParameter::TxPowerDbm => {}
        SweepParameter::Xi => cfg.xi = vec![value; n],
        SweepParameter::Phi => cfg.phi = vec![value; n],
        SweepParameter::Kappa => {
            cfg.kappa_t_sq = value;
            cfg.kappa_r_sq = vec![value; n];
        }
    }
    cfg
}

/// Partial SystemConfig used by scheme and variant sections.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub n_users: Option<usize>,
    pub beta_common: Option<f64>,
    pub beta_private: Option<Vec<f64>>,
    pub kappa_t_sq: Option<f64>,
    pub kappa_r_sq: Option<Vec<f64>>,
    pub phi: Option<Vec<f64>>,
    pub xi: Option<Vec<f64>>,
    pub m: Option<Vec<f64>>,
    pub distance_m: Option<Vec<f64>>,
    pub pathloss_exp: Option<Vec<f64>>,
    pub pathloss_ref: Option<f64>,
    pub noise_dbm: Option<f64>,
    pub circuit_power_w: Option<f64>,
    /// NOMA only.
    pub alpha_far: Option<f64>,
}

macro_rules! apply_fields {
    ($src:expr, $dst:expr, $($field:ident),*) => {
        $(if let Some(v) = &$src.$field {
            $dst.$field = v.clone();
        })*
    };
}

impl Overrides {
    pub fn apply(&self, cfg: &mut SystemConfig) {
        apply_fields!(
            self,
            cfg,
            n_users,
            beta_common,
            beta_private,
            kappa_t_sq,
            kappa_r_sq,
            phi,
            xi,
            m,
            distance_m,
            pathloss_exp,
            pathloss_ref,
            noise_dbm,
            circuit_power_w
        );
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMc {
    n_samples: Option<u64>,
    seed: Option<u64>,
    modes: Option<Vec<McMode>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    metrics: Option<Vec<Metric>>,
    schemes: Option<Vec<Scheme>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVariant {
    label: String,
    system: Option<Overrides>,
    rsma: Option<Overrides>,
    noma: Option<Overrides>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    system: SystemConfig,
    sweep: SweepSpec,
    mc: Option<RawMc>,
    #[serde(default)]
    output: RawOutput,
    rsma: Option<Overrides>,
    noma: Option<Overrides>,
    #[serde(default, rename = "variant")]
    variants: Vec<RawVariant>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McSettings {
    pub n_samples: u64,
    pub seed: u64,
    pub modes: Vec<McMode>,
}

impl McSettings {
    pub fn wants(&self, mode: McMode) -> bool {
        self.modes.contains(&mode)
    }
}

/// One curve family: the RSMA config and, when requested, the NOMA config.
#[derive(Debug, Clone, PartialEq)]
pub struct Variant {
    pub label: String,
    pub rsma: SystemConfig,
    pub noma: Option<NomaConfig>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub sweep: SweepSpec,
    pub mc: McSettings,
    pub metrics: Vec<Metric>,
    pub schemes: Vec<Scheme>,
    pub variants: Vec<Variant>,
}

impl Scenario {
    pub fn wants(&self, metric: Metric) -> bool {
        self.metrics.contains(&metric)
    }

    /// Command-line overrides; they take precedence over the file.
    pub fn override_mc(&mut self, n_samples: Option<u64>, seed: Option<u64>) -> Result<()> {
        if let Some(n) = n_samples {
            check_samples(n, "--samples")?;
            self.mc.n_samples = n;
        }
        if let Some(s) = seed {
            self.mc.seed = s;
        }
        Ok(())
    }
}

fn check_samples(n: u64, key: &str) -> Result<()> {
    if n < rsma_core::montecarlo::MIN_SAMPLES {
        return Err(CliError::validation(
            [key],
            format!("n_samples = {n}, at least {} required", rsma_core::montecarlo::MIN_SAMPLES),
        ));
    }
    Ok(())
}

/// Reads and validates a scenario file, taking the default sample count
/// from the environment.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let env = std::env::var(SAMPLES_ENV).ok();
    parse_scenario(&text, path, env.as_deref())
}

/// Parses scenario text. `env_samples` is the raw value of
/// [`SAMPLES_ENV`], if any.
pub fn parse_scenario(text: &str, path: &Path, env_samples: Option<&str>) -> Result<Scenario> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| parse_error(text, path, &e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".to_string());
    resolve(raw, name, env_samples)
}

fn parse_error(text: &str, path: &Path, err: &toml::de::Error) -> CliError {
    let (line, column) = match err.span() {
        Some(span) => {
            let before = &text[..span.start.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
            (Some(line), Some(column))
        }
        None => (None, None),
    };
    CliError::Parse {
        path: PathBuf::from(path),
        line,
        column,
        message: err.message().trim().to_string(),
    }
}

fn config_error(context: &str, err: rsma_core::Error) -> CliError {
    let keys: Vec<String> = err.offending_keys().iter().map(|k| format!("{context}.{k}")).collect();
    let keys = if keys.is_empty() { vec![context.to_string()] } else { keys };
    CliError::Validation {
        keys,
        message: err.to_string(),
    }
}

fn resolve(raw: RawScenario, name: String, env_samples: Option<&str>) -> Result<Scenario> {
    raw.system.validate().map_err(|e| config_error("system", e))?;

    let sweep = raw.sweep;
    if !(sweep.step > 0.0) || !sweep.step.is_finite() {
        return Err(CliError::validation(["sweep.step"], "step must be positive"));
    }
    if !(sweep.stop >= sweep.start) || !sweep.start.is_finite() || !sweep.stop.is_finite() {
        return Err(CliError::validation(["sweep.start", "sweep.stop"], "need finite start <= stop"));
    }
    match (sweep.parameter, sweep.tx_power_dbm) {
        (SweepParameter::TxPowerDbm, Some(_)) => {
            return Err(CliError::validation(
                ["sweep.tx_power_dbm"],
                "a fixed power cannot be combined with a power sweep",
            ))
        }
        (p, None) if p != SweepParameter::TxPowerDbm => {
            return Err(CliError::validation(
                ["sweep.tx_power_dbm"],
                format!("sweeping `{}` needs a fixed tx_power_dbm", p.name()),
            ))
        }
        _ => {}
    }

    let file_mc = raw.mc.unwrap_or(RawMc {
        n_samples: None,
        seed: None,
        modes: None,
    });
    let n_samples = match (file_mc.n_samples, env_samples) {
        (Some(n), _) => {
            check_samples(n, "mc.n_samples")?;
            n
        }
        (None, Some(env)) => {
            let n = env.trim().parse::<u64>().map_err(|_| {
                CliError::validation([SAMPLES_ENV], format!("`{env}` is not a sample count"))
            })?;
            check_samples(n, SAMPLES_ENV)?;
            n
        }
        (None, None) => DEFAULT_SAMPLES,
    };
    let modes = file_mc.modes.unwrap_or_else(|| vec![McMode::ExactLog, McMode::TopsoeApprox]);
    if modes.is_empty() {
        return Err(CliError::validation(["mc.modes"], "at least one mode is required"));
    }
    let mc = McSettings {
        n_samples,
        seed: file_mc.seed.unwrap_or(DEFAULT_SEED),
        modes,
    };

    let metrics = raw
        .output
        .metrics
        .unwrap_or_else(|| vec![Metric::Rate, Metric::SumRate, Metric::Ee, Metric::Jfi]);
    if metrics.is_empty() {
        return Err(CliError::validation(["output.metrics"], "no metrics requested"));
    }
    let mut schemes = raw.output.schemes.unwrap_or_else(|| vec![Scheme::Rsma]);
    schemes.sort();
    schemes.dedup();
    if schemes.is_empty() {
        return Err(CliError::validation(["output.schemes"], "no schemes requested"));
    }

    if raw.rsma.as_ref().is_some_and(|o| o.alpha_far.is_some()) {
        return Err(CliError::validation(["rsma.alpha_far"], "alpha_far only applies to noma"));
    }

    let raw_variants = if raw.variants.is_empty() {
        vec![RawVariant {
            label: "base".to_string(),
            system: None,
            rsma: None,
            noma: None,
        }]
    } else {
        raw.variants
    };

    let mut variants = Vec::with_capacity(raw_variants.len());
    for (i, v) in raw_variants.into_iter().enumerate() {
        let context = format!("variant[{i}]");
        if v.label.trim().is_empty() {
            return Err(CliError::validation([format!("{context}.label")], "label is empty"));
        }
        if variants.iter().any(|w: &Variant| w.label == v.label) {
            return Err(CliError::validation(
                [format!("{context}.label")],
                format!("duplicate variant label `{}`", v.label),
            ));
        }
        if v.system.as_ref().is_some_and(|o| o.alpha_far.is_some())
            || v.rsma.as_ref().is_some_and(|o| o.alpha_far.is_some())
        {
            return Err(CliError::validation(
                [format!("{context}.alpha_far")],
                "alpha_far belongs in a noma section",
            ));
        }

        let mut shared = raw.system.clone();
        if let Some(o) = &v.system {
            o.apply(&mut shared);
        }
        let mut rsma = shared.clone();
        for o in [&raw.rsma, &v.rsma].into_iter().flatten() {
            o.apply(&mut rsma);
        }
        let rsma_context = if v.rsma.is_some() { format!("{context}.rsma") } else { "rsma".to_string() };
        rsma.validate().map_err(|e| config_error(&rsma_context, e))?;

        let noma = if schemes.contains(&Scheme::Noma) {
            let mut system = shared.clone();
            let mut alpha_far = None;
            for o in [&raw.noma, &v.noma].into_iter().flatten() {
                o.apply(&mut system);
                alpha_far = o.alpha_far.or(alpha_far);
            }
            let noma_context = if v.noma.is_some() { format!("{context}.noma") } else { "noma".to_string() };
            let alpha_far = alpha_far.ok_or_else(|| {
                CliError::validation([format!("{noma_context}.alpha_far")], "the noma scheme needs alpha_far")
            })?;
            let cfg = NomaConfig { system, alpha_far };
            cfg.validate().map_err(|e| config_error(&noma_context, e))?;
            Some(cfg)
        } else {
            None
        };

        for value in sweep.grid() {
            apply_sweep(&rsma, sweep.parameter, value)
                .validate()
                .map_err(|e| config_error("sweep", e))?;
        }
        variants.push(Variant {
            label: v.label,
            rsma,
            noma,
        });
    }

    Ok(Scenario {
        name,
        sweep,
        mc,
        metrics,
        schemes,
        variants,
    })
}
