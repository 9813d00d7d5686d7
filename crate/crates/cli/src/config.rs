//! Flat `key = value` run configurations.
//!
//! ```text
//! # comment
//! model         = xy_chain        # adiabatic | xy_chain
//! N             = 4               # chain length (xy_chain only)
//! T             = 5               # total evolution time
//! J             = -1              # exchange coupling (xy_chain only)
//! lindblad_kind = sigma_z         # sigma_x | sigma_z (chain), jx (adiabatic)
//! Gamma         = 0.3             # alias Γ
//! gamma_inverse = 0.1             # bath memory time 1/γ, alias γ_inverse
//! omega0        = 0               # alias ω₀
//! r             = 0.4
//! theta         = 0.3pi           # alias θ; a trailing `pi` multiplies by π
//! dt            = 0.001
//! sample_every  = 10
//! t_obs         = 1.5             # snapshot time for sweep rows, default T
//! sweep_param   = r               # optional sweep axis
//! sweep_values  = 0.1, 0.2, 0.3
//! ```
//!
//! Every real value accepts the `pi` suffix. Keys are case-sensitive.

use std::f64::consts::PI;
use std::fmt;

use sqbath::models::LindbladKind;
use sqbath::{build_adiabatic_model, build_xy_chain_model, IntegratorConfig, ModelInstance, Operator, SqueezedBathSpec};

use crate::error::{CliError, Result};

/// Canonical keys in document order.
pub const KEYS: [&str; 15] = [
    "model",
    "N",
    "T",
    "J",
    "lindblad_kind",
    "Gamma",
    "gamma_inverse",
    "omega0",
    "r",
    "theta",
    "dt",
    "sample_every",
    "t_obs",
    "sweep_param",
    "sweep_values",
];

const ALIASES: [(&str, &str); 6] = [
    ("Γ", "Gamma"),
    ("γ_inverse", "gamma_inverse"),
    ("γ⁻¹", "gamma_inverse"),
    ("ω₀", "omega0"),
    ("ω0", "omega0"),
    ("θ", "theta"),
];

fn canonical_key(key: &str) -> Option<&'static str> {
    KEYS.iter()
        .copied()
        .find(|k| *k == key)
        .or_else(|| ALIASES.iter().find(|(a, _)| *a == key).map(|(_, k)| *k))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Adiabatic,
    XyChain,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Adiabatic => "adiabatic",
            ModelKind::XyChain => "xy_chain",
        }
    }
}

/// Sweepable configuration fields.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    Sites,
    TotalTime,
    Coupling,
    Gamma,
    GammaInverse,
    Omega0,
    R,
    Theta,
    TObs,
    Lindblad,
}

impl SweepParam {
    const ALL: [SweepParam; 10] = [
        SweepParam::Sites,
        SweepParam::TotalTime,
        SweepParam::Coupling,
        SweepParam::Gamma,
        SweepParam::GammaInverse,
        SweepParam::Omega0,
        SweepParam::R,
        SweepParam::Theta,
        SweepParam::TObs,
        SweepParam::Lindblad,
    ];

    pub fn key(self) -> &'static str {
        match self {
            SweepParam::Sites => "N",
            SweepParam::TotalTime => "T",
            SweepParam::Coupling => "J",
            SweepParam::Gamma => "Gamma",
            SweepParam::GammaInverse => "gamma_inverse",
            SweepParam::Omega0 => "omega0",
            SweepParam::R => "r",
            SweepParam::Theta => "theta",
            SweepParam::TObs => "t_obs",
            SweepParam::Lindblad => "lindblad_kind",
        }
    }

    fn from_key(key: &str) -> Option<Self> {
        let key = canonical_key(key)?;
        Self::ALL.into_iter().find(|p| p.key() == key)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SweepValue {
    Real(f64),
    Kind(LindbladKind),
}

impl fmt::Display for SweepValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepValue::Real(x) => write!(f, "{x}"),
            SweepValue::Kind(k) => write!(f, "{k}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepAxis {
    pub param: SweepParam,
    pub values: Vec<SweepValue>,
}

/// A validated run description. Fields mirror the document keys.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: ModelKind,
    pub sites: usize,
    pub total_time: f64,
    pub coupling: f64,
    pub lindblad_kind: LindbladKind,
    pub gamma_c: f64,
    pub gamma_inverse: f64,
    pub omega0: f64,
    pub r: f64,
    pub theta: f64,
    pub dt: f64,
    pub sample_every: usize,
    pub t_obs: Option<f64>,
    pub sweep: Option<SweepAxis>,
}

fn invalid(key: &str, message: impl Into<String>) -> CliError {
    CliError::InvalidValue { key: key.to_string(), message: message.into() }
}

fn range(key: &str, invariant: impl Into<String>) -> CliError {
    CliError::Range { key: key.to_string(), invariant: invariant.into() }
}

/// Parses a real number, honouring a trailing `pi` factor (`0.3pi`, `pi`, `-pi`).
pub fn parse_real(key: &str, raw: &str) -> Result<f64> {
    let raw = raw.trim();
    let (number, factor) = match raw.strip_suffix("pi") {
        Some(prefix) => (prefix.trim(), PI),
        None => (raw, 1.0),
    };
    let base = match number {
        "" if factor != 1.0 => 1.0,
        "-" if factor != 1.0 => -1.0,
        _ => number.parse::<f64>().map_err(|e| invalid(key, format!("{raw:?}: {e}")))?,
    };
    let value = base * factor;
    if !value.is_finite() {
        return Err(invalid(key, format!("{raw:?} is not finite")));
    }
    Ok(value)
}

fn parse_usize(key: &str, raw: &str) -> Result<usize> {
    let x = parse_real(key, raw)?;
    if x < 0.0 || x.fract() != 0.0 || x > u32::MAX as f64 {
        return Err(invalid(key, format!("{raw:?} is not a nonnegative integer")));
    }
    Ok(x as usize)
}

fn parse_kind(key: &str, raw: &str) -> Result<LindbladKind> {
    raw.trim().parse().map_err(|e: sqbath::Error| invalid(key, e.to_string()))
}

fn parse_model(raw: &str) -> Result<ModelKind> {
    match raw.trim() {
        "adiabatic" => Ok(ModelKind::Adiabatic),
        "xy_chain" => Ok(ModelKind::XyChain),
        other => Err(invalid("model", format!("{other:?}; expected adiabatic | xy_chain"))),
    }
}

/// Splits a document into `(line, key, value)` triples with canonical keys.
fn tokenize(text: &str) -> Result<Vec<(usize, &'static str, String)>> {
    let mut out: Vec<(usize, &'static str, String)> = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| CliError::Syntax {
            line: line_no,
            message: format!("expected `key = value`, got {line:?}"),
        })?;
        let key = key.trim();
        let canon = canonical_key(key)
            .ok_or_else(|| CliError::UnknownKey { key: key.to_string(), valid: KEYS.join(", ") })?;
        if out.iter().any(|(_, k, _)| *k == canon) {
            return Err(CliError::Syntax { line: line_no, message: format!("duplicate key {canon:?}") });
        }
        out.push((line_no, canon, value.trim().to_string()));
    }
    Ok(out)
}

/// Parses and validates a configuration document, filling defaults
/// (`dt = 0.001`, `sample_every = 10`, `omega0 = 0`, `r = 0`, `theta = 0`,
/// `J = -1`, `N = 4`, `lindblad_kind = jx | sigma_z`).
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let tokens = tokenize(text)?;
    let get = |key: &str| tokens.iter().find(|(_, k, _)| *k == key).map(|(_, _, v)| v.as_str());
    let model = parse_model(get("model").ok_or(CliError::MissingKey("model"))?)?;
    for required in ["T", "Gamma", "gamma_inverse"] {
        if get(required).is_none() {
            return Err(CliError::MissingKey(required));
        }
    }
    let mut cfg = RunConfig {
        model,
        sites: 4,
        total_time: 0.0,
        coupling: -1.0,
        lindblad_kind: match model {
            ModelKind::Adiabatic => LindbladKind::Jx,
            ModelKind::XyChain => LindbladKind::SigmaZ,
        },
        gamma_c: 0.0,
        gamma_inverse: 0.0,
        omega0: 0.0,
        r: 0.0,
        theta: 0.0,
        dt: sqbath::dynamics::DEFAULT_DT,
        sample_every: 10,
        t_obs: None,
        sweep: None,
    };
    for (_, key, value) in &tokens {
        match *key {
            "model" | "sweep_param" | "sweep_values" => {}
            other => cfg.set(other, value)?,
        }
    }
    match (get("sweep_param"), get("sweep_values")) {
        (None, None) => {}
        (Some(param), Some(values)) => cfg.sweep = Some(parse_axis(param, values)?),
        (Some(_), None) => return Err(CliError::MissingKey("sweep_values")),
        (None, Some(_)) => return Err(CliError::MissingKey("sweep_param")),
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_axis(param: &str, values: &str) -> Result<SweepAxis> {
    let param = SweepParam::from_key(param.trim())
        .ok_or_else(|| invalid("sweep_param", format!("{param:?} is not a sweepable field")))?;
    let values = values
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| match param {
            SweepParam::Lindblad => parse_kind("sweep_values", v).map(SweepValue::Kind),
            _ => parse_real("sweep_values", v).map(SweepValue::Real),
        })
        .collect::<Result<Vec<_>>>()?;
    if values.is_empty() {
        return Err(invalid("sweep_values", "empty list"));
    }
    Ok(SweepAxis { param, values })
}

impl RunConfig {
    /// Overwrites one field from its textual value (no cross-field validation).
    pub fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        let key = canonical_key(key)
            .ok_or_else(|| CliError::UnknownKey { key: key.to_string(), valid: KEYS.join(", ") })?;
        match key {
            "model" => self.model = parse_model(raw)?,
            "N" => self.sites = parse_usize(key, raw)?,
            "T" => self.total_time = parse_real(key, raw)?,
            "J" => self.coupling = parse_real(key, raw)?,
            "lindblad_kind" => self.lindblad_kind = parse_kind(key, raw)?,
            "Gamma" => self.gamma_c = parse_real(key, raw)?,
            "gamma_inverse" => self.gamma_inverse = parse_real(key, raw)?,
            "omega0" => self.omega0 = parse_real(key, raw)?,
            "r" => self.r = parse_real(key, raw)?,
            "theta" => self.theta = parse_real(key, raw)?,
            "dt" => self.dt = parse_real(key, raw)?,
            "sample_every" => self.sample_every = parse_usize(key, raw)?,
            "t_obs" => self.t_obs = Some(parse_real(key, raw)?),
            "sweep_param" | "sweep_values" => {
                return Err(invalid(key, "sweep axes are set in the document, not by override"))
            }
            _ => unreachable!("canonical key"),
        }
        Ok(())
    }

    /// Applies one sweep value to a copy without the sweep axis.
    pub fn point(&self, param: SweepParam, value: SweepValue) -> Result<RunConfig> {
        let mut cfg = RunConfig { sweep: None, ..self.clone() };
        match value {
            SweepValue::Kind(k) => cfg.lindblad_kind = k,
            SweepValue::Real(x) => cfg.set(param.key(), &format!("{x}"))?,
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let total = self.total_time;
        if !(total > 0.0) {
            return Err(range("T", format!("T > 0 (got {total})")));
        }
        if !(self.gamma_c >= 0.0) {
            return Err(range("Gamma", format!("Γ ≥ 0 (got {})", self.gamma_c)));
        }
        if !(self.gamma_inverse > 0.0) {
            return Err(range("gamma_inverse", format!("γ_inverse > 0 (got {})", self.gamma_inverse)));
        }
        if !(0.0..=1.0).contains(&self.r) {
            return Err(range("r", format!("r ∈ [0,1] (got {})", self.r)));
        }
        let max_dt = sqbath::dynamics::MAX_DT;
        if !(self.dt > 0.0 && self.dt <= max_dt) {
            return Err(range("dt", format!("dt ∈ (0, {max_dt}] (got {})", self.dt)));
        }
        if self.sample_every == 0 {
            return Err(range("sample_every", "sample_every ≥ 1"));
        }
        if let Some(t) = self.t_obs {
            if !(0.0..=total).contains(&t) {
                return Err(range("t_obs", format!("t_obs ∈ [0, T] (got {t})")));
            }
        }
        match self.model {
            ModelKind::Adiabatic => {
                if self.lindblad_kind != LindbladKind::Jx {
                    return Err(range("lindblad_kind", "adiabatic model couples through jx"));
                }
            }
            ModelKind::XyChain => {
                let max = sqbath::models::MAX_CHAIN_SITES;
                if !(2..=max).contains(&self.sites) {
                    return Err(range("N", format!("N ∈ [2, {max}] (got {})", self.sites)));
                }
                if self.lindblad_kind == LindbladKind::Jx {
                    return Err(range("lindblad_kind", "chain couples through sigma_x or sigma_z"));
                }
            }
        }
        if let Some(axis) = &self.sweep {
            for &value in &axis.values {
                self.point(axis.param, value)?;
            }
        }
        Ok(())
    }

    /// Snapshot time for sweep rows.
    pub fn observation_time(&self) -> f64 {
        self.t_obs.unwrap_or(self.total_time)
    }

    pub fn bath_template(&self) -> Result<SqueezedBathSpec> {
        Ok(SqueezedBathSpec::new(
            self.gamma_c,
            1.0 / self.gamma_inverse,
            self.omega0,
            self.r,
            self.theta,
            Operator::identity(2),
        )?)
    }

    pub fn build_model(&self) -> Result<ModelInstance> {
        let template = self.bath_template()?;
        Ok(match self.model {
            ModelKind::Adiabatic => build_adiabatic_model(self.total_time, &template)?,
            ModelKind::XyChain => {
                build_xy_chain_model(self.sites, self.coupling, self.total_time, &template, self.lindblad_kind)?
            }
        })
    }

    pub fn integrator(&self) -> Result<IntegratorConfig> {
        Ok(IntegratorConfig::new(self.dt, self.sample_every)?)
    }

    /// Renders the effective configuration; `parse_config` reproduces it exactly.
    pub fn to_document(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        line("model", self.model.name().to_string());
        line("N", self.sites.to_string());
        line("T", self.total_time.to_string());
        line("J", self.coupling.to_string());
        line("lindblad_kind", self.lindblad_kind.to_string());
        line("Gamma", self.gamma_c.to_string());
        line("gamma_inverse", self.gamma_inverse.to_string());
        line("omega0", self.omega0.to_string());
        line("r", self.r.to_string());
        line("theta", self.theta.to_string());
        line("dt", self.dt.to_string());
        line("sample_every", self.sample_every.to_string());
        if let Some(t) = self.t_obs {
            line("t_obs", t.to_string());
        }
        if let Some(axis) = &self.sweep {
            line("sweep_param", axis.param.key().to_string());
            let values: Vec<String> = axis.values.iter().map(ToString::to_string).collect();
            line("sweep_values", values.join(", "));
        }
        out
    }
}
