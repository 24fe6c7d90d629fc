//! INI-style run configuration.
//!
//! Sections `[circuit]`, `[quantum]`, `[drive]`, `[solver]` and `[sweep]`
//! hold `key = value` lines; `#` and `;` start comments. Keys carry their
//! unit as a suffix (`c_pF`), and a value may repeat the unit (`7 pF`). All
//! quantities are converted to SI on parsing.

use std::collections::HashMap;
use std::f64::consts::PI;

use thiserror::Error;

use crate::model::CircuitParams;
use crate::quantum::BranchChoice;
use crate::time_domain::{Method, OdeSettings};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },

    #[error("line {line}: unknown section [{section}]")]
    UnknownSection { line: usize, section: String },

    #[error("line {line}: unknown key `{key}` in [{section}]")]
    UnknownKey { line: usize, section: String, key: String },

    #[error("line {line}: unit mismatch for `{key}`: expected `{expected}`, found `{found}`")]
    UnitMismatch {
        line: usize,
        key: String,
        expected: String,
        found: String,
    },

    #[error("line {line}: missing required key `{key}` in [{section}]")]
    MissingKey { line: usize, section: String, key: String },

    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },

    #[error("line {line}: invalid value for `{key}`: {msg}")]
    InvalidValue { line: usize, key: String, msg: String },

    #[error("lines {line_a} and {line_b}: `{key_a}` and `{key_b}` are mutually exclusive")]
    Exclusive {
        line_a: usize,
        key_a: String,
        line_b: usize,
        key_b: String,
    },
}

impl ConfigError {
    pub fn line(&self) -> usize {
        match self {
            ConfigError::Syntax { line, .. }
            | ConfigError::UnknownSection { line, .. }
            | ConfigError::UnknownKey { line, .. }
            | ConfigError::UnitMismatch { line, .. }
            | ConfigError::MissingKey { line, .. }
            | ConfigError::DuplicateKey { line, .. }
            | ConfigError::InvalidValue { line, .. } => *line,
            ConfigError::Exclusive { line_b, .. } => *line_b,
        }
    }
}

/// Optional replacements for the mapped single-mode parameters, rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct QuantumOverrides {
    pub omega0: Option<f64>,
    pub kerr: Option<f64>,
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
}

impl QuantumOverrides {
    /// Both linear-response quantities are given, so no circuit
    /// characterization is needed.
    pub fn replaces_fit(&self) -> bool {
        self.omega0.is_some() && self.gamma1.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub enum PumpLevel {
    /// p/p_crit.
    Fraction(f64),
    Dbm(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct DriveConfig {
    pub pump: PumpLevel,
    /// Pump frequency in rad/s; `None` selects the optimal detuning.
    pub pump_omega: Option<f64>,
    /// Signal power; `None` uses the small-signal default.
    pub signal_dbm: Option<f64>,
    /// Signal frequency in rad/s; `None` places it at the degenerate offset.
    pub signal_omega: Option<f64>,
    #[serde(skip)]
    pub branch: BranchChoice,
}

impl Default for DriveConfig {
    fn default() -> Self {
        Self {
            pump: PumpLevel::Fraction(0.9),
            pump_omega: None,
            signal_dbm: None,
            signal_omega: None,
            branch: BranchChoice::Low,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SolverConfig {
    pub settings: OdeSettings,
    pub transient_lifetimes: f64,
    /// Trace length for `trace-dump`, seconds; `None` uses 10 lifetimes 1/γ.
    pub duration: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let mut settings = OdeSettings::dp45(1e-6, 1e-26);
        settings.fixed_step = 5e-14;
        Self {
            settings,
            transient_lifetimes: 200.0,
            duration: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Lin,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct AxisSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub scale: Scale,
}

impl AxisSpec {
    pub fn lin(start: f64, stop: f64, points: usize) -> Self {
        Self {
            start,
            stop,
            points,
            scale: Scale::Lin,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let n = (self.points - 1) as f64;
        (0..self.points)
            .map(|k| {
                let f = k as f64 / n;
                match self.scale {
                    Scale::Lin => self.start + (self.stop - self.start) * f,
                    Scale::Log => self.start * (self.stop / self.start).powf(f),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TdMode {
    PumpDetuning,
    SignalFrequency,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SweepConfig {
    /// p/p_crit.
    pub pump_frac: AxisSpec,
    /// (ωp − ω0)/γ.
    pub pump_detuning: AxisSpec,
    /// (ωs − ωp)/γ.
    pub signal_detuning: AxisSpec,
    pub signal_dbm: AxisSpec,
    pub probe_points: usize,
    pub probe_span_gamma: f64,
    pub hysteresis: bool,
    pub td_mode: TdMode,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            pump_frac: AxisSpec::lin(0.5, 0.9, 3),
            pump_detuning: AxisSpec::lin(-2.5, 0.5, 13),
            signal_detuning: AxisSpec::lin(-2.0, 2.0, 17),
            signal_dbm: AxisSpec::lin(-215.0, -145.0, 15),
            probe_points: 11,
            probe_span_gamma: 3.0,
            hysteresis: false,
            td_mode: TdMode::PumpDetuning,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct RunConfig {
    pub circuit: CircuitParams,
    pub quantum: QuantumOverrides,
    pub drive: DriveConfig,
    pub solver: SolverConfig,
    pub sweep: SweepConfig,
}

/// Commented configuration listing every key at its default value.
pub const DEFAULTS: &str = "\
# Lumped circuit (required)
[circuit]
ic_uA = 1
c_pF = 7
cco_fF = 60
zc_ohm = 50

# Overrides of the mapped single-mode model; unset keys come from the
# resonance fit. Frequencies are ordinary frequencies (omega / 2 pi).
[quantum]
# omega0_ghz = 3.3
# k_khz = -2744
# gamma1_mhz = 0.87
# gamma2_mhz = 0

[drive]
# Exactly one of pump_power_frac (p / p_crit) and pump_dbm.
pump_power_frac = 0.9
# pump_dbm = -100
pump_freq_ghz = auto
# signal_dbm = -200
# signal_freq_ghz = 3.3
branch = low

[solver]
method = dp45
rel_tol = 1e-6
abs_tol = 1e-26
fixed_step_ps = 0.05
transient_lifetimes = 200
# duration_ns = 1000

[sweep]
# Axes: <name>_start, <name>_stop, <name>_points, <name>_scale (lin | log)
pump_frac_start = 0.5
pump_frac_stop = 0.9
pump_frac_points = 3
pump_frac_scale = lin
pump_detuning_start = -2.5
pump_detuning_stop = 0.5
pump_detuning_points = 13
pump_detuning_scale = lin
signal_detuning_start = -2
signal_detuning_stop = 2
signal_detuning_points = 17
signal_detuning_scale = lin
signal_dbm_start = -215
signal_dbm_stop = -145
signal_dbm_points = 15
signal_dbm_scale = lin
probe_points = 11
probe_span_gamma = 3
hysteresis = false
td_mode = pump_detuning
";

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    /// Number with unit conversion factor to SI.
    Number(&'static str, f64),
    Plain,
}

const SECTIONS: &[&str] = &["circuit", "quantum", "drive", "solver", "sweep"];

fn known_keys(section: &str) -> Vec<(&'static str, Kind)> {
    use Kind::*;
    let ghz = 2.0 * PI * 1e9;
    match section {
        "circuit" => vec![
            ("ic_uA", Number("uA", 1e-6)),
            ("c_pF", Number("pF", 1e-12)),
            ("cco_fF", Number("fF", 1e-15)),
            ("zc_ohm", Number("ohm", 1.0)),
        ],
        "quantum" => vec![
            ("omega0_ghz", Number("ghz", ghz)),
            ("k_khz", Number("khz", 2.0 * PI * 1e3)),
            ("gamma1_mhz", Number("mhz", 2.0 * PI * 1e6)),
            ("gamma2_mhz", Number("mhz", 2.0 * PI * 1e6)),
        ],
        "drive" => vec![
            ("pump_power_frac", Plain),
            ("pump_dbm", Number("dbm", 1.0)),
            ("pump_freq_ghz", Number("ghz", ghz)),
            ("signal_dbm", Number("dbm", 1.0)),
            ("signal_freq_ghz", Number("ghz", ghz)),
            ("branch", Plain),
        ],
        "solver" => vec![
            ("method", Plain),
            ("rel_tol", Plain),
            ("abs_tol", Plain),
            ("fixed_step_ps", Number("ps", 1e-12)),
            ("transient_lifetimes", Plain),
            ("duration_ns", Number("ns", 1e-9)),
        ],
        "sweep" => {
            let mut v = Vec::new();
            for keys in AXIS_KEYS {
                v.extend(keys.iter().map(|k| (*k, Plain)));
            }
            v.extend([
                ("probe_points", Plain),
                ("probe_span_gamma", Plain),
                ("hysteresis", Plain),
                ("td_mode", Plain),
            ]);
            v
        }
        _ => Vec::new(),
    }
}

/// `<axis>_start`, `_stop`, `_points`, `_scale` for each sweep axis.
const AXIS_KEYS: [[&str; 4]; 4] = [
    ["pump_frac_start", "pump_frac_stop", "pump_frac_points", "pump_frac_scale"],
    ["pump_detuning_start", "pump_detuning_stop", "pump_detuning_points", "pump_detuning_scale"],
    ["signal_detuning_start", "signal_detuning_stop", "signal_detuning_points", "signal_detuning_scale"],
    ["signal_dbm_start", "signal_dbm_stop", "signal_dbm_points", "signal_dbm_scale"],
];

/// Recognized unit suffixes, used to tell a wrong unit from an unknown key.
const UNIT_SUFFIXES: &[&str] = &[
    "a", "ma", "ua", "na", "pa", "f", "pf", "nf", "ff", "uf", "ohm", "kohm", "hz", "khz", "mhz", "ghz", "dbm", "dbw",
    "w", "mw", "s", "ms", "us", "ns", "ps", "fs",
];

#[derive(Debug, Clone)]
struct Entry {
    line: usize,
    key: &'static str,
    value: String,
}

fn split_unit(key: &str) -> Option<(&str, &str)> {
    let (stem, unit) = key.rsplit_once('_')?;
    UNIT_SUFFIXES
        .contains(&unit.to_ascii_lowercase().as_str())
        .then_some((stem, unit))
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut section: Option<(&'static str, usize)> = None;
    let mut headers: HashMap<&'static str, usize> = HashMap::new();
    let mut entries: HashMap<(&'static str, &'static str), Entry> = HashMap::new();
    let keys: HashMap<&str, Vec<(&'static str, Kind)>> = SECTIONS.iter().map(|s| (*s, known_keys(s))).collect();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split(['#', ';']).next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::Syntax {
                    line,
                    msg: "unterminated section header".into(),
                })?
                .trim();
            let Some(&canon) = SECTIONS.iter().find(|s| **s == name) else {
                return Err(ConfigError::UnknownSection {
                    line,
                    section: name.to_string(),
                });
            };
            if headers.insert(canon, line).is_some() {
                return Err(ConfigError::Syntax {
                    line,
                    msg: format!("section [{canon}] repeated"),
                });
            }
            section = Some((canon, line));
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                msg: "expected `key = value`".into(),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        let Some((sec, _)) = section else {
            return Err(ConfigError::Syntax {
                line,
                msg: format!("key `{key}` appears before any section header"),
            });
        };
        let table = &keys[sec];
        let Some((canon, kind)) = table.iter().find(|(k, _)| *k == key) else {
            if let Some((stem, unit)) = split_unit(key) {
                if let Some((expected, _)) = table
                    .iter()
                    .find(|(k, kind)| matches!(kind, Kind::Number(..)) && split_unit(k).is_some_and(|(s, _)| s == stem))
                {
                    return Err(ConfigError::UnitMismatch {
                        line,
                        key: key.to_string(),
                        expected: expected.to_string(),
                        found: unit.to_string(),
                    });
                }
            }
            return Err(ConfigError::UnknownKey {
                line,
                section: sec.to_string(),
                key: key.to_string(),
            });
        };
        if value.is_empty() {
            return Err(ConfigError::InvalidValue {
                line,
                key: key.to_string(),
                msg: "empty value".into(),
            });
        }
        // A trailing unit on the value must agree with the key's suffix.
        let mut value = value.to_string();
        if let Kind::Number(unit, _) = kind {
            if let Some((num, tok)) = value.rsplit_once(char::is_whitespace) {
                let tok = tok.trim();
                if !tok.eq_ignore_ascii_case(unit) {
                    return Err(ConfigError::UnitMismatch {
                        line,
                        key: key.to_string(),
                        expected: unit.to_string(),
                        found: tok.to_string(),
                    });
                }
                value = num.trim().to_string();
            }
        }
        let prev = entries.insert(
            (sec, canon),
            Entry {
                line,
                key: canon,
                value,
            },
        );
        if prev.is_some() {
            return Err(ConfigError::DuplicateKey {
                line,
                key: key.to_string(),
            });
        }
    }

    let get = |sec: &'static str, key: &'static str| entries.get(&(sec, key));
    let kind_of = |sec: &str, key: &str| keys[sec].iter().find(|(k, _)| *k == key).map(|(_, kind)| *kind).unwrap();
    let number = |e: &Entry, sec: &str| -> Result<f64, ConfigError> {
        let v: f64 = e.value.parse().map_err(|_| ConfigError::InvalidValue {
            line: e.line,
            key: e.key.to_string(),
            msg: format!("`{}` is not a number", e.value),
        })?;
        if !v.is_finite() {
            return Err(ConfigError::InvalidValue {
                line: e.line,
                key: e.key.to_string(),
                msg: "must be finite".into(),
            });
        }
        Ok(match kind_of(sec, e.key) {
            // Dividing by an exact power of ten keeps `60 fF` == 60e-15.
            Kind::Number(_, factor) if factor < 1.0 => v / (1.0 / factor).round(),
            Kind::Number(_, factor) => v * factor,
            Kind::Plain => v,
        })
    };
    let invalid = |e: &Entry, msg: &str| ConfigError::InvalidValue {
        line: e.line,
        key: e.key.to_string(),
        msg: msg.to_string(),
    };
    let opt_number = |sec: &'static str, key: &'static str| get(sec, key).map(|e| number(e, sec)).transpose();
    let positive = |sec: &'static str, key: &'static str| -> Result<Option<f64>, ConfigError> {
        match get(sec, key) {
            Some(e) => {
                let v = number(e, sec)?;
                if v > 0.0 {
                    Ok(Some(v))
                } else {
                    Err(invalid(e, "must be positive"))
                }
            }
            None => Ok(None),
        }
    };

    // [circuit]
    let circuit_line = headers.get("circuit").copied().unwrap_or(text.lines().count().max(1));
    let mut circuit_vals = [0.0; 4];
    for (slot, key) in ["ic_uA", "c_pF", "cco_fF", "zc_ohm"].iter().enumerate() {
        circuit_vals[slot] = positive("circuit", key)?.ok_or_else(|| ConfigError::MissingKey {
            line: circuit_line,
            section: "circuit".into(),
            key: key.to_string(),
        })?;
    }
    let circuit = CircuitParams::new(circuit_vals[0], circuit_vals[1], circuit_vals[2], circuit_vals[3]).map_err(|e| {
        ConfigError::InvalidValue {
            line: circuit_line,
            key: "circuit".into(),
            msg: e.to_string(),
        }
    })?;

    // [quantum]
    let quantum = QuantumOverrides {
        omega0: positive("quantum", "omega0_ghz")?,
        kerr: opt_number("quantum", "k_khz")?,
        gamma1: positive("quantum", "gamma1_mhz")?,
        gamma2: match get("quantum", "gamma2_mhz") {
            Some(e) => {
                let v = number(e, "quantum")?;
                if v < 0.0 {
                    return Err(invalid(e, "must be >= 0"));
                }
                Some(v)
            }
            None => None,
        },
    };

    // [drive]
    let mut drive = DriveConfig::default();
    match (get("drive", "pump_power_frac"), get("drive", "pump_dbm")) {
        (Some(a), Some(b)) => {
            let (first, second) = if a.line <= b.line { (a, b) } else { (b, a) };
            return Err(ConfigError::Exclusive {
                line_a: first.line,
                key_a: first.key.to_string(),
                line_b: second.line,
                key_b: second.key.to_string(),
            });
        }
        (Some(e), None) => {
            let v = number(e, "drive")?;
            if v < 0.0 {
                return Err(invalid(e, "must be >= 0"));
            }
            drive.pump = PumpLevel::Fraction(v);
        }
        (None, Some(e)) => drive.pump = PumpLevel::Dbm(number(e, "drive")?),
        (None, None) => {}
    }
    if let Some(e) = get("drive", "pump_freq_ghz") {
        drive.pump_omega = if e.value.eq_ignore_ascii_case("auto") {
            None
        } else {
            Some(positive("drive", "pump_freq_ghz")?.unwrap())
        };
    }
    drive.signal_dbm = opt_number("drive", "signal_dbm")?;
    drive.signal_omega = positive("drive", "signal_freq_ghz")?;
    if let Some(e) = get("drive", "branch") {
        drive.branch = match e.value.to_ascii_lowercase().as_str() {
            "low" => BranchChoice::Low,
            "high" => BranchChoice::High,
            _ => return Err(invalid(e, "expected `low` or `high`")),
        };
    }

    // [solver]
    let mut solver = SolverConfig::default();
    if let Some(e) = get("solver", "method") {
        solver.settings.method = e.value.parse::<Method>().map_err(|m| invalid(e, &m))?;
    }
    if let Some(v) = positive("solver", "rel_tol")? {
        solver.settings.rel_tol = v;
    }
    if let Some(v) = positive("solver", "abs_tol")? {
        solver.settings.abs_tol = v;
    }
    if let Some(v) = positive("solver", "fixed_step_ps")? {
        solver.settings.fixed_step = v;
    }
    if let Some(v) = positive("solver", "transient_lifetimes")? {
        solver.transient_lifetimes = v;
    }
    solver.duration = positive("solver", "duration_ns")?;
    if let Some(e) = get("solver", "rel_tol") {
        let r = solver.settings.rel_tol;
        if solver.settings.method == Method::Dp45 && !(1e-12..=1e-6).contains(&r) {
            return Err(invalid(e, "must lie in [1e-12, 1e-6]"));
        }
    }

    // [sweep]
    let mut sweep = SweepConfig::default();
    let axes = [
        &mut sweep.pump_frac,
        &mut sweep.pump_detuning,
        &mut sweep.signal_detuning,
        &mut sweep.signal_dbm,
    ];
    for ([start, stop, points, scale], spec) in AXIS_KEYS.into_iter().zip(axes) {
        if let Some(v) = opt_number("sweep", start)? {
            spec.start = v;
        }
        if let Some(v) = opt_number("sweep", stop)? {
            spec.stop = v;
        }
        if let Some(e) = get("sweep", points) {
            spec.points = parse_count(e)?;
        }
        if let Some(e) = get("sweep", scale) {
            spec.scale = match e.value.to_ascii_lowercase().as_str() {
                "lin" => Scale::Lin,
                "log" => Scale::Log,
                _ => return Err(invalid(e, "expected `lin` or `log`")),
            };
            if spec.scale == Scale::Log && !(spec.start > 0.0 && spec.stop > 0.0) {
                return Err(invalid(e, "log axis needs positive start and stop"));
            }
        }
    }
    if let Some(e) = get("sweep", "probe_points") {
        sweep.probe_points = parse_count(e)?;
        if sweep.probe_points < 4 {
            return Err(invalid(e, "need at least 4 probe points"));
        }
    }
    if let Some(v) = positive("sweep", "probe_span_gamma")? {
        sweep.probe_span_gamma = v;
    }
    if let Some(e) = get("sweep", "hysteresis") {
        sweep.hysteresis = match e.value.to_ascii_lowercase().as_str() {
            "true" | "yes" | "1" => true,
            "false" | "no" | "0" => false,
            _ => return Err(invalid(e, "expected `true` or `false`")),
        };
    }
    if let Some(e) = get("sweep", "td_mode") {
        sweep.td_mode = match e.value.as_str() {
            "pump_detuning" => TdMode::PumpDetuning,
            "signal_frequency" => TdMode::SignalFrequency,
            _ => return Err(invalid(e, "expected `pump_detuning` or `signal_frequency`")),
        };
    }

    Ok(RunConfig {
        circuit,
        quantum,
        drive,
        solver,
        sweep,
    })
}

fn parse_count(e: &Entry) -> Result<usize, ConfigError> {
    match e.value.parse::<usize>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(ConfigError::InvalidValue {
            line: e.line,
            key: e.key.to_string(),
            msg: "expected a positive integer".into(),
        }),
    }
}
