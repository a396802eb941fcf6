//! Run configuration: TOML file plus flat command-line overrides.
//!
//! Physical inputs are cyclic MHz, µs, G and nT throughout; conversion to
//! angular units happens only when core objects are built.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use fds_core::experiments::{DdConfig, Dynamics, NoiseKind, Preset, Scenario, SCENARIO_NAMES};
use fds_core::hamiltonian::{FloquetDriveParams, SensorParams};
use fds_core::linalg::Axis;
use fds_core::measurement::ReadoutModel;
use fds_core::metrology::SensitivityParams;
use fds_core::units::mhz_to_angular;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{origin}: {message}")]
    Parse { origin: String, message: String },
    #[error("{origin}: invalid `{key}`: {message}")]
    Invalid {
        origin: String,
        key: String,
        message: String,
    },
    #[error("--set {0}: expected KEY=VALUE")]
    BadOverride(String),
    #[error("unknown scenario '{0}' (known: {known})", known = SCENARIO_NAMES.join(", "))]
    UnknownScenario(String),
    #[error("scenario '{name}' does not apply to `{command}` (use one of: {allowed})")]
    WrongScenario {
        name: String,
        command: &'static str,
        allowed: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// One of the named scenarios; absent runs every scenario of the command.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    pub seed: u64,
    /// Photon-readout shots per grid point; absent means noiseless readout.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    /// Monte Carlo repeats of the QFI pipeline.
    pub repeats: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub formats: Vec<Format>,
    /// Worker threads; absent uses every core.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    pub sensor: SensorConfig,
    pub signal: SignalConfig,
    pub drive: DriveConfig,
    pub readout: ReadoutConfig,
    pub sequence: SequenceConfig,
    pub rabi: RabiConfig,
    pub qfi: QfiConfig,
    pub effective: EffectiveConfig,
    pub robustness: RobustnessConfig,
    pub sensitivity: SensitivityConfig,
    pub noise: NoiseConfig,
    pub dd: DdSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenario: None,
            seed: 0,
            shots: None,
            repeats: 200,
            out: None,
            formats: vec![Format::Csv, Format::Json],
            threads: None,
            sensor: Default::default(),
            signal: Default::default(),
            drive: Default::default(),
            readout: Default::default(),
            sequence: Default::default(),
            rabi: Default::default(),
            qfi: Default::default(),
            effective: Default::default(),
            robustness: Default::default(),
            sensitivity: Default::default(),
            noise: Default::default(),
            dd: Default::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorConfig {
    pub zero_field_splitting_mhz: f64,
    pub gamma_e_mhz_per_g: f64,
    pub b0_g: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        SensorConfig {
            zero_field_splitting_mhz: 2870.0,
            gamma_e_mhz_per_g: 2.8,
            b0_g: 500.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SignalConfig {
    pub omega_s_mhz: f64,
    pub detuning_mhz: f64,
}

impl Default for SignalConfig {
    fn default() -> Self {
        SignalConfig {
            omega_s_mhz: 0.5,
            detuning_mhz: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriveConfig {
    pub amplitude_mhz: f64,
    pub frequency_mhz: f64,
    pub harmonics: u32,
    pub validity_factor: f64,
}

impl Default for DriveConfig {
    fn default() -> Self {
        DriveConfig {
            amplitude_mhz: 1.0,
            frequency_mhz: 36.54,
            harmonics: 5,
            validity_factor: FloquetDriveParams::DEFAULT_VALIDITY_FACTOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReadoutConfig {
    pub contrast: f64,
    pub count_rate_per_s: f64,
    pub t_det_us: f64,
}

impl Default for ReadoutConfig {
    fn default() -> Self {
        ReadoutConfig {
            contrast: 0.13,
            count_rate_per_s: 9.5e4,
            t_det_us: 0.94,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SequenceConfig {
    pub polarize_us: f64,
    pub wait_us: f64,
    /// Half the Carr–Purcell pulse spacing.
    pub tau_us: f64,
}

impl Default for SequenceConfig {
    fn default() -> Self {
        SequenceConfig {
            polarize_us: 5.0,
            wait_us: 0.3,
            tau_us: 0.5,
        }
    }
}

/// Explicit time list, or a uniform grid 0, step, … up to t_max.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RabiConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub times_us: Option<Vec<f64>>,
    pub t_max_us: f64,
    pub t_step_us: f64,
    /// Average over the `[noise]` model (requires noise.sigma_z_mhz).
    pub with_noise: bool,
    pub dynamics: Dynamics,
}

impl Default for RabiConfig {
    fn default() -> Self {
        RabiConfig {
            times_us: None,
            t_max_us: 4.0,
            t_step_us: 0.02,
            with_noise: false,
            dynamics: Dynamics::Full,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QfiConfig {
    pub times_us: Vec<f64>,
    /// Relative half-width of the Ω grid used by the line fits.
    pub grid_half_width: f64,
    pub grid_points: usize,
}

impl Default for QfiConfig {
    fn default() -> Self {
        QfiConfig {
            times_us: vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.8, 4.0],
            grid_half_width: fds_core::measurement::DEFAULT_GRID_HALF_WIDTH,
            grid_points: fds_core::measurement::DEFAULT_GRID_POINTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EffectiveConfig {
    pub harmonics: Vec<u32>,
    /// Drive-frequency multipliers for the micromotion scaling table.
    pub frequency_multipliers: Vec<f64>,
}

impl Default for EffectiveConfig {
    fn default() -> Self {
        EffectiveConfig {
            harmonics: vec![1, 3, 5],
            frequency_multipliers: vec![1.0, 2.0, 4.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RobustnessConfig {
    pub t_us: f64,
    pub amplitude_min_mhz: f64,
    pub amplitude_max_mhz: f64,
    pub amplitude_step_mhz: f64,
    pub frequency_min_mhz: f64,
    pub frequency_max_mhz: f64,
    pub frequency_step_mhz: f64,
}

impl Default for RobustnessConfig {
    fn default() -> Self {
        RobustnessConfig {
            t_us: 4.0,
            amplitude_min_mhz: -1.0,
            amplitude_max_mhz: 1.0,
            amplitude_step_mhz: 0.05,
            frequency_min_mhz: -20.0,
            frequency_max_mhz: 30.0,
            frequency_step_mhz: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensitivityConfig {
    pub t2_us: Vec<f64>,
    /// Curves run from t_det/10 up to this multiple of T₂.
    pub t_max_factor: f64,
    pub points: usize,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        SensitivityConfig {
            t2_us: vec![17.9, 162.5],
            t_max_factor: 2.0,
            points: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub kind: NoiseKind,
    /// σ_z/2π; absent means calibrate to `target_t2_us`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_z_mhz: Option<f64>,
    pub tau_c_us: f64,
    pub dt_us: f64,
    pub realizations: u32,
    pub target_t2_us: f64,
    /// Time step of the calibration and DD grids.
    pub grid_step_us: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            kind: NoiseKind::OrnsteinUhlenbeck,
            sigma_z_mhz: None,
            tau_c_us: 50.0,
            dt_us: 0.05,
            realizations: 200,
            target_t2_us: 17.9,
            grid_step_us: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DdSection {
    pub t_max_off_us: f64,
    pub t_max_on_us: f64,
    pub dynamics: Dynamics,
}

impl Default for DdSection {
    fn default() -> Self {
        DdSection {
            t_max_off_us: 60.0,
            t_max_on_us: 300.0,
            dynamics: Dynamics::Effective,
        }
    }
}

/// Where a value came from, for error messages.
#[derive(Debug, Clone, Default)]
pub struct Provenance {
    file: Option<(String, String)>,
    overridden: BTreeSet<String>,
}

impl Provenance {
    fn origin(&self, key: &str) -> String {
        if self.overridden.contains(key) {
            return format!("command line (--set {key} / flag)");
        }
        if let Some((path, text)) = &self.file {
            if let Some(line) = locate_key(text, key) {
                return format!("{path}:{line}");
            }
            return format!("{path} (default for `{key}`)");
        }
        "built-in default".into()
    }
}

/// 1-based line of `section.key` (or a top-level `key`) in TOML source.
pub fn locate_key(text: &str, path: &str) -> Option<usize> {
    let (section, key) = match path.rsplit_once('.') {
        Some((s, k)) => (s, k),
        None => ("", path),
    };
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(h) = line.strip_prefix('[').and_then(|l| l.split(']').next()) {
            current = h.trim().to_string();
            continue;
        }
        let Some((lhs, _)) = line.split_once('=') else { continue };
        let lhs = lhs.trim();
        if (current == section && lhs == key) || (current.is_empty() && lhs == path) {
            return Some(i + 1);
        }
    }
    None
}

/// Parses a `--set` value as a TOML literal, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn insert_path(table: &mut toml::Table, path: &str, value: toml::Value) -> Result<(), ConfigError> {
    let mut parts: Vec<&str> = path.split('.').collect();
    let last = parts.pop().filter(|k| !k.is_empty()).ok_or_else(|| ConfigError::BadOverride(path.into()))?;
    let mut t = table;
    for p in parts {
        let entry = t.entry(p.to_string()).or_insert_with(|| toml::Value::Table(Default::default()));
        t = entry.as_table_mut().ok_or_else(|| ConfigError::Invalid {
            origin: "command line".into(),
            key: path.into(),
            message: format!("`{p}` is not a section"),
        })?;
    }
    t.insert(last.to_string(), value);
    Ok(())
}

/// Loaded configuration with the provenance needed for precise errors.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    pub provenance: Provenance,
}

/// Reads an optional config file and applies `KEY=VALUE` overrides on top.
pub fn load(path: Option<&Path>, overrides: &[(String, toml::Value)]) -> Result<Loaded, ConfigError> {
    let mut provenance = Provenance::default();
    let mut table = toml::Table::new();
    if let Some(path) = path {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: shown.clone(),
            source,
        })?;
        // Typed parse first so unknown keys and type errors carry file positions.
        toml::from_str::<RunConfig>(&text).map_err(|e| ConfigError::Parse {
            origin: shown.clone(),
            message: e.to_string().trim_end().to_string(),
        })?;
        table = toml::from_str(&text).map_err(|e| ConfigError::Parse {
            origin: shown.clone(),
            message: e.to_string().trim_end().to_string(),
        })?;
        provenance.file = Some((shown, text));
    }
    for (key, value) in overrides {
        insert_path(&mut table, key, value.clone())?;
        provenance.overridden.insert(key.clone());
    }
    let config = RunConfig::deserialize(toml::Value::Table(table)).map_err(|e| ConfigError::Parse {
        origin: "command-line overrides".into(),
        message: e.to_string().trim_end().to_string(),
    })?;
    Ok(Loaded { config, provenance })
}

/// Splits `KEY=VALUE`.
pub fn parse_override(raw: &str) -> Result<(String, toml::Value), ConfigError> {
    let (k, v) = raw.split_once('=').ok_or_else(|| ConfigError::BadOverride(raw.into()))?;
    let k = k.trim();
    if k.is_empty() {
        return Err(ConfigError::BadOverride(raw.into()));
    }
    Ok((k.to_string(), parse_value(v.trim())))
}

/// Commands, for scenario applicability.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Rabi,
    Qfi,
    Effective,
    Robustness,
    Sensitivity,
    Dd,
    Calibrate,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Rabi => "rabi",
            Command::Qfi => "qfi",
            Command::Effective => "effective",
            Command::Robustness => "robustness",
            Command::Sensitivity => "sensitivity",
            Command::Dd => "dd",
            Command::Calibrate => "calibrate",
        }
    }

    /// Scenario names accepted by the command.
    pub fn scenarios(&self) -> &'static [&'static str] {
        match self {
            Command::Rabi | Command::Qfi => &SCENARIO_NAMES[..5],
            Command::Effective => &SCENARIO_NAMES[2..5],
            Command::Robustness => &SCENARIO_NAMES[5..7],
            Command::Dd => &SCENARIO_NAMES[7..9],
            Command::Sensitivity | Command::Calibrate => &[],
        }
    }
}

impl Loaded {
    fn invalid(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::Invalid {
            origin: self.provenance.origin(key),
            key: key.into(),
            message: message.into(),
        }
    }

    fn positive(&self, key: &str, v: f64) -> Result<(), ConfigError> {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(self.invalid(key, format!("must be positive, got {v}")))
        }
    }

    fn nonnegative(&self, key: &str, v: f64) -> Result<(), ConfigError> {
        if v >= 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(self.invalid(key, format!("must be nonnegative, got {v}")))
        }
    }

    fn times(&self, key: &str, times: &[f64]) -> Result<(), ConfigError> {
        if times.is_empty() {
            return Err(self.invalid(key, "time grid is empty"));
        }
        if times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(self.invalid(key, "times must be nonnegative and strictly increasing"));
        }
        Ok(())
    }

    /// Scenario check, then every value the command depends on.
    pub fn validate(&self, command: Command) -> Result<(), ConfigError> {
        let c = &self.config;
        if let Some(name) = &c.scenario {
            if !SCENARIO_NAMES.contains(&name.as_str()) {
                return Err(ConfigError::UnknownScenario(name.clone()));
            }
            if !command.scenarios().contains(&name.as_str()) {
                let allowed = command.scenarios();
                return Err(ConfigError::WrongScenario {
                    name: name.clone(),
                    command: command.name(),
                    allowed: if allowed.is_empty() { "none; omit the scenario".into() } else { allowed.join(", ") },
                });
            }
        }
        if c.formats.is_empty() {
            return Err(self.invalid("formats", "at least one output format is required"));
        }
        if c.shots == Some(0) {
            return Err(self.invalid("shots", "must be at least 1"));
        }
        if c.repeats == 0 {
            return Err(self.invalid("repeats", "must be at least 1"));
        }
        if c.threads == Some(0) {
            return Err(self.invalid("threads", "must be at least 1"));
        }
        self.positive("sensor.zero_field_splitting_mhz", c.sensor.zero_field_splitting_mhz)?;
        self.positive("sensor.gamma_e_mhz_per_g", c.sensor.gamma_e_mhz_per_g)?;
        self.nonnegative("sensor.b0_g", c.sensor.b0_g)?;
        if self.sensor().is_err() {
            return Err(self.invalid("sensor.b0_g", "transition frequency D − γₑB₀ must be positive"));
        }
        self.positive("signal.omega_s_mhz", c.signal.omega_s_mhz)?;
        if !c.signal.detuning_mhz.is_finite() {
            return Err(self.invalid("signal.detuning_mhz", "must be finite"));
        }
        self.nonnegative("drive.amplitude_mhz", c.drive.amplitude_mhz)?;
        self.positive("drive.frequency_mhz", c.drive.frequency_mhz)?;
        if c.drive.harmonics == 0 {
            return Err(self.invalid("drive.harmonics", "must be at least 1"));
        }
        self.positive("drive.validity_factor", c.drive.validity_factor)?;
        if !(c.readout.contrast > 0.0 && c.readout.contrast < 1.0) {
            return Err(self.invalid("readout.contrast", format!("must lie in (0, 1), got {}", c.readout.contrast)));
        }
        self.positive("readout.count_rate_per_s", c.readout.count_rate_per_s)?;
        self.positive("readout.t_det_us", c.readout.t_det_us)?;
        self.nonnegative("sequence.polarize_us", c.sequence.polarize_us)?;
        self.nonnegative("sequence.wait_us", c.sequence.wait_us)?;
        self.positive("sequence.tau_us", c.sequence.tau_us)?;

        match command {
            Command::Rabi => {
                match &c.rabi.times_us {
                    Some(t) => self.times("rabi.times_us", t)?,
                    None => {
                        self.positive("rabi.t_max_us", c.rabi.t_max_us)?;
                        self.positive("rabi.t_step_us", c.rabi.t_step_us)?;
                    }
                }
                if c.rabi.with_noise {
                    self.noise(true)?;
                }
            }
            Command::Qfi => {
                self.times("qfi.times_us", &c.qfi.times_us)?;
                if !(c.qfi.grid_half_width > 0.0 && c.qfi.grid_half_width < 0.5) {
                    return Err(self.invalid("qfi.grid_half_width", "must lie in (0, 0.5)"));
                }
                if c.qfi.grid_points < 3 {
                    return Err(self.invalid("qfi.grid_points", "need at least 3 points"));
                }
            }
            Command::Effective => {
                if c.effective.harmonics.is_empty() || c.effective.harmonics.contains(&0) {
                    return Err(self.invalid("effective.harmonics", "need a nonempty list of k ≥ 1"));
                }
                if c.effective.frequency_multipliers.is_empty()
                    || c.effective.frequency_multipliers.iter().any(|m| !(*m > 0.0))
                {
                    return Err(self.invalid("effective.frequency_multipliers", "need a nonempty list of positive factors"));
                }
            }
            Command::Robustness => {
                let r = &c.robustness;
                self.positive("robustness.t_us", r.t_us)?;
                for (axis, lo, hi, step) in [
                    ("amplitude", r.amplitude_min_mhz, r.amplitude_max_mhz, r.amplitude_step_mhz),
                    ("frequency", r.frequency_min_mhz, r.frequency_max_mhz, r.frequency_step_mhz),
                ] {
                    self.positive(&format!("robustness.{axis}_step_mhz"), step)?;
                    if !(hi > lo) {
                        return Err(self.invalid(&format!("robustness.{axis}_max_mhz"), "must exceed the minimum"));
                    }
                }
                if c.drive.amplitude_mhz + r.amplitude_min_mhz < 0.0 {
                    return Err(self.invalid("robustness.amplitude_min_mhz", "drives the amplitude negative"));
                }
                if c.drive.frequency_mhz + r.frequency_min_mhz <= 0.0 {
                    return Err(self.invalid("robustness.frequency_min_mhz", "drives the frequency to zero"));
                }
            }
            Command::Sensitivity => {
                let s = &c.sensitivity;
                if s.t2_us.is_empty() {
                    return Err(self.invalid("sensitivity.t2_us", "need at least one T₂"));
                }
                for &t2 in &s.t2_us {
                    self.positive("sensitivity.t2_us", t2)?;
                }
                self.positive("sensitivity.t_max_factor", s.t_max_factor)?;
                if s.points < 2 {
                    return Err(self.invalid("sensitivity.points", "need at least 2 points"));
                }
            }
            Command::Dd => {
                self.noise(false)?;
                self.positive("dd.t_max_off_us", c.dd.t_max_off_us)?;
                self.positive("dd.t_max_on_us", c.dd.t_max_on_us)?;
                if c.dd.t_max_on_us < 2.0 * c.sequence.tau_us {
                    return Err(self.invalid("dd.t_max_on_us", "shorter than one pulse spacing 2τ"));
                }
            }
            Command::Calibrate => self.noise(false)?,
        }
        Ok(())
    }

    fn noise(&self, need_sigma: bool) -> Result<(), ConfigError> {
        let n = &self.config.noise;
        if n.kind == NoiseKind::None {
            return Err(self.invalid("noise.kind", "a noise kind is required here"));
        }
        match n.sigma_z_mhz {
            Some(s) => self.nonnegative("noise.sigma_z_mhz", s)?,
            None if need_sigma => return Err(self.invalid("noise.sigma_z_mhz", "required for noisy Rabi scans")),
            None => {}
        }
        self.positive("noise.tau_c_us", n.tau_c_us)?;
        self.positive("noise.dt_us", n.dt_us)?;
        if n.realizations == 0 {
            return Err(self.invalid("noise.realizations", "must be at least 1"));
        }
        self.positive("noise.target_t2_us", n.target_t2_us)?;
        self.positive("noise.grid_step_us", n.grid_step_us)?;
        Ok(())
    }

    pub fn sensor(&self) -> fds_core::Result<SensorParams> {
        let s = &self.config.sensor;
        SensorParams::new(mhz_to_angular(s.zero_field_splitting_mhz), mhz_to_angular(s.gamma_e_mhz_per_g), s.b0_g)
    }
}

impl RunConfig {
    pub fn scenario(&self, preset: Preset, sensor: SensorParams) -> Scenario {
        Scenario {
            preset,
            sensor,
            omega_s: mhz_to_angular(self.signal.omega_s_mhz),
            detuning: mhz_to_angular(self.signal.detuning_mhz),
            drive_amplitude: mhz_to_angular(self.drive.amplitude_mhz),
            drive_frequency: mhz_to_angular(self.drive.frequency_mhz),
            errors: Default::default(),
        }
    }

    pub fn drive(&self, harmonics: u32) -> FloquetDriveParams {
        FloquetDriveParams {
            amplitude: mhz_to_angular(self.drive.amplitude_mhz),
            frequency: mhz_to_angular(self.drive.frequency_mhz),
            harmonics,
            validity_factor: self.drive.validity_factor,
        }
    }

    pub fn readout(&self) -> fds_core::Result<ReadoutModel> {
        ReadoutModel::new(self.readout.count_rate_per_s, self.readout.t_det_us, self.readout.contrast)
    }

    pub fn dd_config(&self) -> fds_core::Result<DdConfig> {
        DdConfig::new(self.sequence.tau_us, Axis::X)
    }

    pub fn sensitivity_params(&self, t2: f64) -> fds_core::Result<SensitivityParams> {
        SensitivityParams::new(
            self.readout.contrast,
            self.readout.count_rate_per_s,
            self.readout.t_det_us,
            t2,
            self.sensor.gamma_e_mhz_per_g * 1e6 / 1e5,
        )
    }

    /// Serialized TOML, for the round-trip property and `--dump-config`.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
