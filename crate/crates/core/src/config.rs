//! Scenario configuration.
//!
//! A scenario is a flat set of physical, waveform and campaign parameters.
//! On disk it is a flat TOML key/value file whose keys are the field names of
//! [`ScenarioConfig`]; an optional `preset` key selects the base values that
//! the remaining keys override. Unknown keys are rejected.
//!
//! ```toml
//! preset = "desk"
//! n_sats = 30
//! association_mode = "proposed"
//! sync_mode = "optimized"
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::consts::SPEED_OF_LIGHT;
use crate::error::{Result, SimError};

/// Largest FFT size for which the exact interference engine is allowed.
pub const EXACT_MODE_MAX_SUBCARRIERS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum AssociationMode {
    /// Each UT served by its nearest visible satellite.
    Single,
    /// Each UT served by every visible satellite.
    Full,
    /// Each UT served by the visible satellites whose residual offset fits the additional CP.
    Proposed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyncMode {
    Random,
    Optimized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterferenceMode {
    /// Full coherent double sum over subcarrier pairs.
    Exact,
    /// Parseval row energies for the subcarrier sums.
    Statistical,
}

/// How `noise_power` is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseScope {
    /// `noise_power` is the noise power in one subcarrier.
    PerSubcarrier,
    /// `noise_power` covers the whole band and is split evenly over subcarriers.
    Total,
}

/// Range of candidate sync points searched by the proposed-mode optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyncSearch {
    /// s in {0, ..., N-1}
    FftSize,
    /// s over the whole extended symbol
    FullSymbol,
}

macro_rules! impl_name {
    ($ty:ty { $($variant:ident => $name:literal),+ $(,)? }) => {
        impl $ty {
            pub fn name(self) -> &'static str {
                match self { $(Self::$variant => $name),+ }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.pad(self.name())
            }
        }

        impl FromStr for $ty {
            type Err = SimError;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok(Self::$variant),)+
                    other => Err(SimError::InvalidConfig(format!(
                        "unknown {} '{}'", stringify!($ty), other
                    ))),
                }
            }
        }
    };
}

impl_name!(AssociationMode { Single => "single", Full => "full", Proposed => "proposed" });
impl_name!(SyncMode { Random => "random", Optimized => "optimized" });
impl_name!(InterferenceMode { Exact => "exact", Statistical => "statistical" });
impl_name!(NoiseScope { PerSubcarrier => "per_subcarrier", Total => "total" });
impl_name!(SyncSearch { FftSize => "fft_size", FullSymbol => "full_symbol" });

impl AssociationMode {
    pub const ALL: [AssociationMode; 3] = [Self::Single, Self::Full, Self::Proposed];
}

/// All physical, waveform and campaign parameters of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Satellite shell altitude (m)
    pub altitude: f64,
    /// Minimum elevation for association (deg)
    pub min_elevation: f64,
    /// Earth-central half-angle of the satellite cap (deg)
    pub sat_cap_angle: f64,
    /// Earth-central half-angle of the UT cap (deg)
    pub ut_cap_angle: f64,
    /// Carrier frequency (Hz)
    pub carrier_freq: f64,
    /// Occupied bandwidth, also the sampling rate (Hz)
    pub bandwidth: f64,
    /// FFT size N
    pub n_subcarriers: usize,
    /// Conventional cyclic prefix (samples)
    pub cp_len: usize,
    /// Additional cyclic prefix reserved for multi-satellite association (samples)
    pub cp_add: usize,
    /// Candidate-selection margin on top of `cp_add` (samples)
    pub cp_margin: usize,
    /// Satellite UPA elements (x, y)
    pub sat_array: [usize; 2],
    /// UT UPA elements (x, y)
    pub ut_array: [usize; 2],
    /// Element spacing in carrier wavelengths
    pub antenna_spacing: f64,
    /// Ground PFD limit (dBW/m^2/4kHz)
    pub pfd_limit: f64,
    /// Noise power (dBW), see `noise_scope`
    pub noise_power: f64,
    pub noise_scope: NoiseScope,
    pub n_sats: usize,
    pub n_uts: usize,
    pub seed: u64,
    pub association_mode: AssociationMode,
    pub sync_mode: SyncMode,
    pub interference_mode: InterferenceMode,
    pub sync_search: SyncSearch,
}

/// Partial config as read from disk; every key optional, unknown keys rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    preset: Option<String>,
    altitude: Option<f64>,
    min_elevation: Option<f64>,
    sat_cap_angle: Option<f64>,
    ut_cap_angle: Option<f64>,
    carrier_freq: Option<f64>,
    bandwidth: Option<f64>,
    n_subcarriers: Option<usize>,
    cp_len: Option<usize>,
    cp_add: Option<usize>,
    cp_margin: Option<usize>,
    sat_array: Option<[usize; 2]>,
    ut_array: Option<[usize; 2]>,
    antenna_spacing: Option<f64>,
    pfd_limit: Option<f64>,
    noise_power: Option<f64>,
    noise_scope: Option<NoiseScope>,
    n_sats: Option<usize>,
    n_uts: Option<usize>,
    seed: Option<u64>,
    association_mode: Option<AssociationMode>,
    sync_mode: Option<SyncMode>,
    interference_mode: Option<InterferenceMode>,
    sync_search: Option<SyncSearch>,
}

macro_rules! apply_fields {
    ($cfg:ident, $file:ident; $($field:ident),+ $(,)?) => {
        $(if let Some(v) = $file.$field { $cfg.$field = v; })+
    };
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::paper()
    }
}

impl ScenarioConfig {
    /// Full-scale parameter set (600 km shell, 2 GHz, 30 MHz, N = 1024).
    pub fn paper() -> Self {
        Self {
            altitude: 600e3,
            min_elevation: 10.0,
            sat_cap_angle: 15.84,
            ut_cap_angle: 15.84,
            carrier_freq: 2e9,
            bandwidth: 30e6,
            n_subcarriers: 1024,
            cp_len: 64,
            cp_add: 600,
            cp_margin: 0,
            sat_array: [32, 32],
            ut_array: [1, 1],
            antenna_spacing: 0.5,
            pfd_limit: -144.0,
            noise_power: -152.24,
            noise_scope: NoiseScope::PerSubcarrier,
            n_sats: 100,
            n_uts: 100,
            seed: 1,
            association_mode: AssociationMode::Proposed,
            sync_mode: SyncMode::Optimized,
            interference_mode: InterferenceMode::Statistical,
            sync_search: SyncSearch::FftSize,
        }
    }

    /// Desk-scale set: N = 128 at the same subcarrier spacing, 20 satellites, 10 UTs.
    pub fn desk() -> Self {
        Self {
            bandwidth: 3.75e6,
            n_subcarriers: 128,
            cp_len: 8,
            cp_add: 75,
            n_sats: 20,
            n_uts: 10,
            ..Self::paper()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "paper" => Ok(Self::paper()),
            "desk" => Ok(Self::desk()),
            other => Err(SimError::InvalidConfig(format!("unknown preset '{other}'"))),
        }
    }

    /// Parses config text. Keys absent from the text keep the preset value.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| SimError::ConfigParse {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        let base = match file.preset.as_deref() {
            Some(name) => Self::preset(name)?,
            None => Self::paper(),
        };
        let cfg = base.overridden_by(file);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Applies `key = value` overrides (TOML syntax) on top of `self`.
    pub fn with_overrides(&self, text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| SimError::ConfigParse {
            path: "<override>".to_string(),
            message: e.to_string(),
        })?;
        if file.preset.is_some() {
            return Err(SimError::InvalidConfig(
                "'preset' cannot be used in an override".into(),
            ));
        }
        let cfg = self.clone().overridden_by(file);
        cfg.validate()?;
        Ok(cfg)
    }

    fn overridden_by(mut self, file: ConfigFile) -> Self {
        let cfg = &mut self;
        apply_fields!(cfg, file;
            altitude, min_elevation, sat_cap_angle, ut_cap_angle, carrier_freq, bandwidth,
            n_subcarriers, cp_len, cp_add, cp_margin, sat_array, ut_array, antenna_spacing,
            pfd_limit, noise_power, noise_scope, n_sats, n_uts, seed, association_mode,
            sync_mode, interference_mode, sync_search,
        );
        self
    }

    /// Serializes to the on-disk format (every key written).
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SimError::InvalidConfig(msg));
        let n = self.n_subcarriers;
        if n < 16 || !n.is_power_of_two() {
            return bad(format!("n_subcarriers must be a power of two >= 16, got {n}"));
        }
        if self.cp_len + self.cp_add >= n {
            return bad(format!(
                "cp_len + cp_add must be < n_subcarriers ({} + {} >= {n})",
                self.cp_len, self.cp_add
            ));
        }
        if !(self.min_elevation > 0.0 && self.min_elevation < 90.0) {
            return bad(format!("min_elevation must be in (0, 90), got {}", self.min_elevation));
        }
        if !self.altitude.is_finite() || self.altitude <= 0.0 {
            return bad(format!("altitude must be > 0, got {}", self.altitude));
        }
        for (name, v) in [("sat_cap_angle", self.sat_cap_angle), ("ut_cap_angle", self.ut_cap_angle)] {
            if !(v > 0.0 && v < 90.0) {
                return bad(format!("{name} must be in (0, 90), got {v}"));
            }
        }
        if !(self.carrier_freq.is_finite() && self.carrier_freq > 0.0 && self.bandwidth.is_finite() && self.bandwidth > 0.0) {
            return bad("carrier_freq and bandwidth must be > 0".into());
        }
        if self.bandwidth >= self.carrier_freq {
            return bad("bandwidth must be smaller than carrier_freq".into());
        }
        if !self.antenna_spacing.is_finite() || self.antenna_spacing <= 0.0 {
            return bad("antenna_spacing must be > 0".into());
        }
        if self.sat_array.contains(&0) || self.ut_array.contains(&0) {
            return bad("array dimensions must be >= 1".into());
        }
        if self.n_sats == 0 || self.n_uts == 0 {
            return bad("n_sats and n_uts must be >= 1".into());
        }
        if !self.pfd_limit.is_finite() || !self.noise_power.is_finite() {
            return bad("pfd_limit and noise_power must be finite".into());
        }
        if self.interference_mode == InterferenceMode::Exact && n > EXACT_MODE_MAX_SUBCARRIERS {
            return bad(format!(
                "exact interference mode is limited to n_subcarriers <= {EXACT_MODE_MAX_SUBCARRIERS}"
            ));
        }
        Ok(())
    }

    pub fn sampling_period(&self) -> f64 {
        1.0 / self.bandwidth
    }

    pub fn subcarrier_bandwidth(&self) -> f64 {
        self.bandwidth / self.n_subcarriers as f64
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq
    }

    /// Element spacing in meters.
    pub fn element_spacing(&self) -> f64 {
        self.antenna_spacing * self.wavelength()
    }

    /// Frequency of subcarrier `n`, centred on the carrier.
    pub fn subcarrier_freq(&self, n: usize) -> f64 {
        self.carrier_freq + (n as f64 - self.n_subcarriers as f64 / 2.0) * self.subcarrier_bandwidth()
    }

    /// Transmitted guard interval for the given mode.
    pub fn guard_len(&self, mode: AssociationMode) -> usize {
        match mode {
            AssociationMode::Proposed => self.cp_len + self.cp_add,
            AssociationMode::Single | AssociationMode::Full => self.cp_len,
        }
    }

    /// OFDM symbol length including all guard samples for the given mode.
    pub fn symbol_len(&self, mode: AssociationMode) -> usize {
        self.n_subcarriers + self.guard_len(mode)
    }

    /// Fraction of the symbol that carries data.
    pub fn prelog(&self, mode: AssociationMode) -> f64 {
        self.n_subcarriers as f64 / self.symbol_len(mode) as f64
    }

    pub fn sat_elements(&self) -> usize {
        self.sat_array[0] * self.sat_array[1]
    }

    pub fn ut_elements(&self) -> usize {
        self.ut_array[0] * self.ut_array[1]
    }

    /// Noise variance per subcarrier (W).
    pub fn noise_per_subcarrier(&self) -> f64 {
        let p = db_to_linear(self.noise_power);
        match self.noise_scope {
            NoiseScope::PerSubcarrier => p,
            NoiseScope::Total => p / self.n_subcarriers as f64,
        }
    }

    /// PFD limit scaled to one subcarrier (W/m^2).
    pub fn pfd_per_subcarrier(&self) -> f64 {
        db_to_linear(self.pfd_limit) * self.subcarrier_bandwidth() / 4000.0
    }

    /// Received power per subcarrier of an ideal single-satellite link at the PFD limit:
    /// PFD * c^2 / (4 pi f_c^2).
    pub fn pfd0(&self) -> f64 {
        self.pfd_per_subcarrier() * self.wavelength().powi(2) / (4.0 * std::f64::consts::PI)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid() {
        ScenarioConfig::paper().validate().unwrap();
        ScenarioConfig::desk().validate().unwrap();
    }

    #[test]
    fn desk_keeps_subcarrier_spacing() {
        let p = ScenarioConfig::paper();
        let d = ScenarioConfig::desk();
        assert!((p.subcarrier_bandwidth() - d.subcarrier_bandwidth()).abs() < 1e-9);
    }

    #[test]
    fn derived_quantities() {
        let c = ScenarioConfig::paper();
        assert_eq!(c.symbol_len(AssociationMode::Proposed), 1688);
        assert_eq!(c.symbol_len(AssociationMode::Full), 1088);
        assert!((c.sampling_period() - 1.0 / 30e6).abs() < 1e-20);
        assert!((c.subcarrier_freq(512) - 2e9).abs() < 1e-6);
        assert!((c.subcarrier_freq(0) - (2e9 - 15e6)).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_fft_size_and_cp() {
        let mut c = ScenarioConfig::desk();
        c.n_subcarriers = 100;
        assert!(c.validate().is_err());
        let mut c = ScenarioConfig::desk();
        c.n_subcarriers = 8;
        assert!(c.validate().is_err());
        let mut c = ScenarioConfig::desk();
        c.cp_add = 120;
        assert!(c.validate().is_err());
        let mut c = ScenarioConfig::desk();
        c.min_elevation = 90.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn exact_mode_is_gated() {
        let mut c = ScenarioConfig::paper();
        c.interference_mode = InterferenceMode::Exact;
        assert!(c.validate().is_err());
        let mut c = ScenarioConfig::desk();
        c.interference_mode = InterferenceMode::Exact;
        c.validate().unwrap();
    }

    #[test]
    fn parse_with_preset_and_overrides() {
        let text = "preset = \"desk\"\nn_sats = 30\nsync_mode = \"random\"\nsat_array = [4, 4]\n";
        let c = ScenarioConfig::parse(text, "inline").unwrap();
        assert_eq!(c.n_sats, 30);
        assert_eq!(c.n_subcarriers, 128);
        assert_eq!(c.sync_mode, SyncMode::Random);
        assert_eq!(c.sat_array, [4, 4]);
    }

    #[test]
    fn unknown_keys_are_errors() {
        let err = ScenarioConfig::parse("n_satellites = 3\n", "inline").unwrap_err();
        assert!(matches!(err, SimError::ConfigParse { .. }), "{err}");
    }

    #[test]
    fn toml_round_trip() {
        let c = ScenarioConfig::desk();
        let back = ScenarioConfig::parse(&c.to_toml(), "rt").unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn noise_scope_split() {
        let mut c = ScenarioConfig::paper();
        let per = c.noise_per_subcarrier();
        c.noise_scope = NoiseScope::Total;
        assert!((c.noise_per_subcarrier() * 1024.0 - per).abs() < 1e-30);
    }
}
