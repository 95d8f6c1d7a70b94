//! Experiment configuration: a TOML file with sections, every key unique
//! across sections so that `--key value` overrides need no section prefix.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::datagen::Phases;
use crate::dynamics::{Model, Scheme, Sign};
use crate::error::{Error, Result};
use crate::estimates::ExponentPair;
use crate::imethod::Blend;
use crate::spectral::FourierGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Simulate,
    AclCheck,
    DriftScaling,
    GrowthStudy,
    StrichartzCheck,
    Convergence,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Simulate,
        Experiment::AclCheck,
        Experiment::DriftScaling,
        Experiment::GrowthStudy,
        Experiment::StrichartzCheck,
        Experiment::Convergence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::AclCheck => "acl-check",
            Experiment::DriftScaling => "drift-scaling",
            Experiment::GrowthStudy => "growth-study",
            Experiment::StrichartzCheck => "strichartz-check",
            Experiment::Convergence => "convergence",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Optional; must match the subcommand when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    pub seed: u64,
    pub members: usize,
    /// Observer stride in steps.
    pub sample_every: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            experiment: None,
            seed: 1,
            members: 1,
            sample_every: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub k: u32,
    pub sign: Sign,
    pub nonlinear: bool,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            k: 1,
            sign: Sign::Defocusing,
            nonlinear: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub length: f64,
    pub modes: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            length: 2.0 * std::f64::consts::PI,
            modes: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeSection {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 1.0,
            scheme: Scheme::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataKind {
    Zero,
    Gaussian,
    Rough,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub kind: DataKind,
    pub amplitude: f64,
    /// Gaussian width.
    pub width: f64,
    /// Regularity of rough data; also the target regularity of `m_N`.
    pub s: f64,
    pub phases: Phases,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band_limit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            kind: DataKind::Gaussian,
            amplitude: 1.0,
            width: 1.0,
            s: 0.9,
            phases: Phases::Independent,
            band_limit: None,
            path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IMethodSection {
    pub n_list: Vec<f64>,
    pub blend: Blend,
    /// Replace simulated drifts by `N^exponent` (fit self-test).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synthetic_exponent: Option<f64>,
}

impl Default for IMethodSection {
    fn default() -> Self {
        Self {
            n_list: vec![8.0, 16.0, 32.0, 64.0],
            blend: Blend::default(),
            synthetic_exponent: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormsSection {
    pub s_list: Vec<f64>,
}

impl Default for NormsSection {
    fn default() -> Self {
        Self {
            s_list: vec![0.5, 0.9],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AclSection {
    /// Finite-difference step; a multiple of `dt`.
    pub h: f64,
}

impl Default for AclSection {
    fn default() -> Self {
        Self { h: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrowthSection {
    /// Fit `log sup` against `log(1+T')` for `T' ≥ fit_start`.
    pub fit_start: f64,
}

impl Default for GrowthSection {
    fn default() -> Self {
        Self { fit_start: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatesSection {
    pub window: f64,
    pub b: f64,
    pub scales: Vec<f64>,
    /// `[q, p]` pairs; `inf` is allowed.
    #[serde(with = "lenient_pairs")]
    pub pairs: Vec<[f64; 2]>,
    pub bilinear_n1: f64,
    pub bilinear_n2: Vec<f64>,
}

impl Default for EstimatesSection {
    fn default() -> Self {
        let inf = f64::INFINITY;
        Self {
            window: 0.125,
            b: 0.55,
            scales: vec![4.0, 8.0, 16.0, 32.0, 64.0],
            pairs: vec![[2.0, 2.0], [8.0, 4.0], [inf, 2.0], [6.0, 6.0], [4.0, 4.0], [inf, inf]],
            bilinear_n1: 4.0,
            bilinear_n2: vec![16.0, 32.0, 64.0, 128.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceSection {
    pub dt_list: Vec<f64>,
    pub m_list: Vec<usize>,
    pub linear_dt_list: Vec<f64>,
}

impl Default for ConvergenceSection {
    fn default() -> Self {
        Self {
            dt_list: vec![4e-3, 2e-3, 1e-3],
            m_list: vec![512, 1024],
            linear_dt_list: vec![0.37, 0.05, 1e-3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub energy_drift: f64,
    pub acl_pointwise: f64,
    pub quadrature_order: f64,
    pub ftc_floor: f64,
    pub drift_slope: f64,
    pub drift_r2: f64,
    pub noise_factor: f64,
    pub growth_margin: f64,
    pub ratio_growth: f64,
    pub temporal_order: f64,
    pub spatial: f64,
    pub linear: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            energy_drift: 1e-8,
            acl_pointwise: 1e-4,
            quadrature_order: 3.5,
            ftc_floor: 1e-13,
            drift_slope: -1.5,
            drift_r2: 0.9,
            noise_factor: 10.0,
            growth_margin: 0.1,
            ratio_growth: 2.0,
            temporal_order: 3.5,
            spatial: 1e-10,
            linear: 1e-13,
        }
    }
}

/// Everything a run needs besides the output directory.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub run: RunSection,
    pub model: ModelSection,
    pub grid: GridSection,
    pub time: TimeSection,
    pub data: DataSection,
    pub imethod: IMethodSection,
    pub norms: NormsSection,
    pub acl: AclSection,
    pub growth: GrowthSection,
    pub estimates: EstimatesSection,
    pub convergence: ConvergenceSection,
    pub tolerances: Tolerances,
}

/// Where the seed in a config came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedSource {
    Config,
    Environment,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::from_toml_with_overrides(text, &[])
    }

    /// Parses `text` and applies `--key value` overrides by key name.
    pub fn from_toml_with_overrides(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        apply_overrides(&mut table, overrides)?;
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }

    /// Loads a TOML config, or the embedded config of a `run.json` record.
    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "json") {
            let record: serde_json::Value = serde_json::from_str(&text)?;
            let config = record
                .get("config")
                .ok_or_else(|| Error::Config(format!("{} has no embedded config", path.display())))?;
            let cfg: ExperimentConfig = serde_json::from_value(config.clone())?;
            let text = toml::to_string(&cfg).map_err(|e| Error::Config(e.to_string()))?;
            return Self::from_toml_with_overrides(&text, overrides);
        }
        Self::from_toml_with_overrides(&text, overrides)
    }

    /// Applies `GBQ_SEED` if set.
    pub fn apply_seed_env(&mut self) -> Result<SeedSource> {
        match std::env::var("GBQ_SEED") {
            Ok(v) => {
                self.run.seed = v
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("GBQ_SEED must be an unsigned integer, got `{v}`")))?;
                Ok(SeedSource::Environment)
            }
            Err(_) => Ok(SeedSource::Config),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn grid(&self) -> Result<FourierGrid> {
        FourierGrid::new(self.grid.length, self.grid.modes)
    }

    pub fn model(&self) -> Model {
        Model {
            k: self.model.k,
            sign: self.model.sign,
            nonlinear: self.model.nonlinear,
        }
    }

    pub fn pairs(&self) -> Vec<ExponentPair> {
        self.estimates.pairs.iter().map(|&[q, p]| ExponentPair::new(q, p)).collect()
    }

    /// Checks everything that can be checked before a run.
    pub fn validate(&self, experiment: Experiment) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if let Some(e) = self.run.experiment {
            if e != experiment {
                return bad(format!("config is for `{e}` but `{experiment}` was requested"));
            }
        }
        let grid = self.grid()?;
        self.model().validate()?;
        if self.run.members == 0 {
            return bad("members must be at least 1".into());
        }
        if !(self.time.dt > 0.0 && self.time.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.time.dt));
        }
        if !(self.time.t_end >= 0.0 && self.time.t_end.is_finite()) {
            return bad(format!("t_end must be nonnegative, got {}", self.time.t_end));
        }
        if self.data.kind == DataKind::File && self.data.path.is_none() {
            return bad("data kind `file` needs `path`".into());
        }
        let s = self.data.s;
        let n_list = &self.imethod.n_list;
        match experiment {
            Experiment::Simulate => {
                for &n in n_list {
                    check_n(n, s, &grid)?;
                }
            }
            Experiment::AclCheck => {
                if n_list.is_empty() {
                    return bad("acl-check needs at least one N".into());
                }
                for &n in n_list {
                    check_n(n, s, &grid)?;
                }
                let ratio = self.acl.h / self.time.dt;
                if !(ratio >= 1.0 && (ratio - ratio.round()).abs() <= 1e-9 * ratio) {
                    return bad(format!("acl h = {} is not a multiple of dt = {}", self.acl.h, self.time.dt));
                }
                if self.time.t_end < 16.0 * self.acl.h {
                    return bad(format!("acl-check needs t_end >= 16 h, got t_end = {}", self.time.t_end));
                }
            }
            Experiment::DriftScaling => {
                if n_list.len() < 4 {
                    return bad(format!("drift-scaling needs at least 4 values of N, got {}", n_list.len()));
                }
                for w in n_list.windows(2) {
                    if (w[1] / w[0] - 2.0).abs() > 1e-12 {
                        return bad(format!("N list must be dyadic, found {} after {}", w[1], w[0]));
                    }
                }
                for &n in n_list {
                    check_n(n, s, &grid)?;
                    if n > grid.nyquist() / 8.0 {
                        return bad(format!(
                            "N = {n} exceeds Nyquist/8 = {:.4}; increase modes",
                            grid.nyquist() / 8.0
                        ));
                    }
                }
            }
            Experiment::GrowthStudy => {
                growth_bound_exponent(self.model.k, s)?;
                if self.growth.fit_start >= self.time.t_end {
                    return bad("fit_start must precede t_end".into());
                }
            }
            Experiment::StrichartzCheck => {
                let e = &self.estimates;
                if e.scales.len() < 2 || e.bilinear_n2.len() < 2 {
                    return bad("estimate sweeps need at least two scales".into());
                }
                for p in self.pairs() {
                    p.validate().map_err(|e| Error::Config(e.to_string()))?;
                }
                if e.bilinear_n2.iter().any(|&n2| n2 < 4.0 * e.bilinear_n1) {
                    return bad("bilinear sweep needs N2 >= 4 N1".into());
                }
            }
            Experiment::Convergence => {
                let c = &self.convergence;
                if c.dt_list.len() < 3 {
                    return bad("convergence needs at least three time steps".into());
                }
                if c.m_list.len() < 2 {
                    return bad("convergence needs at least two grid sizes".into());
                }
                for &m in &c.m_list {
                    FourierGrid::new(self.grid.length, m)?;
                }
            }
        }
        Ok(())
    }
}

fn check_n(n: f64, s: f64, grid: &FourierGrid) -> Result<()> {
    crate::imethod::build_m(n, s, grid, Blend::default())
        .map(|_| ())
        .map_err(|e| Error::Config(e.to_string()))
}

/// `(1-s)/(6ks - 6k + 2)`, defined for `1 - 1/(3k) < s < 1`.
pub fn growth_bound_exponent(k: u32, s: f64) -> Result<f64> {
    let k = k as f64;
    let denom = 6.0 * k * s - 6.0 * k + 2.0;
    if !(s < 1.0 && denom > 0.0) {
        return Err(Error::Config(format!(
            "growth bound needs 1 - 1/(3k) < s < 1, got k = {k}, s = {s}"
        )));
    }
    Ok((1.0 - s) / denom)
}

/// Non-finite values as the strings `inf`, `-inf`, `nan`, which JSON
/// cannot carry as numbers.
pub(crate) mod lenient_f64 {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    pub(crate) enum Repr {
        Num(f64),
        Text(String),
    }

    impl Repr {
        pub(crate) fn wrap(v: f64) -> Self {
            if v.is_finite() {
                Repr::Num(v)
            } else {
                Repr::Text(v.to_string().to_lowercase())
            }
        }

        pub(crate) fn unwrap<E: serde::de::Error>(self) -> Result<f64, E> {
            match self {
                Repr::Num(v) => Ok(v),
                Repr::Text(t) => t.parse().map_err(E::custom),
            }
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        Repr::wrap(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Repr::deserialize(d)?.unwrap()
    }
}

mod lenient_pairs {
    use super::lenient_f64::Repr;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[[f64; 2]], s: S) -> Result<S::Ok, S::Error> {
        let wrapped: Vec<[Repr; 2]> = v.iter().map(|[q, p]| [Repr::wrap(*q), Repr::wrap(*p)]).collect();
        wrapped.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<[f64; 2]>, D::Error> {
        Vec::<[Repr; 2]>::deserialize(d)?
            .into_iter()
            .map(|[q, p]| Ok([q.unwrap()?, p.unwrap()?]))
            .collect()
    }
}

/// Map from key name to its section, built from the default config.
fn key_sections() -> BTreeMap<String, Option<String>> {
    let default = toml::Table::try_from(ExperimentConfig::default()).expect("default config serializes");
    let mut map = BTreeMap::new();
    for (section, value) in default {
        match value {
            toml::Value::Table(t) => {
                for key in t.keys() {
                    map.insert(key.clone(), Some(section.clone()));
                }
            }
            _ => {
                map.insert(section, None);
            }
        }
    }
    // optional keys that the default omits
    map.insert("experiment".into(), Some("run".into()));
    map.insert("band_limit".into(), Some("data".into()));
    map.insert("path".into(), Some("data".into()));
    map.insert("synthetic_exponent".into(), Some("imethod".into()));
    map
}

/// Every recognized key name.
pub fn known_keys() -> Vec<String> {
    key_sections().into_keys().collect()
}

fn parse_override_value(raw: &str) -> toml::Value {
    let parse = |s: &str| -> Option<toml::Value> {
        format!("v = {s}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
    };
    parse(raw)
        .or_else(|| parse(&format!("[{raw}]")))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn apply_overrides(table: &mut toml::Table, overrides: &[(String, String)]) -> Result<()> {
    let sections = key_sections();
    for (key, raw) in overrides {
        let key = key.replace('-', "_");
        let section = sections
            .get(&key)
            .ok_or_else(|| Error::Config(format!("unknown config key `{key}`")))?;
        let mut value = parse_override_value(raw);
        // a scalar given for a list key becomes a one-element list
        let default_is_list = matches!(
            key.as_str(),
            "n_list" | "s_list" | "scales" | "pairs" | "bilinear_n2" | "dt_list" | "m_list" | "linear_dt_list"
        );
        if default_is_list && !value.is_array() {
            value = toml::Value::Array(vec![value]);
        }
        let target = match section {
            Some(sec) => table
                .entry(sec.clone())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                .as_table_mut()
                .ok_or_else(|| Error::Config(format!("`{sec}` must be a section")))?,
            None => &mut *table,
        };
        target.insert(key, value);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_are_unique_across_sections() {
        let default = toml::Table::try_from(ExperimentConfig::default()).unwrap();
        let mut seen = std::collections::HashSet::new();
        for (_, v) in default {
            if let toml::Value::Table(t) = v {
                for k in t.keys() {
                    assert!(seen.insert(k.clone()), "duplicate key {k}");
                }
            }
        }
    }

    #[test]
    fn overrides_reach_their_sections() {
        let text = "[grid]\nmodes = 128\n[time]\ndt = 0.01\n";
        let over = vec![
            ("modes".to_string(), "64".to_string()),
            ("n_list".to_string(), "8,16".to_string()),
            ("phases".to_string(), "unidirectional".to_string()),
            ("t-end".to_string(), "2.5".to_string()),
            ("pairs".to_string(), "[[6, 6], [inf, inf]]".to_string()),
        ];
        let cfg = ExperimentConfig::from_toml_with_overrides(text, &over).unwrap();
        assert_eq!(cfg.grid.modes, 64);
        assert_eq!(cfg.time.dt, 0.01);
        assert_eq!(cfg.time.t_end, 2.5);
        assert_eq!(cfg.imethod.n_list, vec![8.0, 16.0]);
        assert_eq!(cfg.data.phases, Phases::Unidirectional);
        assert!(cfg.estimates.pairs[1][0].is_infinite());
        let bad = vec![("nonsense".to_string(), "1".to_string())];
        assert!(ExperimentConfig::from_toml_with_overrides(text, &bad).is_err());
        assert!(ExperimentConfig::from_toml_str("[grid]\nmode = 3\n").is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let mut cfg = ExperimentConfig::default();
        cfg.data.band_limit = Some(12.0);
        cfg.imethod.synthetic_exponent = Some(-2.0);
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        let json = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn validation() {
        let mut cfg = ExperimentConfig::default();
        cfg.grid.modes = 1024;
        assert!(cfg.validate(Experiment::DriftScaling).is_ok());
        cfg.grid.modes = 512;
        assert!(cfg.validate(Experiment::DriftScaling).is_err());
        cfg.imethod.n_list = vec![8.0, 16.0, 32.0];
        assert!(cfg.validate(Experiment::DriftScaling).is_err());
        cfg.estimates.pairs.push([3.0, 3.0]);
        assert!(cfg.validate(Experiment::StrichartzCheck).is_err());
        cfg.run.experiment = Some(Experiment::Simulate);
        assert!(cfg.validate(Experiment::Convergence).is_err());
        let mut acl = ExperimentConfig::default();
        acl.time.dt = 3e-5;
        assert!(acl.validate(Experiment::AclCheck).is_err());
        acl.time.dt = 1e-5;
        assert!(acl.validate(Experiment::AclCheck).is_ok());
    }

    #[test]
    fn growth_exponent_table() {
        assert!((growth_bound_exponent(1, 0.9).unwrap() - 0.1 / 1.4).abs() <= 1e-15);
        assert!((growth_bound_exponent(1, 0.7).unwrap() - 1.5).abs() <= 1e-12);
        assert!(growth_bound_exponent(1, 0.6).is_err());
        assert!(growth_bound_exponent(2, 0.8).is_err());
    }
}
