//! Flat `key = value` configuration files.
//!
//! Blank lines and `#` comments are ignored. Simulation keys use the field
//! names of [`SimulationConfig`], selector keys those of [`SelectorParams`];
//! a selector key may be scoped to one method as `team_c.max_size = 5`.
//! Tournament files add `replicates`, `methods`, `master_seed` and `weights`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use contest_core::{Method, ScoringWeights, SelectorParams, SimulationConfig};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::error::{CliError, Result};
use crate::formats::read_file;

/// Parsed entries in file order, with their line numbers.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigFile {
    pub path: PathBuf,
    pub entries: Vec<(usize, String, String)>,
}

impl ConfigFile {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        let mut seen = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::parse(path, format!("line {line_no}: expected key = value"))
            })?;
            let (key, value) = (key.trim().to_string(), value.trim().to_string());
            if key.is_empty() {
                return Err(CliError::parse(
                    path,
                    format!("line {line_no}: missing key"),
                ));
            }
            if let Some(first) = seen.insert(key.clone(), line_no) {
                return Err(CliError::parse(
                    path,
                    format!("line {line_no}: '{key}' already set on line {first}"),
                ));
            }
            entries.push((line_no, key, value));
        }
        Ok(Self {
            path: path.to_path_buf(),
            entries,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_file(path)?, path)
    }

    fn get(&self, key: &str) -> Option<&(usize, String, String)> {
        self.entries.iter().find(|(_, k, _)| k == key)
    }

    fn error(&self, line: usize, msg: impl std::fmt::Display) -> CliError {
        CliError::parse(&self.path, format!("line {line}: {msg}"))
    }

    /// Fails on the first key no consumer claimed.
    fn reject_unknown(&self, known: impl Fn(&str) -> bool) -> Result<()> {
        match self.entries.iter().find(|(_, k, _)| !known(k)) {
            Some((line, key, _)) => Err(self.error(*line, format!("unknown key '{key}'"))),
            None => Ok(()),
        }
    }
}

fn fields_of<T: Serialize>(value: &T) -> serde_json::Map<String, Value> {
    match serde_json::to_value(value).expect("config structs serialize") {
        Value::Object(map) => map,
        _ => unreachable!("config structs serialize to objects"),
    }
}

fn parse_like(template: &Value, text: &str) -> Option<Value> {
    match template {
        Value::Bool(_) => bool::from_str(text).ok().map(Value::Bool),
        Value::Number(n) if n.is_u64() => text.parse::<u64>().ok().map(Value::from),
        Value::Number(_) => text
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .and_then(|v| serde_json::Number::from_f64(v).map(Value::Number)),
        _ => None,
    }
}

/// Applies `(line, field, value)` overrides to a serde struct, typing each value
/// after the field's current value.
fn apply<'a, T, I>(file: &ConfigFile, base: &T, overrides: I) -> Result<T>
where
    T: Serialize + DeserializeOwned,
    I: IntoIterator<Item = (usize, &'a str, &'a str)>,
{
    let mut map = fields_of(base);
    for (line, field, text) in overrides {
        let slot = map
            .get_mut(field)
            .ok_or_else(|| file.error(line, format!("unknown key '{field}'")))?;
        *slot = parse_like(slot, text)
            .ok_or_else(|| file.error(line, format!("invalid value '{text}' for '{field}'")))?;
    }
    serde_json::from_value(Value::Object(map))
        .map_err(|e| CliError::parse(&file.path, e.to_string()))
}

fn is_field<T: Serialize + Default>(key: &str) -> bool {
    fields_of(&T::default()).contains_key(key)
}

fn sim_keys(file: &ConfigFile) -> impl Iterator<Item = (usize, &str, &str)> {
    file.entries
        .iter()
        .filter(|(_, k, _)| is_field::<SimulationConfig>(k))
        .map(|(l, k, v)| (*l, k.as_str(), v.as_str()))
}

pub fn simulation_config(file: &ConfigFile) -> Result<SimulationConfig> {
    let config: SimulationConfig = apply(file, &SimulationConfig::default(), sim_keys(file))?;
    config.validate()?;
    Ok(config)
}

/// Shared keys first, then keys scoped to `method`.
pub fn selector_params(file: &ConfigFile, method: Method) -> Result<SelectorParams> {
    let shared = file
        .entries
        .iter()
        .filter(|(_, k, _)| is_field::<SelectorParams>(k))
        .map(|(l, k, v)| (*l, k.as_str(), v.as_str()));
    let params = apply(file, &SelectorParams::default(), shared)?;
    let prefix = format!("{}.", method.name());
    let scoped = file
        .entries
        .iter()
        .filter_map(|(l, k, v)| k.strip_prefix(&prefix).map(|f| (*l, f, v.as_str())));
    apply(file, &params, scoped)
}

fn is_selector_key(key: &str) -> bool {
    if is_field::<SelectorParams>(key) {
        return true;
    }
    match key.split_once('.') {
        Some((method, field)) => {
            Method::from_str(method).is_ok() && is_field::<SelectorParams>(field)
        }
        None => false,
    }
}

/// How submissions are turned into scores.
#[derive(Clone, Debug, PartialEq)]
pub enum ScoringRule {
    Points(ScoringWeights),
    Youden,
}

impl ScoringRule {
    /// `table1`, `proposed`, `youden`, or a path to a weights file with keys
    /// `w_tp`, `w_fp`, `w_tn`, `w_fn`.
    pub fn resolve(spec: &str) -> Result<Self> {
        match spec {
            "table1" => Ok(Self::Points(ScoringWeights::TABLE1)),
            "proposed" => Ok(Self::Points(ScoringWeights::PROPOSED)),
            "youden" => Ok(Self::Youden),
            path => {
                let path = Path::new(path);
                if !path.exists() {
                    return Err(CliError::Usage(format!(
                        "weights must be table1, proposed, youden or an existing file, got '{spec}'"
                    )));
                }
                let file = ConfigFile::load(path)?;
                let pairs = file
                    .entries
                    .iter()
                    .map(|(l, k, v)| (*l, k.as_str(), v.as_str()));
                let weights: ScoringWeights = apply(&file, &ScoringWeights::TABLE1, pairs)?;
                weights.validate()?;
                Ok(Self::Points(weights))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MethodEntry {
    pub method: Method,
    pub params: SelectorParams,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TournamentConfig {
    pub replicates: usize,
    pub master_seed: u64,
    pub simulation: SimulationConfig,
    pub methods: Vec<MethodEntry>,
    pub rule: ScoringRule,
}

impl Default for TournamentConfig {
    fn default() -> Self {
        Self {
            replicates: 100,
            master_seed: 0,
            simulation: SimulationConfig::default(),
            methods: Method::ALL
                .iter()
                .map(|&method| MethodEntry {
                    method,
                    params: SelectorParams::default(),
                })
                .collect(),
            rule: ScoringRule::Points(ScoringWeights::TABLE1),
        }
    }
}

const TOURNAMENT_KEYS: [&str; 4] = ["replicates", "methods", "master_seed", "weights"];

impl TournamentConfig {
    pub fn from_file(file: &ConfigFile) -> Result<Self> {
        file.reject_unknown(|k| {
            TOURNAMENT_KEYS.contains(&k) || is_field::<SimulationConfig>(k) || is_selector_key(k)
        })?;
        let mut config = Self {
            simulation: simulation_config(file)?,
            ..Self::default()
        };
        if let Some((line, _, v)) = file.get("replicates") {
            config.replicates = v
                .parse()
                .ok()
                .filter(|&r| r > 0)
                .ok_or_else(|| file.error(*line, "replicates must be a positive integer"))?;
        }
        if let Some((line, _, v)) = file.get("master_seed") {
            config.master_seed = v
                .parse()
                .map_err(|_| file.error(*line, "master_seed must be an unsigned integer"))?;
        }
        if let Some((_, _, v)) = file.get("weights") {
            config.rule = ScoringRule::resolve(v)?;
        }
        let methods: Vec<Method> = match file.get("methods") {
            Some((line, _, v)) => {
                let mut list = Vec::new();
                for name in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    let m = Method::from_str(name)
                        .map_err(|_| file.error(*line, format!("unknown method '{name}'")))?;
                    if list.contains(&m) {
                        return Err(file.error(*line, format!("method '{name}' listed twice")));
                    }
                    list.push(m);
                }
                if list.is_empty() {
                    return Err(file.error(*line, "methods must name at least one method"));
                }
                list
            }
            None => Method::ALL.to_vec(),
        };
        config.methods = methods
            .into_iter()
            .map(|method| {
                let params = selector_params(file, method)?;
                params.validate(method)?;
                Ok(MethodEntry { method, params })
            })
            .collect::<Result<_>>()?;
        Ok(config)
    }
}

/// Configuration for `simulate`: simulation keys only.
pub fn simulation_from_file(file: &ConfigFile) -> Result<SimulationConfig> {
    file.reject_unknown(is_field::<SimulationConfig>)?;
    simulation_config(file)
}

/// Configuration for `select`: selector keys only.
pub fn selector_from_file(file: &ConfigFile, method: Method) -> Result<SelectorParams> {
    file.reject_unknown(is_selector_key)?;
    selector_params(file, method)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> ConfigFile {
        ConfigFile::parse(text, Path::new("t.cfg")).unwrap()
    }

    #[test]
    fn comments_and_blank_lines() {
        let file = parse("# header\n\nd = 10  # inline\nk_max=4\n");
        assert_eq!(file.entries.len(), 2);
        let c = simulation_from_file(&file).unwrap();
        assert_eq!((c.d, c.k_max, c.n_cases), (10, 4, 2000));
    }

    #[test]
    fn duplicate_and_malformed_lines() {
        assert!(ConfigFile::parse("d = 1\nd = 2\n", Path::new("t")).is_err());
        assert!(ConfigFile::parse("just words\n", Path::new("t")).is_err());
    }

    #[test]
    fn unknown_key_and_bad_value_name_the_line() {
        let err = simulation_from_file(&parse("d = 20\nbogus = 1\n")).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = simulation_from_file(&parse("n_cases = many\n")).unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn float_and_bool_fields() {
        let c = simulation_from_file(&parse("effect_hi = 2\njitter_prevalences = true\n")).unwrap();
        assert_eq!(c.effect_hi, 2.0);
        assert!(c.jitter_prevalences);
    }

    #[test]
    fn scoped_selector_keys_override_shared_ones() {
        let file = parse("max_size = 6\nteam_c.max_size = 4\n");
        assert_eq!(
            selector_from_file(&file, Method::TeamC).unwrap().max_size,
            4
        );
        assert_eq!(
            selector_from_file(&file, Method::TeamA).unwrap().max_size,
            6
        );
    }

    #[test]
    fn tournament_file() {
        let file = parse("replicates = 3\nmaster_seed = 11\nmethods = team_a, empty_baseline\nweights = proposed\nn_cases = 500\n");
        let t = TournamentConfig::from_file(&file).unwrap();
        assert_eq!(t.replicates, 3);
        assert_eq!(t.master_seed, 11);
        assert_eq!(t.simulation.n_cases, 500);
        assert_eq!(t.rule, ScoringRule::Points(ScoringWeights::PROPOSED));
        let names: Vec<_> = t.methods.iter().map(|m| m.method).collect();
        assert_eq!(names, vec![Method::TeamA, Method::EmptyBaseline]);
        assert!(TournamentConfig::from_file(&parse("methods = team_z\n")).is_err());
        assert!(TournamentConfig::from_file(&parse("replicates = 0\n")).is_err());
    }

    #[test]
    fn weight_presets() {
        assert_eq!(ScoringRule::resolve("youden").unwrap(), ScoringRule::Youden);
        assert!(ScoringRule::resolve("no-such-preset").is_err());
    }
}
