//! Line-based `key = value` experiment configuration with `[section]`
//! headers.

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::bp::BpSettings;
use crate::noise::{NoiseConfig, Platform, SoftSpec};
use crate::Basis;

#[derive(Debug, Error, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub msg: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.msg),
            None => f.write_str(&self.msg),
        }
    }
}

impl ConfigError {
    fn at(line: usize, msg: impl Into<String>) -> Self {
        Self { line: Some(line), msg: msg.into() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sweep {
    Memory,
    Tau,
    Bb,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CodeFamily {
    Surface,
    Bb72,
    Bb144,
}

impl CodeFamily {
    pub fn is_bb(self) -> bool {
        !matches!(self, CodeFamily::Surface)
    }

    /// Distance of a fixed-size code.
    pub fn bb_distance(self) -> Option<usize> {
        match self {
            CodeFamily::Surface => None,
            CodeFamily::Bb72 => Some(6),
            CodeFamily::Bb144 => Some(12),
        }
    }
}

impl fmt::Display for CodeFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CodeFamily::Surface => "surface",
            CodeFamily::Bb72 => "bb72",
            CodeFamily::Bb144 => "bb144",
        })
    }
}

impl FromStr for CodeFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "surface" | "rotated-surface" => Ok(CodeFamily::Surface),
            "bb72" | "[[72,12,6]]" => Ok(CodeFamily::Bb72),
            "bb144" | "gross" | "[[144,12,12]]" => Ok(CodeFamily::Bb144),
            _ => Err(format!("unknown code '{s}' (expected surface, bb72 or bb144)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DecoderKind {
    UfSoft,
    UfHard,
    BpSoft,
    BpHard,
    MlOracle,
}

impl DecoderKind {
    pub fn is_soft(self) -> bool {
        matches!(self, DecoderKind::UfSoft | DecoderKind::BpSoft)
    }

    /// Whether the decoder only works on matchable (surface code) models.
    pub fn surface_only(self) -> bool {
        matches!(self, DecoderKind::UfSoft | DecoderKind::UfHard | DecoderKind::MlOracle)
    }
}

impl fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecoderKind::UfSoft => "uf-soft",
            DecoderKind::UfHard => "uf-hard",
            DecoderKind::BpSoft => "bp-soft",
            DecoderKind::BpHard => "bp-hard",
            DecoderKind::MlOracle => "ml-oracle",
        })
    }
}

impl FromStr for DecoderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "uf-soft" => Ok(DecoderKind::UfSoft),
            "uf-hard" => Ok(DecoderKind::UfHard),
            "bp-soft" => Ok(DecoderKind::BpSoft),
            "bp-hard" => Ok(DecoderKind::BpHard),
            "ml-oracle" => Ok(DecoderKind::MlOracle),
            _ => Err(format!("unknown decoder '{s}' (expected uf-soft, uf-hard, bp-soft, bp-hard or ml-oracle)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rounds {
    Fixed(usize),
    /// As many rounds as the code distance.
    Distance,
}

impl Rounds {
    pub fn for_distance(self, d: usize) -> usize {
        match self {
            Rounds::Fixed(t) => t,
            Rounds::Distance => d,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub sweep: Sweep,
    pub platform: Platform,
    pub codes: Vec<CodeFamily>,
    pub distances: Vec<usize>,
    pub rounds: Rounds,
    pub shots: u64,
    pub decoders: Vec<DecoderKind>,
    pub bases: Vec<Basis>,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub include_d3: bool,
    /// Shots sampled and decoded per job.
    pub chunk_shots: usize,
    pub p: Vec<f64>,
    pub soft: SoftSpec,
    /// Measurement times; empty means the platform's reference time.
    pub tau_m: Vec<f64>,
    pub time_dependent: bool,
    pub t1: Option<f64>,
    pub t2: Option<f64>,
    pub tau_1q: Option<f64>,
    pub tau_2q: Option<f64>,
    pub tau_r: Option<f64>,
    pub bias: Option<f64>,
    pub calibrate_eta: bool,
    pub bp: BpSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            sweep: Sweep::Memory,
            platform: Platform::Sc,
            codes: vec![CodeFamily::Surface],
            distances: vec![3, 5, 7],
            rounds: Rounds::Fixed(10),
            shots: 10_000,
            decoders: vec![DecoderKind::UfSoft, DecoderKind::UfHard],
            bases: vec![Basis::Z],
            seed: 1,
            output: None,
            include_d3: false,
            chunk_shots: 16_384,
            p: vec![0.003],
            soft: SoftSpec::Ratio(5.0),
            tau_m: Vec::new(),
            time_dependent: false,
            t1: None,
            t2: None,
            tau_1q: None,
            tau_2q: None,
            tau_r: None,
            bias: None,
            calibrate_eta: true,
            bp: BpSettings::default(),
        }
    }
}

const KEYS: &[(&str, &[&str])] = &[
    (
        "experiment",
        &["sweep", "platform", "code", "distances", "rounds", "shots", "decoders", "bases", "seed", "output", "include_d3", "chunk_shots"],
    ),
    ("noise", &["p", "ps_ratio", "ps", "tau_m", "time_dependent", "t1", "t2", "tau_1q", "tau_2q", "tau_r", "bias", "calibrate_eta"]),
    ("decoder", &["bp_iters", "bp_scale", "osd_order"]),
];

fn parse_num<T: FromStr>(v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("'{v}' is not a valid number"))
}

/// Number with an optional `ns`, `us`, `ms` or `s` suffix, in seconds.
fn parse_time(v: &str) -> Result<f64, String> {
    // dividing keeps e.g. 200ns exactly equal to 200e-9
    for (suffix, per_second) in [("ns", 1e9), ("us", 1e6), ("µs", 1e6), ("ms", 1e3), ("s", 1.0)] {
        if let Some(num) = v.strip_suffix(suffix) {
            return Ok(parse_num::<f64>(num.trim())? / per_second);
        }
    }
    parse_num(v)
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("'{v}' is not a boolean")),
    }
}

fn parse_list<T>(v: &str, item: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    let items: Vec<T> = v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(item).collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err("empty list".into());
    }
    Ok(items)
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut section: Option<&str> = None;
        let mut seen: HashMap<&str, usize> = HashMap::new();
        let mut time_dependent_set = false;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name =
                    name.strip_suffix(']').ok_or_else(|| ConfigError::at(line_no, format!("malformed section header '{line}'")))?.trim();
                section = Some(
                    KEYS.iter()
                        .map(|(s, _)| *s)
                        .find(|s| *s == name)
                        .ok_or_else(|| ConfigError::at(line_no, format!("unknown section [{name}]")))?,
                );
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| ConfigError::at(line_no, format!("expected 'key = value', got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            let Some(sec) = section else {
                return Err(ConfigError::at(line_no, format!("key '{key}' appears before any [section] header")));
            };
            let keys = KEYS.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap_or(&[]);
            let Some(&key) = keys.iter().find(|k| **k == key) else {
                let home = KEYS.iter().find(|(_, k)| k.contains(&key)).map(|(s, _)| *s);
                let msg = match home {
                    Some(h) => format!("key '{key}' belongs in [{h}], not [{sec}]"),
                    None => format!("unknown key '{key}' in [{sec}]"),
                };
                return Err(ConfigError::at(line_no, msg));
            };
            if let Some(prev) = seen.insert(key, line_no) {
                return Err(ConfigError::at(line_no, format!("duplicate key '{key}' (first set on line {prev})")));
            }
            if key == "time_dependent" {
                time_dependent_set = true;
            }
            cfg.set(key, value).map_err(|m| ConfigError::at(line_no, format!("{key}: {m}")))?;
        }
        if !time_dependent_set {
            cfg.time_dependent = cfg.sweep == Sweep::Tau && cfg.platform == Platform::Sc;
        }
        if cfg.sweep == Sweep::Bb && !seen.contains_key("code") {
            cfg.codes = vec![CodeFamily::Bb72];
        }
        if cfg.sweep == Sweep::Bb && !seen.contains_key("decoders") {
            cfg.decoders = vec![DecoderKind::BpSoft, DecoderKind::BpHard];
        }
        if cfg.sweep == Sweep::Bb && !seen.contains_key("rounds") {
            cfg.rounds = Rounds::Distance;
        }
        cfg.validate_with(|k| seen.get(k).copied())?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        match key {
            "sweep" => {
                self.sweep = match v {
                    "memory" => Sweep::Memory,
                    "tau" | "tau-sweep" => Sweep::Tau,
                    "bb" => Sweep::Bb,
                    _ => return Err(format!("unknown sweep '{v}' (expected memory, tau or bb)")),
                }
            }
            "platform" => self.platform = v.parse()?,
            "code" => self.codes = parse_list(v, str::parse)?,
            "distances" => self.distances = parse_list(v, parse_num)?,
            "rounds" => self.rounds = if v == "d" { Rounds::Distance } else { Rounds::Fixed(parse_num(v)?) },
            "shots" => {
                self.shots = parse_num::<f64>(v).and_then(|x| {
                    if x.fract() == 0.0 && x >= 0.0 {
                        Ok(x as u64)
                    } else {
                        Err(format!("'{v}' is not a whole number"))
                    }
                })?
            }
            "decoders" => self.decoders = parse_list(v, str::parse)?,
            "bases" => self.bases = parse_list(v, str::parse)?,
            "seed" => self.seed = parse_num(v)?,
            "output" => self.output = Some(PathBuf::from(v)),
            "include_d3" => self.include_d3 = parse_bool(v)?,
            "chunk_shots" => self.chunk_shots = parse_num(v)?,
            "p" => self.p = parse_list(v, parse_num)?,
            "ps_ratio" => self.soft = SoftSpec::Ratio(parse_num(v)?),
            "ps" => self.soft = SoftSpec::Explicit(parse_num(v)?),
            "tau_m" => self.tau_m = parse_list(v, parse_time)?,
            "time_dependent" => self.time_dependent = parse_bool(v)?,
            "t1" => self.t1 = Some(parse_time(v)?),
            "t2" => self.t2 = Some(parse_time(v)?),
            "tau_1q" => self.tau_1q = Some(parse_time(v)?),
            "tau_2q" => self.tau_2q = Some(parse_time(v)?),
            "tau_r" => self.tau_r = Some(parse_time(v)?),
            "bias" => self.bias = Some(parse_num(v)?),
            "calibrate_eta" => self.calibrate_eta = parse_bool(v)?,
            "bp_iters" => self.bp.max_iters = parse_num(v)?,
            "bp_scale" => self.bp.scale = parse_num(v)?,
            "osd_order" => self.bp.osd_order = parse_num(v)?,
            _ => unreachable!("key table and setter disagree on '{key}'"),
        }
        Ok(())
    }

    /// Checks cross-field constraints.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.validate_with(|_| None)
    }

    fn validate_with(&self, line_of: impl Fn(&str) -> Option<usize>) -> Result<(), ConfigError> {
        let err = |key: &str, msg: String| ConfigError { line: line_of(key), msg };
        if self.shots == 0 {
            return Err(err("shots", "shots must be at least 1".into()));
        }
        if self.chunk_shots == 0 {
            return Err(err("chunk_shots", "chunk_shots must be at least 1".into()));
        }
        if let Rounds::Fixed(0) = self.rounds {
            return Err(err("rounds", "rounds must be at least 1".into()));
        }
        for &code in &self.codes {
            if code.is_bb() != (self.sweep == Sweep::Bb) {
                return Err(err("code", format!("code {code} does not fit a {:?} sweep", self.sweep).to_lowercase()));
            }
        }
        if self.sweep != Sweep::Bb {
            for &d in &self.distances {
                if d < 3 || d % 2 == 0 {
                    return Err(err("distances", format!("surface-code distance must be odd and at least 3, got {d}")));
                }
            }
        }
        for &dec in &self.decoders {
            if dec.surface_only() && self.sweep == Sweep::Bb {
                return Err(err("decoders", format!("{dec} only decodes surface codes")));
            }
        }
        if self.sweep == Sweep::Tau {
            if self.tau_m.is_empty() {
                return Err(err("tau_m", "a tau sweep needs a tau_m list".into()));
            }
            if self.platform == Platform::Sc && !self.time_dependent {
                return Err(err("time_dependent", "a superconducting tau sweep needs time_dependent = true".into()));
            }
        }
        for &t in &self.tau_m {
            if !(t > 0.0) {
                return Err(err("tau_m", format!("tau_m must be positive, got {t}")));
            }
        }
        self.bp.validate().map_err(|e| err("bp_iters", e.to_string()))?;
        for &p in &self.p {
            for tau in self.tau_points() {
                self.noise(p, tau).validate().map_err(|e| err("p", e.to_string()))?;
            }
        }
        Ok(())
    }

    /// Measurement times to sweep; `None` stands for the platform default.
    pub fn tau_points(&self) -> Vec<Option<f64>> {
        if self.tau_m.is_empty() {
            vec![None]
        } else {
            self.tau_m.iter().map(|&t| Some(t)).collect()
        }
    }

    /// Noise model at one grid point.
    pub fn noise(&self, p: f64, tau_m: Option<f64>) -> NoiseConfig {
        let mut n = match self.platform {
            Platform::Sc => NoiseConfig::sc(p, 1.0),
            Platform::Na => NoiseConfig::na(p, 1.0),
        };
        n.soft = self.soft;
        n.t1 = self.t1.unwrap_or(n.t1);
        n.t2 = self.t2.unwrap_or(n.t2);
        n.tau_1q = self.tau_1q.unwrap_or(n.tau_1q);
        n.tau_2q = self.tau_2q.unwrap_or(n.tau_2q);
        n.tau_r = self.tau_r.unwrap_or(n.tau_r);
        n.bias = self.bias.unwrap_or(n.bias);
        n.calibrate_eta = self.calibrate_eta;
        let tau = tau_m.unwrap_or(n.tau_m);
        if self.time_dependent {
            n = n.time_dependent(tau);
        } else {
            n.tau_m = tau;
        }
        n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_config() {
        let text = "
# comment
[experiment]
sweep = memory
platform = na
distances = 5, 7, 9
rounds = 10
shots = 1e6
decoders = uf-soft, bp-hard
bases = Z, X
seed = 42

[noise]
p = 0.005, 0.01
ps_ratio = 5
bias = 100

[decoder]
bp_iters = 50
bp_scale = 0.9
";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.platform, Platform::Na);
        assert_eq!(cfg.distances, vec![5, 7, 9]);
        assert_eq!(cfg.shots, 1_000_000);
        assert_eq!(cfg.decoders, vec![DecoderKind::UfSoft, DecoderKind::BpHard]);
        assert_eq!(cfg.bases, vec![Basis::Z, Basis::X]);
        assert_eq!(cfg.p, vec![0.005, 0.01]);
        assert_eq!(cfg.bp.max_iters, 50);
        assert_eq!(cfg.noise(0.01, None).target_ps(), 0.05);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = ExperimentConfig::parse("[experiment]\nshots = 10\nfoo = 1\n").unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(e.msg.contains("foo"));
        let e = ExperimentConfig::parse("[experiment]\np = 0.1\n").unwrap_err();
        assert!(e.msg.contains("[noise]"), "{e}");
        let e = ExperimentConfig::parse("shots = 1\n").unwrap_err();
        assert_eq!(e.line, Some(1));
        let e = ExperimentConfig::parse("[experiment]\nshots = 1\nshots = 2\n").unwrap_err();
        assert!(e.msg.contains("line 2"));
        let e = ExperimentConfig::parse("[experiment]\n\nshots = 0\n").unwrap_err();
        assert_eq!(e.line, Some(3));
        let e = ExperimentConfig::parse("[noise]\np = abc\n").unwrap_err();
        assert_eq!(e.to_string(), "line 2: p: 'abc' is not a valid number");
        assert!(ExperimentConfig::parse("[nope]\n").is_err());
        assert!(ExperimentConfig::parse("[experiment]\njunk\n").is_err());
    }

    #[test]
    fn rejects_mismatched_decoders_and_codes() {
        let e = ExperimentConfig::parse("[experiment]\nsweep = bb\ndecoders = uf-soft\n").unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(ExperimentConfig::parse("[experiment]\ncode = bb72\n").is_err());
        assert!(ExperimentConfig::parse("[experiment]\ndistances = 4\n").is_err());
        assert!(ExperimentConfig::parse("[noise]\np = 0.7\n").is_err());
    }

    #[test]
    fn bb_and_tau_defaults() {
        let cfg = ExperimentConfig::parse("[experiment]\nsweep = bb\n").unwrap();
        assert_eq!(cfg.codes, vec![CodeFamily::Bb72]);
        assert_eq!(cfg.rounds, Rounds::Distance);
        assert_eq!(cfg.decoders, vec![DecoderKind::BpSoft, DecoderKind::BpHard]);
        let cfg = ExperimentConfig::parse("[experiment]\nsweep = tau\n[noise]\ntau_m = 200ns, 1.5us\n").unwrap();
        assert!(cfg.time_dependent);
        assert!((cfg.tau_m[1] - 1.5e-6).abs() < 1e-18);
        assert!(ExperimentConfig::parse("[experiment]\nsweep = tau\n").is_err());
        assert!(ExperimentConfig::parse("[experiment]\nsweep = tau\n[noise]\ntau_m = 1us\ntime_dependent = false\n").is_err());
    }
}
