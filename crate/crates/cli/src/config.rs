//! Run settings: a flat `key = value` file with optional `[subcommand]`
//! sections, overlaid by command-line flags.
//!
//! Keys before the first section apply to every subcommand that accepts
//! them; keys inside `[name]` apply only to subcommand `name`. Flags given on
//! the command line always win.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use trimer::spectrum::{MeshPolicy, ScaleChoice, DEFAULT_STRETCH};

#[derive(Debug, Clone, PartialEq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> UsageError {
    UsageError(msg.into())
}

/// Parsed config file: global keys plus one map per section, each entry
/// tagged with its line number.
#[derive(Debug, Default)]
pub struct ConfigFile {
    global: BTreeMap<String, (usize, String)>,
    sections: BTreeMap<String, BTreeMap<String, (usize, String)>>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, UsageError> {
        let mut file = ConfigFile::default();
        let mut section: Option<String> = None;
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| usage(format!("config line {}: unterminated section header", no + 1)))?;
                section = Some(name.trim().to_string());
                file.sections.entry(name.trim().to_string()).or_default();
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| usage(format!("config line {}: expected key = value", no + 1)))?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            let target = match &section {
                Some(s) => file.sections.get_mut(s).unwrap(),
                None => &mut file.global,
            };
            target.insert(key, (no + 1, value));
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self, UsageError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config file {}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// Effective key/value settings for one subcommand.
#[derive(Debug, Clone)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    /// Merges the file entries for `subcommand` with `flags`. `accepted`
    /// lists this subcommand's keys, `known` every key of any subcommand.
    pub fn merge(
        file: Option<&ConfigFile>,
        subcommand: &str,
        accepted: &[&str],
        known: &[&str],
        flags: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self, UsageError> {
        let mut values = BTreeMap::new();
        if let Some(file) = file {
            for (key, (line, value)) in &file.global {
                if accepted.contains(&key.as_str()) {
                    values.insert(key.clone(), value.clone());
                } else if !known.contains(&key.as_str()) {
                    return Err(usage(format!("config line {line}: unknown key '{key}'")));
                }
            }
            if let Some(section) = file.sections.get(subcommand) {
                for (key, (line, value)) in section {
                    if !accepted.contains(&key.as_str()) {
                        return Err(usage(format!("config line {line}: key '{key}' is not valid for '{subcommand}'")));
                    }
                    values.insert(key.clone(), value.clone());
                }
            }
        }
        values.extend(flags);
        Ok(Self { values })
    }

    #[cfg(test)]
    pub fn from_pairs(pairs: &[(&str, &str)]) -> Self {
        Self { values: pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect() }
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>, UsageError> {
        self.raw(key)
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| usage(format!("invalid value for '{key}': '{v}' is not a finite number")))
            })
            .transpose()
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, UsageError> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    pub fn positive_or(&self, key: &str, default: f64) -> Result<f64, UsageError> {
        let v = self.f64_or(key, default)?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(usage(format!("invalid value for '{key}': must be positive, got {v}")))
        }
    }

    pub fn non_negative_or(&self, key: &str, default: f64) -> Result<f64, UsageError> {
        let v = self.f64_or(key, default)?;
        if v >= 0.0 {
            Ok(v)
        } else {
            Err(usage(format!("invalid value for '{key}': must be non-negative, got {v}")))
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, UsageError> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| usage(format!("invalid value for '{key}': '{v}' is not a positive integer"))),
        }
    }

    pub fn require_u32(&self, key: &str) -> Result<u32, UsageError> {
        let v = self.raw(key).ok_or_else(|| usage(format!("missing required value '{key}'")))?;
        v.parse().map_err(|_| usage(format!("invalid value for '{key}': '{v}' is not a non-negative integer")))
    }

    /// Comma- or whitespace-separated numbers.
    pub fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>, UsageError> {
        let Some(v) = self.raw(key) else { return Ok(None) };
        let items: Result<Vec<f64>, _> = split_list(v).map(str::parse::<f64>).collect();
        match items {
            Ok(xs) if !xs.is_empty() && xs.iter().all(|x| x.is_finite()) => Ok(Some(xs)),
            _ => Err(usage(format!("invalid value for '{key}': '{v}' is not a list of numbers"))),
        }
    }

    pub fn usize_list(&self, key: &str) -> Result<Option<Vec<usize>>, UsageError> {
        let Some(v) = self.raw(key) else { return Ok(None) };
        let items: Result<Vec<usize>, _> = split_list(v).map(str::parse::<usize>).collect();
        match items {
            Ok(xs) if !xs.is_empty() && xs.iter().all(|&x| x > 0) => Ok(Some(xs)),
            _ => Err(usage(format!("invalid value for '{key}': '{v}' is not a list of positive integers"))),
        }
    }

    /// Rest lengths from `R-values` (a list) or `R-range` (`lo:hi:step`).
    pub fn rest_lengths(&self, default: Option<&[f64]>) -> Result<Vec<f64>, UsageError> {
        let values = match (self.f64_list("R-values")?, self.raw("R-range")) {
            (Some(_), Some(_)) => return Err(usage("give either 'R-values' or 'R-range', not both")),
            (Some(v), None) => v,
            (None, Some(range)) => parse_range(range)?,
            (None, None) => match (self.f64("R")?, default) {
                (Some(r), _) => vec![r],
                (None, Some(d)) => d.to_vec(),
                (None, None) => return Err(usage("missing rest lengths: give 'R-values' or 'R-range'")),
            },
        };
        if let Some(r) = values.iter().find(|r| **r < 0.0) {
            return Err(usage(format!("invalid rest length {r}: must be non-negative")));
        }
        Ok(values)
    }

    /// `M` with `h` either a number or `auto` (`stretch × default_scale`).
    pub fn mesh_policy(&self, default_m: usize) -> Result<MeshPolicy, UsageError> {
        let m = self.usize_or("M", default_m)?;
        match self.raw("h") {
            None | Some("auto") => {
                let stretch = self.positive_or("stretch", DEFAULT_STRETCH)?;
                Ok(MeshPolicy { points_per_axis: m, scale: ScaleChoice::Auto { stretch } })
            }
            Some(_) => {
                if self.has("stretch") {
                    return Err(usage("'stretch' only applies with 'h = auto'"));
                }
                Ok(MeshPolicy::fixed(m, self.positive_or("h", 1.0)?))
            }
        }
    }
}

fn split_list(v: &str) -> impl Iterator<Item = &str> {
    v.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty())
}

/// `lo:hi:step`, inclusive of `hi` up to roundoff.
fn parse_range(range: &str) -> Result<Vec<f64>, UsageError> {
    let bad = || usage(format!("invalid value for 'R-range': '{range}' (expected lo:hi:step)"));
    let parts: Vec<f64> =
        range.split(':').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    let [lo, hi, step] = parts[..] else { return Err(bad()) };
    if !(step > 0.0 && hi >= lo) {
        return Err(bad());
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    // rounded so that e.g. 0:4:0.1 gives 0.3, not 0.30000000000000004
    Ok((0..=count).map(|i| ((lo + i as f64 * step) * 1e12).round() / 1e12).collect())
}
