//! Plain `key = value` trap description files.
//!
//! ```text
//! # two ions, one mode
//! g      = 0.1767767
//! delta  = 1.0
//! delta_t = 2        # ΔT in units of π (alternatively: T = 6.283)
//! fock0  = 3
//! zeta2p = 0.5       # spin and motional phases in units of π
//! eps_g  = 0.05
//! ```
//!
//! Recognised keys: `g`, `delta`, `T`, `delta_t`, `nmax`, `fock0`,
//! `zeta1p`, `zeta2p`, `zeta1m`, `zeta2m`, `eps_g`. Exactly one of `T` and
//! `delta_t` is required. Without `nmax` the smallest admissible truncation
//! is used.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::Path;

use super::TrapConfig;
use crate::error::{validation, Error, Result};

/// A parsed trap file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapFile {
    pub config: TrapConfig,
    /// Relative Rabi-frequency error, zero when absent.
    pub eps_g: f64,
}

const KEYS: [&str; 11] = [
    "g", "delta", "T", "delta_t", "nmax", "fock0", "zeta1p", "zeta2p", "zeta1m", "zeta2m", "eps_g",
];

pub fn parse_trap_file(path: &Path) -> Result<TrapFile> {
    parse_trap_str(&std::fs::read_to_string(path)?)
}

pub fn parse_trap_str(text: &str) -> Result<TrapFile> {
    let mut values: HashMap<&str, (usize, f64)> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(format!("expected `key = value`, got `{line}`")))?;
        let key = key.trim();
        let key = KEYS
            .iter()
            .copied()
            .find(|k| *k == key)
            .ok_or_else(|| parse_err(format!("unknown key `{key}`")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| parse_err(format!("`{}` is not a number", value.trim())))?;
        if values.insert(key, (line_no, value)).is_some() {
            return Err(parse_err(format!("key `{key}` given twice")));
        }
    }
    let get = |k: &str| values.get(k).map(|v| v.1);
    let need = |k: &str| get(k).ok_or_else(|| Error::Validation(format!("missing key `{k}`")));
    let g = need("g")?;
    let delta = need("delta")?;
    let t = match (get("T"), get("delta_t")) {
        (Some(t), None) => t,
        (None, Some(x)) => x * PI / delta,
        (Some(_), Some(_)) => return validation("give either `T` or `delta_t`, not both"),
        (None, None) => return validation("missing pulse duration `T` or `delta_t`"),
    };
    let count = |k: &str| -> Result<Option<usize>> {
        match values.get(k) {
            None => Ok(None),
            Some(&(_, v)) if v >= 0.0 && v.fract() == 0.0 => Ok(Some(v as usize)),
            Some(&(line, v)) => Err(Error::Parse {
                line,
                message: format!("`{k}` must be a non-negative integer, got {v}"),
            }),
        }
    };
    let mut config = TrapConfig::new(g, delta, t);
    config.zeta_plus = [
        get("zeta1p").unwrap_or(0.0) * PI,
        get("zeta2p").unwrap_or(0.0) * PI,
    ];
    config.zeta_minus = [
        get("zeta1m").unwrap_or(0.0) * PI,
        get("zeta2m").unwrap_or(0.0) * PI,
    ];
    config.initial_fock = count("fock0")?.unwrap_or(0);
    config.n_max = match count("nmax")? {
        Some(n) => n,
        None => config.required_n_max(),
    };
    config.validate()?;
    Ok(TrapFile {
        config,
        eps_g: get("eps_g").unwrap_or(0.0),
    })
}
