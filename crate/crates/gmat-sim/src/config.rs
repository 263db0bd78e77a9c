//! Flat key=value sweep configuration.
//!
//! Sweeps have around ten parameters and the config file is meant to be
//! archived next to its results, so the format is a plain text file of
//! `key = value` lines, `#` comments, and nothing else. Unknown and
//! duplicate keys are rejected with line numbers.
//!
//! Keys (defaults in parentheses):
//!
//! ```text
//! K            = 2                  # users / transmit antennas, 2..=6
//! snr_db       = 0,5,10,15,20      # strictly increasing grid
//! realizations = 1000
//! schemes      = MAT,GMAT-MMSE,GMAT-DSINR   # also MRT, ZF (K = 2 only)
//! tau_mode     = fixed              # fixed | random (per realization)
//! tau_t        = 0.0                # used when tau_mode = fixed
//! tau_r        = 0.0
//! seed         = 1
//! rate_mode    = exact-mi           # exact-mi | mmse-sinr
//! beta         = 0.01               # MMSE optimizer step size
//! max_iters    = 500                # MMSE optimizer iteration cap
//! ```

use std::fmt;

use gmat::metrics::RateMode;
use gmat::precoders::{MmseOptConfig, Projection};
use gmat::protocol::MAX_USERS;

/// A precoding scheme selectable in a sweep. The label is the exact string
/// used in config files and CSV output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Mat,
    GmatMmse,
    GmatDsinr,
    Mrt,
    Zf,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Mat,
        Scheme::GmatMmse,
        Scheme::GmatDsinr,
        Scheme::Mrt,
        Scheme::Zf,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Scheme::Mat => "MAT",
            Scheme::GmatMmse => "GMAT-MMSE",
            Scheme::GmatDsinr => "GMAT-DSINR",
            Scheme::Mrt => "MRT",
            Scheme::Zf => "ZF",
        }
    }

    fn from_label(s: &str) -> Option<Scheme> {
        Scheme::ALL.iter().copied().find(|x| x.label() == s)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Whether the correlation coefficients are fixed for the whole sweep or
/// redrawn uniformly on [0, 1) for every realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauMode {
    Fixed { tau_t: f64, tau_r: f64 },
    PerRealizationRandom,
}

/// Full description of one sweep run.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub users: usize,
    pub snr_grid_db: Vec<f64>,
    pub realizations: usize,
    pub schemes: Vec<Scheme>,
    pub tau_mode: TauMode,
    pub seed: u64,
    pub rate_mode: RateMode,
    /// MMSE optimizer step size.
    pub beta: f64,
    /// MMSE optimizer iteration cap.
    pub max_iters: usize,
}

impl SweepConfig {
    /// Optimizer settings at one evaluation SNR.
    pub fn mmse_opt(&self, rho: f64) -> MmseOptConfig {
        MmseOptConfig {
            step: self.beta,
            max_iters: self.max_iters,
            rho,
            projection: Projection::ScaleToBudget,
        }
    }
}

/// Config-file error with the offending line when known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            message: message.into(),
        }
    }

    fn general(message: impl Into<String>) -> Self {
        Self {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "config line {n}: {}", self.message),
            None => write!(f, "config: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

const KEYS: [&str; 11] = [
    "K",
    "snr_db",
    "realizations",
    "schemes",
    "tau_mode",
    "tau_t",
    "tau_r",
    "seed",
    "rate_mode",
    "beta",
    "max_iters",
];

/// Parse and validate a config file body.
pub fn parse_config(text: &str) -> Result<SweepConfig, ConfigError> {
    let mut seen: Vec<(&str, usize, String)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::at(
                line_no,
                format!("expected key = value, got `{line}`"),
            ));
        };
        let key = key.trim();
        let value = value.trim().to_string();
        let Some(&canon) = KEYS.iter().find(|&&k| k == key) else {
            return Err(ConfigError::at(line_no, format!("unknown key `{key}`")));
        };
        if seen.iter().any(|(k, _, _)| *k == canon) {
            return Err(ConfigError::at(line_no, format!("duplicate key `{key}`")));
        }
        seen.push((canon, line_no, value));
    }

    let lookup = |key: &str| seen.iter().find(|(k, _, _)| *k == key).cloned();
    let parse_num = |key: &str, line: usize, v: &str| -> Result<f64, ConfigError> {
        v.parse::<f64>()
            .map_err(|_| ConfigError::at(line, format!("`{key}` expects a number, got `{v}`")))
    };

    let (users, users_line) = match lookup("K") {
        Some((_, line, v)) => {
            let n = v
                .parse::<usize>()
                .map_err(|_| ConfigError::at(line, format!("`K` expects an integer, got `{v}`")))?;
            (n, line)
        }
        None => return Err(ConfigError::general("missing required key `K`")),
    };
    if !(2..=MAX_USERS).contains(&users) {
        return Err(ConfigError::at(
            users_line,
            format!("`K` must be between 2 and {MAX_USERS}, got {users}"),
        ));
    }

    let snr_grid_db = match lookup("snr_db") {
        Some((_, line, v)) => {
            let grid: Vec<f64> = v
                .split(',')
                .map(|s| parse_num("snr_db", line, s.trim()))
                .collect::<Result<_, _>>()?;
            if grid.is_empty() {
                return Err(ConfigError::at(
                    line,
                    "`snr_db` must list at least one value",
                ));
            }
            if grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(ConfigError::at(
                    line,
                    "`snr_db` must be strictly increasing",
                ));
            }
            grid
        }
        None => return Err(ConfigError::general("missing required key `snr_db`")),
    };

    let realizations = match lookup("realizations") {
        Some((_, line, v)) => {
            let n = v.parse::<usize>().map_err(|_| {
                ConfigError::at(
                    line,
                    format!("`realizations` expects an integer, got `{v}`"),
                )
            })?;
            if n == 0 {
                return Err(ConfigError::at(line, "`realizations` must be at least 1"));
            }
            n
        }
        None => 1000,
    };

    let schemes = match lookup("schemes") {
        Some((_, line, v)) => {
            let mut out = Vec::new();
            for part in v.split(',') {
                let name = part.trim();
                let scheme = Scheme::from_label(name)
                    .ok_or_else(|| ConfigError::at(line, format!("unknown scheme `{name}`")))?;
                if out.contains(&scheme) {
                    return Err(ConfigError::at(line, format!("duplicate scheme `{name}`")));
                }
                if matches!(scheme, Scheme::Mrt | Scheme::Zf) && users != 2 {
                    return Err(ConfigError::at(
                        line,
                        format!("scheme `{name}` is only defined for K = 2"),
                    ));
                }
                out.push(scheme);
            }
            out
        }
        None => vec![Scheme::Mat, Scheme::GmatMmse, Scheme::GmatDsinr],
    };

    let tau_value = |key: &str| -> Result<f64, ConfigError> {
        match lookup(key) {
            Some((_, line, v)) => {
                let t = parse_num(key, line, &v)?;
                if !(0.0..1.0).contains(&t) {
                    return Err(ConfigError::at(
                        line,
                        format!("`{key}` must lie in [0, 1), got {t}"),
                    ));
                }
                Ok(t)
            }
            None => Ok(0.0),
        }
    };
    let tau_mode = match lookup("tau_mode") {
        Some((_, line, v)) => match v.as_str() {
            "fixed" => TauMode::Fixed {
                tau_t: tau_value("tau_t")?,
                tau_r: tau_value("tau_r")?,
            },
            "random" => TauMode::PerRealizationRandom,
            other => {
                return Err(ConfigError::at(
                    line,
                    format!("`tau_mode` must be `fixed` or `random`, got `{other}`"),
                ))
            }
        },
        None => TauMode::Fixed {
            tau_t: tau_value("tau_t")?,
            tau_r: tau_value("tau_r")?,
        },
    };
    if matches!(tau_mode, TauMode::PerRealizationRandom) {
        for key in ["tau_t", "tau_r"] {
            if let Some((_, line, _)) = lookup(key) {
                return Err(ConfigError::at(
                    line,
                    format!("`{key}` conflicts with tau_mode = random"),
                ));
            }
        }
    }

    let seed = match lookup("seed") {
        Some((_, line, v)) => v
            .parse::<u64>()
            .map_err(|_| ConfigError::at(line, format!("`seed` expects an integer, got `{v}`")))?,
        None => 1,
    };

    let rate_mode = match lookup("rate_mode") {
        Some((_, line, v)) => match v.as_str() {
            "exact-mi" => RateMode::ExactMi,
            "mmse-sinr" => RateMode::MmseSinr,
            other => {
                return Err(ConfigError::at(
                    line,
                    format!("`rate_mode` must be `exact-mi` or `mmse-sinr`, got `{other}`"),
                ))
            }
        },
        None => RateMode::ExactMi,
    };

    let beta = match lookup("beta") {
        Some((_, line, v)) => {
            let b = parse_num("beta", line, &v)?;
            if !(b > 0.0) {
                return Err(ConfigError::at(
                    line,
                    format!("`beta` must be positive, got {b}"),
                ));
            }
            b
        }
        None => 0.01,
    };

    let max_iters = match lookup("max_iters") {
        Some((_, line, v)) => v.parse::<usize>().map_err(|_| {
            ConfigError::at(line, format!("`max_iters` expects an integer, got `{v}`"))
        })?,
        None => 500,
    };

    Ok(SweepConfig {
        users,
        snr_grid_db,
        realizations,
        schemes,
        tau_mode,
        seed,
        rate_mode,
        beta,
        max_iters,
    })
}
