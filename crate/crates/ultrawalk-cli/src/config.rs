//! TOML run configuration. A config file may supply anything a flag can;
//! explicit flags always win, then config values, then built-in defaults
//! (flag > config > default).
//!
//! ```toml
//! [defaults]
//! p = 3
//! M = 2
//! eps = [2.0, 1.0]
//! format = "csv"
//!
//! [landscape]
//! kind = "linear"     # explicit | linear | logarithmic | exponential
//! w0 = 1.0
//! alpha = 1.0
//! # eps = [4.0, 1.0]  # used by kind = "explicit"
//! ```

use std::path::Path;

use serde::Deserialize;
use ultrawalk::hamiltonian::Landscape;

use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub defaults: Defaults,
    pub landscape: Option<LandscapeConfig>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Defaults {
    pub p: Option<u32>,
    #[serde(rename = "M")]
    pub m: Option<u32>,
    pub eps: Option<Vec<f64>>,
    pub eps0: Option<f64>,
    pub format: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandscapeConfig {
    pub kind: String,
    pub w0: Option<f64>,
    pub alpha: Option<f64>,
    pub eps: Option<Vec<f64>>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        toml::from_str(&text)
            .map_err(|e| CliError::validation(format!("bad config {}: {e}", path.display())))
    }
}

/// Build a [`Landscape`] from kind/w0/alpha/eps pieces (whether they came
/// from flags or a config file is the caller's business).
pub fn landscape_from_parts(
    kind: &str,
    w0: Option<f64>,
    alpha: Option<f64>,
    eps: Option<Vec<f64>>,
) -> Result<Landscape, CliError> {
    let w0 = w0.unwrap_or(1.0);
    let need_alpha = || {
        alpha.ok_or_else(|| {
            CliError::validation(format!("landscape kind '{kind}' needs --alpha"))
        })
    };
    match kind {
        "explicit" => {
            let eps = eps.ok_or_else(|| {
                CliError::validation("explicit landscape needs an eps list".to_string())
            })?;
            Ok(Landscape::Explicit(eps))
        }
        "linear" => Ok(Landscape::Linear { w0, alpha: need_alpha()? }),
        "logarithmic" => Ok(Landscape::Logarithmic { w0, alpha: need_alpha()? }),
        "exponential" => Ok(Landscape::Exponential { w0, alpha: need_alpha()? }),
        other => Err(CliError::validation(format!(
            "unknown landscape kind '{other}' (explicit|linear|logarithmic|exponential)"
        ))),
    }
}
