//! Run configuration, shared by command-line flags and the JSON config file.

use std::path::PathBuf;

use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Fiv,
    Template,
    Invert,
    CheckForms,
    Verify,
    Norm,
    Legendre,
}

/// Every field except `command` is optional; each command checks what it needs.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub n: Option<usize>,
    pub i: Option<usize>,
    /// Density spec: `triangle:R`, `power:p,R`, `log:R`, `zero:R`, `csv:path,R`.
    pub zeta: Option<String>,
    /// Function spec: `radial:square|quartic|cone|ut:t,delta`, `quadratic:d1,..,dn`, `grid:path`.
    pub f: Option<String>,
    pub eps0: Option<f64>,
    pub ratio: Option<f64>,
    pub count: Option<usize>,
    pub intervals: Option<usize>,
    pub input: Option<PathBuf>,
    pub support: Option<f64>,
    pub suite: Option<String>,
    pub out: Option<PathBuf>,
    pub half_width: Option<f64>,
    pub h: Option<f64>,
    pub dual_half_width: Option<f64>,
    pub dual_h: Option<f64>,
    /// Replaces the tolerance of every case in `verify`.
    pub tolerance: Option<f64>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_json() {
        let c = RunConfig::from_json(
            r#"{"command": "fiv", "n": 2, "i": 1, "f": "radial:square", "zeta": "triangle:1", "ratio": 0.5}"#,
        )
        .unwrap();
        assert_eq!(c.command, Some(Command::Fiv));
        assert_eq!(c.n, Some(2));
        assert_eq!(c.ratio, Some(0.5));
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(RunConfig::from_json(r#"{"command": "norm", "bogus": 1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"command": "nope"}"#).is_err());
    }
}
