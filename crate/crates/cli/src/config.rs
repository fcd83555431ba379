//! Run configuration: a line-oriented `key = value` file with `[section]`
//! headers, plus `key=value` overrides from the command line.

use std::collections::BTreeMap;
use std::fmt;

use cp2geom::frames::FrameOptions;
use cp2geom::grid::{GridDomain, Scheme};
use cp2geom::mesh::Chart;

/// Known keys by section. Overrides may use the bare key or `section.key`.
const KEYS: &[(&str, &[&str])] = &[
    ("grid", &["nx", "ny", "h", "x0", "y0"]),
    ("surface", &["catalog", "scheme"]),
    ("dpw", &["potential", "n", "lambdas", "substeps"]),
    (
        "tolerances",
        &["eps_a", "conformal_tol", "class_tol", "gauge_tol"],
    ),
    ("output", &["chart"]),
];

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        ConfigError {
            line: Some(line),
            message: message.into(),
        }
    }

    fn new(message: impl Into<String>) -> Self {
        ConfigError {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError {
                line: Some(l),
                message,
            } => write!(f, "line {l}: {message}"),
            ConfigError {
                line: None,
                message,
            } => f.write_str(message),
        }
    }
}

fn section_of(key: &str) -> Option<&'static str> {
    KEYS.iter()
        .find(|(_, keys)| keys.contains(&key))
        .map(|(s, _)| *s)
}

/// Raw values keyed by bare key name, with the line each came from.
#[derive(Debug, Default, Clone)]
pub struct RawConfig {
    pub values: BTreeMap<String, (String, Option<usize>)>,
    pub sections: Vec<String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut out = RawConfig::default();
        let mut section: Option<String> = None;
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let s = raw.split(['#', ';']).next().unwrap_or("").trim();
            if s.is_empty() {
                continue;
            }
            if let Some(rest) = s.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError::at(line, "unterminated section header"))?
                    .trim();
                if !KEYS.iter().any(|(n, _)| *n == name) {
                    return Err(ConfigError::at(line, format!("unknown section [{name}]")));
                }
                out.sections.push(name.to_string());
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = s.split_once('=').ok_or_else(|| {
                ConfigError::at(line, format!("expected `key = value`, got `{s}`"))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let Some(sec) = &section else {
                return Err(ConfigError::at(
                    line,
                    format!("key `{key}` outside any section"),
                ));
            };
            if section_of(key) != Some(sec.as_str()) {
                return Err(ConfigError::at(
                    line,
                    format!("unknown key `{key}` in [{sec}]"),
                ));
            }
            if value.is_empty() {
                return Err(ConfigError::at(line, format!("empty value for `{key}`")));
            }
            if out
                .values
                .insert(key.to_string(), (value.to_string(), Some(line)))
                .is_some()
            {
                return Err(ConfigError::at(line, format!("duplicate key `{key}`")));
            }
        }
        Ok(out)
    }

    pub fn apply_override(&mut self, arg: &str) -> Result<(), ConfigError> {
        let (key, value) = arg
            .split_once('=')
            .ok_or_else(|| ConfigError::new(format!("override `{arg}` is not key=value")))?;
        let key = key.trim();
        let bare = match key.split_once('.') {
            Some((sec, k)) if section_of(k) == Some(sec) => k,
            Some(_) => return Err(ConfigError::new(format!("unknown key `{key}`"))),
            None => key,
        };
        if section_of(bare).is_none() {
            return Err(ConfigError::new(format!("unknown key `{key}`")));
        }
        self.values
            .insert(bare.to_string(), (value.trim().to_string(), None));
        Ok(())
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.values.get(key) {
            None => Ok(None),
            Some((v, line)) => v.parse().map(Some).map_err(|_| ConfigError {
                line: *line,
                message: format!("invalid value `{v}` for `{key}`"),
            }),
        }
    }

    fn err(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError {
            line: self.values.get(key).and_then(|v| v.1),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub grid: GridDomain,
    pub catalog: Option<String>,
    pub potential: String,
    pub n: usize,
    pub lambdas: usize,
    pub substeps: usize,
    pub chart: Chart,
    pub frame: FrameOptions,
}

pub const DEFAULT_NX: usize = 51;
pub const DEFAULT_H: f64 = 0.02;

impl RunConfig {
    /// `from_file` demands an explicit [grid] section; command-line runs fall
    /// back to a 51×51 grid of spacing 0.02 centred at the origin.
    pub fn resolve(raw: &RawConfig, from_file: bool) -> Result<Self, ConfigError> {
        if from_file && !raw.sections.iter().any(|s| s == "grid") {
            return Err(ConfigError::new("config has no [grid] section"));
        }
        let nx: usize = match raw.get("nx")? {
            Some(n) => n,
            None if from_file => return Err(ConfigError::new("[grid] needs `nx`")),
            None => DEFAULT_NX,
        };
        let ny: usize = raw.get("ny")?.unwrap_or(nx);
        if nx < 5 {
            return Err(raw.err("nx", format!("resolution nx = {nx} is below 5")));
        }
        if ny < 5 {
            return Err(raw.err("ny", format!("resolution ny = {ny} is below 5")));
        }
        let h: f64 = raw.get("h")?.unwrap_or(DEFAULT_H);
        if !(h > 0.0 && h.is_finite()) {
            return Err(raw.err("h", "grid spacing must be positive"));
        }
        let x0: f64 = raw.get("x0")?.unwrap_or(-h * (nx - 1) as f64 / 2.0);
        let y0: f64 = raw.get("y0")?.unwrap_or(-h * (ny - 1) as f64 / 2.0);
        let grid = GridDomain::new(
            x0,
            x0 + h * (nx - 1) as f64,
            y0,
            y0 + h * (ny - 1) as f64,
            nx,
            ny,
        )
        .map_err(|e| ConfigError::new(e.to_string()))?;

        let mut frame = FrameOptions::default();
        if let Some(s) = raw.get::<String>("scheme")? {
            frame.scheme = match s.as_str() {
                "central2" => Scheme::Central2,
                "central4" => Scheme::Central4,
                _ => return Err(raw.err("scheme", format!("unknown scheme `{s}`"))),
            };
        }
        for (key, slot) in [
            ("eps_a", &mut frame.eps_a),
            ("conformal_tol", &mut frame.conformal_tol),
            ("class_tol", &mut frame.class_tol),
            ("gauge_tol", &mut frame.gauge_tol),
        ] {
            if let Some(v) = raw.get::<f64>(key)? {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(raw.err(key, format!("`{key}` must be positive")));
                }
                *slot = v;
            }
        }
        let lambdas: usize = raw.get("lambdas")?.unwrap_or(8);
        if lambdas == 0 {
            return Err(raw.err("lambdas", "need at least one lambda sample"));
        }
        let n: usize = raw.get("n")?.unwrap_or(cp2geom::loops::DEFAULT_N);
        if n == 0 {
            return Err(raw.err("n", "truncation must be positive"));
        }
        let chart = match raw.get::<String>("chart")? {
            None => Chart::GraphTheta,
            Some(s) => s
                .parse()
                .map_err(|e: cp2geom::Error| raw.err("chart", e.to_string()))?,
        };
        Ok(RunConfig {
            grid,
            catalog: raw.get("catalog")?,
            potential: raw
                .get("potential")?
                .unwrap_or_else(|| "vacuum".to_string()),
            n,
            lambdas,
            substeps: raw.get("substeps")?.unwrap_or(4).max(1),
            chart,
            frame,
        })
    }

    /// λₖ = e^{2πik/m}, k = 0..m.
    pub fn lambda_samples(&self) -> Vec<num_complex::Complex64> {
        (0..self.lambdas)
            .map(|k| {
                num_complex::Complex64::from_polar(
                    1.0,
                    std::f64::consts::TAU * k as f64 / self.lambdas as f64,
                )
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_comments() {
        let raw = RawConfig::parse(
            "# demo\n[grid]\nnx = 21 ; odd\nh=0.05\n\n[surface]\ncatalog = clifford\n",
        )
        .unwrap();
        let cfg = RunConfig::resolve(&raw, true).unwrap();
        assert_eq!((cfg.grid.nx, cfg.grid.ny), (21, 21));
        assert!((cfg.grid.h() - 0.05).abs() < 1e-15);
        assert_eq!(cfg.catalog.as_deref(), Some("clifford"));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = RawConfig::parse("[grid]\nnx = 5\nbogus = 1\n").unwrap_err();
        assert_eq!(e.line, Some(3));
        let e = RawConfig::parse("[grid]\nnx 5\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        let raw = RawConfig::parse("[grid]\nnx = four\n").unwrap();
        assert_eq!(RunConfig::resolve(&raw, true).unwrap_err().line, Some(2));
    }

    #[test]
    fn missing_grid_is_rejected() {
        let raw = RawConfig::parse("[surface]\ncatalog = clifford\n").unwrap();
        assert!(RunConfig::resolve(&raw, true).is_err());
        assert!(RunConfig::resolve(&raw, false).is_ok());
    }

    #[test]
    fn overrides_win() {
        let mut raw = RawConfig::parse("[grid]\nnx = 11\n").unwrap();
        raw.apply_override("grid.nx=15").unwrap();
        raw.apply_override("catalog=real").unwrap();
        assert!(raw.apply_override("colour=red").is_err());
        let cfg = RunConfig::resolve(&raw, true).unwrap();
        assert_eq!(cfg.grid.nx, 15);
        assert_eq!(cfg.catalog.as_deref(), Some("real"));
    }

    #[test]
    fn small_grids_rejected() {
        let mut raw = RawConfig::default();
        raw.apply_override("nx=4").unwrap();
        assert!(RunConfig::resolve(&raw, false).is_err());
    }
}
