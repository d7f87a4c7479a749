//! TOML run configuration.
//!
//! Every key is optional; missing keys take the defaults below. Unknown keys and
//! ill-typed values are syntax errors reported with line and column; range violations
//! are collected per field and reported together.
//!
//! ```toml
//! seed = 42
//!
//! [grid]
//! L = 25.132741228718345        # half length, domain [-L, L)
//! n = 512                       # power of two, >= 16
//!
//! [initial]
//! preset = "gaussian"           # "gaussian" | "cosine_packet" | "file"
//! amplitude = 0.1
//! wavenumber = 1.0              # cosine_packet only
//! # path = "profile.csv"        # file only
//!
//! [stepping]
//! dt = 1e-3
//! t_end = 1.0
//! snapshot_every = 100
//!
//! [tolerances]
//! solver_tol = 1e-10
//! tail_threshold = 1e-10
//!
//! [output]
//! directory = "output"
//! formats = ["csv", "json"]
//! ```

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::evolution::{cosine_packet, gaussian_profile, RunConfig, DEFAULT_MAX_SLOPE};
use crate::grid::MIN_POINTS;
use crate::resolvent::SolverOptions;
use crate::{Grid, GridFunction};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    /// Seeds every randomized test vector.
    pub seed: u64,
    pub grid: GridSection,
    pub initial: InitialSection,
    pub stepping: SteppingSection,
    pub tolerances: ToleranceSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    #[serde(rename = "L")]
    pub half_length: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Gaussian,
    CosinePacket,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSection {
    pub preset: Preset,
    pub amplitude: f64,
    pub wavenumber: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SteppingSection {
    pub dt: f64,
    pub t_end: f64,
    pub snapshot_every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceSection {
    pub solver_tol: f64,
    pub tail_threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            seed: DEFAULT_SEED,
            grid: GridSection::default(),
            initial: InitialSection::default(),
            stepping: SteppingSection::default(),
            tolerances: ToleranceSection::default(),
            output: OutputSection::default(),
        }
    }
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            half_length: 8.0 * PI,
            n: 512,
        }
    }
}

impl Default for InitialSection {
    fn default() -> Self {
        InitialSection {
            preset: Preset::Gaussian,
            amplitude: 0.1,
            wavenumber: 1.0,
            path: None,
        }
    }
}

impl Default for SteppingSection {
    fn default() -> Self {
        SteppingSection {
            dt: 1e-3,
            t_end: 1.0,
            snapshot_every: 100,
        }
    }
}

impl Default for ToleranceSection {
    fn default() -> Self {
        ToleranceSection {
            solver_tol: 1e-10,
            tail_threshold: 1e-10,
        }
    }
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            directory: PathBuf::from("output"),
            formats: vec![Format::Csv, Format::Json],
        }
    }
}

/// One violated constraint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigError {
    /// Malformed text; `line` and `column` are 1-based.
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    Invalid(Vec<FieldError>),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Syntax {
                line,
                column,
                message,
            } => write!(f, "syntax error at line {line}, column {column}: {message}"),
            ConfigError::Invalid(errs) => {
                let parts: Vec<String> = errs.iter().map(|e| e.to_string()).collect();
                write!(f, "invalid configuration: {}", parts.join("; "))
            }
        }
    }
}

impl std::error::Error for ConfigError {}

fn position(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.chars().rev().take_while(|&c| c != '\n').count() + 1;
    (line, column)
}

/// Parses and validates `text`.
pub fn parse_config(text: &str) -> Result<SimulationConfig, ConfigError> {
    let cfg = parse_unvalidated(text)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Parses `text` without range checks, so that overrides can be applied first.
pub fn parse_unvalidated(text: &str) -> Result<SimulationConfig, ConfigError> {
    toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map(|s| position(text, s.start)).unwrap_or((1, 1));
        ConfigError::Syntax {
            line,
            column,
            message: e.message().to_string(),
        }
    })
}

impl SimulationConfig {
    /// Canonical TOML form; `parse_config(&c.to_toml())` returns `c`.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always representable")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = vec![];
        let mut bad = |field: &str, message: String| {
            errs.push(FieldError {
                field: field.to_string(),
                message,
            })
        };
        let positive = |v: f64| v.is_finite() && v > 0.0;

        if !positive(self.grid.half_length) {
            bad("grid.L", format!("must be finite and positive, got {}", self.grid.half_length));
        }
        if self.grid.n < MIN_POINTS || !self.grid.n.is_power_of_two() {
            bad(
                "grid.n",
                format!("must be a power of two >= {MIN_POINTS}, got {}", self.grid.n),
            );
        }
        if !self.initial.amplitude.is_finite() {
            bad("initial.amplitude", format!("must be finite, got {}", self.initial.amplitude));
        }
        if !self.initial.wavenumber.is_finite() {
            bad("initial.wavenumber", format!("must be finite, got {}", self.initial.wavenumber));
        }
        if self.initial.preset == Preset::File {
            match &self.initial.path {
                None => bad("initial.path", "required by the file preset".into()),
                Some(p) if !p.is_file() => {
                    bad("initial.path", format!("`{}` is not a readable file", p.display()))
                }
                Some(_) => {}
            }
        }
        if !positive(self.stepping.dt) {
            bad("stepping.dt", format!("must be finite and positive, got {}", self.stepping.dt));
        }
        if !positive(self.stepping.t_end) {
            bad("stepping.t_end", format!("must be finite and positive, got {}", self.stepping.t_end));
        }
        if self.stepping.snapshot_every == 0 {
            bad("stepping.snapshot_every", "must be at least 1".into());
        }
        if !positive(self.tolerances.solver_tol) {
            bad(
                "tolerances.solver_tol",
                format!("must be finite and positive, got {}", self.tolerances.solver_tol),
            );
        }
        if !positive(self.tolerances.tail_threshold) {
            bad(
                "tolerances.tail_threshold",
                format!("must be finite and positive, got {}", self.tolerances.tail_threshold),
            );
        }
        if self.output.directory.as_os_str().is_empty() {
            bad("output.directory", "must not be empty".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errs))
        }
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.grid.half_length, self.grid.n).expect("validated grid")
    }

    pub fn solver(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tolerances.solver_tol,
            ..SolverOptions::default()
        }
    }

    pub fn wants(&self, format: Format) -> bool {
        self.output.formats.contains(&format)
    }

    /// Samples the initial profile.
    pub fn initial_profile(&self) -> Result<GridFunction, ConfigError> {
        let grid = self.grid();
        let init = &self.initial;
        let invalid = |field: &str, message: String| {
            ConfigError::Invalid(vec![FieldError {
                field: field.into(),
                message,
            }])
        };
        let f = match init.preset {
            Preset::Gaussian => gaussian_profile(grid, init.amplitude),
            Preset::CosinePacket => cosine_packet(grid, init.amplitude, init.wavenumber),
            Preset::File => {
                let path = init.path.as_deref().expect("validated path");
                return read_profile(path, grid).map_err(|m| invalid("initial.path", m));
            }
        };
        f.map_err(|e| invalid("initial", e.to_string()))
    }

    pub fn run_config(&self) -> Result<RunConfig, ConfigError> {
        Ok(RunConfig {
            initial: self.initial_profile()?,
            dt: self.stepping.dt,
            t_end: self.stepping.t_end,
            snapshot_every: self.stepping.snapshot_every,
            solver: self.solver(),
            tail_threshold: self.tolerances.tail_threshold,
            max_slope: DEFAULT_MAX_SLOPE,
        })
    }
}

/// Reads a profile with one row per grid node: either `f` or `x,f`. Blank lines, lines
/// starting with `#` and a non-numeric header row are skipped. Given `x` columns must
/// match the grid nodes.
pub fn read_profile(path: &Path, grid: Grid) -> Result<GridFunction, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut values = vec![];
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Result<Vec<f64>, _> = cols.iter().map(|c| c.parse::<f64>()).collect();
        let row = match parsed {
            Ok(row) => row,
            Err(_) if values.is_empty() => continue,
            Err(_) => return Err(format!("line {}: not a number", i + 1)),
        };
        let (x, fx) = match row.as_slice() {
            [fx] => (None, *fx),
            [x, fx] => (Some(*x), *fx),
            _ => return Err(format!("line {}: expected 1 or 2 columns", i + 1)),
        };
        if let Some(x) = x {
            let node = grid.node(values.len().min(grid.len() - 1));
            if (x - node).abs() > 1e-9 * grid.half_length() {
                return Err(format!("line {}: x = {x} does not match grid node {node}", i + 1));
            }
        }
        values.push(fx);
    }
    if values.len() != grid.len() {
        return Err(format!("expected {} samples, found {}", grid.len(), values.len()));
    }
    GridFunction::new(grid, values).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, SimulationConfig::default());
        assert_eq!(cfg.grid.n, 512);
        assert_eq!(cfg.stepping.snapshot_every, 100);
        assert_eq!(cfg.seed, 42);
    }

    #[test]
    fn all_field_errors_are_reported() {
        let err = parse_config("[grid]\nn = 300\nL = -1\n[stepping]\ndt = 0\n").unwrap_err();
        let ConfigError::Invalid(errs) = err else { panic!("{err}") };
        let fields: Vec<&str> = errs.iter().map(|e| e.field.as_str()).collect();
        assert_eq!(fields, ["grid.L", "grid.n", "stepping.dt"]);
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = parse_config("[grid]\nn = 64\nL = \"wide\"\n").unwrap_err();
        let ConfigError::Syntax { line, column, .. } = err else { panic!("{err}") };
        assert_eq!((line, column), (3, 5));
        let err = parse_config("[grid]\nsize = 64\n").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 2, .. }), "{err}");
    }

    #[test]
    fn file_preset_requires_path() {
        let err = parse_config("[initial]\npreset = \"file\"\n").unwrap_err();
        assert!(err.to_string().contains("initial.path"));
    }

    #[test]
    fn profile_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Grid::new(4.0, 16).unwrap();
        let path = dir.path().join("f.csv");
        let mut text = String::from("x [L],f [L]\n");
        for j in 0..16 {
            text.push_str(&format!("{:.16e},{:.16e}\n", grid.node(j), 0.1 * j as f64));
        }
        std::fs::write(&path, text).unwrap();
        let f = read_profile(&path, grid).unwrap();
        assert_eq!(f.values()[3], 0.1 * 3.0);
        std::fs::write(&path, "1\n2\n").unwrap();
        assert!(read_profile(&path, grid).is_err());
    }
}
