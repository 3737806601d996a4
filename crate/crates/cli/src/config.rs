//! Settings resolution: command-line flags override the `--config` file,
//! which overrides built-in defaults. The file is flat `key = value` text
//! using the long flag names as keys.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use expfam_core::FamilyDescriptor;
use nalgebra::DMatrix;

use crate::error::{CliError, CliResult};
use crate::output::Format;

const KNOWN_KEYS: &[&str] = &[
    "family", "shape", "kappa", "cov", "tol", "equivalence-tol", "seed", "format", "data", "level", "m", "trials",
    "rate", "mean", "theta", "x", "future", "method", "compare", "suite", "mc-samples", "no-timing",
];

#[derive(Clone, Debug, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::input(format!("config line {}: expected key = value", i + 1)))?;
            let key = k.trim().trim_start_matches("--").to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::input(format!("config line {}: unknown key '{key}'", i + 1)));
            }
            values.insert(key, v.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// The flag value if given, else the file value for `key`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        self.values
            .get(key)
            .map(|raw| raw.parse::<T>().map_err(|_| CliError::input(format!("config value '{raw}' for '{key}' is invalid"))))
            .transpose()
    }

    /// Boolean switches: set by the flag, or by `key = true` in the file.
    pub fn switch(&self, flag: bool, key: &str) -> CliResult<bool> {
        Ok(flag || self.pick::<bool>(None, key)?.unwrap_or(false))
    }
}

/// Raw family flags before validation.
#[derive(Clone, Debug, Default)]
pub struct FamilySpec {
    pub family: Option<String>,
    pub shape: Option<f64>,
    pub kappa: Option<f64>,
    pub cov: Option<String>,
}

impl FamilySpec {
    pub fn resolve(self, file: &ConfigFile) -> CliResult<Self> {
        Ok(FamilySpec {
            family: file.pick(self.family, "family")?,
            shape: file.pick(self.shape, "shape")?,
            kappa: file.pick(self.kappa, "kappa")?,
            cov: file.pick(self.cov, "cov")?,
        })
    }

    pub fn build(&self) -> CliResult<Option<FamilyDescriptor>> {
        let Some(name) = self.family.as_deref() else {
            if self.shape.is_some() || self.kappa.is_some() || self.cov.is_some() {
                return Err(CliError::input("hyperparameters given without --family"));
            }
            return Ok(None);
        };
        let unused = |flag: &str, present: bool| {
            if present {
                Err(CliError::input(format!("--{flag} does not apply to the {name} family")))
            } else {
                Ok(())
            }
        };
        let fam = match name {
            "gamma" => {
                unused("kappa", self.kappa.is_some())?;
                unused("cov", self.cov.is_some())?;
                FamilyDescriptor::gamma(self.shape.ok_or_else(|| CliError::input("the gamma family needs --shape"))?)?
            }
            "inverse-gaussian" | "poisson-exp" => {
                unused("shape", self.shape.is_some())?;
                unused("cov", self.cov.is_some())?;
                let kappa = self.kappa.ok_or_else(|| CliError::input(format!("the {name} family needs --kappa")))?;
                if name == "poisson-exp" {
                    FamilyDescriptor::poisson_exponential(kappa)?
                } else {
                    FamilyDescriptor::inverse_gaussian(kappa)?
                }
            }
            "gaussian" => {
                unused("shape", self.shape.is_some())?;
                unused("kappa", self.kappa.is_some())?;
                FamilyDescriptor::gaussian(parse_matrix(self.cov.as_deref().unwrap_or("1"))?)?
            }
            other => {
                return Err(CliError::input(format!(
                    "unknown family '{other}' (expected gamma, gaussian, inverse-gaussian or poisson-exp)"
                )))
            }
        };
        Ok(Some(fam))
    }
}

/// A square matrix written row by row: rows separated by `;`, entries by `,`.
pub fn parse_matrix(text: &str) -> CliResult<DMatrix<f64>> {
    let rows: Vec<Vec<f64>> = text
        .split(';')
        .map(|row| {
            row.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| CliError::input(format!("bad matrix entry '{}'", v.trim()))))
                .collect()
        })
        .collect::<CliResult<_>>()?;
    let d = rows.len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(CliError::input(format!("--cov must be square, got '{text}'")));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

/// Settings shared by every subcommand, after layering.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub family: Option<FamilyDescriptor>,
    /// Quadrature tolerance.
    pub tol: f64,
    /// Largest |ln CNML − ln Jeffreys| reported as agreement by `predict --compare`.
    pub equivalence_tol: f64,
    pub seed: u64,
    pub format: Format,
    pub data: Option<PathBuf>,
}

pub struct SharedFlags {
    pub family: FamilySpec,
    pub tol: Option<f64>,
    pub equivalence_tol: Option<f64>,
    pub seed: Option<u64>,
    pub format: Option<String>,
    pub data: Option<PathBuf>,
}

impl RunConfig {
    pub fn resolve(flags: SharedFlags, file: &ConfigFile) -> CliResult<Self> {
        let family = flags.family.resolve(file)?.build()?;
        let tol = file.pick(flags.tol, "tol")?.unwrap_or(1e-10);
        let equivalence_tol = file.pick(flags.equivalence_tol, "equivalence-tol")?.unwrap_or(1e-6);
        for (name, v) in [("tol", tol), ("equivalence-tol", equivalence_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::input(format!("--{name} must be positive, got {v}")));
            }
        }
        let format = match file.pick(flags.format, "format")? {
            Some(f) => f.parse()?,
            None => Format::default(),
        };
        Ok(RunConfig {
            family,
            tol,
            equivalence_tol,
            seed: file.pick(flags.seed, "seed")?.unwrap_or(0),
            format,
            data: file.pick(flags.data, "data")?,
        })
    }

    pub fn family(&self) -> CliResult<&FamilyDescriptor> {
        self.family.as_ref().ok_or_else(|| CliError::input("--family is required"))
    }

    pub fn data_path(&self) -> CliResult<&Path> {
        self.data.as_deref().ok_or_else(|| CliError::input("--data is required"))
    }
}
