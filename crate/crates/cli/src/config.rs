//! Resolved run configuration and the manifest that records it.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use riskroute::datagen::{FleetSpec, GeneratorConfig};
use riskroute::evaluate::{sha256_hex, DurationStrategy};
use riskroute::forecast::{Grid, TrainConfig};
use riskroute::seed;
use riskroute::solver::SolverConfig;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::args::RuleArg;
use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    SubGaussian,
    Conformal,
    None,
}

impl From<RuleArg> for RuleKind {
    fn from(r: RuleArg) -> Self {
        match r {
            RuleArg::SubGaussian => RuleKind::SubGaussian,
            RuleArg::Conformal => RuleKind::Conformal,
            RuleArg::None => RuleKind::None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    pub strategies: Vec<DurationStrategy>,
    pub rule: RuleKind,
    /// Give default-strategy estimates their class variance instead of zero.
    pub default_with_variance: bool,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            strategies: DurationStrategy::ALL.to_vec(),
            rule: RuleKind::SubGaussian,
            default_with_variance: false,
        }
    }
}

/// Everything a run may read. Stage seeds are filled in from `seed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    /// Corpus produced by `gen` and the planning month of `compare`.
    pub generator: GeneratorConfig,
    /// Training history for `compare` runs without a model.
    pub history: GeneratorConfig,
    pub fleet: FleetSpec,
    pub train: TrainConfig,
    pub solver: SolverConfig,
    pub compare: CompareConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 0,
            generator: GeneratorConfig::default(),
            history: GeneratorConfig {
                n_days: 240,
                start_date: NaiveDate::from_ymd_opt(2023, 1, 2).expect("valid date"),
                ..GeneratorConfig::default()
            },
            fleet: FleetSpec::default(),
            train: TrainConfig::default(),
            solver: SolverConfig::default(),
            compare: CompareConfig::default(),
        }
    }
}

impl Config {
    /// Defaults, overlaid by `path` when given. A manifest is accepted too:
    /// its `config` object is used.
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let value: serde_json::Value = read_json(path)?;
        let inner = match value.get("manifest_version") {
            Some(_) => value
                .get("config")
                .cloned()
                .ok_or_else(|| CliError::schema(path, "manifest has no config"))?,
            None => value,
        };
        serde_json::from_value(inner).map_err(|e| CliError::schema(path, e))
    }

    /// Pushes the master seed into every stage.
    pub fn seal(&mut self) {
        self.generator.seed = self.seed;
        self.history.seed = seed::stream(self.seed, "history");
        self.train.split_seed = seed::stream(self.seed, "train");
        self.solver.seed = seed::stream(self.seed, "solve");
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::schema(path, e))
}

pub fn read_text(path: &Path) -> CliResult<String> {
    match fs::read(path) {
        Ok(bytes) => String::from_utf8(bytes).map_err(|e| CliError::schema(path, e)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(CliError::missing(path)),
        Err(e) => Err(e.into()),
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn grid_from_arg(arg: &str) -> CliResult<Grid> {
    if arg == "default" {
        Ok(Grid::default())
    } else {
        read_json(Path::new(arg))
    }
}

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub name: String,
    pub sha256: String,
}

/// Written last by every subcommand. Holds no paths or timestamps, so two
/// identical runs produce identical manifests.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub manifest_version: u32,
    pub command: &'a str,
    pub tool_version: &'a str,
    pub config: &'a Config,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

pub fn digest(path: &Path) -> CliResult<FileDigest> {
    let bytes = fs::read(path)?;
    Ok(FileDigest {
        name: path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        sha256: sha256_hex(&bytes),
    })
}

pub fn write_manifest(
    out: &Path,
    command: &str,
    config: &Config,
    inputs: &[PathBuf],
    outputs: &[PathBuf],
) -> CliResult<PathBuf> {
    let manifest = Manifest {
        manifest_version: 1,
        command,
        tool_version: env!("CARGO_PKG_VERSION"),
        config,
        inputs: inputs.iter().map(|p| digest(p)).collect::<CliResult<_>>()?,
        outputs: outputs.iter().map(|p| digest(p)).collect::<CliResult<_>>()?,
    };
    let path = out.join("manifest.json");
    write_json(&path, &manifest)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_overrides_defaults_and_keeps_the_rest() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(
            &path,
            r#"{"seed": 4, "solver": {"generations": 7}, "fleet": {"n_vehicles": 3}}"#,
        )
        .unwrap();
        let c = Config::load(Some(&path)).unwrap();
        assert_eq!((c.seed, c.solver.generations, c.fleet.n_vehicles), (4, 7, 3));
        assert_eq!(c.solver.population, SolverConfig::default().population);
        assert_eq!(c.history, Config::default().history);
    }

    #[test]
    fn manifest_is_accepted_as_config() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = Config {
            seed: 9,
            ..Config::default()
        };
        c.solver.population = 40;
        c.seal();
        write_manifest(dir.path(), "gen", &c, &[], &[]).unwrap();
        let back = Config::load(Some(&dir.path().join("manifest.json"))).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn seal_derives_distinct_stage_seeds() {
        let mut c = Config {
            seed: 5,
            ..Config::default()
        };
        c.seal();
        let seeds = [c.generator.seed, c.history.seed, c.train.split_seed, c.solver.seed];
        for i in 0..seeds.len() {
            for j in i + 1..seeds.len() {
                assert_ne!(seeds[i], seeds[j]);
            }
        }
    }

    #[test]
    fn missing_and_malformed_files() {
        let dir = tempfile::tempdir().unwrap();
        let e = Config::load(Some(&dir.path().join("none.json"))).unwrap_err();
        assert_eq!(e.kind, crate::error::Kind::MissingFile);
        let bad = dir.path().join("bad.json");
        fs::write(&bad, "{not json").unwrap();
        assert_eq!(
            Config::load(Some(&bad)).unwrap_err().kind,
            crate::error::Kind::SchemaMismatch
        );
    }
}
