//! Experiment configuration files.

use std::fmt;
use std::path::PathBuf;

use growgap::geometry::{KESTEN_P_CAP, PEIERLS_SIZE_CAP};
use growgap::gibbs::{BoundaryCondition, CLAIM32_SIZE_CAP, TABLE_CAP};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// A configuration problem, located by line and dotted field name when known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error")?;
        if let Some(line) = self.line {
            write!(f, " at line {line}")?;
        }
        if let Some(field) = &self.field {
            write!(f, " in `{field}`")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    graph: Option<RawGraph>,
    run: Option<RawRun>,
    caps: Option<RawCaps>,
    output: Option<RawOutput>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGraph {
    family: Option<String>,
    depth: Option<usize>,
    delta: Option<usize>,
    v: Option<usize>,
    s: Option<usize>,
    d: Option<usize>,
    seed: Option<u64>,
    layer_degrees: Option<Vec<usize>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    seed: Option<u64>,
    radii: Option<Vec<usize>>,
    bcs: Option<Vec<String>>,
    betas: Option<Vec<f64>>,
    h: Option<f64>,
    estimators: Option<Vec<String>>,
    coupling: Option<String>,
    coupling_samples: Option<usize>,
    lanczos_tol: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCaps {
    max_spins: Option<usize>,
    set_size: Option<usize>,
    kesten_size: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum GraphSpec {
    Tree {
        delta: usize,
        depth: usize,
    },
    Hyperbolic {
        v: usize,
        s: usize,
        depth: usize,
    },
    ExpanderTree {
        delta: usize,
        d: usize,
        seed: u64,
        layer_degrees: Option<Vec<usize>>,
        depth: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coupling {
    None,
    Exact,
    MonteCarlo { samples: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Estimators {
    pub exact: bool,
    pub mixing: bool,
}

/// A parsed and validated configuration. Sweep fields stay optional until a
/// subcommand asks for them through the accessors below.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub graph: GraphSpec,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    /// Hex SHA-256 of the configuration file bytes.
    pub hash: String,
    text: String,
    radii: Option<Vec<usize>>,
    bcs: Option<Vec<BoundaryCondition>>,
    betas: Option<Vec<f64>>,
    h: Option<f64>,
    estimators: Option<Estimators>,
    coupling: Option<Coupling>,
    lanczos_tol: Option<f64>,
    max_spins: Option<usize>,
    set_size: Option<usize>,
    kesten_size: Option<usize>,
}

/// 1-based line of `key = ...` inside `[section]`, if present.
fn line_of(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (k, line) in text.lines().enumerate() {
        let t = line.trim();
        if let Some(head) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            current = head.trim().to_string();
            if key.is_empty() && current == section {
                return Some(k + 1);
            }
        } else if current == section && !key.is_empty() {
            if let Some((lhs, _)) = t.split_once('=') {
                if lhs.trim() == key {
                    return Some(k + 1);
                }
            }
        }
    }
    None
}

fn line_at(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError {
            line: e.span().map(|s| line_at(text, s.start)),
            field: None,
            message: e.message().to_string(),
        })?;
        let err = |section: &str, key: &str, message: String| ConfigError {
            line: line_of(text, section, key),
            field: Some(format!("{section}.{key}")),
            message,
        };
        let missing = |section: &str, key: &str| ConfigError {
            line: line_of(text, section, ""),
            field: Some(format!("{section}.{key}")),
            message: "missing required field".into(),
        };

        let rg = raw.graph.ok_or_else(|| ConfigError {
            line: None,
            field: Some("graph".into()),
            message: "missing [graph] section".into(),
        })?;
        let family = rg.family.ok_or_else(|| missing("graph", "family"))?;
        let depth = rg.depth.ok_or_else(|| missing("graph", "depth"))?;
        let graph = match family.as_str() {
            "tree" => GraphSpec::Tree {
                delta: rg.delta.ok_or_else(|| missing("graph", "delta"))?,
                depth,
            },
            "hyperbolic" => GraphSpec::Hyperbolic {
                v: rg.v.ok_or_else(|| missing("graph", "v"))?,
                s: rg.s.ok_or_else(|| missing("graph", "s"))?,
                depth,
            },
            "expander-tree" => GraphSpec::ExpanderTree {
                delta: rg.delta.ok_or_else(|| missing("graph", "delta"))?,
                d: rg.d.ok_or_else(|| missing("graph", "d"))?,
                seed: rg.seed.ok_or_else(|| missing("graph", "seed"))?,
                layer_degrees: rg.layer_degrees,
                depth,
            },
            other => {
                return Err(err(
                    "graph",
                    "family",
                    format!("unknown family `{other}` (tree, hyperbolic, expander-tree)"),
                ))
            }
        };

        let run = raw.run.ok_or_else(|| ConfigError {
            line: None,
            field: Some("run".into()),
            message: "missing [run] section".into(),
        })?;
        let seed = run.seed.ok_or_else(|| missing("run", "seed"))?;

        if let Some(radii) = &run.radii {
            if radii.is_empty() {
                return Err(err("run", "radii", "needs at least one radius".into()));
            }
            if let Some(&r) = radii.iter().find(|&&r| r == 0 || r >= depth) {
                return Err(err(
                    "run",
                    "radii",
                    format!("radius {r} must satisfy 1 <= r < graph.depth = {depth}"),
                ));
            }
        }
        let bcs = match run.bcs {
            None => None,
            Some(list) => {
                let mut out = Vec::new();
                for s in list {
                    out.push(
                        s.parse::<BoundaryCondition>()
                            .map_err(|m| err("run", "bcs", m))?,
                    );
                }
                if out.is_empty() {
                    return Err(err(
                        "run",
                        "bcs",
                        "needs at least one boundary condition".into(),
                    ));
                }
                Some(out)
            }
        };
        if let Some(betas) = &run.betas {
            if betas.is_empty() {
                return Err(err("run", "betas", "needs at least one beta".into()));
            }
            if let Some(b) = betas.iter().find(|b| !b.is_finite() || **b < 0.0) {
                return Err(err(
                    "run",
                    "betas",
                    format!("beta {b} must be finite and >= 0"),
                ));
            }
        }
        if let Some(h) = run.h {
            if !h.is_finite() {
                return Err(err("run", "h", "field must be finite".into()));
            }
        }
        let estimators = match run.estimators {
            None => None,
            Some(list) => {
                let mut e = Estimators {
                    exact: false,
                    mixing: false,
                };
                for s in &list {
                    match s.as_str() {
                        "exact" => e.exact = true,
                        "mixing" => e.mixing = true,
                        other => {
                            return Err(err(
                                "run",
                                "estimators",
                                format!("unknown estimator `{other}` (exact, mixing)"),
                            ))
                        }
                    }
                }
                Some(e)
            }
        };
        let coupling = match run.coupling.as_deref() {
            None => None,
            Some("none") => Some(Coupling::None),
            Some("exact") => Some(Coupling::Exact),
            Some("monte-carlo") => {
                let samples = run
                    .coupling_samples
                    .ok_or_else(|| missing("run", "coupling_samples"))?;
                if samples == 0 {
                    return Err(err("run", "coupling_samples", "must be positive".into()));
                }
                Some(Coupling::MonteCarlo { samples })
            }
            Some(other) => {
                return Err(err(
                    "run",
                    "coupling",
                    format!("unknown coupling mode `{other}` (none, exact, monte-carlo)"),
                ))
            }
        };
        if let Some(tol) = run.lanczos_tol {
            if !(tol > 0.0 && tol < 1.0) {
                return Err(err(
                    "run",
                    "lanczos_tol",
                    format!("tolerance {tol} must lie in (0, 1)"),
                ));
            }
        }

        let caps = raw.caps;
        let cap =
            |key: &str, value: Option<usize>, limit: usize| -> Result<Option<usize>, ConfigError> {
                match value {
                    Some(v) if v == 0 || v > limit => {
                        Err(err("caps", key, format!("{v} must lie in 1..={limit}")))
                    }
                    other => Ok(other),
                }
            };
        let max_spins = cap(
            "max_spins",
            caps.as_ref().and_then(|c| c.max_spins),
            TABLE_CAP,
        )?;
        let set_size = cap(
            "set_size",
            caps.as_ref().and_then(|c| c.set_size),
            PEIERLS_SIZE_CAP.max(CLAIM32_SIZE_CAP),
        )?;
        let kesten_size = cap(
            "kesten_size",
            caps.as_ref().and_then(|c| c.kesten_size),
            KESTEN_P_CAP,
        )?;

        Ok(ExperimentConfig {
            graph,
            seed,
            output_dir: raw.output.and_then(|o| o.dir),
            hash: hex::encode(Sha256::digest(text.as_bytes())),
            text: text.to_string(),
            radii: run.radii,
            bcs,
            betas: run.betas,
            h: run.h,
            estimators,
            coupling,
            lanczos_tol: run.lanczos_tol,
            max_spins,
            set_size,
            kesten_size,
        })
    }

    fn need<T: Clone>(
        &self,
        value: &Option<T>,
        section: &str,
        key: &str,
    ) -> Result<T, ConfigError> {
        value.clone().ok_or_else(|| ConfigError {
            line: line_of(&self.text, section, ""),
            field: Some(format!("{section}.{key}")),
            message: "missing required field".into(),
        })
    }

    pub fn radii(&self) -> Result<Vec<usize>, ConfigError> {
        self.need(&self.radii, "run", "radii")
    }

    pub fn bcs(&self) -> Result<Vec<BoundaryCondition>, ConfigError> {
        self.need(&self.bcs, "run", "bcs")
    }

    pub fn betas(&self) -> Result<Vec<f64>, ConfigError> {
        self.need(&self.betas, "run", "betas")
    }

    pub fn h(&self) -> Result<f64, ConfigError> {
        self.need(&self.h, "run", "h")
    }

    pub fn estimators(&self) -> Result<Estimators, ConfigError> {
        self.need(&self.estimators, "run", "estimators")
    }

    pub fn coupling(&self) -> Result<Coupling, ConfigError> {
        self.need(&self.coupling, "run", "coupling")
    }

    pub fn lanczos_tol(&self) -> Result<f64, ConfigError> {
        self.need(&self.lanczos_tol, "run", "lanczos_tol")
    }

    pub fn max_spins(&self) -> Result<usize, ConfigError> {
        self.need(&self.max_spins, "caps", "max_spins")
    }

    pub fn set_size(&self) -> Result<usize, ConfigError> {
        self.need(&self.set_size, "caps", "set_size")
    }

    pub fn kesten_size(&self) -> Result<usize, ConfigError> {
        self.need(&self.kesten_size, "caps", "kesten_size")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str =
        "[graph]\nfamily = \"tree\"\ndelta = 3\ndepth = 4\n\n[run]\nseed = 5\nradii = [1, 2]\n";

    #[test]
    fn parses_tree() {
        let c = ExperimentConfig::parse(BASE).unwrap();
        assert_eq!(c.graph, GraphSpec::Tree { delta: 3, depth: 4 });
        assert_eq!(c.seed, 5);
        assert_eq!(c.radii().unwrap(), vec![1, 2]);
        assert_eq!(c.hash.len(), 64);
    }

    #[test]
    fn missing_seed_is_named() {
        let text = BASE.replace("seed = 5\n", "");
        let e = ExperimentConfig::parse(&text).unwrap_err();
        assert_eq!(e.field.as_deref(), Some("run.seed"));
        assert_eq!(e.line, Some(6));
    }

    #[test]
    fn missing_sweep_field_is_named_on_demand() {
        let c = ExperimentConfig::parse(BASE).unwrap();
        let e = c.betas().unwrap_err();
        assert_eq!(e.field.as_deref(), Some("run.betas"));
    }

    #[test]
    fn bad_values_carry_lines() {
        let text = format!("{BASE}betas = [1.0, -2.0]\n");
        let e = ExperimentConfig::parse(&text).unwrap_err();
        assert_eq!(e.field.as_deref(), Some("run.betas"));
        assert_eq!(e.line, Some(9));
        let e =
            ExperimentConfig::parse(&BASE.replace("radii = [1, 2]", "radii = [4]")).unwrap_err();
        assert_eq!(e.field.as_deref(), Some("run.radii"));
    }

    #[test]
    fn unknown_key_is_rejected_with_line() {
        let text = format!("{BASE}bogus = 1\n");
        let e = ExperimentConfig::parse(&text).unwrap_err();
        assert_eq!(e.line, Some(9));
        assert!(e.message.contains("bogus"), "{}", e.message);
    }

    #[test]
    fn caps_are_bounded() {
        let text = format!("{BASE}\n[caps]\nmax_spins = 99\n");
        let e = ExperimentConfig::parse(&text).unwrap_err();
        assert_eq!(e.field.as_deref(), Some("caps.max_spins"));
    }
}
