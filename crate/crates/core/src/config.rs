//! Run configuration: flat `key = value` text plus command-line overrides.
//!
//! Precedence is overrides > file > defaults. Unknown keys, malformed values
//! and constraint violations are errors naming the key.

use crate::error::{Error, Result};
use crate::solver::NewtonConfig;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Convergence,
    Diagnose,
    MeshInfo,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Convergence => "convergence",
            Command::Diagnose => "diagnose",
            Command::MeshInfo => "mesh-info",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    Level(usize),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    /// `None` selects the command's default (level 8, or the diagnostics ladder).
    pub mesh: Option<MeshSource>,
    pub dt: f64,
    pub t_final: f64,
    pub kinetics: String,
    pub a: f64,
    pub b: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub newton: NewtonConfig,
    pub out: PathBuf,
    pub levels: Vec<usize>,
    pub diag_levels: Vec<usize>,
    pub scalar_samples: Vec<String>,
    pub field_samples: Vec<String>,
    pub full_table: bool,
}

impl RunConfig {
    pub fn defaults(command: Command) -> Self {
        RunConfig {
            command,
            mesh: None,
            dt: 1e-3,
            t_final: 1.0,
            kinetics: "brusselator".into(),
            a: 0.0,
            b: 1.0,
            mu1: 0.25,
            mu2: 0.25,
            newton: NewtonConfig::default(),
            out: PathBuf::from("out"),
            levels: vec![8, 16, 32],
            diag_levels: vec![4, 8, 16],
            scalar_samples: vec!["sinsin".into(), "affine".into()],
            field_samples: vec!["x0".into(), "constant".into()],
            full_table: false,
        }
    }

    pub fn mesh_source(&self) -> MeshSource {
        self.mesh.clone().unwrap_or(MeshSource::Level(8))
    }

    /// Deterministic rendering of every field, used for hashing.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let mesh = match &self.mesh {
            None => "default".to_string(),
            Some(MeshSource::Level(n)) => format!("level:{n}"),
            Some(MeshSource::File(p)) => format!("file:{}", p.display()),
        };
        let list = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let _ = writeln!(s, "command = {}", self.command.name());
        let _ = writeln!(s, "mesh = {mesh}");
        let _ = writeln!(s, "dt = {:e}", self.dt);
        let _ = writeln!(s, "T = {:e}", self.t_final);
        let _ = writeln!(s, "kinetics = {}", self.kinetics);
        let _ = writeln!(s, "a = {:e}", self.a);
        let _ = writeln!(s, "b = {:e}", self.b);
        let _ = writeln!(s, "mu1 = {:e}", self.mu1);
        let _ = writeln!(s, "mu2 = {:e}", self.mu2);
        let _ = writeln!(s, "newton_tol = {:e}", self.newton.tol_residual);
        let _ = writeln!(s, "newton_max_iter = {}", self.newton.max_iter);
        let _ = writeln!(s, "linear_tol = {:e}", self.newton.linear_rel_tol);
        let _ = writeln!(s, "levels = {}", list(&self.levels));
        let _ = writeln!(s, "diag_levels = {}", list(&self.diag_levels));
        let _ = writeln!(s, "scalar_samples = {}", self.scalar_samples.join(","));
        let _ = writeln!(s, "field_samples = {}", self.field_samples.join(","));
        s
    }
}

pub const KEYS: &[&str] = &[
    "dt",
    "T",
    "kinetics",
    "a",
    "b",
    "mu",
    "mu1",
    "mu2",
    "newton_tol",
    "newton_max_iter",
    "linear_tol",
    "level",
    "mesh_file",
    "out",
    "levels",
    "diag_levels",
    "scalar_samples",
    "field_samples",
    "full_table",
];

/// `key = value` pairs in file order. Blank lines and `#` comments skipped.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

/// Splits a `key=value` override.
pub fn parse_override(s: &str) -> Result<(String, String)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::InvalidArgument(format!("override `{s}` is not key=value")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn value<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{v}` as {}", std::any::type_name::<T>())))
}

fn positive(key: &str, v: &str) -> Result<f64> {
    let x: f64 = value(key, v)?;
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::config(key, format!("must be positive, got {v}")));
    }
    Ok(x)
}

fn level_list(key: &str, v: &str) -> Result<Vec<usize>> {
    let levels: Vec<usize> = v
        .split(',')
        .map(|s| value::<usize>(key, s.trim()))
        .collect::<Result<_>>()?;
    if levels.is_empty() || levels.contains(&0) {
        return Err(Error::config(key, "levels must be positive"));
    }
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config(key, "levels must be strictly increasing"));
    }
    Ok(levels)
}

fn label_list(v: &str) -> Vec<String> {
    v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

/// Builds a validated [`RunConfig`] from file text and overrides.
pub fn parse_config(command: Command, text: &str, overrides: &[(String, String)]) -> Result<RunConfig> {
    let mut pairs = parse_pairs(text)?;
    pairs.extend(overrides.iter().cloned());
    for (k, _) in &pairs {
        if !KEYS.contains(&k.as_str()) {
            return Err(Error::config(k, "unknown key"));
        }
    }

    let mut cfg = RunConfig::defaults(command);
    // the full-table switch changes defaults; explicit keys still win
    if let Some((_, v)) = pairs.iter().rev().find(|(k, _)| k == "full_table") {
        cfg.full_table = value("full_table", v)?;
        if cfg.full_table {
            cfg.dt = 1e-4;
            cfg.levels = vec![8, 16, 32, 64];
        }
    }
    for (k, v) in &pairs {
        match k.as_str() {
            "dt" => cfg.dt = positive(k, v)?,
            "T" => cfg.t_final = positive(k, v)?,
            "kinetics" => {
                if !["brusselator", "none"].contains(&v.as_str()) {
                    return Err(Error::config(k, format!("unknown kinetics `{v}`")));
                }
                cfg.kinetics = v.clone();
            }
            "a" => cfg.a = value(k, v)?,
            "b" => cfg.b = value(k, v)?,
            "mu" => {
                cfg.mu1 = positive(k, v)?;
                cfg.mu2 = cfg.mu1;
            }
            "mu1" => cfg.mu1 = positive(k, v)?,
            "mu2" => cfg.mu2 = positive(k, v)?,
            "newton_tol" => cfg.newton.tol_residual = positive(k, v)?,
            "newton_max_iter" => {
                cfg.newton.max_iter = value(k, v)?;
                if cfg.newton.max_iter == 0 {
                    return Err(Error::config(k, "must be at least 1"));
                }
            }
            "linear_tol" => cfg.newton.linear_rel_tol = positive(k, v)?,
            "level" => {
                let n: usize = value(k, v)?;
                if n == 0 {
                    return Err(Error::config(k, "must be positive"));
                }
                cfg.mesh = Some(MeshSource::Level(n));
            }
            "mesh_file" => cfg.mesh = Some(MeshSource::File(PathBuf::from(v))),
            "out" => cfg.out = PathBuf::from(v),
            "levels" => cfg.levels = level_list(k, v)?,
            "diag_levels" => cfg.diag_levels = level_list(k, v)?,
            "scalar_samples" => cfg.scalar_samples = label_list(v),
            "field_samples" => cfg.field_samples = label_list(v),
            "full_table" => {}
            _ => unreachable!(),
        }
    }
    for l in &cfg.scalar_samples {
        crate::diagnostics::scalar_sample(l).map_err(|_| Error::config("scalar_samples", format!("unknown sample `{l}`")))?;
    }
    for l in &cfg.field_samples {
        crate::diagnostics::field_sample(l).map_err(|_| Error::config("field_samples", format!("unknown sample `{l}`")))?;
    }
    if cfg.dt > cfg.t_final {
        return Err(Error::config("dt", format!("step {} exceeds final time {}", cfg.dt, cfg.t_final)));
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key_of(e: Error) -> String {
        match e {
            Error::Config { key, .. } => key,
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_config_gives_defaults() {
        let c = parse_config(Command::Solve, "", &[]).unwrap();
        assert_eq!(c, RunConfig::defaults(Command::Solve));
        assert_eq!((c.dt, c.t_final, c.a, c.b, c.mu1, c.mu2), (1e-3, 1.0, 0.0, 1.0, 0.25, 0.25));
    }

    #[test]
    fn constraint_errors_name_the_key() {
        assert_eq!(key_of(parse_config(Command::Solve, "dt = -1", &[]).unwrap_err()), "dt");
        assert_eq!(key_of(parse_config(Command::Solve, "mu2 = 0", &[]).unwrap_err()), "mu2");
        assert_eq!(key_of(parse_config(Command::Solve, "T = abc", &[]).unwrap_err()), "T");
        assert_eq!(key_of(parse_config(Command::Solve, "colour = red", &[]).unwrap_err()), "colour");
        assert_eq!(key_of(parse_config(Command::Solve, "levels = 16,8", &[]).unwrap_err()), "levels");
        assert_eq!(key_of(parse_config(Command::Solve, "kinetics = gray", &[]).unwrap_err()), "kinetics");
        assert_eq!(
            key_of(parse_config(Command::Diagnose, "field_samples = nope", &[]).unwrap_err()),
            "field_samples"
        );
        assert!(matches!(
            parse_config(Command::Solve, "just words", &[]),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn levels_and_precedence() {
        let text = "# ladder\nlevels = 8, 16, 32, 64\ndt = 0.01\n\nmu = 0.5\n";
        let c = parse_config(Command::Convergence, text, &[("dt".into(), "0.002".into())]).unwrap();
        assert_eq!(c.levels, vec![8, 16, 32, 64]);
        assert_eq!(c.dt, 0.002);
        assert_eq!((c.mu1, c.mu2), (0.5, 0.5));
    }

    #[test]
    fn full_table_switch() {
        let c = parse_config(Command::Convergence, "full_table = true", &[]).unwrap();
        assert_eq!((c.dt, c.levels.clone()), (1e-4, vec![8, 16, 32, 64]));
        let c = parse_config(Command::Convergence, "dt = 0.01\nfull_table = true", &[]).unwrap();
        assert_eq!(c.dt, 0.01);
    }

    #[test]
    fn overrides_and_canonical_form() {
        assert_eq!(parse_override("a = 2").unwrap(), ("a".into(), "2".into()));
        assert!(parse_override("a").is_err());
        let c1 = parse_config(Command::Solve, "a = 0", &[]).unwrap();
        let c2 = parse_config(Command::Solve, "", &[]).unwrap();
        assert_eq!(c1.canonical(), c2.canonical());
        let c3 = parse_config(Command::Solve, "", &[("level".into(), "4".into())]).unwrap();
        assert_ne!(c1.canonical(), c3.canonical());
        assert_eq!(c3.mesh, Some(MeshSource::Level(4)));
    }
}
