use std::path::{Path, PathBuf};

use brachisto_core::brachistophase::Sign;
use brachisto_core::presets::{HamiltonianPreset, StatePreset};
use brachisto_core::{CMatrix, CVector, HermitianOp, PureState, C64};
use clap::{Args, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use crate::CliError;

#[derive(Subcommand, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Integrated geometric phase and its Taylor models on a time grid.
    Phase,
    /// Analytic brachistophase hamiltonian, threshold and random search.
    Optimize,
    /// Majorana star tracks of the evolved state.
    Constellation,
    /// Cross-module invariant suite.
    Verify,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SignArg {
    #[value(name = "+")]
    #[serde(rename = "+")]
    Plus,
    #[value(name = "-")]
    #[serde(rename = "-")]
    Minus,
}

impl From<SignArg> for Sign {
    fn from(s: SignArg) -> Sign {
        match s {
            SignArg::Plus => Sign::Plus,
            SignArg::Minus => Sign::Minus,
        }
    }
}

#[derive(Args, Clone, Debug)]
pub struct Options {
    /// Spin s, as "3/2", "1.5" or "1"; implied by fixed-spin states.
    #[arg(short = 's', long, global = true)]
    pub spin: Option<String>,
    /// State preset (coherent, ghz, tetrahedral) or JSON amplitude file.
    #[arg(long, global = true, default_value = "coherent")]
    pub state: String,
    /// Hamiltonian preset (brachistophase, max-accel, geodesic, random) or JSON matrix file.
    #[arg(long, global = true, default_value = "brachistophase")]
    pub hamiltonian: String,
    /// Evolution time for optimize.
    #[arg(long, global = true, default_value_t = 0.5)]
    pub tau: f64,
    /// Time grid start:end:nodes or a comma-separated list of times.
    #[arg(long, global = true)]
    pub grid: Option<String>,
    /// RK4 steps per unit time.
    #[arg(long, global = true, default_value_t = 512)]
    pub steps: usize,
    /// Random-search samples (optimize) or instances per seed (verify).
    #[arg(long, global = true)]
    pub samples: Option<u64>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Taylor order of the phase model reported by optimize.
    #[arg(long, global = true, default_value_t = 3, value_parser = parse_order)]
    pub order: u32,
    #[arg(long, global = true, value_enum, default_value = "+", allow_hyphen_values = true)]
    pub sign: SignArg,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    /// Number of consecutive seeds run by verify.
    #[arg(long, global = true, default_value_t = 1)]
    pub seeds: u64,
    /// Test hook: offset added to the Christoffel symbols in verify.
    #[arg(long, global = true, default_value_t = 0.0, hide = true)]
    pub perturb_christoffel: f64,
}

/// Time grid given as `start:end:nodes` or as a comma-separated list.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Grid {
    pub spec: String,
    pub points: Vec<f64>,
}

impl Grid {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let points = if s.contains(':') { Self::uniform(s)? } else { Self::list(s)? };
        if points.iter().any(|t| !t.is_finite()) {
            return Err(CliError::Config(format!("grid '{s}' has non-finite nodes")));
        }
        let increasing = points.windows(2).all(|w| w[1] > w[0]);
        let decreasing = points.windows(2).all(|w| w[1] < w[0]);
        if !(increasing || decreasing) {
            return Err(CliError::Config(format!("grid '{s}' is not strictly monotone")));
        }
        Ok(Self { spec: s.to_string(), points })
    }

    fn uniform(s: &str) -> Result<Vec<f64>, CliError> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || CliError::Config(format!("grid '{s}' is not start:end:nodes"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let end: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let nodes: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if nodes == 0 {
            return Err(CliError::Config("grid must have at least one node".into()));
        }
        if nodes == 1 {
            return Ok(vec![start]);
        }
        let h = (end - start) / (nodes - 1) as f64;
        Ok((0..nodes).map(|k| if k + 1 == nodes { end } else { start + h * k as f64 }).collect())
    }

    fn list(s: &str) -> Result<Vec<f64>, CliError> {
        if s.trim().is_empty() {
            return Err(CliError::Config("grid must have at least one node".into()));
        }
        s.split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|_| CliError::Config(format!("grid node '{x}' is not a number"))))
            .collect()
    }

    pub fn points(&self) -> Vec<f64> {
        self.points.clone()
    }
}

/// Resolved run configuration; echoed into every output file.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: Command,
    /// `2s`
    pub two_s: usize,
    pub dim: usize,
    pub state: String,
    pub hamiltonian: String,
    pub tau: f64,
    pub grid: Grid,
    pub steps: usize,
    pub samples: u64,
    pub seed: u64,
    pub seeds: u64,
    pub order: u32,
    pub sign: SignArg,
    pub format: Format,
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "is_zero")]
    pub perturb_christoffel: f64,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

fn parse_order(s: &str) -> Result<u32, String> {
    match s {
        "3" => Ok(3),
        "5" => Ok(5),
        _ => Err(format!("order must be 3 or 5, got '{s}'")),
    }
}

pub fn parse_spin(s: &str) -> Result<usize, CliError> {
    let bad = || CliError::Config(format!("spin '{s}' is not a positive multiple of 1/2"));
    let value = match s.split_once('/') {
        Some((n, d)) => {
            let n: f64 = n.trim().parse().map_err(|_| bad())?;
            let d: f64 = d.trim().parse().map_err(|_| bad())?;
            if d == 0.0 {
                return Err(bad());
            }
            n / d
        }
        None => s.trim().parse().map_err(|_| bad())?,
    };
    let two_s = 2.0 * value;
    if !(two_s >= 1.0) || (two_s - two_s.round()).abs() > 1e-9 || two_s > 64.0 {
        return Err(bad());
    }
    Ok(two_s.round() as usize)
}

fn json_file(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{} is not valid JSON: {e}", path.display())))
}

fn complex_entry(v: &Value) -> Option<C64> {
    match v {
        Value::Number(n) => Some(C64::new(n.as_f64()?, 0.0)),
        Value::Array(pair) if pair.len() == 2 => Some(C64::new(pair[0].as_f64()?, pair[1].as_f64()?)),
        _ => None,
    }
}

/// Amplitudes as a JSON array of numbers or `[re, im]` pairs.
pub fn read_state_file(path: &Path) -> Result<PureState, CliError> {
    let v = json_file(path)?;
    let bad = || CliError::Config(format!("{}: expected an array of numbers or [re, im] pairs", path.display()));
    let amps: Vec<C64> = v.as_array().ok_or_else(bad)?.iter().map(|e| complex_entry(e).ok_or_else(bad)).collect::<Result<_, _>>()?;
    PureState::normalized(CVector::from_vec(amps)).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Hamiltonian as a JSON array of rows of numbers or `[re, im]` pairs.
pub fn read_hamiltonian_file(path: &Path) -> Result<HermitianOp, CliError> {
    let v = json_file(path)?;
    let bad = || CliError::Config(format!("{}: expected a square array of numbers or [re, im] pairs", path.display()));
    let rows = v.as_array().ok_or_else(bad)?;
    let n = rows.len();
    let mut m = CMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_array().filter(|r| r.len() == n).ok_or_else(bad)?;
        for (j, e) in row.iter().enumerate() {
            m[(i, j)] = complex_entry(e).ok_or_else(bad)?;
        }
    }
    HermitianOp::new(m).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub enum StateSource {
    Preset(StatePreset),
    File(PathBuf),
}

pub enum HamiltonianSource {
    Preset(HamiltonianPreset),
    Random,
    File(PathBuf),
}

impl StateSource {
    fn parse(s: &str) -> Self {
        match s.parse() {
            Ok(p) => StateSource::Preset(p),
            Err(_) => StateSource::File(PathBuf::from(s)),
        }
    }
}

impl HamiltonianSource {
    fn parse(s: &str) -> Self {
        if s.eq_ignore_ascii_case("random") {
            return HamiltonianSource::Random;
        }
        match s.parse() {
            Ok(p) => HamiltonianSource::Preset(p),
            Err(_) => HamiltonianSource::File(PathBuf::from(s)),
        }
    }
}

/// Inputs materialized from a [`RunConfig`].
pub struct Inputs {
    pub psi0: PureState,
    pub h: HermitianOp,
    pub state_preset: Option<StatePreset>,
}

impl RunConfig {
    pub fn from_options(command: Command, o: &Options) -> Result<Self, CliError> {
        let state = StateSource::parse(&o.state);
        let spin = o.spin.as_deref().map(parse_spin).transpose()?;
        let two_s = match &state {
            StateSource::Preset(p) => match (p.two_s(), spin) {
                (Some(fixed), Some(given)) if fixed != given => {
                    return Err(CliError::Config(format!("state '{p}' has spin {fixed}/2, not {given}/2")))
                }
                (Some(fixed), _) => fixed,
                (None, given) => given.unwrap_or(1),
            },
            StateSource::File(path) => {
                let d = read_state_file(path)?.dim();
                if d < 2 {
                    return Err(CliError::Config("state must have at least two amplitudes".into()));
                }
                match spin {
                    Some(given) if given + 1 != d => {
                        return Err(CliError::Config(format!("state file has dimension {d}, spin implies {}", given + 1)))
                    }
                    _ => d - 1,
                }
            }
        };
        let default_grid = match command {
            Command::Phase | Command::Constellation => "0:3.2:33",
            _ => "0:1:2",
        };
        let grid = Grid::parse(o.grid.as_deref().unwrap_or(default_grid))?;
        if o.steps == 0 {
            return Err(CliError::Config("steps must be positive".into()));
        }
        if !o.tau.is_finite() || o.tau < 0.0 {
            return Err(CliError::Config(format!("tau must be a non-negative number, got {}", o.tau)));
        }
        if o.seeds == 0 {
            return Err(CliError::Config("seeds must be positive".into()));
        }
        let samples = o.samples.unwrap_or(match command {
            Command::Verify => 5,
            _ => 10_000,
        });
        if samples == 0 {
            return Err(CliError::Config("samples must be positive".into()));
        }
        Ok(Self {
            command,
            two_s,
            dim: two_s + 1,
            state: o.state.clone(),
            hamiltonian: o.hamiltonian.clone(),
            tau: o.tau,
            grid,
            steps: o.steps,
            samples,
            seed: o.seed,
            seeds: o.seeds,
            order: o.order,
            sign: o.sign,
            format: o.format,
            out: o.out.clone(),
            perturb_christoffel: o.perturb_christoffel,
        })
    }

    pub fn sign(&self) -> Sign {
        self.sign.into()
    }

    pub fn inputs(&self) -> Result<Inputs, CliError> {
        let (psi0, state_preset) = match StateSource::parse(&self.state) {
            StateSource::Preset(p) => (p.state(self.two_s).map_err(|e| CliError::Config(e.to_string()))?, Some(p)),
            StateSource::File(path) => (read_state_file(&path)?, None),
        };
        let h = match HamiltonianSource::parse(&self.hamiltonian) {
            HamiltonianSource::Preset(p) => {
                p.for_state(&psi0, self.sign()).map_err(|e| CliError::Config(e.to_string()))?
            }
            HamiltonianSource::Random => brachisto_core::brachistophase::sample_hamiltonian(self.dim, self.seed, 0)
                .map_err(|e| CliError::Config(e.to_string()))?,
            HamiltonianSource::File(path) => read_hamiltonian_file(&path)?,
        };
        if h.dim() != psi0.dim() {
            return Err(CliError::Config(format!(
                "hamiltonian dimension {} does not match state dimension {}",
                h.dim(),
                psi0.dim()
            )));
        }
        Ok(Inputs { psi0, h, state_preset })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spins() {
        assert_eq!(parse_spin("3/2").unwrap(), 3);
        assert_eq!(parse_spin("1.5").unwrap(), 3);
        assert_eq!(parse_spin("2").unwrap(), 4);
        assert!(parse_spin("0").is_err());
        assert!(parse_spin("1/3").is_err());
        assert!(parse_spin("x").is_err());
    }

    #[test]
    fn grids() {
        let g = Grid::parse("0:3.2:5").unwrap();
        assert_eq!(g.points(), vec![0.0, 0.8, 1.6, 2.4000000000000004, 3.2]);
        assert_eq!(Grid::parse("0, 0.5,3.2").unwrap().points(), vec![0.0, 0.5, 3.2]);
        assert!(Grid::parse("0:1:0").is_err());
        assert!(Grid::parse("").is_err());
        assert!(Grid::parse("0:1").is_err());
        assert!(Grid::parse("1:1:3").is_err());
        assert!(Grid::parse("0,2,1").is_err());
    }
}
