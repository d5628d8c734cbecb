//! Run-file schema (TOML).
//!
//! ```toml
//! [potential]
//! kind = "step"            # step | poschl_teller | bump | sum
//! v0 = 100.0
//! b = 1.0
//!
//! [mode]
//! root_index = 1           # step modes count from 1
//!
//! [perturbation]
//! kind = "bump"            # bump | width | none
//! x0 = 0.3
//! w = 0.1
//!
//! [domain]
//! a = 1.6                  # step: outer end of the half line
//!
//! [sweep]
//! kind = "mu-scaling"      # bump-x0 | mu-scaling
//! mu = { from = 1e-3, to = 1e-1, per_decade = 4 }
//! ```
//!
//! A `sum` potential lists its parts as `[[potential.terms]]` tables. Grids
//! are a number, a list, `{ from, to, step }` or `{ from, to, per_decade }`.

use crate::CliError;
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    pub potential: PotentialSection,
    #[serde(default)]
    pub mode: ModeSection,
    #[serde(default)]
    pub perturbation: Option<PerturbationSection>,
    #[serde(default)]
    pub domain: DomainSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSection {
    Step { v0: f64, b: f64 },
    PoschlTeller { v0: f64, #[serde(default = "one")] b: f64 },
    Bump { x0: f64, w: f64, #[serde(default = "one")] height: f64 },
    Sum { terms: Vec<PotentialSection> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParityChoice {
    Even,
    Odd,
    None,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSection {
    /// Step root index (from 1).
    #[serde(default = "one_u32")]
    pub root_index: u32,
    /// Pöschl–Teller state index.
    #[serde(default)]
    pub j: u32,
    /// Sign of Re ω.
    #[serde(default = "one_i8")]
    pub branch: i8,
    /// Number of consecutive modes for `solve`.
    #[serde(default = "one_u32")]
    pub count: u32,
    /// Shooting seed `[re, im]` for `bump` and `sum` potentials.
    pub guess: Option<[f64; 2]>,
    #[serde(default = "no_parity")]
    pub parity: ParityChoice,
    #[serde(default)]
    pub match_point: f64,
}

impl Default for ModeSection {
    fn default() -> Self {
        ModeSection { root_index: 1, j: 0, branch: 1, count: 1, guess: None, parity: ParityChoice::None, match_point: 0.0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PerturbationSection {
    Bump { x0: f64, #[serde(default = "default_w")] w: f64, #[serde(default = "one")] height: f64 },
    Width {},
    None {},
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    /// Outer end of the step half line.
    #[serde(default = "default_a")]
    pub a: f64,
    /// Pöschl–Teller matching radius.
    #[serde(default = "default_l")]
    pub l: f64,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    /// Raise `k_max` until the first dropped tail term is below this.
    pub tail_tol: Option<f64>,
}

impl Default for DomainSection {
    fn default() -> Self {
        DomainSection { a: default_a(), l: default_l(), k_max: default_k_max(), tail_tol: None }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Absent: subtract automatically when digits are being lost.
    pub subtract_asymptotics: Option<bool>,
    #[serde(default = "yes")]
    pub seed_from_exact: bool,
    #[serde(default = "yes")]
    pub parallel: bool,
    #[serde(default = "default_theta")]
    pub theta_deg: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            tol: default_tol(),
            subtract_asymptotics: None,
            seed_from_exact: true,
            parallel: true,
            theta_deg: default_theta(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    BumpX0,
    MuScaling,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub kind: SweepKind,
    pub x0: Option<Grid>,
    pub mu: Option<Grid>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Value(f64),
    List(Vec<f64>),
    Linear(LinearGrid),
    Log(LogGrid),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearGrid {
    pub from: f64,
    pub to: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogGrid {
    pub from: f64,
    pub to: f64,
    pub per_decade: u32,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
}

fn one() -> f64 {
    1.0
}
fn one_u32() -> u32 {
    1
}
fn one_i8() -> i8 {
    1
}
fn yes() -> bool {
    true
}
fn no_parity() -> ParityChoice {
    ParityChoice::None
}
fn default_w() -> f64 {
    0.1
}
fn default_a() -> f64 {
    1.6
}
fn default_l() -> f64 {
    5.0
}
fn default_k_max() -> usize {
    4
}
fn default_tol() -> f64 {
    1e-12
}
fn default_theta() -> f64 {
    60.0
}

impl Grid {
    /// Grid points in ascending order, duplicates removed.
    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        let mut v = match self {
            Grid::Value(x) => vec![*x],
            Grid::List(xs) => xs.clone(),
            Grid::Linear(g) => {
                if !(g.step > 0.0) || !(g.to >= g.from) {
                    return Err(CliError::Input(format!("linear grid needs step > 0 and to ≥ from, got {g:?}")));
                }
                let n = ((g.to - g.from) / g.step + 1e-9).floor() as usize;
                // rounding keeps decimal grids like 0.05, 0.10, … exact in the output
                (0..=n).map(|k| ((g.from + k as f64 * g.step) * 1e12).round() / 1e12).collect()
            }
            Grid::Log(g) => {
                if !(g.from > 0.0 && g.to >= g.from && g.per_decade > 0) {
                    return Err(CliError::Input(format!("log grid needs 0 < from ≤ to and per_decade > 0, got {g:?}")));
                }
                let n = ((g.to / g.from).log10() * g.per_decade as f64 + 1e-9).floor() as i32;
                (0..=n).map(|k| g.from * 10f64.powf(k as f64 / g.per_decade as f64)).collect()
            }
        };
        if v.iter().any(|x| !x.is_finite()) {
            return Err(CliError::Input("grid values must be finite".into()));
        }
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v.dedup();
        Ok(v)
    }

    pub fn single(&self, what: &str) -> Result<f64, CliError> {
        match self.points()?.as_slice() {
            [x] => Ok(*x),
            _ => Err(CliError::Input(format!("{what} must be a single value for this sweep"))),
        }
    }
}

impl RunFile {
    pub fn parse(text: &str) -> Result<RunFile, CliError> {
        let rf: RunFile = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        rf.validate()?;
        Ok(rf)
    }

    pub fn load(path: &Path) -> Result<RunFile, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        RunFile::parse(&text).map_err(|e| match e {
            CliError::Parse(m) => CliError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    fn validate(&self) -> Result<(), CliError> {
        let s = &self.solver;
        if !(s.tol > 0.0) {
            return Err(CliError::Input(format!("solver.tol must be > 0, got {}", s.tol)));
        }
        if let Some(t) = self.domain.tail_tol {
            if !(t > 0.0) {
                return Err(CliError::Input(format!("domain.tail_tol must be > 0, got {t}")));
            }
        }
        if self.mode.count == 0 {
            return Err(CliError::Input("mode.count must be at least 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const STEP: &str = "[potential]\nkind = \"step\"\nv0 = 100.0\nb = 1.0\n";

    #[test]
    fn defaults_fill_in() {
        let rf = RunFile::parse(STEP).unwrap();
        assert_eq!(rf.domain.a, 1.6);
        assert_eq!(rf.mode.root_index, 1);
        assert_eq!(rf.solver.subtract_asymptotics, None);
        assert!(rf.solver.seed_from_exact);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for extra in ["[mode]\nrootindex = 2\n", "[solver]\nspeed = 1\n", "[extra]\n", "[sweep]\nkind = \"bump-x0\"\nx = 1\n"] {
            assert!(matches!(RunFile::parse(&format!("{STEP}{extra}")), Err(CliError::Parse(_))), "{extra}");
        }
    }

    #[test]
    fn grids() {
        let lin = Grid::Linear(LinearGrid { from: 0.05, to: 0.95, step: 0.05 }).points().unwrap();
        assert_eq!(lin.len(), 19);
        assert_eq!(lin[5], 0.3);
        let log = Grid::Log(LogGrid { from: 1e-3, to: 1e-1, per_decade: 4 }).points().unwrap();
        assert_eq!(log.len(), 9);
        assert!((log[8] - 0.1).abs() < 1e-15);
        assert_eq!(Grid::List(vec![0.3, 0.1, 0.3]).points().unwrap(), vec![0.1, 0.3]);
        assert!(Grid::List(vec![0.1, 0.2]).single("x").is_err());
        assert!(Grid::Linear(LinearGrid { from: 0.0, to: 1.0, step: 0.0 }).points().is_err());
    }

    #[test]
    fn grid_forms_parse() {
        let rf = RunFile::parse(&format!(
            "{STEP}[sweep]\nkind = \"mu-scaling\"\nx0 = 0.3\nmu = {{ from = 1e-3, to = 1e-1, per_decade = 2 }}\n"
        ))
        .unwrap();
        let sw = rf.sweep.unwrap();
        assert_eq!(sw.kind, SweepKind::MuScaling);
        assert_eq!(sw.x0.unwrap().single("x0").unwrap(), 0.3);
        assert_eq!(sw.mu.unwrap().points().unwrap().len(), 5);
    }

    #[test]
    fn sum_terms_nest() {
        let rf = RunFile::parse(
            "[potential]\nkind = \"sum\"\n[[potential.terms]]\nkind = \"step\"\nv0 = 1.0\nb = 1.0\n\
             [[potential.terms]]\nkind = \"bump\"\nx0 = 0.3\nw = 0.1\n",
        )
        .unwrap();
        match rf.potential {
            PotentialSection::Sum { terms } => assert_eq!(terms.len(), 2),
            other => panic!("{other:?}"),
        }
    }
}
