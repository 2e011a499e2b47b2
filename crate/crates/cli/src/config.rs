use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    VerifyAlgebra,
    Figure2,
    Figure3Top,
    Figure3Gap,
    Inset,
    Ed,
    GsCheck,
    Correlators,
    Entanglement,
    EdgeMode,
    Dmrg,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::VerifyAlgebra => "verify-algebra",
            CommandKind::Figure2 => "figure2",
            CommandKind::Figure3Top => "figure3-top",
            CommandKind::Figure3Gap => "figure3-gap",
            CommandKind::Inset => "inset",
            CommandKind::Ed => "ed",
            CommandKind::GsCheck => "gs-check",
            CommandKind::Correlators => "correlators",
            CommandKind::Entanglement => "entanglement",
            CommandKind::EdgeMode => "edge-mode",
            CommandKind::Dmrg => "dmrg",
        }
    }

    /// Config fields the command reads, besides `command`, `output` and `seed`.
    fn fields(self) -> &'static [&'static str] {
        match self {
            CommandKind::VerifyAlgebra => &["L", "phi", "tol"],
            CommandKind::Figure2 => &["L", "phi"],
            CommandKind::Figure3Top => &["L", "phi"],
            CommandKind::Figure3Gap => {
                &["L", "phi", "chi_max", "max_sweeps", "energy_tol", "cutoff"]
            }
            CommandKind::Inset => &["Lmax", "phi", "with_boundary"],
            CommandKind::Ed => &["L", "phi", "levels", "with_boundary", "tol", "max_iter"],
            CommandKind::GsCheck => &["L", "phi", "i"],
            CommandKind::Correlators => &["L", "phi", "i", "ell"],
            CommandKind::Entanglement => &["L", "phi", "i", "ell"],
            CommandKind::EdgeMode => &["L", "phi", "alpha"],
            CommandKind::Dmrg => &[
                "L",
                "phi",
                "i",
                "chi_max",
                "max_sweeps",
                "energy_tol",
                "cutoff",
            ],
        }
    }

    pub fn default_format(self) -> Format {
        match self {
            CommandKind::GsCheck | CommandKind::EdgeMode => Format::Json,
            _ => Format::Csv,
        }
    }
}

impl fmt::Display for CommandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub chi_max: Option<usize>,
    pub max_sweeps: Option<usize>,
    pub energy_tol: Option<f64>,
    pub cutoff: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
    pub manifest: Option<PathBuf>,
}

/// One experiment as written in a TOML file or assembled from flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: CommandKind,
    pub phi: Option<Vec<f64>>,
    #[serde(rename = "L")]
    pub sites: Option<Vec<usize>>,
    #[serde(rename = "Lmax")]
    pub lmax: Option<usize>,
    #[serde(rename = "i")]
    pub charge: Option<Vec<u8>>,
    /// Inclusive `[first, last]` range of `ℓ`.
    pub ell: Option<[usize; 2]>,
    pub alpha: Option<Vec<f64>>,
    pub levels: Option<usize>,
    pub with_boundary: Option<bool>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
    pub seed: Option<u64>,
}

impl ExperimentConfig {
    pub fn new(command: CommandKind) -> Self {
        Self {
            command,
            phi: None,
            sites: None,
            lmax: None,
            charge: None,
            ell: None,
            alpha: None,
            levels: None,
            with_boundary: None,
            solver: SolverConfig::default(),
            output: OutputConfig::default(),
            seed: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| {
            let message = e.message().to_string();
            let unknown = message
                .strip_prefix("unknown field `")
                .and_then(|rest| rest.split('`').next())
                .map(str::to_string);
            let line = match &unknown {
                Some(key) => find_line(text, key),
                None => e.span().map(|s| text[..s.start].matches('\n').count() + 1),
            };
            ConfigError::single(Diagnostic {
                field: unknown.unwrap_or_else(|| String::from("(syntax)")),
                line,
                message,
            })
        })
    }

    pub fn load(path: &Path) -> Result<(Self, String), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            ConfigError::single(Diagnostic {
                field: path.display().to_string(),
                line: None,
                message: e.to_string(),
            })
        })?;
        Ok((Self::from_toml(&text)?, text))
    }

    fn present(&self) -> Vec<&'static str> {
        let s = &self.solver;
        [
            ("phi", self.phi.is_some()),
            ("L", self.sites.is_some()),
            ("Lmax", self.lmax.is_some()),
            ("i", self.charge.is_some()),
            ("ell", self.ell.is_some()),
            ("alpha", self.alpha.is_some()),
            ("levels", self.levels.is_some()),
            ("with_boundary", self.with_boundary.is_some()),
            ("tol", s.tol.is_some()),
            ("max_iter", s.max_iter.is_some()),
            ("chi_max", s.chi_max.is_some()),
            ("max_sweeps", s.max_sweeps.is_some()),
            ("energy_tol", s.energy_tol.is_some()),
            ("cutoff", s.cutoff.is_some()),
        ]
        .into_iter()
        .filter_map(|(k, set)| set.then_some(k))
        .collect()
    }

    /// Fills in per-command defaults and checks every field before any work
    /// starts. `source` is the TOML text, used to attach line numbers.
    pub fn resolve(&self, source: Option<&str>) -> Result<Experiment, ConfigError> {
        let kind = self.command;
        let mut diags = Vec::new();
        let mut bad = |field: &str, message: String| {
            diags.push(Diagnostic {
                field: field.to_string(),
                line: source.and_then(|s| find_line(s, field)),
                message,
            })
        };
        for f in self.present() {
            if !kind.fields().contains(&f) {
                bad(f, format!("not used by `{kind}`"));
            }
        }

        let phi = self.phi.clone().unwrap_or_else(|| default_phi(kind));
        if phi.is_empty() {
            bad("phi", "list is empty".into());
        }
        if let Some(x) = phi.iter().find(|x| !x.is_finite()) {
            bad("phi", format!("{x} is not finite"));
        }
        if kind == CommandKind::Inset && phi.contains(&0.0) {
            bad(
                "phi",
                "the inset needs φ ≠ 0 (all splittings vanish at φ = 0)".into(),
            );
        }

        let sites = self.sites.clone().unwrap_or_else(|| default_sites(kind));
        let (lo, hi) = site_bounds(kind);
        if sites.is_empty() {
            bad("L", "list is empty".into());
        }
        for &l in &sites {
            if l < lo || l > hi {
                bad("L", format!("{l} outside {lo}..={hi} for `{kind}`"));
            }
        }

        let lmax = self.lmax.unwrap_or(400);
        if !(4..=2000).contains(&lmax) {
            bad("Lmax", format!("{lmax} outside 4..=2000"));
        }

        let charge = self.charge.clone().unwrap_or_else(|| default_charge(kind));
        if charge.is_empty() {
            bad("i", "list is empty".into());
        }
        if let Some(q) = charge.iter().find(|&&q| q > 2) {
            bad("i", format!("charge {q} is not 0, 1 or 2"));
        }

        if let Some([a, b]) = self.ell {
            let min_l = sites.iter().copied().min().unwrap_or(0);
            if a == 0 || a > b {
                bad("ell", format!("[{a}, {b}] is not a range 1 ≤ first ≤ last"));
            } else if b > min_l {
                bad(
                    "ell",
                    format!("last = {b} exceeds the smallest L = {min_l}"),
                );
            }
        }

        let alpha = self.alpha.clone().unwrap_or_else(|| vec![0.01, 0.02, 0.04]);
        if alpha.len() < 2 {
            bad("alpha", "need at least two values for a slope".into());
        }
        if let Some(a) = alpha
            .iter()
            .find(|a| !(a.is_finite() && **a > 0.0 && **a < 1.0))
        {
            bad("alpha", format!("{a} outside (0, 1)"));
        }
        if kind == CommandKind::EdgeMode && phi.len() < 2 {
            bad("phi", "need at least two values for a slope".into());
        }
        if kind == CommandKind::EdgeMode && phi.iter().any(|p| *p <= 0.0) {
            bad("phi", "edge-mode deviations need φ > 0".into());
        }

        let levels = self.levels.unwrap_or(4);
        if levels == 0 {
            bad("levels", "must be positive".into());
        }

        let with_boundary = self.with_boundary.unwrap_or(kind != CommandKind::Inset);

        let s = &self.solver;
        let tol = s.tol.unwrap_or(if kind == CommandKind::VerifyAlgebra {
            1e-10
        } else {
            1e-9
        });
        let max_iter = s.max_iter.unwrap_or(4000);
        let chi_max = s.chi_max.unwrap_or(60);
        let max_sweeps = s.max_sweeps.unwrap_or(40);
        let gap_scan = kind == CommandKind::Figure3Gap;
        let energy_tol = s.energy_tol.unwrap_or(if gap_scan { 1e-5 } else { 1e-10 });
        let cutoff = s.cutoff.unwrap_or(if gap_scan { 1e-10 } else { 1e-14 });
        for (name, v) in [("tol", tol), ("energy_tol", energy_tol)] {
            if !(v.is_finite() && v > 0.0) {
                bad(name, format!("{v} must be positive"));
            }
        }
        if !(cutoff.is_finite() && cutoff >= 0.0) {
            bad("cutoff", format!("{cutoff} must be non-negative"));
        }
        if max_iter == 0 {
            bad("max_iter", "must be positive".into());
        }
        if chi_max < 3 {
            bad("chi_max", format!("{chi_max} < 3"));
        }
        if max_sweeps == 0 {
            bad("max_sweeps", "must be positive".into());
        }

        let format = self.output.format.unwrap_or(kind.default_format());
        if kind == CommandKind::EdgeMode && format == Format::Csv {
            bad("format", "edge-mode emits a JSON report only".into());
        }

        if !diags.is_empty() {
            return Err(ConfigError { diagnostics: diags });
        }
        let ell = self.ell.map(|[a, b]| (a, b));
        Ok(Experiment {
            command: kind,
            phi,
            sites,
            lmax,
            charge,
            ell,
            alpha,
            levels,
            with_boundary,
            tol,
            max_iter,
            chi_max,
            max_sweeps,
            energy_tol,
            cutoff,
            seed: self.seed.unwrap_or(7),
            format,
            output: self.output.path.clone(),
            manifest: self.output.manifest.clone(),
        })
    }
}

fn default_phi(kind: CommandKind) -> Vec<f64> {
    match kind {
        CommandKind::Figure3Gap => (0..13).map(|k| -2.0 + 5.0 * k as f64 / 12.0).collect(),
        CommandKind::Inset => vec![1e-4, 1e-3, 1e-2],
        CommandKind::EdgeMode => vec![0.01, 0.02, 0.04],
        CommandKind::Ed
        | CommandKind::Correlators
        | CommandKind::Entanglement
        | CommandKind::Dmrg => vec![0.5],
        _ => vec![-1.0, 0.5, 2.0],
    }
}

fn default_sites(kind: CommandKind) -> Vec<usize> {
    match kind {
        CommandKind::VerifyAlgebra => vec![4],
        CommandKind::Figure2 => vec![120],
        CommandKind::Figure3Top => vec![60],
        CommandKind::Figure3Gap => vec![48],
        CommandKind::GsCheck => (3..=8).collect(),
        CommandKind::Correlators | CommandKind::Entanglement => vec![12],
        CommandKind::EdgeMode => vec![4],
        CommandKind::Dmrg => vec![16],
        CommandKind::Ed | CommandKind::Inset => vec![6],
    }
}

fn default_charge(kind: CommandKind) -> Vec<u8> {
    match kind {
        CommandKind::Correlators | CommandKind::Entanglement => vec![0],
        _ => vec![0, 1, 2],
    }
}

fn site_bounds(kind: CommandKind) -> (usize, usize) {
    match kind {
        CommandKind::VerifyAlgebra => (1, 4),
        CommandKind::Ed | CommandKind::GsCheck | CommandKind::EdgeMode => (2, 64),
        CommandKind::Figure3Gap | CommandKind::Dmrg => (4, 400),
        _ => (2, 2000),
    }
}

fn find_line(source: &str, field: &str) -> Option<usize> {
    source
        .lines()
        .position(|l| {
            let t = l.trim_start();
            t.strip_prefix(field)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map(|k| k + 1)
}

/// A fully specified experiment: every default filled in.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Experiment {
    pub command: CommandKind,
    pub phi: Vec<f64>,
    #[serde(rename = "L")]
    pub sites: Vec<usize>,
    #[serde(rename = "Lmax")]
    pub lmax: usize,
    #[serde(rename = "i")]
    pub charge: Vec<u8>,
    pub ell: Option<(usize, usize)>,
    pub alpha: Vec<f64>,
    pub levels: usize,
    pub with_boundary: bool,
    pub tol: f64,
    pub max_iter: usize,
    pub chi_max: usize,
    pub max_sweeps: usize,
    pub energy_tol: f64,
    pub cutoff: f64,
    pub seed: u64,
    pub format: Format,
    #[serde(skip)]
    pub output: Option<PathBuf>,
    #[serde(skip)]
    pub manifest: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub field: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}, field `{}`: {}", self.field, self.message),
            None => write!(f, "field `{}`: {}", self.field, self.message),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct ConfigError {
    pub diagnostics: Vec<Diagnostic>,
}

impl ConfigError {
    fn single(d: Diagnostic) -> Self {
        Self {
            diagnostics: vec![d],
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, d) in self.diagnostics.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let e = ExperimentConfig::new(CommandKind::Figure3Gap)
            .resolve(None)
            .unwrap();
        assert_eq!(e.phi.len(), 13);
        assert_eq!(e.phi[0], -2.0);
        assert_eq!(e.phi[12], 3.0);
        assert_eq!(e.sites, vec![48]);
        assert_eq!(e.energy_tol, 1e-5);
        assert!(
            !ExperimentConfig::new(CommandKind::Inset)
                .resolve(None)
                .unwrap()
                .with_boundary
        );
    }

    #[test]
    fn parses_toml_and_reports_lines() {
        let text = "command = \"ed\"\nL = [4]\nphi = [0.5]\n\n[solver]\ntol = -1.0\n";
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        let err = cfg.resolve(Some(text)).unwrap_err();
        assert_eq!(err.diagnostics.len(), 1);
        assert_eq!(err.diagnostics[0].field, "tol");
        assert_eq!(err.diagnostics[0].line, Some(6));
    }

    #[test]
    fn unknown_and_unused_fields_are_rejected() {
        let err = ExperimentConfig::from_toml("command = \"ed\"\nbogus = 1\n").unwrap_err();
        assert_eq!(err.diagnostics[0].line, Some(2));
        let err = ExperimentConfig::from_toml("command = \"ed\"\nL = [4\n").unwrap_err();
        assert_eq!(err.diagnostics[0].field, "(syntax)");
        assert!(err.diagnostics[0].line.is_some());
        let text = "command = \"ed\"\nalpha = [0.1, 0.2]\n";
        let err = ExperimentConfig::from_toml(text)
            .unwrap()
            .resolve(Some(text))
            .unwrap_err();
        assert_eq!(err.diagnostics[0].field, "alpha");
        assert_eq!(err.diagnostics[0].line, Some(2));
    }

    #[test]
    fn collects_every_problem() {
        let mut c = ExperimentConfig::new(CommandKind::Dmrg);
        c.sites = Some(vec![3]);
        c.charge = Some(vec![4]);
        c.solver.chi_max = Some(2);
        let err = c.resolve(None).unwrap_err();
        let fields: Vec<&str> = err.diagnostics.iter().map(|d| d.field.as_str()).collect();
        assert_eq!(fields, ["L", "i", "chi_max"]);
    }
}
