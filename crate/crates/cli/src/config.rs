use std::path::{Path, PathBuf};

use cxdisc::analysis::{default_delta_grid, AspWindow};
use cxdisc::bathmap::SpectralDensity;
use cxdisc::models::{golden_beta, CouplingConjugation, GaahParams};
use cxdisc::oracle::{KernelMode, MemoryCoupling, VolterraConfig, VolterraScheme};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    QuadDump,
    CquadDump,
    BathDump,
    Dephasing,
    GaahSurvival,
    GaahLongtime,
    AspDiagram,
    Oracle,
    Compare,
}

impl Experiment {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::QuadDump => "quad-dump",
            Self::CquadDump => "cquad-dump",
            Self::BathDump => "bath-dump",
            Self::Dephasing => "dephasing",
            Self::GaahSurvival => "gaah-survival",
            Self::GaahLongtime => "gaah-longtime",
            Self::AspDiagram => "asp-diagram",
            Self::Oracle => "oracle",
            Self::Compare => "compare",
        }
    }
}

/// Lattice parameters of the gAAH model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub n_s: usize,
    pub delta: f64,
    pub beta: f64,
    pub phi: f64,
    pub a: f64,
    pub hopping: f64,
    /// Index (ascending energy) of the initial eigenstate; the highest when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<usize>,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            n_s: 21,
            delta: 1.0,
            beta: golden_beta(),
            phi: std::f64::consts::PI,
            a: 0.0,
            hopping: 1.0,
            state: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BathSection {
    pub eta: f64,
    pub omega_c: f64,
    pub s: f64,
    pub n_k: usize,
    pub radius: f64,
    /// `real` or `complex`.
    pub kind: String,
    /// `conjugate` or `transpose`.
    pub coupling_conjugation: String,
}

impl Default for BathSection {
    fn default() -> Self {
        Self {
            eta: 0.1,
            omega_c: 10.0,
            s: 1.0,
            n_k: 40,
            radius: 2.0,
            kind: "complex".into(),
            coupling_conjugation: CouplingConjugation::default().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeSection {
    pub t_min: f64,
    pub t_max: f64,
    pub dt_out: f64,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self { t_min: 0.0, t_max: 200.0, dt_out: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    pub dt: f64,
    /// `modal-gregory` or `heun-trapezoid`.
    pub scheme: String,
    /// `analytic` or `numeric`.
    pub kernel: String,
    /// `common` or `independent`.
    pub memory_term: String,
    pub check_halving: bool,
}

impl Default for OracleSection {
    fn default() -> Self {
        let c = VolterraConfig::default();
        Self {
            dt: c.dt,
            scheme: c.scheme.to_string(),
            kernel: c.kernel_mode.to_string(),
            memory_term: c.coupling.to_string(),
            check_halving: c.check_halving,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AspSection {
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    pub deltas: Vec<f64>,
}

impl Default for AspSection {
    fn default() -> Self {
        let w = AspWindow::default();
        Self { t0: w.t0, t1: w.t1, dt: w.dt, deltas: default_delta_grid() }
    }
}

/// Complete description of one run; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub bath: BathSection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub asp: AspSection,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// Output table path
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub n_s: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub hopping: Option<f64>,
    /// Initial eigenstate index in ascending energy order
    #[arg(long)]
    pub state: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub eta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub omega_c: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub s: Option<f64>,
    #[arg(long)]
    pub n_k: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub radius: Option<f64>,
    /// real | complex
    #[arg(long)]
    pub kind: Option<String>,
    /// conjugate | transpose
    #[arg(long)]
    pub coupling_conjugation: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub t_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub t_max: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub dt_out: Option<f64>,
    /// Oracle time step
    #[arg(long, allow_hyphen_values = true)]
    pub dt: Option<f64>,
    /// modal-gregory | heun-trapezoid
    #[arg(long)]
    pub scheme: Option<String>,
    /// analytic | numeric
    #[arg(long)]
    pub kernel: Option<String>,
    /// common | independent
    #[arg(long)]
    pub memory_term: Option<String>,
    #[arg(long)]
    pub check_halving: Option<bool>,
    #[arg(long, allow_hyphen_values = true)]
    pub asp_t0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub asp_t1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub asp_dt: Option<f64>,
    /// Comma-separated potential strengths for the ASP sweep
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub deltas: Option<Vec<f64>>,
}

macro_rules! apply {
    ($src:expr, $dst:expr, $($field:ident => $target:expr),* $(,)?) => {
        $(if let Some(v) = $src.$field.clone() { $target = v; })*
    };
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            output: None,
            model: ModelSection::default(),
            bath: BathSection::default(),
            time: TimeSection::default(),
            oracle: OracleSection::default(),
            asp: AspSection::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always serializable")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(p) = &o.output {
            self.output = Some(p.clone());
        }
        if o.state.is_some() {
            self.model.state = o.state;
        }
        apply!(o, self,
            n_s => self.model.n_s,
            delta => self.model.delta,
            beta => self.model.beta,
            phi => self.model.phi,
            a => self.model.a,
            hopping => self.model.hopping,
            eta => self.bath.eta,
            omega_c => self.bath.omega_c,
            s => self.bath.s,
            n_k => self.bath.n_k,
            radius => self.bath.radius,
            kind => self.bath.kind,
            coupling_conjugation => self.bath.coupling_conjugation,
            t_min => self.time.t_min,
            t_max => self.time.t_max,
            dt_out => self.time.dt_out,
            dt => self.oracle.dt,
            scheme => self.oracle.scheme,
            kernel => self.oracle.kernel,
            memory_term => self.oracle.memory_term,
            check_halving => self.oracle.check_halving,
            asp_t0 => self.asp.t0,
            asp_t1 => self.asp.t1,
            asp_dt => self.asp.dt,
            deltas => self.asp.deltas,
        );
    }

    pub fn output_path(&self) -> PathBuf {
        self.output
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("{}.csv", self.experiment.as_str())))
    }

    /// Checks every field against the preconditions of the modules it feeds.
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let field = |name: &str, msg: String| CliError::Config(format!("{name}: {msg}"));
        let m = &self.model;
        let b = &self.bath;
        let t = &self.time;

        let lattice = GaahParams {
            n_s: m.n_s,
            delta: m.delta,
            beta: m.beta,
            phi: m.phi,
            a: m.a,
            hopping: m.hopping,
        };
        lattice.validate().map_err(|e| field("model", e.to_string()))?;
        let state = match m.state {
            Some(i) if i >= m.n_s => {
                return Err(field("model.state", format!("index {i} out of range for n_s = {}", m.n_s)))
            }
            Some(i) => i,
            None => m.n_s - 1,
        };

        let sd = SpectralDensity::new(b.eta, b.omega_c, b.s).map_err(|e| field("bath", e.to_string()))?;
        if b.n_k == 0 {
            return Err(field("bath.n_k", "must be at least 1".into()));
        }
        if !(b.radius > 0.0) || !b.radius.is_finite() {
            return Err(field("bath.radius", format!("must be positive, got {}", b.radius)));
        }
        let kind = match b.kind.as_str() {
            "real" => BathChoice::Real,
            "complex" => BathChoice::Complex,
            other => return Err(field("bath.kind", format!("must be real or complex, got {other:?}"))),
        };
        let conjugation: CouplingConjugation = b
            .coupling_conjugation
            .parse()
            .map_err(|e: cxdisc::Error| field("bath.coupling_conjugation", e.to_string()))?;

        if !(t.t_min >= 0.0) || !t.t_min.is_finite() {
            return Err(field("time.t_min", format!("must be non-negative, got {}", t.t_min)));
        }
        if !(t.t_max > t.t_min) || !t.t_max.is_finite() {
            return Err(field("time.t_max", format!("must exceed t_min, got {}", t.t_max)));
        }
        if !(t.dt_out > 0.0) || !t.dt_out.is_finite() {
            return Err(field("time.dt_out", format!("must be positive, got {}", t.dt_out)));
        }
        let span = (t.t_max - t.t_min) / t.dt_out;
        if (span - span.round()).abs() > 1e-9 * span.max(1.0) {
            return Err(field("time.dt_out", "t_max - t_min must be a multiple of dt_out".into()));
        }

        let o = &self.oracle;
        let volterra = VolterraConfig {
            dt: o.dt,
            t_max: t.t_max,
            dt_out: t.dt_out,
            scheme: o
                .scheme
                .parse::<VolterraScheme>()
                .map_err(|e| field("oracle.scheme", e.to_string()))?,
            kernel_mode: o
                .kernel
                .parse::<KernelMode>()
                .map_err(|e| field("oracle.kernel", e.to_string()))?,
            coupling: o
                .memory_term
                .parse::<MemoryCoupling>()
                .map_err(|e| field("oracle.memory_term", e.to_string()))?,
            check_halving: o.check_halving,
        };
        if !(o.dt > 0.0) || !o.dt.is_finite() {
            return Err(field("oracle.dt", format!("must be positive, got {}", o.dt)));
        }

        let window = AspWindow { t0: self.asp.t0, t1: self.asp.t1, dt: self.asp.dt };
        if !(window.t0 >= 0.0) || !(window.t1 > window.t0) || !(window.dt > 0.0) {
            return Err(field("asp", format!("need 0 <= t0 < t1 and dt > 0, got {window:?}")));
        }
        if self.asp.deltas.is_empty() {
            return Err(field("asp.deltas", "must list at least one value".into()));
        }

        Ok(Resolved {
            experiment: self.experiment,
            lattice,
            state,
            sd,
            n_k: b.n_k,
            radius: b.radius,
            kind,
            conjugation,
            t_min: t.t_min,
            t_max: t.t_max,
            dt_out: t.dt_out,
            volterra,
            window,
            deltas: self.asp.deltas.clone(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BathChoice {
    Real,
    Complex,
}

/// Validated parameters in the library's own types.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub experiment: Experiment,
    pub lattice: GaahParams,
    pub state: usize,
    pub sd: SpectralDensity,
    pub n_k: usize,
    pub radius: f64,
    pub kind: BathChoice,
    pub conjugation: CouplingConjugation,
    pub t_min: f64,
    pub t_max: f64,
    pub dt_out: f64,
    pub volterra: VolterraConfig,
    pub window: AspWindow,
    pub deltas: Vec<f64>,
}

impl Resolved {
    /// Output sample times `t_min, t_min + dt_out, …, t_max`.
    pub fn times(&self) -> Vec<f64> {
        let n = ((self.t_max - self.t_min) / self.dt_out).round() as usize;
        (0..=n).map(|k| self.t_min + k as f64 * self.dt_out).collect()
    }
}
