use actions::{FlywheelParams, JumpParams};
use replay_sim::{SimConfig, StabilizerConfig};
use serde::{Deserialize, Serialize};
use template_model::TemplateParams;

/// One JSON document with sections mirroring the module parameter types.
/// Every section is optional; omitted sections take the built-in defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub template: TemplateParams,
    pub squat: JumpParams,
    pub half_squat: JumpParams,
    pub flywheel: FlywheelParams,
    pub solver: SolverSection,
    pub sim: SimConfig,
    pub stabilizer: StabilizerConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub tol: f64,
    pub feas_tol: f64,
    pub max_iter: usize,
    /// Force central finite differences instead of the problem's own
    /// derivative callbacks.
    pub finite_differences: bool,
    pub trust_radius: f64,
    pub verbosity: u32,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            feas_tol: 1e-8,
            max_iter: 500,
            finite_differences: false,
            trust_radius: 5.0,
            verbosity: 0,
        }
    }
}

impl SolverSection {
    pub fn to_options(&self, log_path: Option<std::path::PathBuf>) -> nlp_solver::SolveOptions {
        nlp_solver::SolveOptions {
            tol: self.tol,
            feas_tol: self.feas_tol,
            max_iter: self.max_iter,
            force_fd: self.finite_differences,
            trust_radius: self.trust_radius,
            verbosity: self.verbosity,
            log_path,
            ..nlp_solver::SolveOptions::default()
        }
    }
}

impl Config {
    pub fn load(path: &std::path::Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        serde_json::from_str(&text)
            .map_err(|e| anyhow::anyhow!("config {}: {e}", path.display()))
    }
}
