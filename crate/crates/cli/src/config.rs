//! Run configuration: one JSON file, validated before any computation.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use num_complex::Complex64;
use qsteer_core::bounds::{resonance_witness, CORRECTION_HORIZON};
use qsteer_core::propagator::{default_dt, IntegrationOptions, Scheme, RESOLUTION_LIMIT};
use qsteer_core::spectral::{coupling_x2, eigenvalue};
use qsteer_core::{ConstantsMode, CouplingOperator, SteeringMode, SteeringPlan};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorSource {
    XSquared,
    /// A `CouplingOperator` JSON file.
    File { path: PathBuf },
}

/// All fields are optional in the file; missing ones take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub j: usize,
    pub k: usize,
    pub n: u64,
    /// Base level for `moments`.
    pub l: usize,
    pub mode: SteeringMode,
    pub constants_mode: ConstantsMode,
    /// Run phase 1 only.
    pub approximate_only: bool,
    pub operator: OperatorSource,
    pub cutoff: usize,
    pub dt: Option<f64>,
    pub scheme: Scheme,
    pub unitarity_tol: f64,
    pub rk_tol: f64,
    pub corrector_tol: f64,
    pub max_newton_iters: usize,
    pub scan_points: usize,
    pub n_budget: u64,
    /// Moment horizon; `4/π` when absent.
    pub horizon: Option<f64>,
    /// Moment targets `[re, im]`, one per level up to the cutoff.
    pub targets: Vec<[f64; 2]>,
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            j: 2,
            k: 1,
            n: 100,
            l: 1,
            mode: SteeringMode::Practical,
            constants_mode: ConstantsMode::Scanned,
            approximate_only: false,
            operator: OperatorSource::XSquared,
            cutoff: 12,
            dt: None,
            scheme: Scheme::ExpMidpoint,
            unitarity_tol: 1e-9,
            rk_tol: 1e-10,
            corrector_tol: 1e-8,
            max_newton_iters: 20,
            scan_points: 64,
            n_budget: 4096,
            horizon: None,
            targets: Vec::new(),
            out_dir: None,
        }
    }
}

/// What a command needs from the configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Needs {
    Pair,
    Moments,
    Nothing,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    pub fn options(&self) -> IntegrationOptions {
        IntegrationOptions {
            dt: self.dt,
            scheme: self.scheme,
            unitarity_tol: self.unitarity_tol,
            record_stride: None,
            rk_tol: self.rk_tol,
        }
    }

    pub fn plan(&self) -> SteeringPlan {
        SteeringPlan {
            j: self.j,
            k: self.k,
            n: self.n,
            mode: self.mode,
            constants_mode: self.constants_mode,
            scan_points: self.scan_points,
            corrector_tol: self.corrector_tol,
            max_newton_iters: self.max_newton_iters,
            n_budget: self.n_budget,
            options: self.options(),
        }
    }

    pub fn operator(&self) -> Result<CouplingOperator> {
        match &self.operator {
            OperatorSource::XSquared => Ok(coupling_x2(self.cutoff)),
            OperatorSource::File { path } => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading operator {}", path.display()))?;
                let op: CouplingOperator = serde_json::from_str(&text).context("parsing operator")?;
                if op.cutoff() != self.cutoff {
                    bail!("operator file has cutoff {} but config cutoff is {}", op.cutoff(), self.cutoff);
                }
                Ok(op)
            }
        }
    }

    pub fn horizon(&self) -> f64 {
        self.horizon.unwrap_or(CORRECTION_HORIZON)
    }

    pub fn moment_targets(&self) -> Vec<Complex64> {
        self.targets.iter().map(|&[re, im]| Complex64::new(re, im)).collect()
    }

    /// Checks every field against the preconditions of the command.
    pub fn validate(&self, needs: Needs) -> Result<()> {
        let n = self.cutoff;
        if n == 0 || n > 256 {
            bail!("cutoff {n} must lie in 1..=256");
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                bail!("dt = {dt} must be positive and finite");
            }
            let spread = eigenvalue(n)? - eigenvalue(1)?;
            if self.scheme == Scheme::ExpMidpoint && dt * spread > RESOLUTION_LIMIT {
                bail!("dt = {dt} violates dt·(λ_N − λ₁) ≤ {RESOLUTION_LIMIT}; default would be {:.3e}", default_dt(n));
            }
        }
        for (name, v) in [
            ("unitarity_tol", self.unitarity_tol),
            ("rk_tol", self.rk_tol),
            ("corrector_tol", self.corrector_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                bail!("{name} = {v} must be positive");
            }
        }
        match needs {
            Needs::Pair => {
                if self.j == 0 || self.k == 0 || self.j > n || self.k > n {
                    bail!("levels ({}, {}) must lie in 1..={n}", self.j, self.k);
                }
                if self.j == self.k {
                    bail!("source and target levels coincide ({})", self.j);
                }
                if self.n == 0 {
                    bail!("n must be positive");
                }
                if self.scan_points < 8 {
                    bail!("scan_points = {} is below 8 per period", self.scan_points);
                }
                if self.max_newton_iters == 0 {
                    bail!("max_newton_iters must be positive");
                }
            }
            Needs::Moments => {
                if self.l == 0 || self.l > n {
                    bail!("base level {} must lie in 1..={n}", self.l);
                }
                if let Some((m, p)) = resonance_witness(self.l, 2 * self.l) {
                    bail!("level {} is resonant: {m}² + {p}² = 2·{}²", self.l, self.l);
                }
                if self.targets.len() != n {
                    bail!("expected {n} moment targets, got {}", self.targets.len());
                }
                if self.targets.iter().flatten().any(|x| !x.is_finite()) {
                    bail!("moment targets must be finite");
                }
                if self.targets[self.l - 1][1] != 0.0 {
                    bail!("target x_{} must be real", self.l);
                }
                let h = self.horizon();
                if h.is_nan() || h <= 2.0 / PI {
                    bail!("horizon {h} must exceed 2/π");
                }
            }
            Needs::Nothing => {}
        }
        if let OperatorSource::File { path } = &self.operator {
            if !path.is_file() {
                bail!("operator file {} does not exist", path.display());
            }
        }
        Ok(())
    }
}
