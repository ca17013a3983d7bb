//! JSON experiment configuration.
//!
//! Every field has a default, so `{}` is the diamond experiment: a square
//! inclusion of conductivity 2 with vertices `(±0.2, 0)`, `(0, ±0.2)` in the
//! unit disk. Angles are in radians, lengths in domain units.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use enclosure_core::geometry::{check_geometric_condition, GeometricCondition, Inclusion};
use enclosure_core::probe::{check_tau_grid, BisectionOptions, FitModel, SlopeOptions};
use enclosure_core::{DomainSpec, InclusionSet, Polygon, Vec2};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{config_error, CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub domain: DomainConfig,
    pub inclusions: Vec<InclusionConfig>,
    pub poles: PoleConfig,
    pub tau_grid: Vec<f64>,
    /// The first value is used for slope fits.
    pub t_values: Vec<f64>,
    /// Uniform directions used by `reconstruct`.
    pub direction_count: usize,
    /// Direction angles swept by `indicator`.
    pub indicator_directions: Vec<f64>,
    pub mesh: MeshConfig,
    pub fit: FitConfig,
    pub bisection: BisectionConfig,
    pub verify: VerifyConfig,
    pub oracle: OracleConfig,
    pub tolerances: Tolerances,
    pub output_dir: PathBuf,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DomainConfig {
    pub center: [f64; 2],
    pub radius: f64,
    pub boundary_resolution: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InclusionConfig {
    pub vertices: Vec<[f64; 2]>,
    pub conductivity: f64,
}

/// Boundary angles of the measurement points `P` and `Q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PoleConfig {
    pub p_angle: f64,
    pub q_angle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshConfig {
    pub h_target: f64,
    /// Read this mesh instead of generating one; relative paths are taken
    /// from the config file's directory.
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitModelName {
    Exponential,
    ExponentialAlgebraic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    pub model: FitModelName,
    pub min_window: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BisectionConfig {
    pub tau_pair: [f64; 2],
    pub t_range: [f64; 2],
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub taus: Vec<f64>,
    pub direction_angle: f64,
    pub t: f64,
    /// Also rerun the representation check at `h_target / 2` and require
    /// the median discrepancy to drop by `refinement_factor`.
    pub refinement: bool,
    pub refinement_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    pub rho: f64,
    pub conductivity: f64,
    pub modes: Vec<u32>,
    pub h_target: f64,
    pub boundary_resolution: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub cg_rel_tol: f64,
    pub noise_floor: f64,
    /// Rotation, in degrees, replacing a non-regular direction.
    pub perturbation_deg: f64,
    pub weak_form: f64,
    pub representation_median: f64,
    pub volume_boundary_gap: f64,
    pub oracle_rel: f64,
    pub hausdorff: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            domain: DomainConfig::default(),
            inclusions: vec![InclusionConfig {
                vertices: vec![[0.2, 0.0], [0.0, 0.2], [-0.2, 0.0], [0.0, -0.2]],
                conductivity: 2.0,
            }],
            poles: PoleConfig::default(),
            tau_grid: (1..=10).map(|k| 2.0 * k as f64).collect(),
            t_values: vec![0.0],
            direction_count: 16,
            indicator_directions: vec![0.0],
            mesh: MeshConfig::default(),
            fit: FitConfig::default(),
            bisection: BisectionConfig::default(),
            verify: VerifyConfig::default(),
            oracle: OracleConfig::default(),
            tolerances: Tolerances::default(),
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

impl Default for DomainConfig {
    fn default() -> Self {
        DomainConfig {
            center: [0.0, 0.0],
            radius: 1.0,
            boundary_resolution: 256,
        }
    }
}

impl Default for PoleConfig {
    fn default() -> Self {
        PoleConfig { p_angle: 0.0, q_angle: PI }
    }
}

impl Default for MeshConfig {
    fn default() -> Self {
        MeshConfig {
            h_target: 0.03,
            file: None,
        }
    }
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            model: FitModelName::Exponential,
            min_window: 4,
        }
    }
}

impl Default for BisectionConfig {
    fn default() -> Self {
        let b = BisectionOptions::default();
        BisectionConfig {
            tau_pair: [b.tau_pair.0, b.tau_pair.1],
            t_range: [0.0, 0.6],
            tol: b.tol,
        }
    }
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            taus: vec![2.0, 4.0, 6.0, 8.0, 10.0],
            direction_angle: 0.0,
            t: 0.0,
            refinement: true,
            refinement_factor: 2.0,
        }
    }
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            rho: 0.5,
            conductivity: 2.0,
            modes: vec![1, 2, 3, 4],
            h_target: 0.02,
            boundary_resolution: 512,
        }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            cg_rel_tol: 1e-12,
            noise_floor: enclosure_core::probe::NOISE_FLOOR,
            perturbation_deg: 2.0,
            weak_form: 5e-2,
            representation_median: 5e-2,
            volume_boundary_gap: 5e-2,
            oracle_rel: 2e-2,
            hausdorff: 0.1,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads a config file; a relative mesh path is resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        if let Some(file) = &cfg.mesh.file {
            if file.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                cfg.mesh.file = Some(base.join(file));
            }
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the compact JSON form, in hex. The output directory does
    /// not affect results and is left out.
    pub fn hash(&self) -> String {
        let mut cfg = self.clone();
        cfg.output_dir = PathBuf::new();
        let compact = serde_json::to_string(&cfg).expect("config serializes");
        Sha256::digest(compact.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn slope_options(&self) -> SlopeOptions {
        SlopeOptions {
            model: match self.fit.model {
                FitModelName::Exponential => FitModel::Exponential,
                FitModelName::ExponentialAlgebraic => FitModel::ExponentialAlgebraic,
            },
            min_window: self.fit.min_window,
            noise_floor: self.tolerances.noise_floor,
            decay_diagnostic: true,
        }
    }

    pub fn bisection_options(&self) -> BisectionOptions {
        BisectionOptions {
            tau_pair: (self.bisection.tau_pair[0], self.bisection.tau_pair[1]),
            tol: self.bisection.tol,
        }
    }

    /// Checks every precondition the numerical modules impose.
    pub fn validate(&self) -> Result<Experiment> {
        let d = &self.domain;
        let dom = DomainSpec::circle(Vec2::new(d.center[0], d.center[1]), d.radius, d.boundary_resolution).map_err(config_error)?;
        let components = self
            .inclusions
            .iter()
            .map(|c| {
                let poly = Polygon::new(c.vertices.iter().map(|v| Vec2::new(v[0], v[1])).collect()).map_err(config_error)?;
                Ok(Inclusion {
                    polygon: poly,
                    conductivity: c.conductivity,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let incl = InclusionSet::new(components).map_err(config_error)?;
        dom.check_contains(&incl).map_err(config_error)?;

        let h = self.mesh.h_target;
        if !(h > 0.0 && h < d.radius) {
            return Err(CliError::Config(format!(
                "precondition violated: mesh h_target must lie in (0, radius), got {h}"
            )));
        }
        if let Some(shortest) = incl.components().iter().map(|c| c.polygon.shortest_edge()).reduce(f64::min) {
            if h >= shortest {
                return Err(CliError::Config(format!(
                    "precondition violated: mesh h_target {h} is not below the shortest inclusion edge {shortest}"
                )));
            }
        }
        check_tau_grid(&self.tau_grid).map_err(config_error)?;
        if self.t_values.is_empty() || self.t_values.iter().any(|t| !t.is_finite()) {
            return Err(CliError::Config("t_values must be a non-empty list of finite numbers".into()));
        }
        if self.direction_count < 3 {
            return Err(CliError::Config("direction_count must be at least 3".into()));
        }
        if self.fit.min_window < 4 {
            return Err(CliError::Config("fit.min_window must be at least 4".into()));
        }
        let [t1, t2] = self.bisection.tau_pair;
        if !(t1 > 0.0 && t2 > t1) {
            return Err(CliError::Config("bisection.tau_pair must be increasing and positive".into()));
        }
        let [lo, hi] = self.bisection.t_range;
        if !(lo < hi) || !(self.bisection.tol > 0.0) {
            return Err(CliError::Config("bisection.t_range must be increasing and tol positive".into()));
        }
        if !self.verify.taus.is_empty() {
            check_tau_grid(&self.verify.taus).map_err(config_error)?;
        }
        let p = dom.boundary_point(self.poles.p_angle);
        let q = dom.boundary_point(self.poles.q_angle);
        if p.dist(q) < 2.0 * h {
            return Err(CliError::Config("P and Q must be distinct boundary points more than 2·h_target apart".into()));
        }
        let condition = check_geometric_condition(&incl, &dom);
        Ok(Experiment {
            config: self.clone(),
            dom,
            incl,
            condition,
        })
    }
}

/// A validated configuration with its core objects built.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub dom: DomainSpec,
    pub incl: InclusionSet,
    /// `diam D < dist(D, ∂Ω)`; when it fails, estimates carry no guarantee.
    pub condition: GeometricCondition,
}

impl Experiment {
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if !self.incl.is_empty() && !self.condition.holds {
            w.push(format!(
                "WARNING: geometric condition violated (diam D = {:.4} >= dist(D, boundary) = {:.4}); support estimates carry no guarantee",
                self.condition.diam, self.condition.dist
            ));
        }
        w
    }
}
