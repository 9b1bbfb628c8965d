//! Experiment configuration: one TOML file per experiment.

use std::path::{Path, PathBuf};

use gstlab::envelopes::{EscapeCase, KappaFunction, ProfileFunction};
use gstlab::levy::{DensityProfile, LevyModel};
use gstlab::potentials::Potential;
use gstlab::simulate::SdeOptions;
use gstlab::spectral::{Grid, SolveOptions};
use gstlab::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const DEFAULT_OUTPUT_DIR: &str = "gstlab-out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Not part of the config hash.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub model: ModelSpec,
    pub potential: Potential,
    pub grid: Grid,
    #[serde(default)]
    pub solver: SolveOptions,
    /// Number of eigenvectors stored in the solution artifact; all by default.
    #[serde(default)]
    pub store_modes: Option<usize>,
    #[serde(default)]
    pub sampler: Option<SamplerConfig>,
    #[serde(default)]
    pub envelope: Option<EnvelopeConfig>,
}

/// Lévy model presets; `custom` takes the full model description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Brownian {
        d: usize,
        #[serde(default = "one")]
        sigma2: f64,
    },
    Stable {
        d: usize,
        alpha: f64,
        #[serde(default = "one")]
        weight: f64,
    },
    StablePlusDiffusion {
        d: usize,
        alpha: f64,
        #[serde(default = "one")]
        weight: f64,
        sigma2: f64,
    },
    Relativistic {
        d: usize,
        alpha: f64,
        mass: f64,
    },
    /// Lévy density given by the two-regime profile; symbol by quadrature.
    Generic {
        density: DensityProfile,
        #[serde(default)]
        sigma2: f64,
    },
    Custom {
        model: LevyModel,
    },
}

fn one() -> f64 {
    1.0
}

impl ModelSpec {
    pub fn build(&self) -> Result<LevyModel> {
        let m = match *self {
            ModelSpec::Brownian { d, sigma2 } => LevyModel::brownian(d, sigma2),
            ModelSpec::Stable { d, alpha, weight } => LevyModel::stable(d, alpha, weight),
            ModelSpec::StablePlusDiffusion {
                d,
                alpha,
                weight,
                sigma2,
            } => LevyModel::stable_plus_diffusion(d, alpha, weight, sigma2),
            ModelSpec::Relativistic { d, alpha, mass } => LevyModel::relativistic(d, alpha, mass),
            ModelSpec::Generic { density, sigma2 } => LevyModel::generic(density, sigma2),
            ModelSpec::Custom { model } => model,
        };
        m.validate()?;
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    /// Independent draws from `φ₀²`.
    Iid,
    /// Grid chain with the intrinsic transition kernel at step `t`.
    Chain,
    /// Jump-diffusion scheme for the transformed process.
    Sde,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StartSpec {
    /// Starts drawn from `φ₀²`.
    Stationary,
    Point { x: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    pub kind: SamplerKind,
    /// Number of paths (or iid draws).
    pub paths: usize,
    /// Chain: number of steps.
    #[serde(default = "default_steps")]
    pub steps: usize,
    /// Chain: time per step.
    #[serde(default = "one")]
    pub t: f64,
    /// Chain: spectral modes in the kernel expansion (`None` uses all).
    #[serde(default)]
    pub kernel_modes: Option<usize>,
    #[serde(default = "default_start")]
    pub start: StartSpec,
    #[serde(default)]
    pub sde: SdeOptions,
}

fn default_steps() -> usize {
    100
}

fn default_start() -> StartSpec {
    StartSpec::Stationary
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegralChoice {
    None,
    /// `I_{φ₀}(c, τ)` from the computed ground state.
    General,
    /// Explicit integrals from the density profile and potential.
    Profile,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaEpsConfig {
    pub theta: f64,
    pub lambda0: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmpiricalSource {
    Iid,
    Chain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmpiricalConfig {
    pub source: EmpiricalSource,
    pub n_max: usize,
    /// Scales for exceedance counts; the escape constant is added when known.
    #[serde(default)]
    pub c_grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeConfig {
    /// Profile `τ`; defaults to the profile of the escape case.
    #[serde(default)]
    pub profile: Option<ProfileFunction>,
    #[serde(default)]
    pub escape: Option<EscapeCase>,
    #[serde(default = "default_integral")]
    pub integral: IntegralChoice,
    /// Scale at which the integrals are classified.
    #[serde(default = "one")]
    pub c: f64,
    /// Defaults to the choice matching the density profile and potential.
    #[serde(default)]
    pub kappa: Option<KappaFunction>,
    #[serde(default)]
    pub lambda_eps: Option<LambdaEpsConfig>,
    #[serde(default)]
    pub empirical: Option<EmpiricalConfig>,
}

fn default_integral() -> IntegralChoice {
    IntegralChoice::Profile
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let value: toml::Value = text.parse::<toml::Table>().map(toml::Value::Table).map_err(|e| Error::Config {
            path: "<toml>".into(),
            reason: e.to_string(),
        })?;
        let cfg: Self = serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            Error::Config {
                path,
                reason: e.into_inner().to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::from_toml_str(&text)
    }

    /// Checks cross-field consistency; errors carry the offending path.
    pub fn validate(&self) -> Result<()> {
        let at = |path: &str, e: Error| Error::Config {
            path: path.into(),
            reason: e.to_string(),
        };
        let model = self.model.build().map_err(|e| at("model", e))?;
        self.grid.validate().map_err(|e| at("grid", e))?;
        if model.dim() != self.grid.d {
            return Err(Error::Config {
                path: "grid.d".into(),
                reason: format!("model dimension {} differs from grid dimension {}", model.dim(), self.grid.d),
            });
        }
        self.potential.validate(self.grid.d).map_err(|e| at("potential", e))?;
        if let Some(s) = &self.sampler {
            if s.paths == 0 {
                return Err(Error::Config {
                    path: "sampler.paths".into(),
                    reason: "must be positive".into(),
                });
            }
            if let StartSpec::Point { x } = &s.start {
                if x.len() != self.grid.d {
                    return Err(Error::Config {
                        path: "sampler.start.x".into(),
                        reason: format!("expected {} coordinates", self.grid.d),
                    });
                }
            }
        }
        if let Some(env) = &self.envelope {
            if let Some(p) = &env.profile {
                p.validate().map_err(|e| at("envelope.profile", e))?;
            }
            if let Some(case) = &env.escape {
                gstlab::envelopes::escape_constant(case).map_err(|e| at("envelope.escape", e))?;
            }
            if env.profile.is_none() && env.escape.is_none() {
                return Err(Error::Config {
                    path: "envelope.profile".into(),
                    reason: "a profile τ or an escape case supplying one is required".into(),
                });
            }
            if let Some(k) = &env.kappa {
                k.validate().map_err(|e| at("envelope.kappa", e))?;
            }
            if !(env.c > 0.0 && env.c.is_finite()) {
                return Err(Error::Config {
                    path: "envelope.c".into(),
                    reason: "must be positive".into(),
                });
            }
        }
        Ok(())
    }

    /// Config as canonical JSON (sorted keys), with every default filled in.
    pub fn resolved_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON without `output_dir`.
    pub fn hash(&self) -> String {
        let mut v = self.resolved_json();
        if let Some(m) = v.as_object_mut() {
            m.remove("output_dir");
        }
        hash_value(&v)
    }

    /// Hash of the inputs that determine the spectral solution.
    pub fn solve_hash(&self) -> String {
        hash_value(&serde_json::json!({
            "model": self.model,
            "potential": self.potential,
            "grid": self.grid,
            "solver": self.solver,
            "store_modes": self.store_modes,
        }))
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
    }
}

fn hash_value(v: &serde_json::Value) -> String {
    let bytes = serde_json::to_vec(v).expect("json serializes");
    hex::encode(Sha256::digest(&bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    const OU: &str = r#"
seed = 7

[model]
family = "brownian"
d = 1

[potential]
family = "polynomial"
coeff = 0.5
n = 1
offset = -0.5

[grid]
d = 1
half_width = 12.0
n = 256
"#;

    #[test]
    fn parses_and_fills_defaults() {
        let cfg = ExperimentConfig::from_toml_str(OU).unwrap();
        assert_eq!(cfg.solver, SolveOptions::default());
        assert_eq!(cfg.store_modes, None);
        let v = cfg.resolved_json();
        assert!(v["solver"]["residual_tol"].is_number());
    }

    #[test]
    fn unknown_family_reports_path() {
        let bad = OU.replace("family = \"polynomial\"", "family = \"quartic\"");
        match ExperimentConfig::from_toml_str(&bad) {
            Err(Error::Config { path, reason }) => {
                assert_eq!(path, "potential.family");
                assert!(reason.contains("quartic"), "{reason}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nested_field_path() {
        let bad = OU.replace("half_width = 12.0", "half_width = \"wide\"");
        match ExperimentConfig::from_toml_str(&bad) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "grid.half_width"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn hash_ignores_output_dir_but_not_seed() {
        let a = ExperimentConfig::from_toml_str(OU).unwrap();
        let mut b = a.clone();
        b.output_dir = Some("elsewhere".into());
        assert_eq!(a.hash(), b.hash());
        b.seed = 8;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.solve_hash(), b.solve_hash());
    }

    #[test]
    fn missing_profile_parameters_are_named() {
        let text = format!(
            "{OU}\n[envelope]\n[envelope.profile]\nfamily = \"iterated_log_power\"\ngamma = 3.0\nd = 1\nthetas = []\ndelta = 1.5\n"
        );
        let err = ExperimentConfig::from_toml_str(&text).unwrap_err().to_string();
        assert!(err.contains("envelope.profile") && err.contains("θ") && err.contains("δ"), "{err}");
        let text = format!(
            "{OU}\n[envelope]\n[envelope.profile]\nfamily = \"iterated_log_power\"\ngamma = 3.0\nd = 1\nthetas = [0.0]\n"
        );
        let err = ExperimentConfig::from_toml_str(&text).unwrap_err().to_string();
        assert!(err.contains("envelope.profile") && err.contains("delta"), "{err}");
    }

    #[test]
    fn dimension_mismatch() {
        let bad = OU.replace("d = 1\nhalf_width", "d = 2\nhalf_width");
        match ExperimentConfig::from_toml_str(&bad) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "grid.d"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
