use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use g2kit::glue_sim::{GlueParams, JoyceConstants};
use serde::Deserialize;

/// Run configuration read from a TOML file. Every section is optional and
/// unknown keys are rejected.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub link: Option<String>,
    pub glue: Option<GlueSection>,
    #[serde(default)]
    pub joyce: JoyceSection,
    #[serde(default)]
    pub rates: RatesSection,
    #[serde(default)]
    pub feasibility: FeasibilitySection,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlueSection {
    pub mu: Option<f64>,
    pub nu: Option<f64>,
    pub nu_prime: Option<f64>,
    pub delta: Option<f64>,
    pub epsilon: Option<f64>,
    pub r_cap: Option<f64>,
    pub gamma: Option<f64>,
    pub kappa: Option<f64>,
}

impl GlueSection {
    pub fn apply(&self, base: GlueParams) -> GlueParams {
        GlueParams {
            mu: self.mu.unwrap_or(base.mu),
            nu: self.nu.unwrap_or(base.nu),
            nu_prime: self.nu_prime.unwrap_or(base.nu_prime),
            delta: self.delta.unwrap_or(base.delta),
            epsilon: self.epsilon.unwrap_or(base.epsilon),
            r_cap: self.r_cap.unwrap_or(base.r_cap),
            gamma: self.gamma.unwrap_or(base.gamma),
            kappa: self.kappa.unwrap_or(base.kappa),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JoyceSection {
    pub mu: Option<f64>,
    pub nu: Option<f64>,
    pub nu_prime: Option<f64>,
    pub delta: Option<f64>,
    pub epsilon: Option<f64>,
    pub r_cap: Option<f64>,
    pub gamma: Option<f64>,
    pub kappa: Option<f64>,
    pub d1: Option<f64>,
    pub d2: Option<f64>,
    pub d3: Option<f64>,
    pub injectivity: Option<[f64; 3]>,
    pub curvature: Option<[f64; 3]>,
}

impl JoyceSection {
    pub fn params(&self) -> GlueSection {
        GlueSection {
            mu: self.mu,
            nu: self.nu,
            nu_prime: self.nu_prime,
            delta: self.delta,
            epsilon: self.epsilon,
            r_cap: self.r_cap,
            gamma: self.gamma,
            kappa: self.kappa,
        }
    }

    pub fn constants(&self) -> JoyceConstants {
        let d = JoyceConstants::default();
        JoyceConstants {
            d1: self.d1.unwrap_or(d.d1),
            d2: self.d2.unwrap_or(d.d2),
            d3: self.d3.unwrap_or(d.d3),
            injectivity: self.injectivity.unwrap_or(d.injectivity),
            curvature: self.curvature.unwrap_or(d.curvature),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ParityArg {
    Even,
    Odd,
}

#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesSection {
    pub parity: Option<ParityArg>,
    pub from: Option<f64>,
    pub to: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeasibilitySection {
    pub mu: Option<f64>,
    pub nu_prime: Option<f64>,
    pub delta: Option<f64>,
    pub rows: Option<usize>,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub pointwise: f64,
    pub type_split: f64,
    pub quadratic_spread: f64,
    pub finite_difference: f64,
    pub nk: f64,
    pub theta: f64,
    pub rate: f64,
    pub identity: f64,
    pub slope: f64,
    pub kappa: f64,
    pub boundary: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            pointwise: 1e-12,
            type_split: 1e-10,
            quadratic_spread: 0.1,
            finite_difference: 1e-8,
            nk: 1e-10,
            theta: 1e-10,
            rate: 1e-9,
            identity: 1e-9,
            slope: 0.05,
            kappa: 1e-6,
            boundary: 1e-9,
        }
    }
}

impl Tolerances {
    fn fields(&self) -> [(&'static str, f64); 11] {
        [
            ("pointwise", self.pointwise),
            ("type_split", self.type_split),
            ("quadratic_spread", self.quadratic_spread),
            ("finite_difference", self.finite_difference),
            ("nk", self.nk),
            ("theta", self.theta),
            ("rate", self.rate),
            ("identity", self.identity),
            ("slope", self.slope),
            ("kappa", self.kappa),
            ("boundary", self.boundary),
        ]
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).context("invalid config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.tolerances.fields() {
            if !(v > 0.0 && v.is_finite()) {
                bail!("tolerance {name} must be positive, got {v}");
            }
        }
        if let (Some(a), Some(b)) = (self.rates.from, self.rates.to) {
            if !(a < b) {
                bail!("rates.from must be below rates.to");
            }
        }
        Ok(())
    }
}
