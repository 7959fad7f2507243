//! Session configuration and its validation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::ModelKind;

/// Above this item count the GP member is switched off.
pub const GP_MAX_ITEMS: usize = 300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{field}: must be non-negative, got {value}")]
    Negative { field: &'static str, value: f64 },
    #[error("{field}: must be finite")]
    NonFinite { field: &'static str },
    #[error("bins: need at least 2, got {0}")]
    TooFewBins(usize),
    #[error("temperature: must be positive, got {0}")]
    NonPositiveTemperature(f64),
    #[error("ensemble_weights: all active weights are zero")]
    ZeroWeights,
    #[error("{field}: {reason}")]
    Invalid { field: &'static str, reason: String },
}

/// Per-model ensemble weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelWeights {
    pub text: f64,
    pub elo: f64,
    pub btl: f64,
    #[serde(default)]
    pub gp: f64,
}

impl ModelWeights {
    pub const WITH_GP: ModelWeights = ModelWeights {
        text: 0.3,
        elo: 0.25,
        btl: 0.25,
        gp: 0.2,
    };
    pub const WITHOUT_GP: ModelWeights = ModelWeights {
        text: 0.4,
        elo: 0.3,
        btl: 0.3,
        gp: 0.0,
    };

    pub fn get(&self, model: ModelKind) -> f64 {
        match model {
            ModelKind::Text => self.text,
            ModelKind::Elo => self.elo,
            ModelKind::Btl => self.btl,
            ModelKind::Gp => self.gp,
        }
    }

    pub fn sum(&self) -> f64 {
        self.text + self.elo + self.btl + self.gp
    }

    fn scaled(&self, by: f64) -> Self {
        Self {
            text: self.text * by,
            elo: self.elo * by,
            btl: self.btl * by,
            gp: self.gp * by,
        }
    }
}

/// Coefficients of the composite query utility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UtilityWeights {
    pub epistemic: f64,
    pub aleatoric: f64,
    pub gain: f64,
    pub disagreement: f64,
    pub novelty: f64,
}

impl Default for UtilityWeights {
    fn default() -> Self {
        Self {
            epistemic: 0.5,
            aleatoric: 0.4,
            gain: 0.3,
            disagreement: 0.15,
            novelty: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AutomationConfig {
    /// Interval half-width multiplier.
    pub gamma: f64,
    pub gp_conf_min: f64,
    pub gp_epi_max: f64,
    pub theta_start: f64,
    pub theta_span: f64,
    pub theta_pivot: f64,
    pub top10_boost: f64,
    pub top5_boost: f64,
    pub min_agreeing: usize,
    /// Resolved comparisons between top-set recomputations.
    pub top_set_refresh: u64,
}

impl Default for AutomationConfig {
    fn default() -> Self {
        Self {
            gamma: 2.0,
            gp_conf_min: 0.75,
            gp_epi_max: 0.25,
            theta_start: 0.65,
            theta_span: 0.10,
            theta_pivot: 200.0,
            top10_boost: 0.05,
            top5_boost: 0.10,
            min_agreeing: 3,
            top_set_refresh: 10,
        }
    }
}

impl AutomationConfig {
    /// `θ_base = 0.65 + 0.10·min(1, n/200)`.
    pub fn theta_base(&self, n: usize) -> f64 {
        self.theta_start + self.theta_span * (n as f64 / self.theta_pivot).min(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeedEdgeConfig {
    pub bin_gap_min: usize,
    pub conf_min: f64,
    pub weight: f64,
    /// Seed edges are capped at `max_per_item · n`.
    pub max_per_item: usize,
}

impl Default for SeedEdgeConfig {
    fn default() -> Self {
        Self {
            bin_gap_min: 2,
            conf_min: 0.65,
            weight: 0.74,
            max_per_item: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadOptimizer {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeadConfig {
    pub hidden: usize,
    pub retrain_period: u64,
    pub loss_reg: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub optimizer: HeadOptimizer,
}

impl Default for HeadConfig {
    fn default() -> Self {
        Self {
            hidden: 64,
            retrain_period: 50,
            loss_reg: 1e-3,
            learning_rate: 1e-3,
            batch_size: 32,
            epochs: 30,
            optimizer: HeadOptimizer::Adam,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GpMode {
    /// ℓ₂-regularized latent scores with a diagonal Laplace posterior.
    Practical,
    /// Exact kernel prior with the full Laplace posterior.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GpConfig {
    pub mode: GpMode,
    pub max_active: usize,
    pub max_pairs: usize,
    pub noise: f64,
    pub signal_variance: f64,
    pub lengthscale: f64,
    /// ℓ₂ strength in practical mode.
    pub l2: f64,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub jitter: f64,
    /// Resolved comparisons between GP refits.
    pub refit_period: u64,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            mode: GpMode::Practical,
            max_active: 300,
            max_pairs: 2000,
            noise: 0.5,
            signal_variance: 1.0,
            lengthscale: 1.0,
            l2: 1.0,
            max_iters: 100,
            grad_tol: 1e-5,
            jitter: 1e-6,
            refit_period: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    pub n: usize,
    pub bins: usize,
    pub feature_dim: usize,
    pub temperature: f64,
    /// Maximum number of human + automatic comparisons; `None` is unlimited.
    pub budget: Option<u64>,
    pub gp_enabled: bool,
    /// `None` selects the default weights for the GP setting.
    pub ensemble_weights: Option<ModelWeights>,
    pub utility_weights: UtilityWeights,
    pub automation: AutomationConfig,
    pub seed_edge: SeedEdgeConfig,
    pub head: HeadConfig,
    pub gp: GpConfig,
    pub rng_seed: u64,
    /// Use the prompt-score pre-order (initial arrangement, bin-seeded Elo, seed edges).
    pub prior_enabled: bool,
    pub automation_enabled: bool,
    /// Choose among frontier pairs by utility; otherwise serve merges in order.
    pub selection_enabled: bool,
    /// Feed automatic outcomes back into the online models.
    pub update_on_auto: bool,
    /// Resolve requested pairs from outcomes already in the log.
    pub resolve_known_outcomes: bool,
    /// Automatic resolutions per `step` call before yielding.
    pub max_auto_per_step: usize,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            n: 0,
            bins: 5,
            feature_dim: 0,
            temperature: 2.0,
            budget: None,
            gp_enabled: true,
            ensemble_weights: None,
            utility_weights: UtilityWeights::default(),
            automation: AutomationConfig::default(),
            seed_edge: SeedEdgeConfig::default(),
            head: HeadConfig::default(),
            gp: GpConfig::default(),
            rng_seed: 0,
            prior_enabled: true,
            automation_enabled: true,
            selection_enabled: true,
            update_on_auto: true,
            resolve_known_outcomes: true,
            max_auto_per_step: usize::MAX,
        }
    }
}

fn check_weight(field: &'static str, value: f64) -> Result<(), ConfigError> {
    if !value.is_finite() {
        return Err(ConfigError::NonFinite { field });
    }
    if value < 0.0 {
        return Err(ConfigError::Negative { field, value });
    }
    Ok(())
}

impl SessionConfig {
    pub fn for_items(n: usize, bins: usize, feature_dim: usize) -> Self {
        Self {
            n,
            bins,
            feature_dim,
            ..Self::default()
        }
    }

    /// Validated ensemble weights. Only meaningful after [`validate_config`].
    pub fn weights(&self) -> ModelWeights {
        self.ensemble_weights.unwrap_or(if self.gp_enabled {
            ModelWeights::WITH_GP
        } else {
            ModelWeights::WITHOUT_GP
        })
    }

    pub fn theta_base(&self) -> f64 {
        self.automation.theta_base(self.n)
    }
}

/// Normalizes a configuration or reports the first offending field.
///
/// The GP member is forced off above [`GP_MAX_ITEMS`] items, and ensemble
/// weights are rescaled to sum to one over the members that remain active.
pub fn validate_config(cfg: &SessionConfig) -> Result<SessionConfig, ConfigError> {
    let mut cfg = cfg.clone();
    if cfg.bins < 2 {
        return Err(ConfigError::TooFewBins(cfg.bins));
    }
    if cfg.max_auto_per_step == 0 {
        return Err(ConfigError::Invalid {
            field: "max_auto_per_step",
            reason: "must be positive".into(),
        });
    }
    if !cfg.temperature.is_finite() {
        return Err(ConfigError::NonFinite {
            field: "temperature",
        });
    }
    if cfg.temperature <= 0.0 {
        return Err(ConfigError::NonPositiveTemperature(cfg.temperature));
    }

    let u = cfg.utility_weights;
    check_weight("utility_weights.epistemic", u.epistemic)?;
    check_weight("utility_weights.aleatoric", u.aleatoric)?;
    check_weight("utility_weights.gain", u.gain)?;
    check_weight("utility_weights.disagreement", u.disagreement)?;
    check_weight("utility_weights.novelty", u.novelty)?;

    let a = cfg.automation;
    check_weight("automation.gamma", a.gamma)?;
    check_weight("automation.gp_conf_min", a.gp_conf_min)?;
    check_weight("automation.gp_epi_max", a.gp_epi_max)?;
    check_weight("automation.theta_start", a.theta_start)?;
    check_weight("automation.theta_span", a.theta_span)?;
    check_weight("automation.top10_boost", a.top10_boost)?;
    check_weight("automation.top5_boost", a.top5_boost)?;
    if !(a.theta_pivot.is_finite() && a.theta_pivot > 0.0) {
        return Err(ConfigError::Invalid {
            field: "automation.theta_pivot",
            reason: "must be positive and finite".into(),
        });
    }

    let s = cfg.seed_edge;
    check_weight("seed_edge.conf_min", s.conf_min)?;
    if !(s.weight > 0.0 && s.weight <= 1.0) {
        return Err(ConfigError::Invalid {
            field: "seed_edge.weight",
            reason: format!("must lie in (0, 1], got {}", s.weight),
        });
    }

    let h = cfg.head;
    check_weight("head.loss_reg", h.loss_reg)?;
    check_weight("head.learning_rate", h.learning_rate)?;
    if h.hidden == 0 || h.batch_size == 0 || h.retrain_period == 0 {
        return Err(ConfigError::Invalid {
            field: "head",
            reason: "hidden, batch_size and retrain_period must be positive".into(),
        });
    }

    let g = cfg.gp;
    for (field, v) in [
        ("gp.noise", g.noise),
        ("gp.signal_variance", g.signal_variance),
        ("gp.lengthscale", g.lengthscale),
    ] {
        if !v.is_finite() {
            return Err(ConfigError::NonFinite { field });
        }
        if v <= 0.0 {
            return Err(ConfigError::Invalid {
                field,
                reason: format!("must be positive, got {v}"),
            });
        }
    }
    check_weight("gp.l2", g.l2)?;
    check_weight("gp.jitter", g.jitter)?;
    check_weight("gp.grad_tol", g.grad_tol)?;
    if g.refit_period == 0 {
        return Err(ConfigError::Invalid {
            field: "gp.refit_period",
            reason: "must be positive".into(),
        });
    }

    if cfg.n > GP_MAX_ITEMS {
        cfg.gp_enabled = false;
    }

    let mut w = cfg.ensemble_weights.unwrap_or(if cfg.gp_enabled {
        ModelWeights::WITH_GP
    } else {
        ModelWeights::WITHOUT_GP
    });
    check_weight("ensemble_weights.text", w.text)?;
    check_weight("ensemble_weights.elo", w.elo)?;
    check_weight("ensemble_weights.btl", w.btl)?;
    check_weight("ensemble_weights.gp", w.gp)?;
    if !cfg.gp_enabled {
        w.gp = 0.0;
    }
    let total = w.sum();
    if total <= 0.0 {
        return Err(ConfigError::ZeroWeights);
    }
    if (total - 1.0).abs() > 1e-12 {
        w = w.scaled(1.0 / total);
    }
    cfg.ensemble_weights = Some(w);
    Ok(cfg)
}
