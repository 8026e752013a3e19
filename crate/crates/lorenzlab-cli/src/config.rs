//! Configuration of the experiment driver: one TOML file with a section per
//! module plus per-suite knobs. Every field has a default, so a partial file
//! (or none at all) works, and unknown keys are rejected everywhere so a
//! typo cannot silently fall back to a default.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use lorenzlab_core::flowint::OdeOptions;
use lorenzlab_core::model3d::{ClassicalParams, LorenzParams};
use lorenzlab_core::skew4d::SkewParams;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    /// Base seed of every deterministic sample stream; `--seed` overrides it.
    pub seed: u64,
    pub model: LorenzParams,
    pub skew: SkewParams,
    pub classical: ClassicalParams,
    pub integrator: IntegratorConfig,
    pub suites: SuitesConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 0,
            model: LorenzParams::default(),
            skew: SkewParams::default(),
            classical: ClassicalParams::default(),
            integrator: IntegratorConfig::default(),
            suites: SuitesConfig::default(),
        }
    }
}

impl Config {
    /// Read a config file, or fall back to the built-in defaults when no
    /// path is given.
    pub fn load(path: Option<&Path>) -> Result<Config> {
        let Some(path) = path else { return Ok(Config::default()) };
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Stepper tolerances, mirrored field for field onto the integrator options.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub h_max: f64,
    pub max_steps: usize,
    pub event_tol: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        let o = OdeOptions::default();
        IntegratorConfig {
            rel_tol: o.rel_tol,
            abs_tol: o.abs_tol,
            h_max: o.h_max,
            max_steps: o.max_steps,
            event_tol: o.event_tol,
        }
    }
}

impl IntegratorConfig {
    pub fn options(&self) -> OdeOptions {
        OdeOptions {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            h_max: self.h_max,
            max_steps: self.max_steps,
            event_tol: self.event_tol,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuitesConfig {
    pub return_map: ReturnMapConfig,
    pub cones: ConesConfig,
    pub curves: CurvesConfig,
    pub exponents: ExponentsConfig,
    pub sectional: SectionalConfig,
    pub surgery: SurgeryConfig,
    pub classical_xcheck: ClassicalXcheckConfig,
}

/// Return-time survey over a cell-centered grid of the section cube, plus a
/// long sampled orbit exported as a state table.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReturnMapConfig {
    pub grid_x1: usize,
    pub grid_x2: usize,
    pub grid_s: usize,
    /// Half-width of the sampled fiber band.
    pub s_band: f64,
    /// Floor every grid return time is checked against.
    pub time_floor: f64,
    pub hist_bins: usize,
    /// Upper edge of the histogram; later times land in the last bin.
    pub hist_max: f64,
    /// Section states written to the orbit table.
    pub export_states: usize,
}

impl Default for ReturnMapConfig {
    fn default() -> Self {
        ReturnMapConfig {
            grid_x1: 200,
            grid_x2: 200,
            grid_s: 5,
            s_band: 0.4,
            time_floor: 2.1,
            hist_bins: 24,
            hist_max: 5.2,
            export_states: 10_000,
        }
    }
}

/// Invariant-cone contraction and expansion survey over random section
/// points, with a dedicated batch hugging the central leaf.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConesConfig {
    pub n_bulk: usize,
    pub n_strip: usize,
    /// Half-width of the cone fed into the return derivative.
    pub cone_width_in: f64,
    /// Half-width the image vectors must land inside.
    pub cone_width_out: f64,
    /// Minimum vector growth demanded over the bulk sample.
    pub growth_floor: f64,
    /// Minimum growth demanded on the near-leaf strip.
    pub strip_growth_floor: f64,
    /// The strip samples `|x2|` between these two magnitudes.
    pub strip_lo: f64,
    pub strip_hi: f64,
    /// Bulk `|x2|` runs from `strip_hi` up to this magnitude.
    pub bulk_hi: f64,
    pub s_band: f64,
}

impl Default for ConesConfig {
    fn default() -> Self {
        ConesConfig {
            n_bulk: 8000,
            n_strip: 2000,
            cone_width_in: 1.0,
            cone_width_out: 0.5,
            growth_floor: 1.02,
            strip_growth_floor: 3.0,
            strip_lo: 1e-5,
            strip_hi: 1e-3,
            bulk_hi: 1.0,
            s_band: 0.4,
        }
    }
}

/// Growth of short cone-tangent curves iterated until they pass the target
/// length with a recorded central-leaf crossing.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CurvesConfig {
    pub n_curves: usize,
    /// Seed curves are vertical segments of twice this half-length.
    pub half_length: f64,
    pub cone_width: f64,
    /// Target length at which a curve counts as grown.
    pub eps0: f64,
    /// Iterate budget per curve.
    pub k_max: usize,
    pub growth_floor: f64,
}

impl Default for CurvesConfig {
    fn default() -> Self {
        CurvesConfig {
            n_curves: 100,
            half_length: 5e-4,
            cone_width: 1.0,
            eps0: 0.2,
            k_max: 200,
            growth_floor: 1.02,
        }
    }
}

/// Finite-time exponent survey in the saddle-node surgery regime. The suite
/// overrides the fiber rate and tube radius from the `[skew]` section and,
/// by default, matches the ear contraction to the block's strong-stable
/// factor so the slow ordering is sharp.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExponentsConfig {
    pub n_orbits: usize,
    pub n_returns: usize,
    /// Returns dropped from the front of every orbit before averaging.
    pub discard: usize,
    pub theta: f64,
    pub tube_radius: f64,
    /// Replace the ear contraction by `exp(lambda_s * tau_e)`.
    pub match_ear_to_transit: bool,
    /// Slack allowed in the weak ordering chain.
    pub weak_tol: f64,
    /// Allowed gap between the QR exponents and the exact bundle rates.
    pub oracle_tol: f64,
}

impl Default for ExponentsConfig {
    fn default() -> Self {
        ExponentsConfig {
            n_orbits: 10,
            n_returns: 1000,
            discard: 100,
            theta: 2.9,
            tube_radius: 0.18,
            match_ear_to_transit: true,
            weak_tol: 1e-3,
            oracle_tol: 1e-9,
        }
    }
}

/// Sectional expansion rates along sampled orbits, checked against the
/// model's target floor and against the closed form on the periodic orbit.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SectionalConfig {
    pub n_orbits: usize,
    pub n_returns: usize,
    /// Minimum total flow time each sampled orbit must span.
    pub min_span: f64,
    /// Relative tolerance of the periodic-orbit closed-form comparison.
    pub closed_form_tol: f64,
}

impl Default for SectionalConfig {
    fn default() -> Self {
        SectionalConfig { n_orbits: 10, n_returns: 48, min_span: 100.0, closed_form_tol: 1e-6 }
    }
}

/// Surgery diagnostics: the saddle-node neutral orbit and the triplet-mode
/// Floquet index structure, including the degenerate `delta = 0` limit.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurgeryConfig {
    pub kappa: f64,
    pub delta: f64,
    /// Relative tolerance on fiber multipliers against their closed forms.
    pub multiplier_tol: f64,
    /// Absolute tolerance on the neutral orbit's per-period exponents.
    pub neutral_tol: f64,
}

impl Default for SurgeryConfig {
    fn default() -> Self {
        SurgeryConfig { kappa: 5.0, delta: 0.1, multiplier_tol: 1e-6, neutral_tol: 1e-6 }
    }
}

/// Classical Lorenz cross-checks: the largest Lyapunov exponent at two
/// tolerance settings and the origin spectrum against an eigensolver.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassicalXcheckConfig {
    pub t_total: f64,
    pub t_transient: f64,
    pub renorm_dt: f64,
    pub lle_target: f64,
    /// The exponent must land within this band of the target.
    pub lle_band: f64,
    /// The two tolerance settings must agree to within this gap.
    pub agree_tol: f64,
    pub eig_tol: f64,
    /// The coarse run uses these tolerances; the fine run uses the
    /// `[integrator]` section.
    pub coarse_rel_tol: f64,
    pub coarse_abs_tol: f64,
}

impl Default for ClassicalXcheckConfig {
    fn default() -> Self {
        ClassicalXcheckConfig {
            t_total: 1e4,
            t_transient: 100.0,
            renorm_dt: 1.0,
            lle_target: 0.906,
            lle_band: 0.05,
            agree_tol: 0.01,
            eig_tol: 1e-9,
            coarse_rel_tol: 1e-8,
            coarse_abs_tol: 1e-10,
        }
    }
}
