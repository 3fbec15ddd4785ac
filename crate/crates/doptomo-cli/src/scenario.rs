//! Strict-schema scenario files.
//!
//! A scenario is one JSON document with sections `scene`, `grid`, `nulls`,
//! `blur`, and `output`. Unknown keys anywhere are rejected. Angles in the
//! file are degrees and are converted to radians on load.

use std::path::Path;

use anyhow::{bail, Context};
use serde::Deserialize;

use doptomo::prelude::*;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub scene: SceneSection,
    #[serde(default)]
    pub grid: Option<GridSection>,
    #[serde(default)]
    pub nulls: Option<NullsSection>,
    #[serde(default)]
    pub blur: Option<BlurSection>,
    #[serde(default)]
    pub output: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSection {
    pub carrier_hz: f64,
    pub omega_r_rad_per_s: f64,
    pub standoff_m: f64,
    pub sample_count: usize,
    #[serde(default = "default_revolutions")]
    pub revolutions: u32,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub range_model: RangeModelSection,
    pub scatterers: Vec<ScattererSection>,
}

fn default_revolutions() -> u32 {
    1
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RangeModelSection {
    Exact,
    #[default]
    Approx,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScattererSection {
    pub r0_m: f64,
    pub theta0_deg: f64,
    #[serde(default)]
    pub z0_m: f64,
    pub amplitude_v: f64,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GridSection {
    Cartesian {
        spacing_m: f64,
        half_extent_m: f64,
    },
    Polar {
        radii: usize,
        angles: usize,
        max_radius_m: f64,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NullsSection {
    pub targets: Vec<NullTargetSection>,
    /// When true, all targets are solved as one joint null set; otherwise
    /// each target gets its own independent solve (the default).
    #[serde(default)]
    pub joint: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NullTargetSection {
    pub x_m: f64,
    pub y_m: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlurSection {
    pub kernel: KernelSection,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub ridge: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    pub length: usize,
    pub sigma_samples: f64,
    #[serde(default = "default_gain")]
    pub gain: f64,
}

fn default_gain() -> f64 {
    1.0
}

impl Scenario {
    /// Loads and parses a scenario file; parse errors carry the JSON line
    /// and column.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read scenario file {}", path.display()))?;
        let scenario: Scenario = serde_json::from_str(&text)
            .with_context(|| format!("invalid scenario file {}", path.display()))?;
        Ok(scenario)
    }

    /// Builds the validated scene configuration.
    pub fn scene_config(&self) -> anyhow::Result<SceneConfig> {
        let scatterers = self
            .scene
            .scatterers
            .iter()
            .enumerate()
            .map(|(i, s)| {
                Scatterer::new(s.r0_m, s.theta0_deg.to_radians(), s.z0_m, s.amplitude_v)
                    .with_context(|| format!("scatterer {i}"))
            })
            .collect::<anyhow::Result<Vec<_>>>()?;
        let cfg = SceneConfig::new(
            self.scene.carrier_hz,
            self.scene.omega_r_rad_per_s,
            self.scene.standoff_m,
            scatterers,
            self.scene.sample_count,
        )?
        .with_revolutions(self.scene.revolutions)?;
        if !(self.scene.noise_sigma.is_finite() && self.scene.noise_sigma >= 0.0) {
            bail!(
                "scene.noise_sigma must be >= 0, got {}",
                self.scene.noise_sigma
            );
        }
        Ok(cfg)
    }

    pub fn range_model(&self) -> RangeModel {
        match self.scene.range_model {
            RangeModelSection::Exact => RangeModel::Exact,
            RangeModelSection::Approx => RangeModel::Approx,
        }
    }

    /// The imaging grid: the scenario's, or the scene default (lambda/4
    /// spacing over 1.2x the largest scatterer radius).
    pub fn imaging_grid(&self, cfg: &SceneConfig) -> anyhow::Result<ImagingGrid> {
        match &self.grid {
            Some(GridSection::Cartesian {
                spacing_m,
                half_extent_m,
            }) => Ok(ImagingGrid::Cartesian(CartesianGrid::centered(
                *spacing_m,
                *half_extent_m,
            )?)),
            Some(GridSection::Polar {
                radii,
                angles,
                max_radius_m,
            }) => Ok(ImagingGrid::Polar(PolarGrid::uniform(
                *radii,
                *angles,
                *max_radius_m,
            )?)),
            None => Ok(ImagingGrid::Cartesian(CartesianGrid::default_for_scene(
                cfg,
            )?)),
        }
    }

    /// Cartesian grid for null verification: the scenario's Cartesian grid
    /// when configured, the scene default otherwise.
    pub fn verification_grid(&self, cfg: &SceneConfig) -> anyhow::Result<CartesianGrid> {
        match self.imaging_grid(cfg)? {
            ImagingGrid::Cartesian(g) => Ok(g),
            ImagingGrid::Polar(_) => Ok(CartesianGrid::default_for_scene(cfg)?),
        }
    }

    pub fn null_targets(&self) -> anyhow::Result<Vec<NullTarget>> {
        let section = self
            .nulls
            .as_ref()
            .ok_or_else(|| anyhow::anyhow!("scenario has no `nulls` section"))?;
        section
            .targets
            .iter()
            .enumerate()
            .map(|(i, t)| {
                NullTarget::from_cartesian(t.x_m, t.y_m).with_context(|| format!("null target {i}"))
            })
            .collect()
    }

    pub fn blur_kernel(&self) -> anyhow::Result<BlurKernel> {
        let section = self
            .blur
            .as_ref()
            .ok_or_else(|| anyhow::anyhow!("scenario has no `blur` section"))?;
        Ok(gaussian_kernel(
            section.kernel.length,
            section.kernel.sigma_samples,
            section.kernel.gain,
        )?)
    }
}

/// Either grid kind, as configured.
pub enum ImagingGrid {
    Cartesian(CartesianGrid),
    Polar(PolarGrid),
}
