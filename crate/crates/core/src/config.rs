//! JSON run configuration shared by the command-line subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{OracleConfig, StencilOrder};
use crate::canal::{CanalSurface, RadiusFunction, RadiusSpec};
use crate::curves::{arclength_reparam, make_curve, read_samples_csv_path, Curve, CurveKind, CurveSpec};
use crate::error::{Error, Result};
use crate::geom::Vec4;
use crate::meshio::GridSpec;
use crate::ptframe::{propagate_over_domain, seed_frame, FramedCurve};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub curve: CurveConfig,
    pub radius: RadiusSpec,
    pub frame: FrameConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub oracle: Option<OracleSettings>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurveSource {
    TorusCurve { a: f64, b: f64, c: f64, d: f64 },
    Line { origin: Vec4, direction: Vec4 },
    /// Inline points or a `u,x1,x2,x3,x4` CSV file (relative to the config).
    Sampled {
        #[serde(default)]
        points: Option<Vec<(f64, Vec4)>>,
        #[serde(default)]
        csv: Option<PathBuf>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveConfig {
    #[serde(flatten)]
    pub source: CurveSource,
    /// Required except for sampled curves, which default to their sample
    /// range.
    #[serde(default)]
    pub domain: Option<[f64; 2]>,
    /// Resample by arclength with this many intervals before framing.
    #[serde(default)]
    pub reparam: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameConfig {
    pub u0: f64,
    pub h: f64,
    /// Rotation of the seed's `(M2, M3)` pair, in degrees.
    #[serde(default)]
    pub seed_rotation_deg: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nu: usize,
    pub nv: usize,
    /// Defaults to the framed range.
    #[serde(default)]
    pub u_range: Option<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSettings {
    pub h: f64,
    #[serde(default = "default_order")]
    pub order: u8,
}

fn default_order() -> u8 {
    2
}

impl OracleSettings {
    pub fn to_config(&self) -> Result<OracleConfig> {
        let order = match self.order {
            2 => StencilOrder::Two,
            4 => StencilOrder::Four,
            o => return Err(Error::InvalidInput(format!("oracle order must be 2 or 4, got {o}"))),
        };
        OracleConfig::uniform(self.h, order)
    }
}

/// Everything a subcommand needs, built from a [`RunConfig`].
#[derive(Clone, Debug)]
pub struct Prepared {
    pub curve: Curve,
    pub surface: CanalSurface,
    pub grid: GridSpec,
    pub oracle: OracleConfig,
}

impl Prepared {
    pub fn framed(&self) -> &FramedCurve {
        &self.surface.spine
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("config: {e}")))
    }

    /// Reads a config file; relative CSV paths are resolved against its
    /// directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::from_json(&fs::read_to_string(path)?)?;
        if let CurveSource::Sampled { csv: Some(p), .. } = &mut cfg.curve.source {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn build_curve(&self) -> Result<Curve> {
        let c = &self.curve;
        let need_domain = || c.domain.ok_or_else(|| Error::InvalidInput("curve.domain is required".into()));
        let spec = match &c.source {
            CurveSource::TorusCurve { a, b, c: cc, d } => CurveSpec::torus(*a, *b, *cc, *d, need_domain()?),
            CurveSource::Line { origin, direction } => CurveSpec::line(*origin, *direction, need_domain()?),
            CurveSource::Sampled { points, csv } => {
                let pts = match (points, csv) {
                    (Some(p), None) => p.clone(),
                    (None, Some(path)) => read_samples_csv_path(path)?,
                    _ => {
                        return Err(Error::InvalidInput(
                            "sampled curve needs exactly one of `points` and `csv`".into(),
                        ))
                    }
                };
                let mut spec = CurveSpec::sampled(pts);
                if let Some(d) = c.domain {
                    spec.domain = d;
                }
                spec
            }
        };
        match c.reparam {
            Some(n) => arclength_reparam(&Curve::from_spec_unnormalized(&spec)?, n),
            None if matches!(spec.kind, CurveKind::Sampled { .. }) => Curve::from_spec_unnormalized(&spec),
            None => make_curve(&spec),
        }
    }

    pub fn radius(&self) -> Result<RadiusFunction> {
        RadiusFunction::new(self.radius.clone())
    }

    pub fn prepare(&self) -> Result<Prepared> {
        let curve = self.build_curve()?;
        let mut seed = seed_frame(&curve, self.frame.u0)?;
        if let Some(deg) = self.frame.seed_rotation_deg {
            seed = seed.rotate_m2_m3(deg.to_radians());
        }
        let framed = propagate_over_domain(&curve, self.frame.u0, self.frame.h, &seed)?;
        let (a, b) = framed.range();
        let grid = GridSpec::new(self.grid.nu, self.grid.nv, self.grid.u_range.unwrap_or([a, b]))?;
        if grid.u_range[0] < a || grid.u_range[1] > b {
            return Err(Error::InvalidInput(format!(
                "grid u range {:?} leaves the framed range [{a}, {b}]",
                grid.u_range
            )));
        }
        let oracle = match &self.oracle {
            Some(o) => o.to_config()?,
            None => OracleConfig::default(),
        };
        Ok(Prepared { curve, surface: CanalSurface::new(framed, self.radius()?), grid, oracle })
    }
}
