//! JSON run configuration.
//!
//! ```json
//! {
//!   "params": { "eta_det": 0.7, "dark_count": 8e-8 },
//!   "source": { "intensity_max": 0.0895, "delta_x": 0.1539, "delta_z": 0.1715 },
//!   "sweep":  { "from_db": 0.0, "to_db": 8.0, "step_db": 0.5, "optimize": false },
//!   "mode": "full"
//! }
//! ```
//!
//! Every object and field is optional; omitted values take the defaults in
//! `docs/config.md`. Unknown fields are rejected.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizer::SearchSpace;
use crate::params::{SourceParams, SystemParams, DEFAULT_DECOY_RATIO, DEFAULT_VAC_RATIO};
use crate::states::MatrixMode;

/// Source geometry as written in a config file. Boundaries and `vt` may be
/// omitted and then follow `intensity_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceSpec {
    pub intensity_max: f64,
    pub i_vac: Option<f64>,
    pub i_d: Option<f64>,
    pub delta_x: f64,
    pub delta_z: f64,
    pub vt_product: Option<f64>,
}

impl Default for SourceSpec {
    fn default() -> Self {
        SourceSpec {
            intensity_max: 0.0895,
            i_vac: None,
            i_d: None,
            delta_x: 0.0490 * PI,
            delta_z: 0.0546 * PI,
            vt_product: None,
        }
    }
}

impl SourceSpec {
    pub fn resolve(&self) -> SourceParams {
        let i = self.intensity_max;
        SourceParams {
            intensity_max: i,
            i_vac: self.i_vac.unwrap_or(DEFAULT_VAC_RATIO * i),
            i_d: self.i_d.unwrap_or(DEFAULT_DECOY_RATIO * i),
            delta_x: self.delta_x,
            delta_z: self.delta_z,
            vt_product: self.vt_product.unwrap_or(0.5 * i),
        }
    }

    /// Overrides the point parameters. Explicit boundaries and `vt` keep
    /// their ratio to the intensity.
    pub fn with_point(
        &self,
        intensity: Option<f64>,
        delta_x: Option<f64>,
        delta_z: Option<f64>,
    ) -> SourceSpec {
        let mut out = *self;
        if let Some(new) = intensity {
            let scale = new / self.intensity_max;
            out.intensity_max = new;
            out.i_vac = self.i_vac.map(|v| v * scale);
            out.i_d = self.i_d.map(|v| v * scale);
            out.vt_product = self.vt_product.map(|v| v * scale);
        }
        out.delta_x = delta_x.unwrap_or(self.delta_x);
        out.delta_z = delta_z.unwrap_or(self.delta_z);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub from_db: f64,
    pub to_db: f64,
    pub step_db: f64,
    pub optimize: bool,
    pub search: SearchSpace,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            from_db: 0.0,
            to_db: 8.0,
            step_db: 0.5,
            optimize: false,
            search: SearchSpace::default(),
        }
    }
}

impl SweepSpec {
    /// Attenuation points, inclusive of `to_db` up to round-off.
    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.step_db > 0.0) || !(self.from_db < self.to_db) || self.from_db < 0.0 {
            return Err(Error::invalid(
                "sweep needs 0 <= from_db < to_db and step_db > 0",
            ));
        }
        let n = ((self.to_db - self.from_db) / self.step_db + 1e-9).floor() as usize;
        Ok((0..=n)
            .map(|k| self.from_db + k as f64 * self.step_db)
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub params: SystemParams,
    pub source: SourceSpec,
    pub sweep: SweepSpec,
    pub mode: MatrixMode,
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.source.resolve().validate()?;
        self.sweep.search.validate()?;
        Ok(())
    }

    /// Parses and validates a JSON document.
    pub fn from_json(text: &str) -> Result<Config> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Config = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::Config {
                field: if path == "." { "<root>".into() } else { path },
                message: e.into_inner().to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config is always serialisable")
    }
}

/// Reads, parses and validates a config file.
pub fn load_config(path: &Path) -> Result<Config> {
    Config::from_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_defaults() {
        let c = Config::from_json("{}").unwrap();
        assert_eq!(c, Config::default());
        assert_eq!(c.params.eta_det, 0.7);
    }

    #[test]
    fn table_values_accepted() {
        let c = Config::from_json(r#"{"params": {"eta_det": 0.7, "dark_count": 8e-8}}"#).unwrap();
        assert_eq!(c.params.dark_count, 8e-8);
    }

    #[test]
    fn zero_delta_rejected() {
        let err = Config::from_json(r#"{"source": {"delta_x": 0.0}}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("delta_x must be positive"), "{err}");
    }

    #[test]
    fn unknown_field_is_named() {
        let err = Config::from_json(r#"{"params": {"eta_dett": 0.7}}"#).unwrap_err();
        match err {
            Error::Config { field, message } => {
                assert_eq!(field, "params.eta_dett");
                assert!(message.contains("unknown field"));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn mistyped_field_is_named() {
        let err = Config::from_json(r#"{"sweep": {"step_db": "half"}}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("sweep.step_db"), "{err}");
    }

    #[test]
    fn vt_defaults_to_half_intensity() {
        let c = Config::from_json(r#"{"source": {"intensity_max": 0.2}}"#).unwrap();
        let explicit = SourceSpec {
            vt_product: Some(0.1),
            ..c.source
        };
        assert_eq!(c.source.resolve(), explicit.resolve());
    }

    #[test]
    fn intensity_override_rescales_boundaries() {
        let spec = SourceSpec {
            i_vac: Some(0.004),
            i_d: Some(0.01),
            intensity_max: 0.1,
            ..Default::default()
        };
        let s = spec.with_point(Some(0.05), None, None).resolve();
        assert!((s.i_vac - 0.002).abs() < 1e-15 && (s.i_d - 0.005).abs() < 1e-15);
        assert!((s.vt_product - 0.025).abs() < 1e-15);
    }

    #[test]
    fn sweep_points() {
        let s = SweepSpec {
            from_db: 0.0,
            to_db: 8.0,
            step_db: 0.5,
            ..Default::default()
        };
        assert_eq!(s.points().unwrap().len(), 17);
        assert!(SweepSpec {
            step_db: 0.0,
            ..s.clone()
        }
        .points()
        .is_err());
        assert!(SweepSpec { to_db: 0.0, ..s }.points().is_err());
    }
}
