//! Named initial data and source terms.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Constant,
    GaussianBump,
    CosineRidge,
    TwoFacetRamp,
}

impl Preset {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "constant" => Ok(Self::Constant),
            "gaussian-bump" => Ok(Self::GaussianBump),
            "cosine-ridge" => Ok(Self::CosineRidge),
            "two-facet-ramp" => Ok(Self::TwoFacetRamp),
            other => Err(Error::InvalidParams(format!(
                "unknown preset {other:?} (expected constant, gaussian-bump, cosine-ridge or two-facet-ramp)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Constant => "constant",
            Self::GaussianBump => "gaussian-bump",
            Self::CosineRidge => "cosine-ridge",
            Self::TwoFacetRamp => "two-facet-ramp",
        }
    }

    /// Parameter names with their defaults. Lengths are fractions of the
    /// domain size.
    pub fn defaults(self) -> &'static [(&'static str, f64)] {
        match self {
            Self::Constant => &[("value", 0.0)],
            Self::GaussianBump => &[
                ("amplitude", 1.0),
                ("width", 0.1),
                ("cx", 0.5),
                ("cy", 0.5),
                ("offset", 0.0),
            ],
            Self::CosineRidge => &[("amplitude", 1.0), ("wavenumber", 1.0), ("offset", 0.0)],
            Self::TwoFacetRamp => &[("low", 0.0), ("high", 1.0), ("x0", 0.35), ("x1", 0.65)],
        }
    }

    /// Samples the preset; `params` overrides defaults and may not contain
    /// unknown names.
    pub fn sample(self, grid: Grid, params: &BTreeMap<String, f64>) -> Result<ScalarField> {
        let defaults = self.defaults();
        let unknown: Vec<_> = params
            .keys()
            .filter(|k| !defaults.iter().any(|(n, _)| n == k))
            .cloned()
            .collect();
        if !unknown.is_empty() {
            return Err(Error::InvalidParams(format!(
                "preset {} has no parameter(s) {}",
                self.name(),
                unknown.join(", ")
            )));
        }
        let get = |name: &str| {
            params.get(name).copied().unwrap_or_else(|| {
                defaults
                    .iter()
                    .find(|(n, _)| *n == name)
                    .map(|&(_, v)| v)
                    .expect("default exists")
            })
        };
        let (lx, ly) = (grid.lx, grid.ly);
        let field = match self {
            Self::Constant => ScalarField::constant(grid, get("value")),
            Self::GaussianBump => {
                let (a, w, off) = (get("amplitude"), get("width"), get("offset"));
                let (cx, cy) = (get("cx") * lx, get("cy") * ly);
                let w = w * lx.min(ly);
                if !(w > 0.0) {
                    return Err(Error::InvalidParams("gaussian-bump width must be > 0".into()));
                }
                ScalarField::from_fn(grid, |x, y| {
                    let r2 = (x - cx).powi(2) + (y - cy).powi(2);
                    off + a * (-r2 / (2.0 * w * w)).exp()
                })
            }
            Self::CosineRidge => {
                let (a, k, off) = (get("amplitude"), get("wavenumber"), get("offset"));
                ScalarField::from_fn(grid, |x, _| {
                    off + a * (std::f64::consts::PI * k * x / lx).cos()
                })
            }
            Self::TwoFacetRamp => {
                let (lo, hi) = (get("low"), get("high"));
                let (x0, x1) = (get("x0") * lx, get("x1") * lx);
                if !(x1 > x0) {
                    return Err(Error::InvalidParams("two-facet-ramp needs x1 > x0".into()));
                }
                ScalarField::from_fn(grid, |x, _| {
                    lo + (hi - lo) * ((x - x0) / (x1 - x0)).clamp(0.0, 1.0)
                })
            }
        };
        if !field.is_finite() {
            return Err(Error::Domain(format!("preset {} produced non-finite values", self.name())));
        }
        Ok(field)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_sample() {
        let grid = Grid::unit(16).unwrap();
        let none = BTreeMap::new();
        let c = Preset::Constant
            .sample(grid, &BTreeMap::from([("value".to_string(), 2.5)]))
            .unwrap();
        assert!(c.values().iter().all(|&v| v == 2.5));
        let bump = Preset::GaussianBump.sample(grid, &none).unwrap();
        let peak = bump.values().iter().cloned().fold(f64::MIN, f64::max);
        assert!(peak > 0.9 && peak <= 1.0);
        let ramp = Preset::TwoFacetRamp.sample(grid, &none).unwrap();
        assert_eq!(ramp.at(0, 3), 0.0);
        assert_eq!(ramp.at(15, 3), 1.0);
        let ridge = Preset::CosineRidge.sample(grid, &none).unwrap();
        assert!((ridge.at(0, 0) + ridge.at(15, 0)).abs() < 1e-12);
    }

    #[test]
    fn unknown_names_are_rejected() {
        assert!(Preset::parse("bump").is_err());
        let bad = BTreeMap::from([("sigma".to_string(), 1.0)]);
        assert!(Preset::GaussianBump.sample(Grid::unit(4).unwrap(), &bad).is_err());
        for p in [Preset::Constant, Preset::GaussianBump, Preset::CosineRidge, Preset::TwoFacetRamp] {
            assert_eq!(Preset::parse(p.name()).unwrap(), p);
        }
    }
}
