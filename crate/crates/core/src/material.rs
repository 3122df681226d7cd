//! Octave bands and frequency-dependent wall absorption.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NUM_BANDS: usize = 8;

/// Octave band center frequencies in Hz.
pub const BAND_CENTERS: [f64; NUM_BANDS] =
    [62.5, 125.0, 250.0, 500.0, 1000.0, 2000.0, 4000.0, 8000.0];

/// One value per octave band.
pub type Bands = [f64; NUM_BANDS];

/// Lower and upper edge of an octave band, `f_c/√2` and `f_c·√2`.
pub fn band_edges(center_hz: f64) -> (f64, f64) {
    (
        center_hz / std::f64::consts::SQRT_2,
        center_hz * std::f64::consts::SQRT_2,
    )
}

/// A named surface material with one absorption coefficient per octave band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub name: String,
    pub absorption: Bands,
}

impl Material {
    pub fn new(name: impl Into<String>, absorption: Bands) -> Result<Self> {
        let m = Material {
            name: name.into(),
            absorption,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, &a) in self.absorption.iter().enumerate() {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::invalid(format!(
                    "material `{}`: absorption {a} in band {} Hz is outside [0, 1]",
                    self.name, BAND_CENTERS[i]
                )));
            }
        }
        Ok(())
    }

    /// Per-band energy factor `1 - α(f)` applied at each reflection.
    pub fn reflection_factors(&self) -> Bands {
        self.absorption.map(|a| 1.0 - a)
    }

    /// Odeon reference 1.
    pub fn fully_absorbent() -> Self {
        Material {
            name: "absorbent".into(),
            absorption: [1.0; NUM_BANDS],
        }
    }

    /// Odeon reference 2.
    pub fn fully_reflective() -> Self {
        Material {
            name: "reflective".into(),
            absorption: [0.0; NUM_BANDS],
        }
    }

    /// Odeon reference 107.
    pub fn concrete_block_coarse() -> Self {
        Material {
            name: "concrete_block_coarse".into(),
            absorption: [0.36, 0.36, 0.44, 0.31, 0.29, 0.39, 0.25, 0.25],
        }
    }

    /// Odeon reference 3000.
    pub fn hollow_wooden_podium() -> Self {
        Material {
            name: "hollow_wooden_podium".into(),
            absorption: [0.4, 0.4, 0.3, 0.2, 0.17, 0.15, 0.1, 0.1],
        }
    }
}

/// Materials keyed by name, as read from a JSON array of `{name, absorption}`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MaterialTable {
    materials: Vec<Material>,
}

impl MaterialTable {
    pub fn new(materials: Vec<Material>) -> Result<Self> {
        let mut table = MaterialTable::default();
        for m in materials {
            table.insert(m)?;
        }
        Ok(table)
    }

    pub fn insert(&mut self, material: Material) -> Result<()> {
        material.validate()?;
        if self.get(&material.name).is_some() {
            return Err(Error::invalid(format!(
                "duplicate material `{}`",
                material.name
            )));
        }
        self.materials.push(material);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Material> {
        self.materials.iter().find(|m| m.name == name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Material> {
        self.materials.iter()
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let materials: Vec<Material> = serde_json::from_str(s)?;
        MaterialTable::new(materials)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.materials)?)
    }
}
