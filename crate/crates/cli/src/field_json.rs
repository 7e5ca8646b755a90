//! JSON encoding of fields. Numbers use the shortest round-trip form, so a
//! write/read cycle is bit-exact.

use std::sync::Arc;

use anyhow::{bail, Result};
use normsol::{CartesianGrid, Field, Grid, RadialGrid};
use serde::{Deserialize, Serialize};

use crate::SCHEMA_VERSION;

#[derive(Serialize, Deserialize)]
pub struct FieldJson {
    pub schema_version: u32,
    pub kind: String,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    pub shape: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lo: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hi: Vec<f64>,
    pub values: Vec<f64>,
}

impl FieldJson {
    pub fn from_field(u: &Field) -> Self {
        let values = u.values().to_vec();
        match &**u.grid() {
            Grid::Radial(g) => Self {
                schema_version: SCHEMA_VERSION,
                kind: "radial".into(),
                dim: g.dim(),
                r_max: Some(g.r_max()),
                shape: vec![g.len()],
                lo: Vec::new(),
                hi: Vec::new(),
                values,
            },
            Grid::Cartesian(g) => Self {
                schema_version: SCHEMA_VERSION,
                kind: "cartesian".into(),
                dim: g.dim(),
                r_max: None,
                shape: g.shape().to_vec(),
                lo: g.lo().to_vec(),
                hi: g.hi().to_vec(),
                values,
            },
        }
    }

    pub fn into_field(self) -> Result<Field> {
        let grid = match self.kind.as_str() {
            "radial" => {
                let (Some(r), [n]) = (self.r_max, self.shape.as_slice()) else { bail!("radial field needs r_max and one node count") };
                Grid::Radial(RadialGrid::new(self.dim, r, *n)?)
            }
            "cartesian" => {
                if self.shape.len() != self.dim {
                    bail!("shape has {} axes, dim is {}", self.shape.len(), self.dim);
                }
                Grid::Cartesian(CartesianGrid::new(&self.shape, &self.lo, &self.hi)?)
            }
            k => bail!("unknown grid kind {k:?}"),
        };
        Ok(Field::new(Arc::new(grid), self.values)?)
    }
}
