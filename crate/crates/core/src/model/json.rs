//! Instance JSON dump format.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ClpInstance;
use crate::cones::{ConeBlock, ConeSpec};
use crate::linalg::SparseMatrix;
use crate::Result;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CsrJson {
    pub rowptr: Vec<usize>,
    pub colind: Vec<usize>,
    pub val: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceJson {
    pub name: String,
    pub m: usize,
    pub n: usize,
    #[serde(rename = "A")]
    pub a: CsrJson,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub cone: Vec<ConeBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obj_offset: Option<f64>,
}

impl InstanceJson {
    pub fn from_instance(inst: &ClpInstance) -> Self {
        let a = inst.a();
        Self {
            name: inst.name().to_string(),
            m: inst.m(),
            n: inst.n(),
            a: CsrJson { rowptr: a.rowptr().to_vec(), colind: a.colind().to_vec(), val: a.values().to_vec() },
            b: inst.b().to_vec(),
            c: inst.c().to_vec(),
            cone: inst.cone().blocks().to_vec(),
            obj_offset: (inst.obj_offset() != 0.0).then_some(inst.obj_offset()),
        }
    }

    pub fn into_instance(self) -> Result<ClpInstance> {
        let a = SparseMatrix::new(self.m, self.n, self.a.rowptr, self.a.colind, self.a.val)?;
        let cone = ConeSpec::new(self.cone)?;
        Ok(ClpInstance::new(self.name, a, self.b, self.c, cone)?.with_offset(self.obj_offset.unwrap_or(0.0)))
    }
}

pub fn read_instance_json(path: impl AsRef<Path>) -> Result<ClpInstance> {
    let text = std::fs::read_to_string(path)?;
    let j: InstanceJson = serde_json::from_str(&text)?;
    j.into_instance()
}

pub fn write_instance_json(inst: &ClpInstance, path: impl AsRef<Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(&InstanceJson::from_instance(inst))?;
    std::fs::write(path, text)?;
    Ok(())
}
