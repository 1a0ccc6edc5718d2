use serde::{Deserialize, Serialize};

use super::extension::ExtensionModel;
use super::spheres::{podles_model, suq2_model, toeplitz_model};
use super::triple::{two_point_triple, TripleModel};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Suq2,
    Podles,
    Circle,
    TwoPoint,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Suq2 => "suq2",
            ModelKind::Podles => "podles",
            ModelKind::Circle => "circle",
            ModelKind::TwoPoint => "two_point",
        }
    }
}

/// Serializable description of a model instance.
///
/// For `circle` the quotient window is `W` and `N` is unused; for the sphere
/// models the quotient window is `N − 1` so that PH_A has `N` basis vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDescriptor {
    pub model: ModelKind,
    pub q: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "W")]
    pub w: usize,
    pub lambda: f64,
    pub degree_cap: usize,
}

impl Default for ModelDescriptor {
    fn default() -> Self {
        ModelDescriptor { model: ModelKind::Podles, q: 0.5, n: 64, w: 64, lambda: 0.5, degree_cap: 3 }
    }
}

/// A constructed model: either an extension or a bare triple.
#[derive(Debug, Clone)]
pub enum BuiltModel {
    Extension(Box<ExtensionModel>),
    Triple(Box<TripleModel>),
}

impl ModelDescriptor {
    pub fn build(&self) -> Result<BuiltModel> {
        Ok(match self.model {
            ModelKind::Suq2 => BuiltModel::Extension(Box::new(suq2_model(self.q, self.n, self.w, self.lambda)?)),
            ModelKind::Podles => BuiltModel::Extension(Box::new(podles_model(self.q, self.n, self.lambda)?)),
            ModelKind::Circle => BuiltModel::Extension(Box::new(toeplitz_model(self.w, self.lambda)?)),
            ModelKind::TwoPoint => BuiltModel::Triple(Box::new(two_point_triple()?)),
        })
    }

    pub fn build_extension(&self) -> Result<ExtensionModel> {
        match self.build()? {
            BuiltModel::Extension(e) => Ok(*e),
            BuiltModel::Triple(_) => {
                Err(crate::error::Error::contract(format!("{} is not an extension model", self.model.as_str())))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_names_are_exact() {
        let d = ModelDescriptor { model: ModelKind::TwoPoint, ..Default::default() };
        let v: serde_json::Value = serde_json::to_value(&d).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(keys, ["N", "W", "degree_cap", "lambda", "model", "q"]);
        assert_eq!(v["model"], "two_point");
    }

    #[test]
    fn round_trip_and_rejects_unknown() {
        let text = r#"{"model":"suq2","q":0.3,"N":8,"W":4,"lambda":0.5,"degree_cap":2}"#;
        let d: ModelDescriptor = serde_json::from_str(text).unwrap();
        assert_eq!(d.model, ModelKind::Suq2);
        assert_eq!(d.n, 8);
        assert!(serde_json::from_str::<ModelDescriptor>(r#"{"model":"torus"}"#).is_err());
        assert!(matches!(d.build().unwrap(), BuiltModel::Extension(_)));
    }
}
