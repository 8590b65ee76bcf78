use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{FeatureSpec, ValueType};
use crate::instances::ProblemKind;
use crate::render::{Rendering, Representation};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prompt {
    pub text: String,
    pub problem: ProblemKind,
    pub feature: FeatureSpec,
    pub representation: Representation,
}

pub fn build_feature_prompt(
    kind: ProblemKind,
    spec: &FeatureSpec,
    rendering: &Rendering,
) -> Prompt {
    let ty = spec.value_type.prompt_name();
    let instance = rendering.text.trim_end_matches('\n');
    let text = format!(
        "You are given an instance of a combinatorial optimization problem: {problem}.\n\
         \n\
         This is not a coding task. Do not return any code.\n\
         \n\
         Extract the numeric value of the following feature from the instance:\n\
         - Feature name: {name}\n\
         - Feature description: {description}\n\
         - Expected type: {ty}\n\
         \n\
         The instance is provided here: \"\"\"\n\
         {instance}\n\
         \"\"\"\n\
         \n\
         Instructions:\n\
         - Return a JSON object only, with a single field \"value\", i.e., '{{\"value\": ...}}'.\n\
         - The \"value\" field should contain the numeric value of the required feature and should be of the expected type (i.e., {ty}).\n\
         - If the value is unknown/undeterminable, return '{{\"value\": null}}'.\n\
         - No explanations, no extra fields.\n\
         \n\
         Answer:",
        problem = kind.full_name(),
        name = spec.name,
        description = spec.description,
    );
    Prompt {
        text,
        problem: kind,
        feature: *spec,
        representation: rendering.representation,
    }
}

const SCHEMA_TEMPLATE: &str = r#"{
  "type": "object",
  "additionalProperties": false,
  "required": ["value"],
  "properties": {
    "value": { "anyOf": [ { "type": "[feature-type]" }, { "type": "null" } ] }
  }
}"#;

/// The constrained-decoding schema: a single nullable `value` of the feature type.
pub fn build_value_schema(value_type: ValueType) -> String {
    SCHEMA_TEMPLATE.replace("[feature-type]", value_type.schema_name())
}

pub fn value_schema_json(value_type: ValueType) -> serde_json::Value {
    serde_json::from_str(&build_value_schema(value_type)).expect("schema template is valid JSON")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeatureValue {
    Integer(i64),
    Real(f64),
}

impl FeatureValue {
    pub fn as_f64(self) -> f64 {
        match self {
            FeatureValue::Integer(i) => i as f64,
            FeatureValue::Real(x) => x,
        }
    }
}

/// Why a response could not be turned into a value. Kept distinct for
/// failure accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Error, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseError {
    #[error("response is not a JSON object")]
    Malformed,
    #[error("response object must hold exactly the field `value`")]
    Fields,
    #[error("`value` does not match the expected type")]
    TypeMismatch,
}

/// Strictly parses `{"value": ...}`. Integer features accept integral numbers
/// only (`100` or `100.0`), real features accept any finite number, and
/// `null` passes through as `None`.
pub fn parse_feature_response(
    raw: &str,
    spec: &FeatureSpec,
) -> Result<Option<FeatureValue>, ResponseError> {
    let parsed: serde_json::Value =
        serde_json::from_str(raw.trim()).map_err(|_| ResponseError::Malformed)?;
    let obj = parsed.as_object().ok_or(ResponseError::Malformed)?;
    if obj.len() != 1 {
        return Err(ResponseError::Fields);
    }
    let value = obj.get("value").ok_or(ResponseError::Fields)?;
    if value.is_null() {
        return Ok(None);
    }
    let number = value.as_number().ok_or(ResponseError::TypeMismatch)?;
    match spec.value_type {
        ValueType::Integer => {
            if let Some(i) = number.as_i64() {
                return Ok(Some(FeatureValue::Integer(i)));
            }
            match number.as_f64() {
                Some(x) if x.is_finite() && x.fract() == 0.0 && x.abs() < 9.0e15 => {
                    Ok(Some(FeatureValue::Integer(x as i64)))
                }
                _ => Err(ResponseError::TypeMismatch),
            }
        }
        ValueType::Real => match number.as_f64() {
            Some(x) if x.is_finite() => Ok(Some(FeatureValue::Real(x))),
            _ => Err(ResponseError::TypeMismatch),
        },
    }
}
