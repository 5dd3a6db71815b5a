//! Serde helpers for extended reals.
//!
//! JSON has no representation for infinities, so optional extended-real fields
//! (primal/dual bounds) are serialized as a number, the strings `"inf"` /
//! `"-inf"`, or `null`.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serializer};

pub mod opt_extreal {
    use super::*;

    pub fn serialize<S: Serializer>(value: &Option<f64>, ser: S) -> Result<S::Ok, S::Error> {
        match value {
            None => ser.serialize_none(),
            Some(v) if v.is_nan() => ser.serialize_str("nan"),
            Some(v) if *v == f64::INFINITY => ser.serialize_str("inf"),
            Some(v) if *v == f64::NEG_INFINITY => ser.serialize_str("-inf"),
            Some(v) => ser.serialize_f64(*v),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Option<f64>, D::Error> {
        let raw = Option::<serde_json::Value>::deserialize(de)?;
        match raw {
            None | Some(serde_json::Value::Null) => Ok(None),
            Some(serde_json::Value::Number(n)) => n
                .as_f64()
                .map(Some)
                .ok_or_else(|| D::Error::custom("number out of f64 range")),
            Some(serde_json::Value::String(s)) => match s.as_str() {
                "inf" => Ok(Some(f64::INFINITY)),
                "-inf" => Ok(Some(f64::NEG_INFINITY)),
                "nan" => Ok(Some(f64::NAN)),
                other => Err(D::Error::custom(format!(
                    "expected \"inf\", \"-inf\" or \"nan\", got {other:?}"
                ))),
            },
            Some(other) => Err(D::Error::custom(format!(
                "expected number, string or null, got {other}"
            ))),
        }
    }
}
