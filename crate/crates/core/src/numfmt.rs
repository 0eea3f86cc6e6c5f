//! Float <-> decimal-string codecs for persisted artifacts.
//!
//! Every float in the knowledge base file is stored as a decimal string with
//! 17 significant digits. 17 digits uniquely identify any f64, so a
//! serialize/parse round trip reproduces the exact bit pattern and repeated
//! builds stay byte-identical.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serializer};

/// Render with 17 significant digits (`{:.16e}`).
pub fn to_string(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn parse(s: &str) -> Result<f64, std::num::ParseFloatError> {
    s.parse::<f64>()
}

pub fn serialize<S: Serializer>(x: &f64, ser: S) -> Result<S::Ok, S::Error> {
    ser.serialize_str(&to_string(*x))
}

pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<f64, D::Error> {
    let s = String::deserialize(de)?;
    parse(&s).map_err(|e| D::Error::custom(format!("bad float literal `{s}`: {e}")))
}

/// `Vec<f64>` as a sequence of decimal strings.
pub mod vec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(xs: &[f64], ser: S) -> Result<S::Ok, S::Error> {
        let mut seq = ser.serialize_seq(Some(xs.len()))?;
        for x in xs {
            seq.serialize_element(&super::to_string(*x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<f64>, D::Error> {
        let raw = Vec::<String>::deserialize(de)?;
        raw.iter()
            .map(|s| super::parse(s).map_err(|e| D::Error::custom(format!("bad float `{s}`: {e}"))))
            .collect()
    }
}

/// `Vec<Vec<f64>>` as nested sequences of decimal strings.
pub mod vec2 {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(xs: &[Vec<f64>], ser: S) -> Result<S::Ok, S::Error> {
        let mut seq = ser.serialize_seq(Some(xs.len()))?;
        for row in xs {
            let encoded: Vec<String> = row.iter().map(|x| super::to_string(*x)).collect();
            seq.serialize_element(&encoded)?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<Vec<f64>>, D::Error> {
        let raw = Vec::<Vec<String>>::deserialize(de)?;
        raw.into_iter()
            .map(|row| {
                row.iter()
                    .map(|s| {
                        super::parse(s)
                            .map_err(|e| D::Error::custom(format!("bad float `{s}`: {e}")))
                    })
                    .collect()
            })
            .collect()
    }
}

/// `(f64, f64)` as a two-element sequence of decimal strings.
pub mod pair {
    use super::*;

    pub fn serialize<S: Serializer>(x: &(f64, f64), ser: S) -> Result<S::Ok, S::Error> {
        super::vec::serialize(&[x.0, x.1], ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<(f64, f64), D::Error> {
        let v = super::vec::deserialize(de)?;
        if v.len() != 2 {
            return Err(D::Error::custom(format!("expected 2 floats, got {}", v.len())));
        }
        Ok((v[0], v[1]))
    }
}
